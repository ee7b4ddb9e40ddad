//! Symmetry transport: pulling the canonical generators of the critical
//! -4/3 case back through the exponential reduction map must give vector
//! fields admitted by the reduction-source system.

use pesym::catalog::Catalog;
use pesym::expr::{parse, StandIn};
use pesym::jet::{is_zero, JetContext};
use pesym::lie::{invariance_residuals, Generator, PESystem};
use pesym::transform::{transport_generator, SurfaceMap};
use std::path::PathBuf;

fn catalog_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../catalog")
}

#[test]
fn canonical_generators_transport_onto_reduction_source() {
    let catalog = Catalog::load(&catalog_root()).unwrap();
    let reduction = catalog.reduction_entry(3, 4).unwrap();
    let branch = &reduction.branches[0];
    assert_eq!((branch.target_table, branch.target_case), (1, 8));
    let target = catalog.class_entry(1, 8).unwrap();

    let source = PESystem::new(
        parse(&reduction.d).unwrap(),
        parse(&reduction.f).unwrap(),
        parse(&reduction.g).unwrap(),
    )
    .unwrap();
    let map = SurfaceMap {
        u_coeff: parse(&branch.u_coeff).unwrap(),
        u_shift: parse(&branch.u_shift).unwrap(),
        v_coeff: parse(&branch.v_coeff).unwrap(),
        v_shift: parse(&branch.v_shift).unwrap(),
        x_of_y: parse(&branch.x_of_y).unwrap(),
        t_of_tau: parse(&branch.t_of_tau).unwrap(),
    };

    // Shared stand-ins for the arbitrary functions on both sides.
    let ctx = JetContext::new()
        .bind("f", StandIn::poly(&[0.6, -0.9, 0.2, 0.15]))
        .bind("g", StandIn::poly(&[0.4, 0.7, -0.25]))
        .range("x", 0.3, 1.4)
        .range("t", 0.3, 1.4);

    let mut transported = 0;
    for spec in &target.generators {
        let g = Generator::new(
            parse(&spec.xi0).unwrap(),
            parse(&spec.xi1).unwrap(),
            parse(&spec.eta1).unwrap(),
            parse(&spec.eta2).unwrap(),
        )
        .unwrap();
        let back = transport_generator(&g, &map).unwrap();
        let (r1, r2) = invariance_residuals(&source, &back).unwrap();
        for (which, r) in [("parabolic", r1), ("elliptic", r2)] {
            let z = is_zero(&r, &ctx, 14, 1e-9, 77).unwrap();
            assert!(
                z.is_zero,
                "transported operator ({}, {}, {}, {}) violates the {which} residual: ratio {:.2e}",
                back.xi0, back.xi1, back.eta1, back.eta2, z.max_ratio
            );
        }
        transported += 1;
    }
    assert_eq!(transported, 4);

    // Sanity for the negative direction: transporting a non-symmetry must
    // not pass.
    let broken = Generator::new(
        parse("0").unwrap(),
        parse("2*x").unwrap(),
        parse("-3.5*U").unwrap(),
        parse("V").unwrap(),
    )
    .unwrap();
    let back = transport_generator(&broken, &map).unwrap();
    let (r1, r2) = invariance_residuals(&source, &back).unwrap();
    let z1 = is_zero(&r1, &ctx, 14, 1e-9, 78).unwrap();
    let z2 = is_zero(&r2, &ctx, 14, 1e-9, 78).unwrap();
    assert!(
        !z1.is_zero || !z2.is_zero,
        "perturbed operator unexpectedly transported onto a symmetry"
    );
}
