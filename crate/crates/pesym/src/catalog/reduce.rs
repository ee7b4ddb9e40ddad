//! Verification of reduction entries: each branch's printed change of
//! variables must carry the source system onto its declared canonical case,
//! checked through two independent routes (direct push-through of the
//! solution surface, and the first-order form-preserving constraints).

use super::{sample_param_values, BranchSpec, Catalog, CatalogError, ReductionEntrySpec};
use crate::expr::{parse, Expr, FuncBindings, StandIn};
use crate::jet::{is_zero_with, JetContext};
use crate::lie::PESystem;
use crate::transform::{fp_constraint_residuals, push_residuals, SurfaceMap, TransformError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Instantiation(#[from] super::InstantiationError),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Lie(#[from] crate::lie::LieError),
    #[error(transparent)]
    Jet(#[from] crate::jet::JetError),
    #[error("expression error: {0}")]
    Parse(#[from] crate::expr::ParseError),
    #[error(
        "target template for table {table} case {case} still contains free symbols {symbols:?}"
    )]
    UnresolvedTarget {
        table: u32,
        case: u32,
        symbols: Vec<String>,
    },
}

#[derive(Debug, Clone)]
pub struct ReduceOptions {
    pub instantiations: usize,
    pub standins: usize,
    pub trials: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        ReduceOptions {
            instantiations: 2,
            standins: 3,
            trials: 12,
            tol: 1e-9,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchReport {
    pub table: u32,
    pub case: u32,
    pub branch: String,
    pub target_table: u32,
    pub target_case: u32,
    pub push_max_residual: f64,
    pub push_ok: bool,
    pub fp_max_residual: f64,
    pub fp_ok: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

fn mix(seed: u64, table: u32, case: u32, salt: u64) -> u64 {
    let mut z = seed
        ^ (u64::from(table) << 40)
        ^ (u64::from(case) << 20)
        ^ salt.wrapping_mul(0x2545_f491_4f6c_dd1d);
    z = (z ^ (z >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    z ^ (z >> 33)
}

/// Numeric parameter map for one branch: sampled entry parameters with the
/// branch's fixings applied on top.
fn branch_params(
    entry: &ReductionEntrySpec,
    branch: &BranchSpec,
    rng: &mut impl Rng,
) -> Result<BTreeMap<String, f64>, ReduceError> {
    let mut nonzero = entry.nonzero.clone();
    nonzero.extend(branch.nonzero.iter().cloned());
    let mut params = sample_param_values(&entry.params, &nonzero, rng)?;
    for (name, src) in &branch.bind {
        let e = parse(src)?;
        let env = |n: &str| params.get(n).copied();
        let v = crate::expr::eval(&e, &env, &FuncBindings::new())
            .map_err(crate::jet::JetError::EvalBudget)?;
        params.insert(name.clone(), v);
    }
    Ok(params)
}

fn numeric(params: &BTreeMap<String, f64>) -> BTreeMap<String, Expr> {
    params
        .iter()
        .map(|(k, v)| (k.clone(), Expr::num(*v)))
        .collect()
}

/// Target system template with branch bindings and numeric parameters
/// substituted; must come out closed over (U, V).
fn target_system(
    catalog: &Catalog,
    branch: &BranchSpec,
    params: &BTreeMap<String, f64>,
) -> Result<PESystem, ReduceError> {
    let tgt = catalog.class_entry(branch.target_table, branch.target_case)?;
    let rebind: BTreeMap<String, Expr> = branch
        .target_bind
        .iter()
        .map(|(k, v)| Ok((k.clone(), parse(v)?)))
        .collect::<Result<_, crate::expr::ParseError>>()?;
    let nums = numeric(params);
    let mut exprs = Vec::with_capacity(3);
    for src in [&tgt.d, &tgt.f, &tgt.g] {
        let e = parse(src)?.substitute(&rebind).substitute(&nums);
        let leftover: Vec<String> = e
            .free_vars()
            .into_iter()
            .filter(|v| v != "U" && v != "V")
            .collect();
        if !leftover.is_empty() {
            return Err(ReduceError::UnresolvedTarget {
                table: branch.target_table,
                case: branch.target_case,
                symbols: leftover,
            });
        }
        exprs.push(e);
    }
    let g = exprs.pop().unwrap();
    let f = exprs.pop().unwrap();
    let d = exprs.pop().unwrap();
    Ok(PESystem::new(d, f, g)?)
}

fn sampling_ranges(entry: &ReductionEntrySpec, ctx: JetContext) -> JetContext {
    let mut ctx = ctx.range("tau", 0.3, 1.5).range("y", 0.3, 1.5);
    for (var, [lo, hi]) in &entry.domain {
        ctx = ctx.range(var, *lo, *hi);
    }
    ctx
}

/// Verify every branch of a reduction entry. Deterministic for fixed
/// options.
pub fn verify_reduction_entry(
    catalog: &Catalog,
    entry: &ReductionEntrySpec,
    opts: &ReduceOptions,
) -> Result<Vec<BranchReport>, ReduceError> {
    let mut reports = Vec::new();
    for (bidx, branch) in entry.branches.iter().enumerate() {
        let mut push_max = 0.0_f64;
        let mut fp_max = 0.0_f64;
        let mut witness = None;
        for inst in 0..opts.instantiations {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(
                opts.seed,
                entry.table,
                entry.case,
                (bidx * 97 + inst) as u64,
            ));
            let params = branch_params(entry, branch, &mut rng)?;
            let nums = numeric(&params);
            let source = PESystem::new(
                parse(&entry.d)?.substitute(&nums),
                parse(&entry.f)?.substitute(&nums),
                parse(&entry.g)?.substitute(&nums),
            )?;
            let target = target_system(catalog, branch, &params)?;
            let map = SurfaceMap {
                u_coeff: parse(&branch.u_coeff)?.substitute(&nums),
                u_shift: parse(&branch.u_shift)?.substitute(&nums),
                v_coeff: parse(&branch.v_coeff)?.substitute(&nums),
                v_shift: parse(&branch.v_shift)?.substitute(&nums),
                x_of_y: parse(&branch.x_of_y)?.substitute(&nums),
                t_of_tau: parse(&branch.t_of_tau)?.substitute(&nums),
            };

            let (r1, r2) = push_residuals(&map, &source, &target)?;
            let fp = map.to_form_preserving();
            let fp_rs = fp_constraint_residuals(&fp, &source, &target);

            for _ in 0..opts.standins {
                let mut funcs = FuncBindings::new();
                for name in &entry.functions {
                    funcs.insert(name.clone(), StandIn::random(&mut rng));
                }
                let ctx = sampling_ranges(
                    entry,
                    JetContext {
                        funcs: funcs.clone(),
                        ranges: BTreeMap::new(),
                    },
                );
                for r in [&r1, &r2] {
                    let z = is_zero_with(r, &ctx, opts.trials, opts.tol, &mut rng)?;
                    push_max = push_max.max(z.max_ratio);
                    if witness.is_none() {
                        if let Some((p, v)) = z.witness {
                            witness = Some(format!(
                                "push residual {v:.3e} at {}",
                                p.iter()
                                    .map(|(k, val)| format!("{k}={val:.3}"))
                                    .collect::<Vec<_>>()
                                    .join(", ")
                            ));
                        }
                    }
                }
                // The form-preserving constraints live in (t, x): reuse the
                // tau/y windows for them.
                let fp_ctx = {
                    let base = sampling_ranges(
                        entry,
                        JetContext {
                            funcs,
                            ranges: BTreeMap::new(),
                        },
                    );
                    let t_range = base.ranges.get("tau").copied().unwrap();
                    let x_range = base.ranges.get("y").copied().unwrap();
                    base.range("t", t_range.0, t_range.1)
                        .range("x", x_range.0, x_range.1)
                };
                for r in &fp_rs {
                    let z = is_zero_with(r, &fp_ctx, opts.trials, opts.tol, &mut rng)?;
                    fp_max = fp_max.max(z.max_ratio);
                    if witness.is_none() {
                        if let Some((p, v)) = z.witness {
                            witness = Some(format!(
                                "constraint residual {v:.3e} at {}",
                                p.iter()
                                    .map(|(k, val)| format!("{k}={val:.3}"))
                                    .collect::<Vec<_>>()
                                    .join(", ")
                            ));
                        }
                    }
                }
            }
        }
        let push_ok = push_max < opts.tol;
        let fp_ok = fp_max < opts.tol;
        reports.push(BranchReport {
            table: entry.table,
            case: entry.case,
            branch: if branch.name.is_empty() {
                format!("{bidx}")
            } else {
                branch.name.clone()
            },
            target_table: branch.target_table,
            target_case: branch.target_case,
            push_max_residual: push_max,
            push_ok,
            fp_max_residual: fp_max,
            fp_ok,
            passed: push_ok && fp_ok,
            witness,
        });
    }
    Ok(reports)
}
