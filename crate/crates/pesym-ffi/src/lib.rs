//! C ABI over the pesym toolkit. All functions are panic-safe, report
//! failures through status codes, and exchange state through plain buffers
//! or opaque handles. The generated header lives at `include/pesym.h`.

use pesym::catalog::verify::{verify_catalog_entry, VerifyOptions};
use pesym::catalog::Catalog;
use pesym::frontfix::{self, FrontFixedState, SolverConfig, SourceSpec};
use pesym::similarity::{
    exact_fields, exact_phi, exact_psi, f_of_phi, g_of_phi, shoot_reduced, ModelParams,
    ShootingGuess,
};
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PesymStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    SolveFailed = 3,
    VerificationFailed = 4,
    Io = 5,
    Panic = 6,
}

/// Model parameters of the tumour-growth problem.
/// n is the radial index (0 planar, 1 cylindrical, 2 spherical); the
/// closed-form solution path requires beta = 1.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PesymModelParams {
    pub m: f64,
    pub alpha_s: f64,
    pub c_inf: f64,
    pub omega0: f64,
    pub q0: f64,
    pub n: i32,
    pub beta: f64,
}

impl PesymModelParams {
    fn to_model(self) -> Result<ModelParams, PesymStatus> {
        if self.n < 0 {
            return Err(PesymStatus::InvalidArgument);
        }
        ModelParams::new(
            self.m,
            self.alpha_s,
            self.c_inf,
            self.omega0,
            self.q0,
            self.n as u32,
            self.beta,
        )
        .map_err(|_| PesymStatus::InvalidArgument)
    }
}

/// Result of a shooting solve.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PesymShootResult {
    pub omega0: f64,
    pub phi0: f64,
    pub psi0: f64,
    pub defect: f64,
    pub iterations: usize,
}

/// Sup-norm errors of a simulation against the closed-form solution.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PesymErrorReport {
    pub n_cells: usize,
    pub t_final: f64,
    pub err_alpha_sup: f64,
    pub err_c_sup: f64,
    pub err_front: f64,
}

/// Opaque front-fixed simulation handle.
pub struct PesymSim {
    params: ModelParams,
    cfg: SolverConfig,
    state: FrontFixedState,
}

fn guard(status: impl FnOnce() -> PesymStatus + std::panic::UnwindSafe) -> PesymStatus {
    catch_unwind(status).unwrap_or(PesymStatus::Panic)
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pesym_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr() as *const c_char
}

/// Human-readable message for a status code (static storage).
#[no_mangle]
pub extern "C" fn pesym_status_message(status: PesymStatus) -> *const c_char {
    let msg: &'static str = match status {
        PesymStatus::Ok => "ok\0",
        PesymStatus::InvalidArgument => "invalid argument\0",
        PesymStatus::NullPointer => "null pointer\0",
        PesymStatus::SolveFailed => "solve failed\0",
        PesymStatus::VerificationFailed => "verification failed\0",
        PesymStatus::Io => "io error\0",
        PesymStatus::Panic => "internal panic\0",
    };
    msg.as_ptr() as *const c_char
}

/// Closed-form solution fields at (t, r): cell concentration alpha,
/// nutrient/drug concentration c, and front radius.
///
/// # Safety
/// `out_alpha`, `out_c` and `out_front` must be valid writable pointers.
#[no_mangle]
pub unsafe extern "C" fn pesym_exact_fields(
    params: PesymModelParams,
    t: f64,
    r: f64,
    out_alpha: *mut f64,
    out_c: *mut f64,
    out_front: *mut f64,
) -> PesymStatus {
    if out_alpha.is_null() || out_c.is_null() || out_front.is_null() {
        return PesymStatus::NullPointer;
    }
    guard(AssertUnwindSafe(|| {
        let p = match params.to_model() {
            Ok(p) => p,
            Err(s) => return s,
        };
        match exact_fields(t, r, &p) {
            Ok((alpha, c, front)) => {
                *out_alpha = alpha;
                *out_c = c;
                *out_front = front;
                PesymStatus::Ok
            }
            Err(_) => PesymStatus::InvalidArgument,
        }
    }))
}

/// Closed-form similarity profiles on a uniform grid of `len` nodes over
/// [0, omega0]: fills omega, phi and psi.
///
/// # Safety
/// The three buffers must hold at least `len` f64 values each.
#[no_mangle]
pub unsafe extern "C" fn pesym_exact_profile(
    params: PesymModelParams,
    len: usize,
    out_omega: *mut f64,
    out_phi: *mut f64,
    out_psi: *mut f64,
) -> PesymStatus {
    if out_omega.is_null() || out_phi.is_null() || out_psi.is_null() {
        return PesymStatus::NullPointer;
    }
    if len < 2 {
        return PesymStatus::InvalidArgument;
    }
    guard(AssertUnwindSafe(|| {
        let p = match params.to_model() {
            Ok(p) => p,
            Err(s) => return s,
        };
        for i in 0..len {
            let w = p.omega0 * i as f64 / (len - 1) as f64;
            let (phi, psi) = match (exact_phi(w, &p), exact_psi(w, &p)) {
                (Ok(a), Ok(b)) => (a, b),
                _ => return PesymStatus::InvalidArgument,
            };
            *out_omega.add(i) = w;
            *out_phi.add(i) = phi;
            *out_psi.add(i) = psi;
        }
        PesymStatus::Ok
    }))
}

/// Solve the reduced free-endpoint problem by shooting, with sources built
/// from the closed-form construction for the given parameters.
///
/// # Safety
/// `out` must be a valid writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pesym_shoot(
    params: PesymModelParams,
    out: *mut PesymShootResult,
) -> PesymStatus {
    if out.is_null() {
        return PesymStatus::NullPointer;
    }
    guard(AssertUnwindSafe(|| {
        let p = match params.to_model() {
            Ok(p) => p,
            Err(s) => return s,
        };
        let f = |phi: f64| f_of_phi(phi.max(0.0), &p).unwrap_or(0.0);
        let g = |phi: f64| g_of_phi(phi.max(0.0), &p);
        let guess = ShootingGuess {
            phi0: 1.2 * p.phi_max(),
            psi0: match exact_psi(0.0, &p) {
                Ok(v) => 1.2 * v,
                Err(_) => return PesymStatus::InvalidArgument,
            },
            omega0: 1.1 * p.omega0,
        };
        match shoot_reduced(&p, &f, &g, guess, 64) {
            Ok(r) => {
                *out = PesymShootResult {
                    omega0: r.omega0,
                    phi0: r.phi0,
                    psi0: r.psi0,
                    defect: r.defect,
                    iterations: r.iterations,
                };
                PesymStatus::Ok
            }
            Err(_) => PesymStatus::SolveFailed,
        }
    }))
}

/// Create a front-fixed simulation initialised from the closed-form
/// solution at t0 with the exact-compatible sources. Returns null on
/// invalid arguments; free with `pesym_sim_free`.
#[no_mangle]
pub extern "C" fn pesym_sim_new(
    params: PesymModelParams,
    n_cells: usize,
    cfl: f64,
    t0: f64,
) -> *mut PesymSim {
    let built = catch_unwind(|| {
        let p = params.to_model().ok()?;
        let cfg = SolverConfig::new(n_cells, cfl, SourceSpec::ExactCompatible).ok()?;
        let state = frontfix::init_from_exact(t0, &p, &cfg).ok()?;
        Some(Box::new(PesymSim {
            params: p,
            cfg,
            state,
        }))
    });
    match built {
        Ok(Some(sim)) => Box::into_raw(sim),
        _ => std::ptr::null_mut(),
    }
}

/// Release a simulation handle.
///
/// # Safety
/// `sim` must come from `pesym_sim_new` and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_free(sim: *mut PesymSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance a simulation to `t_target`.
///
/// # Safety
/// `sim` must be a live handle from `pesym_sim_new`.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_advance(sim: *mut PesymSim, t_target: f64) -> PesymStatus {
    if sim.is_null() {
        return PesymStatus::NullPointer;
    }
    let sim = &mut *sim;
    guard(AssertUnwindSafe(move || {
        if t_target <= sim.state.t {
            return PesymStatus::InvalidArgument;
        }
        while sim.state.t < t_target - 1e-13 {
            match frontfix::step(&sim.state, &sim.params, &sim.cfg, t_target - sim.state.t) {
                Ok((next, _)) => sim.state = next,
                Err(_) => return PesymStatus::SolveFailed,
            }
        }
        PesymStatus::Ok
    }))
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_time(sim: *const PesymSim) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    (*sim).state.t
}

/// Current front radius R(t).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_front(sim: *const PesymSim) -> f64 {
    if sim.is_null() {
        return f64::NAN;
    }
    (*sim).state.s
}

/// Number of grid nodes (cells + 1).
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_nodes(sim: *const PesymSim) -> usize {
    if sim.is_null() {
        return 0;
    }
    (*sim).state.u.len()
}

/// Copy the current shifted fields U = alpha - alpha_s and V = c_inf - c
/// into caller buffers of at least `len` values (len must equal the node
/// count).
///
/// # Safety
/// `sim` must be a live handle and the buffers writable for `len` values.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_values(
    sim: *const PesymSim,
    out_u: *mut f64,
    out_v: *mut f64,
    len: usize,
) -> PesymStatus {
    if sim.is_null() || out_u.is_null() || out_v.is_null() {
        return PesymStatus::NullPointer;
    }
    let sim = &*sim;
    if len != sim.state.u.len() {
        return PesymStatus::InvalidArgument;
    }
    std::ptr::copy_nonoverlapping(sim.state.u.as_ptr(), out_u, len);
    std::ptr::copy_nonoverlapping(sim.state.v.as_ptr(), out_v, len);
    PesymStatus::Ok
}

/// Sup-norm errors of the current state against the closed-form solution.
///
/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pesym_sim_error_report(
    sim: *const PesymSim,
    out: *mut PesymErrorReport,
) -> PesymStatus {
    if sim.is_null() || out.is_null() {
        return PesymStatus::NullPointer;
    }
    let sim = &*sim;
    guard(AssertUnwindSafe(|| {
        match frontfix::error_against_exact(&sim.state, &sim.params) {
            Ok(r) => {
                *out = PesymErrorReport {
                    n_cells: r.n_cells,
                    t_final: r.t_final,
                    err_alpha_sup: r.err_alpha_sup,
                    err_c_sup: r.err_c_sup,
                    err_front: r.err_front,
                };
                PesymStatus::Ok
            }
            Err(_) => PesymStatus::SolveFailed,
        }
    }))
}

/// Run the full classification-catalog verification below `catalog_dir`
/// (a NUL-terminated path). Writes the number of passed and failed entries;
/// returns Ok only when every entry passes.
///
/// # Safety
/// `catalog_dir` must be a valid NUL-terminated string; the out pointers
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn pesym_verify_symmetries(
    catalog_dir: *const c_char,
    seed: u64,
    out_passed: *mut u32,
    out_failed: *mut u32,
) -> PesymStatus {
    if catalog_dir.is_null() || out_passed.is_null() || out_failed.is_null() {
        return PesymStatus::NullPointer;
    }
    let path = match CStr::from_ptr(catalog_dir).to_str() {
        Ok(s) => s.to_string(),
        Err(_) => return PesymStatus::InvalidArgument,
    };
    guard(AssertUnwindSafe(|| {
        let catalog = match Catalog::load(Path::new(&path)) {
            Ok(c) => c,
            Err(_) => return PesymStatus::Io,
        };
        let opts = VerifyOptions {
            seed,
            ..VerifyOptions::default()
        };
        let mut passed = 0u32;
        let mut failed = 0u32;
        for entry in &catalog.classification {
            match verify_catalog_entry(entry, &opts) {
                Ok(report) if report.passed => passed += 1,
                Ok(_) => failed += 1,
                Err(_) => failed += 1,
            }
        }
        *out_passed = passed;
        *out_failed = failed;
        if failed == 0 {
            PesymStatus::Ok
        } else {
            PesymStatus::VerificationFailed
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> PesymModelParams {
        PesymModelParams {
            m: 1.0,
            alpha_s: 0.5,
            c_inf: 2.0,
            omega0: 1.0,
            q0: 0.5,
            n: 0,
            beta: 1.0,
        }
    }

    #[test]
    fn version_is_nul_terminated() {
        let v = pesym_version();
        let s = unsafe { CStr::from_ptr(v) }.to_str().unwrap();
        assert!(!s.is_empty());
    }

    #[test]
    fn exact_fields_roundtrip() {
        let mut alpha = 0.0;
        let mut c = 0.0;
        let mut front = 0.0;
        let status =
            unsafe { pesym_exact_fields(reference(), 4.0, 0.0, &mut alpha, &mut c, &mut front) };
        assert_eq!(status, PesymStatus::Ok);
        assert!((front - 2.0).abs() < 1e-14);
        assert!((alpha - 0.75).abs() < 1e-14);
        assert!(c < 2.0);
    }

    #[test]
    fn null_pointers_rejected() {
        let status = unsafe {
            pesym_exact_fields(
                reference(),
                1.0,
                0.0,
                std::ptr::null_mut(),
                std::ptr::null_mut(),
                std::ptr::null_mut(),
            )
        };
        assert_eq!(status, PesymStatus::NullPointer);
        unsafe { pesym_sim_free(std::ptr::null_mut()) };
    }

    #[test]
    fn invalid_params_rejected() {
        let mut bad = reference();
        bad.alpha_s = 2.0;
        let mut x = 0.0;
        let status =
            unsafe { pesym_exact_fields(bad, 1.0, 0.0, &mut x, &mut x.clone(), &mut x.clone()) };
        assert_eq!(status, PesymStatus::InvalidArgument);
        assert!(pesym_sim_new(bad, 64, 0.4, 1.0).is_null());
    }

    #[test]
    fn profile_buffers_filled() {
        let len = 33;
        let mut omega = vec![0.0; len];
        let mut phi = vec![0.0; len];
        let mut psi = vec![0.0; len];
        let status = unsafe {
            pesym_exact_profile(
                reference(),
                len,
                omega.as_mut_ptr(),
                phi.as_mut_ptr(),
                psi.as_mut_ptr(),
            )
        };
        assert_eq!(status, PesymStatus::Ok);
        assert!((phi[0] - 0.25).abs() < 1e-14);
        assert_eq!(phi[len - 1], 0.0);
        assert!((omega[len - 1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn simulation_lifecycle() {
        let sim = pesym_sim_new(reference(), 64, 0.4, 1.0);
        assert!(!sim.is_null());
        unsafe {
            assert!((pesym_sim_time(sim) - 1.0).abs() < 1e-14);
            assert!((pesym_sim_front(sim) - 1.0).abs() < 1e-14);
            let status = pesym_sim_advance(sim, 1.1);
            assert_eq!(status, PesymStatus::Ok);
            assert!((pesym_sim_time(sim) - 1.1).abs() < 1e-12);
            assert!(pesym_sim_front(sim) > 1.0);
            let nodes = pesym_sim_nodes(sim);
            assert_eq!(nodes, 65);
            let mut u = vec![0.0; nodes];
            let mut v = vec![0.0; nodes];
            assert_eq!(
                pesym_sim_values(sim, u.as_mut_ptr(), v.as_mut_ptr(), nodes),
                PesymStatus::Ok
            );
            assert_eq!(u[nodes - 1], 0.0);
            let mut report = PesymErrorReport {
                n_cells: 0,
                t_final: 0.0,
                err_alpha_sup: 0.0,
                err_c_sup: 0.0,
                err_front: 0.0,
            };
            assert_eq!(pesym_sim_error_report(sim, &mut report), PesymStatus::Ok);
            assert!(report.err_front < 1e-2);
            pesym_sim_free(sim);
        }
    }

    #[test]
    fn shoot_recovers_front_constant() {
        let mut out = PesymShootResult {
            omega0: 0.0,
            phi0: 0.0,
            psi0: 0.0,
            defect: 0.0,
            iterations: 0,
        };
        let status = unsafe { pesym_shoot(reference(), &mut out) };
        assert_eq!(status, PesymStatus::Ok);
        assert!((out.omega0 - 1.0).abs() < 1e-6);
        assert!((out.phi0 - 0.25).abs() < 1e-6);
    }
}
