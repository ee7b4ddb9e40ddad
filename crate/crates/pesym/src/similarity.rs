//! Similarity reduction of the tumour-growth moving-boundary problem:
//! closed-form profiles on the similarity variable, residuals of the reduced
//! two-point problem, and a shooting solver that recovers the front constant
//! and centre values for general sources.
//!
//! The moving-boundary problem for the shifted concentrations
//! U = alpha - alpha_s, V = c_inf - c,
//!
//! ```text
//!   U_t = r^-n (r^n (U + alpha_s)^m U_r)_r + S,   0 = r^-n (r^n V_r)_r + Q,
//!   U_r = V_r = 0 at r = 0,   U = V = 0 at r = R(t),
//!   R' = -alpha_s^(m-1) U_r at r = R(t),
//! ```
//!
//! with S = f(U) V^-beta and Q = g(U) V^(1-beta) admits the scaling group
//! 2 beta t dt + beta r dr + 2 V dV; the invariant ansatz
//! U = phi(omega), V = t^(1/beta) psi(omega), omega = r/sqrt(t) fixes
//! R(t) = omega0 sqrt(t) and reduces the problem to a free-endpoint ODE
//! system. For beta = 1 and g = q0 phi the profiles are polynomial.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimilarityError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("similarity coordinate {omega} outside [0, {omega0}]")]
    OutOfRange { omega: f64, omega0: f64 },
    #[error("closed-form profiles require beta = 1 (got {0})")]
    BetaNotOne(f64),
    #[error("nutrient profile reached zero in the interior (omega = {0})")]
    InteriorZero(f64),
    #[error("shooting did not converge after {iterations} iterations (defect {defect:.3e})")]
    ShootingDiverged { iterations: usize, defect: f64 },
    #[error("integration step underflow at omega = {0}")]
    StepUnderflow(f64),
}

/// Physical and similarity parameters of the tumour model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Diffusion exponent m >= 0.
    pub m: f64,
    /// Natural cell concentration alpha_* in (0, 1).
    pub alpha_s: f64,
    /// Ambient nutrient/drug level c_inf > 0.
    pub c_inf: f64,
    /// Front similarity constant omega0 > 0.
    pub omega0: f64,
    /// Uptake coefficient q0 > 0.
    pub q0: f64,
    /// Radial index: 0 planar, 1 cylindrical, 2 spherical.
    pub n: u32,
    /// Source exponent; the closed-form path requires beta = 1.
    pub beta: f64,
}

impl ModelParams {
    pub fn new(
        m: f64,
        alpha_s: f64,
        c_inf: f64,
        omega0: f64,
        q0: f64,
        n: u32,
        beta: f64,
    ) -> Result<Self, SimilarityError> {
        if !(m >= 0.0) {
            return Err(SimilarityError::InvalidParams(format!("m = {m} < 0")));
        }
        if !(alpha_s > 0.0 && alpha_s < 1.0) {
            return Err(SimilarityError::InvalidParams(format!(
                "alpha_s = {alpha_s} outside (0, 1)"
            )));
        }
        if !(c_inf > 0.0) {
            return Err(SimilarityError::InvalidParams(format!(
                "c_inf = {c_inf} <= 0"
            )));
        }
        if !(omega0 > 0.0) {
            return Err(SimilarityError::InvalidParams(format!(
                "omega0 = {omega0} <= 0"
            )));
        }
        if !(q0 > 0.0) {
            return Err(SimilarityError::InvalidParams(format!("q0 = {q0} <= 0")));
        }
        if n > 2 {
            return Err(SimilarityError::InvalidParams(format!("n = {n} > 2")));
        }
        Ok(ModelParams {
            m,
            alpha_s,
            c_inf,
            omega0,
            q0,
            n,
            beta,
        })
    }

    /// The reference parameter set used throughout the validation runs:
    /// m = 1, alpha_s = 0.5, c_inf = 2, omega0 = 1, q0 = 0.5, planar.
    pub fn reference() -> Self {
        ModelParams {
            m: 1.0,
            alpha_s: 0.5,
            c_inf: 2.0,
            omega0: 1.0,
            q0: 0.5,
            n: 0,
            beta: 1.0,
        }
    }

    pub fn with_m(mut self, m: f64) -> Self {
        self.m = m;
        self
    }

    pub fn with_n(mut self, n: u32) -> Self {
        self.n = n;
        self
    }

    fn require_beta_one(&self) -> Result<(), SimilarityError> {
        if (self.beta - 1.0).abs() > 1e-12 {
            return Err(SimilarityError::BetaNotOne(self.beta));
        }
        Ok(())
    }

    /// alpha_s^(1-m), the amplitude scale of the cell profile.
    pub fn amp(&self) -> f64 {
        self.alpha_s.powf(1.0 - self.m)
    }

    /// Largest cell-profile value phi(0) = alpha_s^(1-m) omega0^2 / 4.
    pub fn phi_max(&self) -> f64 {
        0.25 * self.amp() * self.omega0 * self.omega0
    }
}

/// Cell concentration profile phi(omega) = alpha_s^(1-m)/4 (omega0^2 - omega^2).
pub fn exact_phi(omega: f64, p: &ModelParams) -> Result<f64, SimilarityError> {
    check_range(omega, p)?;
    Ok(0.25 * p.amp() * (p.omega0 * p.omega0 - omega * omega))
}

/// d phi / d omega of the closed-form profile.
pub fn exact_phi_prime(omega: f64, p: &ModelParams) -> Result<f64, SimilarityError> {
    check_range(omega, p)?;
    Ok(-0.5 * p.amp() * omega)
}

/// Nutrient profile
/// psi(omega) = alpha_s^(1-m) q0 / (16(n+3)) (omega0^2 - omega^2)
///              ((n+5)/(n+1) omega0^2 - omega^2);
/// the planar case n = 0 gives the coefficients 1/48 and 5.
pub fn exact_psi(omega: f64, p: &ModelParams) -> Result<f64, SimilarityError> {
    p.require_beta_one()?;
    check_range(omega, p)?;
    let n = p.n as f64;
    let w0sq = p.omega0 * p.omega0;
    let wsq = omega * omega;
    Ok(p.amp() * p.q0 / (16.0 * (n + 3.0)) * (w0sq - wsq) * ((n + 5.0) / (n + 1.0) * w0sq - wsq))
}

/// d psi / d omega of the closed-form profile.
pub fn exact_psi_prime(omega: f64, p: &ModelParams) -> Result<f64, SimilarityError> {
    p.require_beta_one()?;
    check_range(omega, p)?;
    let n = p.n as f64;
    let c = p.amp() * p.q0 / (16.0 * (n + 3.0));
    let w0sq = p.omega0 * p.omega0;
    let k1 = (n + 5.0) / (n + 1.0);
    // d/dw [(w0^2 - w^2)(k1 w0^2 - w^2)] = -2w (k1 w0^2 - w^2) - 2w (w0^2 - w^2)
    Ok(c * (-2.0 * omega) * ((k1 + 1.0) * w0sq - 2.0 * omega * omega))
}

fn check_range(omega: f64, p: &ModelParams) -> Result<(), SimilarityError> {
    if !(0.0..=p.omega0 * (1.0 + 1e-12)).contains(&omega) {
        return Err(SimilarityError::OutOfRange {
            omega,
            omega0: p.omega0,
        });
    }
    Ok(())
}

/// The uptake function paired with the closed-form profiles: g = q0 phi.
pub fn g_of_phi(phi: f64, p: &ModelParams) -> f64 {
    p.q0 * phi
}

/// The source function f(phi) for which the closed-form profiles solve the
/// reduced problem:
///   f = q0 alpha_s^(m-1)/(n+3) phi (phi + alpha_s^(1-m) omega0^2/(n+1))
///       [ (m + (n+1)/2) alpha_s^(1-m) (phi+alpha_s)^m
///         - m alpha_s^(2-m)/4 (alpha_s^-m omega0^2 + 4)(phi+alpha_s)^(m-1)
///         - phi + alpha_s^(1-m) omega0^2/4 ].
pub fn f_of_phi(phi: f64, p: &ModelParams) -> Result<f64, SimilarityError> {
    p.require_beta_one()?;
    if phi < 0.0 {
        return Err(SimilarityError::InvalidParams(format!("phi = {phi} < 0")));
    }
    let n = p.n as f64;
    let m = p.m;
    let a = p.alpha_s;
    let w0sq = p.omega0 * p.omega0;
    let amp = p.amp();
    let bracket = (m + (n + 1.0) / 2.0) * amp * (phi + a).powf(m)
        - m * a.powf(2.0 - m) / 4.0 * (a.powf(-m) * w0sq + 4.0) * (phi + a).powf(m - 1.0)
        - phi
        + amp * w0sq / 4.0;
    Ok(p.q0 * a.powf(m - 1.0) / (n + 3.0) * phi * (phi + amp * w0sq / (n + 1.0)) * bracket)
}

/// Precomputed coefficients for the closed-form source pair, used by hot
/// solver loops: one power evaluation per call instead of several.
#[derive(Debug, Clone, Copy)]
pub struct ExactSourceCoeffs {
    prefactor: f64,
    shift: f64,
    b_pow: f64,
    b_pow1: f64,
    b_const: f64,
    m: f64,
    alpha_s: f64,
    q0: f64,
}

impl ExactSourceCoeffs {
    pub fn new(p: &ModelParams) -> Self {
        let n = p.n as f64;
        let a = p.alpha_s;
        let amp = p.amp();
        let w0sq = p.omega0 * p.omega0;
        ExactSourceCoeffs {
            prefactor: p.q0 * a.powf(p.m - 1.0) / (n + 3.0),
            shift: amp * w0sq / (n + 1.0),
            b_pow: (p.m + (n + 1.0) / 2.0) * amp,
            b_pow1: p.m * a.powf(2.0 - p.m) / 4.0 * (a.powf(-p.m) * w0sq + 4.0),
            b_const: amp * w0sq / 4.0,
            m: p.m,
            alpha_s: a,
            q0: p.q0,
        }
    }

    #[inline]
    pub fn f(&self, phi: f64) -> f64 {
        let base = phi + self.alpha_s;
        let pm1 = base.powf(self.m - 1.0);
        let pm = pm1 * base;
        self.prefactor
            * phi
            * (phi + self.shift)
            * (self.b_pow * pm - self.b_pow1 * pm1 - phi + self.b_const)
    }

    #[inline]
    pub fn g(&self, phi: f64) -> f64 {
        self.q0 * phi
    }
}

/// Constant-diffusivity source written as the factored cubic
/// f = q0/(3 alpha_s) (alpha - alpha_s)(alpha - alpha_1)(alpha_2 - alpha)
/// with alpha = phi + alpha_s, alpha_1 = alpha_s (1 - omega0^2) and
/// alpha_2 = alpha_s (6 + omega0^2)/4. Identical to `f_of_phi` at m = 0,
/// n = 0; kept as an independent route for cross-checks.
pub fn f_cubic(phi: f64, p: &ModelParams) -> f64 {
    let a = p.alpha_s;
    let alpha = phi + a;
    let alpha1 = a * (1.0 - p.omega0 * p.omega0);
    let alpha2 = a * (6.0 + p.omega0 * p.omega0) / 4.0;
    p.q0 / (3.0 * a) * (alpha - a) * (alpha - alpha1) * (alpha2 - alpha)
}

/// Roots of the cubic source in the cell concentration.
pub fn cubic_roots(p: &ModelParams) -> (f64, f64) {
    let a = p.alpha_s;
    (
        a * (1.0 - p.omega0 * p.omega0),
        a * (6.0 + p.omega0 * p.omega0) / 4.0,
    )
}

/// Original fields at (t, r): cell concentration alpha, nutrient/drug c,
/// and front radius R(t) = omega0 sqrt(t).
pub fn exact_fields(t: f64, r: f64, p: &ModelParams) -> Result<(f64, f64, f64), SimilarityError> {
    p.require_beta_one()?;
    if t <= 0.0 {
        return Err(SimilarityError::InvalidParams(format!("t = {t} <= 0")));
    }
    let front = p.omega0 * t.sqrt();
    let omega = r / t.sqrt();
    let alpha = p.alpha_s + exact_phi(omega, p)?;
    let c = p.c_inf - t * exact_psi(omega, p)?;
    Ok((alpha, c, front))
}

/// One point of a similarity profile with its derivatives.
#[derive(Debug, Clone, Copy)]
pub struct ProfilePoint {
    pub omega: f64,
    pub phi: f64,
    pub phi_p: f64,
    pub phi_pp: f64,
    pub psi: f64,
    pub psi_p: f64,
    pub psi_pp: f64,
}

/// Residuals of the reduced system at one profile point:
///   r1 = (phi+alpha_s)^m phi'' + m (phi+alpha_s)^(m-1) phi'^2
///        + (n/omega)(phi+alpha_s)^m phi' + (omega/2) phi' + f(phi) psi^-beta
///   r2 = psi'' + (n/omega) psi' + g(phi) psi^(1-beta)
/// At omega = 0 the (n/omega)(.)' terms are replaced by n times the second
/// derivative (the symmetry limit).
pub fn reduced_residuals(
    pt: &ProfilePoint,
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64), SimilarityError> {
    let n = p.n as f64;
    if pt.psi <= 0.0 && p.beta != 0.0 {
        return Err(SimilarityError::InteriorZero(pt.omega));
    }
    let dpow = (pt.phi + p.alpha_s).powf(p.m);
    let dpow1 = (pt.phi + p.alpha_s).powf(p.m - 1.0);
    let (curv1, curv2) = if pt.omega == 0.0 {
        (n * dpow * pt.phi_pp, n * pt.psi_pp)
    } else {
        (n / pt.omega * dpow * pt.phi_p, n / pt.omega * pt.psi_p)
    };
    let r1 = dpow * pt.phi_pp
        + p.m * dpow1 * pt.phi_p * pt.phi_p
        + curv1
        + 0.5 * pt.omega * pt.phi_p
        + f(pt.phi) * pt.psi.powf(-p.beta);
    let r2 = pt.psi_pp + curv2 + g(pt.phi) * pt.psi.powf(1.0 - p.beta);
    Ok((r1, r2))
}

/// Closed-form profile point (second derivatives included) for the residual
/// oracle.
pub fn exact_point(omega: f64, p: &ModelParams) -> Result<ProfilePoint, SimilarityError> {
    let n = p.n as f64;
    let c = p.amp() * p.q0 / (16.0 * (n + 3.0));
    let k1 = (n + 5.0) / (n + 1.0);
    let w0sq = p.omega0 * p.omega0;
    Ok(ProfilePoint {
        omega,
        phi: exact_phi(omega, p)?,
        phi_p: exact_phi_prime(omega, p)?,
        phi_pp: -0.5 * p.amp(),
        psi: exact_psi(omega, p)?,
        psi_p: exact_psi_prime(omega, p)?,
        psi_pp: c * (-2.0 * ((k1 + 1.0) * w0sq - 2.0 * omega * omega) + 8.0 * omega * omega),
    })
}

/// Discretised similarity profile on [0, omega0].
#[derive(Debug, Clone)]
pub struct SimilarityProfile {
    pub omega: Vec<f64>,
    pub phi: Vec<f64>,
    pub phi_p: Vec<f64>,
    pub psi: Vec<f64>,
    pub psi_p: Vec<f64>,
    pub omega0: f64,
}

/// Result of a shooting solve.
#[derive(Debug, Clone)]
pub struct ShootingResult {
    pub profile: SimilarityProfile,
    pub omega0: f64,
    pub phi0: f64,
    pub psi0: f64,
    pub defect: f64,
    pub iterations: usize,
}

/// Initial guess for the shooting unknowns (phi(0), psi(0), omega0).
#[derive(Debug, Clone, Copy)]
pub struct ShootingGuess {
    pub phi0: f64,
    pub psi0: f64,
    pub omega0: f64,
}

impl ShootingGuess {
    /// Guess from the closed-form profiles.
    pub fn from_exact(p: &ModelParams) -> Result<Self, SimilarityError> {
        Ok(ShootingGuess {
            phi0: exact_phi(0.0, p)?,
            psi0: exact_psi(0.0, p)?,
            omega0: p.omega0,
        })
    }
}

// Dormand-Prince 5(4) coefficients.
const DP_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// State vector [phi, phi', psi, psi'].
type State = [f64; 4];

fn rhs(
    omega: f64,
    y: &State,
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<State, SimilarityError> {
    let n = p.n as f64;
    let [phi, phi_p, psi, psi_p] = *y;
    if psi <= 0.0 || phi + p.alpha_s <= 0.0 {
        return Err(SimilarityError::InteriorZero(omega));
    }
    let dpow = (phi + p.alpha_s).powf(p.m);
    let dpow1 = (phi + p.alpha_s).powf(p.m - 1.0);
    let phi_pp = -(p.m * dpow1 * phi_p * phi_p
        + n / omega * dpow * phi_p
        + 0.5 * omega * phi_p
        + f(phi) * psi.powf(-p.beta))
        / dpow;
    let psi_pp = -n / omega * psi_p - g(phi) * psi.powf(1.0 - p.beta);
    Ok([phi_p, phi_pp, psi_p, psi_pp])
}

/// Adaptive Dormand-Prince integration from omega_start towards omega_end,
/// recording states at the sorted `record` nodes. Integration stops early
/// when the nutrient component falls through `psi_floor` (the event used by
/// the shooting defect); the reached coordinate is returned with the state.
#[allow(clippy::too_many_arguments)]
fn integrate(
    mut omega: f64,
    mut y: State,
    omega_end: f64,
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    rtol: f64,
    atol: f64,
    psi_floor: f64,
    mut record: Option<(&[f64], &mut Vec<(f64, State)>)>,
) -> Result<(f64, State), SimilarityError> {
    let mut h = (omega_end - omega) / 64.0;
    let mut record_idx = 0usize;
    if let Some((nodes, out)) = record.as_mut() {
        while record_idx < nodes.len() && nodes[record_idx] <= omega + 1e-15 {
            out.push((nodes[record_idx], y));
            record_idx += 1;
        }
    }
    let mut steps = 0usize;
    while omega < omega_end - 1e-14 {
        steps += 1;
        if steps > 100_000 {
            return Err(SimilarityError::StepUnderflow(omega));
        }
        // Land exactly on the next record node or the endpoint.
        let mut target = omega_end;
        if let Some((nodes, _)) = record.as_ref() {
            if record_idx < nodes.len() {
                target = nodes[record_idx].min(omega_end);
            }
        }
        if h > target - omega {
            h = target - omega;
        }
        if h < 1e-14 {
            // Sitting on a node: emit and continue.
            if let Some((nodes, out)) = record.as_mut() {
                if record_idx < nodes.len() && (nodes[record_idx] - omega).abs() < 1e-12 {
                    out.push((nodes[record_idx], y));
                    record_idx += 1;
                    continue;
                }
            }
            return Err(SimilarityError::StepUnderflow(omega));
        }
        let mut k = [[0.0; 4]; 7];
        k[0] = rhs(omega, &y, p, f, g)?;
        let mut failed_domain = false;
        for stage in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(stage + 1) {
                for d in 0..4 {
                    ys[d] += h * DP_A[stage][j] * kj[d];
                }
            }
            match rhs(omega + DP_C[stage] * h, &ys, p, f, g) {
                Ok(kk) => k[stage + 1] = kk,
                Err(SimilarityError::InteriorZero(_)) => {
                    failed_domain = true;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if failed_domain {
            // Approaching the positivity boundary: hand the current state
            // back as the event location once the step cannot shrink.
            if h < 1e-12 {
                return Ok((omega, y));
            }
            h *= 0.5;
            continue;
        }
        let mut y5 = y;
        let mut y4 = y;
        for d in 0..4 {
            for j in 0..7 {
                y5[d] += h * DP_B5[j] * k[j][d];
                y4[d] += h * DP_B4[j] * k[j][d];
            }
        }
        let mut err: f64 = 0.0;
        for d in 0..4 {
            let scale = atol + rtol * y5[d].abs().max(y[d].abs());
            err = err.max(((y5[d] - y4[d]) / scale).abs());
        }
        // Event: the nutrient component crossed its floor inside the step.
        // The stop state must still satisfy the error control.
        if y5[2] < psi_floor {
            if err <= 1.0 && y5[2] > 0.0 {
                return Ok((omega + h, y5));
            }
            if h < 1e-12 {
                return Ok((omega, y));
            }
            h *= 0.5;
            continue;
        }
        if err <= 1.0 {
            omega += h;
            y = y5;
            if let Some((nodes, out)) = record.as_mut() {
                while record_idx < nodes.len() && nodes[record_idx] <= omega + 1e-12 {
                    out.push((nodes[record_idx], y));
                    record_idx += 1;
                }
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
    }
    Ok((omega, y))
}

/// Start state slightly off the origin by a two-term expansion around
/// omega = 0 with phi'(0) = psi'(0) = 0: the regularised second derivatives
/// are phi''(0) = -f psi^-beta / ((n+1)(phi+alpha_s)^m) and
/// psi''(0) = -g psi^(1-beta) / (n+1).
fn taylor_start(
    phi0: f64,
    psi0: f64,
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<(f64, State), SimilarityError> {
    if psi0 <= 0.0 {
        return Err(SimilarityError::InteriorZero(0.0));
    }
    let n = p.n as f64;
    let phi_pp0 = -f(phi0) * psi0.powf(-p.beta) / ((n + 1.0) * (phi0 + p.alpha_s).powf(p.m));
    let psi_pp0 = -g(phi0) * psi0.powf(1.0 - p.beta) / (n + 1.0);
    let ws = 1e-6;
    let y = [
        phi0 + 0.5 * phi_pp0 * ws * ws,
        phi_pp0 * ws,
        psi0 + 0.5 * psi_pp0 * ws * ws,
        psi_pp0 * ws,
    ];
    Ok((ws, y))
}

/// Offset from the free endpoint: the terminal state is reached by a short
/// Taylor extension because phi and psi vanish exactly at omega0 and the
/// integrand divides by psi.
const ENDPOINT_GAP: f64 = 1e-9;

/// Event floor for the nutrient component: integration stops here and the
/// remaining stretch is covered by the Taylor continuation, which keeps the
/// defect smooth even for trial parameters whose trajectory would cross
/// zero before the endpoint.
const PSI_EVENT_FLOOR: f64 = 1e-6;

/// Integrate to omega0 (or to the psi-floor event, whichever comes first)
/// and continue with a second-order Taylor extension to the endpoint.
fn integrate_to_endpoint(
    phi0: f64,
    psi0: f64,
    omega0: f64,
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    record: Option<(&[f64], &mut Vec<(f64, State)>)>,
) -> Result<State, SimilarityError> {
    let (ws, y0) = taylor_start(phi0, psi0, p, f, g)?;
    let stop = omega0 - ENDPOINT_GAP * omega0.max(1.0);
    let (reached, y) = integrate(ws, y0, stop, p, f, g, 1e-12, 1e-14, PSI_EVENT_FLOOR, record)?;
    let gap = omega0 - reached;
    match rhs(reached, &y, p, f, g) {
        Ok(k) => Ok([
            y[0] + gap * k[0] + 0.5 * gap * gap * k[1],
            y[1] + gap * k[1],
            y[2] + gap * k[2] + 0.5 * gap * gap * k[3],
            y[3] + gap * k[3],
        ]),
        // The state may sit right on the boundary of the admissible region;
        // extend linearly with the state derivatives alone.
        Err(SimilarityError::InteriorZero(_)) => {
            Ok([y[0] + gap * y[1], y[1], y[2] + gap * y[3], y[3]])
        }
        Err(e) => Err(e),
    }
}

/// Terminal defect normalised by the similarity-family scales (the profile
/// values shrink like omega0^2 and the slope like omega0 along the trivial
/// all-zero branch, which would otherwise attract the iteration).
fn terminal_defect(
    unknowns: &[f64; 3],
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
) -> Result<[f64; 3], SimilarityError> {
    let [phi0, psi0, omega0] = *unknowns;
    if omega0 <= 0.0 || psi0 <= 0.0 {
        return Err(SimilarityError::InvalidParams(format!(
            "(psi0, omega0) = ({psi0}, {omega0}) left the admissible region"
        )));
    }
    let y = integrate_to_endpoint(phi0, psi0, omega0, p, f, g, None)?;
    let w2 = omega0 * omega0;
    Ok([y[0] / w2, y[2] / w2, y[1] / omega0 + 0.5 * p.amp()])
}

/// Solve the reduced free-endpoint problem by shooting from the origin:
/// Newton iteration on (phi(0), psi(0), omega0) driving
/// (phi(omega0), psi(omega0), phi'(omega0) + alpha_s^(1-m) omega0/2) to zero.
pub fn shoot_reduced(
    p: &ModelParams,
    f: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    guess: ShootingGuess,
    grid_points: usize,
) -> Result<ShootingResult, SimilarityError> {
    let mut u = [guess.phi0, guess.psi0, guess.omega0];
    let mut defect = terminal_defect(&u, p, f, g)?;
    let norm = |d: &[f64; 3]| d.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    const MAX_ITER: usize = 50;
    const TOL: f64 = 1e-10;
    let mut iterations = 0;
    while norm(&defect) > TOL {
        iterations += 1;
        if iterations > MAX_ITER {
            return Err(SimilarityError::ShootingDiverged {
                iterations: MAX_ITER,
                defect: norm(&defect),
            });
        }
        // Finite-difference Jacobian, falling back to a one-sided step when
        // the forward perturbation leaves the feasible region.
        let mut jac = [[0.0; 3]; 3];
        for col in 0..3 {
            let mut h = 1e-5 * u[col].abs().max(1e-3);
            let mut up = u;
            up[col] += h;
            let dp = match terminal_defect(&up, p, f, g) {
                Ok(d) => d,
                Err(SimilarityError::InteriorZero(_)) => {
                    h = -h;
                    let mut um = u;
                    um[col] += h;
                    terminal_defect(&um, p, f, g)?
                }
                Err(e) => return Err(e),
            };
            for row in 0..3 {
                jac[row][col] = (dp[row] - defect[row]) / h;
            }
        }
        let step = solve3(&jac, &defect)?;
        // Trust-region box: no unknown may change by more than half its
        // magnitude in one iteration (the unknowns live on very different
        // scales and the defect is only piecewise smooth near the
        // positivity boundary).
        let mut lambda: f64 = 1.0;
        for (i, s) in step.iter().enumerate() {
            let cap = 0.5 * u[i].abs().max(0.02);
            if s.abs() * lambda > cap {
                lambda = cap / s.abs();
            }
        }
        loop {
            let trial = [
                u[0] - lambda * step[0],
                u[1] - lambda * step[1],
                u[2] - lambda * step[2],
            ];
            match terminal_defect(&trial, p, f, g) {
                Ok(d) if norm(&d) < norm(&defect) || lambda < 1e-3 => {
                    u = trial;
                    defect = d;
                    break;
                }
                // Any failed or non-improving trial: damp harder.
                _ => {
                    lambda *= 0.5;
                    if lambda < 1e-8 {
                        return Err(SimilarityError::ShootingDiverged {
                            iterations,
                            defect: norm(&defect),
                        });
                    }
                }
            }
        }
    }

    // Re-integrate on the output grid.
    let [phi0, psi0, omega0] = u;
    let stop = omega0 - ENDPOINT_GAP * omega0.max(1.0);
    let nodes: Vec<f64> = (0..=grid_points)
        .map(|i| omega0 * i as f64 / grid_points as f64)
        .collect();
    let mut recorded = Vec::with_capacity(nodes.len());
    recorded.push((0.0, [phi0, 0.0, psi0, 0.0]));
    let interior: Vec<f64> = nodes
        .iter()
        .copied()
        .filter(|&w| w > 1e-6 && w < stop)
        .collect();
    let terminal = integrate_to_endpoint(
        phi0,
        psi0,
        omega0,
        p,
        f,
        g,
        Some((&interior, &mut recorded)),
    )?;
    recorded.push((omega0, terminal));
    let profile = SimilarityProfile {
        omega: recorded.iter().map(|(w, _)| *w).collect(),
        phi: recorded.iter().map(|(_, y)| y[0]).collect(),
        phi_p: recorded.iter().map(|(_, y)| y[1]).collect(),
        psi: recorded.iter().map(|(_, y)| y[2]).collect(),
        psi_p: recorded.iter().map(|(_, y)| y[3]).collect(),
        omega0,
    };
    Ok(ShootingResult {
        profile,
        omega0,
        phi0,
        psi0,
        defect: norm(&defect),
        iterations,
    })
}

fn solve3(a: &[[f64; 3]; 3], b: &[f64; 3]) -> Result<[f64; 3], SimilarityError> {
    let mut m = *a;
    let mut rhs = *b;
    for col in 0..3 {
        let piv = (col..3)
            .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
            .unwrap();
        m.swap(col, piv);
        rhs.swap(col, piv);
        if m[col][col].abs() < 1e-300 {
            return Err(SimilarityError::ShootingDiverged {
                iterations: 0,
                defect: f64::INFINITY,
            });
        }
        for row in (col + 1)..3 {
            let factor = m[row][col] / m[col][col];
            for c2 in col..3 {
                m[row][c2] -= factor * m[col][c2];
            }
            rhs[row] -= factor * rhs[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = rhs[row];
        for c2 in (row + 1)..3 {
            s -= m[row][c2] * x[c2];
        }
        x[row] = s / m[row][row];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference() -> ModelParams {
        ModelParams::reference()
    }

    #[test]
    fn profile_boundary_values() {
        let p = reference();
        assert_eq!(exact_phi(p.omega0, &p).unwrap(), 0.0);
        assert_eq!(exact_psi(p.omega0, &p).unwrap(), 0.0);
        assert!((exact_phi(0.0, &p).unwrap() - 0.25).abs() < 1e-15);
        // Constant diffusivity doubles the amplitude scale.
        let p0 = reference().with_m(0.0);
        assert!((exact_phi(0.0, &p0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn psi_centre_values() {
        let p = reference();
        // 5 q0 / 48 at omega = 0 for the planar case (amp = 1 at m = 1).
        let want = 5.0 * 0.5 / 48.0;
        assert!((exact_psi(0.0, &p).unwrap() - want).abs() < 1e-15);
        assert!((exact_psi(0.0, &p).unwrap() - 0.052083333333).abs() < 1e-9);
        let p2 = reference().with_n(2);
        // q0 / (16*5) * 7/3 at omega = 0 for the spherical case.
        let want2 = 0.5 / 80.0 * (7.0 / 3.0);
        assert!((exact_psi(0.0, &p2).unwrap() - want2).abs() < 1e-15);
        assert!((exact_psi(0.0, &p2).unwrap() - 0.0145833333).abs() < 1e-9);
    }

    #[test]
    fn planar_psi_matches_legacy_coefficients() {
        // 1/(16(n+3)) -> 1/48 and (n+5)/(n+1) -> 5 at n = 0.
        let p = reference();
        for i in 0..=20 {
            let w = p.omega0 * i as f64 / 20.0;
            let direct = p.amp() * p.q0 / 48.0
                * (p.omega0 * p.omega0 - w * w)
                * (5.0 * p.omega0 * p.omega0 - w * w);
            assert!((exact_psi(w, &p).unwrap() - direct).abs() < 1e-16);
        }
    }

    #[test]
    fn f_of_phi_reference_value() {
        // m = 0: f(0.125) = (1/3)(0.125)(0.625)(0.25).
        let p = reference().with_m(0.0);
        let got = f_of_phi(0.125, &p).unwrap();
        let want = (1.0 / 3.0) * 0.125 * 0.625 * 0.25;
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
        assert_eq!(f_of_phi(0.0, &p).unwrap(), 0.0);
    }

    #[test]
    fn cubic_route_agrees_with_general_formula() {
        let p = reference().with_m(0.0);
        let (a1, a2) = cubic_roots(&p);
        assert!((a1 - 0.0).abs() < 1e-15);
        assert!((a2 - 0.875).abs() < 1e-15);
        for i in 0..=32 {
            let phi = p.phi_max() * i as f64 / 32.0;
            let via_cubic = f_cubic(phi, &p);
            let via_general = f_of_phi(phi, &p).unwrap();
            assert!(
                (via_cubic - via_general).abs() < 1e-14,
                "phi={phi}: {via_cubic} vs {via_general}"
            );
        }
    }

    #[test]
    fn exact_profiles_annihilate_reduced_system() {
        for n in [0u32, 1, 2] {
            for m in [0.0, 0.5, 1.0] {
                let p = reference().with_m(m).with_n(n);
                let f = |phi: f64| f_of_phi(phi, &p).unwrap();
                let g = |phi: f64| g_of_phi(phi, &p);
                for i in 0..200 {
                    let w = p.omega0 * (i as f64 + 0.5) / 200.0;
                    let pt = exact_point(w, &p).unwrap();
                    let (r1, r2) = reduced_residuals(&pt, &p, &f, &g).unwrap();
                    assert!(r1.abs() < 1e-12, "n={n} m={m} w={w}: r1={r1}");
                    assert!(r2.abs() < 1e-12, "n={n} m={m} w={w}: r2={r2}");
                }
            }
        }
    }

    #[test]
    fn stefan_slope_at_front() {
        for m in [0.0, 0.5, 1.0] {
            let p = reference().with_m(m);
            let slope = exact_phi_prime(p.omega0, &p).unwrap();
            assert!((slope + 0.5 * p.amp() * p.omega0).abs() < 1e-15);
        }
    }

    #[test]
    fn equilibrium_point_is_residual_free() {
        let p = reference();
        let pt = ProfilePoint {
            omega: 0.4,
            phi: 0.0,
            phi_p: 0.0,
            phi_pp: 0.0,
            psi: 1.0,
            psi_p: 0.0,
            psi_pp: 0.0,
        };
        let (r1, r2) = reduced_residuals(&pt, &p, &|_| 0.0, &|_| 0.0).unwrap();
        assert_eq!(r1, 0.0);
        assert_eq!(r2, 0.0);
    }

    #[test]
    fn fields_from_similarity_solution() {
        let p = reference();
        let (alpha, c, front) = exact_fields(4.0, 0.0, &p).unwrap();
        assert!((front - 2.0).abs() < 1e-15);
        assert!((alpha - 0.75).abs() < 1e-15);
        let (_, c1, _) = exact_fields(1.0, 0.0, &p).unwrap();
        assert!((c1 - (2.0 - 0.0520833333333)).abs() < 1e-9);
        assert!(c < p.c_inf);
    }

    #[test]
    fn monotone_fields() {
        // alpha nonincreasing, c nondecreasing in r.
        for m in [0.0, 0.5, 1.0] {
            let p = reference().with_m(m);
            let t = 1.7_f64;
            let mut prev_alpha = f64::INFINITY;
            let mut prev_c = f64::NEG_INFINITY;
            for i in 0..=100 {
                let r = p.omega0 * t.sqrt() * i as f64 / 100.0;
                let (alpha, c, _) = exact_fields(t, r, &p).unwrap();
                assert!(alpha <= prev_alpha + 1e-14);
                assert!(c >= prev_c - 1e-14);
                prev_alpha = alpha;
                prev_c = c;
            }
        }
    }

    #[test]
    fn source_curve_increasing_with_zero_at_origin() {
        for m in [0.0, 0.5, 1.0] {
            let p = reference().with_m(m);
            let mut prev = -1e-30;
            for i in 0..=100 {
                let phi = p.phi_max() * i as f64 / 100.0;
                let v = f_of_phi(phi, &p).unwrap();
                assert!(v >= prev, "m={m} phi={phi}: {v} < {prev}");
                prev = v;
            }
            assert_eq!(f_of_phi(0.0, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn shooting_recovers_closed_form_planar() {
        let p = reference();
        let f = |phi: f64| f_of_phi(phi.max(0.0), &p).unwrap();
        let g = |phi: f64| g_of_phi(phi, &p);
        let guess = ShootingGuess {
            phi0: 0.3,
            psi0: 0.06,
            omega0: 1.2,
        };
        let out = shoot_reduced(&p, &f, &g, guess, 128).unwrap();
        assert!((out.omega0 - 1.0).abs() < 1e-6, "omega0 = {}", out.omega0);
        assert!((out.phi0 - 0.25).abs() < 1e-6);
        for (i, &w) in out.profile.omega.iter().enumerate() {
            let want = exact_phi(w.min(1.0), &p).unwrap();
            assert!(
                (out.profile.phi[i] - want).abs() < 1e-6,
                "w={w}: {} vs {want}",
                out.profile.phi[i]
            );
        }
    }

    #[test]
    fn shooting_recovers_closed_form_spherical() {
        let p = reference().with_n(2);
        let f = |phi: f64| f_of_phi(phi.max(0.0), &p).unwrap();
        let g = |phi: f64| g_of_phi(phi, &p);
        let guess = ShootingGuess {
            phi0: 0.2,
            psi0: 0.02,
            omega0: 0.9,
        };
        let out = shoot_reduced(&p, &f, &g, guess, 128).unwrap();
        assert!((out.omega0 - 1.0).abs() < 1e-6);
        assert!((out.psi0 - exact_psi(0.0, &p).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn invalid_params_are_rejected() {
        assert!(ModelParams::new(-0.1, 0.5, 2.0, 1.0, 0.5, 0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 1.5, 2.0, 1.0, 0.5, 0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.5, 2.0, -1.0, 0.5, 0, 1.0).is_err());
        assert!(ModelParams::new(1.0, 0.5, 2.0, 1.0, 0.5, 3, 1.0).is_err());
        let mut p = ModelParams::reference();
        p.beta = 2.0;
        assert!(matches!(
            exact_psi(0.0, &p),
            Err(SimilarityError::BetaNotOne(_))
        ));
    }

    #[test]
    fn out_of_range_omega_rejected() {
        let p = reference();
        assert!(matches!(
            exact_phi(1.5, &p),
            Err(SimilarityError::OutOfRange { .. })
        ));
    }
}
