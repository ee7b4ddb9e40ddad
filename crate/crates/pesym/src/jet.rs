//! Second-order jet space over (t, x) with dependent variables (U, V):
//! total-derivative operators and randomized zero testing of expressions
//! whose uninterpreted functions are bound to smooth stand-ins.

use crate::expr::{eval_scaled, pdiff, EvalError, Expr, FuncBindings, StandIn};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use thiserror::Error;

pub const T: &str = "t";
pub const X: &str = "x";
pub const U: &str = "U";
pub const V: &str = "V";
pub const U_T: &str = "U_t";
pub const U_X: &str = "U_x";
pub const U_XX: &str = "U_xx";
pub const V_T: &str = "V_t";
pub const V_X: &str = "V_x";
pub const V_XX: &str = "V_xx";

/// Jet coordinates recognised as algebraically independent variables.
pub const JET_VARS: [&str; 6] = [U_T, U_X, U_XX, V_T, V_X, V_XX];

/// Default sampling window for coordinates; chosen away from singular axes.
pub const DEFAULT_RANGE: (f64, f64) = (0.3, 2.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JetError {
    #[error("total derivative would introduce a jet coordinate beyond second order (d/d{dir} of an expression depending on {var})")]
    OutsideJetSpace { dir: char, var: &'static str },
    #[error("zero test exhausted its resampling budget: {0}")]
    EvalBudget(EvalError),
}

/// Evaluation/sampling context: function stand-in bindings plus per-variable
/// sampling ranges. Read-only during evaluation; cheap to clone.
#[derive(Debug, Clone, Default)]
pub struct JetContext {
    pub funcs: FuncBindings,
    pub ranges: BTreeMap<String, (f64, f64)>,
}

impl JetContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(mut self, name: &str, standin: StandIn) -> Self {
        self.funcs.insert(name.to_string(), standin);
        self
    }

    pub fn range(mut self, var: &str, lo: f64, hi: f64) -> Self {
        self.ranges.insert(var.to_string(), (lo, hi));
        self
    }

    fn range_of(&self, var: &str) -> (f64, f64) {
        self.ranges.get(var).copied().unwrap_or(DEFAULT_RANGE)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    T,
    X,
}

/// Total derivative on the second-order jet space:
///   D_x e = e_x + U_x e_U + V_x e_V + U_xx e_{U_x} + V_xx e_{V_x}
///   D_t e = e_t + U_t e_U + V_t e_V
/// Errors if the result would need a coordinate beyond second order.
pub fn total_derivative(e: &Expr, dir: Direction) -> Result<Expr, JetError> {
    match dir {
        Direction::X => {
            for blocked in [U_XX, V_XX, U_T, V_T] {
                if !pdiff(e, blocked).simplify().is_zero_literal() {
                    return Err(JetError::OutsideJetSpace {
                        dir: 'x',
                        var: blocked_name(blocked),
                    });
                }
            }
            Ok(Expr::sum(vec![
                pdiff(e, X),
                Expr::var(U_X) * pdiff(e, U),
                Expr::var(V_X) * pdiff(e, V),
                Expr::var(U_XX) * pdiff(e, U_X),
                Expr::var(V_XX) * pdiff(e, V_X),
            ])
            .simplify())
        }
        Direction::T => {
            for blocked in [U_X, V_X, U_XX, V_XX, U_T, V_T] {
                if !pdiff(e, blocked).simplify().is_zero_literal() {
                    return Err(JetError::OutsideJetSpace {
                        dir: 't',
                        var: blocked_name(blocked),
                    });
                }
            }
            Ok(Expr::sum(vec![
                pdiff(e, T),
                Expr::var(U_T) * pdiff(e, U),
                Expr::var(V_T) * pdiff(e, V),
            ])
            .simplify())
        }
    }
}

fn blocked_name(v: &str) -> &'static str {
    match v {
        "U_t" => "U_t",
        "U_x" => "U_x",
        "U_xx" => "U_xx",
        "V_t" => "V_t",
        "V_x" => "V_x",
        _ => "V_xx",
    }
}

/// Outcome of a randomized zero test.
#[derive(Debug, Clone)]
pub struct ZeroCheck {
    pub is_zero: bool,
    /// Largest normalised residual |e| / (1 + max subterm magnitude) seen.
    pub max_ratio: f64,
    /// Sample point and raw value where the test first failed.
    pub witness: Option<(Vec<(String, f64)>, f64)>,
}

/// Test whether `e` vanishes identically by evaluating at `trials`
/// pseudo-random points with all free variables drawn from the context
/// ranges. Deterministic for a fixed seed. Domain errors at a sample point
/// cause a resample, with a bounded retry budget.
pub fn is_zero(
    e: &Expr,
    ctx: &JetContext,
    trials: usize,
    tol: f64,
    seed: u64,
) -> Result<ZeroCheck, JetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    is_zero_with(e, ctx, trials, tol, &mut rng)
}

pub fn is_zero_with(
    e: &Expr,
    ctx: &JetContext,
    trials: usize,
    tol: f64,
    rng: &mut impl Rng,
) -> Result<ZeroCheck, JetError> {
    let vars: Vec<String> = e.free_vars().into_iter().collect();
    let mut done = 0usize;
    let mut budget = trials * 8 + 16;
    let mut max_ratio: f64 = 0.0;
    let mut last_err = None;
    while done < trials {
        if budget == 0 {
            return Err(JetError::EvalBudget(
                last_err.unwrap_or(EvalError::NonFinite),
            ));
        }
        budget -= 1;
        let point: Vec<(String, f64)> = vars
            .iter()
            .map(|v| {
                let (lo, hi) = ctx.range_of(v);
                (v.clone(), if lo == hi { lo } else { rng.gen_range(lo..hi) })
            })
            .collect();
        let env = |n: &str| point.iter().find(|(k, _)| k == n).map(|(_, v)| *v);
        match eval_scaled(e, &env, &ctx.funcs) {
            Ok((value, scale)) => {
                done += 1;
                let ratio = value.abs() / (1.0 + scale);
                max_ratio = max_ratio.max(ratio);
                if ratio >= tol {
                    return Ok(ZeroCheck {
                        is_zero: false,
                        max_ratio,
                        witness: Some((point, value)),
                    });
                }
            }
            Err(err) => {
                last_err = Some(err);
            }
        }
    }
    Ok(ZeroCheck {
        is_zero: true,
        max_ratio,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn total_x_of_u_is_jet() {
        let e = total_derivative(&Expr::var(U), Direction::X).unwrap();
        assert_eq!(e, Expr::var(U_X));
    }

    #[test]
    fn total_x_product_rule() {
        // D_x(x*U^2) = U^2 + 2*x*U*U_x
        let e = total_derivative(&parse("x*U^2").unwrap(), Direction::X).unwrap();
        let want = parse("U^2 + 2*x*U*U_x").unwrap();
        let ctx = JetContext::new();
        let diff = e - want;
        assert!(is_zero(&diff, &ctx, 12, 1e-12, 7).unwrap().is_zero);
    }

    #[test]
    fn total_t_definition() {
        let e = total_derivative(&parse("2*t*U").unwrap(), Direction::T).unwrap();
        let want = parse("2*U + 2*t*U_t").unwrap();
        let diff = e - want;
        assert!(
            is_zero(&diff, &JetContext::new(), 12, 1e-12, 7)
                .unwrap()
                .is_zero
        );
    }

    #[test]
    fn second_total_stays_second_order() {
        let base = parse("t*x*U*V + sin(x)*U").unwrap();
        let once = total_derivative(&base, Direction::X).unwrap();
        let twice = total_derivative(&once, Direction::X).unwrap();
        let vars = twice.free_vars();
        assert!(!vars.contains("U_xxx") && !vars.contains("V_xxx"));
        // A third application must be rejected.
        assert!(total_derivative(&twice, Direction::X).is_err());
    }

    #[test]
    fn zero_test_accepts_identity() {
        let e = parse("(U+V)^2 - U^2 - 2*U*V - V^2").unwrap();
        let r = is_zero(&e, &JetContext::new(), 16, 1e-9, 42).unwrap();
        assert!(r.is_zero, "max ratio {}", r.max_ratio);
    }

    #[test]
    fn zero_test_rejects_with_witness() {
        let e = parse("U - V").unwrap();
        let r = is_zero(&e, &JetContext::new(), 16, 1e-9, 42).unwrap();
        assert!(!r.is_zero);
        let (point, value) = r.witness.unwrap();
        let u = point.iter().find(|(k, _)| k == "U").unwrap().1;
        let v = point.iter().find(|(k, _)| k == "V").unwrap().1;
        assert!((u - v - value).abs() < 1e-14);
    }

    #[test]
    fn zero_test_resamples_domain_errors() {
        // ln(U - 1) errors for U < 1 (about 40% of the default range);
        // resampling must still complete the requested trials.
        let e = parse("ln(U - 1) - ln(U - 1)").unwrap();
        let r = is_zero(&e, &JetContext::new(), 12, 1e-9, 3).unwrap();
        assert!(r.is_zero);
    }
}
