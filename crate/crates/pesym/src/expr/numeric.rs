//! Numeric evaluation of expression trees, with stand-in callables for
//! uninterpreted function symbols.

use super::{Expr, FuncApp, UnaryFn};
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    UnboundVar(String),
    #[error("no stand-in bound for function symbol {0}")]
    UnboundFunc(String),
    #[error("domain violation in {op}({arg})")]
    Domain { op: &'static str, arg: f64 },
    #[error("non-finite intermediate value")]
    NonFinite,
}

/// Closed-form stand-in for an uninterpreted function symbol, evaluable at
/// any derivative order. Stand-ins are degree<=3 polynomials or scaled
/// exponentials, which keeps every derivative smooth and exact.
#[derive(Debug, Clone, PartialEq)]
pub enum StandIn {
    /// c0 + c1 x + c2 x^2 + c3 x^3 (arbitrary length).
    Poly(Vec<f64>),
    /// amp * exp(rate * x).
    ExpScaled { amp: f64, rate: f64 },
}

impl StandIn {
    pub fn poly(coeffs: &[f64]) -> StandIn {
        StandIn::Poly(coeffs.to_vec())
    }

    pub fn constant(v: f64) -> StandIn {
        StandIn::Poly(vec![v])
    }

    pub fn eval(&self, order: u32, x: f64) -> f64 {
        match self {
            StandIn::Poly(coeffs) => {
                // Differentiate the coefficient list `order` times, then Horner.
                let mut c: Vec<f64> = coeffs.clone();
                for _ in 0..order {
                    c = c
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(i, v)| v * i as f64)
                        .collect();
                }
                c.iter().rev().fold(0.0, |acc, v| acc * x + v)
            }
            StandIn::ExpScaled { amp, rate } => amp * rate.powi(order as i32) * (rate * x).exp(),
        }
    }

    /// Random smooth stand-in: cubic with coefficients in [-2, 2], or a
    /// scaled exponential with rate in [-1, 1].
    pub fn random(rng: &mut impl Rng) -> StandIn {
        if rng.gen_bool(0.7) {
            let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            StandIn::Poly(coeffs)
        } else {
            let amp = away_from_zero(rng, 0.3, 2.0);
            let rate = away_from_zero(rng, 0.2, 1.0);
            StandIn::ExpScaled { amp, rate }
        }
    }

    /// Random stand-in suitable for a diffusivity: bounded away from zero,
    /// with derivative bounded away from zero, on the sampling box.
    pub fn random_diffusivity(rng: &mut impl Rng) -> StandIn {
        loop {
            let cand = StandIn::random(rng);
            let mut ok = true;
            let mut x = 0.1;
            while x <= 2.3 {
                if cand.eval(0, x).abs() < 0.25 || cand.eval(1, x).abs() < 0.1 {
                    ok = false;
                    break;
                }
                x += 0.05;
            }
            if ok {
                return cand;
            }
        }
    }
}

fn away_from_zero(rng: &mut impl Rng, min_abs: f64, max_abs: f64) -> f64 {
    let mag = rng.gen_range(min_abs..max_abs);
    if rng.gen_bool(0.5) {
        mag
    } else {
        -mag
    }
}

pub type FuncBindings = BTreeMap<String, StandIn>;

pub fn single_standin(name: &str, s: StandIn) -> FuncBindings {
    let mut m = BTreeMap::new();
    m.insert(name.to_string(), s);
    m
}

/// Evaluate `e` with variables resolved by `env` and function symbols by
/// `funcs`. Deterministic for a fixed binding.
pub fn eval(
    e: &Expr,
    env: &dyn Fn(&str) -> Option<f64>,
    funcs: &FuncBindings,
) -> Result<f64, EvalError> {
    Ok(eval_scaled(e, env, funcs)?.0)
}

/// Evaluate and also report the largest subterm magnitude, used for the
/// relative normalisation in zero testing.
pub fn eval_scaled(
    e: &Expr,
    env: &dyn Fn(&str) -> Option<f64>,
    funcs: &FuncBindings,
) -> Result<(f64, f64), EvalError> {
    let (v, scale) = eval_inner(e, env, funcs)?;
    if !v.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok((v, scale))
}

fn eval_inner(
    e: &Expr,
    env: &dyn Fn(&str) -> Option<f64>,
    funcs: &FuncBindings,
) -> Result<(f64, f64), EvalError> {
    let (v, child_scale) = match e {
        Expr::Num(v) => (*v, 0.0),
        Expr::Var(n) => match env(n) {
            Some(v) => (v, 0.0),
            None => return Err(EvalError::UnboundVar(n.clone())),
        },
        Expr::Sum(ts) => {
            let mut acc = 0.0;
            let mut scale: f64 = 0.0;
            for t in ts {
                let (v, s) = eval_inner(t, env, funcs)?;
                acc += v;
                scale = scale.max(s).max(v.abs());
            }
            (acc, scale)
        }
        Expr::Prod(ts) => {
            let mut acc = 1.0;
            let mut scale: f64 = 0.0;
            for t in ts {
                let (v, s) = eval_inner(t, env, funcs)?;
                acc *= v;
                scale = scale.max(s).max(v.abs());
            }
            (acc, scale)
        }
        Expr::Pow(a, b) => {
            let (base, s1) = eval_inner(a, env, funcs)?;
            let (exponent, s2) = eval_inner(b, env, funcs)?;
            let v = base.powf(exponent);
            if v.is_nan() {
                return Err(EvalError::Domain {
                    op: "pow",
                    arg: base,
                });
            }
            (v, s1.max(s2))
        }
        Expr::Neg(a) => {
            let (v, s) = eval_inner(a, env, funcs)?;
            (-v, s)
        }
        Expr::Quot(a, b) => {
            let (num, s1) = eval_inner(a, env, funcs)?;
            let (den, s2) = eval_inner(b, env, funcs)?;
            if den == 0.0 {
                return Err(EvalError::Domain {
                    op: "div",
                    arg: 0.0,
                });
            }
            (num / den, s1.max(s2))
        }
        Expr::Unary(f, a) => {
            let (x, s) = eval_inner(a, env, funcs)?;
            let v = match f {
                UnaryFn::Exp => x.exp(),
                UnaryFn::Ln => {
                    if x <= 0.0 {
                        return Err(EvalError::Domain { op: "ln", arg: x });
                    }
                    x.ln()
                }
                UnaryFn::Sin => x.sin(),
                UnaryFn::Cos => x.cos(),
                UnaryFn::Tan => x.tan(),
                UnaryFn::Sqrt => {
                    if x < 0.0 {
                        return Err(EvalError::Domain { op: "sqrt", arg: x });
                    }
                    x.sqrt()
                }
            };
            (v, s)
        }
        Expr::Func(FuncApp { name, order, arg }) => {
            let (x, s) = eval_inner(arg, env, funcs)?;
            let standin = funcs
                .get(name)
                .ok_or_else(|| EvalError::UnboundFunc(name.clone()))?;
            (standin.eval(*order, x), s)
        }
    };
    if !v.is_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok((v, child_scale.max(v.abs())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn standin_derivatives() {
        let p = StandIn::poly(&[1.0, 2.0, 3.0, 4.0]); // 1 + 2x + 3x^2 + 4x^3
        assert_eq!(p.eval(0, 2.0), 1.0 + 4.0 + 12.0 + 32.0);
        assert_eq!(p.eval(1, 2.0), 2.0 + 12.0 + 48.0);
        assert_eq!(p.eval(2, 2.0), 6.0 + 48.0);
        assert_eq!(p.eval(3, 2.0), 24.0);
        assert_eq!(p.eval(4, 2.0), 0.0);
        let e = StandIn::ExpScaled {
            amp: 2.0,
            rate: -0.5,
        };
        assert!((e.eval(2, 1.0) - 2.0 * 0.25 * (-0.5_f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn deterministic_eval() {
        let e = parse("exp(V)*f(U) + U_x^2").unwrap();
        let vars = [("V", 0.4), ("U", 1.1), ("U_x", 0.9)];
        let env = |n: &str| vars.iter().find(|(k, _)| *k == n).map(|(_, v)| *v);
        let funcs = single_standin("f", StandIn::poly(&[0.0, 1.0])); // identity
        let v1 = eval(&e, &env, &funcs).unwrap();
        let v2 = eval(&e, &env, &funcs).unwrap();
        assert_eq!(v1, v2);
        assert!((v1 - (0.4_f64.exp() * 1.1 + 0.81)).abs() < 1e-14);
    }

    #[test]
    fn domain_errors_surface() {
        let e = parse("ln(x)").unwrap();
        let env = |n: &str| (n == "x").then_some(-1.0_f64);
        assert!(matches!(
            eval(&e, &env, &Default::default()),
            Err(EvalError::Domain { op: "ln", .. })
        ));
    }
}
