//! Partial differentiation on expression trees. Jet coordinates are ordinary
//! variables here: `pdiff(U_x^2, U) = 0`.

use super::{Expr, FuncApp, UnaryFn};

/// Partial derivative of `e` with respect to the variable `v`, treating all
/// other variables (including jet coordinates) as constants. Uninterpreted
/// functions follow the chain rule: d/dv f^(n)(a) = f^(n+1)(a) * da/dv.
pub fn pdiff(e: &Expr, v: &str) -> Expr {
    match e {
        Expr::Num(_) => Expr::zero(),
        Expr::Var(n) => {
            if n == v {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Expr::Sum(ts) => Expr::sum(ts.iter().map(|t| pdiff(t, v)).collect()),
        Expr::Prod(ts) => {
            let mut terms = Vec::with_capacity(ts.len());
            for (i, t) in ts.iter().enumerate() {
                let dt = pdiff(t, v);
                if dt.is_zero_literal() {
                    continue;
                }
                let mut factors = Vec::with_capacity(ts.len());
                for (j, u) in ts.iter().enumerate() {
                    if i == j {
                        factors.push(dt.clone());
                    } else {
                        factors.push(u.clone());
                    }
                }
                terms.push(Expr::prod(factors));
            }
            Expr::sum(terms)
        }
        Expr::Pow(base, exponent) => {
            let db = pdiff(base, v);
            let de = pdiff(exponent, v);
            if de.is_zero_literal() {
                if db.is_zero_literal() {
                    return Expr::zero();
                }
                // e * b^(e-1) * b'
                let shifted = Expr::sum(vec![(**exponent).clone(), Expr::num(-1.0)]);
                return Expr::prod(vec![
                    (**exponent).clone(),
                    Expr::pow((**base).clone(), shifted),
                    db,
                ]);
            }
            // b^e * (e' ln b + e b'/b)
            let inner = Expr::sum(vec![
                Expr::prod(vec![de, Expr::ln((**base).clone())]),
                Expr::prod(vec![(**exponent).clone(), Expr::quot(db, (**base).clone())]),
            ]);
            Expr::prod(vec![e.clone(), inner])
        }
        Expr::Neg(a) => Expr::neg(pdiff(a, v)),
        Expr::Quot(a, b) => {
            let da = pdiff(a, v);
            let db = pdiff(b, v);
            if db.is_zero_literal() {
                return Expr::quot(da, (**b).clone());
            }
            let num = Expr::sum(vec![
                Expr::prod(vec![da, (**b).clone()]),
                Expr::neg(Expr::prod(vec![(**a).clone(), db])),
            ]);
            let den = Expr::pow((**b).clone(), Expr::num(2.0));
            Expr::quot(num, den)
        }
        Expr::Unary(f, a) => {
            let da = pdiff(a, v);
            if da.is_zero_literal() {
                return Expr::zero();
            }
            let outer = match f {
                UnaryFn::Exp => Expr::exp((**a).clone()),
                UnaryFn::Ln => Expr::quot(Expr::one(), (**a).clone()),
                UnaryFn::Sin => Expr::unary(UnaryFn::Cos, (**a).clone()),
                UnaryFn::Cos => Expr::neg(Expr::unary(UnaryFn::Sin, (**a).clone())),
                UnaryFn::Tan => Expr::quot(
                    Expr::one(),
                    Expr::pow(Expr::unary(UnaryFn::Cos, (**a).clone()), Expr::num(2.0)),
                ),
                UnaryFn::Sqrt => Expr::quot(
                    Expr::one(),
                    Expr::prod(vec![
                        Expr::num(2.0),
                        Expr::unary(UnaryFn::Sqrt, (**a).clone()),
                    ]),
                ),
            };
            Expr::prod(vec![outer, da])
        }
        Expr::Func(FuncApp { name, order, arg }) => {
            let da = pdiff(arg, v);
            if da.is_zero_literal() {
                return Expr::zero();
            }
            Expr::prod(vec![
                Expr::func(name.clone(), order + 1, (**arg).clone()),
                da,
            ])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn d(src: &str, v: &str) -> Expr {
        pdiff(&parse(src).unwrap(), v)
    }

    #[test]
    fn power_rule() {
        // d/dU U^k = k*U^(k-1)
        let got = d("U^k", "U");
        let want = parse("k*U^(k - 1)").unwrap();
        assert_eq!(got.simplify(), want.simplify());
    }

    #[test]
    fn chain_rule_through_funcapp() {
        // d/dV f(U*V^3) = f'(U*V^3) * 3*U*V^2
        let got = d("f(U*V^3)", "V").simplify();
        let want = parse("f'(U*V^3) * U * 3*V^2").unwrap().simplify();
        // Structural comparison is order-sensitive; compare numerically.
        let vars = [("U", 1.3), ("V", 0.7)];
        let env = |n: &str| vars.iter().find(|(k, _)| *k == n).map(|(_, v)| *v);
        let funcs = crate::expr::numeric::single_standin(
            "f",
            crate::expr::StandIn::poly(&[0.2, -1.0, 0.4, 0.3]),
        );
        let a = crate::expr::numeric::eval(&got, &env, &funcs).unwrap();
        let b = crate::expr::numeric::eval(&want, &env, &funcs).unwrap();
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }

    #[test]
    fn jet_independence() {
        assert!(d("U_x^2", "U").is_zero_literal());
        assert!(d("U_x^2", "U_xx").is_zero_literal());
    }

    #[test]
    fn quotient_rule() {
        let got = d("U/V", "V").simplify();
        let vars = [("U", 2.0), ("V", 4.0)];
        let env = |n: &str| vars.iter().find(|(k, _)| *k == n).map(|(_, v)| *v);
        let v = crate::expr::numeric::eval(&got, &env, &Default::default()).unwrap();
        assert!((v - (-2.0 / 16.0)).abs() < 1e-14);
    }

    #[test]
    fn general_power() {
        // d/dx x^x = x^x (ln x + 1)
        let got = d("x^x", "x");
        let env = |n: &str| (n == "x").then_some(1.7_f64);
        let v = crate::expr::numeric::eval(&got, &env, &Default::default()).unwrap();
        let want = 1.7_f64.powf(1.7) * (1.7_f64.ln() + 1.0);
        assert!((v - want).abs() < 1e-12);
    }
}
