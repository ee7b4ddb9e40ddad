//! Symbolic expression trees over jet-space coordinates and uninterpreted
//! function symbols, with partial/total differentiation, substitution,
//! numeric evaluation and probabilistic zero testing.

mod calculus;
mod display;
pub mod numeric;
mod parser;
mod simplify;

pub use calculus::pdiff;
pub use numeric::{eval, eval_scaled, single_standin, EvalError, FuncBindings, StandIn};
pub use parser::{parse, ParseError};

use std::collections::BTreeSet;
use std::ops::{Add, Div, Mul, Neg as StdNeg, Sub};

/// Built-in unary functions recognised by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Exp,
    Ln,
    Sin,
    Cos,
    Tan,
    Sqrt,
}

impl UnaryFn {
    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Ln => "ln",
            UnaryFn::Sin => "sin",
            UnaryFn::Cos => "cos",
            UnaryFn::Tan => "tan",
            UnaryFn::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryFn::Exp,
            "ln" => UnaryFn::Ln,
            "sin" => UnaryFn::Sin,
            "cos" => UnaryFn::Cos,
            "tan" => UnaryFn::Tan,
            "sqrt" => UnaryFn::Sqrt,
            _ => return None,
        })
    }
}

/// Application of an uninterpreted function symbol: `name` differentiated
/// `order` times, applied to a single argument. `f` with order 2 prints
/// as `f''(arg)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FuncApp {
    pub name: String,
    pub order: u32,
    pub arg: Box<Expr>,
}

/// Immutable expression tree. Sums and products are n-ary and kept
/// flattened; all operations return new trees.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    Sum(Vec<Expr>),
    Prod(Vec<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Quot(Box<Expr>, Box<Expr>),
    Unary(UnaryFn, Box<Expr>),
    Func(FuncApp),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::Var(name.into())
    }

    pub fn zero() -> Expr {
        Expr::Num(0.0)
    }

    pub fn one() -> Expr {
        Expr::Num(1.0)
    }

    /// n-ary sum, flattened and constant-folded.
    pub fn sum(terms: Vec<Expr>) -> Expr {
        simplify::make_sum(terms)
    }

    /// n-ary product, flattened and constant-folded.
    pub fn prod(factors: Vec<Expr>) -> Expr {
        simplify::make_prod(factors)
    }

    pub fn pow(base: Expr, exponent: Expr) -> Expr {
        simplify::make_pow(base, exponent)
    }

    pub fn neg(e: Expr) -> Expr {
        simplify::make_neg(e)
    }

    pub fn quot(num: Expr, den: Expr) -> Expr {
        simplify::make_quot(num, den)
    }

    pub fn unary(f: UnaryFn, arg: Expr) -> Expr {
        simplify::make_unary(f, arg)
    }

    pub fn exp(arg: Expr) -> Expr {
        Expr::unary(UnaryFn::Exp, arg)
    }

    pub fn ln(arg: Expr) -> Expr {
        Expr::unary(UnaryFn::Ln, arg)
    }

    pub fn func(name: impl Into<String>, order: u32, arg: Expr) -> Expr {
        Expr::Func(FuncApp {
            name: name.into(),
            order,
            arg: Box::new(arg),
        })
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn is_one_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// Recursive bottom-up simplification: constant folding, 0/1 identities,
    /// flattening and cancellation of syntactically equal opposite terms.
    pub fn simplify(&self) -> Expr {
        simplify::simplify(self)
    }

    /// Free variable names, sorted.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var(n) => {
                out.insert(n.clone());
            }
            Expr::Sum(ts) | Expr::Prod(ts) => ts.iter().for_each(|t| t.collect_vars(out)),
            Expr::Pow(a, b) | Expr::Quot(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Neg(a) | Expr::Unary(_, a) => a.collect_vars(out),
            Expr::Func(f) => f.arg.collect_vars(out),
        }
    }

    /// Names of uninterpreted function symbols appearing in the tree.
    pub fn func_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_funcs(&mut out);
        out
    }

    fn collect_funcs(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Num(_) | Expr::Var(_) => {}
            Expr::Sum(ts) | Expr::Prod(ts) => ts.iter().for_each(|t| t.collect_funcs(out)),
            Expr::Pow(a, b) | Expr::Quot(a, b) => {
                a.collect_funcs(out);
                b.collect_funcs(out);
            }
            Expr::Neg(a) | Expr::Unary(_, a) => a.collect_funcs(out),
            Expr::Func(f) => {
                out.insert(f.name.clone());
                f.arg.collect_funcs(out);
            }
        }
    }

    /// Simultaneous capture-free replacement of variables by expressions.
    /// The result is simplified.
    pub fn substitute(&self, bindings: &std::collections::BTreeMap<String, Expr>) -> Expr {
        self.substitute_raw(bindings).simplify()
    }

    fn substitute_raw(&self, bindings: &std::collections::BTreeMap<String, Expr>) -> Expr {
        match self {
            Expr::Num(_) => self.clone(),
            Expr::Var(n) => bindings.get(n).cloned().unwrap_or_else(|| self.clone()),
            Expr::Sum(ts) => Expr::Sum(ts.iter().map(|t| t.substitute_raw(bindings)).collect()),
            Expr::Prod(ts) => Expr::Prod(ts.iter().map(|t| t.substitute_raw(bindings)).collect()),
            Expr::Pow(a, b) => Expr::Pow(
                Box::new(a.substitute_raw(bindings)),
                Box::new(b.substitute_raw(bindings)),
            ),
            Expr::Quot(a, b) => Expr::Quot(
                Box::new(a.substitute_raw(bindings)),
                Box::new(b.substitute_raw(bindings)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute_raw(bindings))),
            Expr::Unary(f, a) => Expr::Unary(*f, Box::new(a.substitute_raw(bindings))),
            Expr::Func(f) => Expr::Func(FuncApp {
                name: f.name.clone(),
                order: f.order,
                arg: Box::new(f.arg.substitute_raw(bindings)),
            }),
        }
    }

    /// Replace every application of the uninterpreted symbol `name` using
    /// `build(order, arg)`. Used to instantiate function families such as
    /// phi(t) -> t^2 together with their printed derivatives.
    pub fn substitute_func(&self, name: &str, build: &dyn Fn(u32, &Expr) -> Expr) -> Expr {
        self.substitute_func_raw(name, build).simplify()
    }

    fn substitute_func_raw(&self, name: &str, build: &dyn Fn(u32, &Expr) -> Expr) -> Expr {
        match self {
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Sum(ts) => Expr::Sum(
                ts.iter()
                    .map(|t| t.substitute_func_raw(name, build))
                    .collect(),
            ),
            Expr::Prod(ts) => Expr::Prod(
                ts.iter()
                    .map(|t| t.substitute_func_raw(name, build))
                    .collect(),
            ),
            Expr::Pow(a, b) => Expr::Pow(
                Box::new(a.substitute_func_raw(name, build)),
                Box::new(b.substitute_func_raw(name, build)),
            ),
            Expr::Quot(a, b) => Expr::Quot(
                Box::new(a.substitute_func_raw(name, build)),
                Box::new(b.substitute_func_raw(name, build)),
            ),
            Expr::Neg(a) => Expr::Neg(Box::new(a.substitute_func_raw(name, build))),
            Expr::Unary(f, a) => Expr::Unary(*f, Box::new(a.substitute_func_raw(name, build))),
            Expr::Func(f) => {
                let arg = f.arg.substitute_func_raw(name, build);
                if f.name == name {
                    build(f.order, &arg)
                } else {
                    Expr::Func(FuncApp {
                        name: f.name.clone(),
                        order: f.order,
                        arg: Box::new(arg),
                    })
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Sum(ts) | Expr::Prod(ts) => 1 + ts.iter().map(Expr::node_count).sum::<usize>(),
            Expr::Pow(a, b) | Expr::Quot(a, b) => 1 + a.node_count() + b.node_count(),
            Expr::Neg(a) | Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Func(f) => 1 + f.arg.node_count(),
        }
    }
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, rhs])
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        Expr::sum(vec![self, Expr::neg(rhs)])
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::prod(vec![self, rhs])
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        Expr::quot(self, rhs)
    }
}

impl StdNeg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn constructors_fold_constants() {
        let e = Expr::sum(vec![Expr::num(1.0), Expr::num(2.0), Expr::var("x")]);
        assert_eq!(e, Expr::Sum(vec![Expr::Num(3.0), Expr::var("x")]));
        let p = Expr::prod(vec![Expr::num(0.0), Expr::var("x")]);
        assert!(p.is_zero_literal());
        assert_eq!(Expr::pow(Expr::var("x"), Expr::num(1.0)), Expr::var("x"));
        assert!(Expr::pow(Expr::var("x"), Expr::num(0.0)).is_one_literal());
    }

    #[test]
    fn sums_flatten() {
        let inner = Expr::sum(vec![Expr::var("a"), Expr::var("b")]);
        let outer = Expr::sum(vec![inner, Expr::var("c")]);
        match outer {
            Expr::Sum(ts) => assert_eq!(ts.len(), 3),
            other => panic!("expected flattened sum, got {other:?}"),
        }
    }

    #[test]
    fn equal_opposites_cancel() {
        let f = parse("exp(V)*f(U)").unwrap();
        let diff = f.clone() - f;
        assert!(diff.simplify().is_zero_literal(), "{diff:?}");
    }

    #[test]
    fn substitution_is_simultaneous() {
        // {x -> y, y -> x} swaps rather than chains.
        let e = parse("x + 2*y").unwrap();
        let mut b = BTreeMap::new();
        b.insert("x".to_string(), Expr::var("y"));
        b.insert("y".to_string(), Expr::var("x"));
        let s = e.substitute(&b);
        assert_eq!(s, parse("y + 2*x").unwrap().simplify());
    }

    #[test]
    fn substitute_manifold_cancels() {
        let f = parse("exp(V)*U^2").unwrap();
        let e = Expr::var("U_t") - f.clone();
        let mut b = BTreeMap::new();
        b.insert("U_t".to_string(), f);
        assert!(e.substitute(&b).is_zero_literal());
    }

    #[test]
    fn free_vars_and_funcs() {
        let e = parse("(U+alpha_s)^m * U_x + f''(U*V^3)").unwrap();
        let vars = e.free_vars();
        for v in ["U", "alpha_s", "m", "U_x", "V"] {
            assert!(vars.contains(v), "missing {v}");
        }
        assert!(e.func_names().contains("f"));
    }
}
