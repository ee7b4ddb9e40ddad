//! Precedence-aware printing. `parse(print(e))` evaluates identically to
//! `e`; structural identity holds up to flattening and constant folding.

use super::{Expr, FuncApp};
use std::fmt;

// Precedence levels, loosest to tightest.
const P_SUM: u8 = 0;
const P_TERM: u8 = 1;
const P_NEG: u8 = 2;
const P_POW: u8 = 3;
const P_ATOM: u8 = 4;

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::Sum(_) => P_SUM,
        Expr::Prod(_) | Expr::Quot(_, _) => P_TERM,
        Expr::Neg(_) => P_NEG,
        Expr::Pow(_, _) => P_POW,
        Expr::Num(v) if *v < 0.0 => P_NEG,
        Expr::Num(_) | Expr::Var(_) | Expr::Unary(_, _) | Expr::Func(_) => P_ATOM,
    }
}

fn write_at(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "(")?;
        write_expr(f, e)?;
        write!(f, ")")
    } else {
        write_expr(f, e)
    }
}

fn write_expr(f: &mut fmt::Formatter<'_>, e: &Expr) -> fmt::Result {
    match e {
        Expr::Num(v) => write!(f, "{v}"),
        Expr::Var(n) => write!(f, "{n}"),
        Expr::Sum(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i == 0 {
                    write_at(f, t, P_TERM.min(precedence(t)))?;
                    continue;
                }
                match t {
                    Expr::Neg(inner) => {
                        write!(f, " - ")?;
                        write_at(f, inner, P_TERM)?;
                    }
                    Expr::Num(v) if *v < 0.0 => {
                        write!(f, " - {}", -v)?;
                    }
                    other => {
                        write!(f, " + ")?;
                        write_at(f, other, P_TERM)?;
                    }
                }
            }
            Ok(())
        }
        Expr::Prod(ts) => {
            for (i, t) in ts.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_at(f, t, P_NEG)?;
            }
            Ok(())
        }
        Expr::Quot(a, b) => {
            write_at(f, a, P_TERM)?;
            write!(f, "/")?;
            // Right side binds tighter: a/(b*c) needs parens.
            write_at(f, b, P_NEG + 1)
        }
        Expr::Neg(a) => {
            write!(f, "-")?;
            write_at(f, a, P_NEG)
        }
        Expr::Pow(a, b) => {
            write_at(f, a, P_ATOM)?;
            write!(f, "^")?;
            write_at(f, b, P_ATOM)
        }
        Expr::Unary(func, a) => {
            write!(f, "{}(", func.name())?;
            write_expr(f, a)?;
            write!(f, ")")
        }
        Expr::Func(FuncApp { name, order, arg }) => {
            write!(f, "{name}")?;
            for _ in 0..*order {
                write!(f, "'")?;
            }
            write!(f, "(")?;
            write_expr(f, arg)?;
            write!(f, ")")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}
