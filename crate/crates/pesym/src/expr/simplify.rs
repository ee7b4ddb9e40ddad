//! Lightweight structural simplification: constant folding, 0/1 identities,
//! flattening of n-ary sums/products and cancellation of syntactically equal
//! terms of opposite sign. Deliberately not a canonicaliser; zero testing is
//! numeric (see `numeric`).

use super::{Expr, FuncApp, UnaryFn};

pub fn simplify(e: &Expr) -> Expr {
    match e {
        Expr::Num(_) | Expr::Var(_) => e.clone(),
        Expr::Sum(ts) => make_sum(ts.iter().map(simplify).collect()),
        Expr::Prod(ts) => make_prod(ts.iter().map(simplify).collect()),
        Expr::Pow(a, b) => make_pow(simplify(a), simplify(b)),
        Expr::Neg(a) => make_neg(simplify(a)),
        Expr::Quot(a, b) => make_quot(simplify(a), simplify(b)),
        Expr::Unary(f, a) => make_unary(*f, simplify(a)),
        Expr::Func(f) => Expr::Func(FuncApp {
            name: f.name.clone(),
            order: f.order,
            arg: Box::new(simplify(&f.arg)),
        }),
    }
}

pub fn make_sum(terms: Vec<Expr>) -> Expr {
    let mut flat: Vec<Expr> = Vec::with_capacity(terms.len());
    let mut constant = 0.0;
    for t in terms {
        match t {
            Expr::Sum(inner) => {
                for u in inner {
                    match u {
                        Expr::Num(v) => constant += v,
                        other => flat.push(other),
                    }
                }
            }
            Expr::Num(v) => constant += v,
            Expr::Neg(inner) if matches!(*inner, Expr::Num(_)) => {
                if let Expr::Num(v) = *inner {
                    constant -= v;
                }
            }
            other => flat.push(other),
        }
    }
    cancel_opposites(&mut flat);
    if constant != 0.0 {
        flat.insert(0, Expr::Num(constant));
    }
    match flat.len() {
        0 => Expr::Num(0.0),
        1 => flat.pop().unwrap(),
        _ => Expr::Sum(flat),
    }
}

/// Remove pairs (e, -e) with structurally equal e.
fn cancel_opposites(terms: &mut Vec<Expr>) {
    let mut i = 0;
    while i < terms.len() {
        let mut cancelled = false;
        for j in (i + 1)..terms.len() {
            let opposite = match (&terms[i], &terms[j]) {
                (Expr::Neg(a), b) => a.as_ref() == b,
                (a, Expr::Neg(b)) => a == b.as_ref(),
                _ => false,
            };
            if opposite {
                terms.remove(j);
                terms.remove(i);
                cancelled = true;
                break;
            }
        }
        if !cancelled {
            i += 1;
        }
    }
}

pub fn make_prod(factors: Vec<Expr>) -> Expr {
    let mut flat: Vec<Expr> = Vec::with_capacity(factors.len());
    let mut constant = 1.0;
    let mut negate = false;
    for f in factors {
        match f {
            Expr::Prod(inner) => {
                for u in inner {
                    match u {
                        Expr::Num(v) => constant *= v,
                        Expr::Neg(inner2) => {
                            negate = !negate;
                            if let Expr::Num(v) = *inner2 {
                                constant *= v;
                            } else {
                                flat.push(*inner2);
                            }
                        }
                        other => flat.push(other),
                    }
                }
            }
            Expr::Num(v) => constant *= v,
            Expr::Neg(inner) => {
                negate = !negate;
                if let Expr::Num(v) = *inner {
                    constant *= v;
                } else {
                    flat.push(*inner);
                }
            }
            other => flat.push(other),
        }
    }
    if constant == 0.0 {
        return Expr::Num(0.0);
    }
    if negate {
        constant = -constant;
    }
    if constant != 1.0 {
        flat.insert(0, Expr::Num(constant));
    }
    match flat.len() {
        0 => Expr::Num(1.0),
        1 => flat.pop().unwrap(),
        _ => Expr::Prod(flat),
    }
}

pub fn make_pow(base: Expr, exponent: Expr) -> Expr {
    if exponent.is_zero_literal() {
        return Expr::Num(1.0);
    }
    if exponent.is_one_literal() {
        return base;
    }
    if base.is_one_literal() {
        return Expr::Num(1.0);
    }
    if base.is_zero_literal() {
        if let Expr::Num(e) = exponent {
            if e > 0.0 {
                return Expr::Num(0.0);
            }
        }
    }
    if let (Expr::Num(b), Expr::Num(e)) = (&base, &exponent) {
        let v = b.powf(*e);
        if v.is_finite() {
            return Expr::Num(v);
        }
    }
    Expr::Pow(Box::new(base), Box::new(exponent))
}

pub fn make_neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub fn make_quot(num: Expr, den: Expr) -> Expr {
    if num.is_zero_literal() {
        return Expr::Num(0.0);
    }
    if den.is_one_literal() {
        return num;
    }
    if let (Expr::Num(a), Expr::Num(b)) = (&num, &den) {
        if *b != 0.0 {
            return Expr::Num(a / b);
        }
    }
    Expr::Quot(Box::new(num), Box::new(den))
}

pub fn make_unary(f: UnaryFn, arg: Expr) -> Expr {
    if let Expr::Num(v) = arg {
        let out = match f {
            UnaryFn::Exp => v.exp(),
            UnaryFn::Ln => v.ln(),
            UnaryFn::Sin => v.sin(),
            UnaryFn::Cos => v.cos(),
            UnaryFn::Tan => v.tan(),
            UnaryFn::Sqrt => v.sqrt(),
        };
        if out.is_finite() {
            return Expr::Num(out);
        }
    }
    Expr::Unary(f, Box::new(arg))
}
