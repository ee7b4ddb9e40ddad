//! Random constraint-satisfying instantiation of catalog entries: numeric
//! parameter values, closed-form instances for function families, and
//! stand-in bindings for arbitrary function symbols.

use super::{ClassEntrySpec, FamilySpec, GenSpec};
use crate::expr::{parse, pdiff, Expr, FuncBindings, StandIn, UnaryFn};
use crate::jet::JetContext;
use crate::lie::{Generator, LieError, PESystem};
use rand::Rng;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstantiationError {
    #[error("could not satisfy the nonzero constraints after {0} attempts")]
    ConstraintSampling(usize),
    #[error("expression error in catalog entry: {0}")]
    Parse(#[from] crate::expr::ParseError),
    #[error("instantiated template is not a valid system/generator: {0}")]
    Lie(#[from] LieError),
    #[error("family coefficient {0} is not a catalog parameter")]
    MissingFamilyCoeff(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Time,
    Helmholtz,
    HelmholtzParticular,
}

impl FamilyKind {
    fn from_spec(kind: &str) -> FamilyKind {
        match kind {
            "time" => FamilyKind::Time,
            "helmholtz" => FamilyKind::Helmholtz,
            _ => FamilyKind::HelmholtzParticular,
        }
    }
}

/// A concrete generator produced from a template, with a label describing
/// the family instance it came from (empty for plain generators).
#[derive(Debug, Clone)]
pub struct ConcreteGenerator {
    pub template_index: usize,
    pub instance: String,
    pub generator: Generator,
}

/// A fully concrete instantiation of a classification entry.
#[derive(Debug, Clone)]
pub struct Instantiation {
    pub params: BTreeMap<String, f64>,
    pub system: PESystem,
    pub listed: Vec<ConcreteGenerator>,
    pub negative: Vec<ConcreteGenerator>,
    pub rejected: Vec<ConcreteGenerator>,
    /// Stand-in binding sets for the arbitrary function symbols.
    pub standin_sets: Vec<FuncBindings>,
    /// Family parameter instances used for commutator-closure checks,
    /// keyed by family symbol.
    pub family_instances: BTreeMap<String, Vec<(String, Expr)>>,
}

impl Instantiation {
    pub fn context(&self, set: usize) -> JetContext {
        JetContext {
            funcs: self.standin_sets[set].clone(),
            ranges: BTreeMap::new(),
        }
    }
}

/// Values parameters are drawn from; small half-integers keep powers like
/// U^(k-1) well-conditioned on the sampling box.
const PARAM_POOL: [f64; 8] = [-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0];

/// Draw values for `params` until every `nonzero` expression is bounded
/// away from zero.
pub fn sample_param_values(
    params: &[String],
    nonzero: &[String],
    rng: &mut impl Rng,
) -> Result<BTreeMap<String, f64>, InstantiationError> {
    sample_constrained(params, nonzero, rng, None)
}

fn sample_constrained(
    names: &[String],
    nonzero: &[String],
    rng: &mut impl Rng,
    cycled: Option<(&str, i64)>,
) -> Result<BTreeMap<String, f64>, InstantiationError> {
    let nonzero: Vec<Expr> = nonzero.iter().map(|s| parse(s)).collect::<Result<_, _>>()?;
    const ATTEMPTS: usize = 500;
    for _ in 0..ATTEMPTS {
        let mut params = BTreeMap::new();
        for p in names {
            let v = PARAM_POOL[rng.gen_range(0..PARAM_POOL.len())];
            params.insert(p.clone(), v);
        }
        if let Some((coeff, phase)) = cycled {
            if params.contains_key(coeff) {
                let mag = 0.5 + rng.gen_range(0..3) as f64 * 0.5;
                let v = match phase {
                    0 => mag,
                    1 => -mag,
                    _ => 0.0,
                };
                params.insert(coeff.to_string(), v);
            }
        }
        let ok = nonzero.iter().all(|c| {
            let env = |n: &str| params.get(n).copied();
            matches!(crate::expr::eval(c, &env, &FuncBindings::new()), Ok(v) if v.abs() >= 0.25)
        });
        if ok {
            return Ok(params);
        }
    }
    Err(InstantiationError::ConstraintSampling(ATTEMPTS))
}

pub fn sample_params(
    entry: &ClassEntrySpec,
    rng: &mut impl Rng,
    instantiation_index: usize,
) -> Result<BTreeMap<String, f64>, InstantiationError> {
    // Cycle the sign of a Helmholtz-family coefficient so the oscillatory,
    // exponential and affine closed forms are all exercised.
    let cycled: Option<(&str, i64)> = entry
        .families
        .iter()
        .find(|f| f.kind != "time" && !f.coeff.is_empty())
        .map(|f| (f.coeff.as_str(), instantiation_index as i64 % 3));
    sample_constrained(&entry.params, &entry.nonzero, rng, cycled)
}

fn numeric_bindings(params: &BTreeMap<String, f64>) -> BTreeMap<String, Expr> {
    params
        .iter()
        .map(|(k, v)| (k.clone(), Expr::num(*v)))
        .collect()
}

/// Closed-form instances for a `time` family symbol: (label, expr in t).
fn time_instances() -> Vec<(String, Expr)> {
    vec![
        ("t".to_string(), Expr::var("t")),
        ("t^2".to_string(), Expr::pow(Expr::var("t"), Expr::num(2.0))),
        ("exp(t)".to_string(), Expr::exp(Expr::var("t"))),
    ]
}

/// Closed-form solutions of h_xx + a2 h = 0: oscillatory, exponential or
/// affine depending on the sign of a2. `t_weight` multiplies the first
/// coefficient by t, exercising the arbitrary time dependence.
fn helmholtz_solution(a2: f64, c1: f64, c2: f64, t_weight: bool) -> Expr {
    let x = Expr::var("x");
    let c1e = if t_weight {
        Expr::num(c1) * Expr::var("t")
    } else {
        Expr::num(c1)
    };
    let h = if a2 > 0.0 {
        let s = a2.sqrt();
        c1e * Expr::unary(UnaryFn::Sin, Expr::num(s) * x.clone())
            + Expr::num(c2) * Expr::unary(UnaryFn::Cos, Expr::num(s) * x)
    } else if a2 < 0.0 {
        let s = (-a2).sqrt();
        c1e * Expr::exp(Expr::num(s) * x.clone()) + Expr::num(c2) * Expr::exp(Expr::num(-s) * x)
    } else {
        c1e * x + Expr::num(c2)
    };
    h.simplify()
}

/// Particular-plus-homogeneous solution of h0_xx + a2 h0 + 1 = 0.
fn helmholtz_particular_solution(a2: f64, c1: f64, c2: f64, t_weight: bool) -> Expr {
    let hom = helmholtz_solution(a2, c1, c2, t_weight);
    let part = if a2 != 0.0 {
        Expr::num(-1.0 / a2)
    } else {
        Expr::num(-0.5) * Expr::pow(Expr::var("x"), Expr::num(2.0))
    };
    (part + hom).simplify()
}

/// Instances for one family symbol under the sampled parameters.
fn family_instances(
    fam: &FamilySpec,
    params: &BTreeMap<String, f64>,
    rng: &mut impl Rng,
) -> Result<Vec<(String, Expr)>, InstantiationError> {
    match FamilyKind::from_spec(&fam.kind) {
        FamilyKind::Time => Ok(time_instances()),
        kind => {
            let a2 = if fam.coeff.is_empty() {
                0.0
            } else {
                let coeff_expr = parse(&fam.coeff)?;
                let env = |n: &str| params.get(n).copied();
                crate::expr::eval(&coeff_expr, &env, &FuncBindings::new())
                    .map_err(|_| InstantiationError::MissingFamilyCoeff(fam.coeff.clone()))?
            };
            let c1 = 0.4 + rng.gen_range(0.0..1.2);
            let c2 = 0.4 + rng.gen_range(0.0..1.2);
            let build = |t_weight: bool| match kind {
                FamilyKind::Helmholtz => helmholtz_solution(a2, c1, c2, t_weight),
                _ => helmholtz_particular_solution(a2, c1, c2, t_weight),
            };
            Ok(vec![
                ("const coefficients".to_string(), build(false)),
                ("t-weighted coefficient".to_string(), build(true)),
            ])
        }
    }
}

/// Substitute one family instance into a template expression. Time families
/// are function symbols (phi(t), phi'(t), ...); Helmholtz families are plain
/// variables (H, H0).
fn apply_family(e: &Expr, fam: &FamilySpec, instance: &Expr) -> Expr {
    match FamilyKind::from_spec(&fam.kind) {
        FamilyKind::Time => e.substitute_func(&fam.symbol, &|order, arg| {
            let mut d = instance.clone();
            for _ in 0..order {
                d = pdiff(&d, "t").simplify();
            }
            d.substitute(&[("t".to_string(), arg.clone())].into())
        }),
        _ => e.substitute(&[(fam.symbol.clone(), instance.clone())].into()),
    }
}

fn gen_exprs(spec: &GenSpec) -> Result<[Expr; 4], InstantiationError> {
    Ok([
        parse(&spec.xi0)?,
        parse(&spec.xi1)?,
        parse(&spec.eta1)?,
        parse(&spec.eta2)?,
    ])
}

/// Expand a generator template into concrete generators: substitute numeric
/// parameters, then each instance of each family symbol it references.
fn expand_generator(
    index: usize,
    spec: &GenSpec,
    entry: &ClassEntrySpec,
    params: &BTreeMap<String, f64>,
    instances: &BTreeMap<String, Vec<(String, Expr)>>,
) -> Result<Vec<ConcreteGenerator>, InstantiationError> {
    let bindings = numeric_bindings(params);
    let comps = gen_exprs(spec)?.map(|e| e.substitute(&bindings));
    let mut referenced: Vec<&FamilySpec> = Vec::new();
    for fam in &entry.families {
        let uses = match FamilyKind::from_spec(&fam.kind) {
            FamilyKind::Time => comps.iter().any(|c| c.func_names().contains(&fam.symbol)),
            _ => comps.iter().any(|c| c.free_vars().contains(&fam.symbol)),
        };
        if uses {
            referenced.push(fam);
        }
    }
    // Cartesian expansion over the referenced families (templates reference
    // at most one in practice).
    let mut variants: Vec<(String, [Expr; 4])> = vec![(String::new(), comps)];
    for fam in referenced {
        let mut next = Vec::new();
        for (label, comps) in &variants {
            for (ilabel, inst) in &instances[&fam.symbol] {
                let mapped = comps.clone().map(|c| apply_family(&c, fam, inst));
                let combined = if label.is_empty() {
                    format!("{}={}", fam.symbol, ilabel)
                } else {
                    format!("{label}, {}={}", fam.symbol, ilabel)
                };
                next.push((combined, mapped));
            }
        }
        variants = next;
    }
    variants
        .into_iter()
        .map(|(label, [xi0, xi1, eta1, eta2])| {
            Ok(ConcreteGenerator {
                template_index: index,
                instance: label,
                generator: Generator::new(xi0, xi1, eta1, eta2)?,
            })
        })
        .collect()
}

/// Build a full instantiation of a classification entry. Deterministic for
/// a given rng state.
pub fn instantiate(
    entry: &ClassEntrySpec,
    rng: &mut impl Rng,
    instantiation_index: usize,
    standin_sets: usize,
) -> Result<Instantiation, InstantiationError> {
    let params = sample_params(entry, rng, instantiation_index)?;
    let bindings = numeric_bindings(&params);
    let d = parse(&entry.d)?.substitute(&bindings);
    let f = parse(&entry.f)?.substitute(&bindings);
    let g = parse(&entry.g)?.substitute(&bindings);
    let system = PESystem::new(d.clone(), f, g)?;

    let mut family_map = BTreeMap::new();
    for fam in &entry.families {
        family_map.insert(fam.symbol.clone(), family_instances(fam, &params, rng)?);
    }

    let mut listed = Vec::new();
    for (i, spec) in entry.generators.iter().enumerate() {
        listed.extend(expand_generator(i, spec, entry, &params, &family_map)?);
    }
    let negative = expand_generator(usize::MAX, &entry.negative, entry, &params, &family_map)?;
    let mut rejected = Vec::new();
    for (i, spec) in entry.rejected.iter().enumerate() {
        rejected.extend(expand_generator(i, spec, entry, &params, &family_map)?);
    }

    // Function symbols appearing inside the diffusivity must stay bounded
    // away from zero with nonvanishing slope; the rest are unconstrained.
    let d_funcs = d.func_names();
    let mut sets = Vec::with_capacity(standin_sets);
    for _ in 0..standin_sets {
        let mut bindings = FuncBindings::new();
        for name in &entry.functions {
            let standin = if d_funcs.contains(name) {
                StandIn::random_diffusivity(rng)
            } else {
                StandIn::random(rng)
            };
            bindings.insert(name.clone(), standin);
        }
        sets.push(bindings);
    }

    Ok(Instantiation {
        params,
        system,
        listed,
        negative,
        rejected,
        standin_sets: sets,
        family_instances: family_map,
    })
}
