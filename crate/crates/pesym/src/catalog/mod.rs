//! The symmetry catalog: classification entries (tables 1-2, systems with
//! non-trivial invariance algebras) and reduction entries (tables 3-4,
//! systems mapped onto canonical cases by form-preserving transformations).
//!
//! Entries are data, shipped as TOML files; the code contains no hard-wired
//! table rows. See `catalog/README.md` in the repository for the schema.

mod instantiate;
pub mod reduce;
pub mod verify;

pub use instantiate::{
    instantiate, sample_param_values, FamilyKind, Instantiation, InstantiationError,
};

use crate::expr::{parse, Expr, ParseError};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed catalog file {path}: {source}")]
    Toml {
        path: PathBuf,
        source: toml::de::Error,
    },
    #[error("bad expression in {path} ({field}): {source}")]
    Expr {
        path: PathBuf,
        field: String,
        source: ParseError,
    },
    #[error("catalog entry {path} violates an invariant: {message}")]
    Invariant { path: PathBuf, message: String },
    #[error("no catalog entry for table {table} case {case}")]
    MissingEntry { table: u32, case: u32 },
}

/// One infinitesimal generator template, components in the shared grammar.
#[derive(Debug, Clone, Deserialize)]
pub struct GenSpec {
    pub xi0: String,
    pub xi1: String,
    pub eta1: String,
    pub eta2: String,
    /// Optional label shown in reports.
    #[serde(default)]
    pub note: String,
}

/// Declaration of a function family appearing in generator templates.
///
/// * `time` – unary symbol applied to t (phi, psi); instantiated with
///   t, t^2 and exp(t).
/// * `helmholtz` – variable standing for a solution h(t, x) of
///   h_xx + coeff * h = 0.
/// * `helmholtz_particular` – variable standing for a solution h0(t, x) of
///   h0_xx + coeff * h0 + 1 = 0.
#[derive(Debug, Clone, Deserialize)]
pub struct FamilySpec {
    pub symbol: String,
    pub kind: String,
    #[serde(default)]
    pub coeff: String,
    /// Component from which the family parameter is recovered when checking
    /// commutator closure ("xi0" / "eta2"), with its divisor expression.
    #[serde(default)]
    pub pivot_component: String,
    #[serde(default)]
    pub pivot_divisor: String,
}

/// A classification entry: system template plus its basic invariance
/// operators, a perturbed negative control, and optional variant operators
/// recorded as failing transcriptions.
#[derive(Debug, Clone, Deserialize)]
pub struct ClassEntrySpec {
    pub table: u32,
    pub case: u32,
    pub d: String,
    pub f: String,
    pub g: String,
    #[serde(default)]
    pub params: Vec<String>,
    /// Expressions in the parameters that must stay bounded away from zero
    /// when sampling instantiations.
    #[serde(default)]
    pub nonzero: Vec<String>,
    /// Arbitrary unary function symbols bound to random stand-ins.
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub families: Vec<FamilySpec>,
    pub generators: Vec<GenSpec>,
    pub negative: GenSpec,
    #[serde(default)]
    pub rejected: Vec<GenSpec>,
    #[serde(default)]
    pub notes: String,
}

/// One sub-branch of a reduction entry: parameter bindings, the printed
/// change of variables, and the canonical target case.
#[derive(Debug, Clone, Deserialize)]
pub struct BranchSpec {
    #[serde(default)]
    pub name: String,
    /// Parameter fixings for this branch (expressions in the other params).
    #[serde(default)]
    pub bind: BTreeMap<String, String>,
    /// Branch-specific sampling constraints.
    #[serde(default)]
    pub nonzero: Vec<String>,
    /// Old variables in terms of new: U = u_coeff * u + u_shift etc.,
    /// with u_coeff/u_shift expressions in (tau, y).
    #[serde(default = "one_string")]
    pub u_coeff: String,
    #[serde(default = "zero_string")]
    pub u_shift: String,
    #[serde(default = "one_string")]
    pub v_coeff: String,
    #[serde(default = "zero_string")]
    pub v_shift: String,
    /// x as a function of y, t as a function of tau.
    #[serde(default = "y_string")]
    pub x_of_y: String,
    #[serde(default = "tau_string")]
    pub t_of_tau: String,
    pub target_table: u32,
    pub target_case: u32,
    /// Substitutions applied to the target template parameters
    /// (e.g. gamma = "k").
    #[serde(default)]
    pub target_bind: BTreeMap<String, String>,
}

fn one_string() -> String {
    "1".into()
}
fn zero_string() -> String {
    "0".into()
}
fn y_string() -> String {
    "y".into()
}
fn tau_string() -> String {
    "tau".into()
}

/// A reduction entry: source system template (written in the same U/V
/// grammar, read as functions of the new variables) plus one or more
/// branches mapping it onto classification cases.
#[derive(Debug, Clone, Deserialize)]
pub struct ReductionEntrySpec {
    pub table: u32,
    pub case: u32,
    pub d: String,
    pub f: String,
    pub g: String,
    #[serde(default)]
    pub params: Vec<String>,
    #[serde(default)]
    pub nonzero: Vec<String>,
    #[serde(default)]
    pub functions: Vec<String>,
    /// Sampling windows for the new coordinates, e.g. y = [0.2, 1.2].
    #[serde(default)]
    pub domain: BTreeMap<String, [f64; 2]>,
    pub branches: Vec<BranchSpec>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone)]
pub struct Catalog {
    pub classification: Vec<ClassEntrySpec>,
    pub reductions: Vec<ReductionEntrySpec>,
    /// Absolute paths of every file loaded, for manifest digests.
    pub sources: Vec<PathBuf>,
}

impl Catalog {
    /// Load every entry below `root`: classification entries from
    /// `table1/` and `table2/`, reductions from `table3/` and `table4/`.
    pub fn load(root: &Path) -> Result<Catalog, CatalogError> {
        let mut classification = Vec::new();
        let mut reductions = Vec::new();
        let mut sources = Vec::new();
        for sub in ["table1", "table2"] {
            for path in sorted_toml_files(&root.join(sub))? {
                let entry: ClassEntrySpec = read_toml(&path)?;
                validate_class_entry(&entry, &path)?;
                sources.push(path);
                classification.push(entry);
            }
        }
        for sub in ["table3", "table4"] {
            for path in sorted_toml_files(&root.join(sub))? {
                let entry: ReductionEntrySpec = read_toml(&path)?;
                validate_reduction_entry(&entry, &path)?;
                sources.push(path);
                reductions.push(entry);
            }
        }
        classification.sort_by_key(|e| (e.table, e.case));
        reductions.sort_by_key(|e| (e.table, e.case));
        Ok(Catalog {
            classification,
            reductions,
            sources,
        })
    }

    pub fn class_entry(&self, table: u32, case: u32) -> Result<&ClassEntrySpec, CatalogError> {
        self.classification
            .iter()
            .find(|e| e.table == table && e.case == case)
            .ok_or(CatalogError::MissingEntry { table, case })
    }

    pub fn reduction_entry(
        &self,
        table: u32,
        case: u32,
    ) -> Result<&ReductionEntrySpec, CatalogError> {
        self.reductions
            .iter()
            .find(|e| e.table == table && e.case == case)
            .ok_or(CatalogError::MissingEntry { table, case })
    }
}

fn sorted_toml_files(dir: &Path) -> Result<Vec<PathBuf>, CatalogError> {
    let rd = std::fs::read_dir(dir).map_err(|source| CatalogError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = rd
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "toml").unwrap_or(false))
        .collect();
    files.sort();
    Ok(files)
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CatalogError> {
    let text = std::fs::read_to_string(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|source| CatalogError::Toml {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_field(src: &str, field: &str, path: &Path) -> Result<Expr, CatalogError> {
    parse(src).map_err(|source| CatalogError::Expr {
        path: path.to_path_buf(),
        field: field.to_string(),
        source,
    })
}

fn validate_class_entry(entry: &ClassEntrySpec, path: &Path) -> Result<(), CatalogError> {
    for (field, src) in [("d", &entry.d), ("f", &entry.f), ("g", &entry.g)] {
        parse_field(src, field, path)?;
    }
    for (i, g) in entry.generators.iter().enumerate() {
        for (comp, src) in [
            ("xi0", &g.xi0),
            ("xi1", &g.xi1),
            ("eta1", &g.eta1),
            ("eta2", &g.eta2),
        ] {
            parse_field(src, &format!("generators[{i}].{comp}"), path)?;
        }
    }
    if entry.generators.len() < 3 {
        return Err(CatalogError::Invariant {
            path: path.to_path_buf(),
            message: format!(
                "non-trivial entries list at least 3 operators, found {}",
                entry.generators.len()
            ),
        });
    }
    for fam in &entry.families {
        if !matches!(
            fam.kind.as_str(),
            "time" | "helmholtz" | "helmholtz_particular"
        ) {
            return Err(CatalogError::Invariant {
                path: path.to_path_buf(),
                message: format!("unknown family kind {:?}", fam.kind),
            });
        }
    }
    Ok(())
}

fn validate_reduction_entry(entry: &ReductionEntrySpec, path: &Path) -> Result<(), CatalogError> {
    for (field, src) in [("d", &entry.d), ("f", &entry.f), ("g", &entry.g)] {
        parse_field(src, field, path)?;
    }
    if entry.branches.is_empty() {
        return Err(CatalogError::Invariant {
            path: path.to_path_buf(),
            message: "reduction entry needs at least one branch".to_string(),
        });
    }
    for (i, b) in entry.branches.iter().enumerate() {
        for (field, src) in [
            ("u_coeff", &b.u_coeff),
            ("u_shift", &b.u_shift),
            ("v_coeff", &b.v_coeff),
            ("v_shift", &b.v_shift),
            ("x_of_y", &b.x_of_y),
            ("t_of_tau", &b.t_of_tau),
        ] {
            parse_field(src, &format!("branches[{i}].{field}"), path)?;
        }
    }
    Ok(())
}
