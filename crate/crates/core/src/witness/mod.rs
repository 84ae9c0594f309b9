//! Catalog of nonclassicality and entanglement witnesses.
//!
//! Every witness evaluates one or more moment-matrix determinants on a state
//! (or on a two-time correlation grid), compares the result with its
//! classical bound, and records the matrices, cross-checks and tolerances it
//! used in a [`WitnessVerdict`].

mod grid;
mod registry;
mod sweep;
mod table1;
mod table2;

pub use grid::{w_antibunching, w_hyperbunching, CorrelationGrid};
pub use registry::{
    catalog_operator_sets, evaluate, evaluate_grid, lookup, registry, CatalogSet, Params, Table, WitnessEntry,
    WitnessKind,
};
pub use sweep::{sweep, sweep_with, SweepParameter, SweepResult, SWEEP_GRID_POINTS, SWEEP_ITERATIONS};
pub use table1::{
    w_agarwal, w_csi, w_difference_squeezing, w_difference_squeezing_mm, w_lee, w_principal_squeezing,
    w_quadrature_squeezing, w_sub_poisson, w_sum_squeezing, w_sum_squeezing_mm, w_zoo, Sign, ZooVariant,
};
pub use table2::{w_decomposition, w_duan, w_hz, w_mancini, Decomposition, HzVariant};

use serde::Serialize;

use crate::algebra::PolyOperator;
use crate::error::{Error, Result};
use crate::fock::{FockState, C64};
use crate::moments::{
    build_gamma, build_normal, det_tolerance, positivity, MomentMatrix, OperatorSet, Ordering, Positivity,
};

/// Relative tolerance of dual-path and variance cross-checks.
pub const CHECK_TOL_REL: f64 = 1e-9;
/// Relative tolerance of the decomposition identities.
pub const DECOMPOSITION_TOL_REL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "classical-consistent")]
    ClassicalConsistent,
    #[serde(rename = "nonclassical")]
    Nonclassical,
    #[serde(rename = "entangled(NPT)")]
    Entangled,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::ClassicalConsistent => "classical-consistent",
            Verdict::Nonclassical => "nonclassical",
            Verdict::Entangled => "entangled(NPT)",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

/// Outcome of an equality asserted by a witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Provenance of one moment matrix used by a witness.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixRecord {
    pub name: String,
    pub ordering: Ordering,
    pub labels: Vec<String>,
    pub scale: f64,
    pub asymmetry: f64,
    pub determinant: f64,
    pub min_eigenvalue: f64,
    pub positivity: Positivity,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<C64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessVerdict {
    pub witness_id: String,
    pub determinants: Vec<NamedValue>,
    pub value: f64,
    pub threshold: f64,
    /// `threshold − value`; positive means the classical bound is violated.
    pub margin: f64,
    pub tol: f64,
    pub verdict: Verdict,
    pub flags: Vec<String>,
    pub notes: Vec<String>,
    pub checks: Vec<Check>,
    pub matrices: Vec<MatrixRecord>,
}

impl WitnessVerdict {
    pub fn determinant(&self, name: &str) -> Option<f64> {
        self.determinants.iter().find(|d| d.name == name).map(|d| d.value)
    }

    pub fn is_violation(&self) -> bool {
        self.verdict != Verdict::ClassicalConsistent
    }

    /// Margin normalized by the tolerance scale, for worst-case bookkeeping.
    pub fn relative_margin(&self) -> f64 {
        if self.tol > 0.0 {
            self.margin / self.tol
        } else {
            self.margin
        }
    }
}

/// Evaluation settings shared by all witnesses.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    /// Relative tolerance of the verdict: a value counts as negative below `−tol_rel·scale^N`.
    pub tol_rel: f64,
    pub embed_matrices: bool,
    /// Partial-transpose mode override for witnesses whose dual path does not depend on it.
    pub pt_mode: Option<usize>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tol_rel: crate::moments::DEFAULT_TOL_REL, embed_matrices: false, pt_mode: None }
    }
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) fn mono(factors: &[(usize, u32, u32)]) -> PolyOperator {
    PolyOperator::monomial(c(1.0), factors)
}

pub(crate) fn set(items: Vec<(&str, PolyOperator)>) -> Result<OperatorSet> {
    OperatorSet::new(items)
}

pub(crate) fn require_modes(state: &FockState, needed: usize, id: &str) -> Result<()> {
    if state.num_modes() < needed {
        return Err(Error::InvalidParameter(format!(
            "witness `{id}` needs at least {needed} modes, state has {}",
            state.num_modes()
        )));
    }
    Ok(())
}

/// Accumulates the records of one witness evaluation.
pub(crate) struct Builder<'a> {
    id: String,
    state: Option<&'a FockState>,
    opts: &'a EvalOptions,
    determinants: Vec<NamedValue>,
    checks: Vec<Check>,
    matrices: Vec<MatrixRecord>,
    notes: Vec<String>,
    flags: Vec<String>,
}

impl<'a> Builder<'a> {
    pub fn new(id: &str, state: Option<&'a FockState>, opts: &'a EvalOptions) -> Self {
        Self {
            id: id.to_string(),
            state,
            opts,
            determinants: Vec::new(),
            checks: Vec::new(),
            matrices: Vec::new(),
            notes: Vec::new(),
            flags: Vec::new(),
        }
    }

    fn state(&self) -> Result<&'a FockState> {
        self.state.ok_or_else(|| Error::InvalidParameter(format!("witness `{}` needs a state", self.id)))
    }

    pub fn expect(&self, op: &PolyOperator) -> Result<C64> {
        op.expect(self.state()?)
    }

    pub fn expect_real(&self, op: &PolyOperator) -> Result<f64> {
        Ok(self.expect(op)?.re)
    }

    /// Records a matrix; returns its determinant and scale.
    pub fn record(&mut self, name: &str, m: &MomentMatrix) -> (f64, f64) {
        let report = positivity(m, self.opts.tol_rel);
        self.matrices.push(MatrixRecord {
            name: name.to_string(),
            ordering: m.ordering().clone(),
            labels: m.labels().to_vec(),
            scale: m.scale(),
            asymmetry: m.asymmetry(),
            determinant: report.determinant,
            min_eigenvalue: report.min_eigenvalue,
            positivity: report.verdict,
            entries: self.opts.embed_matrices.then(|| m.rows()),
        });
        self.value(name, report.determinant);
        (report.determinant, m.scale())
    }

    pub fn normal(&mut self, name: &str, f: &OperatorSet) -> Result<Det> {
        let m = build_normal(f, self.state()?)?;
        let (det, scale) = self.record(name, &m);
        Ok(Det { value: det, scale, n: m.dim() })
    }

    pub fn gamma(&mut self, name: &str, f: &OperatorSet, pt: &[usize]) -> Result<Det> {
        let m = build_gamma(f, self.state()?, pt)?;
        let (det, scale) = self.record(name, &m);
        Ok(Det { value: det, scale, n: m.dim() })
    }

    pub fn value(&mut self, name: &str, value: f64) {
        self.determinants.push(NamedValue { name: name.to_string(), value });
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn flag(&mut self, flag: &str) {
        self.flags.push(flag.to_string());
    }

    /// Records an equality and fails if it does not hold within `tol`.
    pub fn check(&mut self, name: &str, lhs: f64, rhs: f64, tol: f64) -> Result<()> {
        let passed = (lhs - rhs).abs() <= tol;
        self.checks.push(Check { name: name.to_string(), lhs, rhs, tol, passed });
        if passed {
            Ok(())
        } else {
            Err(Error::IdentityViolation { name: format!("{}: {name}", self.id), lhs, rhs, tol })
        }
    }

    /// Records a boolean property as a check with `lhs = 1` when it holds.
    pub fn check_holds(&mut self, name: &str, holds: bool) -> Result<()> {
        self.check(name, if holds { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    /// Completes the record; `violation` is the label used when `value < threshold − tol`.
    pub fn finish(self, value: f64, threshold: f64, tol: f64, violation: Verdict) -> WitnessVerdict {
        let margin = threshold - value;
        let verdict = if margin > tol { violation } else { Verdict::ClassicalConsistent };
        WitnessVerdict {
            witness_id: self.id,
            determinants: self.determinants,
            value,
            threshold,
            margin,
            tol,
            verdict,
            flags: self.flags,
            notes: self.notes,
            checks: self.checks,
            matrices: self.matrices,
        }
    }
}

/// Determinant with the scale of its matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Det {
    pub value: f64,
    pub scale: f64,
    pub n: usize,
}

impl Det {
    pub fn tol(&self, tol_rel: f64) -> f64 {
        det_tolerance(tol_rel, self.scale, self.n)
    }
}

/// Shared tolerance for quantities built from several determinants.
pub(crate) fn joint_tol(tol_rel: f64, dets: &[Det]) -> f64 {
    dets.iter().map(|d| d.tol(tol_rel)).fold(0.0, f64::max)
}

/// `⟨1⟩⟨V²⟩ − ⟨V⟩²` and `⟨1⟩`: the plain-order counterpart of `d(1, V)`, equal to the
/// variance of `V` when the state is normalized.
pub(crate) fn plain_variance(b: &Builder<'_>, v: &PolyOperator) -> Result<(f64, f64)> {
    let norm = b.expect_real(&PolyOperator::identity())?;
    let mean = b.expect_real(v)?;
    Ok((norm * b.expect_real(&v.product(v))? - mean * mean, norm))
}
