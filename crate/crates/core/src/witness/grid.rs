//! Two-time intensity-correlation witnesses evaluated on sampled grids.

use serde::{Deserialize, Serialize};

use super::{Builder, Det, EvalOptions, Verdict, WitnessVerdict, CHECK_TOL_REL};
use crate::error::{Error, Result};
use crate::fock::C64;
use crate::moments::{MomentMatrix, Ordering};

/// Samples of `G²(t, t+τ)` on a rectangular `(t, τ)` grid, optionally with `G¹(t)`.
///
/// Row `i` of `g2` holds `G²(times[i], times[i] + taus[k])` for every `k`.
/// Stationary grids depend on `τ` only and use the first row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationGrid {
    pub times: Vec<f64>,
    pub taus: Vec<f64>,
    pub g2: Vec<Vec<f64>>,
    #[serde(default)]
    pub g1: Option<Vec<f64>>,
    #[serde(default)]
    pub stationary: bool,
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn position(list: &[f64], x: f64) -> Option<usize> {
    list.iter().position(|&v| same(v, x))
}

impl CorrelationGrid {
    pub fn validate(&self) -> Result<()> {
        if self.times.is_empty() || self.taus.is_empty() {
            return Err(Error::Grid("grid needs at least one time and one delay".into()));
        }
        if self.g2.len() != self.times.len() {
            return Err(Error::Grid(format!("{} g2 rows for {} times", self.g2.len(), self.times.len())));
        }
        for (i, row) in self.g2.iter().enumerate() {
            if row.len() != self.taus.len() {
                return Err(Error::Grid(format!("g2 row {i} has {} entries for {} delays", row.len(), self.taus.len())));
            }
            if let Some(k) = row.iter().position(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Grid(format!("g2[{i}][{k}] must be finite and non-negative")));
            }
        }
        if let Some(g1) = &self.g1 {
            if g1.len() != self.times.len() {
                return Err(Error::Grid(format!("{} g1 entries for {} times", g1.len(), self.times.len())));
            }
            if g1.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Grid("g1 entries must be finite and non-negative".into()));
            }
        }
        if self.times.iter().chain(&self.taus).any(|v| !v.is_finite()) {
            return Err(Error::Grid("times and delays must be finite".into()));
        }
        Ok(())
    }

    fn row(&self, t: f64) -> Result<usize> {
        if self.stationary {
            return Ok(0);
        }
        position(&self.times, t).ok_or_else(|| Error::Grid(format!("no sample at t = {t}")))
    }

    /// `G²(t, t+τ)`, exact sample match required.
    pub fn g2_at(&self, t: f64, tau: f64) -> Result<f64> {
        let i = self.row(t)?;
        let k = position(&self.taus, tau).ok_or_else(|| Error::Grid(format!("no sample at (t, tau) = ({t}, {tau})")))?;
        Ok(self.g2[i][k])
    }

    /// `G¹(t)`.
    pub fn g1_at(&self, t: f64) -> Result<f64> {
        let g1 = self.g1.as_ref().ok_or_else(|| Error::Grid("grid has no g1 samples".into()))?;
        Ok(g1[self.row(t)?])
    }

    /// `[G²(t,t), G²(t,t+τ), G²(t+τ,t+τ)]`.
    fn triple(&self, t: f64, tau: f64) -> Result<[f64; 3]> {
        let needed = [(t, 0.0), (t, tau), (t + tau, 0.0)];
        let mut out = [0.0; 3];
        for (slot, (tt, dt)) in out.iter_mut().zip(needed) {
            *slot = self.g2_at(tt, dt).map_err(|_| Error::Grid(format!("missing sample (t, tau) = ({tt}, {dt})")))?;
        }
        Ok(out)
    }
}

fn record(b: &mut Builder<'_>, name: &str, labels: &[&str], rows: &[&[f64]]) -> Result<Det> {
    let n = rows.len();
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| C64::new(rows[i][j], 0.0));
    let mm = MomentMatrix::from_entries(m, Ordering::Normal, labels.iter().map(|s| s.to_string()).collect())?;
    let (value, scale) = b.record(name, &mm);
    Ok(Det { value, scale, n })
}

fn check_args(grid: &CorrelationGrid, t: f64, tau: f64) -> Result<()> {
    grid.validate()?;
    if !t.is_finite() || !tau.is_finite() {
        return Err(Error::Grid("t and tau must be finite".into()));
    }
    Ok(())
}

/// Antibunching: `det [[G²(t,t), G²(t,t+τ)], [G²(t,t+τ), G²(t+τ,t+τ)]]`.
pub fn w_antibunching(grid: &CorrelationGrid, t: f64, tau: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    check_args(grid, t, tau)?;
    let [g00, g01, g11] = grid.triple(t, tau)?;
    let mut b = Builder::new("table1.antibunching", None, opts);
    let d = record(&mut b, "d(n(t),n(t+tau))", &["n(t)", "n(t+tau)"], &[&[g00, g01], &[g01, g11]])?;
    if g00 > 0.0 && g11 > 0.0 {
        b.value("g2(t,t+tau)", g01 / (g00 * g11).sqrt());
    }
    b.note(format!("t = {t}, tau = {tau}"));
    let tol = d.tol(opts.tol_rel);
    Ok(b.finish(d.value, 0.0, tol, Verdict::Nonclassical))
}

/// Hyperbunching: covariance determinant and the equal `F = (1, n(t), n(t+τ))` form.
pub fn w_hyperbunching(grid: &CorrelationGrid, t: f64, tau: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    check_args(grid, t, tau)?;
    let [g00, g01, g11] = grid.triple(t, tau)?;
    let i0 = grid.g1_at(t)?;
    let i1 = grid.g1_at(t + tau).map_err(|_| Error::Grid(format!("missing g1 sample at t = {}", t + tau)))?;
    let (c00, c01, c11) = (g00 - i0 * i0, g01 - i0 * i1, g11 - i1 * i1);
    let mut b = Builder::new("table1.hyperbunching", None, opts);
    let small = record(&mut b, "d(Dn(t),Dn(t+tau))", &["Dn(t)", "Dn(t+tau)"], &[&[c00, c01], &[c01, c11]])?;
    let big = record(
        &mut b,
        "d(1,n(t),n(t+tau))",
        &["1", "n(t)", "n(t+tau)"],
        &[&[1.0, i0, i1], &[i0, g00, g01], &[i1, g01, g11]],
    )?;
    b.check("2x2 = 3x3", small.value, big.value, super::joint_tol(CHECK_TOL_REL, &[small, big]))?;
    if c00 > 0.0 && c11 > 0.0 {
        b.value("gbar2(t,t+tau)", c01 / (c00 * c11).sqrt());
    }
    b.note(format!("t = {t}, tau = {tau}"));
    let tol = super::joint_tol(opts.tol_rel, &[small, big]);
    Ok(b.finish(small.value, 0.0, tol, Verdict::Nonclassical))
}
