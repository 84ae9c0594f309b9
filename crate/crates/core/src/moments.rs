//! Matrices of moments and their positivity.
//!
//! Normal mode: entry `(i, j) = ⟨:f_i† f_j:⟩`. Gamma mode: entry
//! `(i, j) = ⟨(f_i† f_j)^Γ⟩`, evaluated termwise by exchanging the exponents
//! of the partially transposed modes between the left and right monomial and
//! then taking the plain-ordered expectation.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::algebra::{MonomialKey, PolyOperator};
use crate::error::{Error, Result};
use crate::fock::{FockState, C64};

/// Absolute floor for the tolerance scale.
pub const SCALE_FLOOR: f64 = 1e-12;
/// Relative asymmetry above which a matrix is rejected.
pub const ASYMMETRY_REL: f64 = 1e-8;
/// Default relative tolerance of [`positivity`].
pub const DEFAULT_TOL_REL: f64 = 1e-9;
/// Largest dimension for the exhaustive principal-minor scan.
pub const MINOR_SCAN_MAX: usize = 6;

/// Ordered operator list `F = (f_1, …, f_N)` with unique labels.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorSet {
    ops: Vec<PolyOperator>,
    labels: Vec<String>,
}

impl OperatorSet {
    pub fn new<S: Into<String>>(items: Vec<(S, PolyOperator)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidParameter("operator set must not be empty".into()));
        }
        let (labels, ops): (Vec<String>, Vec<PolyOperator>) = items.into_iter().map(|(l, o)| (l.into(), o)).unzip();
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidParameter(format!("duplicate operator label `{l}`")));
            }
        }
        Ok(Self { ops, labels })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn ops(&self) -> &[PolyOperator] {
        &self.ops
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// The set with element `k` removed.
    pub fn without(&self, k: usize) -> Result<Self> {
        self.select(&(0..self.len()).filter(|&i| i != k).collect::<Vec<_>>())
    }

    /// The ordered subset with the given indices.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let items = indices
            .iter()
            .map(|&i| {
                self.ops
                    .get(i)
                    .map(|o| (self.labels[i].clone(), o.clone()))
                    .ok_or_else(|| Error::InvalidParameter(format!("index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(items)
    }

    /// Every term with creation and annihilation exponents exchanged on `pt_modes`.
    ///
    /// For sets whose elements are single monomials (and similar structures)
    /// the normal-ordered matrix of this image equals the gamma matrix of the original.
    pub fn gamma_image(&self, pt_modes: &[usize]) -> Self {
        let ops = self
            .ops
            .iter()
            .map(|op| {
                PolyOperator::from_terms(op.terms().map(|(k, &c)| {
                    let swapped = k
                        .factors()
                        .iter()
                        .map(|&(m, p, q)| if pt_modes.contains(&m) { (m, q, p) } else { (m, p, q) })
                        .collect();
                    (MonomialKey::new(swapped), c)
                }))
            })
            .collect();
        let labels = self.labels.iter().map(|l| format!("{l}^T")).collect();
        Self { ops, labels }
    }

    fn max_mode(&self) -> Option<usize> {
        self.ops.iter().filter_map(|o| o.max_mode()).max()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Ordering {
    Normal,
    Gamma { pt_modes: Vec<usize> },
}

/// Read-only cache of normally ordered monomial moments of one state.
#[derive(Debug)]
pub struct MomentCache<'a> {
    state: &'a FockState,
    values: BTreeMap<MonomialKey, C64>,
}

impl<'a> MomentCache<'a> {
    pub fn new(state: &'a FockState) -> Self {
        Self { state, values: BTreeMap::new() }
    }

    pub fn state(&self) -> &'a FockState {
        self.state
    }

    /// Evaluates and stores every monomial appearing in `ops`.
    pub fn prefetch<'b, I: IntoIterator<Item = &'b PolyOperator>>(&mut self, ops: I) -> Result<()> {
        for op in ops {
            for (k, _) in op.terms() {
                if !self.values.contains_key(k) {
                    let v = k.expect(self.state)?;
                    self.values.insert(k.clone(), v);
                }
            }
        }
        Ok(())
    }

    pub fn moment(&self, key: &MonomialKey) -> Result<C64> {
        match self.values.get(key) {
            Some(&v) => Ok(v),
            None => key.expect(self.state),
        }
    }

    pub fn expect(&self, op: &PolyOperator) -> Result<C64> {
        let mut sum = C64::new(0.0, 0.0);
        for (k, c) in op.terms() {
            sum += c * self.moment(k)?;
        }
        Ok(sum)
    }

    /// `⟨op⟩` for a Hermitian operator, imaginary rounding residue dropped.
    pub fn expect_real(&self, op: &PolyOperator) -> Result<f64> {
        Ok(self.expect(op)?.re)
    }
}

/// Hermitian matrix of moments with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentMatrix {
    entries: DMatrix<C64>,
    ordering: Ordering,
    labels: Vec<String>,
    scale: f64,
    asymmetry: f64,
}

impl MomentMatrix {
    /// Wraps raw entries, symmetrizing as `(M + M†)/2`.
    pub fn from_entries(raw: DMatrix<C64>, ordering: Ordering, labels: Vec<String>) -> Result<Self> {
        if !raw.is_square() || raw.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} entries for {} labels",
                raw.nrows(),
                raw.ncols(),
                labels.len()
            )));
        }
        let n = raw.nrows();
        let mut asymmetry = 0.0f64;
        let mut scale = 0.0f64;
        let mut entries = raw.clone();
        for i in 0..n {
            for j in 0..n {
                let x = raw[(i, j)];
                let y = raw[(j, i)].conj();
                asymmetry = asymmetry.max((x - y).norm());
                scale = scale.max(x.norm());
                entries[(i, j)] = (x + y) * 0.5;
            }
        }
        let scale = scale.max(SCALE_FLOOR);
        if asymmetry > ASYMMETRY_REL * scale {
            return Err(Error::NumericalInconsistency(format!(
                "moment matrix asymmetry {asymmetry:e} exceeds {ASYMMETRY_REL:e} x scale {scale:e}"
            )));
        }
        Ok(Self { entries, ordering, labels, scale, asymmetry })
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> C64 {
        self.entries[(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn ordering(&self) -> &Ordering {
        &self.ordering
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `max |entry|`, floored at [`SCALE_FLOOR`].
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        (0..self.dim()).map(|i| self.entries.row(i).iter().copied().collect()).collect()
    }

    pub fn determinant(&self) -> f64 {
        determinant(&self.entries)
    }

    /// Principal submatrix on the given indices.
    pub fn principal(&self, indices: &[usize]) -> DMatrix<C64> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| self.entries[(indices[i], indices[j])])
    }
}

/// Real part of the LU determinant of a Hermitian matrix.
pub fn determinant(m: &DMatrix<C64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().lu().determinant().re
}

/// Tolerance for an `n×n` determinant whose entries are bounded by `scale`.
pub fn det_tolerance(tol_rel: f64, scale: f64, n: usize) -> f64 {
    tol_rel * scale.max(SCALE_FLOOR).powi(n as i32)
}

/// `M_ij = ⟨:f_i† f_j:⟩`.
pub fn build_normal(set: &OperatorSet, state: &FockState) -> Result<MomentMatrix> {
    check_modes(set, state)?;
    let n = set.len();
    let daggers: Vec<PolyOperator> = set.ops().iter().map(|f| f.adjoint()).collect();
    let products: Vec<PolyOperator> = (0..n * n)
        .map(|ij| daggers[ij / n].normal_product(&set.ops()[ij % n]))
        .collect();
    let mut cache = MomentCache::new(state);
    cache.prefetch(&products)?;
    let values = products.iter().map(|p| cache.expect(p)).collect::<Result<Vec<_>>>()?;
    let raw = DMatrix::from_row_slice(n, n, &values);
    MomentMatrix::from_entries(raw, Ordering::Normal, set.labels().to_vec())
}

/// `⟨(m_i† m_j)^Γ⟩` for two monomials (unit coefficients), as a normally ordered polynomial.
fn gamma_product(mi: &MonomialKey, mj: &MonomialKey, pt_modes: &[usize]) -> PolyOperator {
    let (i_pt, i_rest) = mi.split(pt_modes);
    let (j_pt, j_rest) = mj.split(pt_modes);
    let left = i_rest.normal_mul(&j_pt);
    let right = j_rest.normal_mul(&i_pt);
    let one = C64::new(1.0, 0.0);
    PolyOperator::monomial(one, left.factors())
        .adjoint()
        .product(&PolyOperator::monomial(one, right.factors()))
}

/// The polynomial whose expectation is `⟨(f† g)^Γ⟩`.
pub fn gamma_operator(f: &PolyOperator, g: &PolyOperator, pt_modes: &[usize]) -> PolyOperator {
    let mut terms: Vec<(MonomialKey, C64)> = Vec::new();
    for (ki, ci) in f.terms() {
        for (kj, cj) in g.terms() {
            let w = ci.conj() * cj;
            for (k, c) in gamma_product(ki, kj, pt_modes).terms() {
                terms.push((k.clone(), w * c));
            }
        }
    }
    PolyOperator::from_terms(terms)
}

/// `M_ij = ⟨(f_i† f_j)^Γ⟩` with partial transposition on `pt_modes`.
pub fn build_gamma(set: &OperatorSet, state: &FockState, pt_modes: &[usize]) -> Result<MomentMatrix> {
    check_modes(set, state)?;
    for &m in pt_modes {
        if m >= state.num_modes() {
            return Err(Error::ModeOutOfRange { mode: m, num_modes: state.num_modes() });
        }
    }
    let mut pt: Vec<usize> = pt_modes.to_vec();
    pt.sort_unstable();
    pt.dedup();
    let n = set.len();
    let products: Vec<PolyOperator> = (0..n * n)
        .map(|ij| gamma_operator(&set.ops()[ij / n], &set.ops()[ij % n], &pt))
        .collect();
    let mut cache = MomentCache::new(state);
    cache.prefetch(&products)?;
    let values = products.iter().map(|p| cache.expect(p)).collect::<Result<Vec<_>>>()?;
    let raw = DMatrix::from_row_slice(n, n, &values);
    MomentMatrix::from_entries(raw, Ordering::Gamma { pt_modes: pt }, set.labels().to_vec())
}

fn check_modes(set: &OperatorSet, state: &FockState) -> Result<()> {
    match set.max_mode() {
        Some(m) if m >= state.num_modes() => Err(Error::ModeOutOfRange { mode: m, num_modes: state.num_modes() }),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Positivity {
    /// Positive semidefinite within tolerance.
    Psd,
    /// Negative eigenvalue and negative determinant.
    Npd,
    /// Negative eigenvalue while the full determinant is not negative: only a
    /// proper principal minor exposes it.
    IndefiniteNegativeMinor,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub determinant: f64,
    pub determinant_tol: f64,
    pub min_eigenvalue: f64,
    pub eigenvalue_tol: f64,
    /// `None` when the matrix is larger than [`MINOR_SCAN_MAX`].
    pub all_principal_minors_nonneg: Option<bool>,
    /// Most negative principal minor (relative to its own tolerance) and its indices.
    pub worst_minor: Option<(Vec<usize>, f64)>,
    pub verdict: Positivity,
}

/// Determinant, smallest eigenvalue and (for small matrices) every principal minor.
pub fn positivity(m: &MomentMatrix, tol_rel: f64) -> PositivityReport {
    let n = m.dim();
    let scale = m.scale();
    let determinant = m.determinant();
    let determinant_tol = det_tolerance(tol_rel, scale, n);
    let min_eigenvalue = m
        .entries()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let eigenvalue_tol = tol_rel * scale;

    let (all_principal_minors_nonneg, worst_minor) = if n <= MINOR_SCAN_MAX {
        let mut worst: Option<(Vec<usize>, f64, f64)> = None;
        let mut all_ok = true;
        for mask in 1u32..(1 << n) {
            let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let d = self::determinant(&m.principal(&idx));
            let tol = det_tolerance(tol_rel, scale, idx.len());
            if d < -tol {
                all_ok = false;
            }
            let rel = d / scale.powi(idx.len() as i32);
            if worst.as_ref().is_none_or(|w| rel < w.2) {
                worst = Some((idx, d, rel));
            }
        }
        (Some(all_ok), worst.map(|(i, d, _)| (i, d)))
    } else {
        (None, None)
    };

    let verdict = if min_eigenvalue >= -eigenvalue_tol {
        Positivity::Psd
    } else if determinant < -determinant_tol {
        Positivity::Npd
    } else {
        Positivity::IndefiniteNegativeMinor
    };
    PositivityReport {
        determinant,
        determinant_tol,
        min_eigenvalue,
        eigenvalue_tol,
        all_principal_minors_nonneg,
        worst_minor,
        verdict,
    }
}

/// Checks that `F` has the product structure for which normal-order
/// positivity on factorized states carries over to separable states:
/// every mode is touched by at most one element, and within that element it
/// appears only through creation or only through annihilation operators.
pub fn check_product_structure(set: &OperatorSet) -> Result<()> {
    let mut owner: BTreeMap<usize, usize> = BTreeMap::new();
    for (i, op) in set.ops().iter().enumerate() {
        let mut kinds: BTreeMap<usize, (bool, bool)> = BTreeMap::new();
        for (k, _) in op.terms() {
            for &(m, p, q) in k.factors() {
                let e = kinds.entry(m).or_default();
                e.0 |= p > 0;
                e.1 |= q > 0;
            }
        }
        for (&m, &(has_create, has_annihilate)) in &kinds {
            if has_create && has_annihilate {
                return Err(Error::InvalidParameter(format!(
                    "`{}` mixes creation and annihilation operators on mode {m}",
                    set.labels()[i]
                )));
            }
            if let Some(&j) = owner.get(&m) {
                return Err(Error::InvalidParameter(format!(
                    "mode {m} appears in both `{}` and `{}`",
                    set.labels()[j],
                    set.labels()[i]
                )));
            }
            owner.insert(m, i);
        }
        if kinds.len() > 1 && op.len() > 1 {
            return Err(Error::InvalidParameter(format!(
                "`{}` is a multimode polynomial, not a product over modes",
                set.labels()[i]
            )));
        }
    }
    Ok(())
}

/// Whether `build_normal(F, state)` is PSD for a set with the product structure.
pub fn separability_psd_check(set: &OperatorSet, state: &FockState, tol_rel: f64) -> Result<bool> {
    check_product_structure(set)?;
    let m = build_normal(set, state)?;
    Ok(positivity(&m, tol_rel).verdict == Positivity::Psd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeShape, Truncation};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn matrix(rows: &[&[f64]]) -> MomentMatrix {
        let n = rows.len();
        let m = DMatrix::from_fn(n, n, |i, j| c(rows[i][j], 0.0));
        MomentMatrix::from_entries(m, Ordering::Normal, (0..n).map(|i| format!("f{i}")).collect()).unwrap()
    }

    #[test]
    fn positivity_examples() {
        let r = positivity(&matrix(&[&[1.0]]), DEFAULT_TOL_REL);
        assert_eq!(r.verdict, Positivity::Psd);
        assert_eq!(r.determinant, 1.0);

        let r = positivity(&matrix(&[&[1.0, 1.0], &[1.0, 1.0]]), DEFAULT_TOL_REL);
        assert_eq!(r.verdict, Positivity::Psd);
        assert!(r.determinant.abs() < 1e-15);
        assert!(r.min_eigenvalue.abs() < 1e-15);

        // eigenvalues (1 ± √5)/2
        let r = positivity(&matrix(&[&[1.0, 1.0], &[1.0, 0.0]]), DEFAULT_TOL_REL);
        assert_eq!(r.verdict, Positivity::Npd);
        assert!((r.determinant + 1.0).abs() < 1e-15);
        assert!((r.min_eigenvalue - (1.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert_eq!(r.all_principal_minors_nonneg, Some(false));
    }

    #[test]
    fn singular_matrix_needs_proper_minor() {
        // Two negative eigenvalues: det > 0 while the matrix is indefinite.
        let r = positivity(&matrix(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]]), DEFAULT_TOL_REL);
        assert!(r.determinant.abs() < 1e-15);
        assert_eq!(r.verdict, Positivity::IndefiniteNegativeMinor);
        assert_eq!(r.all_principal_minors_nonneg, Some(false));
        assert_eq!(r.worst_minor.as_ref().unwrap().0, vec![0, 1]);
    }

    #[test]
    fn asymmetric_input_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        let err = MomentMatrix::from_entries(m, Ordering::Normal, vec!["x".into(), "y".into()]).unwrap_err();
        assert!(matches!(err, Error::NumericalInconsistency(_)));
    }

    #[test]
    fn operator_set_labels_unique() {
        assert!(OperatorSet::new(vec![("a", PolyOperator::identity()), ("a", PolyOperator::number(0))]).is_err());
        assert!(OperatorSet::new(Vec::<(String, PolyOperator)>::new()).is_err());
    }

    #[test]
    fn normal_matrix_examples() {
        let shape = ModeShape::uniform(1, 30).unwrap();
        let coh = FockState::coherent(&shape, &[c(1.0, 0.0)], Truncation::default()).unwrap();
        let one = OperatorSet::new(vec![("1", PolyOperator::identity())]).unwrap();
        let m = build_normal(&one, &coh).unwrap();
        assert!((m.entry(0, 0) - 1.0).norm() < 1e-10);

        let f = OperatorSet::new(vec![("1", PolyOperator::identity()), ("a", PolyOperator::annihilation(0))]).unwrap();
        let m = build_normal(&f, &coh).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.entry(i, j) - 1.0).norm() < 1e-10);
            }
        }
        assert!(m.determinant().abs() < 1e-10);

        let fock1 = FockState::fock(&shape, &[1]).unwrap();
        let f = OperatorSet::new(vec![("1", PolyOperator::identity()), ("n", PolyOperator::number(0))]).unwrap();
        let m = build_normal(&f, &fock1).unwrap();
        assert_eq!(m.entry(1, 1), c(0.0, 0.0));
        assert!((m.determinant() + 1.0).abs() < 1e-14);
    }

    #[test]
    fn gamma_matrix_of_tmsv_pair() {
        let r: f64 = 1.0;
        let shape = ModeShape::uniform(2, 40).unwrap();
        let t = FockState::tmsv(&shape, r, Truncation::default()).unwrap();
        let f = OperatorSet::new(vec![("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))]).unwrap();
        let m = build_gamma(&f, &t, &[0]).unwrap();
        assert!((m.determinant() + r.sinh().powi(2)).abs() < 1e-6);
        assert_eq!(*m.ordering(), Ordering::Gamma { pt_modes: vec![0] });
    }

    #[test]
    fn gamma_of_product_coherent_is_nonnegative() {
        let shape = ModeShape::uniform(2, 24).unwrap();
        let st = FockState::coherent(&shape, &[c(0.7, 0.2), c(-0.4, 0.9)], Truncation::default()).unwrap();
        let ab = PolyOperator::monomial(c(1.0, 0.0), &[(0, 0, 1), (1, 0, 1)]);
        let f = OperatorSet::new(vec![("1", PolyOperator::identity()), ("ab", ab)]).unwrap();
        let m = build_gamma(&f, &st, &[0]).unwrap();
        // Γ-entries: ⟨a†b⟩ off the diagonal and ⟨n_a n_b⟩ on it, so the determinant vanishes.
        let al = c(0.7, 0.2);
        let be = c(-0.4, 0.9);
        assert!((m.entry(0, 1) - al.conj() * be).norm() < 1e-10);
        assert!(m.determinant().abs() < 1e-9);
        let image = build_normal(&f.gamma_image(&[0]), &st).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((image.entry(i, j) - m.entry(i, j)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn separability_check_examples() {
        let shape = ModeShape::uniform(2, 24).unwrap();
        let (al, be) = (c(0.5, -0.3), c(1.1, 0.4));
        let st = FockState::coherent(&shape, &[al, be], Truncation::default()).unwrap();
        let f = OperatorSet::new(vec![("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))]).unwrap();
        assert!(separability_psd_check(&f, &st, 1e-9).unwrap());
        let m = build_normal(&f, &st).unwrap();
        assert!((m.entry(0, 1) - al.conj() * be).norm() < 1e-10);
        let f2 = OperatorSet::new(vec![("a", PolyOperator::annihilation(0)), ("bd", PolyOperator::creation(1))]).unwrap();
        assert!(separability_psd_check(&f2, &st, 1e-9).unwrap());

        let t = FockState::tmsv(&shape, 0.5, Truncation::default()).unwrap();
        assert!(!separability_psd_check(&f2, &t, 1e-9).unwrap());
        let d = build_normal(&f2, &t).unwrap().determinant();
        assert!((d + 0.5f64.sinh().powi(2)).abs() < 1e-8);

        let bad = OperatorSet::new(vec![("x", &PolyOperator::annihilation(0) + &PolyOperator::creation(0))]).unwrap();
        assert!(separability_psd_check(&bad, &st, 1e-9).is_err());
    }
}
