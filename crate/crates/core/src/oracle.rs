//! Brute-force dense reference computations.
//!
//! Operators are materialized as Kronecker products of truncated ladder
//! matrices, states are embedded in a padded space so that truncation of the
//! ladder matrices never touches the result, and partial transposes are
//! formed by permuting density-matrix indices. Nothing here goes through the
//! contraction or reordering code of the main path.

use nalgebra::DMatrix;

use crate::algebra::PolyOperator;
use crate::error::{Error, Result};
use crate::fock::{FockState, ModeShape, StateKind, C64};
use crate::moments::{MomentMatrix, OperatorSet, Ordering};

/// Default cap on the dense dimension.
pub const DEFAULT_DIM_CAP: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator {
    shape: ModeShape,
    matrix: DMatrix<C64>,
}

impl DenseOperator {
    pub fn shape(&self) -> &ModeShape {
        &self.shape
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn adjoint(&self) -> Self {
        Self { shape: self.shape.clone(), matrix: self.matrix.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch("dense operators on different shapes".into()));
        }
        Ok(Self { shape: self.shape.clone(), matrix: &self.matrix * &other.matrix })
    }
}

/// Truncated annihilation matrix, `⟨n−1|a|n⟩ = √n`.
pub fn ladder_matrix(d: usize) -> DMatrix<C64> {
    DMatrix::from_fn(d, d, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) })
}

fn power(m: &DMatrix<C64>, k: u32) -> DMatrix<C64> {
    (0..k).fold(DMatrix::identity(m.nrows(), m.ncols()), |acc, _| &acc * m)
}

/// Dense reference evaluator with an explicit size cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Oracle {
    pub dim_cap: usize,
}

impl Default for Oracle {
    fn default() -> Self {
        Self { dim_cap: DEFAULT_DIM_CAP }
    }
}

impl Oracle {
    pub fn with_cap(dim_cap: usize) -> Self {
        Self { dim_cap }
    }

    fn guard(&self, shape: &ModeShape) -> Result<()> {
        if shape.dim() > self.dim_cap {
            return Err(Error::OracleTooLarge { dim: shape.dim(), cap: self.dim_cap });
        }
        Ok(())
    }

    /// `Σ_terms c · ⊗_m (a_m†)^p (a_m)^q`, mode 0 as the most significant factor.
    pub fn materialize(&self, op: &PolyOperator, shape: &ModeShape) -> Result<DenseOperator> {
        self.guard(shape)?;
        if let Some(m) = op.max_mode() {
            if m >= shape.num_modes() {
                return Err(Error::ModeOutOfRange { mode: m, num_modes: shape.num_modes() });
            }
        }
        let ladders: Vec<DMatrix<C64>> = shape.cutoffs().iter().map(|&d| ladder_matrix(d)).collect();
        let dim = shape.dim();
        let mut total = DMatrix::zeros(dim, dim);
        for (key, &c) in op.terms() {
            let mut acc = DMatrix::from_element(1, 1, c);
            for (m, a) in ladders.iter().enumerate() {
                let (p, q) = key.exponents(m);
                let local = power(&a.adjoint(), p) * power(a, q);
                acc = acc.kronecker(&local);
            }
            total += acc;
        }
        Ok(DenseOperator { shape: shape.clone(), matrix: total })
    }

    /// `tr(ρ op)`, evaluated on a space padded by the operator's per-mode degree.
    pub fn expect(&self, state: &FockState, op: &PolyOperator) -> Result<C64> {
        let pad = op.max_mode_degree() as usize;
        let (shape, rho) = self.embed(state, pad)?;
        let a = self.materialize(op, &shape)?;
        Ok(trace_product(&rho, a.matrix()))
    }

    /// Partial transpose of a density state on `pt_modes`.
    pub fn pt(&self, state: &FockState, pt_modes: &[usize]) -> Result<FockState> {
        if state.kind() != StateKind::Density {
            return Err(Error::InvalidState("partial transpose requires a density state".into()));
        }
        self.guard(state.shape())?;
        let shape = state.shape().clone();
        for &m in pt_modes {
            if m >= shape.num_modes() {
                return Err(Error::ModeOutOfRange { mode: m, num_modes: shape.num_modes() });
            }
        }
        let rho = state.density_matrix();
        let out = partial_transpose(&rho, &shape, pt_modes);
        let entries: Vec<C64> = (0..shape.dim()).flat_map(|i| (0..shape.dim()).map(move |j| (i, j))).map(|(i, j)| out[(i, j)]).collect();
        Ok(FockState::density_unchecked(shape, entries, state.leakage()))
    }

    /// Moment matrix built densely: normal mode from explicit exponent
    /// arithmetic, gamma mode as `tr[f_i† f_j ρ^Γ]`.
    pub fn moment_matrix(&self, set: &OperatorSet, state: &FockState, ordering: &Ordering) -> Result<MomentMatrix> {
        let n = set.len();
        let mut raw = DMatrix::zeros(n, n);
        match ordering {
            Ordering::Normal => {
                let (shape, rho) = self.embed(state, 0)?;
                for i in 0..n {
                    for j in 0..n {
                        let op = normal_pair(&set.ops()[i], &set.ops()[j]);
                        let a = self.materialize(&op, &shape)?;
                        raw[(i, j)] = trace_product(&rho, a.matrix());
                    }
                }
            }
            Ordering::Gamma { pt_modes } => {
                let pad = set.ops().iter().map(|f| f.max_mode_degree() as usize).max().unwrap_or(0);
                let (shape, rho) = self.embed(state, pad)?;
                for &m in pt_modes {
                    if m >= shape.num_modes() {
                        return Err(Error::ModeOutOfRange { mode: m, num_modes: shape.num_modes() });
                    }
                }
                let rho_pt = partial_transpose(&rho, &shape, pt_modes);
                let dense = set
                    .ops()
                    .iter()
                    .map(|f| self.materialize(f, &shape))
                    .collect::<Result<Vec<_>>>()?;
                for i in 0..n {
                    let left = dense[i].adjoint();
                    for j in 0..n {
                        let a = left.mul(&dense[j])?;
                        raw[(i, j)] = trace_product(&rho_pt, a.matrix());
                    }
                }
            }
        }
        MomentMatrix::from_entries(raw, ordering.clone(), set.labels().to_vec())
    }

    /// Density matrix of `state` embedded in the shape with every cutoff raised by `pad`.
    fn embed(&self, state: &FockState, pad: usize) -> Result<(ModeShape, DMatrix<C64>)> {
        let src = state.shape();
        let shape = ModeShape::new(src.cutoffs().iter().map(|&d| d + pad).collect())?;
        self.guard(&shape)?;
        let rho = state.density_matrix();
        if pad == 0 {
            return Ok((shape, rho));
        }
        let map: Vec<usize> = (0..src.dim())
            .map(|i| shape.index_of(&src.occupation_of(i)))
            .collect::<Result<_>>()?;
        let mut out = DMatrix::zeros(shape.dim(), shape.dim());
        for (i, &pi) in map.iter().enumerate() {
            for (j, &pj) in map.iter().enumerate() {
                out[(pi, pj)] = rho[(i, j)];
            }
        }
        Ok((shape, out))
    }
}

/// `Σ_{k,l} ρ_kl A_lk`.
fn trace_product(rho: &DMatrix<C64>, a: &DMatrix<C64>) -> C64 {
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..rho.nrows() {
        for l in 0..rho.ncols() {
            sum += rho[(k, l)] * a[(l, k)];
        }
    }
    sum
}

/// `:f† g:` with exponents added per mode.
fn normal_pair(f: &PolyOperator, g: &PolyOperator) -> PolyOperator {
    let mut terms = Vec::new();
    for (kf, cf) in f.terms() {
        for (kg, cg) in g.terms() {
            let modes = kf.max_mode().max(kg.max_mode()).map_or(0, |m| m + 1);
            let factors = (0..modes)
                .map(|m| {
                    let (pf, qf) = kf.exponents(m);
                    let (pg, qg) = kg.exponents(m);
                    (m, qf + pg, pf + qg)
                })
                .collect();
            terms.push((crate::algebra::MonomialKey::new(factors), cf.conj() * cg));
        }
    }
    PolyOperator::from_terms(terms)
}

fn partial_transpose(rho: &DMatrix<C64>, shape: &ModeShape, pt_modes: &[usize]) -> DMatrix<C64> {
    let dim = shape.dim();
    let occ: Vec<Vec<usize>> = (0..dim).map(|i| shape.occupation_of(i)).collect();
    let strides = shape.strides();
    DMatrix::from_fn(dim, dim, |i, j| {
        let (mut si, mut sj) = (i, j);
        for &m in pt_modes {
            let (ni, nj) = (occ[i][m], occ[j][m]);
            si = si - ni * strides[m] + nj * strides[m];
            sj = sj - nj * strides[m] + ni * strides[m];
        }
        rho[(si, sj)]
    })
}

pub fn materialize(op: &PolyOperator, shape: &ModeShape) -> Result<DenseOperator> {
    Oracle::default().materialize(op, shape)
}

pub fn oracle_expect(state: &FockState, op: &PolyOperator) -> Result<C64> {
    Oracle::default().expect(state, op)
}

pub fn oracle_pt(state: &FockState, pt_modes: &[usize]) -> Result<FockState> {
    Oracle::default().pt(state, pt_modes)
}

pub fn oracle_moment_matrix(set: &OperatorSet, state: &FockState, ordering: &Ordering) -> Result<MomentMatrix> {
    Oracle::default().moment_matrix(set, state, ordering)
}

/// Smallest eigenvalue of a density state's (Hermitian part of the) matrix.
pub fn min_eigenvalue(state: &FockState) -> f64 {
    let m = state.density_matrix();
    let h = (&m + m.adjoint()) * C64::new(0.5, 0.0);
    h.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::Truncation;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn identity_and_number() {
        let shape = ModeShape::uniform(1, 6).unwrap();
        let one = materialize(&PolyOperator::identity(), &shape).unwrap();
        assert_eq!(one.matrix(), &DMatrix::identity(6, 6));
        let n = materialize(&PolyOperator::number(0), &shape).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let expected = if i == j { i as f64 } else { 0.0 };
                assert!((n.matrix()[(i, j)] - c(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn canonical_commutator_away_from_boundary() {
        let d = 8;
        let shape = ModeShape::uniform(1, d).unwrap();
        let a = materialize(&PolyOperator::annihilation(0), &shape).unwrap();
        let ad = materialize(&PolyOperator::creation(0), &shape).unwrap();
        assert_eq!(ad.matrix(), &a.adjoint().matrix().clone());
        let comm = a.mul(&ad).unwrap().matrix() - ad.mul(&a).unwrap().matrix();
        for i in 0..d - 1 {
            for j in 0..d - 1 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((comm[(i, j)] - c(expected, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn plain_product_is_exact_with_padding() {
        // ⟨a a†⟩ = |α|² + 1 needs the padded level.
        let shape = ModeShape::uniform(1, 20).unwrap();
        let st = FockState::coherent(&shape, &[c(1.0, 0.0)], Truncation::default()).unwrap();
        let aad = PolyOperator::annihilation(0).product(&PolyOperator::creation(0));
        let v = oracle_expect(&st, &aad).unwrap();
        assert!((v - c(2.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn partial_transpose_examples() {
        let shape = ModeShape::uniform(2, 8).unwrap();
        let t = FockState::tmsv(&shape, 0.5, Truncation::with_leakage_tol(1e-3)).unwrap().to_density();
        let tpt = oracle_pt(&t, &[1]).unwrap();
        assert!(min_eigenvalue(&tpt) < -1e-3);
        assert_eq!(oracle_pt(&tpt, &[1]).unwrap(), t);

        let prod = FockState::coherent(&shape, &[c(0.3, 0.1), c(-0.2, 0.4)], Truncation::default()).unwrap().to_density();
        assert!(min_eigenvalue(&oracle_pt(&prod, &[1]).unwrap()) >= -1e-10);
        assert!(oracle_pt(&FockState::vacuum(&shape), &[0]).is_err());
    }

    #[test]
    fn size_cap_is_enforced() {
        let shape = ModeShape::uniform(2, 70).unwrap();
        let err = materialize(&PolyOperator::identity(), &shape).unwrap_err();
        assert!(matches!(err, Error::OracleTooLarge { dim: 4900, cap: DEFAULT_DIM_CAP }));
        let small = ModeShape::uniform(2, 11).unwrap();
        assert!(Oracle::with_cap(100).materialize(&PolyOperator::identity(), &small).is_err());
        assert!(Oracle::with_cap(121).materialize(&PolyOperator::identity(), &small).is_ok());
    }
}
