//! Multimode bosonic states on truncated Fock spaces.
//!
//! Basis ordering is row-major over modes: mode 0 is the most significant
//! digit, so the flat index of `|n_0, n_1, ..⟩` is `Σ n_m · stride_m` with
//! `stride_{M-1} = 1`. This matches the Kronecker ordering `A_0 ⊗ A_1 ⊗ ..`.
//!
//! Ladder convention: `a|n⟩ = √n |n-1⟩`, `a†|n⟩ = √(n+1) |n+1⟩` and
//! `a†|d-1⟩ = 0` at the cutoff. States are never renormalized after
//! truncation; the lost norm (or trace) is kept in [`FockState::leakage`].

use std::borrow::Cow;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Largest flat dimension accepted for a dense state.
const MAX_DIM: usize = 1 << 15;

/// Per-mode Fock cutoffs. Mode `m` holds levels `0..cutoffs[m]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct ModeShape {
    cutoffs: Vec<usize>,
}

impl ModeShape {
    pub fn new(cutoffs: Vec<usize>) -> Result<Self> {
        if cutoffs.is_empty() {
            return Err(Error::InvalidShape("at least one mode is required".into()));
        }
        if let Some((m, d)) = cutoffs.iter().enumerate().find(|(_, &d)| d < 2) {
            return Err(Error::InvalidShape(format!(
                "mode {m} has cutoff {d}; every cutoff must be at least 2"
            )));
        }
        let dim = cutoffs
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&dim| dim <= MAX_DIM)
            .ok_or_else(|| {
                Error::InvalidShape(format!(
                    "total dimension of cutoffs {cutoffs:?} exceeds the dense limit {MAX_DIM}"
                ))
            })?;
        debug_assert!(dim >= 2);
        Ok(Self { cutoffs })
    }

    pub fn uniform(num_modes: usize, cutoff: usize) -> Result<Self> {
        Self::new(vec![cutoff; num_modes])
    }

    pub fn num_modes(&self) -> usize {
        self.cutoffs.len()
    }

    pub fn cutoffs(&self) -> &[usize] {
        &self.cutoffs
    }

    pub fn cutoff(&self, mode: usize) -> usize {
        self.cutoffs[mode]
    }

    pub fn dim(&self) -> usize {
        self.cutoffs.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1usize; self.cutoffs.len()];
        for m in (0..self.cutoffs.len().saturating_sub(1)).rev() {
            strides[m] = strides[m + 1] * self.cutoffs[m + 1];
        }
        strides
    }

    pub fn index_of(&self, occupation: &[usize]) -> Result<usize> {
        if occupation.len() != self.num_modes() {
            return Err(Error::ShapeMismatch(format!(
                "occupation vector has {} entries for a {}-mode shape",
                occupation.len(),
                self.num_modes()
            )));
        }
        let mut index = 0;
        for (m, (&n, &d)) in occupation.iter().zip(&self.cutoffs).enumerate() {
            if n >= d {
                return Err(Error::OccupationOutOfRange { mode: m, occupation: n, cutoff: d });
            }
            index = index * d + n;
        }
        Ok(index)
    }

    pub fn occupation_of(&self, mut index: usize) -> Vec<usize> {
        let mut occ = vec![0; self.num_modes()];
        for m in (0..self.num_modes()).rev() {
            occ[m] = index % self.cutoffs[m];
            index /= self.cutoffs[m];
        }
        occ
    }

    /// Shape of the tensor product `self ⊗ other`.
    pub fn concat(&self, other: &ModeShape) -> Result<ModeShape> {
        let mut cutoffs = self.cutoffs.clone();
        cutoffs.extend_from_slice(&other.cutoffs);
        ModeShape::new(cutoffs)
    }

    pub(crate) fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.num_modes() {
            Err(Error::ModeOutOfRange { mode, num_modes: self.num_modes() })
        } else {
            Ok(())
        }
    }
}

/// Truncation guards applied by the state factories.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Truncation {
    /// Largest accepted norm (or trace) deficit.
    pub leakage_tol: f64,
    /// Skip both the amplitude guard and the leakage check.
    pub allow_overflow: bool,
}

impl Default for Truncation {
    fn default() -> Self {
        Self { leakage_tol: 1e-8, allow_overflow: false }
    }
}

impl Truncation {
    pub fn with_leakage_tol(leakage_tol: f64) -> Self {
        Self { leakage_tol, ..Self::default() }
    }

    pub fn permissive() -> Self {
        Self { leakage_tol: 1.0, allow_overflow: true }
    }

    fn check(&self, leakage: f64, context: &str) -> Result<()> {
        if !self.allow_overflow && leakage > self.leakage_tol {
            return Err(Error::LeakageExceeded {
                leakage,
                tol: self.leakage_tol,
                context: context.to_string(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    Pure,
    Density,
}

#[derive(Clone, Debug, PartialEq)]
enum StateData {
    Pure(Vec<C64>),
    /// Row-major `dim × dim`, entry `(i, j)` is `⟨i|ρ|j⟩`.
    Density(Vec<C64>),
}

/// A single ladder operator acting on one mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Letter {
    pub mode: usize,
    pub dagger: bool,
}

impl Letter {
    pub fn annihilate(mode: usize) -> Self {
        Self { mode, dagger: false }
    }

    pub fn create(mode: usize) -> Self {
        Self { mode, dagger: true }
    }

    pub fn adjoint(self) -> Self {
        Self { mode: self.mode, dagger: !self.dagger }
    }
}

/// Immutable truncated multimode state, either a pure vector or a density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FockState {
    shape: ModeShape,
    data: StateData,
    leakage: f64,
}

fn clamp_leakage(deficit: f64) -> f64 {
    if deficit < 0.0 && deficit > -1e-12 {
        0.0
    } else {
        deficit
    }
}

fn kron_vectors(factors: &[Vec<C64>]) -> Vec<C64> {
    factors.iter().fold(vec![C64::new(1.0, 0.0)], |acc, f| {
        let mut out = Vec::with_capacity(acc.len() * f.len());
        for &x in &acc {
            out.extend(f.iter().map(|&y| x * y));
        }
        out
    })
}

fn coherent_amplitudes(alpha: C64, cutoff: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(cutoff);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(c);
    for n in 1..cutoff {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

impl FockState {
    pub fn shape(&self) -> &ModeShape {
        &self.shape
    }

    pub fn num_modes(&self) -> usize {
        self.shape.num_modes()
    }

    pub fn kind(&self) -> StateKind {
        match self.data {
            StateData::Pure(_) => StateKind::Pure,
            StateData::Density(_) => StateKind::Density,
        }
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Amplitudes of a pure state, `None` for density kind.
    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Density(_) => None,
        }
    }

    /// Row-major density entries; pure states are expanded to `|ψ⟩⟨ψ|`.
    pub fn density_entries(&self) -> Cow<'_, [C64]> {
        match &self.data {
            StateData::Density(rho) => Cow::Borrowed(rho),
            StateData::Pure(psi) => {
                let dim = psi.len();
                let mut rho = Vec::with_capacity(dim * dim);
                for &x in psi {
                    rho.extend(psi.iter().map(|&y| x * y.conj()));
                }
                Cow::Owned(rho)
            }
        }
    }

    pub fn density_matrix(&self) -> DMatrix<C64> {
        let dim = self.shape.dim();
        DMatrix::from_row_slice(dim, dim, &self.density_entries())
    }

    pub fn to_density(&self) -> FockState {
        FockState {
            shape: self.shape.clone(),
            data: StateData::Density(self.density_entries().into_owned()),
            leakage: self.leakage,
        }
    }

    /// Density-kind state with no positivity check; used for partial transposes.
    pub(crate) fn density_unchecked(shape: ModeShape, entries: Vec<C64>, leakage: f64) -> Self {
        Self { shape, data: StateData::Density(entries), leakage }
    }

    /// Builds a pure state from raw amplitudes. The norm deficit becomes the leakage.
    pub fn from_amplitudes(shape: ModeShape, amplitudes: Vec<C64>, trunc: Truncation) -> Result<Self> {
        if amplitudes.len() != shape.dim() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for dimension {}",
                amplitudes.len(),
                shape.dim()
            )));
        }
        if amplitudes.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidState("non-finite amplitude".into()));
        }
        let norm: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        let leakage = clamp_leakage(1.0 - norm);
        if leakage < 0.0 {
            return Err(Error::InvalidState(format!("squared norm {norm} exceeds 1")));
        }
        trunc.check(leakage, "raw amplitudes")?;
        Ok(Self { shape, data: StateData::Pure(amplitudes), leakage })
    }

    /// Builds a density state from row-major entries, checking Hermiticity,
    /// trace and (eigenvalue) positivity.
    pub fn from_density(shape: ModeShape, entries: Vec<C64>, trunc: Truncation) -> Result<Self> {
        let dim = shape.dim();
        if entries.len() != dim * dim {
            return Err(Error::ShapeMismatch(format!(
                "{} density entries for dimension {dim}",
                entries.len()
            )));
        }
        for i in 0..dim {
            for j in i..dim {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i].conj();
                if (a - b).norm() > 1e-12 {
                    return Err(Error::InvalidState(format!(
                        "density matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let trace: f64 = (0..dim).map(|i| entries[i * dim + i].re).sum();
        let leakage = clamp_leakage(1.0 - trace);
        if leakage < 0.0 {
            return Err(Error::InvalidState(format!("trace {trace} exceeds 1")));
        }
        trunc.check(leakage, "raw density")?;
        let m = DMatrix::from_row_slice(dim, dim, &entries);
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidState(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        Ok(Self { shape, data: StateData::Density(entries), leakage })
    }

    /// Product coherent state `|α_0⟩ ⊗ |α_1⟩ ⊗ ..`, not renormalized.
    pub fn coherent(shape: &ModeShape, alpha: &[C64], trunc: Truncation) -> Result<Self> {
        if alpha.len() != shape.num_modes() {
            return Err(Error::ShapeMismatch(format!(
                "{} amplitudes for a {}-mode shape",
                alpha.len(),
                shape.num_modes()
            )));
        }
        if !trunc.allow_overflow {
            for (m, (a, &d)) in alpha.iter().zip(shape.cutoffs()).enumerate() {
                if a.norm_sqr() > d as f64 / 4.0 {
                    return Err(Error::CutoffOverflow(format!(
                        "coherent amplitude |α_{m}|² = {} exceeds d/4 = {} for cutoff {d}",
                        a.norm_sqr(),
                        d as f64 / 4.0
                    )));
                }
            }
        }
        let factors: Vec<Vec<C64>> = alpha
            .iter()
            .zip(shape.cutoffs())
            .map(|(&a, &d)| coherent_amplitudes(a, d))
            .collect();
        let amps = kron_vectors(&factors);
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let leakage = clamp_leakage(1.0 - norm).max(0.0);
        trunc.check(leakage, "coherent state")?;
        Ok(Self { shape: shape.clone(), data: StateData::Pure(amps), leakage })
    }

    pub fn vacuum(shape: &ModeShape) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); shape.dim()];
        amps[0] = C64::new(1.0, 0.0);
        Self { shape: shape.clone(), data: StateData::Pure(amps), leakage: 0.0 }
    }

    /// Fock basis state `|n_0, n_1, ..⟩`.
    pub fn fock(shape: &ModeShape, occupation: &[usize]) -> Result<Self> {
        let index = shape.index_of(occupation)?;
        let mut amps = vec![C64::new(0.0, 0.0); shape.dim()];
        amps[index] = C64::new(1.0, 0.0);
        Ok(Self { shape: shape.clone(), data: StateData::Pure(amps), leakage: 0.0 })
    }

    /// Product of thermal (geometric) distributions with the given mean occupations.
    pub fn thermal(shape: &ModeShape, mean: &[f64], trunc: Truncation) -> Result<Self> {
        if mean.len() != shape.num_modes() {
            return Err(Error::ShapeMismatch(format!(
                "{} mean occupations for a {}-mode shape",
                mean.len(),
                shape.num_modes()
            )));
        }
        if let Some(&bad) = mean.iter().find(|&&n| !(n >= 0.0) || !n.is_finite()) {
            return Err(Error::InvalidParameter(format!("mean occupation {bad} must be >= 0")));
        }
        let factors: Vec<Vec<C64>> = mean
            .iter()
            .zip(shape.cutoffs())
            .map(|(&nbar, &d)| {
                let ratio = nbar / (1.0 + nbar);
                let mut p = 1.0 / (1.0 + nbar);
                (0..d)
                    .map(|_| {
                        let out = C64::new(p, 0.0);
                        p *= ratio;
                        out
                    })
                    .collect()
            })
            .collect();
        let diag = kron_vectors(&factors);
        let dim = diag.len();
        let trace: f64 = diag.iter().map(|p| p.re).sum();
        let leakage = clamp_leakage(1.0 - trace).max(0.0);
        trunc.check(leakage, "thermal state")?;
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        for (i, p) in diag.into_iter().enumerate() {
            rho[i * dim + i] = p;
        }
        Ok(Self { shape: shape.clone(), data: StateData::Density(rho), leakage })
    }

    /// Single-mode squeezed vacuum with squeeze parameter `r` and phase `theta`.
    ///
    /// Amplitudes `c_{2n} = (e^{iθ} tanh r)^n √((2n)!) / (2^n n! √cosh r)`, so
    /// `⟨a²⟩ = e^{iθ} sinh r cosh r` and at `θ = 0` the quadrature
    /// `x(π/2) = i(a - a†)` is the squeezed one.
    pub fn squeezed_vacuum(shape: &ModeShape, r: f64, theta: f64, trunc: Truncation) -> Result<Self> {
        if shape.num_modes() != 1 {
            return Err(Error::InvalidParameter(
                "squeezed vacuum is a single-mode state; use tensor for more modes".into(),
            ));
        }
        if !r.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidParameter("squeeze parameters must be finite".into()));
        }
        let d = shape.cutoff(0);
        let ratio = C64::from_polar(r.tanh(), theta);
        let mut amps = vec![C64::new(0.0, 0.0); d];
        let mut c = C64::new(1.0 / r.cosh().sqrt(), 0.0);
        let mut n = 0usize;
        while 2 * n < d {
            amps[2 * n] = c;
            n += 1;
            let k = 2 * n as u64;
            c = c * ratio * ((k * (k - 1)) as f64).sqrt() / k as f64;
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let leakage = clamp_leakage(1.0 - norm).max(0.0);
        trunc.check(leakage, "squeezed vacuum")?;
        Ok(Self { shape: shape.clone(), data: StateData::Pure(amps), leakage })
    }

    /// Two-mode squeezed vacuum `Σ_n tanh^n r / cosh r |n, n⟩`.
    pub fn tmsv(shape: &ModeShape, r: f64, trunc: Truncation) -> Result<Self> {
        if shape.num_modes() != 2 {
            return Err(Error::InvalidParameter("two-mode squeezed vacuum needs exactly two modes".into()));
        }
        if !r.is_finite() {
            return Err(Error::InvalidParameter("squeeze parameter must be finite".into()));
        }
        let nmax = shape.cutoff(0).min(shape.cutoff(1));
        let stride = shape.cutoff(1);
        let mut amps = vec![C64::new(0.0, 0.0); shape.dim()];
        let t = r.tanh();
        let mut c = 1.0 / r.cosh();
        for n in 0..nmax {
            amps[n * stride + n] = C64::new(c, 0.0);
            c *= t;
        }
        let norm: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        let leakage = clamp_leakage(1.0 - norm).max(0.0);
        trunc.check(leakage, "two-mode squeezed vacuum")?;
        Ok(Self { shape: shape.clone(), data: StateData::Pure(amps), leakage })
    }

    /// Tensor product; a density factor promotes the result to density kind.
    pub fn tensor(&self, other: &FockState) -> Result<FockState> {
        let shape = self.shape.concat(&other.shape)?;
        let leakage = clamp_leakage(1.0 - (1.0 - self.leakage) * (1.0 - other.leakage)).max(0.0);
        let data = match (&self.data, &other.data) {
            (StateData::Pure(x), StateData::Pure(y)) => StateData::Pure(kron_vectors(&[x.clone(), y.clone()])),
            _ => {
                let (r1, r2) = (self.density_entries(), other.density_entries());
                let (d1, d2) = (self.shape.dim(), other.shape.dim());
                let dim = d1 * d2;
                let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
                for i1 in 0..d1 {
                    for j1 in 0..d1 {
                        let x = r1[i1 * d1 + j1];
                        if x == C64::new(0.0, 0.0) {
                            continue;
                        }
                        for i2 in 0..d2 {
                            let row = (i1 * d2 + i2) * dim + j1 * d2;
                            for j2 in 0..d2 {
                                rho[row + j2] = x * r2[i2 * d2 + j2];
                            }
                        }
                    }
                }
                StateData::Density(rho)
            }
        };
        Ok(FockState { shape, data, leakage })
    }

    /// Convex mixture `Σ w_i ρ_i`; always density kind.
    pub fn mix(components: &[(f64, &FockState)]) -> Result<FockState> {
        let (_, first) = components
            .first()
            .ok_or_else(|| Error::InvalidParameter("mixture needs at least one component".into()))?;
        let shape = first.shape.clone();
        let mut total = 0.0;
        for (w, s) in components {
            if !(*w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParameter(format!("mixture weight {w} must be positive")));
            }
            if s.shape != shape {
                return Err(Error::ShapeMismatch(format!(
                    "mixture component shape {:?} differs from {:?}",
                    s.shape.cutoffs(),
                    shape.cutoffs()
                )));
            }
            total += w;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("mixture weights sum to {total}, not 1")));
        }
        let dim = shape.dim();
        let mut rho = vec![C64::new(0.0, 0.0); dim * dim];
        let mut leakage = 0.0;
        for (w, s) in components {
            leakage += w * s.leakage;
            match &s.data {
                StateData::Pure(psi) => {
                    for (i, &x) in psi.iter().enumerate() {
                        if x == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let wx = x * *w;
                        let row = &mut rho[i * dim..(i + 1) * dim];
                        for (r, &y) in row.iter_mut().zip(psi) {
                            *r += wx * y.conj();
                        }
                    }
                }
                StateData::Density(r) => {
                    for (acc, &x) in rho.iter_mut().zip(r) {
                        *acc += x * *w;
                    }
                }
            }
        }
        Ok(FockState { shape, data: StateData::Density(rho), leakage })
    }

    /// Probability-weighted mixture of product coherent states.
    pub fn coherent_mixture(shape: &ModeShape, spec: &CoherentMixtureSpec, trunc: Truncation) -> Result<FockState> {
        let states = spec
            .components
            .iter()
            .map(|(_, alpha)| FockState::coherent(shape, alpha, trunc))
            .collect::<Result<Vec<_>>>()?;
        let parts: Vec<(f64, &FockState)> =
            spec.components.iter().map(|(w, _)| *w).zip(states.iter()).collect();
        FockState::mix(&parts)
    }

    /// Expectation `⟨word⟩ = tr(word · ρ)` of a product of ladder letters.
    ///
    /// The rightmost letter acts first. Exact on the truncated space under
    /// the boundary convention `a†|d-1⟩ = 0`; letters on different modes commute.
    pub fn expect_word(&self, word: &[Letter]) -> Result<C64> {
        let mut per_mode: Vec<Vec<bool>> = vec![Vec::new(); self.num_modes()];
        for l in word {
            self.shape.check_mode(l.mode)?;
            per_mode[l.mode].push(l.dagger);
        }
        let actions: Vec<ModeAction> = per_mode
            .iter()
            .zip(self.shape.cutoffs())
            .map(|(letters, &d)| ModeAction::from_letters(letters, d))
            .collect();
        Ok(self.contract(&actions))
    }

    /// Expectation of the normally ordered product `Π_m a_m†^{p_m} a_m^{q_m}`,
    /// given as `(mode, p, q)` triples.
    pub fn expect_normal(&self, factors: &[(usize, u32, u32)]) -> Result<C64> {
        let mut actions: Vec<ModeAction> =
            self.shape.cutoffs().iter().map(|&d| ModeAction::identity(d)).collect();
        for &(mode, p, q) in factors {
            self.shape.check_mode(mode)?;
            let d = self.shape.cutoff(mode);
            let act = ModeAction::normal(p as usize, q as usize, d);
            actions[mode] = actions[mode].after(&act, d);
        }
        Ok(self.contract(&actions))
    }

    fn contract(&self, actions: &[ModeAction]) -> C64 {
        let strides = self.shape.strides();
        let offset: isize = actions.iter().zip(&strides).map(|(a, &s)| a.shift * s as isize).sum();
        // Flattened product of per-mode factors; zero where the word leaves the space.
        let factors = actions.iter().fold(vec![1.0f64], |acc, a| {
            let mut out = Vec::with_capacity(acc.len() * a.factor.len());
            for &x in &acc {
                out.extend(a.factor.iter().map(|&y| x * y));
            }
            out
        });
        let dim = factors.len();
        let mut sum = C64::new(0.0, 0.0);
        match &self.data {
            StateData::Pure(psi) => {
                for (k, &f) in factors.iter().enumerate() {
                    if f != 0.0 {
                        let target = (k as isize + offset) as usize;
                        sum += psi[target].conj() * psi[k] * f;
                    }
                }
            }
            StateData::Density(rho) => {
                for (k, &f) in factors.iter().enumerate() {
                    if f != 0.0 {
                        let target = (k as isize + offset) as usize;
                        sum += rho[k * dim + target] * f;
                    }
                }
            }
        }
        sum
    }
}

/// Action of a single-mode word on basis states: `|n⟩ ↦ factor[n] |n + shift⟩`,
/// with `factor[n] = 0` when the word annihilates `|n⟩` or leaves the space.
#[derive(Clone, Debug)]
struct ModeAction {
    factor: Vec<f64>,
    shift: isize,
}

impl ModeAction {
    fn identity(d: usize) -> Self {
        Self { factor: vec![1.0; d], shift: 0 }
    }

    /// `letters` in written order; the last letter acts first.
    fn from_letters(letters: &[bool], d: usize) -> Self {
        let shift: isize = letters.iter().map(|&dg| if dg { 1 } else { -1 }).sum();
        let factor = (0..d)
            .map(|n0| {
                let mut n = n0 as isize;
                let mut f = 1.0;
                for &dagger in letters.iter().rev() {
                    if dagger {
                        if n + 1 >= d as isize {
                            return 0.0;
                        }
                        n += 1;
                        f *= (n as f64).sqrt();
                    } else {
                        if n == 0 {
                            return 0.0;
                        }
                        f *= (n as f64).sqrt();
                        n -= 1;
                    }
                }
                f
            })
            .collect();
        Self { factor, shift }
    }

    fn normal(p: usize, q: usize, d: usize) -> Self {
        let factor = (0..d)
            .map(|n| {
                if n < q || n - q + p >= d {
                    return 0.0;
                }
                let down: f64 = ((n - q + 1)..=n).map(|k| k as f64).product();
                let up: f64 = ((n - q + 1)..=(n - q + p)).map(|k| k as f64).product();
                (down * up).sqrt()
            })
            .collect();
        Self { factor, shift: p as isize - q as isize }
    }

    /// Composition `self · first` (first acts before self).
    fn after(&self, first: &ModeAction, d: usize) -> Self {
        let factor = (0..d)
            .map(|n| {
                let f1 = first.factor[n];
                if f1 == 0.0 {
                    return 0.0;
                }
                let mid = n as isize + first.shift;
                if mid < 0 || mid >= d as isize {
                    return 0.0;
                }
                f1 * self.factor[mid as usize]
            })
            .collect();
        Self { factor, shift: self.shift + first.shift }
    }
}

/// Weighted point masses in phase space: a certified-classical P function.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoherentMixtureSpec {
    pub components: Vec<(f64, Vec<C64>)>,
}

impl CoherentMixtureSpec {
    pub fn new(components: Vec<(f64, Vec<C64>)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidParameter("coherent mixture needs a component".into()));
        }
        let total: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| !(*w > 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "coherent mixture weights must be positive and sum to 1 (got {total})"
            )));
        }
        Ok(Self { components })
    }
}

/// Occupation tail mass targeted by the default cutoffs.
pub const DEFAULT_CUTOFF_TAIL: f64 = 1e-14;

/// Smallest `d ≥ floor` with `Σ_{n≥d} p_n ≤ DEFAULT_CUTOFF_TAIL`, for `ln p_n` given by `log_p`.
fn tail_cutoff(log_p: impl Fn(usize) -> f64, floor: usize) -> usize {
    let stop = DEFAULT_CUTOFF_TAIL.ln() - 60.0;
    let mut logs = Vec::new();
    let mut peak = f64::NEG_INFINITY;
    for n in 0..MAX_DIM {
        let l = log_p(n);
        peak = peak.max(l);
        logs.push(l);
        let prev = if n > 0 { logs[n - 1] } else { l };
        if n > 2 && l.max(prev) < stop && l.max(prev) < peak - 60.0 {
            break;
        }
    }
    let mut tail = 0.0;
    let mut d = logs.len();
    for (n, l) in logs.iter().enumerate().rev() {
        tail += l.exp();
        if tail > DEFAULT_CUTOFF_TAIL {
            break;
        }
        d = n;
    }
    d.max(floor).max(2)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Default cutoff of one coherent mode: tail bound and `|α|² ≤ d/4`.
pub fn default_cutoff_coherent(alpha: C64) -> usize {
    let lambda = alpha.norm_sqr();
    if lambda == 0.0 {
        return 2;
    }
    let floor = (4.0 * lambda).ceil() as usize;
    tail_cutoff(|n| -lambda + n as f64 * lambda.ln() - ln_factorial(n), floor)
}

/// Default cutoff of one thermal mode with mean occupation `nbar`.
pub fn default_cutoff_thermal(nbar: f64) -> usize {
    if nbar <= 0.0 {
        return 2;
    }
    let q = nbar / (1.0 + nbar);
    tail_cutoff(|n| -(1.0 + nbar).ln() + n as f64 * q.ln(), 2)
}

/// Default cutoff of a single-mode squeezed vacuum.
pub fn default_cutoff_squeezed(r: f64) -> usize {
    let t = r.abs().tanh();
    if t == 0.0 {
        return 2;
    }
    tail_cutoff(
        |n| {
            if n % 2 == 1 {
                return f64::NEG_INFINITY;
            }
            let k = n / 2;
            2.0 * k as f64 * t.ln() + ln_factorial(n) - 2.0 * (k as f64 * 2f64.ln() + ln_factorial(k)) - r.abs().cosh().ln()
        },
        2,
    )
}

/// Default per-mode cutoff of a two-mode squeezed vacuum: at least `max(24, ⌈12 cosh² r⌉)`.
pub fn default_cutoff_tmsv(r: f64) -> usize {
    let floor = 24usize.max((12.0 * r.cosh().powi(2)).ceil() as usize);
    let t = r.abs().tanh();
    if t == 0.0 {
        return floor;
    }
    tail_cutoff(|n| (1.0 - t * t).ln() + 2.0 * n as f64 * t.ln(), floor)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn number(mode: usize) -> Vec<Letter> {
        vec![Letter::create(mode), Letter::annihilate(mode)]
    }

    #[test]
    fn shape_rejects_degenerate_cutoffs() {
        assert!(ModeShape::new(vec![]).is_err());
        assert!(ModeShape::new(vec![3, 1]).is_err());
        assert!(ModeShape::new(vec![1 << 20, 1 << 20]).is_err());
        let s = ModeShape::new(vec![3, 4]).unwrap();
        assert_eq!(s.dim(), 12);
        assert_eq!(s.strides(), vec![4, 1]);
        assert_eq!(s.index_of(&[2, 1]).unwrap(), 9);
        assert_eq!(s.occupation_of(9), vec![2, 1]);
    }

    #[test]
    fn coherent_vacuum_and_mean_number() {
        let shape = ModeShape::uniform(2, 6).unwrap();
        let vac = FockState::coherent(&shape, &[c(0.0, 0.0), c(0.0, 0.0)], Truncation::default()).unwrap();
        assert_eq!(vac, FockState::vacuum(&shape));
        assert_eq!(vac.leakage(), 0.0);

        let shape = ModeShape::uniform(1, 30).unwrap();
        let st = FockState::coherent(&shape, &[c(1.0, 0.0)], Truncation::default()).unwrap();
        // oracle: Σ n |c_n|²
        let direct: f64 = st.amplitudes().unwrap().iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum();
        let n = st.expect_word(&number(0)).unwrap();
        assert!((n.re - 1.0).abs() < 1e-12);
        assert!((n.re - direct).abs() < 1e-14);
    }

    #[test]
    fn coherent_eigenvalue() {
        let shape = ModeShape::uniform(1, 25).unwrap();
        let alpha = c(0.5, 0.5);
        let st = FockState::coherent(&shape, &[alpha], Truncation::default()).unwrap();
        let a = st.expect_word(&[Letter::annihilate(0)]).unwrap();
        assert!((a - alpha).norm() < 1e-10);
    }

    #[test]
    fn coherent_guard() {
        let shape = ModeShape::uniform(1, 8).unwrap();
        let err = FockState::coherent(&shape, &[c(2.0, 0.0)], Truncation::default()).unwrap_err();
        assert!(matches!(err, Error::CutoffOverflow(_)));
        let st = FockState::coherent(&shape, &[c(2.0, 0.0)], Truncation::permissive()).unwrap();
        assert!(st.leakage() > 1e-3);
    }

    #[test]
    fn fock_moments() {
        let shape = ModeShape::uniform(1, 5).unwrap();
        assert_eq!(FockState::fock(&shape, &[0]).unwrap(), FockState::vacuum(&shape));
        assert!(FockState::fock(&shape, &[5]).is_err());

        let shape = ModeShape::uniform(2, 4).unwrap();
        let s11 = FockState::fock(&shape, &[1, 1]).unwrap();
        let w = [Letter::create(0), Letter::annihilate(0), Letter::create(1), Letter::annihilate(1)];
        assert!((s11.expect_word(&w).unwrap() - 1.0).norm() < 1e-15);

        let s20 = FockState::fock(&shape, &[2, 0]).unwrap();
        let w = [Letter::create(0), Letter::create(0), Letter::annihilate(0), Letter::annihilate(0)];
        assert!((s20.expect_word(&w).unwrap() - 2.0).norm() < 1e-14);
        assert!((s20.expect_normal(&[(0, 2, 2)]).unwrap() - 2.0).norm() < 1e-14);
    }

    #[test]
    fn thermal_moments() {
        let shape = ModeShape::uniform(1, 5).unwrap();
        let vac = FockState::thermal(&shape, &[0.0], Truncation::default()).unwrap();
        assert_eq!(vac, FockState::vacuum(&shape).to_density());

        // oracle: direct series Σ p_n n²
        let shape = ModeShape::uniform(1, 40).unwrap();
        let th = FockState::thermal(&shape, &[0.5], Truncation::default()).unwrap();
        let series: f64 = (0..40).map(|n| (0.5f64).powi(n) / 1.5f64.powi(n + 1) * (n * n) as f64).sum();
        let w = [Letter::create(0), Letter::annihilate(0), Letter::create(0), Letter::annihilate(0)];
        let n2 = th.expect_word(&w).unwrap().re;
        assert!((n2 - 1.0).abs() < 1e-8);
        assert!((n2 - series).abs() < 1e-12);

        let shape = ModeShape::uniform(1, 60).unwrap();
        let th = FockState::thermal(&shape, &[1.0], Truncation::default()).unwrap();
        let series: f64 = (0..60).map(|n| 0.5f64.powi(n + 1) * (n * (n - 1).max(0)) as f64).sum();
        let nn = th.expect_normal(&[(0, 2, 2)]).unwrap().re;
        assert!((nn - 2.0).abs() < 1e-8);
        assert!((nn - series).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_number() {
        let shape = ModeShape::uniform(1, 6).unwrap();
        let sv = FockState::squeezed_vacuum(&shape, 0.0, 0.0, Truncation::default()).unwrap();
        assert_eq!(sv, FockState::vacuum(&shape));

        let r: f64 = 0.5;
        let shape = ModeShape::uniform(1, 40).unwrap();
        let sv = FockState::squeezed_vacuum(&shape, r, 0.0, Truncation::default()).unwrap();
        let direct: f64 = sv.amplitudes().unwrap().iter().enumerate().map(|(n, a)| n as f64 * a.norm_sqr()).sum();
        assert!((direct - r.sinh().powi(2)).abs() < 1e-8);
        let a2 = sv.expect_normal(&[(0, 0, 2)]).unwrap();
        assert!((a2 - r.sinh() * r.cosh()).norm() < 1e-8);
    }

    #[test]
    fn tmsv_moments() {
        let shape = ModeShape::uniform(2, 5).unwrap();
        let t0 = FockState::tmsv(&shape, 0.0, Truncation::default()).unwrap();
        assert_eq!(t0, FockState::vacuum(&shape));

        let r: f64 = 1.0;
        let shape = ModeShape::uniform(2, 30).unwrap();
        let t = FockState::tmsv(&shape, r, Truncation::with_leakage_tol(1e-6)).unwrap();
        // oracle: ladder contraction on the series Σ c_n c_{n-1} n
        let cn = |n: i32| r.tanh().powi(n) / r.cosh();
        let series: f64 = (1..30).map(|n| cn(n) * cn(n - 1) * n as f64).sum();
        let ab = t.expect_word(&[Letter::annihilate(0), Letter::annihilate(1)]).unwrap();
        assert!((ab.re - series).abs() < 1e-12);
        assert!((ab.re - r.sinh() * r.cosh()).abs() < 1e-5);
        let n1 = t.expect_word(&number(0)).unwrap().re;
        let n2 = t.expect_word(&number(1)).unwrap().re;
        assert!((n1 - r.sinh().powi(2)).abs() < 1e-5);
        assert!((n1 - n2).abs() < 1e-14);
        assert!(FockState::tmsv(&shape, r, Truncation::default()).is_err());
    }

    #[test]
    fn tensor_and_mix() {
        let one = ModeShape::uniform(1, 4).unwrap();
        let two = ModeShape::uniform(2, 4).unwrap();
        let v = FockState::vacuum(&one);
        assert_eq!(v.tensor(&v).unwrap(), FockState::vacuum(&two));

        let m = FockState::mix(&[(1.0, &v)]).unwrap();
        assert_eq!(m, v.to_density());

        let shape = ModeShape::uniform(1, 20).unwrap();
        let p = FockState::coherent(&shape, &[c(1.0, 0.0)], Truncation::default()).unwrap();
        let q = FockState::coherent(&shape, &[c(-1.0, 0.0)], Truncation::default()).unwrap();
        let m = FockState::mix(&[(0.5, &p), (0.5, &q)]).unwrap();
        assert_eq!(m.kind(), StateKind::Density);
        assert!(m.expect_word(&[Letter::annihilate(0)]).unwrap().norm() < 1e-12);
        assert!((m.expect_word(&number(0)).unwrap().re - 1.0).abs() < 1e-10);

        assert!(FockState::mix(&[(0.5, &p), (0.4, &q)]).is_err());
        assert!(FockState::mix(&[(0.5, &p), (0.5, &v)]).is_err());
    }

    #[test]
    fn empty_word_is_trace() {
        let shape = ModeShape::uniform(1, 8).unwrap();
        let st = FockState::coherent(&shape, &[c(0.3, 0.0)], Truncation::with_leakage_tol(1e-3)).unwrap();
        let e = st.expect_word(&[]).unwrap();
        assert!((e.re - (1.0 - st.leakage())).abs() < 1e-15);
    }

    #[test]
    fn plain_order_adds_commutator() {
        let shape = ModeShape::uniform(1, 31).unwrap();
        let st = FockState::coherent(&shape, &[c(1.0, 0.0)], Truncation::default()).unwrap();
        let aad = st.expect_word(&[Letter::annihilate(0), Letter::create(0)]).unwrap();
        assert!((aad.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn raw_inputs_are_validated() {
        let shape = ModeShape::uniform(1, 2).unwrap();
        assert!(FockState::from_amplitudes(shape.clone(), vec![c(1.0, 0.0), c(1.0, 0.0)], Truncation::default()).is_err());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let st = FockState::from_amplitudes(shape.clone(), vec![c(h, 0.0), c(0.0, h)], Truncation::default()).unwrap();
        assert!(st.leakage() < 1e-15);
        let not_herm = vec![c(0.5, 0.0), c(0.1, 0.0), c(0.2, 0.0), c(0.5, 0.0)];
        assert!(FockState::from_density(shape.clone(), not_herm, Truncation::default()).is_err());
        let negative = vec![c(0.5, 0.0), c(0.9, 0.0), c(0.9, 0.0), c(0.5, 0.0)];
        assert!(FockState::from_density(shape.clone(), negative, Truncation::default()).is_err());
        let ok = vec![c(0.5, 0.0), c(0.0, 0.2), c(0.0, -0.2), c(0.5, 0.0)];
        assert!(FockState::from_density(shape, ok, Truncation::default()).is_ok());
    }

    #[test]
    fn default_cutoffs_bound_the_tail() {
        let tight = Truncation::with_leakage_tol(2.0 * DEFAULT_CUTOFF_TAIL);
        for a in [c(0.0, 0.0), c(0.3, -0.4), c(1.5, 1.0), c(3.0, 0.0)] {
            let d = default_cutoff_coherent(a);
            let s = FockState::coherent(&ModeShape::uniform(1, d).unwrap(), &[a], tight).unwrap();
            assert!(s.leakage() <= 2.0 * DEFAULT_CUTOFF_TAIL);
            if d > 2 {
                let short = FockState::coherent(&ModeShape::uniform(1, d - 1).unwrap(), &[a], Truncation::permissive());
                assert!(short.unwrap().leakage() > DEFAULT_CUTOFF_TAIL || (d - 1) as f64 / 4.0 < a.norm_sqr());
            }
        }
        for r in [0.1, 0.5, 1.0] {
            let d = default_cutoff_squeezed(r);
            let s = FockState::squeezed_vacuum(&ModeShape::uniform(1, d).unwrap(), r, 0.0, tight).unwrap();
            assert!(s.leakage() <= 2.0 * DEFAULT_CUTOFF_TAIL);
            let d = default_cutoff_tmsv(r);
            assert!(d >= 24 && d as f64 >= 12.0 * r.cosh().powi(2));
            let s = FockState::tmsv(&ModeShape::uniform(2, d).unwrap(), r, tight).unwrap();
            assert!(s.leakage() <= 2.0 * DEFAULT_CUTOFF_TAIL);
        }
        assert_eq!(default_cutoff_thermal(0.0), 2);
        let d = default_cutoff_thermal(1.0);
        assert_eq!(d, (DEFAULT_CUTOFF_TAIL.ln() / 0.5f64.ln()).ceil() as usize);
        assert_eq!(default_cutoff_tmsv(0.0), 24);
    }
}
