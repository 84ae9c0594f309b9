//! Seeded random state families for the property suites.
//!
//! Every draw is described by a serializable [`DrawSpec`] that rebuilds the
//! state exactly, so a failing draw can be reported and replayed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{CoherentMixtureSpec, FockState, ModeShape, Truncation, C64};

/// Cutoff of the certified-classical coherent mixtures.
pub const COHERENT_MIXTURE_CUTOFF: usize = 24;
pub const COHERENT_MIXTURE_MAX_COMPONENTS: usize = 5;
pub const COHERENT_MIXTURE_MAX_ALPHA: f64 = 1.5;
/// Cutoff and size of the separable product mixtures.
pub const SEPARABLE_CUTOFF: usize = 8;
pub const SEPARABLE_MODES: usize = 3;
pub const SEPARABLE_MAX_COMPONENTS: usize = 4;
pub const SEPARABLE_MAX_ALPHA: f64 = 0.6;
/// Occupations used by the finite-support local states of separable draws.
pub const SEPARABLE_SUPPORT: usize = 4;
/// Cutoff of the random pure two-mode states.
pub const PURE_CUTOFF: usize = 10;
/// Leakage accepted for truncated coherent components.
pub const SAMPLING_LEAKAGE_TOL: f64 = 1e-6;

/// One mode's pure state inside a product component.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LocalState {
    Coherent { alpha: C64 },
    /// Normalized amplitudes on `|0⟩, |1⟩, …`.
    Amplitudes { amplitudes: Vec<C64> },
}

/// Replayable description of a random state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DrawSpec {
    /// `Σ_k w_k |α_k⟩⟨α_k|` over all modes.
    CoherentMixture { cutoff: usize, weights: Vec<f64>, alphas: Vec<Vec<C64>> },
    /// `Σ_k w_k ⊗_m |ψ_{k,m}⟩⟨ψ_{k,m}|`.
    ProductMixture { cutoff: usize, weights: Vec<f64>, components: Vec<Vec<LocalState>> },
    /// Pure state with the given amplitudes in Kronecker order.
    Pure { modes: usize, cutoff: usize, amplitudes: Vec<C64> },
    /// `Σ_k w_k |ψ_k⟩⟨ψ_k|` for pure states `ψ_k` in Kronecker order.
    Mixed { modes: usize, cutoff: usize, weights: Vec<f64>, amplitudes: Vec<Vec<C64>> },
}

impl DrawSpec {
    pub fn build(&self) -> Result<FockState> {
        let trunc = Truncation::with_leakage_tol(SAMPLING_LEAKAGE_TOL);
        match self {
            DrawSpec::CoherentMixture { cutoff, weights, alphas } => {
                let modes = alphas.first().map_or(0, Vec::len);
                let shape = ModeShape::uniform(modes, *cutoff)?;
                let spec = CoherentMixtureSpec::new(weights.iter().copied().zip(alphas.iter().cloned()).collect())?;
                FockState::coherent_mixture(&shape, &spec, trunc)
            }
            DrawSpec::ProductMixture { cutoff, weights, components } => {
                let local = ModeShape::uniform(1, *cutoff)?;
                let built = components
                    .iter()
                    .map(|modes| {
                        let mut it = modes.iter().map(|m| local_state(m, &local, trunc));
                        let first = it.next().ok_or_else(|| Error::InvalidParameter("empty product component".into()))??;
                        it.try_fold(first, |acc, s| acc.tensor(&s?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                mix(weights, &built)
            }
            DrawSpec::Pure { modes, cutoff, amplitudes } => {
                FockState::from_amplitudes(ModeShape::uniform(*modes, *cutoff)?, amplitudes.clone(), trunc)
            }
            DrawSpec::Mixed { modes, cutoff, weights, amplitudes } => {
                let shape = ModeShape::uniform(*modes, *cutoff)?;
                let built = amplitudes
                    .iter()
                    .map(|a| FockState::from_amplitudes(shape.clone(), a.clone(), trunc))
                    .collect::<Result<Vec<_>>>()?;
                mix(weights, &built)
            }
        }
    }
}

fn local_state(s: &LocalState, shape: &ModeShape, trunc: Truncation) -> Result<FockState> {
    match s {
        LocalState::Coherent { alpha } => FockState::coherent(shape, &[*alpha], trunc),
        LocalState::Amplitudes { amplitudes } => {
            let mut padded = amplitudes.clone();
            padded.resize(shape.dim(), C64::new(0.0, 0.0));
            FockState::from_amplitudes(shape.clone(), padded, trunc)
        }
    }
}

fn mix(weights: &[f64], states: &[FockState]) -> Result<FockState> {
    if states.len() == 1 {
        return Ok(states[0].to_density());
    }
    let parts: Vec<(f64, &FockState)> = weights.iter().copied().zip(states).collect();
    FockState::mix(&parts)
}

/// Generator for draw `index` of a run seeded with `seed`; draws are independent of each other.
pub fn rng_for(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut w: Vec<f64> = raw.iter().map(|x| x / total).collect();
    // Make the sum exactly one in floating point.
    let rest: f64 = w[1..].iter().sum();
    w[0] = 1.0 - rest;
    w
}

/// Uniform point of the disk `|z| ≤ r`.
fn disk(rng: &mut ChaCha8Rng, r: f64) -> C64 {
    let rad = r * rng.random::<f64>().sqrt();
    C64::from_polar(rad, rng.random_range(0.0..std::f64::consts::TAU))
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<C64> {
    let mut v: Vec<C64> = (0..n)
        .map(|_| {
            // Box-Muller pair as one complex Gaussian.
            let u: f64 = rng.random_range(f64::EPSILON..1.0);
            let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            C64::from_polar((-2.0 * u.ln()).sqrt(), t)
        })
        .collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z /= norm;
    }
    v
}

/// Certified-classical state: mixture of 1–5 two-mode coherent states with `|α| ≤ 1.5`.
pub fn coherent_mixture_draw(seed: u64, index: usize) -> DrawSpec {
    let mut rng = rng_for(seed, index);
    let k = rng.random_range(1..=COHERENT_MIXTURE_MAX_COMPONENTS);
    let weights = weights(&mut rng, k);
    let alphas = (0..k).map(|_| (0..2).map(|_| disk(&mut rng, COHERENT_MIXTURE_MAX_ALPHA)).collect()).collect();
    DrawSpec::CoherentMixture { cutoff: COHERENT_MIXTURE_CUTOFF, weights, alphas }
}

/// Separable three-mode state: mixture of products of coherent or finite-support pure states.
pub fn separable_draw(seed: u64, index: usize) -> DrawSpec {
    let mut rng = rng_for(seed, index);
    let k = rng.random_range(1..=SEPARABLE_MAX_COMPONENTS);
    let weights = weights(&mut rng, k);
    let components = (0..k)
        .map(|_| {
            (0..SEPARABLE_MODES)
                .map(|_| {
                    if rng.random_bool(0.5) {
                        LocalState::Coherent { alpha: disk(&mut rng, SEPARABLE_MAX_ALPHA) }
                    } else {
                        let support = rng.random_range(1..=SEPARABLE_SUPPORT);
                        LocalState::Amplitudes { amplitudes: gaussian_vector(&mut rng, support) }
                    }
                })
                .collect()
        })
        .collect();
    DrawSpec::ProductMixture { cutoff: SEPARABLE_CUTOFF, weights, components }
}

/// Haar-like random pure two-mode state with full support on the truncated space.
pub fn pure_draw(seed: u64, index: usize) -> DrawSpec {
    let mut rng = rng_for(seed, index);
    DrawSpec::Pure { modes: 2, cutoff: PURE_CUTOFF, amplitudes: gaussian_vector(&mut rng, PURE_CUTOFF * PURE_CUTOFF) }
}

/// Small random mixed state of rank ≤ 3, sized for the dense oracle.
pub fn small_mixed_draw(seed: u64, index: usize, modes: usize) -> DrawSpec {
    let mut rng = rng_for(seed, index);
    let cutoff: usize = if modes >= 3 { 5 } else { rng.random_range(5..=6) };
    let k = rng.random_range(1..=3);
    let weights = weights(&mut rng, k);
    let dim = cutoff.pow(modes as u32);
    let amplitudes = (0..k).map(|_| gaussian_vector(&mut rng, dim)).collect();
    DrawSpec::Mixed { modes, cutoff, weights, amplitudes }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_reproducible_and_independent() {
        assert_eq!(coherent_mixture_draw(42, 3), coherent_mixture_draw(42, 3));
        assert_ne!(coherent_mixture_draw(42, 3), coherent_mixture_draw(42, 4));
        assert_ne!(coherent_mixture_draw(42, 3), coherent_mixture_draw(43, 3));
    }

    #[test]
    fn families_respect_their_bounds() {
        for i in 0..20 {
            if let DrawSpec::CoherentMixture { weights, alphas, cutoff } = coherent_mixture_draw(1, i) {
                assert!(weights.len() <= COHERENT_MIXTURE_MAX_COMPONENTS);
                assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-15);
                assert!(alphas.iter().flatten().all(|a| a.norm() <= COHERENT_MIXTURE_MAX_ALPHA));
                assert_eq!(cutoff, COHERENT_MIXTURE_CUTOFF);
            } else {
                panic!("wrong family");
            }
            let s = separable_draw(1, i).build().unwrap();
            assert_eq!(s.num_modes(), SEPARABLE_MODES);
            assert!(s.leakage() <= SAMPLING_LEAKAGE_TOL);
            let p = pure_draw(1, i).build().unwrap();
            assert!(p.leakage() < 1e-12);
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let d = separable_draw(9, 0);
        let text = serde_json::to_string(&d).unwrap();
        let back: DrawSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.build().unwrap(), d.build().unwrap());
    }
}
