//! Named operators of the squeezing and photon-number criteria.
//!
//! Two-mode operators act on modes 0 and 1. Multimode operators act on modes
//! `0..modes`; for the difference operators the first `k` modes are
//! annihilated and the remaining ones created.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use super::PolyOperator;
use crate::error::{Error, Result};
use crate::fock::C64;

/// `e^{iφ}`, exact at integer multiples of π/2.
pub fn cis(phi: f64) -> C64 {
    let quarter = phi / FRAC_PI_2;
    if quarter.round() == quarter && quarter.abs() < 1e15 {
        return match (quarter as i64).rem_euclid(4) {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        };
    }
    C64::from_polar(1.0, phi)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum NamedOperator {
    /// `X_φ = Σ_m c_m (a_m e^{iφ_m} + a_m† e^{-iφ_m})` with real `c_m`.
    Quadrature { phases: Vec<f64>, coeffs: Vec<f64> },
    /// `a_12 = a_0 + a_1`.
    PairSum,
    /// `V_φ = ½(a b e^{-iφ} + a† b† e^{iφ})`.
    SumSqueeze { phase: f64 },
    /// `V_z = ½(n_a + n_b + 1)`.
    SumSqueezeZ,
    /// `W_φ = ½(a b† e^{iφ} + a† b e^{-iφ})`.
    DifferenceSqueeze { phase: f64 },
    /// `W_z = ½(n_a − n_b)`.
    DifferenceSqueezeZ,
    /// `𝒱_φ = ½(e^{-iφ} Π_j a_j + e^{iφ} Π_j a_j†)`.
    MultiSum { phase: f64, modes: usize },
    /// `𝒲_φ = ½ e^{-iφ} Π_{j<k} a_j Π_{j≥k} a_j† + H.c.`
    MultiDifference { phase: f64, modes: usize, k: usize },
    /// `Ĉ = Π(1 + n_j) − Π n_j`, the commutator operator of `𝒱_φ`.
    SumCommutator { modes: usize },
    /// `Ĉ = Π_{j<k}(1 + n_j) Π_{j≥k} n_j − Π_{j<k} n_j Π_{j≥k}(1 + n_j)`.
    DifferenceCommutator { modes: usize, k: usize },
    /// `D̂ = Π_{j<k}(1+n_j) Π_{j≥k} n_j + Π_{j<k} n_j Π_{j≥k}(1+n_j) − 2 Π n_j`.
    DifferenceOffset { modes: usize, k: usize },
    /// `n_a + n_b`.
    NumberSum,
    /// `n_a − n_b`.
    NumberDifference,
}

fn half() -> C64 {
    C64::new(0.5, 0.0)
}

fn product_of<F: Fn(usize) -> PolyOperator>(range: std::ops::Range<usize>, f: F) -> PolyOperator {
    range.fold(PolyOperator::identity(), |acc, j| acc.product(&f(j)))
}

fn one_plus_n(j: usize) -> PolyOperator {
    &PolyOperator::identity() + &PolyOperator::number(j)
}

fn check_multimode(modes: usize, k: Option<usize>) -> Result<()> {
    if modes < 2 {
        return Err(Error::InvalidParameter(format!("multimode operator needs at least 2 modes, got {modes}")));
    }
    if let Some(k) = k {
        if k == 0 || k >= modes {
            return Err(Error::InvalidParameter(format!("difference operator needs 0 < K < M, got K={k}, M={modes}")));
        }
    }
    Ok(())
}

pub fn build_named(op: &NamedOperator) -> Result<PolyOperator> {
    use NamedOperator::*;
    let a = PolyOperator::annihilation;
    let ad = PolyOperator::creation;
    Ok(match op {
        Quadrature { phases, coeffs } => {
            if phases.is_empty() || phases.len() != coeffs.len() {
                return Err(Error::InvalidParameter(format!(
                    "quadrature needs matching non-empty phase and coefficient lists ({} vs {})",
                    phases.len(),
                    coeffs.len()
                )));
            }
            let mut x = PolyOperator::zero();
            for (m, (&phi, &cm)) in phases.iter().zip(coeffs).enumerate() {
                let w = cis(phi) * cm;
                x = &x + &(&a(m).scale(w) + &ad(m).scale(w.conj()));
            }
            x
        }
        PairSum => &a(0) + &a(1),
        SumSqueeze { phase } => {
            let w = cis(-*phase) * half();
            &a(0).product(&a(1)).scale(w) + &ad(0).product(&ad(1)).scale(w.conj())
        }
        SumSqueezeZ => (&(&PolyOperator::number(0) + &PolyOperator::number(1)) + &PolyOperator::identity()).scale(half()),
        DifferenceSqueeze { phase } => {
            let w = cis(*phase) * half();
            &a(0).product(&ad(1)).scale(w) + &ad(0).product(&a(1)).scale(w.conj())
        }
        DifferenceSqueezeZ => (&PolyOperator::number(0) - &PolyOperator::number(1)).scale(half()),
        MultiSum { phase, modes } => {
            check_multimode(*modes, None)?;
            let w = cis(-*phase) * half();
            let lower = product_of(0..*modes, a);
            let upper = product_of(0..*modes, ad);
            &lower.scale(w) + &upper.scale(w.conj())
        }
        MultiDifference { phase, modes, k } => {
            check_multimode(*modes, Some(*k))?;
            let w = cis(-*phase) * half();
            let g = product_of(0..*k, a).product(&product_of(*k..*modes, ad));
            &g.scale(w) + &g.adjoint().scale(w.conj())
        }
        SumCommutator { modes } => {
            check_multimode(*modes, None)?;
            &product_of(0..*modes, one_plus_n) - &product_of(0..*modes, PolyOperator::number)
        }
        DifferenceCommutator { modes, k } => {
            check_multimode(*modes, Some(*k))?;
            let first = product_of(0..*k, one_plus_n).product(&product_of(*k..*modes, PolyOperator::number));
            let second = product_of(0..*k, PolyOperator::number).product(&product_of(*k..*modes, one_plus_n));
            &first - &second
        }
        DifferenceOffset { modes, k } => {
            check_multimode(*modes, Some(*k))?;
            let first = product_of(0..*k, one_plus_n).product(&product_of(*k..*modes, PolyOperator::number));
            let second = product_of(0..*k, PolyOperator::number).product(&product_of(*k..*modes, one_plus_n));
            let all = product_of(0..*modes, PolyOperator::number);
            &(&first + &second) - &all.scale(C64::new(2.0, 0.0))
        }
        NumberSum => &PolyOperator::number(0) + &PolyOperator::number(1),
        NumberDifference => &PolyOperator::number(0) - &PolyOperator::number(1),
    })
}
