//! Single-time nonclassicality witnesses.

use serde::Serialize;

use super::{c, mono, plain_variance, require_modes, set, Builder, EvalOptions, Verdict, WitnessVerdict, CHECK_TOL_REL};
use crate::algebra::{build_named, NamedOperator, PolyOperator};
use crate::error::Result;
use crate::fock::{FockState, C64};
use crate::moments::det_tolerance;

const NC: Verdict = Verdict::Nonclassical;

fn one() -> PolyOperator {
    PolyOperator::identity()
}

/// `⟨:ΔX_φ²:⟩` from `F = (1, X_φ)`, with `X_φ = Σ_m c_m (a_m e^{iφ_m} + h.c.)`.
pub fn w_quadrature_squeezing(state: &FockState, phases: &[f64], coeffs: &[f64], opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.quadrature_squeezing";
    require_modes(state, phases.len(), id)?;
    let x = build_named(&NamedOperator::Quadrature { phases: phases.to_vec(), coeffs: coeffs.to_vec() })?;
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(1,X)", &set(vec![("1", one()), ("X", x.clone())])?)?;
    let (var, norm) = plain_variance(&b, &x)?;
    let offset = coeffs.iter().map(|c| c * c).sum::<f64>() * norm * norm;
    b.value("variance", var);
    b.check("variance = d + sum c^2", var, d.value + offset, det_tolerance(CHECK_TOL_REL, d.scale.max(offset), 2))?;
    b.note(format!("phases {phases:?}, coefficients {coeffs:?}"));
    let tol = d.tol(opts.tol_rel);
    Ok(b.finish(d.value, 0.0, tol, NC))
}

/// Two-mode principal squeezing: `F = (Δa₁₂†, Δa₁₂)` and `F = (1, a₁₂†, a₁₂)`.
pub fn w_principal_squeezing(state: &FockState, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.principal_squeezing.luks";
    require_modes(state, 2, id)?;
    let a12 = build_named(&NamedOperator::PairSum)?;
    let da = a12.shift_by_mean(state)?;
    let mut b = Builder::new(id, Some(state), opts);
    let small = b.normal("d(Da12+,Da12)", &set(vec![("Da12+", da.adjoint()), ("Da12", da.clone())])?)?;
    let big = b.normal("d(1,a12+,a12)", &set(vec![("1", one()), ("a12+", a12.adjoint()), ("a12", a12)])?)?;
    b.check("2x2 = 3x3", small.value, big.value, super::joint_tol(CHECK_TOL_REL, &[small, big]))?;
    let n = b.expect_real(&da.adjoint().normal_product(&da))?;
    let sq = b.expect(&da.normal_product(&da))?.norm();
    b.value("<Da12+ Da12>", n);
    b.value("|<Da12^2>|", sq);
    let tol = super::joint_tol(opts.tol_rel, &[small, big]);
    Ok(b.finish(small.value, 0.0, tol, NC))
}

/// Hillery sum squeezing `F = (1, V_φ)`.
pub fn w_sum_squeezing(state: &FockState, phi: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.sum_squeezing.hillery";
    require_modes(state, 2, id)?;
    let v = build_named(&NamedOperator::SumSqueeze { phase: phi })?;
    let vz = build_named(&NamedOperator::SumSqueezeZ)?;
    squeeze_common(id, state, phi, &v, opts, |b| Ok(0.5 * b.expect_real(&vz)?), "variance = d + <Vz>/2")
}

/// An–Tinh multimode sum squeezing `F = (1, 𝒱_φ)` over all modes of the state.
pub fn w_sum_squeezing_mm(state: &FockState, phi: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.sum_squeezing.an_tinh";
    require_modes(state, 2, id)?;
    let modes = state.num_modes();
    let v = build_named(&NamedOperator::MultiSum { phase: phi, modes })?;
    let cop = build_named(&NamedOperator::SumCommutator { modes })?;
    squeeze_common(id, state, phi, &v, opts, |b| Ok(0.25 * b.expect_real(&cop)?.abs()), "variance = d + |<C>|/4")
}

fn squeeze_common(
    id: &str,
    state: &FockState,
    phi: f64,
    v: &PolyOperator,
    opts: &EvalOptions,
    offset: impl Fn(&Builder<'_>) -> Result<f64>,
    check_name: &str,
) -> Result<WitnessVerdict> {
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(1,V)", &set(vec![("1", one()), ("V", v.clone())])?)?;
    let (var, norm) = plain_variance(&b, v)?;
    let off = offset(&b)? * norm;
    b.value("variance", var);
    b.value("variance_offset", off);
    b.check(check_name, var, d.value + off, det_tolerance(CHECK_TOL_REL, d.scale.max(off), 2))?;
    b.note(format!("phase {phi}"));
    let tol = d.tol(opts.tol_rel);
    Ok(b.finish(d.value, 0.0, tol, NC))
}

/// Hillery difference squeezing `F = (1, W_φ)` with the squeezing band.
pub fn w_difference_squeezing(state: &FockState, phi: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.difference_squeezing.hillery";
    require_modes(state, 2, id)?;
    let w = build_named(&NamedOperator::DifferenceSqueeze { phase: phi })?;
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(1,W)", &set(vec![("1", one()), ("W", w.clone())])?)?;
    let n1 = b.expect_real(&PolyOperator::number(0))?;
    let n2 = b.expect_real(&PolyOperator::number(1))?;
    let (var, norm) = plain_variance(&b, &w)?;
    let off = 0.25 * (n1 + n2);
    b.value("variance", var);
    b.check("variance = d + (<n1>+<n2>)/4", var, d.value + off * norm, det_tolerance(CHECK_TOL_REL, d.scale.max(off), 2))?;
    let thr_min = -0.5 * n1.min(n2);
    let thr_wz = 0.25 * (n1 - n2).abs() - off;
    b.value("squeezing_threshold", thr_min);
    b.value("squeezing_threshold_wz", thr_wz);
    b.note(format!("phase {phi}"));
    let tol = d.tol(opts.tol_rel);
    band(&mut b, d.value, thr_min, tol)?;
    Ok(b.finish(d.value, 0.0, tol, NC))
}

/// An–Tinh multimode difference squeezing `F = (1, 𝒲_φ)`, first `k` modes annihilated.
pub fn w_difference_squeezing_mm(state: &FockState, phi: f64, k: usize, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.difference_squeezing.an_tinh";
    require_modes(state, 2, id)?;
    let modes = state.num_modes();
    let w = build_named(&NamedOperator::MultiDifference { phase: phi, modes, k })?;
    let cop = build_named(&NamedOperator::DifferenceCommutator { modes, k })?;
    let dop = build_named(&NamedOperator::DifferenceOffset { modes, k })?;
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(1,W)", &set(vec![("1", one()), ("W", w.clone())])?)?;
    let cv = b.expect_real(&cop)?;
    let dv = b.expect_real(&dop)?;
    let (var, norm) = plain_variance(&b, &w)?;
    b.value("<C>", cv);
    b.value("<D>", dv);
    b.value("variance", var);
    b.check("variance = d + <D>/4", var, d.value + 0.25 * dv * norm, det_tolerance(CHECK_TOL_REL, d.scale.max(dv.abs()), 2))?;
    let thr = 0.25 * (cv.abs() - dv);
    b.value("squeezing_threshold", thr);
    b.note(format!("phase {phi}, K = {k}, M = {modes}"));
    let tol = d.tol(opts.tol_rel);
    band(&mut b, d.value, thr, tol)?;
    Ok(b.finish(d.value, 0.0, tol, NC))
}

fn band(b: &mut Builder<'_>, d: f64, thr: f64, tol: f64) -> Result<()> {
    b.check_holds("squeezing threshold <= 0", thr <= tol)?;
    if d < thr - tol {
        b.flag("difference-squeezed");
    } else if d < -tol {
        b.flag("nonclassical-not-difference-squeezed");
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Sum,
    Difference,
}

/// `F = (1, n₁ ± n₂)`.
pub fn w_sub_poisson(state: &FockState, sign: Sign, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let (id, n) = match sign {
        Sign::Sum => ("table1.sub_poisson.sum", build_named(&NamedOperator::NumberSum)?),
        Sign::Difference => ("table1.sub_poisson.difference", build_named(&NamedOperator::NumberDifference)?),
    };
    require_modes(state, 2, id)?;
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(1,n)", &set(vec![("1", one()), ("n", n)])?)?;
    let tol = d.tol(opts.tol_rel);
    Ok(b.finish(d.value, 0.0, tol, NC))
}

/// Cauchy–Schwarz determinant `F = (f₁, f₂)`.
pub fn w_csi(state: &FockState, f1: &PolyOperator, f2: &PolyOperator, opts: &EvalOptions) -> Result<WitnessVerdict> {
    csi("table1.csi", state, f1, f2, opts).map(|(b, d, tol)| b.finish(d, 0.0, tol, NC))
}

fn csi<'a>(
    id: &str,
    state: &'a FockState,
    f1: &PolyOperator,
    f2: &PolyOperator,
    opts: &'a EvalOptions,
) -> Result<(Builder<'a>, f64, f64)> {
    if let Some(m) = f1.max_mode().max(f2.max_mode()) {
        require_modes(state, m + 1, id)?;
    }
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d(f1,f2)", &set(vec![("f1", f1.clone()), ("f2", f2.clone())])?)?;
    b.note(format!("f1 = {}, f2 = {}", f1.render(), f2.render()));
    let tol = d.tol(opts.tol_rel);
    Ok((b, d.value, tol))
}

/// Agarwal's test, `F = (n₁, n₂)`, with `I₁₂` when `⟨n₁n₂⟩ > 0`.
pub fn w_agarwal(state: &FockState, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.csi.agarwal";
    require_modes(state, 2, id)?;
    let (mut b, d, tol) = csi(id, state, &PolyOperator::number(0), &PolyOperator::number(1), opts)?;
    let n11 = b.expect_real(&mono(&[(0, 2, 2)]))?;
    let n22 = b.expect_real(&mono(&[(1, 2, 2)]))?;
    let n12 = b.expect_real(&mono(&[(0, 1, 1), (1, 1, 1)]))?;
    if n12 > 0.0 {
        let i12 = (n11 * n22).max(0.0).sqrt() / n12 - 1.0;
        b.value("I12", i12);
    } else {
        b.note("I12 undefined: <n1 n2> = 0");
    }
    Ok(b.finish(d, 0.0, tol, NC))
}

/// Lee's test: `D₁₂ = ⟨:n₋²:⟩` and the stronger `d = ⟨:n₋²:⟩ − ⟨n₋⟩²`.
pub fn w_lee(state: &FockState, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table1.lee";
    require_modes(state, 2, id)?;
    let nm = build_named(&NamedOperator::NumberDifference)?;
    let mut b = Builder::new(id, Some(state), opts);
    let d12 = b.normal("D12", &set(vec![("n-", nm.clone())])?)?;
    let d = b.normal("d(1,n-)", &set(vec![("1", one()), ("n-", nm)])?)?;
    let tol = d.tol(opts.tol_rel);
    let tol12 = d12.tol(opts.tol_rel);
    b.check_holds("D12 < 0 implies d < 0", d12.value >= -tol12 || d.value < -tol)?;
    if d12.value < -tol12 {
        b.flag("D12-negative");
    }
    Ok(b.finish(d.value, 0.0, tol, NC))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ZooVariant {
    X72,
    X78,
    X84,
    X90,
    X36,
}

impl ZooVariant {
    pub const ALL: [ZooVariant; 5] = [ZooVariant::X72, ZooVariant::X78, ZooVariant::X84, ZooVariant::X90, ZooVariant::X36];

    pub fn id(self) -> &'static str {
        match self {
            ZooVariant::X72 => "table1.zoo.x72",
            ZooVariant::X78 => "table1.zoo.x78",
            ZooVariant::X84 => "table1.zoo.x84",
            ZooVariant::X90 => "table1.zoo.x90",
            ZooVariant::X36 => "table1.zoo.x36",
        }
    }

    pub fn operator_set(self) -> Result<crate::moments::OperatorSet> {
        let a = PolyOperator::annihilation(0);
        let ad = PolyOperator::creation(0);
        let bb = PolyOperator::annihilation(1);
        let bd = PolyOperator::creation(1);
        match self {
            ZooVariant::X72 => set(vec![("1", one()), ("ab", mono(&[(0, 0, 1), (1, 0, 1)])), ("a+b+", mono(&[(0, 1, 0), (1, 1, 0)]))]),
            ZooVariant::X78 => set(vec![("1", one()), ("ab+", mono(&[(0, 0, 1), (1, 1, 0)])), ("a+b", mono(&[(0, 1, 0), (1, 0, 1)]))]),
            ZooVariant::X84 => set(vec![("1", one()), ("a+b+", &a + &bd), ("a++b", &ad + &bb)]),
            ZooVariant::X90 => set(vec![("1", one()), ("a+b", &a + &bb), ("a++b+", &ad + &bd)]),
            ZooVariant::X36 => set(vec![("1", one()), ("a", a), ("a+", ad), ("b+", bd), ("b", bb)]),
        }
    }
}

/// `det [[t, x, x*], [x*, z, y*], [x, y, z']]`, with `t = ⟨1⟩` (1 on normalized states).
pub fn d_form(t: f64, x: C64, y: C64, z: f64, zp: f64) -> f64 {
    let m = nalgebra::Matrix3::new(c(t), x, x.conj(), x.conj(), c(z), y.conj(), x, y, c(zp));
    m.determinant().re
}

/// Determinants of the two-mode zoo sets, with the closed `D(x, y, z)` forms cross-checked.
pub fn w_zoo(state: &FockState, variant: ZooVariant, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = variant.id();
    require_modes(state, 2, id)?;
    let mut b = Builder::new(id, Some(state), opts);
    let d = b.normal("d", &variant.operator_set()?)?;
    let e = |f: &[(usize, u32, u32)]| b.expect(&mono(f));
    let n1 = e(&[(0, 1, 1)])?.re;
    let n2 = e(&[(1, 1, 1)])?.re;
    let t = e(&[])?.re;
    let closed = match variant {
        ZooVariant::X72 => Some(d_form(t, e(&[(0, 0, 1), (1, 0, 1)])?, e(&[(0, 0, 2), (1, 0, 2)])?, e(&[(0, 1, 1), (1, 1, 1)])?.re, e(&[(0, 1, 1), (1, 1, 1)])?.re)),
        ZooVariant::X78 => Some(d_form(t, e(&[(0, 0, 1), (1, 1, 0)])?, e(&[(0, 0, 2), (1, 2, 0)])?, e(&[(0, 1, 1), (1, 1, 1)])?.re, e(&[(0, 1, 1), (1, 1, 1)])?.re)),
        ZooVariant::X84 => {
            let x = e(&[(0, 0, 1)])? + e(&[(1, 1, 0)])?;
            let y = e(&[(0, 0, 2)])? + e(&[(0, 0, 1), (1, 1, 0)])? * 2.0 + e(&[(1, 2, 0)])?;
            let z = n1 + n2 + 2.0 * e(&[(0, 0, 1), (1, 0, 1)])?.re;
            Some(d_form(t, x, y, z, z))
        }
        ZooVariant::X90 => {
            let x = e(&[(0, 0, 1)])? + e(&[(1, 0, 1)])?;
            let y = e(&[(0, 0, 2)])? + e(&[(0, 0, 1), (1, 0, 1)])? * 2.0 + e(&[(1, 0, 2)])?;
            let z = n1 + n2 + 2.0 * e(&[(0, 0, 1), (1, 1, 0)])?.re;
            Some(d_form(t, x, y, z, z))
        }
        ZooVariant::X36 => None,
    };
    if let Some(closed) = closed {
        b.value("D(x,y,z)", closed);
        b.check("matrix = D(x,y,z)", d.value, closed, det_tolerance(1e-10, d.scale, 3))?;
    }
    let tol = d.tol(opts.tol_rel);
    Ok(b.finish(d.value, 0.0, tol, NC))
}

pub(crate) fn default_csi_pair() -> (PolyOperator, PolyOperator) {
    (PolyOperator::annihilation(0), PolyOperator::annihilation(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeShape, Truncation};
    use std::f64::consts::FRAC_PI_2;

    fn opts() -> EvalOptions {
        EvalOptions::default()
    }

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn quadrature_examples() {
        let s1 = ModeShape::uniform(1, 40).unwrap();
        let sq = FockState::squeezed_vacuum(&s1, 0.5, 0.0, Truncation::default()).unwrap();
        let v = w_quadrature_squeezing(&sq, &[FRAC_PI_2], &[1.0], &opts()).unwrap();
        assert!((v.value - ((-1.0f64).exp() - 1.0)).abs() < 1e-8);
        assert_eq!(v.verdict, Verdict::Nonclassical);

        let th = FockState::thermal(&ModeShape::uniform(1, 60).unwrap(), &[1.0], Truncation::default()).unwrap();
        let v = w_quadrature_squeezing(&th, &[0.0], &[1.0], &opts()).unwrap();
        assert!((v.value - 2.0).abs() < 1e-8);
        assert_eq!(v.verdict, Verdict::ClassicalConsistent);

        let coh = FockState::coherent(&ModeShape::uniform(1, 30).unwrap(), &[cx(0.8, -0.3)], Truncation::default()).unwrap();
        let v = w_quadrature_squeezing(&coh, &[0.7], &[1.0], &opts()).unwrap();
        assert!(v.value.abs() < 1e-10);
    }

    #[test]
    fn principal_squeezing_examples() {
        let shape = ModeShape::uniform(2, 30).unwrap();
        let vac = FockState::vacuum(&shape);
        let v = w_principal_squeezing(&vac, &opts()).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.determinant("d(1,a12+,a12)"), Some(0.0));

        let r: f64 = 0.5;
        let t = FockState::tmsv(&shape, r, Truncation::default()).unwrap();
        let v = w_principal_squeezing(&t, &opts()).unwrap();
        assert!((v.determinant("<Da12+ Da12>").unwrap() - 2.0 * r.sinh().powi(2)).abs() < 1e-8);
        assert!((v.determinant("|<Da12^2>|").unwrap() - 2.0 * r.sinh() * r.cosh()).abs() < 1e-8);
        assert_eq!(v.verdict, Verdict::Nonclassical);

        let coh = FockState::coherent(&shape, &[cx(0.4, 0.1), cx(-0.3, 0.6)], Truncation::default()).unwrap();
        let v = w_principal_squeezing(&coh, &opts()).unwrap();
        assert!(v.value.abs() < 1e-10);
        assert_eq!(v.verdict, Verdict::ClassicalConsistent);
    }

    #[test]
    fn sum_squeezing_on_tmsv() {
        let shape = ModeShape::uniform(2, 30).unwrap();
        let vac = FockState::vacuum(&shape);
        assert_eq!(w_sum_squeezing(&vac, 0.0, &opts()).unwrap().value, 0.0);
        let t = FockState::tmsv(&shape, 0.5, Truncation::default()).unwrap();
        let v0 = w_sum_squeezing(&t, 0.0, &opts()).unwrap();
        let v1 = w_sum_squeezing(&t, FRAC_PI_2, &opts()).unwrap();
        assert!(v0.value.min(v1.value) < 0.0);
        let mm = w_sum_squeezing_mm(&t, 0.0, &opts()).unwrap();
        assert!((mm.value - v0.value).abs() < 1e-12);
    }

    #[test]
    fn difference_squeezing_of_single_photon() {
        let shape = ModeShape::uniform(2, 6).unwrap();
        let st = FockState::fock(&shape, &[1, 0]).unwrap();
        let v = w_difference_squeezing(&st, 0.0, &opts()).unwrap();
        // ⟨:W²:⟩ = ¼⟨a†b†ab + ...⟩ vanishes on |1,0⟩ and ⟨W⟩ = 0.
        assert!(v.value.abs() < 1e-14);
        assert_eq!(v.determinant("squeezing_threshold"), Some(0.0));
        assert_eq!(v.verdict, Verdict::ClassicalConsistent);
        let mm = w_difference_squeezing_mm(&st, 0.0, 1, &opts()).unwrap();
        assert!((mm.value - v.value).abs() < 1e-14);
        assert_eq!(mm.verdict, v.verdict);
    }

    #[test]
    fn sub_poisson_examples() {
        let shape = ModeShape::uniform(2, 6).unwrap();
        let v = w_sub_poisson(&FockState::fock(&shape, &[2, 0]).unwrap(), Sign::Sum, &opts()).unwrap();
        assert_eq!(v.value, -2.0);
        let r: f64 = 0.5;
        let t = FockState::tmsv(&ModeShape::uniform(2, 30).unwrap(), r, Truncation::default()).unwrap();
        let v = w_sub_poisson(&t, Sign::Difference, &opts()).unwrap();
        assert!((v.value + 2.0 * r.sinh().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn agarwal_and_lee() {
        let shape = ModeShape::uniform(2, 6).unwrap();
        let v = w_agarwal(&FockState::fock(&shape, &[1, 1]).unwrap(), &opts()).unwrap();
        assert_eq!(v.value, -1.0);
        assert_eq!(v.determinant("I12"), Some(-1.0));

        let v = w_lee(&FockState::fock(&shape, &[1, 0]).unwrap(), &opts()).unwrap();
        assert_eq!(v.determinant("D12"), Some(0.0));
        assert_eq!(v.value, -1.0);
        assert_eq!(v.verdict, Verdict::Nonclassical);

        let r: f64 = 0.5;
        let t = FockState::tmsv(&ModeShape::uniform(2, 30).unwrap(), r, Truncation::default()).unwrap();
        let v = w_lee(&t, &opts()).unwrap();
        assert!((v.determinant("D12").unwrap() + 2.0 * r.sinh().powi(2)).abs() < 1e-8);
    }

    #[test]
    fn zoo_closed_forms_match() {
        let shape = ModeShape::uniform(2, 24).unwrap();
        let coh = FockState::coherent(&shape, &[cx(0.5, 0.2), cx(-0.1, 0.7)], Truncation::default()).unwrap();
        let t = FockState::tmsv(&ModeShape::uniform(2, 30).unwrap(), 0.5, Truncation::default()).unwrap();
        for variant in ZooVariant::ALL {
            let v = w_zoo(&coh, variant, &opts()).unwrap();
            assert!(v.value.abs() < 1e-9, "{variant:?}: {}", v.value);
            assert!(w_zoo(&t, variant, &opts()).is_ok());
        }
    }
}
