//! Entanglement witnesses: partial-transpose determinants, their
//! normal-ordered images, and the decompositions into sums of
//! nonclassicality determinants.

use serde::Serialize;

use super::{joint_tol, mono, require_modes, set, Builder, Det, EvalOptions, Verdict, WitnessVerdict, CHECK_TOL_REL, DECOMPOSITION_TOL_REL};
use crate::algebra::PolyOperator;
use crate::error::{Error, Result};
use crate::fock::{FockState, C64};
use crate::moments::OperatorSet;

const ENT: Verdict = Verdict::Entangled;
const MODE_A: usize = 0;
const MODE_B: usize = 1;

fn one() -> PolyOperator {
    PolyOperator::identity()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum HzVariant {
    X1,
    X4,
    X34,
    X49,
    X60 { m: u32, n: u32 },
    Z24 { k: u32, l: u32, m: u32 },
    Z26 { k: u32, l: u32, m: u32 },
}

impl HzVariant {
    pub fn id(self) -> &'static str {
        match self {
            HzVariant::X1 => "table2.hz.x1",
            HzVariant::X4 => "table2.hz.x4",
            HzVariant::X34 => "table2.hz.x34",
            HzVariant::X49 => "table2.hz.x49",
            HzVariant::X60 { .. } => "table2.hz.x60",
            HzVariant::Z24 { .. } => "table2.hz.z24",
            HzVariant::Z26 { .. } => "table2.hz.z26",
        }
    }

    pub fn modes(self) -> usize {
        match self {
            HzVariant::X1 | HzVariant::X4 | HzVariant::X60 { .. } => 2,
            _ => 3,
        }
    }

    /// Partially transposed mode used to derive the criterion.
    pub fn default_pt(self) -> usize {
        match self {
            HzVariant::X1 | HzVariant::X4 | HzVariant::X60 { .. } => MODE_B,
            _ => MODE_A,
        }
    }

    /// The operator set of the partial-transpose form.
    pub fn gamma_set(self) -> Result<OperatorSet> {
        let pos = |name: &str, e: u32| -> Result<()> {
            if e == 0 {
                Err(Error::InvalidParameter(format!("exponent {name} must be positive")))
            } else {
                Ok(())
            }
        };
        match self {
            HzVariant::X1 => set(vec![("1", one()), ("ab", mono(&[(0, 0, 1), (1, 0, 1)]))]),
            HzVariant::X4 => set(vec![("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))]),
            HzVariant::X34 => set(vec![("1", one()), ("abc", mono(&[(0, 0, 1), (1, 0, 1), (2, 0, 1)]))]),
            HzVariant::X49 => set(vec![("a", PolyOperator::annihilation(0)), ("bc", mono(&[(1, 0, 1), (2, 0, 1)]))]),
            HzVariant::X60 { m, n } => {
                pos("m", m)?;
                pos("n", n)?;
                set(vec![("1", one()), ("a^m b^n", mono(&[(0, 0, m), (1, 0, n)]))])
            }
            HzVariant::Z24 { k, l, m } => {
                pos("k", k)?;
                pos("l", l)?;
                pos("m", m)?;
                set(vec![("1", one()), ("a^k b^l c^m", mono(&[(0, 0, k), (1, 0, l), (2, 0, m)]))])
            }
            HzVariant::Z26 { k, l, m } => {
                pos("k", k)?;
                pos("l", l)?;
                pos("m", m)?;
                set(vec![("a^k", mono(&[(0, 0, k)])), ("b^l c^m", mono(&[(1, 0, l), (2, 0, m)]))])
            }
        }
    }
}

/// Picks the partial-transpose mode, honoring an override.
fn pt_mode(state: &FockState, default: usize, opts: &EvalOptions, b: &mut Builder<'_>) -> Result<usize> {
    let pt = opts.pt_mode.unwrap_or(default);
    if pt >= state.num_modes() {
        return Err(Error::ModeOutOfRange { mode: pt, num_modes: state.num_modes() });
    }
    b.value("pt_mode", pt as f64);
    Ok(pt)
}

/// Hillery–Zubairy type criteria: `d^Γ(F)` and the equal `d^(n)` of the transposed-exponent image of `F`.
pub fn w_hz(state: &FockState, variant: HzVariant, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = variant.id();
    require_modes(state, variant.modes(), id)?;
    let f = variant.gamma_set()?;
    let mut b = Builder::new(id, Some(state), opts);
    let pt = pt_mode(state, variant.default_pt(), opts, &mut b)?;
    let g = b.gamma("d_gamma", &f, &[pt])?;
    let n = b.normal("d_normal", &f.gamma_image(&[pt]))?;
    b.check("d_gamma = d_normal", g.value, n.value, joint_tol(CHECK_TOL_REL, &[g, n]))?;
    match variant {
        HzVariant::X60 { m, n } => b.note(format!("m = {m}, n = {n}")),
        HzVariant::Z24 { k, l, m } | HzVariant::Z26 { k, l, m } => b.note(format!("k = {k}, l = {l}, m = {m}")),
        _ => {}
    }
    let tol = g.tol(opts.tol_rel);
    Ok(b.finish(g.value, 0.0, tol, ENT))
}

/// Duan et al.: `d^(n)(Δa, Δb†)`, `d^(n)(1, a, b†)` and `d^Γ(1, a, b)`.
pub fn w_duan(state: &FockState, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let id = "table2.duan";
    require_modes(state, 2, id)?;
    let mut b = Builder::new(id, Some(state), opts);
    let pt = pt_mode(state, MODE_B, opts, &mut b)?;
    // Transpose first, then subtract the means of the transposed operators.
    let image = set(vec![("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))])?.gamma_image(&[pt]);
    let shifted = OperatorSet::new(
        image
            .labels()
            .iter()
            .zip(image.ops())
            .map(|(l, f)| Ok((format!("D{l}"), f.shift_by_mean(state)?)))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let plain = set(vec![("1", one()), ("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))])?;
    let small = b.normal("d_normal(Da,Db^T)", &shifted)?;
    let big = b.normal("d_normal(1,a,b^T)", &plain.gamma_image(&[pt]))?;
    let g = b.gamma("d_gamma(1,a,b)", &plain, &[pt])?;
    b.check("2x2 = 3x3", small.value, big.value, joint_tol(CHECK_TOL_REL, &[small, big]))?;
    b.check("d_gamma = d_normal", g.value, big.value, joint_tol(CHECK_TOL_REL, &[g, big]))?;
    let tol = joint_tol(opts.tol_rel, &[small, big]);
    Ok(b.finish(small.value, 0.0, tol, ENT))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decomposition {
    SimonX43,
    X56,
    X57,
    X58,
    X59,
}

impl Decomposition {
    pub const ALL: [Decomposition; 5] =
        [Decomposition::SimonX43, Decomposition::X56, Decomposition::X57, Decomposition::X58, Decomposition::X59];

    pub fn id(self) -> &'static str {
        match self {
            Decomposition::SimonX43 => "table2.simon",
            Decomposition::X56 => "table2.decomposition.x56",
            Decomposition::X57 => "table2.decomposition.x57",
            Decomposition::X58 => "table2.mancini",
            Decomposition::X59 => "table2.decomposition.x59",
        }
    }

    /// The partially transposed operator set (transposition on the second mode).
    pub fn gamma_set(self) -> Result<OperatorSet> {
        let a = PolyOperator::annihilation(0);
        let ad = PolyOperator::creation(0);
        let bb = PolyOperator::annihilation(1);
        let bd = PolyOperator::creation(1);
        match self {
            Decomposition::SimonX43 => set(vec![("1", one()), ("a", a), ("a+", ad), ("b", bb), ("b+", bd)]),
            Decomposition::X56 => set(vec![("1", one()), ("ab", mono(&[(0, 0, 1), (1, 0, 1)])), ("a+b+", mono(&[(0, 1, 0), (1, 1, 0)]))]),
            Decomposition::X59 => set(vec![("1", one()), ("ab+", mono(&[(0, 0, 1), (1, 1, 0)])), ("a+b", mono(&[(0, 1, 0), (1, 0, 1)]))]),
            Decomposition::X57 => set(vec![("1", one()), ("a+b+", &a + &bd), ("a++b", &ad + &bb)]),
            Decomposition::X58 => set(vec![("1", one()), ("a+b", &a + &bb), ("a++b+", &ad + &bd)]),
        }
    }
}

struct Rhs {
    value: f64,
    dets: Vec<Det>,
}

fn rhs(b: &mut Builder<'_>, which: Decomposition) -> Result<Rhs> {
    let a = || PolyOperator::annihilation(0);
    let ad = || PolyOperator::creation(0);
    let bb = || PolyOperator::annihilation(1);
    let bd = || PolyOperator::creation(1);
    let n1 = b.expect_real(&PolyOperator::number(0))?;
    let n2 = b.expect_real(&PolyOperator::number(1))?;
    let t = b.expect_real(&one())?;
    let ab = || mono(&[(0, 0, 1), (1, 0, 1)]);
    let adbd = || mono(&[(0, 1, 0), (1, 1, 0)]);
    let abd = || mono(&[(0, 0, 1), (1, 1, 0)]);
    let adb = || mono(&[(0, 1, 0), (1, 0, 1)]);
    Ok(match which {
        Decomposition::SimonX43 => {
            let d0 = b.normal("dn(1,a,a+,b+,b)", &set(vec![("1", one()), ("a", a()), ("a+", ad()), ("b+", bd()), ("b", bb())])?)?;
            let d1 = b.normal("dn(1,a,b+)", &set(vec![("1", one()), ("a", a()), ("b+", bd())])?)?;
            let d2 = b.normal("dn(1,a,a+,b+)", &set(vec![("1", one()), ("a", a()), ("a+", ad()), ("b+", bd())])?)?;
            let d3 = b.normal("dn(1,a,b+,b)", &set(vec![("1", one()), ("a", a()), ("b+", bd()), ("b", bb())])?)?;
            Rhs { value: d0.value + t * t * d1.value + t * (d2.value + d3.value), dets: vec![d0, d1, d2, d3] }
        }
        Decomposition::X56 => {
            let d0 = b.normal("dn(1,ab+,a+b)", &set(vec![("1", one()), ("ab+", abd()), ("a+b", adb())])?)?;
            let d1 = b.normal("dn(1,ab+)", &set(vec![("1", one()), ("ab+", abd())])?)?;
            b.value("<n1>+<n2>+1", n1 + n2 + t);
            Rhs { value: d0.value + (n1 + n2 + t) * d1.value, dets: vec![d0, d1] }
        }
        Decomposition::X59 => {
            let d0 = b.normal("dn(1,ab,a+b+)", &set(vec![("1", one()), ("ab", ab()), ("a+b+", adbd())])?)?;
            let d1 = b.normal("dn(1,ab)", &set(vec![("1", one()), ("ab", ab())])?)?;
            b.value("<n1><n2>", n1 * n2);
            Rhs { value: d0.value + t * n1 * n2 + (n1 + n2) * d1.value, dets: vec![d0, d1] }
        }
        Decomposition::X57 => {
            let d0 = b.normal("dn(1,a+b,a++b+)", &set(vec![("1", one()), ("a+b", &a() + &bb()), ("a++b+", &ad() + &bd())])?)?;
            let d1 = b.normal("dn(1,a+b)", &set(vec![("1", one()), ("a+b", &a() + &bb())])?)?;
            Rhs { value: d0.value + 2.0 * t * d1.value + t * t * t, dets: vec![d0, d1] }
        }
        Decomposition::X58 => {
            let d0 = b.normal("dn(1,a+b+,a++b)", &set(vec![("1", one()), ("a+b+", &a() + &bd()), ("a++b", &ad() + &bb())])?)?;
            let d1 = b.normal("dn(1,a+b+)", &set(vec![("1", one()), ("a+b+", &a() + &bd())])?)?;
            Rhs { value: d0.value + 2.0 * t * d1.value, dets: vec![d0, d1] }
        }
    })
}

fn decomposition_builder<'a>(state: &'a FockState, which: Decomposition, opts: &'a EvalOptions) -> Result<(Builder<'a>, Det)> {
    let id = which.id();
    require_modes(state, 2, id)?;
    let mut b = Builder::new(id, Some(state), opts);
    if let Some(p) = opts.pt_mode {
        if p != MODE_B {
            b.note("partial transpose fixed to the second mode for this identity; override ignored");
        }
    }
    b.value("pt_mode", MODE_B as f64);
    let lhs = b.gamma("d_gamma", &which.gamma_set()?, &[MODE_B])?;
    let r = rhs(&mut b, which)?;
    b.value("rhs", r.value);
    let mut all = r.dets.clone();
    all.push(lhs);
    let scale = all.iter().map(|d| d.scale).fold(0.0, f64::max);
    let tol = crate::moments::det_tolerance(DECOMPOSITION_TOL_REL, scale, lhs.n);
    b.check("d_gamma = sum of d_normal terms", lhs.value, r.value, tol)?;
    Ok((b, lhs))
}

/// `d^Γ(F)` together with its expansion into nonclassicality determinants.
pub fn w_decomposition(state: &FockState, which: Decomposition, opts: &EvalOptions) -> Result<WitnessVerdict> {
    if which == Decomposition::X58 {
        return w_mancini(state, opts);
    }
    let (b, lhs) = decomposition_builder(state, which, opts)?;
    let tol = lhs.tol(opts.tol_rel);
    Ok(b.finish(lhs.value, 0.0, tol, ENT))
}

/// Mancini et al.: `d^Γ(1, a+b, a†+b†)` with its closed form and expansion.
pub fn w_mancini(state: &FockState, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let (mut b, lhs) = decomposition_builder(state, Decomposition::X58, opts)?;
    let e = |f: &[(usize, u32, u32)]| -> Result<C64> { b.expect(&mono(f)) };
    let x = e(&[(0, 0, 1)])? + e(&[(1, 1, 0)])?;
    let y = e(&[(0, 0, 2)])? + e(&[(0, 0, 1), (1, 1, 0)])? * 2.0 + e(&[(1, 2, 0)])?;
    let z = e(&[(0, 1, 1)])?.re + e(&[(1, 1, 1)])?.re + 2.0 * e(&[(0, 0, 1), (1, 0, 1)])?.re;
    let t = e(&[])?.re;
    let closed = super::table1::d_form(t, x, y, z, z + 2.0 * t);
    b.value("D(x,y,z,z')", closed);
    b.check("d_gamma = D(x,y,z,z')", lhs.value, closed, lhs.tol(CHECK_TOL_REL))?;
    let tol = lhs.tol(opts.tol_rel);
    Ok(b.finish(lhs.value, 0.0, tol, ENT))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{ModeShape, Truncation};

    fn opts() -> EvalOptions {
        EvalOptions::default()
    }

    fn cx(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn hz_x4_on_tmsv() {
        let r: f64 = 1.0;
        let shape = ModeShape::uniform(2, 40).unwrap();
        let t = FockState::tmsv(&shape, r, Truncation::default()).unwrap();
        let v = w_hz(&t, HzVariant::X4, &opts()).unwrap();
        assert!((v.value + r.sinh().powi(2)).abs() < 1e-6);
        assert_eq!(v.verdict, Verdict::Entangled);
    }

    #[test]
    fn hz_on_ghz_like_state() {
        let shape = ModeShape::uniform(3, 3).unwrap();
        let mut amps = vec![cx(0.0, 0.0); shape.dim()];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        amps[shape.index_of(&[0, 0, 0]).unwrap()] = cx(h, 0.0);
        amps[shape.index_of(&[1, 1, 1]).unwrap()] = cx(h, 0.0);
        let ghz = FockState::from_amplitudes(shape, amps, Truncation::default()).unwrap();
        let v = w_hz(&ghz, HzVariant::X34, &opts()).unwrap();
        assert!((v.value - 0.5).abs() < 1e-14);
        let v = w_hz(&ghz, HzVariant::X49, &opts()).unwrap();
        assert!(v.value.abs() < 1e-14);
        assert_eq!(v.verdict, Verdict::ClassicalConsistent);
    }

    #[test]
    fn product_coherent_is_never_entangled() {
        let shape = ModeShape::uniform(3, 18).unwrap();
        let st = FockState::coherent(&shape, &[cx(0.4, 0.2), cx(-0.5, 0.1), cx(0.2, -0.3)], Truncation::default()).unwrap();
        for v in [
            HzVariant::X1,
            HzVariant::X4,
            HzVariant::X34,
            HzVariant::X49,
            HzVariant::X60 { m: 2, n: 1 },
            HzVariant::Z24 { k: 2, l: 1, m: 1 },
            HzVariant::Z26 { k: 1, l: 2, m: 1 },
        ] {
            let w = w_hz(&st, v, &opts()).unwrap();
            assert_eq!(w.verdict, Verdict::ClassicalConsistent, "{v:?}");
        }
    }

    #[test]
    fn duan_examples() {
        let r: f64 = 0.5;
        let t = FockState::tmsv(&ModeShape::uniform(2, 30).unwrap(), r, Truncation::default()).unwrap();
        let v = w_duan(&t, &opts()).unwrap();
        assert!((v.value + r.sinh().powi(2)).abs() < 1e-8);
        assert_eq!(v.verdict, Verdict::Entangled);
        let coh = FockState::coherent(&ModeShape::uniform(2, 24).unwrap(), &[cx(0.3, 0.3), cx(-0.4, 0.7)], Truncation::default()).unwrap();
        let v = w_duan(&coh, &opts()).unwrap();
        assert!(v.value.abs() < 1e-10);
    }

    #[test]
    fn decompositions_on_vacuum_and_tmsv() {
        let shape = ModeShape::uniform(2, 30).unwrap();
        let vac = FockState::vacuum(&shape);
        let t = FockState::tmsv(&shape, 0.5, Truncation::default()).unwrap();
        for which in Decomposition::ALL {
            let v = w_decomposition(&vac, which, &opts()).unwrap();
            assert!(v.checks.iter().all(|c| c.passed));
            assert!(w_decomposition(&t, which, &opts()).is_ok());
        }
        // Vacuum Γ determinants: Simon and x56/x59 vanish, the sum forms keep their constants.
        assert_eq!(w_decomposition(&vac, Decomposition::X57, &opts()).unwrap().value, 1.0);
        let simon = w_decomposition(&t, Decomposition::SimonX43, &opts()).unwrap();
        assert!(simon.value < 0.0);
        assert_eq!(simon.verdict, Verdict::Entangled);
        // With ⟨ab⟩ > 0 the Mancini determinant is z·z' > 0; flipping the pair phase makes z < 0.
        let mancini = w_mancini(&t, &opts()).unwrap();
        let (s, c) = (0.5f64.sinh(), 0.5f64.cosh());
        let z = 2.0 * s * s + 2.0 * s * c;
        assert!((mancini.value - z * (z + 2.0)).abs() < 1e-8);
        assert_eq!(mancini.verdict, Verdict::ClassicalConsistent);
        let flipped = phase_flipped_tmsv(&shape, 0.5);
        let mancini = w_mancini(&flipped, &opts()).unwrap();
        let z = 2.0 * s * s - 2.0 * s * c;
        assert!((mancini.value - z * (z + 2.0)).abs() < 1e-8);
        assert_eq!(mancini.verdict, Verdict::Entangled);
    }

    fn phase_flipped_tmsv(shape: &ModeShape, r: f64) -> FockState {
        let d = shape.cutoffs()[0];
        let mut amps = vec![C64::new(0.0, 0.0); d * d];
        for n in 0..d {
            amps[n * d + n] = C64::new((-r.tanh()).powi(n as i32) / r.cosh(), 0.0);
        }
        FockState::from_amplitudes(shape.clone(), amps, Truncation::with_leakage_tol(1e-6)).unwrap()
    }

    #[test]
    fn hz_x1_detects_split_photon_not_tmsv() {
        let shape = ModeShape::uniform(2, 3).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut amps = vec![C64::new(0.0, 0.0); 9];
        amps[1] = C64::new(h, 0.0);
        amps[3] = C64::new(h, 0.0);
        let split = FockState::from_amplitudes(shape, amps, Truncation::default()).unwrap();
        let v = w_hz(&split, HzVariant::X1, &opts()).unwrap();
        assert!((v.value + 0.25).abs() < 1e-12);
        assert_eq!(v.verdict, Verdict::Entangled);
        // TMSV carries no ⟨ab†⟩ coherence: the value is ⟨n₁n₂⟩ = s²(1 + 2s²).
        let r: f64 = 1.0;
        let t = FockState::tmsv(&ModeShape::uniform(2, 30).unwrap(), r, Truncation::with_leakage_tol(1e-6)).unwrap();
        let v = w_hz(&t, HzVariant::X1, &opts()).unwrap();
        // ⟨n₁n₂⟩ = s²(1 + 2s²) in the untruncated limit; compare with the truncated series.
        let t2 = r.tanh().powi(2);
        let p = |n: usize| t2.powi(n as i32) / r.cosh().powi(2);
        let series: f64 = (0..30).map(|n| (n * n) as f64 * p(n)).sum::<f64>() * (0..30).map(p).sum::<f64>();
        assert!((v.value - series).abs() < 1e-9);
        let s2 = r.sinh().powi(2);
        assert!((v.value - s2 * (1.0 + 2.0 * s2)).abs() < 1e-3);
        assert_eq!(v.verdict, Verdict::ClassicalConsistent);
    }
}
