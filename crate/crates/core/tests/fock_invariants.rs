use ncl_core::fock::{
    default_cutoff_coherent, default_cutoff_squeezed, default_cutoff_thermal, default_cutoff_tmsv, FockState, Letter,
    ModeShape, Truncation, C64,
};
use ncl_core::sampling::small_mixed_draw;
use proptest::prelude::*;

fn state(seed: u64, modes: usize) -> FockState {
    small_mixed_draw(seed, 0, modes).build().unwrap()
}

fn word(modes: usize) -> impl Strategy<Value = Vec<Letter>> {
    prop::collection::vec((0..modes, any::<bool>()), 0..=6)
        .prop_map(|v| v.into_iter().map(|(mode, dagger)| Letter { mode, dagger }).collect())
}

fn state_and_word() -> impl Strategy<Value = (u64, usize, Vec<Letter>)> {
    (any::<u64>(), 1usize..=3).prop_flat_map(|(seed, modes)| (Just(seed), Just(modes), word(modes)))
}

fn adjoint(w: &[Letter]) -> Vec<Letter> {
    w.iter().rev().map(|l| l.adjoint()).collect()
}

fn close(a: C64, b: C64, tol: f64) -> bool {
    (a - b).norm() <= tol * a.norm().max(b.norm()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hermiticity((seed, modes, w) in state_and_word()) {
        let s = state(seed, modes);
        let x = s.expect_word(&w).unwrap();
        let y = s.expect_word(&adjoint(&w)).unwrap();
        prop_assert!(close(y, x.conj(), 1e-12), "{x} vs {y}");
    }

    #[test]
    fn linearity_under_mixing((seed, modes, w) in state_and_word(), p in 0.0f64..=1.0) {
        let s1 = state(seed, modes);
        let s2 = state(seed.wrapping_add(1), modes);
        if s1.shape() != s2.shape() {
            return Ok(());
        }
        let mixed = FockState::mix(&[(p, &s1), (1.0 - p, &s2)]).unwrap();
        let direct = mixed.expect_word(&w).unwrap();
        let summed = s1.expect_word(&w).unwrap() * p + s2.expect_word(&w).unwrap() * (1.0 - p);
        prop_assert!(close(direct, summed, 1e-12), "{direct} vs {summed}");
    }

    #[test]
    fn coherent_eigenrelation(
        re in prop::collection::vec(-1.5f64..1.5, 2),
        im in prop::collection::vec(-1.5f64..1.5, 2),
        w in word(2),
        m in 0usize..2,
    ) {
        let alpha: Vec<C64> = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
        let s = FockState::coherent(&ModeShape::uniform(2, 40).unwrap(), &alpha, Truncation::default()).unwrap();
        let base = s.expect_word(&w).unwrap();
        // The rightmost letter acts first, on the ket.
        let mut right = w.clone();
        right.push(Letter::annihilate(m));
        let lhs = s.expect_word(&right).unwrap();
        prop_assert!((lhs - alpha[m] * base).norm() <= 1e-10, "{lhs} vs {}", alpha[m] * base);
        let mut left = vec![Letter::create(m)];
        left.extend(w.iter().copied());
        let lhs = s.expect_word(&left).unwrap();
        prop_assert!((lhs - alpha[m].conj() * base).norm() <= 1e-10);
    }
}

fn moments_agree(small: &FockState, big: &FockState, modes: usize) -> Result<(), TestCaseError> {
    let mut words: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..4 {
        let next: Vec<Vec<Letter>> = words
            .iter()
            .filter(|w| w.len() < 4)
            .flat_map(|w| {
                (0..modes).flat_map(move |m| {
                    [false, true].into_iter().map(move |dagger| {
                        let mut v = w.clone();
                        v.push(Letter { mode: m, dagger });
                        v
                    })
                })
            })
            .collect();
        words.extend(next);
        words.sort();
        words.dedup();
    }
    for w in &words {
        let x = small.expect_word(w).unwrap();
        let y = big.expect_word(w).unwrap();
        prop_assert!((x - y).norm() <= 1e-8 * y.norm().max(1.0), "word {w:?}: {x} vs {y}");
    }
    Ok(())
}

fn doubled(make: impl Fn(usize) -> FockState, d: usize, modes: usize) -> Result<(), TestCaseError> {
    moments_agree(&make(d), &make(2 * d), modes)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn truncation_stability_coherent(re in -2.0f64..2.0, im in -2.0f64..2.0) {
        let a = [C64::new(re, im)];
        let make = |d| FockState::coherent(&ModeShape::uniform(1, d).unwrap(), &a, Truncation::default()).unwrap();
        doubled(make, default_cutoff_coherent(a[0]), 1)?;
    }

    #[test]
    fn truncation_stability_squeezed(r in 0.0f64..1.0, theta in -3.0f64..3.0) {
        let make = |d| FockState::squeezed_vacuum(&ModeShape::uniform(1, d).unwrap(), r, theta, Truncation::default()).unwrap();
        doubled(make, default_cutoff_squeezed(r), 1)?;
    }

    #[test]
    fn truncation_stability_thermal(n in 0.0f64..1.0) {
        let make = |d| FockState::thermal(&ModeShape::uniform(1, d).unwrap(), &[n], Truncation::default()).unwrap();
        doubled(make, default_cutoff_thermal(n), 1)?;
    }

    #[test]
    fn truncation_stability_tmsv(r in 0.0f64..0.8) {
        let make = |d| FockState::tmsv(&ModeShape::uniform(2, d).unwrap(), r, Truncation::default()).unwrap();
        doubled(make, default_cutoff_tmsv(r), 2)?;
    }
}
