//! Symbolic ladder-operator algebra.
//!
//! A [`PolyOperator`] is a finite sum of monomials `c · Π_m a_m†^{p_m} a_m^{q_m}`,
//! always kept in normally ordered canonical form. Plain (operator) products
//! are reduced back to that form with the exact reordering rule in [`ladder`];
//! the normal product `:f g:` just adds exponents.

pub mod ladder;
pub mod named;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::Serialize;

use crate::error::Result;
use crate::fock::{FockState, Letter, C64};

pub use named::{build_named, cis, NamedOperator};

/// Relative threshold below which coefficients are dropped.
const SIMPLIFY_REL: f64 = 1e-14;

/// Canonical exponent signature: `(mode, p, q)` sorted by mode, `(0, 0)` modes omitted.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct MonomialKey(Vec<(usize, u32, u32)>);

impl MonomialKey {
    pub fn identity() -> Self {
        Self(Vec::new())
    }

    pub fn new(mut factors: Vec<(usize, u32, u32)>) -> Self {
        factors.sort_by_key(|f| f.0);
        let mut merged: Vec<(usize, u32, u32)> = Vec::with_capacity(factors.len());
        for (m, p, q) in factors {
            match merged.last_mut() {
                // repeated mode entries are read as a normal product
                Some(last) if last.0 == m => {
                    last.1 += p;
                    last.2 += q;
                }
                _ => merged.push((m, p, q)),
            }
        }
        merged.retain(|&(_, p, q)| p != 0 || q != 0);
        Self(merged)
    }

    pub fn factors(&self) -> &[(usize, u32, u32)] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponents(&self, mode: usize) -> (u32, u32) {
        self.0.iter().find(|f| f.0 == mode).map_or((0, 0), |f| (f.1, f.2))
    }

    /// Total number of ladder letters.
    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, p, q)| p + q).sum()
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.0.last().map(|f| f.0)
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.iter().map(|&(m, p, q)| (m, q, p)).collect())
    }

    /// Exponents of `:self · other:`.
    pub fn normal_mul(&self, other: &Self) -> Self {
        let mut all = self.0.clone();
        all.extend_from_slice(&other.0);
        Self::new(all)
    }

    /// Splits into the factors on `modes` and the rest.
    pub fn split(&self, modes: &[usize]) -> (Self, Self) {
        let (inside, outside): (Vec<_>, Vec<_>) = self.0.iter().partition(|f| modes.contains(&f.0));
        (Self(inside), Self(outside))
    }

    /// The letters `a†^p a^q` per mode, in mode order.
    pub fn to_letters(&self) -> Vec<Letter> {
        let mut out = Vec::new();
        for &(m, p, q) in &self.0 {
            out.extend(std::iter::repeat_n(Letter::create(m), p as usize));
            out.extend(std::iter::repeat_n(Letter::annihilate(m), q as usize));
        }
        out
    }

    /// Expectation value on a state (exact on the truncated space).
    pub fn expect(&self, state: &FockState) -> Result<C64> {
        state.expect_normal(&self.0)
    }
}

/// A single weighted monomial.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Monomial {
    pub coeff: C64,
    pub key: MonomialKey,
}

/// Per-mode expansion of `a†^{p1} a^{q1} · a†^{p2} a^{q2}` in normal order.
fn mode_product(l: (u32, u32), r: (u32, u32)) -> Vec<(u32, u32, f64)> {
    let (p1, q1) = l;
    let (p2, q2) = r;
    (0..=q1.min(p2))
        .map(|k| {
            let c = ladder::reorder_coefficient(q1 as usize, p2 as usize, k as usize);
            (p1 + p2 - k, q1 + q2 - k, c)
        })
        .collect()
}

/// Exact normally ordered expansion of the plain product of two monomials.
fn monomial_product(a: &MonomialKey, b: &MonomialKey) -> Vec<(MonomialKey, f64)> {
    let mut modes: Vec<usize> = a.0.iter().chain(&b.0).map(|f| f.0).collect();
    modes.sort_unstable();
    modes.dedup();
    let mut partial: Vec<(Vec<(usize, u32, u32)>, f64)> = vec![(Vec::new(), 1.0)];
    for m in modes {
        let options = mode_product(a.exponents(m), b.exponents(m));
        let mut next = Vec::with_capacity(partial.len() * options.len());
        for (factors, c) in &partial {
            for &(p, q, k) in &options {
                let mut f = factors.clone();
                if p != 0 || q != 0 {
                    f.push((m, p, q));
                }
                next.push((f, c * k));
            }
        }
        partial = next;
    }
    partial.into_iter().map(|(f, c)| (MonomialKey(f), c)).collect()
}

/// Finite complex-weighted sum of normally ordered monomials.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PolyOperator {
    terms: BTreeMap<MonomialKey, C64>,
}

impl PolyOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::scalar(C64::new(1.0, 0.0))
    }

    pub fn scalar(c: C64) -> Self {
        Self::monomial(c, &[])
    }

    pub fn monomial(coeff: C64, factors: &[(usize, u32, u32)]) -> Self {
        let mut terms = BTreeMap::new();
        if coeff != C64::new(0.0, 0.0) {
            terms.insert(MonomialKey::new(factors.to_vec()), coeff);
        }
        Self { terms }
    }

    pub fn annihilation(mode: usize) -> Self {
        Self::monomial(C64::new(1.0, 0.0), &[(mode, 0, 1)])
    }

    pub fn creation(mode: usize) -> Self {
        Self::monomial(C64::new(1.0, 0.0), &[(mode, 1, 0)])
    }

    pub fn number(mode: usize) -> Self {
        Self::monomial(C64::new(1.0, 0.0), &[(mode, 1, 1)])
    }

    pub fn from_terms<I: IntoIterator<Item = (MonomialKey, C64)>>(terms: I) -> Self {
        let mut out = Self::zero();
        for (k, c) in terms {
            *out.terms.entry(k).or_insert(C64::new(0.0, 0.0)) += c;
        }
        out.simplified()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MonomialKey, &C64)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial> + '_ {
        self.terms.iter().map(|(k, &c)| Monomial { coeff: c, key: k.clone() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, key: &MonomialKey) -> C64 {
        self.terms.get(key).copied().unwrap_or_default()
    }

    /// Constant term (coefficient of the identity).
    pub fn constant(&self) -> C64 {
        self.coefficient(&MonomialKey::identity())
    }

    pub fn max_mode(&self) -> Option<usize> {
        self.terms.keys().filter_map(|k| k.max_mode()).max()
    }

    /// Largest per-mode letter count `p + q` over all terms.
    pub fn max_mode_degree(&self) -> u32 {
        self.terms
            .keys()
            .flat_map(|k| k.0.iter().map(|&(_, p, q)| p + q))
            .max()
            .unwrap_or(0)
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.degree()).max().unwrap_or(0)
    }

    fn simplified(mut self) -> Self {
        let max = self.terms.values().map(|c| c.norm()).fold(0.0, f64::max);
        let cut = SIMPLIFY_REL * max;
        self.terms.retain(|_, c| c.norm() > cut && *c != C64::new(0.0, 0.0));
        self
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { terms: self.terms.iter().map(|(k, &v)| (k.clone(), v * c)).collect() }.simplified()
    }

    pub fn adjoint(&self) -> Self {
        Self { terms: self.terms.iter().map(|(k, c)| (k.adjoint(), c.conj())).collect() }
    }

    /// Plain operator product `self · other`, reduced to normal order.
    pub fn product(&self, other: &Self) -> Self {
        let mut out: BTreeMap<MonomialKey, C64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                for (k, w) in monomial_product(ka, kb) {
                    *out.entry(k).or_default() += ca * cb * w;
                }
            }
        }
        Self { terms: out }.simplified()
    }

    /// Normal product `:self · other:` (exponent addition, no commutators).
    pub fn normal_product(&self, other: &Self) -> Self {
        let mut out: BTreeMap<MonomialKey, C64> = BTreeMap::new();
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                *out.entry(ka.normal_mul(kb)).or_default() += ca * cb;
            }
        }
        Self { terms: out }.simplified()
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.product(other) - &other.product(self)
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::identity(), |acc, _| acc.product(self))
    }

    /// Expectation value `⟨self⟩` on a state.
    pub fn expect(&self, state: &FockState) -> Result<C64> {
        let mut sum = C64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            sum += c * k.expect(state)?;
        }
        Ok(sum)
    }

    /// `self − ⟨self⟩·1` for the given state.
    pub fn shift_by_mean(&self, state: &FockState) -> Result<Self> {
        let mean = self.expect(state)?;
        Ok(self - &Self::scalar(mean))
    }

    /// Text form, e.g. `(0.5+0i) ad^1 a^0 bd^0 b^1 + (1+0i) 1`.
    pub fn render(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        self.terms
            .iter()
            .map(|(k, c)| {
                let sign = if c.im < 0.0 || (c.im == 0.0 && c.im.is_sign_negative()) { '-' } else { '+' };
                let mut s = format!("({}{}{}i)", c.re, sign, c.im.abs());
                if k.is_identity() {
                    s.push_str(" 1");
                }
                for &(m, p, q) in &k.0 {
                    let name = mode_name(m);
                    s.push_str(&format!(" {name}d^{p} {name}^{q}"));
                }
                s
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}

/// Display name of a mode: `a`, `b`, `c`, … then `m26`, `m27`, ….
pub fn mode_name(mode: usize) -> String {
    if mode < 26 {
        ((b'a' + mode as u8) as char).to_string()
    } else {
        format!("m{mode}")
    }
}

impl fmt::Display for PolyOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

impl Add for &PolyOperator {
    type Output = PolyOperator;
    fn add(self, rhs: &PolyOperator) -> PolyOperator {
        PolyOperator::from_terms(self.terms.iter().chain(&rhs.terms).map(|(k, &c)| (k.clone(), c)))
    }
}

impl Sub for &PolyOperator {
    type Output = PolyOperator;
    fn sub(self, rhs: &PolyOperator) -> PolyOperator {
        PolyOperator::from_terms(
            self.terms
                .iter()
                .map(|(k, &c)| (k.clone(), c))
                .chain(rhs.terms.iter().map(|(k, &c)| (k.clone(), -c))),
        )
    }
}

impl Add for PolyOperator {
    type Output = PolyOperator;
    fn add(self, rhs: PolyOperator) -> PolyOperator {
        &self + &rhs
    }
}

impl Sub for PolyOperator {
    type Output = PolyOperator;
    fn sub(self, rhs: PolyOperator) -> PolyOperator {
        &self - &rhs
    }
}

impl Neg for &PolyOperator {
    type Output = PolyOperator;
    fn neg(self) -> PolyOperator {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Mul for &PolyOperator {
    type Output = PolyOperator;
    fn mul(self, rhs: &PolyOperator) -> PolyOperator {
        self.product(rhs)
    }
}

impl Mul<C64> for &PolyOperator {
    type Output = PolyOperator;
    fn mul(self, rhs: C64) -> PolyOperator {
        self.scale(rhs)
    }
}

/// A weighted non-commutative product of ladder letters, before reordering.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Word {
    pub coeff: C64,
    pub letters: Vec<Letter>,
}

impl Word {
    pub fn new(letters: Vec<Letter>) -> Self {
        Self { coeff: C64::new(1.0, 0.0), letters }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            coeff: self.coeff.conj(),
            letters: self.letters.iter().rev().map(|l| l.adjoint()).collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }
}

/// Expands a plain-ordered word into its normally ordered polynomial.
pub fn rewrite_normal(word: &Word) -> PolyOperator {
    let poly = word.letters.iter().fold(PolyOperator::identity(), |acc, l| {
        let letter = if l.dagger { PolyOperator::creation(l.mode) } else { PolyOperator::annihilation(l.mode) };
        acc.product(&letter)
    });
    poly.scale(word.coeff)
}
