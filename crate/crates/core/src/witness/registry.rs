//! Stable witness ids and their operator sets, transposition choices and thresholds.

use serde::Serialize;

use super::table1::default_csi_pair;
use super::{
    w_agarwal, w_antibunching, w_csi, w_decomposition, w_difference_squeezing, w_difference_squeezing_mm, w_duan, w_hz,
    w_hyperbunching, w_lee, w_mancini, w_principal_squeezing, w_quadrature_squeezing, w_sub_poisson, w_sum_squeezing,
    w_sum_squeezing_mm, w_zoo, CorrelationGrid, Decomposition, EvalOptions, HzVariant, Sign, WitnessVerdict, ZooVariant,
};
use crate::algebra::{build_named, NamedOperator, PolyOperator};
use crate::error::{Error, Result};
use crate::fock::FockState;
use crate::moments::OperatorSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Table {
    Table1,
    Table2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessKind {
    Quadrature,
    PrincipalSqueezing,
    SumSqueezing,
    SumSqueezingMultimode,
    DifferenceSqueezing,
    DifferenceSqueezingMultimode,
    SubPoisson { sign: Sign },
    Csi,
    Agarwal,
    Lee,
    Antibunching,
    Hyperbunching,
    Zoo { variant: ZooVariant },
    Hz { variant: HzVariant },
    Duan,
    Decomposition { identity: Decomposition },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessEntry {
    pub id: &'static str,
    pub table: Table,
    pub title: &'static str,
    pub kind: WitnessKind,
    /// Minimum number of modes of the input state.
    pub modes: usize,
    /// Default partially transposed mode, zero-based.
    pub pt_mode: Option<usize>,
    /// Violation condition of the reported value.
    pub threshold: &'static str,
}

impl WitnessEntry {
    pub fn needs_grid(&self) -> bool {
        matches!(self.kind, WitnessKind::Antibunching | WitnessKind::Hyperbunching)
    }

    /// Whether the witness reads the `phase` parameter.
    pub fn uses_phase(&self) -> bool {
        matches!(
            self.kind,
            WitnessKind::Quadrature
                | WitnessKind::SumSqueezing
                | WitnessKind::SumSqueezingMultimode
                | WitnessKind::DifferenceSqueezing
                | WitnessKind::DifferenceSqueezingMultimode
        )
    }
}

const NEG: &str = "value < 0";

const fn entry(
    id: &'static str,
    table: Table,
    title: &'static str,
    kind: WitnessKind,
    modes: usize,
    pt_mode: Option<usize>,
) -> WitnessEntry {
    WitnessEntry { id, table, title, kind, modes, pt_mode, threshold: NEG }
}

use Table::{Table1 as T1, Table2 as T2};

static REGISTRY: [WitnessEntry; 31] = [
    entry("table1.quadrature_squeezing", T1, "Quadrature squeezing", WitnessKind::Quadrature, 1, None),
    entry("table1.principal_squeezing.luks", T1, "Two-mode principal squeezing", WitnessKind::PrincipalSqueezing, 2, None),
    entry("table1.sum_squeezing.hillery", T1, "Sum squeezing", WitnessKind::SumSqueezing, 2, None),
    entry("table1.sum_squeezing.an_tinh", T1, "Multimode sum squeezing", WitnessKind::SumSqueezingMultimode, 2, None),
    entry("table1.difference_squeezing.hillery", T1, "Difference squeezing", WitnessKind::DifferenceSqueezing, 2, None),
    entry(
        "table1.difference_squeezing.an_tinh",
        T1,
        "Multimode difference squeezing",
        WitnessKind::DifferenceSqueezingMultimode,
        2,
        None,
    ),
    entry("table1.sub_poisson.sum", T1, "Sub-Poissonian total photon number", WitnessKind::SubPoisson { sign: Sign::Sum }, 2, None),
    entry(
        "table1.sub_poisson.difference",
        T1,
        "Sub-Poissonian photon-number difference",
        WitnessKind::SubPoisson { sign: Sign::Difference },
        2,
        None,
    ),
    entry("table1.csi", T1, "Cauchy-Schwarz inequality", WitnessKind::Csi, 2, None),
    entry("table1.csi.agarwal", T1, "Agarwal intensity correlation", WitnessKind::Agarwal, 2, None),
    entry("table1.lee", T1, "Lee number-difference test", WitnessKind::Lee, 2, None),
    entry("table1.antibunching", T1, "Photon antibunching", WitnessKind::Antibunching, 0, None),
    entry("table1.hyperbunching", T1, "Photon hyperbunching", WitnessKind::Hyperbunching, 0, None),
    entry("table1.zoo.x72", T1, "F = (1, ab, a+b+)", WitnessKind::Zoo { variant: ZooVariant::X72 }, 2, None),
    entry("table1.zoo.x78", T1, "F = (1, ab+, a+b)", WitnessKind::Zoo { variant: ZooVariant::X78 }, 2, None),
    entry("table1.zoo.x84", T1, "F = (1, a+b+, a++b)", WitnessKind::Zoo { variant: ZooVariant::X84 }, 2, None),
    entry("table1.zoo.x90", T1, "F = (1, a+b, a++b+)", WitnessKind::Zoo { variant: ZooVariant::X90 }, 2, None),
    entry("table1.zoo.x36", T1, "F = (1, a, a+, b+, b)", WitnessKind::Zoo { variant: ZooVariant::X36 }, 2, None),
    entry("table2.duan", T2, "Duan et al. sum criterion", WitnessKind::Duan, 2, Some(1)),
    entry("table2.simon", T2, "Simon criterion", WitnessKind::Decomposition { identity: Decomposition::SimonX43 }, 2, Some(1)),
    entry("table2.mancini", T2, "Mancini et al. criterion", WitnessKind::Decomposition { identity: Decomposition::X58 }, 2, Some(1)),
    entry("table2.hz.x1", T2, "Hillery-Zubairy, F = (1, ab)", WitnessKind::Hz { variant: HzVariant::X1 }, 2, Some(1)),
    entry("table2.hz.x4", T2, "Hillery-Zubairy, F = (a, b)", WitnessKind::Hz { variant: HzVariant::X4 }, 2, Some(1)),
    entry("table2.hz.x34", T2, "Three-mode, F = (1, abc)", WitnessKind::Hz { variant: HzVariant::X34 }, 3, Some(0)),
    entry("table2.hz.x49", T2, "Three-mode, F = (a, bc)", WitnessKind::Hz { variant: HzVariant::X49 }, 3, Some(0)),
    entry(
        "table2.hz.x60",
        T2,
        "Higher order, F = (1, a^m b^n)",
        WitnessKind::Hz { variant: HzVariant::X60 { m: 2, n: 1 } },
        2,
        Some(1),
    ),
    entry(
        "table2.hz.z24",
        T2,
        "Three-mode higher order, F = (1, a^k b^l c^m)",
        WitnessKind::Hz { variant: HzVariant::Z24 { k: 2, l: 1, m: 1 } },
        3,
        Some(0),
    ),
    entry(
        "table2.hz.z26",
        T2,
        "Three-mode higher order, F = (a^k, b^l c^m)",
        WitnessKind::Hz { variant: HzVariant::Z26 { k: 1, l: 2, m: 1 } },
        3,
        Some(0),
    ),
    entry(
        "table2.decomposition.x56",
        T2,
        "F = (1, ab, a+b+) under transposition",
        WitnessKind::Decomposition { identity: Decomposition::X56 },
        2,
        Some(1),
    ),
    entry(
        "table2.decomposition.x57",
        T2,
        "F = (1, a+b+, a++b) under transposition",
        WitnessKind::Decomposition { identity: Decomposition::X57 },
        2,
        Some(1),
    ),
    entry(
        "table2.decomposition.x59",
        T2,
        "F = (1, ab+, a+b) under transposition",
        WitnessKind::Decomposition { identity: Decomposition::X59 },
        2,
        Some(1),
    ),
];

/// All registered witnesses in catalog order.
pub fn registry() -> &'static [WitnessEntry] {
    &REGISTRY
}

pub fn lookup(id: &str) -> Result<&'static WitnessEntry> {
    REGISTRY.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownWitness(id.to_string()))
}

/// Free parameters of parameterized witnesses.
#[derive(Clone, Debug)]
pub struct Params {
    /// Phase `φ` of squeezing operators.
    pub phase: f64,
    /// Per-mode phases of the quadrature; defaults to `phase` on every mode.
    pub phases: Option<Vec<f64>>,
    /// Per-mode quadrature weights; default 1.
    pub coeffs: Option<Vec<f64>>,
    /// Number of annihilated modes in multimode difference squeezing.
    pub k: usize,
    /// `(m, n)` of the higher-order two-mode criterion.
    pub mn: (u32, u32),
    /// `(k, l, m)` of the three-mode higher-order criteria; `None` keeps each variant's default.
    pub klm: Option<(u32, u32, u32)>,
    /// Operator pair of the Cauchy-Schwarz witness; default `(a, b)`.
    pub csi: Option<(PolyOperator, PolyOperator)>,
}

impl Default for Params {
    fn default() -> Self {
        Self { phase: 0.0, phases: None, coeffs: None, k: 1, mn: (2, 1), klm: None, csi: None }
    }
}

impl Params {
    fn hz(&self, variant: HzVariant) -> HzVariant {
        match (variant, self.klm) {
            (HzVariant::X60 { .. }, _) => HzVariant::X60 { m: self.mn.0, n: self.mn.1 },
            (HzVariant::Z24 { .. }, Some((k, l, m))) => HzVariant::Z24 { k, l, m },
            (HzVariant::Z26 { .. }, Some((k, l, m))) => HzVariant::Z26 { k, l, m },
            (v, _) => v,
        }
    }
}

/// Evaluates a state-based witness by id.
pub fn evaluate(id: &str, state: &FockState, params: &Params, opts: &EvalOptions) -> Result<WitnessVerdict> {
    let e = lookup(id)?;
    let phi = params.phase;
    let v = match e.kind {
        WitnessKind::Quadrature => {
            let m = state.num_modes();
            let phases = params.phases.clone().unwrap_or_else(|| vec![phi; m]);
            let coeffs = params.coeffs.clone().unwrap_or_else(|| vec![1.0; phases.len()]);
            if phases.len() != coeffs.len() {
                return Err(Error::InvalidParameter(format!(
                    "{} phases but {} coefficients",
                    phases.len(),
                    coeffs.len()
                )));
            }
            w_quadrature_squeezing(state, &phases, &coeffs, opts)
        }
        WitnessKind::PrincipalSqueezing => w_principal_squeezing(state, opts),
        WitnessKind::SumSqueezing => w_sum_squeezing(state, phi, opts),
        WitnessKind::SumSqueezingMultimode => w_sum_squeezing_mm(state, phi, opts),
        WitnessKind::DifferenceSqueezing => w_difference_squeezing(state, phi, opts),
        WitnessKind::DifferenceSqueezingMultimode => w_difference_squeezing_mm(state, phi, params.k, opts),
        WitnessKind::SubPoisson { sign } => w_sub_poisson(state, sign, opts),
        WitnessKind::Csi => {
            let (f1, f2) = params.csi.clone().unwrap_or_else(default_csi_pair);
            w_csi(state, &f1, &f2, opts)
        }
        WitnessKind::Agarwal => w_agarwal(state, opts),
        WitnessKind::Lee => w_lee(state, opts),
        WitnessKind::Antibunching | WitnessKind::Hyperbunching => {
            return Err(Error::InvalidParameter(format!("witness `{id}` takes a correlation grid, not a state")))
        }
        WitnessKind::Zoo { variant } => w_zoo(state, variant, opts),
        WitnessKind::Hz { variant } => w_hz(state, params.hz(variant), opts),
        WitnessKind::Duan => w_duan(state, opts),
        WitnessKind::Decomposition { identity: Decomposition::X58 } => w_mancini(state, opts),
        WitnessKind::Decomposition { identity } => w_decomposition(state, identity, opts),
    }?;
    Ok(v)
}

/// Evaluates a grid-based witness by id.
pub fn evaluate_grid(id: &str, grid: &CorrelationGrid, t: f64, tau: f64, opts: &EvalOptions) -> Result<WitnessVerdict> {
    match lookup(id)?.kind {
        WitnessKind::Antibunching => w_antibunching(grid, t, tau, opts),
        WitnessKind::Hyperbunching => w_hyperbunching(grid, t, tau, opts),
        _ => Err(Error::InvalidParameter(format!("witness `{id}` takes a state, not a correlation grid"))),
    }
}

/// An operator set of the catalog with its ordering.
#[derive(Clone, Debug)]
pub struct CatalogSet {
    pub name: String,
    pub table: Table,
    pub set: OperatorSet,
    /// Transposed modes for partial-transpose ordering, `None` for normal ordering.
    pub pt_modes: Option<Vec<usize>>,
    pub modes: usize,
}

/// The state-based operator sets of the catalog at their default parameters.
pub fn catalog_operator_sets() -> Result<Vec<CatalogSet>> {
    let one = PolyOperator::identity;
    let pair = |name: &str, op: PolyOperator| OperatorSet::new(vec![("1", one()), (name, op)]);
    let mut out = Vec::new();
    let mut push = |name: &str, table: Table, set: OperatorSet, pt: Option<Vec<usize>>, modes: usize| {
        out.push(CatalogSet { name: name.to_string(), table, set, pt_modes: pt, modes });
    };
    let quad = build_named(&NamedOperator::Quadrature { phases: vec![0.3, -0.7], coeffs: vec![1.0, 0.5] })?;
    push("quadrature", T1, pair("X", quad)?, None, 2);
    let a12 = build_named(&NamedOperator::PairSum)?;
    push(
        "principal_squeezing",
        T1,
        OperatorSet::new(vec![("1", one()), ("a12+", a12.adjoint()), ("a12", a12)])?,
        None,
        2,
    );
    push("sum_squeezing", T1, pair("V", build_named(&NamedOperator::SumSqueeze { phase: 0.4 })?)?, None, 2);
    push("difference_squeezing", T1, pair("W", build_named(&NamedOperator::DifferenceSqueeze { phase: 0.4 })?)?, None, 2);
    push("sub_poisson.sum", T1, pair("n+", build_named(&NamedOperator::NumberSum)?)?, None, 2);
    push("sub_poisson.difference", T1, pair("n-", build_named(&NamedOperator::NumberDifference)?)?, None, 2);
    push(
        "csi.agarwal",
        T1,
        OperatorSet::new(vec![("n1", PolyOperator::number(0)), ("n2", PolyOperator::number(1))])?,
        None,
        2,
    );
    for z in ZooVariant::ALL {
        push(z.id(), T1, z.operator_set()?, None, 2);
    }
    for e in REGISTRY.iter() {
        if let WitnessKind::Hz { variant } = e.kind {
            push(e.id, T2, variant.gamma_set()?, Some(vec![variant.default_pt()]), variant.modes());
        }
    }
    for d in Decomposition::ALL {
        push(d.id(), T2, d.gamma_set()?, Some(vec![1]), 2);
    }
    push(
        "duan",
        T2,
        OperatorSet::new(vec![("1", one()), ("a", PolyOperator::annihilation(0)), ("b", PolyOperator::annihilation(1))])?,
        Some(vec![1]),
        2,
    );
    Ok(out)
}
