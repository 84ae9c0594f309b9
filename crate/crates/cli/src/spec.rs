//! State specification files (TOML).

use ncl_core::fock::{
    default_cutoff_coherent, default_cutoff_squeezed, default_cutoff_thermal, default_cutoff_tmsv, FockState, ModeShape,
    Truncation, C64,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Complex number written as `[re, im]`.
pub type Pair = [f64; 2];

fn complex(p: &Pair) -> C64 {
    Complex64::new(p[0], p[1])
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    pub schema_version: u32,
    #[serde(default)]
    pub provenance: Option<String>,
    /// Expected number of modes, checked against the built state.
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub leakage_tol: Option<f64>,
    #[serde(default)]
    pub allow_overflow: bool,
    pub state: Node,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Component {
    pub weight: f64,
    pub state: Node,
}

/// One constructor. `cutoffs` is optional wherever a default can be derived.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "constructor", rename_all = "snake_case", deny_unknown_fields)]
pub enum Node {
    Coherent {
        alpha: Vec<Pair>,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    Fock {
        occupation: Vec<usize>,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    Thermal {
        mean: Vec<f64>,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    SqueezedVacuum {
        r: f64,
        #[serde(default)]
        theta: f64,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    Tmsv {
        r: f64,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    Tensor {
        factors: Vec<Node>,
    },
    Mixture {
        components: Vec<Component>,
        #[serde(default)]
        cutoffs: Option<Vec<usize>>,
    },
    RawAmplitudes {
        cutoffs: Vec<usize>,
        amplitudes: Vec<Pair>,
    },
    RawDensity {
        cutoffs: Vec<usize>,
        /// Rows of the density matrix.
        rows: Vec<Vec<Pair>>,
    },
}

/// Shape and truncation facts echoed into reports.
#[derive(Clone, Debug, Serialize)]
pub struct StateSummary {
    pub constructor: &'static str,
    pub modes: usize,
    pub cutoffs: Vec<usize>,
    pub kind: ncl_core::fock::StateKind,
    pub leakage: f64,
    pub leakage_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<String>,
}

#[derive(Debug)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<ncl_core::Error> for SpecError {
    fn from(e: ncl_core::Error) -> Self {
        SpecError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, SpecError>;

fn fail<T>(msg: impl Into<String>) -> Result<T> {
    Err(SpecError(msg.into()))
}

pub fn parse(text: &str) -> Result<StateSpec> {
    let spec: StateSpec = toml::from_str(text).map_err(|e| SpecError(format!("malformed state spec: {e}")))?;
    if spec.schema_version != SCHEMA_VERSION {
        return fail(format!(
            "field `schema_version`: unsupported version {} (expected {SCHEMA_VERSION})",
            spec.schema_version
        ));
    }
    if let Some(t) = spec.leakage_tol {
        if !(t > 0.0 && t.is_finite()) {
            return fail(format!("field `leakage_tol`: must be positive and finite, got {t}"));
        }
    }
    Ok(spec)
}

impl Node {
    fn name(&self) -> &'static str {
        match self {
            Node::Coherent { .. } => "coherent",
            Node::Fock { .. } => "fock",
            Node::Thermal { .. } => "thermal",
            Node::SqueezedVacuum { .. } => "squeezed_vacuum",
            Node::Tmsv { .. } => "tmsv",
            Node::Tensor { .. } => "tensor",
            Node::Mixture { .. } => "mixture",
            Node::RawAmplitudes { .. } => "raw_amplitudes",
            Node::RawDensity { .. } => "raw_density",
        }
    }

    fn modes(&self) -> Result<usize> {
        Ok(match self {
            Node::Coherent { alpha, .. } => alpha.len(),
            Node::Fock { occupation, .. } => occupation.len(),
            Node::Thermal { mean, .. } => mean.len(),
            Node::SqueezedVacuum { .. } => 1,
            Node::Tmsv { .. } => 2,
            Node::Tensor { factors } => factors.iter().map(Node::modes).sum::<Result<usize>>()?,
            Node::Mixture { components, .. } => {
                let first = components.first().map(|c| c.state.modes()).transpose()?;
                let m = first.ok_or_else(|| SpecError("mixture: `components` must not be empty".into()))?;
                for (i, c) in components.iter().enumerate() {
                    if c.state.modes()? != m {
                        return fail(format!("mixture: component {i} has a different number of modes"));
                    }
                }
                m
            }
            Node::RawAmplitudes { cutoffs, .. } | Node::RawDensity { cutoffs, .. } => cutoffs.len(),
        })
    }

    fn explicit(&self) -> Option<&Vec<usize>> {
        match self {
            Node::Coherent { cutoffs, .. }
            | Node::Fock { cutoffs, .. }
            | Node::Thermal { cutoffs, .. }
            | Node::SqueezedVacuum { cutoffs, .. }
            | Node::Tmsv { cutoffs, .. }
            | Node::Mixture { cutoffs, .. } => cutoffs.as_ref(),
            Node::RawAmplitudes { cutoffs, .. } | Node::RawDensity { cutoffs, .. } => Some(cutoffs),
            Node::Tensor { .. } => None,
        }
    }

    /// Cutoffs used when none are given.
    fn default_cutoffs(&self) -> Result<Vec<usize>> {
        if let Some(c) = self.explicit() {
            return Ok(c.clone());
        }
        Ok(match self {
            Node::Coherent { alpha, .. } => alpha.iter().map(|a| default_cutoff_coherent(complex(a))).collect(),
            Node::Fock { occupation, .. } => occupation.iter().map(|&n| (n + 1).max(2)).collect(),
            Node::Thermal { mean, .. } => mean.iter().map(|&n| default_cutoff_thermal(n)).collect(),
            Node::SqueezedVacuum { r, .. } => vec![default_cutoff_squeezed(*r)],
            Node::Tmsv { r, .. } => vec![default_cutoff_tmsv(*r); 2],
            Node::Tensor { factors } => {
                let mut out = Vec::new();
                for f in factors {
                    out.extend(f.default_cutoffs()?);
                }
                out
            }
            Node::Mixture { components, .. } => {
                let mut out = vec![0; self.modes()?];
                for c in components {
                    for (o, d) in out.iter_mut().zip(c.state.default_cutoffs()?) {
                        *o = (*o).max(d);
                    }
                }
                out
            }
            Node::RawAmplitudes { .. } | Node::RawDensity { .. } => unreachable!("raw constructors carry cutoffs"),
        })
    }

    fn build(&self, cutoffs: &[usize], trunc: Truncation) -> Result<FockState> {
        let what = self.name();
        if cutoffs.len() != self.modes()? {
            return fail(format!("{what}: `cutoffs` has {} entries for {} modes", cutoffs.len(), self.modes()?));
        }
        if let Some(c) = self.explicit() {
            if c.as_slice() != cutoffs {
                return fail(format!("{what}: `cutoffs` {c:?} conflict with the enclosing shape {cutoffs:?}"));
            }
        }
        let shape = ModeShape::new(cutoffs.to_vec())?;
        let state = match self {
            Node::Coherent { alpha, .. } => {
                FockState::coherent(&shape, &alpha.iter().map(complex).collect::<Vec<_>>(), trunc)?
            }
            Node::Fock { occupation, .. } => FockState::fock(&shape, occupation)?,
            Node::Thermal { mean, .. } => FockState::thermal(&shape, mean, trunc)?,
            Node::SqueezedVacuum { r, theta, .. } => FockState::squeezed_vacuum(&shape, *r, *theta, trunc)?,
            Node::Tmsv { r, .. } => FockState::tmsv(&shape, *r, trunc)?,
            Node::Tensor { factors } => {
                if factors.is_empty() {
                    return fail("tensor: `factors` must not be empty");
                }
                let mut offset = 0;
                let mut acc: Option<FockState> = None;
                for f in factors {
                    let m = f.modes()?;
                    let part = f.build(&cutoffs[offset..offset + m], trunc)?;
                    offset += m;
                    acc = Some(match acc {
                        None => part,
                        Some(a) => a.tensor(&part)?,
                    });
                }
                acc.expect("non-empty factors")
            }
            Node::Mixture { components, .. } => {
                let built = components
                    .iter()
                    .map(|c| c.state.build(cutoffs, trunc).map(|s| (c.weight, s)))
                    .collect::<Result<Vec<_>>>()?;
                let parts: Vec<(f64, &FockState)> = built.iter().map(|(w, s)| (*w, s)).collect();
                FockState::mix(&parts)?
            }
            Node::RawAmplitudes { amplitudes, .. } => {
                if amplitudes.len() != shape.dim() {
                    return fail(format!(
                        "raw_amplitudes: {} amplitudes for dimension {}",
                        amplitudes.len(),
                        shape.dim()
                    ));
                }
                FockState::from_amplitudes(shape, amplitudes.iter().map(complex).collect(), trunc)?
            }
            Node::RawDensity { rows, .. } => {
                let dim = shape.dim();
                if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
                    return fail(format!("raw_density: `rows` must be a {dim}x{dim} matrix"));
                }
                FockState::from_density(shape, rows.iter().flatten().map(complex).collect(), trunc)?
            }
        };
        Ok(state)
    }
}

impl StateSpec {
    pub fn truncation(&self) -> Truncation {
        let mut t = Truncation::default();
        if let Some(tol) = self.leakage_tol {
            t.leakage_tol = tol;
        }
        t.allow_overflow = self.allow_overflow;
        t
    }

    pub fn build(&self) -> Result<(FockState, StateSummary)> {
        let cutoffs = self.state.default_cutoffs()?;
        let trunc = self.truncation();
        let state = self.state.build(&cutoffs, trunc).map_err(|e| SpecError(format!("state: {e}")))?;
        if let Some(m) = self.modes {
            if m != state.num_modes() {
                return fail(format!("field `modes`: spec declares {m} modes, constructor yields {}", state.num_modes()));
            }
        }
        let summary = StateSummary {
            constructor: self.state.name(),
            modes: state.num_modes(),
            cutoffs: state.shape().cutoffs().to_vec(),
            kind: state.kind(),
            leakage: state.leakage(),
            leakage_tol: trunc.leakage_tol,
            provenance: self.provenance.clone(),
        };
        Ok((state, summary))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build(text: &str) -> Result<(FockState, StateSummary)> {
        parse(text)?.build()
    }

    #[test]
    fn tmsv_default_cutoff() {
        let (s, sum) = build("schema_version = 1\n[state]\nconstructor = \"tmsv\"\nr = 1.0\n").unwrap();
        assert_eq!(sum.cutoffs, vec![default_cutoff_tmsv(1.0); 2]);
        assert!(sum.cutoffs[0] >= 29);
        assert!(s.leakage() < 1e-8);
    }

    #[test]
    fn nested_tensor_and_mixture() {
        let text = r#"
schema_version = 1
modes = 3
[state]
constructor = "tensor"
[[state.factors]]
constructor = "mixture"
[[state.factors.components]]
weight = 0.25
state = { constructor = "coherent", alpha = [[0.5, 0.0]] }
[[state.factors.components]]
weight = 0.75
state = { constructor = "fock", occupation = [2] }
[[state.factors]]
constructor = "tmsv"
r = 0.3
cutoffs = [24, 24]
"#;
        let (s, sum) = build(text).unwrap();
        assert_eq!(s.num_modes(), 3);
        assert_eq!(sum.cutoffs[1..], [24, 24]);
        assert_eq!(sum.cutoffs[0], default_cutoff_coherent(C64::new(0.5, 0.0)).max(3));
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let e = build("schema_version = 1\n[state]\nconstructor = \"tmsv\"\nr = 1.0\nbogus = 2\n").unwrap_err();
        assert!(e.0.contains("bogus"), "{e}");
        let e = build("schema_version = 1\n[state]\nconstructor = \"coherent\"\nalpha = [[3.0, 0.0]]\ncutoffs = [10]\n").unwrap_err();
        assert!(e.0.contains("cutoff guard"), "{e}");
        let e = build("schema_version = 2\n[state]\nconstructor = \"fock\"\noccupation = [1]\n").unwrap_err();
        assert!(e.0.contains("schema_version"), "{e}");
        let e = build("schema_version = 1\nmodes = 3\n[state]\nconstructor = \"fock\"\noccupation = [1]\n").unwrap_err();
        assert!(e.0.contains("modes"), "{e}");
    }

    #[test]
    fn raw_density_is_validated() {
        let text = "schema_version = 1\n[state]\nconstructor = \"raw_density\"\ncutoffs = [2]\nrows = [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]\n";
        let (s, _) = build(text).unwrap();
        assert_eq!(s.kind(), ncl_core::fock::StateKind::Density);
        let bad = text.replacen("[0.5, 0.0]", "[0.9, 0.0]", 1);
        assert!(build(&bad).is_err());
    }
}
