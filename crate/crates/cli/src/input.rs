//! JSON input documents.
//!
//! ```json
//! {
//!   "channel": {"kind": "amplitude_damping", "param": 0.3},
//!   "ensemble": {
//!     "x_alphabet": ["0", "1"],
//!     "y_alphabet": ["0", "1"],
//!     "p_xy": [[0.3, 0.2], [0.2, 0.3]],
//!     "signals": {"0,0": {"bloch": [0, 0, 1]}, "0,1": {"vector": [0, 1]}, "...": {}}
//!   },
//!   "sizes": {"m": 2, "l": 2, "k": 2}
//! }
//! ```
//!
//! Divergence inputs carry either `rho` and `sigma`, or a bipartite `state`
//! with `systems` and the `first` party. Complex entries are `[re, im]`
//! pairs or plain reals.

use std::collections::BTreeMap;
use std::path::Path;

use qcap_core::channels::{standard_channel, ChannelKind, CqWiretapEnsemble};
use qcap_core::qmat::{c64, CMat, CVec, DensityOperator, StateVector, SystemLabel, WiretapChannel};
use qcap_core::protosim::CodeSizes;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> num_complex::Complex64 {
        match self {
            Entry::Real(re) => c64(re, 0.0),
            Entry::Complex([re, im]) => c64(re, im),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Matrix(Vec<Vec<Entry>>),
    Bloch([f64; 3]),
    Vector(Vec<Entry>),
    Diag(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelSpec {
    Standard {
        kind: String,
        param: f64,
    },
    Isometry {
        isometry: Vec<Vec<Entry>>,
        dim_b: usize,
        dim_e: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub x_alphabet: Vec<String>,
    pub y_alphabet: Vec<String>,
    pub p_xy: Vec<Vec<f64>>,
    /// Keyed by `"x,y"` with labels from the alphabets.
    pub signals: BTreeMap<String, StateSpec>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SizesSpec {
    pub m: usize,
    pub l: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    #[serde(default)]
    pub channel: Option<ChannelSpec>,
    #[serde(default)]
    pub ensemble: Option<EnsembleSpec>,
    #[serde(default)]
    pub sizes: Option<SizesSpec>,
    #[serde(default)]
    pub rho: Option<StateSpec>,
    #[serde(default)]
    pub sigma: Option<StateSpec>,
    #[serde(default)]
    pub state: Option<StateSpec>,
    /// `(name, dim)` factors of `state`.
    #[serde(default)]
    pub systems: Option<Vec<(String, usize)>>,
    #[serde(default)]
    pub first: Option<Vec<String>>,
}

pub fn read_document(path: &Path) -> CliResult<Document> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_document(&text)
}

pub fn parse_document(text: &str) -> CliResult<Document> {
    Ok(serde_json::from_str(text)?)
}

fn matrix(rows: &[Vec<Entry>]) -> CliResult<CMat> {
    let n = rows.len();
    let m = rows.first().map(Vec::len).unwrap_or(0);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(CliError::Input("matrices must be non-empty and rectangular".into()));
    }
    Ok(CMat::from_fn(n, m, |i, j| rows[i][j].value()))
}

impl StateSpec {
    /// Dimension implied by the entries.
    pub fn dim(&self) -> usize {
        match self {
            StateSpec::Matrix(rows) => rows.len(),
            StateSpec::Bloch(_) => 2,
            StateSpec::Vector(v) => v.len(),
            StateSpec::Diag(p) => p.len(),
        }
    }

    pub fn build(&self, systems: Vec<SystemLabel>) -> CliResult<DensityOperator> {
        let d: usize = systems.iter().map(|s| s.dim).product();
        if self.dim() != d {
            return Err(CliError::Input(format!(
                "state has dimension {} but its systems need {d}",
                self.dim()
            )));
        }
        Ok(match self {
            StateSpec::Matrix(rows) => DensityOperator::from_matrix(systems, matrix(rows)?)?,
            StateSpec::Bloch(r) => DensityOperator::from_bloch(&systems[0].name, *r)?,
            StateSpec::Vector(v) => {
                let amps = CVec::from_iterator(v.len(), v.iter().map(|e| e.value()));
                StateVector::new(systems, amps)?.to_density()
            }
            StateSpec::Diag(p) => {
                DensityOperator::from_matrix(systems, qcap_core::qmat::diag(p))?
            }
        })
    }

    pub fn build_single(&self, name: &str) -> CliResult<DensityOperator> {
        self.build(vec![SystemLabel::new(name, self.dim())])
    }
}

impl ChannelSpec {
    pub fn build(&self) -> CliResult<WiretapChannel> {
        match self {
            ChannelSpec::Standard { kind, param } => {
                Ok(standard_channel(ChannelKind::parse(kind)?, *param)?)
            }
            ChannelSpec::Isometry {
                isometry,
                dim_b,
                dim_e,
            } => {
                let v = matrix(isometry)?;
                Ok(WiretapChannel::new(
                    SystemLabel::new("A", v.ncols()),
                    SystemLabel::new("B", *dim_b),
                    SystemLabel::new("E", *dim_e),
                    v,
                )?)
            }
        }
    }
}

impl EnsembleSpec {
    pub fn build(&self, input: &SystemLabel) -> CliResult<CqWiretapEnsemble> {
        let mut signals = Vec::with_capacity(self.x_alphabet.len());
        for x in &self.x_alphabet {
            let mut row = Vec::with_capacity(self.y_alphabet.len());
            for y in &self.y_alphabet {
                let key = format!("{x},{y}");
                let spec = self
                    .signals
                    .get(&key)
                    .ok_or_else(|| CliError::Input(format!("missing signal for `{key}`")))?;
                let rho = spec.build(vec![input.clone()]).map_err(|e| match e {
                    CliError::Input(msg) => CliError::Input(format!("signal `{key}`: {msg}")),
                    other => other,
                })?;
                row.push(rho);
            }
            signals.push(row);
        }
        if self.signals.len() != self.x_alphabet.len() * self.y_alphabet.len() {
            return Err(CliError::Input("signals contain keys outside the alphabets".into()));
        }
        Ok(CqWiretapEnsemble::new(
            self.x_alphabet.clone(),
            self.y_alphabet.clone(),
            self.p_xy.clone(),
            signals,
        )?)
    }
}

impl SizesSpec {
    pub fn build(&self) -> CliResult<CodeSizes> {
        Ok(CodeSizes::new(self.m, self.l, self.k)?)
    }
}

/// A channel together with an ensemble on its input.
pub struct Scenario {
    pub channel: WiretapChannel,
    pub ensemble: CqWiretapEnsemble,
}

impl Document {
    pub fn channel(&self) -> CliResult<WiretapChannel> {
        self.channel
            .as_ref()
            .ok_or_else(|| CliError::Input("document has no `channel`".into()))?
            .build()
    }

    pub fn scenario(&self) -> CliResult<Scenario> {
        let channel = self.channel()?;
        let ensemble = self
            .ensemble
            .as_ref()
            .ok_or_else(|| CliError::Input("document has no `ensemble`".into()))?
            .build(channel.input())?;
        Ok(Scenario { channel, ensemble })
    }
}
