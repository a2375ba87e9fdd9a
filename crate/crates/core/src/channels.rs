//! Standard wiretap channels, classical-quantum wiretap ensembles and the
//! joint states they induce.
//!
//! A [`JointWiretapState`] holds `ρ_XYBE = Σ p(x,y) |x⟩⟨x| ⊗ |y⟩⟨y| ⊗ ρ^{x,y}_BE`
//! block by block; dense forms are built only on request.

use serde::{Deserialize, Serialize};

use crate::divergences::{coherent_info, mutual_information, CqqState};
use crate::error::{Error, Result};
use crate::qmat::{
    apply_channel, c64, diag, CMat, CVec, ChannelOutput, DensityOperator, StateVector,
    SystemLabel, WiretapChannel, SUPPORT_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    AmplitudeDamping,
    Dephasing,
    Depolarizing,
    Erasure,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 4] = [
        ChannelKind::AmplitudeDamping,
        ChannelKind::Dephasing,
        ChannelKind::Depolarizing,
        ChannelKind::Erasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::AmplitudeDamping => "amplitude_damping",
            ChannelKind::Dephasing => "dephasing",
            ChannelKind::Depolarizing => "depolarizing",
            ChannelKind::Erasure => "erasure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown channel kind `{s}`")))
    }
}

fn pauli() -> [CMat; 3] {
    let z = c64(0.0, 0.0);
    let o = c64(1.0, 0.0);
    let i = c64(0.0, 1.0);
    [
        CMat::from_row_slice(2, 2, &[z, o, o, z]),
        CMat::from_row_slice(2, 2, &[z, -i, i, z]),
        CMat::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Qubit-input channel with a minimal environment.
///
/// * amplitude damping `γ`: decay `|1⟩ → |0⟩` with probability `γ`;
/// * dephasing `p`: a phase flip `Z` with probability `p`, so coherences are
///   scaled by `1 − 2p` and `p = 1/2` measures in the computational basis;
/// * depolarizing `p`: `ρ ↦ (1 − p)ρ + p·1/2`;
/// * erasure `p`: Bob receives the flag `|2⟩` with probability `p`, and Eve
///   receives the input in that case.
pub fn standard_channel(kind: ChannelKind, param: f64) -> Result<WiretapChannel> {
    if !(0.0..=1.0).contains(&param) {
        return Err(Error::InvalidParameter(format!(
            "{} parameter must lie in [0, 1], got {param}",
            kind.name()
        )));
    }
    let a = SystemLabel::new("A", 2);
    let b = SystemLabel::new("B", 2);
    let id = CMat::identity(2, 2);
    match kind {
        ChannelKind::AmplitudeDamping => {
            let k0 = diag(&[1.0, (1.0 - param).sqrt()]);
            let mut k1 = CMat::zeros(2, 2);
            k1[(0, 1)] = c64(param.sqrt(), 0.0);
            WiretapChannel::from_kraus(a, b, "E", &[k0, k1])
        }
        ChannelKind::Dephasing => {
            let [_, _, z] = pauli();
            WiretapChannel::from_kraus(
                a,
                b,
                "E",
                &[id.scale((1.0 - param).sqrt()), z.scale(param.sqrt())],
            )
        }
        ChannelKind::Depolarizing => {
            let [x, y, z] = pauli();
            let s = (param / 4.0).sqrt();
            WiretapChannel::from_kraus(
                a,
                b,
                "E",
                &[
                    id.scale((1.0 - 3.0 * param / 4.0).sqrt()),
                    x.scale(s),
                    y.scale(s),
                    z.scale(s),
                ],
            )
        }
        ChannelKind::Erasure => {
            let mut v = CMat::zeros(9, 2);
            for k in 0..2 {
                v[(k * 3 + 2, k)] = c64((1.0 - param).sqrt(), 0.0);
                v[(2 * 3 + k, k)] = c64(param.sqrt(), 0.0);
            }
            WiretapChannel::new(a, SystemLabel::new("B", 3), SystemLabel::new("E", 3), v)
        }
    }
}

/// `Σᵢ wᵢ |i⟩⟨i| ⊗ ρᵢ` with a classical register named `register`.
pub fn classical_quantum(
    register: &str,
    weights: &[f64],
    blocks: &[DensityOperator],
) -> Result<DensityOperator> {
    let first = blocks
        .first()
        .ok_or_else(|| Error::InvalidParameter("no blocks".into()))?;
    let d = first.dim();
    let n = blocks.len();
    let mut m = CMat::zeros(n * d, n * d);
    for (i, (w, b)) in weights.iter().zip(blocks).enumerate() {
        first.same_space(b)?;
        m.view_mut((i * d, i * d), (d, d)).copy_from(&b.matrix().scale(*w));
    }
    let mut systems = vec![SystemLabel::new(register, n)];
    systems.extend(first.systems().iter().cloned());
    DensityOperator::from_matrix(systems, m)
}

fn check_distribution(p_xy: &[Vec<f64>]) -> Result<()> {
    let ny = p_xy.first().map(Vec::len).unwrap_or(0);
    if p_xy.is_empty() || ny == 0 {
        return Err(Error::InvalidParameter("empty distribution".into()));
    }
    let mut total = 0.0;
    for row in p_xy {
        if row.len() != ny {
            return Err(Error::DimensionMismatch("ragged p(x,y)".into()));
        }
        for &v in row {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!("negative probability {v}")));
            }
            total += v;
        }
    }
    if (total - 1.0).abs() > SUPPORT_TOL {
        return Err(Error::InvalidParameter(format!("p(x,y) sums to {total}")));
    }
    Ok(())
}

/// Encoder data: a joint distribution on `X × Y` and one input signal per
/// pair.
#[derive(Debug, Clone)]
pub struct CqWiretapEnsemble {
    pub x_alphabet: Vec<String>,
    pub y_alphabet: Vec<String>,
    pub p_xy: Vec<Vec<f64>>,
    /// `signals[x][y]`, all on one input system.
    pub signals: Vec<Vec<DensityOperator>>,
}

impl CqWiretapEnsemble {
    pub fn new(
        x_alphabet: Vec<String>,
        y_alphabet: Vec<String>,
        p_xy: Vec<Vec<f64>>,
        signals: Vec<Vec<DensityOperator>>,
    ) -> Result<Self> {
        check_distribution(&p_xy)?;
        if p_xy.len() != x_alphabet.len() || p_xy[0].len() != y_alphabet.len() {
            return Err(Error::DimensionMismatch(
                "p(x,y) does not match the alphabets".into(),
            ));
        }
        if signals.len() != x_alphabet.len() || signals.iter().any(|r| r.len() != y_alphabet.len()) {
            return Err(Error::DimensionMismatch(
                "one signal per (x, y) pair is required".into(),
            ));
        }
        let first = &signals[0][0];
        for s in signals.iter().flatten() {
            first.same_space(s)?;
            if s.systems().len() != 1 {
                return Err(Error::InvalidParameter(
                    "signals must live on a single input system".into(),
                ));
            }
        }
        Ok(Self {
            x_alphabet,
            y_alphabet,
            p_xy,
            signals,
        })
    }

    /// Alphabets named `0, 1, …`.
    pub fn indexed(p_xy: Vec<Vec<f64>>, signals: Vec<Vec<DensityOperator>>) -> Result<Self> {
        let nx = p_xy.len();
        let ny = p_xy.first().map(Vec::len).unwrap_or(0);
        Self::new(
            (0..nx).map(|i| i.to_string()).collect(),
            (0..ny).map(|i| i.to_string()).collect(),
            p_xy,
            signals,
        )
    }

    pub fn nx(&self) -> usize {
        self.x_alphabet.len()
    }

    pub fn ny(&self) -> usize {
        self.y_alphabet.len()
    }

    pub fn through(&self, channel: &WiretapChannel) -> Result<JointWiretapState> {
        JointWiretapState::from_ensemble(self, channel)
    }
}

/// `ρ_XYBE` stored as its joint distribution and `B ⊗ E` blocks.
#[derive(Debug, Clone)]
pub struct JointWiretapState {
    p_xy: Vec<Vec<f64>>,
    blocks: Vec<Vec<DensityOperator>>,
}

impl JointWiretapState {
    /// Blocks must share one two-factor space named `B`, `E`.
    pub fn new(p_xy: Vec<Vec<f64>>, blocks: Vec<Vec<DensityOperator>>) -> Result<Self> {
        check_distribution(&p_xy)?;
        if blocks.len() != p_xy.len() || blocks.iter().zip(&p_xy).any(|(b, p)| b.len() != p.len()) {
            return Err(Error::DimensionMismatch("one block per (x, y) pair".into()));
        }
        let first = &blocks[0][0];
        if first.names() != ["B", "E"] {
            return Err(Error::LabelMismatch(format!(
                "blocks must be on B ⊗ E, got {:?}",
                first.names()
            )));
        }
        for b in blocks.iter().flatten() {
            first.same_space(b)?;
        }
        Ok(Self { p_xy, blocks })
    }

    pub fn from_ensemble(ens: &CqWiretapEnsemble, channel: &WiretapChannel) -> Result<Self> {
        let input = channel.input().name.clone();
        let blocks = ens
            .signals
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        let s = s.relabel(&[input.as_str()])?;
                        apply_channel(channel, &s, ChannelOutput::BE)?.relabel(&["B", "E"])
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ens.p_xy.clone(), blocks)
    }

    pub fn nx(&self) -> usize {
        self.p_xy.len()
    }

    pub fn ny(&self) -> usize {
        self.p_xy[0].len()
    }

    pub fn p_xy(&self) -> &[Vec<f64>] {
        &self.p_xy
    }

    pub fn block(&self, x: usize, y: usize) -> &DensityOperator {
        &self.blocks[x][y]
    }

    pub fn dim_b(&self) -> usize {
        self.blocks[0][0].systems()[0].dim
    }

    pub fn dim_e(&self) -> usize {
        self.blocks[0][0].systems()[1].dim
    }

    pub fn p_x(&self) -> Vec<f64> {
        self.p_xy.iter().map(|r| r.iter().sum()).collect()
    }

    /// `p(y|x)`; uniform when `p(x) = 0`.
    pub fn p_y_given_x(&self, x: usize) -> Vec<f64> {
        let px: f64 = self.p_xy[x].iter().sum();
        let ny = self.ny();
        if px <= 0.0 {
            return vec![1.0 / ny as f64; ny];
        }
        self.p_xy[x].iter().map(|v| v / px).collect()
    }

    pub fn rho_b(&self, x: usize, y: usize) -> DensityOperator {
        self.blocks[x][y].reduce_to(&["B"]).expect("block on B ⊗ E")
    }

    pub fn rho_e(&self, x: usize, y: usize) -> DensityOperator {
        self.blocks[x][y].reduce_to(&["E"]).expect("block on B ⊗ E")
    }

    fn average(&self, x: usize, f: impl Fn(usize) -> DensityOperator) -> DensityOperator {
        let py = self.p_y_given_x(x);
        let parts: Vec<DensityOperator> = (0..self.ny()).map(f).collect();
        let refs: Vec<(f64, &DensityOperator)> = py.iter().copied().zip(parts.iter()).collect();
        DensityOperator::mixture(&refs).expect("conditional distribution")
    }

    /// `ρ^x_B = Σ_y p(y|x) ρ^{x,y}_B`.
    pub fn rho_b_given_x(&self, x: usize) -> DensityOperator {
        self.average(x, |y| self.rho_b(x, y))
    }

    pub fn rho_e_given_x(&self, x: usize) -> DensityOperator {
        self.average(x, |y| self.rho_e(x, y))
    }

    /// `ρ_XB`.
    pub fn xb_state(&self) -> Result<DensityOperator> {
        let blocks: Vec<DensityOperator> = (0..self.nx()).map(|x| self.rho_b_given_x(x)).collect();
        classical_quantum("X", &self.p_x(), &blocks)
    }

    fn y_given_x(&self, side: &str) -> Result<CqqState> {
        let blocks = (0..self.nx())
            .map(|x| {
                let py = self.p_y_given_x(x);
                let parts: Vec<DensityOperator> = (0..self.ny())
                    .map(|y| self.blocks[x][y].reduce_to(&[side]))
                    .collect::<Result<_>>()?;
                classical_quantum("Y", &py, &parts)
            })
            .collect::<Result<Vec<_>>>()?;
        CqqState::new(self.p_x(), blocks, vec!["Y".into()])
    }

    /// `ρ_XYB` as blocks `ρ^x_YB` conditioned on `x`.
    pub fn yb_given_x(&self) -> Result<CqqState> {
        self.y_given_x("B")
    }

    /// `ρ_XYE` as blocks `ρ^x_YE` conditioned on `x`.
    pub fn ye_given_x(&self) -> Result<CqqState> {
        self.y_given_x("E")
    }

    /// Dense `ρ_XYBE`.
    pub fn to_dense(&self) -> Result<DensityOperator> {
        let blocks = (0..self.nx())
            .map(|x| classical_quantum("Y", &self.p_y_given_x(x), &self.blocks[x]))
            .collect::<Result<Vec<_>>>()?;
        classical_quantum("X", &self.p_x(), &blocks)
    }

    /// Asymptotic rates `(I(X;B), I(Y;B|X) − I(Y;E|X))`.
    pub fn asymptotic_rates(&self) -> Result<(f64, f64)> {
        let r = mutual_information(&self.xb_state()?, &["X"])?;
        let yb = crate::divergences::cond_mutual_information(&self.yb_given_x()?)?;
        let ye = crate::divergences::cond_mutual_information(&self.ye_given_x()?)?;
        Ok((r, yb - ye))
    }
}

/// `σ_XRBE = Σₓ p(x) |x⟩⟨x| ⊗ |φ^x⟩⟨φ^x|_RBE` after the channel.
#[derive(Debug, Clone)]
pub struct CoherentEnsembleState {
    weights: Vec<f64>,
    blocks: Vec<StateVector>,
}

/// Push each purification `|φ^x⟩_RA` through the channel's isometry. `R` is the
/// factor of each input that the channel does not act on.
pub fn coherent_ensemble_state(
    weights: &[f64],
    purifications: &[StateVector],
    channel: &WiretapChannel,
) -> Result<CoherentEnsembleState> {
    if weights.len() != purifications.len() || weights.is_empty() {
        return Err(Error::DimensionMismatch(
            "one purification per symbol is required".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > SUPPORT_TOL || weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::InvalidParameter(format!("weights sum to {total}")));
    }
    let input = channel.input().name.as_str();
    let blocks = purifications
        .iter()
        .map(|phi| {
            if phi.systems().len() != 2 {
                return Err(Error::InvalidParameter(
                    "purifications must be on R ⊗ A".into(),
                ));
            }
            let pos = phi
                .systems()
                .iter()
                .position(|s| s.name == input)
                .ok_or_else(|| Error::UnknownLabel(input.to_string()))?;
            let names: Vec<&str> = if pos == 0 { vec![input, "R"] } else { vec!["R", input] };
            let out = channel.apply_vector(&phi.relabel(&names)?)?;
            out.relabel(&["R", "B", "E"])
        })
        .collect::<Result<Vec<_>>>()?;
    let first = blocks[0].systems().to_vec();
    if blocks.iter().any(|b| b.systems() != first) {
        return Err(Error::LabelMismatch("purifications differ in shape".into()));
    }
    Ok(CoherentEnsembleState {
        weights: weights.to_vec(),
        blocks,
    })
}

impl CoherentEnsembleState {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocks(&self) -> &[StateVector] {
        &self.blocks
    }

    fn block_state(&self, x: usize) -> DensityOperator {
        self.blocks[x].to_density()
    }

    /// `(I(X;B), I(R⟩BX))`.
    pub fn rates(&self) -> Result<(f64, f64)> {
        let bs: Vec<DensityOperator> = (0..self.weights.len())
            .map(|x| self.block_state(x).reduce_to(&["B"]))
            .collect::<Result<_>>()?;
        let refs: Vec<(f64, &DensityOperator)> = self.weights.iter().copied().zip(bs.iter()).collect();
        let avg = DensityOperator::mixture(&refs)?;
        let within: f64 = self
            .weights
            .iter()
            .zip(&bs)
            .map(|(w, b)| w * b.entropy())
            .sum();
        let mut coh = 0.0;
        for (x, &w) in self.weights.iter().enumerate() {
            if w > 0.0 {
                let rb = self.block_state(x).reduce_to(&["R", "B"])?;
                coh += w * coherent_info(&rb, &["R"])?;
            }
        }
        Ok((avg.entropy() - within, coh))
    }

    /// `I(R⟩BX)`.
    pub fn coherent_information(&self) -> Result<f64> {
        Ok(self.rates()?.1)
    }
}

/// Measure `R` in the Schmidt basis of each block, turning the coherent state
/// into `Σ p(x) p(y|x) |x⟩⟨x| ⊗ |y⟩⟨y| ⊗ |ψ^{x,y}⟩⟨ψ^{x,y}|_BE`. `Y` indexes
/// the eigenvectors of `σ^x_R` in ascending eigenvalue order.
pub fn decohere_reference(state: &CoherentEnsembleState) -> Result<JointWiretapState> {
    let dr = state.blocks[0].systems()[0].dim;
    let db = state.blocks[0].systems()[1].dim;
    let de = state.blocks[0].systems()[2].dim;
    let dbe = db * de;
    let mut p_xy = Vec::new();
    let mut blocks = Vec::new();
    for (x, phi) in state.blocks.iter().enumerate() {
        let rho_r = phi.to_density().reduce_to(&["R"])?;
        let e = rho_r.eigh();
        let amps = phi.amplitudes();
        let mut row_p = Vec::with_capacity(dr);
        let mut row_b = Vec::with_capacity(dr);
        for y in 0..dr {
            let u = e.vectors.column(y);
            let mut v = CVec::zeros(dbe);
            for r in 0..dr {
                let c = u[r].conj();
                for j in 0..dbe {
                    v[j] += c * amps[r * dbe + j];
                }
            }
            let n = v.norm();
            if n > 1e-12 {
                v.unscale_mut(n);
            } else {
                v = CVec::zeros(dbe);
                v[0] = c64(1.0, 0.0);
            }
            row_p.push(state.weights[x] * e.values[y].max(0.0));
            let psi = StateVector::new(
                vec![SystemLabel::new("B", db), SystemLabel::new("E", de)],
                v,
            )?;
            row_b.push(psi.to_density());
        }
        p_xy.push(row_p);
        blocks.push(row_b);
    }
    let total: f64 = p_xy.iter().flatten().sum();
    for v in p_xy.iter_mut().flatten() {
        *v /= total;
    }
    JointWiretapState::new(p_xy, blocks)
}

/// `|I(R⟩BX)_σ − [I(Y;B|X) − I(Y;E|X)]_σ̄|` with `σ̄` the decohered state.
pub fn private_to_coherent_residual(state: &CoherentEnsembleState) -> Result<f64> {
    let coh = state.coherent_information()?;
    let (_, private) = decohere_reference(state)?.asymptotic_rates()?;
    Ok((coh - private).abs())
}
