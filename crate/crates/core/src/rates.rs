//! One-shot achievable and converse rate pairs for simultaneous public and
//! private communication, the asymptotic corner point, and region sweeps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channels::{
    private_to_coherent_residual, CoherentEnsembleState, CqWiretapEnsemble, JointWiretapState,
};
use crate::classical::{mutual_information_pair, ClassicalCqq, ClassicalPair};
use crate::divergences::{
    cond_i_h_eps, cond_i_max_alt_smooth, cond_i_max_smooth, i_h_eps, i_max_alt_smooth,
    i_max_smooth, SmoothInterval,
};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qmat::{DensityOperator, WiretapChannel, SUPPORT_TOL};

/// Cap applied to the matched converse error parameters.
pub const MATCHED_EPS_CAP: f64 = 0.49;
/// Default limit on the number of encoders a sweep may evaluate.
pub const DEFAULT_MAX_SAMPLES: usize = 100_000;

/// Error and slack parameters `(ε, ε′, δ, δ′, γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackParams {
    pub eps: f64,
    pub eps_prime: f64,
    pub delta: f64,
    pub delta_prime: f64,
    pub gamma: f64,
}

impl Default for SlackParams {
    fn default() -> Self {
        Self {
            eps: 0.1,
            eps_prime: 0.1,
            delta: 0.05,
            delta_prime: 0.1,
            gamma: 0.05,
        }
    }
}

fn open_interval(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if v > lo && v < hi {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must lie in ({lo}, {hi}), got {v}"
        )))
    }
}

impl SlackParams {
    pub fn new(eps: f64, eps_prime: f64, delta: f64, delta_prime: f64, gamma: f64) -> Result<Self> {
        let s = Self {
            eps,
            eps_prime,
            delta,
            delta_prime,
            gamma,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        open_interval("eps", self.eps, 0.0, 1.0)?;
        open_interval("eps_prime", self.eps_prime, 0.0, 1.0)?;
        open_interval("delta", self.delta, 0.0, self.eps)?;
        let root = self.eps_prime.sqrt();
        open_interval("delta_prime", self.delta_prime, 0.0, root)?;
        open_interval("gamma", self.gamma, 0.0, root - self.delta_prime)
    }

    /// `log₂(4ε/δ²)`.
    pub fn public_penalty(&self) -> f64 {
        (4.0 * self.eps / (self.delta * self.delta)).log2()
    }

    /// `log₂(4ε/δ²) + 2·log₂(1/δ′)`.
    pub fn private_penalty(&self) -> f64 {
        self.public_penalty() + 2.0 * (1.0 / self.delta_prime).log2()
    }

    /// Smoothing radius `√ε′ − δ′` of the eavesdropper term.
    pub fn eve_radius(&self) -> f64 {
        self.eps_prime.sqrt() - self.delta_prime
    }

    /// Public and private error budgets `(3ε + 2√ε + √ε′, 2(ε + √ε) + √ε′)`
    /// of the one-shot code, each capped at [`MATCHED_EPS_CAP`].
    pub fn matched_converse(&self) -> (f64, f64) {
        let (e, r, rp) = (self.eps, self.eps.sqrt(), self.eps_prime.sqrt());
        (
            (3.0 * e + 2.0 * r + rp).min(MATCHED_EPS_CAP),
            (2.0 * (e + r) + rp).min(MATCHED_EPS_CAP),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Achievable,
    Converse,
    Asymptotic,
}

/// The information quantities a rate pair was assembled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTerms {
    /// Public information between `X` and Bob.
    pub public_info: f64,
    /// Conditional information between `Y` and Bob given `X`.
    pub bob_info: f64,
    /// Eavesdropper term actually subtracted.
    pub eve_info: f64,
    /// Width of the smoothing interval the eavesdropper term came from.
    pub eve_width: f64,
    pub public_penalty: f64,
    pub private_penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub public: f64,
    pub private: f64,
    pub provenance: Provenance,
    pub slacks: Option<SlackParams>,
    /// Number of channel uses; rates are per use.
    pub blocklength: usize,
    pub terms: RateTerms,
}

impl RatePair {
    /// Rates with negative values raised to 0, for plotting.
    pub fn clamped(&self) -> (f64, f64) {
        (self.public.max(0.0), self.private.max(0.0))
    }
}

/// One-shot achievable pair: Bob's terms at `ε − δ`, Eve's alternate smooth
/// max-information at `√ε′ − δ′` taken at its upper endpoint.
pub fn achievable_pair(state: &JointWiretapState, s: &SlackParams) -> Result<RatePair> {
    s.validate()?;
    let eb = s.eps - s.delta;
    let public_info = i_h_eps(&state.xb_state()?, &["X"], eb)?;
    let bob_info = cond_i_h_eps(&state.yb_given_x()?, eb)?;
    let eve = cond_i_max_alt_smooth(&state.ye_given_x()?, s.eve_radius())?;
    let terms = RateTerms {
        public_info,
        bob_info,
        eve_info: eve.upper,
        eve_width: eve.width(),
        public_penalty: s.public_penalty(),
        private_penalty: s.private_penalty(),
    };
    Ok(RatePair {
        public: public_info - terms.public_penalty,
        private: bob_info - eve.upper - terms.private_penalty,
        provenance: Provenance::Achievable,
        slacks: Some(*s),
        blocklength: 1,
        terms,
    })
}

/// Converse pair for codes with public error `eps` and privacy error
/// `eps_prime`. Eve's term is the lower endpoint of the smooth
/// max-information at `√(2ε′)`, and vanishes when that radius reaches 1.
pub fn converse_pair_at(state: &JointWiretapState, eps: f64, eps_prime: f64) -> Result<RatePair> {
    open_interval("eps", eps, 0.0, 1.0)?;
    open_interval("eps_prime", eps_prime, 0.0, 1.0)?;
    let public_info = i_h_eps(&state.xb_state()?, &["X"], eps)?;
    let bob_info = cond_i_h_eps(&state.yb_given_x()?, eps.sqrt())?;
    let radius = (2.0 * eps_prime).sqrt();
    let eve = if radius >= 1.0 {
        SmoothInterval::point(0.0)
    } else {
        cond_i_max_smooth(&state.ye_given_x()?, radius)?
    };
    Ok(RatePair {
        public: public_info,
        private: bob_info - eve.lower,
        provenance: Provenance::Converse,
        slacks: None,
        blocklength: 1,
        terms: RateTerms {
            public_info,
            bob_info,
            eve_info: eve.lower,
            eve_width: eve.width(),
            public_penalty: 0.0,
            private_penalty: 0.0,
        },
    })
}

pub fn converse_pair(state: &JointWiretapState, s: &SlackParams) -> Result<RatePair> {
    s.validate()?;
    let mut pair = converse_pair_at(state, s.eps, s.eps_prime)?;
    pair.slacks = Some(*s);
    Ok(pair)
}

/// Converse evaluated at the error budgets of the achievable code built from
/// `s`, so the two pairs are directly comparable.
pub fn matched_converse_pair(state: &JointWiretapState, s: &SlackParams) -> Result<RatePair> {
    s.validate()?;
    let (e, ep) = s.matched_converse();
    let mut pair = converse_pair_at(state, e, ep)?;
    pair.slacks = Some(*s);
    Ok(pair)
}

fn asymptotic(public: f64, private: f64, bob_info: f64, eve_info: f64) -> RatePair {
    RatePair {
        public,
        private,
        provenance: Provenance::Asymptotic,
        slacks: None,
        blocklength: 1,
        terms: RateTerms {
            public_info: public,
            bob_info,
            eve_info,
            eve_width: 0.0,
            public_penalty: 0.0,
            private_penalty: 0.0,
        },
    }
}

/// Asymptotic corner `(I(X;B), I(R⟩BX))` of a coherent ensemble.
pub fn ds_region_point(state: &CoherentEnsembleState) -> Result<RatePair> {
    let (r, coh) = state.rates()?;
    Ok(asymptotic(r, coh, coh, 0.0))
}

/// Asymptotic corner `(I(X;B), I(Y;B|X) − I(Y;E|X))` of a joint state.
pub fn ds_point_joint(state: &JointWiretapState) -> Result<RatePair> {
    let r = crate::divergences::mutual_information(&state.xb_state()?, &["X"])?;
    let yb = crate::divergences::cond_mutual_information(&state.yb_given_x()?)?;
    let ye = crate::divergences::cond_mutual_information(&state.ye_given_x()?)?;
    Ok(asymptotic(r, yb - ye, yb, ye))
}

/// `|I(R⟩BX)_σ − [I(Y;B|X) − I(Y;E|X)]_σ̄|`.
pub fn private_to_coherent_check(state: &CoherentEnsembleState) -> Result<f64> {
    private_to_coherent_residual(state)
}

/// Both sides of the comparison between the two smooth max-informations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BridgeCheck {
    /// `Ĩ_max^ε(A;B)`.
    pub alternate: SmoothInterval,
    /// `I_max^{ε−γ}(A;B)`.
    pub standard: SmoothInterval,
    /// `log₂(3/γ²)`.
    pub offset: f64,
}

impl BridgeCheck {
    /// `Ĩ_max^ε` upper end minus the bridged bound; nonpositive when the
    /// comparison holds.
    pub fn excess(&self) -> f64 {
        self.alternate.upper - (self.standard.upper + self.offset)
    }
}

pub fn bridge_offset(gamma: f64) -> f64 {
    (3.0 / (gamma * gamma)).log2()
}

pub fn alt_smooth_bridge(
    rho: &DensityOperator,
    a: &[&str],
    eps: f64,
    gamma: f64,
) -> Result<BridgeCheck> {
    open_interval("gamma", gamma, 0.0, eps)?;
    Ok(BridgeCheck {
        alternate: i_max_alt_smooth(rho, a, eps)?,
        standard: i_max_smooth(rho, a, eps - gamma)?,
        offset: bridge_offset(gamma),
    })
}

// ---------------------------------------------------------------------------
// Commuting states and blocklength n

/// A joint state whose blocks are all diagonal, held as distributions.
#[derive(Debug, Clone)]
pub struct ClassicalWiretap {
    p_xy: Vec<Vec<f64>>,
    /// `P(b, e | x, y)` row-major over `(b, e)`.
    p_be: Vec<Vec<Vec<f64>>>,
    dim_b: usize,
    dim_e: usize,
}

impl ClassicalWiretap {
    /// `p_be[x][y]` is `P(b, e | x, y)` row-major over `(b, e)`.
    pub fn new(
        p_xy: Vec<Vec<f64>>,
        p_be: Vec<Vec<Vec<f64>>>,
        dim_b: usize,
        dim_e: usize,
    ) -> Result<Self> {
        let total: f64 = p_xy.iter().flatten().sum();
        if (total - 1.0).abs() > SUPPORT_TOL || p_xy.iter().flatten().any(|&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("p(x,y) sums to {total}")));
        }
        if p_be.len() != p_xy.len() {
            return Err(Error::DimensionMismatch("one row of blocks per x".into()));
        }
        for (row, prow) in p_be.iter().zip(&p_xy) {
            if row.len() != prow.len() {
                return Err(Error::DimensionMismatch("one block per (x, y)".into()));
            }
            for d in row {
                let t: f64 = d.iter().sum();
                if d.len() != dim_b * dim_e || (t - 1.0).abs() > SUPPORT_TOL || d.iter().any(|&v| !(v >= 0.0)) {
                    return Err(Error::InvalidParameter(
                        "each block must be a distribution on B × E".into(),
                    ));
                }
            }
        }
        Ok(Self {
            p_xy,
            p_be,
            dim_b,
            dim_e,
        })
    }

    /// Requires every block to be diagonal in the computational basis.
    pub fn from_state(state: &JointWiretapState) -> Result<Self> {
        let mut p_be = Vec::with_capacity(state.nx());
        for x in 0..state.nx() {
            let mut row = Vec::with_capacity(state.ny());
            for y in 0..state.ny() {
                let m = state.block(x, y).matrix();
                let n = m.nrows();
                for i in 0..n {
                    for j in 0..n {
                        if i != j && m[(i, j)].norm() > SUPPORT_TOL {
                            return Err(Error::InvalidParameter(format!(
                                "block ({x}, {y}) is not diagonal"
                            )));
                        }
                    }
                }
                row.push((0..n).map(|i| m[(i, i)].re.max(0.0)).collect());
            }
            p_be.push(row);
        }
        Ok(Self {
            p_xy: state.p_xy().to_vec(),
            p_be,
            dim_b: state.dim_b(),
            dim_e: state.dim_e(),
        })
    }

    fn p_x(&self) -> Vec<f64> {
        self.p_xy.iter().map(|r| r.iter().sum()).collect()
    }

    fn side(&self, x: usize, y: usize, bob: bool) -> Vec<f64> {
        let (db, de) = (self.dim_b, self.dim_e);
        let joint = &self.p_be[x][y];
        if bob {
            (0..db).map(|b| (0..de).map(|e| joint[b * de + e]).sum()).collect()
        } else {
            (0..de).map(|e| (0..db).map(|b| joint[b * de + e]).sum()).collect()
        }
    }

    /// `(P_XB, P_X ⊗ P_B)`.
    pub fn xb_pair(&self) -> Result<ClassicalPair> {
        let joint: Vec<Vec<f64>> = (0..self.p_xy.len())
            .map(|x| {
                let mut row = vec![0.0; self.dim_b];
                for (y, &w) in self.p_xy[x].iter().enumerate() {
                    for (b, v) in self.side(x, y, true).into_iter().enumerate() {
                        row[b] += w * v;
                    }
                }
                row
            })
            .collect();
        mutual_information_pair(&joint)
    }

    fn y_given_x(&self, bob: bool) -> Result<ClassicalCqq> {
        let px = self.p_x();
        let pairs = (0..self.p_xy.len())
            .map(|x| {
                let ny = self.p_xy[x].len();
                let joint: Vec<Vec<f64>> = (0..ny)
                    .map(|y| {
                        let w = if px[x] > 0.0 {
                            self.p_xy[x][y] / px[x]
                        } else {
                            1.0 / ny as f64
                        };
                        self.side(x, y, bob).into_iter().map(|v| w * v).collect()
                    })
                    .collect();
                mutual_information_pair(&joint)
            })
            .collect::<Result<Vec<_>>>()?;
        ClassicalCqq::new(px, pairs)
    }

    pub fn yb_given_x(&self) -> Result<ClassicalCqq> {
        self.y_given_x(true)
    }

    pub fn ye_given_x(&self) -> Result<ClassicalCqq> {
        self.y_given_x(false)
    }

    /// `(I(X;B), I(Y;B|X) − I(Y;E|X))`.
    pub fn asymptotic_point(&self) -> Result<RatePair> {
        let r = self.xb_pair()?.relative_entropy();
        let yb = self.yb_given_x()?.average_relative_entropy();
        let ye = self.ye_given_x()?.average_relative_entropy();
        Ok(asymptotic(r, yb - ye, yb, ye))
    }

    /// Per-use achievable rates of the one-shot bound applied to `n` uses.
    ///
    /// The eavesdropper term bounds the alternate smooth max-information at
    /// `√ε′ − δ′` by the standard one at `√ε′ − δ′ − γ` plus `log₂(3/γ²)`,
    /// and evaluates the latter at the best clipped candidate in its ball.
    pub fn nfold_achievable(&self, n: usize, s: &SlackParams) -> Result<RatePair> {
        s.validate()?;
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be positive".into()));
        }
        let eb = s.eps - s.delta;
        let public_info = self.xb_pair()?.iid_power(n).dh_eps(eb)?;
        let bob_info = self.yb_given_x()?.nfold(n).cond_dh_eps(eb)?;
        let eve = self
            .ye_given_x()?
            .nfold(n)
            .cond_dmax_smooth(s.eve_radius() - s.gamma)?;
        let eve_info = eve.lower + bridge_offset(s.gamma);
        let nf = n as f64;
        Ok(RatePair {
            public: (public_info - s.public_penalty()) / nf,
            private: (bob_info - eve_info - s.private_penalty()) / nf,
            provenance: Provenance::Achievable,
            slacks: Some(*s),
            blocklength: n,
            terms: RateTerms {
                public_info,
                bob_info,
                eve_info,
                eve_width: eve.width(),
                public_penalty: s.public_penalty(),
                private_penalty: s.private_penalty(),
            },
        })
    }
}

// ---------------------------------------------------------------------------
// Region sweeps

/// Binary `X`, `Y` encoder: `p(x,y)` in the order `00, 01, 10, 11` and real
/// qubit signals `cos(θ/2)|0⟩ + sin(θ/2)|1⟩` per pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub p_xy: [f64; 4],
    pub theta: [f64; 4],
}

impl EncoderParams {
    pub fn ensemble(&self, input: &str) -> Result<CqWiretapEnsemble> {
        let signal = |t: f64| DensityOperator::from_bloch(input, [t.sin(), 0.0, t.cos()]);
        let p = self.p_xy;
        let th = self.theta;
        CqWiretapEnsemble::indexed(
            vec![vec![p[0], p[1]], vec![p[2], p[3]]],
            vec![
                vec![signal(th[0])?, signal(th[1])?],
                vec![signal(th[2])?, signal(th[3])?],
            ],
        )
    }
}

/// Simplex and angle grid with `n` points per axis. `n = 1` is the single
/// encoder with uniform `p(x,y)` and all angles 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderGrid {
    pub n: usize,
}

fn binomial(n: u128, k: u128) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) / (i + 1))
}

impl EncoderGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("grid size must be positive".into()));
        }
        Ok(Self { n })
    }

    /// `C(n+2, 3) · n⁴`, saturating.
    pub fn len(&self) -> u128 {
        let n = self.n as u128;
        binomial(n + 2, 3).saturating_mul(n.saturating_pow(4))
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn distributions(&self) -> Vec<[f64; 4]> {
        if self.n == 1 {
            return vec![[0.25; 4]];
        }
        let steps = self.n - 1;
        let f = steps as f64;
        let mut out = Vec::new();
        for a in 0..=steps {
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    let d = steps - a - b - c;
                    out.push([a as f64 / f, b as f64 / f, c as f64 / f, d as f64 / f]);
                }
            }
        }
        out
    }

    fn angle(&self, k: usize) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            k as f64 * PI / (self.n - 1) as f64
        }
    }

    fn encoder(&self, dists: &[[f64; 4]], index: usize) -> EncoderParams {
        let n = self.n;
        let per = n.pow(4);
        let (d, mut rest) = (index / per, index % per);
        let mut theta = [0.0; 4];
        for t in theta.iter_mut().rev() {
            *t = self.angle(rest % n);
            rest /= n;
        }
        EncoderParams {
            p_xy: dists[d],
            theta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSample {
    /// Position in the grid enumeration.
    pub index: usize,
    pub encoder: EncoderParams,
    pub achievable: RatePair,
    pub converse: RatePair,
    pub asymptotic: RatePair,
    /// Pareto membership for the achievable, converse and asymptotic series.
    pub frontier: [bool; 3],
}

impl RegionSample {
    pub fn series(&self) -> [&RatePair; 3] {
        [&self.achievable, &self.converse, &self.asymptotic]
    }
}

/// Indices of the non-dominated points, in input order.
pub fn pareto_frontier(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len())
        .filter(|&i| !points[i].0.is_nan() && !points[i].1.is_nan())
        .collect();
    order.sort_by(|&a, &b| {
        points[b]
            .0
            .total_cmp(&points[a].0)
            .then(points[b].1.total_cmp(&points[a].1))
    });
    let mut keep = Vec::new();
    let mut best_above = f64::NEG_INFINITY;
    let mut k = 0;
    while k < order.len() {
        let r = points[order[k]].0;
        let mut end = k;
        while end < order.len() && points[order[end]].0 == r {
            end += 1;
        }
        let top = points[order[k]].1;
        if top > best_above {
            for &i in &order[k..end] {
                if points[i].1 == top {
                    keep.push(i);
                }
            }
        }
        best_above = best_above.max(top);
        k = end;
    }
    keep.sort_unstable();
    keep
}

#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub exec: Exec,
    pub max_samples: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            exec: Exec::default(),
            max_samples: DEFAULT_MAX_SAMPLES,
        }
    }
}

/// Every encoder of the grid with its three rate pairs, in grid order.
pub fn evaluate_grid(
    ch: &WiretapChannel,
    grid: EncoderGrid,
    s: &SlackParams,
    opts: SweepOptions,
) -> Result<Vec<RegionSample>> {
    s.validate()?;
    if ch.input().dim != 2 {
        return Err(Error::InvalidParameter(format!(
            "region sweeps need a qubit input, got dimension {}",
            ch.input().dim
        )));
    }
    let total = grid.len();
    if total > opts.max_samples as u128 {
        return Err(Error::BudgetExceeded(format!(
            "grid {} has {total} encoders, limit {}",
            grid.n, opts.max_samples
        )));
    }
    let dists = grid.distributions();
    let input = ch.input().name.clone();
    let results = opts.exec.map_range(total as usize, |i| {
        let encoder = grid.encoder(&dists, i);
        let state = encoder.ensemble(&input)?.through(ch)?;
        Ok(RegionSample {
            index: i,
            encoder,
            achievable: achievable_pair(&state, s)?,
            converse: converse_pair(&state, s)?,
            asymptotic: ds_point_joint(&state)?,
            frontier: [false; 3],
        })
    });
    let mut samples = results.into_iter().collect::<Result<Vec<_>>>()?;
    for series in 0..3 {
        let pts: Vec<(f64, f64)> = samples
            .iter()
            .map(|smp| {
                let p = smp.series()[series];
                (p.public, p.private)
            })
            .collect();
        for i in pareto_frontier(&pts) {
            samples[i].frontier[series] = true;
        }
    }
    Ok(samples)
}

/// Samples on the Pareto frontier of at least one series, in grid order.
pub fn sweep_region_with(
    ch: &WiretapChannel,
    grid: EncoderGrid,
    s: &SlackParams,
    opts: SweepOptions,
) -> Result<Vec<RegionSample>> {
    let mut samples = evaluate_grid(ch, grid, s, opts)?;
    samples.retain(|smp| smp.frontier.iter().any(|&f| f));
    Ok(samples)
}

pub fn sweep_region(
    ch: &WiretapChannel,
    grid: EncoderGrid,
    s: &SlackParams,
) -> Result<Vec<RegionSample>> {
    sweep_region_with(ch, grid, s, SweepOptions::default())
}
