//! Exact simulation of small public-private wiretap codes.
//!
//! A random code draws `x_m ~ p(x)` for every public message `m` and
//! `y_{m,ℓ,k} ~ p(y|x_m)` for every private message `ℓ` and key value `k`.
//! Each draw is one weighted branch; all errors are traces averaged over the
//! branches, so nothing is sampled.

use serde::{Deserialize, Serialize};

use crate::channels::{CqWiretapEnsemble, JointWiretapState};
use crate::divergences::{i_max, i_max_alt_smooth_with_candidate, optimal_test, OptimalTest};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qmat::{
    dim_cap, eigh, identity, inv_sqrt_on_support, kron, psd_sqrt, purified_distance, trace_norm,
    trace_product, CMat, DensityOperator, HermitianOperator, MeasurementOperator, SystemLabel,
    WiretapChannel, SUPPORT_TOL,
};
use crate::rates::{achievable_pair, SlackParams};

/// Default limit on the number of enumerated codebooks.
pub const DEFAULT_MAX_BRANCHES: usize = 1 << 16;

/// Numbers of public messages, private messages and key values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeSizes {
    pub m: usize,
    pub l: usize,
    pub k: usize,
}

impl CodeSizes {
    pub fn new(m: usize, l: usize, k: usize) -> Result<Self> {
        if m == 0 || l == 0 || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "code sizes must be positive, got ({m}, {l}, {k})"
            )));
        }
        Ok(Self { m, l, k })
    }

    /// Number of signal slots `M·L·K`.
    pub fn slots(&self) -> usize {
        self.m * self.l * self.k
    }

    fn slot(&self, m: usize, l: usize, k: usize) -> usize {
        (m * self.l + l) * self.k + k
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub max_branches: usize,
    pub exec: Exec,
    /// Hayashi–Nagaoka constant; `δ/(2ε − δ)` when unset.
    pub hn_c: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            max_branches: DEFAULT_MAX_BRANCHES,
            exec: Exec::default(),
            hn_c: None,
        }
    }
}

/// `δ/(2ε − δ)`.
pub fn default_hn_constant(s: &SlackParams) -> f64 {
    s.delta / (2.0 * s.eps - s.delta)
}

/// One deterministic codebook.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    /// `x_m` per public message.
    pub x: Vec<usize>,
    /// `y_{m,ℓ,k}` indexed by `(m·L + ℓ)·K + k`.
    pub y: Vec<usize>,
}

/// The classical registers of the shared state as weighted codebooks, with
/// one input signal per slot.
#[derive(Debug, Clone)]
pub struct SharedState {
    ensemble: CqWiretapEnsemble,
    sizes: CodeSizes,
    p_x: Vec<f64>,
    p_y_given_x: Vec<Vec<f64>>,
    branches: usize,
}

fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    (0..exp).try_fold(1usize, |acc, _| acc.checked_mul(base))
}

/// Enumerate every codebook of the random code, refusing more than
/// `max_branches`.
pub fn build_shared_state(
    ens: &CqWiretapEnsemble,
    sizes: CodeSizes,
    max_branches: usize,
) -> Result<SharedState> {
    let (nx, ny) = (ens.nx(), ens.ny());
    let branches = checked_pow(nx, sizes.m)
        .and_then(|a| checked_pow(ny, sizes.slots()).and_then(|b| a.checked_mul(b)))
        .filter(|&n| n <= max_branches)
        .ok_or_else(|| {
            Error::BudgetExceeded(format!(
                "{nx}^{} · {ny}^{} codebooks exceed the limit {max_branches}",
                sizes.m,
                sizes.slots()
            ))
        })?;
    let p_x: Vec<f64> = ens.p_xy.iter().map(|r| r.iter().sum()).collect();
    let p_y_given_x = ens
        .p_xy
        .iter()
        .zip(&p_x)
        .map(|(row, &px)| {
            if px > 0.0 {
                row.iter().map(|v| v / px).collect()
            } else {
                vec![1.0 / ny as f64; ny]
            }
        })
        .collect();
    Ok(SharedState {
        ensemble: ens.clone(),
        sizes,
        p_x,
        p_y_given_x,
        branches,
    })
}

impl SharedState {
    pub fn sizes(&self) -> CodeSizes {
        self.sizes
    }

    pub fn branch_count(&self) -> usize {
        self.branches
    }

    /// Weight and codebook of branch `index`. The public symbols are the
    /// most significant digits.
    pub fn branch(&self, index: usize) -> (f64, Codebook) {
        let (nx, ny) = (self.ensemble.nx(), self.ensemble.ny());
        let slots = self.sizes.slots();
        let mut rest = index;
        let mut y = vec![0; slots];
        for v in y.iter_mut().rev() {
            *v = rest % ny;
            rest /= ny;
        }
        let mut x = vec![0; self.sizes.m];
        for v in x.iter_mut().rev() {
            *v = rest % nx;
            rest /= nx;
        }
        let mut w: f64 = x.iter().map(|&xm| self.p_x[xm]).product();
        let per_m = self.sizes.l * self.sizes.k;
        for (j, &yj) in y.iter().enumerate() {
            w *= self.p_y_given_x[x[j / per_m]][yj];
        }
        (w, Codebook { x, y })
    }

    /// Input signal of slot `(m, ℓ, k)` in a codebook.
    pub fn slot_signal(&self, book: &Codebook, m: usize, l: usize, k: usize) -> &DensityOperator {
        let y = book.y[self.sizes.slot(m, l, k)];
        &self.ensemble.signals[book.x[m]][y]
    }

    /// Labels of the full space: per public message `X_m, X′_m`, then per
    /// slot `A, Y, Y′`.
    pub fn register_systems(&self) -> Vec<SystemLabel> {
        let (nx, ny) = (self.ensemble.nx(), self.ensemble.ny());
        let da = self.ensemble.signals[0][0].dim();
        let mut out = Vec::new();
        for m in 0..self.sizes.m {
            out.push(SystemLabel::new(format!("X{m}"), nx));
            out.push(SystemLabel::new(format!("X'{m}"), nx));
            for l in 0..self.sizes.l {
                for k in 0..self.sizes.k {
                    let tag = format!("{m}.{l}.{k}");
                    out.push(SystemLabel::new(format!("A{tag}"), da));
                    out.push(SystemLabel::new(format!("Y{tag}"), ny));
                    out.push(SystemLabel::new(format!("Y'{tag}"), ny));
                }
            }
        }
        out
    }

    pub fn total_dim(&self) -> u128 {
        self.register_systems()
            .iter()
            .fold(1u128, |acc, s| acc.saturating_mul(s.dim as u128))
    }

    /// Distribution of `X_m` summed over codebooks.
    pub fn x_marginal(&self, m: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.ensemble.nx()];
        for i in 0..self.branches {
            let (w, book) = self.branch(i);
            out[book.x[m]] += w;
        }
        out
    }

    /// Joint distribution of `(X_m, Y_{m,ℓ,k})` summed over codebooks.
    pub fn xy_marginal(&self, m: usize, l: usize, k: usize) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ensemble.ny()]; self.ensemble.nx()];
        let j = self.sizes.slot(m, l, k);
        for i in 0..self.branches {
            let (w, book) = self.branch(i);
            out[book.x[m]][book.y[j]] += w;
        }
        out
    }

    /// Reduced input state of slot `(m, ℓ, k)`.
    pub fn slot_marginal(&self, m: usize, l: usize, k: usize) -> DensityOperator {
        let d = self.ensemble.signals[0][0].dim();
        let mut acc = CMat::zeros(d, d);
        for i in 0..self.branches {
            let (w, book) = self.branch(i);
            acc += self.slot_signal(&book, m, l, k).matrix().scale(w);
        }
        DensityOperator::trusted_parts(self.ensemble.signals[0][0].systems().to_vec(), acc)
    }

    /// The shared state as one matrix, within the dimension cap.
    pub fn to_dense(&self) -> Result<DensityOperator> {
        let systems = self.register_systems();
        let total = self.total_dim();
        if total > dim_cap() as u128 {
            return Err(Error::BudgetExceeded(format!(
                "shared state of dimension {total} exceeds the cap {}",
                dim_cap()
            )));
        }
        let (nx, ny) = (self.ensemble.nx(), self.ensemble.ny());
        let basis = |n: usize, i: usize| {
            let mut m = CMat::zeros(n, n);
            m[(i, i)] = crate::qmat::c64(1.0, 0.0);
            m
        };
        let d = total as usize;
        let mut acc = CMat::zeros(d, d);
        for i in 0..self.branches {
            let (w, book) = self.branch(i);
            if w == 0.0 {
                continue;
            }
            let mut block = CMat::identity(1, 1);
            for m in 0..self.sizes.m {
                let xm = basis(nx, book.x[m]);
                block = kron(&kron(&block, &xm), &xm);
                for l in 0..self.sizes.l {
                    for k in 0..self.sizes.k {
                        let yb = basis(ny, book.y[self.sizes.slot(m, l, k)]);
                        let a = self.slot_signal(&book, m, l, k).matrix();
                        block = kron(&kron(&kron(&block, a), &yb), &yb);
                    }
                }
            }
            acc += block.scale(w);
        }
        DensityOperator::from_matrix(systems, acc)
    }
}

// ---------------------------------------------------------------------------
// Square-root measurements

/// `S^{-1/2} Γ_m S^{-1/2}` with `S = Σ Γ_m`; `None` when `S` vanishes.
fn srm_matrices(gammas: &[CMat]) -> Option<Vec<CMat>> {
    let d = gammas.first()?.nrows();
    let mut s = CMat::zeros(d, d);
    for g in gammas {
        s += g;
    }
    if eigh(&s).max() <= SUPPORT_TOL {
        return None;
    }
    let r = inv_sqrt_on_support(&s);
    Some(gammas.iter().map(|g| crate::qmat::hermitize(&(&r * g * &r))).collect())
}

/// Pretty-good measurement of the given positive operators, with the
/// completion `1 − ΣΛ_m` appended as the last element.
pub fn square_root_measurement(positives: &[HermitianOperator]) -> Result<Vec<MeasurementOperator>> {
    let first = positives
        .first()
        .ok_or_else(|| Error::InvalidParameter("no operators given".into()))?;
    for p in positives {
        first.same_space(p)?;
        let min = p.eigh().min();
        if min < -SUPPORT_TOL {
            return Err(Error::NotMeasurement(format!(
                "operator has eigenvalue {min:.3e}"
            )));
        }
    }
    let mats: Vec<CMat> = positives.iter().map(|p| p.matrix().clone()).collect();
    let elems = srm_matrices(&mats)
        .ok_or_else(|| Error::InvalidParameter("all operators vanish".into()))?;
    let d = first.dim();
    let mut completion = identity(d);
    for e in &elems {
        completion -= e;
    }
    let systems = first.systems().to_vec();
    let mut out: Vec<MeasurementOperator> = elems
        .into_iter()
        .map(|e| MeasurementOperator::trusted(HermitianOperator::from_parts(systems.clone(), e)))
        .collect();
    out.push(MeasurementOperator::trusted(HermitianOperator::from_parts(
        systems, completion,
    )));
    Ok(out)
}

// ---------------------------------------------------------------------------
// Decoders shared by every codebook

/// Block `(i, i)` of a matrix whose first factor has dimension `n`.
fn pinch(m: &CMat, n: usize, i: usize) -> CMat {
    let d = m.nrows() / n;
    m.view((i * d, i * d), (d, d)).into_owned()
}

/// `Tr_B[(O ⊗ 1_E) ρ_BE]` with rows of `ρ` indexed `b·d_E + e`.
fn apply_on_b(op: &CMat, rho: &CMat, db: usize, de: usize) -> CMat {
    let mut out = CMat::zeros(de, de);
    for e in 0..de {
        for f in 0..de {
            let mut acc = crate::qmat::c64(0.0, 0.0);
            for b in 0..db {
                for b2 in 0..db {
                    acc += op[(b, b2)] * rho[(b2 * de + e, b * de + f)];
                }
            }
            out[(e, f)] = acc;
        }
    }
    out
}

struct Decoders {
    db: usize,
    de: usize,
    /// `T^x` on `B`.
    public: Vec<CMat>,
    public_test: OptimalTest,
    /// `G^{x,y}` on `B`.
    private: Vec<Vec<CMat>>,
    private_tests: Vec<OptimalTest>,
    rho_be: Vec<Vec<CMat>>,
    rho_b: Vec<Vec<CMat>>,
    rho_e: Vec<Vec<CMat>>,
    sigma_e: Vec<CMat>,
    sigma_e_smooth: Vec<CMat>,
    p_x: Vec<f64>,
}

impl Decoders {
    fn new(state: &JointWiretapState, s: &SlackParams, with_private: bool) -> Result<Self> {
        let (nx, ny) = (state.nx(), state.ny());
        let eb = s.eps - s.delta;
        let xb = state.xb_state()?;
        let public_test = optimal_test(&xb, &crate::divergences::marginal_product(&xb, &["X"])?, eb)?;
        let public = (0..nx).map(|x| pinch(public_test.test.matrix(), nx, x)).collect();
        let mut private = Vec::new();
        let mut private_tests = Vec::new();
        let mut sigma_e_smooth = Vec::new();
        if with_private {
            let yb = state.yb_given_x()?;
            let ye = state.ye_given_x()?;
            for x in 0..nx {
                let blk = &yb.blocks()[x];
                let t = optimal_test(blk, &crate::divergences::marginal_product(blk, &["Y"])?, eb)?;
                private.push((0..ny).map(|y| pinch(t.test.matrix(), ny, y)).collect());
                private_tests.push(t);
                let (_, cand) = i_max_alt_smooth_with_candidate(&ye.blocks()[x], &["Y"], s.eve_radius())?;
                sigma_e_smooth.push(cand.reduce_to(&["E"])?.into_hermitian().into_matrix());
            }
        }
        let grid = |f: &dyn Fn(usize, usize) -> CMat| -> Vec<Vec<CMat>> {
            (0..nx).map(|x| (0..ny).map(|y| f(x, y)).collect()).collect()
        };
        Ok(Self {
            db: state.dim_b(),
            de: state.dim_e(),
            public,
            public_test,
            private,
            private_tests,
            rho_be: grid(&|x, y| state.block(x, y).matrix().clone()),
            rho_b: grid(&|x, y| state.rho_b(x, y).matrix().clone()),
            rho_e: grid(&|x, y| state.rho_e(x, y).matrix().clone()),
            sigma_e: (0..nx)
                .map(|x| state.rho_e_given_x(x).matrix().clone())
                .collect(),
            sigma_e_smooth,
            p_x: state.p_x(),
        })
    }

    /// Bob's public POVM for the codebook's public symbols.
    fn public_povm(&self, x: &[usize]) -> Vec<CMat> {
        if x.len() == 1 {
            return vec![identity(self.db)];
        }
        let gammas: Vec<CMat> = x.iter().map(|&xm| self.public[xm].clone()).collect();
        srm_matrices(&gammas).unwrap_or_else(|| vec![CMat::zeros(self.db, self.db); x.len()])
    }

    /// Bob's private POVM `Ω_ℓ = Σ_k Ω_{ℓ,k}` for public message `m`.
    fn private_povm(&self, sizes: CodeSizes, book: &Codebook, m: usize) -> Vec<CMat> {
        if sizes.l == 1 {
            return vec![identity(self.db)];
        }
        let xm = book.x[m];
        let gammas: Vec<CMat> = (0..sizes.l * sizes.k)
            .map(|j| self.private[xm][book.y[m * sizes.l * sizes.k + j]].clone())
            .collect();
        let elems = srm_matrices(&gammas)
            .unwrap_or_else(|| vec![CMat::zeros(self.db, self.db); gammas.len()]);
        elems
            .chunks(sizes.k)
            .map(|c| c.iter().fold(CMat::zeros(self.db, self.db), |acc, e| acc + e))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Public decoding

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    Exact,
    Reduced,
}

fn public_bounds(d: &Decoders, sizes: CodeSizes, s: &SlackParams, c: f64) -> (f64, f64) {
    let a = (1.0 + c, 2.0 + c + 1.0 / c);
    let t = &d.public_test;
    let reduced = a.0 * t.type_i + a.1 * (sizes.m as f64 - 1.0) * t.type_ii;
    let theorem = a.0 * (s.eps - s.delta) + a.1 * sizes.m as f64 * t.type_ii;
    (reduced, theorem)
}

/// Exact public error per message, averaging only over the public symbols.
fn public_exact(d: &Decoders, joint: &JointWiretapState, sizes: CodeSizes, opts: &SimOptions) -> Result<Vec<f64>> {
    let nx = joint.nx();
    let count = checked_pow(nx, sizes.m)
        .filter(|&n| n <= opts.max_branches)
        .ok_or_else(|| Error::BudgetExceeded(format!("{nx}^{} public codebooks", sizes.m)))?;
    let rho_b: Vec<CMat> = (0..nx)
        .map(|x| joint.rho_b_given_x(x).matrix().clone())
        .collect();
    let parts = opts.exec.map_range(count, |i| {
        let mut rest = i;
        let mut x = vec![0; sizes.m];
        for v in x.iter_mut().rev() {
            *v = rest % nx;
            rest /= nx;
        }
        let w: f64 = x.iter().map(|&xm| d.p_x[xm]).product();
        let povm = d.public_povm(&x);
        let errs: Vec<f64> = (0..sizes.m)
            .map(|m| w * (1.0 - trace_product(&povm[m], &rho_b[x[m]])))
            .collect();
        errs
    });
    let mut per = vec![0.0; sizes.m];
    for e in parts {
        for (p, v) in per.iter_mut().zip(e) {
            *p += v;
        }
    }
    Ok(per)
}

/// Average public decoding error of the random code: exact under the
/// square-root measurement, or the Hayashi–Nagaoka bound at the
/// Neyman–Pearson test.
pub fn public_decode_error(
    ens: &CqWiretapEnsemble,
    ch: &WiretapChannel,
    sizes: CodeSizes,
    s: &SlackParams,
    mode: DecodeMode,
) -> Result<f64> {
    public_decode_error_with(ens, ch, sizes, s, mode, &SimOptions::default())
}

pub fn public_decode_error_with(
    ens: &CqWiretapEnsemble,
    ch: &WiretapChannel,
    sizes: CodeSizes,
    s: &SlackParams,
    mode: DecodeMode,
    opts: &SimOptions,
) -> Result<f64> {
    s.validate()?;
    let joint = ens.through(ch)?;
    let d = Decoders::new(&joint, s, false)?;
    match mode {
        DecodeMode::Exact => {
            let per = public_exact(&d, &joint, sizes, opts)?;
            Ok(per.iter().sum::<f64>() / sizes.m as f64)
        }
        DecodeMode::Reduced => {
            let c = opts.hn_c.unwrap_or_else(|| default_hn_constant(s));
            Ok(public_bounds(&d, sizes, s, c).0)
        }
    }
}

// ---------------------------------------------------------------------------
// Privacy

/// Results for one `(m, ℓ)` pair, averaged over codebooks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MessageRow {
    pub m: usize,
    pub l: usize,
    /// Public error of message `m` with private message `ℓ`.
    pub public_error: f64,
    /// Bob's private error when `m` is known.
    pub private_error: f64,
    /// `½‖σ_E^{m,ℓ} − σ_E^x‖₁` against the exact marginal.
    pub secrecy: f64,
    /// Same distance against the smoothed marginal.
    pub secrecy_smoothed: f64,
    /// Merged decoding and secrecy criterion under successive decoding.
    pub privacy_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolBounds {
    pub hn_c: f64,
    /// `(1+c)α + (2+c+1/c)(M−1)β` at the optimal test.
    pub public_reduced: f64,
    /// `(1+c)(ε−δ) + (2+c+1/c)·M·2^{−I_H}`.
    pub public_theorem: f64,
    /// `Σ_x p(x)[(1+c)α_x + (2+c+1/c)(LK−1)β_x]`.
    pub private_hn: f64,
    /// `2(ε + √ε) + √ε′`.
    pub privacy_nominal: f64,
    /// Exact private error plus secrecy distance plus `2√P_e`.
    pub privacy_chain: f64,
    /// Whether `M`, `L`, `K` satisfy the size conditions under which the
    /// nominal privacy bound is claimed.
    pub size_conditions_hold: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolFlags {
    pub public_reduced: bool,
    pub public_theorem: bool,
    pub private_hn: bool,
    pub privacy_chain: bool,
    /// `None` unless the size conditions hold.
    pub privacy_nominal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derandomized {
    pub index: usize,
    pub codebook: Codebook,
    pub public_error: f64,
    pub privacy_error: f64,
    /// Ensemble average of `public + privacy` over codebooks.
    pub average_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolReport {
    pub sizes: CodeSizes,
    pub slacks: SlackParams,
    pub branches: usize,
    pub public_error: f64,
    pub public_per_message: Vec<f64>,
    /// Spread of the per-message public errors.
    pub public_symmetry_defect: f64,
    pub private_error: f64,
    pub secrecy: f64,
    pub secrecy_smoothed: f64,
    pub privacy_error: f64,
    pub rows: Vec<MessageRow>,
    pub bounds: ProtocolBounds,
    pub flags: ProtocolFlags,
    pub derandomized: Derandomized,
}

pub const BOUND_SLACK: f64 = 1e-9;

struct BranchResult {
    weight: f64,
    /// Per `(m, ℓ)`: public, private, secrecy, smoothed secrecy, merged.
    rows: Vec<[f64; 5]>,
}

fn evaluate_branch(d: &Decoders, shared: &SharedState, index: usize) -> BranchResult {
    let sizes = shared.sizes;
    let (weight, book) = shared.branch(index);
    let (db, de) = (d.db, d.de);
    let lambda = d.public_povm(&book.x);
    let roots: Vec<CMat> = lambda.iter().map(psd_sqrt).collect();
    let omegas: Vec<Vec<CMat>> = (0..sizes.m).map(|m| d.private_povm(sizes, &book, m)).collect();
    let kf = sizes.k as f64;
    let mut rows = Vec::with_capacity(sizes.m * sizes.l);
    for m in 0..sizes.m {
        let x = book.x[m];
        for l in 0..sizes.l {
            let mut public = 0.0;
            let mut private = 0.0;
            let mut eve = CMat::zeros(de, de);
            let mut xi = CMat::zeros(de, de);
            for k in 0..sizes.k {
                let y = book.y[sizes.slot(m, l, k)];
                let rb = &d.rho_b[x][y];
                public += 1.0 - trace_product(&lambda[m], rb);
                private += 1.0 - trace_product(&omegas[m][l], rb);
                eve += &d.rho_e[x][y];
                for mh in 0..sizes.m {
                    let op = &roots[mh] * &omegas[mh][l] * &roots[mh];
                    xi += apply_on_b(&op, &d.rho_be[x][y], db, de);
                }
            }
            eve.unscale_mut(kf);
            xi.unscale_mut(kf);
            let secrecy = 0.5 * trace_norm(&(&eve - &d.sigma_e[x]));
            let smoothed = d
                .sigma_e_smooth
                .get(x)
                .map(|s| 0.5 * trace_norm(&(&eve - s)))
                .unwrap_or(f64::NAN);
            let merged = 0.5 * ((1.0 - xi.trace().re) + trace_norm(&(&xi - &d.sigma_e[x])));
            rows.push([(public / kf).max(0.0), (private / kf).max(0.0), secrecy, smoothed, merged]);
        }
    }
    BranchResult { weight, rows }
}

/// Logarithmic size conditions of the one-shot code: `log M` within the
/// achievable public rate, `log K` covering Eve's term plus `2·log(1/δ′)`,
/// and `log LK` within Bob's term minus `log(4ε/δ²)`.
pub fn size_conditions_hold(joint: &JointWiretapState, sizes: CodeSizes, s: &SlackParams) -> Result<bool> {
    let ach = achievable_pair(joint, s)?;
    let lm = (sizes.m as f64).log2();
    let lk = (sizes.k as f64).log2();
    let llk = ((sizes.l * sizes.k) as f64).log2();
    Ok(lm <= ach.public
        && lk >= ach.terms.eve_info + 2.0 * (1.0 / s.delta_prime).log2()
        && llk <= ach.terms.bob_info - s.public_penalty())
}

pub fn privacy_error(
    ens: &CqWiretapEnsemble,
    ch: &WiretapChannel,
    sizes: CodeSizes,
    s: &SlackParams,
) -> Result<ProtocolReport> {
    privacy_error_with(ens, ch, sizes, s, &SimOptions::default())
}

pub fn privacy_error_with(
    ens: &CqWiretapEnsemble,
    ch: &WiretapChannel,
    sizes: CodeSizes,
    s: &SlackParams,
    opts: &SimOptions,
) -> Result<ProtocolReport> {
    s.validate()?;
    let c = opts.hn_c.unwrap_or_else(|| default_hn_constant(s));
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "Hayashi–Nagaoka constant must be positive, got {c}"
        )));
    }
    let shared = build_shared_state(ens, sizes, opts.max_branches)?;
    let joint = ens.through(ch)?;
    let d = Decoders::new(&joint, s, true)?;
    let results = opts
        .exec
        .map_range(shared.branch_count(), |i| evaluate_branch(&d, &shared, i));

    let n_rows = sizes.m * sizes.l;
    let mut acc = vec![[0.0f64; 5]; n_rows];
    let mut scores = Vec::with_capacity(results.len());
    let mut weights = Vec::with_capacity(results.len());
    let mut per_book = Vec::with_capacity(results.len());
    for r in &results {
        let mut book_pub = 0.0;
        let mut book_priv = 0.0;
        for (a, row) in acc.iter_mut().zip(&r.rows) {
            for j in 0..5 {
                a[j] += r.weight * row[j];
            }
            book_pub += row[0];
            book_priv += row[4];
        }
        book_pub /= n_rows as f64;
        book_priv /= n_rows as f64;
        weights.push(r.weight);
        scores.push(book_pub + book_priv);
        per_book.push((book_pub, book_priv));
    }
    let rows: Vec<MessageRow> = acc
        .iter()
        .enumerate()
        .map(|(i, a)| MessageRow {
            m: i / sizes.l,
            l: i % sizes.l,
            public_error: a[0],
            private_error: a[1],
            secrecy: a[2],
            secrecy_smoothed: a[3],
            privacy_error: a[4],
        })
        .collect();
    let mean = |j: usize| acc.iter().map(|a| a[j]).sum::<f64>() / n_rows as f64;
    let public_per_message: Vec<f64> = (0..sizes.m)
        .map(|m| (0..sizes.l).map(|l| acc[m * sizes.l + l][0]).sum::<f64>() / sizes.l as f64)
        .collect();
    let lo = public_per_message.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = public_per_message.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let public_error = mean(0);
    let private_error = mean(1);
    let secrecy = mean(2);
    let privacy = mean(4);

    let (public_reduced, public_theorem) = public_bounds(&d, sizes, s, c);
    let a1 = 2.0 + c + 1.0 / c;
    let lk = (sizes.l * sizes.k) as f64;
    let private_hn: f64 = d
        .p_x
        .iter()
        .zip(&d.private_tests)
        .map(|(p, t)| p * ((1.0 + c) * t.type_i + a1 * (lk - 1.0) * t.type_ii))
        .sum();
    let conditions = size_conditions_hold(&joint, sizes, s)?;
    let bounds = ProtocolBounds {
        hn_c: c,
        public_reduced,
        public_theorem,
        private_hn,
        privacy_nominal: 2.0 * (s.eps + s.eps.sqrt()) + s.eps_prime.sqrt(),
        privacy_chain: private_error + secrecy + 2.0 * public_error.max(0.0).sqrt(),
        size_conditions_hold: conditions,
    };
    let flags = ProtocolFlags {
        public_reduced: public_error <= public_reduced + BOUND_SLACK,
        public_theorem: public_error <= public_theorem + BOUND_SLACK,
        private_hn: sizes.l == 1 || private_error <= private_hn + BOUND_SLACK,
        privacy_chain: privacy <= bounds.privacy_chain + BOUND_SLACK,
        privacy_nominal: conditions.then_some(privacy <= bounds.privacy_nominal + 1e-6),
    };
    let pick = derandomize_search(&weights, &scores)?;
    let (_, codebook) = shared.branch(pick.index);
    let derandomized = Derandomized {
        index: pick.index,
        codebook,
        public_error: per_book[pick.index].0,
        privacy_error: per_book[pick.index].1,
        average_score: pick.average,
    };
    Ok(ProtocolReport {
        sizes,
        slacks: *s,
        branches: shared.branch_count(),
        public_error,
        public_symmetry_defect: hi - lo,
        public_per_message,
        private_error,
        secrecy,
        secrecy_smoothed: mean(3),
        privacy_error: privacy,
        rows,
        bounds,
        flags,
        derandomized,
    })
}

// ---------------------------------------------------------------------------
// Lemma checks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexSplit {
    /// `P(τ, ρ_A^{⊗K} ⊗ ρ_B)`.
    pub distance: f64,
    /// `min(1, √(2^{I_max(B;A)}/K))`.
    pub bound: f64,
    pub i_max: f64,
}

/// Convex-split mixture over `k` copies of the party named `a`.
pub fn convex_split_check(rho_ab: &DensityOperator, a: &str, k: usize) -> Result<ConvexSplit> {
    if k == 0 {
        return Err(Error::InvalidParameter("K must be positive".into()));
    }
    if rho_ab.systems().len() != 2 {
        return Err(Error::InvalidParameter(
            "convex split needs a bipartite state".into(),
        ));
    }
    let b = rho_ab
        .names()
        .into_iter()
        .find(|n| *n != a)
        .ok_or_else(|| Error::UnknownLabel(a.to_string()))?
        .to_string();
    let ordered = rho_ab.permute(&[a, b.as_str()])?;
    let ra = ordered.reduce_to(&[a])?;
    let rb = ordered.reduce_to(&[b.as_str()])?;
    let (da, dbb) = (ra.dim(), rb.dim());
    let total = (da as u128).saturating_pow(k as u32).saturating_mul(dbb as u128);
    if total > dim_cap() as u128 {
        return Err(Error::BudgetExceeded(format!(
            "convex split of dimension {total} exceeds the cap {}",
            dim_cap()
        )));
    }
    let mut systems: Vec<SystemLabel> = (0..k).map(|i| SystemLabel::new(format!("A{i}"), da)).collect();
    systems.push(SystemLabel::new("B", dbb));
    let names: Vec<String> = systems.iter().map(|s| s.name.clone()).collect();
    let d = total as usize;
    let mut tau = CMat::zeros(d, d);
    for slot in 0..k {
        let mut m = CMat::identity(1, 1);
        let mut order: Vec<&str> = Vec::with_capacity(k + 1);
        for i in 0..k {
            if i == slot {
                m = kron(&m, ordered.matrix());
                order.push(&names[i]);
                order.push("B");
            } else {
                m = kron(&m, ra.matrix());
                order.push(&names[i]);
            }
        }
        let mut labels: Vec<SystemLabel> = Vec::with_capacity(k + 1);
        for n in &order {
            let dim = if *n == "B" { dbb } else { da };
            labels.push(SystemLabel::new(*n, dim));
        }
        let term = HermitianOperator::from_parts(labels, m).aligned_to(&systems)?;
        tau += term.matrix();
    }
    tau.unscale_mut(k as f64);
    let tau = DensityOperator::trusted_parts(systems.clone(), tau);
    let mut product = CMat::identity(1, 1);
    for _ in 0..k {
        product = kron(&product, ra.matrix());
    }
    let product = DensityOperator::trusted_parts(systems, kron(&product, rb.matrix()));
    let distance = purified_distance(&tau, &product)?;
    let info = i_max(&ordered, &[a])?;
    let bound = if info.is_finite() {
        (info.exp2() / k as f64).sqrt().min(1.0)
    } else {
        1.0
    };
    Ok(ConvexSplit {
        distance,
        bound,
        i_max: info,
    })
}

/// Smallest eigenvalue of
/// `(1+c)(1−S) + (2+c+1/c)T − (1 − (S+T)^{-1/2} S (S+T)^{-1/2})`.
pub fn hayashi_nagaoka_verify(s: &MeasurementOperator, t: &HermitianOperator, c: f64) -> Result<f64> {
    s.same_space(t)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let min = t.eigh().min();
    if min < -SUPPORT_TOL {
        return Err(Error::InvalidParameter(format!(
            "T has eigenvalue {min:.3e}"
        )));
    }
    let d = s.dim();
    let (sm, tm) = (s.matrix(), t.matrix());
    let r = inv_sqrt_on_support(&(sm + tm));
    let one = identity(d);
    let lhs = &one - &r * sm * &r;
    let rhs = (&one - sm).scale(1.0 + c) + tm.scale(2.0 + c + 1.0 / c);
    Ok(eigh(&crate::qmat::hermitize(&(rhs - lhs))).min())
}

/// `(‖ρ − √Λρ√Λ‖₁, 2√(1 − Tr Λρ))`.
pub fn gentle_measurement_verify(rho: &DensityOperator, lambda: &MeasurementOperator) -> Result<(f64, f64)> {
    rho.same_space(lambda)?;
    let root = psd_sqrt(lambda.matrix());
    let post = &root * rho.matrix() * &root;
    let lhs = trace_norm(&(rho.matrix() - post));
    let p = trace_product(lambda.matrix(), rho.matrix());
    Ok((lhs, 2.0 * (1.0 - p).max(0.0).sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Choice {
    pub index: usize,
    pub error: f64,
    /// Weighted average of the table.
    pub average: f64,
}

/// Codebook with the smallest error, ties to the smallest index. Its error
/// never exceeds the weighted average.
pub fn derandomize_search(weights: &[f64], errors: &[f64]) -> Result<Choice> {
    if errors.is_empty() || weights.len() != errors.len() {
        return Err(Error::InvalidParameter(
            "need one weight per codebook and at least one codebook".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("weights must have positive sum".into()));
    }
    let average = weights.iter().zip(errors).map(|(w, e)| w * e).sum::<f64>() / total;
    let mut best = None::<usize>;
    for (i, (&w, &e)) in weights.iter().zip(errors).enumerate() {
        if w <= 0.0 {
            continue;
        }
        if best.is_none_or(|b| e < errors[b]) {
            best = Some(i);
        }
    }
    let index = best.expect("positive total weight");
    Ok(Choice {
        index,
        error: errors[index],
        average,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{diag, max_abs_diff};

    #[test]
    fn srm_of_orthogonal_projectors_is_unchanged() {
        let p0 = HermitianOperator::single("B", diag(&[1.0, 0.0, 0.0])).unwrap();
        let p1 = HermitianOperator::single("B", diag(&[0.0, 1.0, 0.0])).unwrap();
        let povm = square_root_measurement(&[p0.clone(), p1.clone()]).unwrap();
        assert_eq!(povm.len(), 3);
        assert!(max_abs_diff(povm[0].matrix(), p0.matrix()) < 1e-12);
        assert!(max_abs_diff(povm[1].matrix(), p1.matrix()) < 1e-12);
        assert!(max_abs_diff(povm[2].matrix(), &diag(&[0.0, 0.0, 1.0])) < 1e-12);
    }

    #[test]
    fn srm_rejects_all_zero_input() {
        let z = HermitianOperator::single("B", CMat::zeros(2, 2)).unwrap();
        assert!(square_root_measurement(&[z]).is_err());
    }

    #[test]
    fn derandomize_examples() {
        let one = derandomize_search(&[1.0], &[0.4]).unwrap();
        assert_eq!((one.index, one.error), (0, 0.4));
        let two = derandomize_search(&[0.5, 0.5], &[0.1, 0.3]).unwrap();
        assert_eq!(two.index, 0);
        assert!((two.average - 0.2).abs() < 1e-15);
        assert_eq!(derandomize_search(&[0.5, 0.5], &[0.2, 0.2]).unwrap().index, 0);
        assert!(derandomize_search(&[], &[]).is_err());
    }

    #[test]
    fn hn_trivial_case() {
        let s = MeasurementOperator::new(HermitianOperator::single("A", identity(2)).unwrap()).unwrap();
        let t = HermitianOperator::single("A", CMat::zeros(2, 2)).unwrap();
        assert!(hayashi_nagaoka_verify(&s, &t, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn gentle_identity() {
        let rho = DensityOperator::from_bloch("A", [0.1, 0.2, 0.3]).unwrap();
        let one = MeasurementOperator::new(HermitianOperator::single("A", identity(2)).unwrap()).unwrap();
        let (l, r) = gentle_measurement_verify(&rho, &one).unwrap();
        assert!(l < 1e-12 && r < 1e-6);
    }
}
