//! Entropic quantities: relative entropies, hypothesis-testing and
//! max-relative entropies, their smoothed variants, mutual-information
//! forms, and conditional versions over classical-quantum-quantum states.
//!
//! All logarithms are base 2.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qmat::{
    eigh, fidelity_matrices, identity, inv_sqrt_on_support, psd_sqrt, trace_product, CMat,
    DensityOperator, HermitianOperator, MeasurementOperator, SUPPORT_TOL,
};

/// Eigenvalues of `ρ − tσ` within this distance of zero form the boundary
/// eigenspace of a Neyman–Pearson test.
pub const BOUNDARY_TOL: f64 = 1e-9;
/// Bisection stops once the type-I error is this close to its target.
pub const TYPE_I_WINDOW: f64 = 1e-10;
/// Bisection stops once the threshold interval is this narrow.
pub const THRESHOLD_RESOLUTION: f64 = 1e-12;
/// Largest support on which sub-alphabet searches run exhaustively.
pub const MAX_EXACT_ALPHABET: usize = 12;

const MAX_BISECTIONS: usize = 400;
const ALT_SMOOTHING_GRID: usize = 32;

fn check_eps_open(eps: f64, what: &str) -> Result<()> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "{what} must lie in (0, 1), got {eps}"
        )));
    }
    Ok(())
}

/// Weight of `ρ` outside the support of `σ`.
fn mass_outside_support(rho: &CMat, sigma: &CMat) -> f64 {
    let es = eigh(sigma);
    let kernel = es.projector(|l| l <= SUPPORT_TOL);
    trace_product(&kernel, rho).max(0.0)
}

pub fn entropy(rho: &DensityOperator) -> f64 {
    rho.entropy()
}

/// `D(ρ‖σ)`; `+∞` when the support of `ρ` is not contained in that of `σ`.
pub fn relative_entropy(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.same_space(sigma)?;
    let er = rho.eigh();
    let es = sigma.eigh();
    let overlap = er.vectors.adjoint() * &es.vectors;
    let mut outside = 0.0;
    let mut cross = 0.0;
    let mut own = 0.0;
    for (i, &p) in er.values.iter().enumerate() {
        if p <= SUPPORT_TOL {
            continue;
        }
        own += p * p.log2();
        for (j, &q) in es.values.iter().enumerate() {
            let w = overlap[(i, j)].norm_sqr();
            if q <= SUPPORT_TOL {
                outside += p * w;
            } else {
                cross += p * w * q.log2();
            }
        }
    }
    if outside > SUPPORT_TOL {
        return Ok(f64::INFINITY);
    }
    Ok(own - cross)
}

/// Relative entropy variance `Tr ρ M²` with `M = log ρ − log σ − D` taken on
/// the support of `ρ`.
pub fn relative_entropy_variance(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    let d = relative_entropy(rho, sigma)?;
    if !d.is_finite() {
        return Err(Error::SupportViolation(
            "variance needs supp ρ ⊆ supp σ".into(),
        ));
    }
    let er = rho.eigh();
    let es = sigma.eigh();
    let log_rho = er.map(|l| if l > SUPPORT_TOL { l.log2() } else { 0.0 });
    let log_sigma = es.map(|l| if l > SUPPORT_TOL { l.log2() } else { 0.0 });
    let proj = er.projector(|l| l > SUPPORT_TOL);
    let n = rho.dim();
    let m = log_rho - log_sigma - identity(n).scale(d);
    let mp = &proj * m * &proj;
    let v = trace_product(&(rho.matrix() * &mp), &mp);
    Ok(v.max(0.0))
}

/// `D_max(ρ‖σ) = log λ_max(σ^{-1/2} ρ σ^{-1/2})`; `+∞` on support violation.
pub fn dmax(rho: &DensityOperator, sigma: &DensityOperator) -> Result<f64> {
    rho.same_space(sigma)?;
    Ok(dmax_matrices(rho.matrix(), sigma.matrix()))
}

fn dmax_matrices(rho: &CMat, sigma: &CMat) -> f64 {
    if mass_outside_support(rho, sigma) > SUPPORT_TOL {
        return f64::INFINITY;
    }
    let s = inv_sqrt_on_support(sigma);
    let g = &s * rho * &s;
    let top = eigh(&g).max();
    if top <= 0.0 {
        return f64::NEG_INFINITY;
    }
    top.log2()
}

// ---------------------------------------------------------------------------
// Hypothesis testing

/// An optimal test `T = {ρ − tσ}₊ + p·P₀` together with its error
/// probabilities. `P₀` is the boundary eigenspace of `ρ − tσ`.
#[derive(Debug, Clone)]
pub struct OptimalTest {
    pub threshold: f64,
    pub boundary_weight: f64,
    pub test: MeasurementOperator,
    /// `Tr(1 − T)ρ`.
    pub type_i: f64,
    /// `Tr Tσ`.
    pub type_ii: f64,
}

struct NpPoint {
    plus: CMat,
    zero: CMat,
    /// Type-I error with no boundary weight.
    a: f64,
    /// Type-I error with the full boundary included.
    b: f64,
}

fn np_point(rho: &CMat, sigma: &CMat, t: f64) -> NpPoint {
    let e = eigh(&(rho - sigma.scale(t)));
    let plus = e.projector(|l| l > BOUNDARY_TOL);
    let zero = e.projector(|l| l.abs() <= BOUNDARY_TOL);
    let a = 1.0 - trace_product(&plus, rho);
    let b = a - trace_product(&zero, rho);
    NpPoint { plus, zero, a, b }
}

/// Boundary weight that puts the type-I error of `pt` exactly at `eps`, if
/// the point brackets it.
fn accept(pt: &NpPoint, eps: f64) -> Option<f64> {
    if pt.a <= eps + 1e-14 && pt.a >= eps - TYPE_I_WINDOW {
        return Some(0.0);
    }
    if pt.b <= eps && eps <= pt.a && pt.a - pt.b > 0.0 {
        return Some(((pt.a - eps) / (pt.a - pt.b)).clamp(0.0, 1.0));
    }
    None
}

fn finish(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    threshold: f64,
    weight: f64,
    mat: CMat,
) -> OptimalTest {
    let type_i = (1.0 - trace_product(&mat, rho.matrix())).max(0.0);
    let type_ii = trace_product(&mat, sigma.matrix()).max(0.0);
    let test = MeasurementOperator::trusted(HermitianOperator::from_parts(
        rho.systems().to_vec(),
        mat,
    ));
    OptimalTest {
        threshold,
        boundary_weight: weight,
        test,
        type_i,
        type_ii,
    }
}

/// Quantum Neyman–Pearson test minimising type-II error subject to type-I
/// error at most `eps`, found by bisection on the threshold.
pub fn optimal_test(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
) -> Result<OptimalTest> {
    rho.same_space(sigma)?;
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "type-I budget must lie in [0, 1), got {eps}"
        )));
    }
    let (r, s) = (rho.matrix(), sigma.matrix());
    let es = eigh(s);
    let kernel = es.projector(|l| l <= SUPPORT_TOL);
    let outside = trace_product(&kernel, r).max(0.0);
    if outside > SUPPORT_TOL && 1.0 - outside <= eps {
        return Ok(finish(rho, sigma, f64::INFINITY, 0.0, kernel));
    }
    let min_pos = es
        .values
        .iter()
        .copied()
        .filter(|&l| l > SUPPORT_TOL)
        .fold(f64::INFINITY, f64::min);
    if !min_pos.is_finite() {
        return Err(Error::InvalidParameter("σ has no support".into()));
    }

    let build = |t: f64, pt: &NpPoint, w: f64| {
        let mat = &pt.plus + pt.zero.scale(w);
        finish(rho, sigma, t, w, mat)
    };

    let at_zero = np_point(r, s, 0.0);
    if let Some(w) = accept(&at_zero, eps) {
        return Ok(build(0.0, &at_zero, w));
    }

    let mut hi = 1.0 / min_pos + 1.0;
    let mut hi_pt = np_point(r, s, hi);
    let mut grow = 0;
    while hi_pt.a < eps - TYPE_I_WINDOW {
        if let Some(w) = accept(&hi_pt, eps) {
            return Ok(build(hi, &hi_pt, w));
        }
        grow += 1;
        if grow > 200 {
            return Err(Error::Numerical(
                "could not bracket the Neyman–Pearson threshold".into(),
            ));
        }
        hi *= 2.0;
        hi_pt = np_point(r, s, hi);
    }
    if let Some(w) = accept(&hi_pt, eps) {
        return Ok(build(hi, &hi_pt, w));
    }

    let mut lo = 0.0;
    let mut lo_pt = at_zero;
    for _ in 0..MAX_BISECTIONS {
        if hi - lo < THRESHOLD_RESOLUTION * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pt = np_point(r, s, mid);
        if let Some(w) = accept(&pt, eps) {
            return Ok(build(mid, &pt, w));
        }
        if pt.a < eps {
            if pt.a < lo_pt.a - BOUNDARY_TOL {
                return Err(Error::Numerical(format!(
                    "type-I error decreased along the threshold ({} -> {})",
                    lo_pt.a, pt.a
                )));
            }
            lo = mid;
            lo_pt = pt;
        } else {
            hi = mid;
        }
    }
    Ok(build(lo, &lo_pt, 0.0))
}

/// `D_H^ε(ρ‖σ) = −log min{Tr Tσ : Tr(1−T)ρ ≤ ε}`.
pub fn dh_eps(rho: &DensityOperator, sigma: &DensityOperator, eps: f64) -> Result<f64> {
    let t = optimal_test(rho, sigma, eps)?;
    Ok(neg_log2(t.type_ii))
}

fn neg_log2(x: f64) -> f64 {
    if x <= 0.0 {
        f64::INFINITY
    } else {
        -x.log2()
    }
}

// ---------------------------------------------------------------------------
// Smoothed max-relative entropy

/// An interval `[lower, upper]` for a smoothed quantity.
///
/// `upper` is attained by the unsmoothed state. `lower` is attained by the best
/// clipped candidate found inside the smoothing ball.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SmoothInterval {
    pub lower: f64,
    pub upper: f64,
}

impl SmoothInterval {
    pub fn width(&self) -> f64 {
        if self.upper == self.lower {
            0.0
        } else {
            self.upper - self.lower
        }
    }

    pub fn point(v: f64) -> Self {
        Self { lower: v, upper: v }
    }
}

/// Clipping of `Γ = σ^{-1/2} ρ σ^{-1/2}` at a level `λ`, mapped back through
/// `σ^{1/2}` and renormalised.
struct Clipper {
    rho: CMat,
    sigma_half: CMat,
    gamma_vals: Vec<f64>,
    gamma_vecs: CMat,
}

struct Candidate {
    state: CMat,
    /// `D_max` of the renormalised candidate against `σ`.
    value: f64,
    distance: f64,
}

impl Clipper {
    fn new(rho: &CMat, sigma: &CMat) -> Self {
        let si = inv_sqrt_on_support(sigma);
        let g = eigh(&(&si * rho * &si));
        Self {
            rho: rho.clone(),
            sigma_half: psd_sqrt(sigma),
            gamma_vals: g.values,
            gamma_vecs: g.vectors,
        }
    }

    fn top(&self) -> f64 {
        self.gamma_vals.last().copied().unwrap_or(0.0)
    }

    fn bottom(&self) -> f64 {
        self.gamma_vals
            .iter()
            .copied()
            .filter(|&g| g > SUPPORT_TOL)
            .fold(f64::INFINITY, f64::min)
    }

    fn candidate(&self, level: f64) -> Option<Candidate> {
        let mut w = self.gamma_vecs.clone();
        for (j, &g) in self.gamma_vals.iter().enumerate() {
            let c = if g > SUPPORT_TOL { g.min(level) } else { 0.0 };
            w.column_mut(j).scale_mut(c);
        }
        let capped = w * self.gamma_vecs.adjoint();
        let back = crate::qmat::hermitize(&(&self.sigma_half * capped * &self.sigma_half));
        let tr = back.trace().re;
        if tr <= SUPPORT_TOL {
            return None;
        }
        let state = back.unscale(tr);
        let f = fidelity_matrices(&state, &self.rho);
        let distance = (1.0 - f * f).max(0.0).sqrt();
        Some(Candidate {
            state,
            value: (level.min(self.top()) / tr).log2(),
            distance,
        })
    }

    /// Smallest clipping level whose candidate stays within `eps`.
    fn smallest_feasible(&self, eps: f64) -> Option<(f64, Candidate)> {
        let top = self.top();
        if top <= SUPPORT_TOL {
            return None;
        }
        let at_top = self.candidate(top)?;
        if at_top.distance > eps {
            return None;
        }
        let bottom = self.bottom();
        if let Some(c) = self.candidate(bottom) {
            if c.distance <= eps {
                return Some((bottom, c));
            }
        }
        let (mut lo, mut hi) = (bottom.ln(), top.ln());
        let mut best = (top, at_top);
        for _ in 0..MAX_BISECTIONS {
            if hi - lo < 1e-13 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            match self.candidate(mid.exp()) {
                Some(c) if c.distance <= eps => {
                    hi = mid;
                    best = (mid.exp(), c);
                }
                _ => lo = mid,
            }
        }
        Some(best)
    }
}

/// Interval for `D_max^ε(ρ‖σ)` over states within purified distance `eps`.
pub fn dmax_smooth(
    rho: &DensityOperator,
    sigma: &DensityOperator,
    eps: f64,
) -> Result<SmoothInterval> {
    rho.same_space(sigma)?;
    check_eps_open(eps, "smoothing radius")?;
    let upper = dmax_matrices(rho.matrix(), sigma.matrix());
    let clip = Clipper::new(rho.matrix(), sigma.matrix());
    let lower = match clip.smallest_feasible(eps) {
        Some((_, c)) => c.value.min(upper),
        None => upper,
    };
    Ok(SmoothInterval { lower, upper })
}

// ---------------------------------------------------------------------------
// Bipartite quantities. `a` names the first party; the second party is every
// remaining factor.

fn complement<'a>(rho: &'a DensityOperator, a: &[&str]) -> Result<Vec<&'a str>> {
    for n in a {
        if rho.system(n).is_none() {
            return Err(Error::UnknownLabel((*n).to_string()));
        }
    }
    let rest: Vec<&str> = rho.names().into_iter().filter(|n| !a.contains(n)).collect();
    if a.is_empty() || rest.is_empty() {
        return Err(Error::InvalidParameter(
            "bipartite quantity needs two non-empty parties".into(),
        ));
    }
    Ok(rest)
}

/// `ρ_A ⊗ ρ_B` in the factor order of `ρ`.
pub fn marginal_product(rho: &DensityOperator, a: &[&str]) -> Result<DensityOperator> {
    let b = complement(rho, a)?;
    let ra = rho.reduce_to(a)?;
    let rb = rho.reduce_to(&b)?;
    ra.tensor(&rb)?.aligned_to(rho.systems())
}

pub fn mutual_information(rho: &DensityOperator, a: &[&str]) -> Result<f64> {
    let b = complement(rho, a)?;
    Ok(rho.reduce_to(a)?.entropy() + rho.reduce_to(&b)?.entropy() - rho.entropy())
}

/// `I(A⟩B) = H(B) − H(AB)`.
pub fn coherent_info(rho: &DensityOperator, a: &[&str]) -> Result<f64> {
    let b = complement(rho, a)?;
    Ok(rho.reduce_to(&b)?.entropy() - rho.entropy())
}

pub fn i_h_eps(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<f64> {
    dh_eps(rho, &marginal_product(rho, a)?, eps)
}

pub fn i_max(rho: &DensityOperator, a: &[&str]) -> Result<f64> {
    dmax(rho, &marginal_product(rho, a)?)
}

/// Smooths the joint state only; the reference product stays `ρ_A ⊗ ρ_B`.
pub fn i_max_smooth(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<SmoothInterval> {
    dmax_smooth(rho, &marginal_product(rho, a)?, eps)
}

/// Smooths the joint state and re-derives the second party's marginal from
/// each candidate, keeping `ρ_A` fixed. Returns the interval and the
/// candidate that attains its lower end.
pub fn i_max_alt_smooth_with_candidate(
    rho: &DensityOperator,
    a: &[&str],
    eps: f64,
) -> Result<(SmoothInterval, DensityOperator)> {
    check_eps_open(eps, "smoothing radius")?;
    let b = complement(rho, a)?;
    let ra = rho.reduce_to(a)?;
    let sigma = marginal_product(rho, a)?;
    let upper = dmax_matrices(rho.matrix(), sigma.matrix());
    let clip = Clipper::new(rho.matrix(), sigma.matrix());
    let Some((first, _)) = clip.smallest_feasible(eps) else {
        return Ok((SmoothInterval::point(upper), rho.clone()));
    };
    let top = clip.top();
    let mut levels = vec![first, top];
    if top > first {
        let (l0, l1) = (first.ln(), top.ln());
        for k in 1..ALT_SMOOTHING_GRID {
            levels.push((l0 + (l1 - l0) * k as f64 / ALT_SMOOTHING_GRID as f64).exp());
        }
    }
    let mut best = (upper, rho.clone());
    for level in levels {
        let Some(c) = clip.candidate(level) else {
            continue;
        };
        if c.distance > eps {
            continue;
        }
        let cand = DensityOperator::trusted_parts(rho.systems().to_vec(), c.state);
        let cb = cand.reduce_to(&b)?;
        let reference = ra.tensor(&cb)?.aligned_to(rho.systems())?;
        let v = dmax_matrices(cand.matrix(), reference.matrix());
        if v < best.0 {
            best = (v, cand);
        }
    }
    Ok((
        SmoothInterval {
            lower: best.0.min(upper),
            upper,
        },
        best.1,
    ))
}

pub fn i_max_alt_smooth(rho: &DensityOperator, a: &[&str], eps: f64) -> Result<SmoothInterval> {
    Ok(i_max_alt_smooth_with_candidate(rho, a, eps)?.0)
}

// ---------------------------------------------------------------------------
// Conditional quantities

/// `ρ_XAB = Σₓ p(x) |x⟩⟨x| ⊗ ρ^x_AB` with the parties of each block split as
/// `first` versus the rest.
#[derive(Debug, Clone)]
pub struct CqqState {
    weights: Vec<f64>,
    blocks: Vec<DensityOperator>,
    first: Vec<String>,
}

impl CqqState {
    pub fn new(weights: Vec<f64>, blocks: Vec<DensityOperator>, first: Vec<String>) -> Result<Self> {
        if weights.is_empty() || weights.len() != blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} blocks",
                weights.len(),
                blocks.len()
            )));
        }
        if weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidParameter("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUPPORT_TOL {
            return Err(Error::InvalidParameter(format!("weights sum to {total}")));
        }
        for b in &blocks[1..] {
            blocks[0].same_space(b)?;
        }
        let names: Vec<&str> = first.iter().map(String::as_str).collect();
        complement(&blocks[0], &names)?;
        Ok(Self {
            weights,
            blocks,
            first,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn blocks(&self) -> &[DensityOperator] {
        &self.blocks
    }

    pub fn first(&self) -> Vec<&str> {
        self.first.iter().map(String::as_str).collect()
    }

    /// Indices of symbols with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&x| self.weights[x] > 0.0)
            .collect()
    }

    fn per_block<T: Send>(&self, f: impl Fn(&DensityOperator) -> Result<T> + Sync + Send) -> Result<Vec<(usize, T)>> {
        let supp = self.support();
        let out = Exec::default().map(&supp, |&x| f(&self.blocks[x]));
        supp.into_iter().zip(out).map(|(x, r)| r.map(|v| (x, v))).collect()
    }
}

/// `√(1 − F²)` for classical distributions on a common alphabet.
pub fn classical_purified_distance(p: &[f64], q: &[f64]) -> f64 {
    let f: f64 = p.iter().zip(q).map(|(a, b)| (a * b).max(0.0).sqrt()).sum();
    (1.0 - f.min(1.0).powi(2)).max(0.0).sqrt()
}

/// All non-empty subsets `S` of the support whose renormalised restriction
/// `p|_S` lies within purified distance `eps` of `p`.
pub fn sub_alphabets(weights: &[f64], eps: f64) -> Result<Vec<Vec<usize>>> {
    let supp: Vec<usize> = (0..weights.len()).filter(|&x| weights[x] > 0.0).collect();
    if supp.len() > MAX_EXACT_ALPHABET {
        return Err(Error::AlphabetTooLarge {
            size: supp.len(),
            limit: MAX_EXACT_ALPHABET,
        });
    }
    let n = supp.len();
    let mut out = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let set: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| supp[k]).collect();
        let mass: f64 = set.iter().map(|&x| weights[x]).sum();
        let mut restricted = vec![0.0; weights.len()];
        for &x in &set {
            restricted[x] = weights[x] / mass;
        }
        if classical_purified_distance(&restricted, weights) <= eps + 1e-12 {
            out.push(set);
        }
    }
    Ok(out)
}

fn max_min(sets: &[Vec<usize>], value: impl Fn(usize) -> f64) -> f64 {
    sets.iter()
        .map(|s| s.iter().map(|&x| value(x)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max)
}

fn min_max(sets: &[Vec<usize>], value: impl Fn(usize) -> f64) -> f64 {
    sets.iter()
        .map(|s| s.iter().map(|&x| value(x)).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min)
}

fn lookup<T: Copy>(table: &[(usize, T)], x: usize) -> T {
    table.iter().find(|(k, _)| *k == x).expect("symbol in support").1
}

/// `max_S min_{x∈S} I_H^ε(A;B)_{ρ^x}` over admissible sub-alphabets.
pub fn cond_i_h_eps(state: &CqqState, eps: f64) -> Result<f64> {
    let sets = sub_alphabets(&state.weights, eps)?;
    let a = state.first();
    let vals = state.per_block(|b| i_h_eps(b, &a, eps))?;
    Ok(max_min(&sets, |x| lookup(&vals, x)))
}

fn cond_interval(
    state: &CqqState,
    eps: f64,
    f: impl Fn(&DensityOperator, &[&str], f64) -> Result<SmoothInterval> + Sync + Send,
) -> Result<SmoothInterval> {
    if eps >= 1.0 {
        return Ok(SmoothInterval::point(0.0));
    }
    let sets = sub_alphabets(&state.weights, eps)?;
    let a = state.first();
    let vals = state.per_block(|b| f(b, &a, eps))?;
    Ok(SmoothInterval {
        lower: min_max(&sets, |x| lookup(&vals, x).lower),
        upper: min_max(&sets, |x| lookup(&vals, x).upper),
    })
}

/// `min_S max_{x∈S} I_max^ε(A;B)_{ρ^x}` over admissible sub-alphabets,
/// evaluated separately at both interval ends. A radius of 1 or more admits
/// every state, so the value is 0.
pub fn cond_i_max_smooth(state: &CqqState, eps: f64) -> Result<SmoothInterval> {
    cond_interval(state, eps, i_max_smooth)
}

/// Conditional form of [`i_max_alt_smooth`].
pub fn cond_i_max_alt_smooth(state: &CqqState, eps: f64) -> Result<SmoothInterval> {
    cond_interval(state, eps, i_max_alt_smooth)
}

pub fn cond_mutual_information(state: &CqqState) -> Result<f64> {
    let a = state.first();
    let vals = state.per_block(|b| mutual_information(b, &a))?;
    Ok(vals.iter().map(|&(x, v)| state.weights[x] * v).sum())
}

pub fn cond_coherent_info(state: &CqqState) -> Result<f64> {
    let a = state.first();
    let vals = state.per_block(|b| coherent_info(b, &a))?;
    Ok(vals.iter().map(|&(x, v)| state.weights[x] * v).sum())
}

/// Exact `max_S min_{x∈S} v(x)` for any alphabet size: the optimum is always
/// a set of the form `{x : v(x) ≥ c}`.
pub fn max_min_by_threshold(weights: &[f64], values: &[f64], eps: f64) -> f64 {
    threshold_search(weights, values, eps, true)
}

/// Exact `min_S max_{x∈S} v(x)`, attained on a set `{x : v(x) ≤ c}`.
pub fn min_max_by_threshold(weights: &[f64], values: &[f64], eps: f64) -> f64 {
    threshold_search(weights, values, eps, false)
}

fn threshold_search(weights: &[f64], values: &[f64], eps: f64, descending: bool) -> f64 {
    let mut order: Vec<usize> = (0..weights.len()).filter(|&x| weights[x] > 0.0).collect();
    order.sort_by(|&a, &b| {
        let c = values[a].total_cmp(&values[b]);
        if descending {
            c.reverse()
        } else {
            c
        }
    });
    let need = 1.0 - eps * eps;
    let mut mass = 0.0;
    for (k, &x) in order.iter().enumerate() {
        mass += weights[x];
        let tie_next = order
            .get(k + 1)
            .is_some_and(|&y| values[y] == values[x]);
        if !tie_next && mass >= need - 1e-12 {
            return values[x];
        }
    }
    order.last().map(|&x| values[x]).unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------
// Scalar helpers

pub fn binary_entropy(p: f64) -> f64 {
    let h = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
    h(p) + h(1.0 - p)
}

fn erfc_positive(z: f64) -> f64 {
    if z < 3.0 {
        let mut term = z;
        let mut sum = z;
        let z2 = z * z;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= 2.0 * z2 / (2.0 * n + 1.0);
            sum += term;
            if term <= 1e-17 * sum || n > 300.0 {
                break;
            }
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * (-z2).exp() * sum
    } else {
        let mut frac = z;
        for k in (1..=80).rev() {
            frac = z + (k as f64 * 0.5) / frac;
        }
        (-z * z).exp() / std::f64::consts::PI.sqrt() / frac
    }
}

/// Standard normal cumulative distribution function.
pub fn gaussian_cdf(x: f64) -> f64 {
    let z = -x / std::f64::consts::SQRT_2;
    if z >= 0.0 {
        0.5 * erfc_positive(z)
    } else {
        1.0 - 0.5 * erfc_positive(-z)
    }
}

/// `Φ⁻¹(p)` by bisection, absolute tolerance well below 1e-10.
pub fn inv_gaussian_cdf(p: f64) -> Result<f64> {
    check_eps_open(p, "probability")?;
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if gaussian_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `nD + √(nV) Φ⁻¹(ε)`.
pub fn second_order_dh(d: f64, v: f64, eps: f64, n: usize) -> Result<f64> {
    let n = n as f64;
    Ok(n * d + (n * v).sqrt() * inv_gaussian_cdf(eps)?)
}

/// `nD − √(nV) Φ⁻¹(ε²)`.
pub fn second_order_dmax(d: f64, v: f64, eps: f64, n: usize) -> Result<f64> {
    let n = n as f64;
    Ok(n * d - (n * v).sqrt() * inv_gaussian_cdf(eps * eps)?)
}
