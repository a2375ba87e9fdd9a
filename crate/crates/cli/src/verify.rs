//! Seeded property suites behind `verify`.
//!
//! Every suite records the largest excess of a left-hand side over its bound;
//! an excess above the suite's tolerance is a violation.

use qcap_core::channels::{coherent_ensemble_state, standard_channel, ChannelKind};
use qcap_core::classical::ClassicalPair;
use qcap_core::divergences::{
    binary_entropy, cond_i_h_eps, cond_i_max_smooth, cond_mutual_information, dh_eps, dmax,
    optimal_test, relative_entropy, CqqState,
};
use qcap_core::protosim::{
    convex_split_check, gentle_measurement_verify, hayashi_nagaoka_verify, privacy_error,
    square_root_measurement, CodeSizes,
};
use qcap_core::qmat::{
    apply_channel, fidelity, identity, max_abs_diff, purified_distance, trace_distance,
    trace_product, CMat, ChannelOutput, DensityOperator, HermitianOperator, StateVector,
    SystemLabel, WiretapChannel,
};
use qcap_core::random::{self, Rng64};
use qcap_core::rates::{
    alt_smooth_bridge, evaluate_grid, matched_converse_pair, achievable_pair, private_to_coherent_check,
    EncoderGrid, SlackParams, SweepOptions,
};
use rand::Rng;

use crate::error::CliResult;
use crate::input::{parse_document, Scenario};
use crate::output::{num, Table};

pub const ANALYTIC_TOL: f64 = 1e-9;
pub const SMOOTHING_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub name: String,
    pub instances: usize,
    pub violations: usize,
    /// Largest `lhs − bound` seen; negative when every instance had slack.
    pub max_excess: f64,
    pub tolerance: f64,
    /// Informational suites are reported but never fail the run.
    pub informational: bool,
}

impl SuiteResult {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            instances: 0,
            violations: 0,
            max_excess: f64::NEG_INFINITY,
            tolerance,
            informational: false,
        }
    }

    fn info(mut self) -> Self {
        self.informational = true;
        self
    }

    /// Record one instance of `lhs ≤ rhs`.
    pub fn check(&mut self, lhs: f64, rhs: f64) {
        let excess = if lhs == rhs { 0.0 } else { lhs - rhs };
        self.instances += 1;
        if excess.is_nan() || excess > self.tolerance {
            self.violations += 1;
        }
        if excess.is_nan() {
            self.max_excess = f64::NAN;
        } else if !self.max_excess.is_nan() {
            self.max_excess = self.max_excess.max(excess);
        }
    }

    pub fn passed(&self) -> bool {
        self.informational || self.violations == 0
    }

    pub fn status(&self) -> &'static str {
        match (self.informational, self.violations) {
            (true, _) => "info",
            (false, 0) => "pass",
            _ => "fail",
        }
    }
}

const FIXTURES: [(&str, &str); 4] = [
    ("dephasing_half", include_str!("../fixtures/dephasing_half.json")),
    ("dephasing_one", include_str!("../fixtures/dephasing_one.json")),
    ("amplitude_damping03", include_str!("../fixtures/amplitude_damping03.json")),
    ("identity", include_str!("../fixtures/identity.json")),
];

pub fn shipped_fixtures() -> CliResult<Vec<(String, Scenario)>> {
    FIXTURES
        .iter()
        .map(|(name, text)| Ok((name.to_string(), parse_document(text)?.scenario()?)))
        .collect()
}

fn pair(r: &mut Rng64, d: usize) -> (DensityOperator, DensityOperator) {
    let l = vec![SystemLabel::new("A", d)];
    (random::density(l.clone(), r), random::density(l, r))
}

fn bipartite(r: &mut Rng64) -> DensityOperator {
    random::density(vec![SystemLabel::new("A", 2), SystemLabel::new("B", 2)], r)
}

fn cqq(r: &mut Rng64) -> CqqState {
    let w = random::probability_vector(3, r);
    let blocks = (0..3).map(|_| bipartite(r)).collect();
    CqqState::new(w, blocks, vec!["A".into()]).expect("random CQQ state is valid")
}

/// Smallest type-II error over deterministic subsets plus one fractional outcome.
pub fn classical_np_oracle(p: &[f64], q: &[f64], eps: f64) -> f64 {
    let n = p.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << n) {
        let inside = |i: usize| mask >> i & 1 == 1;
        let acc_p: f64 = (0..n).filter(|&i| inside(i)).map(|i| p[i]).sum();
        let acc_q: f64 = (0..n).filter(|&i| inside(i)).map(|i| q[i]).sum();
        if 1.0 - acc_p <= eps + 1e-12 {
            best = best.min(acc_q);
        }
        for j in (0..n).filter(|&j| !inside(j) && p[j] > 0.0) {
            let w = (1.0 - eps - acc_p) / p[j];
            if (0.0..=1.0).contains(&w) {
                best = best.min(acc_q + w * q[j]);
            }
        }
    }
    best
}

fn type_errors(test: &CMat, rho: &CMat, sigma: &CMat) -> (f64, f64) {
    (1.0 - trace_product(test, rho), trace_product(test, sigma))
}

fn neyman_pearson(seed: u64) -> CliResult<Vec<SuiteResult>> {
    let mut quantum = SuiteResult::new("neyman_pearson_optimality", ANALYTIC_TOL);
    let mut r = random::rng(seed, 101);
    for i in 0..200 {
        let d = 2 + i % 3;
        let eps = r.random_range(0.05..0.5);
        let (rho, sigma) = pair(&mut r, d);
        let opt = optimal_test(&rho, &sigma, eps)?.type_ii;
        let (rm, sm) = (rho.matrix(), sigma.matrix());
        for _ in 0..100 {
            let t = random::measurement(rho.systems().to_vec(), &mut r);
            let (a, b) = type_errors(t.as_hermitian().matrix(), rm, sm);
            // Mixing with the accept-all test brings any test within budget.
            let s = if a > eps { 1.0 - eps / a } else { 0.0 };
            quantum.check(opt, (1.0 - s) * b + s);
        }
        for k in 0..40 {
            let t = (k as f64 * 0.3 - 6.0).exp();
            let e = qcap_core::qmat::eigh(&(rm - sm.scale(t)));
            let proj = e.projector(|l| l > 0.0);
            let (a, b) = type_errors(&proj, rm, sm);
            if a <= eps {
                quantum.check(opt, b);
            }
        }
    }
    let mut commuting = SuiteResult::new("neyman_pearson_commuting", 1e-8);
    for i in 0..20 {
        let d = 2 + i % 4;
        let eps = r.random_range(0.01..0.9);
        let p = random::probability_vector(d, &mut r);
        let q = random::probability_vector(d, &mut r);
        let oracle = classical_np_oracle(&p, &q, eps);
        let got = optimal_test(
            &DensityOperator::diagonal("A", &p)?,
            &DensityOperator::diagonal("A", &q)?,
            eps,
        )?
        .type_ii;
        commuting.check((got - oracle).abs(), 0.0);
        let fast = ClassicalPair::new(&p, &q)?.optimal_type_ii(eps)?;
        commuting.check((fast - oracle).abs(), 0.0);
    }
    Ok(vec![quantum, commuting])
}

fn inequality_facts(seed: u64, s: &SlackParams) -> CliResult<Vec<SuiteResult>> {
    let mut dh_bound = SuiteResult::new("hypothesis_testing_entropy_bound", ANALYTIC_TOL);
    let mut dpi_max = SuiteResult::new("data_processing_dmax", ANALYTIC_TOL);
    let mut dpi_h = SuiteResult::new("data_processing_hypothesis_testing", ANALYTIC_TOL);
    let mut below_max = SuiteResult::new("relative_entropy_below_dmax", ANALYTIC_TOL);
    let mut sandwich = SuiteResult::new("distance_sandwich", ANALYTIC_TOL);
    let mut metric = SuiteResult::new("distance_triangle", ANALYTIC_TOL);
    let mut cond_dh = SuiteResult::new("conditional_hypothesis_testing_bound", ANALYTIC_TOL);
    let mut cond_max = SuiteResult::new("conditional_max_information_continuity", SMOOTHING_TOL);
    let mut bridge = SuiteResult::new("smoothing_bridge", ANALYTIC_TOL);
    let mut r = random::rng(seed, 202);
    for i in 0..200 {
        let d = 2 + i % 3;
        let eps = r.random_range(0.05..0.9);
        let (rho, sigma) = pair(&mut r, d);
        let dh = dh_eps(&rho, &sigma, eps)?;
        let rel = relative_entropy(&rho, &sigma)?;
        dh_bound.check(dh, (rel + binary_entropy(eps)) / (1.0 - eps));
        below_max.check(rel, dmax(&rho, &sigma)?);

        let ch = random::channel(d, 2, 2, &mut r);
        let nr = apply_channel(&ch, &rho, ChannelOutput::B)?;
        let ns = apply_channel(&ch, &sigma, ChannelOutput::B)?;
        dpi_max.check(dmax(&nr, &ns)?, dmax(&rho, &sigma)?);
        dpi_h.check(dh_eps(&nr, &ns, eps)?, dh);

        let t = trace_distance(&rho, &sigma)?;
        let p = purified_distance(&rho, &sigma)?;
        sandwich.check(t, p);
        sandwich.check(p, (2.0 * t).sqrt());
        let tau = random::density(rho.systems().to_vec(), &mut r);
        metric.check(p, purified_distance(&rho, &tau)? + purified_distance(&tau, &sigma)?);
        metric.check(t, trace_distance(&rho, &tau)? + trace_distance(&tau, &sigma)?);
        metric.check((fidelity(&rho, &sigma)? - fidelity(&sigma, &rho)?).abs(), 0.0);

        let st = cqq(&mut r);
        let i_cond = cond_mutual_information(&st)?;
        let e = r.random_range(0.05..0.8);
        cond_dh.check(cond_i_h_eps(&st, e)?, (i_cond + binary_entropy(e)) / (1.0 - e));
        let e = r.random_range(0.05..0.5);
        let slack = 3.0 * e + 2.0 * (1.0 + e) * binary_entropy(e / (1.0 + e));
        cond_max.check(i_cond - slack, cond_i_max_smooth(&st, e)?.lower);

        let ab = bipartite(&mut r);
        let b = alt_smooth_bridge(&ab, &["A"], s.eps, s.gamma)?;
        bridge.check(b.excess(), 0.0);
    }
    Ok(vec![dh_bound, dpi_max, dpi_h, below_max, sandwich, metric, cond_dh, cond_max, bridge])
}

fn operator_lemmas(seed: u64) -> CliResult<Vec<SuiteResult>> {
    let mut hn = SuiteResult::new("hayashi_nagaoka", ANALYTIC_TOL);
    let mut gentle = SuiteResult::new("gentle_measurement", ANALYTIC_TOL);
    let mut povm = SuiteResult::new("povm_completeness", ANALYTIC_TOL);
    let mut r = random::rng(seed, 303);
    for i in 0..1000 {
        let d = 2 + i % 5;
        let sys = vec![SystemLabel::new("B", d)];
        let s = random::measurement(sys.clone(), &mut r);
        let scale = r.random_range(0.1..5.0);
        let t = HermitianOperator::new(sys.clone(), random::psd(d, scale, &mut r))?;
        let c = r.random_range(0.01..5.0);
        hn.check(0.0, hayashi_nagaoka_verify(&s, &t, c)?);

        let d = 2 + i % 7;
        let sys = vec![SystemLabel::new("B", d)];
        let rho = random::density(sys.clone(), &mut r);
        let lam = random::measurement(sys, &mut r);
        let (lhs, rhs) = gentle_measurement_verify(&rho, &lam)?;
        gentle.check(lhs, rhs);

        if i % 10 == 0 {
            let n = 2 + i % 3;
            let gammas: Vec<HermitianOperator> = (0..n)
                .map(|_| HermitianOperator::single("B", random::psd(d, 1.0, &mut r)))
                .collect::<Result<_, _>>()?;
            let out = square_root_measurement(&gammas)?;
            let total = out
                .iter()
                .fold(CMat::zeros(d, d), |acc, m| acc + m.as_hermitian().matrix());
            povm.check(max_abs_diff(&total, &identity(d)), 0.0);
        }
    }
    Ok(vec![hn, gentle, povm])
}

fn convex_split(seed: u64) -> CliResult<Vec<SuiteResult>> {
    let mut bound = SuiteResult::new("convex_split_bound", ANALYTIC_TOL);
    let mut monotone = SuiteResult::new("convex_split_nonincreasing", ANALYTIC_TOL).info();
    let mut r = random::rng(seed, 404);
    for _ in 0..20 {
        let rho = bipartite(&mut r);
        let mut last = f64::INFINITY;
        for k in 1..=6 {
            let cs = convex_split_check(&rho, "A", k)?;
            if cs.bound.is_finite() {
                bound.check(cs.distance, cs.bound);
            }
            monotone.check(cs.distance, last);
            last = cs.distance;
        }
    }
    Ok(vec![bound, monotone])
}

const STANDARD_KINDS: [(ChannelKind, f64); 4] = [
    (ChannelKind::AmplitudeDamping, 0.3),
    (ChannelKind::Dephasing, 0.2),
    (ChannelKind::Depolarizing, 0.25),
    (ChannelKind::Erasure, 0.4),
];

fn private_to_coherent(seed: u64) -> CliResult<Vec<SuiteResult>> {
    let mut res = SuiteResult::new("private_to_coherent_identity", ANALYTIC_TOL);
    let mut r = random::rng(seed, 505);
    let labels = vec![SystemLabel::new("R", 2), SystemLabel::new("A", 2)];
    for (kind, p) in STANDARD_KINDS {
        let ch = standard_channel(kind, p)?;
        for _ in 0..50 {
            let w = random::probability_vector(2, &mut r);
            let blocks = (0..2)
                .map(|_| StateVector::new(labels.clone(), random::pure_vector(4, &mut r)))
                .collect::<Result<Vec<_>, _>>()?;
            let st = coherent_ensemble_state(&w, &blocks, &ch)?;
            res.check(private_to_coherent_check(&st)?, 0.0);
        }
    }
    Ok(vec![res])
}

fn rate_suites(seed: u64, s: &SlackParams) -> CliResult<Vec<SuiteResult>> {
    let mut order = SuiteResult::new("achievable_within_converse", SMOOTHING_TOL);
    let mut r = random::rng(seed, 606);
    for i in 0..40 {
        let (kind, _) = STANDARD_KINDS[i % 4];
        let ch = standard_channel(kind, r.random_range(0.0..1.0))?;
        let p = random::probability_vector(4, &mut r);
        let th: [f64; 4] = std::array::from_fn(|_| r.random_range(0.0..std::f64::consts::PI));
        let st = qcap_core::rates::EncoderParams { p_xy: [p[0], p[1], p[2], p[3]], theta: th }
            .ensemble("A")?
            .through(&ch)?;
        let ach = achievable_pair(&st, s)?;
        let con = matched_converse_pair(&st, s)?;
        order.check(ach.public, con.public);
        order.check(ach.private, con.private + con.terms.eve_width);
    }

    let mut second = SuiteResult::new("second_order_envelope", 0.0);
    let eps = 0.2;
    for (p, q) in [
        (vec![0.7, 0.2, 0.1], vec![0.3, 0.3, 0.4]),
        (vec![0.5, 0.5], vec![0.9, 0.1]),
    ] {
        let pair = ClassicalPair::new(&p, &q)?;
        let d = pair.relative_entropy();
        let v = pair.relative_entropy_variance()?;
        let z = qcap_core::divergences::inv_gaussian_cdf(eps)?;
        for n in 4..=12usize {
            let nf = n as f64;
            let got = pair.iid_power(n).dh_eps(eps)? / nf;
            second.check((got - d - (v / nf).sqrt() * z).abs(), 3.0 * (nf + 1.0).log2() / nf);
        }
    }

    let mut corners = SuiteResult::new("identity_corner_recovery", ANALYTIC_TOL);
    let grid = EncoderGrid::new(3)?;
    let samples = evaluate_grid(&WiretapChannel::identity(2), grid, s, SweepOptions::default())?;
    let frontier: Vec<(f64, f64)> = samples
        .iter()
        .filter(|x| x.frontier[2])
        .map(|x| (x.asymptotic.public, x.asymptotic.private))
        .collect();
    for target in [(1.0, 0.0), (0.0, 1.0)] {
        let gap = frontier
            .iter()
            .map(|p| (p.0 - target.0).abs().max((p.1 - target.1).abs()))
            .fold(f64::INFINITY, f64::min);
        corners.check(gap, 0.0);
    }
    Ok(vec![order, second, corners])
}

pub const PROTOCOL_SIZES: [(usize, usize, usize); 3] = [(2, 1, 1), (2, 2, 1), (2, 2, 2)];

fn protocol(fixtures: &[(String, Scenario)], s: &SlackParams) -> CliResult<Vec<SuiteResult>> {
    let mut out = Vec::new();
    for (name, sc) in fixtures {
        let mut res = SuiteResult::new(format!("protocol_{name}"), ANALYTIC_TOL);
        let mut symmetry = SuiteResult::new(format!("protocol_{name}_symmetry"), 1e-10);
        for (m, l, k) in PROTOCOL_SIZES {
            let rep = privacy_error(&sc.ensemble, &sc.channel, CodeSizes::new(m, l, k)?, s)?;
            res.check(rep.public_error, rep.bounds.public_theorem);
            res.check(rep.public_error, rep.bounds.public_reduced);
            if l > 1 {
                res.check(rep.private_error, rep.bounds.private_hn);
            }
            res.check(rep.privacy_error, rep.bounds.privacy_chain);
            if rep.bounds.size_conditions_hold {
                res.check(rep.privacy_error, rep.bounds.privacy_nominal);
            }
            symmetry.check(rep.public_symmetry_defect, 0.0);
            let d = &rep.derandomized;
            res.check(d.public_error + d.privacy_error, d.average_score);
        }
        out.push(res);
        out.push(symmetry);
    }
    Ok(out)
}

pub fn run_all(seed: u64, s: &SlackParams, fixtures: &[(String, Scenario)]) -> CliResult<Vec<SuiteResult>> {
    let mut all = neyman_pearson(seed)?;
    all.extend(inequality_facts(seed, s)?);
    all.extend(operator_lemmas(seed)?);
    all.extend(convex_split(seed)?);
    all.extend(private_to_coherent(seed)?);
    all.extend(rate_suites(seed, s)?);
    all.extend(protocol(fixtures, s)?);
    Ok(all)
}

pub fn summary_table(results: &[SuiteResult]) -> Table {
    let mut t = Table::new(&["suite", "instances", "violations", "max_excess", "tolerance", "status"]);
    for r in results {
        t.push(vec![
            r.name.clone(),
            r.instances.to_string(),
            r.violations.to_string(),
            num(r.max_excess),
            num(r.tolerance),
            r.status().into(),
        ]);
    }
    t
}
