use qcap_core::divergences::{dh_eps, dmax, dmax_smooth, marginal_product, relative_entropy, relative_entropy_variance};
use qcap_core::protosim::{privacy_error, ProtocolReport, BOUND_SLACK};
use qcap_core::qmat::{DensityOperator, SystemLabel};
use qcap_core::rates::{evaluate_grid, EncoderGrid, RegionSample, SweepOptions};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::input::{read_document, Document};
use crate::output::{document, flag, num, Table};
use crate::svg::{scatter, Series};
use crate::verify;

/// Primary text output plus any side files, and the exit status.
pub struct Outcome {
    pub text: String,
    pub files: Vec<(std::path::PathBuf, String)>,
    pub status: i32,
}

impl Outcome {
    fn ok(text: String) -> Self {
        Self {
            text,
            files: Vec::new(),
            status: 0,
        }
    }
}

fn load(cfg: &RunConfig) -> CliResult<Document> {
    read_document(cfg.require_input()?)
}

fn divergence_pair(doc: &Document) -> CliResult<(&'static str, DensityOperator, DensityOperator)> {
    if let (Some(r), Some(s)) = (&doc.rho, &doc.sigma) {
        return Ok(("pair", r.build_single("A")?, s.build_single("A")?));
    }
    if let Some(st) = &doc.state {
        let systems: Vec<SystemLabel> = doc
            .systems
            .as_ref()
            .ok_or_else(|| CliError::Input("a bipartite `state` needs `systems`".into()))?
            .iter()
            .map(|(n, d)| SystemLabel::new(n.clone(), *d))
            .collect();
        let rho = st.build(systems)?;
        let first: Vec<&str> = match &doc.first {
            Some(f) => f.iter().map(String::as_str).collect(),
            None => vec![rho.systems()[0].name.as_str()],
        };
        let sigma = marginal_product(&rho, &first)?;
        return Ok(("bipartite", rho, sigma));
    }
    Err(CliError::Input(
        "divergence input needs `rho` and `sigma`, or a bipartite `state`".into(),
    ))
}

pub fn cmd_divergence(cfg: &RunConfig) -> CliResult<Outcome> {
    let doc = load(cfg)?;
    let (kind, rho, sigma) = divergence_pair(&doc)?;
    let eps = cfg.slacks.eps;
    let d = relative_entropy(&rho, &sigma)?;
    let v = if d.is_finite() {
        relative_entropy_variance(&rho, &sigma)?
    } else {
        f64::NAN
    };
    let smooth = dmax_smooth(&rho, &sigma, eps)?;
    let mut t = Table::new(&[
        "input", "eps", "D", "V", "D_max", "D_H", "D_max_smooth_lower", "D_max_smooth_upper",
    ]);
    t.push(vec![
        kind.into(),
        num(eps),
        num(d),
        num(v),
        num(dmax(&rho, &sigma)?),
        num(dh_eps(&rho, &sigma, eps)?),
        num(smooth.lower),
        num(smooth.upper),
    ]);
    Ok(Outcome::ok(document(cfg, &t)))
}

pub const REGION_COLUMNS: [&str; 23] = [
    "index", "p00", "p01", "p10", "p11", "theta00", "theta01", "theta10", "theta11", "r_ach",
    "R_ach", "r_con", "R_con", "r_ds", "R_ds", "eps", "epsPrime", "delta", "deltaPrime", "gamma",
    "frontier_ach", "frontier_con", "frontier_ds",
];

fn region_row(s: &RegionSample, cfg: &RunConfig) -> Vec<String> {
    let sl = &cfg.slacks;
    let mut row = vec![s.index.to_string()];
    row.extend(s.encoder.p_xy.iter().map(|&v| num(v)));
    row.extend(s.encoder.theta.iter().map(|&v| num(v)));
    for p in s.series() {
        row.push(num(p.public));
        row.push(num(p.private));
    }
    row.extend([sl.eps, sl.eps_prime, sl.delta, sl.delta_prime, sl.gamma].map(num));
    row.extend(s.frontier.map(flag));
    row
}

pub fn cmd_region(cfg: &RunConfig) -> CliResult<Outcome> {
    let ch = load(cfg)?.channel()?;
    let samples = evaluate_grid(&ch, EncoderGrid::new(cfg.grid)?, &cfg.slacks, SweepOptions::default())?;
    let mut t = Table::new(&REGION_COLUMNS);
    for s in &samples {
        t.push(region_row(s, cfg));
    }
    let mut out = Outcome::ok(document(cfg, &t));
    if let Some(path) = &cfg.svg {
        let series = ["achievable", "converse", "asymptotic"]
            .iter()
            .zip(["#1f77b4", "#d62728", "#2ca02c"])
            .enumerate()
            .map(|(k, (label, color))| Series {
                label,
                color,
                points: samples
                    .iter()
                    .filter(|s| s.frontier[k])
                    .map(|s| s.series()[k].clamped())
                    .collect(),
            })
            .collect::<Vec<_>>();
        out.files.push((
            path.clone(),
            scatter("Rate region frontier", "public rate r", "private rate R", &series),
        ));
    }
    Ok(out)
}

pub const SIMULATE_COLUMNS: [&str; 17] = [
    "m", "l", "public_error", "private_error", "secrecy", "secrecy_smoothed", "privacy_error",
    "public_reduced_bound", "public_theorem_bound", "private_hn_bound", "privacy_chain_bound",
    "privacy_nominal_bound", "public_reduced_ok", "public_theorem_ok", "private_hn_ok",
    "privacy_chain_ok", "privacy_nominal_ok",
];

fn chain_bound(private: f64, secrecy: f64, public: f64) -> f64 {
    private + secrecy + 2.0 * public.max(0.0).sqrt()
}

pub fn protocol_table(rep: &ProtocolReport) -> Table {
    let b = &rep.bounds;
    let within = |v: f64, bound: f64| flag(v <= bound + BOUND_SLACK);
    let nominal = |v: f64| {
        if b.size_conditions_hold {
            flag(v <= b.privacy_nominal + 1e-6)
        } else {
            "na".to_string()
        }
    };
    let mut t = Table::new(&SIMULATE_COLUMNS);
    for r in &rep.rows {
        let chain = chain_bound(r.private_error, r.secrecy, r.public_error);
        t.push(vec![
            r.m.to_string(),
            r.l.to_string(),
            num(r.public_error),
            num(r.private_error),
            num(r.secrecy),
            num(r.secrecy_smoothed),
            num(r.privacy_error),
            num(b.public_reduced),
            num(b.public_theorem),
            num(b.private_hn),
            num(chain),
            num(b.privacy_nominal),
            within(r.public_error, b.public_reduced),
            within(r.public_error, b.public_theorem),
            flag(rep.sizes.l == 1 || r.private_error <= b.private_hn + BOUND_SLACK),
            within(r.privacy_error, chain),
            nominal(r.privacy_error),
        ]);
    }
    let f = &rep.flags;
    t.push(vec![
        "all".into(),
        "all".into(),
        num(rep.public_error),
        num(rep.private_error),
        num(rep.secrecy),
        num(rep.secrecy_smoothed),
        num(rep.privacy_error),
        num(b.public_reduced),
        num(b.public_theorem),
        num(b.private_hn),
        num(b.privacy_chain),
        num(b.privacy_nominal),
        flag(f.public_reduced),
        flag(f.public_theorem),
        flag(f.private_hn),
        flag(f.privacy_chain),
        f.privacy_nominal.map(flag).unwrap_or_else(|| "na".into()),
    ]);
    t
}

pub fn cmd_simulate(cfg: &RunConfig) -> CliResult<Outcome> {
    let doc = load(cfg)?;
    let sc = doc.scenario()?;
    let sizes = match (cfg.sizes, &doc.sizes) {
        (Some([m, l, k]), _) => qcap_core::protosim::CodeSizes::new(m, l, k)?,
        (None, Some(s)) => s.build()?,
        (None, None) => {
            return Err(CliError::Input(
                "code sizes missing: give `sizes` in the document or --sizes M,L,K".into(),
            ))
        }
    };
    let rep = privacy_error(&sc.ensemble, &sc.channel, sizes, &cfg.slacks)?;
    let mut out = Outcome::ok(document(cfg, &protocol_table(&rep)));
    if let Some(path) = &cfg.json {
        let text = serde_json::to_string_pretty(&rep).map_err(|e| CliError::Input(e.to_string()))?;
        out.files.push((path.clone(), text + "\n"));
    }
    Ok(out)
}

pub fn cmd_verify(cfg: &RunConfig) -> CliResult<Outcome> {
    let fixtures = match &cfg.input {
        Some(p) => vec![(p.display().to_string(), read_document(p)?.scenario()?)],
        None => verify::shipped_fixtures()?,
    };
    let results = verify::run_all(cfg.seed, &cfg.slacks, &fixtures)?;
    let failed = results.iter().filter(|r| !r.passed()).count();
    let mut out = Outcome::ok(document(cfg, &verify::summary_table(&results)));
    if failed > 0 {
        out.status = CliError::SuiteFailure(failed).exit_code();
    }
    Ok(out)
}
