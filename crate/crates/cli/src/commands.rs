//! One function per subcommand, each returning the tables it emits.

use nptruth_core::belief::{contour_grid, l_d, l_p, logistic};
use nptruth_core::bias::{
    biased_expected_logrho, biased_expected_v, biased_size, expected_v, rho_prime_crossing, run_biased_sequential, Gate,
};
use nptruth_core::engine::{build_rule, decide, p_functional, unit_grid, RocCurve, RocFunction};
use nptruth_core::los::{self, LosSolution, SampleSizeMethod};
use nptruth_core::models::{FamilyKind, ModelFamily, TeaTastingBinomial, TeaTastingFisher, TwoSampleT};
use nptruth_core::sequential::{
    run_replication_study, run_sequential, LosPolicy, ReplicationStudy, SequentialConfig, Trajectory,
};
use nptruth_core::{Error, RngStream};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Model, ModelSpec, Scenario};
use crate::output::Table;
use crate::{row, CliError, Command};

type Out = Result<Vec<Table>, CliError>;

pub fn dispatch(cmd: &Command, s: &Scenario) -> Out {
    match cmd {
        Command::Roc { .. } => roc(s),
        Command::Tea { .. } => tea(s),
        Command::Replicate { .. } => replicate(s),
        Command::Sequential { .. } => sequential(s),
        Command::Bias { .. } => bias(s),
        Command::OptimizeLos { .. } => optimize_los(s),
        Command::SampleSize { .. } => sample_size(s),
        Command::Profile { .. } => profile(s),
        Command::Table1 { .. } => table1(),
    }
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

pub fn roc(s: &Scenario) -> Out {
    let model = s.model.build()?;
    let curve = RocCurve::tabulate(model.roc(), &unit_grid(s.roc.grid_points + 2))?;
    let mut t = Table::new("roc", &["alpha", "rho", "rho_prime"]);
    for i in 0..curve.alpha.len() {
        t.push(row![curve.alpha[i], curve.rho[i], curve.rho_prime[i]]);
    }
    Ok(vec![t])
}

pub fn tea(s: &Scenario) -> Out {
    let b = &s.tea;
    let (model, family, top) = match b.version {
        1 => (Model::TeaBinomial(TeaTastingBinomial::new(0.8)?), FamilyKind::TeaBinomial, 8),
        2 => (Model::TeaFisher(TeaTastingFisher::new(0.8)?), FamilyKind::TeaFisher, 4),
        v => return Err(CliError::Config(format!("tea version must be 1 or 2, got {v}"))),
    };
    if b.count > top {
        return Err(Error::Domain(format!("count {} outside support 0..={top}", b.count)).into());
    }
    let s_obs = b.count as f64;
    let p = p_functional(model.problem(), s_obs, b.u)?;
    let d = decide(&build_rule(model.problem(), b.alpha)?, s_obs, b.u)?;
    println!("version {} count {} u {}: d = {d}, p = {p:.4}", b.version, b.count, b.u);

    let mut report = Table::new("tea", &["version", "count", "u", "alpha", "p", "d"]);
    report.push(row![usize::from(b.version), b.count as usize, b.u, b.alpha, p, d]);

    let fam = ModelFamily::new(family, 0)?;
    let mut prof = Table::new("tea_profile", &["theta1", "rho_at_alpha", "l_d", "l_p"]);
    for &theta in &b.theta_grid {
        let roc = fam.roc_at(theta)?;
        let lp = if p > 0.0 && p < 1.0 { l_p(&*roc, p)? } else { f64::NAN };
        prof.push(row![theta, roc.rho(b.alpha), l_d(&*roc, d, b.alpha)?, lp]);
    }
    Ok(vec![report, prof])
}

fn base_rng(s: &Scenario) -> RngStream {
    RngStream::new(s.seed, 0)
}

pub fn replicate(s: &Scenario) -> Out {
    let b = &s.replicate;
    let template = match s.model {
        ModelSpec::TwoSample { mu0, mu1, sigma, n } => TwoSampleT::new(mu0, mu1, sigma, n)?,
        _ => return Err(CliError::Config("replicate needs a two_sample model".into())),
    };
    let lambda = b
        .lambda
        .ok_or_else(|| CliError::Config("replicate.lambda is required".into()))?;
    if b.meta_runs == 0 {
        return Err(CliError::Config("replicate.meta_runs must be at least 1".into()));
    }
    let base = base_rng(s);
    let runs: Vec<ReplicationStudy> = (0..b.meta_runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = base.substream(r as u64);
            run_replication_study(b.scientists, &template, lambda, b.alpha, s.truth, b.kappa0_init, &mut rng)
        })
        .collect::<nptruth_core::Result<_>>()?;

    let first = &runs[0];
    let mut per = Table::new(
        "replicate",
        &["m", "n", "statistic", "d", "p", "kappa0_by_d", "kappa0_by_p"],
    );
    for (i, r) in first.records.iter().enumerate() {
        per.push(row![i + 1, r.n, r.statistic, r.d, r.p, first.kappa0_by_d[i], first.kappa0_by_p[i]]);
    }
    let mut hist = Table::new("replicate_hist", &["bin_lo", "bin_hi", "count"]);
    for (k, c) in first.p_histogram.iter().enumerate() {
        hist.push(row![k as f64 / 10.0, (k + 1) as f64 / 10.0, *c]);
    }
    let mut meta = Table::new("replicate_meta", &["run", "rejections", "final_kappa0_by_d", "final_kappa0_by_p"]);
    for (r, run) in runs.iter().enumerate() {
        meta.push(row![
            r,
            run.rejections,
            *run.kappa0_by_d.last().unwrap_or(&b.kappa0_init),
            *run.kappa0_by_p.last().unwrap_or(&b.kappa0_init)
        ]);
    }
    println!(
        "{} runs, rejections in run 0: {} of {}",
        runs.len(),
        first.rejections,
        b.scientists
    );
    Ok(vec![per, hist, meta])
}

fn run_many<F>(s: &Scenario, one: F) -> Result<Vec<Trajectory>, CliError>
where
    F: Fn(&SequentialConfig, &mut RngStream) -> nptruth_core::Result<Trajectory> + Sync,
{
    let cfg = &s.sequential.config;
    cfg.validate()?;
    if s.sequential.runs == 0 {
        return Err(CliError::Config("sequential.runs must be at least 1".into()));
    }
    let base = base_rng(s);
    Ok((0..s.sequential.runs)
        .into_par_iter()
        .map(|r| one(cfg, &mut base.substream(r as u64)))
        .collect::<nptruth_core::Result<_>>()?)
}

fn trajectory_tables(prefix: &'static str, runs: &[Trajectory]) -> Vec<Table> {
    let (runs_name, traj_name) = match prefix {
        "bias" => ("bias_runs", "bias_trajectory"),
        _ => ("sequential_runs", "sequential_trajectory"),
    };
    let mut summary = Table::new(runs_name, &["run", "verdict", "studies", "published", "final_kappa0", "final_log_odds"]);
    for (r, t) in runs.iter().enumerate() {
        let published = t.steps.iter().filter(|st| st.published).count();
        summary.push(row![r, label(&t.verdict), t.studies(), published, t.final_kappa0(), t.final_log_odds]);
    }
    let mut steps = Table::new(
        traj_name,
        &["m", "n", "alpha", "channel", "payload", "log_lr", "published", "kappa0", "kappa0_unfiltered"],
    );
    for st in &runs[0].steps {
        steps.push(row![
            st.m,
            st.n,
            st.alpha,
            label(&st.channel),
            st.payload,
            st.log_lr,
            st.published,
            st.kappa0,
            st.kappa0_unfiltered
        ]);
    }
    vec![summary, steps]
}

fn report_verdicts(runs: &[Trajectory]) {
    let t = &runs[0];
    println!(
        "run 0: {} after {} studies, kappa0 = {}",
        label(&t.verdict),
        t.studies(),
        t.final_kappa0()
    );
}

pub fn sequential(s: &Scenario) -> Out {
    let model = s.model.build()?;
    let runs = run_many(s, |cfg, rng| run_sequential(cfg, s.truth, model.design(), rng))?;
    report_verdicts(&runs);
    Ok(trajectory_tables("sequential", &runs))
}

fn first_alpha(cfg: &SequentialConfig) -> f64 {
    match &cfg.los {
        LosPolicy::Fixed(a) => *a,
        LosPolicy::Sequence(v) => v.first().copied().unwrap_or(f64::NAN),
    }
}

pub fn bias(s: &Scenario) -> Out {
    let model = s.model.build()?;
    let gate = &s.bias.gate;
    gate.validate()?;
    let runs = run_many(s, |cfg, rng| run_biased_sequential(cfg, gate, s.truth, model.design(), rng))?;
    report_verdicts(&runs);

    let roc = model.roc();
    let alpha = first_alpha(&s.sequential.config);
    let rho = roc.rho(alpha);
    let mut sum = Table::new("bias_summary", &["quantity", "value"]);
    sum.push(row!["alpha", alpha]);
    sum.push(row!["rho", rho]);
    sum.push(row!["expected_v", expected_v(alpha, rho)?]);
    match gate {
        Gate::None => {}
        Gate::Decision(g) => {
            sum.push(row!["biased_size", biased_size(g, alpha)?]);
            sum.push(row!["biased_expected_v", biased_expected_v(g, alpha, rho)?]);
        }
        Gate::PValue(g) => {
            sum.push(row!["gate_integral", g.integral()]);
            sum.push(row!["biased_expected_log_rho_prime", biased_expected_logrho(g, roc)?]);
            sum.push(row!["rho_prime_unit_crossing", rho_prime_crossing(roc)?]);
        }
    }
    let mut tables = trajectory_tables("bias", &runs);
    tables.push(sum);
    Ok(tables)
}

fn solution_row(t: &mut Table, sol: &LosSolution) {
    t.push(row![
        label(&sol.method),
        sol.alpha_star,
        sol.power_at_alpha,
        label(&sol.status),
        sol.iterations,
        sol.residual
    ]);
}

pub fn optimize_los(s: &Scenario) -> Out {
    let model = s.model.build()?;
    let roc = model.roc();
    let b = &s.los;
    let mut t = Table::new("los", &["method", "alpha_star", "power", "status", "iterations", "residual"]);
    solution_row(&mut t, &los::solve_minimax(roc, &b.costs)?);
    solution_row(&mut t, &los::solve_bayes(roc, &b.costs, b.kappa0)?);
    solution_row(&mut t, &los::solve_discrimination(roc)?);

    let mut risk = Table::new("risk", &["alpha", "r0", "r1", "bayes_risk"]);
    for p in los::risk_curves(roc, &b.costs, b.kappa0, &unit_grid(b.grid_points + 2))? {
        risk.push(row![p.alpha, p.r0, p.r1, p.bayes]);
    }
    Ok(vec![t, risk])
}

pub fn sample_size(s: &Scenario) -> Out {
    let b = &s.sample_size;
    if !(b.sigma > 0.0 && b.sigma.is_finite()) {
        return Err(Error::Domain(format!("sigma must be positive, got {}", b.sigma)).into());
    }
    let effect = b.mu_diff / b.sigma;
    let mut t = Table::new(
        "sample_size",
        &["path", "n_star", "n_bar", "alpha_at_n", "rho_at_n", "log_odds_ratio", "design_alpha", "design_rho"],
    );
    let mut push = |path: &str, r: &los::SampleSize| {
        t.push(row![
            path,
            r.n_star,
            r.n_bar.unwrap_or(f64::NAN),
            r.alpha_at_n,
            r.rho_at_n,
            r.log_odds_ratio_at_n,
            r.design_alpha,
            r.design_rho
        ]);
    };
    if b.family == FamilyKind::Normal && b.method == SampleSizeMethod::Discrimination {
        let closed = los::sample_size_normal(b.b, effect)?;
        println!(
            "n* = {}, alpha = {:.4}, rho = {:.4}",
            closed.n_star, closed.design_alpha, closed.design_rho
        );
        push("closed_form", &closed);
    }
    let scan = los::sample_size(b.b, b.family, effect, b.method, b.n_max)?;
    push("scan", &scan);
    Ok(vec![t])
}

pub fn profile(s: &Scenario) -> Out {
    let b = &s.profile;
    let fam = ModelFamily::new(b.family, b.n)?;
    let g = contour_grid(&fam, b.kind, b.effect_range, b.logit_range, b.resolution)?;
    let mut t = Table::new("profile", &["effect", "logit", "level", "value"]);
    for (i, e) in g.effects.iter().enumerate() {
        for (j, l) in g.logits.iter().enumerate() {
            t.push(row![*e, *l, logistic(*l), g.values[i][j]]);
        }
    }
    Ok(vec![t])
}

pub fn table1() -> Out {
    let rows = los::table1_scenarios()
        .par_iter()
        .map(los::los_table_row)
        .collect::<nptruth_core::Result<Vec<_>>>()?;
    let mut t = Table::new(
        "table1",
        &["setting", "c01", "c10", "kappa0", "n", "xi", "alpha_m", "alpha_b", "alpha_d"],
    );
    for r in rows {
        let sc = r.scenario;
        t.push(row![sc.setting, sc.c01, sc.c10, sc.kappa0, sc.n, sc.xi, r.alpha_m, r.alpha_b, r.alpha_d]);
    }
    Ok(vec![t])
}
