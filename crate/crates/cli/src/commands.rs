//! Table-producing commands.

use std::time::Instant;

use rayon::prelude::*;
use renewal_cache::asymptotics::{
    asymptotic_miss_probability, finite_n_miss_approx, static_policy_asymptotic_miss, theta_star,
};
use renewal_cache::sim::{self, SimConfig, SimReport};
use renewal_cache::{Intensities, Limit, Model};
use serde::Serialize;

use crate::config::ExperimentSpec;
use crate::CliError;

/// One line of the long-format output table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment_id: String,
    pub policy: String,
    pub model: String,
    pub model_param: f64,
    pub beta: f64,
    /// Empty for limiting quantities.
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub c: f64,
    pub metric: String,
    pub value: f64,
    pub stderr: f64,
}

impl Row {
    fn new(spec: &ExperimentSpec, policy: &str, beta: f64, n: Option<usize>) -> Self {
        Self {
            experiment_id: spec.experiment_id.clone(),
            policy: policy.into(),
            model: spec.model.name().into(),
            model_param: spec.model.param(),
            beta,
            n,
            c: spec.c,
            metric: String::new(),
            value: 0.0,
            stderr: 0.0,
        }
    }

    fn metric(&self, metric: &str, value: f64, stderr: f64) -> Self {
        Self {
            metric: metric.into(),
            value,
            stderr,
            ..self.clone()
        }
    }
}

fn run_err(e: renewal_cache::Error) -> CliError {
    CliError::Run(e.to_string())
}

/// Limit threshold and miss probabilities over the β grid, plus the
/// finite-catalog estimate for each `N`.
pub fn analyze(spec: &ExperimentSpec) -> Result<Vec<Row>, CliError> {
    spec.validate()?;
    let model = Model::from_family(spec.model).map_err(run_err)?;
    let sizes = spec.sizes()?;
    let mut rows = Vec::new();
    for beta in spec.betas()? {
        rows.extend(analytic_rows(spec, &model, beta, &sizes)?);
    }
    Ok(rows)
}

fn analytic_rows(
    spec: &ExperimentSpec,
    model: &Model,
    beta: f64,
    sizes: &[usize],
) -> Result<Vec<Row>, CliError> {
    let limit = Limit::new(*model, beta, spec.c).map_err(run_err)?;
    let opt = Row::new(spec, "optimal", beta, None);
    let mut rows = vec![
        opt.metric("theta_star", theta_star(&limit).map_err(run_err)?, 0.0),
        opt.metric(
            "miss_asymptotic",
            asymptotic_miss_probability(&limit).map_err(run_err)?.value,
            0.0,
        ),
        Row::new(spec, "static", beta, None).metric(
            "miss_static",
            static_policy_asymptotic_miss(beta, spec.c).map_err(run_err)?,
            0.0,
        ),
    ];
    for &n in sizes {
        let iv = Intensities::zipf(n, beta).map_err(run_err)?;
        let miss = finite_n_miss_approx(&limit, &iv).map_err(run_err)?.value;
        rows.push(Row::new(spec, "optimal", beta, Some(n)).metric("miss_finite_N", miss, 0.0));
    }
    Ok(rows)
}

/// Simulation configs of every (policy, β, N) cell, in output order.
pub fn cells(spec: &ExperimentSpec) -> Result<Vec<SimConfig>, CliError> {
    spec.validate_sim()?;
    let mut out = Vec::new();
    for policy in spec.policy_specs()? {
        for beta in spec.betas()? {
            for n in spec.sizes()? {
                out.push(SimConfig {
                    model: spec.model,
                    beta,
                    n,
                    c: spec.c,
                    policy,
                    horizon_events: spec.horizon_events,
                    warmup_events: spec.warmup_events,
                    master_seed: spec.seed,
                    replications: spec.replications,
                    snapshot_times: spec.snapshot_times.clone(),
                    occupancy_samples: spec.occupancy_samples,
                });
            }
        }
    }
    Ok(out)
}

fn sim_rows(spec: &ExperimentSpec, rep: &SimReport) -> Vec<Row> {
    let cfg = &rep.config;
    let base = Row::new(spec, cfg.policy.name(), cfg.beta, Some(cfg.n));
    let mut rows = vec![
        base.metric("miss_probability", rep.miss_probability, rep.miss_probability_stderr),
        base.metric("miss_rate", rep.miss_rate_per_time, rep.miss_rate_stderr),
        base.metric("arrival_rate", rep.arrival_rate, 0.0),
    ];
    if let Some(theta) = rep.theta {
        rows.push(base.metric("theta", theta, 0.0));
    }
    if let Some(u) = rep.mean_occupancy() {
        rows.push(base.metric("mean_occupancy", u, 0.0));
    }
    if let Some(t) = rep.mean_threshold() {
        rows.push(base.metric("mean_threshold_trace", t, 0.0));
    }
    rows
}

/// Run every cell; cells run concurrently and keep their order.
pub fn run_cells(spec: &ExperimentSpec) -> Result<Vec<SimReport>, CliError> {
    let cells = cells(spec)?;
    cells
        .par_iter()
        .map(|cfg| {
            let start = Instant::now();
            let rep = sim::run(cfg).map_err(|e| match e {
                renewal_cache::Error::InvalidConfig(m) => CliError::Config(m),
                other => run_err(other),
            })?;
            log_cell(cfg, &rep, start.elapsed().as_secs_f64());
            Ok(rep)
        })
        .collect()
}

fn log_cell(cfg: &SimConfig, rep: &SimReport, secs: f64) {
    eprintln!(
        "{} beta={} N={}: miss {:.6} ± {:.6} ({} arrivals, {:.2}s)",
        cfg.policy, cfg.beta, cfg.n, rep.miss_probability, rep.miss_probability_stderr, rep.arrivals, secs
    );
}

pub fn simulate(spec: &ExperimentSpec) -> Result<(Vec<Row>, Vec<SimReport>), CliError> {
    let reports = run_cells(spec)?;
    let rows = reports.iter().flat_map(|r| sim_rows(spec, r)).collect();
    Ok((rows, reports))
}

/// Simulation rows followed by the analytic rows of every (β, N) cell.
pub fn sweep(spec: &ExperimentSpec) -> Result<(Vec<Row>, Vec<SimReport>), CliError> {
    let (mut rows, reports) = simulate(spec)?;
    let model = Model::from_family(spec.model).map_err(run_err)?;
    let sizes = spec.sizes()?;
    for beta in spec.betas()? {
        rows.extend(analytic_rows(spec, &model, beta, &sizes)?);
    }
    Ok((rows, reports))
}
