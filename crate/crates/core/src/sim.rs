//! Discrete-event engine and replication runner.
//!
//! Miss statistics are taken at arrival epochs. Occupancy, the threshold
//! trace and `Ĝ_N` snapshots are taken at times drawn independently of the
//! arrivals.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::{InterArrivalModel, ModelFamily};
use crate::ecdf::EmpiricalCdf;
use crate::error::{Error, Result};
use crate::policy::{Decision, PolicyKind, PolicySpec, PolicyState};
use crate::popularity::IntensityVector;
use crate::process::SourceSet;
use crate::scalar::Real;

/// Number of batches for the within-replication standard error.
pub const BATCHES: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub model: ModelFamily,
    pub beta: f64,
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    /// Capacity as a fraction of the catalog; `C = round(c N)`.
    pub c: f64,
    pub policy: PolicySpec,
    pub horizon_events: u64,
    /// Defaults to a tenth of the horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_events: Option<u64>,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "one")]
    pub replications: usize,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
    #[serde(default)]
    pub occupancy_samples: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(model: ModelFamily, beta: f64, n: usize, c: f64, policy: PolicySpec) -> Self {
        Self {
            model,
            beta,
            n,
            c,
            policy,
            horizon_events: 100_000,
            warmup_events: None,
            master_seed: 0,
            replications: 1,
            snapshot_times: Vec::new(),
            occupancy_samples: 0,
        }
    }

    pub fn warmup(&self) -> u64 {
        self.warmup_events.unwrap_or(self.horizon_events / 10)
    }

    pub fn capacity(&self) -> usize {
        (self.c * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::InvalidConfig(format!("{field}: {msg}")));
        if self.n == 0 {
            return bad("N", "must be >= 1".into());
        }
        if !(self.beta >= 0.0) || !self.beta.is_finite() {
            return bad("beta", format!("must be finite and >= 0, got {}", self.beta));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return bad("c", format!("must lie in (0, 1], got {}", self.c));
        }
        let cap = self.capacity();
        if cap == 0 || cap > self.n {
            return bad("c", format!("capacity round(cN) = {cap} outside 1..={}", self.n));
        }
        if self.horizon_events <= self.warmup() {
            return bad(
                "horizon_events",
                format!("must exceed warmup_events = {}", self.warmup()),
            );
        }
        if self.replications == 0 {
            return bad("replications", "must be >= 1".into());
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
            return bad("snapshot_times", format!("must be finite and >= 0, got {t}"));
        }
        InterArrivalModel::<f64>::from_family(self.model)
            .map_err(|e| Error::InvalidConfig(format!("model: {e}")))?;
        Ok(())
    }

    /// True iff the two configs differ at most in seed and replication count.
    pub fn compatible(&self, other: &Self) -> bool {
        let strip = |c: &Self| Self {
            master_seed: 0,
            replications: 1,
            ..c.clone()
        };
        strip(self) == strip(other)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ItemCounts {
    pub arrivals: u64,
    pub misses: u64,
}

impl ItemCounts {
    pub fn miss_ratio(&self) -> f64 {
        if self.arrivals == 0 {
            0.0
        } else {
            self.misses as f64 / self.arrivals as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSample {
    pub replication: usize,
    pub t: f64,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GhatSnapshot {
    pub replication: usize,
    pub t: f64,
    pub ghat: EmpiricalCdf<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancySample {
    pub replication: usize,
    pub t: f64,
    pub occupancy: usize,
}

/// Totals of one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationSummary {
    pub index: usize,
    pub master_seed: u64,
    pub arrivals: u64,
    pub misses: u64,
    /// Length of the measured window, first to last counted arrival.
    pub observed_time: f64,
    /// Miss probability in each of [`BATCHES`] consecutive event batches.
    pub batch_miss_probabilities: Vec<f64>,
}

impl ReplicationSummary {
    pub fn miss_probability(&self) -> f64 {
        self.misses as f64 / self.arrivals as f64
    }

    pub fn miss_rate(&self) -> f64 {
        self.misses as f64 / self.observed_time
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub capacity: usize,
    /// Threshold in use for threshold and timer policies.
    pub theta: Option<f64>,
    pub per_item: Vec<ItemCounts>,
    pub arrivals: u64,
    pub misses: u64,
    pub observed_time: f64,
    pub miss_probability: f64,
    pub miss_probability_stderr: f64,
    /// `λ̂^N`: counted arrivals per unit of observed time.
    pub arrival_rate: f64,
    pub miss_rate_per_time: f64,
    pub miss_rate_stderr: f64,
    pub threshold_trace: Vec<ThresholdSample>,
    pub ghat_snapshots: Vec<GhatSnapshot>,
    pub occupancy_series: Vec<OccupancySample>,
    pub replications: Vec<ReplicationSummary>,
}

impl SimReport {
    /// Mean of the sampled `θ̂_N`.
    pub fn mean_threshold(&self) -> Option<f64> {
        mean(self.threshold_trace.iter().map(|s| s.theta))
    }

    pub fn mean_occupancy(&self) -> Option<f64> {
        mean(self.occupancy_series.iter().map(|s| s.occupancy as f64))
    }

    fn from_parts(
        config: SimConfig,
        capacity: usize,
        theta: Option<f64>,
        reps: Vec<(ReplicationSummary, RepDetail)>,
    ) -> Self {
        let n = config.n;
        let mut per_item = vec![ItemCounts::default(); n];
        let mut threshold_trace = Vec::new();
        let mut ghat_snapshots = Vec::new();
        let mut occupancy_series = Vec::new();
        let mut summaries = Vec::with_capacity(reps.len());
        for (summary, detail) in reps {
            for (acc, c) in per_item.iter_mut().zip(&detail.per_item) {
                acc.arrivals += c.arrivals;
                acc.misses += c.misses;
            }
            threshold_trace.extend(detail.threshold_trace);
            ghat_snapshots.extend(detail.ghat_snapshots);
            occupancy_series.extend(detail.occupancy_series);
            summaries.push(summary);
        }
        let arrivals: u64 = summaries.iter().map(|s| s.arrivals).sum();
        let misses: u64 = summaries.iter().map(|s| s.misses).sum();
        let observed_time: f64 = summaries.iter().map(|s| s.observed_time).sum();
        let (p_se, r_se) = standard_errors(&summaries);
        Self {
            config,
            capacity,
            theta,
            per_item,
            arrivals,
            misses,
            observed_time,
            miss_probability: misses as f64 / arrivals as f64,
            miss_probability_stderr: p_se,
            arrival_rate: arrivals as f64 / observed_time,
            miss_rate_per_time: misses as f64 / observed_time,
            miss_rate_stderr: r_se,
            threshold_trace,
            ghat_snapshots,
            occupancy_series,
            replications: summaries,
        }
    }
}

fn mean(it: impl Iterator<Item = f64>) -> Option<f64> {
    let (s, k) = it.fold((0.0, 0usize), |(s, k), x| (s + x, k + 1));
    (k > 0).then(|| s / k as f64)
}

/// Standard error of the mean of `xs`.
fn stderr_of(xs: &[f64]) -> f64 {
    let k = xs.len();
    if k < 2 {
        return 0.0;
    }
    let m = xs.iter().sum::<f64>() / k as f64;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1) as f64;
    (var / k as f64).sqrt()
}

/// Between-replication standard errors of the miss probability and miss
/// rate; batch means when there is a single replication.
fn standard_errors(reps: &[ReplicationSummary]) -> (f64, f64) {
    if reps.len() >= 2 {
        let p: Vec<f64> = reps.iter().map(ReplicationSummary::miss_probability).collect();
        let r: Vec<f64> = reps.iter().map(ReplicationSummary::miss_rate).collect();
        (stderr_of(&p), stderr_of(&r))
    } else if let Some(rep) = reps.first() {
        let se = stderr_of(&rep.batch_miss_probabilities);
        // rate = λ̂ · probability
        (se, se * rep.arrivals as f64 / rep.observed_time)
    } else {
        (0.0, 0.0)
    }
}

#[derive(Default)]
struct RepDetail {
    per_item: Vec<ItemCounts>,
    threshold_trace: Vec<ThresholdSample>,
    ghat_snapshots: Vec<GhatSnapshot>,
    occupancy_series: Vec<OccupancySample>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Probe {
    Occupancy,
    Snapshot,
}

/// Random stream `s` of the master seed.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Step cdf of the current OHRs `{X_i(t)}`.
pub fn empirical_ghat<T: Real>(set: &SourceSet<T>, t: T) -> EmpiricalCdf<T> {
    EmpiricalCdf::new(set.intensities_at(t))
}

/// `θ̂_N(t) = Y_{N−C}`, the `(N−C)`-th smallest current OHR; the minimum when
/// `C ≥ N − 1`.
pub fn threshold_at<T: Real>(set: &SourceSet<T>, t: T, capacity: usize) -> T {
    let mut x = set.intensities_at(t);
    let k = x.len().saturating_sub(capacity).saturating_sub(1);
    let (_, v, _) = x.select_nth_unstable_by(k, |a, b| a.partial_cmp(b).unwrap());
    *v
}

/// Run all replications of `config` and pool them.
pub fn run(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let model = InterArrivalModel::<f64>::from_family(config.model)?;
    let iv = IntensityVector::zipf(config.n, config.beta)?;
    let capacity = config.capacity();
    let kind = config
        .policy
        .resolve(&iv, &model, capacity)
        .map_err(|e| Error::InvalidConfig(format!("policy: {e}")))?;
    let theta = match config.policy {
        PolicySpec::Threshold { theta } | PolicySpec::Ttl { theta } | PolicySpec::Prefetch { theta } => {
            Some(match theta {
                Some(t) => t,
                None => crate::policy::threshold_from_capacity(&iv, &model, capacity)?,
            })
        }
        _ => None,
    };
    let reps = (0..config.replications)
        .into_par_iter()
        .map(|r| run_replication(config, &model, &iv, &kind, capacity, r))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimReport::from_parts(config.clone(), capacity, theta, reps))
}

fn run_replication(
    config: &SimConfig,
    model: &InterArrivalModel<f64>,
    iv: &IntensityVector<f64>,
    kind: &PolicyKind<f64>,
    capacity: usize,
    r: usize,
) -> Result<(ReplicationSummary, RepDetail)> {
    let n = config.n;
    let mut events = stream_rng(config.master_seed, 2 * r as u64);
    let mut probes_rng = stream_rng(config.master_seed, 2 * r as u64 + 1);

    let warmup = config.warmup();
    let horizon = config.horizon_events;
    let total_rate = iv.total_rate();
    let (lo, hi) = (warmup as f64 / total_rate, horizon as f64 / total_rate);
    let mut probes: Vec<(f64, Probe)> = (0..config.occupancy_samples)
        .map(|_| (probes_rng.random_range(lo..=hi), Probe::Occupancy))
        .chain(config.snapshot_times.iter().map(|&t| (t, Probe::Snapshot)))
        .collect();
    probes.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut set = SourceSet::stationary(*model, iv, &mut events);
    let mut policy = PolicyState::new(kind.clone(), n)?;
    let mut detail = RepDetail {
        per_item: vec![ItemCounts::default(); n],
        ..RepDetail::default()
    };

    let counted = horizon - warmup;
    let batch_len = counted.div_ceil(BATCHES as u64);
    let mut batch_counts = vec![(0u64, 0u64); BATCHES];
    let (mut arrivals, mut misses) = (0u64, 0u64);
    let (mut t_start, mut t_end) = (0.0, 0.0);
    let mut next_probe = 0;
    let mut processed = 0u64;
    // After the horizon the system keeps running, without statistics, until
    // pending probes are served or another horizon has elapsed.
    let limit = horizon.saturating_mul(2);

    while processed < limit && (processed < horizon || next_probe < probes.len()) {
        let t_next = set.peek_time().expect("nonempty source set");
        while next_probe < probes.len() && probes[next_probe].0 < t_next {
            let (t, probe) = probes[next_probe];
            match probe {
                Probe::Occupancy => {
                    detail.occupancy_series.push(OccupancySample {
                        replication: r,
                        t,
                        occupancy: policy.occupancy(model, set.sources(), t),
                    });
                    detail.threshold_trace.push(ThresholdSample {
                        replication: r,
                        t,
                        theta: threshold_at(&set, t, capacity),
                    });
                }
                Probe::Snapshot => detail.ghat_snapshots.push(GhatSnapshot {
                    replication: r,
                    t,
                    ghat: empirical_ghat(&set, t),
                }),
            }
            next_probe += 1;
        }
        if processed >= horizon && next_probe >= probes.len() {
            break;
        }
        let a = set.pop().expect("nonempty source set");
        let decision = policy.decide(model, set.sources(), a.item, a.time);
        if processed >= warmup && processed < horizon {
            let miss = u64::from(decision == Decision::Miss);
            if processed == warmup {
                t_start = a.time;
            }
            t_end = a.time;
            arrivals += 1;
            misses += miss;
            let c = &mut detail.per_item[a.item];
            c.arrivals += 1;
            c.misses += miss;
            let b = &mut batch_counts[((processed - warmup) / batch_len) as usize];
            b.0 += 1;
            b.1 += miss;
        }
        set.complete(a, &mut events);
        processed += 1;
    }

    let summary = ReplicationSummary {
        index: r,
        master_seed: config.master_seed,
        arrivals,
        misses,
        observed_time: t_end - t_start,
        batch_miss_probabilities: batch_counts
            .iter()
            .filter(|b| b.0 > 0)
            .map(|&(a, m)| m as f64 / a as f64)
            .collect(),
    };
    Ok((summary, detail))
}

/// Pool reports of compatible configs. Replications are concatenated in the
/// given order and standard errors recomputed across all of them.
pub fn aggregate(reports: &[SimReport]) -> Result<SimReport> {
    let first = reports
        .first()
        .ok_or_else(|| Error::InvalidParameter("no reports to aggregate".into()))?;
    if let Some(bad) = reports.iter().find(|r| !first.config.compatible(&r.config)) {
        return Err(Error::ConfigMismatch(format!(
            "{:?} vs {:?}",
            first.config, bad.config
        )));
    }
    let n = first.config.n;
    let mut per_item = vec![ItemCounts::default(); n];
    for rep in reports {
        for (acc, c) in per_item.iter_mut().zip(&rep.per_item) {
            acc.arrivals += c.arrivals;
            acc.misses += c.misses;
        }
    }
    let summaries: Vec<ReplicationSummary> =
        reports.iter().flat_map(|r| r.replications.iter().cloned()).collect();
    let arrivals: u64 = summaries.iter().map(|s| s.arrivals).sum();
    let misses: u64 = summaries.iter().map(|s| s.misses).sum();
    let observed_time: f64 = summaries.iter().map(|s| s.observed_time).sum();
    let (p_se, r_se) = standard_errors(&summaries);
    let mut config = first.config.clone();
    config.replications = summaries.len();
    Ok(SimReport {
        config,
        capacity: first.capacity,
        theta: first.theta,
        per_item,
        arrivals,
        misses,
        observed_time,
        miss_probability: misses as f64 / arrivals as f64,
        miss_probability_stderr: p_se,
        arrival_rate: arrivals as f64 / observed_time,
        miss_rate_per_time: misses as f64 / observed_time,
        miss_rate_stderr: r_se,
        threshold_trace: reports.iter().flat_map(|r| r.threshold_trace.clone()).collect(),
        ghat_snapshots: reports.iter().flat_map(|r| r.ghat_snapshots.clone()).collect(),
        occupancy_series: reports.iter().flat_map(|r| r.occupancy_series.clone()).collect(),
        replications: summaries,
    })
}

/// Run several policies on one shared arrival stream from a stationary
/// start; returns each policy's decision sequence over `events` arrivals.
pub fn decision_sequences(
    model: &InterArrivalModel<f64>,
    iv: &IntensityVector<f64>,
    policies: &[PolicyKind<f64>],
    events: usize,
    seed: u64,
) -> Result<Vec<Vec<Decision>>> {
    let mut rng = stream_rng(seed, 0);
    let mut set = SourceSet::stationary(*model, iv, &mut rng);
    let mut states = policies
        .iter()
        .map(|k| PolicyState::new(k.clone(), iv.len()))
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(events); policies.len()];
    for _ in 0..events {
        let a = set.pop().expect("nonempty source set");
        for (st, seq) in states.iter_mut().zip(out.iter_mut()) {
            seq.push(st.decide(model, set.sources(), a.item, a.time));
        }
        set.complete(a, &mut rng);
    }
    Ok(out)
}
