//! End-to-end self checks run by `rcache validate`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use renewal_cache::asymptotics::{
    asymptotic_miss_probability, theta_star_bisection, theta_star_pareto, g_infinity_quadrature,
};
use renewal_cache::ecdf::ks_statistic;
use renewal_cache::policy::{threshold_from_capacity, threshold_timers, PolicyKind, PolicySpec};
use renewal_cache::sim::{self, decision_sequences, SimConfig};
use renewal_cache::{Intensities, Limit, Model, ModelFamily};

pub const KS_DRAWS: usize = 100_000;
pub const KS_MAX: f64 = 0.01;
pub const MEAN_TOL: f64 = 0.02;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: String) -> Self {
        Self {
            name: name.into(),
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        format!("[{tag}] {}: {}", self.name, self.detail)
    }
}

/// KS distance of `draws` samples to `cdf`.
pub fn check_ks(
    name: &str,
    mut sampler: impl FnMut(&mut ChaCha8Rng) -> f64,
    cdf: impl Fn(f64) -> f64,
    seed: u64,
) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..KS_DRAWS).map(|_| sampler(&mut rng)).collect();
    let d = ks_statistic(xs, cdf);
    Check::new(name, d < KS_MAX, format!("KS {d:.5} (limit {KS_MAX})"))
}

/// Sample mean within [`MEAN_TOL`] of 1.
pub fn check_unit_mean(name: &str, mut sampler: impl FnMut(&mut ChaCha8Rng) -> f64, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = (0..KS_DRAWS).map(|_| sampler(&mut rng)).sum::<f64>() / KS_DRAWS as f64;
    Check::new(
        name,
        (mean - 1.0).abs() < MEAN_TOL,
        format!("sample mean {mean:.5} (target 1 ± {MEAN_TOL})"),
    )
}

fn model(f: ModelFamily) -> Model {
    Model::from_family(f).expect("valid model")
}

pub fn distribution_checks(seed: u64) -> Vec<Check> {
    let mut out = Vec::new();
    for (i, fam) in [
        ModelFamily::Pareto { alpha: 2.0 },
        ModelFamily::Erlang { k: 4 },
        ModelFamily::Exponential,
    ]
    .into_iter()
    .enumerate()
    {
        let m = model(fam);
        let s = seed.wrapping_add(10 * i as u64);
        let tag = format!("{}{}", fam.name(), fam.param());
        out.push(check_ks(
            &format!("ks_interarrival_{tag}"),
            |r| m.sample_interarrival(r),
            |t| m.cdf(t).unwrap_or(0.0),
            s,
        ));
        out.push(check_ks(
            &format!("ks_age_{tag}"),
            |r| m.sample_age(r),
            |t| m.age_cdf(t).unwrap_or(0.0),
            s + 1,
        ));
    }
    for (i, fam) in [
        ModelFamily::Pareto { alpha: 3.0 },
        ModelFamily::Erlang { k: 4 },
        ModelFamily::Exponential,
    ]
    .into_iter()
    .enumerate()
    {
        let m = model(fam);
        out.push(check_unit_mean(
            &format!("unit_mean_{}{}", fam.name(), fam.param()),
            |r| m.sample_interarrival(r),
            seed.wrapping_add(100 + i as u64),
        ));
    }
    out
}

fn closed_form_checks() -> Vec<Check> {
    let p = model(ModelFamily::Pareto { alpha: 2.0 });
    let mut out = vec![Check::new(
        "pareto_ohr_closed_form",
        p.ohr_cdf(1.0) == 0.5 && p.ohr_cdf_sync(1.0) == 0.25,
        format!("G(1) = {}, G0(1) = {}", p.ohr_cdf(1.0), p.ohr_cdf_sync(1.0)),
    )];
    let table = [
        (0.0, 0.81),
        (0.25, 0.7621585769994558),
        (0.5, 0.6348516283298892),
        (0.75, 0.404272831666749),
        (0.9, 0.18909493457977522),
    ];
    let worst = table
        .iter()
        .map(|&(beta, want)| {
            let l = Limit::new(p, beta, 0.1).expect("valid limit");
            (asymptotic_miss_probability(&l).expect("miss").value - want).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::new(
        "pareto_miss_curve",
        worst < 1e-6,
        format!("max deviation {worst:.3e} over 5 reference points"),
    ));
    let l = Limit::new(p, 0.5, 0.1).expect("valid limit");
    let numeric = theta_star_bisection(&l, |x| g_infinity_quadrature(&p, 0.5, x));
    let closed = theta_star_pareto(2.0, 0.5, 0.1);
    let ok = numeric.as_ref().is_ok_and(|t| (t - closed).abs() < 1e-6 * closed);
    out.push(Check::new(
        "theta_star_quadrature",
        ok,
        format!("closed {closed:.9}, quadrature {numeric:?}"),
    ));
    let worst = [
        ModelFamily::Pareto { alpha: 1.5 },
        ModelFamily::Pareto { alpha: 2.0 },
        ModelFamily::Erlang { k: 4 },
        ModelFamily::Exponential,
    ]
    .iter()
    .flat_map(|&f| {
        let m = model(f);
        (0..=1000).map(move |i| {
            let x = 0.01 * f64::from(i);
            m.ohr_cdf_sync(x) - x
        })
    })
    .fold(f64::NEG_INFINITY, f64::max);
    out.push(Check::new(
        "sync_ohr_below_identity",
        worst <= 0.0,
        format!("max G0(x) − x = {worst:.3e}"),
    ));
    out
}

fn timer_checks(seed: u64) -> Vec<Check> {
    let events = 100_000;
    [(ModelFamily::Pareto { alpha: 2.0 }, true), (ModelFamily::Erlang { k: 4 }, false)]
        .into_iter()
        .map(|(fam, ttl)| {
            let m = model(fam);
            let iv = Intensities::zipf(500, 0.5).expect("zipf");
            let theta = threshold_from_capacity(&iv, &m, 50).expect("threshold");
            let timers = threshold_timers(&iv, &m, theta).expect("timers");
            let (name, timer_policy) = if ttl {
                ("timer_equivalence_ttl", PolicyKind::TtlCache { timers })
            } else {
                ("timer_equivalence_prefetch", PolicyKind::TtlPrefetch { timers })
            };
            let seqs = decision_sequences(
                &m,
                &iv,
                &[PolicyKind::FixedThreshold { theta }, timer_policy],
                events,
                seed,
            )
            .expect("sequences");
            let diffs = seqs[0].iter().zip(&seqs[1]).filter(|(a, b)| a != b).count();
            Check::new(
                format!("{name}_{}", fam.name()),
                diffs == 0,
                format!("{diffs} differing decisions in {events}"),
            )
        })
        .collect()
}

fn occupancy_check(seed: u64) -> Check {
    let n = 10_000;
    let mut cfg = SimConfig::new(
        ModelFamily::Pareto { alpha: 2.0 },
        0.5,
        n,
        0.1,
        PolicySpec::Threshold { theta: None },
    );
    cfg.horizon_events = 2_000_000;
    cfg.occupancy_samples = 1000;
    cfg.master_seed = seed;
    match sim::run(&cfg) {
        Ok(rep) => {
            let fracs: Vec<f64> = rep
                .occupancy_series
                .iter()
                .map(|s| s.occupancy as f64 / n as f64)
                .collect();
            let worst = fracs.iter().map(|f| (f - 0.1).abs()).fold(0.0, f64::max);
            let mean = fracs.iter().sum::<f64>() / fracs.len() as f64;
            Check::new(
                "hoeffding_occupancy",
                fracs.len() == 1000 && worst <= 0.02 && (mean - 0.1).abs() < 0.001,
                format!("{} samples, max |U/N − c| {worst:.4}, mean {mean:.5}", fracs.len()),
            )
        }
        Err(e) => Check::new("hoeffding_occupancy", false, e.to_string()),
    }
}

fn leave_one_out_check(seed: u64) -> Check {
    let mut cfg = SimConfig::new(ModelFamily::Pareto { alpha: 2.0 }, 0.5, 1000, 0.1, PolicySpec::Lru);
    cfg.horizon_events = 20_000;
    cfg.snapshot_times = vec![1.0, 4.0];
    cfg.master_seed = seed;
    match sim::run(&cfg) {
        Ok(rep) => {
            // exact: num / den ≤ 1/N  ⇔  num · N ≤ den
            let mut ok = !rep.ghat_snapshots.is_empty();
            let mut worst: f64 = 0.0;
            for s in &rep.ghat_snapshots {
                let n = s.ghat.len() as u128;
                for i in 0..s.ghat.len() {
                    let (num, den) = s.ghat.sup_distance_exact(&s.ghat.without_rank(i));
                    ok &= num * n <= den;
                    worst = worst.max(num as f64 * n as f64 / den as f64);
                }
            }
            Check::new(
                "leave_one_out",
                ok,
                format!("max N · sup distance {worst:.6} (bound 1)"),
            )
        }
        Err(e) => Check::new("leave_one_out", false, e.to_string()),
    }
}

/// All checks, in a fixed order.
pub fn run_all(seed: u64) -> Vec<Check> {
    let mut out = closed_form_checks();
    out.extend(distribution_checks(seed));
    out.extend(timer_checks(seed));
    out.push(occupancy_check(seed));
    out.push(leave_one_out_check(seed));
    out
}
