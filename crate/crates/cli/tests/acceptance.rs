//! One line per acceptance criterion; nonzero exit if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use renewal_cache::asymptotics::{
    asymptotic_miss_probability, finite_n_miss_approx, g_infinity, theta_star, LimitSpec,
};
use renewal_cache::dist::{HazardMonotonicity, InterArrivalModel, ModelFamily};
use renewal_cache::policy::{
    mean_ohr_quantile, threshold_from_capacity, threshold_timers, PolicyKind, PolicySpec,
};
use renewal_cache::popularity::IntensityVector;
use renewal_cache::sim::{self, decision_sequences, SimConfig};

const PARETO2: ModelFamily = ModelFamily::Pareto { alpha: 2.0 };
const ERLANG4: ModelFamily = ModelFamily::Erlang { k: 4 };

fn model(f: ModelFamily) -> InterArrivalModel<f64> {
    InterArrivalModel::from_family(f).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn rcache(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_rcache"))
        .args(args)
        .output()
        .expect("rcache runs")
}

fn ac1() -> Outcome {
    let m = model(PARETO2);
    let (g, g0) = (m.ohr_cdf(1.0), m.ohr_cdf_sync(1.0));
    outcome(g == 0.5 && g0 == 0.25, format!("G(1) = {g}, G0(1) = {g0}"))
}

fn ac2() -> Outcome {
    let start = Instant::now();
    let o = rcache(&["analyze", "--model", "pareto:2", "--c", "0.1", "--beta", "0,0.25,0.5,0.75,0.9"]);
    let elapsed = start.elapsed();
    if !o.status.success() {
        return outcome(false, String::from_utf8_lossy(&o.stderr).into_owned());
    }
    let want = [
        (0.0, 0.81),
        (0.25, 0.7621585769994558),
        (0.5, 0.6348516283298892),
        (0.75, 0.404272831666749),
        (0.9, 0.18909493457977522),
    ];
    let mut rdr = csv::Reader::from_reader(o.stdout.as_slice());
    let got: Vec<(f64, f64)> = rdr
        .records()
        .map(Result::unwrap)
        .filter(|r| &r[7] == "miss_asymptotic")
        .map(|r| (r[4].parse().unwrap(), r[8].parse().unwrap()))
        .collect();
    let worst = want
        .iter()
        .map(|&(b, v)| {
            got.iter()
                .find(|g| g.0 == b)
                .map_or(f64::INFINITY, |g| (g.1 - v).abs())
        })
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-6 && elapsed < Duration::from_secs(1),
        format!("max deviation {worst:.2e} (tol 1e-6), {:.3} s", elapsed.as_secs_f64()),
    )
}

fn ac3() -> Outcome {
    let spec = LimitSpec::new(model(PARETO2), 0.5, 0.1).unwrap();
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, tol) in [(100usize, 0.1), (1000, 0.05)] {
        let mut cfg = SimConfig::new(PARETO2, 0.5, n, 0.1, PolicySpec::Lru);
        cfg.horizon_events = 10 * n as u64;
        cfg.snapshot_times = vec![1.0];
        let rep = sim::run(&cfg).unwrap();
        let d = rep.ghat_snapshots[0].ghat.sup_distance_to(|x| g_infinity(&spec, x));
        ok &= d < tol;
        parts.push(format!("N={n}: {d:.4} (< {tol})"));
    }
    outcome(ok, parts.join(", "))
}

fn ac4() -> Outcome {
    let spec = LimitSpec::new(model(PARETO2), 0.5, 0.1).unwrap();
    let target = theta_star(&spec).unwrap();
    let mut cfg = SimConfig::new(PARETO2, 0.5, 10_000, 0.1, PolicySpec::Static);
    cfg.horizon_events = 500_000;
    cfg.occupancy_samples = 400;
    cfg.master_seed = 2;
    let rep = sim::run(&cfg).unwrap();
    let mean = rep.mean_threshold().unwrap();
    let rel = (mean - target).abs() / target;
    outcome(
        rel < 0.02,
        format!("mean θ̂ {mean:.4} vs θ* {target:.4}, relative error {rel:.4} (< 0.02)"),
    )
}

fn simulate_miss(fam: ModelFamily, beta: f64, policy: PolicySpec, seed: u64) -> (f64, f64) {
    let mut cfg = SimConfig::new(fam, beta, 1000, 0.1, policy);
    cfg.horizon_events = 1_000_000;
    cfg.master_seed = seed;
    let rep = sim::run(&cfg).unwrap();
    (rep.miss_probability, rep.miss_probability_stderr)
}

fn ac5() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for (i, beta) in [0.2, 0.5, 0.8].into_iter().enumerate() {
        let spec = LimitSpec::new(model(PARETO2), beta, 0.1).unwrap();
        let iv = IntensityVector::zipf(1000, beta).unwrap();
        let approx = finite_n_miss_approx(&spec, &iv).unwrap().value;
        let asym = asymptotic_miss_probability(&spec).unwrap().value;
        let (sim, _) = simulate_miss(PARETO2, beta, PolicySpec::Optimal, 10 + i as u64);
        ok &= (sim - approx).abs() <= 0.02;
        if beta == 0.8 {
            ok &= sim > asym;
        }
        parts.push(format!("β={beta}: sim {sim:.4}, finite-N {approx:.4}, limit {asym:.4}"));
    }
    outcome(ok, parts.join("; "))
}

fn ac6() -> Outcome {
    let spec = LimitSpec::new(model(ERLANG4), 0.5, 0.1).unwrap();
    let iv = IntensityVector::zipf(1000, 0.5).unwrap();
    let approx = finite_n_miss_approx(&spec, &iv).unwrap().value;
    let asym = asymptotic_miss_probability(&spec).unwrap().value;
    let (opt, _) = simulate_miss(ERLANG4, 0.5, PolicySpec::Optimal, 20);
    let (lru, _) = simulate_miss(ERLANG4, 0.5, PolicySpec::Lru, 21);
    let ok = (opt - 0.607).abs() <= 0.02
        && (lru - 0.944).abs() <= 0.02
        && (approx - 0.610).abs() <= 0.002
        && (asym - 0.596).abs() <= 0.002;
    outcome(
        ok,
        format!("optimal {opt:.4}, lru {lru:.4}, finite-N {approx:.4}, limit {asym:.4}"),
    )
}

fn ac7() -> Outcome {
    let events = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for fam in [PARETO2, ERLANG4] {
        let m = model(fam);
        let iv = IntensityVector::zipf(1000, 0.5).unwrap();
        let theta = threshold_from_capacity(&iv, &m, 100).unwrap();
        let timers = threshold_timers(&iv, &m, theta).unwrap();
        let timer_policy = match m.monotonicity() {
            HazardMonotonicity::Decreasing => PolicyKind::TtlCache { timers },
            _ => PolicyKind::TtlPrefetch { timers },
        };
        let name = timer_policy.name();
        let seqs = decision_sequences(
            &m,
            &iv,
            &[PolicyKind::FixedThreshold { theta }, timer_policy],
            events,
            7,
        )
        .unwrap();
        let diffs = seqs[0].iter().zip(&seqs[1]).filter(|(a, b)| a != b).count();
        ok &= diffs == 0 && seqs[0].len() == events;
        parts.push(format!("{} vs {name}: {diffs} differences", fam.name()));
    }
    outcome(ok, format!("{} in {events} events", parts.join(", ")))
}

fn ac8() -> Outcome {
    let n = 10_000;
    let mut cfg = SimConfig::new(PARETO2, 0.5, n, 0.1, PolicySpec::Threshold { theta: None });
    cfg.horizon_events = 2_000_000;
    cfg.occupancy_samples = 1000;
    cfg.master_seed = 8;
    let rep = sim::run(&cfg).unwrap();
    let fracs: Vec<f64> = rep
        .occupancy_series
        .iter()
        .map(|s| s.occupancy as f64 / n as f64)
        .collect();
    let worst = fracs.iter().map(|f| (f - 0.1).abs()).fold(0.0, f64::max);
    let mean = fracs.iter().sum::<f64>() / fracs.len() as f64;
    outcome(
        fracs.len() == 1000 && worst <= 0.02 && (mean - 0.1).abs() <= 0.001,
        format!("{} samples, max |U/N − c| {worst:.4} (≤ 0.02), mean {mean:.5} (0.1 ± 0.001)", fracs.len()),
    )
}

fn ac9() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;

    // leave one out
    let mut cfg = SimConfig::new(PARETO2, 0.5, 1000, 0.1, PolicySpec::Lru);
    cfg.horizon_events = 20_000;
    cfg.snapshot_times = vec![1.0, 4.0];
    let rep = sim::run(&cfg).unwrap();
    let mut loo = !rep.ghat_snapshots.is_empty();
    for s in &rep.ghat_snapshots {
        let n = s.ghat.len() as u128;
        for i in 0..s.ghat.len() {
            let (num, den) = s.ghat.sup_distance_exact(&s.ghat.without_rank(i));
            loo &= num * n <= den;
        }
    }
    ok &= loo;
    parts.push(format!("leave-one-out {}", if loo { "ok" } else { "violated" }));

    // dominance over the policies that respect the capacity; the timer
    // policy is the one matching the hazard monotonicity
    let mut dom = true;
    for fam in [PARETO2, ERLANG4] {
        let m = model(fam);
        let iv = IntensityVector::zipf(500, 0.6).unwrap();
        let cap = 50;
        let theta = threshold_from_capacity(&iv, &m, cap).unwrap();
        let timers = threshold_timers(&iv, &m, theta).unwrap();
        let policies = [
            PolicyKind::OptimalCausal { capacity: cap },
            PolicyKind::Static { capacity: cap },
            PolicyKind::Lru { capacity: cap },
            PolicyKind::FixedThreshold { theta },
            match m.monotonicity() {
                HazardMonotonicity::Decreasing => PolicyKind::TtlCache { timers },
                _ => PolicyKind::TtlPrefetch { timers },
            },
        ];
        let events = 100_000;
        let seqs = decision_sequences(&m, &iv, &policies, events, 9).unwrap();
        let hits: Vec<usize> = seqs.iter().map(|s| s.iter().filter(|d| d.is_hit()).count()).collect();
        for &h in &hits[1..] {
            let p = h as f64 / events as f64;
            let sd = (events as f64 * p * (1.0 - p)).sqrt();
            dom &= hits[0] as f64 >= h as f64 - 3.0 * sd;
        }
    }
    ok &= dom;
    parts.push(format!("dominance {}", if dom { "ok" } else { "violated" }));

    // exponential: optimal == static
    let m = InterArrivalModel::exponential();
    let mut expo = true;
    for beta in [0.0, 0.5, 1.2] {
        let iv = IntensityVector::zipf(200, beta).unwrap();
        let seqs = decision_sequences(
            &m,
            &iv,
            &[PolicyKind::OptimalCausal { capacity: 20 }, PolicyKind::Static { capacity: 20 }],
            20_000,
            6,
        )
        .unwrap();
        expo &= seqs[0] == seqs[1];
    }
    ok &= expo;
    parts.push(format!("exponential optimal = static {}", if expo { "ok" } else { "violated" }));

    // G0(x) ≤ x
    let worst = [PARETO2, ModelFamily::Pareto { alpha: 1.5 }, ERLANG4, ModelFamily::Exponential]
        .into_iter()
        .flat_map(|f| {
            let m = model(f);
            (0..=2000).map(move |i| {
                let x = 0.005 * f64::from(i);
                m.ohr_cdf_sync(x) - x
            })
        })
        .fold(f64::NEG_INFINITY, f64::max);
    ok &= worst <= 0.0;
    parts.push(format!("max G0(x) − x {worst:.2e}"));

    // quantile convergence
    let mut mono = true;
    let mut errs = Vec::new();
    for fam in [PARETO2, ERLANG4] {
        let m = model(fam);
        let target = theta_star(&LimitSpec::new(m, 0.5, 0.1).unwrap()).unwrap();
        let mut last = f64::INFINITY;
        for n in [100usize, 1000, 10_000] {
            let iv = IntensityVector::zipf(n, 0.5).unwrap();
            let cap = (0.1 * n as f64).round();
            let q = mean_ohr_quantile(&iv, &m, 1.0 - cap / (n as f64 - 1.0));
            let err = (q - target).abs();
            mono &= err < last;
            last = err;
            errs.push(format!("{err:.2e}"));
        }
    }
    ok &= mono;
    parts.push(format!("quantile errors [{}]", errs.join(", ")));
    outcome(ok, parts.join("; "))
}

fn ac10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<(Vec<u8>, Vec<u8>)> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("run{i}.csv"));
            let rep = dir.path().join(format!("run{i}.json"));
            let o = rcache(&[
                "simulate",
                "--model",
                "pareto:2",
                "--beta",
                "0.5",
                "--n",
                "200",
                "--policies",
                "optimal,lru,threshold",
                "--horizon-events",
                "20000",
                "--replications",
                "3",
                "--occupancy-samples",
                "20",
                "--seed",
                "42",
                "--out",
                out.to_str().unwrap(),
                "--report",
                rep.to_str().unwrap(),
            ]);
            assert!(o.status.success());
            (std::fs::read(&out).unwrap(), std::fs::read(&rep).unwrap())
        })
        .collect();
    let same = files[0] == files[1];
    outcome(
        same,
        format!("csv {} bytes, report {} bytes, identical: {same}", files[0].0.len(), files[0].1.len()),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("AC1", "pareto closed-form OHR laws", ac1),
        ("AC2", "asymptotic miss curve via analyze", ac2),
        ("AC3", "empirical OHR snapshot vs limit law", ac3),
        ("AC4", "time-averaged threshold vs closed form", ac4),
        ("AC5", "pareto optimal simulation vs finite-N", ac5),
        ("AC6", "erlang optimal, lru and limits", ac6),
        ("AC7", "timer equivalences", ac7),
        ("AC8", "occupancy concentration", ac8),
        ("AC9", "property suites", ac9),
        ("AC10", "simulate determinism", ac10),
    ];
    let mut failed = 0;
    for (id, name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] {id} {name}: {} ({:.2} s)", o.detail, start.elapsed().as_secs_f64());
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
