//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::time::{Duration, Instant};

use faultroute::closed_form::{self, FailureModel, GPolynomial, WitnessSource};
use faultroute::model::{FaultMode, ModeDistribution, NetworkParams, RateMatrix};
use faultroute::sim::{self, EmpiricalClass, SimConfig};
use faultroute::stability::{self, Classification};
use faultroute::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn criterion(n: usize, name: &str, limit: Duration, body: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = body();
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = out.pass && in_time;
    println!(
        "{} criterion {n} ({name}): {} [{:.3} s, limit {:.3} s{}]",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed.as_secs_f64(),
        limit.as_secs_f64(),
        if in_time { "" } else { ", over time" }
    );
    pass
}

fn homogeneous_bound() -> Outcome {
    let exact = closed_form::homogeneous_lower_bound(0.25, 0.25).unwrap() == 2.0 / 3.0;
    let mut rate_err: f64 = 0.0;
    for (p, v) in closed_form::failure_rate_curve(101) {
        rate_err = rate_err.max((v - 1.0 / (1.0 + 2.0 * p * (1.0 - p))).abs());
    }
    let mut corr_err: f64 = 0.0;
    for (rho, v) in closed_form::correlation_curve(101) {
        corr_err = corr_err.max((v - 1.0 / (1.5 - rho)).abs());
    }
    Outcome {
        pass: exact && rate_err <= 1e-12 && corr_err <= 1e-12,
        detail: format!("2/3 exact: {exact}; max error failure-rate curve {rate_err:.1e}, correlation curve {corr_err:.1e} (tol 1e-12)"),
    }
}

fn hetero_bound() -> Outcome {
    let mut fig_err: f64 = 0.0;
    for (d_f, lower, _) in closed_form::hetero_curve(101) {
        let fig = (4.0 / 3.0 * (1.0 - d_f)).min(2.0 / 3.0 * (1.0 - d_f / 4.0));
        fig_err = fig_err.max((lower - fig).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut form_err: f64 = 0.0;
    for _ in 0..1000 {
        let d_f: f64 = rng.random();
        let p1: f64 = rng.random();
        let p2 = rng.random::<f64>() * (1.0 - p1) / 2.0;
        let a = closed_form::hetero_lower_bound(d_f, p1, p2).unwrap();
        let b = closed_form::hetero_lower_bound_piecewise(d_f, p1, p2).unwrap();
        form_err = form_err.max((a - b).abs());
    }
    Outcome {
        pass: fig_err <= 1e-12 && form_err <= 1e-14,
        detail: format!("figure expression error {fig_err:.1e} (tol 1e-12); min vs piecewise {form_err:.1e} over 1000 draws (tol 1e-14)"),
    }
}

fn congestion_floor() -> (Outcome, Duration) {
    let params = NetworkParams::homogeneous(1.0, 0.8).unwrap();
    let start = Instant::now();
    let x = stability::solve_congestion_floor(&params, faultroute::model::Link::One).unwrap();
    let took = start.elapsed();
    let residual = stability::floor_residual(&params, faultroute::model::Link::One, x);
    (
        Outcome {
            pass: (x - 0.732668).abs() <= 1e-5 && residual < 1e-10,
            detail: format!("floor {x:.9} (target 0.732668 ± 1e-5), residual {residual:.1e} (tol 1e-10), solve {:.1} µs", took.as_secs_f64() * 1e6),
        },
        took,
    )
}

fn oracle_agreement() -> Outcome {
    let mut cases: Vec<(String, NetworkParams, ModeDistribution, f64)> = Vec::new();
    for p in [0.1, 0.25, 0.5] {
        let dist = FailureModel::new(p, 0.0).unwrap().distribution().unwrap();
        cases.push((format!("p={p}"), NetworkParams::homogeneous(1.0, 0.0).unwrap(), dist, closed_form::failure_rate_bound(p).unwrap()));
    }
    for d_f in [0.0, 0.25, 0.5, 0.75] {
        cases.push((
            format!("dF={d_f}"),
            NetworkParams::from_capacity_difference(d_f, 1.0, 0.0).unwrap(),
            ModeDistribution::uniform(),
            closed_form::hetero_lower_bound(d_f, 0.25, 0.25).unwrap(),
        ));
    }
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, params, dist, closed) in cases {
        match stability::throughput_bounds(&params, &dist) {
            Ok(b) => {
                let ok = b.lower >= closed - 5e-3 && b.upper <= 1.0 && b.upper >= b.lower;
                pass &= ok;
                parts.push(format!("{label}: [{:.4}, {:.4}] vs {:.4}{}", b.lower, b.upper, closed, if ok { "" } else { " ✗" }));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{label}: error {e}"));
            }
        }
    }
    Outcome { pass, detail: parts.join("; ") }
}

fn monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = 0;
    let mut small_beta_failures = 0;
    let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
    for _ in 0..1000 {
        let beta = 5.0 * (1.0 - rng.random::<f64>());
        let q: f64 = rng.random();
        let eta: f64 = rng.random();
        let report = closed_form::g_monotonicity_check(&GPolynomial::new(beta, eta, q).unwrap(), 10_000);
        if !(report.min_dg > 0.0) {
            failures += 1;
            if beta < 1.0 {
                small_beta_failures += 1;
            }
            if report.min_dg < worst.0 {
                worst = (report.min_dg, beta, q, eta);
            }
        }
    }
    Outcome {
        pass: failures == 0,
        detail: if failures == 0 {
            "min g' > 0 on all 1000 triples".into()
        } else {
            format!(
                "{failures}/1000 triples with min g' ≤ 0 ({small_beta_failures} with β < 1); worst min g' = {:.3e} at β={:.3}, q={:.3}, η={:.3}",
                worst.0, worst.1, worst.2, worst.3
            )
        },
    }
}

fn witness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut ok, mut constructed, mut inconsistent, mut other) = (0, 0, 0, 0);
    for _ in 0..100 {
        let d_f = rng.random::<f64>() * 0.99;
        let p1: f64 = rng.random();
        let p2 = rng.random::<f64>() * (1.0 - p1) / 2.0;
        let beta = 0.25 + 3.75 * rng.random::<f64>();
        let p = ModeDistribution::new([p1, p2, p2, (1.0 - p1 - 2.0 * p2).max(0.0)]).unwrap();
        let bound = closed_form::hetero_lower_bound(d_f, p1, p2).unwrap();
        let eta = bound * rng.random::<f64>();
        let params = NetworkParams::from_capacity_difference(d_f, beta, eta).unwrap();
        match closed_form::hetero_witness(&params, &p) {
            Ok(w) => {
                let v = stability::sufficient_value(&params, &p, w.witness.theta).unwrap();
                if v <= 0.0 {
                    ok += 1;
                }
                if w.source == WitnessSource::Construction {
                    constructed += 1;
                }
            }
            Err(Error::Inconsistent(_)) => inconsistent += 1,
            Err(_) => other += 1,
        }
    }
    Outcome {
        pass: ok == 100 && inconsistent == 0 && other == 0,
        detail: format!("{ok}/100 verified (drift ≤ 0), {constructed} from the construction, {inconsistent} inconsistent, {other} other errors"),
    }
}

/// Occupancy of `[t0, t1)` per mode from the jump log.
fn window_occupancy(traj: &sim::Trajectory, s0: FaultMode, t0: f64, t1: f64) -> [f64; 4] {
    let mut occ = [0.0; 4];
    let mut mode = s0;
    let mut t = 0.0f64;
    for j in traj.jumps.iter().chain(std::iter::once(&sim::Jump { t: f64::INFINITY, from: FaultMode::Nominal, to: FaultMode::Nominal })) {
        let (a, b) = (t.max(t0), j.t.min(t1));
        if b > a {
            occ[mode.index()] += b - a;
        }
        if j.t >= t1 {
            break;
        }
        mode = j.to;
        t = j.t;
    }
    occ.map(|v| v / (t1 - t0))
}

fn rk4_end(step: f64) -> [f64; 2] {
    let rates = RateMatrix::new_reducible([[0.0; 4]; 4]).unwrap();
    let params = NetworkParams::new(0.7, 0.3, 1.5, 0.8).unwrap();
    let cfg = SimConfig { horizon: 4.0, step, x0: Some([1.0, 0.5]), s0: FaultMode::Link1Faulty, sample_interval: 4.0, ..SimConfig::default() };
    let s = *sim::simulate(&params, &rates, &cfg).unwrap().samples.last().unwrap();
    [s.x1, s.x2]
}

fn simulator_statistics() -> Outcome {
    let rates = RateMatrix::uniform(1.0).unwrap();
    let params = NetworkParams::homogeneous(1.0, 0.5).unwrap();
    let cfg = SimConfig { horizon: 1e4, seed: 7, ..SimConfig::default() };
    let traj = sim::simulate(&params, &rates, &cfg).unwrap();
    let batches = 20;
    let width = cfg.horizon / batches as f64;
    let per_batch: Vec<[f64; 4]> = (0..batches)
        .map(|b| window_occupancy(&traj, cfg.s0, b as f64 * width, (b + 1) as f64 * width))
        .collect();
    let mut occ_ok = true;
    let mut parts = Vec::new();
    for s in 0..4 {
        let mean = per_batch.iter().map(|o| o[s]).sum::<f64>() / batches as f64;
        let var = per_batch.iter().map(|o| (o[s] - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
        let se = (var / batches as f64).sqrt();
        let within = (traj.mode_occupancy[s] - 0.25).abs() <= 3.0 * se;
        occ_ok &= within;
        parts.push(format!("{:.4}±{:.4}", traj.mode_occupancy[s], se));
    }
    let h = 0.2;
    let reference = rk4_end(h / 16.0);
    let err = |e: [f64; 2]| (e[0] - reference[0]).abs() + (e[1] - reference[1]).abs();
    let ratio = err(rk4_end(h)) / err(rk4_end(h / 2.0));
    Outcome {
        pass: occ_ok && (12.0..=20.0).contains(&ratio),
        detail: format!("occupancy [{}] vs 0.25 within 3 batch-means SE: {occ_ok}; RK4 error ratio {ratio:.2} (need [12, 20])", parts.join(", ")),
    }
}

fn empirical_consistency() -> Outcome {
    let p = ModeDistribution::uniform();
    let rates = RateMatrix::from_distribution(&p, 1.0).unwrap();
    let cfg = SimConfig { horizon: 1e4, seed: 42, ..SimConfig::default() };
    let reps = 4;
    let probe = |eta: f64| sim::stability_probe(&NetworkParams::homogeneous(1.0, eta).unwrap(), &rates, &cfg, reps).unwrap();

    let low = probe(0.5);
    let high = probe(1.05);
    let mut pass = low.classification == EmpiricalClass::EmpiricallyStable
        && high.classification == EmpiricalClass::EmpiricallyUnstable
        && (high.median_growth_slope - 0.05).abs() <= 0.02;
    let mut violations = Vec::new();
    let mut certified = Vec::new();
    for eta in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.65] {
        let params = NetworkParams::homogeneous(1.0, eta).unwrap();
        if stability::assess(&params, &p).unwrap().classification == Classification::CertifiedStable {
            certified.push(eta);
            if probe(eta).classification == EmpiricalClass::EmpiricallyUnstable {
                violations.push(eta);
            }
        }
    }
    pass &= violations.is_empty();
    Outcome {
        pass,
        detail: format!(
            "η=0.5 {} (median slope {:.2e}); η=1.05 {} with growth slope {:.4} (target 0.05 ± 0.02); certified-stable set {:?} empirically unstable at {:?}",
            low.classification.as_str(),
            low.median_avg_slope,
            high.classification.as_str(),
            high.median_growth_slope,
            certified,
            violations
        ),
    }
}

fn main() {
    println!("acceptance criteria");
    let mut results = Vec::new();
    results.push(criterion(1, "homogeneous bound", Duration::from_secs(1), homogeneous_bound));
    results.push(criterion(2, "asymmetric bound", Duration::from_secs(1), hetero_bound));
    let (floor_out, floor_time) = congestion_floor();
    let floor_pass = floor_out.pass && floor_time < Duration::from_millis(1);
    println!(
        "{} criterion 3 (congestion floor): {} [limit 1 ms]",
        if floor_pass { "PASS" } else { "FAIL" },
        floor_out.detail
    );
    results.push(floor_pass);
    results.push(criterion(4, "numeric vs closed-form bounds", Duration::from_secs(60), oracle_agreement));
    results.push(criterion(5, "monotonicity of g", Duration::from_secs(10), monotonicity));
    results.push(criterion(6, "witness construction", Duration::from_secs(30), witness));
    results.push(criterion(7, "simulator statistics", Duration::from_secs(30), simulator_statistics));
    results.push(criterion(8, "empirical vs certified", Duration::from_secs(120), empirical_consistency));
    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
