//! Simulation of the hybrid process `(S(t), X(t))`.
//!
//! The mode chain jumps after exponential holding times; between jumps the
//! densities follow `ẋ_k = η μ_k(s, x) − f_k(x_k)`, integrated with
//! fixed-step RK4. The integral of `|x| = x1 + x2` rides along as a third
//! state so the running average `(1/t) ∫ |x|` is as accurate as the path.
//!
//! Randomness: one [`ChaCha8Rng`] per trajectory seeded with
//! `seed_from_u64(seed)`; replication `i` of a probe uses `seed ^ i`. Each
//! jump consumes exactly two `f64` draws, holding time first, next mode
//! second.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::model::{vector_field, DensityState, FaultMode, NetworkParams, RateMatrix};
use crate::stability::congestion_floor;

/// Recorded in output metadata.
pub const GENERATOR: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64; replication i uses seed ^ i";

pub const TRAJECTORY_HEADER: &str = "t,mode,x1,x2,avg_abs_x";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub horizon: f64,
    pub step: f64,
    pub seed: u64,
    /// Initial densities; `None` starts at the congestion floors when they
    /// are finite, else at the origin.
    pub x0: Option<[f64; 2]>,
    pub s0: FaultMode,
    pub sample_interval: f64,
    pub divergence_cap: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            horizon: 1e4,
            step: 1e-2,
            seed: 0,
            x0: None,
            s0: FaultMode::Nominal,
            sample_interval: 1.0,
            divergence_cap: 1e3,
        }
    }
}

impl SimConfig {
    /// Resolves the initial state and checks the config against it.
    pub fn initial_state(&self, params: &NetworkParams) -> Result<DensityState> {
        let x0 = match self.x0 {
            Some([a, b]) => DensityState::new(a, b)?,
            None => {
                let floor = congestion_floor(params)?;
                if floor.is_finite() {
                    DensityState { x1: floor.x_lower[0], x2: floor.x_lower[1] }
                } else {
                    DensityState::default()
                }
            }
        };
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParams(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.step > 0.0 && self.step <= self.sample_interval) {
            return Err(Error::InvalidParams(format!(
                "need 0 < step ≤ sample_interval, got step {} and interval {}",
                self.step, self.sample_interval
            )));
        }
        if !(self.divergence_cap > x0.norm1()) {
            return Err(Error::InvalidParams(format!(
                "divergence cap {} must exceed |x0| = {}",
                self.divergence_cap,
                x0.norm1()
            )));
        }
        Ok(x0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub t: f64,
    pub mode: FaultMode,
    pub x1: f64,
    pub x2: f64,
    /// `(1/t) ∫_0^t |x| dr`, and `|x0|` at `t = 0`.
    pub avg_abs_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub t: f64,
    pub from: FaultMode,
    pub to: FaultMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// At `t = 0`, every multiple of the sample interval, and the end time.
    pub samples: Vec<Sample>,
    pub jumps: Vec<Jump>,
    /// Fraction of `[0, end_time]` spent in each mode.
    pub mode_occupancy: [f64; 4],
    pub avg_abs_x: f64,
    /// Time at which `x1 + x2` exceeded the cap.
    pub diverged: Option<f64>,
    pub end_time: f64,
}

impl Trajectory {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(TRAJECTORY_HEADER);
        out.push('\n');
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig6(s.t),
                s.mode.number(),
                sig6(s.x1),
                sig6(s.x2),
                sig6(s.avg_abs_x)
            ));
        }
        out
    }

    /// Least-squares slope of `avg_abs_x` over the trailing half of the samples.
    pub fn avg_slope(&self) -> f64 {
        trailing_slope(&self.samples, |s| s.avg_abs_x)
    }

    /// Least-squares slope of `x1 + x2` over the trailing half of the samples.
    pub fn growth_slope(&self) -> f64 {
        trailing_slope(&self.samples, |s| s.x1 + s.x2)
    }
}

fn trailing_slope(samples: &[Sample], y: impl Fn(&Sample) -> f64) -> f64 {
    let tail = &samples[samples.len() / 2..];
    if tail.len() < 2 {
        return 0.0;
    }
    let n = tail.len() as f64;
    let mt = tail.iter().map(|s| s.t).sum::<f64>() / n;
    let my = tail.iter().map(&y).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for s in tail {
        sxy += (s.t - mt) * (y(s) - my);
        sxx += (s.t - mt) * (s.t - mt);
    }
    if sxx > 0.0 {
        sxy / sxx
    } else {
        0.0
    }
}

/// `(x1, x2, ∫|x|)`.
type State = [f64; 3];

fn rhs(params: &NetworkParams, mode: FaultMode, y: &State) -> State {
    let x = DensityState { x1: y[0].max(0.0), x2: y[1].max(0.0) };
    let g = vector_field(params, mode, x);
    [g[0], g[1], x.x1 + x.x2]
}

fn rk4_step(params: &NetworkParams, mode: FaultMode, y: &State, h: f64) -> State {
    let add = |a: &State, k: &State, c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2]];
    let k1 = rhs(params, mode, y);
    let k2 = rhs(params, mode, &add(y, &k1, 0.5 * h));
    let k3 = rhs(params, mode, &add(y, &k2, 0.5 * h));
    let k4 = rhs(params, mode, &add(y, &k3, h));
    let mut out = [0.0; 3];
    for i in 0..3 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out[0] = out[0].max(0.0);
    out[1] = out[1].max(0.0);
    out
}

/// Integrates one mode from `t0` to `t1` with steps of `step`, the last one
/// shortened to land on `t1`. Returns early with the crossing time if
/// `x1 + x2` exceeds `cap`.
fn integrate(
    params: &NetworkParams,
    mode: FaultMode,
    y: &mut State,
    t0: f64,
    t1: f64,
    step: f64,
    cap: f64,
) -> Result<Option<f64>> {
    let mut t = t0;
    while t < t1 {
        let h = step.min(t1 - t);
        // Avoid a sliver step from accumulated rounding.
        let (h, t_next) = if t1 - (t + h) < 1e-12 * step { (t1 - t, t1) } else { (h, t + h) };
        *y = rk4_step(params, mode, y, h);
        if !y.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical(format!(
                "non-finite state {y:?} at t = {t_next} in mode {mode}"
            )));
        }
        t = t_next;
        if y[0] + y[1] > cap {
            return Ok(Some(t));
        }
    }
    Ok(None)
}

/// Draws the holding time and the next mode, in that order.
fn draw_jump(rng: &mut ChaCha8Rng, rates: &RateMatrix, mode: FaultMode) -> (f64, FaultMode) {
    let u_hold: f64 = rng.random();
    let u_next: f64 = rng.random();
    let exit = rates.exit_rate(mode);
    if exit <= 0.0 {
        return (f64::INFINITY, mode);
    }
    let hold = -(1.0 - u_hold).ln() / exit;
    let target = u_next * exit;
    let mut acc = 0.0;
    let mut next = mode;
    for to in FaultMode::ALL {
        let r = rates.rate(mode, to);
        if r > 0.0 {
            next = to;
            acc += r;
            if target < acc {
                break;
            }
        }
    }
    (hold, next)
}

/// Simulates one trajectory up to `cfg.horizon` or divergence.
pub fn simulate(params: &NetworkParams, rates: &RateMatrix, cfg: &SimConfig) -> Result<Trajectory> {
    let x0 = cfg.initial_state(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut y: State = [x0.x1, x0.x2, 0.0];
    let mut mode = cfg.s0;
    let mut t = 0.0;
    let mut occupancy = [0.0; 4];
    let mut samples = vec![Sample { t: 0.0, mode, x1: x0.x1, x2: x0.x2, avg_abs_x: x0.norm1() }];
    let mut jumps = Vec::new();
    let mut diverged = None;
    let mut sample_index = 1u64;

    let record = |samples: &mut Vec<Sample>, t: f64, mode: FaultMode, y: &State| {
        samples.push(Sample { t, mode, x1: y[0], x2: y[1], avg_abs_x: y[2] / t });
    };

    'run: while t < cfg.horizon {
        let (hold, next) = draw_jump(&mut rng, rates, mode);
        let t_jump = (t + hold).min(cfg.horizon);
        // Sub-segments end at sample times so those are hit exactly.
        while t < t_jump {
            let t_sample = sample_index as f64 * cfg.sample_interval;
            let t_end = t_sample.min(t_jump);
            let start = t;
            if let Some(t_cross) = integrate(params, mode, &mut y, t, t_end, cfg.step, cfg.divergence_cap)? {
                occupancy[mode.index()] += t_cross - start;
                t = t_cross;
                diverged = Some(t);
                record(&mut samples, t, mode, &y);
                break 'run;
            }
            occupancy[mode.index()] += t_end - start;
            t = t_end;
            if t == t_sample {
                record(&mut samples, t, mode, &y);
                sample_index += 1;
            }
        }
        if t < cfg.horizon && next != mode {
            jumps.push(Jump { t, from: mode, to: next });
            mode = next;
        }
    }
    if samples.last().is_some_and(|s| s.t < t) {
        record(&mut samples, t, mode, &y);
    }

    let total: f64 = occupancy.iter().sum();
    if total > 0.0 {
        occupancy.iter_mut().for_each(|v| *v /= total);
    }
    Ok(Trajectory {
        avg_abs_x: samples.last().map_or(x0.norm1(), |s| s.avg_abs_x),
        samples,
        jumps,
        mode_occupancy: occupancy,
        diverged,
        end_time: t,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmpiricalClass {
    EmpiricallyStable,
    EmpiricallyUnstable,
    Inconclusive,
}

impl EmpiricalClass {
    pub fn as_str(self) -> &'static str {
        match self {
            EmpiricalClass::EmpiricallyStable => "empirically-stable",
            EmpiricalClass::EmpiricallyUnstable => "empirically-unstable",
            EmpiricalClass::Inconclusive => "inconclusive",
        }
    }
}

/// Default trend threshold on the trailing-half slope of `avg_abs_x`.
pub const SLOPE_THRESHOLD: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationStats {
    pub index: usize,
    pub seed: u64,
    pub diverged: Option<f64>,
    pub avg_slope: f64,
    pub growth_slope: f64,
    pub final_avg_abs_x: f64,
    pub mode_occupancy: [f64; 4],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub eta: f64,
    pub classification: EmpiricalClass,
    pub median_avg_slope: f64,
    pub median_growth_slope: f64,
    pub diverged: usize,
    pub threshold: f64,
    pub replications: Vec<ReplicationStats>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Runs `replications` independent trajectories and classifies the trend of
/// `avg_abs_x`. A heuristic, not a proof.
pub fn stability_probe(
    params: &NetworkParams,
    rates: &RateMatrix,
    cfg: &SimConfig,
    replications: usize,
) -> Result<ProbeReport> {
    stability_probe_with(params, rates, cfg, replications, SLOPE_THRESHOLD)
}

pub fn stability_probe_with(
    params: &NetworkParams,
    rates: &RateMatrix,
    cfg: &SimConfig,
    replications: usize,
    threshold: f64,
) -> Result<ProbeReport> {
    if replications == 0 {
        return Err(Error::InvalidParams("at least one replication is required".into()));
    }
    let stats: Vec<ReplicationStats> = (0..replications)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed ^ i as u64;
            let traj = simulate(params, rates, &SimConfig { seed, ..*cfg })?;
            Ok(ReplicationStats {
                index: i,
                seed,
                diverged: traj.diverged,
                avg_slope: traj.avg_slope(),
                growth_slope: traj.growth_slope(),
                final_avg_abs_x: traj.avg_abs_x,
                mode_occupancy: traj.mode_occupancy,
            })
        })
        .collect::<Result<_>>()?;

    let diverged = stats.iter().filter(|s| s.diverged.is_some()).count();
    let median_avg_slope = median(stats.iter().map(|s| s.avg_slope).collect());
    let median_growth_slope = median(stats.iter().map(|s| s.growth_slope).collect());
    let classification = if diverged == 0 && median_avg_slope < threshold {
        EmpiricalClass::EmpiricallyStable
    } else if 2 * diverged > replications || median_avg_slope > 10.0 * threshold {
        EmpiricalClass::EmpiricallyUnstable
    } else {
        EmpiricalClass::Inconclusive
    };
    Ok(ProbeReport {
        eta: params.eta(),
        classification,
        median_avg_slope,
        median_growth_slope,
        diverged,
        threshold,
        replications: stats,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub rows: Vec<ProbeReport>,
    /// Largest empirically stable `η` and smallest empirically unstable `η`.
    pub window: [Option<f64>; 2],
}

impl ScanReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("eta,classification,median_avg_slope,median_growth_slope,diverged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                sig6(r.eta),
                r.classification.as_str(),
                sig6(r.median_avg_slope),
                sig6(r.median_growth_slope),
                r.diverged
            ));
        }
        out
    }
}

/// Probes each demand in `eta_grid` (ascending, within `[0, 1.2]`); the
/// demand stored in `params` is ignored.
pub fn throughput_scan(
    params: &NetworkParams,
    rates: &RateMatrix,
    cfg: &SimConfig,
    eta_grid: &[f64],
    replications: usize,
) -> Result<ScanReport> {
    if eta_grid.windows(2).any(|w| !(w[0] < w[1])) || eta_grid.iter().any(|e| !(0.0..=1.2).contains(e)) {
        return Err(Error::InvalidParams(format!("demand grid must ascend within [0, 1.2], got {eta_grid:?}")));
    }
    let rows: Vec<ProbeReport> = eta_grid
        .par_iter()
        .map(|&eta| stability_probe(&params.with_eta(eta)?, rates, cfg, replications))
        .collect::<Result<_>>()?;
    let stable = rows
        .iter()
        .filter(|r| r.classification == EmpiricalClass::EmpiricallyStable)
        .map(|r| r.eta)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.max(e))));
    let unstable = rows
        .iter()
        .filter(|r| r.classification == EmpiricalClass::EmpiricallyUnstable)
        .map(|r| r.eta)
        .fold(None, |m: Option<f64>, e| Some(m.map_or(e, |m| m.min(e))));
    Ok(ScanReport { rows, window: [stable, unstable] })
}

/// Metadata sidecar for a trajectory file.
pub fn trajectory_metadata(params: &NetworkParams, cfg: &SimConfig, traj: &Trajectory) -> serde_json::Value {
    serde_json::json!({
        "params": { "F1": params.f1(), "F2": params.f2(), "beta": params.beta(), "eta": params.eta() },
        "sim": cfg,
        "seed": cfg.seed,
        "generator": GENERATOR,
        "summary": {
            "end_time": traj.end_time,
            "diverged": traj.diverged.is_some(),
            "diverged_at": traj.diverged,
            "avg_abs_x": traj.avg_abs_x,
            "avg_slope": traj.avg_slope(),
            "growth_slope": traj.growth_slope(),
            "mode_occupancy": traj.mode_occupancy,
            "jumps": traj.jumps.len(),
            "samples": traj.samples.len(),
        },
    })
}
