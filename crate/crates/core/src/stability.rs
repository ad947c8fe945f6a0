//! Stability tests for the two-link network.
//!
//! * The necessary condition is built from the congestion floor `x̲_k`, the
//!   density below which link `k` always fills up, whatever the sensors say.
//!   `M = [x̲1, ∞) × [x̲2, ∞)` is invariant; see [`invariant_set_check`].
//! * The sufficient condition asks for thresholds `θ ≥ 0` at which the
//!   mode-averaged worst-link drift is negative:
//!   `Σ_s p_s max_k (η μ_k(s, θ) − f_k(θ_k)) < 0`.
//! * [`throughput_bounds`] bisects both tests over the demand `η`.
//! * [`lyapunov_certificate`] builds the piecewise-quadratic Lyapunov
//!   function `V(s, x) = ½ w² + a_s w`, `w = Σ_k (x_k − θ_k)_+`, that backs a
//!   sufficient-condition witness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{
    flow_unchecked, vector_field, DensityState, FaultMode, Link,
    ModeDistribution, NetworkParams, RateMatrix,
};

/// Initial upper end of the floor bracket. Expanded by doubling if the root
/// lies beyond it (small `β`).
pub const FLOOR_BRACKET: f64 = 50.0;
/// Absolute tolerance on the floor density.
pub const FLOOR_TOL: f64 = 1e-10;
/// The sufficient condition is strict: a witness needs drift below `−STRICT_DRIFT`.
pub const STRICT_DRIFT: f64 = 1e-9;
/// Tolerance of the demand bisections in [`throughput_bounds`].
pub const ETA_TOL: f64 = 1e-4;

/// Minimal attractor densities `x̲_k`. An infinite entry means link `k` has
/// zero capacity but positive demand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CongestionFloor {
    pub x_lower: [f64; 2],
}

impl CongestionFloor {
    pub fn get(&self, link: Link) -> f64 {
        self.x_lower[link.index()]
    }

    pub fn is_finite(&self) -> bool {
        self.x_lower.iter().all(|v| v.is_finite())
    }

    /// Whether `x` lies in `M = [x̲1, ∞) × [x̲2, ∞)`.
    pub fn contains(&self, x: DensityState) -> bool {
        x.x1 >= self.x_lower[0] && x.x2 >= self.x_lower[1]
    }
}

/// Worst-case routed inflow minus outflow at density `x` on a link of the
/// given capacity: `η / (1 + e^{βx}) − F (1 − e^{−x})`. Decreasing in `x`.
fn floor_balance(params: &NetworkParams, capacity: f64, x: f64) -> f64 {
    params.eta() / (1.0 + (params.beta() * x).exp()) - flow_unchecked(capacity, x)
}

/// Solves `η e^{−βx}/(1 + e^{−βx}) = F_k (1 − e^{−x})` for the congestion floor.
///
/// Returns `0` when `η = 0` and `f64::INFINITY` when `F_k = 0 < η`.
pub fn solve_congestion_floor(params: &NetworkParams, link: Link) -> Result<f64> {
    let capacity = params.capacity(link);
    if params.eta() == 0.0 {
        return Ok(0.0);
    }
    if capacity == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mut lo = 0.0;
    let mut hi = FLOOR_BRACKET;
    while floor_balance(params, capacity, hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e8 {
            return Err(Error::Numerical(format!("congestion floor of link {link:?} exceeds {hi}")));
        }
    }
    // Bisect well past FLOOR_TOL so the fixed-point residual is also tiny.
    for _ in 0..200 {
        if hi - lo <= FLOOR_TOL * 1e-2 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if floor_balance(params, capacity, mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn congestion_floor(params: &NetworkParams) -> Result<CongestionFloor> {
    Ok(CongestionFloor {
        x_lower: [
            solve_congestion_floor(params, Link::One)?,
            solve_congestion_floor(params, Link::Two)?,
        ],
    })
}

/// Fixed-point residual of a floor value; zero for the infinite floor.
pub fn floor_residual(params: &NetworkParams, link: Link, x_lower: f64) -> f64 {
    if x_lower.is_finite() {
        floor_balance(params, params.capacity(link), x_lower).abs()
    } else {
        0.0
    }
}

/// Outcome of the three necessary-condition inequalities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NecessaryVerdict {
    pub holds: bool,
    /// Per-inequality outcome.
    pub holds_each: [bool; 3],
    /// `F1 − lhs1`, `F2 − lhs2`, `1 − η`.
    pub slacks: [f64; 3],
    /// First violated inequality, numbered 1..=3.
    pub violated: Option<usize>,
    pub floor: CongestionFloor,
}

/// Evaluates
///
/// ```text
/// η (p2 / (e^{−βx̲2} + 1) + p4/2) ≤ F1
/// η (p3 / (e^{−βx̲1} + 1) + p4/2) ≤ F2
/// η < 1
/// ```
///
/// An infinite floor enters through its limit `e^{−βx̲} = 0`.
pub fn necessary_condition(params: &NetworkParams, p: &ModeDistribution) -> Result<NecessaryVerdict> {
    let floor = congestion_floor(params)?;
    let eta = params.eta();
    let beta = params.beta();
    let decay = |x: f64| if x.is_finite() { (-beta * x).exp() } else { 0.0 };
    let p2 = p.get(FaultMode::Link1Faulty);
    let p3 = p.get(FaultMode::Link2Faulty);
    let p4 = p.get(FaultMode::BothFaulty);

    let lhs1 = eta * (p2 / (decay(floor.x_lower[1]) + 1.0) + 0.5 * p4);
    let lhs2 = eta * (p3 / (decay(floor.x_lower[0]) + 1.0) + 0.5 * p4);
    let slacks = [params.f1() - lhs1, params.f2() - lhs2, 1.0 - eta];
    let holds_each = [slacks[0] >= 0.0, slacks[1] >= 0.0, slacks[2] > 0.0];
    let violated = holds_each.iter().position(|h| !h).map(|i| i + 1);
    Ok(NecessaryVerdict {
        holds: violated.is_none(),
        holds_each,
        slacks,
        violated,
        floor,
    })
}

/// Thresholds `θ` together with the sufficient-condition drift they achieve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaWitness {
    pub theta: [f64; 2],
    pub drift_value: f64,
}

impl ThetaWitness {
    pub fn certifies(&self) -> bool {
        self.drift_value < 0.0
    }
}

/// Worst-link drift `max_k (η μ_k(s, θ) − f_k(θ_k))` in each mode.
pub fn mode_drifts(params: &NetworkParams, theta: [f64; 2]) -> [f64; 4] {
    let state = DensityState { x1: theta[0], x2: theta[1] };
    FaultMode::ALL.map(|mode| {
        let g = vector_field(params, mode, state);
        g[0].max(g[1])
    })
}

fn drift_unchecked(params: &NetworkParams, p: &ModeDistribution, theta: [f64; 2]) -> f64 {
    mode_drifts(params, theta)
        .iter()
        .zip(p.as_array())
        .map(|(d, ps)| ps * d)
        .sum()
}

/// Left-hand side of the sufficient condition,
/// `Σ_s p_s max_k (η μ_k(s, θ) − f_k(θ_k))`.
pub fn sufficient_value(params: &NetworkParams, p: &ModeDistribution, theta: [f64; 2]) -> Result<f64> {
    if !(theta[0] >= 0.0 && theta[1] >= 0.0) || !theta.iter().all(|t| t.is_finite()) {
        return Err(Error::Domain(format!("thresholds must be finite and nonnegative, got {theta:?}")));
    }
    Ok(drift_unchecked(params, p, theta))
}

/// Knobs of the deterministic θ search. The search runs in `u = ln z`,
/// `z = e^{−θ}`, over `[ln z_floor, 0]²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub grid: usize,
    pub z_floor: f64,
    pub sweeps: usize,
    pub golden_iters: usize,
    pub strict: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            grid: 200,
            z_floor: 1e-9,
            sweeps: 3,
            golden_iters: 50,
            strict: STRICT_DRIFT,
        }
    }
}

/// Searches for `θ` with drift below `−1e-9` using default options.
pub fn sufficient_search(params: &NetworkParams, p: &ModeDistribution) -> Option<ThetaWitness> {
    sufficient_search_with(params, p, &SearchOptions::default())
}

pub fn sufficient_search_with(
    params: &NetworkParams,
    p: &ModeDistribution,
    opts: &SearchOptions,
) -> Option<ThetaWitness> {
    let (u, value) = minimize_drift(params, p, opts);
    if value < -opts.strict {
        let theta = [-u[0], -u[1]];
        Some(ThetaWitness {
            theta,
            drift_value: drift_unchecked(params, p, theta),
        })
    } else {
        None
    }
}

/// Best `(u1, u2)` and its drift. Grid stage is parallel over rows; the
/// reduction breaks ties by grid index so the result is deterministic.
fn minimize_drift(params: &NetworkParams, p: &ModeDistribution, opts: &SearchOptions) -> ([f64; 2], f64) {
    let n = opts.grid.max(2);
    let u_min = opts.z_floor.ln();
    let step = -u_min / (n - 1) as f64;
    let axis: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 0.0 } else { u_min + step * i as f64 })
        .collect();
    let eval = |u1: f64, u2: f64| drift_unchecked(params, p, [-u1, -u2]);

    let (best_v, bi, bj) = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut row_best = (f64::INFINITY, i, 0usize);
            for (j, &u2) in axis.iter().enumerate() {
                let v = eval(axis[i], u2);
                if v < row_best.0 {
                    row_best = (v, i, j);
                }
            }
            row_best
        })
        .reduce(
            || (f64::INFINITY, usize::MAX, usize::MAX),
            |a, b| {
                if b.0 < a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        );

    let mut best = [axis[bi], axis[bj]];
    let mut best_v = best_v;
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..opts.sweeps {
        for c in 0..2 {
            let mut a = (best[c] - 2.0 * step).max(u_min);
            let mut b = (best[c] + 2.0 * step).min(0.0);
            let along = |t: f64| {
                let mut u = best;
                u[c] = t;
                eval(u[0], u[1])
            };
            let mut x1 = b - inv_phi * (b - a);
            let mut x2 = a + inv_phi * (b - a);
            let mut f1 = along(x1);
            let mut f2 = along(x2);
            for _ in 0..opts.golden_iters {
                if f1 <= f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - inv_phi * (b - a);
                    f1 = along(x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + inv_phi * (b - a);
                    f2 = along(x2);
                }
            }
            let (t, v) = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
            if v < best_v {
                best[c] = t;
                best_v = v;
            }
        }
    }
    (best, best_v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    CertifiedStable,
    CertifiedUnstable,
    Indeterminate,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::CertifiedStable => "certified-stable",
            Classification::CertifiedUnstable => "certified-unstable",
            Classification::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    pub necessary: NecessaryVerdict,
    pub sufficient: Option<ThetaWitness>,
    pub classification: Classification,
}

/// Runs both tests. A witness together with a violated necessary condition
/// contradicts the theory and is reported as [`Error::Inconsistent`].
pub fn assess(params: &NetworkParams, p: &ModeDistribution) -> Result<StabilityVerdict> {
    let necessary = necessary_condition(params, p)?;
    let sufficient = sufficient_search(params, p);
    let classification = match (necessary.holds, sufficient.is_some()) {
        (true, true) => Classification::CertifiedStable,
        (false, false) => Classification::CertifiedUnstable,
        (true, false) => Classification::Indeterminate,
        (false, true) => {
            return Err(Error::Inconsistent(format!(
                "η = {} has a stability witness but violates necessary inequality {:?}",
                params.eta(),
                necessary.violated
            )))
        }
    };
    Ok(StabilityVerdict {
        necessary,
        sufficient,
        classification,
    })
}

/// Numeric bounds on the throughput `η*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThroughputBounds {
    /// Largest probed `η` with a sufficient-condition witness (0 if none).
    pub lower: f64,
    /// Smallest probed `η` violating the necessary condition.
    pub upper: f64,
    /// The witness found at `lower`.
    pub lower_witness: Option<ThetaWitness>,
    /// Inequality (1..=3) violated at `upper`.
    pub upper_violation: usize,
    pub tolerance: f64,
}

/// Points of the coarse monotonicity scan preceding each bisection.
const SCAN_POINTS: usize = 21;

/// Finds the switch point of a predicate on `[0, 1]` that should hold on
/// `[0, η̂)` and fail afterwards. Returns `(last holding η, first failing η)`;
/// the first is `None` if it already fails at 0.
fn bisect_demand<F>(name: &'static str, pred: F) -> Result<(Option<f64>, f64)>
where
    F: Fn(f64) -> Result<bool> + Sync,
{
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|i| i as f64 / (SCAN_POINTS - 1) as f64).collect();
    let outcome: Vec<bool> = grid.par_iter().map(|&eta| pred(eta)).collect::<Result<_>>()?;

    let first_fail = outcome.iter().position(|h| !h);
    if let Some(ff) = first_fail {
        if let Some(k) = outcome[ff..].iter().position(|h| *h) {
            return Err(Error::NonMonotone {
                predicate: name,
                holds_at: grid[ff + k],
                fails_at: grid[ff],
            });
        }
    }
    let Some(ff) = first_fail else {
        return Err(Error::Inconsistent(format!("predicate `{name}` holds at η = 1")));
    };
    if ff == 0 {
        return Ok((None, 0.0));
    }
    let (mut lo, mut hi) = (grid[ff - 1], grid[ff]);
    while hi - lo > ETA_TOL {
        let mid = 0.5 * (lo + hi);
        if pred(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((Some(lo), hi))
}

/// Smallest `η ∈ [0, 1]` (to [`ETA_TOL`]) violating the necessary condition,
/// with the violated inequality. The demand stored in `params` is ignored.
pub fn necessary_upper_bound(params: &NetworkParams, p: &ModeDistribution) -> Result<(f64, usize)> {
    let with = |eta: f64| params.with_eta(eta);
    let (_, upper) = bisect_demand("necessary", |eta| Ok(necessary_condition(&with(eta)?, p)?.holds))?;
    let violated = necessary_condition(&with(upper)?, p)?.violated.unwrap_or(3);
    Ok((upper, violated))
}

/// Bisects the sufficient condition (for `lower`) and the necessary
/// condition (for `upper`) over `η ∈ [0, 1]` to [`ETA_TOL`]. The demand
/// stored in `params` is ignored.
pub fn throughput_bounds(params: &NetworkParams, p: &ModeDistribution) -> Result<ThroughputBounds> {
    let with = |eta: f64| params.with_eta(eta);

    let (lower, _) = bisect_demand("sufficient", |eta| Ok(sufficient_search(&with(eta)?, p).is_some()))?;
    let (lower, lower_witness) = match lower {
        Some(eta) => (eta, sufficient_search(&with(eta)?, p)),
        None => (0.0, None),
    };

    let (upper, upper_violation) = necessary_upper_bound(params, p)?;

    if lower > upper {
        return Err(Error::Inconsistent(format!("lower bound {lower} exceeds upper bound {upper}")));
    }
    Ok(ThroughputBounds {
        lower,
        upper,
        lower_witness,
        upper_violation,
        tolerance: ETA_TOL,
    })
}

/// JSON form of a verdict, optionally with bounds:
/// `{"necessary": {"holds", "slacks", "violated"}, "sufficient": {"holds", "theta", "drift"},
///   "classification", "bounds": {"lower", "upper"}}`.
pub fn verdict_json(verdict: &StabilityVerdict, bounds: Option<&ThroughputBounds>) -> serde_json::Value {
    let violated = verdict.necessary.violated.map(|i| format!("necessary{i}"));
    let mut out = serde_json::json!({
        "necessary": {
            "holds": verdict.necessary.holds,
            "slacks": verdict.necessary.slacks,
            "violated": violated,
            "floor": verdict.necessary.floor.x_lower.map(|v| if v.is_finite() { Some(v) } else { None }),
        },
        "sufficient": {
            "holds": verdict.sufficient.is_some(),
            "theta": verdict.sufficient.map(|w| w.theta),
            "drift": verdict.sufficient.map(|w| w.drift_value),
        },
        "classification": verdict.classification,
    });
    if let Some(b) = bounds {
        out["bounds"] = bounds_json(b);
    }
    out
}

pub fn bounds_json(b: &ThroughputBounds) -> serde_json::Value {
    serde_json::json!({
        "lower": b.lower,
        "upper": b.upper,
        "lower_witness": b.lower_witness,
        "upper_violation": format!("necessary{}", b.upper_violation),
        "tolerance": b.tolerance,
    })
}

/// Lyapunov certificate for a sufficient-condition witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovCertificate {
    pub theta: [f64; 2],
    /// Mode-dependent linear coefficients `a_s`.
    pub a: [f64; 4],
    /// Worst-link drift `𝒟_s` at `θ`, including the demand factor `η`.
    pub mode_drift: [f64; 4],
    /// `𝒟̄ = Σ_s p_s 𝒟_s`.
    pub mean_drift: f64,
    /// `c = −¼ 𝒟̄`.
    pub c: f64,
    pub d: f64,
    /// Max-norm residual of the linear solve for `a`.
    pub residual: f64,
}

/// Per-link growth rate of `(x_k − θ_k)_+`.
fn clipped_rates(params: &NetworkParams, theta: [f64; 2], mode: FaultMode, x: DensityState) -> [f64; 2] {
    let g = vector_field(params, mode, x);
    let xs = [x.x1, x.x2];
    [0, 1].map(|k| {
        if xs[k] > theta[k] {
            g[k]
        } else if xs[k] == theta[k] {
            g[k].max(0.0)
        } else {
            0.0
        }
    })
}

impl LyapunovCertificate {
    fn excess(&self, x: DensityState) -> f64 {
        (x.x1 - self.theta[0]).max(0.0) + (x.x2 - self.theta[1]).max(0.0)
    }

    /// `V(s, x) = ½ w² + a_s w` with `w = Σ_k (x_k − θ_k)_+`.
    pub fn value(&self, mode: FaultMode, x: DensityState) -> f64 {
        let w = self.excess(x);
        0.5 * w * w + self.a[mode.index()] * w
    }

    /// Generator applied to `V`:
    /// `(Σ_k D_k(s,x) + Σ_{s'} λ_{s,s'}(a_{s'} − a_s)) w + a_s Σ_k D_k(s,x)`.
    pub fn generator_value(&self, params: &NetworkParams, rates: &RateMatrix, mode: FaultMode, x: DensityState) -> f64 {
        let w = self.excess(x);
        let growth: f64 = clipped_rates(params, self.theta, mode, x).iter().sum();
        let a_s = self.a[mode.index()];
        let switching: f64 = FaultMode::ALL
            .iter()
            .map(|&t| rates.rate(mode, t) * (self.a[t.index()] - a_s))
            .sum();
        (growth + switching) * w + a_s * growth
    }

    /// Right-hand side `−c |x| + d` of the drift condition.
    pub fn drift_bound(&self, x: DensityState) -> f64 {
        -self.c * x.norm1() + self.d
    }
}

/// Grid resolution used to estimate the bounded remainder in `d`.
const REMAINDER_GRID: usize = 101;

/// Builds the certificate for `witness`. The coefficients solve
///
/// ```text
/// [ Q row 1 ]       [ 𝒟̄ − 𝒟_1 ]
/// [ Q row 2 ] a  =  [ 𝒟̄ − 𝒟_2 ]
/// [ Q row 3 ]       [ 𝒟̄ − 𝒟_3 ]
/// [ 1 0 0 0 ]       [ 1       ]
/// ```
///
/// with `Q` the generator of `rates`, which makes
/// `𝒟_s + Σ_{s'} λ_{s,s'}(a_{s'} − a_s) = 𝒟̄` in every mode when `p` is
/// stationary for `rates`. `d = 1.1 · max(0, max_grid a_s Σ_k D_k(s, x)) + c |θ|`.
pub fn lyapunov_certificate(
    params: &NetworkParams,
    p: &ModeDistribution,
    rates: &RateMatrix,
    witness: &ThetaWitness,
) -> Result<LyapunovCertificate> {
    let theta = witness.theta;
    if !(theta[0] >= 0.0 && theta[1] >= 0.0) || !theta.iter().all(|t| t.is_finite()) {
        return Err(Error::Domain(format!("thresholds must be finite and nonnegative, got {theta:?}")));
    }
    let balance = p.balance_residual(rates);
    if balance > 1e-8 {
        return Err(Error::InvalidParams(format!(
            "mode distribution is not stationary for the rates (balance residual {balance:e})"
        )));
    }

    let mode_drift = mode_drifts(params, theta);
    let mean_drift: f64 = mode_drift.iter().zip(p.as_array()).map(|(d, ps)| ps * d).sum();
    let c = -0.25 * mean_drift;
    if !(c > 0.0) {
        return Err(Error::CertificateInvalid(c));
    }

    let q = rates.generator();
    let m = [q[0], q[1], q[2], [1.0, 0.0, 0.0, 0.0]];
    let rhs = [
        mean_drift - mode_drift[0],
        mean_drift - mode_drift[1],
        mean_drift - mode_drift[2],
        1.0,
    ];
    let a = linalg::solve(m, rhs).map_err(|e| Error::Numerical(format!("coefficient system: {e}")))?;
    let residual = linalg::residual(&m, &a, &rhs);

    let extent = 2.0 * theta[0].max(theta[1]).max(1.0) + 5.0;
    let coords: Vec<f64> = (0..REMAINDER_GRID)
        .map(|i| extent * i as f64 / (REMAINDER_GRID - 1) as f64)
        .chain(theta)
        .collect();
    let mut remainder = f64::NEG_INFINITY;
    for &x1 in &coords {
        for &x2 in &coords {
            let x = DensityState { x1, x2 };
            for mode in FaultMode::ALL {
                let growth: f64 = clipped_rates(params, theta, mode, x).iter().sum();
                remainder = remainder.max(a[mode.index()] * growth);
            }
        }
    }
    let d = 1.1 * remainder.max(0.0) + c * (theta[0] + theta[1]);

    Ok(LyapunovCertificate {
        theta,
        a,
        mode_drift,
        mean_drift,
        c,
        d,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvariantCounterexample {
    pub mode: FaultMode,
    pub x: DensityState,
    pub link: usize,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantSetReport {
    /// Samples drawn outside `M`.
    pub checked: usize,
    pub counterexamples: Vec<InvariantCounterexample>,
    pub passed: bool,
}

/// Samples `(s, x)` outside `M` (uniform over modes and over
/// `[0, 2x̲1 + 1] × [0, 2x̲2 + 1]`) and checks that every coordinate below
/// its floor is pushed upward: `G_k(s, x) > 0` whenever `x_k < x̲_k`.
pub fn invariant_set_check(
    params: &NetworkParams,
    floors: &CongestionFloor,
    samples: usize,
    seed: u64,
) -> Result<InvariantSetReport> {
    if !floors.is_finite() {
        return Err(Error::Domain("invariant set check needs finite congestion floors".into()));
    }
    let mut report = InvariantSetReport {
        checked: 0,
        counterexamples: Vec::new(),
        passed: true,
    };
    if floors.x_lower.iter().all(|&v| v == 0.0) {
        return Ok(report);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = floors.x_lower.map(|v| 2.0 * v + 1.0);
    while report.checked < samples {
        let mode = FaultMode::from_index(rng.random_range(0..4));
        let x = DensityState {
            x1: rng.random::<f64>() * span[0],
            x2: rng.random::<f64>() * span[1],
        };
        if floors.contains(x) {
            continue;
        }
        report.checked += 1;
        let g = vector_field(params, mode, x);
        for (k, xk) in [x.x1, x.x2].into_iter().enumerate() {
            if xk < floors.x_lower[k] && !(g[k] > 0.0) {
                report.counterexamples.push(InvariantCounterexample {
                    mode,
                    x,
                    link: k + 1,
                    rate: g[k],
                });
            }
        }
    }
    report.passed = report.counterexamples.is_empty();
    Ok(report)
}
