//! Closed-form throughput lower bounds and their supporting machinery.
//!
//! For homogeneous links (`F1 = F2 = 1/2`) the throughput is at least
//! `1 / (1 + p2 + p3)`. With `p2 = p3` and `F1 ≥ F2` it is at least
//!
//! ```text
//! min{ (1 − dF)/(1 − p1), (1 − p4 dF)/(1 + 2 p2) },   dF = F1 − F2,
//! ```
//!
//! which switches branch at `dF = 1/(2 − p1)`. [`hetero_witness`] builds an
//! explicit `θ` below that bound.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FaultMode, ModeDistribution, NetworkParams, RateMatrix};
use crate::stability::{self, ThetaWitness};

const PROB_TOL: f64 = 1e-12;

fn check_prob(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be a probability in [0, 1], got {v}")))
    }
}

/// Identical per-link failure probability `p` with cross-link correlation `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct FailureModel {
    pub p_fail: f64,
    pub rho: f64,
}

impl FailureModel {
    /// Requires `0 ≤ p ≤ 1` and `ρ_min(p) ≤ ρ ≤ 1 − p`, where
    /// `ρ_min = max(−p, −(1 − p)²/p)` keeps `p1 = (1 − p)² + pρ` nonnegative.
    pub fn new(p_fail: f64, rho: f64) -> Result<Self> {
        check_prob("failure probability", p_fail)?;
        let lo = Self::min_rho(p_fail);
        if !(rho >= lo - PROB_TOL && rho <= 1.0 - p_fail + PROB_TOL) {
            return Err(Error::Domain(format!(
                "correlation {rho} outside [{lo}, {}] for failure probability {p_fail}",
                1.0 - p_fail
            )));
        }
        Ok(FailureModel { p_fail, rho })
    }

    /// Smallest admissible correlation for failure probability `p`.
    pub fn min_rho(p: f64) -> f64 {
        if p > 0.0 {
            (-p).max(-(1.0 - p) * (1.0 - p) / p)
        } else {
            0.0
        }
    }

    /// `p4 = p (p + ρ)`, `p2 = p3 = p (1 − p − ρ)`, `p1 = 1 − p2 − p3 − p4`.
    pub fn distribution(&self) -> Result<ModeDistribution> {
        let p = self.p_fail;
        let p4 = (p * (p + self.rho)).clamp(0.0, 1.0);
        let p2 = (p * (1.0 - p - self.rho)).clamp(0.0, 1.0);
        let p1 = (1.0 - 2.0 * p2 - p4).clamp(0.0, 1.0);
        ModeDistribution::new([p1, p2, p2, p4])
    }

    /// Product chain of two independent links with `fail + repair = total_rate`.
    /// Only defined for `ρ = 0`.
    pub fn independent_rates(&self, total_rate: f64) -> Result<RateMatrix> {
        if self.rho != 0.0 {
            return Err(Error::Domain(format!(
                "independent-link chain requires zero correlation, got {}",
                self.rho
            )));
        }
        RateMatrix::independent_links(total_rate * self.p_fail, total_rate * (1.0 - self.p_fail))
    }
}

/// `1 / (1 + p2 + p3)`.
pub fn homogeneous_lower_bound(p2: f64, p3: f64) -> Result<f64> {
    check_prob("p2", p2)?;
    check_prob("p3", p3)?;
    if p2 + p3 > 1.0 + PROB_TOL {
        return Err(Error::Domain(format!("p2 + p3 must not exceed 1, got {}", p2 + p3)));
    }
    Ok(1.0 / (1.0 + p2 + p3))
}

/// Homogeneous bound for independent links failing with probability `p`:
/// `1 / (1 + 2p(1 − p))`.
pub fn failure_rate_bound(p: f64) -> Result<f64> {
    check_prob("failure probability", p)?;
    Ok(1.0 / (1.0 + 2.0 * p * (1.0 - p)))
}

/// Homogeneous bound with failure correlation: `1 / (1 + 2p(1 − p − ρ))`.
pub fn correlation_bound(p: f64, rho: f64) -> Result<f64> {
    FailureModel::new(p, rho)?;
    Ok(1.0 / (1.0 + 2.0 * p * (1.0 - p - rho)))
}

fn check_hetero(d_f: f64, p1: f64, p2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d_f) {
        return Err(Error::Domain(format!("capacity difference must be in [0, 1], got {d_f}")));
    }
    check_prob("p1", p1)?;
    check_prob("p2", p2)?;
    let p4 = 1.0 - p1 - 2.0 * p2;
    if p4 < -PROB_TOL {
        return Err(Error::Domain(format!("p1 + 2 p2 must not exceed 1, got {}", p1 + 2.0 * p2)));
    }
    Ok(p4.max(0.0))
}

/// Branch point `1 / (2 − p1)` of the asymmetric bound.
pub fn hetero_threshold(p1: f64) -> f64 {
    1.0 / (2.0 - p1)
}

/// `min{(1 − dF)/(1 − p1), (1 − p4 dF)/(1 + 2p2)}` with `p3 = p2` and
/// `p4 = 1 − p1 − 2p2`.
///
/// For `p1 = 1` the first term is read as its limit: `+∞` for `dF < 1` and
/// `0` at `dF = 1`.
pub fn hetero_lower_bound(d_f: f64, p1: f64, p2: f64) -> Result<f64> {
    let p4 = check_hetero(d_f, p1, p2)?;
    let first = if p1 < 1.0 {
        (1.0 - d_f) / (1.0 - p1)
    } else if d_f < 1.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let second = (1.0 - p4 * d_f) / (1.0 + 2.0 * p2);
    Ok(first.min(second))
}

/// The same bound written per branch:
/// `(1 − p4 dF)/(1 + 2p2)` for `dF ≤ 1/(2 − p1)`, else `(1 − dF)/(1 − p1)`.
pub fn hetero_lower_bound_piecewise(d_f: f64, p1: f64, p2: f64) -> Result<f64> {
    let p4 = check_hetero(d_f, p1, p2)?;
    if d_f <= hetero_threshold(p1) {
        Ok((1.0 - p4 * d_f) / (1.0 + 2.0 * p2))
    } else {
        Ok((1.0 - d_f) / (1.0 - p1))
    }
}

/// Reference upper curve `min(1, −(2/3)√(3dF² − 6dF + 7) − 2dF + 10/3)` for
/// uniform mode probabilities and `β = 1`. A regression target for the
/// numeric necessary-condition bound, not a derived result.
pub fn hetero_upper_reference(d_f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&d_f) {
        return Err(Error::Domain(format!("capacity difference must be in [0, 1], got {d_f}")));
    }
    let curve = -(2.0 / 3.0) * (3.0 * d_f * d_f - 6.0 * d_f + 7.0).sqrt() - 2.0 * d_f + 10.0 / 3.0;
    Ok(curve.min(1.0))
}

/// `g(z) = z^{β+1} − A z^β + z − (1 − (1 + q)η)` with `A = 1 − (1 − q)η`,
/// `q = p2 + p3`. The symmetric sufficient condition holds at `z = e^{−θ}`
/// exactly when `g(z) < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GPolynomial {
    pub beta: f64,
    pub eta: f64,
    pub q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GValues {
    pub g: f64,
    pub dg: f64,
    pub d2g: f64,
}

impl GPolynomial {
    pub fn new(beta: f64, eta: f64, q: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("beta must be positive, got {beta}")));
        }
        check_prob("q", q)?;
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::Domain(format!("demand must be nonnegative, got {eta}")));
        }
        Ok(GPolynomial { beta, eta, q })
    }

    /// `A = 1 − (1 − q)η`.
    pub fn a(&self) -> f64 {
        1.0 - (1.0 - self.q) * self.eta
    }

    /// The limit `g(0⁺) = (1 + q)η − 1`.
    pub fn at_zero(&self) -> f64 {
        (1.0 + self.q) * self.eta - 1.0
    }

    /// `h(z) = (β + 1)z − A(β − 1)`, which carries the sign of `g''`.
    pub fn h(&self, z: f64) -> f64 {
        (self.beta + 1.0) * z - self.a() * (self.beta - 1.0)
    }

    /// Inflection point `z0 = A(β − 1)/(β + 1)`, defined for `β > 1`.
    pub fn z0(&self) -> Option<f64> {
        (self.beta > 1.0).then(|| self.a() * (self.beta - 1.0) / (self.beta + 1.0))
    }

    pub fn eval(&self, z: f64) -> Result<GValues> {
        if !(z > 0.0 && z <= 1.0) {
            return Err(Error::Domain(format!("g is evaluated on (0, 1], got z = {z}")));
        }
        let b = self.beta;
        let a = self.a();
        let zb = z.powf(b);
        let zb1 = z.powf(b - 1.0);
        Ok(GValues {
            g: zb * z - a * zb + z - (1.0 - (1.0 + self.q) * self.eta),
            dg: (b + 1.0) * zb - a * b * zb1 + 1.0,
            d2g: b * z.powf(b - 2.0) * self.h(z),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub grid: usize,
    pub min_dg: f64,
    pub argmin_z: f64,
    /// `β ≤ 1`: whether `g'' > 0` at every grid point.
    pub convex: Option<bool>,
    /// `β > 1`: the inflection point and `g'(z0) = 1 − A z0^{β−1}`.
    pub z0: Option<f64>,
    pub dg_at_z0: Option<f64>,
    /// `β > 1`: whether the grid minimum of `g'` sits within two grid cells of `z0`.
    pub argmin_near_z0: Option<bool>,
    pub passed: bool,
}

/// Samples `g'` on `z_i = i/grid`, `i = 1..=grid`, and checks `min g' > 0`
/// together with the shape of `g'`: convex on the grid for `β ≤ 1`, minimised
/// near `z0` for `β > 1`.
///
/// For `β < 1` with `A > 0`, `g'(z) → −∞` as `z → 0⁺`, so the check fails on
/// fine grids.
pub fn g_monotonicity_check(gp: &GPolynomial, grid: usize) -> MonotonicityReport {
    let n = grid.max(1);
    let mut min_dg = f64::INFINITY;
    let mut argmin_z = 1.0;
    let mut convex = true;
    for i in 1..=n {
        let z = i as f64 / n as f64;
        let v = gp.eval(z).expect("grid lies in (0, 1]");
        if v.dg < min_dg {
            min_dg = v.dg;
            argmin_z = z;
        }
        convex &= v.d2g > 0.0;
    }
    let z0 = gp.z0();
    let dg_at_z0 = z0.map(|z0| 1.0 - gp.a() * z0.powf(gp.beta - 1.0));
    let argmin_near_z0 = z0.map(|z0| (argmin_z - z0).abs() <= 2.0 / n as f64);
    let convex = (gp.beta <= 1.0).then_some(convex);
    let shape_ok = convex.unwrap_or(true) && argmin_near_z0.unwrap_or(true);
    MonotonicityReport {
        grid: n,
        min_dg,
        argmin_z,
        convex,
        z0,
        dg_at_z0,
        argmin_near_z0,
        passed: min_dg > 0.0 && shape_ok,
    }
}

/// Which branch of the construction produced the witness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessCase {
    /// `y = 1 − (η + F2)/F1`, search along `z`. Used when `dF > 1/(2 − p1)`
    /// or `η < dF`.
    FixedY,
    /// `(y^β − z^β)/(y^β + z^β) = ρ` held fixed, search along `z`. Used when
    /// `dF ≤ 1/(2 − p1)` and `η ≥ dF`.
    FixedRho,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WitnessSource {
    Construction,
    /// The construction did not verify; the witness came from the grid search.
    SearchFallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeteroWitness {
    pub witness: ThetaWitness,
    pub case: WitnessCase,
    pub source: WitnessSource,
    /// `(y, z)` of the constructed point, when the construction verified.
    pub yz: Option<[f64; 2]>,
}

const Z_FLOOR: f64 = 1e-9;
const RHO_FRACTION: f64 = 0.99;
const Z_TOL: f64 = 1e-10;

/// Builds a sufficient-condition witness for `params.eta()` strictly below
/// [`hetero_lower_bound`]. Requires `p2 = p3` and `F1 ≥ F2`.
///
/// Along the chosen curve the drift is negative as `z → 0⁺`; bisection finds
/// the first zero `z*` and the most negative of `z* 2^{−k}` (and the floor
/// `z = 1e-9`) is kept. If that point does not verify, the grid search is
/// tried; failure of both is [`Error::Inconsistent`].
pub fn hetero_witness(params: &NetworkParams, p: &ModeDistribution) -> Result<HeteroWitness> {
    let p1 = p.get(FaultMode::Nominal);
    let p2 = p.get(FaultMode::Link1Faulty);
    let p3 = p.get(FaultMode::Link2Faulty);
    if (p2 - p3).abs() > PROB_TOL {
        return Err(Error::Domain(format!("witness construction needs p2 = p3, got {p2} and {p3}")));
    }
    let (f1, f2) = (params.f1(), params.f2());
    if f1 < f2 {
        return Err(Error::Domain(format!("witness construction needs F1 ≥ F2, got {f1} < {f2}")));
    }
    let d_f = f1 - f2;
    let eta = params.eta();
    let bound = hetero_lower_bound(d_f.clamp(0.0, 1.0), p1, p2)?;
    if !(eta < bound) {
        return Err(Error::Domain(format!("demand {eta} is not below the bound {bound}")));
    }

    let beta = params.beta();
    let case = if d_f > hetero_threshold(p1) || eta < d_f {
        WitnessCase::FixedY
    } else {
        WitnessCase::FixedRho
    };
    // Maps z to (y, z) on the construction curve; also returns the z range.
    type Curve = Box<dyn Fn(f64) -> [f64; 2]>;
    let (curve, z_lo, z_hi): (Curve, f64, f64) = match case {
        WitnessCase::FixedY => {
            let y = (d_f - eta) / f1;
            (Box::new(move |z| [y, z]), Z_FLOOR, 1.0)
        }
        WitnessCase::FixedRho => {
            let rho = if eta > 0.0 { RHO_FRACTION * (d_f / eta).min(1.0) } else { 0.0 };
            let ratio = ((1.0 + rho) / (1.0 - rho)).powf(1.0 / beta);
            (Box::new(move |z| [ratio * z, z]), Z_FLOOR / ratio, 1.0 / ratio)
        }
    };
    let drift_at = |z: f64| {
        let yz = curve(z);
        let theta = [-yz[0].ln(), -yz[1].ln()];
        stability::sufficient_value(params, p, theta).map(|v| (theta, v))
    };

    let constructed = (|| -> Result<Option<([f64; 2], ThetaWitness)>> {
        let (_, v_lo) = drift_at(z_lo)?;
        if !(v_lo < 0.0) {
            return Ok(None);
        }
        let mut candidates = vec![z_lo];
        let (_, v_hi) = drift_at(z_hi)?;
        if v_hi < 0.0 {
            candidates.push(z_hi);
        } else {
            let (mut lo, mut hi) = (z_lo, z_hi);
            while hi - lo > Z_TOL {
                let mid = 0.5 * (lo + hi);
                if drift_at(mid)?.1 < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            candidates.push(lo);
            let mut z = lo;
            while z * 0.5 > z_lo {
                z *= 0.5;
                candidates.push(z);
            }
        }
        let mut best: Option<([f64; 2], ThetaWitness)> = None;
        for z in candidates {
            let (theta, v) = drift_at(z)?;
            if v < 0.0 && best.is_none_or(|(_, w)| v < w.drift_value) {
                best = Some((curve(z), ThetaWitness { theta, drift_value: v }));
            }
        }
        Ok(best)
    })()?;

    if let Some((yz, witness)) = constructed {
        return Ok(HeteroWitness {
            witness,
            case,
            source: WitnessSource::Construction,
            yz: Some(yz),
        });
    }
    match stability::sufficient_search(params, p) {
        Some(witness) => Ok(HeteroWitness {
            witness,
            case,
            source: WitnessSource::SearchFallback,
            yz: None,
        }),
        None => Err(Error::Inconsistent(format!(
            "no witness below the closed-form bound: dF = {d_f}, p1 = {p1}, p2 = {p2}, η = {eta}"
        ))),
    }
}

/// `(p, 1/(1 + 2p(1 − p)))` at `n` evenly spaced `p ∈ [0, 1]`.
pub fn failure_rate_curve(n: usize) -> Vec<(f64, f64)> {
    linspace(0.0, 1.0, n)
        .map(|p| (p, failure_rate_bound(p).expect("p in [0, 1]")))
        .collect()
}

/// `(ρ, 1/(1.5 − ρ))`: the correlation bound at `p = 1/2`, `ρ ∈ [−1/2, 1/2]`.
pub fn correlation_curve(n: usize) -> Vec<(f64, f64)> {
    linspace(-0.5, 0.5, n)
        .map(|rho| (rho, correlation_bound(0.5, rho).expect("admissible correlation")))
        .collect()
}

/// `(dF, lower, upper reference)` for uniform mode probabilities.
pub fn hetero_curve(n: usize) -> Vec<(f64, f64, f64)> {
    linspace(0.0, 1.0, n)
        .map(|d_f| {
            (
                d_f,
                hetero_lower_bound(d_f, 0.25, 0.25).expect("valid inputs"),
                hetero_upper_reference(d_f).expect("valid inputs"),
            )
        })
        .collect()
}

/// `n` evenly spaced points with exact endpoints.
pub fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if n == 1 {
            a
        } else if i == n - 1 {
            b
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    })
}
