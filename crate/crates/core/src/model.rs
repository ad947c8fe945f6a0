//! The two-link network: flow functions, sensing-fault mappings, logit
//! routing, the per-mode vector field, and the fault-mode chain.
//!
//! Modes are numbered 1..=4 throughout the crate and in every file format:
//!
//! | mode | link 1 sensor | link 2 sensor | observed state |
//! |------|---------------|---------------|----------------|
//! | 1    | good          | good          | `(x1, x2)`     |
//! | 2    | faulty        | good          | `(0, x2)`      |
//! | 3    | good          | faulty        | `(x1, 0)`      |
//! | 4    | faulty        | faulty        | `(0, 0)`       |
//!
//! A faulty sensor reports zero density, so the router believes the link is
//! empty and sends it more traffic.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// Tolerance on `F1 + F2 = 1`.
pub const CAPACITY_SUM_TOL: f64 = 1e-12;
/// Tolerance on `Σ p = 1` for a [`ModeDistribution`].
pub const PROB_SUM_TOL: f64 = 1e-12;

/// One of the two parallel links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Link {
    One,
    Two,
}

impl Link {
    pub const BOTH: [Link; 2] = [Link::One, Link::Two];

    pub fn index(self) -> usize {
        match self {
            Link::One => 0,
            Link::Two => 1,
        }
    }

    pub fn other(self) -> Link {
        match self {
            Link::One => Link::Two,
            Link::Two => Link::One,
        }
    }

    /// Link from its 1-based number.
    pub fn from_number(k: u8) -> Result<Link> {
        match k {
            1 => Ok(Link::One),
            2 => Ok(Link::Two),
            _ => Err(Error::Domain(format!("link index must be 1 or 2, got {k}"))),
        }
    }
}

/// Sensing fault mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FaultMode {
    /// Both sensors report the true density.
    Nominal,
    /// Link 1's sensor reads zero.
    Link1Faulty,
    /// Link 2's sensor reads zero.
    Link2Faulty,
    /// Both sensors read zero.
    BothFaulty,
}

impl FaultMode {
    pub const ALL: [FaultMode; 4] = [
        FaultMode::Nominal,
        FaultMode::Link1Faulty,
        FaultMode::Link2Faulty,
        FaultMode::BothFaulty,
    ];

    /// Zero-based index, used for arrays indexed by mode.
    pub fn index(self) -> usize {
        self.number() as usize - 1
    }

    /// Mode number in `1..=4`.
    pub fn number(self) -> u8 {
        match self {
            FaultMode::Nominal => 1,
            FaultMode::Link1Faulty => 2,
            FaultMode::Link2Faulty => 3,
            FaultMode::BothFaulty => 4,
        }
    }

    pub fn from_number(s: u8) -> Result<FaultMode> {
        match s {
            1..=4 => Ok(FaultMode::ALL[s as usize - 1]),
            _ => Err(Error::Domain(format!("fault mode must be in 1..=4, got {s}"))),
        }
    }

    pub fn from_index(i: usize) -> FaultMode {
        FaultMode::ALL[i]
    }

    /// Whether the sensor of `link` reads zero in this mode.
    pub fn is_faulty(self, link: Link) -> bool {
        matches!(
            (self, link),
            (FaultMode::BothFaulty, _)
                | (FaultMode::Link1Faulty, Link::One)
                | (FaultMode::Link2Faulty, Link::Two)
        )
    }
}

impl fmt::Display for FaultMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for FaultMode {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for FaultMode {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let n = u8::deserialize(deserializer)?;
        FaultMode::from_number(n).map_err(serde::de::Error::custom)
    }
}

/// Capacities, routing sensitivity and demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    capacity: [f64; 2],
    beta: f64,
    eta: f64,
}

impl NetworkParams {
    /// Validates `F1, F2 ≥ 0`, `F1 + F2 = 1` (to 1e-12), `β > 0`, `η ≥ 0`.
    /// Capacities that do not sum to one are rejected, never rescaled.
    pub fn new(f1: f64, f2: f64, beta: f64, eta: f64) -> Result<Self> {
        if !(f1.is_finite() && f2.is_finite() && beta.is_finite() && eta.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if f1 < 0.0 || f2 < 0.0 {
            return Err(Error::InvalidParams(format!("capacities must be nonnegative, got ({f1}, {f2})")));
        }
        if (f1 + f2 - 1.0).abs() > CAPACITY_SUM_TOL {
            return Err(Error::InvalidParams(format!("capacities must sum to 1, got {f1} + {f2} = {}", f1 + f2)));
        }
        if beta <= 0.0 {
            return Err(Error::InvalidParams(format!("beta must be positive, got {beta}")));
        }
        if eta < 0.0 {
            return Err(Error::InvalidParams(format!("demand must be nonnegative, got {eta}")));
        }
        Ok(NetworkParams { capacity: [f1, f2], beta, eta })
    }

    /// Symmetric links `F1 = F2 = 1/2`.
    pub fn homogeneous(beta: f64, eta: f64) -> Result<Self> {
        Self::new(0.5, 0.5, beta, eta)
    }

    /// Capacities `F1 = (1 + dF)/2`, `F2 = (1 − dF)/2`.
    pub fn from_capacity_difference(d_f: f64, beta: f64, eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&d_f) {
            return Err(Error::Domain(format!("capacity difference must be in [0, 1], got {d_f}")));
        }
        Self::new(0.5 * (1.0 + d_f), 0.5 * (1.0 - d_f), beta, eta)
    }

    pub fn with_eta(&self, eta: f64) -> Result<Self> {
        Self::new(self.capacity[0], self.capacity[1], self.beta, eta)
    }

    pub fn capacity(&self, link: Link) -> f64 {
        self.capacity[link.index()]
    }

    pub fn f1(&self) -> f64 {
        self.capacity[0]
    }

    pub fn f2(&self) -> f64 {
        self.capacity[1]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }
}

/// True traffic densities of the two links.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DensityState {
    pub x1: f64,
    pub x2: f64,
}

impl DensityState {
    pub fn new(x1: f64, x2: f64) -> Result<Self> {
        if !(x1 >= 0.0 && x2 >= 0.0) || !x1.is_finite() || !x2.is_finite() {
            return Err(Error::Domain(format!("densities must be finite and nonnegative, got ({x1}, {x2})")));
        }
        Ok(DensityState { x1, x2 })
    }

    pub fn get(&self, link: Link) -> f64 {
        match link {
            Link::One => self.x1,
            Link::Two => self.x2,
        }
    }

    /// One-norm `x1 + x2`.
    pub fn norm1(&self) -> f64 {
        self.x1 + self.x2
    }
}

/// Outflow `f_k(x) = F_k (1 − e^{−x})` of a link at density `x`.
pub fn flow(params: &NetworkParams, link: Link, density: f64) -> Result<f64> {
    if !(density >= 0.0) {
        return Err(Error::Domain(format!("density must be nonnegative, got {density}")));
    }
    Ok(flow_unchecked(params.capacity(link), density))
}

#[inline]
pub(crate) fn flow_unchecked(capacity: f64, density: f64) -> f64 {
    -capacity * (-density).exp_m1()
}

/// The observed state `T_s(x)`: faulty sensors read zero.
pub fn fault_map(mode: FaultMode, x: DensityState) -> DensityState {
    DensityState {
        x1: if mode.is_faulty(Link::One) { 0.0 } else { x.x1 },
        x2: if mode.is_faulty(Link::Two) { 0.0 } else { x.x2 },
    }
}

/// Logit split of demand given observed densities; `μ2 = 1 − μ1`.
#[inline]
pub(crate) fn logit_split(beta: f64, observed1: f64, observed2: f64) -> [f64; 2] {
    let a = -beta * observed1;
    let b = -beta * observed2;
    let m = a.max(b);
    let ea = (a - m).exp();
    let eb = (b - m).exp();
    let mu1 = ea / (ea + eb);
    [mu1, 1.0 - mu1]
}

/// Routing fractions `μ(s, x) = μ(T_s(x))` under the logit rule.
pub fn routing_fraction(params: &NetworkParams, mode: FaultMode, x: DensityState) -> [f64; 2] {
    let observed = fault_map(mode, x);
    logit_split(params.beta, observed.x1, observed.x2)
}

/// `G(s, x) = η μ(s, x) − f(x)`.
pub fn vector_field(params: &NetworkParams, mode: FaultMode, x: DensityState) -> [f64; 2] {
    let mu = routing_fraction(params, mode, x);
    [
        params.eta * mu[0] - flow_unchecked(params.capacity[0], x.x1),
        params.eta * mu[1] - flow_unchecked(params.capacity[1], x.x2),
    ]
}

/// Transition rates `λ[s][s']` of the fault-mode chain, indexed by
/// zero-based mode index. The diagonal is zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateMatrix {
    lambda: [[f64; 4]; 4],
}

impl RateMatrix {
    /// Validates nonnegative finite off-diagonal rates, a zero diagonal, and
    /// an irreducible chain.
    pub fn new(lambda: [[f64; 4]; 4]) -> Result<Self> {
        let rates = Self::new_reducible(lambda)?;
        if !rates.is_irreducible() {
            return Err(Error::NotErgodic(format!("reachability graph of {lambda:?} is not strongly connected")));
        }
        Ok(rates)
    }

    /// Like [`RateMatrix::new`] but accepts reducible chains. Only the
    /// simulator takes these (e.g. all-zero rates freeze the mode); the
    /// stationary analysis requires irreducibility.
    pub fn new_reducible(lambda: [[f64; 4]; 4]) -> Result<Self> {
        for (s, row) in lambda.iter().enumerate() {
            for (t, &rate) in row.iter().enumerate() {
                if !rate.is_finite() || rate < 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "rate from mode {} to mode {} must be finite and nonnegative, got {rate}",
                        s + 1,
                        t + 1
                    )));
                }
                if s == t && rate != 0.0 {
                    return Err(Error::InvalidParams(format!(
                        "diagonal rate of mode {} must be zero, got {rate}",
                        s + 1
                    )));
                }
            }
        }
        Ok(RateMatrix { lambda })
    }

    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = [false; 4];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(s) = stack.pop() {
                for (t, seen_t) in seen.iter_mut().enumerate() {
                    let rate = if forward { self.lambda[s][t] } else { self.lambda[t][s] };
                    if rate > 0.0 && !*seen_t {
                        *seen_t = true;
                        stack.push(t);
                    }
                }
            }
            seen.iter().all(|&v| v)
        };
        reach(true) && reach(false)
    }

    /// All off-diagonal rates equal to `rate`.
    pub fn uniform(rate: f64) -> Result<Self> {
        let mut lambda = [[rate; 4]; 4];
        for (i, row) in lambda.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        Self::new(lambda)
    }

    /// Rates `λ[s][s'] = κ p[s']`, whose stationary law is `p` for any `κ > 0`.
    pub fn from_distribution(p: &ModeDistribution, kappa: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidParams(format!("rate scale must be positive, got {kappa}")));
        }
        let mut lambda = [[0.0; 4]; 4];
        for (s, row) in lambda.iter_mut().enumerate() {
            for (t, rate) in row.iter_mut().enumerate() {
                if s != t {
                    *rate = kappa * p.p[t];
                }
            }
        }
        Self::new(lambda)
    }

    /// Two independent links, each failing at `fail_rate` and repaired at
    /// `repair_rate`.
    pub fn independent_links(fail_rate: f64, repair_rate: f64) -> Result<Self> {
        let (a, g) = (fail_rate, repair_rate);
        Self::new([
            [0.0, a, a, 0.0],
            [g, 0.0, 0.0, a],
            [g, 0.0, 0.0, a],
            [0.0, g, g, 0.0],
        ])
    }

    pub fn rate(&self, from: FaultMode, to: FaultMode) -> f64 {
        self.lambda[from.index()][to.index()]
    }

    pub fn as_array(&self) -> &[[f64; 4]; 4] {
        &self.lambda
    }

    /// Total exit rate `Σ_{s'} λ[s][s']`.
    pub fn exit_rate(&self, from: FaultMode) -> f64 {
        self.lambda[from.index()].iter().sum()
    }

    /// Infinitesimal generator `Q` with `Q[s][s] = −Σ_{s'≠s} λ[s][s']`.
    pub fn generator(&self) -> [[f64; 4]; 4] {
        let mut q = self.lambda;
        for (s, row) in q.iter_mut().enumerate() {
            row[s] = -self.lambda[s].iter().sum::<f64>();
        }
        q
    }
}

/// Probability of each fault mode, indexed by zero-based mode index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeDistribution {
    p: [f64; 4],
}

impl ModeDistribution {
    pub fn new(p: [f64; 4]) -> Result<Self> {
        if p.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidParams(format!("probabilities must be finite and nonnegative, got {p:?}")));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidParams(format!("probabilities must sum to 1, got {sum}")));
        }
        Ok(ModeDistribution { p })
    }

    pub fn uniform() -> Self {
        ModeDistribution { p: [0.25; 4] }
    }

    pub fn get(&self, mode: FaultMode) -> f64 {
        self.p[mode.index()]
    }

    pub fn as_array(&self) -> &[f64; 4] {
        &self.p
    }

    /// Largest `|p_s Σ λ_{s,·} − Σ_{s'} p_{s'} λ_{s',s}|` over modes.
    pub fn balance_residual(&self, rates: &RateMatrix) -> f64 {
        let q = rates.generator();
        (0..4)
            .map(|s| (0..4).map(|t| self.p[t] * q[t][s]).sum::<f64>().abs())
            .fold(0.0, f64::max)
    }
}

/// Unique stationary distribution of an irreducible mode chain, from the
/// balance equations with the last one replaced by `Σ p = 1`.
pub fn stationary_distribution(rates: &RateMatrix) -> Result<ModeDistribution> {
    let q = rates.generator();
    let mut a = [[0.0; 4]; 4];
    for (s, row) in a.iter_mut().enumerate().take(3) {
        for (t, entry) in row.iter_mut().enumerate() {
            *entry = q[t][s];
        }
    }
    a[3] = [1.0; 4];
    let mut p = linalg::solve(a, [0.0, 0.0, 0.0, 1.0])?;
    for v in p.iter_mut() {
        if *v < 0.0 {
            if *v < -1e-12 {
                return Err(Error::Numerical(format!("negative stationary probability {v}")));
            }
            *v = 0.0;
        }
    }
    let sum: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= sum);
    ModeDistribution::new(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nominal(eta: f64) -> NetworkParams {
        NetworkParams::homogeneous(1.0, eta).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(NetworkParams::new(0.6, 0.5, 1.0, 0.5).is_err());
        assert!(NetworkParams::new(0.5, 0.5, 0.0, 0.5).is_err());
        assert!(NetworkParams::new(0.5, 0.5, 1.0, -0.1).is_err());
        assert!(NetworkParams::new(1.5, -0.5, 1.0, 0.1).is_err());
        assert!(NetworkParams::new(1.0, 0.0, 1.0, 0.1).is_ok());
    }

    #[test]
    fn flow_examples() {
        let p = nominal(0.8);
        assert_eq!(flow(&p, Link::One, 0.0).unwrap(), 0.0);
        let sat = flow(&p, Link::One, 50.0).unwrap();
        assert!(sat <= 0.5 && 0.5 - sat < 1e-20);
        assert!(flow(&p, Link::One, 30.0).unwrap() < 0.5);
        assert!((flow(&p, Link::Two, 0.732668).unwrap() - 0.26).abs() < 1e-3);
        assert!(flow(&p, Link::One, -1e-3).is_err());
        assert!(flow(&p, Link::One, f64::NAN).is_err());
    }

    #[test]
    fn fault_map_examples() {
        let x = DensityState::new(3.2, 1.1).unwrap();
        assert_eq!(fault_map(FaultMode::BothFaulty, x), DensityState { x1: 0.0, x2: 0.0 });
        assert_eq!(fault_map(FaultMode::Nominal, x), x);
        assert_eq!(fault_map(FaultMode::Link1Faulty, x), DensityState { x1: 0.0, x2: 1.1 });
        assert_eq!(fault_map(FaultMode::Link2Faulty, x), DensityState { x1: 3.2, x2: 0.0 });
    }

    #[test]
    fn routing_examples() {
        let p = nominal(0.5);
        let any = DensityState::new(4.0, 0.3).unwrap();
        assert_eq!(routing_fraction(&p, FaultMode::BothFaulty, any), [0.5, 0.5]);

        let x = DensityState::new(0.0, 2f64.ln()).unwrap();
        let mu = routing_fraction(&p, FaultMode::Nominal, x);
        assert!((mu[0] - 2.0 / 3.0).abs() < 1e-15);

        let z: f64 = 0.3;
        let x = DensityState::new(5.0, -z.ln()).unwrap();
        let mu = routing_fraction(&p, FaultMode::Link1Faulty, x);
        assert!((mu[0] - 1.0 / (1.0 + z)).abs() < 1e-15);
        assert!((mu[1] - z / (1.0 + z)).abs() < 1e-15);
    }

    #[test]
    fn routing_survives_huge_densities() {
        let p = NetworkParams::homogeneous(5.0, 0.5).unwrap();
        let x = DensityState::new(1e6, 0.0).unwrap();
        let mu = routing_fraction(&p, FaultMode::Nominal, x);
        assert!(mu[0].is_finite() && mu[1] == 1.0);
    }

    #[test]
    fn vector_field_examples() {
        let x = DensityState::new(1.0, 1.0).unwrap();
        let g = vector_field(&nominal(0.0), FaultMode::Link2Faulty, x);
        let drain = -0.5 * (1.0 - (-1.0f64).exp());
        assert!((g[0] - drain).abs() < 1e-15 && (g[1] - drain).abs() < 1e-15);

        let p = nominal(0.8);
        let x = DensityState::new(0.4, 2.5).unwrap();
        let g = vector_field(&p, FaultMode::BothFaulty, x);
        assert!((g[0] - (0.4 - flow(&p, Link::One, 0.4).unwrap())).abs() < 1e-15);

        // At the congestion floor the worst-case routed inflow balances outflow.
        let floor = 0.732668_f64;
        let inflow = 0.8 * (-floor).exp() / (1.0 + (-floor).exp());
        assert!((inflow - flow(&p, Link::One, floor).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn rate_matrix_validation() {
        let mut l = [[1.0; 4]; 4];
        assert!(RateMatrix::new(l).is_err(), "nonzero diagonal");
        for (i, row) in l.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        assert!(RateMatrix::new(l).is_ok());
        l[0][1] = -1.0;
        assert!(RateMatrix::new(l).is_err());

        // Mode 4 absorbing.
        let reducible = [
            [0.0, 1.0, 1.0, 1.0],
            [1.0, 0.0, 1.0, 1.0],
            [1.0, 1.0, 0.0, 1.0],
            [0.0, 0.0, 0.0, 0.0],
        ];
        assert!(matches!(RateMatrix::new(reducible), Err(Error::NotErgodic(_))));
        assert!(RateMatrix::new_reducible([[0.0; 4]; 4]).is_ok());
    }

    #[test]
    fn stationary_symmetric_and_product_chains() {
        let p = stationary_distribution(&RateMatrix::uniform(1.0).unwrap()).unwrap();
        for v in p.as_array() {
            assert!((v - 0.25).abs() < 1e-15);
        }

        let rates = RateMatrix::independent_links(1.0, 3.0).unwrap();
        let p = stationary_distribution(&rates).unwrap();
        let expect = [9.0 / 16.0, 3.0 / 16.0, 3.0 / 16.0, 1.0 / 16.0];
        for (a, b) in p.as_array().iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(p.balance_residual(&rates) < 1e-10);
    }

    #[test]
    fn from_distribution_reproduces_target() {
        let target = ModeDistribution::new([0.4, 0.1, 0.2, 0.3]).unwrap();
        let rates = RateMatrix::from_distribution(&target, 2.5).unwrap();
        let p = stationary_distribution(&rates).unwrap();
        for (a, b) in p.as_array().iter().zip(target.as_array()) {
            assert!((a - b).abs() < 1e-14);
        }
        let degenerate = ModeDistribution::new([1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            RateMatrix::from_distribution(&degenerate, 1.0),
            Err(Error::NotErgodic(_))
        ));
    }

    #[test]
    fn mode_numbering_round_trips() {
        for m in FaultMode::ALL {
            assert_eq!(FaultMode::from_number(m.number()).unwrap(), m);
            assert_eq!(FaultMode::from_index(m.index()), m);
        }
        assert!(FaultMode::from_number(0).is_err());
        assert!(FaultMode::from_number(5).is_err());
    }
}
