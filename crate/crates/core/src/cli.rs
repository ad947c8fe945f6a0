//! Experiment configuration and the commands behind the `faultroute` binary.
//!
//! Exit codes: 0 certified stable (or success for non-verdict commands),
//! 2 certified unstable, 3 indeterminate, 1 any error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::closed_form::{self, FailureModel};
use crate::format::sig6;
use crate::model::{stationary_distribution, FaultMode, ModeDistribution, NetworkParams, RateMatrix};
use crate::sim::{self, SimConfig};
use crate::stability::{self, Classification};

/// Tolerance on the sum of user-supplied stationary probabilities.
pub const PROBS_SUM_TOL: f64 = 1e-9;

pub const EXIT_STABLE: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_UNSTABLE: i32 = 2;
pub const EXIT_INDETERMINATE: i32 = 3;

pub fn exit_code(c: Classification) -> i32 {
    match c {
        Classification::CertifiedStable => EXIT_STABLE,
        Classification::CertifiedUnstable => EXIT_UNSTABLE,
        Classification::Indeterminate => EXIT_INDETERMINATE,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Analysis {
    Check,
    Bounds,
    Figure,
    Simulate,
    Scan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Figure {
    HomoRate,
    HomoCorr,
    Hetero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FailureSpec {
    pub p: f64,
    #[serde(default)]
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default = "default_etas")]
    pub etas: Vec<f64>,
    #[serde(default = "default_replications")]
    pub replications: usize,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { etas: default_etas(), replications: default_replications() }
    }
}

fn default_etas() -> Vec<f64> {
    (1..=11).map(|i| i as f64 / 10.0).collect()
}

fn default_replications() -> usize {
    4
}

fn default_kappa() -> f64 {
    1.0
}

fn is_default_kappa(k: &f64) -> bool {
    *k == 1.0
}

/// JSON experiment file. Exactly one of `rates`, `failure`, `probs` must be
/// present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "F1")]
    pub f1: f64,
    #[serde(rename = "F2")]
    pub f2: f64,
    pub beta: f64,
    #[serde(default)]
    pub eta: f64,
    /// `rates[s][s']`, zero diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<[[f64; 4]; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<FailureSpec>,
    /// Stationary probabilities of modes 1..4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probs: Option<[f64; 4]>,
    /// Rate scale of the chain `λ_{s,s'} = κ p_{s'}` built from `failure`
    /// or `probs` for simulation.
    #[serde(default = "default_kappa", skip_serializing_if = "is_default_kappa")]
    pub kappa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<Analysis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub figure: Option<Figure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sim: Option<SimConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Validated chain input.
#[derive(Debug, Clone, PartialEq)]
pub enum Chain {
    Rates(RateMatrix),
    Failure(FailureModel),
    Probs(ModeDistribution),
}

/// A validated experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub params: NetworkParams,
    pub chain: Chain,
    pub kappa: f64,
}

impl Experiment {
    /// Stationary mode distribution used by the analytic commands.
    pub fn distribution(&self) -> crate::Result<ModeDistribution> {
        match &self.chain {
            Chain::Rates(r) => stationary_distribution(r),
            Chain::Failure(f) => f.distribution(),
            Chain::Probs(p) => Ok(*p),
        }
    }

    /// Rate matrix used by the simulator.
    pub fn rates(&self) -> crate::Result<RateMatrix> {
        match &self.chain {
            Chain::Rates(r) => Ok(*r),
            Chain::Failure(_) | Chain::Probs(_) => RateMatrix::from_distribution(&self.distribution()?, self.kappa),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).context("malformed experiment config")
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn experiment(&self) -> anyhow::Result<Experiment> {
        let params = NetworkParams::new(self.f1, self.f2, self.beta, self.eta)?;
        let given = [self.rates.is_some(), self.failure.is_some(), self.probs.is_some()];
        match given.iter().filter(|g| **g).count() {
            0 => bail!("config needs exactly one of \"rates\", \"failure\", \"probs\"; none given"),
            1 => {}
            _ => bail!("config needs exactly one of \"rates\", \"failure\", \"probs\"; several given"),
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            bail!("kappa must be positive, got {}", self.kappa);
        }
        let chain = if let Some(r) = self.rates {
            Chain::Rates(RateMatrix::new(r)?)
        } else if let Some(f) = self.failure {
            Chain::Failure(FailureModel::new(f.p, f.rho)?)
        } else {
            let p = self.probs.expect("one chain spec");
            let sum: f64 = p.iter().sum();
            if !((sum - 1.0).abs() <= PROBS_SUM_TOL) {
                bail!("probs must sum to 1 within {PROBS_SUM_TOL:e}, got {sum}");
            }
            Chain::Probs(ModeDistribution::new(p.map(|v| v / sum))?)
        };
        Ok(Experiment { params, chain, kappa: self.kappa })
    }
}

#[derive(Debug, Parser)]
#[command(name = "faultroute", version, about = "Stability bounds and simulation for two-link routing under sensing faults")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct GlobalOpts {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides the config's "output". Default: out
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Simulation seed; overrides the config's sim.seed.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    /// Do not print results to stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    /// Print the effective config (after overrides) and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Necessary and sufficient stability tests at the configured demand.
    Check {
        /// Also compute numeric throughput bounds.
        #[arg(long)]
        with_bounds: bool,
    },
    /// Numeric throughput bounds, annotated with closed-form values.
    Bounds,
    /// Closed-form bound curves (all three if none given).
    Figure { which: Option<Figure> },
    /// Simulate trajectories and probe stability empirically.
    Simulate {
        /// Independent replications for the probe.
        #[arg(long, default_value_t = 1)]
        replications: usize,
    },
    /// Empirical stability over a demand grid.
    Scan,
}

/// Parses `args`, runs the command, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

struct Session {
    config: Option<ExperimentConfig>,
    out: PathBuf,
    quiet: bool,
    started: Instant,
}

impl Session {
    fn experiment(&self) -> anyhow::Result<Experiment> {
        self.config().and_then(|c| c.experiment())
    }

    fn config(&self) -> anyhow::Result<&ExperimentConfig> {
        self.config.as_ref().ok_or_else(|| anyhow!("this command needs --config"))
    }

    fn sim(&self) -> SimConfig {
        self.config.as_ref().and_then(|c| c.sim).unwrap_or_default()
    }

    fn print(&self, text: &str) {
        if !self.quiet {
            println!("{text}");
        }
    }

    fn write(&self, name: &str, contents: &str) -> anyhow::Result<PathBuf> {
        fs::create_dir_all(&self.out).with_context(|| format!("cannot create output directory {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> anyhow::Result<PathBuf> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// One metadata file per invocation.
    fn finish(&self, command: &str, files: &[PathBuf], seeds: &[u64], extra: serde_json::Value) -> anyhow::Result<()> {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let meta = serde_json::json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": self.config,
            "seeds": seeds,
            "generator": sim::GENERATOR,
            "files": files.iter().map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
            "wall_time_s": self.started.elapsed().as_secs_f64(),
            "timestamp_unix": timestamp,
            "result": extra,
        });
        self.write_json(&format!("{command}_metadata.json"), &meta)?;
        Ok(())
    }
}

fn execute(cli: &Cli) -> anyhow::Result<i32> {
    let g = &cli.global;
    let mut config = g.config.as_deref().map(ExperimentConfig::load).transpose()?;
    if let Some(c) = config.as_mut() {
        if let Some(seed) = g.seed {
            c.sim = Some(SimConfig { seed, ..c.sim.unwrap_or_default() });
        }
        if let Some(out) = &g.out {
            c.output = Some(out.clone());
        }
    }
    if g.dump_config {
        let c = config.as_ref().ok_or_else(|| anyhow!("--dump-config needs --config"))?;
        c.experiment()?;
        println!("{}", c.to_json());
        return Ok(0);
    }
    let out = g
        .out
        .clone()
        .or_else(|| config.as_ref().and_then(|c| c.output.clone()))
        .unwrap_or_else(|| PathBuf::from("out"));
    let mut ctx = Session { config, out, quiet: g.quiet, started: Instant::now() };

    let command = match &cli.command {
        Some(c) => match c {
            Command::Check { with_bounds } => (Analysis::Check, *with_bounds, None, 1),
            Command::Bounds => (Analysis::Bounds, false, None, 1),
            Command::Figure { which } => (Analysis::Figure, false, *which, 1),
            Command::Simulate { replications } => (Analysis::Simulate, false, None, *replications),
            Command::Scan => (Analysis::Scan, false, None, 1),
        },
        None => {
            let c = ctx.config().context("no subcommand given")?;
            let a = c.analysis.ok_or_else(|| anyhow!("no subcommand given and the config has no \"analysis\""))?;
            (a, false, c.figure, 1)
        }
    };
    ctx.started = Instant::now();
    match command {
        (Analysis::Check, with_bounds, _, _) => cmd_check(&ctx, with_bounds),
        (Analysis::Bounds, ..) => cmd_bounds(&ctx),
        (Analysis::Figure, _, which, _) => cmd_figure(&ctx, which),
        (Analysis::Simulate, _, _, reps) => cmd_simulate(&ctx, reps),
        (Analysis::Scan, ..) => cmd_scan(&ctx),
    }
}

fn cmd_check(ctx: &Session, with_bounds: bool) -> anyhow::Result<i32> {
    let exp = ctx.experiment()?;
    let p = exp.distribution()?;
    let verdict = stability::assess(&exp.params, &p)?;
    let bounds = if with_bounds { Some(stability::throughput_bounds(&exp.params, &p)?) } else { None };
    let json = stability::verdict_json(&verdict, bounds.as_ref());
    ctx.print(&serde_json::to_string_pretty(&json)?);
    let file = ctx.write_json("verdict.json", &json)?;
    ctx.finish("check", &[file], &[], serde_json::json!({ "classification": verdict.classification }))?;
    Ok(exit_code(verdict.classification))
}

/// Closed-form values that apply to the experiment, for cross-checking.
fn closed_form_annotations(exp: &Experiment, p: &ModeDistribution) -> serde_json::Value {
    let [p1, p2, p3, _] = *p.as_array();
    let (f1, f2) = (exp.params.f1(), exp.params.f2());
    let mut notes = serde_json::Map::new();
    if f1 == f2 {
        if let Ok(v) = closed_form::homogeneous_lower_bound(p2, p3) {
            notes.insert("closed_form_lower".into(), v.into());
        }
    } else if (p2 - p3).abs() <= 1e-12 {
        if let Ok(v) = closed_form::hetero_lower_bound((f1 - f2).abs(), p1, p2) {
            notes.insert("closed_form_lower".into(), v.into());
        }
    }
    let uniform = p.as_array().iter().all(|v| (v - 0.25).abs() <= 1e-12);
    if uniform && exp.params.beta() == 1.0 {
        if let Ok(v) = closed_form::hetero_upper_reference((f1 - f2).abs()) {
            notes.insert("reference_upper".into(), v.into());
        }
    }
    serde_json::Value::Object(notes)
}

fn cmd_bounds(ctx: &Session) -> anyhow::Result<i32> {
    let exp = ctx.experiment()?;
    let p = exp.distribution()?;
    let bounds = stability::throughput_bounds(&exp.params, &p)?;
    let mut json = stability::bounds_json(&bounds);
    if let serde_json::Value::Object(notes) = closed_form_annotations(&exp, &p) {
        for (k, v) in notes {
            json[k] = v;
        }
    }
    ctx.print(&serde_json::to_string_pretty(&json)?);
    let file = ctx.write_json("bounds.json", &json)?;
    ctx.finish("bounds", &[file], &[], json.clone())?;
    Ok(0)
}

/// Abscissae per figure curve.
pub const FIGURE_POINTS: usize = 101;

fn cmd_figure(ctx: &Session, which: Option<Figure>) -> anyhow::Result<i32> {
    let figures = match which {
        Some(f) => vec![f],
        None => vec![Figure::HomoRate, Figure::HomoCorr, Figure::Hetero],
    };
    let beta = match &ctx.config {
        Some(c) => c.beta,
        None => 1.0,
    };
    let mut files = Vec::new();
    for fig in figures {
        match fig {
            Figure::HomoRate => {
                let mut csv = String::from("p,lower_bound\n");
                for (p, v) in closed_form::failure_rate_curve(FIGURE_POINTS) {
                    csv.push_str(&format!("{},{}\n", sig6(p), sig6(v)));
                }
                files.push(ctx.write("homo_rate.csv", &csv)?);
            }
            Figure::HomoCorr => {
                let mut csv = String::from("rho,lower_bound\n");
                for (rho, v) in closed_form::correlation_curve(FIGURE_POINTS) {
                    csv.push_str(&format!("{},{}\n", sig6(rho), sig6(v)));
                }
                files.push(ctx.write("homo_corr.csv", &csv)?);
            }
            Figure::Hetero => {
                let curve = closed_form::hetero_curve(FIGURE_POINTS);
                let mut csv = String::from("dF,lower_bound,upper_bound\n");
                for (d_f, lo, hi) in &curve {
                    csv.push_str(&format!("{},{},{}\n", sig6(*d_f), sig6(*lo), sig6(*hi)));
                }
                files.push(ctx.write("hetero.csv", &csv)?);

                let p = ModeDistribution::uniform();
                let numeric: Vec<(f64, usize)> = {
                    use rayon::prelude::*;
                    curve
                        .par_iter()
                        .map(|(d_f, ..)| {
                            let params = NetworkParams::from_capacity_difference(*d_f, beta, 0.0)?;
                            stability::necessary_upper_bound(&params, &p)
                        })
                        .collect::<crate::Result<_>>()?
                };
                let mut csv = String::from("dF,numeric_upper,reference_upper,violated\n");
                for ((d_f, _, reference), (upper, violated)) in curve.iter().zip(&numeric) {
                    csv.push_str(&format!("{},{},{},necessary{}\n", sig6(*d_f), sig6(*upper), sig6(*reference), violated));
                }
                files.push(ctx.write("hetero_numeric_upper.csv", &csv)?);
            }
        }
    }
    for f in &files {
        ctx.print(&f.display().to_string());
    }
    ctx.finish("figure", &files, &[], serde_json::json!({ "beta": beta, "points": FIGURE_POINTS }))?;
    Ok(0)
}

fn cmd_simulate(ctx: &Session, replications: usize) -> anyhow::Result<i32> {
    let exp = ctx.experiment()?;
    let rates = exp.rates()?;
    let cfg = ctx.sim();
    let traj = sim::simulate(&exp.params, &rates, &cfg)?;
    let probe = sim::stability_probe(&exp.params, &rates, &cfg, replications)?;

    let csv = ctx.write("trajectory.csv", &traj.to_csv())?;
    let meta = sim::trajectory_metadata(&exp.params, &cfg, &traj);
    let sidecar = ctx.write_json("trajectory.json", &meta)?;
    let verdict = serde_json::to_value(&probe)?;
    let probe_file = ctx.write_json("probe.json", &verdict)?;

    let summary = serde_json::json!({
        "diverged": traj.diverged.is_some(),
        "diverged_at": traj.diverged,
        "avg_abs_x": traj.avg_abs_x,
        "classification": probe.classification,
        "median_avg_slope": probe.median_avg_slope,
        "median_growth_slope": probe.median_growth_slope,
    });
    ctx.print(&serde_json::to_string_pretty(&summary)?);
    let seeds: Vec<u64> = probe.replications.iter().map(|r| r.seed).collect();
    ctx.finish("simulate", &[csv, sidecar, probe_file], &seeds, summary)?;
    Ok(0)
}

fn cmd_scan(ctx: &Session) -> anyhow::Result<i32> {
    let exp = ctx.experiment()?;
    let rates = exp.rates()?;
    let cfg = ctx.sim();
    let spec = ctx.config()?.scan.clone().unwrap_or_default();
    let report = sim::throughput_scan(&exp.params, &rates, &cfg, &spec.etas, spec.replications)?;

    let csv = ctx.write("scan.csv", &report.to_csv())?;
    let json = serde_json::to_value(&report)?;
    let file = ctx.write_json("scan.json", &json)?;
    let summary = serde_json::json!({
        "rows": report.rows.len(),
        "window": report.window,
        "classifications": report.rows.iter().map(|r| (r.eta, r.classification)).collect::<Vec<_>>(),
    });
    ctx.print(&report.to_csv());
    let seeds: Vec<u64> = (0..spec.replications as u64).map(|i| cfg.seed ^ i).collect();
    ctx.finish("scan", &[csv, file], &seeds, summary)?;
    Ok(0)
}

/// A complete config covering every section, as documented in the README.
pub fn example_config() -> ExperimentConfig {
    ExperimentConfig {
        f1: 0.5,
        f2: 0.5,
        beta: 1.0,
        eta: 0.5,
        rates: None,
        failure: None,
        probs: Some([0.25; 4]),
        kappa: 1.0,
        analysis: Some(Analysis::Check),
        figure: None,
        sim: Some(SimConfig { seed: 7, s0: FaultMode::Nominal, ..SimConfig::default() }),
        scan: Some(ScanSpec::default()),
        output: Some(PathBuf::from("out")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig { probs: None, ..example_config() }
    }

    #[test]
    fn exactly_one_chain() {
        assert!(base().experiment().is_err());
        let both = ExperimentConfig { probs: Some([0.25; 4]), failure: Some(FailureSpec { p: 0.5, rho: 0.0 }), ..base() };
        assert!(both.experiment().is_err());
        let one = ExperimentConfig { failure: Some(FailureSpec { p: 0.5, rho: 0.0 }), ..base() };
        assert_eq!(one.experiment().unwrap().distribution().unwrap(), ModeDistribution::uniform());
    }

    #[test]
    fn probs_tolerance() {
        let near = ExperimentConfig { probs: Some([0.25, 0.25, 0.25, 0.25 + 5e-10]), ..base() };
        let p = near.experiment().unwrap().distribution().unwrap();
        assert!((p.as_array().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let off = ExperimentConfig { probs: Some([0.25, 0.25, 0.25, 0.25 + 1e-8]), ..base() };
        assert!(off.experiment().is_err());
    }

    #[test]
    fn probs_become_kappa_chain() {
        let cfg = ExperimentConfig { probs: Some([0.4, 0.2, 0.3, 0.1]), kappa: 2.0, ..base() };
        let exp = cfg.experiment().unwrap();
        let rates = exp.rates().unwrap();
        assert!((rates.rate(FaultMode::Nominal, FaultMode::BothFaulty) - 0.2).abs() < 1e-15);
        let pi = stationary_distribution(&rates).unwrap();
        for (a, b) in pi.as_array().iter().zip([0.4, 0.2, 0.3, 0.1]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip() {
        let cfg = example_config();
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        let text = r#"{"F1": 0.75, "F2": 0.25, "beta": 1, "rates": [[0,1,1,1],[1,0,1,1],[1,1,0,1],[1,1,1,0]]}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        assert_eq!(cfg.eta, 0.0);
        assert_eq!(ExperimentConfig::from_json(&cfg.to_json()).unwrap(), cfg);
        assert!(ExperimentConfig::from_json(r#"{"F1": 1, "F2": 0, "beta": 1, "probs": [1,0,0,0], "bogus": 1}"#).is_err());
    }

    #[test]
    fn exit_codes_are_total() {
        assert_eq!(exit_code(Classification::CertifiedStable), 0);
        assert_eq!(exit_code(Classification::CertifiedUnstable), 2);
        assert_eq!(exit_code(Classification::Indeterminate), 3);
    }
}
