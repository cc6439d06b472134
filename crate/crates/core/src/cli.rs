//! Batch front-end: reads a TOML experiment file, runs one subcommand and
//! writes CSV/JSON outputs atomically.
//!
//! Exit codes: `0` success, `1` runtime failure, `2` configuration error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::dynamics::{integrate, SimplexPoint};
use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, rho, sigma, NonnegativeMatrix};
use crate::perron::perron;
use crate::urn::{checkpoint_csv, simulate, GeneratorSpec, LimitLaw, SimulationConfig};
use crate::verify::{
    cesaro_mds, digest, event_frequency, generating_gap, negligibility_curves, oscillation_curve,
    proportion_moments, run_convergence, EventBounds, Metric,
};

#[derive(Debug, Parser)]
#[command(name = "urn-sa", version, about = "Generalized urn models as stochastic approximations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Root seed; overrides the file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Replicate count; overrides the file.
    #[arg(long, global = true)]
    pub replicates: Option<usize>,
    /// Worker threads for replicate parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Perron data of `h` (or every matrix of `h_set`).
    Pf,
    /// Integrate the limiting flow from `[ode].x0`.
    Ode,
    /// Run one trajectory; with several replicates also summarize proportions.
    Simulate,
    /// L¹ convergence report for the four limits.
    Verify,
    /// Negligibility, Cesàro, oscillation and event-frequency curves.
    Diagnose,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    /// Start point; uniform when absent.
    pub x0: Option<Vec<f64>>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSection {
    /// Level of the delayed-sum windows and of the oscillation window.
    pub t: f64,
    pub n_list: Vec<u64>,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub event: Option<EventBounds>,
}

fn default_delta() -> f64 {
    0.1
}

/// Per-metric ceilings on the final estimate of a convergence report.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub tolerance: Option<Tolerances>,
    /// Standard errors allowed between consecutive checkpoints.
    #[serde(default = "default_slack")]
    pub monotone_slack: f64,
}

fn default_slack() -> f64 {
    2.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub prop: Option<f64>,
    pub total: Option<f64>,
    pub comp: Option<f64>,
    pub count: Option<f64>,
}

impl Tolerances {
    fn get(&self, metric: Metric) -> Option<f64> {
        match metric {
            Metric::Proportion => self.prop,
            Metric::Total => self.total,
            Metric::Composition => self.comp,
            Metric::Counts => self.count,
        }
    }
}

/// Contents of an experiment file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Number of colors; checked against the other fields when present.
    pub k: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub replicates: Option<usize>,
    pub c0: Option<Vec<f64>>,
    pub h: Option<Vec<Vec<f64>>>,
    pub h_set: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(default = "fixed_generator")]
    pub generator: GeneratorSpec,
    pub n_max: Option<u64>,
    #[serde(default)]
    pub checkpoints: Vec<u64>,
    pub ode: Option<OdeSection>,
    pub diagnose: Option<DiagnoseSection>,
    pub verify: Option<VerifySection>,
}

fn fixed_generator() -> GeneratorSpec {
    GeneratorSpec::Fixed
}

fn matrix(field: &str, rows: &[Vec<f64>]) -> Result<NonnegativeMatrix> {
    NonnegativeMatrix::from_rows(rows).map_err(|e| Error::config(field, e.to_string()))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config("config", e.to_string().trim_end()))?;
        config.check_k()?;
        Ok(config)
    }

    fn check_k(&self) -> Result<()> {
        let Some(k) = self.k else { return Ok(()) };
        if k == 0 {
            return Err(Error::config("k", "needs at least one color"));
        }
        if let Some(c0) = &self.c0 {
            if c0.len() != k {
                return Err(Error::config("c0", format!("has {} entries but k = {k}", c0.len())));
            }
        }
        if let Some(h) = &self.h {
            if h.len() != k {
                return Err(Error::config("h", format!("has {} rows but k = {k}", h.len())));
            }
        }
        Ok(())
    }

    /// `h` or `h_set`, exactly one of which must be present.
    pub fn limit_law(&self) -> Result<LimitLaw> {
        match (&self.h, &self.h_set) {
            (Some(h), None) => Ok(LimitLaw::Fixed(matrix("h", h)?)),
            (None, Some(set)) => {
                if set.is_empty() {
                    return Err(Error::config("h_set", "at least one matrix is required"));
                }
                set.iter()
                    .enumerate()
                    .map(|(i, h)| matrix(&format!("h_set[{i}]"), h))
                    .collect::<Result<_>>()
                    .map(LimitLaw::Choice)
            }
            (Some(_), Some(_)) => Err(Error::config("h", "give either h or h_set, not both")),
            (None, None) => Err(Error::config("h", "a matrix h or a list h_set is required")),
        }
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let c0 = self.c0.clone().ok_or_else(|| Error::config("c0", "initial composition is required"))?;
        let n_max = self.n_max.ok_or_else(|| Error::config("n_max", "horizon is required"))?;
        let checkpoints = if self.checkpoints.is_empty() {
            vec![n_max]
        } else {
            self.checkpoints.clone()
        };
        let config = SimulationConfig {
            c0,
            limit: self.limit_law()?,
            generator: self.generator.clone(),
            n_max,
            checkpoints,
        };
        config.validate()?;
        Ok(config)
    }

    fn diagnose(&self) -> Result<&DiagnoseSection> {
        self.diagnose
            .as_ref()
            .ok_or_else(|| Error::config("diagnose", "a [diagnose] section is required"))
    }
}

/// Failure of a subcommand, mapped to an exit code.
#[derive(Debug)]
enum Failure {
    Config(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Runtime(_) => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Finished outputs, written only once every one of them is ready.
struct Outputs {
    digest: String,
    seed: u64,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn new(config: &ExperimentConfig) -> Self {
        Outputs {
            digest: digest(config),
            seed: config.seed,
            files: Vec::new(),
        }
    }

    /// Adds a CSV table behind the `# digest=… seed=…` comment line.
    fn add(&mut self, name: &str, body: String) {
        let header = format!("# digest={} seed={}\n", self.digest, self.seed);
        self.files.push((name.to_string(), header + &body));
    }

    /// JSON has no comments; the digest and seed are fields of the document.
    fn add_json(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        for (name, body) in &self.files {
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(body.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(dir.join(name)).map_err(|e| e.error)?;
        }
        Ok(())
    }
}

/// Shortest decimal form up to 12 significant digits after the point.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

fn vector(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| short(*x)).collect();
    format!("({})", parts.join(", "))
}

fn csv_row(values: impl IntoIterator<Item = String>) -> String {
    let mut row = values.into_iter().collect::<Vec<_>>().join(",");
    row.push('\n');
    row
}

fn numbered(prefix: &str, k: usize) -> impl Iterator<Item = String> + '_ {
    (1..=k).map(move |i| format!("{prefix}_{i}"))
}

fn run_pf(config: &ExperimentConfig, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let law = config.limit_law()?;
    let k = law.dim();
    let mut csv = csv_row(
        ["matrix", "lambda", "rho", "sigma"]
            .map(String::from)
            .into_iter()
            .chain(numbered("pi", k))
            .chain(numbered("nu", k)),
    );
    for (i, h) in law.matrices().iter().enumerate() {
        let field = if config.h.is_some() { "h".to_string() } else { format!("h_set[{i}]") };
        if !is_irreducible(h) {
            return Err(Error::config(field, "Perron data needs an irreducible matrix").into());
        }
        let pf = perron(h)?;
        println!("{field}: lambda = {}, pi = {}, nu = {}", short(pf.lambda), vector(&pf.pi), vector(&pf.nu));
        println!("{field}: rho = {}, sigma = {}", short(rho(h)), short(sigma(h)));
        csv.push_str(&csv_row(
            [i.to_string(), pf.lambda.to_string(), rho(h).to_string(), sigma(h).to_string()]
                .into_iter()
                .chain(pf.pi.iter().map(f64::to_string))
                .chain(pf.nu.iter().map(f64::to_string)),
        ));
    }
    out.add("perron.csv", csv);
    Ok(())
}

fn run_ode(config: &ExperimentConfig, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let section = config
        .ode
        .as_ref()
        .ok_or_else(|| Error::config("ode", "an [ode] section is required"))?;
    let h = match config.limit_law()? {
        LimitLaw::Fixed(h) => h,
        LimitLaw::Choice(_) => return Err(Error::config("h_set", "ode integrates a single matrix h").into()),
    };
    if !is_irreducible(&h) {
        return Err(Error::config("h", "the flow needs an irreducible H").into());
    }
    let k = h.dim();
    let x0 = match &section.x0 {
        Some(x) => SimplexPoint::new(x.clone()).map_err(|e| Error::config("ode.x0", e.to_string()))?,
        None => SimplexPoint::uniform(k),
    };
    if x0.dim() != k {
        return Err(Error::config("ode.x0", format!("has {} entries but H is {k}x{k}", x0.dim())).into());
    }
    if !(section.dt > 0.0) {
        return Err(Error::config("ode.dt", "step must be positive").into());
    }
    if !(section.t_end > 0.0) {
        return Err(Error::config("ode.t_end", "horizon must be positive").into());
    }
    let path = integrate(&h, &x0, section.t_end, section.dt)?;
    let pf = perron(&h)?;
    let end = path.last().coords();
    let gap: f64 = end.iter().zip(&pf.pi).map(|(a, b)| (a - b).abs()).sum();
    println!("x(t_end) = {}, pi = {}, |x - pi|_1 = {gap:e}", vector(end), vector(&pf.pi));

    let mut csv = csv_row(std::iter::once("t".to_string()).chain(numbered("x", k)));
    for (t, x) in path.times.iter().zip(&path.states) {
        csv.push_str(&csv_row(std::iter::once(t.to_string()).chain(x.coords().iter().map(f64::to_string))));
    }
    out.add("ode.csv", csv);
    Ok(())
}

fn run_simulate(config: &ExperimentConfig, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let sim = config.simulation()?;
    let trajectory = simulate(&sim, config.seed, 0, false)?;
    out.add("trajectory.csv", checkpoint_csv(&trajectory.checkpoints));
    if let Some(last) = trajectory.checkpoints.last() {
        println!("n = {}, S = {}, proportions = {}", last.step, short(last.total), vector(&last.proportions()));
    }
    let replicates = config.replicates.unwrap_or(1);
    if replicates > 1 {
        let mut csv = String::from("n,coordinate,mean,variance\n");
        for m in proportion_moments(&sim, replicates, config.seed)? {
            csv.push_str(&format!("{},{},{},{}\n", m.n, m.coordinate, m.mean, m.variance));
        }
        out.add("proportions.csv", csv);
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifySummary<'a> {
    config_digest: &'a str,
    seed: u64,
    replicates: usize,
    checkpoints: &'a [u64],
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct Check {
    metric: &'static str,
    final_estimate: f64,
    tolerance: Option<f64>,
    decreasing: bool,
    pass: bool,
}

fn run_verify(config: &ExperimentConfig, out: &mut Outputs) -> std::result::Result<bool, Failure> {
    let sim = config.simulation()?;
    let replicates = config.replicates.unwrap_or(2);
    let report = run_convergence(&sim, replicates, config.seed)?;
    let section = config.verify.clone().unwrap_or(VerifySection {
        tolerance: None,
        monotone_slack: default_slack(),
    });
    let tolerances = section.tolerance.unwrap_or_default();
    let checks: Vec<Check> = Metric::ALL
        .iter()
        .map(|&metric| {
            let curve = report.curve(metric);
            let final_estimate = curve.points.last().map_or(0.0, |e| e.mean);
            let tolerance = tolerances.get(metric);
            let decreasing = curve.is_decreasing(section.monotone_slack);
            Check {
                metric: metric.name(),
                final_estimate,
                tolerance,
                decreasing,
                pass: decreasing && tolerance.is_none_or(|t| final_estimate <= t),
            }
        })
        .collect();
    for c in &checks {
        println!(
            "{:<6} final = {:.6e} tolerance = {} decreasing = {} -> {}",
            c.metric,
            c.final_estimate,
            c.tolerance.map_or("-".into(), short),
            c.decreasing,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let passed = checks.iter().all(|c| c.pass);
    let summary = VerifySummary {
        config_digest: &out.digest,
        seed: config.seed,
        replicates,
        checkpoints: &report.checkpoints,
        checks,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Runtime(e.to_string()))?;
    out.add("report.csv", report.to_csv());
    out.add_json("summary.json", json + "\n");
    Ok(passed)
}

fn run_diagnose(config: &ExperimentConfig, out: &mut Outputs) -> std::result::Result<(), Failure> {
    let sim = config.simulation()?;
    let section = config.diagnose()?;
    let replicates = config.replicates.unwrap_or(2);
    let seed = config.seed;

    let mut csv = String::from("n,sequence,fwd_median,fwd_q90,bwd_median,bwd_q90\n");
    for p in negligibility_curves(&sim, section.t, &section.n_list, replicates, seed)? {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            p.n,
            p.sequence.name(),
            p.fwd_median,
            p.fwd_q90,
            p.bwd_median,
            p.bwd_q90
        ));
    }
    out.add("negligibility.csv", csv);

    let mut csv = String::from("n,estimate,stderr\n");
    for p in cesaro_mds(&sim, replicates, &section.n_list, seed)? {
        csv.push_str(&format!("{},{},{}\n", p.n, p.estimate, p.stderr));
    }
    out.add("cesaro.csv", csv);

    let mut csv = String::from("n,cesaro_mean,running_sup\n");
    for g in generating_gap(&sim, &section.n_list, seed)? {
        csv.push_str(&format!("{},{},{}\n", g.n, g.cesaro_mean, g.running_sup));
    }
    out.add("generating_gap.csv", csv);

    let mut csv = String::from("n,t_n,oscillation\n");
    for p in oscillation_curve(&sim, section.t, section.delta, &section.n_list, seed)? {
        csv.push_str(&format!("{},{},{}\n", p.n, p.start, p.oscillation));
    }
    out.add("oscillation.csv", csv);

    if let Some(bounds) = section.event {
        let mut csv = String::from("n,p_n,q_n,frequency,complement_bound\n");
        let bound = bounds.complement_bound(sim.limit.matrices());
        for f in event_frequency(&sim, bounds, &section.n_list, replicates, seed)? {
            csv.push_str(&format!("{},{},{},{},{}\n", f.n, f.window.0, f.window.1, f.frequency, bound));
        }
        out.add("event_frequency.csv", csv);
    }
    println!("wrote {} diagnostic tables", out.files.len());
    Ok(())
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Failure::Config("configuration error in `--config`: an experiment file is required".into()))?;
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut config = ExperimentConfig::from_toml(&text)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(r) = cli.replicates {
        config.replicates = Some(r);
    }
    if let Some(0) = cli.threads {
        return Err(Failure::Config("configuration error in `--threads`: must be at least 1".into()));
    }

    let mut out = Outputs::new(&config);
    let run = |out: &mut Outputs| -> std::result::Result<bool, Failure> {
        match cli.command {
            Command::Pf => run_pf(&config, out).map(|_| true),
            Command::Ode => run_ode(&config, out).map(|_| true),
            Command::Simulate => run_simulate(&config, out).map(|_| true),
            Command::Verify => run_verify(&config, out),
            Command::Diagnose => run_diagnose(&config, out).map(|_| true),
        }
    };
    let passed = match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            pool.install(|| run(&mut out))?
        }
        None => run(&mut out)?,
    };
    if let Some(dir) = &cli.out {
        out.write(dir)
            .map_err(|e| Failure::Runtime(format!("cannot write outputs to {}: {e}", dir.display())))?;
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Runtime("verification checks failed".into()))
    }
}

/// Parses `args` (program name first) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(failure) => {
            match &failure {
                Failure::Config(msg) | Failure::Runtime(msg) => eprintln!("error: {msg}"),
            }
            failure.code()
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FRIEDMAN: &str = r#"
        seed = 7
        c0 = [1.0, 1.0]
        h = [[2.0, 1.0], [1.0, 2.0]]
        n_max = 1000
        checkpoints = [10, 100, 1000]
    "#;

    #[test]
    fn parses_and_builds_simulation() {
        let config = ExperimentConfig::from_toml(FRIEDMAN).unwrap();
        let sim = config.simulation().unwrap();
        assert_eq!(sim.generator, GeneratorSpec::Fixed);
        assert_eq!(sim.checkpoints, vec![10, 100, 1000]);
    }

    #[test]
    fn generator_tables_parse() {
        let text = format!(
            "{FRIEDMAN}\n[generator]\nkind = \"iid_scaled\"\nweights = {{ kind = \"pareto\", alpha = 1.5 }}\n"
        );
        let config = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(config.generator.name(), "iid_scaled");
    }

    fn config_field(text: &str) -> String {
        let err = ExperimentConfig::from_toml(text).and_then(|c| c.simulation().map(|_| ()));
        match err {
            Err(Error::Config { field, .. }) => field,
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn config_errors_name_the_field() {
        assert_eq!(config_field(&FRIEDMAN.replace("c0 = [1.0, 1.0]", "c0 = [0.0, 0.0]")), "c0");
        assert_eq!(config_field(&FRIEDMAN.replace("[1.0, 2.0]]", "[-1.0, 2.0]]")), "h");
        assert_eq!(config_field(&FRIEDMAN.replace("checkpoints = [10, 100, 1000]", "checkpoints = [100, 10]")), "checkpoints");
        assert_eq!(config_field(&format!("k = 3\n{FRIEDMAN}")), "c0");
        assert_eq!(config_field(&format!("{FRIEDMAN}\nbogus = 1\n")), "config");
    }

    #[test]
    fn short_numbers() {
        assert_eq!(short(3.0000000000000004), "3");
        assert_eq!(short(0.5), "0.5");
        assert_eq!(short(-1e-15), "0");
        assert_eq!(vector(&[0.5, 0.5]), "(0.5, 0.5)");
    }
}
