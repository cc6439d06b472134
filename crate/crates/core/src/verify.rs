//! Monte Carlo harness for the limits of the urn and for the diagnostics
//! behind them. Replicates run in parallel on independent RNG streams and
//! are reduced in replicate order, so reports are bit-reproducible.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::matrix::{rho, sigma, NonnegativeMatrix};
use crate::perron::{perron, PerronData};
use crate::sa::{delayed_sum_stats, oscillation, PathSample, StepSizeSeq, VectorSeq};
use crate::urn::{replicate_rng, SimulationConfig, UrnState};

/// Hex SHA-256 prefix of the JSON form of `value`.
pub fn digest<T: Serialize>(value: &T) -> String {
    let json = serde_json::to_vec(value).expect("configs serialize to JSON");
    let hash = Sha256::digest(&json);
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Number of replicate batches used for standard errors.
const MAX_BATCHES: usize = 20;

/// Mean and batch-means standard error over replicates in index order.
fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let batches = n.min(MAX_BATCHES);
    if batches < 2 {
        return (mean, f64::NAN);
    }
    let batch_means: Vec<f64> = (0..batches)
        .map(|b| {
            let (lo, hi) = (b * n / batches, (b + 1) * n / batches);
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let grand = batch_means.iter().sum::<f64>() / batches as f64;
    let var = batch_means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn check_replicates(replicates: usize) -> Result<()> {
    if replicates < 2 {
        return Err(Error::config("replicates", "at least two replicates are required"));
    }
    Ok(())
}

fn check_increasing(field: &str, values: &[u64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::config(field, "at least one value is required"));
    }
    if values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config(field, "values must be strictly increasing"));
    }
    Ok(())
}

/// The four limits of the urn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// `‖C_n/S_n − π_H‖₁`
    Proportion,
    /// `|S_n/n − λ_H|`
    Total,
    /// `‖C_n/n − λ_H π_H‖₁`
    Composition,
    /// `‖N_n/n − π_H‖₁`
    Counts,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Proportion, Metric::Total, Metric::Composition, Metric::Counts];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Proportion => "prop",
            Metric::Total => "total",
            Metric::Composition => "comp",
            Metric::Counts => "count",
        }
    }

    /// L¹ error of `state` against the Perron data of its limit.
    pub fn error(self, state: &UrnState, pf: &PerronData) -> f64 {
        let n = state.step as f64;
        match self {
            Metric::Proportion => l1(&state.proportions(), &pf.pi),
            Metric::Total => (state.total / n - pf.lambda).abs(),
            Metric::Composition => state
                .composition
                .iter()
                .zip(&pf.pi)
                .map(|(c, p)| (c / n - pf.lambda * p).abs())
                .sum(),
            Metric::Counts => state
                .counts
                .iter()
                .zip(&pf.pi)
                .map(|(c, p)| (*c as f64 / n - p).abs())
                .sum(),
        }
    }
}

/// Summary of one metric at one checkpoint across replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub n: u64,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
    pub q90: f64,
}

impl Estimate {
    fn from_values(n: u64, values: &[f64]) -> Self {
        let (mean, stderr) = mean_and_stderr(values);
        let s = sorted(values);
        Estimate {
            n,
            mean,
            stderr,
            median: quantile(&s, 0.5),
            q90: quantile(&s, 0.9),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCurve {
    pub metric: Metric,
    pub points: Vec<Estimate>,
}

impl MetricCurve {
    /// Each estimate is at most the previous one plus `k` combined standard
    /// errors.
    pub fn is_decreasing(&self, k: f64) -> bool {
        self.points.windows(2).all(|w| {
            let slack = k * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
            w[1].mean <= w[0].mean + slack
        })
    }

    pub fn at(&self, n: u64) -> Option<&Estimate> {
        self.points.iter().find(|e| e.n == n)
    }
}

/// L¹ error curves for the four limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub checkpoints: Vec<u64>,
    pub curves: Vec<MetricCurve>,
    pub replicates: usize,
    pub seed: u64,
    pub config_digest: String,
}

impl ConvergenceReport {
    pub fn curve(&self, metric: Metric) -> &MetricCurve {
        self.curves
            .iter()
            .find(|c| c.metric == metric)
            .expect("every metric is reported")
    }

    /// CSV with header `n,metric,estimate,stderr,quantile_0.5,quantile_0.9`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,metric,estimate,stderr,quantile_0.5,quantile_0.9\n");
        for &n in &self.checkpoints {
            for curve in &self.curves {
                if let Some(e) = curve.at(n) {
                    out.push_str(&format!(
                        "{},{},{},{},{},{}\n",
                        n,
                        curve.metric.name(),
                        e.mean,
                        e.stderr,
                        e.median,
                        e.q90
                    ));
                }
            }
        }
        out
    }
}

fn require_irreducible(config: &SimulationConfig) -> Result<()> {
    config.validate()?;
    config.limit.validate(true)
}

/// Simulates `replicates` paths and measures the four limits at every
/// checkpoint, each replicate against the Perron data of its own `H`.
pub fn run_convergence(config: &SimulationConfig, replicates: usize, seed: u64) -> Result<ConvergenceReport> {
    require_irreducible(config)?;
    check_replicates(replicates)?;
    check_increasing("checkpoints", &config.checkpoints)?;
    if config.checkpoints[0] == 0 {
        return Err(Error::config("checkpoints", "limits are measured at n ≥ 1"));
    }

    let per_replicate: Vec<Vec<[f64; 4]>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut process = config.start(&mut rng)?;
            let pf = perron(process.generator().limit())?;
            let mut rows = Vec::with_capacity(config.checkpoints.len());
            for &target in &config.checkpoints {
                while process.state().step < target {
                    process.step(&mut rng)?;
                }
                let st = process.state();
                rows.push(Metric::ALL.map(|m| m.error(st, &pf)));
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let curves = Metric::ALL
        .iter()
        .enumerate()
        .map(|(mi, &metric)| MetricCurve {
            metric,
            points: config
                .checkpoints
                .iter()
                .enumerate()
                .map(|(ci, &n)| {
                    let values: Vec<f64> = per_replicate.iter().map(|rows| rows[ci][mi]).collect();
                    Estimate::from_values(n, &values)
                })
                .collect(),
        })
        .collect();

    Ok(ConvergenceReport {
        checkpoints: config.checkpoints.clone(),
        curves,
        replicates,
        seed,
        config_digest: digest(config),
    })
}

/// Mean and sample variance of each proportion coordinate at the
/// checkpoints. Works for reducible `H` as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProportionMoments {
    pub n: u64,
    pub coordinate: usize,
    pub mean: f64,
    pub variance: f64,
}

pub fn proportion_moments(config: &SimulationConfig, replicates: usize, seed: u64) -> Result<Vec<ProportionMoments>> {
    config.validate()?;
    check_replicates(replicates)?;
    let per_replicate: Vec<Vec<Vec<f64>>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut process = config.start(&mut rng)?;
            let mut rows = Vec::with_capacity(config.checkpoints.len());
            for &target in &config.checkpoints {
                while process.state().step < target {
                    process.step(&mut rng)?;
                }
                rows.push(process.state().proportions());
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;

    let k = config.c0.len();
    let mut out = Vec::new();
    for (ci, &n) in config.checkpoints.iter().enumerate() {
        for coordinate in 0..k {
            let values: Vec<f64> = per_replicate.iter().map(|rows| rows[ci][coordinate]).collect();
            let mean = values.iter().sum::<f64>() / replicates as f64;
            let variance =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (replicates - 1) as f64;
            out.push(ProportionMoments {
                n,
                coordinate: coordinate + 1,
                mean,
                variance,
            });
        }
    }
    Ok(out)
}

/// Forward crossing of the deterministic steps `1/(n+1)`, computed without
/// materializing the sequence.
pub fn harmonic_crossing_forward(n: u64, t: f64) -> u64 {
    let mut acc = 0.0;
    let mut m = n;
    loop {
        acc += 1.0 / (m as f64 + 1.0);
        if acc > t {
            return m;
        }
        m += 1;
    }
}

/// Empirical frequency of `E_n(A, B)` at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventFrequency {
    pub n: u64,
    /// window `[p_n, q_n]` of indices `m` checked
    pub window: (u64, u64),
    pub frequency: f64,
}

/// Parameters of the step-comparison event `B ≤ S_{m+1}/(m+1) ≤ A` for all
/// `p_n ≤ m ≤ q_n`, with `p_n = n` and `q_n` the harmonic forward crossing
/// of `n` at level `T·A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventBounds {
    pub upper: f64,
    pub lower: f64,
    pub horizon: f64,
}

impl EventBounds {
    fn validate(&self) -> Result<()> {
        if !(self.lower > 0.0 && self.lower < self.upper) {
            return Err(Error::config(
                "diagnose.event",
                format!("need 0 < B < A, got B = {}, A = {}", self.lower, self.upper),
            ));
        }
        if !(self.horizon > 0.0) {
            return Err(Error::config("diagnose.event.horizon", "T must be positive"));
        }
        Ok(())
    }

    /// Right side of the limsup bound on `P(E_n(A,B)^c)`:
    /// `P(σ(H) < 2B) + P(ρ(H) > A/2)` under the uniform law on the listed `H`.
    pub fn complement_bound(&self, matrices: &[NonnegativeMatrix]) -> f64 {
        let count = matrices.len() as f64;
        let small = matrices.iter().filter(|h| sigma(h) < 2.0 * self.lower).count() as f64;
        let large = matrices.iter().filter(|h| rho(h) > self.upper / 2.0).count() as f64;
        (small + large) / count
    }
}

pub fn event_frequency(
    config: &SimulationConfig,
    bounds: EventBounds,
    n_list: &[u64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<EventFrequency>> {
    config.validate()?;
    bounds.validate()?;
    check_replicates(replicates)?;
    check_increasing("diagnose.n_list", n_list)?;
    let windows: Vec<(u64, u64)> = n_list
        .iter()
        .map(|&n| (n, harmonic_crossing_forward(n, bounds.horizon * bounds.upper)))
        .collect();
    let horizon = windows.iter().map(|w| w.1 + 1).max().unwrap_or(0);

    let hits: Vec<Vec<bool>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut process = config.start(&mut rng)?;
            let mut ok = vec![true; windows.len()];
            let mut open = windows.len();
            while process.state().step < horizon && open > 0 {
                process.step(&mut rng)?;
                // j = m + 1 after the step
                let j = process.state().step;
                let ratio = process.state().total / j as f64;
                if ratio < bounds.lower || ratio > bounds.upper {
                    for (flag, (p, q)) in ok.iter_mut().zip(&windows) {
                        if *flag && j > *p && j <= q + 1 {
                            *flag = false;
                            open -= 1;
                        }
                    }
                }
            }
            Ok(ok)
        })
        .collect::<Result<_>>()?;

    Ok(windows
        .iter()
        .enumerate()
        .map(|(i, &(p, q))| EventFrequency {
            n: p,
            window: (p, q),
            frequency: hits.iter().filter(|h| h[i]).count() as f64 / replicates as f64,
        })
        .collect())
}

/// Estimate of `E|(1/n) Σ_{k≤n} (Y_k − E[Y_k | F_{k−1}])|` at each `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesaroPoint {
    pub n: u64,
    pub estimate: f64,
    pub stderr: f64,
}

pub fn cesaro_mds(config: &SimulationConfig, replicates: usize, n_list: &[u64], seed: u64) -> Result<Vec<CesaroPoint>> {
    config.validate()?;
    check_replicates(replicates)?;
    check_increasing("diagnose.n_list", n_list)?;
    if n_list[0] == 0 {
        return Err(Error::config("diagnose.n_list", "averages need n ≥ 1"));
    }
    let per_replicate: Vec<Vec<f64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut process = config.start(&mut rng)?;
            let mut sum = 0.0;
            let mut out = Vec::with_capacity(n_list.len());
            for &n in n_list {
                while process.state().step < n {
                    let expected = process.expected_addition();
                    let step = process.step(&mut rng)?;
                    sum += step.added - expected;
                }
                out.push((sum / n as f64).abs());
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(n_list
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let values: Vec<f64> = per_replicate.iter().map(|v| v[i]).collect();
            let (estimate, stderr) = mean_and_stderr(&values);
            CesaroPoint { n, estimate, stderr }
        })
        .collect())
}

/// Which error sequence a delayed sum is taken over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSequence {
    /// martingale differences `D_{n+1}`
    Martingale,
    /// drift errors `ξ_{n+1}`
    Xi,
}

impl ErrorSequence {
    pub fn name(self) -> &'static str {
        match self {
            ErrorSequence::Martingale => "D",
            ErrorSequence::Xi => "xi",
        }
    }
}

/// Quantiles of the forward and backward delayed sums at one `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NegligibilityPoint {
    pub n: u64,
    pub sequence: ErrorSequence,
    pub fwd_median: f64,
    pub fwd_q90: f64,
    pub bwd_median: f64,
    pub bwd_q90: f64,
}

/// Hard cap on steps simulated while waiting for a forward crossing.
const NEGLIGIBILITY_STEP_CAP: usize = 50_000_000;

/// Delayed sums of `a_i β_i` with `a_i = 1/S_{i+1}` and `β_i` either
/// `D_{i+1}` or `ξ_{i+1}`, over the windows of level `t` around each `n`.
pub fn negligibility_curves(
    config: &SimulationConfig,
    t: f64,
    n_list: &[u64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<NegligibilityPoint>> {
    config.validate()?;
    check_replicates(replicates)?;
    check_increasing("diagnose.n_list", n_list)?;
    if !(t > 0.0) {
        return Err(Error::config("diagnose.t", "level t must be positive"));
    }
    let n_last = *n_list.last().expect("checked nonempty") as usize;
    let k = config.c0.len();

    // per replicate: [n][sequence] → (fwd, bwd)
    let per_replicate: Vec<Vec<[(f64, f64); 2]>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r as u64);
            let mut process = config.start(&mut rng)?;
            let mut steps = Vec::new();
            let mut d_seq = VectorSeq::new(k);
            let mut xi_seq = VectorSeq::new(k);
            let (mut d, mut xi) = (vec![0.0; k], vec![0.0; k]);
            let mut tail = 0.0;
            // step i of the loop produces a_i = 1/S_{i+1}, D_{i+1}, ξ_{i+1}
            loop {
                process.step_terms(&mut rng, &mut d, &mut xi)?;
                let i = steps.len();
                let a = 1.0 / process.state().total;
                steps.push(a);
                d_seq.push(&d)?;
                xi_seq.push(&xi)?;
                if i >= n_last {
                    tail += a;
                    if tail > t {
                        break;
                    }
                }
                if steps.len() >= NEGLIGIBILITY_STEP_CAP {
                    return Err(Error::NeedsMoreData { available: steps.len() });
                }
            }
            let a = StepSizeSeq::new(steps)?;
            n_list
                .iter()
                .map(|&n| {
                    let n = n as usize;
                    Ok([
                        delayed_sum_stats(&a, &d_seq, n, t)?,
                        delayed_sum_stats(&a, &xi_seq, n, t)?,
                    ])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::with_capacity(2 * n_list.len());
    for (si, sequence) in [ErrorSequence::Martingale, ErrorSequence::Xi].into_iter().enumerate() {
        for (ni, &n) in n_list.iter().enumerate() {
            let fwd = sorted(&per_replicate.iter().map(|v| v[ni][si].0).collect::<Vec<_>>());
            let bwd = sorted(&per_replicate.iter().map(|v| v[ni][si].1).collect::<Vec<_>>());
            out.push(NegligibilityPoint {
                n,
                sequence,
                fwd_median: quantile(&fwd, 0.5),
                fwd_q90: quantile(&fwd, 0.9),
                bwd_median: quantile(&bwd, 0.5),
                bwd_q90: quantile(&bwd, 0.9),
            });
        }
    }
    Ok(out)
}

/// Modulus of continuity of the proportion interpolant `X⁰` over the
/// window `[t_n, t_n + t]` of the urn clock, for one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OscillationPoint {
    pub n: u64,
    /// `t_n`
    pub start: f64,
    pub oscillation: f64,
}

pub fn oscillation_curve(
    config: &SimulationConfig,
    t: f64,
    delta: f64,
    n_list: &[u64],
    seed: u64,
) -> Result<Vec<OscillationPoint>> {
    config.validate()?;
    check_increasing("diagnose.n_list", n_list)?;
    if !(t > 0.0) {
        return Err(Error::config("diagnose.t", "level t must be positive"));
    }
    if !(delta > 0.0) {
        return Err(Error::config("diagnose.delta", "delta must be positive"));
    }
    let n_last = *n_list.last().expect("checked nonempty") as usize;
    let mut rng = replicate_rng(seed, 0);
    let mut process = config.start(&mut rng)?;
    let mut steps = Vec::new();
    let mut values = VectorSeq::new(config.c0.len());
    values.push(&process.state().proportions())?;
    let mut tail = 0.0;
    loop {
        process.step(&mut rng)?;
        let a = 1.0 / process.state().total;
        steps.push(a);
        values.push(&process.state().proportions())?;
        if steps.len() > n_last {
            tail += a;
            if tail > t {
                break;
            }
        }
        if steps.len() >= NEGLIGIBILITY_STEP_CAP {
            return Err(Error::NeedsMoreData { available: steps.len() });
        }
    }
    let a = StepSizeSeq::new(steps)?;
    let path = PathSample::on_clock(&a, values)?;
    n_list
        .iter()
        .map(|&n| {
            let start = path.times()[n as usize];
            Ok(OscillationPoint {
                n,
                start,
                oscillation: oscillation(&path, start, start + t, delta)?,
            })
        })
        .collect()
}

/// Cesàro average `(1/n) Σ_{k≤n} ρ(H_{k−1} − H)` and running supremum of
/// `ρ(H_{k−1} − H)` along one path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingGap {
    pub n: u64,
    pub cesaro_mean: f64,
    pub running_sup: f64,
}

pub fn generating_gap(config: &SimulationConfig, n_list: &[u64], seed: u64) -> Result<Vec<GeneratingGap>> {
    config.validate()?;
    check_increasing("diagnose.n_list", n_list)?;
    let mut rng = replicate_rng(seed, 0);
    let mut process = config.start(&mut rng)?;
    let limit = process.generator().limit().as_matrix().clone();
    let (mut sum, mut sup) = (0.0, 0.0f64);
    let mut out = Vec::with_capacity(n_list.len());
    for &n in n_list {
        while process.state().step < n {
            let gap = rho(&process.generator().generating_matrix().sub(&limit)?);
            sum += gap;
            sup = sup.max(gap);
            process.step(&mut rng)?;
        }
        out.push(GeneratingGap {
            n,
            cesaro_mean: if n == 0 { 0.0 } else { sum / n as f64 },
            running_sup: sup,
        });
    }
    Ok(out)
}
