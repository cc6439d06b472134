//! The urn process: drawing, replacement generators, the evolution
//! `C_n = C_{n−1} + χ_n R_n`, and the audit of its stochastic-approximation
//! decomposition.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Pareto};
use serde::{Deserialize, Serialize};

use crate::dynamics::{drift_into, xi_term};
use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, Matrix, NonnegativeMatrix};

/// Independent, individually reproducible stream for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Composition `C_n`, total `S_n`, draw counts `N_n` and step index `n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrnState {
    pub composition: Vec<f64>,
    pub total: f64,
    pub counts: Vec<u64>,
    pub step: u64,
}

impl UrnState {
    pub fn new(c0: &[f64]) -> Result<Self> {
        if c0.is_empty() {
            return Err(Error::config("c0", "the urn needs at least one color"));
        }
        if c0.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::config("c0", "initial composition must be finite and nonnegative"));
        }
        let total: f64 = c0.iter().sum();
        if !(total > 0.0) {
            return Err(Error::config(
                "c0",
                "initial composition must be nonzero (at least one ball is required to draw)",
            ));
        }
        Ok(UrnState {
            composition: c0.to_vec(),
            total,
            counts: vec![0; c0.len()],
            step: 0,
        })
    }

    pub fn colors(&self) -> usize {
        self.composition.len()
    }

    /// `C_n / S_n`
    pub fn proportions(&self) -> Vec<f64> {
        self.composition.iter().map(|c| c / self.total).collect()
    }
}

/// Picks color `i` with `cum_{i−1} ≤ u·S < cum_i` over prefix sums of `C`.
pub fn draw_color(state: &UrnState, u: f64) -> usize {
    let target = u * state.total;
    let mut cum = 0.0;
    for (i, c) in state.composition.iter().enumerate() {
        cum += c;
        if target < cum {
            return i;
        }
    }
    // u·S can round past the accumulated sum.
    state.composition.iter().rposition(|c| *c > 0.0).unwrap_or(0)
}

/// Law of the multiplicative noise `W` with `E W = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightLaw {
    Constant,
    Exponential,
    /// `W = (α−1)/α · P` with `P` standard Pareto of shape `α`; finite mean
    /// and, for `α < 2`, infinite variance.
    Pareto { alpha: f64 },
}

impl WeightLaw {
    fn validate(&self) -> Result<()> {
        if let WeightLaw::Pareto { alpha } = self {
            if !(*alpha > 1.0 && *alpha <= 2.0) {
                return Err(Error::config(
                    "generator.weights.alpha",
                    format!("Pareto shape must lie in (1, 2], got {alpha}"),
                ));
            }
        }
        Ok(())
    }
}

enum WeightSampler {
    Constant,
    Exponential,
    Pareto { dist: Pareto<f64>, factor: f64 },
}

impl WeightSampler {
    fn new(law: WeightLaw) -> Result<Self> {
        law.validate()?;
        Ok(match law {
            WeightLaw::Constant => WeightSampler::Constant,
            WeightLaw::Exponential => WeightSampler::Exponential,
            WeightLaw::Pareto { alpha } => WeightSampler::Pareto {
                dist: Pareto::new(1.0, alpha)
                    .map_err(|e| Error::config("generator.weights.alpha", e.to_string()))?,
                factor: (alpha - 1.0) / alpha,
            },
        })
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            WeightSampler::Constant => 1.0,
            WeightSampler::Exponential => Exp1.sample(rng),
            WeightSampler::Pareto { dist, factor } => factor * dist.sample(rng),
        }
    }
}

/// Built-in replacement-matrix generators. Each one knows the exact
/// conditional mean `H_{n−1}` of the matrix it samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GeneratorSpec {
    /// `R_n = H` deterministically.
    Fixed,
    /// `R_nij = H_ij W_nij` with i.i.d. weights.
    IidScaled { weights: WeightLaw },
    /// `H_n = H + spike` when `n = ⌊k ln k⌋` for some `k ≥ 1`, otherwise
    /// `H_n = H`; entries of `R` are `H_n` scaled by i.i.d. weights.
    CesaroSpike {
        spike: Matrix,
        #[serde(default = "constant_weights")]
        weights: WeightLaw,
    },
    /// `H_n = H + (n+1)^(−decay) M_r` where the regime `r` is a Markov chain
    /// on the perturbation list driven by the drawn colors: after drawing
    /// color `c`, `r ← (r + c + 1) mod L`.
    MarkovMod {
        perturbations: Vec<Matrix>,
        #[serde(default = "default_decay")]
        decay: f64,
        #[serde(default = "constant_weights")]
        weights: WeightLaw,
    },
}

fn constant_weights() -> WeightLaw {
    WeightLaw::Constant
}

fn default_decay() -> f64 {
    0.5
}

impl GeneratorSpec {
    /// Generators that perturb around a target need that target irreducible.
    pub fn requires_irreducible(&self) -> bool {
        matches!(self, GeneratorSpec::CesaroSpike { .. } | GeneratorSpec::MarkovMod { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            GeneratorSpec::Fixed => "fixed",
            GeneratorSpec::IidScaled { .. } => "iid_scaled",
            GeneratorSpec::CesaroSpike { .. } => "cesaro_spike",
            GeneratorSpec::MarkovMod { .. } => "markov_mod",
        }
    }
}

/// Whether `n = ⌊k ln k⌋` for some integer `k ≥ 1`.
pub fn is_spike_index(n: u64) -> bool {
    let f = |k: u64| ((k as f64) * (k as f64).ln()).floor() as u64;
    // f is nondecreasing with f(k) ≥ k − 1, so the smallest k with f(k) ≥ n
    // lies in [1, n + 1].
    let (mut lo, mut hi) = (1u64, n + 1);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if f(mid) >= n {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    f(lo) == n
}

/// Running generator: holds the history summary and the current generating
/// matrix `H_{n−1}` for the next step `n`.
pub struct Generator {
    limit: NonnegativeMatrix,
    kind: Kind,
    weights: WeightSampler,
    current: Matrix,
    /// index `n` of the generating matrix in `current` (`H_n`)
    index: u64,
}

enum Kind {
    Fixed,
    Iid,
    Spike { spike: Matrix },
    Markov { perturbations: Vec<Matrix>, decay: f64, regime: usize },
}

impl Generator {
    pub fn new(spec: &GeneratorSpec, limit: &NonnegativeMatrix) -> Result<Self> {
        let k = limit.dim();
        if spec.requires_irreducible() && !is_irreducible(limit) {
            return Err(Error::config(
                "h",
                format!("the {} generator requires an irreducible H", spec.name()),
            ));
        }
        let (kind, weights) = match spec {
            GeneratorSpec::Fixed => (Kind::Fixed, WeightLaw::Constant),
            GeneratorSpec::IidScaled { weights } => (Kind::Iid, *weights),
            GeneratorSpec::CesaroSpike { spike, weights } => {
                check_perturbation("generator.spike", limit, spike)?;
                (Kind::Spike { spike: spike.clone() }, *weights)
            }
            GeneratorSpec::MarkovMod {
                perturbations,
                decay,
                weights,
            } => {
                if perturbations.is_empty() {
                    return Err(Error::config(
                        "generator.perturbations",
                        "at least one perturbation matrix is required",
                    ));
                }
                for (i, m) in perturbations.iter().enumerate() {
                    check_perturbation(&format!("generator.perturbations[{i}]"), limit, m)?;
                }
                if !(*decay > 0.0) || !decay.is_finite() {
                    return Err(Error::config(
                        "generator.decay",
                        format!("decay must be positive, got {decay}"),
                    ));
                }
                (
                    Kind::Markov {
                        perturbations: perturbations.clone(),
                        decay: *decay,
                        regime: 0,
                    },
                    *weights,
                )
            }
        };
        let mut generator = Generator {
            limit: limit.clone(),
            kind,
            weights: WeightSampler::new(weights)?,
            current: limit.as_matrix().clone(),
            index: 0,
        };
        debug_assert_eq!(generator.current.dim(), k);
        generator.refresh();
        Ok(generator)
    }

    /// The generating matrix for the upcoming step.
    pub fn generating_matrix(&self) -> &Matrix {
        &self.current
    }

    pub fn limit(&self) -> &NonnegativeMatrix {
        &self.limit
    }

    /// Samples `R` with conditional mean [`Self::generating_matrix`] into a
    /// row-major buffer. The drawn color is not an input.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<()> {
        if let WeightSampler::Constant = self.weights {
            out.copy_from_slice(self.current.as_slice());
            return Ok(());
        }
        self.sample(rng, out).map(|_| ())
    }

    /// Like [`Self::sample_into`], but a deterministic generator hands back
    /// its generating matrix instead of copying it.
    fn sample<'a, R: Rng + ?Sized>(&'a self, rng: &mut R, out: &'a mut [f64]) -> Result<&'a [f64]> {
        if let WeightSampler::Constant = self.weights {
            return Ok(self.current.as_slice());
        }
        let mut ok = true;
        for (o, h) in out.iter_mut().zip(self.current.as_slice()) {
            *o = if *h == 0.0 { 0.0 } else { h * self.weights.sample(rng) };
            ok &= o.is_finite();
        }
        if !ok {
            let v = out.iter().find(|v| !v.is_finite()).copied().unwrap_or(f64::NAN);
            return Err(Error::GeneratorContract(format!("replacement entry {v} is non-finite")));
        }
        Ok(out)
    }

    /// Folds the drawn color of the finished step into the history summary.
    pub fn observe(&mut self, color: usize) {
        if let Kind::Markov {
            perturbations,
            regime,
            ..
        } = &mut self.kind
        {
            *regime = (*regime + color + 1) % perturbations.len();
        }
        self.index += 1;
        if !matches!(self.kind, Kind::Fixed | Kind::Iid) {
            self.refresh();
        }
    }

    fn refresh(&mut self) {
        match &self.kind {
            Kind::Fixed | Kind::Iid => {}
            Kind::Spike { spike } => {
                self.current = if is_spike_index(self.index) {
                    self.limit.add(spike).expect("dimensions checked")
                } else {
                    self.limit.as_matrix().clone()
                };
            }
            Kind::Markov {
                perturbations,
                decay,
                regime,
            } => {
                let w = ((self.index + 1) as f64).powf(-decay);
                self.current = self
                    .limit
                    .add(&perturbations[*regime].scale(w))
                    .expect("dimensions checked");
            }
        }
    }
}

fn check_perturbation(field: &str, limit: &Matrix, m: &Matrix) -> Result<()> {
    if m.dim() != limit.dim() {
        return Err(Error::config(
            field,
            format!("expected a {0}x{0} matrix, got {1}x{1}", limit.dim(), m.dim()),
        ));
    }
    if !limit.add(m)?.is_nonnegative() {
        return Err(Error::config(field, "H plus the perturbation must stay nonnegative"));
    }
    Ok(())
}

/// Full audit of one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// drawn color `χ_n`, as an index
    pub chi: usize,
    /// realized `R_n`
    pub r: Matrix,
    /// generating matrix `H_{n−1}`
    pub h_gen: Matrix,
    /// balls added, `Y_n = χ_n R_n 1ᵀ`
    pub y: f64,
    /// `C_{n−1}/S_{n−1}`
    pub x_prev: Vec<f64>,
    /// `C_n/S_n`
    pub x_next: Vec<f64>,
    /// `S_n`
    pub s_next: f64,
}

impl StepRecord {
    pub fn s_prev(&self) -> f64 {
        self.s_next - self.y
    }

    /// `D_n = χR − x Y − x H_gen + x (x H_gen 1ᵀ)`.
    pub fn martingale_term(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.x_prev.len()];
        martingale_term_into(
            &self.x_prev,
            self.r.row(self.chi),
            self.y,
            &self.h_gen,
            &mut d,
        );
        d
    }

    /// `ξ_n = h_{H_gen − H}(x_prev)`.
    pub fn xi(&self, limit: &Matrix) -> Result<Vec<f64>> {
        xi_term(&self.h_gen, limit, &self.x_prev)
    }
}

fn martingale_term_into(x: &[f64], r_row: &[f64], y: f64, h_gen: &Matrix, out: &mut [f64]) {
    // out ← h_{H_gen}(x)
    drift_into(h_gen, x, out);
    for ((o, r), xi) in out.iter_mut().zip(r_row).zip(x) {
        *o = r - xi * y - *o;
    }
}

/// `‖x_n − x_{n−1} − (h_H(x_{n−1}) + D_n + ξ_n)/S_n‖₁` for the record.
///
/// The decomposition is an algebraic identity, so this is pure rounding
/// error.
pub fn sa_residual(rec: &StepRecord, limit: &Matrix) -> Result<f64> {
    let k = rec.x_prev.len();
    for dim in [limit.dim(), rec.r.dim(), rec.h_gen.dim(), rec.x_next.len()] {
        if dim != k {
            return Err(Error::DimensionMismatch { expected: k, got: dim });
        }
    }
    let mut h = vec![0.0; k];
    drift_into(limit, &rec.x_prev, &mut h);
    let d = rec.martingale_term();
    let xi = rec.xi(limit)?;
    Ok((0..k)
        .map(|i| {
            let increment = (h[i] + d[i] + xi[i]) / rec.s_next;
            (rec.x_next[i] - rec.x_prev[i] - increment).abs()
        })
        .sum())
}

/// Outcome of one step without the full audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub color: usize,
    pub added: f64,
}

/// Read-only view of a transition before the state is updated.
pub struct StepContext<'a> {
    pub state: &'a UrnState,
    pub color: usize,
    /// realized `R_n`, row-major
    pub replacement: &'a [f64],
    pub h_gen: &'a Matrix,
    pub limit: &'a Matrix,
    pub added: f64,
}

impl StepContext<'_> {
    pub fn replacement_row(&self) -> &[f64] {
        let k = self.state.colors();
        &self.replacement[self.color * k..(self.color + 1) * k]
    }
}

/// A single urn path with its generator.
pub struct UrnProcess {
    state: UrnState,
    generator: Generator,
    buffer: Vec<f64>,
    scratch: Vec<f64>,
}

impl UrnProcess {
    pub fn new(c0: &[f64], spec: &GeneratorSpec, limit: &NonnegativeMatrix) -> Result<Self> {
        let state = UrnState::new(c0)?;
        if state.colors() != limit.dim() {
            return Err(Error::config(
                "c0",
                format!(
                    "has {} colors but H is {1}x{1}",
                    state.colors(),
                    limit.dim()
                ),
            ));
        }
        let generator = Generator::new(spec, limit)?;
        let k = limit.dim();
        Ok(UrnProcess {
            state,
            generator,
            buffer: vec![0.0; k * k],
            scratch: vec![0.0; 2 * k],
        })
    }

    pub fn state(&self) -> &UrnState {
        &self.state
    }

    pub fn generator(&self) -> &Generator {
        &self.generator
    }

    /// `E[Y_{n+1} | F_n] = x_n H_n 1ᵀ`, evaluated as `Σ C_i (H_n 1ᵀ)_i / S_n`.
    pub fn expected_addition(&self) -> f64 {
        let h = self.generator.generating_matrix();
        let weighted: f64 = self
            .state
            .composition
            .iter()
            .zip(h.rows())
            .map(|(c, row)| c * row.iter().sum::<f64>())
            .sum();
        weighted / self.state.total
    }

    /// Runs one transition, letting `inspect` see it before the update.
    pub fn step_with<R, F>(&mut self, rng: &mut R, inspect: F) -> Result<StepOutcome>
    where
        R: Rng + ?Sized,
        F: FnOnce(&StepContext<'_>),
    {
        // R_n is sampled before the draw so it cannot depend on χ_n.
        let replacement = self.generator.sample(rng, &mut self.buffer)?;
        let u: f64 = rng.random();
        let color = draw_color(&self.state, u);
        let k = self.state.colors();
        let row = &replacement[color * k..(color + 1) * k];
        let added: f64 = row.iter().sum();
        inspect(&StepContext {
            state: &self.state,
            color,
            replacement,
            h_gen: self.generator.generating_matrix(),
            limit: self.generator.limit(),
            added,
        });
        for (c, r) in self.state.composition.iter_mut().zip(row) {
            *c += r;
        }
        self.state.total += added;
        self.state.counts[color] += 1;
        self.state.step += 1;
        self.generator.observe(color);
        Ok(StepOutcome { color, added })
    }

    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepOutcome> {
        self.step_with(rng, |_| {})
    }

    /// One step with its full [`StepRecord`].
    pub fn step_record<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<StepRecord> {
        let mut partial = None;
        self.step_with(rng, |ctx| {
            partial = Some((
                ctx.color,
                Matrix::from_row_major(ctx.state.colors(), ctx.replacement.to_vec())
                    .expect("generator output is finite"),
                ctx.h_gen.clone(),
                ctx.added,
                ctx.state.proportions(),
            ));
        })?;
        let (chi, r, h_gen, y, x_prev) = partial.expect("inspect runs on every step");
        Ok(StepRecord {
            chi,
            r,
            h_gen,
            y,
            x_prev,
            x_next: self.state.proportions(),
            s_next: self.state.total,
        })
    }

    /// Writes `D_n` and `ξ_n` of the next transition into the buffers.
    pub fn step_terms<R: Rng + ?Sized>(
        &mut self,
        rng: &mut R,
        d: &mut [f64],
        xi: &mut [f64],
    ) -> Result<StepOutcome> {
        let k = self.state.colors();
        let mut scratch = std::mem::take(&mut self.scratch);
        let (x, h_limit) = scratch.split_at_mut(k);
        let outcome = self.step_with(rng, |ctx| {
            for (xi_, c) in x.iter_mut().zip(&ctx.state.composition) {
                *xi_ = c / ctx.state.total;
            }
            martingale_term_into(x, ctx.replacement_row(), ctx.added, ctx.h_gen, d);
            // ξ = h_{H_gen}(x) − h_H(x); the drift is linear in its matrix.
            drift_into(ctx.h_gen, x, xi);
            drift_into(ctx.limit, x, h_limit);
            for (a, b) in xi.iter_mut().zip(h_limit.iter()) {
                *a -= b;
            }
        });
        self.scratch = scratch;
        outcome
    }
}

/// Functional form of one transition.
pub fn advance<R: Rng + ?Sized>(
    state: &UrnState,
    generator: &mut Generator,
    rng: &mut R,
) -> Result<(UrnState, StepRecord)> {
    let k = state.colors();
    if generator.limit().dim() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: generator.limit().dim(),
        });
    }
    let mut r = vec![0.0; k * k];
    generator.sample_into(rng, &mut r)?;
    let u: f64 = rng.random();
    let chi = draw_color(state, u);
    let row = &r[chi * k..(chi + 1) * k];
    let y: f64 = row.iter().sum();
    let mut next = state.clone();
    for (c, v) in next.composition.iter_mut().zip(row) {
        *c += v;
    }
    next.total += y;
    next.counts[chi] += 1;
    next.step += 1;
    let h_gen = generator.generating_matrix().clone();
    generator.observe(chi);
    let record = StepRecord {
        chi,
        r: Matrix::from_row_major(k, r)?,
        h_gen,
        y,
        x_prev: state.proportions(),
        x_next: next.proportions(),
        s_next: next.total,
    };
    Ok((next, record))
}

/// Law of the limit matrix `H`: fixed, or drawn once per replicate uniformly
/// from a finite list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitLaw {
    Fixed(NonnegativeMatrix),
    Choice(Vec<NonnegativeMatrix>),
}

impl LimitLaw {
    pub fn dim(&self) -> usize {
        match self {
            LimitLaw::Fixed(h) => h.dim(),
            LimitLaw::Choice(hs) => hs.first().map_or(0, |h| h.dim()),
        }
    }

    pub fn matrices(&self) -> &[NonnegativeMatrix] {
        match self {
            LimitLaw::Fixed(h) => std::slice::from_ref(h),
            LimitLaw::Choice(hs) => hs,
        }
    }

    pub fn realize<R: Rng + ?Sized>(&self, rng: &mut R) -> &NonnegativeMatrix {
        match self {
            LimitLaw::Fixed(h) => h,
            LimitLaw::Choice(hs) => &hs[rng.random_range(0..hs.len())],
        }
    }

    pub fn validate(&self, require_irreducible: bool) -> Result<()> {
        let hs = self.matrices();
        if hs.is_empty() {
            return Err(Error::config("h_set", "at least one matrix is required"));
        }
        let k = hs[0].dim();
        for (i, h) in hs.iter().enumerate() {
            let field = match self {
                LimitLaw::Fixed(_) => "h".to_string(),
                LimitLaw::Choice(_) => format!("h_set[{i}]"),
            };
            if h.dim() != k {
                return Err(Error::config(field, "all matrices must share one dimension"));
            }
            if require_irreducible && !is_irreducible(h) {
                return Err(Error::config(
                    field,
                    "H must be irreducible (every color reachable from every color)",
                ));
            }
        }
        Ok(())
    }
}

/// Everything needed to run one urn path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub c0: Vec<f64>,
    pub limit: LimitLaw,
    pub generator: GeneratorSpec,
    pub n_max: u64,
    pub checkpoints: Vec<u64>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        UrnState::new(&self.c0)?;
        self.limit.validate(self.generator.requires_irreducible())?;
        if self.limit.dim() != self.c0.len() {
            return Err(Error::config(
                "c0",
                format!(
                    "has {} colors but H is {1}x{1}",
                    self.c0.len(),
                    self.limit.dim()
                ),
            ));
        }
        if self.checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("checkpoints", "must be strictly increasing"));
        }
        if let Some(last) = self.checkpoints.last() {
            if *last > self.n_max {
                return Err(Error::config(
                    "checkpoints",
                    format!("checkpoint {last} exceeds n_max = {}", self.n_max),
                ));
            }
        }
        Ok(())
    }

    /// Starts a process for one replicate, realizing `H` from its stream.
    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<UrnProcess> {
        let h = self.limit.realize(rng).clone();
        UrnProcess::new(&self.c0, &self.generator, &h)
    }
}

/// States at the checkpoints, plus step records when requested.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub limit: NonnegativeMatrix,
    pub checkpoints: Vec<UrnState>,
    pub records: Vec<StepRecord>,
}

/// Runs one path; identical `(config, seed, replicate)` give identical output.
pub fn simulate(
    config: &SimulationConfig,
    seed: u64,
    replicate: u64,
    record_steps: bool,
) -> Result<Trajectory> {
    config.validate()?;
    let mut rng = replicate_rng(seed, replicate);
    let mut process = config.start(&mut rng)?;
    let mut checkpoints = Vec::with_capacity(config.checkpoints.len());
    let mut records = Vec::new();
    let mut next = config.checkpoints.iter().peekable();
    loop {
        let n = process.state().step;
        while next.peek().is_some_and(|c| **c == n) {
            checkpoints.push(process.state().clone());
            next.next();
        }
        if n >= config.n_max {
            break;
        }
        if record_steps {
            records.push(process.step_record(&mut rng)?);
        } else {
            process.step(&mut rng)?;
        }
    }
    Ok(Trajectory {
        limit: process.generator().limit().clone(),
        checkpoints,
        records,
    })
}

/// CSV with header `n,S,C_1..C_K,N_1..N_K`, one row per state.
pub fn checkpoint_csv(states: &[UrnState]) -> String {
    let k = states.first().map_or(0, |s| s.colors());
    let mut out = String::from("n,S");
    for i in 1..=k {
        out.push_str(&format!(",C_{i}"));
    }
    for i in 1..=k {
        out.push_str(&format!(",N_{i}"));
    }
    out.push('\n');
    for s in states {
        out.push_str(&format!("{},{}", s.step, s.total));
        for c in &s.composition {
            out.push_str(&format!(",{c}"));
        }
        for n in &s.counts {
            out.push_str(&format!(",{n}"));
        }
        out.push('\n');
    }
    out
}
