//! Stochastic-approximation clock for `X_{n+1} = X_n + a_n (h(X_n) + β_n)`:
//! partial-sum times, level-crossing times, interpolated paths, the
//! discrepancy `e^n`, the oscillation functional and delayed error sums.

use std::collections::VecDeque;

use crate::dynamics::drift_into;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Above this many steps the crossings use binary search on the partial
/// sums instead of a linear scan.
const BINARY_SEARCH_ABOVE: usize = 10_000;

/// A finite prefix `a_0, …, a_{L−1}` of positive step sizes with memoized
/// partial sums `t_0 = 0, t_{m} = a_0 + ⋯ + a_{m−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizeSeq {
    values: Vec<f64>,
    sums: Vec<f64>,
}

impl StepSizeSeq {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step size a_{i} = {} is not a positive finite number",
                values[i]
            )));
        }
        let mut sums = Vec::with_capacity(values.len() + 1);
        let mut acc = 0.0;
        sums.push(acc);
        for a in &values {
            acc += a;
            sums.push(acc);
        }
        Ok(StepSizeSeq { values, sums })
    }

    /// `a_n = 1/(n+1)` for `n < len`.
    pub fn harmonic(len: usize) -> Self {
        Self::new((0..len).map(|n| 1.0 / (n as f64 + 1.0)).collect())
            .expect("harmonic steps are positive")
    }

    /// Urn steps `a_n = 1/S_{n+1}` from totals `S_0, …, S_L`.
    pub fn from_totals(totals: &[f64]) -> Result<Self> {
        Self::new(totals.iter().skip(1).map(|s| 1.0 / s).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, n: usize) -> Option<f64> {
        self.values.get(n).copied()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `t_0, …, t_{n_max}`.
    pub fn partial_sums(&self, n_max: usize) -> Result<&[f64]> {
        self.sums.get(..=n_max).ok_or(Error::NeedsMoreData {
            available: self.len(),
        })
    }

    /// `t_n`
    pub fn time(&self, n: usize) -> Option<f64> {
        self.sums.get(n).copied()
    }

    /// Forward crossing `τ↑(n, t) = max{m ≥ n : a_n + ⋯ + a_{m−1} ≤ t}`.
    ///
    /// Needs `a_m` at the returned `m` to certify the crossing.
    pub fn crossing_forward(&self, n: usize, t: f64) -> Result<usize> {
        check_level(t)?;
        if n >= self.len() {
            return Err(Error::NeedsMoreData {
                available: self.len(),
            });
        }
        if self.len() > BINARY_SEARCH_ABOVE {
            // max{m ≥ n : t_m ≤ t_n + t}; sums is nondecreasing.
            let level = self.sums[n] + t;
            let past = self.sums[n..].partition_point(|s| *s <= level) + n;
            if past >= self.sums.len() {
                return Err(Error::NeedsMoreData {
                    available: self.len(),
                });
            }
            return Ok(past - 1);
        }
        let mut acc = 0.0;
        for m in n..self.len() {
            acc += self.values[m];
            if acc > t {
                return Ok(m);
            }
        }
        Err(Error::NeedsMoreData {
            available: self.len(),
        })
    }

    /// Backward crossing `τ↓(n, t) = min{0 ≤ m ≤ n−1 : a_{m+1} + ⋯ + a_{n−1} ≤ t}`.
    pub fn crossing_backward(&self, n: usize, t: f64) -> Result<usize> {
        check_level(t)?;
        if n == 0 {
            return Err(Error::InvalidInput("backward crossing needs n > 0".into()));
        }
        if n > self.len() {
            return Err(Error::NeedsMoreData {
                available: self.len(),
            });
        }
        if self.len() > BINARY_SEARCH_ABOVE {
            // max{m ≤ n−1 : t_m < t_n − t}, or 0 when t_n ≤ t.
            let level = self.sums[n] - t;
            if level <= 0.0 {
                return Ok(0);
            }
            return Ok(self.sums[..n].partition_point(|s| *s < level) - 1);
        }
        let mut m = n - 1;
        let mut acc = 0.0;
        while m > 0 && acc + self.values[m] <= t {
            acc += self.values[m];
            m -= 1;
        }
        Ok(m)
    }
}

fn check_level(t: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("level t must be positive, got {t}")));
    }
    Ok(())
}

/// A sequence of equal-length vectors stored contiguously.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VectorSeq {
    dim: usize,
    data: Vec<f64>,
}

impl VectorSeq {
    pub fn new(dim: usize) -> Self {
        VectorSeq {
            dim,
            data: Vec::new(),
        }
    }

    pub fn with_capacity(dim: usize, len: usize) -> Self {
        VectorSeq {
            dim,
            data: Vec::with_capacity(dim * len),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut seq = Self::with_capacity(dim, rows.len());
        for r in rows {
            seq.push(r)?;
        }
        Ok(seq)
    }

    pub fn push(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: v.len(),
            });
        }
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

/// Knots `(t_k, X_k)` with strictly increasing times, read either as the
/// piecewise linear `X⁰` or the piecewise constant `X̄⁰`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    times: Vec<f64>,
    values: VectorSeq,
}

impl PathSample {
    pub fn new(times: Vec<f64>, values: VectorSeq) -> Result<Self> {
        if times.is_empty() || times.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} times for {} values",
                times.len(),
                values.len()
            )));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("knot times must be finite and strictly increasing".into()));
        }
        if values.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("knot values must be finite".into()));
        }
        Ok(PathSample { times, values })
    }

    /// Knots at the partial sums `t_0, …, t_{L}` of `a`.
    pub fn on_clock(a: &StepSizeSeq, values: VectorSeq) -> Result<Self> {
        let times = a.partial_sums(values.len().saturating_sub(1))?.to_vec();
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn value(&self, k: usize) -> &[f64] {
        self.values.get(k)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.dim()
    }

    /// Index `k` of the knot interval `[t_k, t_{k+1})` holding `t`, for
    /// `t_0 ≤ t < t_last`.
    fn interval(&self, t: f64) -> usize {
        self.times.partition_point(|s| *s <= t) - 1
    }

    /// `X⁰(t)`: linear between knots, `X_0` left of `t_0`, and held at the
    /// last knot beyond the sampled range.
    pub fn interp_linear(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.interp_linear_into(t, &mut out);
        out
    }

    fn interp_linear_into(&self, t: f64, out: &mut [f64]) {
        let last = self.len() - 1;
        if t <= self.times[0] {
            out.copy_from_slice(self.value(0));
        } else if t >= self.times[last] {
            out.copy_from_slice(self.value(last));
        } else {
            let k = self.interval(t);
            self.linear_in(k, t, out);
        }
    }

    fn linear_in(&self, k: usize, t: f64, out: &mut [f64]) {
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let w = (t - t0) / (t1 - t0);
        for ((o, a), b) in out.iter_mut().zip(self.value(k)).zip(self.value(k + 1)) {
            *o = a * (1.0 - w) + b * w;
        }
    }

    /// `X̄⁰(t)`: `X_k` on `[t_k, t_{k+1})`, zero left of `t_0`, held at the
    /// last knot beyond the sampled range.
    pub fn interp_const(&self, t: f64) -> Vec<f64> {
        if t < self.times[0] {
            return vec![0.0; self.dim()];
        }
        let last = self.len() - 1;
        if t >= self.times[last] {
            return self.value(last).to_vec();
        }
        self.value(self.interval(t)).to_vec()
    }
}

/// `e^n(t) = ∫₀ᵗ h_G(X̄⁰(t_n + s)) ds − ∫₀ᵗ h_G(X⁰(t_n + s)) ds`.
///
/// `t_n` is the time of knot `n`; `t_n + t` must stay inside the sampled
/// range. The drift is constant along `X̄⁰` between knots and quadratic
/// along `X⁰`, so rectangle sums and per-interval Simpson are exact.
pub fn discrepancy_e(g: &Matrix, path: &PathSample, n: usize, t: f64) -> Result<Vec<f64>> {
    if g.dim() != path.dim() {
        return Err(Error::DimensionMismatch {
            expected: path.dim(),
            got: g.dim(),
        });
    }
    let start = *path.times.get(n).ok_or(Error::NeedsMoreData {
        available: path.len(),
    })?;
    let end = start + t;
    let (first, last) = (path.times[0], path.times[path.len() - 1]);
    if !(end >= first && end <= last) {
        return Err(Error::InvalidInput(format!(
            "e^{n}({t}) needs the path on [{start}, {end}] but it covers [{first}, {last}]"
        )));
    }
    let (lo, hi, sign) = if end >= start {
        (start, end, 1.0)
    } else {
        (end, start, -1.0)
    };
    let k = path.dim();
    let mut total = vec![0.0; k];
    let (mut xa, mut xm, mut xb) = (vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let (mut ha, mut hm, mut hb, mut hc) = (vec![0.0; k], vec![0.0; k], vec![0.0; k], vec![0.0; k]);
    let mut idx = if lo < last { path.interval(lo) } else { path.len() - 1 };
    while idx + 1 < path.len() && path.times[idx] < hi {
        let alpha = lo.max(path.times[idx]);
        let beta = hi.min(path.times[idx + 1]);
        if beta > alpha {
            let width = beta - alpha;
            drift_into(g, path.value(idx), &mut hc);
            path.linear_in(idx, alpha, &mut xa);
            path.linear_in(idx, 0.5 * (alpha + beta), &mut xm);
            path.linear_in(idx, beta, &mut xb);
            drift_into(g, &xa, &mut ha);
            drift_into(g, &xm, &mut hm);
            drift_into(g, &xb, &mut hb);
            for i in 0..k {
                let linear = width / 6.0 * (ha[i] + 4.0 * hm[i] + hb[i]);
                total[i] += width * hc[i] - linear;
            }
        }
        idx += 1;
    }
    total.iter_mut().for_each(|v| *v *= sign);
    Ok(total)
}

/// Modulus of continuity of the linear interpolant on `[a, b]`:
/// `sup{‖X⁰(t) − X⁰(s)‖₁ : s, t ∈ [a, b], |t − s| ≤ δ}`.
///
/// On each pair of knot intervals the difference is affine in `(s, t)`, so
/// the supremum sits at a vertex of the band `|t − s| ≤ δ` cut by the knot
/// grid: pairs of knots, or a knot paired with its `±δ` shift. The ℓ¹ norm
/// is a maximum of `K−1`-fold sign projections, each handled by a sliding
/// window over the candidate points.
pub fn oscillation(path: &PathSample, a: f64, b: f64, delta: f64) -> Result<f64> {
    if !(a < b) || !(delta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "oscillation needs a < b and δ > 0, got [{a}, {b}] and δ = {delta}"
        )));
    }
    let mut points = vec![a, b];
    for &t in &path.times {
        for p in [t, t - delta, t + delta] {
            if p > a && p < b {
                points.push(p);
            }
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let k = path.dim();
    let values: Vec<Vec<f64>> = points.iter().map(|p| path.interp_linear(*p)).collect();
    // end of the window [p_i, p_i + δ] for every i
    let mut window_end = vec![0; points.len()];
    let mut hi = 0;
    for (i, p) in points.iter().enumerate() {
        while hi + 1 < points.len() && points[hi + 1] <= p + delta {
            hi += 1;
        }
        window_end[i] = hi;
    }

    let mut best: f64 = 0.0;
    let mut proj = vec![0.0; points.len()];
    let (mut maxq, mut minq) = (VecDeque::new(), VecDeque::new());
    for signs in 0..1usize << (k - 1) {
        for (f, v) in proj.iter_mut().zip(&values) {
            *f = v
                .iter()
                .enumerate()
                .map(|(c, x)| if c > 0 && signs >> (c - 1) & 1 == 1 { -x } else { *x })
                .sum();
        }
        maxq.clear();
        minq.clear();
        let mut pushed = 0;
        for i in 0..points.len() {
            while pushed <= window_end[i] {
                while maxq.back().is_some_and(|&j| proj[j] <= proj[pushed]) {
                    maxq.pop_back();
                }
                maxq.push_back(pushed);
                while minq.back().is_some_and(|&j| proj[j] >= proj[pushed]) {
                    minq.pop_back();
                }
                minq.push_back(pushed);
                pushed += 1;
            }
            while maxq.front().is_some_and(|&j| j < i) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j < i) {
                minq.pop_front();
            }
            let top = proj[*maxq.front().expect("window holds i")];
            let bottom = proj[*minq.front().expect("window holds i")];
            best = best.max(top - proj[i]).max(proj[i] - bottom);
        }
    }
    Ok(best)
}

/// Forward and backward delayed sums in their maximal form:
/// `max_{n ≤ m ≤ τ↑(n,t)} ‖Σ_{i=n}^{m} a_i β_i‖₁` and
/// `max_{τ↓(n,t) ≤ m ≤ n−1} ‖Σ_{i=m}^{n−1} a_i β_i‖₁` (zero when `n = 0`).
pub fn delayed_sum_stats(a: &StepSizeSeq, beta: &VectorSeq, n: usize, t: f64) -> Result<(f64, f64)> {
    let upper = a.crossing_forward(n, t)?;
    if upper >= beta.len() {
        return Err(Error::NeedsMoreData {
            available: beta.len(),
        });
    }
    let k = beta.dim();
    let mut acc = vec![0.0; k];
    let mut fwd: f64 = 0.0;
    for i in n..=upper {
        let w = a.values[i];
        for (s, b) in acc.iter_mut().zip(beta.get(i)) {
            *s += w * b;
        }
        fwd = fwd.max(acc.iter().map(|v| v.abs()).sum());
    }
    let mut bwd: f64 = 0.0;
    if n > 0 {
        let lower = a.crossing_backward(n, t)?;
        acc.iter_mut().for_each(|v| *v = 0.0);
        for i in (lower..n).rev() {
            let w = a.values[i];
            for (s, b) in acc.iter_mut().zip(beta.get(i)) {
                *s += w * b;
            }
            bwd = bwd.max(acc.iter().map(|v| v.abs()).sum());
        }
    }
    Ok((fwd, bwd))
}
