//! The Lotka–Volterra drift `h_A(x) = xA − x (xA1ᵀ)` and its flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{is_irreducible, Matrix, NonnegativeMatrix};
use crate::perron::perron;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A probability vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidInput("simplex point needs a coordinate".into()));
        }
        if coords.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInput(format!(
                "coordinates must be finite and nonnegative: {coords:?}"
            )));
        }
        let total: f64 = coords.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "coordinates sum to {total}, expected 1"
            )));
        }
        Ok(SimplexPoint(coords))
    }

    /// Scales a nonnegative, nonzero vector onto the simplex.
    pub fn normalized(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| *w < 0.0) {
            return Err(Error::InvalidInput(format!(
                "cannot normalize {weights:?} onto the simplex"
            )));
        }
        Self::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(k: usize) -> Self {
        SimplexPoint(vec![1.0 / k as f64; k])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SimplexPoint::new(v)
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0
    }
}

/// Evaluates the drift for any square matrix argument, signed or not.
pub fn drift(a: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(a, x.len())?;
    let mut out = vec![0.0; x.len()];
    drift_into(a, x, &mut out);
    Ok(out)
}

/// Allocation-free drift; `x` and `out` must both have length `a.dim()`.
pub fn drift_into(a: &Matrix, x: &[f64], out: &mut [f64]) {
    a.left_mul_into(x, out);
    let growth: f64 = out.iter().sum();
    for (o, xi) in out.iter_mut().zip(x) {
        *o -= xi * growth;
    }
}

/// `ξ = h_{H_gen − H}(x)`: the drift error from using the generating matrix
/// in place of its limit.
pub fn xi_term(h_gen: &Matrix, h: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    drift(&h_gen.sub(h)?, x)
}

/// `‖h_H(π_H)‖₁`, which vanishes because `π_H` is the rest point.
pub fn fixed_point_residual(h: &NonnegativeMatrix) -> Result<f64> {
    let p = perron(h)?;
    Ok(drift(h, &p.pi)?.iter().map(|v| v.abs()).sum())
}

fn check_dim(a: &Matrix, len: usize) -> Result<()> {
    if a.dim() != len {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: len,
        });
    }
    Ok(())
}

/// A discretized solution of `ẋ = h_H(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub states: Vec<SimplexPoint>,
    /// Largest `|Σx − 1|` observed before any post-step projection.
    pub max_mass_defect: f64,
}

impl OdePath {
    pub fn last(&self) -> &SimplexPoint {
        self.states.last().expect("path holds the initial state")
    }
}

/// Fixed-step classical RK4 integrator on the simplex.
struct Rk4 {
    h: Matrix,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    fn new(h: &Matrix) -> Self {
        let k = h.dim();
        Rk4 {
            h: h.clone(),
            k1: vec![0.0; k],
            k2: vec![0.0; k],
            k3: vec![0.0; k],
            k4: vec![0.0; k],
            tmp: vec![0.0; k],
        }
    }

    /// Advances `x` in place and projects it back onto the simplex.
    /// Returns the mass defect before projection, or `None` on a non-finite
    /// state.
    fn step(&mut self, x: &mut [f64], dt: f64) -> Option<f64> {
        drift_into(&self.h, x, &mut self.k1);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *t = xi + 0.5 * dt * k;
        }
        drift_into(&self.h, &self.tmp, &mut self.k2);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *t = xi + 0.5 * dt * k;
        }
        drift_into(&self.h, &self.tmp, &mut self.k3);
        for ((t, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *t = xi + dt * k;
        }
        drift_into(&self.h, &self.tmp, &mut self.k4);
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += dt / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let defect = (x.iter().sum::<f64>() - 1.0).abs();
        x.iter_mut().for_each(|v| *v = v.max(0.0));
        let total: f64 = x.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        x.iter_mut().for_each(|v| *v /= total);
        Some(defect)
    }
}

fn check_ode_inputs(h: &NonnegativeMatrix, x0: &SimplexPoint, dt: f64) -> Result<()> {
    check_dim(h, x0.dim())?;
    if !is_irreducible(h) {
        return Err(Error::Reducible);
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Integrates from `x0` up to `t_end` with step `dt`, recording every step.
/// The last step is shortened so the path ends exactly at `t_end`.
pub fn integrate(h: &NonnegativeMatrix, x0: &SimplexPoint, t_end: f64, dt: f64) -> Result<OdePath> {
    check_ode_inputs(h, x0, dt)?;
    if !(t_end >= 0.0) {
        return Err(Error::InvalidInput(format!("t_end must be nonnegative, got {t_end}")));
    }
    let mut rk = Rk4::new(h);
    let mut x = x0.coords().to_vec();
    let steps = (t_end / dt).ceil() as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(0.0);
    states.push(x0.clone());
    let mut max_mass_defect: f64 = 0.0;
    for i in 1..=steps {
        let t_prev = (i - 1) as f64 * dt;
        let t = if i == steps { t_end } else { i as f64 * dt };
        let defect = rk.step(&mut x, t - t_prev).ok_or(Error::Integration { time: t })?;
        max_mass_defect = max_mass_defect.max(defect);
        times.push(t);
        states.push(SimplexPoint(x.clone()));
    }
    Ok(OdePath {
        times,
        states,
        max_mass_defect,
    })
}

/// Endpoint of a run whose horizon was extended until the drift settled.
#[derive(Debug, Clone, PartialEq)]
pub struct Settled {
    pub state: SimplexPoint,
    pub t_end: f64,
    pub drift_norm: f64,
    pub converged: bool,
}

/// Integrates to `t_end`, then keeps doubling the horizon until
/// `‖h_H(X(t_end))‖₁ ≤ drift_tol` or the horizon reaches `2¹⁰ · t_end`.
/// Only the endpoint is kept.
pub fn settle(
    h: &NonnegativeMatrix,
    x0: &SimplexPoint,
    t_end: f64,
    dt: f64,
    drift_tol: f64,
) -> Result<Settled> {
    check_ode_inputs(h, x0, dt)?;
    if !(t_end > 0.0) {
        return Err(Error::InvalidInput(format!("t_end must be positive, got {t_end}")));
    }
    let cap = t_end * 1024.0;
    let mut rk = Rk4::new(h);
    let mut x = x0.coords().to_vec();
    let mut g = vec![0.0; x.len()];
    let mut t = 0.0;
    let mut horizon = t_end;
    loop {
        let steps = ((horizon - t) / dt).round().max(1.0) as usize;
        let step = (horizon - t) / steps as f64;
        for i in 0..steps {
            rk.step(&mut x, step).ok_or(Error::Integration {
                time: t + (i + 1) as f64 * step,
            })?;
        }
        t = horizon;
        drift_into(h, &x, &mut g);
        let drift_norm: f64 = g.iter().map(|v| v.abs()).sum();
        let converged = drift_norm <= drift_tol;
        if converged || horizon >= cap {
            return Ok(Settled {
                state: SimplexPoint(x),
                t_end: t,
                drift_norm,
                converged,
            });
        }
        horizon *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nn(rows: &[&[f64]]) -> NonnegativeMatrix {
        NonnegativeMatrix::from_rows(rows).unwrap()
    }

    fn l1(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }

    #[test]
    fn drift_examples() {
        let h = nn(&[&[2.0, 1.0], &[1.0, 2.0]]);
        assert_eq!(drift(&h, &[1.0, 0.0]).unwrap(), vec![-1.0, 1.0]);
        let d = drift(&h, &[0.5, 0.5]).unwrap();
        assert!(d.iter().all(|v| v.abs() <= 1e-12));
        assert!(drift(&h, &[1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn drift_vanishes_at_perron_vector() {
        for h in [
            nn(&[&[2.0, 1.0], &[1.0, 2.0]]),
            nn(&[&[1.0, 2.0], &[3.0, 4.0]]),
            nn(&[&[0.0, 1.0], &[1.0, 0.0]]),
        ] {
            assert!(fixed_point_residual(&h).unwrap() <= 1e-10);
        }
        assert!(fixed_point_residual(&nn(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap() <= 1e-12);
        assert!(fixed_point_residual(&nn(&[&[0.0, 1.0], &[1.0, 0.0]])).unwrap() <= 1e-12);
        assert_eq!(
            fixed_point_residual(&nn(&[&[1.0, 0.0], &[0.0, 1.0]])),
            Err(Error::Reducible)
        );
    }

    #[test]
    fn xi_examples() {
        let h = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        let x = [0.3, 0.7];
        assert_eq!(xi_term(&h, &h, &x).unwrap(), vec![0.0, 0.0]);
        let h_gen = Matrix::from_rows(&[[1.1, 0.9], [1.0, 1.0]]).unwrap();
        let xi = xi_term(&h_gen, &h, &[1.0, 0.0]).unwrap();
        assert!((xi[0] - 0.1).abs() < 1e-15 && (xi[1] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_path_is_constant() {
        let h = nn(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let pi = SimplexPoint::new(perron(&h).unwrap().pi).unwrap();
        let path = integrate(&h, &pi, 50.0, 0.01).unwrap();
        let dev = path
            .states
            .iter()
            .map(|s| l1(s.coords(), pi.coords()))
            .fold(0.0, f64::max);
        assert!(dev <= 1e-9, "deviation {dev}");
    }

    #[test]
    fn friedman_flow_reaches_half_half() {
        let h = nn(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let x0 = SimplexPoint::new(vec![0.9, 0.1]).unwrap();
        let coarse = integrate(&h, &x0, 40.0, 0.01).unwrap();
        let fine = integrate(&h, &x0, 40.0, 0.005).unwrap();
        assert!(l1(coarse.last().coords(), &[0.5, 0.5]) <= 1e-6);
        assert!(l1(coarse.last().coords(), fine.last().coords()) <= 1e-9);
        assert!(coarse.max_mass_defect <= 1e-9);
        assert_eq!(*coarse.times.last().unwrap(), 40.0);
        assert!(coarse.times.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn ode_input_errors() {
        let h = nn(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let x0 = SimplexPoint::uniform(2);
        assert!(integrate(&h, &x0, 1.0, 0.0).is_err());
        assert!(integrate(&h, &SimplexPoint::uniform(3), 1.0, 0.1).is_err());
        assert_eq!(
            integrate(&nn(&[&[1.0, 0.0], &[0.0, 1.0]]), &x0, 1.0, 0.1),
            Err(Error::Reducible)
        );
        assert!(SimplexPoint::new(vec![0.5, 0.6]).is_err());
        assert!(SimplexPoint::new(vec![1.5, -0.5]).is_err());
    }

    #[test]
    fn settle_extends_the_horizon() {
        let h = nn(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = settle(&h, &SimplexPoint::new(vec![0.99, 0.01]).unwrap(), 0.5, 0.01, 1e-8).unwrap();
        assert!(s.converged);
        assert!(s.t_end > 0.5);
        let pi = perron(&h).unwrap().pi;
        assert!(l1(s.state.coords(), &pi) <= 1e-6);
    }
}
