//! L1-regularized binary logistic regression.
//!
//! Minimizes `C * sum_i softplus(-y_i * (w.x_i + b)) + |w|_1` with labels in
//! {-1, +1} and an unpenalized intercept `b`, by accelerated proximal gradient
//! with backtracking. A step that would raise the objective is redone as a
//! plain proximal step from the current iterate, so the objective never
//! increases. The run ends when a plain proximal step lowers the objective by
//! less than `tol` relative to its value.

use super::features::SparseBinaryMatrix;
use crate::error::{Error, Result};

pub const DEFAULT_C: f64 = 0.4;
pub const DEFAULT_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRegOptions {
    pub c: f64,
    /// Relative objective decrease below which the solver stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            c: DEFAULT_C,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegFit {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after each accepted iterate, starting with the initial point.
    pub history: Vec<f64>,
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// `1 / (1 + exp(-z))`
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

struct Problem<'a> {
    x: &'a SparseBinaryMatrix,
    signs: Vec<f64>,
    c: f64,
}

impl Problem<'_> {
    fn margin(&self, i: usize, w: &[f64], b: f64) -> f64 {
        b + self.x.row(i).iter().map(|&j| w[j as usize]).sum::<f64>()
    }

    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let total: f64 = (0..self.x.n_rows())
            .map(|i| softplus(-self.signs[i] * self.margin(i, w, b)))
            .sum();
        self.c * total
    }

    /// Smooth loss and its gradient; `gw` is overwritten.
    fn loss_grad(&self, w: &[f64], b: f64, gw: &mut [f64]) -> (f64, f64) {
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut loss = 0.0;
        let mut gb = 0.0;
        for i in 0..self.x.n_rows() {
            let y = self.signs[i];
            let z = -y * self.margin(i, w, b);
            loss += softplus(z);
            let d = -y * sigmoid(z) * self.c;
            gb += d;
            for &j in self.x.row(i) {
                gw[j as usize] += d;
            }
        }
        (self.c * loss, gb)
    }
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|v| v.abs()).sum()
}

fn check_inputs(x: &SparseBinaryMatrix, y: &[bool], c: f64) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::InvalidInput(format!("C must be positive, got {c}")));
    }
    Ok(())
}

fn to_signs(y: &[bool]) -> Vec<f64> {
    y.iter().map(|&p| if p { 1.0 } else { -1.0 }).collect()
}

/// Full objective `C * loss + |w|_1`.
pub fn objective(x: &SparseBinaryMatrix, y: &[bool], w: &[f64], b: f64, c: f64) -> f64 {
    let p = Problem {
        x,
        signs: to_signs(y),
        c,
    };
    p.loss(w, b) + l1(w)
}

/// Smooth part `C * loss` and its gradient `(d/dw, d/db)`.
pub fn loss_gradient(
    x: &SparseBinaryMatrix,
    y: &[bool],
    w: &[f64],
    b: f64,
    c: f64,
) -> (f64, Vec<f64>, f64) {
    let p = Problem {
        x,
        signs: to_signs(y),
        c,
    };
    let mut gw = vec![0.0; w.len()];
    let (loss, gb) = p.loss_grad(w, b, &mut gw);
    (loss, gw, gb)
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct Step {
    w: Vec<f64>,
    b: f64,
    objective: f64,
}

/// Backtracking proximal step from `(yw, yb)`; raises `lipschitz` as needed.
fn prox_step(
    p: &Problem<'_>,
    yw: &[f64],
    yb: f64,
    gw: &mut [f64],
    lipschitz: &mut f64,
) -> Result<Step> {
    let (fy, gb) = p.loss_grad(yw, yb, gw);
    if !fy.is_finite() {
        return Err(Error::NonFinite);
    }
    loop {
        let l = *lipschitz;
        let w: Vec<f64> = yw
            .iter()
            .zip(gw.iter())
            .map(|(&v, &g)| soft_threshold(v - g / l, 1.0 / l))
            .collect();
        let b = yb - gb / l;
        let mut lin = (b - yb) * gb;
        let mut sq = (b - yb) * (b - yb);
        for j in 0..w.len() {
            let d = w[j] - yw[j];
            lin += d * gw[j];
            sq += d * d;
        }
        let fz = p.loss(&w, b);
        if !fz.is_finite() {
            return Err(Error::NonFinite);
        }
        if fz <= fy + lin + 0.5 * l * sq + 1e-12 * fy.abs().max(1.0) {
            return Ok(Step {
                objective: fz + l1(&w),
                w,
                b,
            });
        }
        *lipschitz = l * 2.0;
        if !lipschitz.is_finite() {
            return Err(Error::NonFinite);
        }
    }
}

/// Fits one binary classifier starting from `w = 0, b = 0`.
pub fn train_logreg(x: &SparseBinaryMatrix, y: &[bool], opts: &LogRegOptions) -> Result<LogRegFit> {
    check_inputs(x, y, opts.c)?;
    if y.iter().all(|&v| v) || y.iter().all(|&v| !v) {
        return Err(Error::SingleClass);
    }
    let p = Problem {
        x,
        signs: to_signs(y),
        c: opts.c,
    };
    let n = x.n_cols();
    let widest = x.rows().map(|r| r.len() + 1).max().unwrap_or(1) as f64;
    let mut lipschitz = opts.c * widest / 4.0;

    let mut w = vec![0.0; n];
    let mut b = 0.0;
    let mut prev_w = w.clone();
    let mut prev_b = b;
    let mut obj = p.loss(&w, b);
    let mut history = vec![obj];
    let mut t = 1.0_f64;
    let mut gw = vec![0.0; n];
    let mut yw = vec![0.0; n];
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        let beta = (t - 1.0) / t_next;
        for j in 0..n {
            yw[j] = w[j] + beta * (w[j] - prev_w[j]);
        }
        let yb = b + beta * (b - prev_b);
        let mut step = prox_step(&p, &yw, yb, &mut gw, &mut lipschitz)?;
        t = t_next;
        if step.objective > obj && beta != 0.0 {
            // Momentum overshot: restart from the current iterate.
            t = 1.0;
            step = prox_step(&p, &w, b, &mut gw, &mut lipschitz)?;
        }
        if step.objective > obj {
            // No descent left at floating-point resolution.
            converged = true;
            break;
        }
        let decrease = (obj - step.objective) / obj.abs().max(f64::MIN_POSITIVE);
        // Let the step grow again where the local curvature is flatter
        // than the bound backtracking reached.
        lipschitz *= 0.5;
        prev_w = std::mem::replace(&mut w, step.w);
        prev_b = std::mem::replace(&mut b, step.b);
        obj = step.objective;
        history.push(obj);
        if decrease < opts.tol {
            // Momentum steps can stall briefly far from the optimum, so only
            // a plain proximal step may end the run.
            if beta == 0.0 || t == 1.0 {
                converged = true;
                break;
            }
            t = 1.0;
        }
    }

    Ok(LogRegFit {
        weights: w,
        intercept: b,
        objective: obj,
        iterations,
        converged,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (SparseBinaryMatrix, Vec<bool>) {
        let rows = vec![
            vec![0],
            vec![0, 1],
            vec![1],
            vec![2],
            vec![1, 2],
            vec![0, 2],
        ];
        let y = vec![true, true, false, false, false, true];
        (SparseBinaryMatrix::from_rows(rows, 3).unwrap(), y)
    }

    #[test]
    fn objective_never_increases() {
        let (x, y) = toy();
        let fit = train_logreg(
            &x,
            &y,
            &LogRegOptions {
                c: 5.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.converged);
        for pair in fit.history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        assert!(fit.weights[0] > 0.0);
    }

    #[test]
    fn intercept_tracks_prior_when_weights_vanish() {
        let (x, y) = toy();
        let opts = LogRegOptions {
            c: 1e-3,
            tol: 1e-12,
            ..Default::default()
        };
        let fit = train_logreg(&x, &y, &opts).unwrap();
        assert!(fit.weights.iter().all(|&v| v == 0.0));
        assert!(fit.intercept.abs() < 1e-4);
    }

    #[test]
    fn single_class_is_an_error() {
        let (x, _) = toy();
        assert!(matches!(
            train_logreg(&x, &[true; 6], &LogRegOptions::default()),
            Err(Error::SingleClass)
        ));
        assert!(train_logreg(&x, &[true; 2], &LogRegOptions::default()).is_err());
        let bad_c = LogRegOptions {
            c: 0.0,
            ..Default::default()
        };
        assert!(train_logreg(&x, &[true, false, true, false, true, false], &bad_c).is_err());
    }

    #[test]
    fn stable_softplus_and_sigmoid() {
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert_eq!(softplus(1000.0), 1000.0);
        assert_eq!(softplus(-1000.0), 0.0);
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
    }
}
