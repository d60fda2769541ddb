//! Dense SPD solves, Newton decrements, damped Newton steps and a
//! high-accuracy minimizer for self-concordant functions.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Relative jitter levels tried, in order, when a factorization fails.
pub const JITTER_LEVELS: [f64; 4] = [1e-12, 1e-10, 1e-8, 1e-6];

const REFINEMENT_STEPS: usize = 3;
const SOLVE_RTOL: f64 = 1e-9;

/// A symmetric positive-definite matrix together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct QuadraticForm {
    matrix: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
    jitter: f64,
}

impl QuadraticForm {
    /// Factors `h`, escalating through [`JITTER_LEVELS`] (scaled by `trace/m`) if needed.
    pub fn new(h: DMatrix<f64>) -> Result<Self> {
        let m = h.nrows();
        if m == 0 || h.ncols() != m {
            return Err(Error::Param(format!("quadratic form needs a square matrix, got {}x{}", m, h.ncols())));
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::SingularMatrix);
        }
        if let Some(factor) = Cholesky::new(h.clone()) {
            return Ok(QuadraticForm { matrix: h, factor, jitter: 0.0 });
        }
        let scale = h.trace().abs() / m as f64;
        for delta in JITTER_LEVELS {
            let shift = delta * scale;
            let mut shifted = h.clone();
            for i in 0..m {
                shifted[(i, i)] += shift;
            }
            if let Some(factor) = Cholesky::new(shifted) {
                log::debug!("cholesky needed jitter {shift:e}");
                return Ok(QuadraticForm { matrix: h, factor, jitter: shift });
            }
        }
        Err(Error::SingularMatrix)
    }

    pub fn identity(m: usize) -> Self {
        Self::new(DMatrix::identity(m, m)).expect("identity is SPD")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Diagonal shift that was needed to factor the matrix (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `H^{-1} b`, refined against the unjittered matrix.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut x = self.factor.solve(b);
        let target = SOLVE_RTOL * b.norm();
        for _ in 0..REFINEMENT_STEPS {
            let residual = b - &self.matrix * &x;
            if residual.norm() <= target {
                break;
            }
            x += self.factor.solve(&residual);
        }
        x
    }

    /// `sqrt(x^T H x)`.
    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.matrix * x)).max(0.0).sqrt()
    }

    /// `sqrt(g^T H^{-1} g)`.
    pub fn dual_norm(&self, g: &DVector<f64>) -> f64 {
        g.dot(&self.solve(g)).max(0.0).sqrt()
    }
}

pub fn spd_solve(h: &QuadraticForm, b: &DVector<f64>) -> DVector<f64> {
    h.solve(b)
}

/// `lambda = ||g||_{H^{-1}}`.
pub fn newton_decrement(g: &DVector<f64>, h: &QuadraticForm) -> f64 {
    h.dual_norm(g)
}

/// `x - H^{-1} g / (1 + M lambda)`; the step has `H`-norm `lambda / (1 + M lambda) < 1/M`.
pub fn damped_newton_step(x: &DVector<f64>, g: &DVector<f64>, h: &QuadraticForm, m: f64) -> DVector<f64> {
    let dir = h.solve(g);
    let lambda = g.dot(&dir).max(0.0).sqrt();
    x - dir / (1.0 + m * lambda)
}

/// A self-concordant function given by value/gradient/Hessian callbacks.
///
/// `value` must return `+inf` (or NaN) outside the domain; `grad` and `hess`
/// are only called at domain points.
pub trait ScFunction {
    fn value(&self, x: &DVector<f64>) -> f64;
    fn grad(&self, x: &DVector<f64>) -> DVector<f64>;
    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64>;
    /// Self-concordance constant `M_f`.
    fn sc_constant(&self) -> f64;
}

#[derive(Clone, Copy, Debug)]
pub struct MinimizeOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { tol: 1e-12, max_iter: 500 }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: DVector<f64>,
    pub value: f64,
    pub decrement: f64,
    pub iterations: usize,
}

const MAX_HALVINGS: usize = 60;

/// Minimizes `f` from the interior point `x0` until the Newton decrement is at most `opts.tol`.
///
/// Damped steps are used while `lambda >= 1/(4M)` and full Newton steps
/// below. With a valid `M` both kinds of step stay in the domain and reduce
/// `f`, so the value is not compared (for long sums its rounding noise can
/// exceed the decrease near the minimizer); a step leaving the domain is
/// halved, which only happens when `M` is understated.
pub fn minimize_sc<F: ScFunction + ?Sized>(f: &F, x0: &DVector<f64>, opts: MinimizeOptions) -> Result<Minimum> {
    let m = f.sc_constant();
    let mut x = x0.clone();
    let mut value = f.value(&x);
    if !value.is_finite() {
        return Err(Error::Domain("minimize_sc started outside the domain".into()));
    }
    let mut decrement = f64::INFINITY;
    for iter in 0..=opts.max_iter {
        let g = f.grad(&x);
        let h = QuadraticForm::new(f.hess(&x))?;
        let dir = h.solve(&g);
        decrement = g.dot(&dir).max(0.0).sqrt();
        if decrement <= opts.tol {
            return Ok(Minimum { x, value, decrement, iterations: iter });
        }
        if iter == opts.max_iter {
            break;
        }
        let mut step = if m > 0.0 && decrement >= 1.0 / (4.0 * m) {
            1.0 / (1.0 + m * decrement)
        } else {
            1.0
        };
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let candidate = &x - &dir * step;
            let v = f.value(&candidate);
            if v.is_finite() {
                x = candidate;
                value = v;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: iter, decrement });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, decrement })
}
