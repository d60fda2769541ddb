//! Lifted-simplex coordinates, Cover's loss and the weighted log-barrier.
//!
//! A portfolio over `d` assets is stored by its first `d - 1` coordinates
//! (`Weights`). The last coordinate is implicit: lifting `v` gives
//! `(v_1, ..., v_{d-1}, 1 - sum(v))`, a point of the probability simplex.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on simplex sums and on the `sum(v) <= 1` constraint.
pub const SIMPLEX_TOL: f64 = 1e-12;

/// Free coordinates of a portfolio, a point of `{v >= 0, sum(v) <= 1}` in `R^{d-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct Weights(DVector<f64>);

impl Weights {
    pub fn new(v: Vec<f64>) -> Result<Self> {
        Self::from_vector(DVector::from_vec(v))
    }

    pub fn from_vector(v: DVector<f64>) -> Result<Self> {
        if v.is_empty() {
            return Err(Error::Domain("weights need d >= 2 assets".into()));
        }
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Domain(format!("negative or non-finite weight in {:?}", v.as_slice())));
        }
        let s = v.sum();
        if s > 1.0 + SIMPLEX_TOL {
            return Err(Error::Domain(format!("weights sum to {s} > 1")));
        }
        Ok(Weights(v))
    }

    /// Builds weights from an iterate that must lie strictly inside the lifted simplex.
    pub fn interior(v: DVector<f64>) -> Result<Self> {
        let w = Self::from_vector(v)?;
        if !w.is_interior() {
            return Err(Error::Domain(format!("point {:?} is not interior", w.0.as_slice())));
        }
        Ok(w)
    }

    /// The uniform portfolio `1/d` in free coordinates.
    pub fn uniform(assets: usize) -> Self {
        assert!(assets >= 2, "need at least two assets");
        Weights(DVector::from_element(assets - 1, 1.0 / assets as f64))
    }

    pub fn assets(&self) -> usize {
        self.0.len() + 1
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.0
    }

    /// Implicit last coordinate `1 - sum(v)`.
    pub fn last(&self) -> f64 {
        1.0 - self.0.sum()
    }

    /// All lifted coordinates strictly positive.
    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|x| *x > 0.0) && self.last() > 0.0
    }

    /// Smallest lifted coordinate.
    pub fn min_lifted(&self) -> f64 {
        self.0.iter().copied().fold(self.last(), f64::min)
    }
}

/// A point of the probability simplex in `R^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.len() < 2 {
            return Err(Error::Domain("simplex points need d >= 2".into()));
        }
        if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Domain(format!("negative or non-finite coordinate in {p:?}")));
        }
        let s: f64 = p.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::Domain(format!("simplex coordinates sum to {s}")));
        }
        Ok(SimplexPoint(p))
    }

    pub fn uniform(assets: usize) -> Self {
        SimplexPoint(vec![1.0 / assets as f64; assets])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Drops the last coordinate.
    pub fn to_weights(&self) -> Weights {
        Weights(DVector::from_column_slice(&self.0[..self.0.len() - 1]))
    }

    pub fn dot(&self, r: &ReturnVector) -> f64 {
        self.0.iter().zip(r.as_slice()).map(|(p, r)| p * r).sum()
    }
}

/// Price relatives of one round, scaled so that the largest entry is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnVector(Vec<f64>);

impl ReturnVector {
    /// Normalizes raw price relatives by their maximum.
    pub fn normalized(raw: Vec<f64>) -> Result<Self> {
        if raw.len() < 2 {
            return Err(Error::Data("return vectors need d >= 2 entries".into()));
        }
        if raw.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Data(format!("invalid price relative in {raw:?}")));
        }
        let max = raw.iter().copied().fold(0.0, f64::max);
        if max <= 0.0 {
            return Err(Error::Data("all-zero return vector".into()));
        }
        Ok(ReturnVector(raw.into_iter().map(|x| x / max).collect()))
    }

    /// Wraps an already normalized vector without rescaling. Only checks the range.
    pub fn from_normalized(r: Vec<f64>) -> Result<Self> {
        if r.len() < 2 || r.iter().any(|x| !(0.0..=1.0).contains(x)) || r.iter().all(|x| *x == 0.0) {
            return Err(Error::Data(format!("not a normalized return vector: {r:?}")));
        }
        Ok(ReturnVector(r))
    }

    pub fn ones(assets: usize) -> Self {
        ReturnVector(vec![1.0; assets])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

/// Per-coordinate barrier learning rates `eta_{t,i}` and their base value `eta`.
#[derive(Clone, Debug, PartialEq)]
pub struct BarrierParams {
    pub eta: Vec<f64>,
    pub base_eta: f64,
}

impl BarrierParams {
    pub fn constant(assets: usize, eta: f64) -> Self {
        BarrierParams {
            eta: vec![eta; assets],
            base_eta: eta,
        }
    }
}

/// `v -> e_d + J^T v`.
pub fn lift(v: &Weights) -> SimplexPoint {
    let mut p: Vec<f64> = v.as_slice().to_vec();
    p.push(v.last().max(0.0));
    SimplexPoint(p)
}

/// Mixes with the uniform portfolio: `(1 - 1/T) v + 1/(dT)`.
pub fn mix_uniform(v: &Weights, horizon: usize) -> Weights {
    let d = v.assets() as f64;
    let t = horizon as f64;
    let keep = 1.0 - 1.0 / t;
    let floor = 1.0 / (d * t);
    Weights(v.0.map(|x| keep * x + floor))
}

/// `<r, lift(v)>` computed without materializing the lifted point.
pub fn lifted_dot(r: &ReturnVector, v: &Weights) -> f64 {
    let r = r.as_slice();
    let d = r.len();
    let head: f64 = v.as_slice().iter().zip(&r[..d - 1]).map(|(v, r)| v * r).sum();
    head + r[d - 1] * v.last()
}

fn checked_dot(r: &ReturnVector, v: &Weights) -> Result<f64> {
    if r.dim() != v.assets() {
        return Err(Error::Domain(format!(
            "return vector has {} entries, portfolio has {} assets",
            r.dim(),
            v.assets()
        )));
    }
    let dot = lifted_dot(r, v);
    if dot <= 0.0 || !dot.is_finite() {
        return Err(Error::DegenerateReturn(dot));
    }
    Ok(dot)
}

/// Cover's loss `-ln <r, lift(v)>`.
pub fn cover_loss(r: &ReturnVector, v: &Weights) -> Result<f64> {
    Ok(-checked_dot(r, v)?.ln())
}

/// Gradient of Cover's loss in free coordinates, `-J r / <r, lift(v)>`.
pub fn loss_grad(r: &ReturnVector, v: &Weights) -> Result<DVector<f64>> {
    let dot = checked_dot(r, v)?;
    let r = r.as_slice();
    let rd = r[r.len() - 1];
    Ok(DVector::from_iterator(
        r.len() - 1,
        r[..r.len() - 1].iter().map(|ri| -(ri - rd) / dot),
    ))
}

fn barrier_inputs<'a>(v: &'a Weights, bp: &'a BarrierParams) -> Result<(f64, &'a [f64])> {
    if bp.eta.len() != v.assets() {
        return Err(Error::Domain(format!(
            "barrier has {} rates for {} assets",
            bp.eta.len(),
            v.assets()
        )));
    }
    if !v.is_interior() {
        return Err(Error::Domain(format!("barrier evaluated off the interior at {:?}", v.as_slice())));
    }
    Ok((v.last(), &bp.eta))
}

/// `Psi(v) = -sum_i ln(lift(v)_i) / eta_i`.
pub fn barrier_eval(v: &Weights, bp: &BarrierParams) -> Result<f64> {
    let (last, eta) = barrier_inputs(v, bp)?;
    let d = eta.len();
    let head: f64 = v.as_slice().iter().zip(eta).map(|(x, e)| -x.ln() / e).sum();
    Ok(head - last.ln() / eta[d - 1])
}

pub fn barrier_grad(v: &Weights, bp: &BarrierParams) -> Result<DVector<f64>> {
    let (last, eta) = barrier_inputs(v, bp)?;
    let d = eta.len();
    let tail = 1.0 / (eta[d - 1] * last);
    Ok(DVector::from_iterator(
        d - 1,
        v.as_slice().iter().zip(eta).map(|(x, e)| -1.0 / (e * x) + tail),
    ))
}

pub fn barrier_hess(v: &Weights, bp: &BarrierParams) -> Result<DMatrix<f64>> {
    let (last, eta) = barrier_inputs(v, bp)?;
    let d = eta.len();
    let tail = 1.0 / (eta[d - 1] * last * last);
    let mut h = DMatrix::from_element(d - 1, d - 1, tail);
    for (i, (x, e)) in v.as_slice().iter().zip(eta).enumerate() {
        h[(i, i)] += 1.0 / (e * x * x);
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn w(v: &[f64]) -> Weights {
        Weights::new(v.to_vec()).unwrap()
    }

    fn r(v: &[f64]) -> ReturnVector {
        ReturnVector::from_normalized(v.to_vec()).unwrap()
    }

    #[test]
    fn lift_examples() {
        assert_eq!(lift(&w(&[0.0, 0.0])).as_slice(), &[0.0, 0.0, 1.0]);
        assert_eq!(lift(&w(&[0.25, 0.25])).as_slice(), &[0.25, 0.25, 0.5]);
        assert_eq!(lift(&w(&[1.0])).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn weights_reject_outside_domain() {
        assert!(matches!(Weights::new(vec![-0.1, 0.5]), Err(Error::Domain(_))));
        assert!(matches!(Weights::new(vec![0.7, 0.5]), Err(Error::Domain(_))));
        assert!(Weights::new(vec![0.5, 0.5 + 1e-13]).is_ok());
    }

    #[test]
    fn mix_uniform_examples() {
        let u = Weights::uniform(4);
        let m = mix_uniform(&u, 50);
        for x in m.as_slice() {
            assert_relative_eq!(*x, 0.25, epsilon = 1e-15);
        }
        let m = mix_uniform(&w(&[1.0]), 10);
        assert_relative_eq!(m.as_slice()[0], 0.95, epsilon = 1e-15);
        assert_relative_eq!(lift(&m).as_slice()[1], 0.05, epsilon = 1e-15);
    }

    #[test]
    fn loss_examples() {
        assert_eq!(cover_loss(&r(&[1.0, 1.0, 1.0]), &w(&[0.2, 0.3])).unwrap(), 0.0);
        let l = cover_loss(&r(&[1.0, 0.5]), &w(&[0.5])).unwrap();
        assert_relative_eq!(l, 0.2876820724517809, epsilon = 1e-12);
        let zero = ReturnVector(vec![0.0, 0.0]);
        assert!(matches!(cover_loss(&zero, &w(&[0.5])), Err(Error::DegenerateReturn(_))));
        // r vanishes on the support of the portfolio
        assert!(cover_loss(&r(&[0.0, 1.0]), &w(&[1.0])).is_err());
    }

    #[test]
    fn gradient_examples() {
        let g = loss_grad(&r(&[1.0, 1.0, 1.0]), &w(&[0.1, 0.6])).unwrap();
        assert!(g.iter().all(|x| *x == 0.0));
        // descent direction of -ln<r,p> points to the winning asset
        let g = loss_grad(&r(&[1.0, 0.0]), &w(&[0.5])).unwrap();
        assert_relative_eq!(g[0], -2.0, epsilon = 1e-15);
    }

    #[test]
    fn barrier_center_values() {
        let bp = BarrierParams::constant(2, 1.0);
        let v = w(&[0.5]);
        assert_relative_eq!(barrier_eval(&v, &bp).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-15);
        assert_relative_eq!(barrier_grad(&v, &bp).unwrap()[0], 0.0, epsilon = 1e-15);
        assert_relative_eq!(barrier_hess(&v, &bp).unwrap()[(0, 0)], 8.0, epsilon = 1e-12);
        assert!(barrier_eval(&w(&[1.0]), &bp).is_err());
        assert!(barrier_grad(&w(&[0.0]), &bp).is_err());
    }

    #[test]
    fn return_normalization() {
        let r = ReturnVector::normalized(vec![2.0, 1.0, 0.5]).unwrap();
        assert_eq!(r.as_slice(), &[1.0, 0.5, 0.25]);
        assert!(ReturnVector::normalized(vec![0.0, 0.0]).is_err());
        assert!(ReturnVector::normalized(vec![1.0, f64::NAN]).is_err());
    }

    fn interior_point(d: usize) -> impl Strategy<Value = Weights> {
        prop::collection::vec(0.05f64..1.0, d).prop_map(|raw| {
            let s: f64 = raw.iter().sum();
            Weights::new(raw[..raw.len() - 1].iter().map(|x| x / s).collect()).unwrap()
        })
    }

    fn returns(d: usize) -> impl Strategy<Value = ReturnVector> {
        prop::collection::vec(0.01f64..1.0, d).prop_map(|raw| ReturnVector::normalized(raw).unwrap())
    }

    proptest! {
        #[test]
        fn scale_shifts_loss_by_log(v in interior_point(4), r in returns(4), c in 0.1f64..10.0) {
            let scaled = ReturnVector(r.as_slice().iter().map(|x| x * c).collect());
            let a = cover_loss(&scaled, &v).unwrap();
            let b = cover_loss(&r, &v).unwrap() - c.ln();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn exp_concave_along_segments(a in interior_point(3), b in interior_point(3), r in returns(3), lam in 0.0f64..1.0) {
            let mid = Weights::new(
                a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| lam * x + (1.0 - lam) * y).collect(),
            ).unwrap();
            let lhs = (-cover_loss(&r, &mid).unwrap()).exp();
            let rhs = lam * (-cover_loss(&r, &a).unwrap()).exp()
                + (1.0 - lam) * (-cover_loss(&r, &b).unwrap()).exp();
            prop_assert!(lhs >= rhs - 1e-14);
        }

        #[test]
        fn mixing_enforces_floor(v in interior_point(5), horizon in 2usize..5000) {
            let m = mix_uniform(&v, horizon);
            let floor = 1.0 / (5.0 * horizon as f64);
            prop_assert!(lift(&m).as_slice().iter().all(|x| *x >= floor * (1.0 - 1e-12)));
        }

        #[test]
        fn barrier_hessian_is_positive_definite(v in interior_point(4), etas in prop::collection::vec(0.1f64..3.0, 4)) {
            let bp = BarrierParams { eta: etas, base_eta: 0.1 };
            let h = barrier_hess(&v, &bp).unwrap();
            prop_assert!((h.clone() - h.transpose()).abs().max() == 0.0);
            prop_assert!(h.cholesky().is_some());
        }
    }
}
