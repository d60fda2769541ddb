// Minimizing a user-supplied self-concordant function.

use nalgebra::{DMatrix, DVector};

use adamix_dons::selfconcordant::{minimize_sc, MinimizeOptions, ScFunction};

/// `<c, x> - sum ln x_i - ln(1 - sum x_i)` on the open simplex corner.
struct Tilted {
    c: DVector<f64>,
}

impl ScFunction for Tilted {
    fn value(&self, x: &DVector<f64>) -> f64 {
        let slack = 1.0 - x.sum();
        if slack <= 0.0 || x.iter().any(|v| *v <= 0.0) {
            return f64::INFINITY;
        }
        self.c.dot(x) - x.iter().map(|v| v.ln()).sum::<f64>() - slack.ln()
    }

    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        let slack = 1.0 - x.sum();
        DVector::from_fn(x.len(), |i, _| self.c[i] - 1.0 / x[i] + 1.0 / slack)
    }

    fn hess(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let slack = 1.0 - x.sum();
        let mut h = DMatrix::from_element(x.len(), x.len(), 1.0 / (slack * slack));
        for i in 0..x.len() {
            h[(i, i)] += 1.0 / (x[i] * x[i]);
        }
        h
    }

    fn sc_constant(&self) -> f64 {
        1.0
    }
}

pub fn run_example() -> adamix_dons::Result<()> {
    let f = Tilted { c: DVector::from_column_slice(&[4.0, -2.0, 0.5]) };
    let x0 = DVector::from_element(3, 0.2);
    let min = minimize_sc(&f, &x0, MinimizeOptions::default())?;
    println!("minimizer {:?}", min.x.as_slice());
    println!("value {:.12}, decrement {:e}, {} iterations", min.value, min.decrement, min.iterations);
    Ok(())
}

fn main() -> adamix_dons::Result<()> {
    run_example()
}
