//! Thin-plate smoothing spline for scattered samples ρ = f(u, v).

use nalgebra::{DMatrix, DVector, Vector2};

fn kernel(r2: f64) -> f64 {
    if r2 <= 0.0 {
        0.0
    } else {
        0.5 * r2 * r2.ln()
    }
}

/// Fitted surface. Inputs are standardised per axis before fitting so the
/// two angular axes carry comparable weight.
#[derive(Debug, Clone)]
pub struct ThinPlateSpline {
    centers: Vec<Vector2<f64>>,
    weights: DVector<f64>,
    affine: [f64; 3],
    mean: Vector2<f64>,
    scale: Vector2<f64>,
}

impl ThinPlateSpline {
    /// Fit through `(u, v) → value` with smoothing `lambda`. Returns `None`
    /// when the system is singular (e.g. collinear samples).
    pub fn fit(samples: &[(f64, f64, f64)], lambda: f64) -> Option<Self> {
        let n = samples.len();
        if n < 3 {
            return None;
        }
        let mean = samples.iter().fold(Vector2::zeros(), |a: Vector2<f64>, s| {
            a + Vector2::new(s.0, s.1)
        }) / n as f64;
        let var = samples.iter().fold(Vector2::zeros(), |a: Vector2<f64>, s| {
            let d = Vector2::new(s.0, s.1) - mean;
            a + d.component_mul(&d)
        }) / n as f64;
        let scale = var.map(|x| if x > 1e-18 { x.sqrt() } else { 1.0 });
        let centers: Vec<Vector2<f64>> = samples
            .iter()
            .map(|s| (Vector2::new(s.0, s.1) - mean).component_div(&scale))
            .collect();

        let m = n + 3;
        let mut a = DMatrix::<f64>::zeros(m, m);
        let mut b = DVector::<f64>::zeros(m);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = kernel((centers[i] - centers[j]).norm_squared());
            }
            a[(i, i)] += lambda;
            a[(i, n)] = 1.0;
            a[(i, n + 1)] = centers[i].x;
            a[(i, n + 2)] = centers[i].y;
            a[(n, i)] = 1.0;
            a[(n + 1, i)] = centers[i].x;
            a[(n + 2, i)] = centers[i].y;
            b[i] = samples[i].2;
        }
        let sol = a.lu().solve(&b)?;
        if sol.iter().any(|x| !x.is_finite()) {
            return None;
        }
        Some(Self {
            weights: sol.rows(0, n).into_owned(),
            affine: [sol[n], sol[n + 1], sol[n + 2]],
            centers,
            mean,
            scale,
        })
    }

    pub fn eval(&self, u: f64, v: f64) -> f64 {
        let p = (Vector2::new(u, v) - self.mean).component_div(&self.scale);
        let mut f = self.affine[0] + self.affine[1] * p.x + self.affine[2] * p.y;
        for (c, w) in self.centers.iter().zip(self.weights.iter()) {
            f += w * kernel((p - c).norm_squared());
        }
        f
    }
}
