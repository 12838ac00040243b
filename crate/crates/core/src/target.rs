//! The interface between models and the samplers/optimizers.

/// A differentiable log-density on `R^dim`.
///
/// Implementations must be safe to call from many threads at once.
pub trait LogDensity: Sync {
    fn dim(&self) -> usize;

    /// Write the gradient into `grad` and return the log-density. Points
    /// outside the support return `-∞`; the gradient is then unspecified.
    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64;

    fn log_density(&self, x: &[f64]) -> f64 {
        let mut g = vec![0.0; self.dim()];
        self.log_density_and_gradient(x, &mut g)
    }
}

impl<T: LogDensity + ?Sized> LogDensity for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        (**self).log_density_and_gradient(x, grad)
    }
}

/// Multivariate normal with dense covariance, mostly useful for checking samplers.
#[derive(Debug, Clone)]
pub struct Gaussian {
    mean: Vec<f64>,
    precision: Vec<f64>,
    covariance: Vec<f64>,
}

impl Gaussian {
    pub fn isotropic(mean: Vec<f64>) -> Self {
        let d = mean.len();
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        Self { mean, precision: eye.clone(), covariance: eye }
    }

    /// Build from a symmetric positive-definite covariance (row-major).
    pub fn new(mean: Vec<f64>, covariance: Vec<f64>) -> Self {
        let d = mean.len();
        assert_eq!(covariance.len(), d * d);
        let precision = invert_spd(&covariance, d);
        Self { mean, precision, covariance }
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &[f64] {
        &self.covariance
    }
}

fn invert_spd(a: &[f64], d: usize) -> Vec<f64> {
    // Gauss–Jordan with partial pivoting; d is small here.
    let mut m = a.to_vec();
    let mut inv = vec![0.0; d * d];
    for i in 0..d {
        inv[i * d + i] = 1.0;
    }
    for col in 0..d {
        let piv = (col..d).max_by(|&r, &s| m[r * d + col].abs().total_cmp(&m[s * d + col].abs())).unwrap();
        if piv != col {
            for c in 0..d {
                m.swap(col * d + c, piv * d + c);
                inv.swap(col * d + c, piv * d + c);
            }
        }
        let p = m[col * d + col];
        for c in 0..d {
            m[col * d + c] /= p;
            inv[col * d + c] /= p;
        }
        for r in 0..d {
            if r != col {
                let f = m[r * d + col];
                if f != 0.0 {
                    for c in 0..d {
                        m[r * d + c] -= f * m[col * d + c];
                        inv[r * d + c] -= f * inv[col * d + c];
                    }
                }
            }
        }
    }
    inv
}

impl LogDensity for Gaussian {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_density_and_gradient(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.mean.len();
        let diff: Vec<f64> = x.iter().zip(&self.mean).map(|(a, b)| a - b).collect();
        let mut q = 0.0;
        for r in 0..d {
            let pr: f64 = (0..d).map(|c| self.precision[r * d + c] * diff[c]).sum();
            grad[r] = -pr;
            q += diff[r] * pr;
        }
        -0.5 * q
    }
}
