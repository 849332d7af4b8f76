//! Gaussian process regression with a user-supplied prior mean.
//!
//! The process models `f(x) ~ GP(M(x), k(x, x'))`: observations only inform
//! the residual `y − M(x)`, so a prior mean taken from the behavior map lets
//! the GP learn the difference between the map's prediction and reality.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Squared-exponential kernel hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            length_scale: 0.1,
            signal_variance: 1.0,
            noise_variance: 0.01,
        }
    }
}

impl KernelParams {
    pub fn new(length_scale: f64, signal_variance: f64, noise_variance: f64) -> Result<Self> {
        let p = KernelParams {
            length_scale,
            signal_variance,
            noise_variance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length_scale > 0.0 && self.length_scale.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "length_scale must be positive, got {}",
                self.length_scale
            )));
        }
        if !(self.signal_variance > 0.0 && self.signal_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "signal_variance must be positive, got {}",
                self.signal_variance
            )));
        }
        if !(self.noise_variance >= 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "noise_variance must be non-negative, got {}",
                self.noise_variance
            )));
        }
        Ok(())
    }

    /// `k(a, b) = σ_f² · exp(−‖a − b‖² / (2ℓ²))`
    pub fn eval(&self, a: &[f64], b: &[f64]) -> Result<f64> {
        if a.len() != b.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                got: b.len(),
            });
        }
        Ok(self.eval_unchecked(a, b))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, a: &[f64], b: &[f64]) -> f64 {
        let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
        self.signal_variance * (-0.5 * d2 / (self.length_scale * self.length_scale)).exp()
    }
}

/// `k(a, b)` for the squared-exponential kernel.
pub fn kernel_eval(a: &[f64], b: &[f64], params: &KernelParams) -> Result<f64> {
    params.eval(a, b)
}

pub type PriorMean = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Posterior mean and variance at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

impl Prediction {
    pub fn std(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// A GP conditioned on `t ≥ 0` observations.
///
/// Updating produces a new model; prediction never mutates observable state
/// apart from the round-off diagnostic counter.
pub struct GpModel {
    kernel: KernelParams,
    prior_mean: PriorMean,
    dim: usize,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Cholesky factor of `K + σ_n² I`.
    factor: Option<Cholesky<f64, Dyn>>,
    /// `(K + σ_n² I)⁻¹ (y − M(X))`
    weights: DVector<f64>,
    clamped: AtomicU64,
}

impl Clone for GpModel {
    fn clone(&self) -> Self {
        GpModel {
            kernel: self.kernel,
            prior_mean: Arc::clone(&self.prior_mean),
            dim: self.dim,
            inputs: self.inputs.clone(),
            targets: self.targets.clone(),
            factor: self.factor.clone(),
            weights: self.weights.clone(),
            clamped: AtomicU64::new(self.clamped.load(Ordering::Relaxed)),
        }
    }
}

impl fmt::Debug for GpModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GpModel")
            .field("kernel", &self.kernel)
            .field("dim", &self.dim)
            .field("observations", &self.targets.len())
            .finish_non_exhaustive()
    }
}

impl GpModel {
    pub fn new(kernel: KernelParams, dim: usize, prior_mean: PriorMean) -> Result<Self> {
        kernel.validate()?;
        Ok(GpModel {
            kernel,
            prior_mean,
            dim,
            inputs: Vec::new(),
            targets: Vec::new(),
            factor: None,
            weights: DVector::zeros(0),
            clamped: AtomicU64::new(0),
        })
    }

    /// A GP with `M ≡ 0`.
    pub fn zero_mean(kernel: KernelParams, dim: usize) -> Result<Self> {
        Self::new(kernel, dim, Arc::new(|_: &[f64]| 0.0))
    }

    pub fn kernel(&self) -> &KernelParams {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn prior_mean(&self, x: &[f64]) -> f64 {
        (self.prior_mean)(x)
    }

    /// Number of predictions whose variance came out negative from round-off and was clamped to 0.
    pub fn clamped_variances(&self) -> u64 {
        self.clamped.load(Ordering::Relaxed)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Returns a copy conditioned on one more observation; `self` is untouched.
    pub fn updated(&self, x: &[f64], y: f64) -> Result<GpModel> {
        let mut next = self.clone();
        next.update(x, y)?;
        Ok(next)
    }

    /// Adds one observation and refactorizes. On failure the model is left unchanged.
    pub fn update(&mut self, x: &[f64], y: f64) -> Result<()> {
        self.check_dim(x)?;
        if !y.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite target {y}")));
        }
        let mut inputs = self.inputs.clone();
        inputs.push(x.to_vec());
        let mut targets = self.targets.clone();
        targets.push(y);
        let (factor, weights) = self.fit(&inputs, &targets)?;
        self.inputs = inputs;
        self.targets = targets;
        self.factor = Some(factor);
        self.weights = weights;
        Ok(())
    }

    fn fit(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<(Cholesky<f64, Dyn>, DVector<f64>)> {
        let t = inputs.len();
        let gram = DMatrix::from_fn(t, t, |i, j| {
            let k = self.kernel.eval_unchecked(&inputs[i], &inputs[j]);
            if i == j {
                k + self.kernel.noise_variance
            } else {
                k
            }
        });
        let factor = Cholesky::new(gram).ok_or_else(|| {
            Error::Numerical(format!("kernel matrix with {t} observations is not positive definite"))
        })?;
        // nalgebra accepts a zero pivot; a singular factor must still be rejected.
        let l = factor.l_dirty();
        let scale = self.kernel.signal_variance + self.kernel.noise_variance;
        if (0..t).any(|i| l[(i, i)].is_nan() || l[(i, i)] <= 1e-10 * scale.sqrt()) {
            return Err(Error::Numerical(format!(
                "kernel matrix with {t} observations is singular (duplicate inputs without noise?)"
            )));
        }
        let residuals = DVector::from_iterator(
            t,
            inputs.iter().zip(targets).map(|(x, y)| y - (self.prior_mean)(x)),
        );
        let weights = factor.solve(&residuals);
        Ok((factor, weights))
    }

    /// Posterior mean and variance at `x`.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dim(x)?;
        Ok(self.predict_with_prior(x, (self.prior_mean)(x)))
    }

    /// As [`predict`](Self::predict), with `M(x)` supplied by the caller.
    pub fn predict_with_prior(&self, x: &[f64], prior: f64) -> Prediction {
        let kxx = self.kernel.signal_variance;
        let Some(factor) = &self.factor else {
            return Prediction {
                mean: prior,
                variance: kxx,
            };
        };
        let kvec = DVector::from_iterator(
            self.inputs.len(),
            self.inputs.iter().map(|xi| self.kernel.eval_unchecked(xi, x)),
        );
        let mean = prior + kvec.dot(&self.weights);
        let mut v = kvec;
        factor.l_dirty().solve_lower_triangular_mut(&mut v);
        let mut variance = kxx - v.norm_squared();
        if variance < 0.0 {
            self.clamped.fetch_add(1, Ordering::Relaxed);
            variance = 0.0;
        }
        Prediction { mean, variance }
    }
}
