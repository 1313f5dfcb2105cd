//! Random low multilinear-rank problem generation and evaluation metrics.
//!
//! Ground truths follow the Tucker construction: a small core tensor with
//! i.i.d. standard-normal entries is multiplied along every mode by a
//! standard-normal factor matrix, which makes the multilinear rank equal
//! the core dimensions almost surely. Observations are the truth,
//! optionally corrupted by additive Gaussian noise, restricted to a
//! uniformly random index set.

use crate::error::{Error, Result};
use crate::rng::{
    sample_offsets, substream, GaussianSource, STREAM_CORE, STREAM_FACTORS, STREAM_MASK,
    STREAM_NOISE,
};
use crate::mat::Mat;
use crate::solver::SamplingMask;
use crate::tensor::{DenseTensor, Shape};

/// Recipe for one synthetic completion problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub shape: Shape,
    /// Target multilinear rank (r_1, …, r_N), one entry per mode.
    pub ranks: Vec<usize>,
    /// Fraction of entries observed, in (0, 1].
    pub sampling_ratio: f64,
    /// Standard deviation of the additive Gaussian noise (0 for noiseless).
    pub noise_sigma: f64,
    pub seed: u64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if self.ranks.len() != self.shape.ndim() {
            return Err(Error::spec(format!(
                "{} ranks given for a {}-mode shape",
                self.ranks.len(),
                self.shape.ndim()
            )));
        }
        for (i, (&r, &n)) in self.ranks.iter().zip(self.shape.dims()).enumerate() {
            if r == 0 {
                return Err(Error::spec(format!("rank of mode {} must be positive", i + 1)));
            }
            if r > n {
                return Err(Error::spec(format!(
                    "rank {} of mode {} exceeds extent {}",
                    r,
                    i + 1,
                    n
                )));
            }
        }
        if !(self.sampling_ratio > 0.0 && self.sampling_ratio <= 1.0) {
            return Err(Error::parameter(
                "sampling_ratio",
                format!("must lie in (0, 1], got {}", self.sampling_ratio),
            ));
        }
        if !(self.noise_sigma >= 0.0) || !self.noise_sigma.is_finite() {
            return Err(Error::parameter(
                "noise_sigma",
                format!("must be finite and nonnegative, got {}", self.noise_sigma),
            ));
        }
        Ok(())
    }

    /// |Ω| for this spec: sr·Πn_i rounded to nearest, at least 1.
    pub fn observation_count(&self) -> usize {
        let count = (self.sampling_ratio * self.shape.len() as f64).round() as usize;
        count.max(1)
    }
}

/// One generated instance: noiseless truth, (possibly noisy) observed
/// tensor, and the observation mask whose values are taken from the
/// observed tensor.
#[derive(Debug, Clone)]
pub struct GeneratedProblem {
    pub truth: DenseTensor<f64>,
    pub observed: DenseTensor<f64>,
    pub mask: SamplingMask,
}

/// Generates a problem instance; every random draw derives from `spec.seed`.
pub fn gen_lowrank(spec: &ProblemSpec) -> Result<GeneratedProblem> {
    spec.validate()?;

    let core_shape = Shape::new(spec.ranks.clone())?;
    let mut core = DenseTensor::zeros(core_shape);
    GaussianSource::new(substream(spec.seed, STREAM_CORE)).fill(core.data_mut());

    let mut factors = GaussianSource::new(substream(spec.seed, STREAM_FACTORS));
    let mut truth = core;
    for (i, &n_i) in spec.shape.dims().iter().enumerate() {
        let r_i = spec.ranks[i];
        let mut u = Mat::<f64>::zeros(n_i, r_i);
        factors.fill(u.data_mut());
        truth = truth.mode_product(&u, i + 1)?;
    }

    let observed = if spec.noise_sigma > 0.0 {
        let mut noise = GaussianSource::new(substream(spec.seed, STREAM_NOISE));
        let sigma = spec.noise_sigma;
        truth.map(|v| v + sigma * noise.next())
    } else {
        truth.clone()
    };

    let indices = sample_offsets(
        &mut substream(spec.seed, STREAM_MASK),
        spec.shape.len(),
        spec.observation_count(),
    );
    let values = indices.iter().map(|&off| observed.data()[off]).collect();
    let mask = SamplingMask::new(spec.shape.clone(), indices, values)?;

    Ok(GeneratedProblem { truth, observed, mask })
}

/// Relative recovery error ‖x_sol − m‖_F / ‖m‖_F.
pub fn rel_err(x_sol: &DenseTensor<f64>, m: &DenseTensor<f64>) -> Result<f64> {
    if x_sol.shape() != m.shape() {
        return Err(Error::dimension(m.shape().to_string(), x_sol.shape().to_string()));
    }
    let denom = m.frobenius_norm();
    if denom == 0.0 {
        return Err(Error::metric("relative error is undefined for a zero ground truth"));
    }
    let mut diff_sq = 0.0;
    for (&a, &b) in x_sol.data().iter().zip(m.data()) {
        let d = a - b;
        diff_sq += d * d;
    }
    Ok(diff_sq.sqrt() / denom)
}

/// Normalized root mean square error over the unobserved entries:
/// ‖(x_opt − m_bar)_Ωᶜ‖_F / ((max − min of m_bar on Ωᶜ) · √|Ωᶜ|).
pub fn nrmse(
    x_opt: &DenseTensor<f64>,
    m_bar: &DenseTensor<f64>,
    mask: &SamplingMask,
) -> Result<f64> {
    if x_opt.shape() != m_bar.shape() {
        return Err(Error::dimension(m_bar.shape().to_string(), x_opt.shape().to_string()));
    }
    if mask.shape() != m_bar.shape() {
        return Err(Error::dimension(m_bar.shape().to_string(), mask.shape().to_string()));
    }
    let len = m_bar.shape().len();
    let mut observed = mask.indices().iter().copied().peekable();
    let mut diff_sq = 0.0;
    let mut count = 0usize;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for off in 0..len {
        if observed.peek() == Some(&off) {
            observed.next();
            continue;
        }
        let truth = m_bar.data()[off];
        let d = x_opt.data()[off] - truth;
        diff_sq += d * d;
        count += 1;
        lo = lo.min(truth);
        hi = hi.max(truth);
    }
    if count == 0 {
        return Err(Error::metric("NRMSE is undefined when every entry is observed"));
    }
    if !(hi > lo) {
        return Err(Error::metric(
            "NRMSE is undefined when the ground truth is constant on the unobserved set",
        ));
    }
    Ok(diff_sq.sqrt() / ((hi - lo) * (count as f64).sqrt()))
}
