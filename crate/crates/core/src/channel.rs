//! Channel models: AWGN and the (generalized) additive white Laplacian
//! noise channel.
//!
//! The all-ones codeword is assumed to be transmitted, so the received
//! value at a bit is `x = 1 - xi`. Gaussian log-likelihoods are measured in
//! units of `s^2`, Laplacian ones in units of `s`; min-sum is invariant
//! under positive rescaling, so the decoder does not care.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("SNR must be positive and finite, got {0}")]
    InvalidSnr(f64),
    #[error("regularization alpha must be nonnegative and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("sampling the regularized Laplacian channel (alpha > 0) is not supported")]
    UnsupportedSampling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Gaussian,
    Laplacian,
}

impl std::str::FromStr for ChannelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "awgn" => Ok(ChannelKind::Gaussian),
            "laplacian" | "awln" => Ok(ChannelKind::Laplacian),
            other => Err(format!("unknown channel {other:?} (expected gaussian or laplacian)")),
        }
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ChannelKind::Gaussian => "gaussian",
            ChannelKind::Laplacian => "laplacian",
        })
    }
}

/// A channel with its SNR `s` and, for the Laplacian kind, the
/// regularization `alpha` of the generalized density
/// `p(x|sigma) ~ exp(-s sqrt((x - sigma)^2 + alpha^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    pub snr: f64,
    #[serde(default)]
    pub alpha: f64,
}

impl ChannelModel {
    pub fn new(kind: ChannelKind, snr: f64, alpha: f64) -> Result<Self, ChannelError> {
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(ChannelError::InvalidSnr(snr));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(ChannelError::InvalidAlpha(alpha));
        }
        Ok(ChannelModel { kind, snr, alpha })
    }

    pub fn gaussian(snr: f64) -> Self {
        Self::new(ChannelKind::Gaussian, snr, 0.0).expect("valid SNR")
    }

    pub fn laplacian(snr: f64) -> Self {
        Self::new(ChannelKind::Laplacian, snr, 0.0).expect("valid SNR")
    }

    /// Same channel at a different SNR.
    pub fn with_snr(self, snr: f64) -> Result<Self, ChannelError> {
        Self::new(self.kind, snr, self.alpha)
    }

    /// Log-likelihood of a bit whose noise is `xi`.
    pub fn log_likelihood(&self, xi: f64) -> f64 {
        match self.kind {
            ChannelKind::Gaussian => 1.0 - xi,
            ChannelKind::Laplacian if self.alpha == 0.0 => (1.0 - xi).clamp(-1.0, 1.0),
            ChannelKind::Laplacian => {
                let a2 = self.alpha * self.alpha;
                (((2.0 - xi).powi(2) + a2).sqrt() - (xi * xi + a2).sqrt()) / 2.0
            }
        }
    }

    pub fn log_likelihoods(&self, xi: &[f64]) -> Vec<f64> {
        xi.iter().map(|&x| self.log_likelihood(x)).collect()
    }

    pub fn log_likelihoods_into(&self, xi: &[f64], out: &mut [f64]) {
        for (o, &x) in out.iter_mut().zip(xi) {
            *o = self.log_likelihood(x);
        }
    }

    /// Channel weight of a noise vector: `sum |xi|` (Laplacian, alpha = 0),
    /// `sum sqrt(xi^2 + alpha^2)` (Laplacian, alpha > 0) or `sum xi^2`
    /// (Gaussian, i.e. the squared length).
    pub fn noise_length(&self, xi: &[f64]) -> f64 {
        match self.kind {
            ChannelKind::Gaussian => xi.iter().map(|x| x * x).sum(),
            ChannelKind::Laplacian if self.alpha == 0.0 => xi.iter().map(|x| x.abs()).sum(),
            ChannelKind::Laplacian => {
                let a2 = self.alpha * self.alpha;
                xi.iter().map(|x| (x * x + a2).sqrt()).sum()
            }
        }
    }

    /// Fills `out` with i.i.d. channel noise.
    pub fn sample_noise_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) -> Result<(), ChannelError> {
        match self.kind {
            ChannelKind::Gaussian => {
                let normal = Normal::new(0.0, 1.0 / self.snr).expect("finite sigma");
                out.iter_mut().for_each(|x| *x = normal.sample(rng));
            }
            ChannelKind::Laplacian => {
                if self.alpha != 0.0 {
                    return Err(ChannelError::UnsupportedSampling);
                }
                // inverse CDF of the density (s/2) exp(-s|xi|)
                for x in out.iter_mut() {
                    let u: f64 = rng.random::<f64>() - 0.5;
                    let mag = -(1.0 - 2.0 * u.abs()).ln() / self.snr;
                    *x = if u < 0.0 { -mag } else { mag };
                }
            }
        }
        Ok(())
    }

    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>, ChannelError> {
        let mut out = vec![0.0; n];
        self.sample_noise_into(rng, &mut out)?;
        Ok(out)
    }

    /// Natural log of the density of the unconstrained noise length `l` for
    /// `n` i.i.d. samples (`l = sum |xi|` for Laplacian, `l = sqrt(sum xi^2)`
    /// for Gaussian).
    pub fn ln_length_pdf(&self, n: usize, l: f64) -> f64 {
        if l <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let nf = n as f64;
        let s = self.snr;
        match self.kind {
            ChannelKind::Laplacian => nf * s.ln() + (nf - 1.0) * l.ln() - l * s - ln_gamma(nf),
            ChannelKind::Gaussian => {
                nf * s.ln() + (nf - 1.0) * l.ln() + (1.0 - nf / 2.0) * std::f64::consts::LN_2
                    - l * l * s * s / 2.0
                    - ln_gamma(nf / 2.0)
            }
        }
    }

    pub fn length_pdf(&self, n: usize, l: f64) -> f64 {
        self.ln_length_pdf(n, l).exp()
    }

    /// Log of the fraction of the length-`l` shell lying beyond the error
    /// surface. `weight` is the instanton's effective distance in the same
    /// units as [`Self::noise_length`]: `l_inst` for Laplacian, `l_inst^2`
    /// for Gaussian.
    pub fn ln_error_surface_cdf(&self, n: usize, weight: f64, l: f64) -> f64 {
        let nf = n as f64;
        let ratio = match self.kind {
            ChannelKind::Laplacian => weight / l,
            ChannelKind::Gaussian => weight / (l * l),
        };
        if !(l > 0.0) || ratio >= 1.0 {
            return f64::NEG_INFINITY;
        }
        match self.kind {
            ChannelKind::Laplacian => (nf - 1.0) * (-ratio).ln_1p(),
            ChannelKind::Gaussian => (nf / 2.0 - 1.0) * (-ratio).ln_1p(),
        }
    }

    pub fn error_surface_cdf(&self, n: usize, weight: f64, l: f64) -> f64 {
        self.ln_error_surface_cdf(n, weight, l).exp()
    }
}
