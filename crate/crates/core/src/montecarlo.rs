//! Frame-error-rate estimation by direct sampling, instanton slope lines and
//! the semi-analytic error-rate integral.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};
use thiserror::Error;

use crate::channel::{ChannelError, ChannelKind, ChannelModel};
use crate::code_model::ParityCheckCode;
use crate::decoder::MinSumDecoder;
use crate::par::map_indexed;

/// Frames decoded per work item.
pub const CHUNK_FRAMES: usize = 256;
/// Work items per stopping-rule check. Fixed so that results do not depend
/// on the number of workers.
pub const CHUNKS_PER_BATCH: usize = 16;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_it: usize,
    pub min_errors: u64,
    pub max_trials: u64,
    pub seed: u64,
    /// Stop decoding a frame once its decisions satisfy every check.
    pub early_exit: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_it: 4,
            min_errors: 100,
            max_trials: 10_000_000,
            seed: 1,
            early_exit: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FerEstimate {
    pub snr: f64,
    pub channel: ChannelKind,
    pub trials: u64,
    pub frame_errors: u64,
    pub bit_errors: u64,
    pub n_it: usize,
    pub fer: f64,
    pub ber: f64,
    /// 95% Clopper-Pearson interval for the frame error rate.
    pub ci95: (f64, f64),
    pub seed: u64,
    pub early_exit: bool,
}

impl FerEstimate {
    /// True when no frame error was seen; `ci95.1` is then the upper bound.
    pub fn is_upper_bound(&self) -> bool {
        self.frame_errors == 0
    }
}

/// Exact (Clopper-Pearson) two-sided interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let a = 1.0 - confidence;
    let (k, n) = (successes as f64, trials as f64);
    let low = if successes == 0 {
        0.0
    } else {
        Beta::new(k, n - k + 1.0).map(|b| b.inverse_cdf(a / 2.0)).unwrap_or(0.0)
    };
    let high = if successes == trials {
        1.0
    } else {
        Beta::new(k + 1.0, n - k).map(|b| b.inverse_cdf(1.0 - a / 2.0)).unwrap_or(1.0)
    };
    (low, high)
}

#[derive(Debug, Clone, Copy, Default)]
struct Counts {
    trials: u64,
    frame_errors: u64,
    bit_errors: u64,
}

fn run_chunk(code: &ParityCheckCode, channel: &ChannelModel, cfg: &McConfig, snr_index: usize, chunk: u64, frames: usize) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(((snr_index as u64) << 40) | chunk);
    let n = code.n_bits();
    let mut xi = vec![0.0; n];
    let mut h = vec![0.0; n];
    let mut dec = MinSumDecoder::new(code);
    let mut counts = Counts::default();
    for _ in 0..frames {
        channel
            .sample_noise_into(&mut rng, &mut xi)
            .expect("channel validated before sampling");
        channel.log_likelihoods_into(&xi, &mut h);
        let post = if cfg.early_exit {
            dec.decode_early_exit(&h, cfg.n_it).expect("valid decoder input").0
        } else {
            dec.decode(&h, cfg.n_it).expect("valid decoder input")
        };
        let wrong = post.iter().filter(|&&m| m <= 0.0).count() as u64;
        counts.trials += 1;
        counts.bit_errors += wrong;
        counts.frame_errors += (wrong > 0) as u64;
    }
    counts
}

/// Estimates frame and bit error rates at each SNR. Each point stops after
/// the batch in which `min_errors` frame errors or `max_trials` frames are
/// reached. Chunk `k` of SNR point `j` always draws from the same substream
/// of the master seed, so estimates are reproducible for any worker count.
pub fn estimate_fer(code: &ParityCheckCode, channel: &ChannelModel, snr_list: &[f64], cfg: &McConfig) -> Result<Vec<FerEstimate>, McError> {
    if cfg.n_it == 0 {
        return Err(McError::InvalidConfig("n_it must be at least 1".into()));
    }
    if cfg.max_trials == 0 {
        return Err(McError::InvalidConfig("max_trials must be positive".into()));
    }
    snr_list
        .iter()
        .enumerate()
        .map(|(j, &snr)| {
            let ch = channel.with_snr(snr)?;
            // fail early on unsupported sampling
            ch.sample_noise(&mut ChaCha8Rng::seed_from_u64(0), 1)?;
            let mut total = Counts::default();
            let mut next_chunk = 0u64;
            while total.frame_errors < cfg.min_errors && total.trials < cfg.max_trials {
                let remaining = cfg.max_trials - total.trials;
                let sizes: Vec<usize> = (0..CHUNKS_PER_BATCH as u64)
                    .map(|k| {
                        let before = k * CHUNK_FRAMES as u64;
                        remaining.saturating_sub(before).min(CHUNK_FRAMES as u64) as usize
                    })
                    .take_while(|&s| s > 0)
                    .collect();
                let parts = map_indexed(sizes.len(), |k| run_chunk(code, &ch, cfg, j, next_chunk + k as u64, sizes[k]));
                next_chunk += sizes.len() as u64;
                for p in parts {
                    total.trials += p.trials;
                    total.frame_errors += p.frame_errors;
                    total.bit_errors += p.bit_errors;
                }
            }
            let fer = total.frame_errors as f64 / total.trials as f64;
            Ok(FerEstimate {
                snr,
                channel: ch.kind,
                trials: total.trials,
                frame_errors: total.frame_errors,
                bit_errors: total.bit_errors,
                n_it: cfg.n_it,
                fer,
                ber: total.bit_errors as f64 / (total.trials as f64 * code.n_bits() as f64),
                ci95: clopper_pearson(total.frame_errors, total.trials, 0.95),
                seed: cfg.seed,
                early_exit: cfg.early_exit,
            })
        })
        .collect()
}

pub const CSV_HEADER: &str = "snr,trials,frame_errors,fer,ci_low,ci_high,ber,n_it,channel,seed";

pub fn csv_row(e: &FerEstimate) -> String {
    format!(
        "{},{},{},{:e},{:e},{:e},{:e},{},{},{}",
        e.snr, e.trials, e.frame_errors, e.fer, e.ci95.0, e.ci95.1, e.ber, e.n_it, e.channel, e.seed
    )
}

/// Natural-log error rate predicted by an instanton, up to an additive
/// constant: `-weight * s` for Laplacian noise, `-weight * s^2 / 2` for
/// Gaussian noise (`weight` is `l_inst` or `l_inst^2` respectively).
pub fn instanton_slope_curve(weight: f64, kind: ChannelKind, snr_list: &[f64]) -> Vec<(f64, f64)> {
    snr_list
        .iter()
        .map(|&s| {
            let v = match kind {
                ChannelKind::Laplacian => -weight * s,
                ChannelKind::Gaussian => -weight * s * s / 2.0,
            };
            (s, v)
        })
        .collect()
}

/// Least-squares constant `c` minimizing `sum (ln fer_k - curve_k - c)^2`
/// over points with a positive error rate. `curve` and `data` are paired by
/// index. Returns `None` when no point is usable.
pub fn fit_offset(curve: &[f64], data: &[f64]) -> Option<f64> {
    let diffs: Vec<f64> = curve
        .iter()
        .zip(data)
        .filter(|(_, &f)| f > 0.0)
        .map(|(&c, &f)| f.ln() - c)
        .collect();
    (!diffs.is_empty()).then(|| diffs.iter().sum::<f64>() / diffs.len() as f64)
}

/// Natural log of the error rate from integrating the noise-length density
/// against the error-surface fraction, `ln int P(l) F(l) dl`, over
/// `[l_inst, l_inst + 40 n / s]`. `weight` follows
/// [`ChannelModel::ln_error_surface_cdf`].
pub fn ln_semianalytic_fer(channel: &ChannelModel, n: usize, weight: f64) -> f64 {
    if !(weight > 0.0) {
        return 0.0;
    }
    let l_inst = match channel.kind {
        ChannelKind::Laplacian => weight,
        ChannelKind::Gaussian => weight.sqrt(),
    };
    let lo = l_inst;
    let hi = l_inst + 40.0 * n as f64 / channel.snr;
    let ln_f = |l: f64| channel.ln_length_pdf(n, l) + channel.ln_error_surface_cdf(n, weight, l);
    // locate the peak on a coarse grid, then integrate the rescaled integrand
    const GRID: usize = 4096;
    let step = (hi - lo) / GRID as f64;
    let mut peak = (f64::NEG_INFINITY, lo);
    for k in 1..=GRID {
        let l = lo + k as f64 * step;
        let v = ln_f(l);
        if v > peak.0 {
            peak = (v, l);
        }
    }
    if !peak.0.is_finite() {
        return f64::NEG_INFINITY;
    }
    let g = |l: f64| (ln_f(l) - peak.0).exp();
    // split at the peak so the adaptive rule sees both flanks
    let a = (peak.1 - step).max(lo);
    let b = (peak.1 + step).min(hi);
    let total = adaptive_simpson(&g, lo, a, 1e-13) + adaptive_simpson(&g, a, b, 1e-13) + adaptive_simpson(&g, b, hi, 1e-13);
    peak.0 + total.ln()
}

/// `(snr, fer)` pairs from [`ln_semianalytic_fer`].
pub fn semianalytic_fer(channel: &ChannelModel, n: usize, weight: f64, snr_list: &[f64]) -> Result<Vec<(f64, f64)>, ChannelError> {
    snr_list
        .iter()
        .map(|&s| Ok((s, ln_semianalytic_fer(&channel.with_snr(s)?, n, weight).exp())))
        .collect()
}

fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            return left + right + (left + right - whole) / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    if b <= a {
        return 0.0;
    }
    // start from a few panels so narrow features are not missed
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (f0, f1, f2) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            recurse(f, x0, x1, f0, f1, f2, simpson(f0, f1, f2, x0, x1), tol, 40)
        })
        .sum()
}
