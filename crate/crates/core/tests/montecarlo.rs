mod common;

use common::*;
use instanton_core::montecarlo::{
    estimate_fer, instanton_slope_curve, ln_semianalytic_fer, semianalytic_fer, McConfig, McError, CSV_HEADER,
};
use instanton_core::par::with_workers;
use instanton_core::{ChannelKind, ChannelModel, ParityCheckCode};
use statrs::distribution::{ContinuousCDF, Normal};

/// Three bits on a cycle of degree-2 checks. After one min-sum iteration
/// every posterior is h0 + h1 + h2, so with Gaussian noise of deviation 1/s
/// a frame fails with probability Phi(-sqrt(3) s).
fn triangle() -> ParityCheckCode {
    ParityCheckCode::from_checks(3, vec![vec![0, 1], vec![1, 2], vec![0, 2]]).unwrap()
}

fn triangle_fer(s: f64) -> f64 {
    Normal::new(0.0, 1.0).unwrap().cdf(-(3f64).sqrt() * s)
}

fn fixed(trials: u64, seed: u64, n_it: usize) -> McConfig {
    McConfig {
        n_it,
        min_errors: u64::MAX,
        max_trials: trials,
        seed,
        early_exit: false,
    }
}

#[test]
fn triangle_matches_closed_form() {
    for s in [0.5, 1.0, 1.5] {
        let est = &estimate_fer(&triangle(), &ChannelModel::gaussian(s), &[s], &fixed(40_000, 3, 1)).unwrap()[0];
        let truth = triangle_fer(s);
        assert!(est.ci95.0 <= truth && truth <= est.ci95.1, "s {s}: {truth} not in {:?}", est.ci95);
        // every bit sees the same posterior
        assert_eq!(est.bit_errors, 3 * est.frame_errors);
    }
}

#[test]
fn interval_coverage() {
    let s = 1.0;
    let truth = triangle_fer(s);
    let covered = (0..100)
        .filter(|&seed| {
            let est = &estimate_fer(&triangle(), &ChannelModel::gaussian(s), &[s], &fixed(2_000, seed, 1)).unwrap()[0];
            est.ci95.0 <= truth && truth <= est.ci95.1
        })
        .count();
    assert!(covered >= 90, "{covered}/100");
}

#[test]
fn frame_and_bit_rates_are_consistent() {
    let cfg = McConfig {
        min_errors: 30,
        max_trials: 200_000,
        ..McConfig::default()
    };
    let est = estimate_fer(&tanner(), &ChannelModel::laplacian(1.0), &[1.8, 2.2], &cfg).unwrap();
    for e in &est {
        assert!(e.frame_errors >= 30);
        assert!(e.fer >= e.ber && e.ber >= e.fer / 155.0, "{e:?}");
        assert!(e.ci95.0 <= e.fer && e.fer <= e.ci95.1);
    }
    assert!(est[0].fer > est[1].fer);
}

#[test]
fn seeded_runs_repeat_for_any_worker_count() {
    let cfg = McConfig {
        min_errors: 20,
        max_trials: 50_000,
        seed: 17,
        ..McConfig::default()
    };
    let code = tanner();
    let ch = ChannelModel::laplacian(1.0);
    let one = with_workers(1, || estimate_fer(&code, &ch, &[2.0], &cfg).unwrap());
    let three = with_workers(3, || estimate_fer(&code, &ch, &[2.0], &cfg).unwrap());
    assert_eq!(one, three);
    let other = estimate_fer(&code, &ch, &[2.0], &McConfig { seed: 18, ..cfg }).unwrap();
    assert_ne!(one[0].bit_errors, other[0].bit_errors);
}

#[test]
fn error_free_run_reports_an_upper_bound() {
    let est = &estimate_fer(&tanner(), &ChannelModel::laplacian(1.0), &[20.0], &fixed(10_000, 1, 4)).unwrap()[0];
    assert!(est.is_upper_bound());
    assert_eq!(est.trials, 10_000);
    assert_eq!(est.ci95.0, 0.0);
    // -ln(0.025) / 10000
    assert!((est.ci95.1 - 3.689e-4).abs() < 1e-6, "{}", est.ci95.1);
}

#[test]
fn early_exit_does_not_change_counts_much_at_high_snr() {
    let code = tanner();
    let ch = ChannelModel::laplacian(1.0);
    let plain = &estimate_fer(&code, &ch, &[3.0], &fixed(4_096, 5, 4)).unwrap()[0];
    let early = &estimate_fer(&code, &ch, &[3.0], &McConfig { early_exit: true, ..fixed(4_096, 5, 4) }).unwrap()[0];
    assert_eq!(plain.trials, early.trials);
    assert!(early.frame_errors <= plain.frame_errors + 2);
}

#[test]
fn invalid_settings() {
    let code = tanner();
    let ch = ChannelModel::laplacian(1.0);
    let zero_it = McConfig { n_it: 0, ..McConfig::default() };
    assert!(matches!(estimate_fer(&code, &ch, &[2.0], &zero_it), Err(McError::InvalidConfig(_))));
    let zero_trials = McConfig { max_trials: 0, ..McConfig::default() };
    assert!(matches!(estimate_fer(&code, &ch, &[2.0], &zero_trials), Err(McError::InvalidConfig(_))));
    let regularized = ChannelModel::new(ChannelKind::Laplacian, 1.0, 0.1).unwrap();
    assert!(matches!(estimate_fer(&code, &regularized, &[2.0], &McConfig::default()), Err(McError::Channel(_))));
    assert!(estimate_fer(&code, &ch, &[-1.0], &McConfig::default()).is_err());
}

#[test]
fn csv_header_columns() {
    assert_eq!(CSV_HEADER.split(',').count(), 10);
    assert!(CSV_HEADER.starts_with("snr,trials,frame_errors,fer"));
}

#[test]
fn semianalytic_laplacian_slope() {
    let ch = ChannelModel::laplacian(1.0);
    let pts = semianalytic_fer(&ch, 155, 7.6, &[3.0, 5.0]).unwrap();
    let slope = (pts[1].1.ln() - pts[0].1.ln()) / 2.0;
    assert!((slope / -7.6 - 1.0).abs() < 0.02, "{slope}");
    // the integral carries the whole surface beyond l_inst
    assert!((pts[0].1 - (-7.6f64 * 3.0).exp()).abs() < 1e-3 * pts[0].1);
}

#[test]
fn semianalytic_gaussian_slope() {
    let ch = ChannelModel::gaussian(1.0);
    let w = 46.0 * 46.0 / 210.0;
    let h = 1e-3;
    let lo = ln_semianalytic_fer(&ch.with_snr(3.0 - h).unwrap(), 155, w);
    let hi = ln_semianalytic_fer(&ch.with_snr(3.0 + h).unwrap(), 155, w);
    let slope = (hi - lo) / (2.0 * h);
    assert!((slope / (-w * 3.0) - 1.0).abs() < 0.02, "{slope}");
}

#[test]
fn semianalytic_vanishing_weight() {
    for ch in [ChannelModel::laplacian(2.0), ChannelModel::gaussian(2.0)] {
        let v = semianalytic_fer(&ch, 155, 1e-8, &[2.0]).unwrap()[0].1;
        assert!((v - 1.0).abs() < 1e-4, "{v}");
    }
}

#[test]
fn slope_lines() {
    let lap = instanton_slope_curve(7.6, ChannelKind::Laplacian, &[1.0, 2.0, 3.0]);
    assert!(lap.windows(2).all(|w| (w[1].1 - w[0].1 + 7.6).abs() < 1e-12));
    let ml = instanton_slope_curve(20.0, ChannelKind::Laplacian, &[2.0, 2.5]);
    assert!((ml[1].1 - ml[0].1 + 10.0).abs() < 1e-12);
    let g = instanton_slope_curve(10.076, ChannelKind::Gaussian, &[1.0, 2.0, 3.0]);
    for (s, v) in g {
        assert!((v + 5.038 * s * s).abs() < 1e-12);
    }
}
