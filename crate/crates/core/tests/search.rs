mod common;

use common::*;
use instanton_core::certify::classify_and_certify;
use instanton_core::par::with_workers;
use instanton_core::search::{amoeba_minimize, normalized, polish_to_surface, RaySearch, SearchConfig, SearchError, Targets};
use instanton_core::ChannelModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn quick(seed: u64, restarts: usize) -> SearchConfig {
    SearchConfig {
        restarts,
        seed,
        ..SearchConfig::default()
    }
}

#[test]
fn single_bit_directions_never_cross() {
    let code = tanner();
    let mut ray = RaySearch::new(&code, ChannelModel::laplacian(1.0), 0, 4, 1e-9, 10.0);
    for bit in [0, 1, 31, 77, 154] {
        let mut u = vec![0.0; 155];
        u[bit] = 1.0;
        assert_eq!(ray.ray_length(&u), None, "bit {bit}");
    }
}

#[test]
fn certified_direction_crosses_at_its_norm() {
    let code = tanner();
    let rec = config_a();
    let norm = rec.xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let u = normalized(&rec.xi).unwrap();
    let mut ray = RaySearch::new(&code, rec.channel, 0, 4, 1e-9, 10.0);
    let l = ray.ray_length(&u).unwrap();
    assert!((l - norm).abs() < 2e-9, "{l} vs {norm}");
}

#[test]
fn crossing_is_bracketed() {
    let code = tanner();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut ray = RaySearch::new(&code, ChannelModel::laplacian(1.0), 5, 4, 1e-9, 10.0);
    let mut checked = 0;
    while checked < 20 {
        let v: Vec<f64> = (0..155).map(|_| rng.random_range(-0.2f64..1.0).max(0.0)).collect();
        let u = normalized(&v).unwrap();
        let Some(l) = ray.ray_length(&u) else { continue };
        assert!(ray.posterior_along(&u, 0.99 * l) > 0.0);
        assert!(ray.posterior_along(&u, 1.01 * l) <= 0.0);
        assert!(ray.posterior_along(&u, l) <= 0.0);
        checked += 1;
    }
}

#[test]
fn polish_contracts() {
    let code = tanner();
    let cfg = SearchConfig::default();
    let rec = config_a();
    let same = polish_to_surface(&code, &cfg, &rec).unwrap();
    assert!((same.length - rec.length).abs() < 1e-9);

    let mut pushed = rec.clone();
    pushed.xi.iter_mut().for_each(|x| *x *= 1.05);
    pushed.length *= 1.05;
    let back = polish_to_surface(&code, &cfg, &pushed).unwrap();
    assert!((back.length - 7.6).abs() < 1e-8, "{}", back.length);
    let cos: f64 = back.xi.iter().zip(&rec.xi).map(|(a, b)| a * b).sum::<f64>()
        / (back.xi.iter().map(|a| a * a).sum::<f64>().sqrt() * rec.xi.iter().map(|a| a * a).sum::<f64>().sqrt());
    assert!((cos - 1.0).abs() < 1e-12);

    let lone = record(ChannelModel::laplacian(1.0), &[(9, 1.5)], 0);
    assert_eq!(polish_to_surface(&code, &cfg, &lone), Err(SearchError::NoCrossing));
}

#[test]
fn records_sit_on_the_surface() {
    let code = tanner();
    let out = amoeba_minimize(&code, &quick(2, 12)).unwrap();
    assert!(out.successes() > 0);
    for r in &out.records {
        assert!((r.channel.noise_length(&r.xi) - r.length).abs() < 1e-9);
        let mut ray = RaySearch::new(&code, r.channel, r.target_bit, r.n_it, 1e-9, 10.0);
        let inside: Vec<f64> = r.xi.iter().map(|x| x * (1.0 - 1e-6)).collect();
        let outside: Vec<f64> = r.xi.iter().map(|x| x * (1.0 + 1e-6)).collect();
        assert!(ray.posterior(&inside) > 0.0);
        assert!(ray.posterior(&outside) <= 0.0);
        if let Ok(c) = classify_and_certify(&code, r) {
            assert!(c.length_f64() <= 20.0);
        }
    }
    let best = out.best_so_far();
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn outcome_is_deterministic_and_worker_independent() {
    let code = tanner();
    let cfg = quick(9, 6);
    let one = with_workers(1, || amoeba_minimize(&code, &cfg).unwrap());
    let two = with_workers(2, || amoeba_minimize(&code, &cfg).unwrap());
    assert_eq!(one, two);
    let single = SearchConfig { restarts: 1, ..cfg };
    assert_eq!(amoeba_minimize(&code, &single).unwrap(), amoeba_minimize(&code, &single).unwrap());
}

#[test]
fn invalid_configurations() {
    let code = tanner();
    let bad_target = SearchConfig {
        targets: Targets::Bit(155),
        ..SearchConfig::default()
    };
    assert!(matches!(amoeba_minimize(&code, &bad_target), Err(SearchError::TargetOutOfRange { .. })));
    let no_restarts = SearchConfig {
        restarts: 0,
        ..SearchConfig::default()
    };
    assert!(matches!(amoeba_minimize(&code, &no_restarts), Err(SearchError::InvalidConfig(_))));
    let bad_tol = SearchConfig {
        bisect_tol: 0.0,
        ..SearchConfig::default()
    };
    assert!(matches!(amoeba_minimize(&code, &bad_tol), Err(SearchError::InvalidConfig(_))));
}

#[test]
fn short_search_finds_a_low_instanton() {
    let code = tanner();
    let out = amoeba_minimize(&code, &quick(1, 100)).unwrap();
    let best = out.best().unwrap();
    assert!(best.length < 8.0 + 1e-6, "{}", best.length);
    let cert = classify_and_certify(&code, best).unwrap();
    assert!((cert.length_f64() - best.length).abs() < 1e-3);
}
