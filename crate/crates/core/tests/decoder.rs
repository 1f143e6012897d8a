mod common;

use common::*;
use instanton_core::decoder::{hard_decisions, DecodeError};
use instanton_core::tree::{center_posterior_recursive, ComputationalTree};
use instanton_core::{min_sum_decode, ChannelModel, MinSumDecoder, ParityCheckCode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn single_check_by_hand() {
    let code = ParityCheckCode::from_checks(3, vec![vec![0, 1, 2]]).unwrap();
    let t = min_sum_decode(&code, &[0.5, -0.9, 2.0], 1).unwrap();
    let e = code.edge_between(0, 0).unwrap();
    assert!((t.check_to_bit[0][e] + 0.9).abs() < 1e-15);
    assert!((t.posterior_at(0).unwrap() + 0.4).abs() < 1e-15);
    assert!(matches!(t.posterior_at(3), Err(DecodeError::BitOutOfRange { .. })));
}

#[test]
fn noiseless_input_decodes_to_all_ones() {
    let code = tanner();
    for n_it in [1, 4, 10] {
        let t = min_sum_decode(&code, &vec![1.0; 155], n_it).unwrap();
        assert!(t.final_posteriors().iter().all(|&m| m > 0.0));
        assert!(t.decisions.iter().all(|&d| d == 1));
        // first messages are the raw log-likelihoods
        assert!(t.bit_to_check[0].iter().all(|&m| m == 1.0));
    }
}

#[test]
fn posterior_is_h_plus_incoming() {
    let code = tanner();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let h: Vec<f64> = (0..155).map(|_| rng.random_range(-1.0..1.0)).collect();
    let t = min_sum_decode(&code, &h, 3).unwrap();
    for b in 0..155 {
        let incoming: f64 = code.bit_edges(b).iter().map(|&e| t.check_to_bit[2][e]).sum();
        assert!((t.posterior_at(b).unwrap() - h[b] - incoming).abs() < 1e-12);
    }
}

#[test]
fn length_mismatch_is_an_error() {
    assert!(min_sum_decode(&tanner(), &[1.0; 10], 4).is_err());
    assert!(min_sum_decode(&tanner(), &[1.0; 155], 0).is_err());
}

#[test]
fn config_a_family_member_is_on_surface() {
    let rec = config_a();
    let h = ChannelModel::laplacian(1.0).log_likelihoods(&rec.xi);
    let m = min_sum_decode(&tanner(), &h, 4).unwrap().posterior_at(0).unwrap();
    assert!(m.abs() < 1e-9, "{m}");
}

#[test]
fn tree_matches_graph_decoder() {
    let code = tanner();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut dec = MinSumDecoder::new(&code);
    for k in 0..100 {
        let root = rng.random_range(0..155);
        let h: Vec<f64> = (0..155).map(|_| rng.random_range(-1.5..1.5)).collect();
        let tree = ComputationalTree::unwrap(&code, root, 4).unwrap();
        let graph = dec.posterior(&h, 4, root);
        let on_tree = tree.center_posterior(&code, &h).unwrap();
        assert!((graph - on_tree).abs() < 1e-12, "sample {k}");
        let d = tree.decompose_center(&code, &h).unwrap();
        let linear: f64 = d.n_coeffs.iter().zip(&h).map(|(&n, &x)| n as f64 * x).sum();
        assert!((linear - graph).abs() < 1e-9, "sample {k}");
    }
}

#[test]
fn recursive_evaluation_matches_deeper_decoding() {
    let code = tanner();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let h: Vec<f64> = (0..155).map(|_| rng.random_range(-1.0..1.0)).collect();
    for depth in [1, 5, 6] {
        let graph = min_sum_decode(&code, &h, depth).unwrap().posterior_at(17).unwrap();
        let rec = center_posterior_recursive(&code, 17, depth, &h).unwrap();
        assert!((graph - rec).abs() < 1e-12);
    }
}

#[test]
fn sign_flip_on_a_tree_code() {
    // a path of checks is loop free; the all-bits word is its only nonzero codeword
    let code = ParityCheckCode::from_checks(5, (0..4).map(|i| vec![i, i + 1]).collect()).unwrap();
    let h = [0.3, -0.2, 0.9, 0.4, -0.1];
    let flipped: Vec<f64> = h.iter().map(|x| -x).collect();
    let a = min_sum_decode(&code, &h, 6).unwrap();
    let b = min_sum_decode(&code, &flipped, 6).unwrap();
    for i in 0..5 {
        assert_eq!(a.final_posteriors()[i], -b.final_posteriors()[i]);
    }
}

#[test]
fn zero_posterior_is_an_error_decision() {
    assert_eq!(hard_decisions(&[0.0, 1e-300, -2.0]), vec![-1, 1, -1]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn scale_invariance(h in proptest::collection::vec(-2.0f64..2.0, 155), c in 0.01f64..100.0) {
        let code = tanner();
        let a = min_sum_decode(&code, &h, 4).unwrap();
        let scaled: Vec<f64> = h.iter().map(|x| c * x).collect();
        let b = min_sum_decode(&code, &scaled, 4).unwrap();
        for (x, y) in a.final_posteriors().iter().zip(b.final_posteriors()) {
            prop_assert!((c * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        }
        prop_assert_eq!(a.decisions, b.decisions);
    }

    #[test]
    fn early_exit_agrees_on_success(h in proptest::collection::vec(0.0f64..2.0, 155)) {
        let code = tanner();
        let mut dec = MinSumDecoder::new(&code);
        let full = dec.decode(&h, 4).unwrap().to_vec();
        let (early, _) = dec.decode_early_exit(&h, 4).unwrap();
        prop_assert_eq!(hard_decisions(&full), hard_decisions(early));
    }
}
