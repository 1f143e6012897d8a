//! Flooding min-sum decoding.
//!
//! One iteration updates every bit-to-check message and then every
//! check-to-bit message. Bit-to-check messages of the first iteration equal
//! the channel log-likelihoods (all-zero initial check messages), so after
//! `n` iterations the posterior at a bit depends on exactly `n` generations
//! of its computational tree.

use thiserror::Error;

use crate::code_model::ParityCheckCode;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("log-likelihood vector has length {got}, code has {expected} bits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("at least one iteration is required")]
    ZeroIterations,
    #[error("bit {bit} out of range for a code with {n_bits} bits")]
    BitOutOfRange { bit: usize, n_bits: usize },
}

/// All messages and posteriors of one decoding run. Edge indexing follows
/// [`ParityCheckCode`].
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeTrace {
    pub iterations: usize,
    /// `bit_to_check[k][e]`: message sent along edge `e` in iteration `k + 1`.
    pub bit_to_check: Vec<Vec<f64>>,
    /// `check_to_bit[k][e]`: reply along edge `e` in iteration `k + 1`.
    pub check_to_bit: Vec<Vec<f64>>,
    /// `posteriors[k][i]`: a-posteriori log-likelihood after iteration `k + 1`.
    pub posteriors: Vec<Vec<f64>>,
    /// Hard decisions from the final posteriors; zero counts as an error (-1).
    pub decisions: Vec<i8>,
}

impl DecodeTrace {
    /// Final-iteration posterior at `bit`.
    pub fn posterior_at(&self, bit: usize) -> Result<f64, DecodeError> {
        let last = self.posteriors.last().expect("trace has at least one iteration");
        last.get(bit).copied().ok_or(DecodeError::BitOutOfRange {
            bit,
            n_bits: last.len(),
        })
    }

    pub fn final_posteriors(&self) -> &[f64] {
        self.posteriors.last().expect("trace has at least one iteration")
    }
}

/// Decodes `h` for `n_it` iterations and records every message.
pub fn min_sum_decode(code: &ParityCheckCode, h: &[f64], n_it: usize) -> Result<DecodeTrace, DecodeError> {
    let mut dec = MinSumDecoder::new(code);
    dec.validate(h, n_it)?;
    let mut trace = DecodeTrace {
        iterations: n_it,
        bit_to_check: Vec::with_capacity(n_it),
        check_to_bit: Vec::with_capacity(n_it),
        posteriors: Vec::with_capacity(n_it),
        decisions: Vec::new(),
    };
    dec.start();
    for _ in 0..n_it {
        dec.step(h, true);
        trace.bit_to_check.push(dec.v2c.clone());
        trace.check_to_bit.push(dec.c2v.clone());
        trace.posteriors.push(dec.post.clone());
    }
    trace.decisions = hard_decisions(&dec.post);
    Ok(trace)
}

/// Maps posteriors to +/-1 decisions; a zero posterior decides -1.
pub fn hard_decisions(posteriors: &[f64]) -> Vec<i8> {
    posteriors.iter().map(|&m| if m > 0.0 { 1 } else { -1 }).collect()
}

/// Check-node update for one check: `out[k] = prod_{j != k} sign(in[j]) * min_{j != k} |in[j]|`.
/// `sign(0)` is taken as +1.
#[inline]
pub(crate) fn check_update(input: &[f64], out: &mut [f64]) {
    let mut negative = false;
    let (mut min1, mut min2, mut arg) = (f64::INFINITY, f64::INFINITY, usize::MAX);
    for (k, &x) in input.iter().enumerate() {
        negative ^= x < 0.0;
        let a = x.abs();
        if a < min1 {
            min2 = min1;
            min1 = a;
            arg = k;
        } else if a < min2 {
            min2 = a;
        }
    }
    for (k, (o, &x)) in out.iter_mut().zip(input).enumerate() {
        let mag = if k == arg { min2 } else { min1 };
        let neg = negative ^ (x < 0.0);
        *o = if neg { -mag } else { mag };
    }
}

/// Reusable decoder workspace; avoids allocations inside search loops.
#[derive(Debug, Clone)]
pub struct MinSumDecoder<'a> {
    code: &'a ParityCheckCode,
    /// Bit-major flat copy of the per-bit edge lists.
    bit_offsets: Vec<usize>,
    bit_edges: Vec<usize>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    post: Vec<f64>,
}

impl<'a> MinSumDecoder<'a> {
    pub fn new(code: &'a ParityCheckCode) -> Self {
        let mut bit_offsets = vec![0];
        let mut bit_edges = Vec::with_capacity(code.n_edges());
        for bit in 0..code.n_bits() {
            bit_edges.extend_from_slice(code.bit_edges(bit));
            bit_offsets.push(bit_edges.len());
        }
        MinSumDecoder {
            code,
            bit_offsets,
            bit_edges,
            v2c: vec![0.0; code.n_edges()],
            c2v: vec![0.0; code.n_edges()],
            post: vec![0.0; code.n_bits()],
        }
    }

    pub fn code(&self) -> &'a ParityCheckCode {
        self.code
    }

    fn validate(&self, h: &[f64], n_it: usize) -> Result<(), DecodeError> {
        if h.len() != self.code.n_bits() {
            return Err(DecodeError::LengthMismatch {
                expected: self.code.n_bits(),
                got: h.len(),
            });
        }
        if n_it == 0 {
            return Err(DecodeError::ZeroIterations);
        }
        Ok(())
    }

    fn start(&mut self) {
        self.c2v.iter_mut().for_each(|x| *x = 0.0);
    }

    fn step(&mut self, h: &[f64], with_posteriors: bool) {
        let code = self.code;
        for (bit, &hb) in h.iter().enumerate() {
            let edges = &self.bit_edges[self.bit_offsets[bit]..self.bit_offsets[bit + 1]];
            for &e in edges {
                let mut msg = hb;
                for &f in edges {
                    if f != e {
                        msg += self.c2v[f];
                    }
                }
                self.v2c[e] = msg;
            }
        }
        for check in 0..code.n_checks() {
            let r = code.check_edges(check);
            check_update(&self.v2c[r.clone()], &mut self.c2v[r]);
        }
        if with_posteriors {
            for (bit, &hb) in h.iter().enumerate() {
                let mut m = hb;
                for &e in &self.bit_edges[self.bit_offsets[bit]..self.bit_offsets[bit + 1]] {
                    m += self.c2v[e];
                }
                self.post[bit] = m;
            }
        }
    }

    /// Runs `n_it` iterations and returns the final posteriors.
    pub fn decode(&mut self, h: &[f64], n_it: usize) -> Result<&[f64], DecodeError> {
        self.validate(h, n_it)?;
        self.start();
        for it in 1..=n_it {
            self.step(h, it == n_it);
        }
        Ok(&self.post)
    }

    /// Like [`Self::decode`] but stops as soon as the hard decisions satisfy
    /// every check. Returns the posteriors and the number of iterations run.
    pub fn decode_early_exit(&mut self, h: &[f64], n_it: usize) -> Result<(&[f64], usize), DecodeError> {
        self.validate(h, n_it)?;
        self.start();
        for it in 1..=n_it {
            self.step(h, true);
            if self.decisions_satisfy_checks() {
                return Ok((&self.post, it));
            }
        }
        Ok((&self.post, n_it))
    }

    fn decisions_satisfy_checks(&self) -> bool {
        self.code.checks().iter().all(|members| {
            members.iter().filter(|&&b| self.post[b] <= 0.0).count() % 2 == 0
        })
    }

    /// Posterior at `bit` after `n_it` iterations.
    pub fn posterior(&mut self, h: &[f64], n_it: usize, bit: usize) -> f64 {
        self.decode(h, n_it).expect("valid decoder input")[bit]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_check_hand_evaluation() {
        let code = ParityCheckCode::from_checks(3, vec![vec![0, 1, 2]]).unwrap();
        let trace = min_sum_decode(&code, &[0.5, -0.9, 2.0], 1).unwrap();
        assert!((trace.check_to_bit[0][0] + 0.9).abs() < 1e-15);
        assert!((trace.posterior_at(0).unwrap() + 0.4).abs() < 1e-15);
        assert_eq!(trace.bit_to_check[0], vec![0.5, -0.9, 2.0]);
    }

    #[test]
    fn noiseless_fixed_point() {
        let code = ParityCheckCode::tanner_155();
        for n_it in [1, 2, 4, 7] {
            let trace = min_sum_decode(&code, &vec![1.0; 155], n_it).unwrap();
            assert!(trace.decisions.iter().all(|&d| d == 1));
            assert!(trace.final_posteriors().iter().all(|&m| m > 0.0));
        }
        // depth-4 tree of a (3,5) code: 1 + 3 + 6 + 12 + 24 = 46
        let trace = min_sum_decode(&code, &vec![1.0; 155], 4).unwrap();
        assert!(trace.final_posteriors().iter().all(|&m| m == 46.0));
    }

    #[test]
    fn posterior_is_h_plus_incoming() {
        let code = ParityCheckCode::tanner_155();
        let h: Vec<f64> = (0..155).map(|i| ((i * 37 % 17) as f64 - 6.0) / 5.0).collect();
        let trace = min_sum_decode(&code, &h, 3).unwrap();
        for bit in 0..155 {
            let incoming: f64 = code.bit_edges(bit).iter().map(|&e| trace.check_to_bit[2][e]).sum();
            assert!((trace.posterior_at(bit).unwrap() - h[bit] - incoming).abs() < 1e-12);
        }
        assert!(matches!(trace.posterior_at(155), Err(DecodeError::BitOutOfRange { .. })));
    }

    #[test]
    fn workspace_matches_trace() {
        let code = ParityCheckCode::tanner_155();
        let h: Vec<f64> = (0..155).map(|i| ((i * 53 % 23) as f64 - 8.0) / 7.0).collect();
        let trace = min_sum_decode(&code, &h, 4).unwrap();
        let mut dec = MinSumDecoder::new(&code);
        assert_eq!(dec.decode(&h, 4).unwrap(), trace.final_posteriors());
    }

    #[test]
    fn bad_inputs() {
        let code = ParityCheckCode::tanner_155();
        assert_eq!(
            min_sum_decode(&code, &[1.0; 3], 4),
            Err(DecodeError::LengthMismatch { expected: 155, got: 3 })
        );
        assert_eq!(min_sum_decode(&code, &[1.0; 155], 0), Err(DecodeError::ZeroIterations));
    }

    #[test]
    fn early_exit_on_clean_input() {
        let code = ParityCheckCode::tanner_155();
        let mut dec = MinSumDecoder::new(&code);
        let (_, used) = dec.decode_early_exit(&[1.0; 155], 50).unwrap();
        assert_eq!(used, 1);
    }
}
