//! Certification of instanton records on the computational tree.
//!
//! A surface point found by the search is colored slightly inside the
//! error-free region, which yields integer replica counts `n_i` with
//! `sum_i n_i h_i = 0` on the surface. For Laplacian noise the bits split
//! into white (`xi = 0`), green (`0 < xi < 2`) and red (`xi = 2`) classes;
//! all greens share one count `n_*`, and the length is the rational
//! `(N_c - 2 N_2) / n_* + 2 m_2`. For Gaussian noise the piece optimum is
//! `xi = n N_c / sum n^2` with squared length `N_c^2 / sum n^2`.

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelKind, ChannelModel};
use crate::code_model::ParityCheckCode;
use crate::decoder::MinSumDecoder;
use crate::search::InstantonRecord;
use crate::tree::{ComputationalTree, Decomposition, TreeError};

/// Classification tolerance on `xi` for white and red bits.
pub const CLASS_TOL: f64 = 1e-3;
/// Relative step from the surface point towards the origin at which the
/// tree is colored.
pub const INTERIOR_STEP: f64 = 1e-6;
/// Amplitude of the tie-breaking jitter added to the log-likelihoods.
pub const JITTER: f64 = 1e-12;
/// Number of independent jitters a certificate must survive.
pub const JITTER_RUNS: u64 = 3;
/// Largest depth for which the computational tree is materialized.
pub const MAX_CERTIFY_DEPTH: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum CertifyError {
    #[error("record has {got} noise entries, code has {expected} bits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("tree depth {0} is outside the supported range 1..={MAX_CERTIFY_DEPTH}")]
    UnsupportedDepth(usize),
    #[error("only the alpha = 0 Laplacian channel has a rational certificate")]
    UnsupportedChannel,
    #[error("bit {bit} has xi = {xi}, outside [0, 2] beyond the classification tolerance")]
    Classification { bit: usize, xi: f64 },
    #[error("green bits carry different replica counts: {counts:?}")]
    UnequalGreen { counts: Vec<(usize, i64)> },
    #[error("green bit {bit} has nonpositive replica count {n}")]
    NonpositiveGreen { bit: usize, n: i64 },
    #[error("coloring depends on tie-breaking: {0}")]
    Degenerate(String),
    #[error("integer signature is inconsistent with the surface condition: {0}")]
    Inconsistent(String),
    #[error("snapped point is off the surface: posterior {posterior}")]
    OffSurface { posterior: f64 },
    #[error("record length {record} differs from the certified length {exact}")]
    LengthDisagrees { record: f64, exact: f64 },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitClass {
    /// No colored replica on the tree.
    Uncolored,
    /// Colored with `xi = 0`.
    White,
    /// `0 < xi < 2` (any nonzero colored entry for Gaussian noise).
    Green,
    /// `xi = 2`.
    Red,
}

/// Green bits of a degenerate family and the exact sum of their `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracy {
    pub green_bits: Vec<usize>,
    pub h_sum: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub target_bit: usize,
    pub n_it: usize,
    pub channel: ChannelKind,
    pub coloring: Vec<BitClass>,
    pub n_coeffs: Vec<i64>,
    /// `sum_i n_i`; equals the number of colored replicas when every
    /// signature is +1.
    pub n_c: i64,
    /// `sum_i n_i` over red bits.
    pub n_2: i64,
    pub n_star: Option<i64>,
    /// Number of distinct red bits.
    pub m_2: usize,
    /// `sum_i n_i^2` (Gaussian certificates only).
    pub sum_sq: Option<i64>,
    /// Laplacian: `sum |xi|`; Gaussian: `sum xi^2`.
    pub length_exact: Ratio<i64>,
    pub degeneracy: Option<Degeneracy>,
    /// Replica indices colored at the certified point.
    pub colored_replicas: Vec<usize>,
    /// The record moved exactly onto the certified family.
    pub snapped_xi: Vec<f64>,
}

impl Certificate {
    /// Structural signature `(N_c, N_2, n_*, m_2)`.
    pub fn signature(&self) -> (i64, i64, Option<i64>, usize) {
        (self.n_c, self.n_2, self.n_star, self.m_2)
    }

    pub fn bits_of(&self, class: BitClass) -> Vec<usize> {
        (0..self.coloring.len()).filter(|&i| self.coloring[i] == class).collect()
    }

    /// Bits with at least one colored replica.
    pub fn colored_bits(&self) -> Vec<usize> {
        (0..self.coloring.len())
            .filter(|&i| self.coloring[i] != BitClass::Uncolored)
            .collect()
    }

    pub fn length_f64(&self) -> f64 {
        ratio_f64(&self.length_exact)
    }

    /// Member of the degenerate family with the given green noise values
    /// (in the order of `degeneracy.green_bits`); other bits keep their
    /// snapped values.
    pub fn family_member(&self, green_xi: &[f64]) -> Option<Vec<f64>> {
        let deg = self.degeneracy.as_ref()?;
        if green_xi.len() != deg.green_bits.len() {
            return None;
        }
        let mut xi = self.snapped_xi.clone();
        for (&b, &v) in deg.green_bits.iter().zip(green_xi) {
            xi[b] = v;
        }
        Some(xi)
    }
}

pub fn ratio_f64(r: &Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Certifies a record: colors its tree, derives the integer signature and
/// the exact length, snaps the record onto the certified family and checks
/// that the snapped point sits on the error surface.
pub fn classify_and_certify(code: &ParityCheckCode, record: &InstantonRecord) -> Result<Certificate, CertifyError> {
    let n = code.n_bits();
    if record.xi.len() != n {
        return Err(CertifyError::LengthMismatch {
            expected: n,
            got: record.xi.len(),
        });
    }
    if record.n_it == 0 || record.n_it > MAX_CERTIFY_DEPTH {
        return Err(CertifyError::UnsupportedDepth(record.n_it));
    }
    let tree = ComputationalTree::unwrap(code, record.target_bit, record.n_it)?;
    match record.channel.kind {
        ChannelKind::Laplacian if record.channel.alpha == 0.0 => certify_laplacian(code, &tree, record),
        ChannelKind::Laplacian => Err(CertifyError::UnsupportedChannel),
        ChannelKind::Gaussian => certify_gaussian(code, &tree, record),
    }
}

/// Colors the tree at `xi * (1 - INTERIOR_STEP)` under several jitters and
/// returns the first decomposition together with all of them.
fn jittered_colorings(code: &ParityCheckCode, tree: &ComputationalTree, channel: &ChannelModel, xi: &[f64]) -> Result<Vec<Decomposition>, CertifyError> {
    let inside: Vec<f64> = xi.iter().map(|x| x * (1.0 - INTERIOR_STEP)).collect();
    let h = channel.log_likelihoods(&inside);
    (0..JITTER_RUNS)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let hj: Vec<f64> = h.iter().map(|x| x + JITTER * (2.0 * rng.random::<f64>() - 1.0)).collect();
            Ok(tree.decompose_center(code, &hj)?)
        })
        .collect()
}

fn colored_flags(tree: &ComputationalTree, dec: &Decomposition, n_bits: usize) -> Vec<bool> {
    let mut flags = vec![false; n_bits];
    for &r in &dec.colored_replicas {
        flags[tree.bits[r].bit] = true;
    }
    flags
}

fn posterior_at(code: &ParityCheckCode, channel: &ChannelModel, xi: &[f64], target: usize, n_it: usize) -> f64 {
    MinSumDecoder::new(code).posterior(&channel.log_likelihoods(xi), n_it, target)
}

fn certify_laplacian(code: &ParityCheckCode, tree: &ComputationalTree, record: &InstantonRecord) -> Result<Certificate, CertifyError> {
    let n = code.n_bits();
    #[derive(Clone, Copy, PartialEq)]
    enum Raw {
        Zero,
        Green,
        Red,
    }
    let mut raw: Vec<Raw> = Vec::with_capacity(n);
    for (bit, &x) in record.xi.iter().enumerate() {
        raw.push(if x.abs() < CLASS_TOL {
            Raw::Zero
        } else if (x - 2.0).abs() < CLASS_TOL {
            Raw::Red
        } else if x > 0.0 && x < 2.0 {
            Raw::Green
        } else {
            return Err(CertifyError::Classification { bit, xi: x });
        });
    }
    let mut xi: Vec<f64> = record
        .xi
        .iter()
        .zip(&raw)
        .map(|(&x, c)| match c {
            Raw::Zero => 0.0,
            Raw::Red => 2.0,
            Raw::Green => x,
        })
        .collect();
    let greens: Vec<usize> = (0..n).filter(|&i| raw[i] == Raw::Green).collect();
    let reds: Vec<usize> = (0..n).filter(|&i| raw[i] == Raw::Red).collect();

    let decs = jittered_colorings(code, tree, &record.channel, &xi)?;
    let (n_c, n_2, n_star) = integers(&decs[0], &greens, &reds)?;
    for d in &decs[1..] {
        if !same_structure(d, &decs[0], &greens, &reds) {
            return Err(CertifyError::Degenerate("jittered colorings disagree".into()));
        }
    }
    let m_2 = reds.len();
    let excess = n_c - 2 * n_2;
    let greens = match n_star {
        Some(s) => extend_family(code, tree, record, &xi, &greens, &reds, &decs[0], s, excess)?,
        None => greens,
    };
    for &g in &greens {
        raw[g] = Raw::Green;
    }
    let (length_exact, degeneracy) = match n_star {
        Some(s) => {
            let green_sum = Ratio::new(excess, s);
            let m_g = greens.len() as i64;
            if green_sum <= Ratio::from_integer(0) || green_sum >= Ratio::from_integer(2 * m_g) {
                return Err(CertifyError::Inconsistent(format!(
                    "green noise total {green_sum} outside (0, {})",
                    2 * m_g
                )));
            }
            // greens move proportionally onto the exact constraint
            let target = ratio_f64(&green_sum);
            let current: f64 = greens.iter().map(|&g| xi[g]).sum();
            for &g in &greens {
                xi[g] *= target / current;
                if xi[g] == 0.0 {
                    // boundary member of the family
                    continue;
                }
                if !(xi[g] < 2.0) {
                    return Err(CertifyError::Classification { bit: g, xi: xi[g] });
                }
            }
            let deg = Degeneracy {
                green_bits: greens.clone(),
                h_sum: Ratio::from_integer(m_g) - green_sum,
            };
            (green_sum + Ratio::from_integer(2 * m_2 as i64), Some(deg))
        }
        None => {
            if excess != 0 {
                return Err(CertifyError::Inconsistent(format!(
                    "no green bits but N_c - 2 N_2 = {excess}"
                )));
            }
            (Ratio::from_integer(2 * m_2 as i64), None)
        }
    };

    // the snapped point must color the same way and sit on the surface
    let snapped_decs = jittered_colorings(code, tree, &record.channel, &xi)?;
    // boundary members sit at h = 1, where their own count is tie-dependent
    let active: Vec<usize> = greens.iter().copied().filter(|&g| xi[g] > 0.0).collect();
    if snapped_decs.iter().any(|d| !same_structure(d, &decs[0], &active, &reds)) {
        return Err(CertifyError::Degenerate("snapping changed the coloring".into()));
    }
    let posterior = posterior_at(code, &record.channel, &xi, record.target_bit, record.n_it);
    if posterior.abs() > 1e-9 {
        return Err(CertifyError::OffSurface { posterior });
    }
    let exact = ratio_f64(&length_exact);
    let snapped_len = record.channel.noise_length(&xi);
    let record_len = record.channel.noise_length(&record.xi);
    let slack = CLASS_TOL * (greens.len() + reds.len()).max(1) as f64;
    if (snapped_len - exact).abs() > 1e-9 || (record_len - exact).abs() > slack {
        return Err(CertifyError::LengthDisagrees {
            record: record_len,
            exact,
        });
    }

    let dec = &snapped_decs[0];
    let colored = colored_flags(tree, dec, n);
    let coloring = (0..n)
        .map(|i| match raw[i] {
            Raw::Red => BitClass::Red,
            Raw::Green => BitClass::Green,
            Raw::Zero if colored[i] => BitClass::White,
            Raw::Zero => BitClass::Uncolored,
        })
        .collect();
    Ok(Certificate {
        target_bit: record.target_bit,
        n_it: record.n_it,
        channel: ChannelKind::Laplacian,
        coloring,
        n_coeffs: dec.n_coeffs.clone(),
        n_c,
        n_2,
        n_star,
        m_2,
        sum_sq: None,
        length_exact,
        degeneracy,
        colored_replicas: dec.colored_replicas.clone(),
        snapped_xi: xi,
    })
}

fn certify_gaussian(code: &ParityCheckCode, tree: &ComputationalTree, record: &InstantonRecord) -> Result<Certificate, CertifyError> {
    let n = code.n_bits();
    let decs = jittered_colorings(code, tree, &record.channel, &record.xi)?;
    if decs.iter().any(|d| d.n_coeffs != decs[0].n_coeffs) {
        return Err(CertifyError::Degenerate("jittered colorings disagree".into()));
    }
    let dec = &decs[0];
    let n_c = dec.total();
    let sum_sq: i64 = dec.n_coeffs.iter().map(|x| x * x).sum();
    if n_c <= 0 || sum_sq == 0 {
        return Err(CertifyError::Inconsistent(format!("N_c = {n_c}")));
    }
    let xi: Vec<f64> = dec
        .n_coeffs
        .iter()
        .map(|&c| c as f64 * n_c as f64 / sum_sq as f64)
        .collect();
    if let Some((bit, _)) = xi
        .iter()
        .zip(&record.xi)
        .enumerate()
        .find(|(_, (a, b))| (*a - *b).abs() > CLASS_TOL)
    {
        return Err(CertifyError::Classification { bit, xi: record.xi[bit] });
    }
    let posterior = posterior_at(code, &record.channel, &xi, record.target_bit, record.n_it);
    if posterior.abs() > 1e-9 {
        return Err(CertifyError::OffSurface { posterior });
    }
    let length_exact = Ratio::new(n_c * n_c, sum_sq);
    let colored = colored_flags(tree, dec, n);
    let coloring = (0..n)
        .map(|i| match (colored[i], dec.n_coeffs[i] != 0) {
            (false, _) => BitClass::Uncolored,
            (true, false) => BitClass::White,
            (true, true) => BitClass::Green,
        })
        .collect();
    Ok(Certificate {
        target_bit: record.target_bit,
        n_it: record.n_it,
        channel: ChannelKind::Gaussian,
        coloring,
        n_coeffs: dec.n_coeffs.clone(),
        n_c,
        n_2: 0,
        n_star: None,
        m_2: 0,
        sum_sq: Some(sum_sq),
        length_exact,
        degeneracy: None,
        colored_replicas: dec.colored_replicas.clone(),
        snapped_xi: xi,
    })
}

/// Structural class of a certificate: certificates with equal keys are
/// treated as the same instanton up to relabeling.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StructureKey {
    pub length: Ratio<i64>,
    pub n_c: i64,
    pub n_2: i64,
    pub n_star: Option<i64>,
    pub m_2: usize,
    pub greens: usize,
    pub h_sum: Option<Ratio<i64>>,
}

impl Certificate {
    pub fn structure(&self) -> StructureKey {
        StructureKey {
            length: self.length_exact,
            n_c: self.n_c,
            n_2: self.n_2,
            n_star: self.n_star,
            m_2: self.m_2,
            greens: self.degeneracy.as_ref().map_or(0, |d| d.green_bits.len()),
            h_sum: self.degeneracy.as_ref().map(|d| d.h_sum),
        }
    }
}

/// Certifies every record (concurrently), preserving order.
pub fn certify_records(code: &ParityCheckCode, records: &[InstantonRecord]) -> Vec<Result<Certificate, CertifyError>> {
    crate::par::map_indexed(records.len(), |i| classify_and_certify(code, &records[i]))
}

/// Distinct structural classes among the certificates, shortest first.
pub fn distinct_structures<'c>(certs: impl IntoIterator<Item = &'c Certificate>) -> Vec<StructureKey> {
    let set: std::collections::BTreeSet<StructureKey> = certs.into_iter().map(Certificate::structure).collect();
    set.into_iter().collect()
}

/// `(N_c, N_2, n_*)` of a coloring, checking that all greens share `n_*`.
fn integers(dec: &Decomposition, greens: &[usize], reds: &[usize]) -> Result<(i64, i64, Option<i64>), CertifyError> {
    let nc = dec.total();
    let n2 = reds.iter().map(|&b| dec.n_coeffs[b]).sum();
    let mut n_star = None;
    for &g in greens {
        let c = dec.n_coeffs[g];
        if c <= 0 {
            return Err(CertifyError::NonpositiveGreen { bit: g, n: c });
        }
        if n_star.is_some_and(|s| s != c) {
            return Err(CertifyError::UnequalGreen {
                counts: greens.iter().map(|&b| (b, dec.n_coeffs[b])).collect(),
            });
        }
        n_star = Some(c);
    }
    Ok((nc, n2, n_star))
}

/// Same integers and the same counts on every green and red bit.
fn same_structure(a: &Decomposition, b: &Decomposition, greens: &[usize], reds: &[usize]) -> bool {
    a.total() == b.total() && greens.iter().chain(reds).all(|&i| a.n_coeffs[i] == b.n_coeffs[i])
}

/// Adds to the green set every white bit that can share the green noise
/// while keeping all existing counts, and whose own count then equals
/// `n_*`. Such bits are boundary members (`h = 1`) of the degenerate family;
/// their count at `xi = 0` may differ, since the coloring there is that of
/// the boundary. A bit whose activation changes any other count (it screens
/// a neighbour, or a replica flips sign) stays white.
#[allow(clippy::too_many_arguments)]
fn extend_family(
    code: &ParityCheckCode,
    tree: &ComputationalTree,
    record: &InstantonRecord,
    xi: &[f64],
    greens: &[usize],
    reds: &[usize],
    base: &Decomposition,
    n_star: i64,
    excess: i64,
) -> Result<Vec<usize>, CertifyError> {
    let mut family = greens.to_vec();
    let candidates: Vec<usize> = (0..xi.len())
        .filter(|&i| xi[i] == 0.0 && base.n_coeffs[i] != 0)
        .collect();
    let total = excess as f64 / n_star as f64;
    for c in candidates {
        let mut trial = family.clone();
        trial.push(c);
        let share = total / trial.len() as f64;
        if !(share > 0.0 && share < 2.0) {
            continue;
        }
        let mut point = xi.to_vec();
        for &g in &trial {
            point[g] = share;
        }
        let decs = jittered_colorings(code, tree, &record.channel, &point)?;
        let keeps = decs.iter().all(|d| {
            same_structure(d, base, &family, reds) && integers(d, &trial, reds).ok() == Some((base.total(), reds.iter().map(|&b| base.n_coeffs[b]).sum(), Some(n_star)))
        });
        if keeps {
            family = trial;
        }
    }
    family.sort_unstable();
    Ok(family)
}

/// Two tree codewords equidistant from an instanton, as +/-1 values on the
/// bit replicas of the computational tree.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoCodewordPair {
    pub first: Vec<i8>,
    pub second: Vec<i8>,
}

#[derive(Debug, Error, PartialEq)]
pub enum PseudoCodewordError {
    #[error("certificate carries no colored replicas")]
    Empty,
    #[error("assignment violates a computational-tree check")]
    NotTreeCodeword,
    #[error(transparent)]
    Tree(#[from] TreeError),
}

/// The all-ones word and the word that is -1 on every colored replica.
pub fn pseudo_codeword_pair(code: &ParityCheckCode, cert: &Certificate) -> Result<PseudoCodewordPair, PseudoCodewordError> {
    if cert.colored_replicas.is_empty() {
        return Err(PseudoCodewordError::Empty);
    }
    let tree = ComputationalTree::unwrap(code, cert.target_bit, cert.n_it)?;
    let first = vec![1i8; tree.bits.len()];
    let mut second = first.clone();
    for &r in &cert.colored_replicas {
        second[r] = -1;
    }
    if !tree.is_tree_codeword(&first) || !tree.is_tree_codeword(&second) {
        return Err(PseudoCodewordError::NotTreeCodeword);
    }
    Ok(PseudoCodewordPair { first, second })
}

/// The smallest alternative second word: -1 on one colored last-generation
/// replica of a red bit and on an uncolored sibling under the same check.
/// `None` when no red bit is colored in the last generation.
pub fn minimal_second_codeword(code: &ParityCheckCode, cert: &Certificate) -> Result<Option<Vec<i8>>, PseudoCodewordError> {
    let tree = ComputationalTree::unwrap(code, cert.target_bit, cert.n_it)?;
    let mut colored = vec![false; tree.bits.len()];
    for &r in &cert.colored_replicas {
        colored[r] = true;
    }
    for &r in &cert.colored_replicas {
        let rep = &tree.bits[r];
        if rep.generation != tree.depth || cert.coloring[rep.bit] != BitClass::Red {
            continue;
        }
        let Some(parent_check) = rep.parent else { continue };
        let sibling = tree.checks[parent_check].children.iter().copied().find(|&s| s != r && !colored[s]);
        if let Some(s) = sibling {
            let mut word = vec![1i8; tree.bits.len()];
            word[r] = -1;
            word[s] = -1;
            if !tree.is_tree_codeword(&word) {
                return Err(PseudoCodewordError::NotTreeCodeword);
            }
            return Ok(Some(word));
        }
    }
    Ok(None)
}

/// Left-hand side of the stationarity condition of the regularized
/// Laplacian problem, `xi/(2-xi) * sqrt(((2-xi)^2+a^2)/(xi^2+a^2))`.
pub fn stationarity_lhs(alpha: f64, xi: f64) -> f64 {
    let a2 = alpha * alpha;
    xi / (2.0 - xi) * (((2.0 - xi).powi(2) + a2) / (xi * xi + a2)).sqrt()
}

/// Root in `[0, 2)` of `stationarity_lhs(alpha, xi) = ln / (2 - ln)` where
/// `ln` is `lambda * n_i`. The left side is increasing on `[0, 2)`, so the
/// root is found by bisection; `ln <= 0` gives 0 and `ln >= 2` gives 2.
pub fn stationary_xi(alpha: f64, lambda_n: f64) -> f64 {
    if lambda_n <= 0.0 {
        return 0.0;
    }
    if lambda_n >= 2.0 {
        return 2.0;
    }
    let rhs = lambda_n / (2.0 - lambda_n);
    let (mut lo, mut hi) = (0.0, 2.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if stationarity_lhs(alpha, mid) < rhs {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
