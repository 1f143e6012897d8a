//! Instanton search: bisection for the error-surface crossing along a ray
//! and annealed downhill-simplex minimization over ray directions.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelKind, ChannelModel};
use crate::code_model::ParityCheckCode;
use crate::decoder::MinSumDecoder;
use crate::par::map_indexed;
use crate::tree::ComputationalTree;

/// Objective value used for directions whose ray never crosses the surface.
pub const NO_CROSSING: f64 = 1e6;

#[derive(Debug, Error, PartialEq)]
pub enum SearchError {
    #[error("target bit {bit} out of range for a code with {n_bits} bits")]
    TargetOutOfRange { bit: usize, n_bits: usize },
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("no error-surface crossing along the record's ray")]
    NoCrossing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Targets {
    Bit(usize),
    Sweep,
}

/// How the starting simplex of each restart is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartMode {
    /// Random directions supported on `support` bits; the simplex lives in
    /// that subspace.
    Sparse { support: usize },
    /// Dense Gaussian direction; the simplex spans all bits.
    Dense,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub targets: Targets,
    pub n_it: usize,
    pub channel: ChannelModel,
    pub restarts: usize,
    pub simplex_scale: f64,
    /// `(temperature, simplex moves)` stages; temperatures are in objective
    /// units.
    pub anneal_schedule: Vec<(f64, usize)>,
    pub bisect_tol: f64,
    pub max_ray: f64,
    pub seed: u64,
    pub start: StartMode,
    /// Sparse starts draw their support from bits within this many check
    /// hops of the target.
    pub start_radius: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            targets: Targets::Bit(0),
            n_it: 4,
            channel: ChannelModel::laplacian(1.0),
            restarts: 100,
            simplex_scale: 0.3,
            anneal_schedule: vec![(0.3, 10), (0.0, 10)],
            bisect_tol: 1e-9,
            max_ray: 10.0,
            seed: 1,
            start: StartMode::Sparse { support: 12 },
            start_radius: 2,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self, code: &ParityCheckCode) -> Result<(), SearchError> {
        if let Targets::Bit(bit) = self.targets {
            if bit >= code.n_bits() {
                return Err(SearchError::TargetOutOfRange {
                    bit,
                    n_bits: code.n_bits(),
                });
            }
        }
        let bad = |msg: &str| Err(SearchError::InvalidConfig(msg.into()));
        if self.n_it == 0 {
            return bad("n_it must be at least 1");
        }
        if self.restarts == 0 {
            return bad("restarts must be at least 1");
        }
        if !(self.simplex_scale > 0.0 && self.bisect_tol > 0.0 && self.max_ray > 0.0) {
            return bad("simplex_scale, bisect_tol and max_ray must be positive");
        }
        if let StartMode::Sparse { support } = self.start {
            if support < 2 || support > code.n_bits() {
                return bad("sparse support must be between 2 and the code length");
            }
        }
        if self.anneal_schedule.iter().any(|&(t, _)| !(t >= 0.0)) {
            return bad("temperatures must be nonnegative");
        }
        Ok(())
    }

    pub fn target_bits(&self, code: &ParityCheckCode) -> Vec<usize> {
        match self.targets {
            Targets::Bit(b) => vec![b],
            Targets::Sweep => (0..code.n_bits()).collect(),
        }
    }
}

/// A noise configuration on (or next to) the error surface of `target_bit`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstantonRecord {
    pub xi: Vec<f64>,
    pub target_bit: usize,
    pub n_it: usize,
    pub channel: ChannelModel,
    /// `sum |xi|` for Laplacian, `sum xi^2` for Gaussian.
    pub length: f64,
}

/// Decodes scaled copies of a direction and locates the first point where
/// the target posterior becomes nonpositive.
pub struct RaySearch<'a> {
    decoder: MinSumDecoder<'a>,
    channel: ChannelModel,
    target: usize,
    n_it: usize,
    tol: f64,
    max_ray: f64,
    h: Vec<f64>,
    xi: Vec<f64>,
    pub evaluations: u64,
}

impl<'a> RaySearch<'a> {
    pub fn new(code: &'a ParityCheckCode, channel: ChannelModel, target: usize, n_it: usize, tol: f64, max_ray: f64) -> Self {
        RaySearch {
            decoder: MinSumDecoder::new(code),
            channel,
            target,
            n_it,
            tol,
            max_ray,
            h: vec![0.0; code.n_bits()],
            xi: vec![0.0; code.n_bits()],
            evaluations: 0,
        }
    }

    pub fn from_config(code: &'a ParityCheckCode, cfg: &SearchConfig, target: usize) -> Self {
        Self::new(code, cfg.channel, target, cfg.n_it, cfg.bisect_tol, cfg.max_ray)
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn target(&self) -> usize {
        self.target
    }

    /// Target posterior for the noise `xi`.
    pub fn posterior(&mut self, xi: &[f64]) -> f64 {
        self.evaluations += 1;
        self.channel.log_likelihoods_into(xi, &mut self.h);
        self.decoder.posterior(&self.h, self.n_it, self.target)
    }

    /// Target posterior at the point `scale * u`.
    pub fn posterior_along(&mut self, u: &[f64], scale: f64) -> f64 {
        let mut xi = std::mem::take(&mut self.xi);
        for (x, &d) in xi.iter_mut().zip(u) {
            *x = scale * d;
        }
        let m = self.posterior(&xi);
        self.xi = xi;
        m
    }

    /// Smallest `l` in `(0, max_ray]` with a nonpositive target posterior at
    /// `l * u`, refined by bisection to the configured tolerance. The
    /// bracket comes from geometric marching (factor 1.3 from 0.5).
    pub fn ray_length(&mut self, u: &[f64]) -> Option<f64> {
        let mut good = 0.0;
        let mut l: f64 = 0.5;
        loop {
            let l_eval = l.min(self.max_ray);
            if self.posterior_along(u, l_eval) <= 0.0 {
                return Some(self.bisect(u, good, l_eval));
            }
            if l_eval >= self.max_ray {
                return None;
            }
            good = l_eval;
            l *= 1.3;
        }
    }

    /// Surface crossing near `guess`: marches up or down from it by factors
    /// of 1.3 until a bracket is found, then bisects. Unlike
    /// [`Self::ray_length`] this may skip crossings far below `guess`.
    pub fn ray_length_from(&mut self, u: &[f64], guess: f64) -> Option<f64> {
        let mut l = guess.clamp(1e-6, self.max_ray);
        if self.posterior_along(u, l) <= 0.0 {
            loop {
                let lower = l / 1.3;
                if lower < 1e-6 {
                    return Some(self.bisect(u, 0.0, l));
                }
                if self.posterior_along(u, lower) > 0.0 {
                    return Some(self.bisect(u, lower, l));
                }
                l = lower;
            }
        }
        loop {
            if l >= self.max_ray {
                return None;
            }
            let upper = (l * 1.3).min(self.max_ray);
            if self.posterior_along(u, upper) <= 0.0 {
                return Some(self.bisect(u, l, upper));
            }
            l = upper;
        }
    }

    /// Shrinks the bracket `[good, bad]` (good decodes correctly, bad fails)
    /// until it is narrower than the tolerance and returns its failing end.
    /// The posterior is piecewise linear along a ray, so each step first
    /// tries the secant root of the bracket, verified one tolerance below;
    /// plain halving is the fallback.
    pub fn bisect(&mut self, u: &[f64], mut good: f64, mut bad: f64) -> f64 {
        let mut m_good = self.posterior_along(u, good);
        let mut m_bad = self.posterior_along(u, bad);
        let mut use_secant = true;
        while bad - good > self.tol {
            let width = bad - good;
            let secant = good + width * m_good / (m_good - m_bad);
            let x = if use_secant && secant.is_finite() {
                secant.clamp(good + 0.25 * self.tol, bad - 0.25 * self.tol)
            } else {
                0.5 * (good + bad)
            };
            if x <= good || x >= bad {
                break;
            }
            let m = self.posterior_along(u, x);
            if m <= 0.0 {
                bad = x;
                m_bad = m;
                let probe = x - self.tol;
                if use_secant && probe > good {
                    let mp = self.posterior_along(u, probe);
                    if mp > 0.0 {
                        good = probe;
                        m_good = mp;
                    }
                }
            } else {
                good = x;
                m_good = m;
            }
            use_secant = bad - good < 0.5 * width;
        }
        bad
    }

    /// Minimization objective for a direction (not necessarily normalized):
    /// the channel weight of the surface point along it.
    pub fn objective(&mut self, direction: &[f64]) -> (f64, Option<f64>) {
        let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return (NO_CROSSING, None);
        }
        let u: Vec<f64> = direction.iter().map(|x| x / norm).collect();
        match self.ray_length(&u) {
            Some(l) => {
                let xi: Vec<f64> = u.iter().map(|x| x * l).collect();
                (self.channel.noise_length(&xi), Some(l))
            }
            None => (NO_CROSSING, None),
        }
    }

    pub fn channel(&self) -> &ChannelModel {
        &self.channel
    }
}

fn embed(n_bits: usize, axes: &[usize], y: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; n_bits];
    for (&a, &v) in axes.iter().zip(y) {
        full[a] = v;
    }
    full
}

const MAX_START_DRAWS: usize = 500;

/// Bits within `radius` check hops of `bit` (including `bit`), in
/// breadth-first order.
pub fn neighborhood(code: &ParityCheckCode, bit: usize, radius: usize) -> Vec<usize> {
    let mut seen = vec![false; code.n_bits()];
    seen[bit] = true;
    let mut out = vec![bit];
    let mut frontier = vec![bit];
    for _ in 0..radius {
        let mut next = Vec::new();
        for &b in &frontier {
            for &c in code.bit_members(b) {
                for &o in code.check_members(c) {
                    if !seen[o] {
                        seen[o] = true;
                        out.push(o);
                        next.push(o);
                    }
                }
            }
        }
        frontier = next;
    }
    out
}

/// Euclidean normalization; returns `None` for the zero vector.
pub fn normalized(v: &[f64]) -> Option<Vec<f64>> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (norm > 0.0 && norm.is_finite()).then(|| v.iter().map(|x| x / norm).collect())
}

/// Outcome of one restart.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartResult {
    pub record: Option<InstantonRecord>,
    pub evaluations: u64,
}

/// Annealed downhill simplex over a coordinate subspace. Vertex values are
/// stored with a positive thermal fluctuation and trial values compared with
/// a negative one, so uphill moves are accepted with a probability that
/// vanishes as the temperature goes to zero.
struct Amoeba<'s, 'a> {
    ray: &'s mut RaySearch<'a>,
    /// Full-space coordinate of each subspace axis.
    axes: Vec<usize>,
    n_bits: usize,
    best: (f64, Vec<f64>),
}

impl Amoeba<'_, '_> {
    fn embed(&self, y: &[f64]) -> Vec<f64> {
        embed(self.n_bits, &self.axes, y)
    }

    fn eval(&mut self, y: &[f64]) -> f64 {
        let full = self.embed(y);
        let (f, _) = self.ray.objective(&full);
        if f < self.best.0 {
            self.best = (f, y.to_vec());
        }
        f
    }

    fn run<R: Rng>(&mut self, start: Vec<f64>, scale: f64, schedule: &[(f64, usize)], rng: &mut R) {
        let dim = start.len();
        let mut verts: Vec<Vec<f64>> = vec![start.clone()];
        for k in 0..dim {
            let mut v = start.clone();
            v[k] += if v[k] >= 0.0 { scale } else { -scale };
            verts.push(v);
        }
        let mut vals: Vec<f64> = verts.clone().iter().map(|v| self.eval(v)).collect();
        for &(temp, moves) in schedule {
            let fluct = |rng: &mut R| {
                if temp > 0.0 {
                    -temp * (1.0 - rng.random::<f64>()).ln()
                } else {
                    0.0
                }
            };
            for _ in 0..moves {
                // rank vertices by fluctuated value
                let shown: Vec<f64> = vals.iter().map(|&v| v + fluct(rng)).collect();
                let mut order: Vec<usize> = (0..=dim).collect();
                order.sort_by(|&a, &b| shown[a].total_cmp(&shown[b]));
                let (ilo, ihi, inhi) = (order[0], order[dim], order[dim - 1]);
                let (ylo, yhi, ynhi) = (shown[ilo], shown[ihi], shown[inhi]);

                let mut centroid = vec![0.0; dim];
                for (i, v) in verts.iter().enumerate() {
                    if i != ihi {
                        centroid.iter_mut().zip(v).for_each(|(c, x)| *c += x / dim as f64);
                    }
                }
                let point = |coef: f64, worst: &[f64]| -> Vec<f64> {
                    centroid
                        .iter()
                        .zip(worst)
                        .map(|(c, w)| c + coef * (c - w))
                        .collect()
                };
                let worst = verts[ihi].clone();
                let refl = point(1.0, &worst);
                let yr = self.eval(&refl) - fluct(rng);
                if yr < ylo {
                    let exp = point(2.0, &worst);
                    let ye = self.eval(&exp) - fluct(rng);
                    if ye < yr {
                        verts[ihi] = exp;
                        vals[ihi] = ye;
                    } else {
                        verts[ihi] = refl;
                        vals[ihi] = yr;
                    }
                } else if yr < ynhi {
                    verts[ihi] = refl;
                    vals[ihi] = yr;
                } else {
                    let contr = point(-0.5, &worst);
                    let yc = self.eval(&contr) - fluct(rng);
                    if yc < yhi.min(yr) {
                        verts[ihi] = contr;
                        vals[ihi] = yc;
                    } else {
                        let lo = verts[ilo].clone();
                        for i in 0..=dim {
                            if i != ilo {
                                let shrunk: Vec<f64> = verts[i]
                                    .iter()
                                    .zip(&lo)
                                    .map(|(x, l)| l + 0.5 * (x - l))
                                    .collect();
                                vals[i] = self.eval(&shrunk);
                                verts[i] = shrunk;
                            }
                        }
                    }
                }
                // keep directions on the unit sphere
                for (v, val) in verts.iter_mut().zip(vals.iter_mut()) {
                    if let Some(n) = normalized(v) {
                        *v = n;
                    } else {
                        *val = NO_CROSSING;
                    }
                }
            }
        }
    }
}

/// Largest tree depth for which restarts finish with the piecewise descent;
/// deeper trees are too large to unwrap.
pub const MAX_DESCENT_DEPTH: usize = 6;

fn draw_start<R: Rng>(cfg: &SearchConfig, n: usize, ball: &[usize], rng: &mut R) -> (Vec<usize>, Vec<f64>) {
    match cfg.start {
        StartMode::Sparse { support } => {
            let k = support.min(ball.len());
            let axes: Vec<usize> = sample(rng, ball.len(), k).into_iter().map(|i| ball[i]).collect();
            let start = axes.iter().map(|_| 0.5 + rng.random::<f64>()).collect();
            (axes, start)
        }
        StartMode::Dense => {
            let start = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
            ((0..n).collect(), start)
        }
    }
}

/// One restart for `target`: a start drawn from `rng` that reaches the
/// surface, the annealed simplex, then (for shallow trees) descent across
/// surface pieces and a final polish.
pub fn amoeba_restart<R: Rng>(code: &ParityCheckCode, cfg: &SearchConfig, target: usize, tree: Option<&ComputationalTree>, rng: &mut R) -> RestartResult {
    let n = code.n_bits();
    let mut ray = RaySearch::from_config(code, cfg, target).with_tolerance(cfg.bisect_tol.max(1e-7));
    let ball = neighborhood(code, target, cfg.start_radius);
    // directions whose ray never reaches the surface give the simplex nothing to work with
    let mut attempt = draw_start(cfg, n, &ball, rng);
    for _ in 0..MAX_START_DRAWS {
        if ray.objective(&embed(n, &attempt.0, &attempt.1)).1.is_some() {
            break;
        }
        attempt = draw_start(cfg, n, &ball, rng);
    }
    let (axes, start) = attempt;
    let start = normalized(&start).unwrap_or_else(|| vec![1.0 / (axes.len() as f64).sqrt(); axes.len()]);
    let mut amoeba = Amoeba {
        ray: &mut ray,
        axes,
        n_bits: n,
        best: (f64::INFINITY, Vec::new()),
    };
    amoeba.run(start, cfg.simplex_scale, &cfg.anneal_schedule, rng);
    let (best_val, best_y) = amoeba.best.clone();
    let direction = amoeba.embed(&best_y);
    let evaluations = ray.evaluations;
    if best_val >= NO_CROSSING {
        return RestartResult { record: None, evaluations };
    }
    let Some(mut record) = surface_record(code, cfg, target, &direction, cfg.bisect_tol) else {
        return RestartResult { record: None, evaluations };
    };
    if let Some(tree) = tree {
        let (xi, _) = descend_pieces(code, cfg, tree, record.xi, DESCENT_STEPS);
        record.xi = xi;
    }
    let record = polish_to_surface(code, cfg, &record).ok();
    RestartResult { record, evaluations }
}

const DESCENT_STEPS: usize = 200;

/// Builds a record by bisecting along `direction` to tolerance `tol`.
pub fn surface_record(code: &ParityCheckCode, cfg: &SearchConfig, target: usize, direction: &[f64], tol: f64) -> Option<InstantonRecord> {
    let u = normalized(direction)?;
    let mut ray = RaySearch::from_config(code, cfg, target).with_tolerance(tol);
    let l = ray.ray_length(&u)?;
    let xi: Vec<f64> = u.iter().map(|x| x * l).collect();
    Some(InstantonRecord {
        length: cfg.channel.noise_length(&xi),
        xi,
        target_bit: target,
        n_it: cfg.n_it,
        channel: cfg.channel,
    })
}

/// Tolerance of [`polish_to_surface`] along the ray.
pub const POLISH_TOL: f64 = 1e-10;

/// Re-bisects along the record's own ray so that the surface crossing is
/// resolved to [`POLISH_TOL`], and recomputes the length.
pub fn polish_to_surface(code: &ParityCheckCode, cfg: &SearchConfig, record: &InstantonRecord) -> Result<InstantonRecord, SearchError> {
    if record.target_bit >= code.n_bits() {
        return Err(SearchError::TargetOutOfRange {
            bit: record.target_bit,
            n_bits: code.n_bits(),
        });
    }
    let cfg = SearchConfig {
        channel: record.channel,
        n_it: record.n_it,
        max_ray: cfg.max_ray.max(2.0 * l2_norm(&record.xi)),
        ..cfg.clone()
    };
    surface_record(code, &cfg, record.target_bit, &record.xi, POLISH_TOL).ok_or(SearchError::NoCrossing)
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Pooled result of [`amoeba_minimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    /// Targets actually searched.
    pub targets: Vec<usize>,
    /// Length reached by each restart (target-major order), `None` when the
    /// restart found no crossing.
    pub restart_lengths: Vec<Option<f64>>,
    /// Successful records sorted by length.
    pub records: Vec<InstantonRecord>,
    pub evaluations: u64,
}

impl SearchOutcome {
    pub fn best(&self) -> Option<&InstantonRecord> {
        self.records.first()
    }

    pub fn attempts(&self) -> usize {
        self.restart_lengths.len()
    }

    pub fn successes(&self) -> usize {
        self.restart_lengths.iter().filter(|l| l.is_some()).count()
    }

    /// Best length after each restart, in restart order.
    pub fn best_so_far(&self) -> Vec<f64> {
        let mut best = f64::INFINITY;
        self.restart_lengths
            .iter()
            .map(|l| {
                if let Some(l) = l {
                    best = best.min(*l);
                }
                best
            })
            .collect()
    }

    /// Records with distinct (target, support, length), keeping the first of
    /// each group.
    pub fn distinct_records(&self) -> Vec<&InstantonRecord> {
        let mut seen = std::collections::HashSet::new();
        self.records
            .iter()
            .filter(|r| {
                let support: Vec<usize> = (0..r.xi.len()).filter(|&i| r.xi[i].abs() > 1e-3).collect();
                seen.insert((r.target_bit, support, (r.length * 1e6).round() as i64))
            })
            .collect()
    }
}

/// Runs `cfg.restarts` restarts for every target and pools the records.
/// Restarts run concurrently; each derives its own generator from the
/// master seed, so the outcome does not depend on the worker count.
pub fn amoeba_minimize(code: &ParityCheckCode, cfg: &SearchConfig) -> Result<SearchOutcome, SearchError> {
    let targets = cfg.target_bits(code);
    amoeba_minimize_targets(code, cfg, &targets)
}

/// [`amoeba_minimize`] over an explicit target list.
pub fn amoeba_minimize_targets(code: &ParityCheckCode, cfg: &SearchConfig, targets: &[usize]) -> Result<SearchOutcome, SearchError> {
    cfg.validate(code)?;
    if let Some(&bit) = targets.iter().find(|&&b| b >= code.n_bits()) {
        return Err(SearchError::TargetOutOfRange { bit, n_bits: code.n_bits() });
    }
    let trees: Vec<Option<ComputationalTree>> = targets
        .iter()
        .map(|&t| (cfg.n_it <= MAX_DESCENT_DEPTH).then(|| ComputationalTree::unwrap(code, t, cfg.n_it).ok()).flatten())
        .collect();
    let results = map_indexed(targets.len() * cfg.restarts, |job| {
        let (ti, k) = (job / cfg.restarts, job % cfg.restarts);
        let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, targets[ti], k));
        amoeba_restart(code, cfg, targets[ti], trees[ti].as_ref(), &mut rng)
    });
    let evaluations = results.iter().map(|r| r.evaluations).sum();
    let restart_lengths = results.iter().map(|r| r.record.as_ref().map(|x| x.length)).collect();
    let mut records: Vec<InstantonRecord> = results.into_iter().filter_map(|r| r.record).collect();
    records.sort_by(|a, b| a.length.total_cmp(&b.length).then(a.target_bit.cmp(&b.target_bit)));
    Ok(SearchOutcome {
        targets: targets.to_vec(),
        restart_lengths,
        records,
        evaluations,
    })
}

/// Seed of restart `k` for `target`, derived from the master seed.
pub fn restart_seed(master: u64, target: usize, k: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(((target as u64) << 32) | k as u64);
    rng.random()
}

/// Point minimizing the channel weight on the linear piece
/// `sum_i n_i h_i(xi) = 0` described by `n`: for Laplacian noise, bits are
/// filled up to `xi = 2` in decreasing order of `n_i`; for Gaussian noise,
/// `xi` is proportional to `n`.
pub fn piece_optimum(channel: &ChannelModel, n: &[i64]) -> Option<Vec<f64>> {
    let total: i64 = n.iter().sum();
    if total <= 0 {
        return None;
    }
    match channel.kind {
        ChannelKind::Gaussian => {
            let sq: i64 = n.iter().map(|x| x * x).sum();
            Some(n.iter().map(|&x| x as f64 * total as f64 / sq as f64).collect())
        }
        ChannelKind::Laplacian => {
            let mut order: Vec<usize> = (0..n.len()).filter(|&i| n[i] > 0).collect();
            order.sort_by(|&a, &b| n[b].cmp(&n[a]).then(a.cmp(&b)));
            let mut need = total as f64;
            let mut xi = vec![0.0; n.len()];
            let mut k = 0;
            while k < order.len() && need > 0.0 {
                // bits sharing the same coefficient split the remainder evenly
                let group: Vec<usize> = order[k..].iter().copied().take_while(|&i| n[i] == n[order[k]]).collect();
                let weight = n[group[0]] as f64;
                let per_bit = (need / (weight * group.len() as f64)).min(2.0);
                for &i in &group {
                    xi[i] = per_bit;
                }
                need -= per_bit * weight * group.len() as f64;
                k += group.len();
            }
            (need <= 1e-12).then_some(xi)
        }
    }
}

/// Local descent across the linear pieces of the error surface. At each
/// step the surface point is colored on the good side of the surface, the
/// optimum of that piece is computed, and the segment towards it is
/// searched (each candidate projected back onto the surface along its own
/// ray). Stops when no candidate shortens the point.
pub fn descend_pieces(code: &ParityCheckCode, cfg: &SearchConfig, tree: &ComputationalTree, mut xi: Vec<f64>, max_steps: usize) -> (Vec<f64>, f64) {
    let target = tree.root_bit;
    let mut ray = RaySearch::from_config(code, cfg, target);
    let weight = |xi: &[f64]| cfg.channel.noise_length(xi);
    let mut best = weight(&xi);
    for _ in 0..max_steps {
        let inside: Vec<f64> = xi.iter().map(|x| x * (1.0 - 1e-9)).collect();
        let h = cfg.channel.log_likelihoods(&inside);
        let Ok(dec) = tree.decompose_center_lenient(code, &h) else { break };
        let Some(opt) = piece_optimum(&cfg.channel, &dec.n_coeffs) else { break };
        let mut improved = None;
        let mut t = 1.0;
        for _ in 0..8 {
            let q: Vec<f64> = xi.iter().zip(&opt).map(|(a, b)| a + t * (b - a)).collect();
            if let Some(u) = normalized(&q) {
                if let Some(l) = ray.ray_length_from(&u, l2_norm(&q)) {
                    let cand: Vec<f64> = u.iter().map(|x| x * l).collect();
                    let w = weight(&cand);
                    if w < best - 1e-12 && improved.as_ref().is_none_or(|(bw, _)| w < *bw) {
                        improved = Some((w, cand));
                    }
                }
            }
            if improved.is_some() {
                break;
            }
            t *= 0.5;
        }
        match improved {
            Some((w, cand)) => {
                best = w;
                xi = cand;
            }
            None => break,
        }
    }
    (xi, best)
}
