//! Computational trees and the integer decomposition of the center
//! posterior.
//!
//! Unwrapping the Tanner graph from a root bit for `depth` generations gives
//! a tree on which min-sum is exact: the posterior at the root after `depth`
//! iterations equals the graph decoder's posterior at the root bit. On the
//! tree every check forwards its smallest-magnitude input; following those
//! choices from the root down marks a set of "colored" bit replicas, and the
//! center posterior is `sum_i n_i h_i`, with `n_i` the signed count of colored
//! replicas of bit `i`.

use thiserror::Error;

use crate::code_model::ParityCheckCode;

#[derive(Debug, Error, PartialEq)]
pub enum TreeError {
    #[error("bit {bit} out of range for a code with {n_bits} bits")]
    BitOutOfRange { bit: usize, n_bits: usize },
    #[error("tree depth must be at least 1")]
    ZeroDepth,
    #[error("log-likelihood vector has length {got}, code has {expected} bits")]
    LengthMismatch { expected: usize, got: usize },
    #[error("tie at tree check node {check_node} (graph check {check}): inputs {a} and {b} share |message| = {value}")]
    Tie {
        check_node: usize,
        check: usize,
        a: usize,
        b: usize,
        value: f64,
    },
    #[error("decomposition mismatch: sum n_i h_i = {linear} but tree posterior = {posterior}")]
    Mismatch { linear: f64, posterior: f64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitReplica {
    pub bit: usize,
    pub generation: usize,
    /// Index of the parent check node; `None` for the root.
    pub parent: Option<usize>,
    pub children: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckReplica {
    pub check: usize,
    pub parent: usize,
    pub children: Vec<usize>,
}

/// Unwrapped Tanner graph. Bit replicas are stored in generation order
/// (breadth first), so children always have larger indices than parents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComputationalTree {
    pub root_bit: usize,
    pub depth: usize,
    pub bits: Vec<BitReplica>,
    pub checks: Vec<CheckReplica>,
}

impl ComputationalTree {
    pub fn unwrap(code: &ParityCheckCode, root_bit: usize, depth: usize) -> Result<Self, TreeError> {
        if root_bit >= code.n_bits() {
            return Err(TreeError::BitOutOfRange {
                bit: root_bit,
                n_bits: code.n_bits(),
            });
        }
        if depth == 0 {
            return Err(TreeError::ZeroDepth);
        }
        let mut bits = vec![BitReplica {
            bit: root_bit,
            generation: 0,
            parent: None,
            children: Vec::new(),
        }];
        let mut checks: Vec<CheckReplica> = Vec::new();
        let mut frontier = vec![0usize];
        for generation in 1..=depth {
            let mut next = Vec::new();
            for &node in &frontier {
                let bit = bits[node].bit;
                let from_check = bits[node].parent.map(|c| checks[c].check);
                for &check in code.bit_members(bit) {
                    if Some(check) == from_check {
                        continue;
                    }
                    let cnode = checks.len();
                    checks.push(CheckReplica {
                        check,
                        parent: node,
                        children: Vec::new(),
                    });
                    bits[node].children.push(cnode);
                    for &child_bit in code.check_members(check) {
                        if child_bit == bit {
                            continue;
                        }
                        let b = bits.len();
                        bits.push(BitReplica {
                            bit: child_bit,
                            generation,
                            parent: Some(cnode),
                            children: Vec::new(),
                        });
                        checks[cnode].children.push(b);
                        next.push(b);
                    }
                }
            }
            frontier = next;
        }
        Ok(ComputationalTree {
            root_bit,
            depth,
            bits,
            checks,
        })
    }

    /// Number of bit replicas in each generation.
    pub fn generation_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.depth + 1];
        for b in &self.bits {
            sizes[b.generation] += 1;
        }
        sizes
    }

    /// Upward messages of every bit replica, leaves to root. Entry 0 is the
    /// center posterior.
    pub fn upward_messages(&self, h: &[f64]) -> Vec<f64> {
        let mut msg = vec![0.0; self.bits.len()];
        for node in (0..self.bits.len()).rev() {
            let rep = &self.bits[node];
            let mut total = h[rep.bit];
            for &c in &rep.children {
                total += self.check_output(c, &msg).0;
            }
            msg[node] = total;
        }
        msg
    }

    /// Output of a check node and the child replica achieving the minimum
    /// (first one in child order when magnitudes tie).
    fn check_output(&self, cnode: usize, msg: &[f64]) -> (f64, usize) {
        let mut negative = false;
        let mut best = (f64::INFINITY, usize::MAX);
        for &child in &self.checks[cnode].children {
            let m = msg[child];
            negative ^= m < 0.0;
            if m.abs() < best.0 {
                best = (m.abs(), child);
            }
        }
        (if negative { -best.0 } else { best.0 }, best.1)
    }

    /// Center posterior obtained by min-sum on the tree.
    pub fn center_posterior(&self, code: &ParityCheckCode, h: &[f64]) -> Result<f64, TreeError> {
        check_len(code, h)?;
        Ok(self.upward_messages(h)[0])
    }

    /// Colors the tree for input `h` and expresses the center posterior as
    /// `sum_i n_i h_i`. Exact magnitude ties between the minimal input of a
    /// check and another input are reported as [`TreeError::Tie`].
    pub fn decompose_center(&self, code: &ParityCheckCode, h: &[f64]) -> Result<Decomposition, TreeError> {
        self.decompose(code, h, true)
    }

    /// Like [`Self::decompose_center`] but resolves magnitude ties in favour
    /// of the first child in tree order instead of failing.
    pub fn decompose_center_lenient(&self, code: &ParityCheckCode, h: &[f64]) -> Result<Decomposition, TreeError> {
        self.decompose(code, h, false)
    }

    fn decompose(&self, code: &ParityCheckCode, h: &[f64], strict: bool) -> Result<Decomposition, TreeError> {
        check_len(code, h)?;
        let msg = self.upward_messages(h);
        let mut signature = vec![0i64; self.bits.len()];
        let mut colored = vec![false; self.bits.len()];
        signature[0] = 1;
        colored[0] = true;
        // bits are in breadth-first order, so parents are colored before children
        for node in 0..self.bits.len() {
            if !colored[node] {
                continue;
            }
            for &cnode in &self.bits[node].children {
                let check = &self.checks[cnode];
                let mut order: Vec<usize> = check.children.clone();
                order.sort_by(|&a, &b| msg[a].abs().total_cmp(&msg[b].abs()));
                if strict && order.len() > 1 && msg[order[0]].abs() == msg[order[1]].abs() {
                    return Err(TreeError::Tie {
                        check_node: cnode,
                        check: check.check,
                        a: self.bits[order[0]].bit,
                        b: self.bits[order[1]].bit,
                        value: msg[order[0]].abs(),
                    });
                }
                let c = order[0];
                // sign carried from the colored child to the check output
                let negatives = check
                    .children
                    .iter()
                    .filter(|&&o| o != c && msg[o] < 0.0)
                    .count();
                colored[c] = true;
                signature[c] = if negatives % 2 == 1 { -signature[node] } else { signature[node] };
            }
        }

        let mut n_coeffs = vec![0i64; code.n_bits()];
        let mut colored_replicas = Vec::new();
        for node in 0..self.bits.len() {
            if colored[node] {
                n_coeffs[self.bits[node].bit] += signature[node];
                colored_replicas.push(node);
            }
        }
        let linear: f64 = n_coeffs
            .iter()
            .zip(h)
            .map(|(&n, &x)| n as f64 * x)
            .sum();
        let posterior = msg[0];
        if (linear - posterior).abs() > 1e-9 * (1.0 + posterior.abs()) {
            return Err(TreeError::Mismatch { linear, posterior });
        }
        Ok(Decomposition {
            n_coeffs,
            colored_replicas,
            signatures: colored
                .iter()
                .zip(&signature)
                .map(|(&c, &s)| if c { s as i8 } else { 0 })
                .collect(),
            posterior,
        })
    }

    /// Colored-path capacity of the tree: one replica for the root plus one
    /// per check node reachable along colored paths. Equals `sum n_i` when all
    /// signatures are +1.
    pub fn colored_capacity(&self) -> usize {
        // every check node on a colored path colors exactly one child; the
        // colored subtree has the shape of the tree with check fan-out 1
        fn count(tree: &ComputationalTree, node: usize) -> usize {
            1 + tree.bits[node]
                .children
                .iter()
                .map(|&c| count(tree, tree.checks[c].children[0]))
                .sum::<usize>()
        }
        count(self, 0)
    }

    /// Verifies that a +/-1 assignment on the replicas satisfies every check
    /// node of the tree (parent and children multiply to +1).
    pub fn is_tree_codeword(&self, values: &[i8]) -> bool {
        values.len() == self.bits.len()
            && self.checks.iter().all(|c| {
                c.children.iter().map(|&b| values[b]).product::<i8>() * values[c.parent] == 1
            })
    }
}

fn check_len(code: &ParityCheckCode, h: &[f64]) -> Result<(), TreeError> {
    if h.len() != code.n_bits() {
        return Err(TreeError::LengthMismatch {
            expected: code.n_bits(),
            got: h.len(),
        });
    }
    Ok(())
}

/// Result of coloring a computational tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// Signed replica counts per original bit.
    pub n_coeffs: Vec<i64>,
    /// Indices of colored bit replicas.
    pub colored_replicas: Vec<usize>,
    /// Per replica: +1/-1 on colored replicas, 0 elsewhere.
    pub signatures: Vec<i8>,
    pub posterior: f64,
}

impl Decomposition {
    /// Signed total `sum_i n_i`.
    pub fn total(&self) -> i64 {
        self.n_coeffs.iter().sum()
    }
}

/// Center posterior evaluated recursively without materializing the tree.
/// Suitable for depths whose trees would not fit in memory.
pub fn center_posterior_recursive(code: &ParityCheckCode, root_bit: usize, depth: usize, h: &[f64]) -> Result<f64, TreeError> {
    check_len(code, h)?;
    if root_bit >= code.n_bits() {
        return Err(TreeError::BitOutOfRange {
            bit: root_bit,
            n_bits: code.n_bits(),
        });
    }
    if depth == 0 {
        return Err(TreeError::ZeroDepth);
    }
    fn up(code: &ParityCheckCode, bit: usize, from: Option<usize>, remaining: usize, h: &[f64]) -> f64 {
        let mut total = h[bit];
        if remaining == 0 {
            return total;
        }
        for &check in code.bit_members(bit) {
            if Some(check) == from {
                continue;
            }
            let mut negative = false;
            let mut min = f64::INFINITY;
            for &child in code.check_members(check) {
                if child == bit {
                    continue;
                }
                let m = up(code, child, Some(check), remaining - 1, h);
                negative ^= m < 0.0;
                min = min.min(m.abs());
            }
            total += if negative { -min } else { min };
        }
        total
    }
    Ok(up(code, root_bit, None, depth, h))
}
