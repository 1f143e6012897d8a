//! Sparse parity-check codes and their Tanner graphs.
//!
//! A [`ParityCheckCode`] stores the check-to-bit and bit-to-check adjacency
//! lists together with a flat edge numbering used by the decoder. Edges are
//! numbered check-major: the members of check 0 come first, in the order of
//! `check_members[0]`, then check 1 and so on.

use std::fmt::Write as _;

use thiserror::Error;

/// Yields the next nonblank line as `(line number, fields)`.
type RowReader<'a> = dyn FnMut(&str) -> Result<(usize, Vec<usize>), CodeError> + 'a;

/// Errors raised while building or parsing a code.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodeError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("bit index {bit} out of range for a code with {n_bits} bits")]
    BitOutOfRange { bit: usize, n_bits: usize },
    #[error("bit {bit} appears twice in check {check}")]
    RepeatedBit { check: usize, bit: usize },
    #[error("word has length {got}, code has {expected} bits")]
    LengthMismatch { expected: usize, got: usize },
}

/// Binary linear code given by a sparse parity-check matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckCode {
    n_bits: usize,
    check_members: Vec<Vec<usize>>,
    bit_members: Vec<Vec<usize>>,
    // check-major edge layout
    check_offsets: Vec<usize>,
    edge_bit: Vec<usize>,
    edge_check: Vec<usize>,
    bit_edges: Vec<Vec<usize>>,
}

impl ParityCheckCode {
    /// Builds a code from per-check member lists (0-based bit indices).
    pub fn from_checks(n_bits: usize, check_members: Vec<Vec<usize>>) -> Result<Self, CodeError> {
        let mut bit_members = vec![Vec::new(); n_bits];
        for (check, members) in check_members.iter().enumerate() {
            for (pos, &bit) in members.iter().enumerate() {
                if bit >= n_bits {
                    return Err(CodeError::BitOutOfRange { bit, n_bits });
                }
                if members[..pos].contains(&bit) {
                    return Err(CodeError::RepeatedBit { check, bit });
                }
                bit_members[bit].push(check);
            }
        }
        let mut check_offsets = Vec::with_capacity(check_members.len() + 1);
        let mut edge_bit = Vec::new();
        let mut edge_check = Vec::new();
        let mut bit_edges = vec![Vec::new(); n_bits];
        check_offsets.push(0);
        for (check, members) in check_members.iter().enumerate() {
            for &bit in members {
                bit_edges[bit].push(edge_bit.len());
                edge_bit.push(bit);
                edge_check.push(check);
            }
            check_offsets.push(edge_bit.len());
        }
        Ok(ParityCheckCode {
            n_bits,
            check_members,
            bit_members,
            check_offsets,
            edge_bit,
            edge_check,
            bit_edges,
        })
    }

    /// The (155,64,20) Tanner code: a 3x5 array of 31x31 circulant
    /// permutation matrices, block (i, j) shifted by 5^i * 2^j mod 31.
    ///
    /// Bit `31*j + x` belongs to check `31*i + y` when `x = y + shift(i, j) mod 31`.
    pub fn tanner_155() -> Self {
        const P: usize = 31;
        let mut checks = Vec::with_capacity(3 * P);
        for i in 0..3u32 {
            for y in 0..P {
                let members = (0..5u32)
                    .map(|j| {
                        let shift = (5usize.pow(i) * 2usize.pow(j)) % P;
                        j as usize * P + (y + shift) % P
                    })
                    .collect();
                checks.push(members);
            }
        }
        Self::from_checks(5 * P, checks).expect("circulant construction is valid")
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn n_checks(&self) -> usize {
        self.check_members.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edge_bit.len()
    }

    /// Bits taking part in `check`.
    pub fn check_members(&self, check: usize) -> &[usize] {
        &self.check_members[check]
    }

    /// Checks that `bit` takes part in.
    pub fn bit_members(&self, bit: usize) -> &[usize] {
        &self.bit_members[bit]
    }

    pub fn checks(&self) -> &[Vec<usize>] {
        &self.check_members
    }

    /// Edge index range belonging to `check`.
    pub fn check_edges(&self, check: usize) -> std::ops::Range<usize> {
        self.check_offsets[check]..self.check_offsets[check + 1]
    }

    /// Edge indices incident to `bit`, in the order of [`Self::bit_members`].
    pub fn bit_edges(&self, bit: usize) -> &[usize] {
        &self.bit_edges[bit]
    }

    pub fn edge_bit(&self, edge: usize) -> usize {
        self.edge_bit[edge]
    }

    pub fn edge_check(&self, edge: usize) -> usize {
        self.edge_check[edge]
    }

    /// Edge joining `bit` and `check`, if any.
    pub fn edge_between(&self, bit: usize, check: usize) -> Option<usize> {
        self.bit_edges[bit]
            .iter()
            .copied()
            .find(|&e| self.edge_check[e] == check)
    }

    pub fn bit_degrees(&self) -> Vec<usize> {
        self.bit_members.iter().map(Vec::len).collect()
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        self.check_members.iter().map(Vec::len).collect()
    }

    /// Rank of the parity-check matrix over GF(2).
    pub fn gf2_rank(&self) -> usize {
        let words = self.n_bits.div_ceil(64);
        let mut rows: Vec<Vec<u64>> = self
            .check_members
            .iter()
            .map(|members| {
                let mut row = vec![0u64; words];
                for &b in members {
                    row[b / 64] ^= 1 << (b % 64);
                }
                row
            })
            .collect();
        let mut rank = 0;
        for col in 0..self.n_bits {
            let (w, mask) = (col / 64, 1u64 << (col % 64));
            let Some(pivot) = (rank..rows.len()).find(|&r| rows[r][w] & mask != 0) else {
                continue;
            };
            rows.swap(rank, pivot);
            let pivot_row = rows[rank].clone();
            for (r, row) in rows.iter_mut().enumerate() {
                if r != rank && row[w] & mask != 0 {
                    row.iter_mut().zip(&pivot_row).for_each(|(a, b)| *a ^= b);
                }
            }
            rank += 1;
        }
        rank
    }

    /// Per-check parity of a +/-1 word: the product of the word's entries
    /// over each check. All entries +1 means `word` is a codeword.
    pub fn syndrome(&self, word: &[i8]) -> Result<Vec<i8>, CodeError> {
        if word.len() != self.n_bits {
            return Err(CodeError::LengthMismatch {
                expected: self.n_bits,
                got: word.len(),
            });
        }
        Ok(self
            .check_members
            .iter()
            .map(|members| members.iter().map(|&b| word[b]).product())
            .collect())
    }

    pub fn is_codeword(&self, word: &[i8]) -> Result<bool, CodeError> {
        Ok(self.syndrome(word)?.iter().all(|&s| s == 1))
    }

    /// Serialises the code in alist format with ascending 1-based indices.
    pub fn to_alist(&self) -> String {
        let bit_deg = self.bit_degrees();
        let check_deg = self.check_degrees();
        let max_bit = bit_deg.iter().copied().max().unwrap_or(0);
        let max_check = check_deg.iter().copied().max().unwrap_or(0);
        let join = |v: &[usize]| {
            v.iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(" ")
        };
        let padded = |list: &[usize], width: usize| {
            let mut sorted: Vec<usize> = list.iter().map(|x| x + 1).collect();
            sorted.sort_unstable();
            sorted.resize(width, 0);
            join(&sorted)
        };
        let mut out = String::new();
        let _ = writeln!(out, "{} {}", self.n_bits, self.n_checks());
        let _ = writeln!(out, "{max_bit} {max_check}");
        let _ = writeln!(out, "{}", join(&bit_deg));
        let _ = writeln!(out, "{}", join(&check_deg));
        for members in &self.bit_members {
            let _ = writeln!(out, "{}", padded(members, max_bit));
        }
        for members in &self.check_members {
            let _ = writeln!(out, "{}", padded(members, max_check));
        }
        out
    }

    /// Parses an alist document. Padding zeros are accepted anywhere after
    /// the listed indices of a row. Member lists come back sorted ascending.
    pub fn from_alist(text: &str) -> Result<Self, CodeError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_row = |what: &str| -> Result<(usize, Vec<usize>), CodeError> {
            let (line, content) = lines.next().ok_or(CodeError::Parse {
                line: 0,
                msg: format!("unexpected end of input while reading {what}"),
            })?;
            let nums = content
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<usize>().map_err(|_| CodeError::Parse {
                        line,
                        msg: format!("invalid integer {tok:?} in {what}"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((line, nums))
        };

        let (line, header) = next_row("header")?;
        let [n, m] = header[..] else {
            return Err(CodeError::Parse {
                line,
                msg: "header must be \"N M\"".into(),
            });
        };
        let (line, maxes) = next_row("max degrees")?;
        let [max_bit, max_check] = maxes[..] else {
            return Err(CodeError::Parse {
                line,
                msg: "max-degree line must have two entries".into(),
            });
        };
        let read_degrees = |count: usize, max: usize, row: (usize, Vec<usize>), what: &str| {
            let (line, degs) = row;
            if degs.len() != count {
                return Err(CodeError::Parse {
                    line,
                    msg: format!("expected {count} {what} degrees, found {}", degs.len()),
                });
            }
            if let Some(&d) = degs.iter().find(|&&d| d > max) {
                return Err(CodeError::Parse {
                    line,
                    msg: format!("{what} degree {d} exceeds declared maximum {max}"),
                });
            }
            Ok(degs)
        };
        let bit_deg = read_degrees(n, max_bit, next_row("bit degrees")?, "bit")?;
        let check_deg = read_degrees(m, max_check, next_row("check degrees")?, "check")?;

        let read_lists = |next_row: &mut RowReader,
                          degs: &[usize],
                          range: usize,
                          what: &str| {
            let mut lists = Vec::with_capacity(degs.len());
            for &deg in degs {
                let (line, row) = next_row(what)?;
                let (listed, padding) = row.split_at(row.iter().position(|&x| x == 0).unwrap_or(row.len()));
                if padding.iter().any(|&x| x != 0) {
                    return Err(CodeError::Parse {
                        line,
                        msg: "nonzero index after padding".into(),
                    });
                }
                if listed.len() != deg {
                    return Err(CodeError::Parse {
                        line,
                        msg: format!("expected {deg} indices, found {}", listed.len()),
                    });
                }
                if let Some(&bad) = listed.iter().find(|&&x| x > range) {
                    return Err(CodeError::Parse {
                        line,
                        msg: format!("index {bad} out of range 1..={range}"),
                    });
                }
                let mut list: Vec<usize> = listed.iter().map(|x| x - 1).collect();
                list.sort_unstable();
                if list.windows(2).any(|w| w[0] == w[1]) {
                    return Err(CodeError::Parse {
                        line,
                        msg: "repeated index".into(),
                    });
                }
                lists.push((line, list));
            }
            Ok::<_, CodeError>(lists)
        };
        let bit_lists = read_lists(&mut next_row, &bit_deg, m, "bit row")?;
        let check_lists = read_lists(&mut next_row, &check_deg, n, "check row")?;

        let checks: Vec<Vec<usize>> = check_lists.iter().map(|(_, l)| l.clone()).collect();
        let code = Self::from_checks(n, checks)?;
        for (bit, (line, list)) in bit_lists.iter().enumerate() {
            if code.bit_members(bit) != list.as_slice() {
                return Err(CodeError::Parse {
                    line: *line,
                    msg: format!("bit {} adjacency disagrees with the check rows", bit + 1),
                });
            }
        }
        Ok(code)
    }
}
