//! Bit permutations preserving a code, used to sweep only one target per
//! orbit.

use std::collections::HashSet;

use crate::code_model::ParityCheckCode;

/// A permutation of bit indices: bit `i` maps to `perm[i]`.
pub type BitPermutation = Vec<usize>;

/// True when `perm` maps every check of `code` onto a check of `code`.
pub fn is_automorphism(code: &ParityCheckCode, perm: &[usize]) -> bool {
    if perm.len() != code.n_bits() {
        return false;
    }
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return false;
        }
    }
    let sorted = |members: &[usize]| {
        let mut v = members.to_vec();
        v.sort_unstable();
        v
    };
    let checks: HashSet<Vec<usize>> = code.checks().iter().map(|c| sorted(c)).collect();
    code.checks().iter().all(|c| {
        let image: Vec<usize> = c.iter().map(|&b| perm[b]).collect();
        checks.contains(&sorted(&image))
    })
}

/// Generators of the symmetry group of the circulant (155,64,20) code in the
/// labeling of [`ParityCheckCode::tanner_155`]: a common cyclic shift of all
/// blocks, multiplication by 2 (cycling the bit blocks) and multiplication by
/// 5 (cycling the check blocks).
pub fn tanner_155_generators() -> Vec<BitPermutation> {
    const P: usize = 31;
    let shift = (0..5 * P).map(|b| (b / P) * P + (b % P + 1) % P).collect();
    let times2 = (0..5 * P).map(|b| ((b / P + 1) % 5) * P + (2 * (b % P)) % P).collect();
    let times5 = (0..5 * P).map(|b| (b / P) * P + (5 * (b % P)) % P).collect();
    vec![shift, times2, times5]
}

/// Candidate generators that are verified automorphisms of `code`. Codes
/// that are not (a relabeling-free copy of) the built-in circulant code get
/// an empty list.
pub fn verified_generators(code: &ParityCheckCode) -> Vec<BitPermutation> {
    if code.n_bits() != 155 {
        return Vec::new();
    }
    tanner_155_generators()
        .into_iter()
        .filter(|g| is_automorphism(code, g))
        .collect()
}

/// Orbits of the bits under the group generated by `generators`, each
/// sorted, ordered by smallest member.
pub fn bit_orbits(n_bits: usize, generators: &[BitPermutation]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n_bits).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for g in generators {
        for (i, &j) in g.iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n_bits];
    for b in 0..n_bits {
        let r = find(&mut parent, b);
        if index[r] == usize::MAX {
            index[r] = orbits.len();
            orbits.push(Vec::new());
        }
        orbits[index[r]].push(b);
    }
    orbits
}

/// One representative (the smallest index) per orbit.
pub fn orbit_representatives(code: &ParityCheckCode) -> Vec<usize> {
    bit_orbits(code.n_bits(), &verified_generators(code))
        .into_iter()
        .map(|o| o[0])
        .collect()
}
