//! Permutations of Z_m as image arrays.

use itertools::Itertools;

/// All permutations of {0, …, m−1}, lexicographic order.
pub fn permutations(m: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..m).permutations(m)
}

/// +1 for even, −1 for odd; parity from the cycle decomposition.
pub fn sign(sigma: &[usize]) -> i64 {
    let mut seen = vec![false; sigma.len()];
    let mut transpositions = 0;
    for start in 0..sigma.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = sigma[i];
            len += 1;
        }
        transpositions += len - 1;
    }
    if transpositions % 2 == 0 {
        1
    } else {
        -1
    }
}

/// μ with μ_d = #{i : σ(i) − i ≡ d mod m}.
pub fn difference_profile(sigma: &[usize]) -> Vec<u32> {
    let m = sigma.len();
    let mut mu = vec![0u32; m];
    for (i, &s) in sigma.iter().enumerate() {
        mu[(s + m - i) % m] += 1;
    }
    mu
}
