//! Small dense linear algebra over F_p (row-major `Vec<Vec<u32>>`).

use super::fp::inv_mod;

pub(crate) type Matrix = Vec<Vec<u32>>;

/// Row-reduce `a` in place to reduced echelon form; returns the pivot columns.
/// Every row operation is mirrored onto `track` when given.
pub(crate) fn rref(a: &mut Matrix, p: u32, mut track: Option<&mut Matrix>) -> Vec<usize> {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let p64 = p as u64;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(sel) = (r..rows).find(|&i| a[i][c] != 0) else {
            continue;
        };
        a.swap(r, sel);
        if let Some(t) = track.as_deref_mut() {
            t.swap(r, sel);
        }
        let inv = inv_mod(a[r][c], p) as u64;
        for v in a[r].iter_mut() {
            *v = (*v as u64 * inv % p64) as u32;
        }
        if let Some(t) = track.as_deref_mut() {
            for v in t[r].iter_mut() {
                *v = (*v as u64 * inv % p64) as u32;
            }
        }
        for i in 0..rows {
            if i == r || a[i][c] == 0 {
                continue;
            }
            let f = a[i][c] as u64;
            let (src, dst) = pick(a, r, i);
            for (d, s) in dst.iter_mut().zip(src.iter()) {
                *d = ((*d as u64 + p64 - f * *s as u64 % p64) % p64) as u32;
            }
            if let Some(t) = track.as_deref_mut() {
                let (src, dst) = pick(t, r, i);
                for (d, s) in dst.iter_mut().zip(src.iter()) {
                    *d = ((*d as u64 + p64 - f * *s as u64 % p64) % p64) as u32;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn pick(m: &mut Matrix, src: usize, dst: usize) -> (&Vec<u32>, &mut Vec<u32>) {
    if src < dst {
        let (lo, hi) = m.split_at_mut(dst);
        (&lo[src], &mut hi[0])
    } else {
        let (lo, hi) = m.split_at_mut(src);
        (&hi[0], &mut lo[dst])
    }
}

/// Basis of {v : a v = 0}, returned in reduced echelon form (as rows).
pub(crate) fn nullspace(a: &Matrix, p: u32) -> (Matrix, Vec<usize>) {
    let cols = a.first().map_or(0, |r| r.len());
    let mut red = a.clone();
    let pivots = rref(&mut red, p, None);
    let mut basis: Matrix = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0u32; cols];
        v[free] = 1;
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = (p - red[row][free]) % p;
        }
        basis.push(v);
    }
    let piv = rref(&mut basis, p, None);
    (basis, piv)
}

/// Right inverse of `a` on its image: `apply(solution, y)` solves `a x = y`
/// for every `y` in the column space, and `consistency` rows vanish on `y`
/// exactly when it lies there.
pub(crate) struct Preimage {
    pub solution: Matrix,
    pub consistency: Matrix,
}

pub(crate) fn preimage_solver(a: &Matrix, p: u32) -> Preimage {
    let rows = a.len();
    let cols = a.first().map_or(0, |r| r.len());
    let mut red = a.clone();
    let mut track: Matrix = (0..rows)
        .map(|i| (0..rows).map(|j| u32::from(i == j)).collect())
        .collect();
    let pivots = rref(&mut red, p, Some(&mut track));
    let mut solution = vec![vec![0u32; rows]; cols];
    for (i, &pc) in pivots.iter().enumerate() {
        solution[pc] = track[i].clone();
    }
    let consistency = track[pivots.len()..].to_vec();
    Preimage { solution, consistency }
}

pub(crate) fn mat_vec(m: &Matrix, v: &[u32], p: u32) -> Vec<u32> {
    m.iter()
        .map(|row| {
            (row.iter()
                .zip(v)
                .map(|(&a, &b)| a as u64 * b as u64)
                .sum::<u64>()
                % p as u64) as u32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nullspace_of_rank_one() {
        let a = vec![vec![1, 1, 0], vec![2, 2, 0]];
        let (basis, piv) = nullspace(&a, 3);
        assert_eq!(basis.len(), 2);
        for v in &basis {
            assert!(mat_vec(&a, v, 3).iter().all(|&x| x == 0));
        }
        assert_eq!(piv.len(), 2);
    }

    #[test]
    fn preimage_round_trip() {
        let a = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]];
        // over F_2 rank 2, image = {y : y0 + y1 + y2 = 0}
        let s = preimage_solver(&a, 2);
        assert_eq!(s.consistency.len(), 1);
        let y = vec![1, 1, 0];
        assert!(mat_vec(&s.consistency, &y, 2).iter().all(|&v| v == 0));
        let x = mat_vec(&s.solution, &y, 2);
        assert_eq!(mat_vec(&a, &x, 2), y);
        let bad = vec![1, 0, 0];
        assert!(mat_vec(&s.consistency, &bad, 2).iter().any(|&v| v != 0));
    }
}
