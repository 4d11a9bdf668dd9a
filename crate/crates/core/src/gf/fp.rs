//! Dense polynomials over a prime field F_p, used to pick and test tower moduli.
//!
//! Coefficients are `u32` residues, lowest degree first, with no trailing zeros.

pub(crate) fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub(crate) fn prime_factors(mut n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

pub(crate) fn pow_mod(base: u32, mut exp: u32, p: u32) -> u32 {
    let p64 = p as u64;
    let mut acc = 1u64 % p64;
    let mut b = base as u64 % p64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p64;
        }
        b = b * b % p64;
        exp >>= 1;
    }
    acc as u32
}

pub(crate) fn sub(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let n = a.len().max(b.len());
    let mut out: Vec<u32> = (0..n)
        .map(|i| {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            (x + p - y) % p
        })
        .collect();
    trim(&mut out);
    out
}

pub(crate) fn mul(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = (out[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let mut out: Vec<u32> = out.into_iter().map(|v| v as u32).collect();
    trim(&mut out);
    out
}

/// Remainder of `a` modulo a nonzero `m`.
pub(crate) fn rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    divrem(a, m, p).1
}

pub(crate) fn divrem(a: &[u32], m: &[u32], p: u32) -> (Vec<u32>, Vec<u32>) {
    assert!(!m.is_empty(), "division by the zero polynomial");
    let mut r = a.to_vec();
    trim(&mut r);
    if r.len() < m.len() {
        return (Vec::new(), r);
    }
    let dm = m.len() - 1;
    let lead_inv = inv_mod(m[dm], p) as u64;
    let mut q = vec![0u32; r.len() - dm];
    while r.len() > dm && !r.is_empty() {
        let shift = r.len() - 1 - dm;
        let factor = (*r.last().unwrap() as u64 * lead_inv % p as u64) as u32;
        q[shift] = factor;
        for (j, &mj) in m.iter().enumerate() {
            let t = (factor as u64 * mj as u64 % p as u64) as u32;
            r[shift + j] = (r[shift + j] + p - t) % p;
        }
        trim(&mut r);
    }
    trim(&mut q);
    (q, r)
}

pub(crate) fn gcd(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    trim(&mut x);
    trim(&mut y);
    while !y.is_empty() {
        let r = rem(&x, &y, p);
        x = y;
        y = r;
    }
    if let Some(&lead) = x.last() {
        let li = inv_mod(lead, p) as u64;
        for c in x.iter_mut() {
            *c = (*c as u64 * li % p as u64) as u32;
        }
    }
    x
}

/// Inverse of `a` modulo `m` by the extended Euclidean algorithm, when it exists.
pub(crate) fn inverse_mod(a: &[u32], m: &[u32], p: u32) -> Option<Vec<u32>> {
    let mut r0 = m.to_vec();
    let mut r1 = rem(a, m, p);
    let mut s0: Vec<u32> = Vec::new();
    let mut s1: Vec<u32> = vec![1];
    trim(&mut r0);
    while !r1.is_empty() {
        let (q, r) = divrem(&r0, &r1, p);
        let s = sub(&s0, &mul(&q, &s1, p), p);
        r0 = std::mem::replace(&mut r1, r);
        s0 = std::mem::replace(&mut s1, s);
    }
    if r0.len() != 1 {
        return None;
    }
    let li = inv_mod(r0[0], p) as u64;
    let out: Vec<u32> = s0.iter().map(|&c| (c as u64 * li % p as u64) as u32).collect();
    Some(rem(&out, m, p))
}

fn mulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    rem(&mul(a, b, p), m, p)
}

/// `base^(p^k)` reduced mod `m`, by k successive p-th powers.
fn frobenius_iter(base: &[u32], k: u32, m: &[u32], p: u32) -> Vec<u32> {
    let mut cur = base.to_vec();
    for _ in 0..k {
        cur = pow_poly_mod(&cur, p as u64, m, p);
    }
    cur
}

fn pow_poly_mod(base: &[u32], mut exp: u64, m: &[u32], p: u32) -> Vec<u32> {
    let mut acc = vec![1u32];
    let mut b = rem(base, m, p);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mulmod(&acc, &b, m, p);
        }
        b = mulmod(&b, &b, m, p);
        exp >>= 1;
    }
    rem(&acc, m, p)
}

/// Rabin's test: `f` monic of degree d is irreducible iff x^(p^d) = x mod f
/// and gcd(x^(p^(d/l)) - x, f) = 1 for every prime l dividing d.
pub(crate) fn is_irreducible(f: &[u32], p: u32) -> bool {
    let d = match f.len() {
        0 | 1 => return false,
        n => (n - 1) as u32,
    };
    if d == 1 {
        return true;
    }
    let x = vec![0, 1];
    for l in prime_factors(d) {
        let h = frobenius_iter(&x, d / l, f, p);
        let g = gcd(&sub(&h, &x, p), f, p);
        if g.len() != 1 {
            return false;
        }
    }
    sub(&frobenius_iter(&x, d, f, p), &x, p).is_empty()
}

/// Ben-Or's test: no irreducible factor of degree k ≤ d/2 divides `f`.
/// Exits early on the first small factor, which is what makes the search fast.
fn ben_or(f: &[u32], p: u32) -> bool {
    let d = f.len() as u32 - 1;
    let x = vec![0, 1];
    let mut h = x.clone();
    for _ in 1..=d / 2 {
        h = pow_poly_mod(&h, p as u64, f, p);
        if gcd(&sub(&h, &x, p), f, p).len() != 1 {
            return false;
        }
    }
    true
}

fn has_root(f: &[u32], p: u32) -> bool {
    (0..p as u64).any(|x| {
        f.iter()
            .rev()
            .fold(0u64, |acc, &c| (acc * x + c as u64) % p as u64)
            == 0
    })
}

/// Lexicographically smallest monic irreducible of degree `d`, comparing the
/// coefficient tuples (c_0, c_1, ..., c_{d-1}) with c_0 most significant.
pub(crate) fn smallest_irreducible(p: u32, d: u32) -> Vec<u32> {
    let d = d as usize;
    let mut low = vec![0u32; d];
    // every candidate with c_0 = 0 is divisible by x
    if d > 1 {
        low[0] = 1;
    }
    loop {
        let mut f = low.clone();
        f.push(1);
        if (d == 1 || !has_root(&f, p)) && ben_or(&f, p) {
            debug_assert!(is_irreducible(&f, p));
            return f;
        }
        // increment with c_{d-1} as the least significant digit
        let mut i = d;
        loop {
            assert!(i > 0, "no irreducible polynomial of degree {d} over F_{p}");
            i -= 1;
            low[i] += 1;
            if low[i] < p {
                break;
            }
            low[i] = 0;
        }
    }
}
