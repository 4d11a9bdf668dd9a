//! The polynomials g_{n,q}, defined by Σ_{c∈F_q} (x+c)^n = g_{n,q}(x^q − x),
//! and permutation tests over F_{q^e}.
//!
//! g is available three ways: dense coefficients for small n, the point
//! oracle (solve x^q − x = y in a larger field, then sum), and the weight
//! form as a symmetric function of partial traces when n − 1 has few base-q
//! digits.

pub mod criterion;
pub mod expr;
pub mod registry;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::gf::linalg::{mat_vec, preimage_solver, Matrix};
use crate::gf::{FieldElem, FieldTower, GfError, Level, LinearMap};
use crate::linop::s_poly;
use crate::poly::OrdPoly;

/// Dense expansion is limited to n up to this value.
pub const MAX_DENSE_N: u64 = 10_000;
/// Exhaustive permutation tests are limited to domains of this size.
pub const PP_DOMAIN_CAP: u64 = 1 << 20;
/// Largest admissible n.
pub const MAX_N: u64 = 1 << 63;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GnqError {
    #[error("{what} = {value} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, value: u64, cap: u64 },
    #[error("no preimage field: aux_factor {aux} of the tower is not a multiple of p = {p}")]
    AuxFieldMissing { aux: u32, p: u32 },
    #[error("leading degree {0} is not a multiple of q during extraction")]
    ExtractionFailure(usize),
    #[error("x^q - x = y has no solution in the ambient field")]
    NoPreimage,
    #[error("n - 1 has {count} base-q unit terms, outside {lo}..={hi}")]
    FormNotApplicable { count: u64, lo: u64, hi: u64 },
    #[error(transparent)]
    Field(#[from] GfError),
}

/// n together with its base-q digits (least significant first) and weight.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GnqSpec {
    pub n: u64,
    pub q: u64,
    pub digits: Vec<u64>,
    pub weight: u64,
}

impl GnqSpec {
    pub fn new(n: u64, q: u64) -> Result<Self, GnqError> {
        if n > MAX_N {
            return Err(GnqError::CapExceeded { what: "n", value: n, cap: MAX_N });
        }
        let digits = base_digits(n, q);
        let weight = digits.iter().sum();
        Ok(GnqSpec { n, q, digits, weight })
    }

    /// Digits as `1,3,0,0,1,2`.
    pub fn digit_string(&self) -> String {
        self.digits.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
    }
}

pub fn base_digits(mut n: u64, q: u64) -> Vec<u64> {
    let mut d = Vec::new();
    while n > 0 {
        d.push(n % q);
        n /= q;
    }
    if d.is_empty() {
        d.push(0);
    }
    d
}

fn binom_mod_p(n: u64, k: u64, p: u64) -> u64 {
    // Lucas
    let (mut n, mut k) = (n, k);
    let mut acc = 1u64;
    while k > 0 {
        let (ni, ki) = (n % p, k % p);
        if ki > ni {
            return 0;
        }
        let mut c = 1u64;
        for i in 0..ki {
            c = c * ((ni - i) % p) % p;
            c = c * crate_inv(i + 1, p) % p;
        }
        acc = acc * c % p;
        n /= p;
        k /= p;
    }
    acc
}

fn crate_inv(a: u64, p: u64) -> u64 {
    let (mut r, mut b, mut e) = (1u64, a % p, p - 2);
    while e > 0 {
        if e & 1 == 1 {
            r = r * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    r
}

/// Coefficients of g_{n,q} over F_p, lowest first.
pub fn gnq_coeffs_fp(n: u64, p: u64, q: u64) -> Result<Vec<u64>, GnqError> {
    if n > MAX_DENSE_N {
        return Err(GnqError::CapExceeded { what: "n (dense)", value: n, cap: MAX_DENSE_N });
    }
    let n_us = n as usize;
    let neg = |v: u64| (p - v % p) % p;
    // Σ_c c^j is −1 when j > 0 and (q−1) | j, else 0
    let mut h: Vec<u64> = (0..=n)
        .map(|k| {
            let j = n - k;
            if j > 0 && j.is_multiple_of(q - 1) {
                neg(binom_mod_p(n, k, p))
            } else {
                0
            }
        })
        .collect();
    let qu = q as usize;
    let mut g = vec![0u64; n_us / qu + 1];
    let mut top = n_us;
    loop {
        while top > 0 && h[top] == 0 {
            top -= 1;
        }
        if h[top] == 0 {
            break;
        }
        if !top.is_multiple_of(qu) {
            return Err(GnqError::ExtractionFailure(top));
        }
        let k = top / qu;
        let lead = h[top];
        g[k] = lead;
        // (x^q − x)^k = Σ_j C(k,j) (−1)^(k−j) x^(k + j(q−1))
        for j in 0..=k as u64 {
            let c = binom_mod_p(k as u64, j, p);
            if c == 0 {
                continue;
            }
            let c = if (k as u64 - j) % 2 == 1 { neg(c) } else { c };
            let idx = k + j as usize * (qu - 1);
            h[idx] = (h[idx] + neg(lead * c % p)) % p;
        }
    }
    while g.len() > 1 && *g.last().unwrap() == 0 {
        g.pop();
    }
    if g == [0] {
        g.clear();
    }
    Ok(g)
}

/// g_{n,q} as an ordinary polynomial over the tower (coefficients in F_p).
pub fn gnq_coeffs(n: u64, tower: &FieldTower) -> Result<OrdPoly, GnqError> {
    let g = gnq_coeffs_fp(n, tower.p() as u64, tower.q())?;
    Ok(OrdPoly::from_ints(tower, &g.iter().map(|&v| v as i64).collect::<Vec<_>>()))
}

/// The ordinary polynomial S_a(y) = y + y^q + ⋯ + y^(q^(a−1)).
pub fn s_ord(a: usize, tower: &FieldTower) -> Result<OrdPoly, GnqError> {
    let q = tower.q() as usize;
    let deg = q
        .checked_pow(a.saturating_sub(1) as u32)
        .filter(|&d| d <= (1 << 20))
        .ok_or(GnqError::CapExceeded { what: "S_a degree", value: a as u64, cap: 1 << 20 })?;
    let mut coeffs = vec![tower.zero(); if a == 0 { 0 } else { deg + 1 }];
    let mut e = 1usize;
    for _ in 0..a {
        coeffs[e] = tower.one();
        e *= q;
    }
    Ok(OrdPoly::new(tower, coeffs).expect("same tower"))
}

/// Point oracle for g_{n,q} on any y with Tr(y) = 0 down to F_q in the ambient field.
pub struct GnqEvaluator {
    tower: FieldTower,
    solution: LinearMap,
    consistency: Matrix,
    fq: Vec<FieldElem>,
}

impl GnqEvaluator {
    /// Needs p | aux_factor so that every y ∈ F_{q^e} has an Artin–Schreier preimage.
    pub fn new(tower: &FieldTower) -> Result<Self, GnqError> {
        let (p, aux) = (tower.p(), tower.aux_factor());
        if aux % p != 0 {
            return Err(GnqError::AuxFieldMissing { aux, p });
        }
        let ql = tower.level_degree(Level::Q) as u64;
        let a = tower.matrix_of(|x| tower.sub(&tower.frob_p(x, ql), x));
        let pre = preimage_solver(&a, p);
        Ok(GnqEvaluator {
            tower: tower.clone(),
            solution: tower.linear_map_from_matrix(&pre.solution),
            consistency: pre.consistency,
            fq: tower.enumerate(Level::Q)?.collect(),
        })
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    /// Some x with x^q − x = y.
    pub fn preimage(&self, y: &FieldElem) -> Result<FieldElem, GnqError> {
        self.tower.check(y)?;
        let p = self.tower.p();
        if mat_vec(&self.consistency, &y.coords(), p).iter().any(|&v| v != 0) {
            return Err(GnqError::NoPreimage);
        }
        Ok(self.tower.apply_map(&self.solution, y))
    }

    /// All q preimages of y.
    pub fn preimages(&self, y: &FieldElem) -> Result<Vec<FieldElem>, GnqError> {
        let x = self.preimage(y)?;
        Ok(self.fq.iter().map(|c| self.tower.add(&x, c)).collect())
    }

    /// Σ_{c∈F_q} (x+c)^n for a fixed preimage x.
    pub fn sum_at(&self, n: u64, x: &FieldElem) -> FieldElem {
        let t = &self.tower;
        self.fq
            .iter()
            .fold(t.zero(), |acc, c| t.add(&acc, &t.pow(&t.add(x, c), n as u128)))
    }

    /// g_{n,q}(y).
    pub fn eval(&self, n: u64, y: &FieldElem) -> Result<FieldElem, GnqError> {
        Ok(self.sum_at(n, &self.preimage(y)?))
    }
}

/// −Σ over (t+2)-subsets of the unit terms of n − 1 of products of S_{aᵢ}.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightForm {
    pub t: i64,
    /// a₁ ≤ a₂ ≤ ⋯, one entry per unit term q^(aᵢ).
    pub exponents: Vec<u32>,
}

pub fn gnq_weight_form(n: u64, q: u64) -> Result<WeightForm, GnqError> {
    let (lo, hi) = (q - 1, 2 * q - 4);
    if n == 0 {
        return Err(GnqError::FormNotApplicable { count: 0, lo, hi });
    }
    let mut exponents = Vec::new();
    for (i, d) in base_digits(n - 1, q).into_iter().enumerate() {
        exponents.extend(std::iter::repeat_n(i as u32, d as usize));
    }
    if n == 1 {
        exponents.clear();
    }
    let count = exponents.len() as u64;
    if count < lo || count > hi {
        return Err(GnqError::FormNotApplicable { count, lo, hi });
    }
    Ok(WeightForm { t: count as i64 - q as i64, exponents })
}

impl WeightForm {
    /// Number of S-factors in each product.
    pub fn order(&self) -> usize {
        (self.t + 2) as usize
    }

    pub fn eval(&self, tower: &FieldTower, y: &FieldElem) -> FieldElem {
        let k = self.order();
        // elementary symmetric polynomials by the usual recurrence
        let mut e = vec![tower.zero(); k + 1];
        e[0] = tower.one();
        for &a in &self.exponents {
            let s = s_poly(a as usize, tower).eval_unchecked(y);
            for j in (1..=k).rev() {
                e[j] = tower.add(&e[j], &tower.mul(&e[j - 1], &s));
            }
        }
        tower.neg(&e[k])
    }
}

/// Checks g_{n+q^a} − g_{n+q^b} = (S_a − S_b)·g_n: as polynomials when all three
/// fit the dense path, otherwise pointwise on F_{q^e} through `eval`.
pub fn gnq_recurrence_check(
    n: u64,
    a: u32,
    b: u32,
    tower: &FieldTower,
    eval: Option<&GnqEvaluator>,
) -> Result<bool, GnqError> {
    let q = tower.q();
    let too_big = || GnqError::CapExceeded { what: "n + q^a", value: n, cap: MAX_N };
    let na = q.checked_pow(a).and_then(|v| v.checked_add(n)).ok_or_else(too_big)?;
    let nb = q.checked_pow(b).and_then(|v| v.checked_add(n)).ok_or_else(too_big)?;
    if na.max(nb) <= MAX_DENSE_N {
        let lhs = &gnq_coeffs(na, tower)? - &gnq_coeffs(nb, tower)?;
        let diff = &s_ord(a as usize, tower)? - &s_ord(b as usize, tower)?;
        return Ok(lhs == &diff * &gnq_coeffs(n, tower)?);
    }
    let ev = match eval {
        Some(ev) => ev,
        None => &GnqEvaluator::new(tower)?,
    };
    let (sa, sb) = (s_poly(a as usize, tower), s_poly(b as usize, tower));
    for y in tower.enumerate(Level::Working)? {
        let lhs = tower.sub(&ev.eval(na, &y)?, &ev.eval(nb, &y)?);
        let diff = tower.sub(&sa.eval_unchecked(&y), &sb.eval_unchecked(&y));
        if lhs != tower.mul(&diff, &ev.eval(n, &y)?) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// True iff `f` is injective on `level`. Evaluation runs in parallel; images
/// are collected in a bitset over the level when they stay inside it.
pub fn is_pp<F>(tower: &FieldTower, level: Level, f: F) -> Result<bool, GnqError>
where
    F: Fn(&FieldElem) -> FieldElem + Sync,
{
    let size = tower.level_size(level)?;
    if size > PP_DOMAIN_CAP {
        return Err(GnqError::CapExceeded { what: "domain size", value: size, cap: PP_DOMAIN_CAP });
    }
    let images: Vec<FieldElem> = (0..size)
        .into_par_iter()
        .map(|i| f(&tower.element_at(level, i).expect("index in range")))
        .collect();
    let idx: Option<Vec<u64>> = images.par_iter().map(|v| tower.subfield_index(v, level)).collect();
    match idx {
        Some(idx) => {
            let mut hit = vec![0u64; size.div_ceil(64) as usize];
            for i in idx {
                let (w, b) = ((i / 64) as usize, i % 64);
                if hit[w] >> b & 1 == 1 {
                    return Ok(false);
                }
                hit[w] |= 1 << b;
            }
            Ok(true)
        }
        None => {
            let mut keys: Vec<Vec<u32>> = images.iter().map(FieldElem::coords).collect();
            keys.par_sort_unstable();
            Ok(keys.windows(2).all(|w| w[0] != w[1]))
        }
    }
}

/// Whether g_{n,q} permutes F_{q^e}.
pub fn gnq_is_pp(n: u64, ev: &GnqEvaluator) -> Result<bool, GnqError> {
    is_pp(ev.tower(), Level::Working, |y| {
        ev.eval(n, y).expect("points of F_{q^e} have preimages")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_tower;

    fn tower(e: u32) -> FieldTower {
        build_tower(2, 1, 2, e, 2).unwrap()
    }

    #[test]
    fn digits_and_weight() {
        let s = GnqSpec::new(2317, 4).unwrap();
        assert_eq!(s.digits, vec![1, 3, 0, 0, 1, 2]);
        assert_eq!(s.weight, 7);
        assert_eq!(s.digit_string(), "1,3,0,0,1,2");
        assert_eq!(GnqSpec::new(0, 4).unwrap().digits, vec![0]);
        assert!(GnqSpec::new(u64::MAX, 4).is_err());
    }

    #[test]
    fn trivial_g() {
        assert!(gnq_coeffs_fp(0, 2, 4).unwrap().is_empty());
        assert!(gnq_coeffs_fp(1, 2, 4).unwrap().is_empty());
        // Σ (x+c)^3 over F_4 = Σ c^3 ... only j=3 term survives: −1
        assert_eq!(gnq_coeffs_fp(3, 2, 4).unwrap(), vec![1]);
        assert!(gnq_coeffs_fp(10_001, 2, 4).is_err());
    }

    #[test]
    fn dense_matches_definition() {
        let t = tower(2);
        let ev = GnqEvaluator::new(&t).unwrap();
        for n in [5u64, 17, 85, 100, 341] {
            let g = gnq_coeffs(n, &t).unwrap();
            for x in t.enumerate(Level::Working).unwrap() {
                let y = t.sub(&t.pow(&x, 4), &x);
                assert_eq!(g.eval(&y).unwrap(), ev.sum_at(n, &x));
                assert_eq!(ev.eval(n, &y).unwrap(), ev.sum_at(n, &x));
            }
        }
    }

    #[test]
    fn preimages_are_preimages() {
        let t = tower(3);
        let ev = GnqEvaluator::new(&t).unwrap();
        for y in t.enumerate(Level::Working).unwrap().take(20) {
            for x in ev.preimages(&y).unwrap() {
                assert_eq!(t.sub(&t.pow(&x, 4), &x), y);
            }
        }
        assert!(matches!(
            GnqEvaluator::new(&build_tower(2, 1, 2, 2, 1).unwrap()),
            Err(GnqError::AuxFieldMissing { .. })
        ));
    }

    #[test]
    fn weight_form() {
        let w = gnq_weight_form(17429, 4).unwrap();
        assert_eq!(w.t, 0);
        assert_eq!(w.exponents, vec![1, 2, 5, 7]);
        let w = gnq_weight_form(85, 4).unwrap();
        assert_eq!((w.t, w.exponents.clone()), (-1, vec![1, 2, 3]));
        assert!(matches!(gnq_weight_form(2317, 4), Err(GnqError::FormNotApplicable { .. })));
        let t = tower(3);
        let ev = GnqEvaluator::new(&t).unwrap();
        for y in t.enumerate(Level::Working).unwrap() {
            assert_eq!(w.eval(&t, &y), ev.eval(85, &y).unwrap());
        }
    }

    #[test]
    fn recurrence() {
        let t = tower(2);
        assert!(gnq_recurrence_check(0, 3, 1, &t, None).unwrap());
        assert!(gnq_recurrence_check(37, 2, 2, &t, None).unwrap());
        assert!(gnq_recurrence_check(123, 4, 1, &t, None).unwrap());
        let ev = GnqEvaluator::new(&t).unwrap();
        assert!(gnq_recurrence_check(20_000, 5, 3, &t, Some(&ev)).unwrap());
    }

    #[test]
    fn pp_examples() {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        assert!(is_pp(&t, Level::Q, |x| *x).unwrap());
        assert!(is_pp(&t, Level::Q, |x| t.pow(x, 2)).unwrap());
        assert!(!is_pp(&t, Level::Q, |x| t.pow(x, 3)).unwrap());
    }

    #[test]
    fn table_rows_small() {
        let ev = GnqEvaluator::new(&tower(4)).unwrap();
        assert!(gnq_is_pp(2317, &ev).unwrap());
        assert!(!gnq_is_pp(2318, &ev).unwrap());
    }
}
