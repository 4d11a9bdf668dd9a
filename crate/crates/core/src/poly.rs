//! Ordinary univariate polynomials over the ambient field.
//!
//! These are the conventional associates of q-linearized polynomials; the
//! determinant of a matrix of them is how the composition-ring determinant is
//! computed.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

use crate::gf::{FieldElem, FieldTower, GfError};

/// Largest square matrix accepted by the determinant routines.
pub const MAX_DET_DIM: usize = 7;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("division by the zero polynomial")]
    DivisionByZero,
    #[error("operands belong to different towers")]
    TowerMismatch,
    #[error("gcd(0, 0) is undefined")]
    BothZero,
    #[error("matrix is not square")]
    NonSquare,
    #[error("matrix is empty")]
    EmptyMatrix,
    #[error("matrix dimension {0} exceeds the cap of {MAX_DET_DIM}")]
    DimensionCapExceeded(usize),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Dense polynomial, lowest degree first, no trailing zeros.
#[derive(Clone)]
pub struct OrdPoly {
    tower: FieldTower,
    coeffs: Vec<FieldElem>,
}

impl PartialEq for OrdPoly {
    fn eq(&self, other: &Self) -> bool {
        self.tower.same_tower(&other.tower) && self.coeffs == other.coeffs
    }
}

impl Eq for OrdPoly {}

impl OrdPoly {
    pub fn new(tower: &FieldTower, coeffs: Vec<FieldElem>) -> Result<Self, PolyError> {
        for c in &coeffs {
            tower.check(c)?;
        }
        Ok(Self::from_raw(tower, coeffs))
    }

    pub(crate) fn from_raw(tower: &FieldTower, mut coeffs: Vec<FieldElem>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        OrdPoly { tower: tower.clone(), coeffs }
    }

    pub fn zero(tower: &FieldTower) -> Self {
        OrdPoly { tower: tower.clone(), coeffs: Vec::new() }
    }

    pub fn one(tower: &FieldTower) -> Self {
        Self::constant(tower, tower.one())
    }

    pub fn constant(tower: &FieldTower, c: FieldElem) -> Self {
        Self::from_raw(tower, vec![c])
    }

    pub fn x(tower: &FieldTower) -> Self {
        Self::monomial(tower, tower.one(), 1)
    }

    /// c·x^k
    pub fn monomial(tower: &FieldTower, c: FieldElem, k: usize) -> Self {
        let mut coeffs = vec![tower.zero(); k + 1];
        coeffs[k] = c;
        Self::from_raw(tower, coeffs)
    }

    /// Integer coefficients, lowest first, reduced mod p.
    pub fn from_ints(tower: &FieldTower, ints: &[i64]) -> Self {
        Self::from_raw(tower, ints.iter().map(|&v| tower.from_int(v)).collect())
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<FieldElem> {
        self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or_else(|| self.tower.zero())
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lead(&self) -> Option<FieldElem> {
        self.coeffs.last().copied()
    }

    fn same(&self, other: &OrdPoly) -> Result<(), PolyError> {
        if self.tower.same_tower(&other.tower) {
            Ok(())
        } else {
            Err(PolyError::TowerMismatch)
        }
    }

    pub fn scale(&self, c: &FieldElem) -> OrdPoly {
        let t = &self.tower;
        Self::from_raw(t, self.coeffs.iter().map(|a| t.mul(a, c)).collect())
    }

    /// Multiplies by x^k.
    pub fn shift(&self, k: usize) -> OrdPoly {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![self.tower.zero(); k];
        coeffs.extend_from_slice(&self.coeffs);
        OrdPoly { tower: self.tower.clone(), coeffs }
    }

    pub fn try_add(&self, other: &OrdPoly) -> Result<OrdPoly, PolyError> {
        self.same(other)?;
        let t = &self.tower;
        let n = self.coeffs.len().max(other.coeffs.len());
        Ok(Self::from_raw(
            t,
            (0..n).map(|i| t.add(&self.coeff(i), &other.coeff(i))).collect(),
        ))
    }

    pub fn try_sub(&self, other: &OrdPoly) -> Result<OrdPoly, PolyError> {
        self.same(other)?;
        let t = &self.tower;
        let n = self.coeffs.len().max(other.coeffs.len());
        Ok(Self::from_raw(
            t,
            (0..n).map(|i| t.sub(&self.coeff(i), &other.coeff(i))).collect(),
        ))
    }

    pub fn try_mul(&self, other: &OrdPoly) -> Result<OrdPoly, PolyError> {
        self.same(other)?;
        if self.is_zero() || other.is_zero() {
            return Ok(Self::zero(&self.tower));
        }
        let t = &self.tower;
        let mut out = vec![t.zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    out[i + j] = t.add(&out[i + j], &t.mul(a, b));
                }
            }
        }
        Ok(Self::from_raw(t, out))
    }

    pub fn pow(&self, k: u32) -> OrdPoly {
        let mut acc = Self::one(&self.tower);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// (quotient, remainder) with deg remainder < deg divisor.
    pub fn divrem(&self, divisor: &OrdPoly) -> Result<(OrdPoly, OrdPoly), PolyError> {
        self.same(divisor)?;
        let dg = divisor.degree().ok_or(PolyError::DivisionByZero)?;
        let t = &self.tower;
        let mut rem = self.coeffs.clone();
        if rem.len() <= dg {
            return Ok((Self::zero(t), self.clone()));
        }
        let lead_inv = t.inv(&divisor.coeffs[dg])?;
        let mut quot = vec![t.zero(); rem.len() - dg];
        for k in (dg..rem.len()).rev() {
            let c = rem[k];
            if c.is_zero() {
                continue;
            }
            let f = t.mul(&c, &lead_inv);
            quot[k - dg] = f;
            for (j, d) in divisor.coeffs.iter().enumerate() {
                rem[k - dg + j] = t.sub(&rem[k - dg + j], &t.mul(&f, d));
            }
        }
        rem.truncate(dg);
        Ok((Self::from_raw(t, quot), Self::from_raw(t, rem)))
    }

    /// Exact quotient; `None` when the division leaves a remainder.
    pub fn div_exact(&self, divisor: &OrdPoly) -> Result<Option<OrdPoly>, PolyError> {
        let (q, r) = self.divrem(divisor)?;
        Ok(r.is_zero().then_some(q))
    }

    pub fn eval(&self, x: &FieldElem) -> Result<FieldElem, PolyError> {
        self.tower.check(x)?;
        Ok(self.eval_unchecked(x))
    }

    pub(crate) fn eval_unchecked(&self, x: &FieldElem) -> FieldElem {
        let t = &self.tower;
        self.coeffs
            .iter()
            .rev()
            .fold(t.zero(), |acc, c| t.add(&t.mul(&acc, x), c))
    }

    /// Scaled to leading coefficient 1 (the zero polynomial stays zero).
    pub fn monic(&self) -> OrdPoly {
        match self.lead() {
            None => self.clone(),
            Some(l) => self.scale(&self.tower.inv(&l).expect("nonzero lead")),
        }
    }

    pub fn is_one(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == self.tower.one()
    }
}

fn expect_same(a: &OrdPoly, b: &OrdPoly) {
    assert!(a.tower.same_tower(&b.tower), "polynomials from different towers");
}

impl Add for &OrdPoly {
    type Output = OrdPoly;
    fn add(self, rhs: &OrdPoly) -> OrdPoly {
        expect_same(self, rhs);
        self.try_add(rhs).unwrap()
    }
}

impl Sub for &OrdPoly {
    type Output = OrdPoly;
    fn sub(self, rhs: &OrdPoly) -> OrdPoly {
        expect_same(self, rhs);
        self.try_sub(rhs).unwrap()
    }
}

impl Mul for &OrdPoly {
    type Output = OrdPoly;
    fn mul(self, rhs: &OrdPoly) -> OrdPoly {
        expect_same(self, rhs);
        self.try_mul(rhs).unwrap()
    }
}

impl Neg for &OrdPoly {
    type Output = OrdPoly;
    fn neg(self) -> OrdPoly {
        let t = &self.tower;
        OrdPoly::from_raw(t, self.coeffs.iter().map(|c| t.neg(c)).collect())
    }
}

/// `c_d*x^d + ... + c_0`, coefficients as coordinate tuples, zero terms omitted.
impl fmt::Display for OrdPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 => write!(f, "{c}*x")?,
                _ => write!(f, "{c}*x^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for OrdPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OrdOp {
    Add,
    Mul,
    DivRem,
    Eval,
}

pub enum OrdOperand<'a> {
    Poly(&'a OrdPoly),
    Elem(&'a FieldElem),
}

#[derive(Debug, PartialEq, Eq)]
pub enum OrdValue {
    Poly(OrdPoly),
    Pair(OrdPoly, OrdPoly),
    Elem(FieldElem),
}

/// Checked dispatcher over the ring operations.
pub fn ord_arith(op: OrdOp, f: &OrdPoly, g: OrdOperand<'_>) -> Result<OrdValue, PolyError> {
    match (op, g) {
        (OrdOp::Add, OrdOperand::Poly(g)) => f.try_add(g).map(OrdValue::Poly),
        (OrdOp::Mul, OrdOperand::Poly(g)) => f.try_mul(g).map(OrdValue::Poly),
        (OrdOp::DivRem, OrdOperand::Poly(g)) => f.divrem(g).map(|(q, r)| OrdValue::Pair(q, r)),
        (OrdOp::Eval, OrdOperand::Elem(x)) => f.eval(x).map(OrdValue::Elem),
        (OrdOp::Mul, OrdOperand::Elem(c)) => {
            f.tower.check(c)?;
            Ok(OrdValue::Poly(f.scale(c)))
        }
        _ => Err(PolyError::TowerMismatch),
    }
}

/// Monic gcd by Euclid's algorithm.
pub fn ord_gcd(f: &OrdPoly, g: &OrdPoly) -> Result<OrdPoly, PolyError> {
    f.same(g)?;
    if f.is_zero() && g.is_zero() {
        return Err(PolyError::BothZero);
    }
    let mut a = f.clone();
    let mut b = g.clone();
    while !b.is_zero() {
        let (_, r) = a.divrem(&b)?;
        a = b;
        b = r;
    }
    Ok(a.monic())
}

/// 1 + x + ... + x^(e-1), i.e. (x^e - 1)/(x - 1).
pub fn all_ones(e: usize, tower: &FieldTower) -> OrdPoly {
    OrdPoly::from_raw(tower, vec![tower.one(); e])
}

fn check_square(m: &[Vec<OrdPoly>]) -> Result<(usize, FieldTower), PolyError> {
    let n = m.len();
    if n == 0 {
        return Err(PolyError::EmptyMatrix);
    }
    if m.iter().any(|row| row.len() != n) {
        return Err(PolyError::NonSquare);
    }
    if n > MAX_DET_DIM {
        return Err(PolyError::DimensionCapExceeded(n));
    }
    let tower = m[0][0].tower.clone();
    if m.iter().flatten().any(|p| !p.tower.same_tower(&tower)) {
        return Err(PolyError::TowerMismatch);
    }
    Ok((n, tower))
}

/// Determinant by fraction-free (Bareiss) elimination with row pivoting.
pub fn ord_det(m: &[Vec<OrdPoly>]) -> Result<OrdPoly, PolyError> {
    let (n, tower) = check_square(m)?;
    let mut a: Vec<Vec<OrdPoly>> = m.to_vec();
    let mut negate = false;
    let mut prev = OrdPoly::one(&tower);
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return Ok(OrdPoly::zero(&tower)),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&a[k][k] * &a[i][j]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = num
                    .div_exact(&prev)?
                    .expect("Bareiss step divides exactly");
            }
        }
        prev = a[k][k].clone();
    }
    let d = a[n - 1][n - 1].clone();
    Ok(if negate { -&d } else { d })
}

/// Determinant by Laplace expansion along the first row.
pub fn det_cofactor(m: &[Vec<OrdPoly>]) -> Result<OrdPoly, PolyError> {
    let (n, tower) = check_square(m)?;
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc = OrdPoly::zero(&tower);
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<OrdPoly>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|&(c, _)| c != j)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let term = &m[0][j] * &det_cofactor(&minor)?;
        acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_tower;

    fn f2() -> FieldTower {
        build_tower(2, 1, 1, 1, 1).unwrap()
    }

    #[test]
    fn char2_square() {
        let t = f2();
        let x1 = OrdPoly::from_ints(&t, &[1, 1]);
        assert_eq!(&x1 * &x1, OrdPoly::from_ints(&t, &[1, 0, 1]));
    }

    #[test]
    fn divrem_monomial() {
        let t = f2();
        let x3 = OrdPoly::from_ints(&t, &[0, 0, 0, 1]);
        let x = OrdPoly::x(&t);
        let (q, r) = x3.divrem(&x).unwrap();
        assert_eq!(q, OrdPoly::from_ints(&t, &[0, 0, 1]));
        assert!(r.is_zero());
        assert_eq!(x.divrem(&OrdPoly::zero(&t)).unwrap_err(), PolyError::DivisionByZero);
    }

    #[test]
    fn minimal_polynomial_of_omega() {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let w = t.generator();
        let f = OrdPoly::from_ints(&t, &[1, 1, 1]);
        assert!(f.eval(&w).unwrap().is_zero());
        assert_eq!(
            ord_arith(OrdOp::Eval, &f, OrdOperand::Elem(&w)).unwrap(),
            OrdValue::Elem(t.zero())
        );
    }

    #[test]
    fn gcd_examples() {
        let t = f2();
        let a = OrdPoly::from_ints(&t, &[1, 0, 1]);
        let b = OrdPoly::from_ints(&t, &[1, 1]);
        assert_eq!(ord_gcd(&a, &b).unwrap(), b);
        assert_eq!(ord_gcd(&a, &OrdPoly::zero(&t)).unwrap(), a);
        let quintic = all_ones(5, &t);
        assert!(ord_gcd(&b, &quintic).unwrap().is_one());
        let z = OrdPoly::zero(&t);
        assert_eq!(ord_gcd(&z, &z).unwrap_err(), PolyError::BothZero);
    }

    #[test]
    fn gcd_is_monic_over_f3() {
        let t = build_tower(3, 1, 1, 1, 1).unwrap();
        let f = OrdPoly::from_ints(&t, &[0, 2]);
        assert_eq!(ord_gcd(&f, &OrdPoly::zero(&t)).unwrap(), OrdPoly::x(&t));
    }

    #[test]
    fn all_ones_shapes() {
        let t = f2();
        assert_eq!(all_ones(1, &t), OrdPoly::one(&t));
        assert_eq!(all_ones(2, &t), OrdPoly::from_ints(&t, &[1, 1]));
        assert_eq!(all_ones(5, &t).degree(), Some(4));
    }

    #[test]
    fn small_determinants() {
        let t = f2();
        let f = OrdPoly::from_ints(&t, &[1, 0, 1]);
        assert_eq!(ord_det(&[vec![f.clone()]]).unwrap(), f);
        let one = OrdPoly::one(&t);
        let zero = OrdPoly::zero(&t);
        let id = vec![vec![one.clone(), zero.clone()], vec![zero.clone(), one.clone()]];
        assert!(ord_det(&id).unwrap().is_one());
        assert!(det_cofactor(&id).unwrap().is_one());
        // forces a pivot swap
        let swap = vec![vec![zero.clone(), one.clone()], vec![one.clone(), zero.clone()]];
        assert_eq!(ord_det(&swap).unwrap(), det_cofactor(&swap).unwrap());
        assert_eq!(ord_det(&[vec![one.clone(), zero]]).unwrap_err(), PolyError::NonSquare);
        assert_eq!(ord_det(&[]).unwrap_err(), PolyError::EmptyMatrix);
    }

    #[test]
    fn prop33_two_by_two_with_k1() {
        // k = 1, c = ω over F_4: [[c, 1], [x, c^2]] has determinant x + c^3 = x + 1
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let w = t.generator();
        let m = vec![
            vec![OrdPoly::constant(&t, w), OrdPoly::one(&t)],
            vec![OrdPoly::x(&t), OrdPoly::constant(&t, t.mul(&w, &w))],
        ];
        let expect = OrdPoly::from_ints(&t, &[1, 1]);
        assert_eq!(ord_det(&m).unwrap(), expect);
        assert_eq!(det_cofactor(&m).unwrap(), expect);
    }

    #[test]
    fn render() {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let p = OrdPoly::new(&t, vec![t.one(), t.zero(), t.generator()]).unwrap();
        assert_eq!(p.to_string(), "(0,1)*x^2 + (1,0)");
        assert_eq!(OrdPoly::zero(&t).to_string(), "0");
    }
}
