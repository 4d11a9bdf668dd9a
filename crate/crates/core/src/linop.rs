//! Linearized polynomials Σ aᵢ x^(Bⁱ) with B = p^t, and their composition ring.

use std::fmt;

use thiserror::Error;

use crate::gf::{FieldElem, FieldTower, GfError, Level};
use crate::poly::{ord_gcd, OrdPoly, PolyError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinError {
    #[error("operands belong to different towers")]
    TowerMismatch,
    #[error("coefficients do not lie in the base field F_(p^{0})")]
    CoefficientsOutsideFq(u32),
    #[error("gcd(0, 0) is undefined")]
    BothZero,
    #[error("base exponents {0} and {1} differ")]
    WrongBase(u32, u32),
    #[error("cannot rebase from p^{from} to p^{to}")]
    Rebase { from: u32, to: u32 },
    #[error("base exponent must be positive")]
    ZeroBase,
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Poly(#[from] PolyError),
}

fn gcd_u32(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Σ aᵢ x^(Bⁱ), B = p^`base_log`. Coefficients lowest first, no trailing zeros.
#[derive(Clone)]
pub struct LinPoly {
    tower: FieldTower,
    base_log: u32,
    coeffs: Vec<FieldElem>,
}

impl PartialEq for LinPoly {
    fn eq(&self, other: &Self) -> bool {
        self.tower.same_tower(&other.tower)
            && self.base_log == other.base_log
            && self.coeffs == other.coeffs
    }
}

impl Eq for LinPoly {}

impl LinPoly {
    pub fn new(tower: &FieldTower, base_log: u32, coeffs: Vec<FieldElem>) -> Result<Self, LinError> {
        if base_log == 0 {
            return Err(LinError::ZeroBase);
        }
        for c in &coeffs {
            tower.check(c)?;
        }
        Ok(Self::from_raw(tower, base_log, coeffs))
    }

    /// Same as `new`, with the base given as the prime power itself.
    pub fn with_base(tower: &FieldTower, base: u128, coeffs: Vec<FieldElem>) -> Result<Self, LinError> {
        let t = tower.log_p(base).ok_or(GfError::BadBase(base))?;
        Self::new(tower, t, coeffs)
    }

    pub(crate) fn from_raw(tower: &FieldTower, base_log: u32, mut coeffs: Vec<FieldElem>) -> Self {
        debug_assert!(base_log > 0);
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        LinPoly { tower: tower.clone(), base_log, coeffs }
    }

    pub fn zero(tower: &FieldTower, base_log: u32) -> Self {
        Self::from_raw(tower, base_log, Vec::new())
    }

    /// The identity x.
    pub fn x(tower: &FieldTower, base_log: u32) -> Self {
        Self::monomial(tower, base_log, tower.one(), 0)
    }

    /// c·x^(B^i)
    pub fn monomial(tower: &FieldTower, base_log: u32, c: FieldElem, i: usize) -> Self {
        let mut coeffs = vec![tower.zero(); i + 1];
        coeffs[i] = c;
        Self::from_raw(tower, base_log, coeffs)
    }

    /// x^(B^i) with B = q.
    pub fn q_power(tower: &FieldTower, i: usize) -> Self {
        Self::monomial(tower, q_log(tower), tower.one(), i)
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn base_log(&self) -> u32 {
        self.base_log
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or_else(|| self.tower.zero())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest i with aᵢ ≠ 0.
    pub fn lin_degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    fn same(&self, other: &LinPoly) -> Result<(), LinError> {
        if self.tower.same_tower(&other.tower) {
            Ok(())
        } else {
            Err(LinError::TowerMismatch)
        }
    }

    /// Σ aᵢ z^(Bⁱ).
    pub fn eval(&self, z: &FieldElem) -> Result<FieldElem, LinError> {
        self.tower.check(z)?;
        Ok(self.eval_unchecked(z))
    }

    pub(crate) fn eval_unchecked(&self, z: &FieldElem) -> FieldElem {
        let t = &self.tower;
        let mut acc = t.zero();
        let mut zi = *z;
        for (i, a) in self.coeffs.iter().enumerate() {
            if i > 0 {
                zi = t.frob_p(&zi, self.base_log as u64);
            }
            if !a.is_zero() {
                acc = t.add(&acc, &t.mul(a, &zi));
            }
        }
        acc
    }

    /// Same map written over the finer base p^`to` (`to` must divide the current exponent).
    pub fn rebase(&self, to: u32) -> Result<LinPoly, LinError> {
        if to == 0 || !self.base_log.is_multiple_of(to) {
            return Err(LinError::Rebase { from: self.base_log, to });
        }
        let step = (self.base_log / to) as usize;
        if step == 1 || self.is_zero() {
            return Ok(LinPoly { base_log: to, ..self.clone() });
        }
        let mut coeffs = vec![self.tower.zero(); (self.coeffs.len() - 1) * step + 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            coeffs[i * step] = *a;
        }
        Ok(Self::from_raw(&self.tower, to, coeffs))
    }

    /// Rewrites over the coarser base p^`to` when every nonzero term allows it.
    pub fn coarsen(&self, to: u32) -> Option<LinPoly> {
        if to == 0 || !to.is_multiple_of(self.base_log) {
            return None;
        }
        let step = (to / self.base_log) as usize;
        let ok = self
            .coeffs
            .iter()
            .enumerate()
            .all(|(i, a)| i % step == 0 || a.is_zero());
        ok.then(|| {
            let coeffs = self.coeffs.iter().step_by(step).copied().collect();
            Self::from_raw(&self.tower, to, coeffs)
        })
    }

    pub fn try_add(&self, other: &LinPoly) -> Result<LinPoly, LinError> {
        self.same(other)?;
        let d = gcd_u32(self.base_log, other.base_log);
        let (f, g) = (self.rebase(d)?, other.rebase(d)?);
        let t = &self.tower;
        let n = f.coeffs.len().max(g.coeffs.len());
        Ok(Self::from_raw(t, d, (0..n).map(|i| t.add(&f.coeff(i), &g.coeff(i))).collect()))
    }

    pub fn try_sub(&self, other: &LinPoly) -> Result<LinPoly, LinError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> LinPoly {
        let t = &self.tower;
        Self::from_raw(t, self.base_log, self.coeffs.iter().map(|c| t.neg(c)).collect())
    }

    /// c·f, with c multiplying on the outside.
    pub fn scale(&self, c: &FieldElem) -> LinPoly {
        let t = &self.tower;
        Self::from_raw(t, self.base_log, self.coeffs.iter().map(|a| t.mul(c, a)).collect())
    }

    /// f ∘ g, over the gcd of the two base exponents.
    pub fn compose(&self, g: &LinPoly) -> Result<LinPoly, LinError> {
        self.same(g)?;
        let d = gcd_u32(self.base_log, g.base_log);
        let (f, g) = (self.rebase(d)?, g.rebase(d)?);
        let t = &self.tower;
        if f.is_zero() || g.is_zero() {
            return Ok(Self::zero(t, d));
        }
        let mut out = vec![t.zero(); f.coeffs.len() + g.coeffs.len() - 1];
        for (i, a) in f.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in g.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    let bt = t.frob_p(b, d as u64 * i as u64);
                    out[i + j] = t.add(&out[i + j], &t.mul(a, &bt));
                }
            }
        }
        Ok(Self::from_raw(t, d, out))
    }

    /// f ∘ f ∘ ⋯ ∘ f (k times); the identity when k = 0.
    pub fn compose_pow(&self, k: u32) -> LinPoly {
        let mut acc = Self::x(&self.tower, self.base_log);
        for _ in 0..k {
            acc = acc.compose(self).expect("same tower");
        }
        acc
    }

    /// Conventional associate Σ aᵢ xⁱ.
    pub fn associate(&self) -> OrdPoly {
        OrdPoly::from_raw(&self.tower, self.coeffs.clone())
    }

    /// Inverse of `associate` for base p^`base_log`.
    pub fn lift(g: &OrdPoly, base_log: u32) -> Result<LinPoly, LinError> {
        if base_log == 0 {
            return Err(LinError::ZeroBase);
        }
        Ok(Self::from_raw(g.tower(), base_log, g.coeffs().to_vec()))
    }

    /// Raises every coefficient to the power r^j.
    pub fn twist(&self, j: u32) -> LinPoly {
        let t = &self.tower;
        let e = t.s() as u64 * j as u64;
        Self::from_raw(t, self.base_log, self.coeffs.iter().map(|c| t.frob_p(c, e)).collect())
    }

    /// Every coefficient lies in F_(p^d).
    pub fn coeffs_in_deg(&self, d: u32) -> bool {
        self.coeffs.iter().all(|c| self.tower.in_subfield_deg(c, d))
    }

    pub fn coeffs_in(&self, level: Level) -> bool {
        self.coeffs_in_deg(self.tower.level_degree(level))
    }
}

pub(crate) fn q_log(tower: &FieldTower) -> u32 {
    tower.level_degree(Level::Q)
}

pub(crate) fn r_log(tower: &FieldTower) -> u32 {
    tower.level_degree(Level::R)
}

/// gcd of two B-linearized polynomials with coefficients in F_B, normalized so
/// that its associate is monic.
pub fn lin_gcd(f: &LinPoly, g: &LinPoly) -> Result<LinPoly, LinError> {
    f.same(g)?;
    if f.base_log != g.base_log {
        return Err(LinError::WrongBase(f.base_log, g.base_log));
    }
    let b = f.base_log;
    if !f.coeffs_in_deg(b) || !g.coeffs_in_deg(b) {
        return Err(LinError::CoefficientsOutsideFq(b));
    }
    if f.is_zero() && g.is_zero() {
        return Err(LinError::BothZero);
    }
    let h = ord_gcd(&f.associate(), &g.associate())?;
    LinPoly::lift(&h, b)
}

pub fn lin_compose(f: &LinPoly, g: &LinPoly) -> Result<LinPoly, LinError> {
    f.compose(g)
}

pub fn lin_eval(f: &LinPoly, z: &FieldElem) -> Result<FieldElem, LinError> {
    f.eval(z)
}

/// S_a = x + x^q + ⋯ + x^(q^(a−1)); S_0 = 0.
pub fn s_poly(a: usize, tower: &FieldTower) -> LinPoly {
    LinPoly::from_raw(tower, q_log(tower), vec![tower.one(); a])
}

/// Terms as `c·X^(B^i)`, highest first; B printed as a decimal when it fits.
impl fmt::Display for LinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let base = (self.tower.p() as u128)
            .checked_pow(self.base_log)
            .map_or_else(|| format!("{}^{}", self.tower.p(), self.base_log), |b| b.to_string());
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{c}·X^({base}^{i})")?;
        }
        Ok(())
    }
}

impl fmt::Debug for LinPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_tower;

    fn f4(e: u32) -> FieldTower {
        build_tower(2, 1, 2, e, 1).unwrap()
    }

    #[test]
    fn eval_examples() {
        let t = f4(1);
        let w = t.generator();
        assert_eq!(LinPoly::q_power(&t, 1).eval(&w).unwrap(), w);
        assert!(LinPoly::zero(&t, 2).eval(&w).unwrap().is_zero());
        assert!(s_poly(2, &t).eval(&w).unwrap().is_zero());
    }

    #[test]
    fn compose_examples() {
        let t = f4(1);
        let w = t.generator();
        let f = s_poly(2, &t);
        assert_eq!(f.compose(&LinPoly::x(&t, 2)).unwrap(), f);
        let xq = LinPoly::q_power(&t, 1);
        assert_eq!(xq.compose(&xq).unwrap(), LinPoly::q_power(&t, 2));
        let g = LinPoly::monomial(&t, 2, w, 0);
        assert_eq!(f.compose(&g).unwrap(), g.compose(&f).unwrap());
    }

    #[test]
    fn mixed_base_compose_is_r_linearized() {
        let t = f4(2);
        let xq = LinPoly::q_power(&t, 1);
        let xr = LinPoly::monomial(&t, 1, t.one(), 1);
        let h = xq.compose(&xr).unwrap();
        assert_eq!(h.base_log(), 1);
        assert_eq!(h, LinPoly::monomial(&t, 1, t.one(), 3));
    }

    #[test]
    fn associate_and_lift() {
        let t = f4(1);
        assert_eq!(LinPoly::q_power(&t, 1).associate(), OrdPoly::x(&t));
        assert_eq!(s_poly(5, &t).associate(), crate::poly::all_ones(5, &t));
        let g = OrdPoly::from_ints(&t, &[1, 0, 1]);
        let l = LinPoly::lift(&g, 2).unwrap();
        assert_eq!(l.to_string(), "(1,0)·X^(4^2) + (1,0)·X^(4^0)");
        assert_eq!(l.associate(), g);
    }

    #[test]
    fn gcd_examples() {
        let t = f4(1);
        let a = LinPoly::lift(&OrdPoly::from_ints(&t, &[1, 0, 1]), 2).unwrap();
        let b = LinPoly::lift(&OrdPoly::from_ints(&t, &[1, 1]), 2).unwrap();
        assert_eq!(lin_gcd(&a, &b).unwrap(), b);
        let c = LinPoly::lift(&OrdPoly::from_ints(&t, &[1, 0, 0, 1]), 2).unwrap();
        assert_eq!(lin_gcd(&b, &c).unwrap(), b);
        let z = LinPoly::zero(&t, 2);
        assert_eq!(lin_gcd(&z, &z).unwrap_err(), LinError::BothZero);
        let r = LinPoly::x(&t, 1);
        assert_eq!(lin_gcd(&b, &r).unwrap_err(), LinError::WrongBase(2, 1));
    }

    #[test]
    fn gcd_rejects_coefficients_outside_fq() {
        let t = f4(2);
        let big = t.enumerate(Level::Working).unwrap().find(|z| !t.in_subfield(z, Level::Q)).unwrap();
        let f = LinPoly::monomial(&t, 2, big, 0);
        assert_eq!(
            lin_gcd(&f, &f).unwrap_err(),
            LinError::CoefficientsOutsideFq(2)
        );
    }

    #[test]
    fn twist_examples() {
        let t = f4(1);
        let w = t.generator();
        let f = LinPoly::monomial(&t, 2, w, 0);
        assert_eq!(f.twist(0), f);
        assert_eq!(f.twist(1), LinPoly::monomial(&t, 2, t.mul(&w, &w), 0));
        assert_eq!(s_poly(3, &t).twist(5), s_poly(3, &t));
    }

    #[test]
    fn s0_and_s1() {
        let t = f4(1);
        assert!(s_poly(0, &t).is_zero());
        assert_eq!(s_poly(1, &t), LinPoly::x(&t, 2));
    }

    #[test]
    fn rebase_round_trip() {
        let t = f4(1);
        let f = s_poly(3, &t);
        let g = f.rebase(1).unwrap();
        assert_eq!(g.coeffs().len(), 5);
        assert_eq!(g.coarsen(2).unwrap(), f);
        assert!(LinPoly::x(&t, 1).compose(&g).is_ok());
        assert!(f.rebase(3).is_err());
    }
}
