//! The finite-field tower F_p ⊂ F_r ⊂ F_q ⊂ F_{q^e} ⊂ F_{q^E}.
//!
//! Everything lives in one ambient field F_{p^D}, D = s·m·e·aux, represented
//! in the power basis of the lexicographically smallest monic irreducible of
//! degree D over F_p. Subfields are never embedded explicitly: a subfield of
//! p-degree d is the fixed set of x ↦ x^(p^d), and its F_p-basis is
//! precomputed once per tower.
//!
//! In characteristic 2 an element is a packed `u64` bit vector and
//! multiplication is carry-less. Odd characteristic uses a byte per
//! coordinate, so p is limited to primes below 256.

mod fp;
pub(crate) mod linalg;

use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Arc;

use rand::Rng;
use thiserror::Error;

use linalg::Matrix;

/// Largest ambient degree over F_p.
pub const MAX_DEGREE: u32 = 64;
/// Largest subfield that may be enumerated, as log2 of its size.
pub const ENUMERATION_CAP_LOG2: u32 = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GfError {
    #[error("{0} is not a prime")]
    NonPrimeP(u32),
    #[error("characteristic {0} is above the supported range (p < 256)")]
    PrimeTooLarge(u32),
    #[error("tower parameters must all be at least 1")]
    ZeroParameter,
    #[error("degree cap exceeded: {what} ({value} > {cap})")]
    DegreeCapExceeded {
        what: &'static str,
        value: u64,
        cap: u64,
    },
    #[error("division by zero")]
    DivisionByZero,
    #[error("elements belong to different towers")]
    TowerMismatch,
    #[error("{0} is not a power of the characteristic")]
    BadBase(u128),
    #[error("element is not in the top field of the norm/trace")]
    NotInTopField,
    #[error("field degrees do not divide: bottom {bottom}, top {top}, ambient {ambient}")]
    NonDividingDegrees { bottom: u32, top: u32, ambient: u32 },
    #[error("invalid coordinate vector: {0}")]
    InvalidCoordinates(String),
    #[error("operation {0:?} needs a different operand")]
    BadOperand(ArithOp),
}

static NEXT_TOWER_ID: AtomicU32 = AtomicU32::new(1);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TowerId(u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Repr {
    Bin(u64),
    Odd([u8; 64]),
}

/// An element of the ambient field of one particular tower.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    tower: TowerId,
    degree: u8,
    repr: Repr,
}

impl FieldElem {
    pub fn tower_id(&self) -> TowerId {
        self.tower
    }

    /// Power-basis coordinates over F_p, length D.
    pub fn coords(&self) -> Vec<u32> {
        let d = self.degree as usize;
        match &self.repr {
            Repr::Bin(w) => (0..d).map(|i| ((w >> i) & 1) as u32).collect(),
            Repr::Odd(c) => c[..d].iter().map(|&v| v as u32).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.repr {
            Repr::Bin(w) => *w == 0,
            Repr::Odd(c) => c.iter().all(|&v| v == 0),
        }
    }
}

/// Renders as a coordinate tuple, e.g. `(1,0,1)`.
impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A subfield of the tower.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Level {
    Prime,
    /// F_r, r = p^s.
    R,
    /// F_q, q = r^m.
    Q,
    /// F_{q^e}.
    Working,
    /// F_{q^(e·aux)}, the whole ambient field.
    Ambient,
    /// F_{p^d}.
    Degree(u32),
}

/// F_p-linear map on the ambient field, stored column by column.
#[derive(Clone, Debug)]
pub(crate) enum LinearMap {
    Bin(Vec<u64>),
    Odd(Vec<[u8; 64]>),
}

impl LinearMap {
    fn from_columns(cols: &[Repr]) -> Self {
        match cols.first() {
            Some(Repr::Odd(_)) => LinearMap::Odd(
                cols.iter()
                    .map(|c| match c {
                        Repr::Odd(v) => *v,
                        Repr::Bin(_) => unreachable!(),
                    })
                    .collect(),
            ),
            _ => LinearMap::Bin(
                cols.iter()
                    .map(|c| match c {
                        Repr::Bin(v) => *v,
                        Repr::Odd(_) => unreachable!(),
                    })
                    .collect(),
            ),
        }
    }

    fn apply(&self, x: &Repr, p: u32) -> Repr {
        match (self, x) {
            (LinearMap::Bin(cols), Repr::Bin(w)) => {
                let mut acc = 0u64;
                let mut bits = *w;
                while bits != 0 {
                    let i = bits.trailing_zeros() as usize;
                    acc ^= cols[i];
                    bits &= bits - 1;
                }
                Repr::Bin(acc)
            }
            (LinearMap::Odd(cols), Repr::Odd(v)) => {
                let mut acc = [0u32; 64];
                for (col, &c) in cols.iter().zip(v.iter()) {
                    if c == 0 {
                        continue;
                    }
                    for (a, &b) in acc.iter_mut().zip(col.iter()) {
                        *a = (*a + c as u32 * b as u32) % p;
                    }
                }
                let mut out = [0u8; 64];
                for (o, a) in out.iter_mut().zip(acc) {
                    *o = a as u8;
                }
                Repr::Odd(out)
            }
            _ => unreachable!("representation mismatch"),
        }
    }
}

#[derive(Debug)]
struct Subfield {
    degree: u32,
    basis: Vec<Repr>,
    pivots: Vec<usize>,
}

struct TowerInner {
    id: TowerId,
    p: u32,
    s: u32,
    m: u32,
    e: u32,
    aux: u32,
    degree: u32,
    modulus: Vec<u32>,
    bin_red: u64,
    frob: Vec<LinearMap>,
    subfields: Vec<Subfield>,
}

/// Immutable, cheaply clonable handle on a tower.
#[derive(Clone)]
pub struct FieldTower {
    inner: Arc<TowerInner>,
}

impl fmt::Debug for FieldTower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = &self.inner;
        f.debug_struct("FieldTower")
            .field("p", &t.p)
            .field("s", &t.s)
            .field("m", &t.m)
            .field("e", &t.e)
            .field("aux", &t.aux)
            .field("modulus", &t.modulus)
            .finish()
    }
}

/// Operations accepted by [`FieldTower::arith`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Inv,
    Pow,
}

#[derive(Clone, Copy, Debug)]
pub enum Operand {
    Elem(FieldElem),
    Int(u128),
    None,
}

pub fn build_tower(p: u32, s: u32, m: u32, e: u32, aux_factor: u32) -> Result<FieldTower, GfError> {
    FieldTower::new(p, s, m, e, aux_factor)
}

fn clmul(a: u64, b: u64) -> u128 {
    let (x, mut y) = if a.count_ones() < b.count_ones() { (b, a) } else { (a, b) };
    let x = x as u128;
    let mut acc = 0u128;
    while y != 0 {
        acc ^= x << y.trailing_zeros();
        y &= y - 1;
    }
    acc
}

impl FieldTower {
    pub fn new(p: u32, s: u32, m: u32, e: u32, aux: u32) -> Result<Self, GfError> {
        if !fp::is_prime(p) {
            return Err(GfError::NonPrimeP(p));
        }
        if p >= 256 {
            return Err(GfError::PrimeTooLarge(p));
        }
        if s == 0 || m == 0 || e == 0 || aux == 0 {
            return Err(GfError::ZeroParameter);
        }
        let degree = [s, m, e, aux]
            .iter()
            .try_fold(1u64, |acc, &v| acc.checked_mul(v as u64))
            .filter(|&d| d <= MAX_DEGREE as u64)
            .ok_or(GfError::DegreeCapExceeded {
                what: "ambient degree",
                value: s as u64 * m as u64 * e as u64 * aux as u64,
                cap: MAX_DEGREE as u64,
            })? as u32;
        let modulus = fp::smallest_irreducible(p, degree);
        let bin_red = if p == 2 {
            modulus[..degree as usize]
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &c)| acc | ((c as u64) << i))
        } else {
            0
        };
        let mut inner = TowerInner {
            id: TowerId(NEXT_TOWER_ID.fetch_add(1, Ordering::Relaxed)),
            p,
            s,
            m,
            e,
            aux,
            degree,
            modulus,
            bin_red,
            frob: Vec::new(),
            subfields: Vec::new(),
        };
        inner.frob = inner.frobenius_maps();
        inner.subfields = (1..=degree)
            .filter(|d| degree.is_multiple_of(*d))
            .map(|d| inner.subfield(d))
            .collect();
        Ok(FieldTower { inner: Arc::new(inner) })
    }

    pub fn id(&self) -> TowerId {
        self.inner.id
    }
    pub fn p(&self) -> u32 {
        self.inner.p
    }
    pub fn s(&self) -> u32 {
        self.inner.s
    }
    pub fn m(&self) -> u32 {
        self.inner.m
    }
    pub fn e(&self) -> u32 {
        self.inner.e
    }
    pub fn aux_factor(&self) -> u32 {
        self.inner.aux
    }
    /// Ambient degree D over F_p.
    pub fn degree(&self) -> u32 {
        self.inner.degree
    }
    /// Monic modulus, lowest coefficient first.
    pub fn modulus(&self) -> &[u32] {
        &self.inner.modulus
    }

    pub fn same_tower(&self, other: &FieldTower) -> bool {
        self.inner.id == other.inner.id
    }

    /// Degree over F_p of a level.
    pub fn level_degree(&self, level: Level) -> u32 {
        let t = &self.inner;
        match level {
            Level::Prime => 1,
            Level::R => t.s,
            Level::Q => t.s * t.m,
            Level::Working => t.s * t.m * t.e,
            Level::Ambient => t.degree,
            Level::Degree(d) => d,
        }
    }

    /// p^d, when it fits.
    pub fn order_of_degree(&self, d: u32) -> Option<u128> {
        (self.inner.p as u128).checked_pow(d)
    }

    pub fn order(&self, level: Level) -> Option<u128> {
        self.order_of_degree(self.level_degree(level))
    }

    pub fn r(&self) -> u64 {
        self.order(Level::R).expect("r fits in u64") as u64
    }

    pub fn q(&self) -> u64 {
        self.order(Level::Q).expect("q fits in u64") as u64
    }

    fn elem(&self, repr: Repr) -> FieldElem {
        FieldElem { tower: self.inner.id, degree: self.inner.degree as u8, repr }
    }

    pub fn contains(&self, x: &FieldElem) -> bool {
        x.tower == self.inner.id
    }

    pub fn check(&self, x: &FieldElem) -> Result<(), GfError> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(GfError::TowerMismatch)
        }
    }

    pub fn zero(&self) -> FieldElem {
        self.elem(self.inner.zero_repr())
    }

    pub fn one(&self) -> FieldElem {
        self.from_int(1)
    }

    /// The image of an integer under Z → F_p ⊂ ambient.
    pub fn from_int(&self, v: i64) -> FieldElem {
        let p = self.inner.p as i64;
        let c = v.rem_euclid(p) as u32;
        let mut coords = vec![0u32; self.inner.degree as usize];
        coords[0] = c;
        self.elem(self.inner.repr_from(&coords))
    }

    pub fn from_coords(&self, coords: &[u32]) -> Result<FieldElem, GfError> {
        let t = &self.inner;
        if coords.len() > t.degree as usize {
            return Err(GfError::InvalidCoordinates(format!(
                "{} coordinates for an ambient degree of {}",
                coords.len(),
                t.degree
            )));
        }
        if let Some(c) = coords.iter().find(|&&c| c >= t.p) {
            return Err(GfError::InvalidCoordinates(format!("{c} is not reduced mod {}", t.p)));
        }
        let mut full = coords.to_vec();
        full.resize(t.degree as usize, 0);
        Ok(self.elem(t.repr_from(&full)))
    }

    /// The class of x in F_p[x]/(modulus).
    pub fn generator(&self) -> FieldElem {
        let t = &self.inner;
        if t.degree == 1 {
            self.from_int(-(t.modulus[0] as i64))
        } else {
            let mut c = vec![0u32; t.degree as usize];
            c[1] = 1;
            self.elem(t.repr_from(&c))
        }
    }

    #[inline]
    pub fn add(&self, x: &FieldElem, y: &FieldElem) -> FieldElem {
        debug_assert!(self.contains(x) && self.contains(y));
        self.elem(self.inner.add(&x.repr, &y.repr))
    }

    #[inline]
    pub fn sub(&self, x: &FieldElem, y: &FieldElem) -> FieldElem {
        debug_assert!(self.contains(x) && self.contains(y));
        self.elem(self.inner.add(&x.repr, &self.inner.neg(&y.repr)))
    }

    #[inline]
    pub fn neg(&self, x: &FieldElem) -> FieldElem {
        self.elem(self.inner.neg(&x.repr))
    }

    #[inline]
    pub fn mul(&self, x: &FieldElem, y: &FieldElem) -> FieldElem {
        debug_assert!(self.contains(x) && self.contains(y));
        self.elem(self.inner.mul(&x.repr, &y.repr))
    }

    pub fn pow(&self, x: &FieldElem, mut n: u128) -> FieldElem {
        let mut acc = self.one().repr;
        let mut b = x.repr;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.inner.mul(&acc, &b);
            }
            n >>= 1;
            if n > 0 {
                b = self.inner.mul(&b, &b);
            }
        }
        self.elem(acc)
    }

    pub fn inv(&self, x: &FieldElem) -> Result<FieldElem, GfError> {
        self.check(x)?;
        if x.is_zero() {
            return Err(GfError::DivisionByZero);
        }
        let t = &self.inner;
        let coords = x.coords();
        let inv = fp::inverse_mod(&coords, &t.modulus, t.p).ok_or(GfError::DivisionByZero)?;
        let mut full = inv;
        full.resize(t.degree as usize, 0);
        Ok(self.elem(t.repr_from(&full)))
    }

    /// Checked dispatcher over the field operations.
    pub fn arith(&self, op: ArithOp, x: &FieldElem, y: Operand) -> Result<FieldElem, GfError> {
        self.check(x)?;
        match (op, y) {
            (ArithOp::Inv, Operand::None) => self.inv(x),
            (ArithOp::Pow, Operand::Int(n)) => Ok(self.pow(x, n)),
            (ArithOp::Add | ArithOp::Sub | ArithOp::Mul, Operand::Elem(y)) => {
                self.check(&y)?;
                Ok(match op {
                    ArithOp::Add => self.add(x, &y),
                    ArithOp::Sub => self.sub(x, &y),
                    _ => self.mul(x, &y),
                })
            }
            _ => Err(GfError::BadOperand(op)),
        }
    }

    /// x^(p^j).
    #[inline]
    pub fn frob_p(&self, x: &FieldElem, j: u64) -> FieldElem {
        let t = &self.inner;
        let j = (j % t.degree as u64) as usize;
        if j == 0 {
            return *x;
        }
        self.elem(t.frob[j].apply(&x.repr, t.p))
    }

    /// x^(base^k), where base is a power of p.
    pub fn frobenius(&self, x: &FieldElem, base: u128, k: u64) -> Result<FieldElem, GfError> {
        self.check(x)?;
        let t = self.log_p(base).ok_or(GfError::BadBase(base))?;
        let j = (t as u128 * k as u128) % self.inner.degree as u128;
        Ok(self.frob_p(x, j as u64))
    }

    /// Exact log_p, for powers of p only.
    pub fn log_p(&self, mut n: u128) -> Option<u32> {
        let p = self.inner.p as u128;
        let mut k = 0;
        if n == 0 {
            return None;
        }
        while n > 1 {
            if !n.is_multiple_of(p) {
                return None;
            }
            n /= p;
            k += 1;
        }
        Some(k)
    }

    pub fn in_subfield(&self, x: &FieldElem, level: Level) -> bool {
        self.in_subfield_deg(x, self.level_degree(level))
    }

    pub fn in_subfield_deg(&self, x: &FieldElem, d: u32) -> bool {
        self.frob_p(x, d as u64) == *x
    }

    /// (N_{top/bottom}(x), Tr_{top/bottom}(x)) for field orders `top` and `bottom`.
    pub fn norm_trace(
        &self,
        x: &FieldElem,
        top: u128,
        bottom: u128,
    ) -> Result<(FieldElem, FieldElem), GfError> {
        let td = self.log_p(top).ok_or(GfError::BadBase(top))?;
        let bd = self.log_p(bottom).ok_or(GfError::BadBase(bottom))?;
        self.norm_trace_deg(x, td, bd)
    }

    /// Norm and trace between subfields given by their degrees over F_p.
    pub fn norm_trace_deg(
        &self,
        x: &FieldElem,
        top: u32,
        bottom: u32,
    ) -> Result<(FieldElem, FieldElem), GfError> {
        self.check(x)?;
        let ambient = self.inner.degree;
        if bottom == 0 || top == 0 || !top.is_multiple_of(bottom) || !ambient.is_multiple_of(top) {
            return Err(GfError::NonDividingDegrees { bottom, top, ambient });
        }
        if !self.in_subfield_deg(x, top) {
            return Err(GfError::NotInTopField);
        }
        let mut norm = self.one();
        let mut trace = self.zero();
        for i in 0..top / bottom {
            let c = self.frob_p(x, (bottom * i) as u64);
            norm = self.mul(&norm, &c);
            trace = self.add(&trace, &c);
        }
        Ok((norm, trace))
    }

    fn subfield_for(&self, level: Level) -> Result<&Subfield, GfError> {
        let d = self.level_degree(level);
        self.inner
            .subfields
            .iter()
            .find(|s| s.degree == d)
            .ok_or(GfError::NonDividingDegrees { bottom: d, top: self.inner.degree, ambient: self.inner.degree })
    }

    /// Number of elements of a level, as long as it is enumerable.
    pub fn level_size(&self, level: Level) -> Result<u64, GfError> {
        let sub = self.subfield_for(level)?;
        let bits = (sub.degree as f64) * (self.inner.p as f64).log2();
        if bits > ENUMERATION_CAP_LOG2 as f64 + 1e-9 {
            return Err(GfError::DegreeCapExceeded {
                what: "enumerated subfield size (log2)",
                value: bits.ceil() as u64,
                cap: ENUMERATION_CAP_LOG2 as u64,
            });
        }
        Ok((self.inner.p as u64).pow(sub.degree))
    }

    /// Every element of a subfield, once each, in a fixed order.
    pub fn enumerate(&self, level: Level) -> Result<SubfieldIter, GfError> {
        let count = self.level_size(level)?;
        let sub = self.subfield_for(level)?;
        Ok(SubfieldIter {
            tower: self.clone(),
            basis: sub.basis.clone(),
            next: 0,
            count,
        })
    }

    /// Position of `x` in [`FieldTower::enumerate`] order, or `None` when x is
    /// outside the level.
    pub fn subfield_index(&self, x: &FieldElem, level: Level) -> Option<u64> {
        let sub = self.subfield_for(level).ok()?;
        if !self.in_subfield_deg(x, sub.degree) {
            return None;
        }
        let coords = x.coords();
        let p = self.inner.p as u64;
        let mut idx = 0u64;
        for &pv in sub.pivots.iter().rev() {
            idx = idx.checked_mul(p)?.checked_add(coords[pv] as u64)?;
        }
        Some(idx)
    }

    /// The element at position `idx` of [`FieldTower::enumerate`] order.
    pub fn element_at(&self, level: Level, mut idx: u64) -> Result<FieldElem, GfError> {
        let count = self.level_size(level)?;
        if idx >= count {
            return Err(GfError::InvalidCoordinates(format!("index {idx} out of range for {count} elements")));
        }
        let sub = self.subfield_for(level)?;
        let t = &self.inner;
        let p = t.p as u64;
        let mut acc = t.zero_repr();
        for b in &sub.basis {
            let d = (idx % p) as u32;
            idx /= p;
            if d != 0 {
                acc = t.add(&acc, &t.scale(b, d));
            }
        }
        Ok(self.elem(acc))
    }

    /// Uniformly random element of a level.
    pub fn random<R: Rng + ?Sized>(&self, level: Level, rng: &mut R) -> FieldElem {
        let sub = self.subfield_for(level).expect("level divides the ambient degree");
        let mut acc = self.inner.zero_repr();
        for b in &sub.basis {
            let d = rng.random_range(0..self.inner.p);
            acc = self.inner.add(&acc, &self.inner.scale(b, d));
        }
        self.elem(acc)
    }

    /// Builds the F_p-linear map with matrix `cols` (column j = image of basis j).
    pub(crate) fn linear_map_from_matrix(&self, m: &Matrix) -> LinearMap {
        let d = self.inner.degree as usize;
        let cols: Vec<Repr> = (0..d)
            .map(|j| {
                let col: Vec<u32> = (0..d).map(|i| m[i][j]).collect();
                self.inner.repr_from(&col)
            })
            .collect();
        LinearMap::from_columns(&cols)
    }

    /// Matrix (rows × cols over F_p) of an F_p-linear map given as a closure.
    pub(crate) fn matrix_of<F: Fn(&FieldElem) -> FieldElem>(&self, f: F) -> Matrix {
        let d = self.inner.degree as usize;
        let mut m = vec![vec![0u32; d]; d];
        for j in 0..d {
            let mut c = vec![0u32; d];
            c[j] = 1;
            let img = f(&self.elem(self.inner.repr_from(&c))).coords();
            for i in 0..d {
                m[i][j] = img[i];
            }
        }
        m
    }

    pub(crate) fn apply_map(&self, map: &LinearMap, x: &FieldElem) -> FieldElem {
        self.elem(map.apply(&x.repr, self.inner.p))
    }
}

pub struct SubfieldIter {
    tower: FieldTower,
    basis: Vec<Repr>,
    next: u64,
    count: u64,
}

impl Iterator for SubfieldIter {
    type Item = FieldElem;

    fn next(&mut self) -> Option<FieldElem> {
        if self.next >= self.count {
            return None;
        }
        let t = &self.tower.inner;
        let p = t.p as u64;
        let mut idx = self.next;
        let mut acc = t.zero_repr();
        for b in &self.basis {
            let d = (idx % p) as u32;
            idx /= p;
            if d != 0 {
                acc = t.add(&acc, &t.scale(b, d));
            }
        }
        self.next += 1;
        Some(self.tower.elem(acc))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for SubfieldIter {}

impl TowerInner {
    fn zero_repr(&self) -> Repr {
        if self.p == 2 {
            Repr::Bin(0)
        } else {
            Repr::Odd([0; 64])
        }
    }

    fn repr_from(&self, coords: &[u32]) -> Repr {
        if self.p == 2 {
            Repr::Bin(coords.iter().enumerate().fold(0u64, |acc, (i, &c)| acc | (((c & 1) as u64) << i)))
        } else {
            let mut v = [0u8; 64];
            for (o, &c) in v.iter_mut().zip(coords) {
                *o = (c % self.p) as u8;
            }
            Repr::Odd(v)
        }
    }

    fn coords_of(&self, x: &Repr) -> Vec<u32> {
        let d = self.degree as usize;
        match x {
            Repr::Bin(w) => (0..d).map(|i| ((w >> i) & 1) as u32).collect(),
            Repr::Odd(c) => c[..d].iter().map(|&v| v as u32).collect(),
        }
    }

    #[inline]
    fn add(&self, x: &Repr, y: &Repr) -> Repr {
        match (x, y) {
            (Repr::Bin(a), Repr::Bin(b)) => Repr::Bin(a ^ b),
            (Repr::Odd(a), Repr::Odd(b)) => {
                let p = self.p as u16;
                let mut out = [0u8; 64];
                for i in 0..self.degree as usize {
                    out[i] = ((a[i] as u16 + b[i] as u16) % p) as u8;
                }
                Repr::Odd(out)
            }
            _ => unreachable!("representation mismatch"),
        }
    }

    fn neg(&self, x: &Repr) -> Repr {
        match x {
            Repr::Bin(a) => Repr::Bin(*a),
            Repr::Odd(a) => {
                let p = self.p as u16;
                let mut out = [0u8; 64];
                for i in 0..self.degree as usize {
                    out[i] = ((p - a[i] as u16) % p) as u8;
                }
                Repr::Odd(out)
            }
        }
    }

    fn scale(&self, x: &Repr, k: u32) -> Repr {
        match x {
            Repr::Bin(a) => Repr::Bin(if k & 1 == 1 { *a } else { 0 }),
            Repr::Odd(a) => {
                let p = self.p;
                let mut out = [0u8; 64];
                for i in 0..self.degree as usize {
                    out[i] = ((a[i] as u32 * k) % p) as u8;
                }
                Repr::Odd(out)
            }
        }
    }

    #[inline]
    fn mul(&self, x: &Repr, y: &Repr) -> Repr {
        match (x, y) {
            (Repr::Bin(a), Repr::Bin(b)) => {
                let d = self.degree;
                let mut prod = clmul(*a, *b);
                let red = self.bin_red as u128;
                while prod >> d != 0 {
                    let top = 127 - prod.leading_zeros();
                    prod ^= (red << (top - d)) ^ (1u128 << top);
                }
                Repr::Bin(prod as u64)
            }
            (Repr::Odd(a), Repr::Odd(b)) => {
                let d = self.degree as usize;
                let p = self.p;
                let mut prod = [0u32; 128];
                for i in 0..d {
                    if a[i] == 0 {
                        continue;
                    }
                    let ai = a[i] as u32;
                    for j in 0..d {
                        prod[i + j] = (prod[i + j] + ai * b[j] as u32) % p;
                    }
                }
                for k in (d..2 * d - 1).rev() {
                    let c = prod[k];
                    if c == 0 {
                        continue;
                    }
                    for j in 0..d {
                        let t = (c * self.modulus[j]) % p;
                        prod[k - d + j] = (prod[k - d + j] + p - t) % p;
                    }
                }
                let mut out = [0u8; 64];
                for i in 0..d {
                    out[i] = prod[i] as u8;
                }
                Repr::Odd(out)
            }
            _ => unreachable!("representation mismatch"),
        }
    }

    fn pow_repr(&self, x: &Repr, mut n: u64) -> Repr {
        let mut one = vec![0u32; self.degree as usize];
        one[0] = 1;
        let mut acc = self.repr_from(&one);
        let mut b = *x;
        while n > 0 {
            if n & 1 == 1 {
                acc = self.mul(&acc, &b);
            }
            b = self.mul(&b, &b);
            n >>= 1;
        }
        acc
    }

    /// frob[j] is x ↦ x^(p^j) for j in 0..D.
    fn frobenius_maps(&self) -> Vec<LinearMap> {
        let d = self.degree as usize;
        let basis: Vec<Repr> = (0..d)
            .map(|i| {
                let mut c = vec![0u32; d];
                c[i] = 1;
                self.repr_from(&c)
            })
            .collect();
        let first: Vec<Repr> = basis.iter().map(|b| self.pow_repr(b, self.p as u64)).collect();
        let step = LinearMap::from_columns(&first);
        let mut maps = vec![LinearMap::from_columns(&basis)];
        let mut cols = basis;
        for _ in 1..d {
            cols = cols.iter().map(|c| step.apply(c, self.p)).collect();
            maps.push(LinearMap::from_columns(&cols));
        }
        maps
    }

    /// Basis of the fixed field of x ↦ x^(p^deg), in reduced echelon form.
    fn subfield(&self, deg: u32) -> Subfield {
        let d = self.degree as usize;
        let map = &self.frob[deg as usize % d];
        let p = self.p;
        let mut a: Matrix = vec![vec![0u32; d]; d];
        for j in 0..d {
            let mut c = vec![0u32; d];
            c[j] = 1;
            let img = self.coords_of(&map.apply(&self.repr_from(&c), p));
            for i in 0..d {
                a[i][j] = (img[i] + p - u32::from(i == j)) % p;
            }
        }
        let (basis, pivots) = linalg::nullspace(&a, p);
        assert_eq!(basis.len(), deg as usize, "fixed field of the wrong dimension");
        Subfield {
            degree: deg,
            basis: basis.iter().map(|v| self.repr_from(v)).collect(),
            pivots,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn f4() -> (FieldTower, FieldElem) {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let w = t.generator();
        (t, w)
    }

    #[test]
    fn degree_bookkeeping() {
        let t = build_tower(2, 1, 2, 5, 1).unwrap();
        assert_eq!(t.degree(), 10);
        assert_eq!(t.q(), 4);
        assert_eq!(t.e(), 5);
        let t = build_tower(2, 1, 2, 6, 2).unwrap();
        assert_eq!(t.degree(), 24);
        assert_eq!(t.order(Level::Working), Some(4u128.pow(6)));
        assert_eq!(t.order(Level::Ambient), Some(4u128.pow(12)));
    }

    #[test]
    fn degenerate_prime_field() {
        let t = build_tower(3, 1, 1, 1, 1).unwrap();
        assert_eq!(t.degree(), 1);
        assert_eq!(t.modulus(), &[0, 1]);
        assert_eq!(t.enumerate(Level::Ambient).unwrap().count(), 3);
        let two = t.from_int(2);
        assert_eq!(t.mul(&two, &two), t.one());
    }

    #[test]
    fn build_errors() {
        assert_eq!(build_tower(4, 1, 1, 1, 1).unwrap_err(), GfError::NonPrimeP(4));
        assert!(matches!(
            build_tower(2, 1, 2, 33, 1).unwrap_err(),
            GfError::DegreeCapExceeded { .. }
        ));
        assert_eq!(build_tower(2, 0, 1, 1, 1).unwrap_err(), GfError::ZeroParameter);
    }

    #[test]
    fn deterministic_modulus() {
        let a = build_tower(2, 1, 2, 6, 2).unwrap();
        let b = build_tower(2, 1, 2, 6, 2).unwrap();
        assert_eq!(a.modulus(), b.modulus());
        assert!(!a.same_tower(&b));
        assert!(fp::is_irreducible(a.modulus(), 2));
    }

    #[test]
    fn f4_arithmetic() {
        let (t, w) = f4();
        let w2 = t.mul(&w, &w);
        assert_eq!(t.mul(&w, &w2), t.one());
        assert_eq!(t.add(&t.one(), &t.one()), t.zero());
        assert_eq!(t.add(&w, &w2), t.one());
        assert_eq!(t.frobenius(&w, 4, 1).unwrap(), w);
        assert_eq!(t.frobenius(&w, 2, 0).unwrap(), w);
        assert_eq!(t.frobenius(&w, 2, 1).unwrap(), w2);
        assert_eq!(t.inv(&w).unwrap(), w2);
        assert_eq!(t.inv(&t.zero()), Err(GfError::DivisionByZero));
    }

    #[test]
    fn subfield_membership() {
        let (t, w) = f4();
        for l in [Level::Prime, Level::R, Level::Q, Level::Working] {
            assert!(t.in_subfield(&t.zero(), l));
        }
        assert!(!t.in_subfield(&w, Level::Prime));
        assert!(t.in_subfield(&t.pow(&w, 3), Level::Prime));
    }

    #[test]
    fn norm_and_trace_f4() {
        let (t, w) = f4();
        let (n, tr) = t.norm_trace(&w, 4, 2).unwrap();
        assert_eq!(n, t.one());
        assert_eq!(tr, t.one());
        let (n0, t0) = t.norm_trace(&t.zero(), 4, 2).unwrap();
        assert!(n0.is_zero() && t0.is_zero());
        let big = build_tower(2, 1, 2, 3, 1).unwrap();
        let g = big.generator();
        assert_eq!(big.norm_trace(&g, 4, 2).unwrap_err(), GfError::NotInTopField);
        assert!(matches!(
            big.norm_trace(&g, 8, 4).unwrap_err(),
            GfError::NonDividingDegrees { .. }
        ));
    }

    #[test]
    fn enumeration_counts() {
        let t = build_tower(2, 1, 2, 5, 1).unwrap();
        let f2: Vec<_> = t.enumerate(Level::Prime).unwrap().collect();
        assert_eq!(f2, vec![t.zero(), t.one()]);
        let f4: Vec<_> = t.enumerate(Level::Q).unwrap().collect();
        assert_eq!(f4.len(), 4);
        assert!(f4.iter().all(|x| t.pow(x, 4) == *x));
        let all: Vec<_> = t.enumerate(Level::Working).unwrap().collect();
        assert_eq!(all.len(), 1024);
        let set: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(set.len(), 1024);
        for (i, x) in all.iter().enumerate() {
            assert_eq!(t.subfield_index(x, Level::Working), Some(i as u64));
            assert_eq!(t.element_at(Level::Working, i as u64).unwrap(), *x);
        }
        assert!(t.element_at(Level::Q, 4).is_err());
        let big = build_tower(2, 1, 2, 13, 1).unwrap();
        assert!(matches!(big.enumerate(Level::Working), Err(GfError::DegreeCapExceeded { .. })));
    }

    #[test]
    fn fq_fixed_points_count() {
        for t in [build_tower(2, 1, 2, 3, 2).unwrap(), build_tower(3, 1, 2, 2, 1).unwrap()] {
            let fixed = t
                .enumerate(Level::Ambient)
                .unwrap()
                .filter(|x| t.frobenius(x, t.q() as u128, 1).unwrap() == *x)
                .count();
            assert_eq!(fixed as u64, t.q());
        }
    }

    #[test]
    fn frobenius_has_full_period() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in [build_tower(2, 1, 2, 6, 2).unwrap(), build_tower(3, 1, 2, 2, 3).unwrap()] {
            for _ in 0..50 {
                let x = t.random(Level::Ambient, &mut rng);
                let mut y = x;
                for _ in 0..t.degree() {
                    y = t.pow(&y, t.p() as u128);
                }
                assert_eq!(y, x);
                assert_eq!(t.frob_p(&x, t.degree() as u64), x);
                assert_eq!(t.frob_p(&x, 1), t.pow(&x, t.p() as u128));
            }
        }
    }

    #[test]
    fn norm_multiplicative_trace_additive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = build_tower(3, 1, 2, 2, 1).unwrap();
        for _ in 0..100 {
            let x = t.random(Level::Working, &mut rng);
            let y = t.random(Level::Working, &mut rng);
            let (nx, tx) = t.norm_trace_deg(&x, 4, 1).unwrap();
            let (ny, ty) = t.norm_trace_deg(&y, 4, 1).unwrap();
            let (nxy, _) = t.norm_trace_deg(&t.mul(&x, &y), 4, 1).unwrap();
            let (_, txy) = t.norm_trace_deg(&t.add(&x, &y), 4, 1).unwrap();
            assert_eq!(nxy, t.mul(&nx, &ny));
            assert_eq!(txy, t.add(&tx, &ty));
            assert!(t.in_subfield(&nx, Level::Prime) && t.in_subfield(&tx, Level::Prime));
        }
    }

    #[test]
    fn odd_inverse_and_mismatch() {
        let t = build_tower(3, 1, 2, 2, 1).unwrap();
        let other = build_tower(3, 1, 2, 2, 1).unwrap();
        for x in t.enumerate(Level::Ambient).unwrap().skip(1) {
            assert_eq!(t.mul(&x, &t.inv(&x).unwrap()), t.one());
        }
        let g = t.generator();
        let h = other.generator();
        assert_eq!(t.arith(ArithOp::Add, &g, Operand::Elem(h)), Err(GfError::TowerMismatch));
        assert_eq!(t.arith(ArithOp::Inv, &h, Operand::None), Err(GfError::TowerMismatch));
        assert_eq!(t.arith(ArithOp::Pow, &g, Operand::Int(80)).unwrap(), t.one());
    }
}
