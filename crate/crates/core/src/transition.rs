//! From r-linearized equations over F_q to a q-linearized equation over F_r.
//!
//! For a = (a₀, …, a_{m−1}) in F_q and q-linearized fᵢ over F_r, every root of
//! Σ aᵢ fᵢ(z)^(rⁱ) is a root of det M, where M is the m×m matrix over the
//! composition ring with (i, j) entry a_{j−i}^(rⁱ) f_{j−i} ∘ x^(r^δ(i,j)).

use std::collections::BTreeMap;

use rand::Rng;
use thiserror::Error;

use crate::gf::{FieldElem, FieldTower, GfError, Level};
use crate::linop::{q_log, r_log, LinError, LinPoly};
use crate::perm;
use crate::poly::{ord_det, OrdPoly, PolyError, MAX_DET_DIM};

/// Largest m accepted by the combinatorial routines.
pub const MAX_M: usize = 7;
/// Largest search domain for root transfer.
pub const ROOT_SEARCH_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransitionError {
    #[error("input invariant violated: {0}")]
    InvariantViolation(String),
    #[error("{what} = {value} exceeds the cap of {cap}")]
    CapExceeded { what: &'static str, value: u64, cap: u64 },
    #[error("{0:?} is not a valid difference profile")]
    NotInFrakM(Vec<u32>),
    #[error("determinant coefficient {0} is not in F_r")]
    CoefficientOutsideFr(FieldElem),
    #[error(transparent)]
    Lin(#[from] LinError),
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error(transparent)]
    Field(#[from] GfError),
}

fn check_m(m: usize) -> Result<(), TransitionError> {
    if m == 0 || m > MAX_M {
        return Err(TransitionError::CapExceeded { what: "m", value: m as u64, cap: MAX_M as u64 });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct TransitionInput {
    tower: FieldTower,
    a: Vec<FieldElem>,
    f: Vec<LinPoly>,
}

impl TransitionInput {
    /// `a.len()` and `f.len()` must equal the tower's m.
    pub fn new(tower: &FieldTower, a: Vec<FieldElem>, f: Vec<LinPoly>) -> Result<Self, TransitionError> {
        let m = tower.m() as usize;
        check_m(m)?;
        let bad = |s: String| Err(TransitionError::InvariantViolation(s));
        if a.len() != m || f.len() != m {
            return bad(format!("expected {m} scalars and {m} polynomials"));
        }
        for (i, ai) in a.iter().enumerate() {
            tower.check(ai)?;
            if !tower.in_subfield(ai, Level::Q) {
                return bad(format!("a_{i} is not in F_q"));
            }
        }
        for (i, fi) in f.iter().enumerate() {
            if !fi.tower().same_tower(tower) {
                return Err(GfError::TowerMismatch.into());
            }
            if fi.base_log() != q_log(tower) {
                return bad(format!("f_{i} is not q-linearized"));
            }
            if !fi.coeffs_in(Level::R) {
                return bad(format!("f_{i} has coefficients outside F_r"));
            }
        }
        Ok(TransitionInput { tower: tower.clone(), a, f })
    }

    /// a uniform in F_q, each fᵢ of q-degree < `len` with uniform F_r coefficients.
    pub fn random<R: Rng + ?Sized>(tower: &FieldTower, len: usize, rng: &mut R) -> Self {
        let m = tower.m() as usize;
        let a = (0..m).map(|_| tower.random(Level::Q, rng)).collect();
        let f = (0..m)
            .map(|_| {
                let c = (0..len).map(|_| tower.random(Level::R, rng)).collect();
                LinPoly::from_raw(tower, q_log(tower), c)
            })
            .collect();
        TransitionInput { tower: tower.clone(), a, f }
    }

    pub fn m(&self) -> usize {
        self.a.len()
    }

    pub fn tower(&self) -> &FieldTower {
        &self.tower
    }

    pub fn a(&self) -> &[FieldElem] {
        &self.a
    }

    pub fn f(&self) -> &[LinPoly] {
        &self.f
    }

    /// Σ aᵢ fᵢ(z)^(rⁱ), as an r-linearized polynomial.
    pub fn lhs(&self) -> LinPoly {
        let t = &self.tower;
        let rl = r_log(t);
        let mut acc = LinPoly::zero(t, rl);
        for (i, (ai, fi)) in self.a.iter().zip(&self.f).enumerate() {
            let frob = LinPoly::monomial(t, rl, *ai, i);
            acc = acc.try_add(&frob.compose(fi).expect("same tower")).expect("same tower");
        }
        acc
    }
}

/// 0 on and above the diagonal, m below it.
pub fn delta(i: usize, j: usize, m: usize) -> usize {
    if i <= j {
        0
    } else {
        m
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransitionMatrix {
    pub entries: Vec<Vec<LinPoly>>,
}

pub fn build_m(input: &TransitionInput) -> TransitionMatrix {
    let t = &input.tower;
    let m = input.m();
    let s = t.s() as u64;
    let xq = LinPoly::q_power(t, 1);
    let entries = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let k = (j + m - i) % m;
                    let coef = t.frob_p(&input.a[k], s * i as u64);
                    let e = input.f[k].scale(&coef);
                    if delta(i, j, m) == 0 {
                        e
                    } else {
                        e.compose(&xq).expect("same tower")
                    }
                })
                .collect()
        })
        .collect();
    TransitionMatrix { entries }
}

fn check_fr(p: &LinPoly) -> Result<(), TransitionError> {
    let t = p.tower();
    match p.coeffs().iter().find(|c| !t.in_subfield(c, Level::R)) {
        Some(c) => Err(TransitionError::CoefficientOutsideFr(*c)),
        None => Ok(()),
    }
}

/// det M through the associate isomorphism; every coefficient is checked to lie in F_r.
pub fn det_m(input: &TransitionInput) -> Result<LinPoly, TransitionError> {
    let m = input.m();
    if m > MAX_DET_DIM {
        return Err(TransitionError::CapExceeded { what: "m", value: m as u64, cap: MAX_DET_DIM as u64 });
    }
    let mat = build_m(input);
    let assoc: Vec<Vec<OrdPoly>> = mat
        .entries
        .iter()
        .map(|row| row.iter().map(LinPoly::associate).collect())
        .collect();
    let d = LinPoly::lift(&ord_det(&assoc)?, q_log(&input.tower))?;
    check_fr(&d)?;
    Ok(d)
}

/// det M as a signed sum over permutations of compositions of entries.
pub fn det_m_by_composition(input: &TransitionInput) -> Result<LinPoly, TransitionError> {
    let m = input.m();
    check_m(m)?;
    let t = &input.tower;
    let mat = build_m(input);
    let mut acc = LinPoly::zero(t, q_log(t));
    for sigma in perm::permutations(m) {
        let mut term = LinPoly::x(t, q_log(t));
        for (i, &j) in sigma.iter().enumerate() {
            term = term.compose(&mat.entries[i][j])?;
            if term.is_zero() {
                break;
            }
        }
        if term.is_zero() {
            continue;
        }
        acc = if perm::sign(&sigma) == 1 { acc.try_add(&term)? } else { acc.try_sub(&term)? };
    }
    Ok(acc)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RootTransferReport {
    pub searched: u64,
    pub roots: u64,
    pub transfers_verified: u64,
    pub violations: u64,
}

/// Enumerates `level` and checks every root of the r-linearized form is a root of det M.
pub fn verify_root_transfer(input: &TransitionInput, level: Level) -> Result<RootTransferReport, TransitionError> {
    let t = &input.tower;
    let size = t.level_size(level)?;
    if size > ROOT_SEARCH_CAP {
        return Err(TransitionError::CapExceeded { what: "search level size", value: size, cap: ROOT_SEARCH_CAP });
    }
    let lhs = input.lhs();
    let det = det_m(input)?;
    let mut rep = RootTransferReport::default();
    for z in t.enumerate(level)? {
        rep.searched += 1;
        if lhs.eval_unchecked(&z).is_zero() {
            rep.roots += 1;
            if det.eval_unchecked(&z).is_zero() {
                rep.transfers_verified += 1;
            } else {
                rep.violations += 1;
            }
        }
    }
    Ok(rep)
}

/// All μ with Σμᵢ = m and Σ i·μᵢ ≡ 0 (mod m), in descending lexicographic order.
pub fn enumerate_frak_m(m: usize) -> Result<Vec<Vec<u32>>, TransitionError> {
    check_m(m)?;
    let mut out = Vec::new();
    let mut cur = vec![0u32; m];
    fn rec(pos: usize, left: u32, m: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == m - 1 {
            cur[pos] = left;
            let w: usize = cur.iter().enumerate().map(|(i, &c)| i * c as usize).sum();
            if w.is_multiple_of(m) {
                out.push(cur.clone());
            }
            return;
        }
        for v in (0..=left).rev() {
            cur[pos] = v;
            rec(pos + 1, left - v, m, cur, out);
        }
    }
    rec(0, m as u32, m, &mut cur, &mut out);
    Ok(out)
}

pub fn in_frak_m(mu: &[u32]) -> bool {
    let m = mu.len();
    m > 0
        && mu.iter().sum::<u32>() as usize == m
        && mu.iter().enumerate().map(|(i, &c)| i * c as usize).sum::<usize>() % m == 0
}

/// The index tuple 0^μ₀ 1^μ₁ ⋯ used to name the term f_{i₀…i_{m−1}}.
pub fn index_tuple(mu: &[u32]) -> Vec<usize> {
    mu.iter()
        .enumerate()
        .flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffClass {
    pub mu: Vec<u32>,
    pub perms: Vec<Vec<usize>>,
    pub coeff: FieldElem,
}

impl DiffClass {
    pub fn index_tuple(&self) -> Vec<usize> {
        index_tuple(&self.mu)
    }

    /// Σ i·μᵢ, the r-exponent of the trailing Frobenius.
    pub fn shift(&self) -> usize {
        self.mu.iter().enumerate().map(|(i, &c)| i * c as usize).sum()
    }
}

/// (−1)^sgn(σ) Π_j a_{σ(j)−j}^(r^j).
fn perm_term(tower: &FieldTower, a: &[FieldElem], sigma: &[usize]) -> FieldElem {
    let m = sigma.len();
    let s = tower.s() as u64;
    let mut prod = tower.one();
    for (j, &sj) in sigma.iter().enumerate() {
        let ai = a[(sj + m - j) % m];
        prod = tower.mul(&prod, &tower.frob_p(&ai, s * j as u64));
    }
    if perm::sign(sigma) == 1 {
        prod
    } else {
        tower.neg(&prod)
    }
}

fn check_a(tower: &FieldTower, a: &[FieldElem], m: usize) -> Result<(), TransitionError> {
    if a.len() != m {
        return Err(TransitionError::InvariantViolation(format!("expected {m} scalars")));
    }
    a.iter().try_for_each(|x| tower.check(x).map_err(Into::into))
}

/// 𝔖_μ together with c_μ; c_μ is checked to lie in F_r.
pub fn frak_s_and_coeff(mu: &[u32], a: &[FieldElem], tower: &FieldTower) -> Result<DiffClass, TransitionError> {
    let m = mu.len();
    check_m(m)?;
    if !in_frak_m(mu) {
        return Err(TransitionError::NotInFrakM(mu.to_vec()));
    }
    check_a(tower, a, m)?;
    let perms: Vec<Vec<usize>> = perm::permutations(m)
        .filter(|s| perm::difference_profile(s) == mu)
        .collect();
    let coeff = perms
        .iter()
        .fold(tower.zero(), |acc, s| tower.add(&acc, &perm_term(tower, a, s)));
    if !tower.in_subfield(&coeff, Level::R) {
        return Err(TransitionError::CoefficientOutsideFr(coeff));
    }
    Ok(DiffClass { mu: mu.to_vec(), perms, coeff })
}

/// Every class of 𝔐 in `enumerate_frak_m` order, from one pass over Sym(Z_m).
pub fn all_classes(a: &[FieldElem], tower: &FieldTower) -> Result<Vec<DiffClass>, TransitionError> {
    let m = a.len();
    check_m(m)?;
    check_a(tower, a, m)?;
    let mut by_mu: BTreeMap<Vec<u32>, (Vec<Vec<usize>>, FieldElem)> = BTreeMap::new();
    for sigma in perm::permutations(m) {
        let term = perm_term(tower, a, &sigma);
        let slot = by_mu
            .entry(perm::difference_profile(&sigma))
            .or_insert_with(|| (Vec::new(), tower.zero()));
        slot.1 = tower.add(&slot.1, &term);
        slot.0.push(sigma);
    }
    let mut out = Vec::new();
    for mu in enumerate_frak_m(m)? {
        let (perms, coeff) = by_mu
            .remove(&mu)
            .unwrap_or_else(|| panic!("no permutation realizes {mu:?}"));
        if !tower.in_subfield(&coeff, Level::R) {
            return Err(TransitionError::CoefficientOutsideFr(coeff));
        }
        out.push(DiffClass { mu, perms, coeff });
    }
    debug_assert!(by_mu.is_empty());
    Ok(out)
}

/// Σ_μ c_μ f₀^[μ₀] ∘ ⋯ ∘ f_{m−1}^[μ_{m−1}] ∘ x^(r^(Σ i·μᵢ)).
pub fn expansion_det(input: &TransitionInput) -> Result<LinPoly, TransitionError> {
    let t = &input.tower;
    let ql = q_log(t);
    let m = input.m();
    let mut acc = LinPoly::zero(t, ql);
    for class in all_classes(&input.a, t)? {
        if class.coeff.is_zero() {
            continue;
        }
        let mut term = LinPoly::q_power(t, class.shift() / m);
        for (fi, &k) in input.f.iter().zip(&class.mu) {
            term = fi.compose_pow(k).compose(&term)?;
        }
        acc = acc.try_add(&term.scale(&class.coeff))?;
    }
    Ok(acc)
}

/// First σ in lexicographic order with difference profile μ.
///
/// Panics if none exists, which for μ ∈ 𝔐 would contradict Hall's theorem.
pub fn hall_witness(mu: &[u32]) -> Result<Vec<usize>, TransitionError> {
    let m = mu.len();
    check_m(m)?;
    if !in_frak_m(mu) {
        return Err(TransitionError::NotInFrakM(mu.to_vec()));
    }
    let w = perm::permutations(m).find(|s| perm::difference_profile(s) == mu);
    Ok(w.unwrap_or_else(|| panic!("no witness permutation for {mu:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::build_tower;
    use crate::linop::s_poly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn frak_m_small() {
        assert_eq!(enumerate_frak_m(1).unwrap(), vec![vec![1]]);
        assert_eq!(enumerate_frak_m(2).unwrap(), vec![vec![2, 0], vec![0, 2]]);
        let m3 = enumerate_frak_m(3).unwrap();
        assert_eq!(m3, vec![vec![3, 0, 0], vec![1, 1, 1], vec![0, 3, 0], vec![0, 0, 3]]);
        let counts: Vec<usize> = (1..=7).map(|m| enumerate_frak_m(m).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 4, 10, 26, 80, 246]);
        assert!(enumerate_frak_m(8).is_err());
    }

    #[test]
    fn witnesses() {
        assert_eq!(hall_witness(&[0, 3, 0]).unwrap(), vec![1, 2, 0]);
        assert_eq!(hall_witness(&[4, 0, 0, 0]).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(hall_witness(&[0, 0, 0, 0, 5]).unwrap(), vec![4, 0, 1, 2, 3]);
        assert_eq!(hall_witness(&[1, 1, 0]).unwrap_err(), TransitionError::NotInFrakM(vec![1, 1, 0]));
    }

    #[test]
    fn m1_is_a0_f0() {
        let t = build_tower(2, 1, 1, 3, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let inp = TransitionInput::random(&t, 3, &mut rng);
        let expect = inp.f()[0].scale(&inp.a()[0]);
        assert_eq!(build_m(&inp).entries, vec![vec![expect.clone()]]);
        assert_eq!(det_m(&inp).unwrap(), expect);
        assert_eq!(expansion_det(&inp).unwrap(), expect);
    }

    #[test]
    fn m2_entry_and_diagonal_only() {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let xq = LinPoly::q_power(&t, 1);
        let inp = TransitionInput::new(
            &t,
            vec![t.one(), t.zero()],
            vec![xq.clone(), s_poly(2, &t)],
        )
        .unwrap();
        let mat = build_m(&inp);
        assert!(mat.entries[1][0].is_zero());
        assert_eq!(det_m(&inp).unwrap(), LinPoly::q_power(&t, 2));
        assert_eq!(det_m_by_composition(&inp).unwrap(), LinPoly::q_power(&t, 2));

        let w = t.generator();
        let inp = TransitionInput::new(&t, vec![t.one(), w], vec![xq.clone(), s_poly(2, &t)]).unwrap();
        let expect = s_poly(2, &t).scale(&t.mul(&w, &w)).compose(&xq).unwrap();
        assert_eq!(build_m(&inp).entries[1][0], expect);
    }

    #[test]
    fn zero_input() {
        let t = build_tower(2, 1, 2, 1, 1).unwrap();
        let inp = TransitionInput::new(&t, vec![t.zero(); 2], vec![s_poly(1, &t); 2]).unwrap();
        assert!(build_m(&inp).entries.iter().flatten().all(LinPoly::is_zero));
        assert!(det_m(&inp).unwrap().is_zero());
    }

    #[test]
    fn m3_trace_coefficient() {
        let t = build_tower(2, 1, 3, 1, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a: Vec<FieldElem> = (0..3).map(|_| t.random(Level::Q, &mut rng)).collect();
        let c = frak_s_and_coeff(&[1, 1, 1], &a, &t).unwrap();
        let inner = t.mul(&t.mul(&a[0], &t.frob_p(&a[1], 1)), &t.frob_p(&a[2], 2));
        let (_, tr) = t.norm_trace_deg(&inner, 3, 1).unwrap();
        assert_eq!(c.coeff, t.neg(&tr));
        let n0 = frak_s_and_coeff(&[3, 0, 0], &a, &t).unwrap();
        assert_eq!(n0.perms, vec![vec![0, 1, 2]]);
        assert_eq!(n0.coeff, t.norm_trace_deg(&a[0], 3, 1).unwrap().0);
    }

    #[test]
    fn expansion_matches_det_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (p, s, m) in [(2, 1, 2), (2, 1, 3), (3, 1, 2), (2, 2, 2)] {
            let t = build_tower(p, s, m, 1, 1).unwrap();
            for _ in 0..5 {
                let inp = TransitionInput::random(&t, 3, &mut rng);
                let d = det_m(&inp).unwrap();
                assert_eq!(expansion_det(&inp).unwrap(), d);
                assert_eq!(det_m_by_composition(&inp).unwrap(), d);
            }
        }
    }

    #[test]
    fn root_transfer_small() {
        let t = build_tower(2, 1, 2, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inp = TransitionInput::random(&t, 3, &mut rng);
        let rep = verify_root_transfer(&inp, Level::Working).unwrap();
        assert_eq!(rep.searched, 256);
        assert!(rep.roots >= 1);
        assert_eq!(rep.violations, 0);
        let zero = TransitionInput::new(&t, vec![t.zero(); 2], inp.f().to_vec()).unwrap();
        let rep = verify_root_transfer(&zero, Level::Working).unwrap();
        assert_eq!(rep.roots, 256);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn rejects_bad_input() {
        let t = build_tower(2, 1, 2, 2, 1).unwrap();
        let big = t.enumerate(Level::Working).unwrap().find(|z| !t.in_subfield(z, Level::Q)).unwrap();
        let f = vec![s_poly(1, &t); 2];
        assert!(matches!(
            TransitionInput::new(&t, vec![big, t.one()], f.clone()),
            Err(TransitionError::InvariantViolation(_))
        ));
        let g = vec![LinPoly::monomial(&t, 2, t.generator(), 0), s_poly(1, &t)];
        assert!(TransitionInput::new(&t, vec![t.one(); 2], g).is_err());
    }
}
