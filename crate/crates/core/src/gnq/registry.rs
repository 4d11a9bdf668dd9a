//! Families of criterion instances, loaded from JSON.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::expr::{Ctx, Env, ExprError, Expression, IntExpression};
use super::MAX_N;
use crate::gf::{build_tower, FieldTower, GfError};
use crate::poly::{all_ones, ord_gcd};

const BUILTIN: &str = include_str!("../../data/registry.json");

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RegistryError {
    #[error("unknown family {0:?}")]
    UnknownId(String),
    #[error("missing parameter {0:?}")]
    MissingParam(String),
    #[error("unexpected parameter {0:?}")]
    UnknownParam(String),
    #[error("predicate failed: {0}")]
    PredicateFailed(String),
    #[error("tower does not match the family (need p={p}, s={s}, m={m}, e={e})")]
    TowerMismatch { p: u32, s: u32, m: u32, e: i64 },
    #[error("n is out of range")]
    BadN,
    #[error("malformed registry: {0}")]
    Malformed(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Applicability conditions on the integer parameters.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Predicate {
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
    Positive(Vec<IntExpression>),
    Coprime([IntExpression; 2]),
    Eq([IntExpression; 2]),
    Gt([IntExpression; 2]),
    /// d | n
    Divides([IntExpression; 2]),
    NotDivides([IntExpression; 2]),
    /// gcd(num/den, 1 + x + ⋯ + x^(e−1)) = 1 over F_p; num/den must be exact.
    PolyCoprimeAllOnes { num: Expression, den: Expression },
}

fn gcd_i(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Predicate {
    pub fn eval(&self, env: &Env, tower: &FieldTower) -> Result<bool, RegistryError> {
        let q = tower.q();
        let ev = |e: &IntExpression| e.eval(env, q);
        Ok(match self {
            Predicate::All(ps) => {
                for p in ps {
                    if !p.eval(env, tower)? {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Any(ps) => {
                for p in ps {
                    if p.eval(env, tower)? {
                        return Ok(true);
                    }
                }
                false
            }
            Predicate::Positive(xs) => {
                for x in xs {
                    if ev(x)? <= 0 {
                        return Ok(false);
                    }
                }
                true
            }
            Predicate::Coprime([a, b]) => gcd_i(ev(a)?, ev(b)?) == 1,
            Predicate::Eq([a, b]) => ev(a)? == ev(b)?,
            Predicate::Gt([a, b]) => ev(a)? > ev(b)?,
            Predicate::Divides([d, n]) => {
                let d = ev(d)?;
                d != 0 && ev(n)? % d == 0
            }
            Predicate::NotDivides([d, n]) => {
                let d = ev(d)?;
                d == 0 || ev(n)? % d != 0
            }
            Predicate::PolyCoprimeAllOnes { num, den } => {
                let e = *env.get("e").ok_or_else(|| RegistryError::MissingParam("e".into()))?;
                if e < 1 {
                    return Ok(false);
                }
                let ctx = Ctx { tower, env, c: tower.zero() };
                let (n, d) = (num.to_ord(&ctx)?, den.to_ord(&ctx)?);
                let quot = n
                    .div_exact(&d)
                    .map_err(|er| RegistryError::Malformed(er.to_string()))?
                    .ok_or_else(|| RegistryError::Malformed(format!("{d} does not divide {n}")))?;
                if quot.is_zero() {
                    return Ok(false);
                }
                ord_gcd(&quot, &all_ones(e as usize, tower)).map_err(|er| RegistryError::Malformed(er.to_string()))?.is_one()
            }
        })
    }

    /// The first failing leaf, for error messages.
    fn explain(&self, env: &Env, tower: &FieldTower) -> String {
        match self {
            Predicate::All(ps) => ps
                .iter()
                .find(|p| !p.eval(env, tower).unwrap_or(false))
                .map_or_else(|| self.to_string(), |p| p.explain(env, tower)),
            _ => self.to_string(),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ps: &[Predicate], sep: &str| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(sep);
        match self {
            Predicate::All(ps) => write!(f, "({})", join(ps, " and ")),
            Predicate::Any(ps) => write!(f, "({})", join(ps, " or ")),
            Predicate::Positive(xs) => {
                let s: Vec<_> = xs.iter().map(|x| x.source().to_string()).collect();
                write!(f, "{} > 0", s.join(", "))
            }
            Predicate::Coprime([a, b]) => write!(f, "gcd({}, {}) = 1", a.source(), b.source()),
            Predicate::Eq([a, b]) => write!(f, "{} = {}", a.source(), b.source()),
            Predicate::Gt([a, b]) => write!(f, "{} > {}", a.source(), b.source()),
            Predicate::Divides([a, b]) => write!(f, "{} | {}", a.source(), b.source()),
            Predicate::NotDivides([a, b]) => write!(f, "{} does not divide {}", a.source(), b.source()),
            Predicate::PolyCoprimeAllOnes { num, den } => {
                write!(f, "gcd(({num})/({den}), (x^e-1)/(x-1)) = 1")
            }
        }
    }
}

/// One family: integer parameters, a predicate, and the criterion data.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Family {
    pub id: String,
    pub p: u32,
    pub s: u32,
    pub m: u32,
    pub params: Vec<String>,
    /// Exponent of g_{n,q} whose reduction is `congruence`; absent for bare polynomials.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<IntExpression>,
    pub predicate: Predicate,
    /// g_{n,q} mod x^(q^e) − x; defaults to `f`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub congruence: Option<Expression>,
    pub f: Expression,
    pub fbar: Expression,
    pub f_c: Vec<Expression>,
    pub a_c: Vec<Expression>,
    pub b_c: Expression,
    pub det_num: Expression,
    pub det_den: Expression,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registry {
    pub families: Vec<Family>,
}

/// A family with its parameters bound.
#[derive(Clone, Debug)]
pub struct CriterionInstance {
    pub id: String,
    pub params: Env,
    pub e: u32,
    pub n: Option<u64>,
    pub congruence: Option<Expression>,
    pub f: Expression,
    pub fbar: Expression,
    pub f_c: Vec<Expression>,
    pub a_c: Vec<Expression>,
    pub b_c: Expression,
    pub det_num: Expression,
    pub det_den: Expression,
}

impl Registry {
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN).expect("bundled registry is well formed")
    }

    pub fn from_json(s: &str) -> Result<Self, RegistryError> {
        let r: Registry = serde_json::from_str(s).map_err(|e| RegistryError::Malformed(e.to_string()))?;
        for f in &r.families {
            if f.f_c.len() != f.m as usize || f.a_c.len() != f.m as usize {
                return Err(RegistryError::Malformed(format!("{}: expected {} f_c and a_c entries", f.id, f.m)));
            }
        }
        Ok(r)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }

    pub fn family(&self, id: &str) -> Result<&Family, RegistryError> {
        self.families
            .iter()
            .find(|f| f.id == id)
            .ok_or_else(|| RegistryError::UnknownId(id.to_string()))
    }

    /// Tower F_p ⊂ F_r ⊂ F_q ⊂ F_{q^e} ⊂ F_{q^(e·p)} for the family.
    pub fn tower_for(&self, id: &str, e: u32) -> Result<FieldTower, RegistryError> {
        let f = self.family(id)?;
        Ok(build_tower(f.p, f.s, f.m, e, f.p)?)
    }

    pub fn instance(&self, id: &str, params: &Env, tower: &FieldTower) -> Result<CriterionInstance, RegistryError> {
        let fam = self.family(id)?;
        for k in params.keys() {
            if !fam.params.contains(k) {
                return Err(RegistryError::UnknownParam(k.clone()));
            }
        }
        for k in &fam.params {
            match params.get(k) {
                None => return Err(RegistryError::MissingParam(k.clone())),
                Some(&v) if v <= 0 => return Err(RegistryError::PredicateFailed(format!("{k} > 0"))),
                _ => {}
            }
        }
        let e = *params.get("e").ok_or_else(|| RegistryError::MissingParam("e".into()))?;
        if (tower.p(), tower.s(), tower.m(), tower.e() as i64) != (fam.p, fam.s, fam.m, e) {
            return Err(RegistryError::TowerMismatch { p: fam.p, s: fam.s, m: fam.m, e });
        }
        if !fam.predicate.eval(params, tower)? {
            return Err(RegistryError::PredicateFailed(fam.predicate.explain(params, tower)));
        }
        let n = match &fam.n {
            None => None,
            Some(x) => {
                let v = x.eval(params, tower.q())?;
                if v < 0 || v > MAX_N as i128 {
                    return Err(RegistryError::BadN);
                }
                Some(v as u64)
            }
        };
        Ok(CriterionInstance {
            id: fam.id.clone(),
            params: params.clone(),
            e: e as u32,
            n,
            congruence: fam.congruence.clone(),
            f: fam.f.clone(),
            fbar: fam.fbar.clone(),
            f_c: fam.f_c.clone(),
            a_c: fam.a_c.clone(),
            b_c: fam.b_c.clone(),
            det_num: fam.det_num.clone(),
            det_den: fam.det_den.clone(),
        })
    }
}

/// Looks up a family in the bundled registry and binds its parameters.
pub fn instance_registry(id: &str, params: &Env, tower: &FieldTower) -> Result<CriterionInstance, RegistryError> {
    Registry::builtin().instance(id, params, tower)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, i64)]) -> Env {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn builtin_loads_and_round_trips() {
        let r = Registry::builtin();
        assert_eq!(r.families.len(), 7);
        assert_eq!(Registry::from_json(&r.to_json()).unwrap(), r);
    }

    type Case<'a> = (&'a str, &'a [(&'a str, i64)], u64);

    #[test]
    fn n_values() {
        let r = Registry::builtin();
        let cases: &[Case] = &[
            ("P3.3", &[("a", 1), ("b", 2), ("k", 2), ("e", 5)], 17429),
            ("P3.3", &[("a", 2), ("b", 3), ("k", 2), ("e", 5)], 17489),
            ("P3.3", &[("a", 2), ("b", 4), ("k", 2), ("e", 5)], 17681),
            ("P3.4", &[("a", 1), ("e", 4)], 2317),
            ("P3.4", &[("a", 2), ("e", 6)], 135217),
            ("P3.5", &[("e", 5)], 8713),
            ("P3.6", &[("e", 4)], 2377),
            ("P3.7", &[("e", 6)], 135457),
        ];
        for (id, ps, n) in cases {
            let ps = env(ps);
            let t = r.tower_for(id, ps["e"] as u32).unwrap();
            assert_eq!(r.instance(id, &ps, &t).unwrap().n, Some(*n), "{id}");
        }
    }

    #[test]
    fn predicate_failures() {
        let r = Registry::builtin();
        let t4 = r.tower_for("P3.3", 4).unwrap();
        let e = r.instance("P3.3", &env(&[("a", 2), ("b", 1), ("k", 2), ("e", 4)]), &t4).unwrap_err();
        assert!(matches!(e, RegistryError::PredicateFailed(ref s) if s.contains("gcd(e, 2*k)")));
        let e = r.instance("P3.5", &env(&[("e", 4)]), &t4).unwrap_err();
        assert!(matches!(e, RegistryError::PredicateFailed(_)));
        assert!(matches!(r.instance("P9.9", &env(&[]), &t4), Err(RegistryError::UnknownId(_))));
        assert!(matches!(r.instance("P3.5", &env(&[]), &t4), Err(RegistryError::MissingParam(_))));
        let t5 = r.tower_for("P3.5", 5).unwrap();
        assert!(matches!(r.instance("P3.5", &env(&[("e", 3)]), &t5), Err(RegistryError::TowerMismatch { .. })));
    }

    #[test]
    fn poly_predicate() {
        let r = Registry::builtin();
        let fam = r.family("R3.8a").unwrap();
        let t = r.tower_for("R3.8a", 5).unwrap();
        // a=1, b=1: (x^2+1+x^3+x^3)/(x+1)^2 = 1
        assert!(fam.predicate.eval(&env(&[("a", 1), ("b", 1), ("e", 5)]), &t).unwrap());
    }
}
