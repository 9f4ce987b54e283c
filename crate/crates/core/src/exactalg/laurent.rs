//! Multivariate Laurent polynomials over cyclotomic integers.
//!
//! Terms are keyed by exponent vectors aligned with a sorted variable list;
//! zero coefficients are never stored, so the zero polynomial has no terms.
//! Binary operations take the union of variable sets and the lcm of levels.

use super::cyclo::CycloElem;
use super::ExactError;
use num::integer::lcm;
use std::collections::BTreeMap;
use std::fmt;

/// Operation selector for [`lp_arith`](CycloLaurent::lp_arith).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Mul,
}

#[derive(Clone)]
pub struct CycloLaurent {
    level: u32,
    vars: Vec<String>,
    terms: BTreeMap<Vec<i64>, CycloElem>,
}

impl CycloLaurent {
    pub fn zero(level: u32) -> Self {
        CycloLaurent {
            level,
            vars: Vec::new(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(level: u32) -> Self {
        Self::constant(CycloElem::one(level))
    }

    pub fn from_int(level: u32, n: i64) -> Self {
        Self::constant(CycloElem::from_int(level, n))
    }

    pub fn constant(c: CycloElem) -> Self {
        let level = c.level();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Vec::new(), c);
        }
        CycloLaurent {
            level,
            vars: Vec::new(),
            terms,
        }
    }

    /// Single term `coeff * prod var^exp`. Repeated variables accumulate.
    pub fn monomial(coeff: CycloElem, exps: &[(&str, i64)]) -> Self {
        let mut vars: Vec<String> = exps.iter().map(|(v, _)| v.to_string()).collect();
        vars.sort();
        vars.dedup();
        let mut key = vec![0i64; vars.len()];
        for (v, e) in exps {
            let idx = vars.iter().position(|x| x == v).unwrap();
            key[idx] += e;
        }
        let level = coeff.level();
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(key, coeff);
        }
        CycloLaurent { level, vars, terms }
    }

    /// The variable `name` itself, at level 1.
    pub fn var(name: &str) -> Self {
        Self::monomial(CycloElem::one(1), &[(name, 1)])
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter_terms(&self) -> impl Iterator<Item = (&Vec<i64>, &CycloElem)> {
        self.terms.iter()
    }

    /// Lift every coefficient to a multiple of the current level.
    pub fn embed_level(&self, to_level: u32) -> Result<Self, ExactError> {
        if to_level == self.level {
            return Ok(self.clone());
        }
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            terms.insert(k.clone(), c.embed(to_level)?);
        }
        Ok(CycloLaurent {
            level: to_level,
            vars: self.vars.clone(),
            terms,
        })
    }

    /// Drop variables whose exponent vanishes in every term.
    pub fn canonicalized(&self) -> Self {
        let used: Vec<usize> = (0..self.vars.len())
            .filter(|&i| self.terms.keys().any(|k| k[i] != 0))
            .collect();
        if used.len() == self.vars.len() {
            return self.clone();
        }
        let vars: Vec<String> = used.iter().map(|&i| self.vars[i].clone()).collect();
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let key: Vec<i64> = used.iter().map(|&i| k[i]).collect();
            terms.insert(key, c.clone());
        }
        CycloLaurent {
            level: self.level,
            vars,
            terms,
        }
    }

    fn remap(&self, new_vars: &[String]) -> BTreeMap<Vec<i64>, CycloElem> {
        let pos: Vec<usize> = self
            .vars
            .iter()
            .map(|v| new_vars.iter().position(|x| x == v).expect("var present"))
            .collect();
        let mut out = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut key = vec![0i64; new_vars.len()];
            for (i, &e) in k.iter().enumerate() {
                key[pos[i]] = e;
            }
            out.insert(key, c.clone());
        }
        out
    }

    /// Common (level, vars) frame for two operands.
    fn aligned(a: &Self, b: &Self) -> Result<(Self, Self), ExactError> {
        let level = lcm(a.level, b.level);
        let mut vars: Vec<String> = a.vars.iter().chain(b.vars.iter()).cloned().collect();
        vars.sort();
        vars.dedup();
        let a2 = CycloLaurent {
            level,
            terms: a.embed_level(level)?.remap(&vars),
            vars: vars.clone(),
        };
        let b2 = CycloLaurent {
            level,
            terms: b.embed_level(level)?.remap(&vars),
            vars,
        };
        Ok((a2, b2))
    }

    fn insert_add(terms: &mut BTreeMap<Vec<i64>, CycloElem>, key: Vec<i64>, val: CycloElem) {
        if val.is_zero() {
            return;
        }
        match terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(val);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&val).expect("aligned levels");
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let (mut a, b) = Self::aligned(self, other).expect("levels in range");
        for (k, c) in b.terms {
            Self::insert_add(&mut a.terms, k, c);
        }
        a
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        CycloLaurent {
            level: self.level,
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = Self::aligned(self, other).expect("levels in range");
        let mut terms = BTreeMap::new();
        for (ka, ca) in &a.terms {
            for (kb, cb) in &b.terms {
                let key: Vec<i64> = ka.iter().zip(kb).map(|(x, y)| x + y).collect();
                let val = ca.mul(cb).expect("aligned levels");
                Self::insert_add(&mut terms, key, val);
            }
        }
        CycloLaurent {
            level: a.level,
            vars: a.vars,
            terms,
        }
    }

    pub fn mul_int(&self, n: i64) -> Self {
        if n == 0 {
            return Self::zero(self.level);
        }
        CycloLaurent {
            level: self.level,
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(k, c)| (k.clone(), c.mul_int(n)))
                .collect(),
        }
    }

    pub fn mul_elem(&self, c: &CycloElem) -> Self {
        self.mul(&Self::constant(c.clone()))
    }

    pub fn pow(&self, mut e: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::one(self.level);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Spec-level binary arithmetic entry point.
    pub fn lp_arith(a: &Self, b: &Self, op: Op) -> Self {
        match op {
            Op::Add => a.add(b),
            Op::Mul => a.mul(b),
        }
    }

    fn var_index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// True when some term has a nonzero exponent on `var`.
    pub fn contains_var(&self, var: &str) -> bool {
        match self.var_index(var) {
            None => false,
            Some(i) => self.terms.keys().any(|k| k[i] != 0),
        }
    }

    pub fn max_exp(&self, var: &str) -> Option<i64> {
        if self.terms.is_empty() {
            return None;
        }
        Some(match self.var_index(var) {
            None => 0,
            Some(i) => self.terms.keys().map(|k| k[i]).max().unwrap(),
        })
    }

    pub fn min_exp(&self, var: &str) -> Option<i64> {
        if self.terms.is_empty() {
            return None;
        }
        Some(match self.var_index(var) {
            None => 0,
            Some(i) => self.terms.keys().map(|k| k[i]).min().unwrap(),
        })
    }

    /// Group terms by the exponent of `var`; the returned polynomials no
    /// longer mention `var`.
    pub fn split_by_exp(&self, var: &str) -> BTreeMap<i64, CycloLaurent> {
        let mut out: BTreeMap<i64, CycloLaurent> = BTreeMap::new();
        let idx = self.var_index(var);
        let rest_vars: Vec<String> = self
            .vars
            .iter()
            .filter(|v| v.as_str() != var)
            .cloned()
            .collect();
        for (k, c) in &self.terms {
            let (e, key): (i64, Vec<i64>) = match idx {
                None => (0, k.clone()),
                Some(i) => (
                    k[i],
                    k.iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, &x)| x)
                        .collect(),
                ),
            };
            let entry = out.entry(e).or_insert_with(|| CycloLaurent {
                level: self.level,
                vars: rest_vars.clone(),
                terms: BTreeMap::new(),
            });
            Self::insert_add(&mut entry.terms, key, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Coefficient of `var^k` as a polynomial in the remaining variables.
    pub fn coeff_of(&self, var: &str, k: i64) -> CycloLaurent {
        self.split_by_exp(var)
            .remove(&k)
            .unwrap_or_else(|| Self::zero(self.level))
    }

    /// Total degree over `vars` when every term agrees; `Some(0)` for zero.
    pub fn homogeneous_degree(&self, vars: &[&str]) -> Option<i64> {
        let idxs: Vec<Option<usize>> = vars.iter().map(|v| self.var_index(v)).collect();
        let mut deg: Option<i64> = None;
        for k in self.terms.keys() {
            let d: i64 = idxs.iter().map(|i| i.map_or(0, |i| k[i])).sum();
            match deg {
                None => deg = Some(d),
                Some(d0) if d0 != d => return None,
                _ => {}
            }
        }
        Some(deg.unwrap_or(0))
    }

    /// The (coefficient, exponent list) of a one-term polynomial.
    pub fn as_monomial(&self) -> Option<(CycloElem, Vec<(String, i64)>)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, c) = self.terms.iter().next().unwrap();
        let exps = self
            .vars
            .iter()
            .zip(k)
            .filter(|(_, &e)| e != 0)
            .map(|(v, &e)| (v.clone(), e))
            .collect();
        Some((c.clone(), exps))
    }

    /// Inverse of a one-term polynomial whose coefficient is a unit.
    pub fn try_inverse_monomial(&self) -> Option<Self> {
        let (c, exps) = self.as_monomial()?;
        let cinv = c.try_inverse()?;
        let flipped: Vec<(&str, i64)> = exps.iter().map(|(v, e)| (v.as_str(), -e)).collect();
        Some(Self::monomial(cinv, &flipped))
    }

    /// Replace `var` by a one-term polynomial; exponents transfer, so the
    /// value's coefficient must be a unit when negative exponents occur.
    pub fn substitute(&self, var: &str, value: &Self) -> Result<Self, ExactError> {
        let idx = match self.var_index(var) {
            Some(i) => i,
            None => return Ok(self.clone()),
        };
        let (vc, vexps) = value.as_monomial().ok_or_else(|| ExactError::NotMonomial {
            detail: format!("substitution value for {var} has {} terms", value.num_terms()),
        })?;
        let level = lcm(self.level, value.level());
        let vc = vc.embed(level)?;
        let vc_inv = vc.try_inverse();
        let mut acc = Self::zero(level);
        for (k, c) in &self.terms {
            let t = k[idx];
            let coeff_pow = if t >= 0 {
                vc.pow(t as u32)?
            } else {
                let inv = vc_inv.clone().ok_or_else(|| ExactError::NotUnit {
                    detail: format!("substitution coefficient for {var} with negative exponent"),
                })?;
                inv.pow((-t) as u32)?
            };
            let mut exps: Vec<(&str, i64)> = self
                .vars
                .iter()
                .zip(k)
                .filter(|(v, _)| v.as_str() != var)
                .map(|(v, &e)| (v.as_str(), e))
                .collect();
            let scaled: Vec<(String, i64)> = vexps.iter().map(|(v, e)| (v.clone(), e * t)).collect();
            for (v, e) in &scaled {
                exps.push((v.as_str(), *e));
            }
            let coeff = c.embed(level)?.mul(&coeff_pow)?;
            acc = acc.add(&Self::monomial(coeff, &exps));
        }
        Ok(acc)
    }

    /// Exact quotient by `z^e - c * w^e`; `c` a unit one-term polynomial not
    /// involving `z` or `w`. Doubles as the divisibility test.
    pub fn divide_linear(
        &self,
        z_var: &str,
        c: &Self,
        w_var: &str,
        e: u32,
    ) -> Result<Self, ExactError> {
        if e == 0 {
            return Err(ExactError::NotDivisible {
                detail: "divisor exponent must be positive".into(),
            });
        }
        if c.contains_var(z_var) || c.contains_var(w_var) {
            return Err(ExactError::NotMonomial {
                detail: format!("divisor scale mentions {z_var} or {w_var}"),
            });
        }
        let (cc, _) = c.as_monomial().ok_or_else(|| ExactError::NotMonomial {
            detail: "divisor scale must be a single term".into(),
        })?;
        if cc.try_inverse().is_none() {
            return Err(ExactError::NotUnit {
                detail: "divisor scale coefficient".into(),
            });
        }
        if self.is_zero() {
            return Ok(Self::zero(self.level));
        }
        let level = lcm(self.level, c.level());
        let me = self.embed_level(level)?;
        let cwe = c
            .embed_level(level)?
            .mul(&Self::monomial(CycloElem::one(level), &[(w_var, e as i64)]));
        let mut rem = me.split_by_exp(z_var);
        let lo = *rem.keys().next().unwrap();
        let mut quot: BTreeMap<i64, CycloLaurent> = BTreeMap::new();
        while let Some((&d, _)) = rem.iter().next_back() {
            let lead = rem.remove(&d).unwrap();
            if d - (e as i64) < lo {
                return Err(ExactError::NotDivisible {
                    detail: format!("remainder of degree {d} in {z_var}"),
                });
            }
            let down = d - e as i64;
            match quot.entry(down) {
                std::collections::btree_map::Entry::Vacant(en) => {
                    en.insert(lead.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut en) => {
                    let s = en.get().add(&lead);
                    if s.is_zero() {
                        en.remove();
                    } else {
                        *en.get_mut() = s;
                    }
                }
            }
            let feed = lead.mul(&cwe);
            if !feed.is_zero() {
                match rem.entry(down) {
                    std::collections::btree_map::Entry::Vacant(en) => {
                        en.insert(feed);
                    }
                    std::collections::btree_map::Entry::Occupied(mut en) => {
                        let s = en.get().add(&feed);
                        if s.is_zero() {
                            en.remove();
                        } else {
                            *en.get_mut() = s;
                        }
                    }
                }
            }
        }
        let mut out = Self::zero(level);
        for (k, p) in quot {
            out = out.add(&p.mul(&Self::monomial(CycloElem::one(level), &[(z_var, k)])));
        }
        Ok(out)
    }

    /// Formal partial derivative.
    pub fn derivative(&self, var: &str) -> Self {
        let idx = match self.var_index(var) {
            Some(i) => i,
            None => return Self::zero(self.level),
        };
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let e = k[idx];
            if e == 0 {
                continue;
            }
            let mut key = k.clone();
            key[idx] = e - 1;
            Self::insert_add(&mut terms, key, c.mul_int(e));
        }
        CycloLaurent {
            level: self.level,
            vars: self.vars.clone(),
            terms,
        }
    }
}

impl PartialEq for CycloLaurent {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = Self::aligned(self, other).expect("levels in range");
        a.terms == b.terms
    }
}

impl Eq for CycloLaurent {}

impl fmt::Debug for CycloLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Laurent(L={}; {})", self.level, self)
    }
}

impl fmt::Display for CycloLaurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let coeff = format!("{c}");
            if coeff.contains(' ') {
                write!(f, "({coeff})")?;
            } else {
                write!(f, "{coeff}")?;
            }
            for (v, &e) in self.vars.iter().zip(k) {
                if e == 1 {
                    write!(f, "*{v}")?;
                } else if e != 0 {
                    write!(f, "*{v}^{e}")?;
                }
            }
        }
        Ok(())
    }
}
