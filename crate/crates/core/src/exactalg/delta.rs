//! Formal delta distributions and window comparison against rational
//! expansions.
//!
//! The atoms are `T0(c) = z^-1 d(c w/z) = sum_n c^n w^n z^(-n-1)` and its
//! `w`-derivative `T1(c)`; a [`DeltaTerm`] is a Laurent-polynomial multiple
//! of one atom. Multiples may mention `z`; normalization eliminates `z`
//! through the exact rewriting
//! `z^a T0 = c^a w^a T0` and `z^a T1 = c^a w^a T1 + a c^a w^(a-1) T0`,
//! then merges terms with equal pole location and order.

use super::laurent::CycloLaurent;
use super::series::{iota_expand, Orientation};
use super::ExactError;
use std::fmt;

#[derive(Clone)]
pub struct DeltaTerm {
    coeff: CycloLaurent,
    scale: CycloLaurent,
    order: u32,
    z_var: String,
    w_var: String,
}

/// `c^a` for a unit monomial `c` and any integer `a`.
fn monomial_ipow(c: &CycloLaurent, a: i64) -> Result<CycloLaurent, ExactError> {
    if a >= 0 {
        Ok(c.pow(a as u32))
    } else {
        let inv = c.try_inverse_monomial().ok_or_else(|| ExactError::NotUnit {
            detail: format!("monomial power of {c}"),
        })?;
        Ok(inv.pow((-a) as u32))
    }
}

impl DeltaTerm {
    /// `coeff * T_order(scale)`. The pole location `scale` must be a unit
    /// monomial free of the series variables; `coeff` may mention them.
    pub fn new(
        coeff: CycloLaurent,
        scale: CycloLaurent,
        order: u32,
        z_var: &str,
        w_var: &str,
    ) -> Result<Self, ExactError> {
        if order > 1 {
            return Err(ExactError::DerivOrder { order });
        }
        if scale.contains_var(z_var) || scale.contains_var(w_var) {
            return Err(ExactError::NotMonomial {
                detail: format!("pole location mentions {z_var} or {w_var}"),
            });
        }
        if scale.as_monomial().is_none() {
            return Err(ExactError::NotMonomial {
                detail: "pole location must be a single term".into(),
            });
        }
        if scale.try_inverse_monomial().is_none() {
            return Err(ExactError::NotUnit {
                detail: format!("pole location {scale}"),
            });
        }
        Ok(DeltaTerm {
            coeff,
            scale,
            order,
            z_var: z_var.to_string(),
            w_var: w_var.to_string(),
        })
    }

    pub fn coeff(&self) -> &CycloLaurent {
        &self.coeff
    }

    pub fn scale(&self) -> &CycloLaurent {
        &self.scale
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Coefficient of `z^m`, a Laurent polynomial in `w`. Requires a
    /// `z`-free multiple, i.e. a normalized term.
    fn window_coeff(&self, m: i64) -> Result<CycloLaurent, ExactError> {
        if self.coeff.contains_var(&self.z_var) {
            return Err(ExactError::SeriesMismatch {
                detail: "window coefficient of an unnormalized delta term".into(),
            });
        }
        let c_pow = monomial_ipow(&self.scale, -m - 1)?;
        let w = |e: i64| CycloLaurent::monomial(super::cyclo::CycloElem::one(1), &[(self.w_var.as_str(), e)]);
        let res = match self.order {
            0 => self.coeff.mul(&c_pow).mul(&w(-m - 1)),
            1 => self
                .coeff
                .mul(&c_pow)
                .mul(&w(-m - 2))
                .mul_int(-m - 1),
            _ => unreachable!("order validated at construction"),
        };
        Ok(res)
    }
}

impl fmt::Debug for DeltaTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (z, w) = (&self.z_var, &self.w_var);
        let atom = format!("{z}^-1 d({} {w}/{z})", self.scale);
        match self.order {
            0 => write!(f, "({}) * {atom}", self.coeff),
            _ => write!(f, "({}) * d_{w}[{atom}]", self.coeff),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DeltaExpr {
    terms: Vec<DeltaTerm>,
}

impl DeltaExpr {
    pub fn new(terms: Vec<DeltaTerm>) -> Self {
        DeltaExpr { terms }
    }

    pub fn empty() -> Self {
        DeltaExpr { terms: Vec::new() }
    }

    pub fn push(&mut self, term: DeltaTerm) {
        self.terms.push(term);
    }

    pub fn terms(&self) -> &[DeltaTerm] {
        &self.terms
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        DeltaExpr { terms }
    }

    pub fn neg(&self) -> Self {
        DeltaExpr {
            terms: self
                .terms
                .iter()
                .map(|t| DeltaTerm {
                    coeff: t.coeff.neg(),
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Multiply every term by a Laurent polynomial.
    pub fn mul_poly(&self, p: &CycloLaurent) -> Self {
        DeltaExpr {
            terms: self
                .terms
                .iter()
                .map(|t| DeltaTerm {
                    coeff: t.coeff.mul(p),
                    ..t.clone()
                })
                .collect(),
        }
    }

    /// Formal `d/dw` by the product rule. Fails on terms already at order 1.
    pub fn d_dw(&self) -> Result<Self, ExactError> {
        let mut terms = Vec::new();
        for t in &self.terms {
            if t.order != 0 {
                return Err(ExactError::DerivOrder { order: t.order + 1 });
            }
            let dcoeff = t.coeff.derivative(&t.w_var);
            if !dcoeff.is_zero() {
                terms.push(DeltaTerm {
                    coeff: dcoeff,
                    ..t.clone()
                });
            }
            terms.push(DeltaTerm {
                order: 1,
                ..t.clone()
            });
        }
        Ok(DeltaExpr { terms })
    }

    pub fn normalized(&self) -> Result<Self, ExactError> {
        delta_normalize(self)
    }
}

impl PartialEq for DeltaExpr {
    fn eq(&self, other: &Self) -> bool {
        let a = delta_normalize(self).expect("validated terms normalize");
        let b = delta_normalize(other).expect("validated terms normalize");
        if a.terms.len() != b.terms.len() {
            return false;
        }
        a.terms.iter().zip(&b.terms).all(|(x, y)| {
            x.order == y.order
                && x.z_var == y.z_var
                && x.w_var == y.w_var
                && x.scale == y.scale
                && x.coeff == y.coeff
        })
    }
}

impl Eq for DeltaExpr {}

/// Eliminate `z` from every multiple, merge equal (pole, order) atoms, drop
/// zeros, and order terms deterministically.
pub fn delta_normalize(expr: &DeltaExpr) -> Result<DeltaExpr, ExactError> {
    // (scale, order, z-free coeff) accumulator
    let mut acc: Vec<DeltaTerm> = Vec::new();
    let mut deposit = |t: DeltaTerm| {
        if t.coeff.is_zero() {
            return;
        }
        for u in acc.iter_mut() {
            if u.order == t.order
                && u.z_var == t.z_var
                && u.w_var == t.w_var
                && u.scale == t.scale
            {
                u.coeff = u.coeff.add(&t.coeff);
                return;
            }
        }
        acc.push(t);
    };
    for t in &expr.terms {
        let w = |e: i64| {
            CycloLaurent::monomial(super::cyclo::CycloElem::one(1), &[(t.w_var.as_str(), e)])
        };
        for (a, part) in t.coeff.split_by_exp(&t.z_var) {
            let c_a = monomial_ipow(&t.scale, a)?;
            match t.order {
                0 => deposit(DeltaTerm {
                    coeff: part.mul(&c_a).mul(&w(a)),
                    ..t.clone()
                }),
                _ => {
                    deposit(DeltaTerm {
                        coeff: part.mul(&c_a).mul(&w(a)),
                        ..t.clone()
                    });
                    if a != 0 {
                        deposit(DeltaTerm {
                            coeff: part.mul(&c_a).mul(&w(a - 1)).mul_int(a),
                            order: 0,
                            ..t.clone()
                        });
                    }
                }
            }
        }
    }
    acc.retain(|t| !t.coeff.is_zero());
    acc.sort_by_key(|t| (t.order, format!("{}", t.scale), t.z_var.clone(), t.w_var.clone()));
    Ok(DeltaExpr { terms: acc })
}

/// Result of a window comparison between `(iota_zw - iota_wz)(num/den)` and
/// a delta expression.
#[derive(Debug, Clone)]
pub struct WindowReport {
    pub half_width: i64,
    pub checked: u32,
    pub pass: bool,
    pub mismatch: Option<(i64, String)>,
}

/// Compare the two-sided expansion difference of `num / prod (z - c w)^m`
/// against `delta`, coefficient by coefficient on `z^m` for
/// `m in [-half_width, half_width]`.
pub fn series_window_compare(
    z_var: &str,
    w_var: &str,
    num: &CycloLaurent,
    den: &[(CycloLaurent, u32)],
    delta: &DeltaExpr,
    half_width: i64,
) -> Result<WindowReport, ExactError> {
    for (_, mult) in den {
        if *mult > 2 {
            return Err(ExactError::RepeatedRoot { mult: *mult });
        }
    }
    for t in &delta.terms {
        if t.z_var != z_var || t.w_var != w_var {
            return Err(ExactError::SeriesMismatch {
                detail: format!(
                    "delta term in ({}, {}) compared in ({z_var}, {w_var})",
                    t.z_var, t.w_var
                ),
            });
        }
    }
    let normalized = delta_normalize(delta)?;
    let deg_den: i64 = den.iter().map(|(_, m)| *m as i64).sum();
    let total_deg = num
        .homogeneous_degree(&[z_var, w_var])
        .ok_or_else(|| ExactError::NotHomogeneous {
            detail: "window comparison numerator".into(),
        })?
        - deg_den;
    let hw = half_width.max(0);
    let zow = iota_expand(
        z_var,
        w_var,
        num,
        den,
        Orientation::ZOverW,
        (total_deg + hw).max(0),
    )?;
    let woz = iota_expand(z_var, w_var, num, den, Orientation::WOverZ, hw)?;
    let mut checked = 0u32;
    for m in -hw..=hw {
        let w_exp = total_deg - m;
        let wmono = CycloLaurent::monomial(super::cyclo::CycloElem::one(1), &[(w_var, w_exp)]);
        let n_zow = total_deg - m;
        let left_zow = if n_zow <= zow.trunc() {
            zow.coeff(n_zow)?.mul(&wmono)
        } else {
            CycloLaurent::zero(1)
        };
        let left_woz = woz.coeff(m)?.mul(&wmono);
        let lhs = left_zow.sub(&left_woz);
        let mut rhs = CycloLaurent::zero(1);
        for t in &normalized.terms {
            rhs = rhs.add(&t.window_coeff(m)?);
        }
        checked += 1;
        if lhs != rhs {
            return Ok(WindowReport {
                half_width: hw,
                checked,
                pass: false,
                mismatch: Some((m, format!("coefficient of {z_var}^{m}: {lhs} vs {rhs}"))),
            });
        }
    }
    Ok(WindowReport {
        half_width: hw,
        checked,
        pass: true,
        mismatch: None,
    })
}
