//! Truncated expansions of rational functions in two distinguished variables.
//!
//! A series here is an expansion of a function that is homogeneous in the
//! pair `(z, w)`: for total degree `D` and orientation `|z| > |w|` it has the
//! shape `sum_n s_n * z^(D-n) * w^n` with scalar coefficients `s_n` (Laurent
//! polynomials in the remaining variables). Slots are keyed by the exponent
//! `n` of the small variable; `trunc` is the largest reliable `n` and `lead`
//! a guaranteed lower bound of the support, which is what makes truncation
//! bookkeeping through products exact.

use super::cyclo::CycloElem;
use super::laurent::CycloLaurent;
use super::ExactError;
use std::collections::BTreeMap;
use std::fmt;

/// Sentinel truncation for series known exactly (polynomial content).
pub const EXACT_TRUNC: i64 = i64::MAX / 4;

/// Expansion region: which of the two variables dominates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Expand in positive powers of `w/z`.
    ZOverW,
    /// Expand in positive powers of `z/w`.
    WOverZ,
}

impl Orientation {
    pub fn as_str(&self) -> &'static str {
        match self {
            Orientation::ZOverW => "z_over_w",
            Orientation::WOverZ => "w_over_z",
        }
    }
}

#[derive(Clone)]
pub struct TruncSeries {
    z_var: String,
    w_var: String,
    orientation: Orientation,
    total_deg: i64,
    lead: i64,
    trunc: i64,
    slots: BTreeMap<i64, CycloLaurent>,
}

impl TruncSeries {
    fn frame_of(z_var: &str, w_var: &str, orientation: Orientation) -> (String, String) {
        match orientation {
            Orientation::ZOverW => (z_var.to_string(), w_var.to_string()),
            Orientation::WOverZ => (w_var.to_string(), z_var.to_string()),
        }
    }

    fn big(&self) -> &str {
        match self.orientation {
            Orientation::ZOverW => &self.z_var,
            Orientation::WOverZ => &self.w_var,
        }
    }

    fn small(&self) -> &str {
        match self.orientation {
            Orientation::ZOverW => &self.w_var,
            Orientation::WOverZ => &self.z_var,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn z_var(&self) -> &str {
        &self.z_var
    }

    pub fn w_var(&self) -> &str {
        &self.w_var
    }

    pub fn total_deg(&self) -> i64 {
        self.total_deg
    }

    pub fn trunc(&self) -> i64 {
        self.trunc
    }

    pub fn is_exact(&self) -> bool {
        self.trunc >= EXACT_TRUNC
    }

    /// Scalar coefficient at small-variable exponent `n`.
    pub fn coeff(&self, n: i64) -> Result<CycloLaurent, ExactError> {
        if n > self.trunc {
            return Err(ExactError::SeriesMismatch {
                detail: format!("slot {n} beyond truncation {}", self.trunc),
            });
        }
        Ok(self
            .slots
            .get(&n)
            .cloned()
            .unwrap_or_else(|| CycloLaurent::zero(1)))
    }

    /// The full monomial content `s_n * big^(D-n) * small^n` at slot `n`.
    pub fn slot_term(&self, n: i64) -> Result<CycloLaurent, ExactError> {
        let s = self.coeff(n)?;
        Ok(s.mul(&CycloLaurent::monomial(
            CycloElem::one(1),
            &[(self.big(), self.total_deg - n), (self.small(), n)],
        )))
    }

    pub fn nonzero_slots(&self) -> impl Iterator<Item = (&i64, &CycloLaurent)> {
        self.slots.iter()
    }

    /// Series of a polynomial, exact. The polynomial must be homogeneous in
    /// the two series variables.
    pub fn from_polynomial(
        z_var: &str,
        w_var: &str,
        orientation: Orientation,
        p: &CycloLaurent,
    ) -> Result<Self, ExactError> {
        let total_deg =
            p.homogeneous_degree(&[z_var, w_var])
                .ok_or_else(|| ExactError::NotHomogeneous {
                    detail: format!("polynomial {p} in ({z_var}, {w_var})"),
                })?;
        let (bigv, smallv) = Self::frame_of(z_var, w_var, orientation);
        let level = p.level();
        let one = CycloLaurent::one(level);
        let mut slots = BTreeMap::new();
        for (n, part) in p.split_by_exp(&smallv) {
            let scalar = part.substitute(&bigv, &one)?;
            if !scalar.is_zero() {
                slots.insert(n, scalar);
            }
        }
        let lead = slots.keys().next().copied().unwrap_or(0);
        Ok(TruncSeries {
            z_var: z_var.to_string(),
            w_var: w_var.to_string(),
            orientation,
            total_deg,
            lead,
            trunc: EXACT_TRUNC,
            slots,
        })
    }

    /// Expansion of `1/(z - c w)` in the given region, through slot `trunc`.
    fn inverse_linear_factor(
        z_var: &str,
        w_var: &str,
        orientation: Orientation,
        c: &CycloLaurent,
        trunc: i64,
    ) -> Result<Self, ExactError> {
        if c.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        if c.contains_var(z_var) || c.contains_var(w_var) {
            return Err(ExactError::NotMonomial {
                detail: format!("pole location mentions {z_var} or {w_var}"),
            });
        }
        let cinv = c
            .try_inverse_monomial()
            .ok_or_else(|| ExactError::NotUnit {
                detail: format!("pole location {c}"),
            })?;
        let mut slots = BTreeMap::new();
        match orientation {
            Orientation::ZOverW => {
                // 1/(z - c w) = sum_{n>=0} c^n w^n z^(-n-1)
                let mut acc = CycloLaurent::one(c.level());
                for n in 0..=trunc.max(0) {
                    slots.insert(n, acc.clone());
                    acc = acc.mul(c);
                }
            }
            Orientation::WOverZ => {
                // 1/(z - c w) = -sum_{n>=0} c^(-n-1) z^n w^(-n-1)
                let mut acc = cinv.neg();
                for n in 0..=trunc.max(0) {
                    slots.insert(n, acc.clone());
                    acc = acc.mul(&cinv);
                }
            }
        }
        Ok(TruncSeries {
            z_var: z_var.to_string(),
            w_var: w_var.to_string(),
            orientation,
            total_deg: -1,
            lead: 0,
            trunc: trunc.max(0),
            slots,
        })
    }

    fn check_frame(&self, other: &Self) -> Result<(), ExactError> {
        if self.z_var != other.z_var
            || self.w_var != other.w_var
            || self.orientation != other.orientation
        {
            return Err(ExactError::SeriesMismatch {
                detail: format!(
                    "frames ({}, {}, {}) vs ({}, {}, {})",
                    self.z_var,
                    self.w_var,
                    self.orientation.as_str(),
                    other.z_var,
                    other.w_var,
                    other.orientation.as_str()
                ),
            });
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_frame(other)?;
        let trunc = (self.trunc.saturating_add(other.lead))
            .min(other.trunc.saturating_add(self.lead));
        let mut slots: BTreeMap<i64, CycloLaurent> = BTreeMap::new();
        for (na, sa) in &self.slots {
            for (nb, sb) in &other.slots {
                let n = na + nb;
                if n > trunc {
                    continue;
                }
                let prod = sa.mul(sb);
                match slots.entry(n) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(prod);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        let s = e.get().add(&prod);
                        if s.is_zero() {
                            e.remove();
                        } else {
                            *e.get_mut() = s;
                        }
                    }
                }
            }
        }
        slots.retain(|_, s| !s.is_zero());
        Ok(TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: self.total_deg + other.total_deg,
            lead: self.lead + other.lead,
            trunc,
            slots,
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self, ExactError> {
        self.check_frame(other)?;
        if self.total_deg != other.total_deg && !self.slots.is_empty() && !other.slots.is_empty() {
            return Err(ExactError::SeriesMismatch {
                detail: format!(
                    "total degrees {} vs {}",
                    self.total_deg, other.total_deg
                ),
            });
        }
        let trunc = self.trunc.min(other.trunc);
        let mut slots = self.slots.clone();
        slots.retain(|n, _| *n <= trunc);
        for (n, s) in &other.slots {
            if *n > trunc {
                continue;
            }
            match slots.entry(*n) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(s.clone());
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let sum = e.get().add(s);
                    if sum.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = sum;
                    }
                }
            }
        }
        let total_deg = if self.slots.is_empty() {
            other.total_deg
        } else {
            self.total_deg
        };
        Ok(TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg,
            lead: self.lead.min(other.lead),
            trunc,
            slots,
        })
    }

    pub fn neg(&self) -> Self {
        TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: self.total_deg,
            lead: self.lead,
            trunc: self.trunc,
            slots: self
                .slots
                .iter()
                .map(|(n, s)| (*n, s.neg()))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self, ExactError> {
        self.add(&other.neg())
    }

    /// Multiply every slot by a scalar free of the series variables.
    pub fn mul_scalar(&self, s: &CycloLaurent) -> Result<Self, ExactError> {
        if s.contains_var(&self.z_var) || s.contains_var(&self.w_var) {
            return Err(ExactError::NotMonomial {
                detail: "scalar mentions a series variable".into(),
            });
        }
        let mut slots: BTreeMap<i64, CycloLaurent> = BTreeMap::new();
        for (n, c) in &self.slots {
            let p = c.mul(s);
            if !p.is_zero() {
                slots.insert(*n, p);
            }
        }
        Ok(TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: self.total_deg,
            lead: self.lead,
            trunc: self.trunc,
            slots,
        })
    }

    pub fn truncate_to(&self, trunc: i64) -> Self {
        let trunc = trunc.min(self.trunc);
        let mut slots = self.slots.clone();
        slots.retain(|n, _| *n <= trunc);
        TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: self.total_deg,
            lead: self.lead,
            trunc,
            slots,
        }
    }

    /// Multiplicative inverse as a series. The lowest slot must carry a unit
    /// monomial; exact (polynomial) series must be truncated first so the
    /// result has a well-defined order.
    pub fn inverse(&self) -> Result<Self, ExactError> {
        let (&n0, a0) = self
            .slots
            .iter()
            .next()
            .ok_or(ExactError::ZeroDenominator)?;
        if self.is_exact() {
            return Err(ExactError::SeriesMismatch {
                detail: "truncate an exact series before inverting".into(),
            });
        }
        let a0_inv = a0
            .try_inverse_monomial()
            .ok_or_else(|| ExactError::NotUnit {
                detail: format!("leading series coefficient {a0}"),
            })?;
        let depth = self.trunc - n0;
        let mut a: Vec<CycloLaurent> = Vec::with_capacity(depth.max(0) as usize + 1);
        for j in 0..=depth.max(0) {
            a.push(self.coeff(n0 + j)?);
        }
        let mut b: Vec<CycloLaurent> = vec![a0_inv.clone()];
        for j in 1..=depth.max(0) {
            let mut acc = CycloLaurent::zero(1);
            for k in 1..=j {
                acc = acc.add(&a[k as usize].mul(&b[(j - k) as usize]));
            }
            b.push(acc.neg().mul(&a0_inv));
        }
        let mut slots = BTreeMap::new();
        for (j, s) in b.into_iter().enumerate() {
            if !s.is_zero() {
                slots.insert(-n0 + j as i64, s);
            }
        }
        Ok(TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: -self.total_deg,
            lead: -n0,
            trunc: self.trunc - 2 * n0,
            slots,
        })
    }

    /// Integer power; negative exponents go through [`inverse`](Self::inverse).
    pub fn powi(&self, e: i64) -> Result<Self, ExactError> {
        let base = if e < 0 { self.inverse()? } else { self.clone() };
        let mut acc = TruncSeries {
            z_var: self.z_var.clone(),
            w_var: self.w_var.clone(),
            orientation: self.orientation,
            total_deg: 0,
            lead: 0,
            trunc: base.trunc,
            slots: BTreeMap::from([(0, CycloLaurent::one(1))]),
        };
        for _ in 0..e.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    /// Compare all slots through the common reliable depth. Returns that
    /// depth; reports the first differing slot otherwise.
    pub fn matches(&self, other: &Self) -> Result<i64, ExactError> {
        self.check_frame(other)?;
        if self.total_deg != other.total_deg && !self.slots.is_empty() && !other.slots.is_empty() {
            return Err(ExactError::SeriesMismatch {
                detail: format!("total degrees {} vs {}", self.total_deg, other.total_deg),
            });
        }
        let depth = self.trunc.min(other.trunc);
        let keys: std::collections::BTreeSet<i64> = self
            .slots
            .keys()
            .chain(other.slots.keys())
            .copied()
            .filter(|n| *n <= depth)
            .collect();
        for n in keys {
            let a = self.coeff(n)?;
            let b = other.coeff(n)?;
            if a != b {
                return Err(ExactError::SeriesMismatch {
                    detail: format!("slot {n}: {a} vs {b}"),
                });
            }
        }
        Ok(depth)
    }
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Series[{} deg {} trunc {}](",
            self.orientation.as_str(),
            self.total_deg,
            self.trunc
        )?;
        let mut first = true;
        for (n, _) in self.slots.iter().take(8) {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", self.slot_term(*n).unwrap())?;
        }
        if self.slots.len() > 8 {
            write!(f, " + ...")?;
        }
        write!(f, ")")
    }
}

/// Expansion of `num / prod_i (z - c_i w)^(m_i)` in the region selected by
/// `orientation`, reliable through small-variable exponent `trunc`.
///
/// `num` must be homogeneous in `(z_var, w_var)`; each pole location `c_i`
/// must be a unit monomial free of the series variables.
pub fn iota_expand(
    z_var: &str,
    w_var: &str,
    num: &CycloLaurent,
    den: &[(CycloLaurent, u32)],
    orientation: Orientation,
    trunc: i64,
) -> Result<TruncSeries, ExactError> {
    if trunc < 0 {
        return Err(ExactError::SeriesMismatch {
            detail: format!("negative truncation {trunc}"),
        });
    }
    let mut acc = TruncSeries::from_polynomial(z_var, w_var, orientation, num)?;
    let factor_trunc = trunc - acc.nonzero_slots().next().map(|(n, _)| *n).unwrap_or(0).min(0);
    for (c, mult) in den {
        let factor =
            TruncSeries::inverse_linear_factor(z_var, w_var, orientation, c, factor_trunc)?;
        for _ in 0..*mult {
            acc = acc.mul(&factor)?;
        }
    }
    Ok(acc.truncate_to(trunc))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> CycloLaurent {
        CycloLaurent::var("z")
    }

    fn w() -> CycloLaurent {
        CycloLaurent::var("w")
    }

    fn vmono(k: i64) -> CycloLaurent {
        CycloLaurent::monomial(CycloElem::one(1), &[("v", k)])
    }

    #[test]
    fn simple_pole_both_orientations() {
        let c = vmono(2);
        // |z| > |w|: z^-1 + c w z^-2 + c^2 w^2 z^-3
        let s = iota_expand("z", "w", &CycloLaurent::one(1), &[(c.clone(), 1)], Orientation::ZOverW, 2)
            .unwrap();
        assert_eq!(s.total_deg(), -1);
        assert_eq!(s.coeff(0).unwrap(), CycloLaurent::one(1));
        assert_eq!(s.coeff(1).unwrap(), vmono(2));
        assert_eq!(s.coeff(2).unwrap(), vmono(4));
        assert_eq!(
            s.slot_term(1).unwrap(),
            CycloLaurent::monomial(CycloElem::one(1), &[("v", 2), ("w", 1), ("z", -2)])
        );
        // |w| > |z|: -c^-1 w^-1 - c^-2 z w^-2
        let t = iota_expand("z", "w", &CycloLaurent::one(1), &[(c, 1)], Orientation::WOverZ, 1)
            .unwrap();
        assert_eq!(t.coeff(0).unwrap(), vmono(-2).neg());
        assert_eq!(t.coeff(1).unwrap(), vmono(-4).neg());
        assert_eq!(
            t.slot_term(1).unwrap(),
            CycloLaurent::monomial(CycloElem::from_int(1, -1), &[("v", -4), ("z", 1), ("w", -2)])
        );
    }

    #[test]
    fn double_pole_coefficients() {
        // 1/(z-w)^2 = sum (n+1) w^n z^(-n-2)
        let s = iota_expand(
            "z",
            "w",
            &CycloLaurent::one(1),
            &[(CycloLaurent::one(1), 2)],
            Orientation::ZOverW,
            4,
        )
        .unwrap();
        for n in 0..=4 {
            assert_eq!(s.coeff(n).unwrap(), CycloLaurent::from_int(1, n + 1));
        }
    }

    #[test]
    fn product_with_own_denominator_is_polynomial() {
        let c = CycloLaurent::constant(CycloElem::zeta(3, 1));
        let s = iota_expand("z", "w", &CycloLaurent::one(3), &[(c.clone(), 1)], Orientation::ZOverW, 6)
            .unwrap();
        let lin = TruncSeries::from_polynomial(
            "z",
            "w",
            Orientation::ZOverW,
            &z().sub(&c.mul(&w())),
        )
        .unwrap();
        let prod = s.mul(&lin).unwrap();
        let one = TruncSeries::from_polynomial("z", "w", Orientation::ZOverW, &CycloLaurent::one(3))
            .unwrap()
            .truncate_to(prod.trunc());
        assert!(prod.matches(&one).is_ok());
    }

    #[test]
    fn multiplicative_up_to_truncation() {
        let c = vmono(2);
        let d = CycloLaurent::constant(CycloElem::zeta(4, 1));
        let num_f = z().add(&w());
        let num_g = w().pow(2);
        for orient in [Orientation::ZOverW, Orientation::WOverZ] {
            let f = iota_expand("z", "w", &num_f, &[(c.clone(), 1)], orient, 8).unwrap();
            let g = iota_expand("z", "w", &num_g, &[(d.clone(), 2)], orient, 8).unwrap();
            let combined = iota_expand(
                "z",
                "w",
                &num_f.mul(&num_g),
                &[(c.clone(), 1), (d.clone(), 2)],
                orient,
                8,
            )
            .unwrap();
            let prod = f.mul(&g).unwrap();
            assert!(prod.matches(&combined).is_ok());
        }
    }

    #[test]
    fn series_inverse_recovers_polynomial() {
        let c = vmono(4);
        let s = iota_expand("z", "w", &CycloLaurent::one(1), &[(c.clone(), 1)], Orientation::ZOverW, 7)
            .unwrap();
        let inv = s.inverse().unwrap();
        let lin =
            TruncSeries::from_polynomial("z", "w", Orientation::ZOverW, &z().sub(&c.mul(&w())))
                .unwrap();
        assert!(inv.matches(&lin).is_ok());
        // powi(-1) agrees with inverse
        let again = s.powi(-1).unwrap();
        assert!(again.matches(&lin).is_ok());
    }

    #[test]
    fn rejects_bad_inputs() {
        // pole at the origin
        assert!(matches!(
            iota_expand(
                "z",
                "w",
                &CycloLaurent::one(1),
                &[(CycloLaurent::zero(1), 1)],
                Orientation::ZOverW,
                3
            ),
            Err(ExactError::ZeroDenominator)
        ));
        // non-homogeneous numerator
        assert!(matches!(
            iota_expand(
                "z",
                "w",
                &z().add(&CycloLaurent::one(1)),
                &[(CycloLaurent::one(1), 1)],
                Orientation::ZOverW,
                3
            ),
            Err(ExactError::NotHomogeneous { .. })
        ));
        // non-unit pole location
        assert!(matches!(
            iota_expand(
                "z",
                "w",
                &CycloLaurent::one(1),
                &[(CycloLaurent::from_int(1, 2), 1)],
                Orientation::ZOverW,
                3
            ),
            Err(ExactError::NotUnit { .. })
        ));
    }

    #[test]
    fn mismatch_is_reported_with_slot() {
        let c = vmono(2);
        let a = iota_expand("z", "w", &CycloLaurent::one(1), &[(c.clone(), 1)], Orientation::ZOverW, 4)
            .unwrap();
        let b = iota_expand("z", "w", &CycloLaurent::one(1), &[(vmono(3), 1)], Orientation::ZOverW, 4)
            .unwrap();
        match a.matches(&b) {
            Err(ExactError::SeriesMismatch { detail }) => {
                assert!(detail.contains("slot 1"), "got: {detail}");
            }
            other => panic!("expected slot mismatch, got {other:?}"),
        }
        assert!(a.matches(&a.truncate_to(2)).is_ok());
    }
}
