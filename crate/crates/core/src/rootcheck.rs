//! Exact root-system membership for the catalogue matrices, and the two
//! exhaustive weight checks it supports: sums of three in-orbit translates
//! of a doubled node never form a root, and every translate tuple whose
//! weight is a root contains a difference annihilating the reduced pair
//! polynomial.
//!
//! Membership is decided by closed-form patterns, not by Weyl-orbit search.
//! A finite matrix keeps its full positive-root closure; an affine matrix
//! keeps the closure of the subsystem at a distinguished node together with
//! the null vector, and queries reduce to a subsystem lookup plus a
//! congruence on the null-direction coefficient that depends on the twist
//! and the root length.

use crate::catalogue::{parse_label, primitive_kernel};
use crate::exactalg::{CycloElem, CycloLaurent, ExactError};
use crate::folding::{gamma_data, orbit_data, DiagramAut, FoldError};
use crate::gcm::{classify_type, GCMatrix, TypeTag};
use crate::identities::IdentityReport;
use std::collections::BTreeSet;
use std::fmt;
use std::time::Instant;

/// Default bound on the tuple arity `m_ij` accepted by
/// `verify_support_divisibility`; the search space is `N^m`.
pub const SUPPORT_CAP: i64 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RootError {
    Fold(FoldError),
    Exact(ExactError),
    /// Query vector length differs from the matrix size.
    Shape { expected: usize, got: usize },
    /// Base matrix admits no membership pattern (indefinite, or outside the
    /// catalogue).
    Unsupported { detail: String },
    /// The check is stated for doubled orbits only.
    WrongClass { i: usize, s: u32 },
    Cap { detail: String },
}

impl fmt::Display for RootError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootError::Fold(e) => write!(f, "folding data: {e}"),
            RootError::Exact(e) => write!(f, "exact arithmetic: {e}"),
            RootError::Shape { expected, got } => {
                write!(f, "query has {got} coordinates, matrix has {expected} nodes")
            }
            RootError::Unsupported { detail } => write!(f, "unsupported base: {detail}"),
            RootError::WrongClass { i, s } => {
                write!(f, "node {i} has s = {s}, the check needs s = 2")
            }
            RootError::Cap { detail } => write!(f, "cap exceeded: {detail}"),
        }
    }
}

impl std::error::Error for RootError {}

impl From<FoldError> for RootError {
    fn from(e: FoldError) -> Self {
        RootError::Fold(e)
    }
}

impl From<ExactError> for RootError {
    fn from(e: ExactError) -> Self {
        RootError::Exact(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RootMembership {
    Real,
    Imaginary,
    NotRoot,
}

impl RootMembership {
    pub fn as_str(&self) -> &'static str {
        match self {
            RootMembership::Real => "real",
            RootMembership::Imaginary => "imaginary",
            RootMembership::NotRoot => "not-root",
        }
    }
}

impl fmt::Display for RootMembership {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How the null-direction coefficient constrains membership.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Pattern {
    /// No null direction; the closure is the whole answer.
    Finite,
    /// Any multiple of the null vector may be added to a subsystem root.
    Untwisted { pivot: usize },
    /// Long subsystem roots recur with period `r` in the null direction.
    Twisted { pivot: usize, r: i64 },
    /// Chain with both end arrows inward: long roots recur with period 2,
    /// middle-length roots with period 1, and halves of long roots appear at
    /// odd anchor coefficients.
    Halved { anchor: usize },
}

/// Membership oracle for the root system of one catalogue matrix.
#[derive(Debug, Clone)]
pub struct RootSystem {
    size: usize,
    rows: Vec<Vec<i64>>,
    sym: Vec<i64>,
    /// Primitive positive null vector; empty in the finite case.
    marks: Vec<i64>,
    pattern: Pattern,
    /// Positive roots of the pattern's finite subsystem, as full-size
    /// coordinate vectors.
    subsystem: BTreeSet<Vec<i64>>,
    /// Squared length of a long root under the minimal symmetrizer.
    long_norm: i64,
}

impl RootSystem {
    pub fn new(m: &GCMatrix) -> Result<RootSystem, RootError> {
        let n = m.size();
        let rows: Vec<Vec<i64>> = m.entries().to_vec();
        let sym = m.symmetrizer().to_vec();
        let ty = classify_type(m);
        match ty.tag {
            TypeTag::Finite => {
                let nodes: Vec<usize> = (0..n).collect();
                let subsystem = positive_closure(&rows, &nodes);
                Ok(RootSystem {
                    size: n,
                    rows,
                    sym,
                    marks: Vec::new(),
                    pattern: Pattern::Finite,
                    subsystem,
                    long_norm: 0,
                })
            }
            TypeTag::Affine => {
                if !m.is_indecomposable() {
                    return Err(RootError::Unsupported {
                        detail: "affine base must be indecomposable".into(),
                    });
                }
                let marks = primitive_kernel(m.entries()).ok_or_else(|| RootError::Unsupported {
                    detail: "no positive null vector".into(),
                })?;
                let label = ty.label.ok_or_else(|| RootError::Unsupported {
                    detail: "matrix matches no catalogue entry".into(),
                })?;
                let (family, sub, twist) = parse_label(&label).ok_or_else(|| {
                    RootError::Unsupported {
                        detail: format!("unparseable label {label}"),
                    }
                })?;
                let d_min = *sym.iter().min().expect("nonempty");
                let pattern = if twist <= 1 {
                    // Any unit-mark node carries the same decomposition.
                    let pivot = (0..n)
                        .find(|&i| marks[i] == 1)
                        .expect("affine marks contain a 1");
                    Pattern::Untwisted { pivot }
                } else if family == 'A' && sub % 2 == 0 {
                    // Ends are doubled inward; the short end is the anchor.
                    let anchor = (0..n)
                        .find(|&i| sym[i] == d_min)
                        .expect("nonempty");
                    debug_assert!(sym.iter().filter(|&&d| d == d_min).count() == 1);
                    debug_assert_eq!(marks[anchor], 2);
                    Pattern::Halved { anchor }
                } else {
                    // The pivot must sit on a short node: a long unit-mark
                    // node decomposes the diagram the wrong way.
                    let pivot = (0..n)
                        .find(|&i| marks[i] == 1 && sym[i] == d_min)
                        .ok_or_else(|| RootError::Unsupported {
                            detail: format!("no short unit-mark node in {label}"),
                        })?;
                    Pattern::Twisted {
                        pivot,
                        r: twist as i64,
                    }
                };
                let excluded = match pattern {
                    Pattern::Untwisted { pivot } | Pattern::Twisted { pivot, .. } => pivot,
                    Pattern::Halved { anchor } => anchor,
                    Pattern::Finite => unreachable!(),
                };
                let nodes: Vec<usize> = (0..n).filter(|&i| i != excluded).collect();
                let subsystem = positive_closure(&rows, &nodes);
                let long_norm = 2 * sym.iter().max().expect("nonempty");
                Ok(RootSystem {
                    size: n,
                    rows,
                    sym,
                    marks,
                    pattern,
                    subsystem,
                    long_norm,
                })
            }
            TypeTag::Indefinite => Err(RootError::Unsupported {
                detail: "indefinite matrices have no closed membership pattern".into(),
            }),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Positive roots of the stored finite subsystem (the whole system in
    /// the finite case, the distinguished-node complement in the affine).
    pub fn positive_subsystem_count(&self) -> usize {
        self.subsystem.len()
    }

    /// Squared length under the minimal symmetrizer.
    fn norm(&self, v: &[i64]) -> i64 {
        (0..self.size)
            .map(|i| {
                let pairing: i64 = (0..self.size).map(|j| self.rows[i][j] * v[j]).sum();
                self.sym[i] * v[i] * pairing
            })
            .sum()
    }

    fn in_subsystem(&self, v: &[i64]) -> bool {
        if v.iter().all(|&c| c >= 0) {
            self.subsystem.contains(v)
        } else if v.iter().all(|&c| c <= 0) {
            let neg: Vec<i64> = v.iter().map(|&c| -c).collect();
            self.subsystem.contains(&neg)
        } else {
            false
        }
    }

    pub fn is_root(&self, alpha: &[i64]) -> Result<bool, RootError> {
        Ok(self.classify(alpha)? != RootMembership::NotRoot)
    }

    pub fn classify(&self, alpha: &[i64]) -> Result<RootMembership, RootError> {
        if alpha.len() != self.size {
            return Err(RootError::Shape {
                expected: self.size,
                got: alpha.len(),
            });
        }
        if alpha.iter().all(|&c| c == 0) {
            return Ok(RootMembership::NotRoot);
        }
        // Roots never mix signs; normalize to the nonnegative cone.
        let a: Vec<i64> = if alpha.iter().all(|&c| c <= 0) {
            alpha.iter().map(|&c| -c).collect()
        } else if alpha.iter().all(|&c| c >= 0) {
            alpha.to_vec()
        } else {
            return Ok(RootMembership::NotRoot);
        };
        let shifted = |k: i64, scale: i64| -> Vec<i64> {
            (0..self.size)
                .map(|i| scale * a[i] - k * self.marks[i])
                .collect()
        };
        match self.pattern {
            Pattern::Finite => Ok(if self.subsystem.contains(&a) {
                RootMembership::Real
            } else {
                RootMembership::NotRoot
            }),
            Pattern::Untwisted { pivot } => {
                let gamma = shifted(a[pivot], 1);
                if gamma.iter().all(|&c| c == 0) {
                    Ok(RootMembership::Imaginary)
                } else if self.in_subsystem(&gamma) {
                    Ok(RootMembership::Real)
                } else {
                    Ok(RootMembership::NotRoot)
                }
            }
            Pattern::Twisted { pivot, r } => {
                let k = a[pivot];
                let gamma = shifted(k, 1);
                if gamma.iter().all(|&c| c == 0) {
                    Ok(RootMembership::Imaginary)
                } else if self.in_subsystem(&gamma)
                    && (self.norm(&gamma) != self.long_norm || k % r == 0)
                {
                    Ok(RootMembership::Real)
                } else {
                    Ok(RootMembership::NotRoot)
                }
            }
            Pattern::Halved { anchor } => {
                let t = a[anchor];
                if t % 2 != 0 {
                    // Halves of long roots: 2a = gamma + t * marks.
                    let gamma = shifted(t, 2);
                    Ok(
                        if self.in_subsystem(&gamma) && self.norm(&gamma) == self.long_norm {
                            RootMembership::Real
                        } else {
                            RootMembership::NotRoot
                        },
                    )
                } else {
                    let gamma = shifted(t / 2, 1);
                    if gamma.iter().all(|&c| c == 0) {
                        Ok(RootMembership::Imaginary)
                    } else if self.in_subsystem(&gamma)
                        && (self.norm(&gamma) != self.long_norm || t % 4 == 0)
                    {
                        Ok(RootMembership::Real)
                    } else {
                        Ok(RootMembership::NotRoot)
                    }
                }
            }
        }
    }
}

/// Positive roots of the subsystem on `nodes`, grown from the unit vectors
/// by simple reflections that stay in the nonnegative cone. Every positive
/// root of a finite subsystem is reached: heights descend to a unit vector.
fn positive_closure(rows: &[Vec<i64>], nodes: &[usize]) -> BTreeSet<Vec<i64>> {
    let n = rows.len();
    let mut set: BTreeSet<Vec<i64>> = BTreeSet::new();
    let mut queue: Vec<Vec<i64>> = Vec::new();
    for &i in nodes {
        let mut unit = vec![0i64; n];
        unit[i] = 1;
        set.insert(unit.clone());
        queue.push(unit);
    }
    while let Some(beta) = queue.pop() {
        for &i in nodes {
            let pairing: i64 = (0..n).map(|j| rows[i][j] * beta[j]).sum();
            let mut image = beta.clone();
            image[i] -= pairing;
            if image[i] < 0 {
                continue;
            }
            if set.insert(image.clone()) {
                queue.push(image);
            }
        }
    }
    set
}

/// Weight of the iterated bracket of orbit translates: one unit at
/// `mu^{k}(i)` for each entry of `ks`, plus one unit at `j`.
pub fn translate_weight(aut: &DiagramAut, i: usize, j: usize, ks: &[i64]) -> Vec<i64> {
    let mut w = vec![0i64; aut.base().size()];
    for &k in ks {
        w[aut.apply_pow(k, i)] += 1;
    }
    w[j] += 1;
    w
}

/// `(z^{d_i} + w^{d_i})^{s_i - 1}` times `prod (z - xi^k w)` over the chosen
/// exponent set with the multiples of the orbit size removed.
fn pair_poly(aut: &DiagramAut, i: usize, j: usize, full: bool) -> Result<CycloLaurent, RootError> {
    let od = orbit_data(aut)?;
    let gd = gamma_data(aut, i, j)?;
    let level = aut.order();
    let n_i = od.orbit_size(i) as i64;
    let d_i = od.d(i) as i64;
    let mut p = if od.s(i) == 2 {
        CycloLaurent::monomial(CycloElem::one(level), &[("z", d_i)])
            .add(&CycloLaurent::monomial(CycloElem::one(level), &[("w", d_i)]))
    } else {
        CycloLaurent::one(level)
    };
    let exponents = if full { &gd.span } else { &gd.gamma_d };
    for &k in exponents {
        if k % n_i == 0 {
            continue;
        }
        let factor = CycloLaurent::var("z")
            .sub(&CycloLaurent::monomial(CycloElem::zeta(level, k), &[("w", 1)]));
        p = p.mul(&factor);
    }
    Ok(p)
}

/// The reduced pair polynomial: exponents drawn from the difference set.
pub fn reduced_pair_poly(aut: &DiagramAut, i: usize, j: usize) -> Result<CycloLaurent, RootError> {
    pair_poly(aut, i, j, false)
}

/// The full pair polynomial: exponents drawn from the subgroup generated by
/// the difference set. The reduced polynomial divides it factor by factor.
pub fn full_pair_poly(aut: &DiagramAut, i: usize, j: usize) -> Result<CycloLaurent, RootError> {
    pair_poly(aut, i, j, true)
}

fn base_label(aut: &DiagramAut) -> String {
    classify_type(aut.base())
        .label
        .unwrap_or_else(|| format!("rank-{}", aut.base().size()))
}

/// For a doubled node (`s_i = 2`), the sum of two orbit translates of its
/// simple root with the root itself never lands in the root system; checked
/// over all `(k1, k2)` in `(Z_N)^2`.
pub fn verify_cubic_nonroots(aut: &DiagramAut, i: usize) -> Result<IdentityReport, RootError> {
    let start = Instant::now();
    let od = orbit_data(aut)?;
    if od.s(i) != 2 {
        return Err(RootError::WrongClass { i, s: od.s(i) });
    }
    let rs = RootSystem::new(aut.base())?;
    let nn = aut.order() as i64;
    let mut failures: Vec<(i64, i64)> = Vec::new();
    let mut checked = 0u64;
    for k1 in 0..nn {
        for k2 in 0..nn {
            checked += 1;
            let w = translate_weight(aut, i, i, &[k1, k2]);
            if rs.classify(&w)? != RootMembership::NotRoot {
                failures.push((k1, k2));
            }
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!("{checked} translate pairs, none lands in the root system")
    } else {
        format!("root hits at {failures:?}")
    };
    Ok(IdentityReport::boolean(
        "cubic-nonroot",
        &format!("base={} i={} order={}", base_label(aut), i, nn),
        ok,
        start.elapsed(),
        &detail,
    ))
}

/// Every tuple `k` in `(Z_N)^m` whose translate weight is a root must have
/// two entries whose difference sends the reduced pair polynomial to zero
/// under `z -> xi^(kt - ks) w`; exhaustive over tuples.
pub fn verify_support_divisibility(
    aut: &DiagramAut,
    i: usize,
    j: usize,
    cap: i64,
) -> Result<IdentityReport, RootError> {
    let start = Instant::now();
    let gd = gamma_data(aut, i, j)?;
    let m = gd.m;
    if m > cap {
        return Err(RootError::Cap {
            detail: format!("m_ij = {m} exceeds cap {cap}"),
        });
    }
    let rs = RootSystem::new(aut.base())?;
    let nn = aut.order() as i64;
    let reduced = reduced_pair_poly(aut, i, j)?;
    let mut annihilates = Vec::with_capacity(nn as usize);
    for delta in 0..nn {
        let image = CycloLaurent::monomial(CycloElem::zeta(aut.order(), delta), &[("w", 1)]);
        annihilates.push(reduced.substitute("z", &image)?.is_zero());
    }
    let arity = m as usize;
    let mut tuple = vec![0i64; arity];
    let mut total = 0u64;
    let mut root_tuples = 0u64;
    let mut failures: Vec<Vec<i64>> = Vec::new();
    'tuples: loop {
        total += 1;
        let w = translate_weight(aut, i, j, &tuple);
        if rs.classify(&w)? != RootMembership::NotRoot {
            root_tuples += 1;
            let covered = (0..arity).any(|s| {
                (s + 1..arity)
                    .any(|t| annihilates[(tuple[t] - tuple[s]).rem_euclid(nn) as usize])
            });
            if !covered {
                failures.push(tuple.clone());
            }
        }
        let mut pos = 0;
        loop {
            if pos == arity {
                break 'tuples;
            }
            tuple[pos] += 1;
            if tuple[pos] < nn {
                break;
            }
            tuple[pos] = 0;
            pos += 1;
        }
    }
    let ok = failures.is_empty();
    let detail = if ok {
        format!(
            "{root_tuples} of {total} tuples land in the root system; each carries an annihilating difference"
        )
    } else {
        format!("uncovered root tuples: {failures:?}")
    };
    Ok(IdentityReport::boolean(
        "support-divisibility",
        &format!(
            "base={} i={} j={} order={} m={}",
            base_label(aut),
            i,
            j,
            nn,
            m
        ),
        ok,
        start.elapsed(),
        &detail,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalogue::lookup;
    use crate::folding::check_automorphism;
    use crate::gcm::validate_gcm;

    fn entry_aut(label: &str, perm: &[usize]) -> DiagramAut {
        let entry = lookup(label).unwrap();
        check_automorphism(entry.matrix.clone(), perm).unwrap()
    }

    fn identity_aut(label: &str) -> DiagramAut {
        let entry = lookup(label).unwrap();
        let n = entry.matrix.size();
        let id: Vec<usize> = (0..n).collect();
        check_automorphism(entry.matrix, &id).unwrap()
    }

    fn system(label: &str) -> RootSystem {
        RootSystem::new(&lookup(label).unwrap().matrix).unwrap()
    }

    #[test]
    fn finite_membership_basics() {
        let a2 = system("A_2");
        assert_eq!(a2.classify(&[1, 0]).unwrap(), RootMembership::Real);
        assert_eq!(a2.classify(&[1, 1]).unwrap(), RootMembership::Real);
        assert_eq!(a2.classify(&[-1, -1]).unwrap(), RootMembership::Real);
        assert_eq!(a2.classify(&[2, 0]).unwrap(), RootMembership::NotRoot);
        assert_eq!(a2.classify(&[1, 2]).unwrap(), RootMembership::NotRoot);
        assert_eq!(a2.classify(&[1, -1]).unwrap(), RootMembership::NotRoot);
        assert_eq!(a2.classify(&[0, 0]).unwrap(), RootMembership::NotRoot);
        assert!(matches!(
            a2.classify(&[1, 0, 0]),
            Err(RootError::Shape { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn finite_positive_counts() {
        for (label, count) in [
            ("A_2", 3),
            ("A_3", 6),
            ("B_3", 9),
            ("C_2", 4),
            ("D_4", 12),
            ("G_2", 6),
            ("F_4", 24),
        ] {
            assert_eq!(system(label).positive_subsystem_count(), count, "{label}");
        }
    }

    #[test]
    fn affine_point_checks() {
        let labels = [
            "A_1^{(1)}",
            "A_5^{(1)}",
            "D_4^{(1)}",
            "A_2^{(2)}",
            "A_4^{(2)}",
            "D_3^{(2)}",
            "D_4^{(3)}",
        ];
        for label in labels {
            let entry = lookup(label).unwrap();
            let rs = RootSystem::new(&entry.matrix).unwrap();
            let n = entry.matrix.size();
            let marks = entry.marks.clone().unwrap();
            for i in 0..n {
                let mut v = vec![0i64; n];
                v[i] = 1;
                assert_eq!(rs.classify(&v).unwrap(), RootMembership::Real, "{label} {i}");
                v[i] = 2;
                assert_eq!(
                    rs.classify(&v).unwrap(),
                    RootMembership::NotRoot,
                    "doubled simple in {label}"
                );
            }
            let neg: Vec<i64> = marks.iter().map(|&c| -c).collect();
            let twice: Vec<i64> = marks.iter().map(|&c| 2 * c).collect();
            assert_eq!(rs.classify(&marks).unwrap(), RootMembership::Imaginary);
            assert_eq!(rs.classify(&neg).unwrap(), RootMembership::Imaginary);
            assert_eq!(rs.classify(&twice).unwrap(), RootMembership::Imaginary);
        }
        // Doubled-end chains carry the halves of long roots: twice the short
        // simple plus the null vector is a root, at odd null coefficient.
        for label in ["A_2^{(2)}", "A_4^{(2)}"] {
            let entry = lookup(label).unwrap();
            let rs = RootSystem::new(&entry.matrix).unwrap();
            let marks = entry.marks.unwrap();
            let mut v: Vec<i64> = marks.clone();
            v[0] += 2;
            assert_eq!(rs.classify(&v).unwrap(), RootMembership::Real, "{label}");
        }
        // Hand-checked values in the two-node doubled chain.
        let rs = system("A_2^{(2)}");
        for (v, want) in [
            ([1i64, 1], RootMembership::Real),
            ([3, 1], RootMembership::Real),
            ([4, 1], RootMembership::Real),
            ([2, 0], RootMembership::NotRoot),
            ([5, 1], RootMembership::NotRoot),
            ([5, 2], RootMembership::Real),
            ([2, 1], RootMembership::Imaginary),
        ] {
            assert_eq!(rs.classify(&v).unwrap(), want, "{v:?}");
        }
    }

    /// Brute-force positive real roots of bounded height: close the unit
    /// vectors under simple reflections inside the nonnegative cone.
    fn bounded_reals(rows: &[Vec<i64>], height_cap: i64) -> BTreeSet<Vec<i64>> {
        let n = rows.len();
        let mut set: BTreeSet<Vec<i64>> = BTreeSet::new();
        let mut queue: Vec<Vec<i64>> = Vec::new();
        for i in 0..n {
            let mut unit = vec![0i64; n];
            unit[i] = 1;
            set.insert(unit.clone());
            queue.push(unit);
        }
        while let Some(beta) = queue.pop() {
            for i in 0..n {
                let pairing: i64 = (0..n).map(|j| rows[i][j] * beta[j]).sum();
                let mut image = beta.clone();
                image[i] -= pairing;
                if image[i] < 0 || image.iter().sum::<i64>() > height_cap {
                    continue;
                }
                if set.insert(image.clone()) {
                    queue.push(image);
                }
            }
        }
        set
    }

    fn oracle(
        reals: &BTreeSet<Vec<i64>>,
        marks: &[i64],
        alpha: &[i64],
    ) -> RootMembership {
        if alpha.iter().all(|&c| c == 0) {
            return RootMembership::NotRoot;
        }
        let a: Vec<i64> = if alpha.iter().all(|&c| c <= 0) {
            alpha.iter().map(|&c| -c).collect()
        } else if alpha.iter().all(|&c| c >= 0) {
            alpha.to_vec()
        } else {
            return RootMembership::NotRoot;
        };
        let idx = (0..a.len()).find(|&i| marks[i] == 1).unwrap();
        let k = a[idx];
        if k > 0 && (0..a.len()).all(|i| a[i] == k * marks[i]) {
            return RootMembership::Imaginary;
        }
        if reals.contains(&a) {
            RootMembership::Real
        } else {
            RootMembership::NotRoot
        }
    }

    #[test]
    fn patterns_match_reflection_closure() {
        let cases: &[(&str, i64)] = &[
            ("A_1^{(1)}", 4),
            ("A_2^{(1)}", 4),
            ("C_2^{(1)}", 4),
            ("G_2^{(1)}", 4),
            ("A_2^{(2)}", 5),
            ("A_4^{(2)}", 4),
            ("D_3^{(2)}", 4),
            ("D_4^{(3)}", 4),
            ("B_3^{(1)}", 3),
            ("A_5^{(2)}", 3),
            ("D_4^{(1)}", 2),
            ("E_6^{(2)}", 2),
        ];
        for &(label, bound) in cases {
            let base = lookup(label).unwrap().matrix;
            // Exercise node orders other than the generated one as well.
            let n = base.size();
            let rotated: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
            for matrix in [base.clone(), base.permuted(&rotated)] {
                let rs = RootSystem::new(&matrix).unwrap();
                let rows = matrix.entries().to_vec();
                let marks = primitive_kernel(&rows).unwrap();
                let reals = bounded_reals(&rows, bound * n as i64);
                let mut alpha = vec![-bound; n];
                'grid: loop {
                    let got = rs.classify(&alpha).unwrap();
                    let want = oracle(&reals, &marks, &alpha);
                    assert_eq!(got, want, "{label} at {alpha:?}");
                    let mut pos = 0;
                    loop {
                        if pos == n {
                            break 'grid;
                        }
                        alpha[pos] += 1;
                        if alpha[pos] <= bound {
                            break;
                        }
                        alpha[pos] = -bound;
                        pos += 1;
                    }
                }
            }
        }
    }

    #[test]
    fn reduced_divides_full() {
        let configs: &[(&str, Vec<usize>, usize, usize)] = &[
            ("A_3", vec![2, 1, 0], 2, 1),
            ("A_3", vec![2, 1, 0], 1, 0),
            ("A_5^{(1)}", vec![5, 4, 3, 2, 1, 0], 0, 1),
            ("D_4^{(1)}", vec![0, 3, 2, 4, 1], 1, 2),
            ("D_4^{(1)}", vec![0, 3, 2, 4, 1], 2, 1),
        ];
        for (label, perm, i, j) in configs {
            let aut = entry_aut(label, perm);
            let od = orbit_data(&aut).unwrap();
            let gd = gamma_data(&aut, *i, *j).unwrap();
            let full = full_pair_poly(&aut, *i, *j).unwrap();
            let level = aut.order();
            let n_i = od.orbit_size(*i) as i64;
            let mut quotient = full.clone();
            if od.s(*i) == 2 {
                let minus_one = CycloLaurent::from_int(level, -1);
                quotient = quotient
                    .divide_linear("z", &minus_one, "w", od.d(*i))
                    .unwrap();
            }
            for &k in &gd.gamma_d {
                if k % n_i == 0 {
                    continue;
                }
                let scale = CycloLaurent::constant(CycloElem::zeta(level, k));
                quotient = quotient.divide_linear("z", &scale, "w", 1).unwrap();
            }
            // What remains is the product over the span complement.
            let expected: CycloLaurent = gd
                .span
                .iter()
                .filter(|&&k| k % n_i != 0 && !gd.gamma_d.contains(&k))
                .fold(CycloLaurent::one(level), |acc, &k| {
                    acc.mul(
                        &CycloLaurent::var("z").sub(&CycloLaurent::monomial(
                            CycloElem::zeta(level, k),
                            &[("w", 1)],
                        )),
                    )
                });
            assert!(
                quotient.sub(&expected).is_zero(),
                "{label} ({i},{j}) leftover factors differ"
            );
        }
    }

    #[test]
    fn annihilation_matches_closed_form() {
        let configs: &[(&str, Vec<usize>, usize, usize)] = &[
            ("A_3", vec![2, 1, 0], 2, 1),
            ("A_5^{(1)}", vec![5, 4, 3, 2, 1, 0], 0, 1),
            ("D_4^{(1)}", vec![0, 3, 2, 4, 1], 1, 2),
            ("D_4^{(1)}", vec![0, 3, 2, 4, 1], 2, 1),
        ];
        for (label, perm, i, j) in configs {
            let aut = entry_aut(label, perm);
            let od = orbit_data(&aut).unwrap();
            let gd = gamma_data(&aut, *i, *j).unwrap();
            let nn = aut.order() as i64;
            let n_i = od.orbit_size(*i) as i64;
            let d_i = od.d(*i) as i64;
            let reduced = reduced_pair_poly(&aut, *i, *j).unwrap();
            for delta in 0..nn {
                let image =
                    CycloLaurent::monomial(CycloElem::zeta(aut.order(), delta), &[("w", 1)]);
                let vanishes = reduced.substitute("z", &image).unwrap().is_zero();
                let end_factor =
                    od.s(*i) == 2 && nn % 2 == 0 && (d_i * delta).rem_euclid(nn) == nn / 2;
                let in_omega = gd.gamma_d.contains(&delta) && delta % n_i != 0;
                assert_eq!(vanishes, end_factor || in_omega, "{label} delta={delta}");
            }
        }
    }

    #[test]
    fn weight_membership_shift_invariance() {
        let configs: &[(&str, Vec<usize>, usize, usize)] = &[
            ("A_5^{(1)}", vec![5, 4, 3, 2, 1, 0], 0, 1),
            ("D_4^{(1)}", vec![0, 3, 2, 4, 1], 1, 2),
            ("A_3", vec![2, 1, 0], 2, 1),
        ];
        for (label, perm, i, j) in configs {
            let aut = entry_aut(label, perm);
            let gd = gamma_data(&aut, *i, *j).unwrap();
            let rs = RootSystem::new(aut.base()).unwrap();
            let nn = aut.order() as i64;
            let arity = gd.m as usize;
            let mut tuple = vec![0i64; arity];
            'tuples: loop {
                let here = rs
                    .classify(&translate_weight(&aut, *i, *j, &tuple))
                    .unwrap();
                let shifted: Vec<i64> = tuple.iter().map(|&k| k + 1).collect();
                let there = rs
                    .classify(&translate_weight(&aut, *i, aut.apply(*j), &shifted))
                    .unwrap();
                assert_eq!(here, there, "{label} tuple {tuple:?}");
                let mut pos = 0;
                loop {
                    if pos == arity {
                        break 'tuples;
                    }
                    tuple[pos] += 1;
                    if tuple[pos] < nn {
                        break;
                    }
                    tuple[pos] = 0;
                    pos += 1;
                }
            }
        }
    }

    #[test]
    fn cubic_nonroot_cases() {
        let swap = entry_aut("A_2", &[1, 0]);
        let report = verify_cubic_nonroots(&swap, 0).unwrap();
        assert!(report.pass);
        assert!(report.detail.contains("4 translate pairs"));

        // Orbits {0,5} and {2,3} straddle an edge; {1,4} does not.
        let flip6 = entry_aut("A_5^{(1)}", &[5, 4, 3, 2, 1, 0]);
        for i in [0, 2] {
            assert!(verify_cubic_nonroots(&flip6, i).unwrap().pass, "node {i}");
        }
        assert!(matches!(
            verify_cubic_nonroots(&flip6, 1),
            Err(RootError::WrongClass { i: 1, s: 1 })
        ));

        let flip3 = entry_aut("A_3", &[2, 1, 0]);
        assert!(matches!(
            verify_cubic_nonroots(&flip3, 0),
            Err(RootError::WrongClass { i: 0, s: 1 })
        ));
    }

    #[test]
    fn support_divisibility_cases() {
        let flip3 = entry_aut("A_3", &[2, 1, 0]);
        let report = verify_support_divisibility(&flip3, 2, 1, SUPPORT_CAP).unwrap();
        assert!(report.pass);
        assert!(report.detail.starts_with("2 of 4 tuples"));

        let triality = entry_aut("D_4^{(1)}", &[0, 3, 2, 4, 1]);
        let report = verify_support_divisibility(&triality, 1, 2, SUPPORT_CAP).unwrap();
        assert!(report.pass);
        assert!(report.detail.starts_with("6 of 9 tuples"));
        // The reverse orientation is vacuous: the weight never moves.
        let report = verify_support_divisibility(&triality, 2, 1, SUPPORT_CAP).unwrap();
        assert!(report.pass);
        assert!(report.detail.starts_with("0 of 9 tuples"));

        let flip6 = entry_aut("A_5^{(1)}", &[5, 4, 3, 2, 1, 0]);
        let report = verify_support_divisibility(&flip6, 0, 1, SUPPORT_CAP).unwrap();
        assert!(report.pass);
        assert!(report.detail.starts_with("2 of 4 tuples"));

        // Identity automorphism: one constant tuple, never a root.
        let id = identity_aut("A_2");
        let report = verify_support_divisibility(&id, 0, 1, SUPPORT_CAP).unwrap();
        assert!(report.pass);
        assert!(report.detail.starts_with("0 of 1 tuples"));

        // The doubled-entry chain pushes m past a small cap.
        let id1 = identity_aut("A_1^{(1)}");
        assert!(matches!(
            verify_support_divisibility(&id1, 0, 1, 2),
            Err(RootError::Cap { .. })
        ));
        assert!(verify_support_divisibility(&id1, 0, 1, 3).unwrap().pass);

        // In-orbit pairs carry no linked translate.
        let swap = entry_aut("A_2", &[1, 0]);
        assert!(matches!(
            verify_support_divisibility(&swap, 0, 1, SUPPORT_CAP),
            Err(RootError::Fold(FoldError::NotLinked { i: 0, j: 1 }))
        ));
    }

    #[test]
    fn indefinite_base_rejected() {
        let m = validate_gcm(vec![vec![2, -3], vec![-3, 2]]).unwrap();
        assert!(matches!(
            RootSystem::new(&m),
            Err(RootError::Unsupported { .. })
        ));
    }
}
