//! Diagram automorphisms, orbit data, the linking conditions, Gamma-set
//! combinatorics, and the folded matrix with its symmetrizer.

use crate::gcm::{classify_type, validate_gcm_labeled, GCMatrix, TypeTag};
use num::integer::gcd;
use num::rational::Ratio;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoldError {
    BadPermutation { detail: String },
    /// Entry mismatch `a_ij != a_{mu(i) mu(j)}`, reported by index label.
    NotAutomorphism { i: i64, j: i64 },
    /// Orbit whose column sum is below 1, so `s_i` is undefined.
    Lc1Failure { orbit: Vec<usize> },
    /// Pair without a linked orbit translate: the folded entry is >= 0.
    NotLinked { i: usize, j: usize },
    NonAffineBase { tag: TypeTag },
    NoCatalogueLabel,
}

impl fmt::Display for FoldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FoldError::BadPermutation { detail } => write!(f, "bad permutation: {detail}"),
            FoldError::NotAutomorphism { i, j } => {
                write!(f, "not an automorphism: entry ({i}, {j}) changes under the map")
            }
            FoldError::Lc1Failure { orbit } => {
                write!(f, "first linking condition fails on orbit {orbit:?}")
            }
            FoldError::NotLinked { i, j } => {
                write!(f, "pair ({i}, {j}) has no negative folded entry")
            }
            FoldError::NonAffineBase { tag } => {
                write!(f, "base matrix is of {tag} type, expected Affine")
            }
            FoldError::NoCatalogueLabel => write!(f, "folded matrix matches no catalogue entry"),
        }
    }
}

impl std::error::Error for FoldError {}

/// A diagram automorphism `mu` of a GCM, with its exact order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagramAut {
    base: GCMatrix,
    perm: Vec<usize>,
    order: u32,
}

pub fn check_automorphism(base: GCMatrix, perm: &[usize]) -> Result<DiagramAut, FoldError> {
    let n = base.size();
    if perm.len() != n {
        return Err(FoldError::BadPermutation {
            detail: format!("{} images for {} nodes", perm.len(), n),
        });
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(FoldError::BadPermutation {
                detail: format!("images {perm:?} are not a bijection"),
            });
        }
        seen[p] = true;
    }
    for i in 0..n {
        for j in 0..n {
            if base.entry(i, j) != base.entry(perm[i], perm[j]) {
                return Err(FoldError::NotAutomorphism {
                    i: base.labels()[i],
                    j: base.labels()[j],
                });
            }
        }
    }
    let mut order = 1u32;
    let mut cur: Vec<usize> = perm.to_vec();
    while cur.iter().enumerate().any(|(i, &p)| i != p) {
        cur = cur.iter().map(|&p| perm[p]).collect();
        order += 1;
    }
    Ok(DiagramAut {
        base,
        perm: perm.to_vec(),
        order,
    })
}

impl DiagramAut {
    pub fn base(&self) -> &GCMatrix {
        &self.base
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn apply(&self, i: usize) -> usize {
        self.perm[i]
    }

    /// `mu^k(i)` for any integer `k`.
    pub fn apply_pow(&self, k: i64, i: usize) -> usize {
        let k = k.rem_euclid(self.order as i64);
        let mut cur = i;
        for _ in 0..k {
            cur = self.perm[cur];
        }
        cur
    }

    pub fn orbit_of(&self, i: usize) -> Vec<usize> {
        let mut orbit = vec![i];
        let mut cur = self.perm[i];
        while cur != i {
            orbit.push(cur);
            cur = self.perm[cur];
        }
        orbit.sort_unstable();
        orbit
    }
}

/// Orbits with their `N_i`, `s_i`, `d_i`, and minimal representatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitData {
    orbits: Vec<Vec<usize>>,
    orbit_index: Vec<usize>,
    n_i: Vec<usize>,
    s_i: Vec<u32>,
    d_i: Vec<u32>,
    reps: Vec<usize>,
}

impl OrbitData {
    pub fn orbits(&self) -> &[Vec<usize>] {
        &self.orbits
    }

    pub fn reps(&self) -> &[usize] {
        &self.reps
    }

    pub fn orbit_size(&self, i: usize) -> usize {
        self.n_i[i]
    }

    pub fn s(&self, i: usize) -> u32 {
        self.s_i[i]
    }

    pub fn d(&self, i: usize) -> u32 {
        self.d_i[i]
    }

    pub fn same_orbit(&self, i: usize, j: usize) -> bool {
        self.orbit_index[i] == self.orbit_index[j]
    }

    pub fn rep_of(&self, i: usize) -> usize {
        self.orbits[self.orbit_index[i]][0]
    }
}

/// `s_i` is read off the in-orbit column sum `c = sum_{p in O(i)} a_pi`:
/// `c = 2` means the orbit diagram is a sum of A_1's, `c = 1` a sum of
/// A_2's; anything lower violates the first linking condition.
pub fn orbit_data(aut: &DiagramAut) -> Result<OrbitData, FoldError> {
    let n = aut.base.size();
    let mut orbit_index = vec![usize::MAX; n];
    let mut orbits = Vec::new();
    for i in 0..n {
        if orbit_index[i] != usize::MAX {
            continue;
        }
        let orbit = aut.orbit_of(i);
        for &p in &orbit {
            orbit_index[p] = orbits.len();
        }
        orbits.push(orbit);
    }
    let mut n_i = vec![0usize; n];
    let mut s_i = vec![0u32; n];
    let mut d_i = vec![0u32; n];
    for orbit in &orbits {
        let size = orbit.len();
        let i = orbit[0];
        let c: i64 = orbit.iter().map(|&p| aut.base.entry(p, i)).sum();
        let s = match c {
            2 => 1,
            1 => 2,
            _ => return Err(FoldError::Lc1Failure { orbit: orbit.clone() }),
        };
        if s == 2 {
            // Lemma-2.1 shape: the unique in-orbit partner sits half way
            // around the orbit and both linking entries are -1.
            debug_assert_eq!(size % 2, 0);
            for &p in orbit {
                let partner = aut.apply_pow(size as i64 / 2, p);
                debug_assert_eq!(aut.base.entry(partner, p), -1);
                debug_assert_eq!(aut.base.entry(p, partner), -1);
            }
        }
        for &p in orbit {
            n_i[p] = size;
            s_i[p] = s;
            d_i[p] = aut.order / size as u32;
        }
    }
    let reps = orbits.iter().map(|o| o[0]).collect();
    Ok(OrbitData {
        orbits,
        orbit_index,
        n_i,
        s_i,
        d_i,
        reps,
    })
}

/// The pairs `(i, j)` with `i` outside `O(j)` and `a_ij < 0`, in lexical
/// order.
pub fn linked_pairs(aut: &DiagramAut) -> Vec<(usize, usize)> {
    let n = aut.base.size();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if aut.base.entry(i, j) < 0 && !aut.orbit_of(j).contains(&i) {
                out.push((i, j));
            }
        }
    }
    out
}

/// Outcome of the three linking conditions; `None` means the condition
/// holds, otherwise the lexicographically first witness is attached.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkingReport {
    pub lc1: Option<Vec<usize>>,
    pub lc2: Option<(usize, usize)>,
    pub lc3: Option<(usize, usize)>,
}

impl LinkingReport {
    pub fn all_pass(&self) -> bool {
        self.lc1.is_none() && self.lc2.is_none() && self.lc3.is_none()
    }
}

/// `Gamma_ij` and `Gamma*_ij` for an arbitrary pair.
pub fn gamma_sets(aut: &DiagramAut, i: usize, j: usize) -> (BTreeSet<i64>, BTreeSet<i64>) {
    let mut gamma = BTreeSet::new();
    let mut star = BTreeSet::new();
    let aij = aut.base.entry(i, j);
    for k in 0..aut.order as i64 {
        let e = aut.base.entry(i, aut.apply_pow(k, j));
        if e != 0 {
            gamma.insert(k);
        }
        if e == aij && aij != 0 {
            star.insert(k);
        }
    }
    (gamma, star)
}

fn is_subgroup(set: &BTreeSet<i64>, modulus: i64) -> bool {
    if !set.contains(&0) {
        return false;
    }
    let g = set.iter().fold(modulus, |acc, &k| gcd(acc, k));
    set.len() as i64 == modulus / g
}

pub fn check_linking(aut: &DiagramAut) -> LinkingReport {
    let lc1 = match orbit_data(aut) {
        Ok(_) => None,
        Err(FoldError::Lc1Failure { orbit }) => Some(orbit),
        Err(_) => unreachable!("orbit_data only fails on LC1"),
    };
    let mut lc2 = None;
    let mut lc3 = None;
    for (i, j) in linked_pairs(aut) {
        let (gamma, star) = gamma_sets(aut, i, j);
        if lc2.is_none() && gamma != star {
            lc2 = Some((i, j));
        }
        if lc3.is_none() && !is_subgroup(&gamma, aut.order as i64) {
            lc3 = Some((i, j));
        }
    }
    LinkingReport { lc1, lc2, lc3 }
}

/// Gamma-set derived data for a linked pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GammaData {
    pub gamma: BTreeSet<i64>,
    pub gamma_star: BTreeSet<i64>,
    /// Pairwise differences of `gamma` in `Z_N`.
    pub gamma_d: BTreeSet<i64>,
    /// Subgroup generated by the differences.
    pub span: BTreeSet<i64>,
    pub d_ij: u32,
    /// Minimal entry over the orbit translates.
    pub a_bar: i64,
    /// `m_ij = 1 - a_bar`.
    pub m: i64,
    /// `span + gamma`.
    pub gamma_e: BTreeSet<i64>,
    /// `gamma_e` minus `gamma`; empty under the third linking condition.
    pub gamma_bar: BTreeSet<i64>,
}

pub fn gamma_data(aut: &DiagramAut, i: usize, j: usize) -> Result<GammaData, FoldError> {
    let nn = aut.order as i64;
    if aut.orbit_of(j).contains(&i) {
        return Err(FoldError::NotLinked { i, j });
    }
    let (gamma, gamma_star) = gamma_sets(aut, i, j);
    if gamma.is_empty() {
        return Err(FoldError::NotLinked { i, j });
    }
    let mut gamma_d = BTreeSet::new();
    for &k1 in &gamma {
        for &k2 in &gamma {
            gamma_d.insert((k1 - k2).rem_euclid(nn));
        }
    }
    let g = gamma_d.iter().fold(nn, |acc, &k| gcd(acc, k));
    let span: BTreeSet<i64> = (0..nn / g).map(|l| l * g).collect();
    let d_ij = span.len() as u32;
    let a_bar = gamma
        .iter()
        .map(|&k| aut.base.entry(i, aut.apply_pow(k, j)))
        .min()
        .unwrap();
    let mut gamma_e = BTreeSet::new();
    for &s in &span {
        for &k in &gamma {
            gamma_e.insert((s + k).rem_euclid(nn));
        }
    }
    let gamma_bar = gamma_e.difference(&gamma).copied().collect();
    Ok(GammaData {
        gamma,
        gamma_star,
        gamma_d,
        span,
        d_ij,
        a_bar,
        m: 1 - a_bar,
        gamma_e,
        gamma_bar,
    })
}

/// The folded matrix on the orbit representatives with its symmetrizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldedData {
    pub matrix: GCMatrix,
    /// `r_check_i = N r_i / (s_i N_i)`, indexed like the matrix rows.
    pub r_check: Vec<Ratio<i64>>,
}

pub fn fold(aut: &DiagramAut) -> Result<FoldedData, FoldError> {
    let od = orbit_data(aut)?;
    let reps = od.reps();
    let labels: Vec<i64> = reps.iter().map(|&i| aut.base.labels()[i]).collect();
    let entries: Vec<Vec<i64>> = reps
        .iter()
        .map(|&i| {
            let orbit = aut.orbit_of(i);
            reps.iter()
                .map(|&j| {
                    let total: i64 = orbit.iter().map(|&p| aut.base.entry(p, j)).sum();
                    od.s(i) as i64 * total
                })
                .collect()
        })
        .collect();
    let matrix =
        validate_gcm_labeled(labels, entries).expect("folded matrix of an LC1 fold is a valid GCM");
    let r_check: Vec<Ratio<i64>> = reps
        .iter()
        .map(|&i| {
            Ratio::new(
                aut.order as i64 * aut.base.symmetrizer()[i],
                od.s(i) as i64 * od.orbit_size(i) as i64,
            )
        })
        .collect();
    for a in 0..reps.len() {
        for b in 0..reps.len() {
            assert_eq!(
                r_check[a] * Ratio::from_integer(matrix.entry(a, b)),
                r_check[b] * Ratio::from_integer(matrix.entry(b, a)),
                "folded symmetrizer must symmetrize the folded matrix"
            );
        }
    }
    Ok(FoldedData { matrix, r_check })
}

/// Kac label of the fold of an affine base.
pub fn folded_affine_label(aut: &DiagramAut) -> Result<String, FoldError> {
    let base_type = classify_type(&aut.base);
    if base_type.tag != TypeTag::Affine {
        return Err(FoldError::NonAffineBase { tag: base_type.tag });
    }
    let folded = fold(aut)?;
    classify_type(&folded.matrix)
        .label
        .ok_or(FoldError::NoCatalogueLabel)
}
