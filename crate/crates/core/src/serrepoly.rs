//! The polynomial and series data attached to a pair of diagram nodes under
//! an automorphism: the twisted Serre-relation polynomials, their normalized
//! single-power forms, quantum binomials, and the normal-order prefactors.
//!
//! Everything is exact. The deformation parameter is carried as the variable
//! `v` with `q = v^2` and `q_i = v^(2 r_i)`, so all square roots of `q_i`
//! appearing in the displays are integral powers of `v`.

use crate::exactalg::{CycloElem, CycloLaurent, ExactError, Orientation, TruncSeries};
use crate::folding::{gamma_data, gamma_sets, orbit_data, DiagramAut, FoldError, GammaData};
use num::rational::Ratio;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    /// +1 or -1, the factor applied to every signed exponent.
    pub fn val(self) -> i64 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SerreError {
    Fold(FoldError),
    Exact(ExactError),
    IndexRange { index: usize, size: usize },
    NotNegativePair { i: usize, j: usize },
    SUnsupported { s: u32 },
    BadRank { r: i64, m: i64 },
    QBinomRange { s: i64, k: i64 },
    FractionalExponent { detail: String },
}

impl fmt::Display for SerreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SerreError::Fold(e) => write!(f, "{e}"),
            SerreError::Exact(e) => write!(f, "{e}"),
            SerreError::IndexRange { index, size } => {
                write!(f, "node index {index} out of range for size {size}")
            }
            SerreError::NotNegativePair { i, j } => {
                write!(f, "pair ({i}, {j}) does not satisfy a_check < 0")
            }
            SerreError::SUnsupported { s } => write!(f, "operation requires s_i = 2, got {s}"),
            SerreError::BadRank { r, m } => write!(f, "rank {r} outside 0..={m}"),
            SerreError::QBinomRange { s, k } => {
                write!(f, "binomial index {k} outside 0..={s}")
            }
            SerreError::FractionalExponent { detail } => {
                write!(f, "exponent is not integral in v: {detail}")
            }
        }
    }
}

impl std::error::Error for SerreError {}

impl From<FoldError> for SerreError {
    fn from(e: FoldError) -> Self {
        SerreError::Fold(e)
    }
}

impl From<ExactError> for SerreError {
    fn from(e: ExactError) -> Self {
        SerreError::Exact(e)
    }
}

fn vmono(level: u32, k: i64) -> CycloLaurent {
    CycloLaurent::monomial(CycloElem::one(level), &[("v", k)])
}

/// Quantum integer `[n]_v = (v^n - v^-n)/(v - v^-1)`.
pub fn qnum(n: i64) -> CycloLaurent {
    if n == 0 {
        return CycloLaurent::zero(1);
    }
    if n < 0 {
        return qnum(-n).neg();
    }
    let mut acc = CycloLaurent::zero(1);
    for t in 0..n {
        acc = acc.add(&vmono(1, n - 1 - 2 * t));
    }
    acc
}

/// Quantum binomial `binom(s, k)_v`, a symmetric Laurent polynomial in `v`.
pub fn qbinom(s: i64, k: i64) -> Result<CycloLaurent, SerreError> {
    if k < 0 || k > s {
        return Err(SerreError::QBinomRange { s, k });
    }
    // Pascal recurrence: binom(s,k) = v^k binom(s-1,k) + v^(k-s) binom(s-1,k-1).
    let mut row: Vec<CycloLaurent> = vec![CycloLaurent::one(1)];
    for n in 1..=s {
        let mut next = Vec::with_capacity(row.len() + 1);
        for t in 0..=n {
            let mut acc = CycloLaurent::zero(1);
            if t < n {
                acc = acc.add(&row[t as usize].mul(&vmono(1, t)));
            }
            if t > 0 {
                acc = acc.add(&row[t as usize - 1].mul(&vmono(1, t - n)));
            }
            next.push(acc);
        }
        row = next;
    }
    Ok(row[k as usize].clone())
}

/// Replace the base unit `v` of a quantum number or binomial by another unit
/// monomial, e.g. `v -> v^(2e)`.
pub fn rebase(p: &CycloLaurent, base: &CycloLaurent) -> Result<CycloLaurent, SerreError> {
    Ok(p.substitute("v", base)?)
}

/// The normal-order prefactor data of a pair: `f_ij` carried as the full
/// numerator `F_ij` together with the removed linear-factor roots, plus the
/// constant `C_ij`.
#[derive(Debug, Clone)]
pub struct NormalPrefactors {
    /// `F_ij` itself.
    pub numerator: CycloLaurent,
    /// Roots `xi^k` of the removed factors `(z - xi^k w)`, one per `k` with
    /// `a_{i mu^k(j)} > 0`.
    pub removed_roots: Vec<CycloElem>,
    /// `C_ij = prod over a_{i mu^k(j)} < 0 of (-xi^k)`.
    pub c: CycloElem,
}

/// All pair-level data for nodes `(i, j)` of a diagram automorphism, fixed
/// sign choice. Construction computes the orbit constants and the linking
/// data once; every polynomial emitter takes variable names from the caller.
#[derive(Debug, Clone)]
pub struct PairContext {
    aut: DiagramAut,
    i: usize,
    j: usize,
    sign: Sign,
    n: u32,
    level: u32,
    r_i: i64,
    d_i: u32,
    s_i: u32,
    a_of: BTreeMap<i64, i64>,
    gamma: BTreeSet<i64>,
    linked: Option<GammaData>,
}

impl PairContext {
    pub fn new(aut: &DiagramAut, i: usize, j: usize, sign: Sign) -> Result<Self, SerreError> {
        let size = aut.base().size();
        for idx in [i, j] {
            if idx >= size {
                return Err(SerreError::IndexRange { index: idx, size });
            }
        }
        let od = orbit_data(aut)?;
        let n = aut.order();
        let (gamma, _) = gamma_sets(aut, i, j);
        let linked = match gamma_data(aut, i, j) {
            Ok(g) => Some(g),
            Err(FoldError::NotLinked { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        let mut a_of = BTreeMap::new();
        for k in 0..n as i64 {
            a_of.insert(k, aut.base().entry(i, aut.apply_pow(k, j)));
        }
        Ok(PairContext {
            aut: aut.clone(),
            i,
            j,
            sign,
            n,
            level: n.max(1),
            r_i: aut.base().symmetrizer()[i],
            d_i: od.d(i),
            s_i: od.s(i),
            a_of,
            gamma,
            linked,
        })
    }

    pub fn aut(&self) -> &DiagramAut {
        &self.aut
    }

    pub fn i(&self) -> usize {
        self.i
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    pub fn order(&self) -> u32 {
        self.n
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn r_i(&self) -> i64 {
        self.r_i
    }

    pub fn d_i(&self) -> u32 {
        self.d_i
    }

    pub fn s_i(&self) -> u32 {
        self.s_i
    }

    pub fn gamma(&self) -> &BTreeSet<i64> {
        &self.gamma
    }

    /// `a_{i mu^k(j)}` for `k` reduced mod N.
    pub fn a_at(&self, k: i64) -> i64 {
        self.a_of[&k.rem_euclid(self.n as i64)]
    }

    /// Linking data; present exactly when `i` is not in the orbit of `j` and
    /// some `a_{i mu^k(j)}` is negative (equivalently `a_check_{ij} < 0`).
    pub fn linked(&self) -> Option<&GammaData> {
        self.linked.as_ref()
    }

    fn linked_or_err(&self) -> Result<&GammaData, SerreError> {
        self.linked.as_ref().ok_or(SerreError::NotNegativePair {
            i: self.i,
            j: self.j,
        })
    }

    /// `m_ij = 1 - abar_ij`.
    pub fn m_ij(&self) -> Result<i64, SerreError> {
        Ok(self.linked_or_err()?.m)
    }

    fn xi(&self, k: i64) -> CycloElem {
        CycloElem::zeta(self.level, k)
    }

    /// `q_i^(sign * a)` as a `v`-monomial.
    fn qi_pow(&self, a: i64) -> CycloLaurent {
        vmono(self.level, self.sign.val() * 2 * self.r_i * a)
    }

    /// `F_ij = prod over k in Gamma of (z - xi^k q_i^(+-a_{i mu^k(j)}) w)`.
    pub fn poly_f(&self, z: &str, w: &str) -> CycloLaurent {
        let mut acc = CycloLaurent::one(self.level);
        for (&k, &a) in &self.a_of {
            if a == 0 {
                continue;
            }
            let root = self.qi_pow(a).mul_elem(&self.xi(k));
            let factor = CycloLaurent::var(z).sub(&root.mul(&CycloLaurent::var(w)));
            acc = acc.mul(&factor);
        }
        acc
    }

    /// `G_ij = prod over k in Gamma of (q_i^(+-a_{i mu^k(j)}) z - xi^k w)`.
    pub fn poly_g(&self, z: &str, w: &str) -> CycloLaurent {
        let mut acc = CycloLaurent::one(self.level);
        for (&k, &a) in &self.a_of {
            if a == 0 {
                continue;
            }
            let zc = self.qi_pow(a).mul(&CycloLaurent::var(z));
            let wc = CycloLaurent::var(w).mul_elem(&self.xi(k));
            acc = acc.mul(&zc.sub(&wc));
        }
        acc
    }

    /// `barF_ij = prod over k in barGamma of (z - xi^k q_i^(+-abar) w)`;
    /// equals 1 when barGamma is empty.
    pub fn poly_bar_f(&self, z: &str, w: &str) -> Result<CycloLaurent, SerreError> {
        let g = self.linked_or_err()?;
        let mut acc = CycloLaurent::one(self.level);
        for &k in &g.gamma_bar {
            let root = self.qi_pow(g.a_bar).mul_elem(&self.xi(k));
            acc = acc.mul(&CycloLaurent::var(z).sub(&root.mul(&CycloLaurent::var(w))));
        }
        Ok(acc)
    }

    /// `barG_ij = prod over k in barGamma of (q_i^(+-abar) z - xi^k w)`.
    pub fn poly_bar_g(&self, z: &str, w: &str) -> Result<CycloLaurent, SerreError> {
        let g = self.linked_or_err()?;
        let mut acc = CycloLaurent::one(self.level);
        for &k in &g.gamma_bar {
            let zc = self.qi_pow(g.a_bar).mul(&CycloLaurent::var(z));
            let wc = CycloLaurent::var(w).mul_elem(&self.xi(k));
            acc = acc.mul(&zc.sub(&wc));
        }
        Ok(acc)
    }

    /// `p_i(z1, z2, z3)` for `s_i = 2`:
    /// `q_i^(-+3d/2) z1^d - (q_i^(d/2) + q_i^(-d/2)) z2^d + q_i^(+-3d/2) z3^d`.
    pub fn poly_p_i(&self, z1: &str, z2: &str, z3: &str) -> Result<CycloLaurent, SerreError> {
        if self.s_i != 2 {
            return Err(SerreError::SUnsupported { s: self.s_i });
        }
        let d = self.d_i as i64;
        let rd = self.r_i * d;
        let sv = self.sign.val();
        let zd = |name: &str| CycloLaurent::monomial(CycloElem::one(self.level), &[(name, d)]);
        let t1 = vmono(self.level, -sv * 3 * rd).mul(&zd(z1));
        let mid = vmono(self.level, rd).add(&vmono(self.level, -rd));
        let t2 = mid.mul(&zd(z2));
        let t3 = vmono(self.level, sv * 3 * rd).mul(&zd(z3));
        Ok(t1.sub(&t2).add(&t3))
    }

    /// `p_ij(z, w) = (z^d + q_i^(-+d) w^d)^(s-1) (q_i^(+-2d_ij) z^d_ij - w^d_ij)
    /// / (q_i^(+-2d) z^d - w^d)`, expanded; the division is exact.
    pub fn poly_p_ij(&self, z: &str, w: &str) -> Result<CycloLaurent, SerreError> {
        let g = self.linked_or_err()?;
        let d = self.d_i as i64;
        let dij = g.d_ij as i64;
        let rd = self.r_i * d;
        let sv = self.sign.val();
        let e = (dij / d) as u32;
        // numerator = q^(+-2 r dij) (z^dij - v^(-+4 r dij) w^dij)
        let zt = CycloLaurent::monomial(CycloElem::one(self.level), &[(z, dij)]);
        let wt = CycloLaurent::monomial(CycloElem::one(self.level), &[(w, dij)]);
        let inner = zt.sub(&vmono(self.level, -sv * 4 * self.r_i * dij).mul(&wt));
        let quot = inner.divide_linear(z, &vmono(self.level, -sv * 4 * rd), w, self.d_i)?;
        debug_assert_eq!(e as i64 * d, dij);
        // overall scale q^(+-2 r dij) / q^(+-2 r d)
        let scale = vmono(self.level, sv * 4 * self.r_i * (dij - d));
        let mut acc = scale.mul(&quot);
        if self.s_i == 2 {
            let zd = CycloLaurent::monomial(CycloElem::one(self.level), &[(z, d)]);
            let wd = CycloLaurent::monomial(CycloElem::one(self.level), &[(w, d)]);
            acc = acc.mul(&zd.add(&vmono(self.level, -sv * 2 * rd).mul(&wd)));
        }
        Ok(acc)
    }

    /// `p_{ij,r}(z1..zm, w)` with `m = m_ij`: the pairwise `p_ij` product
    /// times `barG` for the first `r` slots and `barF` for the rest.
    pub fn poly_p_ij_r(&self, r: i64) -> Result<CycloLaurent, SerreError> {
        let m = self.m_ij()?;
        if r < 0 || r > m {
            return Err(SerreError::BadRank { r, m });
        }
        let names: Vec<String> = (1..=m).map(|a| format!("z{a}")).collect();
        let mut acc = CycloLaurent::one(self.level);
        for a in 0..m as usize {
            for b in a + 1..m as usize {
                acc = acc.mul(&self.poly_p_ij(&names[a], &names[b])?);
            }
        }
        for (a, name) in names.iter().enumerate() {
            let factor = if (a as i64) < r {
                self.poly_bar_g(name, "w")?
            } else {
                self.poly_bar_f(name, "w")?
            };
            acc = acc.mul(&factor);
        }
        Ok(acc)
    }

    /// The series `g_ij` evaluated at the ratio small/big of the two named
    /// variables: orientation `ZOverW` gives `g_ij(w/z)`, `WOverZ` gives
    /// `g_ij(z/w)`. Truncated at ratio-power `t`. Note `g_ij` itself carries
    /// no sign; the `+-1` power in the exchange relations is the caller's.
    pub fn series_g(
        &self,
        z: &str,
        w: &str,
        orientation: Orientation,
        t: i64,
    ) -> Result<TruncSeries, SerreError> {
        let mut num = CycloLaurent::one(self.level);
        let mut den: Vec<(CycloLaurent, u32)> = Vec::new();
        for (&k, &a) in &self.a_of {
            if a == 0 {
                continue;
            }
            let q_a = vmono(self.level, 2 * self.r_i * a);
            let q_a_inv = vmono(self.level, -2 * self.r_i * a);
            match orientation {
                Orientation::ZOverW => {
                    // (q^a - xi^k w/z)/(1 - xi^k q^a w/z)
                    //   = (q^a z - xi^k w) / (z - xi^k q^a w)
                    num = num.mul(
                        &q_a.mul(&CycloLaurent::var(z))
                            .sub(&CycloLaurent::var(w).mul_elem(&self.xi(k))),
                    );
                    den.push((q_a.mul_elem(&self.xi(k)), 1));
                }
                Orientation::WOverZ => {
                    // (q^a - xi^k z/w)/(1 - xi^k q^a z/w)
                    //   = (q^a w - xi^k z) * (-xi^-k q^-a) / (z - xi^-k q^-a w)
                    let factor = q_a
                        .mul(&CycloLaurent::var(w))
                        .sub(&CycloLaurent::var(z).mul_elem(&self.xi(k)));
                    num = num.mul(&factor.mul(&q_a_inv.neg().mul_elem(&self.xi(-k))));
                    den.push((q_a_inv.mul_elem(&self.xi(-k)), 1));
                }
            }
        }
        Ok(crate::exactalg::iota_expand(z, w, &num, &den, orientation, t)?)
    }

    /// `f_ij` as (numerator, removed roots) plus the constant `C_ij`.
    pub fn normal_prefactors(&self, z: &str, w: &str) -> NormalPrefactors {
        let numerator = self.poly_f(z, w);
        let mut removed_roots = Vec::new();
        let mut c = CycloElem::one(self.level);
        for (&k, &a) in &self.a_of {
            if a > 0 {
                removed_roots.push(self.xi(k));
            } else if a < 0 {
                c = c.mul(&self.xi(k).neg()).expect("same level");
            }
        }
        NormalPrefactors {
            numerator,
            removed_roots,
            c,
        }
    }

    /// Roots of `F_ij` in `z/w`: one value `xi^k q_i^(+-a)` per factor, in
    /// increasing `k` order.
    pub fn f_roots(&self) -> Vec<CycloLaurent> {
        self.a_of
            .iter()
            .filter(|&(_, &a)| a != 0)
            .map(|(&k, &a)| self.qi_pow(a).mul_elem(&self.xi(k)))
            .collect()
    }
}

/// Normalized single-power context: variables stand for `z^(d_i)` and the
/// unit is `u = q_i^(d_i) = v^2` (the normalization `r_i d_i = 1`). The
/// twisted Serre identities depend only on `(s, e, a_ij)` in this frame.
#[derive(Debug, Clone)]
pub struct NormCtx {
    s: u32,
    e: u32,
    a_ij: Ratio<i64>,
    sign: Sign,
}

impl NormCtx {
    pub fn new(s: u32, e: u32, a_ij: Ratio<i64>, sign: Sign) -> Result<Self, SerreError> {
        if !(s == 1 || s == 2) {
            return Err(SerreError::SUnsupported { s });
        }
        if e == 0 {
            return Err(SerreError::FractionalExponent {
                detail: "e must be positive".into(),
            });
        }
        let twice = a_ij * Ratio::from_integer(2 * e as i64);
        if !twice.is_integer() {
            return Err(SerreError::FractionalExponent {
                detail: format!("2 e a_ij = {twice}"),
            });
        }
        Ok(NormCtx { s, e, a_ij, sign })
    }

    /// Context for a concrete diagram pair, reading `(s_i, e, a_ij)` off the
    /// folded data.
    pub fn from_pair(ctx: &PairContext) -> Result<Self, SerreError> {
        let g = ctx.linked_or_err()?;
        let e = g.d_ij / ctx.d_i();
        // In the normalized frame a_ij enters only through 2 e a_ij
        //   = 2 r_i d_ij a_ij / (r_i d_i), with r_i d_ij a_ij integral.
        let a = Ratio::new(g.a_bar, 1);
        NormCtx::new(ctx.s_i(), e, a, ctx.sign())
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    pub fn a_ij(&self) -> Ratio<i64> {
        self.a_ij
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `2 e a_ij` as an integer: the `v`-exponent in `F_ij`/`G_ij`.
    pub fn b_exponent(&self) -> i64 {
        let twice = self.a_ij * Ratio::from_integer(2 * self.e as i64);
        twice.to_integer()
    }

    fn var(name: &str) -> CycloLaurent {
        CycloLaurent::var(name)
    }

    /// `F_ii = (Z + v^(-+2) W)^(s-1) (Z - v^(+-4) W)`.
    pub fn f_ii(&self, z: &str, w: &str) -> CycloLaurent {
        let sv = self.sign.val();
        let head = Self::var(z).add(&vmono(1, -2 * sv).mul(&Self::var(w)));
        let tail = Self::var(z).sub(&vmono(1, 4 * sv).mul(&Self::var(w)));
        head.pow(self.s - 1).mul(&tail)
    }

    /// `G_ii = (v^(-+2) Z + W)^(s-1) (v^(+-4) Z - W)`.
    pub fn g_ii(&self, z: &str, w: &str) -> CycloLaurent {
        let sv = self.sign.val();
        let head = vmono(1, -2 * sv).mul(&Self::var(z)).add(&Self::var(w));
        let tail = vmono(1, 4 * sv).mul(&Self::var(z)).sub(&Self::var(w));
        head.pow(self.s - 1).mul(&tail)
    }

    /// `F_ij = Z^e - v^(+-2 e a_ij) W^e`.
    pub fn f_ij(&self, z: &str, w: &str) -> CycloLaurent {
        let b = self.sign.val() * self.b_exponent();
        let ze = CycloLaurent::monomial(CycloElem::one(1), &[(z, self.e as i64)]);
        let we = CycloLaurent::monomial(CycloElem::one(1), &[(w, self.e as i64)]);
        ze.sub(&vmono(1, b).mul(&we))
    }

    /// `G_ij = v^(+-2 e a_ij) Z^e - W^e`.
    pub fn g_ij(&self, z: &str, w: &str) -> CycloLaurent {
        let b = self.sign.val() * self.b_exponent();
        let ze = CycloLaurent::monomial(CycloElem::one(1), &[(z, self.e as i64)]);
        let we = CycloLaurent::monomial(CycloElem::one(1), &[(w, self.e as i64)]);
        vmono(1, b).mul(&ze).sub(&we)
    }

    /// `p_ij = (Z + v^(-+2) W)^(s-1) (v^(+-4e) Z^e - W^e)/(v^(+-4) Z - W)`.
    pub fn p_ij(&self, z: &str, w: &str) -> Result<CycloLaurent, SerreError> {
        let sv = self.sign.val();
        let e = self.e as i64;
        let ze = CycloLaurent::monomial(CycloElem::one(1), &[(z, e)]);
        let we = CycloLaurent::monomial(CycloElem::one(1), &[(w, e)]);
        let inner = ze.sub(&vmono(1, -4 * sv * e).mul(&we));
        let quot = inner.divide_linear(z, &vmono(1, -4 * sv), w, 1)?;
        let scale = vmono(1, 4 * sv * (e - 1));
        let mut acc = scale.mul(&quot);
        if self.s == 2 {
            acc = acc.mul(&Self::var(z).add(&vmono(1, -2 * sv).mul(&Self::var(w))));
        }
        Ok(acc)
    }

    /// `p_i = v^(-+3) Z1 - (v + v^-1) Z2 + v^(+-3) Z3`, `s = 2` only.
    pub fn p_i(&self, z1: &str, z2: &str, z3: &str) -> Result<CycloLaurent, SerreError> {
        if self.s != 2 {
            return Err(SerreError::SUnsupported { s: self.s });
        }
        let sv = self.sign.val();
        let t1 = vmono(1, -3 * sv).mul(&Self::var(z1));
        let t2 = vmono(1, 1).add(&vmono(1, -1)).mul(&Self::var(z2));
        let t3 = vmono(1, 3 * sv).mul(&Self::var(z3));
        Ok(t1.sub(&t2).add(&t3))
    }
}
