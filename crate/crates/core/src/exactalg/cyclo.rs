//! Cyclotomic integers: elements of `Z[zeta_L]` in the power basis
//! `1, x, ..., x^{phi(L)-1}` of `Z[x]/Phi_L(x)`, with `x = zeta_L = e^{2 pi i/L}`.

use super::{ExactError, MAX_LEVEL};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Mutex, OnceLock};

/// Euler totient of `n` (trial division; levels here are small).
pub fn euler_phi(n: u32) -> u32 {
    let mut n = n as u64;
    let mut result = n;
    let mut p = 2u64;
    while p * p <= n {
        if n % p == 0 {
            while n % p == 0 {
                n /= p;
            }
            result -= result / p;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n;
    }
    result as u32
}

fn divisors(n: u32) -> Vec<u32> {
    let mut out = Vec::new();
    for d in 1..=n {
        if n % d == 0 {
            out.push(d);
        }
    }
    out
}

/// Quotient of `num` by the monic polynomial `den`; panics if not exact.
/// Coefficient vectors are little-endian (index = degree).
fn divide_monic_exact(num: &[i64], den: &[i64]) -> Vec<i64> {
    assert_eq!(*den.last().unwrap(), 1, "divisor must be monic");
    let dd = den.len() - 1;
    assert!(num.len() > dd);
    let mut rem = num.to_vec();
    let qd = rem.len() - 1 - dd;
    let mut quot = vec![0i64; qd + 1];
    for k in (0..=qd).rev() {
        let c = rem[k + dd];
        quot[k] = c;
        if c != 0 {
            for (j, &dj) in den.iter().enumerate() {
                rem[k + j] -= c * dj;
            }
        }
    }
    assert!(rem.iter().all(|&c| c == 0), "division was not exact");
    quot
}

/// The `L`-th cyclotomic polynomial, little-endian integer coefficients.
/// Computed as `(x^L - 1) / prod_{d | L, d < L} Phi_d`, memoized.
pub fn cyclotomic_poly(level: u32) -> Vec<i64> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Vec<i64>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&level) {
        return p.clone();
    }
    let poly = if level == 1 {
        vec![-1, 1]
    } else {
        let mut num = vec![0i64; level as usize + 1];
        num[0] = -1;
        num[level as usize] = 1;
        let mut acc = num;
        for d in divisors(level) {
            if d < level {
                let phi_d = cyclotomic_poly(d);
                acc = divide_monic_exact(&acc, &phi_d);
            }
        }
        acc
    };
    debug_assert_eq!(poly.len() as u32 - 1, euler_phi(level));
    cache.lock().unwrap().insert(level, poly.clone());
    poly
}

/// An element of `Z[zeta_L]`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CycloElem {
    level: u32,
    coeffs: Vec<i64>,
}

impl CycloElem {
    fn check_level(level: u32) -> Result<(), ExactError> {
        if level == 0 || level > MAX_LEVEL {
            return Err(ExactError::LevelCap { level });
        }
        Ok(())
    }

    /// Reduce a raw little-endian coefficient vector modulo `Phi_L`.
    fn reduce(level: u32, mut raw: Vec<i64>) -> Self {
        let phi = cyclotomic_poly(level);
        let d = phi.len() - 1;
        if raw.len() < d {
            raw.resize(d, 0);
        }
        for i in (d..raw.len()).rev() {
            let c = raw[i];
            if c != 0 {
                raw[i] = 0;
                // x^i = -sum_{j<d} phi_j x^{i-d+j}
                for j in 0..d {
                    raw[i - d + j] -= c * phi[j];
                }
            }
        }
        raw.truncate(d);
        CycloElem { level, coeffs: raw }
    }

    pub fn zero(level: u32) -> Self {
        CycloElem {
            level,
            coeffs: vec![0; euler_phi(level) as usize],
        }
    }

    pub fn one(level: u32) -> Self {
        Self::from_int(level, 1)
    }

    pub fn from_int(level: u32, n: i64) -> Self {
        let mut coeffs = vec![0; euler_phi(level) as usize];
        coeffs[0] = n;
        CycloElem { level, coeffs }
    }

    /// `zeta_L^k` for any integer `k`.
    pub fn zeta(level: u32, k: i64) -> Self {
        Self::check_level(level).expect("level in range");
        let k = k.rem_euclid(level as i64) as usize;
        let mut raw = vec![0i64; k + 1];
        raw[k] = 1;
        Self::reduce(level, raw)
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Some(n) when the element is the rational integer n.
    pub fn as_int(&self) -> Option<i64> {
        if self.coeffs[1..].iter().all(|&c| c == 0) {
            Some(self.coeffs[0])
        } else {
            None
        }
    }

    fn binop(
        &self,
        other: &CycloElem,
        f: impl Fn(i64, i64) -> i64,
    ) -> Result<CycloElem, ExactError> {
        if self.level != other.level {
            return Err(ExactError::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(CycloElem {
            level: self.level,
            coeffs,
        })
    }

    pub fn add(&self, other: &CycloElem) -> Result<CycloElem, ExactError> {
        self.binop(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &CycloElem) -> Result<CycloElem, ExactError> {
        self.binop(other, |a, b| a - b)
    }

    pub fn neg(&self) -> CycloElem {
        CycloElem {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &CycloElem) -> Result<CycloElem, ExactError> {
        if self.level != other.level {
            return Err(ExactError::LevelMismatch {
                left: self.level,
                right: other.level,
            });
        }
        let mut raw = vec![0i64; self.coeffs.len() + other.coeffs.len()];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a == 0 {
                continue;
            }
            for (j, &b) in other.coeffs.iter().enumerate() {
                raw[i + j] += a * b;
            }
        }
        Ok(Self::reduce(self.level, raw))
    }

    pub fn mul_int(&self, n: i64) -> CycloElem {
        CycloElem {
            level: self.level,
            coeffs: self.coeffs.iter().map(|&c| c * n).collect(),
        }
    }

    pub fn pow(&self, mut e: u32) -> Result<CycloElem, ExactError> {
        let mut base = self.clone();
        let mut acc = CycloElem::one(self.level);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base)?;
            }
            base = base.mul(&base)?;
            e >>= 1;
        }
        Ok(acc)
    }

    /// Embed into `Z[zeta_M]` for a multiple `M` of the level (`x -> y^{M/L}`).
    pub fn embed(&self, to_level: u32) -> Result<CycloElem, ExactError> {
        Self::check_level(to_level)?;
        if to_level == self.level {
            return Ok(self.clone());
        }
        if to_level % self.level != 0 {
            return Err(ExactError::LevelMismatch {
                left: self.level,
                right: to_level,
            });
        }
        let step = (to_level / self.level) as usize;
        let mut raw = vec![0i64; self.coeffs.len() * step + 1];
        for (k, &c) in self.coeffs.iter().enumerate() {
            raw[k * step] += c;
        }
        Ok(Self::reduce(to_level, raw))
    }

    /// Lift both operands to the lcm of their levels.
    pub fn unify(a: &CycloElem, b: &CycloElem) -> Result<(CycloElem, CycloElem), ExactError> {
        let l = num::integer::lcm(a.level, b.level);
        Ok((a.embed(l)?, b.embed(l)?))
    }

    /// Inverse when the element is a root of unity times a sign; None otherwise.
    pub fn try_inverse(&self) -> Option<CycloElem> {
        let l = self.level;
        for a in 0..l as i64 {
            let z = CycloElem::zeta(l, a);
            if *self == z {
                return Some(CycloElem::zeta(l, -a));
            }
            if *self == z.neg() {
                return Some(CycloElem::zeta(l, -a).neg());
            }
        }
        None
    }

    /// Numeric value at `zeta_L = e^{2 pi i/L}`; testing oracle only.
    pub fn eval_complex(&self) -> (f64, f64) {
        let mut re = 0.0;
        let mut im = 0.0;
        let theta = 2.0 * std::f64::consts::PI / self.level as f64;
        for (k, &c) in self.coeffs.iter().enumerate() {
            re += c as f64 * (theta * k as f64).cos();
            im += c as f64 * (theta * k as f64).sin();
        }
        (re, im)
    }
}

impl fmt::Debug for CycloElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cyclo(L={}; {:?})", self.level, self.coeffs)
    }
}

impl fmt::Display for CycloElem {
    /// Integer when rational, otherwise signed terms on the zeta power basis.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(n) = self.as_int() {
            return write!(f, "{n}");
        }
        let mut first = true;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            if !first {
                write!(f, "{}", if c < 0 { " - " } else { " + " })?;
            } else if c < 0 {
                write!(f, "-")?;
            }
            first = false;
            let a = c.abs();
            if k == 0 {
                write!(f, "{a}")?;
            } else {
                if a != 1 {
                    write!(f, "{a}*")?;
                }
                write!(f, "zeta{}^{}", self.level, k)?;
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn close(a: (f64, f64), b: (f64, f64)) -> bool {
        (a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9
    }

    #[test]
    fn cyclotomic_polys_small() {
        assert_eq!(cyclotomic_poly(1), vec![-1, 1]);
        assert_eq!(cyclotomic_poly(2), vec![1, 1]);
        assert_eq!(cyclotomic_poly(3), vec![1, 1, 1]);
        assert_eq!(cyclotomic_poly(4), vec![1, 0, 1]);
        assert_eq!(cyclotomic_poly(6), vec![1, -1, 1]);
        assert_eq!(cyclotomic_poly(12), vec![1, 0, -1, 0, 1]);
        for l in 1..=30 {
            assert_eq!(cyclotomic_poly(l).len() as u32 - 1, euler_phi(l));
        }
    }

    #[test]
    fn zeta_relations() {
        // zeta_2^2 = 1
        let z2 = CycloElem::zeta(2, 1);
        assert_eq!(z2.mul(&z2).unwrap(), CycloElem::one(2));
        // zeta_4 + zeta_4 = 2 zeta_4
        let z4 = CycloElem::zeta(4, 1);
        assert_eq!(z4.add(&z4).unwrap(), z4.mul_int(2));
        // zeta_3 + zeta_3^2 = -1
        let z3 = CycloElem::zeta(3, 1);
        let s = z3.add(&z3.mul(&z3).unwrap()).unwrap();
        assert_eq!(s, CycloElem::from_int(3, -1));
    }

    #[test]
    fn embedding_roundtrip() {
        let z3 = CycloElem::zeta(3, 1);
        let in6 = z3.embed(6).unwrap();
        assert_eq!(in6, CycloElem::zeta(6, 2));
        // numeric agreement
        assert!(close(z3.eval_complex(), in6.eval_complex()));
        // unify mixed levels
        let z4 = CycloElem::zeta(4, 1);
        let (a, b) = CycloElem::unify(&z3, &z4).unwrap();
        assert_eq!(a.level(), 12);
        assert_eq!(b.level(), 12);
        assert!(close(a.eval_complex(), z3.eval_complex()));
        assert!(close(b.eval_complex(), z4.eval_complex()));
    }

    #[test]
    fn level_mismatch_errors() {
        let z3 = CycloElem::zeta(3, 1);
        let z4 = CycloElem::zeta(4, 1);
        assert!(matches!(
            z3.add(&z4),
            Err(ExactError::LevelMismatch { left: 3, right: 4 })
        ));
        assert!(z3.embed(7).is_err());
    }

    #[test]
    fn inverse_detects_units() {
        for l in [1u32, 2, 3, 4, 6, 8, 12] {
            for k in 0..l as i64 {
                let z = CycloElem::zeta(l, k);
                let inv = z.try_inverse().expect("root of unity is a unit");
                assert_eq!(z.mul(&inv).unwrap(), CycloElem::one(l));
                let m = z.neg();
                let minv = m.try_inverse().unwrap();
                assert_eq!(m.mul(&minv).unwrap(), CycloElem::one(l));
            }
        }
        assert!(CycloElem::from_int(4, 2).try_inverse().is_none());
        let mixed = CycloElem::zeta(5, 1).add(&CycloElem::one(5)).unwrap();
        assert!(mixed.try_inverse().is_none());
    }

    /// Ring axioms on seeded random triples, cross-checked numerically.
    #[test]
    fn ring_axioms_random() {
        let mut rng = StdRng::seed_from_u64(0xC0FFEE);
        for level in [1u32, 2, 3, 4, 6, 8, 12, 15] {
            let d = euler_phi(level) as usize;
            let rand_elem = |rng: &mut StdRng| {
                let coeffs: Vec<i64> = (0..d).map(|_| rng.gen_range(-5..=5)).collect();
                CycloElem::reduce(level, coeffs)
            };
            for _ in 0..40 {
                let a = rand_elem(&mut rng);
                let b = rand_elem(&mut rng);
                let c = rand_elem(&mut rng);
                // associativity and commutativity of mul
                let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
                let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
                assert_eq!(ab_c, a_bc);
                assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
                // distributivity
                let lhs = a.mul(&b.add(&c).unwrap()).unwrap();
                let rhs = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
                assert_eq!(lhs, rhs);
                // numeric oracle at e^{2 pi i / L}
                let (re, im) = lhs.eval_complex();
                let (ar, ai) = a.eval_complex();
                let (sr, si) = b.add(&c).unwrap().eval_complex();
                let pr = ar * sr - ai * si;
                let pi = ar * si + ai * sr;
                assert!((re - pr).abs() < 1e-6 && (im - pi).abs() < 1e-6);
            }
        }
    }
}
