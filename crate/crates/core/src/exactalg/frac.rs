//! Exact fractions of cyclotomic Laurent polynomials.
//!
//! No gcd reduction is attempted; equality is by cross multiplication, which
//! is sound because the coefficient ring is an integral domain. When the
//! denominator is a unit monomial it can be folded into the numerator.

use super::laurent::CycloLaurent;
use super::ExactError;
use std::fmt;

#[derive(Clone)]
pub struct Ratio {
    num: CycloLaurent,
    den: CycloLaurent,
}

impl Ratio {
    pub fn new(num: CycloLaurent, den: CycloLaurent) -> Result<Self, ExactError> {
        if den.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(Ratio { num, den })
    }

    pub fn from_poly(p: CycloLaurent) -> Self {
        let level = p.level();
        Ratio {
            num: p,
            den: CycloLaurent::one(level),
        }
    }

    pub fn one(level: u32) -> Self {
        Self::from_poly(CycloLaurent::one(level))
    }

    pub fn num(&self) -> &CycloLaurent {
        &self.num
    }

    pub fn den(&self) -> &CycloLaurent {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn mul(&self, other: &Self) -> Self {
        Ratio {
            num: self.num.mul(&other.num),
            den: self.den.mul(&other.den),
        }
    }

    pub fn mul_poly(&self, p: &CycloLaurent) -> Self {
        Ratio {
            num: self.num.mul(p),
            den: self.den.clone(),
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self, ExactError> {
        if other.num.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(Ratio {
            num: self.num.mul(&other.den),
            den: self.den.mul(&other.num),
        })
    }

    pub fn div_poly(&self, p: &CycloLaurent) -> Result<Self, ExactError> {
        if p.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(Ratio {
            num: self.num.clone(),
            den: self.den.mul(p),
        })
    }

    pub fn inverse(&self) -> Result<Self, ExactError> {
        if self.num.is_zero() {
            return Err(ExactError::ZeroDenominator);
        }
        Ok(Ratio {
            num: self.den.clone(),
            den: self.num.clone(),
        })
    }

    pub fn neg(&self) -> Self {
        Ratio {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Ratio {
            num: self
                .num
                .mul(&other.den)
                .add(&other.num.mul(&self.den)),
            den: self.den.mul(&other.den),
        }
    }

    /// Fold a unit-monomial denominator into the numerator.
    pub fn simplified(&self) -> Self {
        match self.den.try_inverse_monomial() {
            Some(inv) => {
                let num = self.num.mul(&inv);
                let level = num.level();
                Ratio {
                    num,
                    den: CycloLaurent::one(level),
                }
            }
            None => self.clone(),
        }
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.num.mul(&other.den) == other.num.mul(&self.den)
    }
}

impl Eq for Ratio {}

impl fmt::Debug for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactalg::cyclo::CycloElem;

    fn z() -> CycloLaurent {
        CycloLaurent::var("z")
    }

    fn w() -> CycloLaurent {
        CycloLaurent::var("w")
    }

    #[test]
    fn cross_multiplication_equality() {
        // (z^2 - w^2)/(z - w) == (z + w)/1
        let a = Ratio::new(z().pow(2).sub(&w().pow(2)), z().sub(&w())).unwrap();
        let b = Ratio::from_poly(z().add(&w()));
        assert_eq!(a, b);
        let c = Ratio::from_poly(z().sub(&w()));
        assert_ne!(a, c);
    }

    #[test]
    fn arithmetic_roundtrip() {
        let a = Ratio::new(z().add(&w()), z().sub(&w())).unwrap();
        let prod = a.mul(&a.inverse().unwrap());
        assert_eq!(prod, Ratio::one(1));
        let sum = a.add(&a.neg());
        assert!(sum.is_zero());
        let d = a.div(&a).unwrap();
        assert_eq!(d, Ratio::one(1));
    }

    #[test]
    fn monomial_denominator_folds() {
        let den = CycloLaurent::monomial(CycloElem::zeta(4, 1), &[("w", 2)]);
        let r = Ratio::new(z(), den).unwrap().simplified();
        assert_eq!(r.den(), &CycloLaurent::one(4));
        let expect = CycloLaurent::monomial(CycloElem::zeta(4, -1), &[("z", 1), ("w", -2)]);
        assert_eq!(r.num(), &expect);
        // non-unit denominators are left alone
        let r2 = Ratio::new(z(), z().add(&w())).unwrap().simplified();
        assert_eq!(r2.den(), &z().add(&w()));
    }

    #[test]
    fn zero_denominators_rejected() {
        assert!(matches!(
            Ratio::new(z(), CycloLaurent::zero(1)),
            Err(ExactError::ZeroDenominator)
        ));
        let zero = Ratio::new(CycloLaurent::zero(1), z()).unwrap();
        assert!(zero.inverse().is_err());
    }
}
