//! Exact dyadic rationals `v / 2^e`.
//!
//! Every item weight, load and threshold in the crate is a [`Weight`]. Values
//! are kept in canonical form (odd numerator, or exponent zero) so that
//! structural equality coincides with numeric equality, and the exponent of
//! a canonical weight is its bit size.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::Error;

/// A non-negative dyadic rational `numerator / 2^exponent`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Weight {
    numerator: BigUint,
    exponent: u32,
}

impl Weight {
    pub fn new(numerator: BigUint, exponent: u32) -> Self {
        let mut w = Weight {
            numerator,
            exponent,
        };
        w.canonicalize();
        w
    }

    /// Convenience constructor for small numerators.
    pub fn from_parts(numerator: u64, exponent: u32) -> Self {
        Weight::new(BigUint::from(numerator), exponent)
    }

    pub fn zero() -> Self {
        Weight {
            numerator: BigUint::zero(),
            exponent: 0,
        }
    }

    pub fn one() -> Self {
        Weight {
            numerator: BigUint::one(),
            exponent: 0,
        }
    }

    /// `2^-e`.
    pub fn pow2_inv(exponent: u32) -> Self {
        Weight {
            numerator: BigUint::one(),
            exponent,
        }
    }

    fn canonicalize(&mut self) {
        if self.numerator.is_zero() {
            self.exponent = 0;
            return;
        }
        let tz = self.numerator.trailing_zeros().unwrap_or(0);
        let shift = tz.min(u64::from(self.exponent)) as u32;
        if shift > 0 {
            self.numerator >>= shift;
            self.exponent -= shift;
        }
    }

    pub fn numerator(&self) -> &BigUint {
        &self.numerator
    }

    /// Canonical exponent, i.e. the bit size of the weight.
    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    /// True iff `0 < self <= 1`.
    pub fn is_item_weight(&self) -> bool {
        !self.is_zero() && *self <= Weight::one()
    }

    /// Numerator of this value written over `2^exponent`, or `None` when the
    /// value is not representable at that exponent.
    pub fn numerator_at(&self, exponent: u32) -> Option<BigUint> {
        if exponent < self.exponent {
            return None;
        }
        Some(&self.numerator << (exponent - self.exponent))
    }

    /// `self - rhs`, or `None` if the result would be negative.
    pub fn checked_sub(&self, rhs: &Weight) -> Option<Weight> {
        let e = self.exponent.max(rhs.exponent);
        let a = self.numerator_at(e).expect("e >= exponent");
        let b = rhs.numerator_at(e).expect("e >= exponent");
        if a < b {
            None
        } else {
            Some(Weight::new(a - b, e))
        }
    }

    pub fn mul_int(&self, k: u64) -> Weight {
        Weight::new(&self.numerator * BigUint::from(k), self.exponent)
    }

    /// Lossy conversion, for reporting only.
    pub fn to_f64(&self) -> f64 {
        let bits = self.numerator.bits();
        if bits <= 53 {
            let v = self.numerator.iter_u64_digits().next().unwrap_or(0) as f64;
            v * (-(self.exponent as f64)).exp2()
        } else {
            let drop = bits - 53;
            let top = (&self.numerator >> drop)
                .iter_u64_digits()
                .next()
                .unwrap_or(0) as f64;
            top * (drop as f64 - self.exponent as f64).exp2()
        }
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        let e = self.exponent.max(other.exponent);
        let a = self.numerator_at(e).expect("e >= exponent");
        let b = other.numerator_at(e).expect("e >= exponent");
        a.cmp(&b)
    }
}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add<&Weight> for &Weight {
    type Output = Weight;

    fn add(self, rhs: &Weight) -> Weight {
        let e = self.exponent.max(rhs.exponent);
        let a = self.numerator_at(e).expect("e >= exponent");
        let b = rhs.numerator_at(e).expect("e >= exponent");
        Weight::new(a + b, e)
    }
}

impl Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        &self + &rhs
    }
}

impl AddAssign<&Weight> for Weight {
    fn add_assign(&mut self, rhs: &Weight) {
        *self = &*self + rhs;
    }
}

impl<'a> Sum<&'a Weight> for Weight {
    fn sum<I: Iterator<Item = &'a Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| &acc + w)
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::zero(), |acc, w| &acc + &w)
    }
}

/// Exact sum of a sequence of weights; may exceed one.
pub fn weight_sum<'a, I>(ws: I) -> Weight
where
    I: IntoIterator<Item = &'a Weight>,
{
    ws.into_iter().sum()
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.numerator, self.exponent)
    }
}

impl FromStr for Weight {
    type Err = Error;

    /// Parses `v/2^e` with decimal `v` and `e`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| Error::Syntax(format!("{msg}: {s:?}"));
        let (num, rest) = s.trim().split_once('/').ok_or_else(|| bad("missing '/'"))?;
        let exp = rest
            .strip_prefix("2^")
            .ok_or_else(|| bad("denominator must be written 2^e"))?;
        if num.is_empty() || !num.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("numerator is not a decimal integer"));
        }
        if exp.is_empty() || !exp.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad("exponent is not a decimal integer"));
        }
        let numerator: BigUint = num.parse().map_err(|_| bad("numerator"))?;
        let exponent: u32 = exp.parse().map_err(|_| bad("exponent out of range"))?;
        Ok(Weight::new(numerator, exponent))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(v: u64, e: u32) -> Weight {
        Weight::from_parts(v, e)
    }

    #[test]
    fn canonical_form() {
        let x = w(4, 3);
        assert_eq!(x.numerator(), &BigUint::from(1u32));
        assert_eq!(x.exponent(), 1);
        assert_eq!(w(8, 3), Weight::one());
        assert_eq!(w(0, 7), Weight::zero());
        assert_eq!(w(0, 7).exponent(), 0);
        assert_eq!(w(6, 0).exponent(), 0);
    }

    #[test]
    fn sums() {
        assert_eq!(weight_sum(&[w(1, 1), w(1, 2)]), w(3, 2));
        assert_eq!(weight_sum(&[]), Weight::zero());
        assert_eq!(weight_sum(&[w(3, 2), w(3, 2)]), w(3, 1));
        assert_eq!(weight_sum(&[w(3, 2), w(3, 2)]).to_string(), "3/2^1");
    }

    #[test]
    fn subtraction() {
        assert_eq!(Weight::one().checked_sub(&w(3, 3)), Some(w(5, 3)));
        assert_eq!(w(1, 2).checked_sub(&w(1, 1)), None);
        assert_eq!(w(1, 2).checked_sub(&w(1, 2)), Some(Weight::zero()));
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("3/2^2".parse::<Weight>().unwrap(), w(3, 2));
        assert_eq!("6/2^3".parse::<Weight>().unwrap(), w(3, 2));
        assert!("3/4".parse::<Weight>().is_err());
        assert!("-3/2^2".parse::<Weight>().is_err());
        assert!("x/2^2".parse::<Weight>().is_err());
        assert_eq!(w(5, 6).to_string(), "5/2^6");
    }

    #[test]
    fn huge_exponents() {
        let tiny = Weight::pow2_inv(70_000);
        let sum = &Weight::from_parts(1, 4) + &tiny;
        assert_eq!(sum.exponent(), 70_000);
        assert!(sum > Weight::from_parts(1, 4));
        assert_eq!(sum.checked_sub(&tiny), Some(w(1, 4)));
        assert!((sum.to_f64() - 0.0625).abs() < 1e-12);
    }

    fn arb_weight() -> impl Strategy<Value = Weight> {
        (0u64..1 << 20, 0u32..40).prop_map(|(v, e)| w(v, e))
    }

    proptest! {
        #[test]
        fn addition_is_associative_and_commutative(a in arb_weight(), b in arb_weight(), c in arb_weight()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
        }

        #[test]
        fn order_agrees_with_subtraction(a in arb_weight(), b in arb_weight()) {
            prop_assert_eq!(a.checked_sub(&b).is_some(), a >= b);
            if let Some(d) = a.checked_sub(&b) {
                prop_assert_eq!(&d + &b, a);
            }
        }

        #[test]
        fn display_round_trips(a in arb_weight()) {
            prop_assert_eq!(a.to_string().parse::<Weight>().unwrap(), a);
        }
    }
}
