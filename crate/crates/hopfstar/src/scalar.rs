//! The coefficient ring `K = Q[h]/(h^{N+1})`.
//!
//! A [`Scalar`] is a polynomial in the formal deformation parameter `h`,
//! truncated at a fixed order `N` and stored as exactly `N + 1` arbitrary
//! precision rational coefficients.  All arithmetic is exact; products simply
//! drop terms beyond `h^N`.  With `N = 0` the ring is plain `Q`.
//!
//! Every value in one computation must share the same truncation order;
//! mixing orders is a programming error and the arithmetic operators panic on
//! it rather than coercing.  Scenario-facing code validates orders up front so
//! such panics are unreachable from user input.

use num::{BigInt, BigRational, One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Element of `Q[h]/(h^{N+1})` in dense canonical form.
///
/// Invariant: `coeffs.len() == N + 1` and is never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar {
    coeffs: Vec<BigRational>,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl Scalar {
    /// The zero of the ring at truncation order `order`.
    pub fn zero(order: usize) -> Self {
        Scalar {
            coeffs: vec![BigRational::zero(); order + 1],
        }
    }

    pub fn one(order: usize) -> Self {
        Scalar::from_rational(BigRational::one(), order)
    }

    pub fn from_rational(q: BigRational, order: usize) -> Self {
        let mut s = Scalar::zero(order);
        s.coeffs[0] = q;
        s
    }

    pub fn from_int(n: i64, order: usize) -> Self {
        Scalar::from_rational(BigRational::from(BigInt::from(n)), order)
    }

    /// `p/q` as a constant scalar.
    pub fn from_ratio(p: i64, q: i64, order: usize) -> Self {
        Scalar::from_rational(rat(p, q), order)
    }

    /// `h^k`; zero when `k` exceeds the truncation order.
    pub fn h_power(k: usize, order: usize) -> Self {
        let mut s = Scalar::zero(order);
        if k <= order {
            s.coeffs[k] = BigRational::one();
        }
        s
    }

    /// `q * h^k`.
    pub fn monomial(q: BigRational, k: usize, order: usize) -> Self {
        let mut s = Scalar::zero(order);
        if k <= order {
            s.coeffs[k] = q;
        }
        s
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of `h^k` (must be within the truncation order).
    pub fn coeff(&self, k: usize) -> &BigRational {
        &self.coeffs[k]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(BigRational::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.coeffs[0].is_one() && self.coeffs[1..].iter().all(BigRational::is_zero)
    }

    /// Reinterpret at a lower truncation order, dropping high coefficients.
    ///
    /// Truncation is a ring homomorphism `Q[h]/(h^{N+1}) -> Q[h]/(h^{M+1})`
    /// for `M <= N`.
    pub fn truncate(&self, new_order: usize) -> Scalar {
        assert!(
            new_order <= self.order(),
            "truncate can only lower the order ({} -> {new_order})",
            self.order()
        );
        Scalar {
            coeffs: self.coeffs[..=new_order].to_vec(),
        }
    }

    /// Smallest `k` with a nonzero `h^k` coefficient; `None` for zero.
    pub fn h_valuation(&self) -> Option<usize> {
        self.coeffs.iter().position(|c| !c.is_zero())
    }

    /// Keep only the `h^k` term.
    pub fn homogeneous_part(&self, k: usize) -> Scalar {
        Scalar::monomial(self.coeffs[k].clone(), k, self.order())
    }

    pub fn scale(&self, q: &BigRational) -> Scalar {
        Scalar {
            coeffs: self.coeffs.iter().map(|c| c * q).collect(),
        }
    }

    fn assert_same_order(&self, other: &Scalar, op: &str) {
        assert_eq!(
            self.order(),
            other.order(),
            "scalar {op} with mismatched truncation orders {} and {}",
            self.order(),
            other.order()
        );
    }
}

impl Add for &Scalar {
    type Output = Scalar;
    fn add(self, rhs: &Scalar) -> Scalar {
        self.assert_same_order(rhs, "addition");
        Scalar {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Scalar {
    type Output = Scalar;
    fn sub(self, rhs: &Scalar) -> Scalar {
        self.assert_same_order(rhs, "subtraction");
        Scalar {
            coeffs: self
                .coeffs
                .iter()
                .zip(&rhs.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Scalar {
    type Output = Scalar;
    fn mul(self, rhs: &Scalar) -> Scalar {
        self.assert_same_order(rhs, "multiplication");
        let n = self.order();
        let mut out = Scalar::zero(n);
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                if i + j > n {
                    break;
                }
                if b.is_zero() {
                    continue;
                }
                out.coeffs[i + j] += a * b;
            }
        }
        out
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl AddAssign<&Scalar> for Scalar {
    fn add_assign(&mut self, rhs: &Scalar) {
        self.assert_same_order(rhs, "addition");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

/// Render `coeff * atom` as one summand of a larger sum, returning the sign
/// separately so callers can join terms with ` + ` / ` - `.
///
/// Single `q*h^k` coefficients are inlined (`3/2*h^2*X1`); multi-term ones are
/// parenthesized (`(1 + h)*X1`).  An empty `atom` stands for the unit basis
/// element.  Shared by every element `Display` in the crate so reports and
/// scenario literals use one syntax.
pub(crate) fn term_pieces(coeff: &Scalar, atom: &str) -> (bool, String) {
    let nonzero: Vec<usize> = (0..=coeff.order())
        .filter(|&k| !coeff.coeff(k).is_zero())
        .collect();
    match nonzero.as_slice() {
        [] => (false, "0".to_string()),
        [k] => {
            let q = coeff.coeff(*k);
            let neg = q.is_negative();
            let mag = q.abs();
            let mut parts: Vec<String> = Vec::new();
            if !mag.is_one() {
                parts.push(mag.to_string());
            }
            if *k == 1 {
                parts.push("h".to_string());
            } else if *k > 1 {
                parts.push(format!("h^{k}"));
            }
            if !atom.is_empty() {
                parts.push(atom.to_string());
            }
            if parts.is_empty() {
                parts.push("1".to_string());
            }
            (neg, parts.join("*"))
        }
        _ => {
            let body = if atom.is_empty() {
                format!("({coeff})")
            } else {
                format!("({coeff})*{atom}")
            };
            (false, body)
        }
    }
}

/// Join `(sign, magnitude)` summands produced by [`term_pieces`].
pub(crate) fn join_terms(terms: impl IntoIterator<Item = (bool, String)>) -> String {
    let mut out = String::new();
    for (neg, body) in terms {
        if out.is_empty() {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        out.push_str(&body);
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

/// Textual form `c0 + c1*h + c2*h^2 + ...` with exact rationals `p/q`; zero
/// terms are omitted and the zero scalar prints as `0`.  This form is used
/// verbatim in scenario files and reports.
impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let mag = c.abs();
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
                first = false;
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let coeff_is_one = mag.is_one();
            match (k, coeff_is_one) {
                (0, _) => write!(f, "{mag}")?,
                (_, true) => {}
                (_, false) => write!(f, "{mag}*")?,
            }
            match k {
                0 => {}
                1 => write!(f, "h")?,
                _ => write!(f, "h^{k}")?,
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
    use proptest::prelude::*;

    #[test]
    fn sum_of_h_squared_terms() {
        // (h^2) + (h^2) = 2*h^2 at order 3.
        let h2 = Scalar::h_power(2, 3);
        let sum = &h2 + &h2;
        assert_eq!(sum, Scalar::monomial(rat(2, 1), 2, 3));
        assert_eq!(sum.to_string(), "2*h^2");
    }

    #[test]
    fn product_truncates_beyond_order() {
        // (1 + h)(1 - h) = 1 - h^2 at order 2.
        let one = Scalar::one(2);
        let h = Scalar::h_power(1, 2);
        let prod = &(&one + &h) * &(&one - &h);
        assert_eq!(prod, &one - &Scalar::h_power(2, 2));
        // h * h = 0 at order 1: the h^2 term falls off the end.
        let h1 = Scalar::h_power(1, 1);
        assert!((&h1 * &h1).is_zero());
    }

    #[test]
    fn order_zero_is_plain_q() {
        let a = Scalar::from_ratio(3, 2, 0);
        let b = Scalar::from_ratio(-4, 3, 0);
        assert_eq!(&a * &b, Scalar::from_ratio(-2, 1, 0));
        assert_eq!(a.to_string(), "3/2");
    }

    #[test]
    #[should_panic(expected = "mismatched truncation orders")]
    fn mixed_orders_panic() {
        let _ = &Scalar::one(1) + &Scalar::one(2);
    }

    #[test]
    fn valuation_and_parts() {
        let s = &Scalar::monomial(rat(5, 1), 1, 3) + &Scalar::h_power(3, 3);
        assert_eq!(s.h_valuation(), Some(1));
        assert_eq!(s.homogeneous_part(3), Scalar::h_power(3, 3));
        assert_eq!(Scalar::zero(2).h_valuation(), None);
    }

    #[test]
    fn display_signs_and_powers() {
        let s = &(&Scalar::one(3) - &Scalar::monomial(rat(3, 2), 1, 3))
            + &Scalar::monomial(rat(1, 1), 3, 3);
        assert_eq!(s.to_string(), "1 - 3/2*h + h^3");
        assert_eq!(Scalar::zero(1).to_string(), "0");
        assert_eq!((-&Scalar::h_power(1, 1)).to_string(), "-h");
    }

    fn arb_scalar(order: usize) -> impl Strategy<Value = Scalar> {
        proptest::collection::vec((-9i64..=9, 1i64..=4), order + 1).prop_map(move |cs| Scalar {
            coeffs: cs.into_iter().map(|(p, q)| rat(p, q)).collect(),
        })
    }

    proptest! {
        // Commutative ring axioms at a fixed truncation order.
        #[test]
        fn ring_axioms(a in arb_scalar(3), b in arb_scalar(3), c in arb_scalar(3)) {
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a * &b, &b * &a);
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&(&a * &b) * &c, &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&a * &Scalar::one(3), a.clone());
            prop_assert_eq!(&a + &Scalar::zero(3), a.clone());
            prop_assert!((&a - &a).is_zero());
        }

        // Truncation to a lower order is a ring homomorphism.
        #[test]
        fn truncation_is_homomorphism(a in arb_scalar(3), b in arb_scalar(3)) {
            for m in 0..=3usize {
                prop_assert_eq!((&a + &b).truncate(m), &a.truncate(m) + &b.truncate(m));
                prop_assert_eq!((&a * &b).truncate(m), &a.truncate(m) * &b.truncate(m));
            }
        }
    }
}
