//! Affine germs `(ρ, u)` of functions `t ↦ u + ρt` at infinity, with a top
//! element.
//!
//! The order is lexicographic with `Top` greatest. In min-plus terms,
//! [`Germ::meet`] is the semifield addition and `+` the multiplication.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Add;

use num_traits::{Signed, Zero};

use crate::rational::{parse_rational, DisplayRational, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Germ {
    Affine { rho: Rational, u: Rational },
    Top,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum GermError {
    #[error("the top germ has no additive inverse")]
    TopNotInvertible,
    #[error("scaling the top germ by zero is undefined")]
    ZeroScaleOfTop,
}

impl Germ {
    pub fn new(rho: Rational, u: Rational) -> Self {
        Germ::Affine { rho, u }
    }

    pub fn zero() -> Self {
        Germ::new(Rational::zero(), Rational::zero())
    }

    pub fn is_top(&self) -> bool {
        matches!(self, Germ::Top)
    }

    pub fn rho(&self) -> Option<&Rational> {
        match self {
            Germ::Affine { rho, .. } => Some(rho),
            Germ::Top => None,
        }
    }

    pub fn u(&self) -> Option<&Rational> {
        match self {
            Germ::Affine { u, .. } => Some(u),
            Germ::Top => None,
        }
    }

    /// Lexicographic minimum; `Top` is the identity.
    pub fn meet(&self, other: &Germ) -> Germ {
        if self <= other {
            self.clone()
        } else {
            other.clone()
        }
    }

    pub fn neg(&self) -> Result<Germ, GermError> {
        match self {
            Germ::Affine { rho, u } => Ok(Germ::new(-rho, -u)),
            Germ::Top => Err(GermError::TopNotInvertible),
        }
    }

    pub fn scale(&self, lambda: &Rational) -> Result<Germ, GermError> {
        match self {
            Germ::Affine { rho, u } => Ok(Germ::new(lambda * rho, lambda * u)),
            Germ::Top if lambda.is_positive() => Ok(Germ::Top),
            // Negative scalings of ⊤ would need a bottom element.
            Germ::Top => Err(GermError::ZeroScaleOfTop),
        }
    }

    /// Germ of `t ↦ f(t − τ)`: `(ρ, u) ↦ (ρ, u − ρτ)`.
    pub fn shift(&self, tau: &Rational) -> Germ {
        match self {
            Germ::Affine { rho, u } => Germ::new(rho.clone(), u - rho * tau),
            Germ::Top => Germ::Top,
        }
    }

    /// Value of the representative `u + ρt` at `t`.
    pub fn eval(&self, t: &Rational) -> Option<Rational> {
        match self {
            Germ::Affine { rho, u } => Some(u + rho * t),
            Germ::Top => None,
        }
    }
}

impl Ord for Germ {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Germ::Top, Germ::Top) => Ordering::Equal,
            (Germ::Top, _) => Ordering::Greater,
            (_, Germ::Top) => Ordering::Less,
            (Germ::Affine { rho: r1, u: u1 }, Germ::Affine { rho: r2, u: u2 }) => r1.cmp(r2).then_with(|| u1.cmp(u2)),
        }
    }
}

impl PartialOrd for Germ {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Germ {
    type Output = Germ;

    fn add(self, other: &Germ) -> Germ {
        match (self, other) {
            (Germ::Affine { rho: r1, u: u1 }, Germ::Affine { rho: r2, u: u2 }) => Germ::new(r1 + r2, u1 + u2),
            _ => Germ::Top,
        }
    }
}

impl Add for Germ {
    type Output = Germ;

    fn add(self, other: Germ) -> Germ {
        &self + &other
    }
}

impl fmt::Display for Germ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Germ::Affine { rho, u } => write!(f, "({}, {})", DisplayRational(rho), DisplayRational(u)),
            Germ::Top => f.write_str("TOP"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid germ `{0}`")]
pub struct ParseGermError(pub String);

impl std::str::FromStr for Germ {
    type Err = ParseGermError;

    /// Accepts the rendering of [`fmt::Display`]: `(ρ, u)` or `TOP`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseGermError(s.to_owned());
        let s = s.trim();
        if s == "TOP" {
            return Ok(Germ::Top);
        }
        let inner = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')).ok_or_else(err)?;
        let (rho, u) = inner.split_once(',').ok_or_else(err)?;
        Ok(Germ::new(
            parse_rational(rho).map_err(|_| err())?,
            parse_rational(u).map_err(|_| err())?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use proptest::prelude::*;

    fn g(rho: i64, u: i64) -> Germ {
        Germ::new(int(rho), int(u))
    }

    #[test]
    fn meet_examples() {
        assert_eq!(g(1, 2).meet(&g(1, 3)), g(1, 2));
        assert_eq!(Germ::Top.meet(&g(0, 5)), g(0, 5));
        assert_eq!(g(2, -1).meet(&g(1, 100)), g(1, 100));
    }

    #[test]
    fn add_examples() {
        assert_eq!(g(1, 2) + g(3, 4), g(4, 6));
        assert_eq!(Germ::Top + g(1, 1), Germ::Top);
        assert_eq!(g(0, 0) + g(5, -3), g(5, -3));
    }

    #[test]
    fn neg_examples() {
        assert_eq!(g(1, 2).neg(), Ok(g(-1, -2)));
        assert_eq!(g(0, 0).neg(), Ok(g(0, 0)));
        assert_eq!(Germ::Top.neg(), Err(GermError::TopNotInvertible));
    }

    #[test]
    fn scale_examples() {
        assert_eq!(g(2, 4).scale(&ratio(1, 2)), Ok(g(1, 2)));
        assert_eq!(g(3, -7).scale(&int(1)), Ok(g(3, -7)));
        assert_eq!(g(4, -8).scale(&ratio(1, 4)), Ok(g(1, -2)));
        assert_eq!(g(4, -8).scale(&int(0)), Ok(g(0, 0)));
        assert_eq!(Germ::Top.scale(&int(2)), Ok(Germ::Top));
        assert_eq!(Germ::Top.scale(&int(0)), Err(GermError::ZeroScaleOfTop));
    }

    #[test]
    fn shift_examples() {
        assert_eq!(g(2, 5).shift(&int(3)), g(2, -1));
        assert_eq!(g(2, 5).shift(&int(0)), g(2, 5));
        assert_eq!(g(0, 7).shift(&int(100)), g(0, 7));
        assert_eq!(Germ::Top.shift(&int(3)), Germ::Top);
    }

    #[test]
    fn renders_and_parses() {
        let x = Germ::new(ratio(-1, 2), int(3));
        assert_eq!(x.to_string(), "(-1/2, 3)");
        assert_eq!("(-1/2, 3)".parse::<Germ>().unwrap(), x);
        assert_eq!("TOP".parse::<Germ>().unwrap(), Germ::Top);
        assert!("(1,)".parse::<Germ>().is_err());
    }

    fn small_rational() -> impl Strategy<Value = Rational> {
        (-20i64..20, 1i64..6).prop_map(|(n, d)| ratio(n, d))
    }

    fn affine() -> impl Strategy<Value = Germ> {
        (small_rational(), small_rational()).prop_map(|(r, u)| Germ::new(r, u))
    }

    proptest! {
        // Lexicographic order agrees with pointwise order of representatives
        // at all large enough grid points.
        #[test]
        fn order_matches_eventual_pointwise_order(a in affine(), b in affine(), step in 1i64..4) {
            let delta = ratio(1, step);
            let lex = a <= b;
            for k in [10_000i64, 100_000, 1_000_000] {
                let t = int(k) * &delta;
                prop_assert_eq!(lex, a.eval(&t).unwrap() <= b.eval(&t).unwrap());
            }
        }

        #[test]
        fn shift_commutes_with_scale_and_meet(a in affine(), b in affine(), tau in small_rational(), lambda in small_rational()) {
            prop_assume!(lambda.is_positive());
            prop_assert_eq!(a.scale(&lambda).unwrap().shift(&tau), a.shift(&tau).scale(&lambda).unwrap());
            prop_assert_eq!(a.meet(&b).shift(&tau), a.shift(&tau).meet(&b.shift(&tau)));
        }
    }
}
