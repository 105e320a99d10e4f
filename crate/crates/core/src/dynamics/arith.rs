//! Counter arithmetic for the two simulation modes.
//!
//! The fluid mode multiplies by routing probabilities at every step, so exact
//! values acquire denominators that grow geometrically with time. Instead of
//! normalizing fractions through GCDs on every operation, fluid values are
//! kept as `n / D^e` for one base `D` per simulation (the LCM of every
//! denominator in the net), which makes addition, subtraction and comparison
//! linear in the operand size.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

use crate::rational::Rational;

use super::routing::{Categorical, RoutingStream};

/// Exact fluid counter value `numer / base^exp`.
#[derive(Debug, Clone)]
pub struct FluidValue {
    numer: BigInt,
    exp: u32,
}

/// Arithmetic context shared by all values of one fluid simulation.
#[derive(Debug, Clone)]
pub struct FluidArith {
    base: BigInt,
    powers: Vec<BigInt>,
}

const CACHED_POWERS: u32 = 64;

impl FluidArith {
    /// `denominators` must cover every rational that will enter the
    /// simulation (probabilities, markings, injected history).
    pub fn new<'a>(denominators: impl IntoIterator<Item = &'a BigInt>) -> Self {
        let base = denominators.into_iter().fold(BigInt::one(), |acc, d| acc.lcm(d));
        let mut powers = vec![BigInt::one()];
        for i in 1..=CACHED_POWERS as usize {
            let next = &powers[i - 1] * &base;
            powers.push(next);
        }
        FluidArith { base, powers }
    }

    fn power(&self, exp: u32) -> BigInt {
        match self.powers.get(exp as usize) {
            Some(p) => p.clone(),
            None => Pow::pow(&self.base, exp),
        }
    }

    pub fn base(&self) -> &BigInt {
        &self.base
    }

    pub fn from_rational(&self, r: &Rational) -> FluidValue {
        if r.denom().is_one() {
            return FluidValue {
                numer: r.numer().clone(),
                exp: 0,
            };
        }
        // Smallest e with denom | base^e.
        let mut exp = 0u32;
        let mut power = BigInt::one();
        while !(&power % r.denom()).is_zero() {
            assert!(exp < 4096, "denominator {} does not divide a power of {}", r.denom(), self.base);
            power *= &self.base;
            exp += 1;
        }
        FluidValue {
            numer: r.numer() * (power / r.denom()),
            exp,
        }
    }

    pub fn to_rational(&self, v: &FluidValue) -> Rational {
        Rational::new(v.numer.clone(), self.power(v.exp))
    }

    fn aligned(&self, a: &FluidValue, b: &FluidValue) -> (BigInt, BigInt, u32) {
        match a.exp.cmp(&b.exp) {
            Ordering::Equal => (a.numer.clone(), b.numer.clone(), a.exp),
            Ordering::Less => (&a.numer * self.power(b.exp - a.exp), b.numer.clone(), b.exp),
            Ordering::Greater => (a.numer.clone(), &b.numer * self.power(a.exp - b.exp), a.exp),
        }
    }

    pub fn add(&self, a: &FluidValue, b: &FluidValue) -> FluidValue {
        if a.exp == b.exp {
            return FluidValue {
                numer: &a.numer + &b.numer,
                exp: a.exp,
            };
        }
        let (x, y, exp) = self.aligned(a, b);
        FluidValue { numer: x + y, exp }
    }

    pub fn sub(&self, a: &FluidValue, b: &FluidValue) -> FluidValue {
        if a.exp == b.exp {
            return FluidValue {
                numer: &a.numer - &b.numer,
                exp: a.exp,
            };
        }
        let (x, y, exp) = self.aligned(a, b);
        FluidValue { numer: x - y, exp }
    }

    pub fn cmp(&self, a: &FluidValue, b: &FluidValue) -> Ordering {
        if a.exp == b.exp {
            return a.numer.cmp(&b.numer);
        }
        let (x, y, _) = self.aligned(a, b);
        x.cmp(&y)
    }

    pub fn min<'v>(&self, a: &'v FluidValue, b: &'v FluidValue) -> &'v FluidValue {
        if self.cmp(a, b) == Ordering::Greater {
            b
        } else {
            a
        }
    }

    /// `factor · v`; the factor's denominator must divide the base.
    pub fn scale(&self, v: &FluidValue, factor: &Rational) -> FluidValue {
        if factor.is_one() {
            return v.clone();
        }
        let mult = factor.numer() * (&self.base / factor.denom());
        let mut out = FluidValue {
            numer: &v.numer * mult,
            exp: v.exp + 1,
        };
        self.normalize(&mut out);
        out
    }

    fn normalize(&self, v: &mut FluidValue) {
        if self.base.is_one() {
            return;
        }
        while v.exp > 0 {
            let (q, r) = v.numer.div_rem(&self.base);
            if !r.is_zero() {
                break;
            }
            v.numer = q;
            v.exp -= 1;
        }
    }

    pub fn is_zero(&self, v: &FluidValue) -> bool {
        v.numer.is_zero()
    }

    pub fn is_negative(&self, v: &FluidValue) -> bool {
        v.numer.is_negative()
    }

    /// Lossy view for progress output and plotting.
    pub fn to_f64(&self, v: &FluidValue) -> f64 {
        let r = self.to_rational(v);
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    }
}

/// Operations the counter engine needs from a value domain.
pub trait CounterArith {
    type Value: Clone + std::fmt::Debug;

    fn constant(&self, r: &Rational) -> Self::Value;
    fn add(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn sub(&self, a: &Self::Value, b: &Self::Value) -> Self::Value;
    fn min(&self, a: Self::Value, b: Self::Value) -> Self::Value;
    fn to_rational(&self, v: &Self::Value) -> Rational;

    /// Sets the counters of a conflict place's outputs at the current step.
    ///
    /// `available` is `x_p(t − τ_p)`, `previous[i]` the counter of output `i`
    /// one step earlier; results go to `out[i]`.
    fn route(
        &mut self,
        place: usize,
        available: &Self::Value,
        probs: &[Rational],
        previous: &[Self::Value],
        out: &mut [Self::Value],
    );
}

impl CounterArith for FluidArith {
    type Value = FluidValue;

    fn constant(&self, r: &Rational) -> FluidValue {
        self.from_rational(r)
    }

    fn add(&self, a: &FluidValue, b: &FluidValue) -> FluidValue {
        FluidArith::add(self, a, b)
    }

    fn sub(&self, a: &FluidValue, b: &FluidValue) -> FluidValue {
        FluidArith::sub(self, a, b)
    }

    fn min(&self, a: FluidValue, b: FluidValue) -> FluidValue {
        if self.cmp(&a, &b) == Ordering::Greater {
            b
        } else {
            a
        }
    }

    fn to_rational(&self, v: &FluidValue) -> Rational {
        FluidArith::to_rational(self, v)
    }

    fn route(&mut self, _place: usize, available: &FluidValue, probs: &[Rational], _previous: &[FluidValue], out: &mut [FluidValue]) {
        for (slot, pi) in out.iter_mut().zip(probs) {
            *slot = self.scale(available, pi);
        }
    }
}

/// Integer counters with per-token random routing.
#[derive(Debug, Clone)]
pub struct StochasticArith {
    stream: RoutingStream,
    // Keyed by place index; built lazily from the probabilities.
    categorical: Vec<Option<Categorical>>,
}

impl StochasticArith {
    pub fn new(stream: RoutingStream) -> Self {
        StochasticArith {
            stream,
            categorical: Vec::new(),
        }
    }
}

impl CounterArith for StochasticArith {
    type Value = i64;

    fn constant(&self, r: &Rational) -> i64 {
        r.to_integer().to_i64().expect("marking fits in i64")
    }

    fn add(&self, a: &i64, b: &i64) -> i64 {
        a + b
    }

    fn sub(&self, a: &i64, b: &i64) -> i64 {
        a - b
    }

    fn min(&self, a: i64, b: i64) -> i64 {
        a.min(b)
    }

    fn to_rational(&self, v: &i64) -> Rational {
        Rational::from_integer(BigInt::from(*v))
    }

    fn route(&mut self, place: usize, available: &i64, probs: &[Rational], previous: &[i64], out: &mut [i64]) {
        if self.categorical.len() <= place {
            self.categorical.resize(place + 1, None);
        }
        let dist = self.categorical[place].get_or_insert_with(|| Categorical::new(probs));
        let routed: i64 = previous.iter().sum();
        out.copy_from_slice(previous);
        for ordinal in routed..*available {
            let i = self.stream.draw(place, ordinal as u64, dist);
            out[i] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    #[test]
    fn fluid_values_are_exact() {
        let arith = FluidArith::new([&BigInt::from(4), &BigInt::from(6)]);
        assert_eq!(arith.base(), &BigInt::from(12));
        let a = arith.from_rational(&ratio(1, 3));
        let b = arith.from_rational(&ratio(5, 8));
        assert_eq!(arith.to_rational(&arith.add(&a, &b)), ratio(23, 24));
        assert_eq!(arith.to_rational(&arith.sub(&a, &b)), ratio(-7, 24));
        assert_eq!(arith.cmp(&a, &b), Ordering::Less);
        let s = arith.scale(&b, &ratio(3, 4));
        assert_eq!(arith.to_rational(&s), ratio(15, 32));
        let whole = arith.scale(&arith.from_rational(&int(8)), &ratio(1, 4));
        assert_eq!(whole.exp, 0);
        assert_eq!(arith.to_rational(&whole), int(2));
    }

    #[test]
    fn comparison_ignores_representation() {
        let arith = FluidArith::new([&BigInt::from(2)]);
        let a = FluidValue {
            numer: BigInt::from(4),
            exp: 1,
        };
        let b = arith.from_rational(&int(2));
        assert_eq!(arith.cmp(&a, &b), Ordering::Equal);
    }
}
