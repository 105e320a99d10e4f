use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

use crate::rational::{ceil_to_int, Rational};

use super::{CallCenterError, CallCenterParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    /// Level 2 saturated by extremely urgent calls, urgent calls starve.
    Lower,
    /// Level 1 saturated, level 2 shares its capacity.
    Intermediate,
    /// Both levels keep up with the offered load.
    Upper,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Lower => "lower",
            Phase::Intermediate => "intermediate",
            Phase::Upper => "upper",
        })
    }
}

/// Stationary throughputs of `q1`, `q5`, `q6` as closed-form functions of
/// the operator ratio.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhaseTable {
    /// Mean level-1 treatment time of a call.
    pub tau_bar: Rational,
    /// `N1 / tau_bar`, the level-1 capacity.
    pub rho_star: Rational,
    pub r1: Rational,
    pub r2: Rational,
    /// `N2 / N1`.
    pub ratio: Rational,
    pub phase: Phase,
    pub rho1: Rational,
    pub rho5: Rational,
    pub rho6: Rational,
}

impl PhaseTable {
    pub fn rhos(&self) -> [&Rational; 3] {
        [&self.rho1, &self.rho5, &self.rho6]
    }
}

pub fn tau_bar(params: &CallCenterParams) -> Rational {
    &params.pi_ext * (&params.tau_ext + &params.tau_tr) + &params.pi_ur * &params.tau_ur + &params.pi_adv * &params.tau_adv
}

/// The two breakpoints of the operator ratio.
pub fn breakpoints(params: &CallCenterParams) -> (Rational, Rational) {
    let tb = tau_bar(params);
    let ext_cycle = &params.pi_ext * (&params.tau_tr + &params.tau_ext2);
    let r1 = &ext_cycle / &tb;
    let r2 = (ext_cycle + &params.pi_ur * &params.tau_ur2) / tb;
    (r1, r2)
}

/// Ratios on a breakpoint are classified into the lower of the two
/// adjacent phases; both give the same throughputs there.
pub fn phase_table(params: &CallCenterParams) -> Result<PhaseTable, CallCenterError> {
    params.validate()?;
    if !params.n1.is_positive() {
        return Err(CallCenterError::ZeroN1);
    }
    let tau_bar = tau_bar(params);
    let (r1, r2) = breakpoints(params);
    let rho_star = &params.n1 / &tau_bar;
    let ratio = &params.n2 / &params.n1;
    let ext_cycle = &params.tau_tr + &params.tau_ext2;
    let (phase, rho1, rho5, rho6) = if ratio <= r1 {
        let rho5 = &params.n2 / &ext_cycle;
        (Phase::Lower, &rho5 / &params.pi_ext, rho5, Rational::zero())
    } else if ratio <= r2 {
        let rho6 = (&params.n2 - &params.n1 * &r1) / &params.tau_ur2;
        (Phase::Intermediate, rho_star.clone(), &params.pi_ext * &rho_star, rho6)
    } else {
        (Phase::Upper, rho_star.clone(), &params.pi_ext * &rho_star, &params.pi_ur * &rho_star)
    };
    Ok(PhaseTable {
        tau_bar,
        rho_star,
        r1,
        r2,
        ratio,
        phase,
        rho1,
        rho5,
        rho6,
    })
}

/// Smallest operator counts that serve an arrival rate in the upper phase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dimensioning {
    pub n1: BigInt,
    pub n2: BigInt,
    /// Zero arrival rate: no level-1 operator is needed and the phase
    /// table is undefined.
    pub degenerate: bool,
}

/// `n1` is the least integer with `n1 / tau_bar ≥ λ`, `n2` the least
/// integer with `n2 / n1 ≥ r2`. The operator counts in `params` are
/// ignored.
pub fn dimension(params: &CallCenterParams, arrival_rate: &Rational) -> Result<Dimensioning, CallCenterError> {
    params.validate()?;
    if arrival_rate.is_negative() {
        return Err(CallCenterError::InvalidParams("arrival rate must be non-negative".into()));
    }
    let (_, r2) = breakpoints(params);
    let n1 = ceil_to_int(&(arrival_rate * tau_bar(params)));
    let n2 = ceil_to_int(&(Rational::from_integer(n1.clone()) * r2));
    Ok(Dimensioning {
        degenerate: n1.is_zero(),
        n1,
        n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn table(n1: i64, n2: i64) -> PhaseTable {
        phase_table(&CallCenterParams::set_a(int(n1), int(n2))).unwrap()
    }

    #[test]
    fn reference_constants() {
        let t = table(9, 3);
        assert_eq!(t.tau_bar, ratio(9, 4));
        assert_eq!((t.r1.clone(), t.r2.clone()), (ratio(2, 3), ratio(8, 9)));
        assert_eq!(t.rho_star, int(4));
    }

    #[test]
    fn one_point_per_phase() {
        let t = table(9, 3);
        assert_eq!((t.phase, t.rho1, t.rho5, t.rho6), (Phase::Lower, int(2), ratio(1, 2), int(0)));
        let t = table(9, 7);
        assert_eq!((t.phase, t.rho1, t.rho5, t.rho6), (Phase::Intermediate, int(4), int(1), ratio(1, 2)));
        let t = table(9, 9);
        assert_eq!((t.phase, t.rho1, t.rho5, t.rho6), (Phase::Upper, int(4), int(1), int(1)));
    }

    #[test]
    fn breakpoints_belong_to_the_lower_phase() {
        assert_eq!(table(9, 6).phase, Phase::Lower);
        assert_eq!(table(9, 8).phase, Phase::Intermediate);
    }

    #[test]
    fn zero_level_one_is_an_error() {
        assert!(matches!(
            phase_table(&CallCenterParams::set_a(int(0), int(3))),
            Err(CallCenterError::ZeroN1)
        ));
    }

    #[test]
    fn without_urgent_calls_the_breakpoints_merge() {
        let mut p = CallCenterParams::set_a(int(9), int(7));
        p.pi_ur = int(0);
        p.pi_adv = ratio(3, 4);
        let (r1, r2) = breakpoints(&p);
        assert_eq!(r1, r2);
        assert!(phase_table(&p).unwrap().rho6.is_zero());
    }

    #[test]
    fn dimensioning() {
        let p = CallCenterParams::default();
        let d = dimension(&p, &int(4)).unwrap();
        assert_eq!((d.n1, d.n2, d.degenerate), (BigInt::from(9), BigInt::from(8), false));
        assert_eq!(dimension(&p, &ratio(401, 100)).unwrap().n1, BigInt::from(10));
        let d = dimension(&p, &int(0)).unwrap();
        assert!(d.degenerate && d.n1.is_zero() && d.n2.is_zero());
        assert!(dimension(&p, &int(-1)).is_err());
    }
}
