use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::rational::{int, ratio, serde_rational, serde_rational_opt, Rational};

use super::CallCenterError;

/// Operators, routing proportions and treatment times of the two-level
/// call center.
///
/// The times are those of the reduced dynamics: the firing delay
/// `tau_eps` of the full net has already been absorbed into them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CallCenterParams {
    /// Level-1 operators.
    #[serde(with = "serde_rational", alias = "N1")]
    pub n1: Rational,
    /// Level-2 operators.
    #[serde(with = "serde_rational", alias = "N2")]
    pub n2: Rational,
    #[serde(with = "serde_rational")]
    pub pi_ext: Rational,
    #[serde(with = "serde_rational")]
    pub pi_ur: Rational,
    #[serde(with = "serde_rational")]
    pub pi_adv: Rational,
    #[serde(with = "serde_rational")]
    pub tau_ext: Rational,
    #[serde(with = "serde_rational")]
    pub tau_ur: Rational,
    #[serde(with = "serde_rational")]
    pub tau_adv: Rational,
    #[serde(with = "serde_rational")]
    pub tau_tr: Rational,
    /// Level-2 handling of an extremely urgent call after the transfer.
    #[serde(with = "serde_rational")]
    pub tau_ext2: Rational,
    /// Level-2 handling of an urgent call.
    #[serde(with = "serde_rational")]
    pub tau_ur2: Rational,
    #[serde(with = "serde_rational")]
    pub tau_eps: Rational,
}

impl CallCenterParams {
    /// Reference parameters: `π = (1/4, 1/4, 1/2)`, level-1 times
    /// `(2, 3, 1)`, transfer 2, level-2 times `(4, 2)`.
    pub fn set_a(n1: Rational, n2: Rational) -> Self {
        CallCenterParams {
            n1,
            n2,
            pi_ext: ratio(1, 4),
            pi_ur: ratio(1, 4),
            pi_adv: ratio(1, 2),
            tau_ext: int(2),
            tau_ur: int(3),
            tau_adv: int(1),
            tau_tr: int(2),
            tau_ext2: int(4),
            tau_ur2: int(2),
            tau_eps: ratio(1, 4),
        }
    }

    /// Set A with the level-2 extremely-urgent time raised to 5.
    pub fn set_b(n1: Rational, n2: Rational) -> Self {
        CallCenterParams {
            tau_ext2: int(5),
            ..CallCenterParams::set_a(n1, n2)
        }
    }

    pub fn with_operators(&self, n1: Rational, n2: Rational) -> Self {
        CallCenterParams {
            n1,
            n2,
            ..self.clone()
        }
    }

    /// Checks the reduced-model invariants.
    ///
    /// `pi_ur` and `pi_adv` may be zero here (the analytic formulas stay
    /// meaningful); the full net needs all three proportions positive.
    pub fn validate(&self) -> Result<(), CallCenterError> {
        let bad = |msg: String| Err(CallCenterError::InvalidParams(msg));
        if self.n1.is_negative() || self.n2.is_negative() {
            return bad("operator counts must be non-negative".into());
        }
        if !self.pi_ext.is_positive() {
            return bad("pi_ext must be positive".into());
        }
        if self.pi_ur.is_negative() || self.pi_adv.is_negative() {
            return bad("proportions must be non-negative".into());
        }
        let sum = &self.pi_ext + &self.pi_ur + &self.pi_adv;
        if !sum.is_one() {
            return bad(format!("proportions sum to {sum}, not 1"));
        }
        for (name, tau) in self.times() {
            if !tau.is_positive() {
                return bad(format!("{name} must be positive"));
            }
        }
        Ok(())
    }

    /// Extra checks for the full net: positive proportions and positive
    /// holding times once `tau_eps` is taken out.
    pub fn validate_full(&self) -> Result<(), CallCenterError> {
        self.validate()?;
        let bad = |msg: String| Err(CallCenterError::InvalidParams(msg));
        if !self.pi_ur.is_positive() || !self.pi_adv.is_positive() {
            return bad("the full net needs every proportion positive".into());
        }
        let eps = &self.tau_eps;
        let two_eps = eps * int(2);
        let checks = [
            ("tau_ext", &self.tau_ext, eps),
            ("tau_tr", &self.tau_tr, eps),
            ("tau_ur2", &self.tau_ur2, eps),
            ("tau_ur", &self.tau_ur, &two_eps),
            ("tau_adv", &self.tau_adv, &two_eps),
        ];
        for (name, tau, floor) in checks {
            if tau <= floor {
                return bad(format!("{name} must exceed {floor} so that the full net has a positive holding time"));
            }
        }
        Ok(())
    }

    pub(crate) fn times(&self) -> [(&'static str, &Rational); 7] {
        [
            ("tau_ext", &self.tau_ext),
            ("tau_ur", &self.tau_ur),
            ("tau_adv", &self.tau_adv),
            ("tau_tr", &self.tau_tr),
            ("tau_ext2", &self.tau_ext2),
            ("tau_ur2", &self.tau_ur2),
            ("tau_eps", &self.tau_eps),
        ]
    }

    /// Same parameters with both operator counts multiplied by `factor`.
    pub fn scaled(&self, factor: &Rational) -> Self {
        self.with_operators(&self.n1 * factor, &self.n2 * factor)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("parameters serialize")
    }
}

/// A params file: any subset of the fields, applied on top of a base set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverrides {
    #[serde(default, with = "serde_rational_opt", alias = "N1")]
    pub n1: Option<Rational>,
    #[serde(default, with = "serde_rational_opt", alias = "N2")]
    pub n2: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub pi_ext: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub pi_ur: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub pi_adv: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_ext: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_ur: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_adv: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_tr: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_ext2: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_ur2: Option<Rational>,
    #[serde(default, with = "serde_rational_opt")]
    pub tau_eps: Option<Rational>,
}

impl ParamsOverrides {
    pub fn parse(text: &str) -> Result<Self, CallCenterError> {
        serde_json::from_str(text).map_err(|e| CallCenterError::ParamsFile(e.to_string()))
    }

    pub fn apply(&self, base: &CallCenterParams) -> CallCenterParams {
        let pick = |o: &Option<Rational>, b: &Rational| o.clone().unwrap_or_else(|| b.clone());
        CallCenterParams {
            n1: pick(&self.n1, &base.n1),
            n2: pick(&self.n2, &base.n2),
            pi_ext: pick(&self.pi_ext, &base.pi_ext),
            pi_ur: pick(&self.pi_ur, &base.pi_ur),
            pi_adv: pick(&self.pi_adv, &base.pi_adv),
            tau_ext: pick(&self.tau_ext, &base.tau_ext),
            tau_ur: pick(&self.tau_ur, &base.tau_ur),
            tau_adv: pick(&self.tau_adv, &base.tau_adv),
            tau_tr: pick(&self.tau_tr, &base.tau_tr),
            tau_ext2: pick(&self.tau_ext2, &base.tau_ext2),
            tau_ur2: pick(&self.tau_ur2, &base.tau_ur2),
            tau_eps: pick(&self.tau_eps, &base.tau_eps),
        }
    }
}

/// Parses a params file over `base` and validates the result.
pub fn parse_params(text: &str, base: &CallCenterParams) -> Result<CallCenterParams, CallCenterError> {
    let params = ParamsOverrides::parse(text)?.apply(base);
    params.validate()?;
    Ok(params)
}

impl Default for CallCenterParams {
    fn default() -> Self {
        CallCenterParams::set_a(int(9), int(9))
    }
}
