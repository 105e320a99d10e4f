use std::fs;
use std::path::PathBuf;

use clap::Args;
use num_traits::One;
use tpn::callcenter::{build_full_net, ParamsOverrides, CallCenterParams};
use tpn::model::{self, PetriNet};
use tpn::rational::{parse_rational, Rational};

use crate::error::CliError;

pub fn rational_arg(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// `callcenter` (reference set A), `callcenter-b` (set A with the
    /// level-2 extremely-urgent time raised to 5) or a JSON net file.
    #[arg(long, default_value = "callcenter")]
    pub model: String,
    /// JSON file overriding call-center parameters.
    #[arg(long)]
    pub params: Option<PathBuf>,
    /// Level-1 operators (call-center models).
    #[arg(long, value_parser = rational_arg)]
    pub n1: Option<Rational>,
    /// Level-2 operators (call-center models).
    #[arg(long, value_parser = rational_arg)]
    pub n2: Option<Rational>,
}

pub enum Model {
    CallCenter(CallCenterParams),
    File(PetriNet),
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<Model, CliError> {
        let base = match self.model.as_str() {
            "callcenter" => CallCenterParams::default(),
            "callcenter-b" => CallCenterParams::set_b(tpn::rational::int(9), tpn::rational::int(9)),
            path => {
                if self.params.is_some() || self.n1.is_some() || self.n2.is_some() {
                    return Err(CliError::Usage(
                        "--params, --n1 and --n2 only apply to the call-center models".into(),
                    ));
                }
                return Ok(Model::File(model::load(path)?));
            }
        };
        let mut params = match &self.params {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                ParamsOverrides::parse(&text)?.apply(&base)
            }
            None => base,
        };
        if let Some(n1) = &self.n1 {
            params.n1 = n1.clone();
        }
        if let Some(n2) = &self.n2 {
            params.n2 = n2.clone();
        }
        params.validate()?;
        Ok(Model::CallCenter(params))
    }
}

impl Model {
    pub fn net(&self) -> Result<PetriNet, CliError> {
        match self {
            Model::CallCenter(params) => Ok(build_full_net(params)?),
            Model::File(net) => Ok(net.clone()),
        }
    }
}

/// 1 when every holding time is an integer, the grid step otherwise.
pub fn default_delta(net: &PetriNet) -> Rational {
    let one = Rational::one();
    if net.accepts_step(&one) {
        one
    } else {
        net.grid_step()
    }
}

/// Same rule for the reduced call-center dynamics.
pub fn default_reduced_delta(params: &CallCenterParams) -> Rational {
    let times = [
        &params.tau_ext,
        &params.tau_ur,
        &params.tau_adv,
        &params.tau_tr,
        &params.tau_ext2,
        &params.tau_ur2,
    ];
    if times.iter().all(|t| t.is_integer()) {
        Rational::one()
    } else {
        tpn::rational::rational_gcd(times).unwrap_or_else(Rational::one)
    }
}
