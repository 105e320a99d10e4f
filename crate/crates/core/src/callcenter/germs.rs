use num_traits::{One, Zero};

use crate::rational::{int, Rational};
use crate::solver::{Constraint, ConstraintKind, GermExpr, GermSystem, Rhs, Unknown, UnknownKind};

use super::CallCenterParams;

/// Germ system of the reduced dynamics with unknowns `q1`, `q5`, `q6`.
///
/// Its stationary solutions are those of the full net restricted to these
/// three transitions.
pub fn reduced_system(params: &CallCenterParams) -> GermSystem {
    let (q1, q5, q6) = (0, 1, 2);
    let unknowns = ["q1", "q5", "q6"]
        .into_iter()
        .map(|id| Unknown {
            id: id.into(),
            kind: UnknownKind::Transition,
        })
        .collect();
    let one = Rational::one;
    let now = Rational::zero;
    let ext_loop = &params.tau_tr + &params.tau_ext2;

    let level_one = GermExpr::constant(params.n1.clone())
        .plus(q5, one(), params.tau_tr.clone())
        .plus(q1, params.pi_ur.clone(), params.tau_ur.clone())
        .plus(q1, params.pi_adv.clone(), params.tau_adv.clone());
    let available = GermExpr::constant(params.n2.clone())
        .plus(q5, one(), ext_loop)
        .plus(q6, one(), params.tau_ur2.clone());
    let high_own = available.clone().plus(q6, int(-1), now());
    let low_own = available.plus(q5, int(-1), now());
    let ext_calls = GermExpr::default().plus(q1, params.pi_ext.clone(), params.tau_ext.clone());
    let ur_calls = GermExpr::default().plus(q1, params.pi_ur.clone(), params.tau_ur.clone());

    GermSystem {
        unknowns,
        constraints: vec![
            Constraint {
                kind: ConstraintKind::PlaceBalance,
                target: q1,
                rhs: Rhs::Min(vec![level_one]),
            },
            Constraint {
                kind: ConstraintKind::PriorityHighMin,
                target: q5,
                rhs: Rhs::PriorityHigh {
                    low: q6,
                    own: high_own,
                    companions: vec![ext_calls],
                },
            },
            Constraint {
                kind: ConstraintKind::PriorityLowMin,
                target: q6,
                rhs: Rhs::Min(vec![low_own, ur_calls]),
            },
        ],
    }
}
