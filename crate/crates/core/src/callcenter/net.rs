use crate::model::{NetDescription, PetriNet, PriorityTag};
use crate::rational::{int, Rational};

use super::{CallCenterError, CallCenterParams};

/// The call-center net with an explicit firing delay `tau_eps`.
///
/// Level-1 operators sit in `p1`, level-2 operators in `p2`. A call taken
/// by `q1` is classified at `p_route` and leaves through `q2` (extremely
/// urgent), `q3` (urgent) or `q4` (advice). Extremely urgent calls wait for
/// a level-2 operator at `q5`, which has priority over the urgent calls of
/// `q6`; `q7` ends the transfer and frees the level-1 operator.
///
/// Holding times are chosen so that the counters of `q1`, `q5` and `q6`
/// follow the reduced dynamics with the given (already adjusted) times.
pub fn build_full_net(params: &CallCenterParams) -> Result<PetriNet, CallCenterError> {
    params.validate_full()?;
    let eps = &params.tau_eps;
    let two_eps = eps * int(2);
    let zero = || int(0);
    let hold = |t: &Rational, minus: &Rational| t - minus;

    let mut d = NetDescription::default();
    d.place("p1", eps.clone(), params.n1.clone())
        .place("p2", eps.clone(), params.n2.clone())
        .place("p_route", eps.clone(), zero())
        .place("p_ext", hold(&params.tau_ext, eps), zero())
        .place("p_tr", hold(&params.tau_tr, eps), zero())
        .place("p_ext2", params.tau_ext2.clone(), zero())
        .place("p_ur", hold(&params.tau_ur, &two_eps), zero())
        .place("p_wait", eps.clone(), zero())
        .place("p_adv", hold(&params.tau_adv, &two_eps), zero())
        .place("p_ur2", hold(&params.tau_ur2, eps), zero());
    for q in ["q1", "q2", "q3", "q4", "q5", "q6", "q7", "q_ur_end", "q_adv_end", "q_ext2_end", "q_ur2_end"] {
        d.transition(q);
    }
    d.input("p1", "q1").output("q1", "p_route");
    d.input("p_route", "q2").input("p_route", "q3").input("p_route", "q4");
    d.route(
        "p_route",
        &[("q2", params.pi_ext.clone()), ("q3", params.pi_ur.clone()), ("q4", params.pi_adv.clone())],
    );

    // Extremely urgent: transfer to level 2, level 1 released at the end.
    d.output("q2", "p_ext")
        .input("p_ext", "q5")
        .priority_input("p2", "q5", PriorityTag::High)
        .output("q5", "p_tr")
        .input("p_tr", "q7")
        .output("q7", "p1")
        .output("q7", "p_ext2")
        .input("p_ext2", "q_ext2_end")
        .output("q_ext2_end", "p2");

    // Urgent: level 1 finishes first, then the call queues for level 2.
    d.output("q3", "p_ur")
        .input("p_ur", "q_ur_end")
        .output("q_ur_end", "p1")
        .output("q_ur_end", "p_wait")
        .input("p_wait", "q6")
        .priority_input("p2", "q6", PriorityTag::Low)
        .output("q6", "p_ur2")
        .input("p_ur2", "q_ur2_end")
        .output("q_ur2_end", "p2");

    // Advice only.
    d.output("q4", "p_adv").input("p_adv", "q_adv_end").output("q_adv_end", "p1");

    PetriNet::new(d).map_err(CallCenterError::Model)
}
