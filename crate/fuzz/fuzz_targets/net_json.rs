#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(net) = tpn::model::load_str(s) {
            let _ = net.report();
            let _ = tpn::solver::build_system(&net).selection_count();
        }
    }
});
