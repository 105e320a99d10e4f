#![no_main]
use libfuzzer_sys::fuzz_target;
use tpn::callcenter::{parse_params, phase_table, CallCenterParams};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(params) = parse_params(s, &CallCenterParams::default()) {
            let _ = phase_table(&params);
        }
    }
});
