#![no_main]
use libfuzzer_sys::fuzz_target;
use tpn::rational::{parse_rational, DisplayRational};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(r) = parse_rational(s) {
            let again = parse_rational(&DisplayRational(&r).to_string()).expect("display output parses");
            assert_eq!(r, again);
        }
    }
});
