#![no_main]
use libfuzzer_sys::fuzz_target;
use tpn::Germ;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(g) = s.parse::<Germ>() {
            let again: Germ = g.to_string().parse().expect("display output parses");
            assert_eq!(g, again);
            assert_eq!(g.meet(&g), g);
        }
    }
});
