#![no_main]

use h3spec::io::{parse_spectrum, quantize_spectrum, write_spectrum};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(s) = parse_spectrum(data) {
        let q = quantize_spectrum(&s);
        assert_eq!(parse_spectrum(&write_spectrum(&q)).unwrap(), q);
    }
});
