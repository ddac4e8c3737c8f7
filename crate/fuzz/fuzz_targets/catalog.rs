//! Catalogs with any column order and `-` placeholders.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = h3spec::io::parse_catalog(text);
    }
});
