#![no_main]

use h3spec::io::{parse_eigenvalues, write_eigenvalues};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(list) = parse_eigenvalues(data) {
        let again = parse_eigenvalues(&write_eigenvalues(&list, &[])).unwrap();
        assert_eq!(again.len(), list.len());
    }
});
