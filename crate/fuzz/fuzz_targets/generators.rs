//! Generator files: arbitrary text must give a presentation or a line-numbered error.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &str| {
    if let Ok(p) = h3spec::io::parse_generators(data) {
        for g in p.generators() {
            assert!((g.det() - 1.0).norm() < 1e-9);
        }
        // Written generators read back.
        let again = h3spec::io::parse_generators(&h3spec::io::write_generators(&p)).unwrap();
        assert_eq!(again.generators().len(), p.generators().len());
    }
});
