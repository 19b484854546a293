#![no_main]

use dnls::profiles::parse_profile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    if let Ok(spec) = parse_profile(text) {
        let _ = spec.decay();
        for x in [[0.0, 0.0, 0.0], [1.5, -2.0, 0.25], [1e3, 0.0, -1e3]] {
            let _ = spec.eval_point(&x);
        }
    }
});
