#![no_main]

use dnls::spectral::snapshot;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(field) = snapshot::decode(data) {
        // Decoding is strict, so a decoded field re-encodes to the input.
        let bytes = snapshot::encode(&field).unwrap();
        assert_eq!(bytes, data);
    }
});
