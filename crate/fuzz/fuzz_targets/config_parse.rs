#![no_main]

use dnls::runner::parse_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|text: &str| {
    let Ok(config) = parse_config(text) else {
        return;
    };
    let _ = config.validate();
    let rendered = config.to_toml().unwrap();
    let again = parse_config(&rendered).unwrap();
    assert_eq!(again.to_toml().unwrap(), rendered);
});
