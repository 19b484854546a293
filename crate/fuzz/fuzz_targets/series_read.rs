#![no_main]

use dnls::runner::series::read_series;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = read_series(data) {
        for row in &rows {
            let _ = row.scale_row();
            let _ = row.residuals();
        }
    }
});
