#![no_main]

use isi_core::harness::SweepResult;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(result) = SweepResult::read_csv(data) {
        let text = result.to_csv_string();
        let again = SweepResult::read_csv(text.as_bytes()).expect("written results parse");
        assert_eq!(again.to_csv_string(), text);
    }
});
