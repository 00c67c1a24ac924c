#![no_main]

use isi_core::harness::ParamFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(file) = ParamFile::from_toml_str(text) {
        let _ = file.params();
    }
});
