#![no_main]

use isi_core::link::LinkConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = LinkConfig::from_toml_str(text) {
        let _ = cfg.validate();
        let _ = cfg.config_hash();
    }
});
