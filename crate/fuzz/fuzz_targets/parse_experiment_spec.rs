#![no_main]

use isi_core::harness::ExperimentSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = ExperimentSpec::from_toml_str(text) {
        if spec.validate().is_ok() {
            let e = &spec.experiment;
            let _ = spec.train_config(e.values[0], e.fiber_km[0]);
            let _ = spec.eval_config(e.values[0], e.fiber_km[0]);
        }
    }
});
