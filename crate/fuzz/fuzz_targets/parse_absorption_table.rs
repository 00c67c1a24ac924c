#![no_main]

use isi_core::link::AbsorptionTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = AbsorptionTable::from_toml_str(text) {
        let spline = table.spline().expect("validated tables build a spline");
        for &v in &table.voltage_v {
            let _ = spline.eval(v);
        }
    }
});
