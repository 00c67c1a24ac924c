//! Result rows and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::train::Variant;

/// Column names of the results file, in order.
pub const RESULT_HEADER: [&str; 11] = [
    "sweep_var_name",
    "sweep_value",
    "variant",
    "n_taps",
    "fiber_km",
    "seed",
    "ser",
    "ser_ci_lo",
    "ser_ci_hi",
    "trained_at",
    "config_hash",
];

/// One evaluated (variant, point, repeat) combination. A training run that
/// aborted leaves `ser` and its interval as NaN.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_var_name: String,
    pub sweep_value: f64,
    pub variant: Variant,
    pub n_taps: usize,
    pub fiber_km: f64,
    /// Repeat index of the run.
    pub seed: u64,
    pub ser: f64,
    pub ser_ci_lo: f64,
    pub ser_ci_hi: f64,
    pub trained_at: f64,
    pub config_hash: String,
}

impl ResultRow {
    pub fn aborted(&self) -> bool {
        self.ser.is_nan()
    }

    fn sort_key(&self) -> (Variant, f64, u64, usize, f64) {
        (self.variant, self.sweep_value, self.seed, self.n_taps, self.fiber_km)
    }

    /// Row with every float rounded to the nine significant digits of the
    /// file format.
    pub fn quantized(&self) -> Self {
        let q = |x: f64| fmt_float(x).parse::<f64>().expect("formatted floats parse");
        Self {
            sweep_value: q(self.sweep_value),
            fiber_km: q(self.fiber_km),
            ser: q(self.ser),
            ser_ci_lo: q(self.ser_ci_lo),
            ser_ci_hi: q(self.ser_ci_hi),
            trained_at: q(self.trained_at),
            ..self.clone()
        }
    }
}

/// Rows of one run, kept sorted by (variant, sweep value, seed, n_taps,
/// fiber length).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<ResultRow>,
}

impl SweepResult {
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| {
            let (ka, kb) = (a.sort_key(), b.sort_key());
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.cmp(&kb.2))
                .then(ka.3.cmp(&kb.3))
                .then(ka.4.total_cmp(&kb.4))
        });
        Self { rows }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(RESULT_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.sweep_var_name.clone(),
                fmt_float(r.sweep_value),
                r.variant.as_str().to_string(),
                r.n_taps.to_string(),
                fmt_float(r.fiber_km),
                r.seed.to_string(),
                fmt_float(r.ser),
                fmt_float(r.ser_ci_lo),
                fmt_float(r.ser_ci_hi),
                fmt_float(r.trained_at),
                r.config_hash.clone(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| HarnessError::Io(e.to_string()))?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, HarnessError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers().map_err(csv_err)?;
        if header.iter().ne(RESULT_HEADER) {
            return Err(HarnessError::Parse(format!("unexpected results header {:?}", header)));
        }
        let rows = r.deserialize().collect::<Result<Vec<ResultRow>, _>>().map_err(csv_err)?;
        Ok(Self { rows })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Write `result` to `path`.
pub fn serialize_results(result: &SweepResult, path: &Path) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    result.write_csv(std::io::BufWriter::new(file))
}

pub fn read_results(path: &Path) -> Result<SweepResult, HarnessError> {
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    SweepResult::read_csv(file)
}

/// Decimal scientific notation with nine significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.8e}")
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Parse(e.to_string())
}
