//! Voltage-to-absorption characteristic of the electro-absorption
//! modulator: a knot table and its natural cubic spline.

use serde::{Deserialize, Serialize};

use super::LinkError;

/// Knot table as stored in config files.
///
/// ```toml
/// voltage_v = [-4.0, -3.0, -2.0, -1.0, 0.0]
/// absorption_db = [26.0, 18.0, 8.5, 2.5, 0.0]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AbsorptionTable {
    pub voltage_v: Vec<f64>,
    pub absorption_db: Vec<f64>,
}

impl Default for AbsorptionTable {
    fn default() -> Self {
        Self {
            voltage_v: vec![-4.0, -3.5, -3.0, -2.5, -2.0, -1.5, -1.0, 0.0],
            absorption_db: vec![26.0, 22.5, 18.0, 13.0, 8.5, 5.0, 2.5, 0.0],
        }
    }
}

impl AbsorptionTable {
    pub fn from_toml_str(text: &str) -> Result<Self, LinkError> {
        let table: Self = toml::from_str(text).map_err(|e| LinkError::Config(e.to_string()))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: &str| Err(LinkError::Config(format!("absorption table: {m}")));
        if self.voltage_v.len() != self.absorption_db.len() {
            return bad("voltage_v and absorption_db differ in length");
        }
        if self.voltage_v.len() < 2 {
            return bad("at least two knots are required");
        }
        if !self.voltage_v.iter().chain(&self.absorption_db).all(|v| v.is_finite()) {
            return bad("non-finite knot");
        }
        let mut v = self.voltage_v.clone();
        v.sort_by(f64::total_cmp);
        if v.windows(2).any(|w| w[1] - w[0] <= 0.0) {
            return bad("duplicate voltage knot");
        }
        Ok(())
    }

    pub fn spline(&self) -> Result<AbsorptionSpline, LinkError> {
        AbsorptionSpline::new(self)
    }
}

/// Natural cubic spline through the knots; constant (boundary knot
/// value, zero slope) outside the knot domain.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionSpline {
    x: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots.
    m: Vec<f64>,
}

/// Spline value, slope and whether the input fell outside the knot domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplineEval {
    pub value: f64,
    pub slope: f64,
    pub clamped: bool,
}

impl AbsorptionSpline {
    pub fn new(table: &AbsorptionTable) -> Result<Self, LinkError> {
        table.validate()?;
        let mut pts: Vec<(f64, f64)> =
            table.voltage_v.iter().copied().zip(table.absorption_db.iter().copied()).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let m = natural_second_derivatives(&x, &y);
        Ok(Self { x, y, m })
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    pub fn knots(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.x.iter().copied().zip(self.y.iter().copied())
    }

    pub fn eval(&self, v: f64) -> SplineEval {
        let (lo, hi) = self.domain();
        if v < lo {
            return SplineEval { value: self.y[0], slope: 0.0, clamped: true };
        }
        if v > hi {
            return SplineEval { value: self.y[self.y.len() - 1], slope: 0.0, clamped: true };
        }
        let k = match self.x.partition_point(|&xk| xk <= v) {
            0 => 0,
            p => (p - 1).min(self.x.len() - 2),
        };
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - v) / h;
        let b = (v - self.x[k]) / h;
        let (m0, m1) = (self.m[k], self.m[k + 1]);
        let value = a * self.y[k] + b * self.y[k + 1] + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (self.y[k + 1] - self.y[k]) / h
            + (-(3.0 * a * a - 1.0) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        SplineEval { value, slope, clamped: false }
    }

    /// Second derivative from the left and right of `v` (test helper for
    /// continuity checks).
    pub fn second_derivative(&self, v: f64) -> f64 {
        let (lo, hi) = self.domain();
        if v <= lo || v >= hi {
            return 0.0;
        }
        let k = (self.x.partition_point(|&xk| xk <= v) - 1).min(self.x.len() - 2);
        let h = self.x[k + 1] - self.x[k];
        let a = (self.x[k + 1] - v) / h;
        a * self.m[k] + (1.0 - a) * self.m[k + 1]
    }
}

/// Evaluate the absorption in dB at `v`, clamping outside the knots.
pub fn absorption(v: f64, spline: &AbsorptionSpline) -> f64 {
    spline.eval(v).value
}

fn natural_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    // Thomas algorithm on the interior equations.
    let inner = n - 2;
    let mut diag = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    let mut upper = vec![0.0; inner];
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        diag[i - 1] = (h0 + h1) / 3.0;
        upper[i - 1] = h1 / 6.0;
        rhs[i - 1] = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
    }
    for i in 1..inner {
        let lower = (x[i + 1] - x[i]) / 6.0;
        let w = lower / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        rhs[i] -= w * rhs[i - 1];
    }
    m[inner] = rhs[inner - 1] / diag[inner - 1];
    for i in (0..inner - 1).rev() {
        m[i + 1] = (rhs[i] - upper[i] * m[i + 2]) / diag[i];
    }
    m
}
