//! Receiver-side equalizers: oversampled linear FFE and a second-order
//! Volterra filter.

use crate::dsp::{fir, DspError, FilterTaps, SampledSignal};

/// Linear feed-forward equalizer, run at the signal's own sample rate.
pub fn ffe_apply(signal: &SampledSignal, taps: &FilterTaps) -> Result<SampledSignal, DspError> {
    fir::fir_convolve(signal, taps)
}

/// Number of free parameters of a second-order Volterra kernel with a
/// symmetric quadratic part stored once.
pub const fn param_count(n1: usize, n2: usize) -> usize {
    n1 + n2 * (n2 + 1) / 2
}

/// First- and second-order Volterra kernels.
///
/// `k2` is the upper triangle (`i ≤ j`, row-major) of the symmetric
/// `n2 × n2` quadratic kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct VolterraKernel {
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    n2: usize,
}

impl VolterraKernel {
    /// Identity equalizer: `k1` a centered unit impulse, `k2 = 0`.
    pub fn identity(n1: usize, n2: usize) -> Self {
        let mut k1 = vec![0.0; n1];
        if n1 > 0 {
            k1[n1 / 2] = 1.0;
        }
        Self { k1, k2: vec![0.0; n2 * (n2 + 1) / 2], n2 }
    }

    pub fn from_parts(k1: Vec<f64>, k2: Vec<f64>, n2: usize) -> Result<Self, DspError> {
        if k2.len() != n2 * (n2 + 1) / 2 {
            return Err(DspError::Argument(format!(
                "quadratic kernel has {} entries, expected {} for {n2} lags",
                k2.len(),
                n2 * (n2 + 1) / 2
            )));
        }
        Ok(Self { k1, k2, n2 })
    }

    pub fn n1(&self) -> usize {
        self.k1.len()
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn param_count(&self) -> usize {
        param_count(self.n1(), self.n2)
    }

    pub fn k2_at(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        self.k2[tri_index(i, j, self.n2)]
    }

    pub fn set_k2(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let idx = tri_index(i, j, self.n2);
        self.k2[idx] = v;
    }
}

fn tri_index(i: usize, j: usize, n: usize) -> usize {
    // rows 0..i hold n, n-1, ..., n-i+1 entries
    i * n - i * i.saturating_sub(1) / 2 + (j - i)
}

/// `y[n] = Σ_i k1[i]·x[n−i+c1] + Σ_{i≤j} k2[i,j]·x[n−i+c2]·x[n−j+c2]`
/// with centered windows and zero padding.
pub fn volterra2_apply(signal: &SampledSignal, kernel: &VolterraKernel) -> Result<SampledSignal, DspError> {
    if kernel.n1().max(kernel.n2) > signal.len() {
        return Err(DspError::Argument("kernel longer than signal".into()));
    }
    Ok(signal.with_samples(volterra_forward(signal.samples(), &kernel.k1, &kernel.k2, kernel.n2)))
}

fn window(x: &[f64], n: usize, n2: usize, out: &mut [f64]) {
    let c = (n2.saturating_sub(1) / 2) as isize;
    for (i, w) in out.iter_mut().enumerate() {
        let idx = n as isize - i as isize + c;
        *w = if idx >= 0 && (idx as usize) < x.len() { x[idx as usize] } else { 0.0 };
    }
}

pub(crate) fn volterra_forward(x: &[f64], k1: &[f64], k2: &[f64], n2: usize) -> Vec<f64> {
    let mut y = fir::convolve_same(x, k1);
    if n2 == 0 || k2.iter().all(|v| *v == 0.0) {
        return y;
    }
    let mut w = vec![0.0; n2];
    for (n, yn) in y.iter_mut().enumerate() {
        window(x, n, n2, &mut w);
        let mut acc = 0.0;
        let mut idx = 0;
        for i in 0..n2 {
            let mut row = 0.0;
            for j in i..n2 {
                row += k2[idx] * w[j];
                idx += 1;
            }
            acc += w[i] * row;
        }
        *yn += acc;
    }
    y
}

/// Adjoints of [`volterra_forward`] with respect to input, `k1`, `k2`.
pub(crate) fn volterra_adjoint(
    gy: &[f64],
    x: &[f64],
    k1: &[f64],
    k2: &[f64],
    n2: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut gx = fir::convolve_same_adjoint(gy, k1);
    let gk1 = fir::taps_adjoint(gy, x, k1.len());
    let mut gk2 = vec![0.0; k2.len()];
    if n2 == 0 {
        return (gx, gk1, gk2);
    }
    // Dense symmetric copy for the input adjoint: K[i][j] = K[j][i] = k2[i,j].
    let mut dense = vec![0.0; n2 * n2];
    let mut idx = 0;
    for i in 0..n2 {
        for j in i..n2 {
            dense[i * n2 + j] = k2[idx];
            dense[j * n2 + i] = k2[idx];
            idx += 1;
        }
    }
    let c = (n2.saturating_sub(1) / 2) as isize;
    let mut w = vec![0.0; n2];
    for (n, &g) in gy.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        window(x, n, n2, &mut w);
        let mut idx = 0;
        for i in 0..n2 {
            let gw = g * w[i];
            for j in i..n2 {
                gk2[idx] += gw * w[j];
                idx += 1;
            }
        }
        for i in 0..n2 {
            let pos = n as isize - i as isize + c;
            if pos < 0 || pos as usize >= x.len() {
                continue;
            }
            // d/dw_i Σ_{a≤b} k[a,b] w_a w_b = Σ_b K[i][b] w_b + K[i][i] w_i
            let row = &dense[i * n2..(i + 1) * n2];
            let dot: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + row[i] * w[i];
            gx[pos as usize] += g * dot;
        }
    }
    (gx, gk1, gk2)
}
