//! FFT helpers and frequency-domain filtering on the simulation grid.

use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|cell| {
        let mut guard = cell.borrow_mut();
        let (planner, cache) = &mut *guard;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// Unnormalized forward DFT in place.
pub fn fft(buf: &mut [Complex64]) {
    if !buf.is_empty() {
        plan(buf.len(), false).process(buf);
    }
}

/// Inverse DFT in place, scaled by `1/n`.
pub fn ifft(buf: &mut [Complex64]) {
    if buf.is_empty() {
        return;
    }
    plan(buf.len(), true).process(buf);
    let scale = 1.0 / buf.len() as f64;
    buf.iter_mut().for_each(|z| *z *= scale);
}

/// Frequency in Hz of every FFT bin, negative frequencies in the upper half.
pub fn frequency_grid(n: usize, sample_rate: f64) -> Vec<f64> {
    let df = sample_rate / n as f64;
    (0..n)
        .map(|k| if k < n.div_ceil(2) { k as f64 * df } else { (k as f64 - n as f64) * df })
        .collect()
}

/// Sample a continuous frequency response on the FFT grid.
pub fn sample_response<F>(n: usize, sample_rate: f64, response: F) -> Arc<[Complex64]>
where
    F: Fn(f64) -> Complex64,
{
    frequency_grid(n, sample_rate).into_iter().map(response).collect()
}

pub fn filter_complex(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    fft(&mut buf);
    buf.iter_mut().zip(h).for_each(|(a, b)| *a *= b);
    ifft(&mut buf);
    buf
}

/// Real part of the filtered real signal.
pub fn filter_real(x: &[f64], h: &[Complex64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    fft(&mut buf);
    buf.iter_mut().zip(h).for_each(|(a, b)| *a *= b);
    ifft(&mut buf);
    buf.into_iter().map(|z| z.re).collect()
}
