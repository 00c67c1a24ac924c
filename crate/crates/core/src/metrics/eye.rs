//! Eye diagrams of the oversampled receiver output.

use super::MetricsError;

/// Overlaid two-symbol traces. The sampling instant of the trace's symbol
/// sits at column `sample_column`, the next symbol's at `sample_column + sps`.
#[derive(Clone, Debug, PartialEq)]
pub struct EyeDiagram {
    pub traces: Vec<Vec<f64>>,
    pub sps: usize,
    pub sample_column: usize,
}

/// Cut `n_traces` traces from `signal`, where symbol `k` is sampled at
/// `delay + k·sps`. Trace `j` belongs to symbol `j + 1`.
pub fn eye_diagram(signal: &[f64], sps: usize, n_traces: usize, delay: usize) -> Result<EyeDiagram, MetricsError> {
    if sps == 0 {
        return Err(MetricsError::Argument("sps must be positive".into()));
    }
    let half = sps / 2;
    let needed = delay + (n_traces + 1) * sps - half + 2 * sps;
    if signal.len() < needed {
        return Err(MetricsError::Argument(format!(
            "signal of {} samples is too short for {n_traces} traces (needs {needed})",
            signal.len()
        )));
    }
    let traces = (0..n_traces)
        .map(|j| {
            let start = delay + (j + 1) * sps - half;
            signal[start..start + 2 * sps].to_vec()
        })
        .collect();
    Ok(EyeDiagram { traces, sps, sample_column: half })
}

/// Relative vertical opening at the sampling column: the smallest gap
/// between the samples of adjacent transmitted levels divided by the
/// distance of their means. 1 is a perfectly open eye; ≤ 0 is closed.
/// `labels[j]` is the transmitted level of trace `j`.
pub fn eye_opening(eye: &EyeDiagram, labels: &[f64], levels: &[f64]) -> Result<f64, MetricsError> {
    if labels.len() != eye.traces.len() {
        return Err(MetricsError::Length(labels.len(), eye.traces.len()));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); levels.len()];
    for (trace, label) in eye.traces.iter().zip(labels) {
        let idx = levels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| MetricsError::Argument(format!("label {label} is not a level")))?;
        groups[idx].push(trace[eye.sample_column]);
    }
    let mut opening = f64::INFINITY;
    let present: Vec<&Vec<f64>> = groups.iter().filter(|g| !g.is_empty()).collect();
    if present.len() < 2 {
        return Err(MetricsError::Argument("need at least two populated levels".into()));
    }
    for pair in present.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let lo_max = lo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let hi_min = hi.iter().cloned().fold(f64::INFINITY, f64::min);
        let lo_mean = lo.iter().sum::<f64>() / lo.len() as f64;
        let hi_mean = hi.iter().sum::<f64>() / hi.len() as f64;
        opening = opening.min((hi_min - lo_max) / (hi_mean - lo_mean));
    }
    Ok(opening)
}
