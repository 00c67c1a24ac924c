//! Companion gnuplot scripts for result files.

use super::spec::{ExperimentSpec, SweepVar};

fn axis_label(var: SweepVar) -> &'static str {
    match var {
        SweepVar::SnrDb => "SNR [dB]",
        SweepVar::VPp => "V_{pp} [V]",
        SweepVar::SpacingGhz => "channel spacing [GHz]",
        SweepVar::LaunchPowerDbm => "laser power [dBm]",
    }
}

/// Script plotting SER against the swept variable, one curve per
/// (variant, filter length, fiber length), from the CSV at `csv_path`.
pub fn gnuplot_script(spec: &ExperimentSpec, csv_path: &str, png_path: &str) -> String {
    let e = &spec.experiment;
    let mut s = String::new();
    s.push_str(&format!("# {} ({})\n", e.name, spec.config_hash()));
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,600\n");
    s.push_str(&format!("set output '{png_path}'\n"));
    s.push_str("set logscale y\nset format y '10^{%L}'\nset grid\nset key outside right\n");
    s.push_str(&format!("set xlabel '{}'\nset ylabel 'SER'\n", axis_label(e.sweep)));
    if spec.link.kind.is_imdd() {
        s.push_str(&format!("kp4 = {:e}\n", crate::metrics::kp4_threshold()));
    }
    let mut curves = Vec::new();
    for v in &e.variants {
        for n in &e.n_taps {
            for l in &e.fiber_km {
                curves.push(format!(
                    "'{csv_path}' using ($4=={n} && abs($5-{l})<1e-9 && strcol(3) eq '{v}' ? $2 : 1/0):7 \
                     smooth unique with linespoints title '{v} N={n} L={l} km'"
                ));
            }
        }
    }
    if spec.link.kind.is_imdd() {
        curves.push("kp4 with lines dt 2 lc 'black' title 'KP4'".into());
    }
    s.push_str("plot ");
    s.push_str(&curves.join(", \\\n     "));
    s.push('\n');
    s
}
