//! Zero-ISI spectra and eye diagrams of trained links, and their CSV
//! export.

use std::io::Write;

use num_complex::Complex64;

use super::HarnessError;
use crate::dsp::BesselPrototype;
use crate::link::{LinkConfig, LinkKind, LinkParams};
use crate::metrics::{eye_diagram, nyquist_isi_metric, EyeDiagram, IsiMetric};
use crate::train::Evaluator;

/// Folded total response of an AWGN link: pulse shaper, DAC and ADC
/// Bessel filters (when band limited), receiver filter and equalizer.
pub fn link_isi_metric(cfg: &LinkConfig, params: &LinkParams) -> Result<IsiMetric, HarnessError> {
    if cfg.kind != LinkKind::Awgn {
        return Err(HarnessError::Spec("the zero-ISI spectrum is defined for the linear AWGN link".into()));
    }
    let dac = BesselPrototype::new(cfg.dac.bessel_order)?;
    let adc = BesselPrototype::new(cfg.adc.bessel_order)?;
    let (fd, fa) = (cfg.dac.f3db_ghz * 1e9, cfg.adc.f3db_ghz * 1e9);
    let dac_resp = move |f: f64| dac.response(f, fd);
    let adc_resp = move |f: f64| adc.response(f, fa);
    let analog: Vec<&dyn Fn(f64) -> Complex64> =
        if cfg.awgn.bandlimit { vec![&dac_resp, &adc_resp] } else { Vec::new() };
    let h_r = match &params.ffe {
        Some(ffe) => crate::dsp::fir::convolve_full(&params.h_r, ffe),
        None => params.h_r.clone(),
    };
    Ok(nyquist_isi_metric(&params.h_p, &h_r, &analog, cfg.system.sps, cfg.symbol_rate())?)
}

/// Eye diagram of the receiver output and the transmitted level of each
/// trace.
pub fn link_eye(
    cfg: &LinkConfig,
    params: &LinkParams,
    seed: u64,
    n_traces: usize,
) -> Result<(EyeDiagram, Vec<f64>), HarnessError> {
    let mut ev = Evaluator::new(cfg, params.clone(), seed, false)?;
    let block = ev.block(n_traces + 2)?;
    let eye = eye_diagram(&block.rx, block.sps, n_traces, block.first_sample)?;
    let labels = block.targets[1..=n_traces].to_vec();
    Ok((eye, labels))
}

/// `freq_hz,re,im,abs` per folded bin.
pub fn write_isi_csv<W: Write>(m: &IsiMetric, out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["freq_hz", "re", "im", "abs"]).map_err(csv_err)?;
    for (f, b) in m.freqs_hz.iter().zip(&m.folded) {
        w.write_record([f.to_string(), b.re.to_string(), b.im.to_string(), b.norm().to_string()]).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

/// One row per trace: the transmitted level followed by the samples.
pub fn write_eye_csv<W: Write>(eye: &EyeDiagram, labels: &[f64], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["level".to_string()];
    header.extend((0..2 * eye.sps).map(|k| format!("s{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (t, l) in eye.traces.iter().zip(labels) {
        let mut rec = vec![l.to_string()];
        rec.extend(t.iter().map(f64::to_string));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| HarnessError::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> HarnessError {
    HarnessError::Io(e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::eye_opening;
    use crate::train::{initial_params, TrainPlan, Variant};

    #[test]
    fn unlimited_rrc_link_is_nearly_flat() {
        let mut cfg = LinkConfig::for_kind(LinkKind::Awgn);
        cfg.awgn.bandlimit = false;
        cfg.training.rrc_rolloff = 0.25;
        let p = initial_params(&TrainPlan::new(Variant::Ps, 97, &cfg, 0), &cfg).unwrap();
        assert!(link_isi_metric(&cfg, &p).unwrap().flatness < 1e-2);
        cfg.awgn.bandlimit = true;
        assert!(link_isi_metric(&cfg, &p).unwrap().flatness > 0.1);
    }

    #[test]
    fn noise_free_eye_is_open() {
        let mut cfg = LinkConfig::for_kind(LinkKind::Awgn);
        cfg.awgn.bandlimit = false;
        cfg.awgn.snr_db = f64::INFINITY;
        cfg.training.rrc_rolloff = 0.25;
        let p = initial_params(&TrainPlan::new(Variant::Ps, 97, &cfg, 0), &cfg).unwrap();
        let (eye, labels) = link_eye(&cfg, &p, 1, 200).unwrap();
        let levels = crate::link::pam_levels(4).unwrap();
        let open = eye_opening(&eye, &labels, &levels).unwrap();
        assert!(open > 0.8, "opening {open}");
        let mut buf = Vec::new();
        write_eye_csv(&eye, &labels, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 201);
    }
}
