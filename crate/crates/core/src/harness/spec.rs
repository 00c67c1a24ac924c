//! Experiment specifications: a link configuration plus the sweep to run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::link::{LinkConfig, LinkKind};
use crate::train::Variant;

/// Swept link quantity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    SnrDb,
    VPp,
    SpacingGhz,
    LaunchPowerDbm,
}

impl SweepVar {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepVar::SnrDb => "snr_db",
            SweepVar::VPp => "v_pp",
            SweepVar::SpacingGhz => "spacing_ghz",
            SweepVar::LaunchPowerDbm => "launch_power_dbm",
        }
    }

    /// Set the swept quantity on `cfg`.
    pub fn apply(self, cfg: &mut LinkConfig, value: f64) {
        match self {
            SweepVar::SnrDb => cfg.awgn.snr_db = value,
            SweepVar::VPp => cfg.dac.v_pp_v = value,
            SweepVar::SpacingGhz => cfg.wdm.spacing_ghz = value,
            SweepVar::LaunchPowerDbm => match cfg.kind {
                LinkKind::ImddIdeal => cfg.modulator.laser_power_ideal_dbm = value,
                _ => cfg.modulator.laser_power_eam_dbm = value,
            },
        }
    }
}

/// Changes applied to the link for evaluation only.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalOverrides {
    /// Channel count during evaluation (training keeps the link's count).
    pub n_channels: Option<usize>,
    /// Propagate with the split-step model instead of the linear fiber.
    pub nonlinear_fiber: bool,
}

/// Sweep description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub name: String,
    pub sweep: SweepVar,
    pub values: Vec<f64>,
    pub variants: Vec<Variant>,
    pub n_taps: Vec<usize>,
    #[serde(default = "default_fiber")]
    pub fiber_km: Vec<f64>,
    #[serde(default = "default_one")]
    pub repeats: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Train once at this sweep value and evaluate the whole grid with
    /// those parameters; without it every point is trained separately.
    #[serde(default)]
    pub train_at: Option<f64>,
    #[serde(default)]
    pub eval: EvalOverrides,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

fn default_fiber() -> Vec<f64> {
    vec![0.0]
}

fn default_one() -> usize {
    1
}

/// One experiment file: `[experiment]` plus the `[link]` configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub link: LinkConfig,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let spec: Self = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    /// Parse a file; relative paths inside resolve against its directory.
    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut spec = Self::from_toml_str(&text)?;
        spec.link.resolve_files(path.parent())?;
        spec.link.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("experiment specs always serialize")
    }

    /// First 8 bytes of the SHA-256 of the canonical TOML form, as hex.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let e = &self.experiment;
        let empty = |what: &str| Err(HarnessError::Spec(format!("{what} list is empty")));
        if e.values.is_empty() {
            return empty("sweep value");
        }
        if e.variants.is_empty() {
            return empty("variant");
        }
        if e.n_taps.is_empty() {
            return empty("n_taps");
        }
        if e.fiber_km.is_empty() {
            return empty("fiber_km");
        }
        if e.repeats == 0 {
            return Err(HarnessError::Spec("repeats must be at least 1".into()));
        }
        if e.values.iter().chain(&e.fiber_km).any(|v| !v.is_finite()) {
            return Err(HarnessError::Spec("sweep values and fiber lengths must be finite".into()));
        }
        if e.fiber_km.iter().any(|&l| l < 0.0) {
            return Err(HarnessError::Spec("fiber lengths must be non-negative".into()));
        }
        if let Some(&n) = e.n_taps.iter().find(|&&n| n == 0 || n % 2 == 0) {
            return Err(HarnessError::Spec(format!("filter length {n} must be odd")));
        }
        if matches!(e.train_at, Some(v) if !v.is_finite()) {
            return Err(HarnessError::Spec("train_at must be finite".into()));
        }
        let kind = self.link.kind;
        let ok = match e.sweep {
            SweepVar::SnrDb => kind == LinkKind::Awgn,
            SweepVar::VPp | SweepVar::LaunchPowerDbm => kind.is_imdd(),
            SweepVar::SpacingGhz => self.link.wdm.n_channels > 1,
        };
        if !ok {
            return Err(HarnessError::Spec(format!(
                "sweep over {} does not apply to a {} link with {} channel(s)",
                e.sweep.as_str(),
                kind.as_str(),
                self.link.wdm.n_channels
            )));
        }
        if kind == LinkKind::Awgn && e.fiber_km.iter().any(|&l| l > 0.0) {
            return Err(HarnessError::Spec("the AWGN link has no fiber".into()));
        }
        if let Some(n) = e.eval.n_channels {
            if n == 0 || n % 2 == 0 {
                return Err(HarnessError::Spec(format!("evaluation channel count {n} must be odd")));
            }
        }
        if e.eval.nonlinear_fiber && !kind.is_imdd() {
            return Err(HarnessError::Spec("the split-step fiber needs an IM/DD link".into()));
        }
        self.link.validate()?;
        Ok(())
    }

    /// Link used to train at sweep value `value`.
    pub fn train_config(&self, value: f64, fiber_km: f64) -> LinkConfig {
        let mut cfg = self.link.clone();
        cfg.fiber.length_km = fiber_km;
        self.experiment.sweep.apply(&mut cfg, value);
        cfg
    }

    /// Link used to evaluate at sweep value `value`.
    pub fn eval_config(&self, value: f64, fiber_km: f64) -> LinkConfig {
        let mut cfg = self.train_config(value, fiber_km);
        if let Some(n) = self.experiment.eval.n_channels {
            cfg.wdm.n_channels = n;
        }
        cfg
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[experiment]
name = "t"
sweep = "snr_db"
values = [8.0, 10.0]
variants = ["PS", "PS_RxF"]
n_taps = [15]

[link]
kind = "awgn"
"#;

    #[test]
    fn parses_and_hashes() {
        let s = ExperimentSpec::from_toml_str(MINIMAL).unwrap();
        assert_eq!(s.experiment.variants, vec![Variant::Ps, Variant::PsRxF]);
        assert_eq!(s.experiment.fiber_km, vec![0.0]);
        assert_eq!(s.experiment.repeats, 1);
        let again = ExperimentSpec::from_toml_str(&s.to_toml_string()).unwrap();
        assert_eq!(again, s);
        assert_eq!(again.config_hash(), s.config_hash());
        assert_eq!(s.config_hash().len(), 16);
    }

    #[test]
    fn rejects_bad_specs() {
        let bad = [
            MINIMAL.replace(r#"variants = ["PS", "PS_RxF"]"#, "variants = []"),
            MINIMAL.replace("values = [8.0, 10.0]", "values = []"),
            MINIMAL.replace("n_taps = [15]", "n_taps = [16]"),
            MINIMAL.replace(r#"kind = "awgn""#, r#"kind = "imdd_eam""#),
            MINIMAL.replace(r#"sweep = "snr_db""#, r#"sweep = "spacing_ghz""#),
            MINIMAL.replace(r#""PS_RxF""#, r#""PS&RxF""#),
            MINIMAL.replace("[link]", "bogus = 1\n[link]"),
        ];
        for text in bad {
            assert!(ExperimentSpec::from_toml_str(&text).is_err(), "accepted:\n{text}");
        }
    }

    #[test]
    fn sweep_application() {
        let mut cfg = LinkConfig::for_kind(LinkKind::ImddIdeal);
        SweepVar::LaunchPowerDbm.apply(&mut cfg, -20.0);
        assert_eq!(cfg.modulator.laser_power_ideal_dbm, -20.0);
        SweepVar::VPp.apply(&mut cfg, 3.0);
        assert_eq!(cfg.dac.v_pp_v, 3.0);
        SweepVar::SpacingGhz.apply(&mut cfg, 125.0);
        assert_eq!(cfg.wdm.spacing_ghz, 125.0);
    }
}
