//! Physical and training parameters of a simulated link.
//!
//! The on-disk form is TOML with the unit spelled out in every key name
//! (`f3db_ghz`, `laser_power_eam_dbm`, ...). Every table is optional; a
//! missing key takes its default value.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spline::AbsorptionTable;
use super::LinkError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Hash, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum LinkKind {
    Awgn,
    ImddIdeal,
    ImddEam,
}

impl LinkKind {
    pub fn is_imdd(self) -> bool {
        !matches!(self, LinkKind::Awgn)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Awgn => "awgn",
            LinkKind::ImddIdeal => "imdd_ideal",
            LinkKind::ImddEam => "imdd_eam",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub kind: LinkKind,
    pub system: SystemConfig,
    pub awgn: AwgnConfig,
    pub dac: DacConfig,
    pub modulator: ModulatorConfig,
    pub fiber: FiberConfig,
    pub photodiode: PhotodiodeConfig,
    pub adc: AdcConfig,
    pub wdm: WdmConfig,
    pub training: TrainingConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            kind: LinkKind::ImddEam,
            system: SystemConfig::default(),
            awgn: AwgnConfig::default(),
            dac: DacConfig::default(),
            modulator: ModulatorConfig::default(),
            fiber: FiberConfig::default(),
            photodiode: PhotodiodeConfig::default(),
            adc: AdcConfig::default(),
            wdm: WdmConfig::default(),
            training: TrainingConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub sps: usize,
    pub symbol_rate_gbd: f64,
    pub constellation_order: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self { sps: 8, symbol_rate_gbd: 100.0, constellation_order: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AwgnConfig {
    pub snr_db: f64,
    /// Apply the converter Bessel filters; off gives the unlimited channel.
    pub bandlimit: bool,
}

impl Default for AwgnConfig {
    fn default() -> Self {
        Self { snr_db: 12.0, bandlimit: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DacConfig {
    pub f3db_ghz: f64,
    pub bessel_order: usize,
    pub v_pp_v: f64,
    /// Bias for the EAM (initial value when learned). The ideal modulator
    /// always uses `v_pp_v / 2`.
    pub v_b_v: f64,
    pub quant_bits: u32,
}

impl Default for DacConfig {
    fn default() -> Self {
        Self { f3db_ghz: 45.0, bessel_order: 5, v_pp_v: 4.0, v_b_v: -1.0, quant_bits: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulatorConfig {
    pub laser_power_ideal_dbm: f64,
    pub laser_power_eam_dbm: f64,
    pub chirp_alpha: f64,
    pub wavelength_nm: f64,
    /// Voltage-to-absorption knots for the EAM.
    pub absorption: AbsorptionTable,
    /// Optional knot file; replaces `absorption` when set. Relative paths
    /// resolve against the config file's directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub absorption_file: Option<String>,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self {
            laser_power_ideal_dbm: -13.0,
            laser_power_eam_dbm: -6.0,
            chirp_alpha: 1.0,
            wavelength_nm: 1270.0,
            absorption: AbsorptionTable::default(),
            absorption_file: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FiberConfig {
    pub length_km: f64,
    pub dispersion_ps_nm_km: f64,
    /// Listed for completeness; the dispersion parameter above is used as is.
    pub slope_ps_nm2_km: f64,
    pub lambda0_nm: f64,
    pub attenuation_db_km: f64,
    pub gamma_per_w_km: f64,
    pub ssfm_step_km: f64,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            length_km: 0.0,
            dispersion_ps_nm_km: -15.43,
            slope_ps_nm2_km: 0.092,
            lambda0_nm: 1310.0,
            attenuation_db_km: 0.2,
            gamma_per_w_km: 1.3,
            ssfm_step_km: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhotodiodeConfig {
    pub boltzmann_j_per_k: f64,
    pub temperature_k: f64,
    pub bandwidth_ghz: f64,
    pub impedance_ohm: f64,
    pub electron_charge_c: f64,
    pub responsivity_a_per_w: f64,
    pub dark_current_a: f64,
    pub noise: bool,
}

impl Default for PhotodiodeConfig {
    fn default() -> Self {
        Self {
            boltzmann_j_per_k: 1.38e-23,
            temperature_k: 293.0,
            bandwidth_ghz: 45.0,
            impedance_ohm: 50.0,
            electron_charge_c: 1.6e-19,
            responsivity_a_per_w: 1.0,
            dark_current_a: 1e-8,
            noise: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdcConfig {
    pub f3db_ghz: f64,
    pub bessel_order: usize,
    pub quant_bits: u32,
}

impl Default for AdcConfig {
    fn default() -> Self {
        Self { f3db_ghz: 45.0, bessel_order: 5, quant_bits: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WdmConfig {
    /// 1 disables multiplexing; otherwise odd, channel of interest in the middle.
    pub n_channels: usize,
    pub spacing_ghz: f64,
    pub select_f3db_ghz: f64,
    pub select_order: usize,
}

impl Default for WdmConfig {
    fn default() -> Self {
        Self { n_channels: 1, spacing_ghz: 200.0, select_f3db_ghz: 55.0, select_order: 5 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub n_symbols: usize,
    pub max_lr_filters: f64,
    pub max_lr_scalars: f64,
    pub clip_norm: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub warmup_frac: f64,
    pub div_factor: f64,
    pub final_div_factor: f64,
    pub rrc_rolloff: f64,
    pub rrc_span_symbols: usize,
    pub volterra_n1: usize,
    pub volterra_n2: usize,
    /// Symbols dropped at each block edge before the loss / SER.
    pub edge_symbols: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            batch_size: 1000,
            n_symbols: 100_000,
            max_lr_filters: 5e-3,
            max_lr_scalars: 1e-2,
            clip_norm: 1.0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            warmup_frac: 0.3,
            div_factor: 25.0,
            final_div_factor: 1e4,
            rrc_rolloff: 0.01,
            rrc_span_symbols: 24,
            volterra_n1: 101,
            volterra_n2: 45,
            edge_symbols: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub min_errors: u64,
    pub max_symbols: u64,
    pub min_symbols: u64,
    pub block_symbols: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self { min_errors: 100, max_symbols: 10_000_000, min_symbols: 20_000, block_symbols: 20_000 }
    }
}

impl LinkConfig {
    pub fn for_kind(kind: LinkKind) -> Self {
        let mut cfg = Self { kind, ..Self::default() };
        if kind == LinkKind::Awgn {
            cfg.system.sps = 4;
            cfg.wdm.select_f3db_ghz = 65.0;
        }
        if kind == LinkKind::ImddIdeal {
            cfg.dac.v_pp_v = 2.2;
        }
        cfg
    }

    pub fn from_toml_str(text: &str) -> Result<Self, LinkError> {
        let cfg: Self = toml::from_str(text).map_err(|e| LinkError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Parse a config file; resolves `absorption_file` relative to it.
    pub fn from_file(path: &Path) -> Result<Self, LinkError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LinkError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.resolve_files(path.parent())?;
        Ok(cfg)
    }

    pub fn resolve_files(&mut self, base: Option<&Path>) -> Result<(), LinkError> {
        if let Some(file) = self.modulator.absorption_file.take() {
            let p = match base {
                Some(b) if Path::new(&file).is_relative() => b.join(&file),
                _ => Path::new(&file).to_path_buf(),
            };
            let text = std::fs::read_to_string(&p)
                .map_err(|e| LinkError::Io(format!("{}: {e}", p.display())))?;
            self.modulator.absorption = AbsorptionTable::from_toml_str(&text)?;
        }
        Ok(())
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("link config serializes")
    }

    /// Short stable digest of the canonical serialized form.
    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<(), LinkError> {
        let bad = |m: String| Err(LinkError::Config(m));
        let s = &self.system;
        if s.sps == 0 {
            return bad("system.sps must be at least 1".into());
        }
        if !(s.symbol_rate_gbd > 0.0) {
            return bad("system.symbol_rate_gbd must be positive".into());
        }
        if ![2, 4, 8].contains(&s.constellation_order) {
            return bad(format!("constellation order {} not in {{2, 4, 8}}", s.constellation_order));
        }
        let nyq = self.sample_rate() / 2.0;
        if self.dac.f3db_ghz * 1e9 >= nyq || self.adc.f3db_ghz * 1e9 >= nyq {
            return bad(format!(
                "converter cutoff must lie below the simulation Nyquist rate {} GHz",
                nyq / 1e9
            ));
        }
        if !(self.dac.f3db_ghz > 0.0 && self.adc.f3db_ghz > 0.0) {
            return bad("converter cutoffs must be positive".into());
        }
        if self.kind.is_imdd() && !(self.dac.v_pp_v > 0.0) {
            return bad("dac.v_pp_v must be positive".into());
        }
        let w = &self.wdm;
        if w.n_channels == 0 || w.n_channels % 2 == 0 {
            return bad(format!("wdm.n_channels = {} must be odd", w.n_channels));
        }
        if w.n_channels > 1 {
            let reach = w.spacing_ghz * 1e9 * (w.n_channels / 2) as f64;
            if !(w.spacing_ghz > 0.0) || reach >= nyq {
                return bad(format!("outermost WDM channel at {} GHz exceeds Nyquist", reach / 1e9));
            }
            if !(w.select_f3db_ghz > 0.0) || w.select_order == 0 {
                return bad("wdm selection filter needs positive bandwidth and order".into());
            }
        }
        let t = &self.training;
        if t.batch_size == 0 || t.n_symbols < t.batch_size {
            return bad("training needs n_symbols ≥ batch_size > 0".into());
        }
        if 2 * t.edge_symbols >= t.batch_size {
            return bad("training.edge_symbols leaves no symbols in a batch".into());
        }
        if !(t.max_lr_filters > 0.0 && t.max_lr_scalars > 0.0 && t.clip_norm > 0.0) {
            return bad("learning rates and clip norm must be positive".into());
        }
        if !(0.0..1.0).contains(&t.warmup_frac) {
            return bad("training.warmup_frac must lie in [0, 1)".into());
        }
        if self.fiber.length_km < 0.0 || !(self.fiber.ssfm_step_km > 0.0) {
            return bad("fiber length must be ≥ 0 and step > 0".into());
        }
        if self.evaluation.block_symbols <= 2 * t.edge_symbols {
            return bad("evaluation.block_symbols too small for the edge trim".into());
        }
        self.modulator.absorption.validate()?;
        Ok(())
    }

    pub fn symbol_rate(&self) -> f64 {
        self.system.symbol_rate_gbd * 1e9
    }

    pub fn sample_rate(&self) -> f64 {
        self.symbol_rate() * self.system.sps as f64
    }

    pub fn laser_power_w(&self) -> f64 {
        let dbm = match self.kind {
            LinkKind::ImddEam => self.modulator.laser_power_eam_dbm,
            _ => self.modulator.laser_power_ideal_dbm,
        };
        dbm_to_w(dbm)
    }
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    1e-3 * 10f64.powf(dbm / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_carry_table_values() {
        let c = LinkConfig::default();
        assert_eq!(c.system.sps, 8);
        assert_eq!(c.sample_rate(), 800e9);
        assert_eq!(c.modulator.laser_power_ideal_dbm, -13.0);
        assert_eq!(c.modulator.laser_power_eam_dbm, -6.0);
        assert_eq!(c.fiber.dispersion_ps_nm_km, -15.43);
        assert_eq!(c.photodiode.dark_current_a, 1e-8);
        assert!(c.validate().is_ok());
        assert!((dbm_to_w(-6.0) - 2.5119e-4).abs() < 1e-7);
    }

    #[test]
    fn toml_round_trip_and_hash() {
        let c = LinkConfig::for_kind(LinkKind::Awgn);
        let text = c.to_toml_string();
        let back = LinkConfig::from_toml_str(&text).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.config_hash(), c.config_hash());
        assert_ne!(LinkConfig::default().config_hash(), c.config_hash());
    }

    #[test]
    fn partial_files_take_defaults() {
        let c = LinkConfig::from_toml_str("kind = \"awgn\"\n[system]\nsps = 4\n").unwrap();
        assert_eq!(c.system.sps, 4);
        assert_eq!(c.dac.f3db_ghz, 45.0);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(LinkConfig::from_toml_str("[system]\nsps = 0\n").is_err());
        assert!(LinkConfig::from_toml_str("[system]\nsps = 1\n[dac]\nf3db_ghz = 60.0\n").is_err());
        assert!(LinkConfig::from_toml_str("[wdm]\nn_channels = 2\n").is_err());
        assert!(LinkConfig::from_toml_str("[dac]\nunknown_key = 1\n").is_err());
    }
}
