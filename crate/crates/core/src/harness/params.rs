//! Versioned parameter files holding learned filters and the link they
//! were trained on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::equalizer::VolterraKernel;
use crate::link::{LinkConfig, LinkParams};
use crate::train::Variant;

pub const PARAM_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VolterraRecord {
    pub n2: usize,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub format_version: u32,
    /// Hash of `link`, checked on load.
    pub config_hash: String,
    pub variant: Variant,
    pub n_taps: usize,
    pub delay_samples: usize,
    pub g_dac: f64,
    pub v_b: f64,
    pub h_p: Vec<f64>,
    pub h_r: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ffe: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub volterra: Option<VolterraRecord>,
    pub link: LinkConfig,
}

impl ParamFile {
    pub fn new(variant: Variant, params: &LinkParams, delay_samples: usize, link: &LinkConfig) -> Self {
        Self {
            format_version: PARAM_FORMAT_VERSION,
            config_hash: link.config_hash(),
            variant,
            n_taps: params.h_p.len(),
            delay_samples,
            g_dac: params.g_dac,
            v_b: params.v_b,
            h_p: params.h_p.clone(),
            h_r: params.h_r.clone(),
            ffe: params.ffe.clone(),
            volterra: params.volterra.as_ref().map(|k| VolterraRecord { n2: k.n2(), k1: k.k1.clone(), k2: k.k2.clone() }),
            link: link.clone(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let file: Self = toml::from_str(text).map_err(|e| HarnessError::Parse(e.to_string()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("parameter files always serialize")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
        }
        std::fs::write(path, self.to_toml_string()).map_err(|e| HarnessError::io(path, e))
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.format_version != PARAM_FORMAT_VERSION {
            return Err(HarnessError::Parse(format!(
                "parameter file version {} (supported: {PARAM_FORMAT_VERSION})",
                self.format_version
            )));
        }
        self.link.validate()?;
        let hash = self.link.config_hash();
        if hash != self.config_hash {
            return Err(HarnessError::Parse(format!("config hash {} does not match link ({hash})", self.config_hash)));
        }
        let odd = |v: &[f64]| !v.is_empty() && v.len() % 2 == 1;
        if self.h_p.len() != self.n_taps || self.h_r.len() != self.n_taps || !odd(&self.h_p) {
            return Err(HarnessError::Parse(format!("filters must have the declared odd length {}", self.n_taps)));
        }
        if self.ffe.as_ref().is_some_and(|f| !odd(f)) {
            return Err(HarnessError::Parse("equalizer length must be odd".into()));
        }
        let all = self.h_p.iter().chain(&self.h_r).chain(self.ffe.iter().flatten());
        if all.chain([&self.g_dac, &self.v_b]).any(|v| !v.is_finite()) {
            return Err(HarnessError::Parse("parameters must be finite".into()));
        }
        if let Some(v) = &self.volterra {
            if v.k1.is_empty() || v.k1.iter().chain(&v.k2).any(|x| !x.is_finite()) {
                return Err(HarnessError::Parse("Volterra kernels must be non-empty and finite".into()));
            }
            VolterraKernel::from_parts(v.k1.clone(), v.k2.clone(), v.n2)?;
        }
        Ok(())
    }

    pub fn params(&self) -> Result<LinkParams, HarnessError> {
        let volterra = match &self.volterra {
            Some(v) => Some(VolterraKernel::from_parts(v.k1.clone(), v.k2.clone(), v.n2)?),
            None => None,
        };
        Ok(LinkParams {
            h_p: self.h_p.clone(),
            h_r: self.h_r.clone(),
            ffe: self.ffe.clone(),
            volterra,
            g_dac: self.g_dac,
            v_b: self.v_b,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link::LinkKind;
    use crate::train::{initial_params, TrainPlan};

    #[test]
    fn round_trip_is_exact() {
        let cfg = LinkConfig::for_kind(LinkKind::ImddEam);
        for v in [Variant::PsRxF, Variant::RrcFfe, Variant::PsVolterra] {
            let plan = TrainPlan::new(v, 15, &cfg, 3);
            let mut p = initial_params(&plan, &cfg).unwrap();
            p.h_p[3] = 0.1 + 1e-17;
            let f = ParamFile::new(v, &p, 9, &cfg);
            let back = ParamFile::from_toml_str(&f.to_toml_string()).unwrap();
            assert_eq!(back, f);
            assert_eq!(back.params().unwrap(), p);
        }
    }

    #[test]
    fn tampering_is_detected() {
        let cfg = LinkConfig::for_kind(LinkKind::Awgn);
        let p = initial_params(&TrainPlan::new(Variant::Ps, 15, &cfg, 0), &cfg).unwrap();
        let text = ParamFile::new(Variant::Ps, &p, 0, &cfg).to_toml_string();
        assert!(ParamFile::from_toml_str(&text.replace("format_version = 1", "format_version = 2")).is_err());
        assert!(ParamFile::from_toml_str(&text.replace("snr_db = 12.0", "snr_db = 13.0")).is_err());
        assert!(ParamFile::from_toml_str(&text.replace("n_taps = 15", "n_taps = 17")).is_err());
    }
}
