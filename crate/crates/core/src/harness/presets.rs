//! Experiment presets shipped with the crate.

use super::spec::ExperimentSpec;
use super::HarnessError;

/// `(name, TOML text)` of every preset.
pub const PRESETS: [(&str, &str); 6] = [
    ("fig6-desk", include_str!("../../presets/fig6-desk.toml")),
    ("fig7", include_str!("../../presets/fig7.toml")),
    ("fig8b-desk", include_str!("../../presets/fig8b-desk.toml")),
    ("fig9-desk", include_str!("../../presets/fig9-desk.toml")),
    ("fig10-desk", include_str!("../../presets/fig10-desk.toml")),
    ("robustness", include_str!("../../presets/robustness.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn preset(name: &str) -> Result<ExperimentSpec, HarnessError> {
    let (_, text) = PRESETS.iter().find(|(n, _)| *n == name).ok_or_else(|| {
        HarnessError::Spec(format!(
            "unknown preset {name:?}; available: {}",
            preset_names().collect::<Vec<_>>().join(", ")
        ))
    })?;
    ExperimentSpec::from_toml_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_parses_and_is_named_after_its_file() {
        for name in preset_names() {
            let spec = preset(name).unwrap();
            assert_eq!(spec.experiment.name, name);
        }
        assert!(preset("fig99").is_err());
    }
}
