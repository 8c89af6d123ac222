//! Shipped configs. They are ordinary config files compiled into the binary.

use crate::config::{ConfigError, RunConfig};

pub const PRESETS: &[(&str, &str)] = &[
    ("fig2", include_str!("../presets/fig2.toml")),
    ("fig4", include_str!("../presets/fig4.toml")),
    ("bell-fixture", include_str!("../presets/bell-fixture.toml")),
];

pub fn preset_text(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

pub fn preset(name: &str) -> Result<RunConfig, ConfigError> {
    let text = preset_text(name).ok_or_else(|| ConfigError::UnknownPreset(name.into()))?;
    RunConfig::from_toml(text)
}
