//! TOML run configuration: file values, flag overrides, and the resolved
//! echo that can be fed back in.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every key a config file may set. Subcommands read the keys they use.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claims: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interarrival: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub premium: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xgrid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub barrier: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spitzer_terms: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub top: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xmax: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moments: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
            .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Parses TOML text; errors carry the line and column.
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Overlays `flags` on `self`; every key set in both with different
    /// values is reported in `conflicts` and the flag wins.
    pub fn overlay(&self, flags: &RunConfig, conflicts: &mut Vec<String>) -> RunConfig {
        let base = toml::Table::try_from(self).expect("config serializes");
        let top = toml::Table::try_from(flags).expect("config serializes");
        let mut merged = base.clone();
        for (k, v) in top {
            if let Some(old) = base.get(&k) {
                if old != &v {
                    conflicts.push(format!("flag --{} = {v} overrides config value {old}", k.replace('_', "-")));
                }
            }
            merged.insert(k, v);
        }
        merged.try_into().expect("merged config deserializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = RunConfig::parse("order = 2\nstep = \"twopoint:q=0.25\"\nbogus = 1\n").unwrap_err();
        assert!(err.contains("line 3"), "{err}");
        assert!(err.contains("bogus"), "{err}");
    }

    #[test]
    fn flags_override_file_and_conflicts_are_logged() {
        let file = RunConfig {
            order: Some(2),
            step: Some("twopoint:q=0.25,up=1,down=1".into()),
            ..Default::default()
        };
        let flags = RunConfig {
            order: Some(3),
            seed: Some(9),
            ..Default::default()
        };
        let mut log = Vec::new();
        let merged = file.overlay(&flags, &mut log);
        assert_eq!(merged.order, Some(3));
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.step, file.step);
        assert_eq!(log.len(), 1);
        assert!(log[0].contains("--order"));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = RunConfig {
            step: Some("paretoshift:alpha=3,scale=1,shift=3".into()),
            order: Some(2),
            xgrid: Some("10:100:10".into()),
            seed: Some(42),
            barrier: Some(75.0),
            eps: Some(1e-12),
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
