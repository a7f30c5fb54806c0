//! Run configuration: one TOML file, `--set key=value` overrides, unknown
//! keys rejected. Every run writes the normalized form back out.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tartar::laminate::FrameLabel;
use tartar::DiagMatrix;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub out: PathBuf,
    pub seed: u64,
    pub build: BuildConfig,
    pub energy: EnergyConfig,
    pub sweep: SweepConfig,
    pub bootstrap: BootstrapConfig,
    pub verify: VerifyConfig,
    pub fit: FitConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            seed: 1,
            build: BuildConfig::default(),
            energy: EnergyConfig::default(),
            sweep: SweepConfig::default(),
            bootstrap: BootstrapConfig::default(),
            verify: VerifyConfig::default(),
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    pub n: usize,
    pub m: usize,
    pub r: f64,
    /// Diagonal entries of the boundary datum.
    pub f: [f64; 2],
    pub eps: f64,
    pub frames: FrameLabel,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            n: 256,
            m: 2,
            r: 0.25,
            f: [0.0, 0.0],
            eps: 0.01,
            frames: FrameLabel::Parent,
        }
    }
}

impl BuildConfig {
    pub fn datum(&self) -> DiagMatrix {
        DiagMatrix::new(self.f[0], self.f[1])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnergyConfig {
    /// Phase-field dump to evaluate; defaults to `<out>/phasefield.txt`.
    pub field: Option<PathBuf>,
    /// Datum; the field's own mean when absent.
    pub f: Option<[f64; 2]>,
    pub eps: f64,
}

impl Default for EnergyConfig {
    fn default() -> Self {
        Self {
            field: None,
            f: None,
            eps: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Dyadic grid `eps = 2^-k`, `k_min..=k_max`, unless `eps` is given.
    pub k_min: u32,
    pub k_max: u32,
    pub eps: Option<Vec<f64>>,
    /// Largest grid side used for validation; 0 disables it.
    pub n_cap: usize,
    /// Orders drawn as fixed-order envelopes in the plot.
    pub envelope_orders: Vec<usize>,
    /// Replace the surrogate by `exp(-c |ln eps|^(1/2))` with this `c`.
    pub synthetic_c: Option<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            k_min: 8,
            k_max: 60,
            eps: None,
            n_cap: 4096,
            envelope_orders: (1..=6).collect(),
            synthetic_c: None,
        }
    }
}

impl SweepConfig {
    pub fn eps_list(&self) -> Vec<f64> {
        match &self.eps {
            Some(list) => list.clone(),
            None => tartar::scaling::dyadic_eps_grid(self.k_min, self.k_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineLaminate {
    pub n: usize,
    pub m: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapConfig {
    pub field: Option<PathBuf>,
    pub laminate: Option<InlineLaminate>,
    pub alpha: f64,
    /// Defaults to `alpha^2`.
    pub gamma: Option<f64>,
    pub d: u32,
    pub eps: f64,
    pub nu: f64,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        Self {
            field: None,
            laminate: None,
            alpha: 0.1,
            gamma: None,
            d: 3,
            eps: 1e-3,
            nu: 0.5,
        }
    }
}

impl BootstrapConfig {
    pub fn params(&self) -> tartar::Result<tartar::cones::BootstrapParams> {
        let p = tartar::cones::BootstrapParams {
            alpha: self.alpha,
            gamma: self.gamma.unwrap_or(self.alpha * self.alpha),
            d: self.d,
            eps: self.eps,
            nu: self.nu,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub oracle_fields: usize,
    pub oracle_n: usize,
    pub parseval_fields: usize,
    pub parseval_n: usize,
    pub rigidity_samples: usize,
    pub laminate_n: usize,
    /// Recorded constant for the concentration ratio.
    pub concentration_bound: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            oracle_fields: 100,
            oracle_n: 16,
            parseval_fields: 100,
            parseval_n: 16,
            rigidity_samples: 10_000,
            laminate_n: 1024,
            concentration_bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitConfig {
    /// Sweep CSV; defaults to `<out>/sweep.csv`.
    pub input: Option<PathBuf>,
    pub column: String,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            input: None,
            column: "E_surrogate".into(),
        }
    }
}

impl RunConfig {
    /// Parses an optional file, applies `key.path=value` overrides in order,
    /// and deserializes with unknown keys rejected.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> CliResult<Self> {
        let mut table = match path {
            Some(p) => {
                let text = fs::read_to_string(p).map_err(CliError::io(p))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for item in overrides {
            apply_override(&mut table, item)?;
        }
        Self::from_table(table)
    }

    pub fn from_toml(text: &str) -> CliResult<Self> {
        let table = text
            .parse::<toml::Table>()
            .map_err(|e| CliError::Config(e.to_string()))?;
        Self::from_table(table)
    }

    fn from_table(table: toml::Table) -> CliResult<Self> {
        toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| CliError::Config(e.to_string()))
    }

    /// Canonical form: every field explicit, fixed key order.
    pub fn normalized(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn apply_override(table: &mut toml::Table, item: &str) -> CliResult<()> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{item}` is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("bad key `{key}`")));
    }
    let value = parse_value(raw.trim());
    let (last, parents) = parts.split_last().expect("non-empty key");
    let mut cursor = table;
    for part in parents {
        let entry = cursor
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cursor = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("`{part}` is not a table")))?;
    }
    cursor.insert(last.to_string(), value);
    Ok(())
}

/// TOML literal if it parses as one, else a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.normalized()).unwrap(), c);
    }

    #[test]
    fn overrides_and_unknown_keys() {
        let c = RunConfig::load(None, &["build.n=512".into(), "build.frames=layer".into(), "out=/tmp/x".into()]).unwrap();
        assert_eq!(c.build.n, 512);
        assert_eq!(c.build.frames, FrameLabel::Layer);
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
        assert!(RunConfig::load(None, &["build.q=1".into()]).is_err());
        assert!(RunConfig::from_toml("colour = 1").is_err());
        assert!(RunConfig::load(None, &["build".into()]).is_err());
    }

    #[test]
    fn normalized_is_stable() {
        let c = RunConfig::from_toml("[sweep]\nk_max = 20\n").unwrap();
        let again = RunConfig::from_toml(&c.normalized()).unwrap();
        assert_eq!(c.normalized(), again.normalized());
        assert_eq!(again.sweep.k_max, 20);
    }
}
