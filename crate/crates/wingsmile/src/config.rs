//! Run configuration: a TOML file with `[model]`, `[grid]`, `[mc]`,
//! `[bounds]` and `[output]` sections, patched by `section.key=value`
//! overrides before it is validated.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};
use wingsmile_core::{
    AtomOnly, BoundsConfig, CevDistribution, CevParams, McConfig, TabulatedModel,
};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    #[default]
    Cev,
    Atom,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub kind: ModelKind,
    /// Spot; defaults to one for atom models.
    pub s0: Option<f64>,
    #[serde(alias = "T", alias = "maturity")]
    pub t: f64,
    pub sigma: Option<f64>,
    #[serde(alias = "beta")]
    pub rho: Option<f64>,
    /// Atom mass for `kind = "atom"`.
    pub mass: Option<f64>,
    /// Optional `[[u, p~(u)], ...]` table for `kind = "atom"`, `u` in units
    /// of spot.
    pub p_tilde: Option<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub k_min: f64,
    pub k_max: f64,
    pub n_points: usize,
}

impl GridSection {
    /// Uniform log-moneyness grid from `k_min` to `k_max`.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let h = (self.k_max - self.k_min) / (n - 1) as f64;
        (0..n).map(|i| if i + 1 == n { self.k_max } else { self.k_min + h * i as f64 }).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_paths: u64,
    pub n_steps: u64,
    pub seed: u64,
    #[serde(default)]
    pub antithetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub epsilon: f64,
}

impl Default for BoundsSection {
    fn default() -> Self {
        BoundsSection { epsilon: BoundsConfig::default().epsilon() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "svg" => Ok(Format::Svg),
            other => Err(CliError::Config(format!("unknown format `{other}` (expected csv or svg)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: Option<GridSection>,
    pub mc: Option<McSection>,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub output: OutputSection,
}

/// A model ready for the smile routines.
pub enum Model {
    Cev(CevDistribution),
    Atom { spot: f64, t: f64, model: Box<dyn wingsmile_core::AtomModel + Send + Sync> },
}

fn parse_override(raw: &str) -> Result<(Vec<String>, Value), CliError> {
    let (key, value) = raw
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{raw}` must look like section.key=value")))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_owned).collect();
    if path.len() < 2 || path.iter().any(String::is_empty) {
        return Err(CliError::Config(format!("override key `{key}` must be dotted, e.g. model.sigma")));
    }
    // Parse the value as a TOML expression; bare words fall back to strings.
    let value = format!("v = {}", value.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.trim().to_owned()));
    Ok((path, value))
}

fn apply_override(table: &mut Table, path: &[String], value: Value) -> Result<(), CliError> {
    let (last, parents) = path.split_last().expect("at least two components");
    let mut cur = table;
    for p in parents {
        let entry = cur.entry(p.clone()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("override path `{}` crosses a non-table value", path.join("."))))?;
    }
    cur.insert(last.clone(), value);
    Ok(())
}

impl RunConfig {
    pub fn from_toml(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut table: Table = text.parse().map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        for raw in overrides {
            let (path, value) = parse_override(raw)?;
            apply_override(&mut table, &path, value)?;
        }
        let cfg: RunConfig =
            RunConfig::deserialize(table).map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text, overrides)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Some(g) = &self.grid {
            if !(g.k_min < g.k_max && g.k_max < 0.0) {
                return bad(format!("grid needs k_min < k_max < 0 (got {} .. {})", g.k_min, g.k_max));
            }
            if g.n_points < 2 {
                return bad(format!("grid.n_points must be at least 2 (got {})", g.n_points));
            }
        }
        if let Some(m) = &self.mc {
            if m.n_paths == 0 || m.n_steps == 0 {
                return bad("mc.n_paths and mc.n_steps must be positive".into());
            }
        }
        if !(self.bounds.epsilon > 0.0 && self.bounds.epsilon.is_finite()) {
            return bad(format!("bounds.epsilon must be positive (got {})", self.bounds.epsilon));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<&GridSection, CliError> {
        self.grid.as_ref().ok_or_else(|| CliError::Config("this command needs a [grid] section".into()))
    }

    pub fn bounds_config(&self) -> BoundsConfig {
        BoundsConfig::new(self.bounds.epsilon).expect("validated")
    }

    pub fn mc_config(&self) -> Result<Option<McConfig>, CliError> {
        self.mc
            .map(|m| McConfig::new(m.n_paths, m.n_steps, m.seed).map(|c| c.with_antithetic(m.antithetic)))
            .transpose()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// CEV parameters; `sigma = 0` is allowed here (simulation only).
    pub fn cev_params(&self) -> Result<CevParams, CliError> {
        let m = &self.model;
        if m.kind != ModelKind::Cev {
            return Err(CliError::Config("this command needs model.kind = \"cev\"".into()));
        }
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| CliError::Config(format!("model.{name} is required for a CEV model")))
        };
        CevParams::new(need(m.s0, "s0")?, need(m.sigma, "sigma")?, need(m.rho, "rho")?, m.t)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let m = &self.model;
        match m.kind {
            ModelKind::Cev => {
                let d = CevDistribution::new(self.cev_params()?).map_err(|e| CliError::Config(e.to_string()))?;
                Ok(Model::Cev(d))
            }
            ModelKind::Atom => {
                let mass = m.mass.ok_or_else(|| CliError::Config("model.mass is required for an atom model".into()))?;
                let spot = m.s0.unwrap_or(1.0);
                if !(spot > 0.0 && m.t > 0.0) {
                    return Err(CliError::Config("model.s0 and model.t must be positive".into()));
                }
                let cfg = |e: wingsmile_core::Error| CliError::Config(e.to_string());
                let model: Box<dyn wingsmile_core::AtomModel + Send + Sync> = match &m.p_tilde {
                    Some(rows) => {
                        let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                        Box::new(TabulatedModel::new(mass, &pairs).map_err(cfg)?)
                    }
                    None => Box::new(AtomOnly::new(mass).map_err(cfg)?),
                };
                Ok(Model::Atom { spot, t: m.t, model })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[model]
s0 = 0.05
sigma = 0.2
beta = 0.6
t = 1.2

[grid]
k_min = -10.0
k_max = -2.0
n_points = 9
"#;

    #[test]
    fn beta_is_rho() {
        let c = RunConfig::from_toml(BASE, &[]).unwrap();
        assert_eq!(c.model.rho, Some(0.6));
        assert_eq!(c.grid().unwrap().points(), vec![-10.0, -9.0, -8.0, -7.0, -6.0, -5.0, -4.0, -3.0, -2.0]);
    }

    #[test]
    fn overrides_patch_values_and_create_sections() {
        let c = RunConfig::from_toml(
            BASE,
            &["model.sigma=0.3".into(), "mc.n_paths=10".into(), "mc.n_steps=5".into(), "mc.seed=1".into(), "output.format=svg".into()],
        )
        .unwrap();
        assert_eq!(c.model.sigma, Some(0.3));
        assert_eq!(c.mc.unwrap().n_paths, 10);
        assert_eq!(c.output.format, Format::Svg);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for o in ["grid.k_max=0.5", "grid.n_points=1", "model.sigma", "nodot=1", "bounds.epsilon=0", "model.colour=1"] {
            assert!(matches!(RunConfig::from_toml(BASE, &[o.into()]), Err(CliError::Config(_))), "{o}");
        }
        assert!(RunConfig::from_toml("[model", &[]).is_err());
    }
}
