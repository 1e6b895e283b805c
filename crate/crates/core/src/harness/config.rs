//! Experiment configuration, read from JSON with unknown keys rejected.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ExampleName, GroupoidModel};
use crate::poisson::Sign;
use crate::quantize::{build_cutoff, default_cutoff, Cutoff};

use super::catalog::catalog;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffConfig {
    pub r_in: f64,
    pub r_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub example: String,
    /// Catalog ids; see `gwq list-examples`.
    pub observables: Vec<String>,
    /// Pairs `(f, g)` to run; all unordered pairs of `observables` if absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pairs: Option<Vec<[String; 2]>>,
    /// Strictly decreasing positive `ħ` values.
    pub ladder: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sign: Option<Sign>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<CutoffConfig>,
    /// Grid points per unit `ħ` along the group or base direction.
    #[serde(default = "default_points_per_hbar")]
    pub points_per_hbar: f64,
    /// Fiber grid spacing (in `X`) used to sample observables.
    #[serde(default = "default_fiber_spacing")]
    pub fiber_spacing: f64,
    /// Half-width `L` of line windows, or the top frequency of the affine
    /// grid; ignored on circles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub seed: u64,
    /// Write measured wall times; off by default so records are reproducible.
    #[serde(default)]
    pub record_wall_time: bool,
    /// Also render SVG line plots next to the plot-data CSVs.
    #[serde(default)]
    pub svg: bool,
}

fn default_points_per_hbar() -> f64 {
    4.0
}

fn default_fiber_spacing() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn example_name(&self) -> Result<ExampleName> {
        self.example.parse()
    }

    /// The configured window, or the example's default.
    pub fn window_for(&self, name: ExampleName) -> f64 {
        self.window.unwrap_or(match name {
            ExampleName::GroupAffine => 12.0,
            _ => 8.0,
        })
    }

    pub fn sign_for(&self, name: ExampleName) -> Sign {
        self.sign.unwrap_or_else(|| Sign::default_for(name.family()))
    }

    pub fn cutoff_for(&self, model: &GroupoidModel) -> Result<Cutoff> {
        match self.kappa {
            Some(k) => build_cutoff(model, k.r_in, k.r_out),
            None => Ok(default_cutoff(model)),
        }
    }

    /// The `(f, g)` pairs in run order.
    pub fn resolved_pairs(&self) -> Vec<(String, String)> {
        if let Some(pairs) = &self.pairs {
            return pairs.iter().map(|[f, g]| (f.clone(), g.clone())).collect();
        }
        if self.observables.len() == 1 {
            return vec![(self.observables[0].clone(), self.observables[0].clone())];
        }
        let mut out = Vec::new();
        for (i, f) in self.observables.iter().enumerate() {
            for g in &self.observables[i + 1..] {
                out.push((f.clone(), g.clone()));
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.example_name()?;
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.observables.is_empty() {
            return bad("at least one observable is required".into());
        }
        let known: BTreeSet<&str> = catalog(name).iter().map(|e| e.id).collect();
        let listed: BTreeSet<&str> = self.observables.iter().map(String::as_str).collect();
        if listed.len() != self.observables.len() {
            return bad("observables must be distinct".into());
        }
        if let Some(id) = listed.iter().find(|id| !known.contains(**id)) {
            return bad(format!("no observable `{id}` for {name}"));
        }
        if let Some(pairs) = &self.pairs {
            if pairs.is_empty() {
                return bad("pairs must not be empty".into());
            }
            if let Some(id) = pairs.iter().flatten().find(|id| !listed.contains(id.as_str())) {
                return bad(format!("pair member `{id}` is not among the observables"));
            }
        }
        if self.ladder.is_empty() {
            return bad("the ħ ladder must not be empty".into());
        }
        if self.ladder.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return bad("ladder rungs must be positive and finite".into());
        }
        if self.ladder.windows(2).any(|w| w[1] >= w[0]) {
            return bad("the ħ ladder must be strictly decreasing".into());
        }
        if !(self.points_per_hbar.is_finite() && self.points_per_hbar > 0.0) {
            return bad("points_per_hbar must be positive".into());
        }
        if !(self.fiber_spacing.is_finite() && self.fiber_spacing > 0.0) {
            return bad("fiber_spacing must be positive".into());
        }
        if self.window.is_some_and(|w| !(w.is_finite() && w > 0.0)) {
            return bad("window must be positive".into());
        }
        if let Some(k) = self.kappa {
            if !(k.r_in > 0.0 && k.r_in < k.r_out) {
                return bad(format!("need 0 < r_in < r_out, got {} and {}", k.r_in, k.r_out));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"example": "pair-flat-line", "observables": ["gauss-a", "gauss-b"],
        "ladder": [0.4, 0.2, 0.1], "seed": 7}"#;

    #[test]
    fn defaults_and_pairs() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.points_per_hbar, 4.0);
        assert_eq!(c.sign_for(c.example_name().unwrap()), Sign::Minus);
        assert_eq!(c.resolved_pairs(), vec![("gauss-a".to_string(), "gauss-b".to_string())]);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = BASE.replace("\"seed\": 7", "\"seed\": 7, \"colour\": 1");
        assert!(matches!(ExperimentConfig::from_json(&text), Err(Error::Json(_))));
    }

    #[test]
    fn invalid_values_rejected() {
        for (from, to) in [
            ("[0.4, 0.2, 0.1]", "[0.4, 0.4, 0.1]"),
            ("[0.4, 0.2, 0.1]", "[0.4, 0.2, -0.1]"),
            ("[0.4, 0.2, 0.1]", "[]"),
            ("\"gauss-b\"]", "\"nope\"]"),
            ("pair-flat-line", "pair-flat-plane"),
        ] {
            let text = BASE.replace(from, to);
            assert!(ExperimentConfig::from_json(&text).is_err(), "{to}");
        }
    }
}
