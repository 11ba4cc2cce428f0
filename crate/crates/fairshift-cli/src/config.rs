//! TOML experiment configuration: file schema, validation, and conversion
//! into the core experiment config. All paths in a config file resolve
//! relative to the file's own directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use fairshift_core::experiment::{
    ExperimentConfig, Mode, Perturbation, SubsetRule, SyntheticSettings, Weighting,
};
use fairshift_core::fair_erm::TrainConfig;
use fairshift_core::scm::{ScmCoefficients, LAMBDA1, LAMBDA4};

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    /// "synthetic" or "tabular".
    pub mode: String,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// "none" (default) or "density-ratio".
    #[serde(default)]
    pub weighting: Option<String>,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub subset: SubsetSection,
    /// Synthetic mode (and `gen`).
    pub scm: Option<ScmSection>,
    /// Tabular mode: CSV, schema sidecar, causal graph.
    pub data: Option<String>,
    pub schema: Option<String>,
    pub graph: Option<String>,
    #[serde(default, rename = "perturbation")]
    pub perturbations: Vec<PerturbationSection>,
}

fn one() -> usize {
    1
}

/// Overrides applied on top of the training defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub regularization: Option<f64>,
    pub iterations: Option<usize>,
    pub eta0: Option<f64>,
    pub tau: Option<f64>,
    pub standardize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetSection {
    /// "auto" (default) or "fixed".
    pub rule: Option<String>,
    /// Feature blocks for rule = "fixed".
    pub features: Option<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScmSection {
    pub gamma: f64,
    pub n: usize,
    /// Context value for `gen` output tables.
    #[serde(default)]
    pub c1: f64,
    /// Pin the structural coefficients instead of sampling per replicate.
    pub coefficients: Option<CoefficientsSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSection {
    #[serde(default = "lambda1_default")]
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    #[serde(default = "lambda4_default")]
    pub lambda4: f64,
    pub lambda5: f64,
    pub lambda6: f64,
}

fn lambda1_default() -> f64 {
    LAMBDA1
}

fn lambda4_default() -> f64 {
    LAMBDA4
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationSection {
    /// "missingness" or "downsample".
    pub kind: String,
    pub column: String,
    pub fraction: Option<f64>,
    pub level: Option<f64>,
    pub probability: Option<f64>,
}

fn config_err(message: impl Into<String>) -> CliError {
    CliError { kind: "config", message: message.into() }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<(FileConfig, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError {
            kind: "io",
            message: format!("{}: {e}", path.display()),
        })?;
        let cfg: FileConfig =
            toml::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok((cfg, base))
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        match self.mode.as_str() {
            "synthetic" => Ok(Mode::Synthetic),
            "tabular" => Ok(Mode::Tabular),
            other => Err(config_err(format!(
                "mode must be \"synthetic\" or \"tabular\", got \"{other}\""
            ))),
        }
    }

    pub fn scm_section(&self) -> Result<&ScmSection, CliError> {
        self.scm.as_ref().ok_or_else(|| config_err("missing [scm] section"))
    }

    /// Tabular-mode file path, resolved against the config directory.
    pub fn resolve_path(
        &self,
        base: &Path,
        field: &str,
        value: &Option<String>,
    ) -> Result<PathBuf, CliError> {
        let v = value
            .as_ref()
            .ok_or_else(|| config_err(format!("missing \"{field}\" path")))?;
        Ok(base.join(v))
    }

    fn train_config(&self) -> TrainConfig {
        let d = TrainConfig::default();
        TrainConfig {
            regularization: self.train.regularization.unwrap_or(d.regularization),
            iterations: self.train.iterations.unwrap_or(d.iterations),
            eta0: self.train.eta0.unwrap_or(d.eta0),
            tau: self.train.tau.unwrap_or(d.tau),
            standardize: self.train.standardize.unwrap_or(d.standardize),
            constraint: d.constraint,
        }
    }

    fn subset_rule(&self) -> Result<SubsetRule, CliError> {
        let rule = self.subset.rule.as_deref();
        match (rule, &self.subset.features) {
            (Some("fixed") | None, Some(f)) if !f.is_empty() => Ok(SubsetRule::Fixed(f.clone())),
            (Some("fixed") | None, Some(_)) => {
                Err(config_err("subset rule \"fixed\" needs a non-empty features list"))
            }
            (Some("fixed"), None) => {
                Err(config_err("subset rule \"fixed\" needs a non-empty features list"))
            }
            (Some("auto") | None, None) => Ok(SubsetRule::Auto),
            (Some("auto"), Some(_)) => {
                Err(config_err("subset rule \"auto\" does not take a features list"))
            }
            (Some(other), _) => {
                Err(config_err(format!("subset rule must be \"auto\" or \"fixed\", got \"{other}\"")))
            }
        }
    }

    fn weighting(&self) -> Result<Weighting, CliError> {
        match self.weighting.as_deref() {
            None | Some("none") => Ok(Weighting::None),
            Some("density-ratio") => Ok(Weighting::DensityRatio),
            Some(other) => Err(config_err(format!(
                "weighting must be \"none\" or \"density-ratio\", got \"{other}\""
            ))),
        }
    }

    pub fn coefficients(&self) -> Result<Option<ScmCoefficients>, CliError> {
        Ok(self.scm.as_ref().and_then(|s| s.coefficients.as_ref()).map(|c| ScmCoefficients {
            lambda1: c.lambda1,
            lambda2: c.lambda2,
            lambda3: c.lambda3,
            lambda4: c.lambda4,
            lambda5: c.lambda5,
            lambda6: c.lambda6,
        }))
    }

    fn perturbation_list(&self) -> Result<Vec<Perturbation>, CliError> {
        let mut out = Vec::with_capacity(self.perturbations.len());
        for p in &self.perturbations {
            match p.kind.as_str() {
                "missingness" => {
                    if p.level.is_some() || p.probability.is_some() {
                        return Err(config_err(format!(
                            "missingness perturbation on \"{}\" takes only a fraction",
                            p.column
                        )));
                    }
                    let fraction = p.fraction.ok_or_else(|| {
                        config_err(format!(
                            "missingness perturbation on \"{}\" needs a fraction",
                            p.column
                        ))
                    })?;
                    if !(0.0..=1.0).contains(&fraction) {
                        return Err(config_err("missingness fraction must be in [0, 1]"));
                    }
                    out.push(Perturbation::Missingness { column: p.column.clone(), fraction });
                }
                "downsample" => {
                    if p.fraction.is_some() {
                        return Err(config_err(format!(
                            "downsample perturbation on \"{}\" takes level and probability",
                            p.column
                        )));
                    }
                    let level = p.level.ok_or_else(|| {
                        config_err(format!(
                            "downsample perturbation on \"{}\" needs a level",
                            p.column
                        ))
                    })?;
                    let probability = p.probability.ok_or_else(|| {
                        config_err(format!(
                            "downsample perturbation on \"{}\" needs a probability",
                            p.column
                        ))
                    })?;
                    if !(0.0..=1.0).contains(&probability) {
                        return Err(config_err("downsample probability must be in [0, 1]"));
                    }
                    out.push(Perturbation::Downsample {
                        column: p.column.clone(),
                        level,
                        probability,
                    });
                }
                other => {
                    return Err(config_err(format!(
                        "perturbation kind must be \"missingness\" or \"downsample\", got \"{other}\""
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Assemble the core config, applying any command-line overrides.
    pub fn experiment_config(
        &self,
        replicates_override: Option<usize>,
        seed_override: Option<u64>,
    ) -> Result<ExperimentConfig, CliError> {
        let mode = self.mode()?;
        let synthetic = if mode == Mode::Synthetic {
            let s = self.scm_section()?;
            Some(SyntheticSettings { gamma: s.gamma, n: s.n, coefficients: self.coefficients()? })
        } else {
            None
        };
        if mode == Mode::Tabular && self.scm.is_some() {
            return Err(config_err("[scm] section is only valid in synthetic mode"));
        }
        if mode == Mode::Synthetic {
            for (field, value) in
                [("data", &self.data), ("schema", &self.schema), ("graph", &self.graph)]
            {
                if value.is_some() {
                    return Err(config_err(format!(
                        "\"{field}\" is only valid in tabular mode"
                    )));
                }
            }
            if !self.perturbations.is_empty() {
                return Err(config_err("perturbations are only valid in tabular mode"));
            }
        }
        Ok(ExperimentConfig {
            mode,
            replicates: replicates_override.unwrap_or(self.replicates),
            master_seed: seed_override.unwrap_or(self.master_seed),
            train: self.train_config(),
            subset: self.subset_rule()?,
            weighting: self.weighting()?,
            synthetic,
            perturbations: self.perturbation_list()?,
        })
    }
}
