use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ideology::{self, PartisanCutoffs};
use crate::isolation::{self, Variant};
use crate::stats::{self, AgeBand, Dimension};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub voters: PathBuf,
    pub accounts: PathBuf,
    pub edges: PathBuf,
    pub elites: PathBuf,
    pub precinct_priors: PathBuf,
    pub likelihood_table: PathBuf,
    pub state_results: Option<PathBuf>,
}

impl Default for Inputs {
    fn default() -> Self {
        Inputs {
            voters: "voters.csv".into(),
            accounts: "accounts.csv".into(),
            edges: "edges.csv".into(),
            elites: "elites.csv".into(),
            precinct_priors: "precinct_priors.csv".into(),
            likelihood_table: "likelihood_table.csv".into(),
            state_results: Some("state_results.csv".into()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OfflineEgos {
    /// Only voters linked to an account.
    #[default]
    Linked,
    All,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OfflineConfig {
    pub k: usize,
    pub variant: Variant,
    pub egos: OfflineEgos,
}

impl Default for OfflineConfig {
    fn default() -> Self {
        OfflineConfig {
            k: isolation::DEFAULT_K,
            variant: Variant::Probabilistic,
            egos: OfflineEgos::Linked,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImputationConfig {
    /// Extra prior mass on the Ind class for eligible non-voters.
    pub nonvoter_mass: f64,
    pub epsilon: f64,
    pub strip_punctuation: bool,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            nonvoter_mass: 0.0,
            epsilon: crate::partisan::PRIOR_EPSILON,
            strip_punctuation: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    #[default]
    Derive,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdeologyConfig {
    pub dims: usize,
    pub training_size: usize,
    pub min_training_elites: usize,
    pub min_training_pool: usize,
    pub min_projection_elites: usize,
    pub cutoff_mode: CutoffMode,
    pub fixed_cutoffs: PartisanCutoffs,
}

impl Default for IdeologyConfig {
    fn default() -> Self {
        IdeologyConfig {
            dims: ideology::DEFAULT_DIMS,
            training_size: ideology::DEFAULT_TRAINING_SIZE,
            min_training_elites: ideology::DEFAULT_MIN_TRAINING_ELITES,
            min_training_pool: ideology::DEFAULT_MIN_POOL,
            min_projection_elites: ideology::DEFAULT_MIN_PROJECTION_ELITES,
            cutoff_mode: CutoffMode::Derive,
            fixed_cutoffs: PartisanCutoffs::REFERENCE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EgoPartySource {
    /// Discretized voter-file partisanship.
    #[default]
    VoterFile,
    /// The ego's own ideology class.
    Ideology,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnlineConfig {
    pub min_scored: usize,
    pub ego_party: EgoPartySource,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        OnlineConfig {
            min_scored: isolation::DEFAULT_MIN_SCORED,
            ego_party: EgoPartySource::VoterFile,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub bootstrap_resamples: usize,
    pub level: f64,
    pub bins: usize,
    pub percentiles: Vec<f64>,
    pub dimensions: Vec<String>,
    pub age_bands: Vec<AgeBand>,
    pub swing_margin: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            bootstrap_resamples: stats::DEFAULT_RESAMPLES,
            level: stats::DEFAULT_LEVEL,
            bins: stats::DEFAULT_BINS,
            percentiles: stats::FIGURE_PERCENTILES.to_vec(),
            dimensions: Dimension::ALL.iter().map(|d| d.as_str().to_string()).collect(),
            age_bands: stats::default_age_bands(),
            swing_margin: stats::SWING_MARGIN,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Relative to the config file's directory.
    pub output_dir: PathBuf,
    pub inputs: Inputs,
    pub offline: OfflineConfig,
    pub imputation: ImputationConfig,
    pub ideology: IdeologyConfig,
    pub online: OnlineConfig,
    pub analysis: AnalysisConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            output_dir: "output".into(),
            inputs: Inputs::default(),
            offline: OfflineConfig::default(),
            imputation: ImputationConfig::default(),
            ideology: IdeologyConfig::default(),
            online: OnlineConfig::default(),
            analysis: AnalysisConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub min_scored: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

/// A parsed config plus the directory relative paths resolve against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: PipelineConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = PipelineConfig::from_toml(&text)?;
        config.apply(overrides);
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(LoadedConfig { config, base_dir })
    }

    pub fn from_config(config: PipelineConfig, base_dir: impl Into<PathBuf>) -> Self {
        LoadedConfig {
            config,
            base_dir: base_dir.into(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(&self.config.output_dir)
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(k) = o.k {
            self.offline.k = k;
        }
        if let Some(m) = o.min_scored {
            self.online.min_scored = m;
        }
        if let Some(d) = &o.output_dir {
            self.output_dir = d.clone();
        }
    }

    pub fn dimensions(&self) -> Result<Vec<Dimension>> {
        self.analysis.dimensions.iter().map(|d| Dimension::parse(d)).collect()
    }

    /// Range checks that need no input files.
    pub fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.offline.k == 0 {
            return bad("offline.k must be at least 1".into());
        }
        if self.online.min_scored == 0 {
            return bad("online.min_scored must be at least 1".into());
        }
        let ideo = &self.ideology;
        if ideo.dims == 0 || ideo.training_size == 0 || ideo.min_projection_elites == 0 {
            return bad("ideology dims, training_size and min_projection_elites must be at least 1".into());
        }
        if ideo.cutoff_mode == CutoffMode::Fixed {
            PartisanCutoffs::new(ideo.fixed_cutoffs.dem_max, ideo.fixed_cutoffs.rep_min)?;
        }
        let imp = &self.imputation;
        if !(imp.nonvoter_mass >= 0.0 && imp.nonvoter_mass.is_finite()) || !(imp.epsilon >= 0.0) {
            return bad("imputation.nonvoter_mass and epsilon must be non-negative".into());
        }
        let a = &self.analysis;
        if a.bootstrap_resamples == 0 || a.bins == 0 {
            return bad("analysis.bootstrap_resamples and bins must be at least 1".into());
        }
        if !(a.level > 0.0 && a.level < 1.0) {
            return bad(format!("analysis.level must lie in (0, 1), got {}", a.level));
        }
        if a.percentiles.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return bad("analysis.percentiles must lie in [0, 100]".into());
        }
        if !(a.swing_margin >= 0.0) {
            return bad("analysis.swing_margin must be non-negative".into());
        }
        let dims = self.dimensions()?;
        if dims.contains(&Dimension::StateType) && self.inputs.state_results.is_none() {
            return bad("state_type split needs inputs.state_results".into());
        }
        Ok(())
    }
}
