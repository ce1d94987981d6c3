//! TOML run configuration. Every section is optional; missing keys take the
//! reference defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use windcast::nn::TcnConfig;
use windcast::synthetic::SyntheticConfig;
use windcast::{ColumnSelector, DenoiseMode, ModelKind, NetSpec, PipelineConfig, PssaConfig, TrainConfig};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub data: DataSection,
    pub synthetic: SyntheticSection,
    pub pssa: PssaSection,
    pub model: ModelSection,
    pub train: TrainSection,
    pub split: SplitSection,
    pub window: WindowSection,
    pub experiment: ExperimentSection,
    pub predict: PredictSection,
    /// Written into manifests; ignored when read back.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run: Option<RunSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataSection {
    /// CSV file; the synthetic generator is used when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Column index or header name.
    pub column: String,
    /// Site label in reports; defaults to the file stem.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub site: Option<String>,
}

impl Default for DataSection {
    fn default() -> Self {
        Self {
            path: None,
            column: "0".into(),
            site: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSection {
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub ar1: f64,
    pub ar2: f64,
    pub ar_noise: f64,
    pub amp1: f64,
    pub period1: f64,
    pub amp2: f64,
    pub period2: f64,
    pub noise_std: f64,
}

impl Default for SyntheticSection {
    fn default() -> Self {
        let d = SyntheticConfig::default();
        Self {
            n: d.n,
            seed: d.seed,
            mean: d.mean,
            ar1: d.ar1,
            ar2: d.ar2,
            ar_noise: d.ar_noise,
            amp1: d.amp1,
            period1: d.period1,
            amp2: d.amp2,
            period2: d.period2,
            noise_std: d.noise_std,
        }
    }
}

impl SyntheticSection {
    pub fn to_core(&self) -> SyntheticConfig {
        SyntheticConfig {
            n: self.n,
            seed: self.seed,
            mean: self.mean,
            ar1: self.ar1,
            ar2: self.ar2,
            ar_noise: self.ar_noise,
            amp1: self.amp1,
            period1: self.period1,
            amp2: self.amp2,
            period2: self.period2,
            noise_std: self.noise_std,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PssaSection {
    pub enabled: bool,
    pub embed_dim: usize,
    pub threshold: f64,
    /// `paper` denoises the whole series; `causal` only ever looks backwards.
    pub mode: String,
}

impl Default for PssaSection {
    fn default() -> Self {
        let d = PssaConfig::<f64>::default();
        Self {
            enabled: true,
            embed_dim: d.embed_dim,
            threshold: d.pearson_threshold,
            mode: "paper".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub kind: String,
    pub channels: usize,
    pub kernel_size: usize,
    pub dilations: Vec<usize>,
    pub blocks: usize,
    pub tcn_hidden: usize,
    pub gru_hidden: usize,
    pub rnn_hidden: usize,
    pub mlp_widths: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        let d = NetSpec::default();
        Self {
            kind: d.kind.key().into(),
            channels: d.tcn.channels,
            kernel_size: d.tcn.kernel_size,
            dilations: d.tcn.dilations.clone(),
            blocks: d.tcn.blocks,
            tcn_hidden: d.tcn.hidden,
            gru_hidden: d.gru_hidden,
            rnn_hidden: d.rnn_hidden,
            mlp_widths: d.mlp_widths,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
    /// z-score the model input with training-segment statistics.
    pub normalize: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            epochs: d.epochs,
            batch_size: d.batch_size,
            learning_rate: d.learning_rate,
            beta1: d.beta1,
            beta2: d.beta2,
            epsilon: d.epsilon,
            seed: d.seed,
            normalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub n_test: usize,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { n_test: 200 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub dim: usize,
    pub delay: usize,
    pub horizons: Vec<usize>,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            dim: 20,
            delay: 1,
            horizons: vec![1, 2, 3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub models: Vec<String>,
    /// Extra CSV files, one site each, read with `data.column`. Empty means
    /// the single `[data]` source.
    pub sites: Vec<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            models: ["tcn_gru", "gru", "rnn", "mlp"].map(String::from).to_vec(),
            sites: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    /// Parameter file read by `predict`; defaults to `model.bin` in the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    /// Directory holding `predictions_h*.csv` for `evaluate`; defaults to the output directory.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub predictions: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub mode: String,
}

/// Everything a command needs, checked up front.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub column: ColumnSelector,
    pub synthetic: SyntheticConfig,
    pub pipeline: PipelineConfig<f64>,
    pub spec: NetSpec,
    pub train: TrainConfig,
    pub models: Vec<NetSpec>,
}

fn usage(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{field}: {e}"))
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }

    pub fn mode(&self) -> Result<DenoiseMode, CliError> {
        self.pssa.mode.parse().map_err(|e| usage("pssa.mode", e))
    }

    fn spec_for(&self, kind: &str, field: &str) -> Result<NetSpec, CliError> {
        let kind: ModelKind = kind.parse().map_err(|e| usage(field, e))?;
        let m = &self.model;
        let spec = NetSpec {
            kind,
            window_dim: self.window.dim,
            tcn: TcnConfig {
                channels_in: 1,
                kernel_size: m.kernel_size,
                channels: m.channels,
                dilations: m.dilations.clone(),
                blocks: m.blocks,
                hidden: m.tcn_hidden,
            },
            gru_hidden: m.gru_hidden,
            rnn_hidden: m.rnn_hidden,
            mlp_widths: m.mlp_widths.clone(),
        };
        spec.validate().map_err(|e| usage("model", e))?;
        Ok(spec)
    }

    /// Validates every section and converts to library types.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let synthetic = self.synthetic.to_core();
        synthetic.validate().map_err(|e| usage("synthetic", e))?;
        let mode = self.mode()?;
        let pssa = if self.pssa.enabled {
            let p = PssaConfig {
                embed_dim: self.pssa.embed_dim,
                pearson_threshold: self.pssa.threshold,
            };
            p.validate().map_err(|e| usage("pssa", e))?;
            Some(p)
        } else {
            None
        };
        let pipeline = PipelineConfig {
            pssa,
            mode,
            window_dim: self.window.dim,
            delay: self.window.delay,
            horizons: self.window.horizons.clone(),
            n_test: self.split.n_test,
            normalize: self.train.normalize,
        };
        pipeline.validate().map_err(|e| usage("window/split", e))?;
        let t = &self.train;
        let train = TrainConfig {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            seed: t.seed,
        };
        train.validate().map_err(|e| usage("train", e))?;
        let spec = self.spec_for(&self.model.kind, "model.kind")?;
        if self.experiment.models.is_empty() {
            return Err(usage("experiment.models", "at least one model is required"));
        }
        let models = self
            .experiment
            .models
            .iter()
            .map(|k| self.spec_for(k, "experiment.models"))
            .collect::<Result<_, _>>()?;
        Ok(Resolved {
            column: self.data.column.parse().expect("infallible"),
            synthetic,
            pipeline,
            spec,
            train,
            models,
        })
    }

    /// The config echoed with run metadata, as TOML.
    pub fn manifest(&self, command: &str) -> Result<String, CliError> {
        let mut m = self.clone();
        m.run = Some(RunSection {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.train.seed,
            mode: self.pssa.mode.clone(),
        });
        toml::to_string(&m).map_err(|e| CliError::Usage(format!("cannot serialise manifest: {e}")))
    }
}
