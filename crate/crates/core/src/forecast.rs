//! The end-to-end forecaster: denoise, split, scale, window, train one
//! network per horizon, predict the test segment and score it against the
//! raw observations.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::nn::{read_tensors, write_tensors, ForecastNet, Layer, NetSpec};
use crate::pssa::{pssa_denoise, pssa_denoise_causal, PssaConfig};
use crate::scalar::Scalar;
use crate::series::{make_windows_from, min_window_len, Scaler, TimeSeries};
use crate::tensor::Tensor;
use crate::train::{fit, TrainConfig, TrainTrace};

pub use crate::nn::ModelKind;

/// MAE, MAPE (percent) and RMSE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub mae: f64,
    pub mape: f64,
    pub rmse: f64,
}

pub fn evaluate<T: Scalar>(pred: &[T], actual: &[T]) -> Result<Metrics> {
    if pred.len() != actual.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: actual.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::SeriesTooShort { required: 1, actual: 0 });
    }
    if let Some(index) = actual.iter().position(|a| a.is_zero()) {
        return Err(Error::ZeroActual { index });
    }
    let n = pred.len() as f64;
    let (mut abs, mut pct, mut sq) = (0.0, 0.0, 0.0);
    for (&p, &a) in pred.iter().zip(actual) {
        let (p, a) = (p.to_f64_lossy(), a.to_f64_lossy());
        let e = p - a;
        abs += e.abs();
        pct += (e / a).abs();
        sq += e * e;
    }
    Ok(Metrics {
        mae: abs / n,
        mape: 100.0 * pct / n,
        rmse: (sq / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DenoiseMode {
    /// Denoise the whole series before splitting.
    Paper,
    /// Denoise the training part alone and extend it point by point.
    Causal,
}

impl DenoiseMode {
    pub fn key(self) -> &'static str {
        match self {
            DenoiseMode::Paper => "paper",
            DenoiseMode::Causal => "causal",
        }
    }
}

impl fmt::Display for DenoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for DenoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "paper" | "paper-faithful" => Ok(DenoiseMode::Paper),
            "causal" => Ok(DenoiseMode::Causal),
            other => Err(Error::Config(format!(
                "unknown mode {other:?} (expected paper or causal)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig<T> {
    /// `None` feeds the raw series to the networks.
    pub pssa: Option<PssaConfig<T>>,
    pub mode: DenoiseMode,
    pub window_dim: usize,
    pub delay: usize,
    pub horizons: Vec<usize>,
    pub n_test: usize,
    pub normalize: bool,
}

impl<T: Scalar> Default for PipelineConfig<T> {
    fn default() -> Self {
        Self {
            pssa: Some(PssaConfig::default()),
            mode: DenoiseMode::Paper,
            window_dim: 20,
            delay: 1,
            horizons: vec![1, 2, 3],
            n_test: 200,
            normalize: true,
        }
    }
}

impl<T: Scalar> PipelineConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if let Some(p) = &self.pssa {
            p.validate()?;
        }
        if self.window_dim == 0 || self.delay == 0 {
            return Err(Error::Config("window.dim and window.delay must be positive".into()));
        }
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::Config(
                "horizons must be a non-empty list of positive integers".into(),
            ));
        }
        let mut sorted = self.horizons.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.horizons.len() {
            return Err(Error::Config("horizons must not repeat".into()));
        }
        if self.n_test == 0 {
            return Err(Error::Config("split.n_test must be positive".into()));
        }
        Ok(())
    }

    pub fn max_horizon(&self) -> usize {
        self.horizons.iter().copied().max().unwrap_or(1)
    }

    /// Label of the input treatment: `paper`, `causal` or `raw`.
    pub fn input_label(&self) -> &'static str {
        match (&self.pssa, self.mode) {
            (None, _) => "raw",
            (Some(_), m) => m.key(),
        }
    }

    /// Report name of a model under this configuration, e.g. `P-SSA-TCN-GRU`.
    pub fn model_label(&self, kind: ModelKind) -> String {
        match self.pssa {
            Some(_) => format!("P-SSA-{}", kind.label()),
            None => kind.label().to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseSummary {
    pub m_used: usize,
    pub achieved_r: f64,
    pub rank: usize,
}

/// A series ready for modelling.
#[derive(Debug, Clone)]
pub struct Prepared<T> {
    pub raw: TimeSeries<T>,
    /// What the networks see: denoised, or the raw series.
    pub input: TimeSeries<T>,
    pub n_train: usize,
    pub denoise: Option<DenoiseSummary>,
}

pub fn prepare<T: Scalar>(ts: &TimeSeries<T>, cfg: &PipelineConfig<T>) -> Result<Prepared<T>> {
    cfg.validate()?;
    if cfg.n_test >= ts.len() {
        return Err(Error::SplitTooLarge {
            n_test: cfg.n_test,
            len: ts.len(),
        });
    }
    let n_train = ts.len() - cfg.n_test;
    let required = min_window_len(cfg.window_dim, cfg.delay, cfg.max_horizon());
    if n_train < required {
        return Err(Error::SeriesTooShort {
            required: required + cfg.n_test,
            actual: ts.len(),
        });
    }
    let (input, denoise) = match (&cfg.pssa, cfg.mode) {
        (None, _) => (ts.clone(), None),
        (Some(p), mode) => {
            let res = match mode {
                DenoiseMode::Paper => pssa_denoise(ts, p)?,
                DenoiseMode::Causal => pssa_denoise_causal(ts, n_train, p)?,
            };
            let summary = DenoiseSummary {
                m_used: res.m_used,
                achieved_r: res.achieved_r.to_f64_lossy(),
                rank: res.rank,
            };
            (res.denoised, Some(summary))
        }
    };
    Ok(Prepared {
        raw: ts.clone(),
        input,
        n_train,
        denoise,
    })
}

/// Test-segment forecasts for one horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPrediction<T> {
    pub horizon: usize,
    /// Position of each target inside the test segment (0-based).
    pub test_index: Vec<usize>,
    pub actual: Vec<T>,
    pub predicted: Vec<T>,
}

impl<T: Scalar> HorizonPrediction<T> {
    pub fn metrics(&self) -> Result<Metrics> {
        evaluate(&self.predicted, &self.actual)
    }

    /// `index,actual,predicted`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,actual,predicted")?;
        for ((i, a), p) in self.test_index.iter().zip(&self.actual).zip(&self.predicted) {
            writeln!(w, "{i},{a},{p}")?;
        }
        w.flush()
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }
}

/// One network per horizon (direct multi-step strategy) sharing a scaler.
pub struct HorizonForecaster<T> {
    pub spec: NetSpec,
    pub pipeline: PipelineConfig<T>,
    pub train: TrainConfig,
    models: Vec<(usize, ForecastNet<T>)>,
    scaler: Option<Scaler<T>>,
}

/// Seed of the sub-model for `horizon`.
pub fn horizon_seed(seed: u64, horizon: usize) -> u64 {
    seed.wrapping_add(horizon as u64)
}

pub fn build_pipeline<T: Scalar>(
    spec: &NetSpec,
    pipeline: &PipelineConfig<T>,
    train: &TrainConfig,
) -> Result<HorizonForecaster<T>> {
    HorizonForecaster::new(spec.clone(), pipeline.clone(), train.clone())
}

impl<T: Scalar> HorizonForecaster<T> {
    pub fn new(mut spec: NetSpec, pipeline: PipelineConfig<T>, train: TrainConfig) -> Result<Self> {
        pipeline.validate()?;
        train.validate()?;
        spec.window_dim = pipeline.window_dim;
        spec.validate()?;
        let models = pipeline
            .horizons
            .iter()
            .map(|&h| Ok((h, Self::init_model(&spec, &train, h)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            spec,
            pipeline,
            train,
            models,
            scaler: None,
        })
    }

    fn init_model(spec: &NetSpec, train: &TrainConfig, horizon: usize) -> Result<ForecastNet<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(horizon_seed(train.seed, horizon));
        ForecastNet::new(spec, &mut rng)
    }

    pub fn horizons(&self) -> Vec<usize> {
        self.models.iter().map(|(h, _)| *h).collect()
    }

    pub fn model(&self, horizon: usize) -> Option<&ForecastNet<T>> {
        self.models.iter().find(|(h, _)| *h == horizon).map(|(_, m)| m)
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn scaler(&self) -> Option<Scaler<T>> {
        self.scaler
    }

    fn fit_scaler(&mut self, data: &Prepared<T>) -> Result<Scaler<T>> {
        let s = if self.pipeline.normalize {
            Scaler::fit_values(&data.input.values()[..data.n_train])?
        } else {
            Scaler::identity()
        };
        self.scaler = Some(s);
        Ok(s)
    }

    fn scaled_input(&self, data: &Prepared<T>, scaler: &Scaler<T>) -> Vec<T> {
        data.input.values().iter().map(|&x| scaler.apply(x)).collect()
    }

    /// Trains every sub-model from its seeded initial state.
    pub fn fit(&mut self, data: &Prepared<T>) -> Result<Vec<(usize, TrainTrace)>> {
        let scaler = self.fit_scaler(data)?;
        let scaled = self.scaled_input(data, &scaler);
        let p = &self.pipeline;
        let dataset = make_windows_from(&scaled[..data.n_train], p.window_dim, p.delay, &p.horizons)?;
        let (spec, train) = (&self.spec, &self.train);
        self.models
            .par_iter_mut()
            .map(|(h, model)| {
                *model = Self::init_model(spec, train, *h)?;
                let ds = dataset.for_horizon(*h).expect("horizon present in dataset");
                let cfg = TrainConfig {
                    seed: horizon_seed(train.seed, *h),
                    ..train.clone()
                };
                Ok((*h, fit(model, &ds, &cfg)?))
            })
            .collect()
    }

    /// Re-initialises and retrains only the sub-model for `horizon`,
    /// reusing the scaler from the last full fit.
    pub fn refit_horizon(&mut self, data: &Prepared<T>, horizon: usize) -> Result<TrainTrace> {
        let scaler = match self.scaler {
            Some(s) => s,
            None => self.fit_scaler(data)?,
        };
        let scaled = self.scaled_input(data, &scaler);
        let p = &self.pipeline;
        let dataset = make_windows_from(&scaled[..data.n_train], p.window_dim, p.delay, &p.horizons)?;
        let ds = dataset
            .for_horizon(horizon)
            .ok_or_else(|| Error::Config(format!("horizon {horizon} is not configured")))?;
        let model = Self::init_model(&self.spec, &self.train, horizon)?;
        let slot = self
            .models
            .iter_mut()
            .find(|(h, _)| *h == horizon)
            .expect("configured horizon has a model");
        slot.1 = model;
        let cfg = TrainConfig {
            seed: horizon_seed(self.train.seed, horizon),
            ..self.train.clone()
        };
        fit(&mut slot.1, &ds, &cfg)
    }

    /// Forecasts every test target reachable from an origin at or after the
    /// last training point: `n_test - h + 1` targets for horizon `h`.
    pub fn predict(&mut self, data: &Prepared<T>) -> Result<Vec<HorizonPrediction<T>>> {
        let scaler = self
            .scaler
            .ok_or_else(|| Error::Config("forecaster has not been fitted or loaded".into()))?;
        let scaled = self.scaled_input(data, &scaler);
        let (dim, delay) = (self.pipeline.window_dim, self.pipeline.delay);
        let span = (dim - 1) * delay;
        let first_start = data.n_train - 1 - span;
        let raw = data.raw.values();
        self.models
            .par_iter_mut()
            .map(|(h, model)| {
                let h = *h;
                let ds = make_windows_from(&scaled[first_start..], dim, delay, &[h])?;
                let mut out = HorizonPrediction {
                    horizon: h,
                    test_index: Vec::with_capacity(ds.num_samples()),
                    actual: Vec::with_capacity(ds.num_samples()),
                    predicted: Vec::with_capacity(ds.num_samples()),
                };
                for i in 0..ds.num_samples() {
                    let target = first_start + ds.origin(i) + h;
                    let y = model.forward(&Tensor::column(ds.input(i)))?.data()[0];
                    out.test_index.push(target - data.n_train);
                    out.actual.push(raw[target]);
                    out.predicted.push(scaler.invert(y));
                }
                Ok(out)
            })
            .collect()
    }

    /// Serialises every sub-model and the scaler in the parameter file format.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let scaler = self
            .scaler
            .ok_or_else(|| Error::Config("cannot save an unfitted forecaster".into()))?;
        let scaler_t = Tensor::vector(vec![scaler.mean, scaler.std]);
        let names: Vec<String> = self
            .models
            .iter()
            .flat_map(|(h, m)| m.params().into_iter().map(move |p| format!("h{h}/{}", p.name)))
            .collect();
        let mut named: Vec<(&str, &Tensor<T>)> = vec![("scaler", &scaler_t)];
        let values = self
            .models
            .iter()
            .flat_map(|(_, m)| m.params().into_iter().map(|p| &p.value));
        named.extend(names.iter().map(String::as_str).zip(values));
        let mut buf = Vec::new();
        write_tensors(&mut buf, &named).expect("writing to memory");
        Ok(buf)
    }

    /// Writes every sub-model and the scaler to one parameter file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Loads parameters saved by [`HorizonForecaster::save`] into a forecaster
    /// built with the same configuration.
    pub fn load(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut tensors: std::collections::HashMap<String, Tensor<T>> =
            read_tensors::<T, _>(std::io::BufReader::new(f))?.into_iter().collect();
        let scaler = tensors
            .remove("scaler")
            .filter(|t| t.len() == 2)
            .ok_or_else(|| Error::ModelFile("missing scaler".into()))?;
        for (h, model) in &mut self.models {
            let prefix = format!("h{h}/");
            let mine: Vec<(String, Tensor<T>)> = model
                .params()
                .iter()
                .map(|p| {
                    let key = format!("{prefix}{}", p.name);
                    tensors
                        .remove(&key)
                        .map(|t| (p.name.clone(), t))
                        .ok_or_else(|| Error::ModelFile(format!("missing tensor {key:?}")))
                })
                .collect::<Result<_>>()?;
            crate::nn::io_assign(mine, &mut model.params_mut())?;
        }
        if let Some(extra) = tensors.keys().next() {
            return Err(Error::ModelFile(format!(
                "unexpected tensor {extra:?} (different configuration?)"
            )));
        }
        self.scaler = Some(Scaler {
            mean: scaler.data()[0],
            std: scaler.data()[1],
        });
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub site: String,
    pub model: String,
    pub horizon: usize,
    /// `None` when the cell failed; `error` then says why.
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Scores of one model on one site.
#[derive(Debug, Clone)]
pub struct EvalReport<T> {
    pub site: String,
    pub model: String,
    pub kind: ModelKind,
    pub input: &'static str,
    pub denoise: Option<DenoiseSummary>,
    pub rows: Vec<MetricRow>,
    pub predictions: Vec<HorizonPrediction<T>>,
    pub traces: Vec<(usize, TrainTrace)>,
}

/// Prepares `ts`, trains every sub-model and scores the test segment against
/// the raw observations.
pub fn run_pipeline<T: Scalar>(ts: &TimeSeries<T>, forecaster: &mut HorizonForecaster<T>) -> Result<EvalReport<T>> {
    let data = prepare(ts, &forecaster.pipeline)?;
    run_prepared(&data, forecaster)
}

pub fn run_prepared<T: Scalar>(data: &Prepared<T>, forecaster: &mut HorizonForecaster<T>) -> Result<EvalReport<T>> {
    let traces = forecaster.fit(data)?;
    let predictions = forecaster.predict(data)?;
    let site = data.raw.origin_label.clone().unwrap_or_else(|| "series".into());
    let model = forecaster.pipeline.model_label(forecaster.kind());
    let rows = predictions
        .iter()
        .map(|p| {
            let m = p.metrics();
            MetricRow {
                site: site.clone(),
                model: model.clone(),
                horizon: p.horizon,
                error: m.as_ref().err().map(ToString::to_string),
                metrics: m.ok(),
            }
        })
        .collect();
    Ok(EvalReport {
        site,
        model,
        kind: forecaster.kind(),
        input: forecaster.pipeline.input_label(),
        denoise: data.denoise,
        rows,
        predictions,
        traces,
    })
}

/// Results of a models × sites grid.
#[derive(Debug, Clone)]
pub struct ExperimentReport<T> {
    pub horizons: Vec<usize>,
    pub input: &'static str,
    /// One entry per (site, model) in grid order; `Err` cells keep their message.
    pub cells: Vec<ExperimentCell<T>>,
}

#[derive(Debug, Clone)]
pub struct ExperimentCell<T> {
    pub site: String,
    pub model: String,
    pub outcome: std::result::Result<EvalReport<T>, String>,
}

/// Runs every model on every site. Sites are outer, models inner, matching
/// the row order of the emitted tables. A failing cell is recorded, not fatal.
pub fn run_experiment<T: Scalar>(
    sites: &[TimeSeries<T>],
    models: &[NetSpec],
    pipeline: &PipelineConfig<T>,
    train: &TrainConfig,
) -> Result<ExperimentReport<T>> {
    if sites.is_empty() || models.is_empty() {
        return Err(Error::Config("experiment needs at least one site and one model".into()));
    }
    pipeline.validate()?;
    train.validate()?;
    for m in models {
        NetSpec {
            window_dim: pipeline.window_dim,
            ..m.clone()
        }
        .validate()?;
    }
    let mut cells = Vec::with_capacity(sites.len() * models.len());
    for (si, ts) in sites.iter().enumerate() {
        let site = ts.origin_label.clone().unwrap_or_else(|| format!("S{}", si + 1));
        let prepared = prepare(ts, pipeline);
        for spec in models {
            let model = pipeline.model_label(spec.kind);
            let outcome = match &prepared {
                Ok(data) => HorizonForecaster::new(spec.clone(), pipeline.clone(), train.clone())
                    .and_then(|mut f| run_prepared(data, &mut f))
                    .map(|mut r| {
                        r.site = site.clone();
                        for row in &mut r.rows {
                            row.site = site.clone();
                        }
                        r
                    })
                    .map_err(|e| e.to_string()),
                Err(e) => Err(e.to_string()),
            };
            cells.push(ExperimentCell {
                site: site.clone(),
                model,
                outcome,
            });
        }
    }
    Ok(ExperimentReport {
        horizons: pipeline.horizons.clone(),
        input: pipeline.input_label(),
        cells,
    })
}

impl<T: Scalar> ExperimentReport<T> {
    /// Long-format rows; failed cells carry no metrics.
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut out = Vec::new();
        for cell in &self.cells {
            match &cell.outcome {
                Ok(r) => out.extend(r.rows.iter().cloned()),
                Err(e) => out.extend(self.horizons.iter().map(|&h| MetricRow {
                    site: cell.site.clone(),
                    model: cell.model.clone(),
                    horizon: h,
                    metrics: None,
                    error: Some(e.clone()),
                })),
            }
        }
        out
    }

    /// `site,model,horizon,mae,mape_pct,rmse`; failed cells hold `FAILED`.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        write_metrics_csv(w, &self.rows())
    }

    /// One row per (site, model) with MAE/MAPE/RMSE under each horizon.
    pub fn write_wide_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let mut header = vec!["site".to_string(), "model".to_string()];
        for h in &self.horizons {
            for m in ["mae", "mape_pct", "rmse"] {
                header.push(format!("{m}_h{h}"));
            }
        }
        writeln!(w, "{}", header.join(","))?;
        for (site, model, cells) in self.wide_rows() {
            let mut fields = vec![site, model];
            fields.extend(cells);
            writeln!(w, "{}", fields.join(","))?;
        }
        w.flush()
    }

    fn wide_rows(&self) -> Vec<(String, String, Vec<String>)> {
        self.cells
            .iter()
            .map(|cell| {
                let mut vals = Vec::with_capacity(self.horizons.len() * 3);
                for &h in &self.horizons {
                    let m = cell
                        .outcome
                        .as_ref()
                        .ok()
                        .and_then(|r| r.rows.iter().find(|row| row.horizon == h))
                        .and_then(|row| row.metrics);
                    match m {
                        Some(m) => vals.extend([
                            format!("{:.4}", m.mae),
                            format!("{:.4}", m.mape),
                            format!("{:.4}", m.rmse),
                        ]),
                        None => vals.extend(std::iter::repeat_n("FAILED".to_string(), 3)),
                    }
                }
                (cell.site.clone(), cell.model.clone(), vals)
            })
            .collect()
    }

    /// Aligned plain-text table with a horizon band over the metric columns.
    pub fn to_text_table(&self) -> String {
        let rows = self.wide_rows();
        let site_w = rows.iter().map(|r| r.0.len()).chain(["Site".len()]).max().unwrap_or(4);
        let model_w = rows.iter().map(|r| r.1.len()).chain(["Model".len()]).max().unwrap_or(5);
        let col_w = 9;
        let band_w = 3 * col_w + 2;
        let mut out = String::new();
        out.push_str(&format!("{:<site_w$}  {:<model_w$}", "", ""));
        for h in &self.horizons {
            let label = format!("{h}-step");
            out.push_str(&format!("  {label:^band_w$}"));
        }
        out.push('\n');
        out.push_str(&format!("{:<site_w$}  {:<model_w$}", "Site", "Model"));
        for _ in &self.horizons {
            out.push_str(&format!("  {:>col_w$} {:>col_w$} {:>col_w$}", "MAE", "MAPE(%)", "RMSE"));
        }
        out.push('\n');
        for (site, model, vals) in rows {
            out.push_str(&format!("{site:<site_w$}  {model:<model_w$}"));
            for chunk in vals.chunks(3) {
                out.push_str(&format!(
                    "  {:>col_w$} {:>col_w$} {:>col_w$}",
                    chunk[0], chunk[1], chunk[2]
                ));
            }
            out.push('\n');
        }
        out
    }
}

pub fn write_metrics_csv<W: Write>(mut w: W, rows: &[MetricRow]) -> std::io::Result<()> {
    writeln!(w, "site,model,horizon,mae,mape_pct,rmse")?;
    for r in rows {
        match r.metrics {
            Some(m) => writeln!(
                w,
                "{},{},{},{},{},{}",
                r.site, r.model, r.horizon, m.mae, m.mape, m.rmse
            )?,
            None => writeln!(w, "{},{},{},FAILED,FAILED,FAILED", r.site, r.model, r.horizon)?,
        }
    }
    w.flush()
}
