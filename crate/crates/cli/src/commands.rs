use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use windcast::forecast::{prepare, run_experiment, write_metrics_csv, MetricRow};
use windcast::pssa::{decompose, pssa_denoise_causal, pssa_from_decomposition};
use windcast::synthetic::generate;
use windcast::{load_csv, DenoiseMode, Error, HorizonForecaster, TimeSeries};

use crate::config::{CliConfig, Resolved};
use crate::error::CliError;

pub struct Context<'a> {
    pub cfg: &'a CliConfig,
    pub resolved: &'a Resolved,
    pub out: &'a Path,
    pub command: &'static str,
}

/// Files produced by a command, written together once all compute succeeded.
#[derive(Default)]
struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    fn add(&mut self, name: impl Into<PathBuf>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    fn add_with(&mut self, name: impl Into<PathBuf>, f: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) {
        let mut buf = Vec::new();
        f(&mut buf).expect("writing to memory");
        self.add(name, buf);
    }

    fn flush(self, ctx: &Context) -> Result<(), CliError> {
        let manifest = ctx.cfg.manifest(ctx.command)?;
        for (name, bytes) in self.files.iter().chain([&(
            PathBuf::from(format!("manifest_{}.toml", ctx.command)),
            manifest.into_bytes(),
        )]) {
            let path = ctx.out.join(name);
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

fn site_label(cfg: &CliConfig, ts: &TimeSeries<f64>) -> String {
    cfg.data
        .site
        .clone()
        .or_else(|| ts.origin_label.clone())
        .unwrap_or_else(|| "synthetic".into())
}

fn load_series(ctx: &Context) -> Result<TimeSeries<f64>, CliError> {
    let ts = match &ctx.cfg.data.path {
        Some(p) => load_csv(p, &ctx.resolved.column)?,
        None => generate::<f64>(&ctx.resolved.synthetic)?.observed,
    };
    let label = site_label(ctx.cfg, &ts);
    Ok(ts.with_label(label))
}

pub fn gen_data(ctx: &Context) -> Result<(), CliError> {
    let data = generate::<f64>(&ctx.resolved.synthetic)?;
    let mut text = String::from("observed,clean\n");
    for (o, c) in data.observed.values().iter().zip(data.clean.values()) {
        writeln!(text, "{o},{c}").unwrap();
    }
    let mut out = Outputs::default();
    out.add("synthetic.csv", text.into_bytes());
    out.flush(ctx)?;
    println!(
        "wrote {} samples to {}",
        data.observed.len(),
        ctx.out.join("synthetic.csv").display()
    );
    Ok(())
}

pub fn denoise(ctx: &Context) -> Result<(), CliError> {
    let pipeline = &ctx.resolved.pipeline;
    let pssa = pipeline
        .pssa
        .as_ref()
        .ok_or_else(|| CliError::Usage("pssa.enabled: denoise needs P-SSA enabled".into()))?;
    let ts = load_series(ctx)?;
    let (dec, res) = match pipeline.mode {
        DenoiseMode::Paper => {
            let dec = decompose(&ts, pssa.embed_dim)?;
            let res = pssa_from_decomposition(&ts, &dec, pssa)?;
            (dec, res)
        }
        DenoiseMode::Causal => {
            if pipeline.n_test >= ts.len() {
                return Err(Error::SplitTooLarge {
                    n_test: pipeline.n_test,
                    len: ts.len(),
                }
                .into());
            }
            let n_train = ts.len() - pipeline.n_test;
            let res = pssa_denoise_causal(&ts, n_train, pssa)?;
            let train = TimeSeries::new(ts.values()[..n_train].to_vec())?;
            (decompose(&train, pssa.embed_dim)?, res)
        }
    };

    let mut out = Outputs::default();
    let mut text = String::from("index,observed,denoised\n");
    for (i, (o, d)) in ts.values().iter().zip(res.denoised.values()).enumerate() {
        writeln!(text, "{i},{o},{d}").unwrap();
    }
    out.add("denoised.csv", text.into_bytes());
    let mut text = String::from("component,singular_value,index,value\n");
    for (c, comp) in dec.components.iter().enumerate() {
        let sv = dec.singular_values[c];
        for (i, v) in comp.iter().enumerate() {
            writeln!(text, "{},{sv},{i},{v}", c + 1).unwrap();
        }
    }
    out.add("components.csv", text.into_bytes());
    let summary = format!(
        "m_used={} achieved_r={:.6} rank={} mode={} n={}",
        res.m_used,
        res.achieved_r,
        res.rank,
        pipeline.mode,
        ts.len()
    );
    out.add("summary.txt", format!("{summary}\n").into_bytes());
    out.flush(ctx)?;
    println!("{summary}");
    Ok(())
}

fn forecaster(ctx: &Context) -> Result<HorizonForecaster<f64>, CliError> {
    let r = ctx.resolved;
    Ok(HorizonForecaster::new(
        r.spec.clone(),
        r.pipeline.clone(),
        r.train.clone(),
    )?)
}

pub fn train(ctx: &Context) -> Result<(), CliError> {
    let mut f = forecaster(ctx)?;
    let ts = load_series(ctx)?;
    let data = prepare(&ts, &f.pipeline)?;
    let traces = f.fit(&data)?;

    let mut out = Outputs::default();
    for (h, trace) in &traces {
        out.add_with(format!("trace_h{h}.csv"), |w| trace.write_csv(w));
    }
    let bytes = f.to_bytes()?;
    out.add("model.bin", bytes);
    out.flush(ctx)?;
    for (h, trace) in &traces {
        println!(
            "h={h} epochs={} final_loss={:.6}",
            trace.epoch_losses.len(),
            trace.final_loss().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

pub fn predict(ctx: &Context) -> Result<(), CliError> {
    let mut f = forecaster(ctx)?;
    let model = ctx
        .cfg
        .predict
        .model
        .clone()
        .unwrap_or_else(|| ctx.out.join("model.bin"));
    let ts = load_series(ctx)?;
    let data = prepare(&ts, &f.pipeline)?;
    f.load(&model)?;
    let preds = f.predict(&data)?;
    let mut out = Outputs::default();
    for p in &preds {
        out.add_with(format!("predictions_h{}.csv", p.horizon), |w| p.write_csv(w));
    }
    out.flush(ctx)?;
    for p in &preds {
        println!("h={} points={}", p.horizon, p.predicted.len());
    }
    Ok(())
}

fn read_predictions(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn {
                path: path.to_path_buf(),
                column: name.into(),
            })
    };
    let (ai, pi) = (col("actual")?, col("predicted")?);
    let (mut actual, mut predicted) = (Vec::new(), Vec::new());
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let parse = |i: usize| {
            let cell = rec.get(i).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::ParseValue {
                path: path.to_path_buf(),
                row: line + 2,
                value: cell.into(),
            })
        };
        actual.push(parse(ai)?);
        predicted.push(parse(pi)?);
    }
    Ok((actual, predicted))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io).into(),
        other => Error::Csv {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        }
        .into(),
    }
}

pub fn evaluate(ctx: &Context) -> Result<(), CliError> {
    let dir = ctx
        .cfg
        .predict
        .predictions
        .clone()
        .unwrap_or_else(|| ctx.out.to_path_buf());
    let r = ctx.resolved;
    let site = match &ctx.cfg.data.path {
        Some(p) => ctx
            .cfg
            .data
            .site
            .clone()
            .or_else(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "series".into()),
        None => ctx.cfg.data.site.clone().unwrap_or_else(|| "synthetic".into()),
    };
    let model = r.pipeline.model_label(r.spec.kind);
    let mut rows = Vec::new();
    for &h in &r.pipeline.horizons {
        let (actual, predicted) = read_predictions(&dir.join(format!("predictions_h{h}.csv")))?;
        let metrics = windcast::evaluate(&predicted, &actual)?;
        rows.push(MetricRow {
            site: site.clone(),
            model: model.clone(),
            horizon: h,
            metrics: Some(metrics),
            error: None,
        });
    }
    let mut out = Outputs::default();
    out.add_with("metrics.csv", |w| write_metrics_csv(w, &rows));
    out.flush(ctx)?;
    for row in &rows {
        let m = row.metrics.expect("evaluated");
        println!(
            "h={} mae={:.4} mape={:.4}% rmse={:.4}",
            row.horizon, m.mae, m.mape, m.rmse
        );
    }
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

pub fn experiment(ctx: &Context) -> Result<(), CliError> {
    let r = ctx.resolved;
    let sites = if ctx.cfg.experiment.sites.is_empty() {
        vec![load_series(ctx)?]
    } else {
        ctx.cfg
            .experiment
            .sites
            .iter()
            .map(|p| load_csv(p, &r.column))
            .collect::<windcast::Result<Vec<_>>>()?
    };
    let report = run_experiment(&sites, &r.models, &r.pipeline, &r.train)?;

    let mut out = Outputs::default();
    out.add_with("report.csv", |w| report.write_csv(w));
    out.add_with("report_wide.csv", |w| report.write_wide_csv(w));
    let table = report.to_text_table();
    out.add("report.txt", table.clone().into_bytes());
    let mut failed = Vec::new();
    for cell in &report.cells {
        match &cell.outcome {
            Ok(rep) => {
                for p in &rep.predictions {
                    let name = format!(
                        "predictions/{}_{}_h{}.csv",
                        file_safe(&cell.site),
                        rep.kind.key(),
                        p.horizon
                    );
                    out.add_with(name, |w| p.write_csv(w));
                }
            }
            Err(e) => failed.push(format!("{} / {}: {e}", cell.site, cell.model)),
        }
    }
    out.flush(ctx)?;
    print!("{table}");
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(format!("{} cell(s) failed: {}", failed.len(), failed.join("; "))).into())
    }
}
