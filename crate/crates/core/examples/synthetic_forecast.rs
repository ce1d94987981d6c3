//! Trains one forecaster per horizon on the bundled synthetic series and
//! prints test-set metrics.
//!
//! cargo run --release --example synthetic_forecast -- [tcn_gru|gru|rnn|mlp] [raw]

use std::time::Instant;

use windcast::synthetic::{generate, SyntheticConfig};
use windcast::{run_pipeline, HorizonForecaster, ModelKind, NetSpec, PipelineConfig, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: ModelKind = args.next().as_deref().unwrap_or("tcn_gru").parse()?;
    let mut pipeline = PipelineConfig::default();
    if args.next().as_deref() == Some("raw") {
        pipeline.pssa = None;
    }

    let data = generate::<f64>(&SyntheticConfig::default())?;
    let started = Instant::now();
    let mut forecaster = HorizonForecaster::new(NetSpec::with_kind(kind), pipeline, TrainConfig::default())?;
    let report = run_pipeline(&data.observed, &mut forecaster)?;

    if let Some(d) = report.denoise {
        println!("kept {} of {} components, r = {:.4}", d.m_used, d.rank, d.achieved_r);
    }
    for row in &report.rows {
        if let Some(m) = row.metrics {
            println!(
                "{} h={} MAE {:.4} MAPE {:.3}% RMSE {:.4}",
                row.model, row.horizon, m.mae, m.mape, m.rmse
            );
        }
    }
    println!("{:.1}s", started.elapsed().as_secs_f64());
    Ok(())
}
