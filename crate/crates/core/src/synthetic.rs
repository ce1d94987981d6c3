//! Seeded synthetic wind-speed generator: AR(2) fluctuation plus a diurnal
//! and a faster sinusoid plus white measurement noise around a mean level.

use std::f64::consts::TAU;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::series::TimeSeries;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n: usize,
    pub seed: u64,
    pub mean: f64,
    pub ar1: f64,
    pub ar2: f64,
    pub ar_noise: f64,
    pub amp1: f64,
    /// In samples; 144 ten-minute samples make a day.
    pub period1: f64,
    pub amp2: f64,
    pub period2: f64,
    pub noise_std: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            seed: 2024,
            mean: 9.0,
            ar1: 0.6,
            ar2: 0.2,
            ar_noise: 0.15,
            amp1: 2.0,
            period1: 144.0,
            amp2: 1.0,
            period2: 36.0,
            noise_std: 0.2,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("synthetic.n must be positive".into()));
        }
        if !(self.period1 > 0.0 && self.period2 > 0.0) {
            return Err(Error::Config("synthetic periods must be positive".into()));
        }
        if self.ar_noise < 0.0 || self.noise_std < 0.0 {
            return Err(Error::Config("synthetic noise levels must be non-negative".into()));
        }
        // AR(2) stationarity triangle.
        let (a, b) = (self.ar1, self.ar2);
        if !(a + b < 1.0 && b - a < 1.0 && b.abs() < 1.0) {
            return Err(Error::Config(format!(
                "AR(2) coefficients ({a}, {b}) are not stationary"
            )));
        }
        Ok(())
    }
}

/// The noisy series and the same series without measurement noise.
#[derive(Debug, Clone)]
pub struct SyntheticSeries<T> {
    pub observed: TimeSeries<T>,
    pub clean: TimeSeries<T>,
}

pub fn generate<T: Scalar>(cfg: &SyntheticConfig) -> Result<SyntheticSeries<T>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let innov = Normal::new(0.0, cfg.ar_noise).map_err(|e| Error::Config(e.to_string()))?;
    let meas = Normal::new(0.0, cfg.noise_std).map_err(|e| Error::Config(e.to_string()))?;
    let (mut a1, mut a2) = (0.0f64, 0.0f64);
    // Burn-in so the AR part starts near stationarity.
    for _ in 0..200 {
        let next = cfg.ar1 * a1 + cfg.ar2 * a2 + innov.sample(&mut rng);
        a2 = a1;
        a1 = next;
    }
    let mut clean = Vec::with_capacity(cfg.n);
    let mut observed = Vec::with_capacity(cfg.n);
    for t in 0..cfg.n {
        let ar = cfg.ar1 * a1 + cfg.ar2 * a2 + innov.sample(&mut rng);
        a2 = a1;
        a1 = ar;
        let tf = t as f64;
        let c =
            cfg.mean + cfg.amp1 * (TAU * tf / cfg.period1).sin() + cfg.amp2 * (TAU * tf / cfg.period2 + 0.7).sin() + ar;
        clean.push(T::lit(c));
        observed.push(T::lit(c + meas.sample(&mut rng)));
    }
    Ok(SyntheticSeries {
        observed: TimeSeries::new(observed)?.with_label("synthetic"),
        clean: TimeSeries::new(clean)?.with_label("synthetic-clean"),
    })
}
