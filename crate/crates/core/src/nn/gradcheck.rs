//! Central finite-difference verification of analytic gradients.

use std::fmt;

use super::Layer;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckConfig {
    pub step: f64,
    pub tolerance: f64,
    /// Denominator floor for the relative error, so gradients that are
    /// numerically zero are compared absolutely.
    pub abs_floor: f64,
    pub check_input: bool,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            tolerance: 1e-4,
            abs_floor: 1e-4,
            check_input: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamCheck {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    pub checked: usize,
    /// Entries whose probes changed a ReLU on/off pattern.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub params: Vec<ParamCheck>,
    pub input: Option<ParamCheck>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .chain(self.input.iter())
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error() < self.tolerance
    }

    pub fn failures(&self) -> Vec<&ParamCheck> {
        self.params
            .iter()
            .chain(self.input.iter())
            .filter(|p| p.max_rel_error >= self.tolerance)
            .collect()
    }

    pub fn total_skipped(&self) -> usize {
        self.params.iter().chain(self.input.iter()).map(|p| p.skipped).sum()
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.params.iter().chain(self.input.iter()) {
            writeln!(
                f,
                "{:<32} rel {:.3e}  abs {:.3e}  ({} checked, {} skipped)",
                p.name, p.max_rel_error, p.max_abs_error, p.checked, p.skipped
            )?;
        }
        Ok(())
    }
}

fn mse<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>) -> f64 {
    let n = pred.len() as f64;
    pred.data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            let d = (p - t).to_f64_lossy();
            d * d
        })
        .sum::<f64>()
        / n
}

struct Tracker {
    cfg: GradCheckConfig,
    check: ParamCheck,
}

impl Tracker {
    fn new(name: String, cfg: GradCheckConfig) -> Self {
        Self {
            cfg,
            check: ParamCheck {
                name,
                max_rel_error: 0.0,
                max_abs_error: 0.0,
                checked: 0,
                skipped: 0,
            },
        }
    }

    fn record(&mut self, analytic: f64, numeric: f64) {
        let abs = (analytic - numeric).abs();
        let rel = abs / analytic.abs().max(numeric.abs()).max(self.cfg.abs_floor);
        self.check.max_abs_error = self.check.max_abs_error.max(abs);
        self.check.max_rel_error = self.check.max_rel_error.max(rel);
        self.check.checked += 1;
    }
}

/// Compares the analytic gradient of `mean((layer(input) - target)^2)` with
/// central differences, for every parameter entry and (optionally) every
/// input entry.
pub fn grad_check<T: Scalar, L: Layer<T> + ?Sized>(
    layer: &mut L,
    input: &Tensor<T>,
    target: &Tensor<T>,
    cfg: GradCheckConfig,
) -> Result<GradCheckReport> {
    layer.zero_grad();
    let out = layer.forward(input)?;
    if out.len() != target.len() {
        return Err(Error::shape("grad check target", out.shape(), target.shape()));
    }
    let base_pattern = layer.activation_pattern();
    let n = T::from_usize_lossy(out.len());
    let upstream_data: Vec<T> = out
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| T::lit(2.0) * (p - t) / n)
        .collect();
    let upstream = Tensor::from_vec(out.shape(), upstream_data)?;
    let input_grad = layer.backward(&upstream)?;
    let analytic: Vec<Vec<T>> = layer.params().iter().map(|p| p.grad.data().to_vec()).collect();
    let names: Vec<String> = layer.params().iter().map(|p| p.name.clone()).collect();

    let h = T::lit(cfg.step);
    let two_h = 2.0 * cfg.step;

    // Evaluates the loss and whether the activation pattern is unchanged.
    let probe = |layer: &mut L, x: &Tensor<T>| -> Result<(f64, bool)> {
        let y = layer.forward(x)?;
        Ok((mse(&y, target), layer.activation_pattern() == base_pattern))
    };

    let mut params = Vec::with_capacity(names.len());
    for (pi, name) in names.into_iter().enumerate() {
        let mut tr = Tracker::new(name, cfg);
        let len = analytic[pi].len();
        for k in 0..len {
            let orig = layer.params()[pi].value.data()[k];
            layer.params_mut()[pi].value.data_mut()[k] = orig + h;
            let (lp, okp) = probe(layer, input)?;
            layer.params_mut()[pi].value.data_mut()[k] = orig - h;
            let (lm, okm) = probe(layer, input)?;
            layer.params_mut()[pi].value.data_mut()[k] = orig;
            if okp && okm {
                tr.record(analytic[pi][k].to_f64_lossy(), (lp - lm) / two_h);
            } else {
                tr.check.skipped += 1;
            }
        }
        params.push(tr.check);
    }

    let input_check = if cfg.check_input {
        let mut tr = Tracker::new("<input>".to_string(), cfg);
        let mut x = input.clone();
        for k in 0..x.len() {
            let orig = x.data()[k];
            x.data_mut()[k] = orig + h;
            let (lp, okp) = probe(layer, &x)?;
            x.data_mut()[k] = orig - h;
            let (lm, okm) = probe(layer, &x)?;
            x.data_mut()[k] = orig;
            if okp && okm {
                tr.record(input_grad.data()[k].to_f64_lossy(), (lp - lm) / two_h);
            } else {
                tr.check.skipped += 1;
            }
        }
        Some(tr.check)
    } else {
        None
    };

    layer.zero_grad();
    Ok(GradCheckReport {
        params,
        input: input_check,
        tolerance: cfg.tolerance,
    })
}
