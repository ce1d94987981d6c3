//! Whole forecasting networks: a delay window in, one scalar out.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{Activation, Dense, GruCell, GruLayer, Layer, Mlp, Param, RnnCell, RnnLayer, TcnConfig, TcnStack};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    TcnGru,
    GruOnly,
    RnnOnly,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::TcnGru,
        ModelKind::GruOnly,
        ModelKind::RnnOnly,
        ModelKind::Mlp,
    ];

    /// Name used in report tables.
    pub fn label(self) -> &'static str {
        match self {
            ModelKind::TcnGru => "TCN-GRU",
            ModelKind::GruOnly => "GRU",
            ModelKind::RnnOnly => "RNN",
            ModelKind::Mlp => "BPNN",
        }
    }

    /// Identifier used in config files.
    pub fn key(self) -> &'static str {
        match self {
            ModelKind::TcnGru => "tcn_gru",
            ModelKind::GruOnly => "gru",
            ModelKind::RnnOnly => "rnn",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "tcn_gru" => Ok(ModelKind::TcnGru),
            "gru" | "gru_only" => Ok(ModelKind::GruOnly),
            "rnn" | "rnn_only" => Ok(ModelKind::RnnOnly),
            "mlp" | "bpnn" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown model kind {other:?} (expected tcn_gru, gru, rnn or mlp)"
            ))),
        }
    }
}

/// Architecture hyperparameters. Defaults follow the reference settings:
/// TCN with 10 filters, kernel 2 and dilations 1/2/4; recurrent layers of
/// 64 units; a `[20, 20, 20, 1]` MLP.
#[derive(Debug, Clone, PartialEq)]
pub struct NetSpec {
    pub kind: ModelKind,
    pub window_dim: usize,
    pub tcn: TcnConfig,
    pub gru_hidden: usize,
    pub rnn_hidden: usize,
    pub mlp_widths: Vec<usize>,
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            kind: ModelKind::TcnGru,
            window_dim: 20,
            tcn: TcnConfig::default(),
            gru_hidden: 64,
            rnn_hidden: 64,
            mlp_widths: vec![20, 20, 20, 1],
        }
    }
}

impl NetSpec {
    pub fn with_kind(kind: ModelKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_dim == 0 {
            return Err(Error::Config("window dimension must be positive".into()));
        }
        match self.kind {
            ModelKind::TcnGru => {
                self.tcn.validate()?;
                if self.tcn.channels_in != 1 {
                    return Err(Error::Config("tcn input must have one channel".into()));
                }
                if self.gru_hidden == 0 {
                    return Err(Error::Config("gru hidden size must be positive".into()));
                }
            }
            ModelKind::GruOnly if self.gru_hidden == 0 => {
                return Err(Error::Config("gru hidden size must be positive".into()));
            }
            ModelKind::RnnOnly if self.rnn_hidden == 0 => {
                return Err(Error::Config("rnn hidden size must be positive".into()));
            }
            ModelKind::Mlp => {
                let w = &self.mlp_widths;
                if w.len() < 2 || w.contains(&0) {
                    return Err(Error::Config(format!("mlp widths {w:?} are invalid")));
                }
                if w[0] != self.window_dim {
                    return Err(Error::Config(format!(
                        "mlp input width {} must equal the window dimension {}",
                        w[0], self.window_dim
                    )));
                }
                if w[w.len() - 1] != 1 {
                    return Err(Error::Config("mlp must end in a single output".into()));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

pub enum ForecastNet<T> {
    TcnGru {
        tcn: TcnStack<T>,
        gru: GruLayer<T>,
        head: Dense<T>,
    },
    Gru {
        gru: GruLayer<T>,
        head: Dense<T>,
    },
    Rnn {
        rnn: RnnLayer<T>,
        head: Dense<T>,
    },
    Mlp(Mlp<T>),
}

impl<T: Scalar> ForecastNet<T> {
    pub fn new<R: Rng + ?Sized>(spec: &NetSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        Ok(match spec.kind {
            ModelKind::TcnGru => {
                let tcn = TcnStack::new("tcn", &spec.tcn, rng)?;
                let gru = GruCell::new("gru", tcn.features(), spec.gru_hidden, rng);
                let head = Dense::new("head", spec.gru_hidden, 1, Activation::Identity, rng);
                ForecastNet::TcnGru {
                    tcn,
                    gru: GruLayer::new(gru),
                    head,
                }
            }
            ModelKind::GruOnly => ForecastNet::Gru {
                gru: GruLayer::new(GruCell::new("gru", 1, spec.gru_hidden, rng)),
                head: Dense::new("head", spec.gru_hidden, 1, Activation::Identity, rng),
            },
            ModelKind::RnnOnly => ForecastNet::Rnn {
                rnn: RnnLayer::new(RnnCell::new("rnn", 1, spec.rnn_hidden, rng)),
                head: Dense::new("head", spec.rnn_hidden, 1, Activation::Identity, rng),
            },
            ModelKind::Mlp => ForecastNet::Mlp(Mlp::new("mlp", &spec.mlp_widths, Activation::Sigmoid, rng)?),
        })
    }

    pub fn model_kind(&self) -> ModelKind {
        match self {
            ForecastNet::TcnGru { .. } => ModelKind::TcnGru,
            ForecastNet::Gru { .. } => ModelKind::GruOnly,
            ForecastNet::Rnn { .. } => ModelKind::RnnOnly,
            ForecastNet::Mlp(_) => ModelKind::Mlp,
        }
    }

    /// Forward pass on a raw window; returns the scalar prediction.
    pub fn predict(&mut self, window: &[T]) -> Result<T> {
        let y = self.forward(&Tensor::column(window))?;
        Ok(y.data()[0])
    }
}

impl<T: Scalar> Layer<T> for ForecastNet<T> {
    fn kind(&self) -> &'static str {
        match self {
            ForecastNet::TcnGru { .. } => "tcn-gru model",
            ForecastNet::Gru { .. } => "gru model",
            ForecastNet::Rnn { .. } => "rnn model",
            ForecastNet::Mlp(_) => "mlp model",
        }
    }

    /// Input is a `window × 1` column.
    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            ForecastNet::TcnGru { tcn, gru, head } => {
                let features = tcn.forward(input)?;
                let h = gru.forward(&features)?;
                head.forward(&h)
            }
            ForecastNet::Gru { gru, head } => {
                let h = gru.forward(input)?;
                head.forward(&h)
            }
            ForecastNet::Rnn { rnn, head } => {
                let h = rnn.forward(input)?;
                head.forward(&h)
            }
            ForecastNet::Mlp(mlp) => mlp.forward(&Tensor::vector(input.data().to_vec())),
        }
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            ForecastNet::TcnGru { tcn, gru, head } => {
                let dh = head.backward(grad_out)?;
                let df = gru.backward(&dh)?;
                tcn.backward(&df)
            }
            ForecastNet::Gru { gru, head } => {
                let dh = head.backward(grad_out)?;
                gru.backward(&dh)
            }
            ForecastNet::Rnn { rnn, head } => {
                let dh = head.backward(grad_out)?;
                rnn.backward(&dh)
            }
            ForecastNet::Mlp(mlp) => {
                let dx = mlp.backward(grad_out)?;
                let n = dx.len();
                Tensor::from_vec(&[n, 1], dx.into_data())
            }
        }
    }

    fn params(&self) -> Vec<&Param<T>> {
        match self {
            ForecastNet::TcnGru { tcn, gru, head } => {
                let mut v = tcn.params();
                v.extend(gru.params());
                v.extend(head.params());
                v
            }
            ForecastNet::Gru { gru, head } => {
                let mut v = gru.params();
                v.extend(head.params());
                v
            }
            ForecastNet::Rnn { rnn, head } => {
                let mut v = rnn.params();
                v.extend(head.params());
                v
            }
            ForecastNet::Mlp(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            ForecastNet::TcnGru { tcn, gru, head } => {
                let mut v = tcn.params_mut();
                v.extend(gru.params_mut());
                v.extend(head.params_mut());
                v
            }
            ForecastNet::Gru { gru, head } => {
                let mut v = gru.params_mut();
                v.extend(head.params_mut());
                v
            }
            ForecastNet::Rnn { rnn, head } => {
                let mut v = rnn.params_mut();
                v.extend(head.params_mut());
                v
            }
            ForecastNet::Mlp(m) => m.params_mut(),
        }
    }

    fn activation_pattern(&self) -> Vec<bool> {
        match self {
            ForecastNet::TcnGru { tcn, .. } => tcn.activation_pattern(),
            ForecastNet::Mlp(m) => m.activation_pattern(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn default_tcn_gru_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut net = ForecastNet::<f64>::new(&NetSpec::default(), &mut rng).unwrap();
        let ForecastNet::TcnGru { tcn, gru, head } = &net else {
            panic!("wrong kind")
        };
        assert_eq!(tcn.blocks.len(), 1);
        assert_eq!(tcn.blocks[0].units.len(), 3);
        assert_eq!(tcn.blocks[0].channels(), 10);
        assert_eq!(gru.cell.hidden_size(), 64);
        assert_eq!(head.outputs(), 1);
        let y = net.predict(&[0.5; 20]).unwrap();
        assert!(y.is_finite());
    }

    #[test]
    fn kinds_parse() {
        for k in ModelKind::ALL {
            assert_eq!(k.key().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("BPNN".parse::<ModelKind>().unwrap(), ModelKind::Mlp);
        assert!("lstm".parse::<ModelKind>().is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = NetSpec::with_kind(ModelKind::Mlp);
        s.mlp_widths = vec![19, 20, 1];
        assert!(s.validate().is_err());
        let mut s = NetSpec::default();
        s.tcn.kernel_size = 3;
        assert!(s.validate().is_err());
    }
}
