use rand::Rng;

use super::{prefixed, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemv_acc, gemv_t_acc, outer_acc, Tensor};

/// Elman cell: `h = tanh(W · [h_prev, x] + b)`.
pub struct RnnCell<T> {
    pub w: Param<T>,
    pub b: Param<T>,
    hidden: usize,
    input: usize,
}

impl<T: Scalar> RnnCell<T> {
    pub fn new<R: Rng + ?Sized>(prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        Self {
            w: Param::glorot(prefixed(prefix, "w"), hidden, hidden + input, rng),
            b: Param::zeros(prefixed(prefix, "b"), &[hidden]),
            hidden,
            input,
        }
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            w: Param::zeros("w", &[hidden, hidden + input]),
            b: Param::zeros("b", &[hidden]),
            hidden,
            input,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn step(&self, x: &[T], h_prev: &[T]) -> Result<Vec<T>> {
        if x.len() != self.input || h_prev.len() != self.hidden {
            return Err(Error::shape(
                "rnn step",
                &[self.hidden, self.input],
                &[h_prev.len(), x.len()],
            ));
        }
        Ok(self.raw_step(&concat(h_prev, x)))
    }

    fn raw_step(&self, hx: &[T]) -> Vec<T> {
        let mut h = self.b.value.data().to_vec();
        gemv_acc(self.w.value.data(), self.hidden + self.input, hx, &mut h);
        h.iter_mut().for_each(|v| *v = v.tanh());
        h
    }
}

fn concat<T: Copy>(a: &[T], b: &[T]) -> Vec<T> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

/// An RNN over a `time × features` sequence; outputs the final hidden state.
pub struct RnnLayer<T> {
    pub cell: RnnCell<T>,
    /// Per step: concatenated `[h_prev, x]` and the new state.
    records: Option<Vec<(Vec<T>, Vec<T>)>>,
}

impl<T: Scalar> RnnLayer<T> {
    pub fn new(cell: RnnCell<T>) -> Self {
        Self { cell, records: None }
    }
}

impl<T: Scalar> Layer<T> for RnnLayer<T> {
    fn kind(&self) -> &'static str {
        "rnn"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let ni = self.cell.input;
        if input.shape().len() != 2 || input.cols() != ni || input.rows() == 0 {
            return Err(Error::shape("rnn sequence", &[input.rows().max(1), ni], input.shape()));
        }
        let mut h = vec![T::zero(); self.cell.hidden];
        let mut records = Vec::with_capacity(input.rows());
        for t in 0..input.rows() {
            let hx = concat(&h, input.row(t));
            h = self.cell.raw_step(&hx);
            records.push((hx, h.clone()));
        }
        self.records = Some(records);
        Ok(Tensor::vector(h))
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let records = self.records.take().ok_or(Error::NoForward("rnn"))?;
        let (nh, ni) = (self.cell.hidden, self.cell.input);
        if grad_out.len() != nh {
            return Err(Error::shape("rnn grad", &[nh], grad_out.shape()));
        }
        let mut dx = Tensor::zeros(&[records.len(), ni]);
        let mut dh = grad_out.data().to_vec();
        for (t, (hx, h)) in records.iter().enumerate().rev() {
            let da: Vec<T> = dh.iter().zip(h).map(|(&g, &y)| g * (T::one() - y * y)).collect();
            outer_acc(self.cell.w.grad.data_mut(), nh + ni, &da, hx);
            for (g, &d) in self.cell.b.grad.data_mut().iter_mut().zip(&da) {
                *g += d;
            }
            let mut dhx = vec![T::zero(); nh + ni];
            gemv_t_acc(self.cell.w.value.data(), nh + ni, &da, &mut dhx);
            dx.row_mut(t).copy_from_slice(&dhx[nh..]);
            dhx.truncate(nh);
            dh = dhx;
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<T>> {
        vec![&self.cell.w, &self.cell.b]
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.cell.w, &mut self.cell.b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_weights_zero_state() {
        let cell = RnnCell::<f64>::zeros(1, 4);
        assert_eq!(cell.step(&[2.5], &[0.3, -0.1, 0.9, 0.0]).unwrap(), vec![0.0; 4]);
        assert!(cell.step(&[2.5, 1.0], &[0.0; 4]).is_err());
    }
}
