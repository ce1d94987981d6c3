//! Gated recurrent unit without gate biases:
//!
//! ```text
//! r = σ(W_r · [h_prev, x])
//! z = σ(W_z · [h_prev, x])
//! c = tanh(W_h · [r ⊙ h_prev, x])
//! h = (1 - z) ⊙ h_prev + z ⊙ c
//! y = σ(W_o · h)            (only when an output matrix is present)
//! ```

use rand::Rng;

use super::activation::sigmoid;
use super::{prefixed, Layer, Param};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{gemv_acc, gemv_t_acc, outer_acc, Tensor};

pub struct GruCell<T> {
    pub w_r: Param<T>,
    pub w_z: Param<T>,
    pub w_h: Param<T>,
    pub w_o: Option<Param<T>>,
    hidden: usize,
    input: usize,
}

/// Everything one step computes.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStep<T> {
    pub h: Vec<T>,
    pub y: Option<Vec<T>>,
    pub reset: Vec<T>,
    pub update: Vec<T>,
    pub candidate: Vec<T>,
}

struct StepRecord<T> {
    h_prev: Vec<T>,
    hx: Vec<T>,
    rhx: Vec<T>,
    r: Vec<T>,
    z: Vec<T>,
    c: Vec<T>,
}

impl<T: Scalar> GruCell<T> {
    pub fn new<R: Rng + ?Sized>(prefix: &str, input: usize, hidden: usize, rng: &mut R) -> Self {
        let cols = hidden + input;
        Self {
            w_r: Param::glorot(prefixed(prefix, "w_r"), hidden, cols, rng),
            w_z: Param::glorot(prefixed(prefix, "w_z"), hidden, cols, rng),
            w_h: Param::glorot(prefixed(prefix, "w_h"), hidden, cols, rng),
            w_o: None,
            hidden,
            input,
        }
    }

    /// Adds the sigmoid output matrix `W_o` (`outputs × hidden`).
    pub fn with_output<R: Rng + ?Sized>(mut self, prefix: &str, outputs: usize, rng: &mut R) -> Self {
        self.w_o = Some(Param::glorot(prefixed(prefix, "w_o"), outputs, self.hidden, rng));
        self
    }

    pub fn zeros(input: usize, hidden: usize) -> Self {
        let cols = hidden + input;
        Self {
            w_r: Param::zeros("w_r", &[hidden, cols]),
            w_z: Param::zeros("w_z", &[hidden, cols]),
            w_h: Param::zeros("w_h", &[hidden, cols]),
            w_o: None,
            hidden,
            input,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden
    }

    pub fn input_size(&self) -> usize {
        self.input
    }

    fn check(&self, x: &[T], h_prev: &[T]) -> Result<()> {
        if x.len() != self.input {
            return Err(Error::shape("gru input", &[self.input], &[x.len()]));
        }
        if h_prev.len() != self.hidden {
            return Err(Error::shape("gru state", &[self.hidden], &[h_prev.len()]));
        }
        Ok(())
    }

    fn record(&self, x: &[T], h_prev: &[T]) -> (Vec<T>, StepRecord<T>) {
        let (nh, cols) = (self.hidden, self.hidden + self.input);
        let mut hx = Vec::with_capacity(cols);
        hx.extend_from_slice(h_prev);
        hx.extend_from_slice(x);

        let mut r = vec![T::zero(); nh];
        gemv_acc(self.w_r.value.data(), cols, &hx, &mut r);
        r.iter_mut().for_each(|v| *v = sigmoid(*v));
        let mut z = vec![T::zero(); nh];
        gemv_acc(self.w_z.value.data(), cols, &hx, &mut z);
        z.iter_mut().for_each(|v| *v = sigmoid(*v));

        let mut rhx = hx.clone();
        for (v, &ri) in rhx[..nh].iter_mut().zip(&r) {
            *v *= ri;
        }
        let mut c = vec![T::zero(); nh];
        gemv_acc(self.w_h.value.data(), cols, &rhx, &mut c);
        c.iter_mut().for_each(|v| *v = v.tanh());

        let h = (0..nh).map(|i| (T::one() - z[i]) * h_prev[i] + z[i] * c[i]).collect();
        let rec = StepRecord {
            h_prev: h_prev.to_vec(),
            hx,
            rhx,
            r,
            z,
            c,
        };
        (h, rec)
    }

    /// One time step.
    pub fn step(&self, x: &[T], h_prev: &[T]) -> Result<GruStep<T>> {
        self.check(x, h_prev)?;
        let (h, rec) = self.record(x, h_prev);
        let y = self.w_o.as_ref().map(|w| {
            let mut y = vec![T::zero(); w.value.rows()];
            gemv_acc(w.value.data(), self.hidden, &h, &mut y);
            y.into_iter().map(sigmoid).collect()
        });
        Ok(GruStep {
            h,
            y,
            reset: rec.r,
            update: rec.z,
            candidate: rec.c,
        })
    }

    /// Folds [`GruCell::step`] over the rows of `features`, starting from zeros.
    pub fn run(&self, features: &Tensor<T>) -> Result<Vec<T>> {
        if features.shape().len() != 2 || features.rows() == 0 {
            return Err(Error::shape("gru sequence", &[1, self.input], features.shape()));
        }
        let mut h = vec![T::zero(); self.hidden];
        for t in 0..features.rows() {
            h = self.step(features.row(t), &h)?.h;
        }
        Ok(h)
    }

    /// Backpropagates one step; returns `(dh_prev, dx)`.
    fn backprop(&mut self, rec: &StepRecord<T>, dh: &[T]) -> (Vec<T>, Vec<T>) {
        let (nh, cols) = (self.hidden, self.hidden + self.input);
        let mut dh_prev: Vec<T> = (0..nh).map(|i| dh[i] * (T::one() - rec.z[i])).collect();
        let mut dz = vec![T::zero(); nh];
        let mut dac = vec![T::zero(); nh];
        for i in 0..nh {
            dz[i] = dh[i] * (rec.c[i] - rec.h_prev[i]) * rec.z[i] * (T::one() - rec.z[i]);
            dac[i] = dh[i] * rec.z[i] * (T::one() - rec.c[i] * rec.c[i]);
        }

        outer_acc(self.w_h.grad.data_mut(), cols, &dac, &rec.rhx);
        let mut drhx = vec![T::zero(); cols];
        gemv_t_acc(self.w_h.value.data(), cols, &dac, &mut drhx);
        let mut dar = vec![T::zero(); nh];
        for i in 0..nh {
            dh_prev[i] += drhx[i] * rec.r[i];
            dar[i] = drhx[i] * rec.h_prev[i] * rec.r[i] * (T::one() - rec.r[i]);
        }

        let mut dhx = vec![T::zero(); cols];
        dhx[nh..].copy_from_slice(&drhx[nh..]);
        outer_acc(self.w_r.grad.data_mut(), cols, &dar, &rec.hx);
        gemv_t_acc(self.w_r.value.data(), cols, &dar, &mut dhx);
        outer_acc(self.w_z.grad.data_mut(), cols, &dz, &rec.hx);
        gemv_t_acc(self.w_z.value.data(), cols, &dz, &mut dhx);

        for (a, &b) in dh_prev.iter_mut().zip(&dhx[..nh]) {
            *a += b;
        }
        (dh_prev, dhx[nh..].to_vec())
    }

    fn params(&self) -> Vec<&Param<T>> {
        let mut v = vec![&self.w_r, &self.w_z, &self.w_h];
        v.extend(self.w_o.as_ref());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = vec![&mut self.w_r, &mut self.w_z, &mut self.w_h];
        v.extend(self.w_o.as_mut());
        v
    }
}

/// A GRU run over a `time × features` sequence from a zero state; the
/// output is the final hidden state.
pub struct GruLayer<T> {
    pub cell: GruCell<T>,
    records: Option<Vec<StepRecord<T>>>,
}

impl<T: Scalar> GruLayer<T> {
    pub fn new(cell: GruCell<T>) -> Self {
        Self { cell, records: None }
    }
}

impl<T: Scalar> Layer<T> for GruLayer<T> {
    fn kind(&self) -> &'static str {
        "gru"
    }

    fn forward(&mut self, input: &Tensor<T>) -> Result<Tensor<T>> {
        let ni = self.cell.input;
        if input.shape().len() != 2 || input.cols() != ni || input.rows() == 0 {
            return Err(Error::shape("gru sequence", &[input.rows().max(1), ni], input.shape()));
        }
        let mut h = vec![T::zero(); self.cell.hidden];
        let mut records = Vec::with_capacity(input.rows());
        for t in 0..input.rows() {
            let (next, rec) = self.cell.record(input.row(t), &h);
            records.push(rec);
            h = next;
        }
        self.records = Some(records);
        Ok(Tensor::vector(h))
    }

    fn backward(&mut self, grad_out: &Tensor<T>) -> Result<Tensor<T>> {
        let records = self.records.take().ok_or(Error::NoForward("gru"))?;
        if grad_out.len() != self.cell.hidden {
            return Err(Error::shape("gru grad", &[self.cell.hidden], grad_out.shape()));
        }
        let ni = self.cell.input;
        let mut dx = Tensor::zeros(&[records.len(), ni]);
        let mut dh = grad_out.data().to_vec();
        for (t, rec) in records.iter().enumerate().rev() {
            let (dh_prev, dxt) = self.cell.backprop(rec, &dh);
            dx.row_mut(t).copy_from_slice(&dxt);
            dh = dh_prev;
        }
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param<T>> {
        self.cell.params()
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        self.cell.params_mut()
    }
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn zero_weights_halve_the_state() {
        let cell = GruCell::<f64>::zeros(2, 3);
        let p = [0.4, -0.8, 1.0];
        let s = cell.step(&[0.7, -2.0], &p).unwrap();
        assert_eq!(s.update, vec![0.5; 3]);
        assert_eq!(s.reset, vec![0.5; 3]);
        assert_eq!(s.candidate, vec![0.0; 3]);
        assert_eq!(s.h, vec![0.2, -0.4, 0.5]);
        let s = cell.step(&[0.7, -2.0], &[0.0; 3]).unwrap();
        assert_eq!(s.h, vec![0.0; 3]);
    }

    #[test]
    fn sequence_is_a_fold() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let cell = GruCell::<f64>::new("g", 2, 4, &mut rng);
        let xs = Tensor::from_fn(2, 2, |i, j| (i as f64 + 1.0) * if j == 0 { 0.3 } else { -0.6 });
        let one = cell
            .run(&Tensor::from_vec(&[1, 2], xs.row(0).to_vec()).unwrap())
            .unwrap();
        assert_eq!(one, cell.step(xs.row(0), &[0.0; 4]).unwrap().h);
        let two = cell.run(&xs).unwrap();
        let h1 = cell.step(xs.row(0), &[0.0; 4]).unwrap().h;
        assert_eq!(two, cell.step(xs.row(1), &h1).unwrap().h);
        let mut layer = GruLayer::new(cell);
        assert_eq!(layer.forward(&xs).unwrap().data(), two.as_slice());
    }

    #[test]
    fn zero_weights_zero_state_any_features() {
        let cell = GruCell::<f64>::zeros(3, 5);
        let xs = Tensor::from_fn(7, 3, |i, j| (i * j) as f64 - 4.0);
        assert_eq!(cell.run(&xs).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn output_gate_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cell = GruCell::<f64>::new("g", 1, 3, &mut rng).with_output("g", 2, &mut rng);
        let s = cell.step(&[3.0], &[0.1, 0.2, 0.3]).unwrap();
        let y = s.y.unwrap();
        assert_eq!(y.len(), 2);
        assert!(y.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn shape_errors() {
        let cell = GruCell::<f64>::zeros(2, 3);
        assert!(cell.step(&[1.0], &[0.0; 3]).is_err());
        assert!(cell.step(&[1.0, 2.0], &[0.0; 2]).is_err());
        let mut layer = GruLayer::new(cell);
        assert!(matches!(layer.backward(&Tensor::zeros(&[3])), Err(Error::NoForward(_))));
    }
}
