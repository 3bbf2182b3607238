//! Minimal neural-network toolkit the reconstruction models are built on.
//!
//! Layers carry explicit `forward`/`backward` pairs instead of a taped
//! autodiff graph; models wire them together by hand and keep whatever
//! intermediate activations their backward pass needs. Convolutions lower to
//! im2col plus a matrix multiply. Everything is `f64` so finite-difference
//! gradient checks are meaningful.

mod conv;

pub use conv::{Conv2d, Conv2dGrad, Conv3d, Conv3dGrad};

use ndarray::{Array, ArrayD, ArrayViewD, ArrayViewMutD, Dimension, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Leaky rectifier; `slope = 0` is a plain ReLU.
pub fn leaky_relu<D: Dimension>(x: &Array<f64, D>, slope: f64) -> Array<f64, D> {
    x.mapv(|v| if v >= 0.0 { v } else { slope * v })
}

/// Gradient of [`leaky_relu`] given the pre-activation input.
pub fn leaky_relu_backward<D: Dimension>(pre: &Array<f64, D>, gout: &Array<f64, D>, slope: f64) -> Array<f64, D> {
    let mut gin = gout.clone();
    Zip::from(&mut gin).and(pre).for_each(|g, &p| {
        if p < 0.0 {
            *g *= slope;
        }
    });
    gin
}

/// He-normal initialization for a weight tensor with the given fan-in.
pub fn he_init<D: Dimension, R: Rng>(shape: D, fan_in: usize, rng: &mut R) -> Array<f64, D> {
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).unwrap();
    Array::from_shape_simple_fn(shape, || normal.sample(rng))
}

/// One parameter/gradient pair handed to the optimizer.
pub type ParamGrad<'a> = (ArrayViewMutD<'a, f64>, ArrayViewD<'a, f64>);

/// Adam with bias correction.
///
/// Parameters must be passed to [`Adam::step`] in the same order every call;
/// per-parameter moment state is matched by position.
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    moments: Vec<(ArrayD<f64>, ArrayD<f64>)>,
}

impl Adam {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self { lr, beta1, beta2, eps: 1e-8, t: 0, moments: Vec::new() }
    }

    /// Number of update steps taken so far.
    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: Vec<ParamGrad<'_>>) {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|(p, _)| (ArrayD::zeros(p.raw_dim()), ArrayD::zeros(p.raw_dim())))
                .collect();
        }
        assert_eq!(self.moments.len(), params.len(), "parameter list changed between optimizer steps");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for ((mut p, g), (m, v)) in params.into_iter().zip(self.moments.iter_mut()) {
            Zip::from(m.view_mut()).and(&g).for_each(|m, &g| *m = self.beta1 * *m + (1.0 - self.beta1) * g);
            Zip::from(v.view_mut()).and(&g).for_each(|v, &g| *v = self.beta2 * *v + (1.0 - self.beta2) * g * g);
            Zip::from(&mut p).and(&*m).and(&*v).for_each(|p, &m, &v| {
                *p -= self.lr * (m / bc1) / ((v / bc2).sqrt() + self.eps);
            });
        }
    }
}

/// FNV-1a hash of the raw bytes of a list of tensors, for cheap
/// frozen-parameter assertions.
pub fn param_checksum<'a>(tensors: impl IntoIterator<Item = ArrayViewD<'a, f64>>) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for t in tensors {
        for &v in t.iter() {
            for byte in v.to_le_bytes() {
                hash ^= byte as u64;
                hash = hash.wrapping_mul(0x100000001b3);
            }
        }
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, Array1};

    #[test]
    fn adam_descends_a_quadratic() {
        let mut x: Array1<f64> = arr1(&[5.0, -3.0]);
        let mut adam = Adam::new(0.1, 0.9, 0.999);
        for _ in 0..500 {
            let g = x.mapv(|v| 2.0 * v);
            adam.step(vec![(x.view_mut().into_dyn(), g.view().into_dyn())]);
        }
        assert!(x.iter().all(|v| v.abs() < 1e-3), "{:?}", x);
    }

    #[test]
    fn leaky_relu_gradient_matches_finite_differences() {
        let x = arr1(&[-1.5, -0.2, 0.3, 2.0]);
        let slope = 0.1;
        let gout = arr1(&[1.0, 1.0, 1.0, 1.0]);
        let analytic = leaky_relu_backward(&x, &gout, slope);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fd = (leaky_relu(&xp, slope).sum() - leaky_relu(&xm, slope).sum()) / (2.0 * h);
            assert!((analytic[i] - fd).abs() < 1e-6);
        }
    }

    #[test]
    fn checksum_changes_with_any_element ()  {
        let a = arr1(&[1.0, 2.0, 3.0]);
        let mut b = a.clone();
        b[1] += 1e-12;
        let ha = param_checksum([a.view().into_dyn()]);
        let hb = param_checksum([b.view().into_dyn()]);
        assert_ne!(ha, hb);
    }
}
