//! Forward and backward stage arithmetic of a fully connected network.
//!
//! Data are row vectors. A forward stage computes `S = Y W` then
//! `Y_out = g(S)`; a backward stage updates the weights with the rank-one rule
//! `W_nw = W + eta * delta^T Y` and propagates `sigma = delta_next W_nw`, gated
//! elementwise by `g'(S)`.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{dim_err, Error, Result};
use crate::linalg::{vec_mat, ComplexMatrix, RealMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            // Subgradient 0 at the kink.
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    pub eta: f64,
}

impl LearningParams {
    pub fn new(eta: f64) -> Result<Self> {
        if !eta.is_finite() || eta < 0.0 {
            return Err(Error::Parameter(format!(
                "learning rate must be finite and non-negative, got {eta}"
            )));
        }
        Ok(Self { eta })
    }
}

impl Default for LearningParams {
    fn default() -> Self {
        Self { eta: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub weights: RealMatrix,
    pub activation: Activation,
    pub index: usize,
}

impl Stage {
    pub fn new(weights: RealMatrix, activation: Activation, index: usize) -> Result<Self> {
        if weights.rows() != weights.cols() {
            return Err(dim_err(
                "square weight matrix",
                format!("{}x{}", weights.rows(), weights.cols()),
            ));
        }
        Ok(Self {
            weights,
            activation,
            index,
        })
    }

    pub fn width(&self) -> usize {
        self.weights.rows()
    }

    /// Runs the stage and returns its state snapshot.
    pub fn forward(&self, y_in: &[f64]) -> Result<StageState> {
        let s = forward_linear(y_in, &self.weights)?;
        let y_out = apply_activation(&s, self.activation);
        Ok(StageState {
            y_in: y_in.to_vec(),
            s,
            y_out,
            combined: None,
        })
    }
}

/// One stage's input, linear output and activation output, plus the cached
/// combined parity matrix `W G` once it has been formed.
#[derive(Debug, Clone, PartialEq)]
pub struct StageState {
    pub y_in: Vec<f64>,
    pub s: Vec<f64>,
    pub y_out: Vec<f64>,
    pub combined: Option<ComplexMatrix>,
}

impl StageState {
    pub fn combined(&self) -> Result<&ComplexMatrix> {
        self.combined
            .as_ref()
            .ok_or(Error::State("the combined parity matrix"))
    }
}

/// `S = Y W`.
pub fn forward_linear(y: &[f64], w: &RealMatrix) -> Result<Vec<f64>> {
    vec_mat(y, w)
}

pub fn apply_activation(s: &[f64], g: Activation) -> Vec<f64> {
    s.iter().map(|&x| g.apply(x)).collect()
}

/// `tanh'(s) = 1 - tanh(s)^2`, componentwise.
pub fn activation_derivative(s: &[f64]) -> Vec<f64> {
    s.iter().map(|&x| Activation::Tanh.derivative(x)).collect()
}

/// `W_nw[j][i] = W[j][i] + eta * delta[j] * Y[i]`.
pub fn update_weights(
    w: &RealMatrix,
    params: LearningParams,
    delta: &[f64],
    y: &[f64],
) -> Result<RealMatrix> {
    let (rows, cols) = w.shape();
    if delta.len() != rows || y.len() != cols {
        return Err(dim_err(
            format!("delta of length {rows} and Y of length {cols}"),
            format!("{} and {}", delta.len(), y.len()),
        ));
    }
    let mut out = w.clone();
    for (j, &d) in delta.iter().enumerate() {
        let scale = params.eta * d;
        for (o, &yi) in out.row_mut(j).iter_mut().zip(y) {
            *o += scale * yi;
        }
    }
    Ok(out)
}

/// Linear part of a backward stage: `sigma = delta_next W_nw`.
pub fn backward_linear(delta_next: &[f64], w_nw: &RealMatrix) -> Result<Vec<f64>> {
    vec_mat(delta_next, w_nw)
}

/// Full backward output `delta_p = sigma * g'(S)` for the forward linear
/// output `s_forward` of the same stage index.
pub fn backward_output(sigma: &[f64], s_forward: &[f64], g: Activation) -> Result<Vec<f64>> {
    if sigma.len() != s_forward.len() {
        return Err(dim_err(sigma.len(), s_forward.len()));
    }
    Ok(sigma
        .iter()
        .zip(s_forward)
        .map(|(&a, &s)| a * g.derivative(s))
        .collect())
}

/// Input data uniform on (-1, 1).
pub fn random_input<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    let u = Uniform::new(-1.0, 1.0).expect("valid range");
    (0..len).map(|_| u.sample(rng)).collect()
}

/// Weights uniform on (-1/sqrt(K), 1/sqrt(K)).
pub fn random_weights<R: Rng + ?Sized>(width: usize, rng: &mut R) -> RealMatrix {
    let bound = 1.0 / (width as f64).sqrt();
    let u = Uniform::new(-bound, bound).expect("valid range");
    RealMatrix::from_fn(width, width, |_, _| u.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn forward_linear_small_cases() {
        assert_eq!(
            forward_linear(&[1.0, 0.0], &RealMatrix::identity(2)).unwrap(),
            vec![1.0, 0.0]
        );
        let perm = RealMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(forward_linear(&[1.0, 2.0], &perm).unwrap(), vec![2.0, 1.0]);
        assert!(forward_linear(&[1.0], &perm).is_err());
    }

    #[test]
    fn tanh_activation_values() {
        assert_eq!(
            apply_activation(&[0.0, 0.0], Activation::Tanh),
            vec![0.0, 0.0]
        );
        let y = apply_activation(&[0.5], Activation::Tanh);
        assert!((y[0] - 0.462_117_2).abs() < 1e-7);
        let y = apply_activation(&[10.0], Activation::Tanh);
        assert!((1.0 - y[0]).abs() < 1e-8);
        assert_eq!(
            apply_activation(&[-2.0, 3.0], Activation::Relu),
            vec![0.0, 3.0]
        );
    }

    #[test]
    fn derivative_at_origin_and_symmetry() {
        assert_eq!(activation_derivative(&[0.0]), vec![1.0]);
        let d = activation_derivative(&[0.7, -0.7]);
        assert_eq!(d[0], d[1]);
    }

    #[test]
    fn zero_rate_update_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_weights(5, &mut rng);
        let d = random_input(5, &mut rng);
        let y = random_input(5, &mut rng);
        let out = update_weights(&w, LearningParams::new(0.0).unwrap(), &d, &y).unwrap();
        assert_eq!(out, w);
    }

    #[test]
    fn update_indexing_by_hand() {
        let w = RealMatrix::zeros(2, 2);
        let out = update_weights(
            &w,
            LearningParams::new(0.5).unwrap(),
            &[1.0, 0.0],
            &[0.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            out,
            RealMatrix::from_rows(&[vec![0.0, 0.5], vec![0.0, 0.0]]).unwrap()
        );
    }

    #[test]
    fn bad_learning_rates() {
        assert!(LearningParams::new(-0.1).is_err());
        assert!(LearningParams::new(f64::NAN).is_err());
    }

    #[test]
    fn backward_small_cases() {
        let sigma = backward_linear(&[0.3, -0.2], &RealMatrix::identity(2)).unwrap();
        assert_eq!(sigma, vec![0.3, -0.2]);
        let zero = backward_linear(&[0.0, 0.0], &RealMatrix::identity(2)).unwrap();
        assert_eq!(zero, vec![0.0, 0.0]);
        let dp = backward_output(&zero, &[0.4, 2.0], Activation::Tanh).unwrap();
        assert_eq!(dp, vec![0.0, 0.0]);
    }

    #[test]
    fn non_square_stage_rejected() {
        assert!(Stage::new(RealMatrix::zeros(2, 3), Activation::Tanh, 0).is_err());
    }

    #[test]
    fn stage_state_without_cache() {
        let st = Stage::new(RealMatrix::identity(2), Activation::Tanh, 1)
            .unwrap()
            .forward(&[0.1, 0.2])
            .unwrap();
        assert!(matches!(st.combined(), Err(Error::State(_))));
        assert_eq!(st.s, vec![0.1, 0.2]);
    }
}
