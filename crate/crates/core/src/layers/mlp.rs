use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::{sigmoid, Scalar};

use super::TowerParams;

/// Hidden-layer nonlinearity. The output layer is always linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Sigmoid,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => z.max(T::zero()),
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// dσ/dz evaluated at pre-activation `z`.
    #[inline]
    pub fn derivative<T: Scalar>(self, z: T) -> T {
        match self {
            Activation::Relu => {
                if z > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (T::one() - s)
            }
            Activation::Tanh => {
                let t = z.tanh();
                T::one() - t * t
            }
            Activation::Identity => T::one(),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "identity" | "linear" => Ok(Activation::Identity),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

/// Layer widths `n₀..n_k` and the hidden activation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_sizes: Vec<usize>,
    pub activation: Activation,
}

impl MlpSpec {
    pub fn new(layer_sizes: Vec<usize>, activation: Activation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::invalid("an MLP needs at least one layer (two widths)"));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::invalid("MLP widths must be positive"));
        }
        Ok(Self {
            layer_sizes,
            activation,
        })
    }

    pub fn depth(&self) -> usize {
        self.layer_sizes.len() - 1
    }
}

/// Values saved by [`mlp_forward`] for the backward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpCache<T> {
    pub input: Vec<T>,
    /// Pre-activation `z_l` for every layer, output layer included.
    pub pre_activations: Vec<Vec<T>>,
    /// `σ(z_l)` for hidden layers only.
    pub hidden: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads<T> {
    pub input: Vec<T>,
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Matrix<T>>,
}

pub fn mlp_forward<T: Scalar>(x: &[T], tower: &TowerParams<T>) -> Result<(Vec<T>, MlpCache<T>)> {
    let depth = tower.weights.len();
    let mut pre_activations = Vec::with_capacity(depth);
    let mut hidden = Vec::with_capacity(depth.saturating_sub(1));
    let mut current: Vec<T> = x.to_vec();
    for (l, (w, b)) in tower.weights.iter().zip(&tower.biases).enumerate() {
        if w.cols() != current.len() {
            return Err(Error::shape(format!(
                "layer {l} expects width {} but got {}",
                w.cols(),
                current.len()
            )));
        }
        let mut z = w.matvec(&current);
        for (zi, &bi) in z.iter_mut().zip(b.as_slice()) {
            *zi = *zi + bi;
        }
        if l + 1 < depth {
            let a: Vec<T> = z.iter().map(|&v| tower.activation.apply(v)).collect();
            pre_activations.push(z);
            hidden.push(a.clone());
            current = a;
        } else {
            current = z.clone();
            pre_activations.push(z);
        }
    }
    let cache = MlpCache {
        input: x.to_vec(),
        pre_activations,
        hidden,
    };
    Ok((current, cache))
}

pub fn mlp_backward<T: Scalar>(
    tower: &TowerParams<T>,
    cache: &MlpCache<T>,
    upstream: &[T],
) -> Result<MlpGrads<T>> {
    let depth = tower.weights.len();
    if cache.pre_activations.len() != depth || cache.hidden.len() != depth.saturating_sub(1) {
        return Err(Error::Contract(format!(
            "cache has {} layers, tower has {depth}",
            cache.pre_activations.len()
        )));
    }
    if depth == 0 {
        if upstream.len() != cache.input.len() {
            return Err(Error::Contract("upstream width does not match cached input".into()));
        }
        return Ok(MlpGrads {
            input: upstream.to_vec(),
            weights: vec![],
            biases: vec![],
        });
    }
    for (l, (w, z)) in tower.weights.iter().zip(&cache.pre_activations).enumerate() {
        let expected_in = if l == 0 {
            cache.input.len()
        } else {
            cache.hidden[l - 1].len()
        };
        if w.rows() != z.len() || w.cols() != expected_in {
            return Err(Error::Contract(format!("cache does not match layer {l} shape")));
        }
    }
    if upstream.len() != tower.weights[depth - 1].rows() {
        return Err(Error::Contract("upstream width does not match output layer".into()));
    }

    let mut weights: Vec<Matrix<T>> = tower
        .weights
        .iter()
        .map(|w| Matrix::zeros(w.rows(), w.cols()))
        .collect();
    let mut biases: Vec<Matrix<T>> = tower
        .biases
        .iter()
        .map(|b| Matrix::zeros(b.rows(), b.cols()))
        .collect();

    let mut grad = upstream.to_vec();
    for l in (0..depth).rev() {
        let layer_input = if l == 0 {
            &cache.input
        } else {
            &cache.hidden[l - 1]
        };
        weights[l].add_outer(&grad, layer_input);
        biases[l].as_mut_slice().copy_from_slice(&grad);
        let mut below = tower.weights[l].matvec_transposed(&grad);
        if l > 0 {
            for (g, &z) in below.iter_mut().zip(&cache.pre_activations[l - 1]) {
                *g = *g * tower.activation.derivative(z);
            }
        }
        grad = below;
    }
    Ok(MlpGrads {
        input: grad,
        weights,
        biases,
    })
}
