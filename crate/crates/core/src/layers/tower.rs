use crate::error::{Error, Result};
use crate::numerics::{init_matrix, InitScheme, Matrix, RngSeed};
use crate::scalar::Scalar;

use super::embedding::{embed_lookup, SparseLookup, SparseRows};
use super::mlp::{mlp_backward, mlp_forward, Activation, MlpCache, MlpSpec};

/// Embedding bound used when a tower is initialized.
pub const EMBEDDING_INIT_BOUND: f64 = 0.05;

/// One tower: an embedding table followed by an MLP. With no MLP layers the
/// representation is the embedding row itself.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerParams<T> {
    pub embedding: Matrix<T>,
    pub weights: Vec<Matrix<T>>,
    /// Column vectors, one per layer.
    pub biases: Vec<Matrix<T>>,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TowerCache<T> {
    lookup: SparseLookup<T>,
    mlp: MlpCache<T>,
}

impl<T> TowerCache<T> {
    pub fn mlp(&self) -> &MlpCache<T> {
        &self.mlp
    }
}

/// Gradients for one tower; embedding rows are kept sparse.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerGrads<T> {
    pub embedding: SparseRows<T>,
    pub weights: Vec<Matrix<T>>,
    pub biases: Vec<Matrix<T>>,
}

impl<T: Scalar> TowerGrads<T> {
    pub fn zeros_like(tower: &TowerParams<T>) -> Self {
        let zeros = |ms: &[Matrix<T>]| ms.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect();
        Self {
            embedding: SparseRows::new(),
            weights: zeros(&tower.weights),
            biases: zeros(&tower.biases),
        }
    }

    /// Dense gradients in [`TowerParams::matrices`] order.
    pub fn to_dense(&self, tower: &TowerParams<T>) -> Vec<Matrix<T>> {
        let mut out = Vec::with_capacity(1 + 2 * self.weights.len());
        out.push(
            self.embedding
                .to_dense(tower.embedding.rows(), tower.embedding.cols()),
        );
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.clone());
            out.push(b.clone());
        }
        out
    }
}

impl<T: Scalar> TowerParams<T> {
    pub fn from_parts(
        embedding: Matrix<T>,
        weights: Vec<Matrix<T>>,
        biases: Vec<Matrix<T>>,
        activation: Activation,
    ) -> Result<Self> {
        if weights.len() != biases.len() {
            return Err(Error::shape("one bias per MLP layer"));
        }
        for (l, (w, b)) in weights.iter().zip(&biases).enumerate() {
            if b.shape() != (w.rows(), 1) {
                return Err(Error::shape(format!("bias {l} must be {}x1", w.rows())));
            }
            if l > 0 && weights[l - 1].rows() != w.cols() {
                return Err(Error::shape(format!("layer {l} input width mismatch")));
            }
        }
        Ok(Self {
            embedding,
            weights,
            biases,
            activation,
        })
    }

    /// Fresh tower: uniform embeddings, xavier weights, zero biases.
    ///
    /// `mlp.layer_sizes[0]` is `dim` plus the number of numeric features.
    /// Pass `None` for an embedding-only tower.
    pub fn init(rows: usize, dim: usize, mlp: Option<&MlpSpec>, seed: RngSeed) -> Result<Self> {
        let embedding = init_matrix(
            rows,
            dim,
            InitScheme::Uniform(EMBEDDING_INIT_BOUND),
            seed.derive("embedding"),
        )?;
        let (mut weights, mut biases) = (Vec::new(), Vec::new());
        let mut activation = Activation::default();
        if let Some(spec) = mlp {
            if spec.layer_sizes[0] < dim {
                return Err(Error::shape(format!(
                    "MLP input width {} is narrower than embedding dim {dim}",
                    spec.layer_sizes[0]
                )));
            }
            activation = spec.activation;
            for (l, pair) in spec.layer_sizes.windows(2).enumerate() {
                let (n_in, n_out) = (pair[0], pair[1]);
                weights.push(init_matrix(
                    n_out,
                    n_in,
                    InitScheme::Xavier,
                    seed.derive_indexed("weight", l as u64),
                )?);
                biases.push(Matrix::zeros(n_out, 1));
            }
        }
        Self::from_parts(embedding, weights, biases, activation)
    }

    pub fn rows(&self) -> usize {
        self.embedding.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.last().map_or(self.embedding.cols(), Matrix::rows)
    }

    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn forward(&self, lookup: &SparseLookup<T>) -> Result<(Vec<T>, TowerCache<T>)> {
        self.forward_with_numeric(lookup, &[])
    }

    /// Forward pass with already-transformed numeric features appended to
    /// the embedded vector. The first MLP layer must be `dim + numeric.len()`
    /// wide.
    pub fn forward_with_numeric(
        &self,
        lookup: &SparseLookup<T>,
        numeric: &[T],
    ) -> Result<(Vec<T>, TowerCache<T>)> {
        let mut x = embed_lookup(lookup, &self.embedding)?;
        x.extend_from_slice(numeric);
        let (y, mlp) = mlp_forward(&x, self)?;
        Ok((
            y,
            TowerCache {
                lookup: lookup.clone(),
                mlp,
            },
        ))
    }

    pub fn forward_id(&self, id: usize) -> Result<(Vec<T>, TowerCache<T>)> {
        self.forward(&SparseLookup::one_hot(id))
    }

    /// Representation for one id, without keeping a cache.
    pub fn represent(&self, id: usize) -> Result<Vec<T>> {
        Ok(self.forward_id(id)?.0)
    }

    /// Accumulates the gradient of `upstream · output` into `grads`.
    pub fn backward(
        &self,
        cache: &TowerCache<T>,
        upstream: &[T],
        grads: &mut TowerGrads<T>,
    ) -> Result<()> {
        let g = mlp_backward(self, &cache.mlp, upstream)?;
        for (acc, w) in grads.weights.iter_mut().zip(&g.weights) {
            acc.add_scaled(w, T::one())?;
        }
        for (acc, b) in grads.biases.iter_mut().zip(&g.biases) {
            acc.add_scaled(b, T::one())?;
        }
        let dim = self.embedding.cols();
        grads.embedding.add_lookup(&cache.lookup, &g.input[..dim]);
        Ok(())
    }

    /// Every parameter matrix: embedding, then `(W_l, b_l)` per layer.
    pub fn matrices(&self) -> Vec<&Matrix<T>> {
        let mut out = vec![&self.embedding];
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w);
            out.push(b);
        }
        out
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Matrix<T>> {
        let mut out = vec![&mut self.embedding];
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }

    /// Names aligned with [`Self::matrices`].
    pub fn matrix_names(&self) -> Vec<String> {
        let mut out = vec!["embedding".to_string()];
        for l in 0..self.weights.len() {
            out.push(format!("w{l}"));
            out.push(format!("b{l}"));
        }
        out
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        let (a, b) = (self.matrices(), other.matrices());
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.same_shape(y))
    }
}
