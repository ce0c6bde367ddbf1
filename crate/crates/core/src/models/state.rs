use crate::error::{Error, Result};
use crate::layers::{MlpSpec, TowerParams};
use crate::numerics::{Matrix, OptimizerState, RngSeed};
use crate::scalar::Scalar;

use super::{Hyperparams, ModelKind};

/// Full parameter set of one model plus its optimizer state.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelState<T> {
    pub kind: ModelKind,
    pub hyper: Hyperparams,
    pub user_tower: TowerParams<T>,
    pub item_vanilla: TowerParams<T>,
    /// EMA copy of the vanilla item tower (MP2 only). Never optimized.
    pub item_momentum: Option<TowerParams<T>>,
    /// Second gradient-trained item tower (three-tower baseline only).
    pub item_pointwise: Option<TowerParams<T>>,
    /// One state per matrix of each trainable tower, in
    /// [`ModelState::trainable_towers`] order.
    pub(crate) optimizers: Vec<Vec<OptimizerState<T>>>,
}

impl<T: Scalar> ModelState<T> {
    pub fn new(kind: ModelKind, hyper: Hyperparams, n_users: usize, n_items: usize) -> Result<Self> {
        hyper.validate()?;
        if n_users == 0 || n_items == 0 {
            return Err(Error::invalid("model needs at least one user and one item"));
        }
        let dim = hyper.embedding_dim;
        let spec = if kind.has_mlp() && !hyper.mlp_layers.is_empty() {
            let mut sizes = vec![dim];
            sizes.extend_from_slice(&hyper.mlp_layers);
            Some(MlpSpec::new(sizes, hyper.activation)?)
        } else {
            None
        };
        let seed = RngSeed(hyper.seed).derive("init");
        let user_tower = TowerParams::init(n_users, dim, spec.as_ref(), seed.derive("user"))?;
        let item_vanilla = TowerParams::init(n_items, dim, spec.as_ref(), seed.derive("item"))?;
        let (item_momentum, item_pointwise) = match kind {
            ModelKind::Mp2 => (Some(item_vanilla.clone()), None),
            ModelKind::ThreeTower => (None, Some(item_vanilla.clone())),
            _ => (None, None),
        };
        let mut model = Self {
            kind,
            hyper,
            user_tower,
            item_vanilla,
            item_momentum,
            item_pointwise,
            optimizers: vec![],
        };
        model.reset_optimizers()?;
        Ok(model)
    }

    /// Fresh optimizer state for every trainable matrix.
    pub fn reset_optimizers(&mut self) -> Result<()> {
        let lr = T::lit(self.hyper.learning_rate);
        let kind = self.hyper.optimizer;
        self.optimizers = self
            .trainable_towers()
            .iter()
            .map(|t| {
                t.matrices()
                    .into_iter()
                    .map(|m| OptimizerState::new(kind, lr, m.rows(), m.cols()))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        Ok(())
    }

    pub fn n_users(&self) -> usize {
        self.user_tower.rows()
    }

    pub fn n_items(&self) -> usize {
        self.item_vanilla.rows()
    }

    /// Item tower read by the pointwise logits.
    pub fn pointwise_item_tower(&self) -> &TowerParams<T> {
        self.item_momentum
            .as_ref()
            .or(self.item_pointwise.as_ref())
            .unwrap_or(&self.item_vanilla)
    }

    /// Towers that receive gradients: user, vanilla item, and the second item
    /// tower of the three-tower baseline.
    pub fn trainable_towers(&self) -> Vec<&TowerParams<T>> {
        let mut out = vec![&self.user_tower, &self.item_vanilla];
        if let Some(t) = &self.item_pointwise {
            out.push(t);
        }
        out
    }

    pub fn trainable_towers_mut(&mut self) -> Vec<&mut TowerParams<T>> {
        let mut out = vec![&mut self.user_tower, &mut self.item_vanilla];
        if let Some(t) = self.item_pointwise.as_mut() {
            out.push(t);
        }
        out
    }

    pub fn trainable_tower_names(&self) -> Vec<&'static str> {
        let mut out = vec!["user", "item"];
        if self.item_pointwise.is_some() {
            out.push("item_pointwise");
        }
        out
    }

    /// Every gradient-trained matrix with a qualified name.
    pub fn trainable_params(&self) -> Vec<(String, &Matrix<T>)> {
        self.trainable_towers()
            .into_iter()
            .zip(self.trainable_tower_names())
            .flat_map(|(t, tn)| {
                t.matrix_names()
                    .into_iter()
                    .zip(t.matrices())
                    .map(move |(mn, m)| (format!("{tn}.{mn}"), m))
            })
            .collect()
    }

    pub fn trainable_params_mut(&mut self) -> Vec<&mut Matrix<T>> {
        self.trainable_towers_mut()
            .into_iter()
            .flat_map(|t| t.matrices_mut())
            .collect()
    }

    pub fn optimizer_states(&self) -> &[Vec<OptimizerState<T>>] {
        &self.optimizers
    }

    pub fn user_representation(&self, user: usize) -> Result<Vec<T>> {
        self.user_tower.represent(user)
    }

    /// Vanilla-path item representation, the one used for ranking.
    pub fn item_representation(&self, item: usize) -> Result<Vec<T>> {
        self.item_vanilla.represent(item)
    }
}
