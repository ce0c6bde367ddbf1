//! The six model variants behind one training and scoring interface.
//!
//! | kind                | towers                        | loss                              |
//! |---------------------|-------------------------------|-----------------------------------|
//! | `PointwiseTwoTower` | user, item                    | pointwise CE                      |
//! | `BprMf`             | user, item (embeddings only)  | pairwise logistic                 |
//! | `PairwiseTwoTower`  | user, item                    | pairwise logistic                 |
//! | `ApplTwoTower`      | user, item                    | pointwise + β·pairwise            |
//! | `ThreeTower`        | user, item, item (both SGD)   | pointwise + β·pairwise            |
//! | `Mp2`               | user, item, item (EMA copy)   | weighted pointwise + β·pairwise   |
//!
//! In the three-tower kinds the pointwise logits read the second item tower
//! and the pairwise logit reads the vanilla item tower.

mod checkpoint;
mod forward;
mod momentum;
mod state;
mod train;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::layers::Activation;
use crate::numerics::OptimizerKind;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use forward::{discrepancy, label_weight, score, SampleWeight, TripletForward};
pub use momentum::momentum_update;
pub use state::ModelState;
pub use train::ModelGradients;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// NeuMF-lite: two towers, pointwise cross-entropy.
    PointwiseTwoTower,
    /// Matrix factorization with the pairwise logistic (BPR) loss.
    BprMf,
    /// RankNet-style two towers with the pairwise logistic loss.
    PairwiseTwoTower,
    /// APPL-style joint pointwise + pairwise on two towers.
    ApplTwoTower,
    /// Three towers, both item towers gradient-trained, uniform weights.
    ThreeTower,
    /// Three towers with an EMA item tower and discrepancy label weights.
    Mp2,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::PointwiseTwoTower,
        ModelKind::BprMf,
        ModelKind::PairwiseTwoTower,
        ModelKind::ApplTwoTower,
        ModelKind::ThreeTower,
        ModelKind::Mp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PointwiseTwoTower => "neumf-lite",
            ModelKind::BprMf => "bpr",
            ModelKind::PairwiseTwoTower => "ranknet-nn",
            ModelKind::ApplTwoTower => "appl",
            ModelKind::ThreeTower => "t3",
            ModelKind::Mp2 => "mp2",
        }
    }

    pub fn uses_pointwise(self) -> bool {
        !matches!(self, ModelKind::BprMf | ModelKind::PairwiseTwoTower)
    }

    pub fn uses_pairwise(self) -> bool {
        self != ModelKind::PointwiseTwoTower
    }

    pub fn has_mlp(self) -> bool {
        self != ModelKind::BprMf
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .or(match norm.as_str() {
                "neumf" | "pointwise-two-tower" => Some(ModelKind::PointwiseTwoTower),
                "bpr-mf" => Some(ModelKind::BprMf),
                "ranknet" | "pairwise-two-tower" => Some(ModelKind::PairwiseTwoTower),
                "three-tower" => Some(ModelKind::ThreeTower),
                _ => None,
            })
            .ok_or_else(|| Error::invalid(format!("unknown model kind `{s}`")))
    }
}

/// How discrepancies become pointwise label weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum WeightingMode {
    /// One weight `exp(-(δ̄_j + δ̄_t))` shared by both items.
    #[default]
    Joint,
    /// `exp(-δ̄_j)` and `exp(-δ̄_t)` per item.
    Separate,
    /// Always 1.
    Uniform,
}

impl fmt::Display for WeightingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingMode::Joint => "joint",
            WeightingMode::Separate => "separate",
            WeightingMode::Uniform => "uniform",
        })
    }
}

impl FromStr for WeightingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "joint" => Ok(WeightingMode::Joint),
            "separate" => Ok(WeightingMode::Separate),
            "uniform" => Ok(WeightingMode::Uniform),
            other => Err(Error::invalid(format!("unknown weighting mode `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hyperparams {
    /// EMA coefficient for the momentum tower.
    pub alpha: f64,
    /// Weight of the pairwise term.
    pub beta: f64,
    /// L2 coefficient.
    pub lambda: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub embedding_dim: usize,
    /// Output width of each MLP layer; the input width is `embedding_dim`.
    /// Empty means embedding-only towers.
    pub mlp_layers: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub weighting: WeightingMode,
    /// Permits `alpha = 1`, which freezes the momentum tower.
    pub allow_degenerate_alpha: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            alpha: 0.999,
            beta: 1.0,
            lambda: 0.0,
            learning_rate: 1e-3,
            optimizer: OptimizerKind::Adam,
            embedding_dim: 32,
            mlp_layers: vec![32],
            activation: Activation::Relu,
            batch_size: 256,
            epochs: 20,
            seed: 1,
            weighting: WeightingMode::Joint,
            allow_degenerate_alpha: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let finite_nonneg = |name: &str, x: f64| {
            if x.is_finite() && x >= 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} must be finite and >= 0, got {x}")))
            }
        };
        if !(0.0..1.0).contains(&self.alpha) {
            let degenerate_ok = self.alpha == 1.0 && self.allow_degenerate_alpha;
            if !degenerate_ok {
                return Err(Error::invalid(format!(
                    "alpha must be in [0, 1) (alpha = 1 needs the degenerate flag), got {}",
                    self.alpha
                )));
            }
        }
        finite_nonneg("beta", self.beta)?;
        finite_nonneg("lambda", self.lambda)?;
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.embedding_dim == 0 {
            return Err(Error::invalid("embedding_dim must be >= 1"));
        }
        if self.mlp_layers.contains(&0) {
            return Err(Error::invalid("MLP widths must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        Ok(())
    }

    /// `key=value` pairs in a fixed order, values formatted to round-trip.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("alpha", self.alpha.to_string()),
            ("beta", self.beta.to_string()),
            ("lambda", self.lambda.to_string()),
            ("learning_rate", self.learning_rate.to_string()),
            ("optimizer", self.optimizer.to_string()),
            ("embedding_dim", self.embedding_dim.to_string()),
            ("mlp_layers", join_widths(&self.mlp_layers)),
            ("activation", self.activation.to_string()),
            ("batch_size", self.batch_size.to_string()),
            ("epochs", self.epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("weighting", self.weighting.to_string()),
            ("allow_degenerate_alpha", self.allow_degenerate_alpha.to_string()),
        ]
    }

    /// Sets one field from its textual form. Returns `Ok(false)` for keys
    /// that are not hyperparameters.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        fn num<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad value `{value}` for `{key}`")))
        }
        match key {
            "alpha" => self.alpha = num(key, value)?,
            "beta" => self.beta = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "learning_rate" | "lr" => self.learning_rate = num(key, value)?,
            "optimizer" => self.optimizer = value.trim().parse()?,
            "embedding_dim" | "dim" => self.embedding_dim = num(key, value)?,
            "mlp_layers" => self.mlp_layers = parse_widths(value)?,
            "activation" => self.activation = value.trim().parse()?,
            "batch_size" => self.batch_size = num(key, value)?,
            "epochs" => self.epochs = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "weighting" => self.weighting = value.parse()?,
            "allow_degenerate_alpha" => self.allow_degenerate_alpha = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    /// Compact one-line form, `;`-separated, for CSV cells.
    pub fn snapshot(&self) -> String {
        self.to_pairs()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";")
    }
}

fn join_widths(ws: &[usize]) -> String {
    ws.iter().map(usize::to_string).collect::<Vec<_>>().join("-")
}

fn parse_widths(value: &str) -> Result<Vec<usize>> {
    let v = value.trim();
    if v.is_empty() || v == "none" {
        return Ok(vec![]);
    }
    v.split(['-', ' ', '/'])
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse()
                .map_err(|_| Error::invalid(format!("bad MLP width `{s}`")))
        })
        .collect()
}
