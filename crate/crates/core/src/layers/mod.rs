//! Building blocks shared by every tower: numeric feature transforms,
//! embedding lookups and a fully connected MLP with exact backprop.

mod embedding;
mod mlp;
mod tower;
mod transform;

pub use embedding::{embed_lookup, embed_lookup_batch, SparseLookup, SparseRows};
pub use mlp::{mlp_backward, mlp_forward, Activation, MlpCache, MlpGrads, MlpSpec};
pub use tower::{TowerCache, TowerGrads, TowerParams, EMBEDDING_INIT_BOUND};
pub use transform::{transform_numeric, NumericTransform};
