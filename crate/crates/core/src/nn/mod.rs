//! Minimal CPU tensor layers with explicit forward caches and hand-written
//! backward passes, in f64 throughout. Small enough to verify against
//! finite differences, fast enough for desk-scale training.

pub mod adam;
pub mod conv;
pub mod grads;
pub mod linear;
pub mod norm;
pub mod ops;
pub mod params;
pub mod pool;

pub use adam::Adam;
pub use conv::{Conv2d, Conv2dCache};
pub use grads::GradStore;
pub use linear::Linear;
pub use norm::{BatchNorm2d, BnCache};
pub use params::ParamVisit;
pub use ops::{relu, relu_backward, softmax_rows, tanh_backward, tanh_forward};
pub use pool::{avg_pool2, avg_pool2_backward, global_avg_pool, global_avg_pool_backward, max_pool, max_pool_backward, MaxPoolCache};
