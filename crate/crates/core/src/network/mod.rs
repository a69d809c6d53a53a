//! Model assembly from a layer list, softmax loss, SGD training and
//! finite-difference gradient checks.

pub mod gradcheck;
pub mod loss;
pub mod model;
pub mod spec;
pub mod train;

pub use gradcheck::{central_difference, finite_diff_check, GradCheckReport};
pub use loss::{argmax, softmax_cross_entropy};
pub use model::{Cache, Gradients, Layer, LayerParams, Mode, Model, Strategy};
pub use spec::{presets, LayerKind, LayerSpec, ModelSpec, Plan, StrideWarning};
pub use train::{evaluate, predict_labels, rotation_consistency, train, EpochRecord, TrainConfig};
