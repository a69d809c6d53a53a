//! Rotation-equivariant convolutional layers that rotate filters rather than
//! feature maps.
//!
//! A network built from one [`eqlayers::CycleParams`] layer, any number of
//! [`eqlayers::IsotonicParams`] layers and one [`eqlayers::DecycleParams`]
//! layer (or a cross-channel pool) maps a quarter-turn of its input to a
//! quarter-turn of its output. A final global average pool turns that into
//! exact rotation invariance of the logits.
//!
//! Modules:
//!
//! - [`tensor`]: `(n, c, h, w)` storage, rotation and cyclic channel shift
//! - [`conv`]: im2col/GEMM correlation, its adjoint, pooling, stride rule
//! - [`eqlayers`]: the tied layers plus group-aware bias/norm/pool layers
//! - [`oracle`]: the same layers computed by rotating feature maps
//! - [`network`]: model assembly, loss, SGD training, gradient checks
//! - [`data`]: IDX files, rotation augmentation, synthetic glyphs
//! - [`bench`]: memory cost model and forward-pass timing

pub mod bench;
pub mod conv;
pub mod data;
pub mod eqlayers;
pub mod error;
pub mod network;
pub mod oracle;
pub mod scalar;
pub mod tensor;

pub use conv::{correlate2d, correlate2d_backward, stride_preserves_equivariance, ConvGeometry};
pub use eqlayers::{CycleParams, DecycleParams, EquivariantParams, IsotonicParams, TiedFilter};
pub use error::{DrenError, Result};
pub use scalar::Scalar;
pub use tensor::{Filter4, GroupLayout, Tensor4};
