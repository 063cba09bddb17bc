//! Hand-paired forward/backward numeric kernels.
//!
//! There is no autodiff graph in this crate: every kernel exposes a forward
//! function returning whatever intermediate state its backward needs, and a
//! `*_bwd` companion mapping the output gradient back to input and parameter
//! gradients. Composite layers chain these by hand. All kernels are checked
//! against central finite differences in the gradient test suite.

pub mod act;
pub mod attention;
pub mod conv;
pub mod dropout;
pub mod gru;
pub mod linalg;
pub mod logmath;

pub use act::{
    activation, activation_bwd, layer_norm, layer_norm_bwd, log_softmax_rows,
    log_softmax_rows_bwd, softmax_rows, softmax_rows_bwd, Activation, LayerNormCache,
};
pub use attention::{mh_attention, mh_attention_bwd, AttnCache, AttnProj, AttnProjGrads};
pub use conv::{conv1d, conv1d_bwd, conv1d_out_len, maxpool1d, maxpool1d_bwd};
pub use dropout::{dropout, dropout_bwd};
pub use gru::{gru_seq, gru_seq_bwd, GruCache, GruGrads, GruWeights};
pub use linalg::{add_bias, add_bias_bwd, matmul, matmul_bwd};
pub use logmath::{log_add, logsumexp};
