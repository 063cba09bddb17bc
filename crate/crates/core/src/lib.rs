//! Desk-scale multimodal lyric transcription.
//!
//! This crate contains the full algorithmic stack for transcribing sung text
//! from synchronized audio, lip-region video, and head-worn IMU signals:
//!
//! * [`tensor`] / [`ops`] — a small dense `f64` tensor with hand-paired
//!   forward/backward kernels (matmul, conv, GRU, attention, normalization).
//! * [`encoder`] — per-modality encoders: a convolutional audio frontend with
//!   transformer blocks, a linear video embedder with transformer blocks, and
//!   a convolutional-recurrent IMU encoder that doubles as the voice-activity
//!   detector backbone.
//! * [`fusion`] — temporal alignment of the three feature streams and the
//!   residual cross-attention block that mixes them.
//! * [`backend`] — the character vocabulary, the CTC loss, and the
//!   attention-based sequence-to-sequence decoder trained jointly with it.
//! * [`decode`] — greedy and beam decoding, including label-synchronous CTC
//!   prefix scoring, an n-gram language model, and a brute-force reference
//!   decoder used to validate the beam.
//! * [`data`] — synthetic dataset generation, SNR-controlled noise mixing,
//!   time masking, VAD labeling, and the annotated-transcript notation.
//! * [`metrics`] — edit-distance alignment, WER/CER, and VAD accuracy/F1.
//! * [`model`] / [`train`] — the assembled network and its training loops.
//!
//! Everything is deterministic given a seed: random draws go through the
//! counter-based [`rng::SeededRng`], and all elementary math is routed
//! through `libm` so results are bit-identical across platforms. The crate
//! is `no_std` (with `alloc`); file formats and the CLI live in the
//! companion `canta-cli` crate.

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod backend;
pub mod data;
pub mod decode;
pub mod encoder;
pub mod error;
pub mod fusion;
pub mod gradcheck;
pub mod layers;
pub mod metrics;
pub mod model;
pub mod ops;
pub mod optim;
pub mod param;
pub mod rng;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
pub use tensor::Tensor;
