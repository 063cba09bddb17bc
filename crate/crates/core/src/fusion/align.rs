//! Frame-grid alignment: upsampling, padding/truncation, and the inertial
//! feature projection.
//!
//! The audio stream defines the target grid. Video (40 ms frames) is
//! upsampled ×2 by frame repetition to 20 ms, video and inertial streams are
//! zero-padded or tail-truncated to the audio frame count, and inertial
//! features are mapped from width 120 to the model width by a learned affine
//! map with GELU. Every step has an exact backward counterpart so gradients
//! reach all three encoders.

use alloc::format;

use crate::encoder::{FeatureSequence, Modality, IMU_FEATURE_DIM};
use crate::error::{Error, Result};
use crate::layers::Linear;
use crate::ops::act::{activation, activation_bwd, Activation};
use crate::param::{ParamGroup, ParamStore};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

use super::AlignedTriple;

/// Repeats each frame `factor` times; the frame period shrinks accordingly.
pub fn upsample_repeat(f: &FeatureSequence, factor: usize) -> Result<FeatureSequence> {
    if factor < 1 {
        return Err(Error::config("upsampling factor must be at least 1"));
    }
    if factor == 1 {
        return Ok(f.clone());
    }
    let (t, d) = (f.len(), f.dim());
    let mut out = Tensor::zeros([t * factor, d]);
    for i in 0..t {
        for r in 0..factor {
            out.row_mut(i * factor + r).copy_from_slice(f.frames.row(i));
        }
    }
    FeatureSequence::new(out, f.frame_period_ms / factor as f64, f.modality)
}

/// Backward of [`upsample_repeat`]: sums the gradient over each group of
/// repeated frames.
pub fn upsample_repeat_bwd(dy: &Tensor, factor: usize) -> Result<Tensor> {
    if factor < 1 {
        return Err(Error::config("upsampling factor must be at least 1"));
    }
    if dy.rows() % factor != 0 {
        return Err(Error::shape(format!(
            "{} gradient rows are not a multiple of factor {factor}",
            dy.rows()
        )));
    }
    let (t, d) = (dy.rows() / factor, dy.cols());
    let mut dx = Tensor::zeros([t, d]);
    for i in 0..t {
        let dst = dx.row_mut(i);
        for r in 0..factor {
            for (acc, g) in dst.iter_mut().zip(dy.row(i * factor + r)) {
                *acc += g;
            }
        }
    }
    Ok(dx)
}

/// Zero-pads at the tail or drops tail frames to reach exactly `target_t`.
pub fn pad_or_truncate(f: &FeatureSequence, target_t: usize) -> Result<FeatureSequence> {
    if target_t < 1 {
        return Err(Error::config("target frame count must be at least 1"));
    }
    let (t, d) = (f.len(), f.dim());
    if t == target_t {
        return Ok(f.clone());
    }
    let mut out = Tensor::zeros([target_t, d]);
    for i in 0..t.min(target_t) {
        out.row_mut(i).copy_from_slice(f.frames.row(i));
    }
    FeatureSequence::new(out, f.frame_period_ms, f.modality)
}

/// Backward of [`pad_or_truncate`] for an input that originally had
/// `original_t` frames: padded rows drop their gradient, truncated rows get
/// zero gradient.
pub fn pad_or_truncate_bwd(dy: &Tensor, original_t: usize) -> Result<Tensor> {
    let d = dy.cols();
    let mut dx = Tensor::zeros([original_t, d]);
    for i in 0..original_t.min(dy.rows()) {
        dx.row_mut(i).copy_from_slice(dy.row(i));
    }
    Ok(dx)
}

/// Learned projection of inertial features from width 120 to the model
/// width: affine map followed by GELU.
#[derive(Debug, Clone)]
pub struct ImuProjector {
    pub lin: Linear,
}

impl ImuProjector {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(ImuProjector {
            lin: Linear::new(store, name, IMU_FEATURE_DIM, d_model, true, ParamGroup::Head, rng)?,
        })
    }

    /// `x: T×120` → `(T×D_model, pre-activation)`.
    pub fn forward(&self, store: &ParamStore, x: &Tensor) -> Result<(Tensor, Tensor)> {
        if x.cols() != IMU_FEATURE_DIM {
            return Err(Error::shape(format!(
                "inertial projection expects width {IMU_FEATURE_DIM}, got {}",
                x.cols()
            )));
        }
        let pre = self.lin.forward(store, x)?;
        Ok((activation(&pre, Activation::Gelu), pre))
    }

    /// Accumulates parameter gradients; returns the input gradient.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        x: &Tensor,
        pre: &Tensor,
        dy: &Tensor,
    ) -> Result<Tensor> {
        let dpre = activation_bwd(pre, Activation::Gelu, dy)?;
        self.lin.backward(store, x, &dpre)
    }
}

/// Alignment of the three encoder outputs onto the audio frame grid.
#[derive(Debug, Clone)]
pub struct Aligner {
    pub projector: ImuProjector,
}

/// Saved intermediates for [`Aligner::backward`].
#[derive(Debug, Clone)]
pub struct AlignerCache {
    /// Original video frame count (before upsampling).
    v_len: usize,
    /// Original inertial frame count.
    i_len: usize,
    /// Inertial features after pad/truncate, before projection (`T×120`).
    i_padded: Tensor,
    /// Projection pre-activation.
    i_pre: Tensor,
}

impl Aligner {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        d_model: usize,
        rng: &mut SeededRng,
    ) -> Result<Self> {
        Ok(Aligner { projector: ImuProjector::new(store, name, d_model, rng)? })
    }

    /// Aligns encoder outputs: video (40 ms) is upsampled ×2 and padded or
    /// truncated to the audio frame count, inertial features likewise, then
    /// projected to the model width.
    pub fn forward(
        &self,
        store: &ParamStore,
        f_a: &FeatureSequence,
        f_v: &FeatureSequence,
        f_i: &FeatureSequence,
    ) -> Result<(AlignedTriple, AlignerCache)> {
        for (name, f) in [("audio", f_a), ("video", f_v), ("inertial", f_i)] {
            if f.is_empty() {
                return Err(Error::shape(format!("cannot align an empty {name} sequence")));
            }
        }
        let half_rate = (f_v.frame_period_ms - 2.0 * f_a.frame_period_ms).abs() < 1e-9;
        if !half_rate {
            return Err(Error::config(format!(
                "video frame period must be twice audio's, got {} ms vs {} ms",
                f_v.frame_period_ms, f_a.frame_period_ms
            )));
        }
        if (f_i.frame_period_ms - f_a.frame_period_ms).abs() > 1e-9 {
            return Err(Error::config(format!(
                "inertial frame period must match audio's, got {} ms vs {} ms",
                f_i.frame_period_ms, f_a.frame_period_ms
            )));
        }
        let t_a = f_a.len();
        let v_up = upsample_repeat(f_v, 2)?;
        let v_aligned = pad_or_truncate(&v_up, t_a)?;
        let i_aligned = pad_or_truncate(f_i, t_a)?;
        let (i_proj, i_pre) = self.projector.forward(store, &i_aligned.frames)?;
        let triple = AlignedTriple::new(
            f_a.clone(),
            v_aligned,
            FeatureSequence::new(i_proj, f_a.frame_period_ms, Modality::Imu)?,
        )?;
        let cache = AlignerCache {
            v_len: f_v.len(),
            i_len: f_i.len(),
            i_padded: i_aligned.frames,
            i_pre,
        };
        Ok((triple, cache))
    }

    /// Routes gradients on the aligned triple back to the three encoder
    /// outputs; accumulates projector gradients.
    pub fn backward(
        &self,
        store: &mut ParamStore,
        cache: &AlignerCache,
        df_a: &Tensor,
        df_v: &Tensor,
        df_i: &Tensor,
    ) -> Result<(Tensor, Tensor, Tensor)> {
        let dv_up = pad_or_truncate_bwd(df_v, 2 * cache.v_len)?;
        let dv = upsample_repeat_bwd(&dv_up, 2)?;
        let di_padded = self.projector.backward(store, &cache.i_padded, &cache.i_pre, df_i)?;
        let di = pad_or_truncate_bwd(&di_padded, cache.i_len)?;
        Ok((df_a.clone(), dv, di))
    }
}
