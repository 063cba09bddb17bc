//! Adam and AdamW with bias correction and per-group learning rates.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::param::{ParamGroup, ParamStore};
use crate::tensor::Tensor;

/// Which update rule to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimKind {
    /// Adam; `weight_decay` is ignored.
    Adam,
    /// AdamW: decoupled weight decay applied directly to the parameter
    /// before the Adam update term.
    AdamW,
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct OptimConfig {
    pub kind: OptimKind,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        OptimConfig { kind: OptimKind::Adam, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.0 }
    }
}

/// First/second moment estimates, one pair per parameter, plus the step
/// counter used for bias correction.
#[derive(Debug, Clone)]
pub struct OptimState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: u64,
}

impl OptimState {
    /// Zero-initialized state aligned with the store's parameter list.
    pub fn new(store: &ParamStore) -> Self {
        let m = store.iter().map(|p| Tensor::zeros(p.value.shape().to_vec())).collect::<Vec<_>>();
        let v = m.clone();
        OptimState { m, v, step: 0 }
    }

    /// Step counter (number of optimizer updates applied).
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Moment tensors in parameter order, for checkpointing.
    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.m, &self.v)
    }

    /// Rebuilds state from checkpointed moments.
    pub fn from_parts(m: Vec<Tensor>, v: Vec<Tensor>, step: u64) -> Result<Self> {
        if m.len() != v.len() {
            return Err(Error::config("optimizer moment lists must have equal length"));
        }
        Ok(OptimState { m, v, step })
    }
}

/// One optimizer update over every parameter, with a uniform learning rate.
pub fn optimizer_step(
    store: &mut ParamStore,
    state: &mut OptimState,
    cfg: &OptimConfig,
    lr: f64,
) -> Result<()> {
    optimizer_step_grouped(store, state, cfg, &|_| lr)
}

/// One optimizer update where the learning rate depends on the parameter's
/// group (e.g. a small fine-tuning rate for pretrained encoders).
pub fn optimizer_step_grouped(
    store: &mut ParamStore,
    state: &mut OptimState,
    cfg: &OptimConfig,
    lr_of: &dyn Fn(ParamGroup) -> f64,
) -> Result<()> {
    if state.m.len() != store.len() {
        return Err(Error::config("optimizer state does not match parameter store"));
    }
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - libm::pow(cfg.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t as f64);
    for (idx, p) in store.iter_mut().enumerate() {
        let lr = lr_of(p.group);
        let m = state.m[idx].data_mut();
        let v = state.v[idx].data_mut();
        let value = p.value.data_mut();
        let grad = p.grad.data();
        for i in 0..value.len() {
            if cfg.kind == OptimKind::AdamW && cfg.weight_decay != 0.0 {
                value[i] -= lr * cfg.weight_decay * value[i];
            }
            let g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let mhat = m[i] / bc1;
            let vhat = v[i] / bc2;
            value[i] -= lr * mhat / (libm::sqrt(vhat) + cfg.eps);
        }
    }
    Ok(())
}
