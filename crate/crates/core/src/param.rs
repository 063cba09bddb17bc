//! Named parameter storage shared by the whole network.
//!
//! Layers register their tensors in a [`ParamStore`] at construction time
//! and hold on to [`ParamId`] handles; forward passes read values through
//! the store and backward passes accumulate into the paired gradient
//! buffers. Names are unique, stable, and used as checkpoint keys. Every
//! parameter carries a [`ParamGroup`] so the optimizer can apply different
//! learning rates to pretrained encoder weights and freshly initialized
//! heads.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Learning-rate group a parameter belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamGroup {
    /// Modality encoders (candidates for a smaller fine-tuning rate).
    Encoder,
    /// Fusion, losses, decoders, and other task heads.
    Head,
}

/// Handle to a parameter inside a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct ParamId(usize);

impl ParamId {
    /// Index into the store's dense parameter list.
    pub fn index(self) -> usize {
        self.0
    }
}

/// One named parameter: value, gradient accumulator, group tag.
#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Tensor,
    pub group: ParamGroup,
}

/// Dense parameter registry with name lookup.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    params: Vec<Param>,
    by_name: BTreeMap<String, usize>,
}

impl ParamStore {
    /// Empty store.
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a tensor under a unique name. Gradients start at zero.
    pub fn add(&mut self, name: impl Into<String>, value: Tensor, group: ParamGroup) -> Result<ParamId> {
        let name = name.into();
        if self.by_name.contains_key(&name) {
            return Err(Error::config(format!("duplicate parameter name: {name}")));
        }
        let id = self.params.len();
        let grad = Tensor::zeros(value.shape().to_vec());
        self.by_name.insert(name.clone(), id);
        self.params.push(Param { name, value, grad, group });
        Ok(ParamId(id))
    }

    /// Number of registered parameters (tensors, not elements).
    pub fn len(&self) -> usize {
        self.params.len()
    }

    /// True when no parameters are registered.
    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total scalar element count across all parameters.
    pub fn element_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    /// Parameter value by handle.
    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    /// Mutable parameter value by handle (used by checkpoint loading).
    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    /// Gradient accumulator by handle.
    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].grad
    }

    /// Adds `g` into the gradient accumulator for `id`.
    pub fn accum_grad(&mut self, id: ParamId, g: &Tensor) -> Result<()> {
        self.params[id.0].grad.add_assign(g)
    }

    /// Clears every gradient accumulator.
    pub fn zero_grads(&mut self) {
        for p in &mut self.params {
            p.grad.fill_zero();
        }
    }

    /// Global L2 norm over all gradients.
    pub fn grad_norm(&self) -> f64 {
        let sq: f64 = self
            .params
            .iter()
            .flat_map(|p| p.grad.data().iter())
            .map(|g| g * g)
            .sum();
        libm::sqrt(sq)
    }

    /// Multiplies every gradient by `s` (used for norm clipping).
    pub fn scale_grads(&mut self, s: f64) {
        for p in &mut self.params {
            for g in p.grad.data_mut() {
                *g *= s;
            }
        }
    }

    /// Looks a parameter up by name.
    pub fn id_of(&self, name: &str) -> Option<ParamId> {
        self.by_name.get(name).copied().map(ParamId)
    }

    /// Iterates parameters in registration order.
    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    /// Iterates parameters mutably in registration order.
    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    /// All handles in registration order.
    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }
}

/// Xavier/Glorot uniform initialization: `U(−a, a)` with
/// `a = √(6 / (fan_in + fan_out))`.
pub fn xavier_uniform(rng: &mut SeededRng, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
    let a = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.uniform(-a, a)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/product consistent by construction")
}

/// Uniform initialization `U(−bound, bound)`, the usual recurrent-layer
/// default with `bound = 1/√hidden`.
pub fn uniform_init(rng: &mut SeededRng, shape: &[usize], bound: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.uniform(-bound, bound)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/product consistent by construction")
}
