use serde::{Deserialize, Serialize};

use crate::error::{AdError, Result};
use crate::param::ParamStore;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamHyper {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.lr > 0.0
            && self.lr.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && self.beta1 > 0.0
            && (0.0..1.0).contains(&self.beta2)
            && self.beta2 > 0.0
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(AdError::InvalidArgument(format!("bad Adam hyperparameters {self:?}")))
        }
    }
}

/// One bias-corrected Adam update of every trainable parameter.
///
/// Consumes the stored gradients of trainable parameters, so a second call
/// without an intervening backward pass is rejected. Frozen parameters are
/// skipped entirely, whatever gradient they hold.
pub fn adam_step(store: &mut ParamStore, hyper: &AdamHyper) -> Result<()> {
    hyper.validate()?;
    if let Some(p) = store.iter().find(|p| p.trainable && p.grad.is_none()) {
        return Err(AdError::MissingGradient(p.name.clone()));
    }
    for p in store.iter_mut().filter(|p| p.trainable) {
        let grad = p.grad.take().expect("checked above");
        p.step += 1;
        let t = p.step as i32;
        let bc1 = 1.0 - hyper.beta1.powi(t);
        let bc2 = 1.0 - hyper.beta2.powi(t);
        let (m, v) = (p.m.data_mut(), p.v.data_mut());
        for (i, (w, g)) in p.value.data_mut().iter_mut().zip(grad.data()).enumerate() {
            m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * g;
            v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            *w -= hyper.lr * m_hat / (v_hat.sqrt() + hyper.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Tensor;

    #[test]
    fn first_step_moves_by_lr() {
        let mut store = ParamStore::new();
        let id = store.add("theta", Tensor::scalar(0.0));
        store.get_mut(id).grad = Some(Tensor::scalar(1.0));
        adam_step(&mut store, &AdamHyper::new(0.1)).unwrap();
        let theta = store.value(id).data()[0];
        // m_hat = v_hat = 1, step = lr / (1 + eps)
        assert!((theta + 0.1).abs() < 1e-6, "{theta}");
        assert_eq!(store.get(id).step_count(), 1);
    }

    #[test]
    fn zero_gradient_leaves_value() {
        let mut store = ParamStore::new();
        let id = store.add("theta", Tensor::scalar(1.25));
        store.get_mut(id).grad = Some(Tensor::scalar(0.0));
        adam_step(&mut store, &AdamHyper::new(0.4)).unwrap();
        assert_eq!(store.value(id).data()[0], 1.25);
    }

    #[test]
    fn frozen_ignores_stored_gradient() {
        let mut store = ParamStore::new();
        let id = store.add_frozen("w", Tensor::vector(vec![1.0, -2.0]));
        store.get_mut(id).grad = Some(Tensor::vector(vec![5.0, 5.0]));
        adam_step(&mut store, &AdamHyper::new(0.1)).unwrap();
        assert_eq!(store.value(id).data(), &[1.0, -2.0]);
        assert_eq!(store.get(id).step_count(), 0);
    }

    #[test]
    fn step_without_backward_rejected() {
        let mut store = ParamStore::new();
        store.add("theta", Tensor::scalar(0.0));
        let err = adam_step(&mut store, &AdamHyper::new(0.1)).unwrap_err();
        assert!(matches!(err, AdError::MissingGradient(ref n) if n == "theta"));
    }
}
