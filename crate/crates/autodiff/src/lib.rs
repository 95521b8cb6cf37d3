//! Reverse-mode automatic differentiation over small dense `f64` tensors.
//!
//! A [`Graph`] records one forward pass as a tape of primitive operations;
//! [`Graph::backward`] replays it in reverse. Model weights live in a
//! [`ParamStore`] and are pulled onto a tape with [`Graph::param`]; after
//! [`Graph::backward_params`] the store holds `dLoss/dParam` and
//! [`adam_step`] applies one optimizer update. Parameters registered with
//! [`ParamStore::add_frozen`] never change.
//!
//! ```
//! use rbp_autodiff::{adam_step, AdamHyper, Graph, ParamStore, Tensor};
//!
//! let mut store = ParamStore::new();
//! let w = store.add("w", Tensor::scalar(3.0));
//! let mut g = Graph::new();
//! let wv = g.param(&store, w);
//! let loss = g.mul(wv, wv).unwrap();
//! g.backward_params(loss, &mut store).unwrap();
//! assert_eq!(store.get(w).grad.as_ref().unwrap().data(), &[6.0]);
//! adam_step(&mut store, &AdamHyper::new(0.1)).unwrap();
//! assert!(store.value(w).data()[0] < 3.0);
//! ```

mod adam;
mod error;
mod gradcheck;
mod graph;
mod param;
mod tensor;

pub use adam::{adam_step, AdamHyper};
pub use error::{AdError, Result};
pub use gradcheck::{grad_check, grad_check_params};
pub use graph::{Gradients, Graph, Var, PROB_FLOOR};
pub use param::{ParamId, ParamStore, Parameter};
pub use tensor::{one_hot, Tensor};
