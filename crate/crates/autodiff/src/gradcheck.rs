use crate::error::{AdError, Result};
use crate::graph::{Graph, Var};
use crate::param::ParamStore;
use crate::tensor::Tensor;

fn check_eps(eps: f64) -> Result<()> {
    if (1e-7..=1e-3).contains(&eps) {
        Ok(())
    } else {
        Err(AdError::InvalidArgument(format!(
            "finite-difference step {eps} outside [1e-7, 1e-3]"
        )))
    }
}

fn rel_err(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(1.0)
}

fn scalar_of(graph: &Graph, v: Var) -> Result<f64> {
    let t = graph.value(v);
    if !t.is_scalar() {
        return Err(AdError::NonScalarLoss(t.shape().to_vec()));
    }
    Ok(t.data()[0])
}

/// Compares the reverse-mode gradient of `f` at `point` with central
/// differences. Returns `max_i |analytic_i - numeric_i| / max(1, |analytic_i|)`.
///
/// Points where a relu or abs_diff sees an exact zero are rejected with
/// [`AdError::NonDifferentiable`]; the caller has to perturb them.
pub fn grad_check<F>(f: F, point: &Tensor, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, Var) -> Result<Var>,
{
    check_eps(eps)?;
    let mut g = Graph::new();
    let x = g.variable(point.clone());
    let y = f(&mut g, x)?;
    scalar_of(&g, y)?;
    if g.kinks() > 0 {
        return Err(AdError::NonDifferentiable { count: g.kinks() });
    }
    let grads = g.backward(y)?;
    let analytic = grads
        .get(x)
        .cloned()
        .unwrap_or_else(|| Tensor::zeros(point.shape()));

    let eval = |p: Tensor| -> Result<f64> {
        let mut g = Graph::new();
        let x = g.variable(p);
        let y = f(&mut g, x)?;
        scalar_of(&g, y)
    };
    let mut worst = 0.0f64;
    for i in 0..point.len() {
        let mut plus = point.clone();
        plus.data_mut()[i] += eps;
        let mut minus = point.clone();
        minus.data_mut()[i] -= eps;
        let numeric = (eval(plus)? - eval(minus)?) / (2.0 * eps);
        worst = worst.max(rel_err(analytic.data()[i], numeric));
    }
    Ok(worst)
}

/// Same check as [`grad_check`], taken over every trainable parameter of
/// `store`. `f` must build its loss from `store` on the given graph.
pub fn grad_check_params<F>(store: &ParamStore, f: F, eps: f64) -> Result<f64>
where
    F: Fn(&mut Graph, &ParamStore) -> Result<Var>,
{
    check_eps(eps)?;
    let mut work = store.clone();
    let mut g = Graph::new();
    let y = f(&mut g, &work)?;
    scalar_of(&g, y)?;
    if g.kinks() > 0 {
        return Err(AdError::NonDifferentiable { count: g.kinks() });
    }
    g.backward_params(y, &mut work)?;
    let analytic: Vec<Option<Tensor>> = work.iter().map(|p| p.grad.clone()).collect();

    let eval = |s: &ParamStore| -> Result<f64> {
        let mut g = Graph::new();
        let y = f(&mut g, s)?;
        scalar_of(&g, y)
    };
    let mut worst = 0.0f64;
    let ids: Vec<_> = work.ids().collect();
    for id in ids {
        if !work.get(id).trainable {
            continue;
        }
        let grad = analytic[id.index()].clone().expect("set by backward_params");
        for i in 0..grad.len() {
            let orig = work.get(id).value.data()[i];
            work.get_mut(id).value.data_mut()[i] = orig + eps;
            let fp = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = orig - eps;
            let fm = eval(&work)?;
            work.get_mut(id).value.data_mut()[i] = orig;
            worst = worst.max(rel_err(grad.data()[i], (fp - fm) / (2.0 * eps)));
        }
    }
    Ok(worst)
}
