use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbp_autodiff::{grad_check, grad_check_params, AdError, Graph, ParamStore, Result, Tensor, Var};

fn random(shape: &[usize], rng: &mut ChaCha8Rng, scale: f64) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-scale..scale)).collect()).unwrap()
}

/// Central differences computed without the library's grad_check helper.
fn central_diff(f: impl Fn(&Tensor) -> f64, x: &Tensor, eps: f64) -> Vec<f64> {
    (0..x.len())
        .map(|i| {
            let mut p = x.clone();
            p.data_mut()[i] += eps;
            let mut m = x.clone();
            m.data_mut()[i] -= eps;
            (f(&p) - f(&m)) / (2.0 * eps)
        })
        .collect()
}

#[test]
fn linear_map_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let w = random(&[4, 3], &mut rng, 1.0);
    let c = random(&[1, 3], &mut rng, 1.0);
    let x0 = random(&[1, 4], &mut rng, 1.0);
    let err = grad_check(
        |g, x| {
            let wv = g.input(w.clone());
            let cv = g.input(c.clone());
            let y = g.matmul(x, wv)?;
            let y = g.mul(y, cv)?;
            Ok(g.sum(y))
        },
        &x0,
        1e-4,
    )
    .unwrap();
    assert!(err < 1e-10, "{err}");
}

#[test]
fn two_layer_relu_net() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut store = ParamStore::new();
    let w1 = store.add("w1", random(&[5, 8], &mut rng, 0.8));
    let b1 = store.add("b1", random(&[8], &mut rng, 0.3));
    let w2 = store.add("w2", random(&[8, 3], &mut rng, 0.8));
    let b2 = store.add("b2", random(&[3], &mut rng, 0.3));
    let x = random(&[4, 5], &mut rng, 1.0);
    let targets = [0usize, 2, 1, 2];
    let build = |g: &mut Graph, s: &ParamStore| -> Result<Var> {
        let xv = g.input(x.clone());
        let (w1, b1, w2, b2) = (g.param(s, w1), g.param(s, b1), g.param(s, w2), g.param(s, b2));
        let h = g.matmul(xv, w1)?;
        let h = g.add(h, b1)?;
        let h = g.relu(h);
        let o = g.matmul(h, w2)?;
        let o = g.add(o, b2)?;
        let p = g.softmax(o);
        g.cross_entropy(p, &targets)
    };
    let err = grad_check_params(&store, build, 1e-5).unwrap();
    assert!(err < 1e-4, "{err}");

    // input gradient as well
    let err = grad_check(
        |g, xv| {
            let (w1, b1) = (g.param(&store, w1), g.param(&store, b1));
            let h = g.matmul(xv, w1)?;
            let h = g.add(h, b1)?;
            let h = g.relu(h);
            Ok(g.sum(h))
        },
        &x,
        1e-5,
    )
    .unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn softmax_cross_entropy_gradient_is_p_minus_y() {
    let z0 = Tensor::vector(vec![0.3, -1.2, 2.0, 0.5]);
    let target = 1usize;
    let loss_of = |z: &Tensor| {
        let mut g = Graph::new();
        let zv = g.input(z.clone());
        let p = g.softmax(zv);
        let l = g.cross_entropy(p, &[target]).unwrap();
        g.value(l).data()[0]
    };
    let numeric = central_diff(loss_of, &z0, 1e-5);

    let mut g = Graph::new();
    let z = g.variable(z0.clone());
    let p = g.softmax(z);
    let l = g.cross_entropy(p, &[target]).unwrap();
    let grads = g.backward(l).unwrap();
    let analytic = grads.get(z).unwrap().data().to_vec();
    let probs = g.value(p).data().to_vec();
    for i in 0..4 {
        let expected = probs[i] - if i == target { 1.0 } else { 0.0 };
        assert!((analytic[i] - expected).abs() < 1e-12);
        assert!((analytic[i] - numeric[i]).abs() < 1e-8, "{i}: {} vs {}", analytic[i], numeric[i]);
    }
}

/// LSTM cell built directly from primitives, unrolled over three steps.
#[test]
fn lstm_cell_unrolled_three_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (k, h) = (4, 3);
    let mut store = ParamStore::new();
    let gates: Vec<_> = ["i", "f", "o", "c"]
        .iter()
        .map(|n| {
            (
                store.add(format!("w_{n}"), random(&[k, h], &mut rng, 0.7)),
                store.add(format!("u_{n}"), random(&[h, h], &mut rng, 0.7)),
                store.add(format!("b_{n}"), random(&[h], &mut rng, 0.2)),
            )
        })
        .collect();
    let xs: Vec<Tensor> = (0..3).map(|_| random(&[2, k], &mut rng, 1.0)).collect();
    let build = |g: &mut Graph, s: &ParamStore| -> Result<Var> {
        let mut hs = g.input(Tensor::zeros(&[2, h]));
        let mut cs = g.input(Tensor::zeros(&[2, h]));
        for x in &xs {
            let xv = g.input(x.clone());
            let mut pre = Vec::new();
            for &(w, u, b) in &gates {
                let (w, u, b) = (g.param(s, w), g.param(s, u), g.param(s, b));
                let a = g.matmul(xv, w)?;
                let r = g.matmul(hs, u)?;
                let a = g.add(a, r)?;
                pre.push(g.add(a, b)?);
            }
            let i = g.sigmoid(pre[0]);
            let f = g.sigmoid(pre[1]);
            let o = g.sigmoid(pre[2]);
            let c_hat = g.tanh(pre[3]);
            let keep = g.mul(f, cs)?;
            let write = g.mul(i, c_hat)?;
            cs = g.add(keep, write)?;
            let tc = g.tanh(cs);
            hs = g.mul(o, tc)?;
        }
        let p = g.softmax(hs);
        g.cross_entropy(p, &[0, 2])
    };
    let err = grad_check_params(&store, build, 1e-5).unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn mixture_pipeline_gradient() {
    // center -> scatter -> weighted sum -> clip/renormalize -> cross-entropy
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let base = random(&[2, 5], &mut rng, 1.0);
    let mut store = ParamStore::new();
    let est = store.add("est", Tensor::new(vec![2, 3], vec![0.8, -0.3, 0.1, -0.5, 0.6, 0.2]).unwrap());
    let wb = store.add("w_base", Tensor::scalar(0.7));
    let wo = store.add("w_offset", Tensor::scalar(0.2));
    let logits = store.add("logits", base);
    let ctx = vec![vec![0, 3, 4], vec![1, 1, 2]];
    let build = |g: &mut Graph, s: &ParamStore| -> Result<Var> {
        let z = g.param(s, logits);
        let p = g.softmax(z);
        let e = g.param(s, est);
        let c = g.center_rows(e);
        let off = g.scatter_rows(c, &ctx, 5)?;
        let (wb, wo) = (g.param(s, wb), g.param(s, wo));
        let a = g.mul(p, wb)?;
        let b = g.mul(off, wo)?;
        let q = g.add(a, b)?;
        let out = g.clip_renorm(q, p)?;
        g.cross_entropy(out, &[3, 1])
    };
    let err = grad_check_params(&store, build, 1e-6).unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn kink_points_are_flagged() {
    let x0 = Tensor::vector(vec![0.0, 1.0]);
    let err = grad_check(|g, x| Ok({ let r = g.relu(x); g.sum(r) }), &x0, 1e-5).unwrap_err();
    assert!(matches!(err, AdError::NonDifferentiable { count: 1 }));

    let y0 = Tensor::vector(vec![0.5, 1.0]);
    let err = grad_check(
        |g, x| {
            let y = g.input(y0.clone());
            let d = g.abs_diff(x, y)?;
            Ok(g.sum(d))
        },
        &Tensor::vector(vec![0.5, 2.0]),
        1e-5,
    )
    .unwrap_err();
    assert!(matches!(err, AdError::NonDifferentiable { .. }));
}

#[test]
fn eps_outside_range_rejected() {
    let x0 = Tensor::scalar(1.0);
    assert!(grad_check(|g, x| Ok(g.sum(x)), &x0, 1e-2).is_err());
    assert!(grad_check(|g, x| Ok(g.sum(x)), &x0, 1e-9).is_err());
}
