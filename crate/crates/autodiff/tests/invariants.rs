use proptest::prelude::*;
use rbp_autodiff::{adam_step, AdamHyper, Graph, ParamStore, Tensor};

proptest! {
    #[test]
    fn softmax_rows_are_distributions(vals in prop::collection::vec(-50.0f64..50.0, 1..24), cols in 1usize..6) {
        let rows = (vals.len() / cols).max(1);
        let mut data = vals.clone();
        data.resize(rows * cols, 0.0);
        let mut g = Graph::new();
        let x = g.input(Tensor::new(vec![rows, cols], data).unwrap());
        let s = g.softmax(x);
        let out = g.value(s);
        for r in 0..rows {
            let row = out.row(r);
            prop_assert!(row.iter().all(|&p| p >= 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn abs_diff_with_self_is_zero(vals in prop::collection::vec(-1e6f64..1e6, 1..32)) {
        let mut g = Graph::new();
        let x = g.input(Tensor::vector(vals));
        let d = g.abs_diff(x, x).unwrap();
        prop_assert!(g.value(d).data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_stays_finite(vals in prop::collection::vec(-30.0f64..30.0, 4)) {
        let mut g = Graph::new();
        let x = g.input(Tensor::new(vec![1, 4], vals).unwrap());
        let s = g.sigmoid(x);
        let t = g.tanh(s);
        let p = g.softmax(t);
        let l = g.cross_entropy(p, &[2]).unwrap();
        prop_assert!(g.value(l).all_finite());
    }
}

#[test]
fn frozen_parameters_survive_a_thousand_steps() {
    let mut store = ParamStore::new();
    let frozen = store.add_frozen("fixed", Tensor::vector(vec![1.0, -0.0, 3.5e-7]));
    let free = store.add("free", Tensor::vector(vec![0.1, 0.2, 0.3]));
    let before = store.value(frozen).clone();
    let hyper = AdamHyper::new(0.4);
    for _ in 0..1000 {
        let mut g = Graph::new();
        let a = g.param(&store, frozen);
        let b = g.param(&store, free);
        let m = g.mul(a, b).unwrap();
        let m = g.mul(m, m).unwrap();
        let loss = g.sum(m);
        g.backward_params(loss, &mut store).unwrap();
        assert!(store.get(frozen).grad.as_ref().unwrap().data().iter().all(|&v| v == 0.0));
        adam_step(&mut store, &hyper).unwrap();
    }
    assert!(store.value(frozen).bit_eq(&before));
    assert_eq!(store.get(free).step_count(), 1000);
}
