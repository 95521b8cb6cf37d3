//! Relation-based pattern (RBP) structures.
//!
//! DRn units compare two one-hot tokens coordinate by coordinate with
//! `|x - y|`; a DRp unit sums the DRn units of one token pair with fixed +1
//! weights, so it reads 0 when the tokens are identical and 2 otherwise.
//! These values are fused into a network early (appended to the input, RBP1n
//! and RBP1p), mid (appended to a hidden layer, RBP2) or late (RBP3, where a
//! small head predicts which context tokens repeat as the next token and the
//! prediction is mixed into the output distribution).
//!
//! The plain functions here work on `f64` slices and are the reference
//! implementation; [`DrWiring`] and [`Rbp3Head`] build the same
//! quantities on an autodiff tape for training.

use rand::Rng;
use rbp_autodiff::{adam_step, AdamHyper, Graph, ParamId, ParamStore, Tensor, Var};

use crate::error::{Error, Result};

/// Wiring sizes for a vocabulary of `vocab` tokens and a context of `context`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DrConfig {
    pub vocab: usize,
    pub context: usize,
}

impl DrConfig {
    pub fn new(vocab: usize, context: usize) -> Result<Self> {
        if vocab == 0 || context == 0 {
            return Err(Error::Config(format!(
                "DR wiring needs vocab and context >= 1, got {vocab} and {context}"
            )));
        }
        Ok(Self { vocab, context })
    }

    /// `n(n-1)/2`
    pub fn pair_count(&self) -> usize {
        self.context * (self.context - 1) / 2
    }

    pub fn drn_units(&self) -> usize {
        self.vocab * self.pair_count()
    }

    pub fn drp_units(&self) -> usize {
        self.pair_count()
    }

    pub fn drp_out_units(&self) -> usize {
        self.context
    }

    pub fn drn_out_units(&self) -> usize {
        self.vocab * self.context
    }

    /// Position pairs `(i, j)` with `i < j` in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.context)
    }
}

pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect()
}

fn check_one_hot(v: &[f64], vocab: usize) -> Result<()> {
    let ones = v.iter().filter(|&&x| x == 1.0).count();
    if v.len() != vocab || ones != 1 || v.iter().any(|&x| x != 0.0 && x != 1.0) {
        return Err(Error::Input(format!(
            "DR input must be one-hot of length {vocab}, got {v:?}"
        )));
    }
    Ok(())
}

/// DRn activations for `n` one-hot vectors: pair-major, then vocabulary
/// coordinate.
pub fn drn_layer(one_hots: &[Vec<f64>], vocab: usize) -> Result<Vec<f64>> {
    for v in one_hots {
        check_one_hot(v, vocab)?;
    }
    let mut out = Vec::with_capacity(vocab * one_hots.len() * one_hots.len().saturating_sub(1) / 2);
    for (i, j) in pairs(one_hots.len()) {
        out.extend(one_hots[i].iter().zip(&one_hots[j]).map(|(x, y)| (x - y).abs()));
    }
    Ok(out)
}

/// Sums each pair's block of `vocab` DRn values.
pub fn drp_aggregate(drn: &[f64], vocab: usize) -> Result<Vec<f64>> {
    if vocab == 0 || drn.len() % vocab != 0 {
        return Err(Error::Input(format!(
            "{} DRn values do not split into blocks of {vocab}",
            drn.len()
        )));
    }
    Ok(drn.chunks(vocab).map(|c| c.iter().sum()).collect())
}

/// DRp values straight from token indices (0 for equal tokens, 2 otherwise).
pub fn drp_tokens(tokens: &[usize]) -> Vec<f64> {
    pairs(tokens.len())
        .into_iter()
        .map(|(i, j)| if tokens[i] == tokens[j] { 0.0 } else { 2.0 })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyFusion {
    /// append all DRn values
    N,
    /// append the DRp values
    P,
}

/// Appends DRn or DRp values computed from `tokens` to `base`.
pub fn rbp1_augment_input(base: &[f64], tokens: &[usize], vocab: usize, variant: EarlyFusion) -> Result<Vec<f64>> {
    let hots: Vec<Vec<f64>> = tokens
        .iter()
        .map(|&t| rbp_autodiff::one_hot(t, vocab).map(Tensor::into_data))
        .collect::<std::result::Result<_, _>>()?;
    let drn = drn_layer(&hots, vocab)?;
    let extra = match variant {
        EarlyFusion::N => drn,
        EarlyFusion::P => drp_aggregate(&drn, vocab)?,
    };
    Ok(base.iter().copied().chain(extra).collect())
}

/// `[hidden || drp]`
pub fn rbp2_augment_hidden(hidden: &[f64], drp: &[f64]) -> Vec<f64> {
    hidden.iter().chain(drp).copied().collect()
}

/// +1 where a context token equals the next token, −1 elsewhere. Only
/// defined when the next token is known.
pub fn drp_out_targets(context: &[usize], next: Option<usize>) -> Result<Vec<f64>> {
    let next = next.ok_or_else(|| {
        Error::Input("DRp out targets need the next token; use the head estimate at inference".into())
    })?;
    Ok(context.iter().map(|&t| if t == next { 1.0 } else { -1.0 }).collect())
}

/// Mean-centres the estimate and scatters it onto the context tokens' output
/// slots. Repeated context tokens accumulate.
pub fn rbp3_offsets(estimate: &[f64], context: &[usize], k: usize) -> Result<Vec<f64>> {
    if estimate.len() != context.len() {
        return Err(Error::Input(format!(
            "estimate length {} != context length {}",
            estimate.len(),
            context.len()
        )));
    }
    if let Some(&t) = context.iter().find(|&&t| t >= k) {
        return Err(Error::Input(format!("context token {t} outside vocabulary of {k}")));
    }
    let mean = estimate.iter().sum::<f64>() / estimate.len() as f64;
    let mut out = vec![0.0; k];
    for (&e, &t) in estimate.iter().zip(context) {
        out[t] += e - mean;
    }
    Ok(out)
}

/// Result of [`rbp3_mix`].
#[derive(Debug, Clone, PartialEq)]
pub struct Mixed {
    pub probs: Vec<f64>,
    pub used_fallback: bool,
}

/// `w_base * p + w_offset * offsets`, clipped to `[0, 1]` and renormalised.
/// Falls back to `p` if nothing survives the clipping.
pub fn rbp3_mix(p: &[f64], offsets: &[f64], w_base: f64, w_offset: f64) -> Result<Mixed> {
    if p.len() != offsets.len() {
        return Err(Error::Input(format!(
            "distribution length {} != offsets length {}",
            p.len(),
            offsets.len()
        )));
    }
    let q: Vec<f64> = p
        .iter()
        .zip(offsets)
        .map(|(p, o)| (w_base * p + w_offset * o).clamp(0.0, 1.0))
        .collect();
    let s: f64 = q.iter().sum();
    if s > 0.0 {
        Ok(Mixed {
            probs: q.into_iter().map(|v| v / s).collect(),
            used_fallback: false,
        })
    } else {
        log::warn!("mixture clipped to zero mass; using the base distribution");
        Ok(Mixed {
            probs: p.to_vec(),
            used_fallback: true,
        })
    }
}

/// Fixed DR wiring registered in a parameter store: the all-ones vector
/// that sums a pair's DRn block into its DRp unit. Frozen.
#[derive(Debug, Clone, Copy)]
pub struct DrWiring {
    pub cfg: DrConfig,
    pub drp_sum: ParamId,
}

impl DrWiring {
    pub fn register(store: &mut ParamStore, cfg: DrConfig) -> Self {
        let drp_sum = store.add_frozen("dr.drp_sum", Tensor::full(&[cfg.vocab, 1], 1.0));
        Self { cfg, drp_sum }
    }

    /// DRn blocks for every pair of `hots`, each `[batch, vocab]`. With
    /// `upto = Some(t)`, blocks for pairs reaching past position `t` are
    /// zero (used by recurrent models before the whole context is seen).
    pub fn drn(&self, g: &mut Graph, hots: &[Var], upto: Option<usize>) -> Result<Vec<Var>> {
        let mut out = Vec::new();
        for (i, j) in pairs(hots.len()) {
            if upto.is_some_and(|t| j > t) {
                let rows = g.value(hots[0]).rows();
                out.push(g.input(Tensor::zeros(&[rows, self.cfg.vocab])));
            } else {
                out.push(g.abs_diff(hots[i], hots[j])?);
            }
        }
        Ok(out)
    }

    /// DRp `[batch, pairs]` from DRn blocks.
    pub fn drp(&self, g: &mut Graph, store: &ParamStore, drn: &[Var]) -> Result<Var> {
        let w = g.param(store, self.drp_sum);
        let sums = drn.iter().map(|&b| g.matmul(b, w)).collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(g.concat(&sums)?)
    }
}

/// Late-fusion head: DRp_in → ReLU hidden → tanh estimate of DRp_out, plus
/// the two scalar mixture weights.
#[derive(Debug, Clone)]
pub struct Rbp3Head {
    pub cfg: DrConfig,
    pub hidden: usize,
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub w_base: ParamId,
    pub w_offset: ParamId,
}

impl Rbp3Head {
    pub fn register(store: &mut ParamStore, cfg: DrConfig, hidden: usize, rng: &mut impl Rng) -> Result<Self> {
        if cfg.pair_count() == 0 {
            return Err(Error::Config("late fusion needs a context of at least 2 tokens".into()));
        }
        let (p, n) = (cfg.drp_units(), cfg.drp_out_units());
        Ok(Self {
            cfg,
            hidden,
            w1: store.add("head.w1", glorot(p, hidden, rng)),
            b1: store.add("head.b1", Tensor::zeros(&[hidden])),
            w2: store.add("head.w2", glorot(hidden, n, rng)),
            b2: store.add("head.b2", Tensor::zeros(&[n])),
            w_base: store.add("head.w_base", Tensor::scalar(0.5)),
            w_offset: store.add("head.w_offset", Tensor::scalar(0.5)),
        })
    }

    /// Estimated DRp_out `[batch, n]`, each entry in `[-1, 1]`.
    pub fn forward(&self, g: &mut Graph, store: &ParamStore, drp_in: Var) -> Result<Var> {
        let (w1, b1, w2, b2) = (
            g.param(store, self.w1),
            g.param(store, self.b1),
            g.param(store, self.w2),
            g.param(store, self.b2),
        );
        let h = g.matmul(drp_in, w1)?;
        let h = g.add(h, b1)?;
        let h = g.relu(h);
        let o = g.matmul(h, w2)?;
        let o = g.add(o, b2)?;
        Ok(g.tanh(o))
    }

    /// Plain-slice forward for one context.
    pub fn estimate(&self, store: &ParamStore, drp_in: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let x = g.input(Tensor::new(vec![1, drp_in.len()], drp_in.to_vec())?);
        let y = self.forward(&mut g, store, x)?;
        Ok(g.value(y).data().to_vec())
    }

    /// Offsets, mixture and clip-renormalise on the tape; `relations` are
    /// the teacher-forced targets during training or the head's estimate.
    pub fn mix(&self, g: &mut Graph, store: &ParamStore, base: Var, relations: Var, context: &[Vec<usize>]) -> Result<Var> {
        let centred = g.center_rows(relations);
        let offsets = g.scatter_rows(centred, context, self.cfg.vocab)?;
        let (wb, wo) = (g.param(store, self.w_base), g.param(store, self.w_offset));
        let a = g.mul(base, wb)?;
        let b = g.mul(offsets, wo)?;
        let q = g.add(a, b)?;
        Ok(g.clip_renorm(q, base)?)
    }

    pub fn weights(&self, store: &ParamStore) -> (f64, f64) {
        (store.value(self.w_base).data()[0], store.value(self.w_offset).data()[0])
    }

    /// Fits only the head's predictor by MSE regression on `(drp_in, target)`
    /// rows. Returns the final loss.
    pub fn train_head(&self, store: &mut ParamStore, data: &[(Vec<f64>, Vec<f64>)], epochs: usize, lr: f64) -> Result<f64> {
        if data.is_empty() {
            return Err(Error::Input("no head training rows".into()));
        }
        let x = Tensor::from_rows(&data.iter().map(|r| r.0.clone()).collect::<Vec<_>>())?;
        let y = Tensor::from_rows(&data.iter().map(|r| r.1.clone()).collect::<Vec<_>>())?;
        let hyper = AdamHyper::new(lr);
        let mut loss = f64::NAN;
        // mixture weights are not part of this fit
        let mix = [self.w_base, self.w_offset];
        let saved: Vec<bool> = mix.iter().map(|&id| store.get(id).trainable).collect();
        for &id in &mix {
            store.get_mut(id).trainable = false;
        }
        let result = (|| -> Result<f64> {
            for _ in 0..epochs {
                let mut g = Graph::new();
                let xv = g.input(x.clone());
                let est = self.forward(&mut g, store, xv)?;
                let l = g.mse(est, y.clone())?;
                loss = g.value(l).data()[0];
                g.backward_params(l, store)?;
                adam_step(store, &hyper)?;
            }
            Ok(loss)
        })();
        for (&id, &t) in mix.iter().zip(&saved) {
            store.get_mut(id).trainable = t;
        }
        result
    }
}

/// Symmetric uniform init with the Glorot bound `sqrt(6 / (fan_in + fan_out))`.
pub fn glorot(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Tensor {
    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-bound..=bound)).collect();
    Tensor::new(vec![fan_in, fan_out], data).expect("positive dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn hot(i: usize, k: usize) -> Vec<f64> {
        rbp_autodiff::one_hot(i, k).unwrap().into_data()
    }

    #[test]
    fn unit_counts() {
        let c = DrConfig::new(12, 3).unwrap();
        assert_eq!(c.drn_units(), 36);
        assert_eq!(c.drp_units(), 3);
        assert_eq!(DrConfig::new(12, 5).unwrap().drp_units(), 10);
        assert_eq!(c.drn_out_units(), 36);
        assert_eq!(c.pairs(), vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn drn_identical_and_distinct() {
        let same = drn_layer(&[hot(0, 12), hot(0, 12)], 12).unwrap();
        assert!(same.iter().all(|&v| v == 0.0));
        let diff = drn_layer(&[hot(0, 12), hot(1, 12)], 12).unwrap();
        assert_eq!(diff.iter().filter(|&&v| v == 1.0).count(), 2);
        assert!(drn_layer(&[vec![0.5, 0.5]], 2).is_err());
    }

    #[test]
    fn drp_of_aba() {
        let drn = drn_layer(&[hot(0, 4), hot(1, 4), hot(0, 4)], 4).unwrap();
        assert_eq!(drp_aggregate(&drn, 4).unwrap(), vec![2.0, 0.0, 2.0]);
        assert_eq!(drp_tokens(&[0, 1, 0]), vec![2.0, 0.0, 2.0]);
        assert_eq!(drp_tokens(&[3, 3, 3]), vec![0.0; 3]);
    }

    #[test]
    fn early_fusion_lengths() {
        let base = vec![0.0; 36];
        assert_eq!(rbp1_augment_input(&base, &[0, 1, 2], 12, EarlyFusion::N).unwrap().len(), 72);
        let p = rbp1_augment_input(&base, &[4, 4, 4], 12, EarlyFusion::P).unwrap();
        assert_eq!(p.len(), 39);
        assert!(p[36..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mid_fusion_keeps_hidden() {
        let h: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let a = rbp2_augment_hidden(&h, &[0.0; 3]);
        assert_eq!(a.len(), 53);
        assert_eq!(&a[..50], &h[..]);
    }

    #[test]
    fn targets() {
        assert_eq!(drp_out_targets(&[0, 1], Some(0)).unwrap(), vec![1.0, -1.0]);
        assert_eq!(drp_out_targets(&[0, 0], Some(0)).unwrap(), vec![1.0, 1.0]);
        assert_eq!(drp_out_targets(&[0, 1], Some(2)).unwrap(), vec![-1.0, -1.0]);
        assert!(drp_out_targets(&[0, 1], None).is_err());
    }

    #[test]
    fn offsets_by_hand() {
        assert_eq!(rbp3_offsets(&[1.0, -1.0], &[0, 1], 4).unwrap(), vec![1.0, -1.0, 0.0, 0.0]);
        assert_eq!(rbp3_offsets(&[1.0, 1.0], &[0, 0], 4).unwrap(), vec![0.0; 4]);
        assert_eq!(rbp3_offsets(&[0.3, 0.3, 0.3], &[2, 1, 0], 4).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn mix_by_hand() {
        let m = rbp3_mix(&[0.25; 4], &[1.0, -1.0, 0.0, 0.0], 0.5, 0.5).unwrap();
        let want = [0.625 / 0.875, 0.0, 0.125 / 0.875, 0.125 / 0.875];
        for (a, b) in m.probs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((m.probs[0] - 0.7143).abs() < 1e-4);
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(rbp3_mix(&p, &[0.0; 4], 0.5, 0.5).unwrap().probs, p.to_vec());
        let m = rbp3_mix(&p, &[1.0, -1.0, 0.0, 0.0], 0.7, 0.0).unwrap();
        for (a, b) in m.probs.iter().zip(p) {
            assert!((a - b).abs() < 1e-12);
        }
        let f = rbp3_mix(&p, &[-1.0; 4], 0.5, 0.5).unwrap();
        assert!(f.used_fallback);
        assert_eq!(f.probs, p.to_vec());
    }

    #[test]
    fn zero_head_estimates_zero() {
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let head = Rbp3Head::register(&mut store, DrConfig::new(4, 2).unwrap(), 5, &mut rng).unwrap();
        for id in [head.w1, head.w2] {
            store.get_mut(id).value = Tensor::zeros(store.value(id).shape());
        }
        assert_eq!(head.estimate(&store, &[2.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn graph_drp_matches_reference() {
        let mut store = ParamStore::new();
        let wiring = DrWiring::register(&mut store, DrConfig::new(5, 3).unwrap());
        let mut g = Graph::new();
        let toks = [[1usize, 3, 1], [2, 2, 4]];
        let hots: Vec<Var> = (0..3)
            .map(|pos| {
                let rows: Vec<Vec<f64>> = toks.iter().map(|t| hot(t[pos], 5)).collect();
                g.input(Tensor::from_rows(&rows).unwrap())
            })
            .collect();
        let drn = wiring.drn(&mut g, &hots, None).unwrap();
        let drp = wiring.drp(&mut g, &store, &drn).unwrap();
        assert_eq!(g.value(drp).row(0), &drp_tokens(&toks[0])[..]);
        assert_eq!(g.value(drp).row(1), &drp_tokens(&toks[1])[..]);
        let partial = wiring.drn(&mut g, &hots, Some(1)).unwrap();
        let drp = wiring.drp(&mut g, &store, &partial).unwrap();
        assert_eq!(g.value(drp).row(0), &[2.0, 0.0, 0.0]);
    }
}
