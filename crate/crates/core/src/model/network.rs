use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rbp_autodiff::{Graph, ParamId, ParamStore, Tensor, Var};

use super::config::{Architecture, ModelConfig, RbpVariant};
use crate::error::{Error, Result};
use crate::rbp::{drp_out_targets, glorot, DrConfig, DrWiring, Rbp3Head};

#[derive(Debug, Clone)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

/// Input and recurrent weights plus bias for one gate.
#[derive(Debug, Clone)]
struct Gate {
    wx: ParamId,
    wh: ParamId,
    b: ParamId,
}

#[derive(Debug, Clone)]
enum Layer {
    Dense(Dense),
    Rnn(Gate),
    /// update, reset, candidate
    Gru([Gate; 3]),
    /// input, forget, output, cell candidate
    Lstm([Gate; 4]),
}

/// A network built from a [`ModelConfig`]; all weights live in `store`.
#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub store: ParamStore,
    dr: Option<DrWiring>,
    layers: Vec<Layer>,
    out: Dense,
    head: Option<Rbp3Head>,
}

/// Training-time extras for one forward pass.
pub struct TrainPass<'a> {
    pub rng: &'a mut ChaCha8Rng,
    /// next tokens, used for teacher forcing in RBP3
    pub targets: &'a [usize],
}

/// Tape handles produced by [`Model::forward`].
pub struct Forward {
    pub probs: Var,
    /// RBP3 head estimate and the teacher-forcing targets it is trained on
    pub relations: Option<(Var, Tensor)>,
    /// top-layer hidden state after each step (recurrent models)
    pub states: Vec<Var>,
}

fn dense(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Dense {
    Dense {
        w: store.add(format!("{name}.w"), glorot(fan_in, fan_out, rng)),
        b: store.add(format!("{name}.b"), Tensor::zeros(&[fan_out])),
    }
}

fn gate(store: &mut ParamStore, name: &str, fan_in: usize, h: usize, bias: f64, rng: &mut ChaCha8Rng) -> Gate {
    Gate {
        wx: store.add(format!("{name}.wx"), glorot(fan_in, h, rng)),
        wh: store.add(format!("{name}.wh"), glorot(h, h, rng)),
        b: store.add(format!("{name}.b"), Tensor::full(&[h], bias)),
    }
}

impl Model {
    /// Builds the layout for `config` and draws initial weights from its seed.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut store = ParamStore::new();
        let (k, n, h) = (config.vocab_size, config.context_len, config.hidden_size);
        let dr_cfg = DrConfig::new(k, n)?;
        let dr = (config.rbp != RbpVariant::None).then(|| DrWiring::register(&mut store, dr_cfg));
        let early = match config.rbp {
            RbpVariant::Rbp1n => dr_cfg.drn_units(),
            RbpVariant::Rbp1p => dr_cfg.drp_units(),
            _ => 0,
        };
        let mid = if config.rbp.mid_fusion() { dr_cfg.drp_units() } else { 0 };

        let mut layers = Vec::new();
        let arch = config.architecture;
        for l in 0..config.layers {
            let fan_in = match (arch, l) {
                (Architecture::Ffnn, 0) => n * k + early,
                (Architecture::Ffnn, 1) => h + mid,
                (_, 0) => k + early,
                _ => h,
            };
            let name = format!("l{l}");
            layers.push(match arch {
                Architecture::Ffnn => Layer::Dense(dense(&mut store, &name, fan_in, h, &mut rng)),
                Architecture::Rnn => Layer::Rnn(gate(&mut store, &name, fan_in, h, 0.0, &mut rng)),
                Architecture::Gru => Layer::Gru(
                    ["z", "r", "n"].map(|g| gate(&mut store, &format!("{name}.{g}"), fan_in, h, 0.0, &mut rng)),
                ),
                Architecture::Lstm => Layer::Lstm(["i", "f", "o", "g"].map(|g| {
                    let bias = if g == "f" { 1.0 } else { 0.0 };
                    gate(&mut store, &format!("{name}.{g}"), fan_in, h, bias, &mut rng)
                })),
            });
        }
        // FFNN mid fusion sits on the first hidden layer; with two layers it
        // feeds layer 2 instead of the output.
        let out_in = if arch == Architecture::Ffnn && config.layers == 2 { h } else { h + mid };
        let out = dense(&mut store, "out", out_in, config.output_size, &mut rng);
        let head = if config.rbp == RbpVariant::Rbp3 {
            Some(Rbp3Head::register(&mut store, dr_cfg, h, &mut rng)?)
        } else {
            None
        };
        Ok(Self {
            config,
            store,
            dr,
            layers,
            out,
            head,
        })
    }

    pub fn head(&self) -> Option<&Rbp3Head> {
        self.head.as_ref()
    }

    pub fn dr_wiring(&self) -> Option<&DrWiring> {
        self.dr.as_ref()
    }

    /// Sets every trainable weight to zero.
    pub fn zero_weights(&mut self) {
        for p in self.store.iter_mut().filter(|p| p.trainable) {
            p.value = Tensor::zeros(p.value.shape());
        }
    }

    /// Rejects sequences of the wrong length or with unknown tokens.
    pub fn check_batch(&self, batch: &[Vec<usize>]) -> Result<()> {
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let (n, k) = (self.config.context_len, self.config.vocab_size);
        for seq in batch {
            if seq.len() != n {
                return Err(Error::Input(format!(
                    "sequence {seq:?} has length {}, model expects {n}",
                    seq.len()
                )));
            }
            if let Some(t) = seq.iter().find(|&&t| t >= k) {
                return Err(Error::Input(format!("token {t} outside model vocabulary of {k}")));
            }
        }
        Ok(())
    }

    fn one_hots(&self, g: &mut Graph, batch: &[Vec<usize>]) -> Vec<Var> {
        let k = self.config.vocab_size;
        (0..self.config.context_len)
            .map(|pos| {
                let mut data = vec![0.0; batch.len() * k];
                for (r, seq) in batch.iter().enumerate() {
                    data[r * k + seq[pos]] = 1.0;
                }
                g.input(Tensor::new(vec![batch.len(), k], data).expect("positive dims"))
            })
            .collect()
    }

    fn dropout(&self, g: &mut Graph, x: Var, train: &mut Option<TrainPass>) -> Result<Var> {
        let p = self.config.dropout;
        let Some(t) = train.as_mut() else { return Ok(x) };
        if p == 0.0 {
            return Ok(x);
        }
        let shape = g.value(x).shape().to_vec();
        let keep = 1.0 / (1.0 - p);
        let len = g.value(x).len();
        let mask = (0..len).map(|_| if t.rng.gen::<f64>() < p { 0.0 } else { keep }).collect();
        Ok(g.dropout_mask_apply(x, Tensor::new(shape, mask)?)?)
    }

    fn affine(&self, g: &mut Graph, d: &Dense, x: Var) -> Result<Var> {
        let (w, b) = (g.param(&self.store, d.w), g.param(&self.store, d.b));
        let y = g.matmul(x, w)?;
        Ok(g.add(y, b)?)
    }

    fn gate_pre(&self, g: &mut Graph, gt: &Gate, x: Var, h: Var) -> Result<Var> {
        let (wx, wh, b) = (
            g.param(&self.store, gt.wx),
            g.param(&self.store, gt.wh),
            g.param(&self.store, gt.b),
        );
        let a = g.matmul(x, wx)?;
        let c = g.matmul(h, wh)?;
        let s = g.add(a, c)?;
        Ok(g.add(s, b)?)
    }

    /// One recurrent step of `layer`; `c` is the LSTM cell state.
    fn cell(&self, g: &mut Graph, layer: &Layer, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        match layer {
            Layer::Rnn(gt) => {
                let a = self.gate_pre(g, gt, x, h)?;
                Ok((g.relu(a), c))
            }
            Layer::Gru([z, r, cand]) => {
                let zp = self.gate_pre(g, z, x, h)?;
                let z = g.sigmoid(zp);
                let rp = self.gate_pre(g, r, x, h)?;
                let r = g.sigmoid(rp);
                let rh = g.mul(r, h)?;
                let np = self.gate_pre(g, cand, x, rh)?;
                let nt = g.tanh(np);
                let keep = g.one_minus(z);
                let a = g.mul(keep, nt)?;
                let b = g.mul(z, h)?;
                Ok((g.add(a, b)?, c))
            }
            Layer::Lstm([i, f, o, cand]) => {
                let ip = self.gate_pre(g, i, x, h)?;
                let i = g.sigmoid(ip);
                let fp = self.gate_pre(g, f, x, h)?;
                let f = g.sigmoid(fp);
                let op = self.gate_pre(g, o, x, h)?;
                let o = g.sigmoid(op);
                let cp = self.gate_pre(g, cand, x, h)?;
                let ct = g.tanh(cp);
                let fc = g.mul(f, c)?;
                let ig = g.mul(i, ct)?;
                let c = g.add(fc, ig)?;
                let tc = g.tanh(c);
                Ok((g.mul(o, tc)?, c))
            }
            Layer::Dense(_) => unreachable!("dense layer in recurrent stack"),
        }
    }

    /// Appends early-fusion DR values to `x`. `upto` limits recurrent
    /// models to pairs already seen.
    fn early(&self, g: &mut Graph, x: Var, hots: &[Var], upto: Option<usize>) -> Result<Var> {
        let Some(dr) = &self.dr else { return Ok(x) };
        match self.config.rbp {
            RbpVariant::Rbp1n => {
                let mut parts = vec![x];
                parts.extend(dr.drn(g, hots, upto)?);
                Ok(g.concat(&parts)?)
            }
            RbpVariant::Rbp1p => {
                let blocks = dr.drn(g, hots, upto)?;
                let drp = dr.drp(g, &self.store, &blocks)?;
                Ok(g.concat(&[x, drp])?)
            }
            _ => Ok(x),
        }
    }

    fn full_drp(&self, g: &mut Graph, hots: &[Var]) -> Result<Var> {
        let dr = self.dr.as_ref().expect("DR wiring registered for RBP variants");
        let blocks = dr.drn(g, hots, None)?;
        dr.drp(g, &self.store, &blocks)
    }

    /// Records a forward pass for `batch` on `g`. With `train` set, dropout
    /// is active and RBP3 uses the true next tokens (teacher forcing).
    pub fn forward(&self, g: &mut Graph, batch: &[Vec<usize>], mut train: Option<TrainPass>) -> Result<Forward> {
        self.check_batch(batch)?;
        let rows = batch.len();
        let h_size = self.config.hidden_size;
        let hots = self.one_hots(g, batch);
        let mid = self.config.rbp.mid_fusion();
        let mut states = Vec::new();

        let top = if self.config.architecture == Architecture::Ffnn {
            let x = g.concat(&hots)?;
            let mut x = self.early(g, x, &hots, None)?;
            for (l, layer) in self.layers.iter().enumerate() {
                let Layer::Dense(d) = layer else { unreachable!() };
                let a = self.affine(g, d, x)?;
                let a = g.relu(a);
                x = self.dropout(g, a, &mut train)?;
                if l == 0 && mid {
                    let drp = self.full_drp(g, &hots)?;
                    x = g.concat(&[x, drp])?;
                }
            }
            x
        } else {
            let mut hs: Vec<Var> = self.layers.iter().map(|_| g.input(Tensor::zeros(&[rows, h_size]))).collect();
            let mut cs = hs.clone();
            for t in 0..self.config.context_len {
                let mut x = self.early(g, hots[t], &hots, Some(t))?;
                for (l, layer) in self.layers.iter().enumerate() {
                    let (h, c) = self.cell(g, layer, x, hs[l], cs[l])?;
                    hs[l] = h;
                    cs[l] = c;
                    x = if l + 1 < self.layers.len() { self.dropout(g, h, &mut train)? } else { h };
                }
                states.push(x);
            }
            let last = *states.last().expect("context_len >= 1");
            let x = self.dropout(g, last, &mut train)?;
            if mid {
                let drp = self.full_drp(g, &hots)?;
                g.concat(&[x, drp])?
            } else {
                x
            }
        };

        let logits = self.affine(g, &self.out, top)?;
        let base = g.softmax(logits);
        let Some(head) = &self.head else {
            return Ok(Forward {
                probs: base,
                relations: None,
                states,
            });
        };
        let drp_in = self.full_drp(g, &hots)?;
        let estimate = head.forward(g, &self.store, drp_in)?;
        let (relations, targets) = match &train {
            Some(t) => {
                let rows = batch
                    .iter()
                    .zip(t.targets)
                    .map(|(ctx, &next)| drp_out_targets(ctx, Some(next)))
                    .collect::<Result<Vec<_>>>()?;
                let truth = Tensor::from_rows(&rows)?;
                let fed = if self.config.teacher_forcing { g.input(truth.clone()) } else { estimate };
                (fed, Some(truth))
            }
            None => (estimate, None),
        };
        let probs = head.mix(g, &self.store, base, relations, batch)?;
        Ok(Forward {
            probs,
            relations: targets.map(|t| (estimate, t)),
            states,
        })
    }

    /// Output distributions for each sequence (evaluation mode).
    pub fn predict_proba(&self, batch: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let f = self.forward(&mut g, batch, None)?;
        let p = g.value(f.probs);
        Ok((0..p.rows()).map(|r| p.row(r).to_vec()).collect())
    }

    /// Most probable output for each sequence; ties go to the lowest index.
    pub fn predict(&self, batch: &[Vec<usize>]) -> Result<Vec<usize>> {
        let mut g = Graph::new();
        let f = self.forward(&mut g, batch, None)?;
        Ok(g.value(f.probs).argmax_rows())
    }

    /// Top-layer hidden state after every step (recurrent models only).
    pub fn hidden_states(&self, seq: &[usize]) -> Result<Vec<Vec<f64>>> {
        let mut g = Graph::new();
        let f = self.forward(&mut g, &[seq.to_vec()], None)?;
        Ok(f.states.iter().map(|&s| g.value(s).data().to_vec()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ffnn_input_width() {
        let m = Model::new(ModelConfig::classifier(Architecture::Ffnn, RbpVariant::None, 12)).unwrap();
        let w = m.store.value(m.store.find("l0.w").unwrap());
        assert_eq!(w.shape(), &[36, 50]);
        let m = Model::new(ModelConfig::classifier(Architecture::Ffnn, RbpVariant::Rbp1n, 12)).unwrap();
        assert_eq!(m.store.value(m.store.find("l0.w").unwrap()).shape(), &[72, 50]);
        let m = Model::new(ModelConfig::classifier(Architecture::Ffnn, RbpVariant::Rbp2, 12)).unwrap();
        assert_eq!(m.store.value(m.store.find("out.w").unwrap()).shape(), &[53, 2]);
    }

    #[test]
    fn outputs_are_distributions() {
        for arch in Architecture::ALL {
            for rbp in [RbpVariant::None, RbpVariant::Rbp1n, RbpVariant::Rbp1p, RbpVariant::Rbp2] {
                let mut cfg = ModelConfig::classifier(arch, rbp, 6);
                cfg.layers = 2;
                let m = Model::new(cfg).unwrap();
                for p in m.predict_proba(&[vec![0, 1, 0], vec![5, 5, 2]]).unwrap() {
                    assert_eq!(p.len(), 2);
                    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                }
            }
        }
        let m = Model::new(ModelConfig::predictor(Architecture::Lstm, RbpVariant::Rbp3, 12)).unwrap();
        let p = &m.predict_proba(&[vec![3, 4]]).unwrap()[0];
        assert_eq!(p.len(), 12);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_weights_give_uniform() {
        for arch in Architecture::ALL {
            let mut m = Model::new(ModelConfig::classifier(arch, RbpVariant::Rbp2, 12)).unwrap();
            m.zero_weights();
            assert_eq!(m.predict_proba(&[vec![1, 2, 1]]).unwrap()[0], vec![0.5, 0.5]);
        }
    }

    #[test]
    fn wrong_length_rejected() {
        let m = Model::new(ModelConfig::classifier(Architecture::Rnn, RbpVariant::None, 4)).unwrap();
        assert!(m.predict(&[vec![0, 1]]).is_err());
        assert!(m.predict(&[vec![0, 1, 4]]).is_err());
    }
}
