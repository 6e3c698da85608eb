//! The classifier zoo: an MLP baseline, hypercube graph-convolutional
//! baselines, and powerset CNNs for the absorbing and union shifts, each
//! with optional pooling and an optional accumulation (average) step.
//!
//! Convolutional models stack three conv layers (32 channels), optionally
//! pooling after each one, then feed either the flattened features or the
//! per-channel means into an MLP head with one hidden layer of 512 units.
//! The MLP baseline maps the flattened input through two hidden layers of
//! 4096 units.

use ndarray::Array2;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::ShiftModel;

use super::{
    accumulate_backward, accumulate_forward, softmax_cross_entropy, Activation, ConvCache,
    ConvLayer, DenseLayer, GraphCache, GraphConvLayer, GraphVariant, PoolLayer, SignalTensor,
};

/// One row of the model table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelTag {
    Mlp,
    LGcn,
    LGcnPool,
    LGcnPoolAvg,
    AGcn,
    AGcnPool,
    AGcnPoolAvg,
    StarPcn,
    StarPcnPool,
    StarPcnPoolAvg,
    DiamondPcn,
    DiamondPcnPool,
    DiamondPcnPoolAvg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Family {
    Mlp,
    LGcn,
    AGcn,
    StarPcn,
    DiamondPcn,
}

impl ModelTag {
    pub const ALL: [ModelTag; 13] = [
        ModelTag::Mlp,
        ModelTag::LGcn,
        ModelTag::LGcnPool,
        ModelTag::LGcnPoolAvg,
        ModelTag::AGcn,
        ModelTag::AGcnPool,
        ModelTag::AGcnPoolAvg,
        ModelTag::StarPcn,
        ModelTag::StarPcnPool,
        ModelTag::StarPcnPoolAvg,
        ModelTag::DiamondPcn,
        ModelTag::DiamondPcnPool,
        ModelTag::DiamondPcnPoolAvg,
    ];

    fn family(self) -> Family {
        use ModelTag::*;
        match self {
            Mlp => Family::Mlp,
            LGcn | LGcnPool | LGcnPoolAvg => Family::LGcn,
            AGcn | AGcnPool | AGcnPoolAvg => Family::AGcn,
            StarPcn | StarPcnPool | StarPcnPoolAvg => Family::StarPcn,
            DiamondPcn | DiamondPcnPool | DiamondPcnPoolAvg => Family::DiamondPcn,
        }
    }

    pub fn has_pool(self) -> bool {
        use ModelTag::*;
        matches!(
            self,
            LGcnPool
                | LGcnPoolAvg
                | AGcnPool
                | AGcnPoolAvg
                | StarPcnPool
                | StarPcnPoolAvg
                | DiamondPcnPool
                | DiamondPcnPoolAvg
        )
    }

    pub fn has_accumulate(self) -> bool {
        use ModelTag::*;
        matches!(self, LGcnPoolAvg | AGcnPoolAvg | StarPcnPoolAvg | DiamondPcnPoolAvg)
    }
}

impl std::fmt::Display for ModelTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        use ModelTag::*;
        let s = match self {
            Mlp => "MLP",
            LGcn => "L-GCN",
            LGcnPool => "L-GCN pool",
            LGcnPoolAvg => "L-GCN pool avg",
            AGcn => "A-GCN",
            AGcnPool => "A-GCN pool",
            AGcnPoolAvg => "A-GCN pool avg",
            StarPcn => "*-PCN",
            StarPcnPool => "*-PCN pool",
            StarPcnPoolAvg => "*-PCN pool avg",
            DiamondPcn => "diamond-PCN",
            DiamondPcnPool => "diamond-PCN pool",
            DiamondPcnPoolAvg => "diamond-PCN pool avg",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ModelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .map(|c| if c == '_' || c == ' ' { '-' } else { c })
            .collect();
        use ModelTag::*;
        let tag = match norm.as_str() {
            "mlp" => Mlp,
            "l-gcn" => LGcn,
            "l-gcn-pool" => LGcnPool,
            "l-gcn-pool-avg" => LGcnPoolAvg,
            "a-gcn" => AGcn,
            "a-gcn-pool" => AGcnPool,
            "a-gcn-pool-avg" => AGcnPoolAvg,
            "*-pcn" | "star-pcn" => StarPcn,
            "*-pcn-pool" | "star-pcn-pool" => StarPcnPool,
            "*-pcn-pool-avg" | "star-pcn-pool-avg" => StarPcnPoolAvg,
            "diamond-pcn" | "d-pcn" => DiamondPcn,
            "diamond-pcn-pool" | "d-pcn-pool" => DiamondPcnPool,
            "diamond-pcn-pool-avg" | "d-pcn-pool-avg" => DiamondPcnPoolAvg,
            _ => return Err(Error::UnknownModelTag(s.to_string())),
        };
        Ok(tag)
    }
}

/// Architecture hyperparameters for one model instance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ModelConfig {
    pub tag: ModelTag,
    pub conv_channels: usize,
    pub conv_layers: usize,
    pub head_hidden: usize,
    pub mlp_hidden: usize,
    pub pool: bool,
    pub accumulate: bool,
    pub classes: usize,
}

impl ModelConfig {
    pub fn from_tag(tag: ModelTag, classes: usize) -> Self {
        Self {
            tag,
            conv_channels: 32,
            conv_layers: 3,
            head_hidden: 512,
            mlp_hidden: 4096,
            pool: tag.has_pool(),
            accumulate: tag.has_accumulate(),
            classes,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LatticeOp<F> {
    Conv(ConvLayer<F>),
    Graph(GraphConvLayer<F>),
    Pool(PoolLayer),
}

enum StageCache<F> {
    Conv(ConvCache<F>),
    Graph(GraphCache<F>),
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeadInput {
    Flatten,
    ChannelMeans,
}

pub struct Model<F> {
    n_input: usize,
    classes: usize,
    ops: Vec<LatticeOp<F>>,
    head_input: HeadInput,
    head: Vec<DenseLayer<F>>,
}

/// Activations cached by one forward pass, consumed by `backward`.
pub struct Forward<F> {
    pub inputs: Vec<SignalTensor<F>>,
    stage_outs: Vec<Vec<SignalTensor<F>>>,
    caches: Vec<StageCache<F>>,
    head_acts: Vec<Array2<F>>,
}

impl<F: Real> Forward<F> {
    pub fn logits(&self) -> &Array2<F> {
        self.head_acts.last().expect("head has at least one layer")
    }
}

/// Builds the model for `cfg` on a ground set of size `n`, drawing the
/// initialization from `rng` in a fixed order.
pub fn build_model<F: Real>(cfg: &ModelConfig, n: usize, rng: &mut ChaCha8Rng) -> Result<Model<F>> {
    if cfg.classes < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {}", cfg.classes)));
    }
    let family = cfg.tag.family();
    let mut ops: Vec<LatticeOp<F>> = Vec::new();
    let mut head: Vec<DenseLayer<F>> = Vec::new();
    let head_input;
    match family {
        Family::Mlp => {
            head_input = HeadInput::Flatten;
            let dims =
                [1usize << n, cfg.mlp_hidden, cfg.mlp_hidden, cfg.classes];
            for i in 0..3 {
                let act = if i < 2 { Activation::Relu } else { Activation::Identity };
                let mut layer = DenseLayer::new(dims[i], dims[i + 1], act);
                layer.init_glorot(rng);
                head.push(layer);
            }
        }
        _ => {
            let ch = cfg.conv_channels;
            let mut cur_n = n;
            for l in 0..cfg.conv_layers {
                let in_ch = if l == 0 { 1 } else { ch };
                let op = match family {
                    Family::StarPcn => {
                        let mut c = ConvLayer::one_hop(ShiftModel::Absorb, cur_n, in_ch, ch);
                        c.init_glorot(rng);
                        LatticeOp::Conv(c)
                    }
                    Family::DiamondPcn => {
                        let mut c = ConvLayer::one_hop(ShiftModel::Union, cur_n, in_ch, ch);
                        c.init_glorot(rng);
                        LatticeOp::Conv(c)
                    }
                    Family::LGcn => {
                        let mut g = GraphConvLayer::new(GraphVariant::Laplacian, cur_n, in_ch, ch);
                        g.init_glorot(rng);
                        LatticeOp::Graph(g)
                    }
                    Family::AGcn => {
                        let mut g = GraphConvLayer::new(GraphVariant::Adjacency, cur_n, in_ch, ch);
                        g.init_glorot(rng);
                        LatticeOp::Graph(g)
                    }
                    Family::Mlp => unreachable!(),
                };
                ops.push(op);
                if cfg.pool {
                    ops.push(LatticeOp::Pool(PoolLayer::new(cur_n)?));
                    cur_n -= 1;
                }
            }
            head_input =
                if cfg.accumulate { HeadInput::ChannelMeans } else { HeadInput::Flatten };
            let in_dim = match head_input {
                HeadInput::ChannelMeans => ch,
                HeadInput::Flatten => (1usize << cur_n) * ch,
            };
            let mut hidden = DenseLayer::new(in_dim, cfg.head_hidden, Activation::Relu);
            hidden.init_glorot(rng);
            head.push(hidden);
            let mut out = DenseLayer::new(cfg.head_hidden, cfg.classes, Activation::Identity);
            out.init_glorot(rng);
            head.push(out);
        }
    }
    Ok(Model { n_input: n, classes: cfg.classes, ops, head_input, head })
}

fn pack_flatten<F: Real>(batch: &[SignalTensor<F>]) -> Array2<F> {
    let feat = batch.first().map(|t| t.values().len()).unwrap_or(0);
    let mut x = Array2::zeros((batch.len(), feat));
    for (mut row, t) in x.rows_mut().into_iter().zip(batch) {
        row.as_slice_mut().expect("standard layout").copy_from_slice(t.values());
    }
    x
}

fn pack_means<F: Real>(batch: &[SignalTensor<F>]) -> Array2<F> {
    let ch = batch.first().map(|t| t.channels()).unwrap_or(0);
    let mut x = Array2::zeros((batch.len(), ch));
    for (mut row, t) in x.rows_mut().into_iter().zip(batch) {
        let means = accumulate_forward(t);
        row.as_slice_mut().expect("standard layout").copy_from_slice(&means);
    }
    x
}

impl<F: Real> Model<F> {
    pub fn input_size(&self) -> usize {
        self.n_input
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn ops(&self) -> &[LatticeOp<F>] {
        &self.ops
    }

    pub fn param_count(&self) -> usize {
        let lattice: usize = self
            .ops
            .iter()
            .map(|op| match op {
                LatticeOp::Conv(c) => c.param_count(),
                LatticeOp::Graph(g) => g.param_count(),
                LatticeOp::Pool(_) => 0,
            })
            .sum();
        lattice + self.head.iter().map(|l| l.param_count()).sum::<usize>()
    }

    pub fn visit_params(&mut self, f: &mut impl FnMut(&mut [F], &mut [F])) {
        for op in &mut self.ops {
            match op {
                LatticeOp::Conv(c) => c.visit_params(f),
                LatticeOp::Graph(g) => g.visit_params(f),
                LatticeOp::Pool(_) => {}
            }
        }
        for layer in &mut self.head {
            layer.visit_params(f);
        }
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(&mut |_w, g| g.fill(F::zero()));
    }

    /// Named parameter buffers (prefix, name, shape, values as f64).
    pub fn named_params(&self) -> Vec<(String, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, op) in self.ops.iter().enumerate() {
            let entries = match op {
                LatticeOp::Conv(c) => c.named_params(),
                LatticeOp::Graph(g) => g.named_params(),
                LatticeOp::Pool(_) => continue,
            };
            for (name, shape, values) in entries {
                out.push((format!("op{i}.{name}"), shape, values));
            }
        }
        for (j, layer) in self.head.iter().enumerate() {
            for (name, shape, values) in layer.named_params() {
                out.push((format!("head{j}.{name}"), shape, values));
            }
        }
        out
    }

    pub fn load_named_param(&mut self, full_name: &str, values: &[f64]) -> Result<()> {
        let (prefix, name) = full_name
            .split_once('.')
            .ok_or_else(|| Error::Checkpoint(format!("malformed parameter name `{full_name}`")))?;
        if let Some(idx) = prefix.strip_prefix("op") {
            let i: usize = idx
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad op index in `{full_name}`")))?;
            match self.ops.get_mut(i) {
                Some(LatticeOp::Conv(c)) => c.load_params(name, values),
                Some(LatticeOp::Graph(g)) => g.load_params(name, values),
                _ => Err(Error::Checkpoint(format!("no parameterized op at index {i}"))),
            }
        } else if let Some(idx) = prefix.strip_prefix("head") {
            let j: usize = idx
                .parse()
                .map_err(|_| Error::Checkpoint(format!("bad head index in `{full_name}`")))?;
            match self.head.get_mut(j) {
                Some(layer) => layer.load_params(name, values),
                None => Err(Error::Checkpoint(format!("no head layer at index {j}"))),
            }
        } else {
            Err(Error::Checkpoint(format!("unknown parameter prefix in `{full_name}`")))
        }
    }

    pub fn forward(&self, inputs: Vec<SignalTensor<F>>) -> Result<Forward<F>> {
        let mut stage_outs: Vec<Vec<SignalTensor<F>>> = Vec::with_capacity(self.ops.len());
        let mut caches: Vec<StageCache<F>> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let cur: &[SignalTensor<F>] =
                if i == 0 { &inputs } else { &stage_outs[i - 1] };
            match op {
                LatticeOp::Conv(c) => {
                    let (outs, cache) = c.forward_batch(cur)?;
                    stage_outs.push(outs);
                    caches.push(StageCache::Conv(cache));
                }
                LatticeOp::Graph(g) => {
                    let (outs, cache) = g.forward_batch(cur)?;
                    stage_outs.push(outs);
                    caches.push(StageCache::Graph(cache));
                }
                LatticeOp::Pool(p) => {
                    let outs = p.forward_batch(cur)?;
                    stage_outs.push(outs);
                    caches.push(StageCache::None);
                }
            }
        }
        let last: &[SignalTensor<F>] = stage_outs.last().map(|v| &v[..]).unwrap_or(&inputs);
        let packed = match self.head_input {
            HeadInput::Flatten => pack_flatten(last),
            HeadInput::ChannelMeans => pack_means(last),
        };
        let mut head_acts = Vec::with_capacity(self.head.len() + 1);
        head_acts.push(packed);
        for layer in &self.head {
            let y = layer.forward_batch(head_acts.last().expect("nonempty"))?;
            head_acts.push(y);
        }
        Ok(Forward { inputs, stage_outs, caches, head_acts })
    }

    /// Convenience wrapper returning logits only.
    pub fn predict(&self, inputs: Vec<SignalTensor<F>>) -> Result<Vec<u16>> {
        let fwd = self.forward(inputs)?;
        let logits = fwd.logits();
        Ok(logits
            .rows()
            .into_iter()
            .map(|row| {
                let mut best = 0usize;
                for (c, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = c;
                    }
                }
                best as u16
            })
            .collect())
    }

    /// Cross-entropy backward pass. Parameter gradients are zeroed first,
    /// so they hold exactly this batch's gradients afterwards; input
    /// gradients land in `fwd.inputs` (for conv models). Returns the loss.
    pub fn backward(&mut self, fwd: &mut Forward<F>, labels: &[u16]) -> Result<f64> {
        self.zero_grads();
        let (loss, mut g) = softmax_cross_entropy(fwd.logits(), labels)?;
        let has_lattice = !self.ops.is_empty();
        for i in (0..self.head.len()).rev() {
            let want_gx = i > 0 || has_lattice;
            let (xs, rest) = fwd.head_acts.split_at(i + 1);
            let x = &xs[i];
            let y = &rest[0];
            let gx = self.head[i].backward_batch(x, y, &g, want_gx)?;
            match gx {
                Some(next) => g = next,
                None => break,
            }
        }
        if !has_lattice {
            return Ok(loss);
        }
        // Scatter the head-input gradient onto the last lattice output.
        {
            let last: &mut Vec<SignalTensor<F>> = match self.ops.len() {
                0 => &mut fwd.inputs,
                k => &mut fwd.stage_outs[k - 1],
            };
            match self.head_input {
                HeadInput::Flatten => {
                    for (t, row) in last.iter_mut().zip(g.rows()) {
                        t.grad_mut().copy_from_slice(row.as_slice().expect("standard layout"));
                    }
                }
                HeadInput::ChannelMeans => {
                    for (t, row) in last.iter_mut().zip(g.rows()) {
                        accumulate_backward(row.as_slice().expect("standard layout"), t);
                    }
                }
            }
        }
        for i in (0..self.ops.len()).rev() {
            let (before, after) = fwd.stage_outs.split_at_mut(i);
            let outs = &after[0];
            let gin: &mut Vec<SignalTensor<F>> = if i == 0 {
                &mut fwd.inputs
            } else {
                &mut before[i - 1]
            };
            match (&mut self.ops[i], &fwd.caches[i]) {
                (LatticeOp::Conv(c), StageCache::Conv(cache)) => {
                    c.backward_batch(outs, cache, gin)?
                }
                (LatticeOp::Graph(gr), StageCache::Graph(cache)) => {
                    gr.backward_batch(outs, cache, gin)?
                }
                (LatticeOp::Pool(p), StageCache::None) => p.backward_batch(outs, gin)?,
                _ => unreachable!("cache kind always matches op kind"),
            }
        }
        Ok(loss)
    }
}
