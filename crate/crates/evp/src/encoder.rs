//! The dynamic graph encoder: L layers of temporal multi-head attention over
//! a node's most recent interactions.
//!
//! Layer l at query time t fuses the layer-(l-1) self state with TE(0) as
//! the attention query; each sampled neighbor (u, t') contributes its
//! layer-(l-1) state at *its own interaction time* fused with TE(t - t') as
//! key and value. An empty neighborhood passes the fused self state straight
//! through the output projection. Layer 0 is a learned projection of the
//! node's static features, optionally summed with the mean edge features of
//! its sampled events.
//!
//! All time deltas are divided by `time_scale` (the dataset's mean
//! inter-event gap, captured when the encoder is initialized) before
//! encoding or decay, so frequency and decay magnitudes are
//! dataset-independent.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::graph::{NeighborIndex, TemporalGraph};
use crate::seeding::stream_rng;
use crate::time_encoding::{init_frequencies, FrequencyScheme, TimeEncoderParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub hidden_dim: usize,
    pub feature_dim: usize,
    pub layers: usize,
    pub heads: usize,
    pub neighbor_budget: usize,
    /// Sum the mean edge features of a node's sampled events into its
    /// layer-0 state (the only node signal in datasets without node
    /// features).
    pub use_edge_features: bool,
    pub te_scheme: FrequencyScheme,
    pub te_learnable: bool,
    /// Scale the geometric frequency base by the dataset's normalized span.
    pub te_span_scale: bool,
    /// Divisor applied to every time delta; the dataset's mean
    /// inter-event gap.
    pub time_scale: f64,
    /// Time span in normalized units, for frequency-base scaling.
    pub time_span_norm: f64,
}

impl EncoderConfig {
    pub fn new(hidden_dim: usize, feature_dim: usize) -> Self {
        Self {
            hidden_dim,
            feature_dim,
            layers: 2,
            heads: 2,
            neighbor_budget: 20,
            use_edge_features: true,
            te_scheme: FrequencyScheme::Geometric,
            te_learnable: false,
            te_span_scale: true,
            time_scale: 1.0,
            time_span_norm: 1.0,
        }
    }

    /// Capture the dataset's time geometry. Must be called before `init`
    /// when training on real data; fixtures may leave the defaults.
    pub fn with_graph_time(mut self, g: &TemporalGraph) -> Self {
        self.time_scale = g.mean_per_node_gap();
        let (lo, hi) = g.time_span();
        self.time_span_norm = ((hi - lo) / self.time_scale).max(1.0);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.hidden_dim;
        if d == 0 || d % 2 != 0 {
            return Err(Error::Config(format!("hidden_dim must be even and positive, got {d}")));
        }
        if self.heads == 0 || d % self.heads != 0 {
            return Err(Error::Config(format!(
                "hidden_dim {d} not divisible by heads {}",
                self.heads
            )));
        }
        if self.layers == 0 {
            return Err(Error::Config("need at least one layer".into()));
        }
        if self.time_scale <= 0.0 {
            return Err(Error::Config("time_scale must be positive".into()));
        }
        Ok(())
    }
}

/// One attention layer's weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams {
    pub fuse_w: Vec<f64>, // d x 2d
    pub fuse_b: Vec<f64>, // d
    pub wq: Vec<f64>,     // d x d
    pub wk: Vec<f64>,     // d x d
    pub wv: Vec<f64>,     // d x d
    pub wo: Vec<f64>,     // d x d
    pub out_b: Vec<f64>,  // d
}

/// All trainable weights of the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub config: EncoderConfig,
    pub in_w: Vec<f64>, // d x feature_dim
    pub in_b: Vec<f64>, // d
    pub layers: Vec<LayerParams>,
    pub time: TimeEncoderParams,
}

fn xavier(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| rng.gen_range(-a..a)).collect()
}

impl EncoderParams {
    pub fn init(config: EncoderConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let d = config.hidden_dim;
        let span = config.te_span_scale.then_some(config.time_span_norm);
        let time = init_frequencies(d, config.te_scheme, span, seed, config.te_learnable)?;

        let mut in_rng = stream_rng(seed, "encoder/input");
        let in_w = xavier(&mut in_rng, d, config.feature_dim);
        let in_b = vec![0.0; d];

        let layers = (0..config.layers)
            .map(|l| {
                let mut r = stream_rng(seed, &format!("encoder/layer/{l}"));
                LayerParams {
                    fuse_w: xavier(&mut r, d, 2 * d),
                    fuse_b: vec![0.0; d],
                    wq: xavier(&mut r, d, d),
                    wk: xavier(&mut r, d, d),
                    wv: xavier(&mut r, d, d),
                    wo: xavier(&mut r, d, d),
                    out_b: vec![0.0; d],
                }
            })
            .collect();

        Ok(Self { config, in_w, in_b, layers, time })
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    /// Visit every tensor with a stable name, in a fixed order.
    pub fn visit_tensors<'a>(&'a self, mut f: impl FnMut(String, &'a [f64])) {
        f("in_w".into(), &self.in_w);
        f("in_b".into(), &self.in_b);
        for (l, lp) in self.layers.iter().enumerate() {
            f(format!("layer{l}/fuse_w"), &lp.fuse_w);
            f(format!("layer{l}/fuse_b"), &lp.fuse_b);
            f(format!("layer{l}/wq"), &lp.wq);
            f(format!("layer{l}/wk"), &lp.wk);
            f(format!("layer{l}/wv"), &lp.wv);
            f(format!("layer{l}/wo"), &lp.wo);
            f(format!("layer{l}/out_b"), &lp.out_b);
        }
        f("omega".into(), &self.time.omega);
    }

    pub fn visit_tensors_mut(&mut self, mut f: impl FnMut(&str, &mut Vec<f64>)) {
        f("in_w", &mut self.in_w);
        f("in_b", &mut self.in_b);
        for (l, lp) in self.layers.iter_mut().enumerate() {
            f(&format!("layer{l}/fuse_w"), &mut lp.fuse_w);
            f(&format!("layer{l}/fuse_b"), &mut lp.fuse_b);
            f(&format!("layer{l}/wq"), &mut lp.wq);
            f(&format!("layer{l}/wk"), &mut lp.wk);
            f(&format!("layer{l}/wv"), &mut lp.wv);
            f(&format!("layer{l}/wo"), &mut lp.wo);
            f(&format!("layer{l}/out_b"), &mut lp.out_b);
        }
        f("omega", &mut self.time.omega);
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_tensors(|_, t| out.extend_from_slice(t));
        out
    }

    pub fn set_from_flat(&mut self, theta: &[f64]) {
        let mut off = 0;
        self.visit_tensors_mut(|_, t| {
            let len = t.len();
            t.copy_from_slice(&theta[off..off + len]);
            off += len;
        });
        assert_eq!(off, theta.len(), "flat parameter length mismatch");
    }

    /// Bit-level digest of all tensors; used by the frozen-encoder checks.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        self.visit_tensors(|name, t| {
            h.update(name.as_bytes());
            for v in t {
                h.update(v.to_le_bytes());
            }
        });
        format!("{:x}", h.finalize())
    }

    /// Bind every tensor as a tape leaf for a traced forward pass.
    pub fn bind(&self, tape: &mut Tape) -> EncoderVars {
        EncoderVars {
            in_w: tape.leaf(self.in_w.clone()),
            in_b: tape.leaf(self.in_b.clone()),
            layers: self
                .layers
                .iter()
                .map(|lp| LayerVars {
                    fuse_w: tape.leaf(lp.fuse_w.clone()),
                    fuse_b: tape.leaf(lp.fuse_b.clone()),
                    wq: tape.leaf(lp.wq.clone()),
                    wk: tape.leaf(lp.wk.clone()),
                    wv: tape.leaf(lp.wv.clone()),
                    wo: tape.leaf(lp.wo.clone()),
                    out_b: tape.leaf(lp.out_b.clone()),
                })
                .collect(),
            omega: tape.leaf(self.time.omega.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub fuse_w: Var,
    pub fuse_b: Var,
    pub wq: Var,
    pub wk: Var,
    pub wv: Var,
    pub wo: Var,
    pub out_b: Var,
}

#[derive(Debug, Clone)]
pub struct EncoderVars {
    pub in_w: Var,
    pub in_b: Var,
    pub layers: Vec<LayerVars>,
    pub omega: Var,
}

/// Final-layer embedding of one node at one query time.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEmbedding {
    pub node: u32,
    pub time: f64,
    pub vector: Vec<f64>,
}

/// Cross-query cache of layer-state values, valid for one fixed parameter
/// set (the owner drops it whenever parameters change). Thread-safe so a
/// worker pool can share it; values are deterministic, so racing inserts are
/// harmless.
pub struct EmbedCache {
    map: RwLock<HashMap<(u8, u32, u64), Arc<Vec<f64>>>>,
    max_entries: usize,
}

impl EmbedCache {
    pub fn new(hidden_dim: usize) -> Self {
        // Cap the cache near 400 MB regardless of hidden size.
        let max_entries = (400_000_000 / (8 * hidden_dim.max(1))).max(10_000);
        Self {
            map: RwLock::new(HashMap::new()),
            max_entries,
        }
    }

    fn get(&self, key: (u8, u32, u64)) -> Option<Arc<Vec<f64>>> {
        self.map.read().unwrap().get(&key).cloned()
    }

    fn insert(&self, key: (u8, u32, u64), value: Arc<Vec<f64>>) {
        let mut m = self.map.write().unwrap();
        if m.len() < self.max_entries {
            m.insert(key, value);
        }
    }

    pub fn len(&self) -> usize {
        self.map.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Per-tape memo of already-built layer states.
pub type StateMemo = HashMap<(u8, u32, u64), Var>;

pub struct Encoder<'g> {
    pub params: &'g EncoderParams,
    pub graph: &'g TemporalGraph,
    pub index: &'g NeighborIndex,
}

impl<'g> Encoder<'g> {
    pub fn new(
        params: &'g EncoderParams,
        graph: &'g TemporalGraph,
        index: &'g NeighborIndex,
    ) -> Result<Self> {
        if params.config.feature_dim != graph.feature_dim() {
            return Err(Error::Shape(format!(
                "encoder expects feature dim {}, graph has {}",
                params.config.feature_dim,
                graph.feature_dim()
            )));
        }
        Ok(Self { params, graph, index })
    }

    /// Fuse a hidden state with a time encoding: affine projection of the
    /// concatenation back to the hidden dimension.
    pub fn fuse(&self, tape: &mut Tape, layer: &LayerVars, h: Var, te: Var) -> Var {
        let d = self.params.config.hidden_dim;
        assert_eq!(tape.value(h).len(), d);
        assert_eq!(tape.value(te).len(), d);
        let cat = tape.concat(&[h, te]);
        let proj = tape.matvec(layer.fuse_w, cat, d, 2 * d);
        tape.add(proj, layer.fuse_b)
    }

    /// Multi-head attention with the fused self state as query and fused
    /// neighbor states as keys and values. `neighbor_states` pairs each
    /// neighbor's layer-(l-1) state with its normalized time delta.
    pub fn layer_forward(
        &self,
        tape: &mut Tape,
        vars: &EncoderVars,
        layer_idx: usize,
        self_state: Var,
        neighbor_states: &[(Var, f64)],
    ) -> Var {
        let cfg = &self.params.config;
        let d = cfg.hidden_dim;
        let heads = cfg.heads;
        let dh = d / heads;
        let layer = vars.layers[layer_idx];

        let te0 = tape.cos_sin_time(vars.omega, 0.0);
        let fused_self = self.fuse(tape, &layer, self_state, te0);

        if neighbor_states.is_empty() {
            let o = tape.matvec(layer.wo, fused_self, d, d);
            return tape.add(o, layer.out_b);
        }

        let q = tape.matvec(layer.wq, fused_self, d, d);
        let mut keys = Vec::with_capacity(neighbor_states.len());
        let mut vals = Vec::with_capacity(neighbor_states.len());
        for (state, dt) in neighbor_states {
            let te = tape.cos_sin_time(vars.omega, *dt);
            let fused = self.fuse(tape, &layer, *state, te);
            keys.push(tape.matvec(layer.wk, fused, d, d));
            vals.push(tape.matvec(layer.wv, fused, d, d));
        }

        let scale = 1.0 / (dh as f64).sqrt();
        let mut head_outs = Vec::with_capacity(heads);
        for h in 0..heads {
            let q_h = tape.slice(q, h * dh, dh);
            let logits: Vec<Var> = keys
                .iter()
                .map(|k| {
                    let k_h = tape.slice(*k, h * dh, dh);
                    let dot = tape.dot(q_h, k_h);
                    tape.scale(dot, scale)
                })
                .collect();
            let logit_vec = tape.concat(&logits);
            let alpha = tape.softmax(logit_vec);
            let mut acc: Option<Var> = None;
            for (j, v) in vals.iter().enumerate() {
                let v_h = tape.slice(*v, h * dh, dh);
                let a_j = tape.slice(alpha, j, 1);
                let term = tape.scale_by_scalar(v_h, a_j);
                acc = Some(match acc {
                    None => term,
                    Some(s) => tape.add(s, term),
                });
            }
            head_outs.push(acc.unwrap());
        }
        let attn = tape.concat(&head_outs);
        let o = tape.matvec(layer.wo, attn, d, d);
        tape.add(o, layer.out_b)
    }

    /// Attention weights of one head over the given neighbor states, for
    /// diagnostics and tests.
    pub fn attention_weights(
        &self,
        layer_idx: usize,
        head: usize,
        self_state: &[f64],
        neighbor_states: &[(Vec<f64>, f64)],
    ) -> Vec<f64> {
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let cfg = &self.params.config;
        let (d, dh) = (cfg.hidden_dim, cfg.hidden_dim / cfg.heads);
        let layer = vars.layers[layer_idx];
        let sv = tape.leaf(self_state.to_vec());
        let te0 = tape.cos_sin_time(vars.omega, 0.0);
        let fused_self = self.fuse(&mut tape, &layer, sv, te0);
        let q = tape.matvec(layer.wq, fused_self, d, d);
        let q_h = tape.slice(q, head * dh, dh);
        let logits: Vec<Var> = neighbor_states
            .iter()
            .map(|(state, dt)| {
                let s = tape.leaf(state.clone());
                let te = tape.cos_sin_time(vars.omega, *dt);
                let fused = self.fuse(&mut tape, &layer, s, te);
                let k = tape.matvec(layer.wk, fused, d, d);
                let k_h = tape.slice(k, head * dh, dh);
                let dot = tape.dot(q_h, k_h);
                tape.scale(dot, 1.0 / (dh as f64).sqrt())
            })
            .collect();
        let lv = tape.concat(&logits);
        let alpha = tape.softmax(lv);
        tape.value(alpha).to_vec()
    }

    /// Layer-0 input: static node features, plus the mean edge features of
    /// the node's sampled events when enabled. Pure data, no gradient.
    fn raw_features(&self, v: u32, t: f64) -> Vec<f64> {
        let dim = self.graph.feature_dim();
        let mut raw = self.graph.node_features(v).to_vec();
        if self.params.config.use_edge_features && dim > 0 {
            let recents =
                self.index
                    .recent_neighbors(v, t, self.params.config.neighbor_budget);
            if !recents.is_empty() {
                let inv = 1.0 / recents.len() as f64;
                for e in &recents {
                    let feats = self.graph.edge_features(e.event_id as usize);
                    for (acc, x) in raw.iter_mut().zip(feats) {
                        *acc += x * inv;
                    }
                }
            }
        }
        raw
    }

    /// Layer state with per-tape memoization and optional read/write-through
    /// to a value cache (only sound while parameters are frozen).
    pub fn state(
        &self,
        tape: &mut Tape,
        vars: &EncoderVars,
        layer: usize,
        v: u32,
        t: f64,
        memo: &mut StateMemo,
        cache: Option<&EmbedCache>,
    ) -> Var {
        let key = (layer as u8, v, t.to_bits());
        if let Some(var) = memo.get(&key) {
            return *var;
        }
        if let Some(c) = cache {
            if let Some(val) = c.get(key) {
                let var = tape.leaf(val.as_ref().clone());
                memo.insert(key, var);
                return var;
            }
        }

        let cfg = &self.params.config;
        let d = cfg.hidden_dim;
        let out = if layer == 0 {
            let raw = self.raw_features(v, t);
            let rv = tape.leaf(raw);
            let proj = tape.matvec(vars.in_w, rv, d, cfg.feature_dim);
            tape.add(proj, vars.in_b)
        } else {
            let self_state = self.state(tape, vars, layer - 1, v, t, memo, cache);
            let neighbors = self.index.recent_neighbors(v, t, cfg.neighbor_budget);
            let mut neighbor_states = Vec::with_capacity(neighbors.len());
            for e in &neighbors {
                let s = self.state(tape, vars, layer - 1, e.neighbor, e.time, memo, cache);
                let dt = (t - e.time) / cfg.time_scale;
                neighbor_states.push((s, dt));
            }
            self.layer_forward(tape, vars, layer - 1, self_state, &neighbor_states)
        };

        if let Some(c) = cache {
            c.insert(key, Arc::new(tape.value(out).to_vec()));
        }
        memo.insert(key, out);
        out
    }

    /// Traced final-layer embedding, for training.
    pub fn embed_traced(
        &self,
        tape: &mut Tape,
        vars: &EncoderVars,
        v: u32,
        t: f64,
        memo: &mut StateMemo,
    ) -> Result<Var> {
        if (v as usize) >= self.graph.num_nodes() {
            return Err(Error::Lookup(format!(
                "unknown node id {v} (graph has {} nodes)",
                self.graph.num_nodes()
            )));
        }
        Ok(self.state(tape, vars, self.params.config.layers, v, t, memo, None))
    }

    /// Inference embedding. With a cache, repeated and overlapping queries
    /// reuse every layer state already computed under the same parameters.
    pub fn embed(&self, v: u32, t: f64, cache: Option<&EmbedCache>) -> Result<NodeEmbedding> {
        if (v as usize) >= self.graph.num_nodes() {
            return Err(Error::Lookup(format!(
                "unknown node id {v} (graph has {} nodes)",
                self.graph.num_nodes()
            )));
        }
        let mut tape = Tape::new();
        let vars = self.params.bind(&mut tape);
        let mut memo = StateMemo::new();
        let var = self.state(
            &mut tape,
            &vars,
            self.params.config.layers,
            v,
            t,
            &mut memo,
            cache,
        );
        let vector = tape.value(var).to_vec();
        debug_assert!(vector.iter().all(|x| x.is_finite()));
        Ok(NodeEmbedding { node: v, time: t, vector })
    }
}
