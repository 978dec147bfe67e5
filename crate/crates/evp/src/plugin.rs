//! The event-aware plug-in: extract a node's K most recent events, embed
//! each one, adapt the embeddings with a learnable event prompt (or a
//! condition-net), weight them by exponential time decay and a per-rank
//! dynamic prompt, and add the aggregate back into the node embedding.
//!
//! With every mechanism switched off the plug-in contributes nothing and the
//! embedding is the encoder's, bit for bit. Identity initialization (unit
//! prompts) makes tuning start from the pre-trained baseline.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::encoder::{EmbedCache, Encoder};
use crate::error::{Error, Result};
use crate::graph::NeighborIndex;
use crate::seeding::stream_rng;

/// Which of the three mechanisms participate. All-off disables the plug-in
/// entirely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantFlags {
    pub event_prompt: bool,
    pub dynamic_prompt: bool,
    pub time_decay: bool,
}

impl VariantFlags {
    pub fn full() -> Self {
        Self { event_prompt: true, dynamic_prompt: true, time_decay: true }
    }
    /// Event prompt only; events are summed without the aggregation
    /// mechanism.
    pub fn ep() -> Self {
        Self { event_prompt: true, dynamic_prompt: false, time_decay: false }
    }
    /// Dynamic prompt only, no adaptation, no decay.
    pub fn dp() -> Self {
        Self { event_prompt: false, dynamic_prompt: true, time_decay: false }
    }
    /// Time decay only.
    pub fn td() -> Self {
        Self { event_prompt: false, dynamic_prompt: false, time_decay: true }
    }
    pub fn none() -> Self {
        Self { event_prompt: false, dynamic_prompt: false, time_decay: false }
    }

    pub fn enabled(&self) -> bool {
        self.event_prompt || self.dynamic_prompt || self.time_decay
    }

    pub fn name(&self) -> &'static str {
        match (self.event_prompt, self.dynamic_prompt, self.time_decay) {
            (true, true, true) => "full",
            (true, false, false) => "ep",
            (false, true, false) => "dp",
            (false, false, true) => "td",
            (false, false, false) => "none",
            _ => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::full()),
            "ep" => Ok(Self::ep()),
            "dp" => Ok(Self::dp()),
            "td" => Ok(Self::td()),
            "none" | "off" => Ok(Self::none()),
            other => Err(Error::Config(format!(
                "unknown variant {other:?} (expected full|ep|dp|td|none)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptationMode {
    Elementwise,
    Conditional,
}

/// Two-layer bottleneck net generating an input-conditioned prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondNet {
    pub w1: Vec<f64>, // hidden x d
    pub b1: Vec<f64>, // hidden
    pub w2: Vec<f64>, // d x hidden
    pub b2: Vec<f64>, // d
    pub hidden: usize,
}

/// The plug-in's trainable state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvpParams {
    pub flags: VariantFlags,
    pub mode: AdaptationMode,
    /// Number of events extracted per query; also the dynamic prompt length.
    pub k: usize,
    pub event_prompt: Vec<f64>,
    pub dynamic_prompt: Vec<f64>,
    pub decay_rate: f64,
    pub cond: Option<CondNet>,
}

impl EvpParams {
    /// Identity initialization: unit prompts and a condition-net biased to
    /// emit ones, so tuning starts from the pre-trained baseline.
    pub fn identity_init(
        dim: usize,
        k: usize,
        flags: VariantFlags,
        mode: AdaptationMode,
        seed: u64,
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        let hidden = (dim / 2).max(1);
        if hidden >= dim && dim > 1 {
            return Err(Error::Config("condition-net hidden dim must be a bottleneck".into()));
        }
        let cond = match mode {
            AdaptationMode::Elementwise => None,
            AdaptationMode::Conditional => {
                let mut rng = stream_rng(seed, "evp/cond");
                Some(CondNet {
                    w1: (0..hidden * dim).map(|_| rng.gen_range(-0.01..0.01)).collect(),
                    b1: vec![0.0; hidden],
                    w2: (0..dim * hidden).map(|_| rng.gen_range(-0.01..0.01)).collect(),
                    b2: vec![1.0; dim],
                    hidden,
                })
            }
        };
        Ok(Self {
            flags,
            mode,
            k,
            event_prompt: vec![1.0; dim],
            dynamic_prompt: vec![1.0; k],
            decay_rate: 1.0,
            cond,
        })
    }

    pub fn dim(&self) -> usize {
        self.event_prompt.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.decay_rate < 0.0 {
            return Err(Error::Config(format!(
                "decay rate must be non-negative, got {}",
                self.decay_rate
            )));
        }
        if self.dynamic_prompt.len() != self.k {
            return Err(Error::Shape(format!(
                "dynamic prompt has {} entries for K={}",
                self.dynamic_prompt.len(),
                self.k
            )));
        }
        Ok(())
    }

    /// Trainable tensors in a fixed order (lambda is a length-1 group).
    pub fn visit_tensors<'a>(&'a self, mut f: impl FnMut(&'static str, &'a [f64])) {
        f("p_e", &self.event_prompt);
        f("p_dy", &self.dynamic_prompt);
        f("lambda", std::slice::from_ref(&self.decay_rate));
        if let Some(c) = &self.cond {
            f("cond_w1", &c.w1);
            f("cond_b1", &c.b1);
            f("cond_w2", &c.w2);
            f("cond_b2", &c.b2);
        }
    }

    pub fn bind(&self, tape: &mut Tape) -> EvpVars {
        EvpVars {
            p_e: tape.leaf(self.event_prompt.clone()),
            p_dy: tape.leaf(self.dynamic_prompt.clone()),
            lambda: tape.leaf(vec![self.decay_rate]),
            cond: self.cond.as_ref().map(|c| CondVars {
                w1: tape.leaf(c.w1.clone()),
                b1: tape.leaf(c.b1.clone()),
                w2: tape.leaf(c.w2.clone()),
                b2: tape.leaf(c.b2.clone()),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CondVars {
    pub w1: Var,
    pub b1: Var,
    pub w2: Var,
    pub b2: Var,
}

#[derive(Debug, Clone)]
pub struct EvpVars {
    pub p_e: Var,
    pub p_dy: Var,
    pub lambda: Var,
    pub cond: Option<CondVars>,
}

/// One extracted historical event of a node: its partner and when it
/// happened. Rank 1 is the most recent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractedEvent {
    pub partner: u32,
    pub time: f64,
    pub rank: usize,
}

/// The K most recent interactions of `v` strictly before `t`,
/// most-recent-first; shorter when history is short.
pub fn extract_events(
    idx: &NeighborIndex,
    v: u32,
    t: f64,
    k: usize,
) -> Vec<ExtractedEvent> {
    idx.recent_neighbors(v, t, k)
        .into_iter()
        .enumerate()
        .map(|(i, e)| ExtractedEvent {
            partner: e.neighbor,
            time: e.time,
            rank: i + 1,
        })
        .collect()
}

/// Event embedding: both endpoints embedded at the event's own time, summed.
pub fn event_embedding(
    enc: &Encoder,
    v: u32,
    ev: &ExtractedEvent,
    cache: Option<&EmbedCache>,
) -> Result<Vec<f64>> {
    let hv = enc.embed(v, ev.time, cache)?.vector;
    let hu = enc.embed(ev.partner, ev.time, cache)?.vector;
    Ok(hv.iter().zip(&hu).map(|(a, b)| a + b).collect())
}

/// Everything the plug-in needs about one query, with the (frozen) encoder
/// already applied: the node embedding and, per extracted event, its raw
/// embedding and normalized age. Prompt tuning differentiates through the
/// plug-in only, so these are constants.
#[derive(Debug, Clone)]
pub struct PluginInputs {
    pub h: Vec<f64>,
    pub events: Vec<(Vec<f64>, f64)>,
}

impl PluginInputs {
    /// Assemble inputs for (v, t): embed the node, extract up to K events,
    /// embed each one at its own time.
    pub fn gather(
        enc: &Encoder,
        evp: &EvpParams,
        v: u32,
        t: f64,
        cache: Option<&EmbedCache>,
    ) -> Result<Self> {
        let h = enc.embed(v, t, cache)?.vector;
        if !evp.flags.enabled() {
            return Ok(Self { h, events: Vec::new() });
        }
        let time_scale = enc.params.config.time_scale;
        let events = extract_events(enc.index, v, t, evp.k)
            .iter()
            .map(|ev| {
                let e = event_embedding(enc, v, ev, cache)?;
                Ok((e, (t - ev.time) / time_scale))
            })
            .collect::<Result<_>>()?;
        Ok(Self { h, events })
    }
}

/// Event adaptation, traced. Element-wise: `p_e ⊙ e`; conditional: the
/// bottleneck net's output gates `e`; with the event prompt off, identity.
pub fn adapt_traced(
    tape: &mut Tape,
    params: &EvpParams,
    vars: &EvpVars,
    e: Var,
) -> Result<Var> {
    let d = params.dim();
    if tape.value(e).len() != d {
        return Err(Error::Shape(format!(
            "adapt: event embedding has dim {}, prompt has {d}",
            tape.value(e).len()
        )));
    }
    if !params.flags.event_prompt {
        return Ok(e);
    }
    match params.mode {
        AdaptationMode::Elementwise => Ok(tape.mul(vars.p_e, e)),
        AdaptationMode::Conditional => {
            let c = params.cond.as_ref().ok_or_else(|| {
                Error::Config("conditional adaptation without a condition-net".into())
            })?;
            let cv = vars.cond.as_ref().unwrap();
            let z1 = tape.matvec(cv.w1, e, c.hidden, d);
            let z1 = tape.add(z1, cv.b1);
            let a1 = tape.tanh(z1);
            let z2 = tape.matvec(cv.w2, a1, d, c.hidden);
            let prompt = tape.add(z2, cv.b2);
            Ok(tape.mul(prompt, e))
        }
    }
}

/// Event aggregation, traced. `events` pairs each adapted embedding with its
/// normalized age `dt`; weights are `exp(-lambda dt)` (when decay is on)
/// times the rank's dynamic-prompt entry (when on). Empty input aggregates
/// to zero.
pub fn aggregate_traced(
    tape: &mut Tape,
    params: &EvpParams,
    vars: &EvpVars,
    events: &[(Var, f64)],
) -> Result<Var> {
    if events.len() > params.k {
        return Err(Error::Shape(format!(
            "aggregate received {} events but K={}",
            events.len(),
            params.k
        )));
    }
    let d = params.dim();
    if events.is_empty() {
        return Ok(tape.leaf(vec![0.0; d]));
    }
    let mut acc: Option<Var> = None;
    for (rank0, (e, dt)) in events.iter().enumerate() {
        let mut weight: Option<Var> = None;
        if params.flags.time_decay {
            let neg = tape.scale(vars.lambda, -dt);
            weight = Some(tape.exp(neg));
        }
        if params.flags.dynamic_prompt {
            let dyn_k = tape.slice(vars.p_dy, rank0, 1);
            weight = Some(match weight {
                None => dyn_k,
                Some(w) => tape.mul(w, dyn_k),
            });
        }
        let term = match weight {
            None => *e,
            Some(w) => tape.scale_by_scalar(*e, w),
        };
        acc = Some(match acc {
            None => term,
            Some(s) => tape.add(s, term),
        });
    }
    Ok(acc.unwrap())
}

/// ĥ = h + ẽ.
pub fn integrate_traced(tape: &mut Tape, h: Var, agg: Var) -> Result<Var> {
    if tape.value(h).len() != tape.value(agg).len() {
        return Err(Error::Shape(format!(
            "integrate: dims {} vs {}",
            tape.value(h).len(),
            tape.value(agg).len()
        )));
    }
    Ok(tape.add(h, agg))
}

/// Full plug-in over precomputed inputs: adapt each event, aggregate,
/// integrate. With the plug-in disabled (or no history) the node embedding
/// passes through unchanged.
pub fn apply_traced(
    tape: &mut Tape,
    params: &EvpParams,
    vars: &EvpVars,
    inputs: &PluginInputs,
) -> Result<Var> {
    let h = tape.leaf(inputs.h.clone());
    if !params.flags.enabled() || inputs.events.is_empty() {
        return Ok(h);
    }
    let mut adapted = Vec::with_capacity(inputs.events.len());
    for (e, dt) in &inputs.events {
        let ev = tape.leaf(e.clone());
        adapted.push((adapt_traced(tape, params, vars, ev)?, *dt));
    }
    let agg = aggregate_traced(tape, params, vars, &adapted)?;
    integrate_traced(tape, h, agg)
}

/// Value-level event adaptation (spec operation shape).
pub fn adapt(params: &EvpParams, e: &[f64]) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let ev = tape.leaf(e.to_vec());
    let out = adapt_traced(&mut tape, params, &vars, ev)?;
    Ok(tape.value(out).to_vec())
}

/// Value-level aggregation over adapted embeddings and their raw event
/// times; ages are normalized by `time_scale` before decay.
pub fn aggregate(
    params: &EvpParams,
    events: &[(Vec<f64>, f64)],
    t: f64,
    time_scale: f64,
) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let evs: Vec<(Var, f64)> = events
        .iter()
        .map(|(e, z)| (tape.leaf(e.clone()), (t - z) / time_scale))
        .collect();
    let out = aggregate_traced(&mut tape, params, &vars, &evs)?;
    Ok(tape.value(out).to_vec())
}

/// Value-level integration.
pub fn integrate(h: &[f64], agg: &[f64]) -> Result<Vec<f64>> {
    if h.len() != agg.len() {
        return Err(Error::Shape(format!("integrate: dims {} vs {}", h.len(), agg.len())));
    }
    Ok(h.iter().zip(agg).map(|(a, b)| a + b).collect())
}

/// Value-level plug-in application over precomputed inputs.
pub fn apply_value(params: &EvpParams, inputs: &PluginInputs) -> Result<Vec<f64>> {
    if !params.flags.enabled() || inputs.events.is_empty() {
        return Ok(inputs.h.clone());
    }
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let out = apply_traced(&mut tape, params, &vars, inputs)?;
    Ok(tape.value(out).to_vec())
}

/// The full event-aware embedding of (v, t).
pub fn evp_embed(
    enc: &Encoder,
    params: &EvpParams,
    v: u32,
    t: f64,
    cache: Option<&EmbedCache>,
) -> Result<Vec<f64>> {
    let inputs = PluginInputs::gather(enc, params, v, t, cache)?;
    apply_value(params, &inputs)
}
