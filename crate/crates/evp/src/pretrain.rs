//! Temporal link-prediction pre-training of the encoder on the first slice
//! of the event stream, with per-event negative destinations and Adam.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::downstream::{link_loss_traced, LinkLossMode};
use crate::encoder::{Encoder, EncoderParams, StateMemo};
use crate::error::{Error, Result};
use crate::graph::{ChronoSplits, NeighborIndex, PairIndex, TemporalGraph};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PretrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub tau: f64,
    pub loss_mode: LinkLossMode,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 64,
            lr: 1e-4,
            negatives_per_positive: 1,
            seed: 0,
            tau: 0.2,
            loss_mode: LinkLossMode::Literal,
        }
    }
}

impl PretrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.negatives_per_positive == 0 {
            return Err(Error::Config("batch size and negatives must be positive".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.tau)));
        }
        if self.lr < 0.0 {
            return Err(Error::Config("learning rate must be non-negative".into()));
        }
        Ok(())
    }
}

/// Draws destination nodes not yet connected to a query node. The candidate
/// pool is fixed at construction (e.g. destinations seen in the pre-training
/// range).
pub struct NegativeSampler<'a> {
    pool: Vec<u32>,
    pairs: &'a PairIndex,
}

impl<'a> NegativeSampler<'a> {
    pub fn new(pool: Vec<u32>, pairs: &'a PairIndex) -> Self {
        Self { pool, pairs }
    }

    /// Destination-side nodes of the events in `range`, deduplicated.
    pub fn destination_pool(g: &TemporalGraph, range: std::ops::Range<usize>) -> Vec<u32> {
        let mut pool: Vec<u32> = g.events()[range].iter().map(|e| e.dst).collect();
        pool.sort_unstable();
        pool.dedup();
        pool
    }

    pub fn pool(&self) -> &[u32] {
        &self.pool
    }

    /// A node `b` from the pool with no `(v, b)` event at time <= `t`. A few
    /// rejection draws first; if they all hit neighbors, fall back to a
    /// deterministic scan so the error fires only when no candidate exists.
    pub fn sample(&self, v: u32, t: f64, rng: &mut ChaCha8Rng) -> Result<u32> {
        if self.pool.is_empty() {
            return Err(Error::Sampling("negative pool is empty".into()));
        }
        for _ in 0..32 {
            let b = self.pool[rng.gen_range(0..self.pool.len())];
            if b != v && !self.pairs.connected_at(v, b, t) {
                return Ok(b);
            }
        }
        let valid: Vec<u32> = self
            .pool
            .iter()
            .copied()
            .filter(|&b| b != v && !self.pairs.connected_at(v, b, t))
            .collect();
        if valid.is_empty() {
            return Err(Error::Sampling(format!(
                "no destination disconnected from node {v} at time {t}"
            )));
        }
        Ok(valid[rng.gen_range(0..valid.len())])
    }
}

/// Pre-train the encoder on the pretrain range: chronological mini-batches,
/// one contrastive triple per event. Returns the final parameters and the
/// per-epoch mean loss curve.
pub fn pretrain(
    g: &TemporalGraph,
    idx: &NeighborIndex,
    pairs: &PairIndex,
    splits: &ChronoSplits,
    init: EncoderParams,
    cfg: &PretrainConfig,
) -> Result<(EncoderParams, Vec<(usize, f64)>)> {
    cfg.validate()?;
    if splits.pretrain.is_empty() {
        return Err(Error::Training("pretrain range is empty".into()));
    }

    let mut params = init;
    let mut curve = Vec::with_capacity(cfg.epochs);
    if cfg.epochs == 0 {
        return Ok((params, curve));
    }

    let sampler = NegativeSampler::new(
        NegativeSampler::destination_pool(g, splits.pretrain.clone()),
        pairs,
    );
    let event_ids: Vec<usize> = splits.pretrain.clone().collect();
    let learnable_omega = params.config.te_learnable;
    let mut adam = crate::optim::Adam::new(cfg.lr);

    for epoch in 0..cfg.epochs {
        let mut rng = stream_rng(cfg.seed, &format!("pretrain/epoch/{epoch}"));
        let mut epoch_loss = 0.0;
        let mut epoch_events = 0usize;

        for (batch_no, batch) in event_ids.chunks(cfg.batch_size).enumerate() {
            let enc = Encoder::new(&params, g, idx)?;
            let mut tape = Tape::new();
            let vars = params.bind(&mut tape);
            let mut memo = StateMemo::new();

            let mut total = None;
            for &ei in batch {
                let ev = &g.events()[ei];
                let (v, a, t) = (ev.src, ev.dst, ev.time);
                let hv = enc.embed_traced(&mut tape, &vars, v, t, &mut memo)?;
                let ha = enc.embed_traced(&mut tape, &vars, a, t, &mut memo)?;
                for _ in 0..cfg.negatives_per_positive {
                    let b = sampler.sample(v, t, &mut rng)?;
                    let hb = enc.embed_traced(&mut tape, &vars, b, t, &mut memo)?;
                    let l = link_loss_traced(&mut tape, hv, ha, hb, cfg.tau, cfg.loss_mode);
                    total = Some(match total {
                        None => l,
                        Some(s) => tape.add(s, l),
                    });
                }
            }
            let total = total.expect("non-empty batch");
            let denom = (batch.len() * cfg.negatives_per_positive) as f64;
            let loss = tape.scale(total, 1.0 / denom);
            let loss_val = tape.scalar(loss);
            if !loss_val.is_finite() {
                return Err(Error::Training(format!(
                    "loss became non-finite at epoch {epoch}, batch {batch_no}"
                )));
            }
            epoch_loss += loss_val * batch.len() as f64;
            epoch_events += batch.len();

            let grads = tape.backward(loss);
            let mut grad_refs: Vec<&[f64]> = vec![grads.wrt(vars.in_w), grads.wrt(vars.in_b)];
            for lv in &vars.layers {
                grad_refs.push(grads.wrt(lv.fuse_w));
                grad_refs.push(grads.wrt(lv.fuse_b));
                grad_refs.push(grads.wrt(lv.wq));
                grad_refs.push(grads.wrt(lv.wk));
                grad_refs.push(grads.wrt(lv.wv));
                grad_refs.push(grads.wrt(lv.wo));
                grad_refs.push(grads.wrt(lv.out_b));
            }
            if learnable_omega {
                grad_refs.push(grads.wrt(vars.omega));
            }

            let mut param_refs: Vec<&mut [f64]> =
                vec![&mut params.in_w, &mut params.in_b];
            for lp in &mut params.layers {
                param_refs.push(&mut lp.fuse_w);
                param_refs.push(&mut lp.fuse_b);
                param_refs.push(&mut lp.wq);
                param_refs.push(&mut lp.wk);
                param_refs.push(&mut lp.wv);
                param_refs.push(&mut lp.wo);
                param_refs.push(&mut lp.out_b);
            }
            if learnable_omega {
                param_refs.push(&mut params.time.omega);
            }

            adam.step(&mut param_refs, &grad_refs);
            if learnable_omega {
                // Frequencies must stay positive.
                for w in &mut params.time.omega {
                    *w = w.max(1e-12);
                }
            }
        }
        curve.push((epoch, epoch_loss / epoch_events as f64));
    }
    Ok((params, curve))
}
