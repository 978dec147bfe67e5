//! Few-shot downstream machinery: task sampling from the tune pool, the two
//! similarity losses, class prototypes, prompt-only tuning, rank-based
//! AUC-ROC, and the full tune-and-evaluate protocol.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Tape, Var};
use crate::encoder::{EmbedCache, Encoder, EncoderParams};
use crate::error::{Error, Result};
use crate::graph::{ChronoSplits, NeighborIndex, PairIndex, TemporalGraph};
use crate::optim::Adam;
use crate::plugin::{
    apply_traced, apply_value, AdaptationMode, EvpParams, PluginInputs, VariantFlags,
};
use crate::pretrain::NegativeSampler;
use crate::seeding::{derive_seed, stream_rng};

const NORM_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    LinkTransductive,
    LinkInductive,
    NodeClass,
}

impl TaskKind {
    pub fn name(&self) -> &'static str {
        match self {
            TaskKind::LinkTransductive => "link_transductive",
            TaskKind::LinkInductive => "link_inductive",
            TaskKind::NodeClass => "node_class",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "link_transductive" | "link-transductive" => Ok(TaskKind::LinkTransductive),
            "link_inductive" | "link-inductive" => Ok(TaskKind::LinkInductive),
            "node_class" | "node-class" | "node" => Ok(TaskKind::NodeClass),
            other => Err(Error::Config(format!(
                "unknown task kind {other:?} (expected link-transductive|link-inductive|node)"
            ))),
        }
    }

    pub fn is_link(&self) -> bool {
        !matches!(self, TaskKind::NodeClass)
    }
}

/// One support event for a link task, with its sampled negative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEvent {
    pub src: u32,
    pub pos: u32,
    pub neg: u32,
    pub time: f64,
}

/// One scored test row for a link task.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkTest {
    pub src: u32,
    pub cand: u32,
    pub time: f64,
    pub positive: bool,
}

/// One labeled node occurrence (support or test) for node classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeEvent {
    pub node: u32,
    pub class_idx: usize,
    pub time: f64,
}

#[derive(Debug, Clone)]
pub enum TaskData {
    Link {
        support: Vec<LinkEvent>,
        /// Held-out triples from the validation pool, for early stopping.
        val: Vec<LinkEvent>,
        test: Vec<LinkTest>,
    },
    Node {
        support: Vec<NodeEvent>,
        val: Vec<NodeEvent>,
        test: Vec<NodeEvent>,
        classes: Vec<u32>,
    },
}

/// One few-shot episode: a sampled support set plus its test set.
#[derive(Debug, Clone)]
pub struct Task {
    pub id: usize,
    pub kind: TaskKind,
    /// Set when the tune pool held fewer events than requested.
    pub support_truncated: bool,
    pub data: TaskData,
}

/// Draw `count` distinct indices from `0..len` (all of them when the pool is
/// short), in random order.
fn sample_indices(rng: &mut ChaCha8Rng, len: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    let take = count.min(len);
    for i in 0..take {
        let j = rng.gen_range(i..len);
        pool.swap(i, j);
    }
    pool.truncate(take);
    pool
}

/// Sample `n_tasks` independent episodes from the tune pool. Link tasks
/// attach one negative destination per support positive (drawn from the tune
/// pool) and per test positive (drawn from the test range); the inductive
/// variant keeps only test events whose endpoints never appear before the
/// test range. Node tasks guarantee at least one support example per class.
/// Each task also carries up to `val_size` events from the validation pool,
/// which tuning uses for early stopping.
#[allow(clippy::too_many_arguments)]
pub fn sample_tasks(
    g: &TemporalGraph,
    pairs: &PairIndex,
    splits: &ChronoSplits,
    kind: TaskKind,
    n_tasks: usize,
    support_size: usize,
    val_size: usize,
    max_test: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Task>> {
    if splits.tune_pool.is_empty() {
        return Err(Error::Task("tune pool is empty".into()));
    }
    let tune_events: Vec<usize> = splits.tune_pool.clone().collect();
    let val_events: Vec<usize> = splits.val_pool.clone().collect();

    let mut tasks = Vec::with_capacity(n_tasks);
    for id in 0..n_tasks {
        let task = match kind {
            TaskKind::LinkTransductive | TaskKind::LinkInductive => sample_link_task(
                g, pairs, splits, kind, id, &tune_events, &val_events, support_size, val_size,
                max_test, rng,
            )?,
            TaskKind::NodeClass => sample_node_task(
                g, splits, id, &tune_events, &val_events, support_size, val_size, max_test, rng,
            )?,
        };
        tasks.push(task);
    }
    Ok(tasks)
}

/// Sample from the preferred pool; when a node has exhausted it (tiny pools
/// on small graphs), widen to every destination in the graph before giving
/// up.
fn sample_negative_widening(
    primary: &NegativeSampler,
    fallback: &NegativeSampler,
    v: u32,
    t: f64,
    rng: &mut ChaCha8Rng,
) -> Result<u32> {
    match primary.sample(v, t, rng) {
        Ok(b) => Ok(b),
        Err(Error::Sampling(_)) => fallback.sample(v, t, rng),
        Err(e) => Err(e),
    }
}

#[allow(clippy::too_many_arguments)]
fn sample_link_task(
    g: &TemporalGraph,
    pairs: &PairIndex,
    splits: &ChronoSplits,
    kind: TaskKind,
    id: usize,
    tune_events: &[usize],
    val_events: &[usize],
    support_size: usize,
    val_size: usize,
    max_test: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Task> {
    let support_truncated = tune_events.len() < support_size;
    let picks = sample_indices(rng, tune_events.len(), support_size);
    let tune_sampler = NegativeSampler::new(
        NegativeSampler::destination_pool(g, splits.tune_pool.clone()),
        pairs,
    );
    let all_sampler = NegativeSampler::new(
        NegativeSampler::destination_pool(g, 0..g.num_events()),
        pairs,
    );
    let mut support = Vec::with_capacity(picks.len());
    for p in picks {
        let ev = &g.events()[tune_events[p]];
        let neg = sample_negative_widening(&tune_sampler, &all_sampler, ev.src, ev.time, rng)?;
        support.push(LinkEvent { src: ev.src, pos: ev.dst, neg, time: ev.time });
    }

    let val_sampler = NegativeSampler::new(
        NegativeSampler::destination_pool(g, splits.val_pool.clone()),
        pairs,
    );
    let mut val = Vec::new();
    for p in sample_indices(rng, val_events.len(), val_size) {
        let ev = &g.events()[val_events[p]];
        let neg = sample_negative_widening(&val_sampler, &all_sampler, ev.src, ev.time, rng)?;
        val.push(LinkEvent { src: ev.src, pos: ev.dst, neg, time: ev.time });
    }

    let inductive = matches!(kind, TaskKind::LinkInductive);
    let mut positives: Vec<usize> = splits
        .test
        .clone()
        .filter(|&ei| {
            let ev = &g.events()[ei];
            !inductive || (splits.is_unseen(ev.src) && splits.is_unseen(ev.dst))
        })
        .collect();
    if positives.is_empty() {
        return Err(Error::Task(format!(
            "no {} test instances available",
            kind.name()
        )));
    }
    if max_test > 0 && positives.len() > max_test {
        let keep = sample_indices(rng, positives.len(), max_test);
        let mut kept: Vec<usize> = keep.iter().map(|&i| positives[i]).collect();
        kept.sort_unstable();
        positives = kept;
    }

    let mut test_pool = NegativeSampler::destination_pool(g, splits.test.clone());
    if inductive {
        test_pool.retain(|&d| splits.is_unseen(d));
    }
    if test_pool.is_empty() {
        return Err(Error::Task("no candidate destinations in the test range".into()));
    }
    let test_sampler = NegativeSampler::new(test_pool, pairs);

    let mut test = Vec::with_capacity(2 * positives.len());
    for ei in positives {
        let ev = &g.events()[ei];
        // Inductive negatives must stay unseen, so no widening there.
        let neg = if inductive {
            test_sampler.sample(ev.src, ev.time, rng)?
        } else {
            sample_negative_widening(&test_sampler, &all_sampler, ev.src, ev.time, rng)?
        };
        test.push(LinkTest { src: ev.src, cand: ev.dst, time: ev.time, positive: true });
        test.push(LinkTest { src: ev.src, cand: neg, time: ev.time, positive: false });
    }

    Ok(Task {
        id,
        kind,
        support_truncated,
        data: TaskData::Link { support, val, test },
    })
}

#[allow(clippy::too_many_arguments)]
fn sample_node_task(
    g: &TemporalGraph,
    splits: &ChronoSplits,
    id: usize,
    tune_events: &[usize],
    val_events: &[usize],
    support_size: usize,
    val_size: usize,
    max_test: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Task> {
    let classes = g.label_classes();
    if classes.is_empty() {
        return Err(Error::Task("dataset has no state labels".into()));
    }
    let class_idx = |label: u32| classes.binary_search(&label).unwrap();

    // Per-class tune-pool membership; every class must be represented.
    let mut per_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (slot, &ei) in tune_events.iter().enumerate() {
        if let Some(label) = g.events()[ei].state_label {
            per_class[class_idx(label)].push(slot);
        }
    }
    for (c, members) in per_class.iter().enumerate() {
        if members.is_empty() {
            return Err(Error::Task(format!(
                "tune pool has no example of class {}",
                classes[c]
            )));
        }
    }
    if support_size < classes.len() {
        return Err(Error::Task(format!(
            "support size {support_size} cannot cover {} classes",
            classes.len()
        )));
    }

    let support_truncated = tune_events.len() < support_size;
    // One pick per class first, then fill uniformly from the rest.
    let mut chosen: Vec<usize> = Vec::with_capacity(support_size.min(tune_events.len()));
    for members in &per_class {
        chosen.push(members[rng.gen_range(0..members.len())]);
    }
    let mut rest: Vec<usize> = (0..tune_events.len())
        .filter(|s| !chosen.contains(s))
        .collect();
    while chosen.len() < support_size.min(tune_events.len()) && !rest.is_empty() {
        let j = rng.gen_range(0..rest.len());
        chosen.push(rest.swap_remove(j));
    }

    let support: Vec<NodeEvent> = chosen
        .iter()
        .map(|&slot| {
            let ev = &g.events()[tune_events[slot]];
            NodeEvent {
                node: ev.src,
                class_idx: class_idx(ev.state_label.unwrap()),
                time: ev.time,
            }
        })
        .collect();

    let val: Vec<NodeEvent> = sample_indices(rng, val_events.len(), val_size)
        .into_iter()
        .filter_map(|p| {
            let ev = &g.events()[val_events[p]];
            ev.state_label.map(|label| NodeEvent {
                node: ev.src,
                class_idx: class_idx(label),
                time: ev.time,
            })
        })
        .collect();

    let mut test: Vec<NodeEvent> = splits
        .test
        .clone()
        .filter_map(|ei| {
            let ev = &g.events()[ei];
            ev.state_label.map(|label| NodeEvent {
                node: ev.src,
                class_idx: class_idx(label),
                time: ev.time,
            })
        })
        .collect();
    if test.is_empty() {
        return Err(Error::Task("no labeled test instances".into()));
    }
    if max_test > 0 && test.len() > max_test {
        let keep = sample_indices(rng, test.len(), max_test);
        let mut kept: Vec<NodeEvent> = keep.iter().map(|&i| test[i]).collect();
        kept.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        test = kept;
    }

    Ok(Task {
        id,
        kind: TaskKind::NodeClass,
        support_truncated,
        data: TaskData::Node { support, val, test, classes },
    })
}

/// Functional form of the link loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkLossMode {
    /// The ratio of two exponentials taken literally:
    /// `(sim(v,b) - sim(v,a)) / tau`. Bounded because sim is cosine.
    Literal,
    /// Softmax over the positive and negative candidate:
    /// `ln(1 + exp((sim(v,b) - sim(v,a)) / tau))`.
    Softmax,
}

impl LinkLossMode {
    pub fn name(&self) -> &'static str {
        match self {
            LinkLossMode::Literal => "literal",
            LinkLossMode::Softmax => "softmax",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(LinkLossMode::Literal),
            "softmax" => Ok(LinkLossMode::Softmax),
            other => Err(Error::Config(format!(
                "unknown loss mode {other:?} (expected literal|softmax)"
            ))),
        }
    }
}

/// Per-triple link loss on the tape. Cosine similarities carry a `+1e-12`
/// norm guard.
pub fn link_loss_traced(
    tape: &mut Tape,
    h_v: Var,
    h_a: Var,
    h_b: Var,
    tau: f64,
    mode: LinkLossMode,
) -> Var {
    let sim_a = tape.cosine_sim(h_v, h_a, NORM_EPS);
    let sim_b = tape.cosine_sim(h_v, h_b, NORM_EPS);
    let diff = tape.sub(sim_b, sim_a);
    let x = tape.scale(diff, 1.0 / tau);
    match mode {
        LinkLossMode::Literal => x,
        LinkLossMode::Softmax => {
            let e = tape.exp(x);
            let e1 = tape.offset(e, 1.0);
            tape.ln(e1)
        }
    }
}

/// Value-level link loss.
pub fn link_loss(
    h_v: &[f64],
    h_a: &[f64],
    h_b: &[f64],
    tau: f64,
    mode: LinkLossMode,
) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("temperature must be positive, got {tau}")));
    }
    let mut tape = Tape::new();
    let v = tape.leaf(h_v.to_vec());
    let a = tape.leaf(h_a.to_vec());
    let b = tape.leaf(h_b.to_vec());
    let l = link_loss_traced(&mut tape, v, a, b, tau, mode);
    Ok(tape.scalar(l))
}

/// Cosine similarity with the norm guard, value-level.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / ((na + NORM_EPS) * (nb + NORM_EPS))
}

/// Mean embedding per class over support examples, via the given embedder.
pub fn class_prototypes(
    examples: &[(u32, usize, f64)],
    n_classes: usize,
    mut embed: impl FnMut(u32, f64) -> Result<Vec<f64>>,
) -> Result<Vec<Vec<f64>>> {
    let mut sums: Vec<Option<Vec<f64>>> = vec![None; n_classes];
    let mut counts = vec![0usize; n_classes];
    for &(v, y, t) in examples {
        let e = embed(v, t)?;
        match &mut sums[y] {
            None => sums[y] = Some(e),
            Some(s) => s.iter_mut().zip(&e).for_each(|(a, b)| *a += b),
        }
        counts[y] += 1;
    }
    sums.into_iter()
        .enumerate()
        .map(|(y, s)| match s {
            Some(mut v) => {
                let inv = 1.0 / counts[y] as f64;
                v.iter_mut().for_each(|x| *x *= inv);
                Ok(v)
            }
            None => Err(Error::Task(format!("class {y} has no support examples"))),
        })
        .collect()
}

/// Cross-entropy of the softmax over prototype similarities, traced.
pub fn node_class_loss_traced(
    tape: &mut Tape,
    h: Var,
    prototypes: &[Var],
    true_class: usize,
    tau: f64,
) -> Var {
    let sims: Vec<Var> = prototypes
        .iter()
        .map(|p| {
            let s = tape.cosine_sim(h, *p, NORM_EPS);
            tape.scale(s, 1.0 / tau)
        })
        .collect();
    let logits = tape.concat(&sims);
    let probs = tape.softmax(logits);
    let p_y = tape.slice(probs, true_class, 1);
    let lp = tape.ln(p_y);
    tape.scale(lp, -1.0)
}

/// Value-level node-classification loss.
pub fn node_class_loss(
    h: &[f64],
    true_class: usize,
    prototypes: &[Vec<f64>],
    tau: f64,
) -> Result<f64> {
    if tau <= 0.0 {
        return Err(Error::Config(format!("temperature must be positive, got {tau}")));
    }
    if true_class >= prototypes.len() {
        return Err(Error::Task(format!(
            "class {true_class} outside the {}-class prototype set",
            prototypes.len()
        )));
    }
    let mut tape = Tape::new();
    let hv = tape.leaf(h.to_vec());
    let ps: Vec<Var> = prototypes.iter().map(|p| tape.leaf(p.clone())).collect();
    let l = node_class_loss_traced(&mut tape, hv, &ps, true_class, tau);
    Ok(tape.scalar(l))
}

/// Rank-based AUC-ROC: (concordant + 0.5 * ties) / (P * N), computed from
/// tie-averaged ranks.
pub fn auc_roc(scores: &[(f64, bool)]) -> Result<f64> {
    let p = scores.iter().filter(|(_, y)| *y).count();
    let n = scores.len() - p;
    if p == 0 || n == 0 {
        return Err(Error::Metric(format!(
            "AUC needs both classes; got {p} positives and {n} negatives"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].0.partial_cmp(&scores[b].0).unwrap());

    let mut pos_rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]].0 == scores[order[i]].0 {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0; // 1-based average rank of the tie group
        for &k in &order[i..j] {
            if scores[k].1 {
                pos_rank_sum += avg_rank;
            }
        }
        i = j;
    }
    let u = pos_rank_sum - (p * (p + 1)) as f64 / 2.0;
    Ok(u / (p as f64 * n as f64))
}

/// Macro one-vs-rest AUC over per-class scores; classes without both a
/// positive and a negative are skipped.
pub fn macro_ovr_auc(per_class_scores: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut aucs = Vec::new();
    for (c, scores) in per_class_scores.iter().enumerate() {
        let rows: Vec<(f64, bool)> = scores
            .iter()
            .zip(labels)
            .map(|(s, y)| (*s, *y == c))
            .collect();
        if let Ok(a) = auc_roc(&rows) {
            aucs.push(a);
        }
    }
    if aucs.is_empty() {
        return Err(Error::Metric(
            "no class has both positive and negative test instances".into(),
        ));
    }
    Ok(aucs.iter().sum::<f64>() / aucs.len() as f64)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningConfig {
    pub tau: f64,
    pub lr: f64,
    pub epochs: usize,
    pub k: usize,
    pub loss_mode: LinkLossMode,
    /// L2 pull toward the initialization, stabilizing few-shot tuning.
    pub init_reg: f64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            tau: 0.2,
            lr: 0.05,
            epochs: 100,
            k: 9,
            loss_mode: LinkLossMode::Literal,
            init_reg: 0.1,
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        if self.tau <= 0.0 {
            return Err(Error::Config(format!("temperature must be positive, got {}", self.tau)));
        }
        if self.k == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(())
    }
}

/// Support set with the frozen encoder already applied.
#[derive(Debug, Clone)]
pub enum SupportInputs {
    Link(Vec<LinkTripleInputs>),
    Node {
        examples: Vec<(PluginInputs, usize)>,
        n_classes: usize,
    },
}

#[derive(Debug, Clone)]
pub struct LinkTripleInputs {
    pub v: PluginInputs,
    pub a: PluginInputs,
    pub b: PluginInputs,
}

fn support_loss_traced(
    tape: &mut Tape,
    params: &EvpParams,
    vars: &crate::plugin::EvpVars,
    support: &SupportInputs,
    cfg: &TuningConfig,
) -> Result<Var> {
    match support {
        SupportInputs::Link(triples) => {
            let mut total = None;
            for tr in triples {
                let hv = apply_traced(tape, params, &vars, &tr.v)?;
                let ha = apply_traced(tape, params, &vars, &tr.a)?;
                let hb = apply_traced(tape, params, &vars, &tr.b)?;
                let l = link_loss_traced(tape, hv, ha, hb, cfg.tau, cfg.loss_mode);
                total = Some(match total {
                    None => l,
                    Some(s) => tape.add(s, l),
                });
            }
            let total = total.ok_or_else(|| Error::Task("empty support set".into()))?;
            Ok(tape.scale(total, 1.0 / triples.len() as f64))
        }
        SupportInputs::Node { examples, n_classes } => {
            let embedded: Vec<(Var, usize)> = examples
                .iter()
                .map(|(inp, y)| Ok((apply_traced(tape, params, &vars, inp)?, *y)))
                .collect::<Result<_>>()?;
            // Traced prototypes: per-class means of the plugged embeddings.
            let mut protos = Vec::with_capacity(*n_classes);
            for c in 0..*n_classes {
                let members: Vec<Var> = embedded
                    .iter()
                    .filter(|(_, y)| *y == c)
                    .map(|(v, _)| *v)
                    .collect();
                if members.is_empty() {
                    return Err(Error::Task(format!("class {c} has no support examples")));
                }
                let mut acc = members[0];
                for m in &members[1..] {
                    acc = tape.add(acc, *m);
                }
                protos.push(tape.scale(acc, 1.0 / members.len() as f64));
            }
            let mut total = None;
            for (h, y) in &embedded {
                let l = node_class_loss_traced(tape, *h, &protos, *y, cfg.tau);
                total = Some(match total {
                    None => l,
                    Some(s) => tape.add(s, l),
                });
            }
            let total = total.ok_or_else(|| Error::Task("empty support set".into()))?;
            Ok(tape.scale(total, 1.0 / embedded.len() as f64))
        }
    }
}

/// Validation quality of the current parameters: AUC over the held-out
/// events (higher is better) plus the mean loss as a tie-breaker. For node
/// episodes, prototypes are rebuilt from the support set.
pub fn val_metrics(
    support: &SupportInputs,
    val: &SupportInputs,
    params: &EvpParams,
    cfg: &TuningConfig,
) -> Result<(f64, f64)> {
    match (support, val) {
        (SupportInputs::Link(_), SupportInputs::Link(triples)) => {
            if triples.is_empty() {
                return Err(Error::Task("empty validation set".into()));
            }
            let mut total = 0.0;
            let mut rows = Vec::with_capacity(2 * triples.len());
            for tr in triples {
                let hv = apply_value(params, &tr.v)?;
                let ha = apply_value(params, &tr.a)?;
                let hb = apply_value(params, &tr.b)?;
                total += link_loss(&hv, &ha, &hb, cfg.tau, cfg.loss_mode)?;
                rows.push((cosine(&hv, &ha), true));
                rows.push((cosine(&hv, &hb), false));
            }
            Ok((auc_roc(&rows)?, total / triples.len() as f64))
        }
        (
            SupportInputs::Node { examples, n_classes },
            SupportInputs::Node { examples: val_examples, .. },
        ) => {
            if val_examples.is_empty() {
                return Err(Error::Task("empty validation set".into()));
            }
            let mut sums = vec![vec![0.0; params.dim()]; *n_classes];
            let mut counts = vec![0usize; *n_classes];
            for (inp, y) in examples {
                let e = apply_value(params, inp)?;
                sums[*y].iter_mut().zip(&e).for_each(|(a, b)| *a += b);
                counts[*y] += 1;
            }
            for (y, s) in sums.iter_mut().enumerate() {
                if counts[y] == 0 {
                    return Err(Error::Task(format!("class {y} has no support examples")));
                }
                let inv = 1.0 / counts[y] as f64;
                s.iter_mut().for_each(|x| *x *= inv);
            }
            let mut total = 0.0;
            let mut per_class_scores = vec![Vec::new(); *n_classes];
            let mut labels = Vec::with_capacity(val_examples.len());
            for (inp, y) in val_examples {
                let h = apply_value(params, inp)?;
                total += node_class_loss(&h, *y, &sums, cfg.tau)?;
                let sims: Vec<f64> = sums.iter().map(|p| cosine(&h, p) / cfg.tau).collect();
                let m = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = sims.iter().map(|s| (s - m).exp()).collect();
                let z: f64 = exps.iter().sum();
                for c in 0..*n_classes {
                    per_class_scores[c].push(exps[c] / z);
                }
                labels.push(*y);
            }
            // A tiny validation set can be single-class; fall back to a
            // neutral AUC so selection rides on the loss alone.
            let auc = macro_ovr_auc(&per_class_scores, &labels).unwrap_or(0.5);
            Ok((auc, total / val_examples.len() as f64))
        }
        _ => Err(Error::Task("support and validation sets have different kinds".into())),
    }
}

const VAL_EVERY: usize = 2;

/// Tune the plug-in on a support set with the encoder frozen; returns the
/// tuned copy, the input untouched. Full-batch Adam, one step per epoch.
/// With a validation set, the iterate with the best validation loss wins
/// (the initialization itself is a candidate).
pub fn prompt_tune(
    support: &SupportInputs,
    val: Option<&SupportInputs>,
    init: &EvpParams,
    cfg: &TuningConfig,
) -> Result<EvpParams> {
    cfg.validate()?;
    init.validate()?;
    let mut params = init.clone();
    if cfg.epochs == 0 || !params.flags.enabled() {
        return Ok(params);
    }
    // Track the best iterate by validation AUC, loss as tie-breaker; the
    // initialization itself is the first candidate.
    let mut best: Option<(f64, f64, EvpParams)> = match val {
        Some(v) => {
            let (auc, loss) = val_metrics(support, v, &params, cfg)?;
            Some((auc, loss, params.clone()))
        }
        None => None,
    };
    let mut adam = Adam::new(cfg.lr);
    let init_snapshot = params.clone();
    for step in 0..cfg.epochs {
        let mut tape = Tape::new();
        let vars = params.bind(&mut tape);
        let mut loss = support_loss_traced(&mut tape, &params, &vars, support, cfg)?;
        if cfg.init_reg > 0.0 {
            // Proximal pull toward the initialization.
            let pairs: Vec<(Var, Vec<f64>)> = vec![
                (vars.p_e, init_snapshot.event_prompt.clone()),
                (vars.p_dy, init_snapshot.dynamic_prompt.clone()),
                (vars.lambda, vec![init_snapshot.decay_rate]),
            ];
            for (leaf, init_val) in pairs {
                let c = tape.leaf(init_val);
                let d = tape.sub(leaf, c);
                let sq = tape.dot(d, d);
                let pen = tape.scale(sq, cfg.init_reg);
                loss = tape.add(loss, pen);
            }
        }
        if !tape.scalar(loss).is_finite() {
            return Err(Error::Training(format!(
                "tuning loss became non-finite at step {step}"
            )));
        }
        let grads = tape.backward(loss);

        let g_pe = grads.wrt(vars.p_e).to_vec();
        let g_pdy = grads.wrt(vars.p_dy).to_vec();
        let g_lam = grads.wrt(vars.lambda).to_vec();
        let (g_w1, g_b1, g_w2, g_b2) = if let Some(cv) = &vars.cond {
            (
                grads.wrt(cv.w1).to_vec(),
                grads.wrt(cv.b1).to_vec(),
                grads.wrt(cv.w2).to_vec(),
                grads.wrt(cv.b2).to_vec(),
            )
        } else {
            (vec![], vec![], vec![], vec![])
        };

        let mut lambda_slot = [params.decay_rate];
        {
            let mut param_refs: Vec<&mut [f64]> = vec![
                &mut params.event_prompt,
                &mut params.dynamic_prompt,
                &mut lambda_slot,
            ];
            let mut grad_refs: Vec<&[f64]> = vec![&g_pe, &g_pdy, &g_lam];
            if let Some(c) = &mut params.cond {
                param_refs.push(&mut c.w1);
                param_refs.push(&mut c.b1);
                param_refs.push(&mut c.w2);
                param_refs.push(&mut c.b2);
                grad_refs.push(&g_w1);
                grad_refs.push(&g_b1);
                grad_refs.push(&g_w2);
                grad_refs.push(&g_b2);
            }
            adam.step(&mut param_refs, &grad_refs);
        }
        params.decay_rate = lambda_slot[0].max(0.0);

        if let (Some(v), Some((best_auc, best_loss, best_params))) = (val, best.as_mut()) {
            if (step + 1) % VAL_EVERY == 0 || step + 1 == cfg.epochs {
                let (auc, loss) = val_metrics(support, v, &params, cfg)?;
                if auc > *best_auc || (auc == *best_auc && loss < *best_loss) {
                    *best_auc = auc;
                    *best_loss = loss;
                    *best_params = params.clone();
                }
            }
        }
    }
    Ok(match best {
        Some((_, _, p)) => p,
        None => params,
    })
}

/// Value-level support loss, for trend checks.
pub fn support_loss(support: &SupportInputs, params: &EvpParams, cfg: &TuningConfig) -> Result<f64> {
    let mut tape = Tape::new();
    let vars = params.bind(&mut tape);
    let l = support_loss_traced(&mut tape, params, &vars, support, cfg)?;
    Ok(tape.scalar(l))
}

/// One protocol run's configuration: task construction plus tuning knobs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub kind: TaskKind,
    pub flags: VariantFlags,
    pub mode: AdaptationMode,
    pub k: usize,
    pub tau: f64,
    pub lr: f64,
    pub epochs: usize,
    pub n_tasks: usize,
    pub seeds: Vec<u64>,
    pub support_size: usize,
    /// Held-out events per task for tuning early-stopping; 0 disables it.
    pub val_size: usize,
    /// Decay rate the plug-in starts tuning from.
    pub initial_decay: f64,
    /// L2 pull toward the initialization during tuning.
    pub init_reg: f64,
    /// Cap on test positives (link) or test rows (node) per task; 0 = all.
    pub max_test: usize,
    pub loss_mode: LinkLossMode,
    pub workers: usize,
    pub root_seed: u64,
}

impl ProtocolConfig {
    pub fn new(kind: TaskKind, flags: VariantFlags) -> Self {
        Self {
            kind,
            flags,
            mode: AdaptationMode::Elementwise,
            k: if kind.is_link() { 9 } else { 3 },
            tau: 0.2,
            lr: 0.05,
            epochs: 100,
            n_tasks: 100,
            seeds: vec![0, 1, 2, 3, 4],
            support_size: 30,
            val_size: 30,
            initial_decay: 1.0,
            init_reg: 0.1,
            max_test: 0,
            loss_mode: LinkLossMode::Literal,
            workers: 1,
            root_seed: 0,
        }
    }

    fn tuning(&self) -> TuningConfig {
        TuningConfig {
            tau: self.tau,
            lr: self.lr,
            epochs: self.epochs,
            k: self.k,
            loss_mode: self.loss_mode,
            init_reg: self.init_reg,
        }
    }
}

/// One (task, seed) evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: usize,
    pub seed: u64,
    pub auc: f64,
    pub n_test: usize,
    pub support_truncated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub per_task: Vec<TaskResult>,
    pub mean: f64,
    pub std: f64,
}

fn gather_link_inputs(
    enc: &Encoder,
    evp: &EvpParams,
    events: &[LinkEvent],
    cache: Option<&EmbedCache>,
) -> Result<Vec<LinkTripleInputs>> {
    events
        .iter()
        .map(|ev| {
            Ok(LinkTripleInputs {
                v: PluginInputs::gather(enc, evp, ev.src, ev.time, cache)?,
                a: PluginInputs::gather(enc, evp, ev.pos, ev.time, cache)?,
                b: PluginInputs::gather(enc, evp, ev.neg, ev.time, cache)?,
            })
        })
        .collect()
}

fn gather_node_inputs(
    enc: &Encoder,
    evp: &EvpParams,
    events: &[NodeEvent],
    cache: Option<&EmbedCache>,
) -> Result<Vec<(PluginInputs, usize)>> {
    events
        .iter()
        .map(|ev| {
            Ok((
                PluginInputs::gather(enc, evp, ev.node, ev.time, cache)?,
                ev.class_idx,
            ))
        })
        .collect()
}

fn gather_support(
    enc: &Encoder,
    evp: &EvpParams,
    task: &Task,
    cache: Option<&EmbedCache>,
) -> Result<SupportInputs> {
    match &task.data {
        TaskData::Link { support, .. } => Ok(SupportInputs::Link(gather_link_inputs(
            enc, evp, support, cache,
        )?)),
        TaskData::Node { support, classes, .. } => Ok(SupportInputs::Node {
            examples: gather_node_inputs(enc, evp, support, cache)?,
            n_classes: classes.len(),
        }),
    }
}

/// Validation inputs, when the task carries any.
fn gather_val(
    enc: &Encoder,
    evp: &EvpParams,
    task: &Task,
    cache: Option<&EmbedCache>,
) -> Result<Option<SupportInputs>> {
    match &task.data {
        TaskData::Link { val, .. } => {
            if val.is_empty() {
                return Ok(None);
            }
            Ok(Some(SupportInputs::Link(gather_link_inputs(
                enc, evp, val, cache,
            )?)))
        }
        TaskData::Node { val, classes, .. } => {
            if val.is_empty() {
                return Ok(None);
            }
            Ok(Some(SupportInputs::Node {
                examples: gather_node_inputs(enc, evp, val, cache)?,
                n_classes: classes.len(),
            }))
        }
    }
}

fn score_task(
    enc: &Encoder,
    tuned: &EvpParams,
    task: &Task,
    support: &SupportInputs,
    tau: f64,
    cache: Option<&EmbedCache>,
) -> Result<(f64, usize)> {
    // Plugged embeddings repeat across test rows; memoize per (node, time).
    let mut local: std::collections::HashMap<(u32, u64), Vec<f64>> =
        std::collections::HashMap::new();
    let mut plugged = |v: u32, t: f64| -> Result<Vec<f64>> {
        if let Some(e) = local.get(&(v, t.to_bits())) {
            return Ok(e.clone());
        }
        let inputs = PluginInputs::gather(enc, tuned, v, t, cache)?;
        let e = apply_value(tuned, &inputs)?;
        local.insert((v, t.to_bits()), e.clone());
        Ok(e)
    };

    match &task.data {
        TaskData::Link { test, .. } => {
            let mut rows = Vec::with_capacity(test.len());
            for inst in test {
                let hv = plugged(inst.src, inst.time)?;
                let hc = plugged(inst.cand, inst.time)?;
                rows.push((cosine(&hv, &hc), inst.positive));
            }
            Ok((auc_roc(&rows)?, rows.len()))
        }
        TaskData::Node { test, classes, .. } => {
            let protos = match support {
                SupportInputs::Node { examples, n_classes } => {
                    let mut sums: Vec<Vec<f64>> = Vec::with_capacity(*n_classes);
                    let mut counts = vec![0usize; *n_classes];
                    for _ in 0..*n_classes {
                        sums.push(vec![0.0; enc.params.hidden_dim()]);
                    }
                    for (inp, y) in examples {
                        let e = apply_value(tuned, inp)?;
                        sums[*y].iter_mut().zip(&e).for_each(|(a, b)| *a += b);
                        counts[*y] += 1;
                    }
                    for (y, s) in sums.iter_mut().enumerate() {
                        if counts[y] == 0 {
                            return Err(Error::Task(format!("class {y} has no support examples")));
                        }
                        let inv = 1.0 / counts[y] as f64;
                        s.iter_mut().for_each(|x| *x *= inv);
                    }
                    sums
                }
                SupportInputs::Link(_) => {
                    return Err(Error::Task("node task paired with link support".into()))
                }
            };
            let n_classes = classes.len();
            let mut per_class_scores: Vec<Vec<f64>> = vec![Vec::new(); n_classes];
            let mut labels = Vec::with_capacity(test.len());
            for inst in test {
                let h = plugged(inst.node, inst.time)?;
                let sims: Vec<f64> = protos.iter().map(|p| cosine(&h, p) / tau).collect();
                let m = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let exps: Vec<f64> = sims.iter().map(|s| (s - m).exp()).collect();
                let z: f64 = exps.iter().sum();
                for c in 0..n_classes {
                    per_class_scores[c].push(exps[c] / z);
                }
                labels.push(inst.class_idx);
            }
            Ok((macro_ovr_auc(&per_class_scores, &labels)?, test.len()))
        }
    }
}

fn run_one(
    enc: &Encoder,
    cfg: &ProtocolConfig,
    seed: u64,
    task: &Task,
    cache: Option<&EmbedCache>,
) -> Result<TaskResult> {
    let phi_seed = derive_seed(cfg.root_seed, &format!("phi/{seed}/{}", task.id));
    let mut evp0 = EvpParams::identity_init(
        enc.params.hidden_dim(),
        cfg.k,
        cfg.flags,
        cfg.mode,
        phi_seed,
    )?;
    evp0.decay_rate = cfg.initial_decay;
    let support = gather_support(enc, &evp0, task, cache)?;
    let val = gather_val(enc, &evp0, task, cache)?;
    let tuned = prompt_tune(&support, val.as_ref(), &evp0, &cfg.tuning())?;
    let (auc, n_test) = score_task(enc, &tuned, task, &support, cfg.tau, cache)?;
    Ok(TaskResult {
        task_id: task.id,
        seed,
        auc,
        n_test,
        support_truncated: task.support_truncated,
    })
}

/// Run the full protocol: per seed, sample `n_tasks` episodes, tune the
/// plug-in on each support set (encoder frozen), score the test set, and
/// aggregate AUC over every (task, seed) run.
pub fn run_protocol(
    g: &TemporalGraph,
    idx: &NeighborIndex,
    pairs: &PairIndex,
    splits: &ChronoSplits,
    encoder_params: &EncoderParams,
    cfg: &ProtocolConfig,
) -> Result<ProtocolOutcome> {
    let cache = EmbedCache::new(encoder_params.hidden_dim());
    run_protocol_cached(g, idx, pairs, splits, encoder_params, cfg, &cache)
}

/// `run_protocol` with a caller-owned embedding cache, so runs that share
/// one frozen encoder (ablation variants, K sweeps) reuse each other's
/// encoder work. The cache must never outlive a parameter change.
#[allow(clippy::too_many_arguments)]
pub fn run_protocol_cached(
    g: &TemporalGraph,
    idx: &NeighborIndex,
    pairs: &PairIndex,
    splits: &ChronoSplits,
    encoder_params: &EncoderParams,
    cfg: &ProtocolConfig,
    cache: &EmbedCache,
) -> Result<ProtocolOutcome> {
    if cfg.seeds.is_empty() {
        return Err(Error::Config("seeds list is empty".into()));
    }
    let enc = Encoder::new(encoder_params, g, idx)?;
    let frozen_before = encoder_params.checksum();

    let mut work: Vec<(u64, Task)> = Vec::with_capacity(cfg.seeds.len() * cfg.n_tasks);
    for &seed in &cfg.seeds {
        let mut rng = stream_rng(cfg.root_seed, &format!("tasks/{seed}"));
        let tasks = sample_tasks(
            g,
            pairs,
            splits,
            cfg.kind,
            cfg.n_tasks,
            cfg.support_size,
            cfg.val_size,
            cfg.max_test,
            &mut rng,
        )?;
        for t in tasks {
            work.push((seed, t));
        }
    }

    let per_task: Vec<TaskResult> = if cfg.workers > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
        pool.install(|| {
            work.par_iter()
                .map(|(seed, task)| run_one(&enc, cfg, *seed, task, Some(cache)))
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        work.iter()
            .map(|(seed, task)| run_one(&enc, cfg, *seed, task, Some(cache)))
            .collect::<Result<Vec<_>>>()?
    };

    debug_assert_eq!(encoder_params.checksum(), frozen_before);

    let n = per_task.len() as f64;
    let mean = per_task.iter().map(|r| r.auc).sum::<f64>() / n;
    let var = per_task.iter().map(|r| (r.auc - mean).powi(2)).sum::<f64>() / n;
    Ok(ProtocolOutcome {
        per_task,
        mean,
        std: var.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoder::EncoderConfig;
    use crate::graph::chronological_split;
    use crate::synthetic::{generate, SynthConfig};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn literal_link_loss_matches_hand_values() {
        let v = vec![1.0, 0.0];
        // sim(v,a) = 1, sim(v,b) = -1, tau = 1 -> loss -2
        let a = vec![2.0, 0.0];
        let b = vec![-3.0, 0.0];
        let l = link_loss(&v, &a, &b, 1.0, LinkLossMode::Literal).unwrap();
        assert!((l - (-2.0)).abs() < 1e-9);

        // equal candidates -> 0
        let l = link_loss(&v, &a, &a, 1.0, LinkLossMode::Literal).unwrap();
        assert!(l.abs() < 1e-12);

        // tau -> infinity: loss -> 0
        let l = link_loss(&v, &a, &b, 1e9, LinkLossMode::Literal).unwrap();
        assert!(l.abs() < 1e-8);

        assert!(link_loss(&v, &a, &b, 0.0, LinkLossMode::Literal).is_err());
    }

    #[test]
    fn softmax_link_loss_is_a_positive_softplus() {
        let v = vec![1.0, 0.0];
        let a = vec![2.0, 0.0];
        let b = vec![-3.0, 0.0];
        let l = link_loss(&v, &a, &b, 1.0, LinkLossMode::Softmax).unwrap();
        // ln(1 + e^-2)
        assert!((l - (1.0 + (-2.0f64).exp()).ln()).abs() < 1e-9);
        let leq = link_loss(&v, &a, &a, 1.0, LinkLossMode::Softmax).unwrap();
        assert!((leq - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn prototypes_are_class_means() {
        let embeds: std::collections::HashMap<u32, Vec<f64>> = [
            (0u32, vec![1.0, 0.0]),
            (1, vec![0.0, 1.0]),
            (2, vec![3.0, 3.0]),
            (3, vec![1.0, 1.0]),
            (4, vec![2.0, 0.0]),
        ]
        .into_iter()
        .collect();
        let embed = |v: u32, _t: f64| Ok(embeds[&v].clone());

        // one example per class -> the embedding itself
        let protos = class_prototypes(&[(0, 0, 1.0), (1, 1, 1.0)], 2, embed).unwrap();
        assert_eq!(protos[0], vec![1.0, 0.0]);
        assert_eq!(protos[1], vec![0.0, 1.0]);

        // two examples -> arithmetic mean
        let protos = class_prototypes(&[(0, 0, 1.0), (1, 0, 1.0)], 1, embed).unwrap();
        assert_eq!(protos[0], vec![0.5, 0.5]);

        // 5-example fixture against an independent mean
        let examples = [(0u32, 0usize, 1.0), (2, 0, 2.0), (4, 0, 3.0), (1, 1, 1.0), (3, 1, 2.0)];
        let protos = class_prototypes(&examples, 2, embed).unwrap();
        assert_eq!(protos[0], vec![2.0, 1.0]);
        assert_eq!(protos[1], vec![0.5, 1.0]);

        // empty class errors
        assert!(class_prototypes(&[(0, 0, 1.0)], 2, embed).is_err());
    }

    #[test]
    fn node_class_loss_matches_hand_values() {
        // equidistant from both prototypes -> ln 2
        let h = vec![1.0, 1.0];
        let protos = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let l = node_class_loss(&h, 0, &protos, 1.0).unwrap();
        assert!((l - 2f64.ln()).abs() < 1e-9);

        // h = prototype[y], other orthogonal, tau = 1 -> ln(e+1) - 1
        let h = vec![1.0, 0.0];
        let l = node_class_loss(&h, 0, &protos, 1.0).unwrap();
        assert!((l - ((1f64.exp() + 1.0).ln() - 1.0)).abs() < 1e-9);
        assert!((l - 0.31326).abs() < 1e-5);

        // tau -> infinity: ln |Y|
        let protos3 = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        let l = node_class_loss(&h, 0, &protos3, 1e9).unwrap();
        assert!((l - 3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn auc_matches_the_spec_examples() {
        let sep: Vec<(f64, bool)> =
            vec![(0.9, true), (0.8, true), (0.2, false), (0.1, false)];
        assert!((auc_roc(&sep).unwrap() - 1.0).abs() < 1e-12);

        let ties: Vec<(f64, bool)> = vec![(0.5, true), (0.5, false), (0.5, true), (0.5, false)];
        assert!((auc_roc(&ties).unwrap() - 0.5).abs() < 1e-12);

        let mixed: Vec<(f64, bool)> =
            vec![(0.9, true), (0.8, false), (0.7, true), (0.1, false)];
        assert!((auc_roc(&mixed).unwrap() - 0.75).abs() < 1e-12);

        assert!(auc_roc(&[(0.5, true)]).is_err());
        assert!(auc_roc(&[(0.5, true), (0.7, true)]).is_err());
    }

    /// O(n^2) pair-counting oracle.
    fn auc_pairs(scores: &[(f64, bool)]) -> f64 {
        let mut concordant = 0.0;
        let mut total = 0.0;
        for (sp, yp) in scores.iter().filter(|(_, y)| *y) {
            for (sn, yn) in scores.iter().filter(|(_, y)| !*y) {
                let _ = (yp, yn);
                total += 1.0;
                if sp > sn {
                    concordant += 1.0;
                } else if sp == sn {
                    concordant += 0.5;
                }
            }
        }
        concordant / total
    }

    #[test]
    fn auc_equals_pair_counting_on_random_lists() {
        let mut rng = stream_rng(17, "auc-oracle");
        for _ in 0..200 {
            let n = rng.gen_range(2..60);
            let mut rows: Vec<(f64, bool)> = (0..n)
                .map(|_| {
                    // Coarse grid so ties actually occur.
                    let s = (rng.gen_range(0..10) as f64) / 10.0;
                    (s, rng.gen_bool(0.5))
                })
                .collect();
            rows[0].1 = true;
            rows[1].1 = false;
            let fast = auc_roc(&rows).unwrap();
            let slow = auc_pairs(&rows);
            assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        }
    }

    proptest! {
        #[test]
        fn auc_is_invariant_under_monotone_transforms(
            scores in proptest::collection::vec((0.0f64..1.0, proptest::bool::ANY), 4..40)
        ) {
            let mut rows = scores;
            rows[0].1 = true;
            rows[1].1 = false;
            let base = auc_roc(&rows).unwrap();
            let transformed: Vec<(f64, bool)> =
                rows.iter().map(|(s, y)| (s.exp() * 3.0 + 1.0, *y)).collect();
            prop_assert!((auc_roc(&transformed).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn binary_macro_auc_degenerates_to_binary_auc() {
        let mut rng = stream_rng(3, "macro");
        for _ in 0..50 {
            let n = rng.gen_range(4..40);
            let mut labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            labels[0] = 0;
            labels[1] = 1;
            // softmax-style complementary class scores
            let p1: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
            let p0: Vec<f64> = p1.iter().map(|p| 1.0 - p).collect();
            let macro_auc = macro_ovr_auc(&[p0, p1.clone()], &labels).unwrap();
            let rows: Vec<(f64, bool)> =
                p1.iter().zip(&labels).map(|(s, y)| (*s, *y == 1)).collect();
            let binary = auc_roc(&rows).unwrap();
            assert!((macro_auc - binary).abs() < 1e-12);
        }
    }

    fn small_world() -> (
        crate::graph::TemporalGraph,
        NeighborIndex,
        PairIndex,
        ChronoSplits,
        EncoderParams,
    ) {
        let cfg = SynthConfig {
            n_users: 12,
            n_items: 5,
            horizon: 60.0,
            period: 6.0,
            noise_rate: 0.2,
            feature_dim: 4,
            seed: 5,
        };
        let (g, _) = generate(&cfg).unwrap();
        let idx = NeighborIndex::build(&g);
        let pairs = PairIndex::build(&g);
        let splits = chronological_split(&g, (0.70, 0.06, 0.06)).unwrap();
        let mut ecfg = EncoderConfig::new(8, g.feature_dim()).with_graph_time(&g);
        ecfg.neighbor_budget = 5;
        let params = EncoderParams::init(ecfg, 1).unwrap();
        (g, idx, pairs, splits, params)
    }

    #[test]
    fn task_sampling_is_deterministic_and_respects_the_pool() {
        let (g, _idx, pairs, splits, _params) = small_world();
        let mut r1 = stream_rng(9, "tasks");
        let mut r2 = stream_rng(9, "tasks");
        let t1 = sample_tasks(&g, &pairs, &splits, TaskKind::LinkTransductive, 3, 5, 5, 10, &mut r1)
            .unwrap();
        let t2 = sample_tasks(&g, &pairs, &splits, TaskKind::LinkTransductive, 3, 5, 5, 10, &mut r2)
            .unwrap();
        for (a, b) in t1.iter().zip(&t2) {
            match (&a.data, &b.data) {
                (
                    TaskData::Link { support: sa, test: ta, .. },
                    TaskData::Link { support: sb, test: tb, .. },
                ) => {
                    assert_eq!(sa, sb);
                    assert_eq!(ta, tb);
                }
                _ => panic!("expected link tasks"),
            }
        }

        // support negatives are never connected before their event
        for task in &t1 {
            if let TaskData::Link { support, .. } = &task.data {
                for ev in support {
                    assert!(!pairs.connected_at(ev.src, ev.neg, ev.time - 1e-9));
                }
            }
        }
    }

    #[test]
    fn pool_smaller_than_support_truncates_with_a_flag() {
        let (g, _idx, pairs, splits, _params) = small_world();
        let pool = splits.tune_pool.len();
        let mut rng = stream_rng(0, "tasks");
        let tasks = sample_tasks(
            &g, &pairs, &splits, TaskKind::LinkTransductive, 1, pool + 10, 5, 10, &mut rng,
        )
        .unwrap();
        assert!(tasks[0].support_truncated);
        if let TaskData::Link { support, .. } = &tasks[0].data {
            assert_eq!(support.len(), pool);
        }
    }

    #[test]
    fn node_tasks_cover_every_class_or_fail_loudly() {
        let (g, _idx, pairs, splits, _params) = small_world();
        let n_classes = g.label_classes().len();
        let mut rng = stream_rng(2, "tasks");
        match sample_tasks(&g, &pairs, &splits, TaskKind::NodeClass, 2, 30, 5, 20, &mut rng) {
            Ok(tasks) => {
                for task in tasks {
                    if let TaskData::Node { support, classes, .. } = &task.data {
                        assert_eq!(classes.len(), n_classes);
                        for c in 0..classes.len() {
                            assert!(
                                support.iter().any(|e| e.class_idx == c),
                                "class {c} missing from support"
                            );
                        }
                    }
                }
            }
            Err(Error::Task(msg)) => {
                // Legitimate when the tiny tune pool misses a class.
                assert!(msg.contains("class"), "{msg}");
            }
            Err(e) => panic!("unexpected error {e:?}"),
        }
    }

    #[test]
    fn zero_epoch_tuning_returns_the_initialization() {
        let (g, idx, pairs, splits, params) = small_world();
        let enc = Encoder::new(&params, &g, &idx).unwrap();
        let mut rng = stream_rng(4, "tasks");
        let tasks =
            sample_tasks(&g, &pairs, &splits, TaskKind::LinkTransductive, 1, 5, 5, 6, &mut rng)
                .unwrap();
        let evp0 = EvpParams::identity_init(8, 3, VariantFlags::full(), AdaptationMode::Elementwise, 0)
            .unwrap();
        let support = gather_support(&enc, &evp0, &tasks[0], None).unwrap();
        let cfg = TuningConfig { epochs: 0, k: 3, ..Default::default() };
        let tuned = prompt_tune(&support, None, &evp0, &cfg).unwrap();
        assert_eq!(tuned, evp0);
    }

    #[test]
    fn tuning_reduces_support_loss_in_most_seeds() {
        let (g, idx, pairs, splits, params) = small_world();
        let enc = Encoder::new(&params, &g, &idx).unwrap();
        let mut improved = 0;
        for seed in 0..5u64 {
            let mut rng = stream_rng(seed, "tasks");
            let tasks =
                sample_tasks(&g, &pairs, &splits, TaskKind::LinkTransductive, 1, 6, 5, 6, &mut rng)
                    .unwrap();
            let evp0 = EvpParams::identity_init(
                8, 2, VariantFlags::full(), AdaptationMode::Elementwise, seed,
            )
            .unwrap();
            let support = gather_support(&enc, &evp0, &tasks[0], None).unwrap();
            let cfg = TuningConfig { epochs: 100, k: 2, lr: 0.05, ..Default::default() };
            let before = support_loss(&support, &evp0, &cfg).unwrap();
            let tuned = prompt_tune(&support, None, &evp0, &cfg).unwrap();
            let after = support_loss(&support, &tuned, &cfg).unwrap();
            if after < before {
                improved += 1;
            }
        }
        assert!(improved >= 4, "loss improved in only {improved}/5 seeds");
    }

    #[test]
    fn protocol_is_deterministic_and_leaves_the_encoder_frozen() {
        let (g, idx, pairs, splits, params) = small_world();
        let before = params.checksum();
        let mut cfg = ProtocolConfig::new(TaskKind::LinkTransductive, VariantFlags::full());
        cfg.n_tasks = 2;
        cfg.seeds = vec![0, 1];
        cfg.k = 3;
        cfg.epochs = 20;
        cfg.support_size = 6;
        cfg.max_test = 8;
        let a = run_protocol(&g, &idx, &pairs, &splits, &params, &cfg).unwrap();
        let b = run_protocol(&g, &idx, &pairs, &splits, &params, &cfg).unwrap();
        assert_eq!(params.checksum(), before);
        assert_eq!(a.per_task.len(), 4); // 2 tasks x 2 seeds
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std, b.std);
        for (x, y) in a.per_task.iter().zip(&b.per_task) {
            assert_eq!(x.auc, y.auc);
        }

        // One run: mean is that value, std is zero.
        let mut cfg1 = cfg.clone();
        cfg1.n_tasks = 1;
        cfg1.seeds = vec![0];
        let o = run_protocol(&g, &idx, &pairs, &splits, &params, &cfg1).unwrap();
        assert_eq!(o.per_task.len(), 1);
        assert_eq!(o.mean, o.per_task[0].auc);
        assert_eq!(o.std, 0.0);
    }

    #[test]
    fn worker_pool_size_does_not_change_results() {
        let (g, idx, pairs, splits, params) = small_world();
        let mut cfg = ProtocolConfig::new(TaskKind::LinkTransductive, VariantFlags::full());
        cfg.n_tasks = 2;
        cfg.seeds = vec![0, 1];
        cfg.k = 2;
        cfg.epochs = 10;
        cfg.support_size = 5;
        cfg.max_test = 6;
        let seq = run_protocol(&g, &idx, &pairs, &splits, &params, &cfg).unwrap();
        cfg.workers = 2;
        let par = run_protocol(&g, &idx, &pairs, &splits, &params, &cfg).unwrap();
        assert_eq!(seq.mean, par.mean);
        for (x, y) in seq.per_task.iter().zip(&par.per_task) {
            assert_eq!(x.auc, y.auc);
            assert_eq!((x.task_id, x.seed), (y.task_id, y.seed));
        }
    }
}

