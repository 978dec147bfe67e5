//! Planted-pattern generator: every user re-interacts with one signature
//! item on a fixed period (with a per-user phase), buried under a
//! configurable fraction of uniformly random noise events. The next item a
//! user touches is therefore known analytically, which gives evaluation an
//! information-theoretic ceiling of AUC 1.0 at zero noise.
//!
//! Edge features carry a per-item signature vector, so interaction history
//! is the only way to tell users apart — exactly the signal the event
//! plug-in is built to exploit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Event, TemporalGraph};
use crate::seeding::stream_rng;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    pub n_items: usize,
    /// Total generated time span.
    pub horizon: f64,
    /// Per-user re-interaction interval.
    pub period: f64,
    /// Fraction of all events that are uniform noise, in [0, 1).
    pub noise_rate: f64,
    /// Edge-feature dimension (per-item signature vectors).
    pub feature_dim: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_users: 200,
            n_items: 50,
            horizon: 120.0,
            period: 10.0,
            noise_rate: 0.3,
            feature_dim: 8,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users < 2 || self.n_items < 2 {
            return Err(Error::Config("need at least 2 users and 2 items".into()));
        }
        if self.period <= 0.0 || self.horizon <= 0.0 {
            return Err(Error::Config("period and horizon must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.noise_rate) {
            return Err(Error::Config(format!(
                "noise_rate must be in [0, 1), got {}",
                self.noise_rate
            )));
        }
        Ok(())
    }

    /// The planted signature item of a user (graph node id).
    pub fn signature(&self, user: u32) -> u32 {
        self.n_users as u32 + user % self.n_items as u32
    }
}

/// The analytically known answer for any (user, time): the planted pattern's
/// next item, and the class label used for node tasks.
pub struct Oracle {
    cfg: SynthConfig,
}

impl Oracle {
    /// The item the user will interact with next (its signature; exact under
    /// zero noise).
    pub fn next_item(&self, user: u32, _t: f64) -> u32 {
        self.cfg.signature(user)
    }

    /// Node-classification label: the signature-item bucket.
    pub fn label(&self, user: u32) -> u32 {
        user % self.cfg.n_items as u32
    }
}

/// Generate the graph and its oracle. Signature events for user `u` fire at
/// `phase_u + j * period` for `j = 1..floor((horizon - phase_u)/period)`;
/// noise events are drawn uniformly over users, items, and time so they make
/// up `noise_rate` of all events.
pub fn generate(cfg: &SynthConfig) -> Result<(TemporalGraph, Oracle)> {
    cfg.validate()?;

    // Per-item signature feature vectors, unit length.
    let mut feat_rng = stream_rng(cfg.seed, "synth/features");
    let mut item_feats = Vec::with_capacity(cfg.n_items);
    for _ in 0..cfg.n_items {
        let mut f: Vec<f64> = (0..cfg.feature_dim)
            .map(|_| feat_rng.gen_range(-1.0..1.0))
            .collect();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-9);
        f.iter_mut().for_each(|x| *x /= norm);
        item_feats.push(f);
    }

    let mut events = Vec::new();
    let mut feats = Vec::new();
    let mut push = |user: u32, item_local: u32, time: f64, cfg: &SynthConfig| {
        events.push(Event {
            src: user,
            dst: cfg.n_users as u32 + item_local,
            time,
            state_label: Some(user % cfg.n_items as u32),
        });
        feats.push(item_feats[item_local as usize].clone());
    };

    let mut signature_count = 0usize;
    for (u, phase) in user_phases(cfg).into_iter().enumerate() {
        let reps = ((cfg.horizon - phase) / cfg.period).floor() as usize;
        for j in 1..=reps {
            push(
                u as u32,
                u as u32 % cfg.n_items as u32,
                phase + j as f64 * cfg.period,
                cfg,
            );
            signature_count += 1;
        }
    }

    let noise_count =
        (cfg.noise_rate / (1.0 - cfg.noise_rate) * signature_count as f64).floor() as usize;
    let mut noise_rng = stream_rng(cfg.seed, "synth/noise");
    for _ in 0..noise_count {
        let u = noise_rng.gen_range(0..cfg.n_users as u32);
        let item = noise_rng.gen_range(0..cfg.n_items as u32);
        let t = noise_rng.gen_range(0.0..cfg.horizon);
        push(u, item, t, cfg);
    }

    let g = TemporalGraph::new(
        events,
        feats,
        cfg.n_users + cfg.n_items,
        cfg.n_users,
        cfg.feature_dim,
    )?;
    Ok((g, Oracle { cfg: cfg.clone() }))
}

fn user_phases(cfg: &SynthConfig) -> Vec<f64> {
    let mut rng = stream_rng(cfg.seed, "synth/phases");
    (0..cfg.n_users).map(|_| rng.gen_range(0.0..cfg.period)).collect()
}

/// Signature-event count implied by the config: sum over users of
/// floor((horizon - phase)/period). Generation must produce exactly this
/// many plus the derived noise count.
pub fn expected_signature_count(cfg: &SynthConfig) -> usize {
    user_phases(cfg)
        .into_iter()
        .map(|phase| ((cfg.horizon - phase) / cfg.period).floor() as usize)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_is_seed_deterministic() {
        let cfg = SynthConfig { n_users: 20, n_items: 5, ..Default::default() };
        let (a, _) = generate(&cfg).unwrap();
        let (b, _) = generate(&cfg).unwrap();
        assert_eq!(a.events(), b.events());
        for i in 0..a.num_events() {
            assert_eq!(a.edge_features(i), b.edge_features(i));
        }
    }

    #[test]
    fn zero_noise_is_exactly_periodic_and_oracle_matches() {
        let cfg = SynthConfig {
            n_users: 10,
            n_items: 4,
            noise_rate: 0.0,
            horizon: 50.0,
            period: 5.0,
            ..Default::default()
        };
        let (g, oracle) = generate(&cfg).unwrap();
        // Every user's events hit only its signature item, spaced by the
        // period.
        for u in 0..cfg.n_users as u32 {
            let times: Vec<f64> = g
                .events()
                .iter()
                .filter(|e| e.src == u)
                .map(|e| e.time)
                .collect();
            for w in times.windows(2) {
                assert!((w[1] - w[0] - cfg.period).abs() < 1e-9);
            }
            for e in g.events().iter().filter(|e| e.src == u) {
                assert_eq!(e.dst, cfg.signature(u));
                assert_eq!(e.dst, oracle.next_item(u, e.time));
            }
        }
    }

    #[test]
    fn event_count_matches_the_formula() {
        let cfg = SynthConfig {
            n_users: 30,
            n_items: 7,
            noise_rate: 0.25,
            ..Default::default()
        };
        let (g, _) = generate(&cfg).unwrap();
        let sig = expected_signature_count(&cfg);
        let noise = (cfg.noise_rate / (1.0 - cfg.noise_rate) * sig as f64).floor() as usize;
        assert_eq!(g.num_events(), sig + noise);
    }

    #[test]
    fn emits_loadable_jodie_csv() {
        let cfg = SynthConfig { n_users: 8, n_items: 3, horizon: 40.0, ..Default::default() };
        let (g, _) = generate(&cfg).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        g.to_jodie_csv(f.path()).unwrap();
        let g2 = crate::graph::load_jodie_csv(f.path()).unwrap();
        assert_eq!(g.events(), g2.events());
        assert_eq!(g.num_nodes(), g2.num_nodes());
        for i in 0..g.num_events() {
            assert_eq!(g.edge_features(i), g2.edge_features(i));
        }
    }

    #[test]
    fn copy_one_period_back_attains_the_ceiling_at_zero_noise() {
        // A predictor that looks up the partner one period earlier separates
        // positives from negatives perfectly when there is no noise.
        let cfg = SynthConfig {
            n_users: 12,
            n_items: 6,
            noise_rate: 0.0,
            horizon: 60.0,
            period: 6.0,
            seed: 4,
            ..Default::default()
        };
        let (g, _) = generate(&cfg).unwrap();
        let idx = crate::graph::NeighborIndex::build(&g);
        let mut rng = stream_rng(1, "ceiling");
        let mut rows = Vec::new();
        for ev in g.events().iter().filter(|e| e.time > 2.0 * cfg.period) {
            let back = idx.recent_neighbors(ev.src, ev.time, 1);
            let predicted = back.first().map(|e| e.neighbor);
            let neg = loop {
                let cand = cfg.n_users as u32 + rng.gen_range(0..cfg.n_items as u32);
                if cand != ev.dst {
                    break cand;
                }
            };
            rows.push((if predicted == Some(ev.dst) { 1.0 } else { 0.0 }, true));
            rows.push((if predicted == Some(neg) { 1.0 } else { 0.0 }, false));
        }
        let auc = crate::downstream::auc_roc(&rows).unwrap();
        assert!((auc - 1.0).abs() < 1e-12, "ceiling predictor scored {auc}");
    }
}
