//! Continuous-time event graphs: storage, JODIE CSV ingest, chronological
//! splits, and the recency index used by every neighbor query.
//!
//! A graph is immutable once built; all downstream components only read it.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{Error, Result};

/// One timestamped directed interaction. Edge features live in the graph's
/// flat feature matrix, addressed by the event id.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub src: u32,
    pub dst: u32,
    pub time: f64,
    /// Class label attached to `src` at this time, when the dataset has one.
    pub state_label: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct TemporalGraph {
    events: Vec<Event>,
    num_nodes: usize,
    /// Source-side namespace size; sources are ids `0..num_users`,
    /// destinations `num_users..num_nodes` (bipartite interaction data).
    num_users: usize,
    feature_dim: usize,
    /// `|E| x feature_dim`, row i = features of event i.
    edge_features: Vec<f64>,
    /// `|V| x feature_dim`; all zeros when the dataset has no node features.
    node_features: Vec<f64>,
    time_span: (f64, f64),
}

impl TemporalGraph {
    /// Build a graph from events that are not necessarily sorted. Events are
    /// ordered by (time, ingest position); `edge_features` rows must follow
    /// the *ingest* order and are permuted alongside.
    pub fn new(
        events: Vec<Event>,
        edge_features: Vec<Vec<f64>>,
        num_nodes: usize,
        num_users: usize,
        feature_dim: usize,
    ) -> Result<Self> {
        if events.len() != edge_features.len() {
            return Err(Error::Shape(format!(
                "{} events but {} feature rows",
                events.len(),
                edge_features.len()
            )));
        }
        for (i, ev) in events.iter().enumerate() {
            if ev.time < 0.0 || !ev.time.is_finite() {
                return Err(Error::Ingest {
                    line: i + 2,
                    msg: format!("negative or non-finite timestamp {}", ev.time),
                });
            }
            if ev.src == ev.dst {
                return Err(Error::Ingest {
                    line: i + 2,
                    msg: format!("self-loop on node {}", ev.src),
                });
            }
            if ev.src as usize >= num_nodes || ev.dst as usize >= num_nodes {
                return Err(Error::Ingest {
                    line: i + 2,
                    msg: format!("node id out of range: ({}, {})", ev.src, ev.dst),
                });
            }
            if edge_features[i].len() != feature_dim {
                return Err(Error::Ingest {
                    line: i + 2,
                    msg: format!(
                        "feature row has {} entries, expected {}",
                        edge_features[i].len(),
                        feature_dim
                    ),
                });
            }
        }

        let mut order: Vec<usize> = (0..events.len()).collect();
        order.sort_by(|&a, &b| {
            events[a]
                .time
                .partial_cmp(&events[b].time)
                .unwrap()
                .then(a.cmp(&b))
        });

        let mut sorted_events = Vec::with_capacity(events.len());
        let mut flat = Vec::with_capacity(events.len() * feature_dim);
        for &i in &order {
            sorted_events.push(events[i].clone());
            flat.extend_from_slice(&edge_features[i]);
        }

        let time_span = if sorted_events.is_empty() {
            (0.0, 0.0)
        } else {
            (
                sorted_events.first().unwrap().time,
                sorted_events.last().unwrap().time,
            )
        };

        Ok(Self {
            events: sorted_events,
            num_nodes,
            num_users,
            feature_dim,
            edge_features: flat,
            node_features: vec![0.0; num_nodes * feature_dim],
            time_span,
        })
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn num_events(&self) -> usize {
        self.events.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn time_span(&self) -> (f64, f64) {
        self.time_span
    }

    pub fn edge_features(&self, event_id: usize) -> &[f64] {
        &self.edge_features[event_id * self.feature_dim..(event_id + 1) * self.feature_dim]
    }

    pub fn node_features(&self, node: u32) -> &[f64] {
        let n = node as usize;
        &self.node_features[n * self.feature_dim..(n + 1) * self.feature_dim]
    }

    /// Distinct state labels, sorted.
    pub fn label_classes(&self) -> Vec<u32> {
        let mut cs: Vec<u32> = self.events.iter().filter_map(|e| e.state_label).collect();
        cs.sort_unstable();
        cs.dedup();
        cs
    }

    /// Mean gap between consecutive events of the global stream.
    pub fn mean_inter_event_gap(&self) -> f64 {
        if self.events.len() < 2 {
            return 1.0;
        }
        let span = self.time_span.1 - self.time_span.0;
        if span <= 0.0 {
            1.0
        } else {
            span / (self.events.len() - 1) as f64
        }
    }

    /// Mean gap between consecutive events *of one node*, pooled over all
    /// nodes (both endpoint roles). This is the natural unit for how stale a
    /// node's own history is, so it is what time deltas are normalized by
    /// before decay and time encoding; the global stream gap shrinks with
    /// graph size and would make unit-rate decay annihilate everything.
    pub fn mean_per_node_gap(&self) -> f64 {
        let mut first = vec![f64::NAN; self.num_nodes];
        let mut last = vec![f64::NAN; self.num_nodes];
        let mut count = vec![0usize; self.num_nodes];
        for ev in &self.events {
            for node in [ev.src as usize, ev.dst as usize] {
                if count[node] == 0 {
                    first[node] = ev.time;
                }
                last[node] = ev.time;
                count[node] += 1;
            }
        }
        let mut span_sum = 0.0;
        let mut gap_count = 0usize;
        for v in 0..self.num_nodes {
            if count[v] >= 2 {
                span_sum += last[v] - first[v];
                gap_count += count[v] - 1;
            }
        }
        if gap_count == 0 || span_sum <= 0.0 {
            self.mean_inter_event_gap()
        } else {
            span_sum / gap_count as f64
        }
    }

    /// The first `n` events (the log is already chronological), keeping the
    /// full node table.
    pub fn head(&self, n: usize) -> TemporalGraph {
        let n = n.min(self.events.len());
        let events = self.events[..n].to_vec();
        let edge_features = self.edge_features[..n * self.feature_dim].to_vec();
        let time_span = if events.is_empty() {
            (0.0, 0.0)
        } else {
            (events[0].time, events[n - 1].time)
        };
        TemporalGraph {
            events,
            num_nodes: self.num_nodes,
            num_users: self.num_users,
            feature_dim: self.feature_dim,
            edge_features,
            node_features: self.node_features.clone(),
            time_span,
        }
    }

    /// Serialize back to the JODIE CSV format (users/items unmapped to their
    /// per-column namespaces).
    pub fn to_jodie_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let feat_header: Vec<String> = (1..=self.feature_dim).map(|i| format!("f{i}")).collect();
        if self.feature_dim > 0 {
            writeln!(out, "user_id,item_id,timestamp,state_label,{}", feat_header.join(","))?;
        } else {
            writeln!(out, "user_id,item_id,timestamp,state_label")?;
        }
        for (i, ev) in self.events.iter().enumerate() {
            let feats: Vec<String> = self
                .edge_features(i)
                .iter()
                .map(|v| format!("{v}"))
                .collect();
            let label = ev.state_label.unwrap_or(0);
            let item = ev.dst - self.num_users as u32;
            if feats.is_empty() {
                writeln!(out, "{},{},{},{}", ev.src, item, ev.time, label)?;
            } else {
                writeln!(out, "{},{},{},{},{}", ev.src, item, ev.time, label, feats.join(","))?;
            }
        }
        Ok(())
    }
}

/// Parse a JODIE-format CSV: header line, then
/// `user_id,item_id,timestamp,state_label,f_1,...,f_k`. User and item ids are
/// 0-based per column namespace; items are offset by the user count so all
/// nodes share one id space.
pub fn load_jodie_csv(path: &Path) -> Result<TemporalGraph> {
    let file = std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();

    // Header is required but its content is not interpreted.
    match lines.next() {
        Some(h) => {
            h?;
        }
        None => {
            return Err(Error::Ingest {
                line: 1,
                msg: "empty file (missing header)".into(),
            })
        }
    }

    struct Row {
        user: u32,
        item: u32,
        time: f64,
        label: u32,
        feats: Vec<f64>,
    }

    let mut rows: Vec<Row> = Vec::new();
    let mut feature_dim: Option<usize> = None;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 4 {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("expected at least 4 fields, found {}", fields.len()),
            });
        }
        let parse_num = |s: &str, what: &str| -> Result<f64> {
            s.trim().parse::<f64>().map_err(|_| Error::Ingest {
                line: line_no,
                msg: format!("non-numeric {what}: {s:?}"),
            })
        };
        let user = parse_num(fields[0], "user_id")?;
        let item = parse_num(fields[1], "item_id")?;
        let time = parse_num(fields[2], "timestamp")?;
        let label = parse_num(fields[3], "state_label")?;
        if user < 0.0 || user.fract() != 0.0 || item < 0.0 || item.fract() != 0.0 {
            return Err(Error::Ingest {
                line: line_no,
                msg: "ids must be non-negative integers".into(),
            });
        }
        if time < 0.0 {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("negative timestamp {time}"),
            });
        }
        if label < 0.0 || label.fract() != 0.0 {
            return Err(Error::Ingest {
                line: line_no,
                msg: format!("state_label must be a non-negative integer, got {}", fields[3]),
            });
        }
        let feats: Vec<f64> = fields[4..]
            .iter()
            .enumerate()
            .map(|(j, s)| parse_num(s, &format!("feature_{}", j + 1)))
            .collect::<Result<_>>()?;
        match feature_dim {
            None => feature_dim = Some(feats.len()),
            Some(d) if d != feats.len() => {
                return Err(Error::Ingest {
                    line: line_no,
                    msg: format!("row has {} features, expected {d}", feats.len()),
                });
            }
            _ => {}
        }
        rows.push(Row {
            user: user as u32,
            item: item as u32,
            time,
            label: label as u32,
            feats,
        });
    }

    if rows.is_empty() {
        return TemporalGraph::new(vec![], vec![], 0, 0, 0);
    }

    let num_users = rows.iter().map(|r| r.user).max().unwrap() as usize + 1;
    let num_items = rows.iter().map(|r| r.item).max().unwrap() as usize + 1;
    let feature_dim = feature_dim.unwrap_or(0);

    let mut events = Vec::with_capacity(rows.len());
    let mut feats = Vec::with_capacity(rows.len());
    for r in rows {
        events.push(Event {
            src: r.user,
            dst: num_users as u32 + r.item,
            time: r.time,
            state_label: Some(r.label),
        });
        feats.push(r.feats);
    }
    TemporalGraph::new(events, feats, num_users + num_items, num_users, feature_dim)
}

/// Contiguous event-index ranges for pre-training and the downstream pools.
#[derive(Debug, Clone, PartialEq)]
pub struct ChronoSplits {
    pub pretrain: Range<usize>,
    pub tune_pool: Range<usize>,
    pub val_pool: Range<usize>,
    pub test: Range<usize>,
    /// Nodes appearing only in the test range, sorted.
    pub inductive_unseen: Vec<u32>,
}

impl ChronoSplits {
    pub fn is_unseen(&self, node: u32) -> bool {
        self.inductive_unseen.binary_search(&node).is_ok()
    }
}

/// Split events by count at the given fractions (pretrain, tune, val); the
/// remainder is the test range.
pub fn chronological_split(
    g: &TemporalGraph,
    fractions: (f64, f64, f64),
) -> Result<ChronoSplits> {
    let (fp, ft, fv) = fractions;
    if !(fp > 0.0 && ft > 0.0 && fv > 0.0 && fp + ft + fv < 1.0) {
        return Err(Error::Split(format!(
            "fractions must be positive and sum below 1, got ({fp}, {ft}, {fv})"
        )));
    }
    let n = g.num_events();
    if n < 4 {
        return Err(Error::Split(format!("graph has {n} events, need at least 4")));
    }
    let n_pre = (fp * n as f64).round() as usize;
    let n_tune = (ft * n as f64).round() as usize;
    let n_val = (fv * n as f64).round() as usize;
    let used = n_pre + n_tune + n_val;
    if n_pre == 0 || n_tune == 0 || n_val == 0 || used >= n {
        return Err(Error::Split(format!(
            "graph too small for non-empty ranges: |E|={n} -> ({n_pre}, {n_tune}, {n_val}, {})",
            n as i64 - used as i64
        )));
    }

    let test_start = used;
    let mut seen_before_test = vec![false; g.num_nodes()];
    for ev in &g.events()[..test_start] {
        seen_before_test[ev.src as usize] = true;
        seen_before_test[ev.dst as usize] = true;
    }
    let mut in_test = vec![false; g.num_nodes()];
    for ev in &g.events()[test_start..] {
        in_test[ev.src as usize] = true;
        in_test[ev.dst as usize] = true;
    }
    let inductive_unseen: Vec<u32> = (0..g.num_nodes() as u32)
        .filter(|&v| in_test[v as usize] && !seen_before_test[v as usize])
        .collect();

    Ok(ChronoSplits {
        pretrain: 0..n_pre,
        tune_pool: n_pre..n_pre + n_tune,
        val_pool: n_pre + n_tune..used,
        test: test_start..n,
        inductive_unseen,
    })
}

/// A neighbor-list entry; features are fetched from the graph by event id.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub neighbor: u32,
    pub time: f64,
    pub event_id: u32,
}

/// Per-node time-sorted interaction lists covering both edge directions.
#[derive(Debug, Clone)]
pub struct NeighborIndex {
    per_node: Vec<Vec<NeighborEntry>>,
}

impl NeighborIndex {
    pub fn build(g: &TemporalGraph) -> Self {
        let mut per_node: Vec<Vec<NeighborEntry>> = vec![Vec::new(); g.num_nodes()];
        for (i, ev) in g.events().iter().enumerate() {
            per_node[ev.src as usize].push(NeighborEntry {
                neighbor: ev.dst,
                time: ev.time,
                event_id: i as u32,
            });
            per_node[ev.dst as usize].push(NeighborEntry {
                neighbor: ev.src,
                time: ev.time,
                event_id: i as u32,
            });
        }
        // Events are already chronological, so each list is too.
        NeighborIndex { per_node }
    }

    pub fn entries(&self, v: u32) -> &[NeighborEntry] {
        &self.per_node[v as usize]
    }

    /// The `n` most recent interactions of `v` strictly before `t`,
    /// most-recent-first. Equal-time events are never their own history.
    pub fn recent_neighbors(&self, v: u32, t: f64, n: usize) -> Vec<NeighborEntry> {
        let list = &self.per_node[v as usize];
        let cut = list.partition_point(|e| e.time < t);
        let take = n.min(cut);
        list[cut - take..cut].iter().rev().copied().collect()
    }

    /// Whether `v` has any interaction strictly before `t`.
    pub fn has_history(&self, v: u32, t: f64) -> bool {
        let list = &self.per_node[v as usize];
        list.first().is_some_and(|e| e.time < t)
    }
}

/// Earliest interaction time per unordered node pair; answers "was `a`
/// connected to `b` at time <= t" for negative sampling.
#[derive(Debug, Clone)]
pub struct PairIndex {
    first_time: HashMap<(u32, u32), f64>,
}

impl PairIndex {
    pub fn build(g: &TemporalGraph) -> Self {
        let mut first_time = HashMap::new();
        for ev in g.events() {
            let key = pair_key(ev.src, ev.dst);
            first_time.entry(key).or_insert(ev.time);
        }
        PairIndex { first_time }
    }

    pub fn connected_at(&self, a: u32, b: u32, t: f64) -> bool {
        self.first_time
            .get(&pair_key(a, b))
            .is_some_and(|&first| first <= t)
    }
}

fn pair_key(a: u32, b: u32) -> (u32, u32) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_csv(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f.flush().unwrap();
        f
    }

    #[test]
    fn loads_and_sorts_rows_by_timestamp() {
        let f = write_csv(
            "user_id,item_id,timestamp,state_label,f1\n\
             0,0,5.0,0,0.1\n\
             1,1,1.0,1,0.2\n\
             0,1,3.0,0,0.3\n",
        );
        let g = load_jodie_csv(f.path()).unwrap();
        assert_eq!(g.num_events(), 3);
        let times: Vec<f64> = g.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![1.0, 3.0, 5.0]);
        // users 0..2, items mapped to 2..4
        assert_eq!(g.num_users(), 2);
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.events()[0].src, 1);
        assert_eq!(g.events()[0].dst, 3);
        assert_eq!(g.edge_features(0), &[0.2]);
        assert_eq!(g.feature_dim(), 1);
    }

    #[test]
    fn header_only_file_yields_empty_graph() {
        let f = write_csv("user_id,item_id,timestamp,state_label,f1\n");
        let g = load_jodie_csv(f.path()).unwrap();
        assert_eq!(g.num_events(), 0);
        assert_eq!(g.num_nodes(), 0);
    }

    #[test]
    fn malformed_rows_name_the_line() {
        let f = write_csv("h\n0,0,1.0,0,0.5\n0,zero,2.0,0,0.5\n");
        match load_jodie_csv(f.path()) {
            Err(Error::Ingest { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("item_id"), "{msg}");
            }
            other => panic!("expected ingest error, got {other:?}"),
        }

        let f = write_csv("h\n0,0,-1.0,0,0.5\n");
        match load_jodie_csv(f.path()) {
            Err(Error::Ingest { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected ingest error, got {other:?}"),
        }

        let f = write_csv("h\n0,0,1.0,0,0.5\n0,0,2.0,0\n");
        match load_jodie_csv(f.path()) {
            Err(Error::Ingest { line, msg }) => {
                assert_eq!(line, 3);
                assert!(msg.contains("features"), "{msg}");
            }
            other => panic!("expected ingest error, got {other:?}"),
        }
    }

    #[test]
    fn ties_break_by_ingest_order() {
        let f = write_csv("h\n0,0,2.0,0\n0,1,2.0,0\n0,2,1.0,0\n");
        let g = load_jodie_csv(f.path()).unwrap();
        let dsts: Vec<u32> = g.events().iter().map(|e| e.dst).collect();
        // item ids offset by num_users = 1
        assert_eq!(dsts, vec![3, 1, 2]);
    }

    #[test]
    fn round_trip_preserves_the_sorted_row_multiset() {
        let f = write_csv(
            "user_id,item_id,timestamp,state_label,f1,f2\n\
             0,0,5.0,0,0.1,1.5\n\
             1,1,1.25,1,0.2,-3.0\n\
             0,1,3.5,0,0.3,0.0\n",
        );
        let g = load_jodie_csv(f.path()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        g.to_jodie_csv(out.path()).unwrap();
        let g2 = load_jodie_csv(out.path()).unwrap();
        assert_eq!(g.events(), g2.events());
        for i in 0..g.num_events() {
            assert_eq!(g.edge_features(i), g2.edge_features(i));
        }
    }

    #[test]
    fn split_matches_the_80_1_1_18_shape() {
        let events: Vec<Event> = (0..100)
            .map(|i| Event {
                src: 0,
                dst: 1,
                time: i as f64,
                state_label: None,
            })
            .collect();
        let feats = vec![vec![]; 100];
        let g = TemporalGraph::new(events, feats, 2, 1, 0).unwrap();
        let s = chronological_split(&g, (0.80, 0.01, 0.01)).unwrap();
        assert_eq!(s.pretrain, 0..80);
        assert_eq!(s.tune_pool, 80..81);
        assert_eq!(s.val_pool, 81..82);
        assert_eq!(s.test, 82..100);
    }

    #[test]
    fn split_rounds_like_the_wikipedia_count() {
        // round(0.8 * 157474) = 125979
        assert_eq!((0.8f64 * 157474.0).round() as usize, 125_979);
    }

    #[test]
    fn split_finds_unseen_nodes() {
        let mut events: Vec<Event> = (0..100)
            .map(|i| Event {
                src: 0,
                dst: 1,
                time: i as f64,
                state_label: None,
            })
            .collect();
        events[95] = Event {
            src: 42,
            dst: 1,
            time: 95.0,
            state_label: None,
        };
        let feats = vec![vec![]; 100];
        let g = TemporalGraph::new(events, feats, 43, 43, 0).unwrap();
        let s = chronological_split(&g, (0.80, 0.01, 0.01)).unwrap();
        assert!(s.is_unseen(42));
        assert!(!s.is_unseen(0));
        assert!(!s.is_unseen(1));
    }

    #[test]
    fn split_rejects_tiny_graphs() {
        let events: Vec<Event> = (0..3)
            .map(|i| Event {
                src: 0,
                dst: 1,
                time: i as f64,
                state_label: None,
            })
            .collect();
        let g = TemporalGraph::new(events, vec![vec![]; 3], 2, 1, 0).unwrap();
        assert!(matches!(
            chronological_split(&g, (0.80, 0.01, 0.01)),
            Err(Error::Split(_))
        ));
    }

    #[test]
    fn recent_neighbors_is_most_recent_first_and_strict() {
        let events = vec![
            Event { src: 0, dst: 1, time: 1.0, state_label: None },
            Event { src: 2, dst: 0, time: 3.0, state_label: None },
            Event { src: 0, dst: 3, time: 7.0, state_label: None },
        ];
        let g = TemporalGraph::new(events, vec![vec![]; 3], 4, 4, 0).unwrap();
        let idx = NeighborIndex::build(&g);

        let r = idx.recent_neighbors(0, 5.0, 2);
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].neighbor, r[0].time), (2, 3.0));
        assert_eq!((r[1].neighbor, r[1].time), (1, 1.0));

        assert!(idx.recent_neighbors(0, 1.0, 4).is_empty());
        assert_eq!(idx.recent_neighbors(0, 100.0, 20).len(), 3);
    }

    #[test]
    fn neighbor_index_covers_both_directions_exactly_twice() {
        let events = vec![
            Event { src: 0, dst: 1, time: 1.0, state_label: None },
            Event { src: 1, dst: 2, time: 2.0, state_label: None },
        ];
        let g = TemporalGraph::new(events, vec![vec![]; 2], 3, 3, 0).unwrap();
        let idx = NeighborIndex::build(&g);
        let total: usize = (0..3).map(|v| idx.entries(v).len()).sum();
        assert_eq!(total, 2 * g.num_events());
    }

    #[test]
    fn pair_index_answers_time_scoped_connectivity() {
        let events = vec![
            Event { src: 0, dst: 2, time: 5.0, state_label: None },
        ];
        let g = TemporalGraph::new(events, vec![vec![]; 1], 3, 1, 0).unwrap();
        let p = PairIndex::build(&g);
        assert!(!p.connected_at(0, 2, 4.9));
        assert!(p.connected_at(0, 2, 5.0));
        assert!(p.connected_at(2, 0, 6.0));
        assert!(!p.connected_at(0, 1, 100.0));
    }

    #[test]
    fn self_loops_are_rejected() {
        let events = vec![Event { src: 1, dst: 1, time: 0.0, state_label: None }];
        assert!(TemporalGraph::new(events, vec![vec![]; 1], 2, 1, 0).is_err());
    }
}
