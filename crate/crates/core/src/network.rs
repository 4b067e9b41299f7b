//! Discrete-time binary dynamic networks, pair masks and the edge-list format.
//!
//! Time indices are zero-based in the API. The text formats are one-based in
//! `t` so that the first snapshot is written as `1`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Number of node pairs a network of `num_nodes` nodes carries per snapshot.
pub fn num_pairs(num_nodes: usize, directed: bool) -> usize {
    let ordered = num_nodes * num_nodes.saturating_sub(1);
    if directed {
        ordered
    } else {
        ordered / 2
    }
}

/// Iterator over the canonical pair order: row-major, `i < j` when undirected
/// and every `i != j` when directed.
pub fn pairs(num_nodes: usize, directed: bool) -> impl Iterator<Item = (usize, usize)> {
    (0..num_nodes).flat_map(move |i| {
        let start = if directed { 0 } else { i + 1 };
        (start..num_nodes)
            .filter(move |&j| j != i)
            .map(move |j| (i, j))
    })
}

/// Position of `(i, j)` in the canonical pair order. Undirected pairs may be
/// given in either orientation.
#[inline]
pub fn pair_index(num_nodes: usize, directed: bool, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < num_nodes && j < num_nodes);
    if directed {
        i * (num_nodes - 1) + if j < i { j } else { j - 1 }
    } else {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * num_nodes - i - 1) / 2 + (j - i - 1)
    }
}

/// A time series of `N x N` binary adjacency snapshots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DynamicNetwork {
    num_nodes: usize,
    num_steps: usize,
    directed: bool,
    links: Vec<bool>,
}

impl DynamicNetwork {
    pub fn empty(num_nodes: usize, num_steps: usize, directed: bool) -> Result<Self> {
        if num_nodes == 0 || num_steps == 0 {
            return Err(Error::invalid(format!(
                "network needs at least one node and one step (got N={num_nodes}, T={num_steps})"
            )));
        }
        Ok(Self {
            num_nodes,
            num_steps,
            directed,
            links: vec![false; num_steps * num_nodes * num_nodes],
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_steps(&self) -> usize {
        self.num_steps
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn num_pairs(&self) -> usize {
        num_pairs(self.num_nodes, self.directed)
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        pairs(self.num_nodes, self.directed)
    }

    #[inline]
    fn offset(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.num_nodes + i) * self.num_nodes + j
    }

    /// `Y_ij^(t)`; always false on the diagonal.
    #[inline]
    pub fn has_link(&self, t: usize, i: usize, j: usize) -> bool {
        self.links[self.offset(t, i, j)]
    }

    /// Sets `Y_ij^(t)` (and `Y_ji^(t)` when undirected).
    pub fn set_link(&mut self, t: usize, i: usize, j: usize, value: bool) -> Result<()> {
        if t >= self.num_steps {
            return Err(Error::TimeOutOfRange {
                t,
                steps: self.num_steps,
            });
        }
        if i >= self.num_nodes || j >= self.num_nodes {
            return Err(Error::invalid(format!(
                "pair ({i}, {j}) outside 0..{}",
                self.num_nodes
            )));
        }
        if i == j {
            return Err(Error::invalid(format!("self-loop on node {i}")));
        }
        let a = self.offset(t, i, j);
        self.links[a] = value;
        if !self.directed {
            let b = self.offset(t, j, i);
            self.links[b] = value;
        }
        Ok(())
    }

    /// All present links as `(t, i, j)` in canonical order.
    pub fn edges(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for t in 0..self.num_steps {
            for (i, j) in self.pairs() {
                if self.has_link(t, i, j) {
                    out.push((t, i, j));
                }
            }
        }
        out
    }

    pub fn edge_count(&self, t: usize) -> usize {
        self.pairs().filter(|&(i, j)| self.has_link(t, i, j)).count()
    }

    /// The leading `steps` snapshots as a new network.
    pub fn truncated(&self, steps: usize) -> Result<Self> {
        if steps == 0 || steps > self.num_steps {
            return Err(Error::TimeOutOfRange {
                t: steps,
                steps: self.num_steps,
            });
        }
        let len = steps * self.num_nodes * self.num_nodes;
        Ok(Self {
            num_nodes: self.num_nodes,
            num_steps: steps,
            directed: self.directed,
            links: self.links[..len].to_vec(),
        })
    }
}

/// Maps dense node indices back to the labels found in an input file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeIdMap {
    labels: Vec<u64>,
}

impl NodeIdMap {
    pub fn identity(num_nodes: usize) -> Self {
        Self {
            labels: (0..num_nodes as u64).collect(),
        }
    }

    pub fn label(&self, index: usize) -> u64 {
        self.labels[index]
    }

    pub fn labels(&self) -> &[u64] {
        &self.labels
    }

    pub fn is_identity(&self) -> bool {
        self.labels.iter().enumerate().all(|(i, &l)| i as u64 == l)
    }

    /// `index label` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# index label\n");
        for (i, l) in self.labels.iter().enumerate() {
            let _ = writeln!(out, "{i} {l}");
        }
        out
    }
}

/// Parsing options for headerless edge lists.
#[derive(Debug, Clone, Copy, Default)]
pub struct EdgeListFormat {
    /// Used only when the file carries no `N T directed` header.
    pub directed: bool,
}

#[derive(Debug, Clone)]
pub struct LoadedNetwork {
    pub network: DynamicNetwork,
    pub ids: NodeIdMap,
}

fn parse_directedness(token: &str) -> Option<bool> {
    match token.to_ascii_lowercase().as_str() {
        "directed" | "true" => Some(true),
        "undirected" | "false" => Some(false),
        _ => None,
    }
}

fn parse_int(token: &str, line: usize, what: &str) -> Result<u64> {
    token.parse::<u64>().map_err(|_| Error::Parse {
        line,
        message: format!("expected non-negative integer {what}, found {token:?}"),
    })
}

/// Parses the line-oriented `t i j` edge list.
///
/// `#` starts a comment. An optional header `N T directed|undirected` may
/// precede the edges; with it node ids must lie in `0..N` and `t` in `1..=T`.
/// Without it `T` is the largest `t` seen and node ids are remapped to a dense
/// range in ascending label order.
pub fn parse_edge_list(text: &str, format: EdgeListFormat) -> Result<LoadedNetwork> {
    let mut header: Option<(usize, usize, bool)> = None;
    let mut edges: Vec<(usize, u64, u64, u64)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        if tokens.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", tokens.len()),
            });
        }
        if let Some(directed) = parse_directedness(tokens[2]) {
            if header.is_some() || !edges.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "header must precede all edges and appear once".into(),
                });
            }
            let n = parse_int(tokens[0], line, "node count")? as usize;
            let t = parse_int(tokens[1], line, "step count")? as usize;
            if n == 0 || t == 0 {
                return Err(Error::Parse {
                    line,
                    message: "header node and step counts must be positive".into(),
                });
            }
            header = Some((n, t, directed));
            continue;
        }
        let t = parse_int(tokens[0], line, "time")?;
        let i = parse_int(tokens[1], line, "node")?;
        let j = parse_int(tokens[2], line, "node")?;
        if t == 0 {
            return Err(Error::Parse {
                line,
                message: "time indices start at 1".into(),
            });
        }
        if i == j {
            return Err(Error::SelfLoop { line, node: i });
        }
        if let Some((n, steps, _)) = header {
            if i >= n as u64 || j >= n as u64 {
                return Err(Error::Parse {
                    line,
                    message: format!("node id outside 0..{n} declared in header"),
                });
            }
            if t > steps as u64 {
                return Err(Error::Parse {
                    line,
                    message: format!("time {t} exceeds declared T={steps}"),
                });
            }
        }
        edges.push((line, t, i, j));
    }

    let (num_nodes, num_steps, directed, ids) = match header {
        Some((n, t, d)) => (n, t, d, NodeIdMap::identity(n)),
        None => {
            if edges.is_empty() {
                return Err(Error::Parse {
                    line: 0,
                    message: "no edges and no header: cannot infer N and T".into(),
                });
            }
            let mut labels: Vec<u64> = edges.iter().flat_map(|&(_, _, i, j)| [i, j]).collect();
            labels.sort_unstable();
            labels.dedup();
            let steps = edges.iter().map(|e| e.1).max().unwrap_or(1) as usize;
            (labels.len(), steps, format.directed, NodeIdMap { labels })
        }
    };

    let index: BTreeMap<u64, usize> = ids
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| (l, i))
        .collect();
    let mut network = DynamicNetwork::empty(num_nodes, num_steps, directed)?;
    for (_, t, i, j) in edges {
        network.set_link(t as usize - 1, index[&i], index[&j], true)?;
    }
    Ok(LoadedNetwork { network, ids })
}

pub fn load_network(path: impl AsRef<Path>, format: EdgeListFormat) -> Result<LoadedNetwork> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_edge_list(&text, format)
}

/// Header plus canonical-order `t i j` lines.
pub fn network_to_text(net: &DynamicNetwork) -> String {
    let mut out = format!(
        "{} {} {}\n",
        net.num_nodes,
        net.num_steps,
        if net.directed { "directed" } else { "undirected" }
    );
    for (t, i, j) in net.edges() {
        let _ = writeln!(out, "{} {i} {j}", t + 1);
    }
    out
}

pub fn write_network(net: &DynamicNetwork, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, network_to_text(net)).map_err(|e| Error::io(path, e))
}

/// Pairs hidden from training at every time step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMask {
    num_nodes: usize,
    directed: bool,
    hidden: Vec<bool>,
    count: usize,
}

impl PairMask {
    /// A mask hiding nothing.
    pub fn none(num_nodes: usize, directed: bool) -> Self {
        Self {
            num_nodes,
            directed,
            hidden: vec![false; num_nodes * num_nodes],
            count: 0,
        }
    }

    /// A mask hiding every pair.
    pub fn all(num_nodes: usize, directed: bool) -> Self {
        let mut mask = Self::none(num_nodes, directed);
        for (i, j) in pairs(num_nodes, directed) {
            mask.insert(i, j);
        }
        mask
    }

    pub fn from_pairs(
        num_nodes: usize,
        directed: bool,
        held_out: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let mut mask = Self::none(num_nodes, directed);
        for (i, j) in held_out {
            if i >= num_nodes || j >= num_nodes || i == j {
                return Err(Error::invalid(format!("invalid held-out pair ({i}, {j})")));
            }
            if mask.is_held_out(i, j) {
                return Err(Error::invalid(format!("duplicate held-out pair ({i}, {j})")));
            }
            mask.insert(i, j);
        }
        Ok(mask)
    }

    fn insert(&mut self, i: usize, j: usize) {
        let n = self.num_nodes;
        self.hidden[i * n + j] = true;
        if !self.directed {
            self.hidden[j * n + i] = true;
        }
        self.count += 1;
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub fn is_held_out(&self, i: usize, j: usize) -> bool {
        self.hidden[i * self.num_nodes + j]
    }

    /// True for a training pair: distinct nodes and not held out.
    #[inline]
    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        i != j && !self.is_held_out(i, j)
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn held_out_pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.num_nodes, self.directed)
            .filter(|&(i, j)| self.is_held_out(i, j))
            .collect()
    }

    pub fn training_pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.num_nodes, self.directed)
            .filter(|&(i, j)| !self.is_held_out(i, j))
            .collect()
    }

    /// `i j` lines in canonical order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, j) in self.held_out_pairs() {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn parse(text: &str, num_nodes: usize, directed: bool) -> Result<Self> {
        let mut held = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if tokens.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected 2 fields, found {}", tokens.len()),
                });
            }
            let i = parse_int(tokens[0], line, "node")? as usize;
            let j = parse_int(tokens[1], line, "node")? as usize;
            let (i, j) = if directed || i < j { (i, j) } else { (j, i) };
            held.push((i, j));
        }
        Self::from_pairs(num_nodes, directed, held)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>, num_nodes: usize, directed: bool) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, num_nodes, directed)
    }
}

/// Holds out `round(fraction * pairs)` pairs chosen uniformly at random.
///
/// Pairs are unordered for undirected networks and ordered for directed ones.
pub fn generate_holdout_mask(net: &DynamicNetwork, fraction: f64, seed: u64) -> Result<PairMask> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "holdout fraction must lie in (0, 1), got {fraction}"
        )));
    }
    let all: Vec<(usize, usize)> = net.pairs().collect();
    let count = (fraction * all.len() as f64).round() as usize;
    if count == 0 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {} pairs holds out nothing",
            all.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, all.len(), count).into_vec();
    chosen.sort_unstable();
    PairMask::from_pairs(
        net.num_nodes(),
        net.is_directed(),
        chosen.into_iter().map(|k| all[k]),
    )
}

/// Fraction of observed pairs linked at step `t`.
pub fn density(net: &DynamicNetwork, mask: Option<&PairMask>, t: usize) -> Result<f64> {
    if t >= net.num_steps() {
        return Err(Error::TimeOutOfRange {
            t,
            steps: net.num_steps(),
        });
    }
    let mut total = 0usize;
    let mut linked = 0usize;
    for (i, j) in net.pairs() {
        if mask.is_some_and(|m| m.is_held_out(i, j)) {
            continue;
        }
        total += 1;
        linked += usize::from(net.has_link(t, i, j));
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(linked as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loads_small_undirected_file() {
        let loaded = parse_edge_list("1 0 1\n2 1 2\n", EdgeListFormat::default()).unwrap();
        let net = loaded.network;
        assert_eq!(net.num_nodes(), 3);
        assert_eq!(net.num_steps(), 2);
        assert!(net.has_link(0, 0, 1) && net.has_link(0, 1, 0));
        assert!(net.has_link(1, 1, 2) && net.has_link(1, 2, 1));
        assert_eq!(net.edges().len(), 2);
        assert!(loaded.ids.is_identity());
    }

    #[test]
    fn header_with_no_edges_is_all_zero() {
        let net = parse_edge_list("# empty\n5 3 undirected\n", EdgeListFormat::default())
            .unwrap()
            .network;
        assert_eq!((net.num_nodes(), net.num_steps()), (5, 3));
        assert!(net.edges().is_empty());
    }

    #[test]
    fn self_loop_reports_line() {
        let err = parse_edge_list("1 0 1\n# c\n1 4 4\n", EdgeListFormat::default()).unwrap_err();
        assert!(matches!(err, Error::SelfLoop { line: 3, node: 4 }), "{err}");
    }

    #[test]
    fn malformed_line_reports_line() {
        let err = parse_edge_list("1 0 1\n2 x 1\n", EdgeListFormat::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_edge_list("1 0\n", EdgeListFormat::default()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn sparse_ids_are_remapped() {
        let loaded = parse_edge_list("1 10 30\n3 30 20\n", EdgeListFormat::default()).unwrap();
        assert_eq!(loaded.ids.labels(), &[10, 20, 30]);
        assert_eq!(loaded.network.num_steps(), 3);
        assert!(loaded.network.has_link(2, 2, 1));
        assert_eq!(loaded.network.edge_count(1), 0);
    }

    #[test]
    fn directed_header_keeps_orientation() {
        let net = parse_edge_list("3 1 directed\n1 2 0\n", EdgeListFormat::default())
            .unwrap()
            .network;
        assert!(net.has_link(0, 2, 0));
        assert!(!net.has_link(0, 0, 2));
    }

    #[test]
    fn holdout_sizes() {
        let net = DynamicNetwork::empty(110, 1, false).unwrap();
        let mask = generate_holdout_mask(&net, 0.2, 1).unwrap();
        assert_eq!(net.num_pairs(), 5995);
        assert_eq!(mask.len(), 1199);
        assert_eq!(mask, generate_holdout_mask(&net, 0.2, 1).unwrap());

        let tiny = DynamicNetwork::empty(3, 1, false).unwrap();
        assert_eq!(generate_holdout_mask(&tiny, 0.2, 9).unwrap().len(), 1);
        assert!(generate_holdout_mask(&tiny, 0.0, 9).is_err());
        assert!(generate_holdout_mask(&tiny, 1.0, 9).is_err());
    }

    #[test]
    fn mask_partitions_pairs() {
        let net = DynamicNetwork::empty(12, 1, true).unwrap();
        let mask = generate_holdout_mask(&net, 0.3, 4).unwrap();
        let held = mask.held_out_pairs();
        let train = mask.training_pairs();
        assert_eq!(held.len() + train.len(), net.num_pairs());
        assert!(held.iter().all(|p| !train.contains(p)));
    }

    #[test]
    fn density_examples() {
        let mut net = DynamicNetwork::empty(4, 2, false).unwrap();
        assert_eq!(density(&net, None, 0).unwrap(), 0.0);
        net.set_link(0, 0, 1, true).unwrap();
        net.set_link(0, 2, 3, true).unwrap();
        net.set_link(0, 1, 3, true).unwrap();
        assert_eq!(density(&net, None, 0).unwrap(), 0.5);
        for (i, j) in pairs(4, false) {
            net.set_link(1, i, j, true).unwrap();
        }
        assert_eq!(density(&net, None, 1).unwrap(), 1.0);
        assert!(density(&net, None, 2).is_err());
        let mask = PairMask::from_pairs(4, false, [(0, 1)]).unwrap();
        assert!((density(&net, Some(&mask), 0).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn mask_text_round_trip() {
        let mask = PairMask::from_pairs(5, false, [(0, 3), (2, 4)]).unwrap();
        let back = PairMask::parse(&mask.to_text(), 5, false).unwrap();
        assert_eq!(mask, back);
        assert_eq!(mask.to_text(), back.to_text());
    }

    #[test]
    fn pair_index_follows_canonical_order() {
        for directed in [false, true] {
            for (k, (i, j)) in pairs(7, directed).enumerate() {
                assert_eq!(pair_index(7, directed, i, j), k);
                if !directed {
                    assert_eq!(pair_index(7, directed, j, i), k);
                }
            }
        }
    }
}
