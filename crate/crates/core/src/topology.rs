//! Device graphs and the aggregation tree.
//!
//! A [`ChannelGraph`] holds one complex channel coefficient per unordered
//! device pair. The aggregation tree is the minimum spanning tree under edge
//! weight `1/|h|^2`, rooted at the destination (the last device). Equal
//! weights are ordered by the lexicographically smallest `(lo, hi)` device
//! pair so Prim and Kruskal are both deterministic.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{draw_channels, FadingConfig};
use crate::rng::{derive_seed, rng_from};
use crate::{Error, Result};

/// Channels with magnitude below this are treated as absent.
pub const MIN_CHANNEL_GAIN: f64 = 1e-12;

/// Connectivity re-draws before [`random_geometric_graph`] gives up.
pub const CONNECTIVITY_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelGraph {
    k: usize,
    edges: BTreeMap<(usize, usize), Complex64>,
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Edge weight used by both MST algorithms.
pub fn edge_weight(h: Complex64) -> f64 {
    1.0 / h.norm_sqr()
}

impl ChannelGraph {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 devices, got {k}")));
        }
        Ok(Self {
            k,
            edges: BTreeMap::new(),
        })
    }

    /// Builds a graph and checks that it is connected.
    pub fn from_edges<I>(k: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut g = Self::new(k)?;
        for (i, j, h) in edges {
            g.add_edge(i, j, h)?;
        }
        g.check_connected()?;
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, h: Complex64) -> Result<()> {
        if i >= self.k || j >= self.k {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}) out of range for k={}",
                i + 1,
                j + 1,
                self.k
            )));
        }
        if i == j {
            return Err(Error::InvalidInput(format!("self-loop at device {}", i + 1)));
        }
        if !h.re.is_finite() || !h.im.is_finite() || h.norm() < MIN_CHANNEL_GAIN {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}) has degenerate channel {h}",
                i + 1,
                j + 1
            )));
        }
        if self.edges.insert(ordered(i, j), h).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate edge ({}, {})",
                i + 1,
                j + 1
            )));
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn destination(&self) -> usize {
        self.k - 1
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(lo, hi, h)` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        self.edges.iter().map(|(&(i, j), &h)| (i, j, h))
    }

    pub fn channel(&self, i: usize, j: usize) -> Option<Complex64> {
        self.edges.get(&ordered(i, j)).copied()
    }

    pub fn adjacency(&self) -> Vec<Vec<(usize, Complex64)>> {
        let mut adj = vec![Vec::new(); self.k];
        for (i, j, h) in self.edges() {
            adj[i].push((j, h));
            adj[j].push((i, h));
        }
        adj
    }

    /// Fails with the first (lowest-index) device unreachable from the
    /// destination.
    pub fn check_connected(&self) -> Result<()> {
        let adj = self.adjacency();
        let mut seen = vec![false; self.k];
        let mut queue = VecDeque::from([self.destination()]);
        seen[self.destination()] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(d) => Err(Error::Disconnected { device: d + 1 }),
            None => Ok(()),
        }
    }

    /// Writes the structured-text form: a `k destination` header followed by
    /// `i j re im` per edge, 1-based, 17 significant digits.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{} {}", self.k, self.k)?;
        for (i, j, h) in self.edges() {
            writeln!(w, "{} {} {:.16e} {:.16e}", i + 1, j + 1, h.re, h.im)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.k, self.k);
        for (i, j, h) in self.edges() {
            let _ = writeln!(s, "{} {} {:.16e} {:.16e}", i + 1, j + 1, h.re, h.im);
        }
        s
    }

    /// Parses the structured-text form. Blank lines and `#` comments are skipped.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(n, l)| (n + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 0,
            message: "missing header".into(),
        })?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: hline,
                message: "header must be `k destination`".into(),
            });
        }
        let k: usize = parse_field(fields[0], hline)?;
        let dest: usize = parse_field(fields[1], hline)?;
        if dest != k {
            return Err(Error::Parse {
                line: hline,
                message: format!("destination must be device {k}, got {dest}"),
            });
        }
        let mut g = Self::new(k)?;
        for (n, line) in lines {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 4 {
                return Err(Error::Parse {
                    line: n,
                    message: "edge line must be `i j re im`".into(),
                });
            }
            let i: usize = parse_field(f[0], n)?;
            let j: usize = parse_field(f[1], n)?;
            if i == 0 || j == 0 {
                return Err(Error::Parse {
                    line: n,
                    message: "device indices are 1-based".into(),
                });
            }
            let h = Complex64::new(parse_field(f[2], n)?, parse_field(f[3], n)?);
            g.add_edge(i - 1, j - 1, h).map_err(|e| Error::Parse {
                line: n,
                message: e.to_string(),
            })?;
        }
        g.check_connected()?;
        Ok(g)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, line: usize) -> Result<T> {
    s.parse().map_err(|_| Error::Parse {
        line,
        message: format!("cannot parse `{s}`"),
    })
}

/// Total order on edges: weight first, then the `(lo, hi)` pair.
#[derive(Debug, Clone, Copy)]
struct EdgeKey {
    weight: f64,
    lo: usize,
    hi: usize,
}

impl EdgeKey {
    fn new(i: usize, j: usize, h: Complex64) -> Self {
        let (lo, hi) = ordered(i, j);
        Self {
            weight: edge_weight(h),
            lo,
            hi,
        }
    }
}

impl PartialEq for EdgeKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for EdgeKey {}

impl PartialOrd for EdgeKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for EdgeKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(self.lo.cmp(&other.lo))
            .then(self.hi.cmp(&other.hi))
    }
}

/// Prim's algorithm grown from the destination.
///
/// The heap holds candidate edges keyed by weight; a popped edge whose far end
/// is already in the tree is skipped, which realizes
/// `key[i] = min_{j in S} |h_{j,i}|^{-2}` with lazy deletion.
pub fn build_mst_prim(graph: &ChannelGraph) -> Result<AggregationTree> {
    graph.check_connected()?;
    let adj = graph.adjacency();
    let root = graph.destination();
    let mut in_tree = vec![false; graph.k()];
    let mut heap = BinaryHeap::new();
    let mut tree_edges = Vec::with_capacity(graph.k() - 1);

    let push_from = |u: usize, in_tree: &[bool], heap: &mut BinaryHeap<_>| {
        for &(v, h) in &adj[u] {
            if !in_tree[v] {
                heap.push(Reverse((EdgeKey::new(u, v, h), v)));
            }
        }
    };

    in_tree[root] = true;
    push_from(root, &in_tree, &mut heap);
    while let Some(Reverse((key, v))) = heap.pop() {
        if in_tree[v] {
            continue;
        }
        in_tree[v] = true;
        tree_edges.push((key.lo, key.hi));
        push_from(v, &in_tree, &mut heap);
    }
    AggregationTree::from_tree_edges(graph, &tree_edges)
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Kruskal's algorithm over edges sorted by [`EdgeKey`].
pub fn build_mst_kruskal(graph: &ChannelGraph) -> Result<AggregationTree> {
    graph.check_connected()?;
    let mut keys: Vec<EdgeKey> = graph.edges().map(|(i, j, h)| EdgeKey::new(i, j, h)).collect();
    keys.sort();
    let mut ds = DisjointSet::new(graph.k());
    let mut tree_edges = Vec::with_capacity(graph.k() - 1);
    for key in keys {
        if ds.union(key.lo, key.hi) {
            tree_edges.push((key.lo, key.hi));
            if tree_edges.len() == graph.k() - 1 {
                break;
            }
        }
    }
    AggregationTree::from_tree_edges(graph, &tree_edges)
}

/// Rooted spanning tree with everything the protocol and the optimizers query.
#[derive(Debug, Clone)]
pub struct AggregationTree {
    k: usize,
    parent: Vec<Option<usize>>,
    level: Vec<usize>,
    children: Vec<Vec<usize>>,
    descendants: Vec<Vec<usize>>,
    hop_channel: Vec<Complex64>,
    effective: Vec<Complex64>,
    depth: usize,
    edges: Vec<(usize, usize)>,
    total_weight: f64,
}

impl AggregationTree {
    /// Roots the given spanning-tree edges at the destination.
    pub fn from_tree_edges(graph: &ChannelGraph, tree_edges: &[(usize, usize)]) -> Result<Self> {
        let k = graph.k();
        let root = graph.destination();
        if tree_edges.len() != k - 1 {
            return Err(Error::InvalidInput(format!(
                "a spanning tree of {k} devices needs {} edges, got {}",
                k - 1,
                tree_edges.len()
            )));
        }
        let mut adj = vec![Vec::new(); k];
        let mut edges = Vec::with_capacity(k - 1);
        let mut total_weight = 0.0;
        for &(i, j) in tree_edges {
            let h = graph.channel(i, j).ok_or_else(|| {
                Error::InvalidInput(format!("tree edge ({}, {}) not in graph", i + 1, j + 1))
            })?;
            adj[i].push((j, h));
            adj[j].push((i, h));
            edges.push(ordered(i, j));
            total_weight += edge_weight(h);
        }
        edges.sort_unstable();

        let mut parent = vec![None; k];
        let mut level = vec![0; k];
        let mut hop_channel = vec![Complex64::new(1.0, 0.0); k];
        let mut effective = vec![Complex64::new(1.0, 0.0); k];
        let mut seen = vec![false; k];
        let mut order = Vec::with_capacity(k);
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, h) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    parent[v] = Some(u);
                    level[v] = level[u] + 1;
                    hop_channel[v] = h;
                    effective[v] = h * effective[u];
                    queue.push_back(v);
                }
            }
        }
        if let Some(d) = seen.iter().position(|s| !s) {
            return Err(Error::Disconnected { device: d + 1 });
        }

        let mut children = vec![Vec::new(); k];
        for (v, pv) in parent.iter().enumerate() {
            if let Some(p) = *pv {
                children[p].push(v);
            }
        }
        let mut descendants: Vec<Vec<usize>> = vec![Vec::new(); k];
        for &u in order.iter().rev() {
            if let Some(p) = parent[u] {
                let mut sub = std::mem::take(&mut descendants[u]);
                descendants[p].push(u);
                descendants[p].extend_from_slice(&sub);
                sub.sort_unstable();
                descendants[u] = sub;
            }
        }
        descendants[root].sort_unstable();
        let depth = level.iter().copied().max().unwrap_or(0);

        Ok(Self {
            k,
            parent,
            level,
            children,
            descendants,
            hop_channel,
            effective,
            depth,
            edges,
            total_weight,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn root(&self) -> usize {
        self.k - 1
    }

    /// Number of sources, `K - 1`.
    pub fn sources(&self) -> usize {
        self.k - 1
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn level(&self, i: usize) -> usize {
        self.level[i]
    }

    /// Maximum path length `L`; also the number of OTA slots.
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// All strict descendants of `i`, sorted.
    pub fn descendants(&self, i: usize) -> &[usize] {
        &self.descendants[i]
    }

    /// `h_{pi(i), i}`; one for the root.
    pub fn hop_channel(&self, i: usize) -> Complex64 {
        self.hop_channel[i]
    }

    /// `h_{i -> K}`, the product of hop channels up to the destination.
    pub fn effective_channel(&self, i: usize) -> Complex64 {
        self.effective[i]
    }

    /// Product of hop channels from `from` up to its ancestor `to`.
    ///
    /// Panics if `to` is not an ancestor of (or equal to) `from`.
    pub fn path_channel(&self, from: usize, to: usize) -> Complex64 {
        let mut h = Complex64::new(1.0, 0.0);
        let mut u = from;
        while u != to {
            h *= self.hop_channel[u];
            u = self.parent[u].expect("`to` must be an ancestor of `from`");
        }
        h
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        i != self.root() && self.children[i].is_empty()
    }

    pub fn is_intermediate(&self, i: usize) -> bool {
        i != self.root() && !self.children[i].is_empty()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.is_leaf(i)).collect()
    }

    pub fn intermediates(&self) -> Vec<usize> {
        (0..self.k).filter(|&i| self.is_intermediate(i)).collect()
    }

    /// Distance-`l` device set `K_l`.
    pub fn level_set(&self, l: usize) -> Vec<usize> {
        (0..self.k).filter(|&i| self.level[i] == l).collect()
    }

    /// Slot (1-based) in which device `i` transmits: `L - level(i) + 1`.
    pub fn transmit_slot(&self, i: usize) -> Option<usize> {
        (i != self.root()).then(|| self.depth - self.level[i] + 1)
    }

    /// Devices on the path from `i` to the root, `i` first, root last.
    pub fn path_to_root(&self, i: usize) -> Vec<usize> {
        let mut path = vec![i];
        let mut u = i;
        while let Some(p) = self.parent[u] {
            path.push(p);
            u = p;
        }
        path
    }

    /// Tree edges as sorted `(lo, hi)` pairs.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sum of `1/|h|^2` over tree edges.
    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }
}

/// Device positions plus the graph drawn on them.
#[derive(Debug, Clone)]
pub struct GeometricTopology {
    pub positions: Vec<[f64; 2]>,
    pub graph: ChannelGraph,
}

/// Uniform unit-square placement with a connection radius.
///
/// Re-draws (with derived seeds) until the graph is connected, at most
/// [`CONNECTIVITY_RETRIES`] times.
pub fn random_geometric_topology(
    k: usize,
    radius: f64,
    seed: u64,
    fading: &FadingConfig,
) -> Result<GeometricTopology> {
    if k < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 devices, got {k}")));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidInput(format!("radius must be positive, got {radius}")));
    }
    fading.validate()?;
    for attempt in 0..CONNECTIVITY_RETRIES {
        let mut rng = rng_from(seed, &[attempt as u64]);
        let positions: Vec<[f64; 2]> = (0..k)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        let mut pairs = Vec::new();
        let mut ds = DisjointSet::new(k);
        for i in 0..k {
            for j in i + 1..k {
                let d = distance(&positions[i], &positions[j]);
                if d <= radius {
                    pairs.push((i, j));
                    ds.union(i, j);
                }
            }
        }
        let root = ds.find(0);
        if (1..k).any(|i| ds.find(i) != root) {
            continue;
        }
        let draw_cfg = FadingConfig {
            seed: derive_seed(fading.seed, &[seed, attempt as u64]),
            ..fading.clone()
        };
        let gains = draw_channels(&positions, &pairs, &draw_cfg)?;
        let graph = ChannelGraph::from_edges(
            k,
            pairs.iter().zip(gains).map(|(&(i, j), h)| (i, j, h)),
        )?;
        return Ok(GeometricTopology { positions, graph });
    }
    Err(Error::GenerationFailed {
        k,
        radius,
        attempts: CONNECTIVITY_RETRIES,
    })
}

pub fn random_geometric_graph(
    k: usize,
    radius: f64,
    seed: u64,
    fading: &FadingConfig,
) -> Result<ChannelGraph> {
    random_geometric_topology(k, radius, seed, fading).map(|t| t.graph)
}

pub(crate) fn distance(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
