//! Street graphs, shortest-path metrics and randomized embedding of a
//! finite metric into a hierarchically separated tree (HST).

use petgraph::graph::{NodeIndex, UnGraph};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::path::Path;
use thiserror::Error;

use crate::geo::{manhattan_distance, EARTH_RADIUS_M};
use crate::model::GeoPoint;

#[derive(Debug, Error)]
pub enum HstError {
    #[error("street graph line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("unknown street node {0}")]
    UnknownNode(u64),
    #[error("point {0} is not connected to the first point")]
    DisconnectedPoint(u64),
}

#[derive(Debug, Clone)]
pub struct StreetGraph {
    pub ids: Vec<u64>,
    pub points: Vec<GeoPoint>,
    /// `(u, v, meters)` over dense node indices.
    pub edges: Vec<(usize, usize, f64)>,
    index: HashMap<u64, usize>,
}

impl StreetGraph {
    pub fn new(nodes: Vec<(u64, GeoPoint)>, edges: Vec<(usize, usize, f64)>) -> Self {
        let index = nodes.iter().enumerate().map(|(i, n)| (n.0, i)).collect();
        let (ids, points) = nodes.into_iter().unzip();
        StreetGraph {
            ids,
            points,
            edges,
            index,
        }
    }

    /// Text format: `N M` header, `N` lines `id lat lon`, `M` lines
    /// `u v length_m`. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self, HstError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let err = |line: usize, msg: &str| HstError::Parse {
            line,
            msg: msg.to_string(),
        };
        let (hl, header) = lines.next().ok_or_else(|| err(0, "missing header"))?;
        let head: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| err(hl, "header must be `N M`"))?;
        let [n, m] = head[..] else {
            return Err(err(hl, "header must be `N M`"));
        };
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, l) = lines.next().ok_or_else(|| err(hl, "fewer node lines than declared"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "node line must be `id lat lon`"));
            }
            let id: u64 = f[0].parse().map_err(|_| err(ln, "bad node id"))?;
            let lat: f64 = f[1].parse().map_err(|_| err(ln, "bad latitude"))?;
            let lon: f64 = f[2].parse().map_err(|_| err(ln, "bad longitude"))?;
            let p = GeoPoint::new(lat, lon).map_err(|e| err(ln, &e.to_string()))?;
            nodes.push((id, p));
        }
        let index: HashMap<u64, usize> = nodes.iter().enumerate().map(|(i, n)| (n.0, i)).collect();
        if index.len() != nodes.len() {
            return Err(err(hl, "duplicate node id"));
        }
        let mut edges = Vec::with_capacity(m);
        for _ in 0..m {
            let (ln, l) = lines.next().ok_or_else(|| err(hl, "fewer edge lines than declared"))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "edge line must be `u v length_m`"));
            }
            let u: u64 = f[0].parse().map_err(|_| err(ln, "bad node id"))?;
            let v: u64 = f[1].parse().map_err(|_| err(ln, "bad node id"))?;
            let len: f64 = f[2].parse().map_err(|_| err(ln, "bad length"))?;
            if !(len > 0.0 && len.is_finite()) {
                return Err(err(ln, "edge length must be positive"));
            }
            let ui = *index.get(&u).ok_or(HstError::UnknownNode(u))?;
            let vi = *index.get(&v).ok_or(HstError::UnknownNode(v))?;
            edges.push((ui, vi, len));
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content after declared edges"));
        }
        Ok(StreetGraph::new(nodes, edges))
    }

    pub fn load(path: &Path) -> Result<Self, HstError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Regular `rows x cols` grid starting at `origin` (south-west corner)
    /// with `spacing_m` between neighbors. Node ids are `row * cols + col`.
    pub fn grid(origin: GeoPoint, rows: usize, cols: usize, spacing_m: f64) -> Self {
        let dlat = (spacing_m / EARTH_RADIUS_M).to_degrees();
        let dlon = dlat / origin.lat.to_radians().cos();
        let mut nodes = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                let p = GeoPoint {
                    lat: origin.lat + r as f64 * dlat,
                    lon: origin.lon + c as f64 * dlon,
                };
                nodes.push(((r * cols + c) as u64, p));
            }
        }
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if c + 1 < cols {
                    edges.push((i, i + 1, manhattan_distance(nodes[i].1, nodes[i + 1].1)));
                }
                if r + 1 < rows {
                    edges.push((i, i + cols, manhattan_distance(nodes[i].1, nodes[i + cols].1)));
                }
            }
        }
        StreetGraph::new(nodes, edges)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn node_index(&self, id: u64) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Dense index of the node closest to `p`.
    pub fn nearest_node(&self, p: GeoPoint) -> usize {
        self.points
            .iter()
            .enumerate()
            .map(|(i, q)| (i, manhattan_distance(p, *q)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _)| i)
            .expect("empty street graph")
    }

    fn petgraph(&self) -> UnGraph<(), f64> {
        let mut g = UnGraph::with_capacity(self.len(), self.edges.len());
        for _ in 0..self.len() {
            g.add_node(());
        }
        for &(u, v, w) in &self.edges {
            g.add_edge(NodeIndex::new(u), NodeIndex::new(v), w);
        }
        g
    }
}

/// Symmetric distance matrix over a finite point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Metric {
    n: usize,
    d: Vec<f64>,
}

impl Metric {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let x = f(i, j);
                d[i * n + j] = x;
                d[j * n + i] = x;
            }
        }
        Metric { n, d }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Shortest-path distances between the given street nodes (by file id).
pub fn graph_metric(g: &StreetGraph, points: &[u64]) -> Result<Metric, HstError> {
    let idx: Vec<usize> = points
        .iter()
        .map(|&id| g.node_index(id).ok_or(HstError::UnknownNode(id)))
        .collect::<Result<_, _>>()?;
    let pg = g.petgraph();
    let mut rows = Vec::with_capacity(idx.len());
    for &s in &idx {
        let dist = petgraph::algo::dijkstra(&pg, NodeIndex::new(s), None, |e| *e.weight());
        let row: Vec<f64> = idx
            .iter()
            .zip(points)
            .map(|(&t, &id)| dist.get(&NodeIndex::new(t)).copied().ok_or(HstError::DisconnectedPoint(id)))
            .collect::<Result<_, _>>()?;
        rows.push(row);
    }
    Ok(Metric::from_fn(idx.len(), |i, j| rows[i][j]))
}

const NONE: usize = usize::MAX;

/// Rooted tree with leaves in bijection with the embedded points. Edge
/// lengths shrink by exactly `sigma` per level going down.
#[derive(Debug, Clone, PartialEq)]
pub struct HstTree {
    pub sigma: f64,
    parent: Vec<usize>,
    /// Length of the edge to the parent (0 for the root).
    up_len: Vec<f64>,
    children: Vec<Vec<usize>>,
    depth: Vec<u32>,
    leaf_of_point: Vec<usize>,
    point_of_node: Vec<Option<usize>>,
}

impl HstTree {
    pub fn root(&self) -> usize {
        0
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn point_count(&self) -> usize {
        self.leaf_of_point.len()
    }

    pub fn parent(&self, node: usize) -> Option<usize> {
        (self.parent[node] != NONE).then_some(self.parent[node])
    }

    pub fn children(&self, node: usize) -> &[usize] {
        &self.children[node]
    }

    /// Length of the edge from `node` to its parent.
    pub fn up_len(&self, node: usize) -> f64 {
        self.up_len[node]
    }

    pub fn depth(&self, node: usize) -> u32 {
        self.depth[node]
    }

    /// Number of edges on every root-to-leaf path.
    pub fn height(&self) -> u32 {
        self.leaf_of_point.iter().map(|&l| self.depth[l]).max().unwrap_or(0)
    }

    pub fn leaf(&self, point: usize) -> usize {
        self.leaf_of_point[point]
    }

    pub fn point_at(&self, node: usize) -> Option<usize> {
        self.point_of_node[node]
    }

    pub fn lca(&self, mut a: usize, mut b: usize) -> usize {
        while self.depth[a] > self.depth[b] {
            a = self.parent[a];
        }
        while self.depth[b] > self.depth[a] {
            b = self.parent[b];
        }
        while a != b {
            a = self.parent[a];
            b = self.parent[b];
        }
        a
    }

    /// Tree distance between two nodes.
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let c = self.lca(a, b);
        self.up_to(a, c) + self.up_to(b, c)
    }

    /// Distance from `node` up to its ancestor `anc`.
    pub fn up_to(&self, mut node: usize, anc: usize) -> f64 {
        let mut d = 0.0;
        while node != anc {
            d += self.up_len[node];
            node = self.parent[node];
        }
        d
    }

    /// Node path from `a` to `b` (inclusive).
    pub fn path(&self, a: usize, b: usize) -> Vec<usize> {
        let c = self.lca(a, b);
        let mut up = vec![a];
        let mut x = a;
        while x != c {
            x = self.parent[x];
            up.push(x);
        }
        let mut down = Vec::new();
        let mut y = b;
        while y != c {
            down.push(y);
            y = self.parent[y];
        }
        up.extend(down.into_iter().rev());
        up
    }
}

impl HstTree {
    /// Assembles a tree from parent links (node 0 is the root) and the
    /// leaf of each point. Mostly useful for hand-built examples.
    pub fn from_parts(sigma: f64, parents: &[Option<usize>], up_len: &[f64], leaves: &[usize]) -> Self {
        assert_eq!(parents.len(), up_len.len());
        assert!(parents[0].is_none());
        let mut t = HstTree {
            sigma,
            parent: vec![NONE],
            up_len: vec![0.0],
            children: vec![Vec::new()],
            depth: vec![0],
            leaf_of_point: leaves.to_vec(),
            point_of_node: vec![None],
        };
        for i in 1..parents.len() {
            let p = parents[i].expect("only the root has no parent");
            assert!(p < i, "parents must precede children");
            push_node(&mut t, p, up_len[i]);
        }
        for (point, &leaf) in leaves.iter().enumerate() {
            t.point_of_node[leaf] = Some(point);
        }
        t
    }

    /// Whether `node` lies in the subtree of `anc`.
    pub fn is_ancestor(&self, anc: usize, mut node: usize) -> bool {
        while self.depth[node] > self.depth[anc] {
            node = self.parent[node];
        }
        node == anc
    }
}

/// Tree distance between the leaves of points `u` and `v`.
pub fn hst_distance(t: &HstTree, u: usize, v: usize) -> f64 {
    t.node_distance(t.leaf(u), t.leaf(v))
}

/// Separation suggested by the k-server analysis on HSTs:
/// `log2 n * log2(k log2 n)`, never below 2.
pub fn theoretical_sigma(points: usize, servers: usize) -> f64 {
    let l = (points.max(2) as f64).log2();
    (l * (servers.max(1) as f64 * l).log2()).max(2.0)
}

/// Randomized hierarchical decomposition (random center order and random
/// radius scale) producing a `sigma`-HST that dominates `metric`.
pub fn frt_embed(metric: &Metric, sigma: f64, seed: u64) -> HstTree {
    assert!(sigma >= 2.0, "sigma must be at least 2");
    let n = metric.len();
    assert!(n > 0, "cannot embed an empty metric");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = HstTree {
        sigma,
        parent: vec![NONE],
        up_len: vec![0.0],
        children: vec![Vec::new()],
        depth: vec![0],
        leaf_of_point: vec![NONE; n],
        point_of_node: vec![None],
    };
    if n == 1 {
        t.leaf_of_point[0] = 0;
        t.point_of_node[0] = Some(0);
        return t;
    }

    let mut dmin = f64::INFINITY;
    let mut dmax: f64 = 0.0;
    let mut duplicates = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.get(i, j);
            if d > 0.0 {
                dmin = dmin.min(d);
            } else {
                duplicates = true;
            }
            dmax = dmax.max(d);
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let beta = sigma.powf(rng.random::<f64>());

    if dmax == 0.0 {
        // all points coincide: one split level below the root
        for p in 0..n {
            let c = push_node(&mut t, 0, 1.0);
            t.leaf_of_point[p] = c;
            t.point_of_node[c] = Some(p);
        }
        return t;
    }

    let top = ((dmax / dmin).ln() / sigma.ln()).ceil() as i32 + 1;
    let radius = |i: i32| beta * sigma.powi(i) * dmin / sigma;

    // clusters at the current level: (tree node, member points)
    let mut level: Vec<(usize, Vec<usize>)> = vec![(0, (0..n).collect())];
    for i in (0..top).rev() {
        let r = radius(i);
        let edge = radius(i + 1);
        let mut next = Vec::new();
        for (node, members) in level {
            let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
            for &x in &members {
                let center = order
                    .iter()
                    .position(|&c| metric.get(x, c) <= r)
                    .expect("every point is its own center");
                match groups.iter_mut().find(|g| g.0 == center) {
                    Some(g) => g.1.push(x),
                    None => groups.push((center, vec![x])),
                }
            }
            groups.sort_by_key(|g| g.0);
            for (_, g) in groups {
                let child = push_node(&mut t, node, edge);
                next.push((child, g));
            }
        }
        level = next;
    }
    let bottom_edge = radius(0);
    for (node, members) in level {
        if duplicates {
            for p in members {
                let leaf = push_node(&mut t, node, bottom_edge);
                t.leaf_of_point[p] = leaf;
                t.point_of_node[leaf] = Some(p);
            }
        } else {
            debug_assert_eq!(members.len(), 1);
            t.leaf_of_point[members[0]] = node;
            t.point_of_node[node] = Some(members[0]);
        }
    }
    t
}

fn push_node(t: &mut HstTree, parent: usize, len: f64) -> usize {
    let id = t.parent.len();
    t.parent.push(parent);
    t.up_len.push(len);
    t.children.push(Vec::new());
    t.depth.push(t.depth[parent] + 1);
    t.point_of_node.push(None);
    t.children[parent].push(id);
    id
}

/// Street-graph backed HST: snaps geo-points to street nodes and answers
/// leaf lookups.
#[derive(Debug, Clone)]
pub struct HstMap {
    pub graph: StreetGraph,
    pub tree: HstTree,
}

impl HstMap {
    /// Embeds every node of a connected street graph.
    pub fn build(graph: StreetGraph, sigma: f64, seed: u64) -> Result<Self, HstError> {
        let metric = graph_metric(&graph, &graph.ids.clone())?;
        let tree = frt_embed(&metric, sigma, seed);
        Ok(HstMap { graph, tree })
    }

    /// Leaf of the street node nearest to `p`.
    pub fn leaf_for(&self, p: GeoPoint) -> usize {
        self.tree.leaf(self.graph.nearest_node(p))
    }

    /// Geo-point of a leaf.
    pub fn point_of_leaf(&self, leaf: usize) -> GeoPoint {
        self.graph.points[self.tree.point_at(leaf).expect("not a leaf")]
    }
}
