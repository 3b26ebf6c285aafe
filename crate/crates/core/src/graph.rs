//! Undirected multigraphs and the subgraph enumerations the loop series and
//! the graph polynomials are built from.
//!
//! Self-loops and parallel edges are allowed here: contraction routinely
//! produces them. Edge ids are positions in the edge list and survive
//! contraction/deletion in relative order.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest edge count the bitmask-based enumerations accept.
pub const MAX_ENUMERATION_EDGES: usize = 63;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Multigraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

/// A set of edge ids of some host graph, stored as a bitmask (bit `e` set
/// iff edge `e` is a member).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct EdgeSubset(u64);

impl EdgeSubset {
    pub const EMPTY: EdgeSubset = EdgeSubset(0);

    pub fn from_bits(bits: u64) -> Self {
        EdgeSubset(bits)
    }

    pub fn from_edges<I: IntoIterator<Item = usize>>(edges: I) -> Self {
        EdgeSubset(edges.into_iter().fold(0u64, |acc, e| acc | (1u64 << e)))
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, e: usize) -> bool {
        e < 64 && self.0 & (1u64 << e) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let e = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(e)
            }
        })
    }

    /// Binary rendering over `width` edges, edge 0 rightmost.
    pub fn to_bitstring(self, width: usize) -> String {
        (0..width)
            .rev()
            .map(|e| if self.contains(e) { '1' } else { '0' })
            .collect()
    }
}

/// A node-disjoint union of cycles together with its number of components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleCover {
    pub edges: EdgeSubset,
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Connectivity {
    pub connected: bool,
    pub components: usize,
}

impl Multigraph {
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::Argument("a graph needs at least one node".into()));
        }
        if let Some((e, &(a, b))) = edges
            .iter()
            .enumerate()
            .find(|(_, &(a, b))| a >= node_count || b >= node_count)
        {
            return Err(Error::Argument(format!(
                "edge {e} = ({a}, {b}) references a node >= {node_count}"
            )));
        }
        Ok(Multigraph { node_count, edges })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> Result<(usize, usize)> {
        self.edges
            .get(e)
            .copied()
            .ok_or_else(|| Error::Argument(format!("edge id {e} out of range")))
    }

    pub fn is_self_loop(&self, e: usize) -> bool {
        matches!(self.edges.get(e), Some(&(a, b)) if a == b)
    }

    pub fn has_self_loops(&self) -> bool {
        self.edges.iter().any(|&(a, b)| a == b)
    }

    /// No self-loops and no repeated unordered pair.
    pub fn is_simple(&self) -> bool {
        if self.has_self_loops() {
            return false;
        }
        let mut seen: Vec<(usize, usize)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    /// Degree of every node in the full graph; a self-loop counts twice.
    pub fn degrees(&self) -> Vec<usize> {
        self.subset_degrees(None)
    }

    fn subset_degrees(&self, s: Option<EdgeSubset>) -> Vec<usize> {
        let mut deg = vec![0; self.node_count];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            if s.is_none_or(|s| s.contains(e)) {
                deg[a] += 1;
                deg[b] += 1;
            }
        }
        deg
    }

    /// Degree of node `i` in the subgraph formed by the edges of `s`.
    pub fn degree_in_subset(&self, s: EdgeSubset, i: usize) -> Result<usize> {
        if i >= self.node_count {
            return Err(Error::Argument(format!("node id {i} out of range")));
        }
        Ok(self
            .edges
            .iter()
            .enumerate()
            .filter(|(e, _)| s.contains(*e))
            .map(|(_, &(a, b))| usize::from(a == i) + usize::from(b == i))
            .sum())
    }

    /// Degrees of all nodes in the subgraph formed by `s`.
    pub fn degrees_in_subset(&self, s: EdgeSubset) -> Vec<usize> {
        self.subset_degrees(Some(s))
    }

    /// Neighbouring (edge id, other endpoint) pairs of each node.
    pub fn incidence(&self) -> Vec<Vec<(usize, usize)>> {
        let mut inc = vec![Vec::new(); self.node_count];
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            inc[a].push((e, b));
            if a != b {
                inc[b].push((e, a));
            }
        }
        inc
    }

    pub fn connectivity(&self) -> Connectivity {
        let mut uf = UnionFind::new(self.node_count);
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        let components = uf.count_roots(0..self.node_count);
        Connectivity {
            connected: components == 1,
            components,
        }
    }

    pub fn is_connected(&self) -> bool {
        self.connectivity().connected
    }

    /// `|E| - |V| + 1`, the number of independent cycles of a connected graph.
    pub fn cycle_rank(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::Domain(
                "cycle rank requires a connected graph".into(),
            ));
        }
        Ok(self.edges.len() + 1 - self.node_count)
    }

    /// `G \ e`.
    pub fn delete(&self, e: usize) -> Result<Multigraph> {
        self.edge(e)?;
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(id, _)| id != e)
            .map(|(_, &p)| p)
            .collect();
        Ok(Multigraph {
            node_count: self.node_count,
            edges,
        })
    }

    /// `G / e`: the endpoints of `e` merge into the smaller id and every
    /// higher id shifts down by one.
    pub fn contract(&self, e: usize) -> Result<Multigraph> {
        let (a, b) = self.edge(e)?;
        if a == b {
            return Err(Error::Domain(format!(
                "edge {e} is a self-loop and cannot be contracted"
            )));
        }
        let (keep, gone) = (a.min(b), a.max(b));
        let relabel = |v: usize| {
            let v = if v == gone { keep } else { v };
            if v > gone {
                v - 1
            } else {
                v
            }
        };
        let edges = self
            .edges
            .iter()
            .enumerate()
            .filter(|&(id, _)| id != e)
            .map(|(_, &(x, y))| (relabel(x), relabel(y)))
            .collect();
        Ok(Multigraph {
            node_count: self.node_count - 1,
            edges,
        })
    }

    fn require_enumerable(&self) -> Result<()> {
        if self.edges.len() > MAX_ENUMERATION_EDGES {
            return Err(Error::Size(format!(
                "{} edges exceed the enumeration limit of {MAX_ENUMERATION_EDGES}",
                self.edges.len()
            )));
        }
        Ok(())
    }

    /// Every edge subset in which no node has degree exactly one, the empty
    /// set included, in increasing bitmask order.
    pub fn enumerate_generalized_loops(&self) -> Result<Vec<EdgeSubset>> {
        self.enumerate_no_degree_one(None)
    }

    /// As [`Self::enumerate_generalized_loops`] but node `exempt` may have
    /// degree one. These are the subsets contributing to marginal series.
    pub fn enumerate_no_degree_one(&self, exempt: Option<usize>) -> Result<Vec<EdgeSubset>> {
        self.require_enumerable()?;
        let mut search = DegreeSearch::new(self, DegreeRule::NoDegreeOne { exempt });
        search.run(0, 0);
        let mut out = search.found;
        out.sort_unstable();
        Ok(out)
    }

    /// Node-disjoint unions of cycles (every touched node has degree exactly
    /// two), the empty set included, with their component counts.
    pub fn enumerate_disjoint_cycles(&self) -> Result<Vec<CycleCover>> {
        self.require_enumerable()?;
        let mut search = DegreeSearch::new(self, DegreeRule::ExactlyTwo);
        search.run(0, 0);
        let mut found = search.found;
        found.sort_unstable();
        Ok(found
            .into_iter()
            .map(|s| CycleCover {
                edges: s,
                components: self.subset_components(s),
            })
            .collect())
    }

    /// Number of connected components of the subgraph formed by `s`,
    /// counting only nodes touched by `s`.
    pub fn subset_components(&self, s: EdgeSubset) -> usize {
        let mut uf = UnionFind::new(self.node_count);
        let mut touched = vec![false; self.node_count];
        for e in s.iter() {
            let (a, b) = self.edges[e];
            uf.union(a, b);
            touched[a] = true;
            touched[b] = true;
        }
        uf.count_roots((0..self.node_count).filter(|&v| touched[v]))
    }

    /// `p(k)` = number of `k`-edge matchings for `k = 0..=n/2`.
    pub fn enumerate_matchings(&self) -> Result<Vec<u64>> {
        if self.has_self_loops() {
            return Err(Error::Domain(
                "matchings are defined for loop-free graphs".into(),
            ));
        }
        let mut counts = vec![0u64; self.node_count / 2 + 1];
        let mut used = vec![false; self.node_count];
        self.count_matchings(0, 0, &mut used, &mut counts);
        Ok(counts)
    }

    fn count_matchings(&self, from: usize, size: usize, used: &mut [bool], counts: &mut [u64]) {
        counts[size] += 1;
        for e in from..self.edges.len() {
            let (a, b) = self.edges[e];
            if !used[a] && !used[b] {
                used[a] = true;
                used[b] = true;
                self.count_matchings(e + 1, size + 1, used, counts);
                used[a] = false;
                used[b] = false;
            }
        }
    }

    /// Render in the edge-list text format.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.node_count, self.edges.len());
        for &(a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }

    pub fn path(n: usize) -> Multigraph {
        Multigraph::new(n, (1..n).map(|i| (i - 1, i)).collect()).expect("valid path")
    }

    pub fn cycle(n: usize) -> Multigraph {
        assert!(n >= 3, "simple cycles need at least three nodes");
        Multigraph::new(n, (0..n).map(|i| (i, (i + 1) % n)).collect()).expect("valid cycle")
    }

    pub fn complete(n: usize) -> Multigraph {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Multigraph::new(n, edges).expect("valid complete graph")
    }

    pub fn star(leaves: usize) -> Multigraph {
        Multigraph::new(leaves + 1, (1..=leaves).map(|i| (0, i)).collect()).expect("valid star")
    }

    /// `rows x cols` grid with row-major node ids.
    pub fn grid(rows: usize, cols: usize) -> Multigraph {
        let id = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                if c + 1 < cols {
                    edges.push((id(r, c), id(r, c + 1)));
                }
                if r + 1 < rows {
                    edges.push((id(r, c), id(r + 1, c)));
                }
            }
        }
        Multigraph::new(rows * cols, edges).expect("valid grid")
    }

    /// One node carrying `loops` self-loops.
    pub fn bouquet(loops: usize) -> Multigraph {
        Multigraph::new(1, vec![(0, 0); loops]).expect("valid bouquet")
    }

    /// Two triangles joined by a bridge: edges 01, 12, 02, 23, 34, 45, 35.
    pub fn two_triangles() -> Multigraph {
        Multigraph::new(
            6,
            vec![(0, 1), (1, 2), (0, 2), (2, 3), (3, 4), (4, 5), (3, 5)],
        )
        .expect("valid graph")
    }
}

impl FromStr for Multigraph {
    type Err = Error;

    /// Parses `N M` followed by `M` lines `a b`. Blank lines and lines
    /// starting with `#` are ignored.
    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let parse_pair = |line: &str| -> Result<(usize, usize)> {
            let mut it = line.split_whitespace();
            let mut next = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::Parse(format!("expected two integers in {line:?}")))?
                    .parse()
                    .map_err(|e| Error::Parse(format!("{line:?}: {e}")))
            };
            let pair = (next()?, next()?);
            if it.next().is_some() {
                return Err(Error::Parse(format!("trailing tokens in {line:?}")));
            }
            Ok(pair)
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let (n, m) = parse_pair(header)?;
        let edges = lines.map(parse_pair).collect::<Result<Vec<_>>>()?;
        if edges.len() != m {
            return Err(Error::Parse(format!(
                "header announces {m} edges but {} were listed",
                edges.len()
            )));
        }
        Multigraph::new(n, edges)
    }
}

impl fmt::Display for Multigraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_edge_list())
    }
}

#[derive(Clone, Copy)]
enum DegreeRule {
    NoDegreeOne { exempt: Option<usize> },
    ExactlyTwo,
}

/// Include/exclude search over edges in id order. A node is finalised once
/// all its incident edges are decided; branches that finalise a node with
/// a forbidden degree are cut.
struct DegreeSearch<'a> {
    graph: &'a Multigraph,
    rule: DegreeRule,
    degree: Vec<usize>,
    undecided: Vec<usize>,
    found: Vec<EdgeSubset>,
}

impl<'a> DegreeSearch<'a> {
    fn new(graph: &'a Multigraph, rule: DegreeRule) -> Self {
        DegreeSearch {
            graph,
            rule,
            degree: vec![0; graph.node_count],
            undecided: graph.degrees(),
            found: Vec::new(),
        }
    }

    fn feasible(&self, v: usize) -> bool {
        let (d, rest) = (self.degree[v], self.undecided[v]);
        match self.rule {
            DegreeRule::NoDegreeOne { exempt } => !(d == 1 && rest == 0 && exempt != Some(v)),
            DegreeRule::ExactlyTwo => d <= 2 && !(d == 1 && rest == 0),
        }
    }

    fn run(&mut self, e: usize, mask: u64) {
        if e == self.graph.edges.len() {
            self.found.push(EdgeSubset(mask));
            return;
        }
        let (a, b) = self.graph.edges[e];
        self.undecided[a] -= 1;
        self.undecided[b] -= 1;

        if self.feasible(a) && self.feasible(b) {
            self.run(e + 1, mask);
        }

        self.degree[a] += 1;
        self.degree[b] += 1;
        if self.feasible(a) && self.feasible(b) {
            self.run(e + 1, mask | (1u64 << e));
        }
        self.degree[a] -= 1;
        self.degree[b] -= 1;

        self.undecided[a] += 1;
        self.undecided[b] += 1;
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut v: usize) -> usize {
        while self.parent[v] != v {
            self.parent[v] = self.parent[self.parent[v]];
            v = self.parent[v];
        }
        v
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    fn count_roots<I: IntoIterator<Item = usize>>(&mut self, nodes: I) -> usize {
        nodes.into_iter().filter(|&v| self.find(v) == v).count()
    }
}
