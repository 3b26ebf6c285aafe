//! Seeded generators for exponential-family test models:
//! `ψ_ij(x, y) = exp(J_ij·x·y)`, `φ_i(x) = exp(h_i·x)` with
//! `J_ij ~ U[-J, J]` and `h_i ~ U[-h, h]`.
//!
//! The seed alone determines the output.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::model::{Factor, FactorModel, PairwiseModel};

const RANDOM_GRAPH_RETRIES: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Topology {
    /// Uniform random recursive tree on `n` nodes.
    Tree(usize),
    Cycle(usize),
    Grid(usize, usize),
    /// Two triangles joined by a bridge (edges 01,12,02,23,34,45,35).
    TwoTriangles,
    /// `nodes` nodes, `edges` distinct random pairs, resampled until connected.
    Random {
        nodes: usize,
        edges: usize,
    },
    /// A cycle on nodes `0..cycle` with random trees hanging off it.
    Unicyclic {
        cycle: usize,
        nodes: usize,
    },
}

impl Topology {
    pub fn build(&self, rng: &mut impl Rng) -> Result<Multigraph> {
        match *self {
            Topology::Tree(n) => {
                if n < 2 {
                    return Err(Error::Argument(
                        "a tree model needs at least two nodes".into(),
                    ));
                }
                let edges = (1..n).map(|i| (rng.gen_range(0..i), i)).collect();
                Multigraph::new(n, edges)
            }
            Topology::Cycle(n) => {
                if n < 3 {
                    return Err(Error::Argument("a cycle needs at least three nodes".into()));
                }
                Ok(Multigraph::cycle(n))
            }
            Topology::Grid(r, c) => {
                if r * c < 2 {
                    return Err(Error::Argument("a grid needs at least two nodes".into()));
                }
                Ok(Multigraph::grid(r, c))
            }
            Topology::TwoTriangles => Ok(Multigraph::two_triangles()),
            Topology::Random { nodes, edges } => random_connected(nodes, edges, rng),
            Topology::Unicyclic { cycle, nodes } => {
                if cycle < 3 || nodes < cycle {
                    return Err(Error::Argument(format!(
                        "unicyclic graph needs 3 <= cycle <= nodes, got cycle {cycle}, nodes {nodes}"
                    )));
                }
                let mut edges: Vec<(usize, usize)> =
                    (0..cycle).map(|i| (i, (i + 1) % cycle)).collect();
                edges.extend((cycle..nodes).map(|i| (rng.gen_range(0..i), i)));
                Multigraph::new(nodes, edges)
            }
        }
    }
}

fn random_connected(nodes: usize, edges: usize, rng: &mut impl Rng) -> Result<Multigraph> {
    let pairs: Vec<(usize, usize)> = (0..nodes)
        .flat_map(|i| (i + 1..nodes).map(move |j| (i, j)))
        .collect();
    if nodes < 2 || edges + 1 < nodes || edges > pairs.len() {
        return Err(Error::Argument(format!(
            "no connected simple graph has {nodes} nodes and {edges} edges"
        )));
    }
    for _ in 0..RANDOM_GRAPH_RETRIES {
        let mut chosen: Vec<(usize, usize)> = pairs.choose_multiple(rng, edges).copied().collect();
        chosen.sort_unstable();
        let g = Multigraph::new(nodes, chosen)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::Domain(format!(
        "no connected sample with {nodes} nodes and {edges} edges after {RANDOM_GRAPH_RETRIES} tries"
    )))
}

fn symmetric(rng: &mut impl Rng, bound: f64) -> f64 {
    if bound > 0.0 {
        rng.gen_range(-bound..=bound)
    } else {
        0.0
    }
}

/// Exponential-family pairwise model on `graph`.
pub fn pairwise_on(
    graph: Multigraph,
    coupling: f64,
    field: f64,
    rng: &mut impl Rng,
) -> Result<PairwiseModel> {
    let psi = (0..graph.edge_count())
        .map(|_| {
            let j = symmetric(rng, coupling);
            [[j.exp(), (-j).exp()], [(-j).exp(), j.exp()]]
        })
        .collect();
    let phi = (0..graph.node_count())
        .map(|_| {
            let h = symmetric(rng, field);
            [(-h).exp(), h.exp()]
        })
        .collect();
    PairwiseModel::new(graph, psi, phi)
}

pub fn pairwise(
    topology: &Topology,
    coupling: f64,
    field: f64,
    seed: u64,
) -> Result<PairwiseModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let graph = topology.build(&mut rng)?;
    pairwise_on(graph, coupling, field, &mut rng)
}

/// Shape limits for [`factor_model`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorSpec {
    pub min_vars: usize,
    pub max_vars: usize,
    pub max_arity: usize,
    /// Upper bound on the number of variable–factor incidences.
    pub max_incidences: usize,
    /// Log-table entries are drawn from `U[-strength, strength]`.
    pub strength: f64,
}

impl Default for FactorSpec {
    fn default() -> Self {
        FactorSpec {
            min_vars: 3,
            max_vars: 8,
            max_arity: 3,
            max_incidences: 14,
            strength: 1.0,
        }
    }
}

/// Random factor model: factors are added until every variable is covered,
/// within the incidence budget.
pub fn factor_model(spec: &FactorSpec, seed: u64) -> Result<FactorModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if spec.min_vars == 0 || spec.min_vars > spec.max_vars || spec.max_arity == 0 {
        return Err(Error::Argument(format!("invalid factor spec {spec:?}")));
    }
    for _ in 0..RANDOM_GRAPH_RETRIES {
        let n = rng.gen_range(spec.min_vars..=spec.max_vars);
        let vars: Vec<usize> = (0..n).collect();
        let mut covered = vec![false; n];
        let mut scopes: Vec<Vec<usize>> = Vec::new();
        let mut budget = spec.max_incidences;
        while covered.iter().any(|c| !c) {
            let arity = rng.gen_range(1..=spec.max_arity.min(n));
            if arity > budget {
                break;
            }
            // anchor each new factor on an uncovered variable
            let anchor = *vars
                .iter()
                .copied()
                .filter(|&v| !covered[v])
                .collect::<Vec<_>>()
                .choose(&mut rng)
                .expect("some variable is uncovered");
            let mut scope = vec![anchor];
            let others: Vec<usize> = vars.iter().copied().filter(|&v| v != anchor).collect();
            scope.extend(others.choose_multiple(&mut rng, arity - 1).copied());
            scope.shuffle(&mut rng);
            for &v in &scope {
                covered[v] = true;
            }
            budget -= arity;
            scopes.push(scope);
        }
        if covered.iter().any(|c| !c) {
            continue;
        }
        // spend part of the remaining budget on extra factors to create loops
        while budget >= 2 && rng.gen_bool(0.7) {
            let arity = rng.gen_range(2..=spec.max_arity.min(n).min(budget).max(2));
            if arity > n {
                break;
            }
            let scope: Vec<usize> = vars.choose_multiple(&mut rng, arity).copied().collect();
            budget -= arity;
            scopes.push(scope);
        }
        let factors = scopes
            .into_iter()
            .map(|scope| {
                let table = (0..1usize << scope.len())
                    .map(|_| symmetric(&mut rng, spec.strength).exp())
                    .collect();
                Factor { scope, table }
            })
            .collect();
        return FactorModel::new(n, factors);
    }
    Err(Error::Domain(format!(
        "could not realise factor spec {spec:?}"
    )))
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Topology::Tree(n) => write!(f, "tree {n}"),
            Topology::Cycle(n) => write!(f, "cycle {n}"),
            Topology::Grid(r, c) => write!(f, "grid {r} {c}"),
            Topology::TwoTriangles => write!(f, "example1"),
            Topology::Random { nodes, edges } => write!(f, "random {nodes} {edges}"),
            Topology::Unicyclic { cycle, nodes } => write!(f, "unicyclic {cycle} {nodes}"),
        }
    }
}

impl FromStr for Topology {
    type Err = Error;

    /// Parses `tree N`, `cycle N`, `grid R C`, `example1`, `random N M`,
    /// `unicyclic C N`.
    fn from_str(s: &str) -> Result<Self> {
        let words: Vec<&str> = s.split_whitespace().collect();
        let nums = words[1.min(words.len())..]
            .iter()
            .map(|w| {
                w.parse::<usize>()
                    .map_err(|e| Error::Parse(format!("{w:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let kind = words.first().copied().unwrap_or("");
        match (kind, nums.as_slice()) {
            ("tree", &[n]) => Ok(Topology::Tree(n)),
            ("cycle", &[n]) => Ok(Topology::Cycle(n)),
            ("grid", &[r, c]) => Ok(Topology::Grid(r, c)),
            ("example1", &[]) => Ok(Topology::TwoTriangles),
            ("random", &[nodes, edges]) => Ok(Topology::Random { nodes, edges }),
            ("unicyclic", &[cycle, nodes]) => Ok(Topology::Unicyclic { cycle, nodes }),
            _ => Err(Error::Parse(format!("unknown topology {s:?}"))),
        }
    }
}
