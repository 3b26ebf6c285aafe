//! Binary Markov random fields: pairwise models on simple graphs and
//! general factor-graph models.
//!
//! States are `-1 ↔ index 0` and `+1 ↔ index 1` everywhere. Factor tables
//! are indexed with the first scope variable as the most significant bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Multigraph;

/// Smallest potential entry accepted.
pub const POTENTIAL_FLOOR: f64 = 1e-300;

/// Spin value of a state index (`0 -> -1`, `1 -> +1`).
pub fn spin(index: usize) -> f64 {
    if index == 0 {
        -1.0
    } else {
        1.0
    }
}

fn check_potential(value: f64, what: &dyn Fn() -> String) -> Result<()> {
    if value.is_finite() && value >= POTENTIAL_FLOOR {
        Ok(())
    } else {
        Err(Error::Argument(format!(
            "{} must be finite and >= {POTENTIAL_FLOOR}, got {value}",
            what()
        )))
    }
}

/// Pairwise model `p(x) ∝ Π ψ_ij(x_i, x_j) Π φ_i(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseModel {
    graph: Multigraph,
    /// `psi[e][a][b]` for edge `e = (i, j)`, `a` indexing `x_i`, `b` indexing `x_j`.
    psi: Vec<[[f64; 2]; 2]>,
    phi: Vec<[f64; 2]>,
}

impl PairwiseModel {
    pub fn new(graph: Multigraph, psi: Vec<[[f64; 2]; 2]>, phi: Vec<[f64; 2]>) -> Result<Self> {
        if graph.edge_count() == 0 {
            return Err(Error::Domain(
                "a pairwise model needs at least one edge".into(),
            ));
        }
        if !graph.is_simple() {
            return Err(Error::Domain(
                "pairwise models require a simple graph".into(),
            ));
        }
        if !graph.is_connected() {
            return Err(Error::Domain(
                "pairwise models require a connected graph".into(),
            ));
        }
        if psi.len() != graph.edge_count() {
            return Err(Error::Argument(format!(
                "{} edge tables for {} edges",
                psi.len(),
                graph.edge_count()
            )));
        }
        if phi.len() != graph.node_count() {
            return Err(Error::Argument(format!(
                "{} node tables for {} nodes",
                phi.len(),
                graph.node_count()
            )));
        }
        for (e, table) in psi.iter().enumerate() {
            for v in table.iter().flatten() {
                check_potential(*v, &|| format!("psi of edge {e}"))?;
            }
        }
        for (i, table) in phi.iter().enumerate() {
            for v in table {
                check_potential(*v, &|| format!("phi of node {i}"))?;
            }
        }
        Ok(PairwiseModel { graph, psi, phi })
    }

    /// Model with unit node potentials.
    pub fn from_edge_potentials(graph: Multigraph, psi: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        let n = graph.node_count();
        Self::new(graph, psi, vec![[1.0, 1.0]; n])
    }

    pub fn graph(&self) -> &Multigraph {
        &self.graph
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn edge_count(&self) -> usize {
        self.graph.edge_count()
    }

    pub fn psi(&self) -> &[[[f64; 2]; 2]] {
        &self.psi
    }

    pub fn phi(&self) -> &[[f64; 2]] {
        &self.phi
    }

    pub fn has_trivial_node_potentials(&self) -> bool {
        self.phi.iter().all(|p| *p == [1.0, 1.0])
    }

    /// Moves every `φ_i` into the incident edge with the smallest id. The
    /// joint distribution is unchanged.
    pub fn absorb_node_potentials(&self) -> Result<PairwiseModel> {
        let incidence = self.graph.incidence();
        let mut psi = self.psi.clone();
        for (i, phi) in self.phi.iter().enumerate() {
            if *phi == [1.0, 1.0] {
                continue;
            }
            let e = incidence[i]
                .iter()
                .map(|&(e, _)| e)
                .min()
                .ok_or_else(|| Error::Domain(format!("node {i} has no incident edge")))?;
            let (a, _) = self.graph.edges()[e];
            for (xa, row) in psi[e].iter_mut().enumerate() {
                for (xb, v) in row.iter_mut().enumerate() {
                    *v *= if a == i { phi[xa] } else { phi[xb] };
                }
            }
        }
        PairwiseModel::from_edge_potentials(self.graph.clone(), psi)
    }

    /// One arity-2 factor per edge, node potentials absorbed first.
    pub fn to_factor_model(&self) -> Result<FactorModel> {
        let absorbed = self.absorb_node_potentials()?;
        let factors = absorbed
            .graph
            .edges()
            .iter()
            .zip(&absorbed.psi)
            .map(|(&(a, b), t)| Factor {
                scope: vec![a, b],
                table: vec![t[0][0], t[0][1], t[1][0], t[1][1]],
            })
            .collect();
        FactorModel::new(self.node_count(), factors)
    }

    /// Unnormalized log-weight of a state given as a bitmask (bit `i` set iff
    /// `x_i = +1`).
    pub fn log_weight(&self, state: u64) -> f64 {
        let bit = |i: usize| ((state >> i) & 1) as usize;
        let edges: f64 = self
            .graph
            .edges()
            .iter()
            .zip(&self.psi)
            .map(|(&(a, b), t)| t[bit(a)][bit(b)].ln())
            .sum();
        let nodes: f64 = self
            .phi
            .iter()
            .enumerate()
            .map(|(i, p)| p[bit(i)].ln())
            .sum();
        edges + nodes
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::Pairwise(PairwiseFile::from(self)))
            .expect("model serialization cannot fail")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub scope: Vec<usize>,
    /// `2^|scope|` entries; `scope[0]` is the most significant bit.
    pub table: Vec<f64>,
}

impl Factor {
    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    /// Table index of the restriction of a global state bitmask to the scope.
    pub fn index_of(&self, state: u64) -> usize {
        self.scope
            .iter()
            .fold(0, |acc, &v| (acc << 1) | ((state >> v) & 1) as usize)
    }

    /// State index (0 or 1) of scope position `k` inside table index `idx`.
    pub fn local_bit(&self, idx: usize, k: usize) -> usize {
        (idx >> (self.scope.len() - 1 - k)) & 1
    }
}

/// `p(x) ∝ Π_λ ψ_λ(x_λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorModel {
    var_count: usize,
    factors: Vec<Factor>,
}

impl FactorModel {
    pub fn new(var_count: usize, factors: Vec<Factor>) -> Result<Self> {
        if var_count == 0 {
            return Err(Error::Argument(
                "a factor model needs at least one variable".into(),
            ));
        }
        let mut covered = vec![false; var_count];
        for (l, f) in factors.iter().enumerate() {
            if f.scope.is_empty() {
                return Err(Error::Argument(format!("factor {l} has an empty scope")));
            }
            if f.scope.len() > 20 {
                return Err(Error::Size(format!(
                    "factor {l} has arity {}",
                    f.scope.len()
                )));
            }
            for (k, &v) in f.scope.iter().enumerate() {
                if v >= var_count {
                    return Err(Error::Argument(format!(
                        "factor {l} references variable {v}"
                    )));
                }
                if f.scope[..k].contains(&v) {
                    return Err(Error::Argument(format!("factor {l} repeats variable {v}")));
                }
                covered[v] = true;
            }
            if f.table.len() != 1 << f.scope.len() {
                return Err(Error::Argument(format!(
                    "factor {l} has {} table entries, expected {}",
                    f.table.len(),
                    1usize << f.scope.len()
                )));
            }
            for v in &f.table {
                check_potential(*v, &|| format!("table of factor {l}"))?;
            }
        }
        if let Some(v) = covered.iter().position(|c| !c) {
            return Err(Error::Domain(format!("variable {v} appears in no factor")));
        }
        Ok(FactorModel { var_count, factors })
    }

    pub fn var_count(&self) -> usize {
        self.var_count
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    /// Number of factors containing each variable.
    pub fn variable_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.var_count];
        for f in &self.factors {
            for &v in &f.scope {
                d[v] += 1;
            }
        }
        d
    }

    /// Bipartite incidence graph: variables `0..N`, then factors `N..N+F`;
    /// one edge `(variable, N + λ)` per scope entry, in factor then scope order.
    pub fn factor_incidence_graph(&self) -> Multigraph {
        let n = self.var_count;
        let edges = self
            .factors
            .iter()
            .enumerate()
            .flat_map(|(l, f)| f.scope.iter().map(move |&v| (v, n + l)))
            .collect();
        Multigraph::new(n + self.factors.len(), edges).expect("incidence graph is valid")
    }

    pub fn log_weight(&self, state: u64) -> f64 {
        self.factors
            .iter()
            .map(|f| f.table[f.index_of(state)].ln())
            .sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::Factor(FactorFile::from(self)))
            .expect("model serialization cannot fail")
    }
}

/// Either kind of model, as read from a model file.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Pairwise(PairwiseModel),
    Factor(FactorModel),
}

impl AnyModel {
    /// Reads a model file; `"nodes"` marks a pairwise model, `"vars"` a
    /// factor model.
    pub fn from_json(text: &str) -> Result<AnyModel> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.get("nodes").is_some() {
            let file: PairwiseFile = serde_json::from_value(value)?;
            file.into_model().map(AnyModel::Pairwise)
        } else if value.get("vars").is_some() {
            let file: FactorFile = serde_json::from_value(value)?;
            file.into_model().map(AnyModel::Factor)
        } else {
            Err(Error::Parse(
                "model file needs a \"nodes\" or \"vars\" field".into(),
            ))
        }
    }

    pub fn to_json(&self) -> String {
        match self {
            AnyModel::Pairwise(m) => m.to_json(),
            AnyModel::Factor(m) => m.to_json(),
        }
    }

    pub fn var_count(&self) -> usize {
        match self {
            AnyModel::Pairwise(m) => m.node_count(),
            AnyModel::Factor(m) => m.var_count(),
        }
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum ModelFile {
    Pairwise(PairwiseFile),
    Factor(FactorFile),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairwiseFile {
    nodes: usize,
    edges: Vec<EdgeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    phi: Option<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeEntry {
    i: usize,
    j: usize,
    psi: [[f64; 2]; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorFile {
    vars: usize,
    factors: Vec<FactorEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorEntry {
    scope: Vec<usize>,
    table: Vec<f64>,
}

impl From<&PairwiseModel> for PairwiseFile {
    fn from(m: &PairwiseModel) -> Self {
        PairwiseFile {
            nodes: m.node_count(),
            edges: m
                .graph
                .edges()
                .iter()
                .zip(&m.psi)
                .map(|(&(i, j), &psi)| EdgeEntry { i, j, psi })
                .collect(),
            phi: Some(m.phi.clone()),
        }
    }
}

impl PairwiseFile {
    fn into_model(self) -> Result<PairwiseModel> {
        let graph = Multigraph::new(self.nodes, self.edges.iter().map(|e| (e.i, e.j)).collect())?;
        let psi = self.edges.iter().map(|e| e.psi).collect();
        let phi = self.phi.unwrap_or_else(|| vec![[1.0, 1.0]; self.nodes]);
        PairwiseModel::new(graph, psi, phi)
    }
}

impl From<&FactorModel> for FactorFile {
    fn from(m: &FactorModel) -> Self {
        FactorFile {
            vars: m.var_count,
            factors: m
                .factors
                .iter()
                .map(|f| FactorEntry {
                    scope: f.scope.clone(),
                    table: f.table.clone(),
                })
                .collect(),
        }
    }
}

impl FactorFile {
    fn into_model(self) -> Result<FactorModel> {
        let factors = self
            .factors
            .into_iter()
            .map(|f| Factor {
                scope: f.scope,
                table: f.table,
            })
            .collect();
        FactorModel::new(self.vars, factors)
    }
}
