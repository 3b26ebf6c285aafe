//! Brute-force oracles over all `2^N` states: partition function, marginals,
//! and direct evaluation of the state-sum side of the loop-series identities.
//!
//! Sums are compensated. `log Z` is accumulated as a running log-sum-exp so
//! no weight is ever exponentiated outside `[0, 1]`.

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::lbp::LbpResult;
use crate::model::{spin, FactorModel, PairwiseModel};
use crate::numeric::CompensatedSum;

pub const DEFAULT_MAX_VARS: usize = 25;

/// Full recomputation interval of the incremental Gray-code weight.
const GRAY_REFRESH: u64 = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StateOrder {
    /// Gray code with incremental weight updates.
    #[default]
    Gray,
    /// Plain binary counter with full recomputation of every weight.
    Counter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    pub max_vars: usize,
    pub order: StateOrder,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            max_vars: DEFAULT_MAX_VARS,
            order: StateOrder::Gray,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactResult {
    pub log_z: f64,
    /// `p_i(x_i)` as `[p(-1), p(+1)]`.
    pub marginals: Vec<[f64; 2]>,
    /// Per edge (pairwise) or factor: joint marginal over the scope, first
    /// scope variable most significant.
    pub factor_marginals: Vec<Vec<f64>>,
}

impl ExactResult {
    pub fn pair_marginal(&self, e: usize) -> [[f64; 2]; 2] {
        let m = &self.factor_marginals[e];
        [[m[0], m[1]], [m[2], m[3]]]
    }
}

struct LogTerm {
    scope: Vec<usize>,
    log_table: Vec<f64>,
}

impl LogTerm {
    fn index(&self, state: u64) -> usize {
        self.scope
            .iter()
            .fold(0, |acc, &v| (acc << 1) | ((state >> v) & 1) as usize)
    }
}

/// `tracked` of the terms get joint marginals reported.
fn enumerate(
    var_count: usize,
    terms: &[LogTerm],
    tracked: usize,
    opts: &OracleOptions,
) -> Result<ExactResult> {
    if var_count > opts.max_vars || var_count > 62 {
        return Err(Error::Size(format!(
            "{var_count} variables exceed the oracle limit of {}",
            opts.max_vars.min(62)
        )));
    }
    let mut containing = vec![Vec::new(); var_count];
    for (t, term) in terms.iter().enumerate() {
        for &v in &term.scope {
            containing[v].push(t);
        }
    }
    let full = |state: u64| -> f64 { terms.iter().map(|t| t.log_table[t.index(state)]).sum() };

    let mut z = CompensatedSum::new();
    let mut node = vec![[CompensatedSum::new(); 2]; var_count];
    let mut joint: Vec<Vec<CompensatedSum>> = terms[..tracked]
        .iter()
        .map(|t| vec![CompensatedSum::new(); t.log_table.len()])
        .collect();
    let mut max_lw = f64::NEG_INFINITY;

    let total = 1u64 << var_count;
    let mut state = 0u64;
    let mut lw = full(0);
    for k in 0..total {
        match opts.order {
            StateOrder::Counter => {
                state = k;
                lw = full(state);
            }
            StateOrder::Gray if k > 0 => {
                let v = k.trailing_zeros() as usize;
                let next = state ^ (1u64 << v);
                if k % GRAY_REFRESH == 0 {
                    lw = full(next);
                } else {
                    for &t in &containing[v] {
                        let term = &terms[t];
                        lw += term.log_table[term.index(next)] - term.log_table[term.index(state)];
                    }
                }
                state = next;
            }
            StateOrder::Gray => {}
        }
        if lw > max_lw {
            if max_lw.is_finite() {
                let factor = (max_lw - lw).exp();
                z.scale(factor);
                node.iter_mut().flatten().for_each(|s| s.scale(factor));
                joint.iter_mut().flatten().for_each(|s| s.scale(factor));
            }
            max_lw = lw;
        }
        let w = (lw - max_lw).exp();
        z.add(w);
        for (i, acc) in node.iter_mut().enumerate() {
            acc[((state >> i) & 1) as usize].add(w);
        }
        for (term, acc) in terms.iter().zip(joint.iter_mut()) {
            acc[term.index(state)].add(w);
        }
    }
    let zv = z.value();
    Ok(ExactResult {
        log_z: max_lw + zv.ln(),
        marginals: node
            .iter()
            .map(|a| [a[0].value() / zv, a[1].value() / zv])
            .collect(),
        factor_marginals: joint
            .iter()
            .map(|a| a.iter().map(|s| s.value() / zv).collect())
            .collect(),
    })
}

pub fn brute_force_pairwise_with(m: &PairwiseModel, opts: &OracleOptions) -> Result<ExactResult> {
    let mut terms: Vec<LogTerm> = m
        .graph()
        .edges()
        .iter()
        .zip(m.psi())
        .map(|(&(a, b), t)| LogTerm {
            scope: vec![a, b],
            log_table: t.iter().flatten().map(|v| v.ln()).collect(),
        })
        .collect();
    let tracked = terms.len();
    terms.extend(m.phi().iter().enumerate().map(|(i, p)| LogTerm {
        scope: vec![i],
        log_table: vec![p[0].ln(), p[1].ln()],
    }));
    enumerate(m.node_count(), &terms, tracked, opts)
}

pub fn brute_force_pairwise(m: &PairwiseModel) -> Result<ExactResult> {
    brute_force_pairwise_with(m, &OracleOptions::default())
}

pub fn brute_force_factor_with(fm: &FactorModel, opts: &OracleOptions) -> Result<ExactResult> {
    let terms: Vec<LogTerm> = fm
        .factors()
        .iter()
        .map(|f| LogTerm {
            scope: f.scope.clone(),
            log_table: f.table.iter().map(|v| v.ln()).collect(),
        })
        .collect();
    enumerate(fm.var_count(), &terms, terms.len(), opts)
}

pub fn brute_force_factor(fm: &FactorModel) -> Result<ExactResult> {
    brute_force_factor_with(fm, &OracleOptions::default())
}

/// `Σ_x Π_λ [b_λ(x_λ) / Π_{i∈λ} b_i(x_i)] Π_i b_i(x_i)`, which equals
/// `Z / Z_B` when the beliefs come from an LBP fixed point.
pub fn lemma1_rhs(res: &LbpResult) -> Result<f64> {
    let n = res.node_beliefs.len();
    if n > DEFAULT_MAX_VARS {
        return Err(Error::Size(format!(
            "{n} variables exceed the oracle limit"
        )));
    }
    let positive = res
        .node_beliefs
        .iter()
        .flatten()
        .chain(res.factor_beliefs.iter().flatten())
        .all(|&b| b > 0.0);
    if !positive {
        return Err(Error::Domain("beliefs must be strictly positive".into()));
    }
    let mut acc = CompensatedSum::new();
    for state in 0..1u64 << n {
        let bit = |i: usize| ((state >> i) & 1) as usize;
        let mut w: f64 = (0..n).map(|i| res.node_beliefs[i][bit(i)]).product();
        for (scope, b) in res.scopes.iter().zip(&res.factor_beliefs) {
            let idx = scope.iter().fold(0, |acc, &v| (acc << 1) | bit(v));
            let denom: f64 = scope.iter().map(|&v| res.node_beliefs[v][bit(v)]).product();
            w *= b[idx] / denom;
        }
        acc.add(w);
    }
    Ok(acc.value())
}

/// State-sum side of the loop-series identity:
///
/// `Σ_x [x_w] Π_{ij∈E} (1 + x_i x_j β_ij ξ_i^{-x_i} ξ_j^{-x_j}) Π_i ξ_i^{x_i} / (ξ_i + ξ_i^{-1})`
///
/// with the optional factor `x_w` for a weight node `w`.
pub fn theorem1_lhs(
    g: &Multigraph,
    beta: &[f64],
    xi: &[f64],
    weight_node: Option<usize>,
) -> Result<f64> {
    let n = g.node_count();
    if beta.len() != g.edge_count() || xi.len() != n {
        return Err(Error::Argument(
            "β must have one entry per edge and ξ one per node".into(),
        ));
    }
    if let Some(&x) = xi.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Domain(format!("ξ must be positive, got {x}")));
    }
    if weight_node.is_some_and(|w| w >= n) {
        return Err(Error::Argument("weight node out of range".into()));
    }
    if n > DEFAULT_MAX_VARS {
        return Err(Error::Size(format!("{n} nodes exceed the oracle limit")));
    }
    let mut acc = CompensatedSum::new();
    for state in 0..1u64 << n {
        let x = |i: usize| spin(((state >> i) & 1) as usize);
        let mut w = weight_node.map_or(1.0, x);
        for (&(i, j), b) in g.edges().iter().zip(beta) {
            w *= 1.0 + x(i) * x(j) * b * xi[i].powf(-x(i)) * xi[j].powf(-x(j));
        }
        for (i, &v) in xi.iter().enumerate() {
            w *= v.powf(x(i)) / (v + v.recip());
        }
        acc.add(w);
    }
    Ok(acc.value())
}
