//! Loopy belief propagation (sum-product) for pairwise and factor models,
//! with beliefs and the Bethe approximation of `log Z`.
//!
//! Messages start uniform, are renormalised to sum 1 after every update and
//! are damped as `m <- (1 - d)·new + d·old`. A run stops once the largest
//! absolute message change in a sweep drops below `tol`. Non-convergence is
//! reported through [`LbpResult::converged`], not as an error.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{FactorModel, PairwiseModel};
use crate::numeric::log_sum_exp;

/// Unnormalised message entries outside this range trigger recomputation in
/// the log domain.
const LINEAR_RANGE: (f64, f64) = (1e-280, 1e280);

/// Minimum message count before a synchronous sweep fans out over threads.
const PARALLEL_SWEEP_THRESHOLD: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// All messages recomputed from the previous sweep (Jacobi).
    #[default]
    Synchronous,
    /// Messages updated in place in a fixed order (Gauss–Seidel).
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbpOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub damping: f64,
    pub schedule: Schedule,
}

impl Default for LbpOptions {
    fn default() -> Self {
        LbpOptions {
            max_iters: 10_000,
            tol: 1e-12,
            damping: 0.5,
            schedule: Schedule::Synchronous,
        }
    }
}

impl LbpOptions {
    fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::Argument(format!(
                "damping must lie in [0, 1), got {}",
                self.damping
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Argument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MessageSet {
    /// `into[2e]` is the message into the first endpoint of edge `e` (from
    /// the second), `into[2e + 1]` the message into the second endpoint.
    Pairwise { into: Vec<[f64; 2]> },
    /// Indexed by incidence id (factors in order, scope entries in order).
    Factor {
        var_to_factor: Vec<[f64; 2]>,
        factor_to_var: Vec<[f64; 2]>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbpResult {
    /// Scope of each edge (`[i, j]`) or factor.
    pub scopes: Vec<Vec<usize>>,
    pub node_beliefs: Vec<[f64; 2]>,
    /// Per edge/factor, `2^|scope|` entries, first scope variable most significant.
    pub factor_beliefs: Vec<Vec<f64>>,
    pub messages: MessageSet,
    pub log_z_bethe: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest absolute message change in the last sweep.
    pub residual: f64,
}

impl LbpResult {
    /// `b_ij` of edge `e` as `[x_i][x_j]`.
    pub fn edge_belief(&self, e: usize) -> [[f64; 2]; 2] {
        let b = &self.factor_beliefs[e];
        [[b[0], b[1]], [b[2], b[3]]]
    }

    pub fn require_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::State(format!(
                "belief propagation did not converge (residual {:.3e} after {} sweeps)",
                self.residual, self.iterations
            )))
        }
    }
}

fn normalize(v: [f64; 2]) -> Result<[f64; 2]> {
    let s = v[0] + v[1];
    let out = [v[0] / s, v[1] / s];
    if out.iter().all(|x| x.is_finite() && *x > 0.0) {
        Ok(out)
    } else {
        Err(Error::Numeric(format!(
            "message {v:?} cannot be normalised"
        )))
    }
}

fn in_linear_range(v: &[f64; 2]) -> bool {
    v.iter()
        .all(|x| x.is_finite() && *x >= LINEAR_RANGE.0 && *x <= LINEAR_RANGE.1)
}

fn normalize_log(v: [f64; 2]) -> Result<[f64; 2]> {
    let lse = log_sum_exp(&v);
    normalize([(v[0] - lse).exp(), (v[1] - lse).exp()])
}

fn damp(new: [f64; 2], old: [f64; 2], d: f64) -> Result<[f64; 2]> {
    if d == 0.0 {
        return Ok(new);
    }
    normalize([
        (1.0 - d) * new[0] + d * old[0],
        (1.0 - d) * new[1] + d * old[1],
    ])
}

fn max_change(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    (a[0] - b[0]).abs().max((a[1] - b[1]).abs())
}

/// Adjacency for pairwise message passing.
struct PairwiseStructure {
    edges: Vec<(usize, usize)>,
    psi: Vec<[[f64; 2]; 2]>,
    /// Per node: indices of the messages flowing into it.
    incoming: Vec<Vec<usize>>,
}

impl PairwiseStructure {
    fn new(m: &PairwiseModel) -> Result<Self> {
        let absorbed = m.absorb_node_potentials()?;
        let edges = absorbed.graph().edges().to_vec();
        let mut incoming = vec![Vec::new(); absorbed.node_count()];
        for (e, &(a, b)) in edges.iter().enumerate() {
            incoming[a].push(2 * e);
            incoming[b].push(2 * e + 1);
        }
        Ok(PairwiseStructure {
            edges,
            psi: absorbed.psi().to_vec(),
            incoming,
        })
    }

    /// (target, source) nodes of message `idx`.
    fn endpoints(&self, idx: usize) -> (usize, usize) {
        let (a, b) = self.edges[idx / 2];
        if idx.is_multiple_of(2) {
            (a, b)
        } else {
            (b, a)
        }
    }

    fn psi_oriented(&self, idx: usize, x_target: usize, x_source: usize) -> f64 {
        let t = &self.psi[idx / 2];
        if idx.is_multiple_of(2) {
            t[x_target][x_source]
        } else {
            t[x_source][x_target]
        }
    }

    /// Product over messages into `node`, skipping message `skip`.
    fn cavity(&self, msgs: &[[f64; 2]], node: usize, skip: usize) -> [f64; 2] {
        let mut p = [1.0, 1.0];
        for &k in &self.incoming[node] {
            if k != skip {
                p[0] *= msgs[k][0];
                p[1] *= msgs[k][1];
            }
        }
        p
    }

    fn update(&self, msgs: &[[f64; 2]], idx: usize) -> Result<[f64; 2]> {
        let (_, source) = self.endpoints(idx);
        let reverse = idx ^ 1;
        let cavity = self.cavity(msgs, source, reverse);
        let mut out = [0.0; 2];
        for (xt, o) in out.iter_mut().enumerate() {
            *o = (0..2)
                .map(|xs| self.psi_oriented(idx, xt, xs) * cavity[xs])
                .sum();
        }
        if in_linear_range(&out) {
            return normalize(out);
        }
        let mut log_out = [0.0; 2];
        for (xt, o) in log_out.iter_mut().enumerate() {
            let terms: Vec<f64> = (0..2)
                .map(|xs| {
                    let log_cavity: f64 = self.incoming[source]
                        .iter()
                        .filter(|&&k| k != reverse)
                        .map(|&k| msgs[k][xs].ln())
                        .sum();
                    self.psi_oriented(idx, xt, xs).ln() + log_cavity
                })
                .collect();
            *o = log_sum_exp(&terms);
        }
        normalize_log(log_out)
    }
}

fn sweep<F>(msgs: &mut Vec<[f64; 2]>, opts: &LbpOptions, update: F) -> Result<f64>
where
    F: Fn(&[[f64; 2]], usize) -> Result<[f64; 2]> + Sync,
{
    let mut residual = 0.0f64;
    match opts.schedule {
        Schedule::Synchronous => {
            let old = &*msgs;
            let fresh: Vec<[f64; 2]> = if old.len() >= PARALLEL_SWEEP_THRESHOLD {
                (0..old.len())
                    .into_par_iter()
                    .map(|i| update(old, i))
                    .collect::<Result<_>>()?
            } else {
                (0..old.len())
                    .map(|i| update(old, i))
                    .collect::<Result<_>>()?
            };
            let mut next = Vec::with_capacity(old.len());
            for (new, prev) in fresh.into_iter().zip(old.iter()) {
                let m = damp(new, *prev, opts.damping)?;
                residual = residual.max(max_change(&m, prev));
                next.push(m);
            }
            *msgs = next;
        }
        Schedule::Sequential => {
            for i in 0..msgs.len() {
                let new = update(msgs, i)?;
                let m = damp(new, msgs[i], opts.damping)?;
                residual = residual.max(max_change(&m, &msgs[i]));
                msgs[i] = m;
            }
        }
    }
    Ok(residual)
}

/// Pairwise loopy belief propagation. Node potentials are absorbed into
/// edge potentials first.
pub fn run_lbp(m: &PairwiseModel, opts: &LbpOptions) -> Result<LbpResult> {
    opts.validate()?;
    let st = PairwiseStructure::new(m)?;
    let mut msgs = vec![[0.5, 0.5]; 2 * st.edges.len()];
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        residual = sweep(&mut msgs, opts, |ms, i| st.update(ms, i))?;
        iterations += 1;
        if residual < opts.tol {
            break;
        }
    }
    let node_beliefs = (0..m.node_count())
        .map(|i| normalize(st.cavity(&msgs, i, usize::MAX)))
        .collect::<Result<Vec<_>>>()?;
    let factor_beliefs = st
        .edges
        .iter()
        .enumerate()
        .map(|(e, &(a, b))| {
            let ca = st.cavity(&msgs, a, 2 * e);
            let cb = st.cavity(&msgs, b, 2 * e + 1);
            let mut t = vec![0.0; 4];
            for xa in 0..2 {
                for xb in 0..2 {
                    t[2 * xa + xb] = st.psi[e][xa][xb] * ca[xa] * cb[xb];
                }
            }
            normalize_table(t)
        })
        .collect::<Result<Vec<_>>>()?;
    let scopes: Vec<Vec<usize>> = st.edges.iter().map(|&(a, b)| vec![a, b]).collect();
    let log_tables: Vec<Vec<f64>> = st
        .psi
        .iter()
        .map(|t| vec![t[0][0].ln(), t[0][1].ln(), t[1][0].ln(), t[1][1].ln()])
        .collect();
    let log_z_bethe = bethe_log_z(&scopes, &log_tables, &node_beliefs, &factor_beliefs)?;
    Ok(LbpResult {
        scopes,
        node_beliefs,
        factor_beliefs,
        messages: MessageSet::Pairwise { into: msgs },
        log_z_bethe,
        iterations,
        converged: residual < opts.tol,
        residual,
    })
}

/// Largest change one undamped synchronous update would make to `messages`.
/// Zero (up to rounding) exactly at a fixed point.
pub fn fixed_point_residual(m: &PairwiseModel, messages: &MessageSet) -> Result<f64> {
    let MessageSet::Pairwise { into } = messages else {
        return Err(Error::Argument("expected pairwise messages".into()));
    };
    let st = PairwiseStructure::new(m)?;
    if into.len() != 2 * st.edges.len() {
        return Err(Error::Argument(
            "message count does not match the model".into(),
        ));
    }
    (0..into.len()).try_fold(0.0f64, |acc, i| {
        Ok(acc.max(max_change(&st.update(into, i)?, &into[i])))
    })
}

fn normalize_table(mut t: Vec<f64>) -> Result<Vec<f64>> {
    let s: f64 = t.iter().sum();
    for v in &mut t {
        *v /= s;
    }
    if t.iter().all(|v| v.is_finite() && *v > 0.0) {
        Ok(t)
    } else {
        Err(Error::Numeric("belief table cannot be normalised".into()))
    }
}

fn entropy_term(p: f64) -> Result<f64> {
    if p > 0.0 && p.is_finite() {
        Ok(p * p.ln())
    } else {
        Err(Error::Domain(format!(
            "belief entry {p} is not strictly positive"
        )))
    }
}

/// Bethe approximation of `log Z` from node and edge/factor beliefs:
///
/// `Σ_λ Σ b_λ log ψ_λ − Σ_λ Σ b_λ log b_λ + Σ_i (d_i − 1) Σ b_i log b_i`
///
/// where `d_i` counts the scopes containing `i`. The beliefs need not be a
/// fixed point.
pub fn bethe_log_z(
    scopes: &[Vec<usize>],
    log_tables: &[Vec<f64>],
    node_beliefs: &[[f64; 2]],
    factor_beliefs: &[Vec<f64>],
) -> Result<f64> {
    let mut degree = vec![0usize; node_beliefs.len()];
    for s in scopes {
        for &v in s {
            degree[v] += 1;
        }
    }
    let mut total = 0.0;
    for (lt, b) in log_tables.iter().zip(factor_beliefs) {
        for (l, p) in lt.iter().zip(b) {
            total += p * l - entropy_term(*p)?;
        }
    }
    for (d, b) in degree.iter().zip(node_beliefs) {
        let h = entropy_term(b[0])? + entropy_term(b[1])?;
        total += (*d as f64 - 1.0) * h;
    }
    Ok(total)
}

/// [`bethe_log_z`] for a pairwise model, with node potentials absorbed.
pub fn bethe_log_z_pairwise(
    m: &PairwiseModel,
    node_beliefs: &[[f64; 2]],
    edge_beliefs: &[[[f64; 2]; 2]],
) -> Result<f64> {
    let absorbed = m.absorb_node_potentials()?;
    let scopes: Vec<Vec<usize>> = absorbed
        .graph()
        .edges()
        .iter()
        .map(|&(a, b)| vec![a, b])
        .collect();
    let log_tables: Vec<Vec<f64>> = absorbed
        .psi()
        .iter()
        .map(|t| t.iter().flatten().map(|v| v.ln()).collect())
        .collect();
    let beliefs: Vec<Vec<f64>> = edge_beliefs
        .iter()
        .map(|b| b.iter().flatten().copied().collect())
        .collect();
    bethe_log_z(&scopes, &log_tables, node_beliefs, &beliefs)
}

pub fn bethe_log_z_factor(
    fm: &FactorModel,
    node_beliefs: &[[f64; 2]],
    factor_beliefs: &[Vec<f64>],
) -> Result<f64> {
    let scopes: Vec<Vec<usize>> = fm.factors().iter().map(|f| f.scope.clone()).collect();
    let log_tables: Vec<Vec<f64>> = fm
        .factors()
        .iter()
        .map(|f| f.table.iter().map(|v| v.ln()).collect())
        .collect();
    bethe_log_z(&scopes, &log_tables, node_beliefs, factor_beliefs)
}

/// Incidence bookkeeping for factor-graph message passing.
struct FactorStructure<'a> {
    fm: &'a FactorModel,
    /// Per factor, the incidence id of each scope position.
    factor_incidences: Vec<Vec<usize>>,
    /// Per incidence id: (factor, scope position, variable).
    incidences: Vec<(usize, usize, usize)>,
    /// Per variable, its incidence ids.
    var_incidences: Vec<Vec<usize>>,
}

impl<'a> FactorStructure<'a> {
    fn new(fm: &'a FactorModel) -> Self {
        let mut incidences = Vec::new();
        let mut factor_incidences = Vec::new();
        let mut var_incidences = vec![Vec::new(); fm.var_count()];
        for (l, f) in fm.factors().iter().enumerate() {
            let mut ids = Vec::with_capacity(f.arity());
            for (k, &v) in f.scope.iter().enumerate() {
                let id = incidences.len();
                incidences.push((l, k, v));
                var_incidences[v].push(id);
                ids.push(id);
            }
            factor_incidences.push(ids);
        }
        FactorStructure {
            fm,
            factor_incidences,
            incidences,
            var_incidences,
        }
    }

    fn var_to_factor(&self, f2v: &[[f64; 2]], id: usize) -> Result<[f64; 2]> {
        let (_, _, v) = self.incidences[id];
        let mut p = [1.0, 1.0];
        for &k in &self.var_incidences[v] {
            if k != id {
                p[0] *= f2v[k][0];
                p[1] *= f2v[k][1];
            }
        }
        if in_linear_range(&p) {
            return normalize(p);
        }
        let mut lp = [0.0; 2];
        for &k in &self.var_incidences[v] {
            if k != id {
                lp[0] += f2v[k][0].ln();
                lp[1] += f2v[k][1].ln();
            }
        }
        normalize_log(lp)
    }

    fn factor_to_var(&self, v2f: &[[f64; 2]], id: usize) -> Result<[f64; 2]> {
        let (l, k, _) = self.incidences[id];
        let f = &self.fm.factors()[l];
        let ids = &self.factor_incidences[l];
        let mut out = [0.0; 2];
        for (idx, &t) in f.table.iter().enumerate() {
            let mut w = t;
            for (k2, &other) in ids.iter().enumerate() {
                if k2 != k {
                    w *= v2f[other][f.local_bit(idx, k2)];
                }
            }
            out[f.local_bit(idx, k)] += w;
        }
        if in_linear_range(&out) {
            return normalize(out);
        }
        let mut terms: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        for (idx, &t) in f.table.iter().enumerate() {
            let mut w = t.ln();
            for (k2, &other) in ids.iter().enumerate() {
                if k2 != k {
                    w += v2f[other][f.local_bit(idx, k2)].ln();
                }
            }
            terms[f.local_bit(idx, k)].push(w);
        }
        normalize_log([log_sum_exp(&terms[0]), log_sum_exp(&terms[1])])
    }
}

/// Factor-graph loopy belief propagation. Both message families are updated
/// each sweep; the synchronous schedule reads only previous-sweep values.
pub fn run_lbp_factor(fm: &FactorModel, opts: &LbpOptions) -> Result<LbpResult> {
    opts.validate()?;
    let st = FactorStructure::new(fm);
    let n_inc = st.incidences.len();
    // messages stored as one vector: [var_to_factor..., factor_to_var...]
    let mut msgs = vec![[0.5, 0.5]; 2 * n_inc];
    let update = |ms: &[[f64; 2]], i: usize| {
        if i < n_inc {
            st.var_to_factor(&ms[n_inc..], i)
        } else {
            st.factor_to_var(&ms[..n_inc], i - n_inc)
        }
    };
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iters {
        residual = sweep(&mut msgs, opts, update)?;
        iterations += 1;
        if residual < opts.tol {
            break;
        }
    }
    let (v2f, f2v) = msgs.split_at(n_inc);
    let node_beliefs = st
        .var_incidences
        .iter()
        .map(|ids| {
            let mut p = [1.0, 1.0];
            for &k in ids {
                p[0] *= f2v[k][0];
                p[1] *= f2v[k][1];
            }
            if in_linear_range(&p) {
                normalize(p)
            } else {
                normalize_log([
                    ids.iter().map(|&k| f2v[k][0].ln()).sum(),
                    ids.iter().map(|&k| f2v[k][1].ln()).sum(),
                ])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let factor_beliefs = fm
        .factors()
        .iter()
        .zip(&st.factor_incidences)
        .map(|(f, ids)| {
            let logs: Vec<f64> = f
                .table
                .iter()
                .enumerate()
                .map(|(idx, &t)| {
                    t.ln()
                        + ids
                            .iter()
                            .enumerate()
                            .map(|(k, &id)| v2f[id][f.local_bit(idx, k)].ln())
                            .sum::<f64>()
                })
                .collect();
            let lse = log_sum_exp(&logs);
            normalize_table(logs.iter().map(|l| (l - lse).exp()).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let log_z_bethe = bethe_log_z_factor(fm, &node_beliefs, &factor_beliefs)?;
    Ok(LbpResult {
        scopes: fm.factors().iter().map(|f| f.scope.clone()).collect(),
        node_beliefs,
        factor_beliefs,
        messages: MessageSet::Factor {
            var_to_factor: v2f.to_vec(),
            factor_to_var: f2v.to_vec(),
        },
        log_z_bethe,
        iterations,
        converged: residual < opts.tol,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact;
    use crate::generate::{self, FactorSpec, Topology};
    use crate::graph::Multigraph;
    use crate::model::Factor;

    fn ising(graph: Multigraph, j: f64) -> PairwiseModel {
        let t = [[j.exp(), (-j).exp()], [(-j).exp(), j.exp()]];
        PairwiseModel::from_edge_potentials(graph.clone(), vec![t; graph.edge_count()]).unwrap()
    }

    fn margin_consistency(res: &LbpResult) -> f64 {
        let mut worst = 0.0f64;
        for (e, s) in res.scopes.iter().enumerate() {
            let b = res.edge_belief(e);
            for x in 0..2 {
                worst = worst.max((b[x][0] + b[x][1] - res.node_beliefs[s[0]][x]).abs());
                worst = worst.max((b[0][x] + b[1][x] - res.node_beliefs[s[1]][x]).abs());
            }
        }
        worst
    }

    #[test]
    fn trees_are_exact() {
        for seed in 0..10 {
            let m = generate::pairwise(&Topology::Tree(9), 1.0, 0.5, seed).unwrap();
            let res = run_lbp(&m, &LbpOptions::default()).unwrap();
            assert!(res.converged);
            let ex = exact::brute_force_pairwise(&m).unwrap();
            assert!((res.log_z_bethe - ex.log_z).abs() < 1e-9);
            for (b, p) in res.node_beliefs.iter().zip(&ex.marginals) {
                assert!((b[0] - p[0]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tree_converges_within_diameter_sweeps_undamped() {
        let m = generate::pairwise(&Topology::Tree(6), 1.0, 0.5, 3).unwrap();
        let opts = LbpOptions {
            damping: 0.0,
            ..LbpOptions::default()
        };
        let res = run_lbp(&m, &opts).unwrap();
        assert!(res.converged);
        // diameter <= 5; one extra sweep observes a zero change
        assert!(res.iterations <= 7, "{} sweeps", res.iterations);
    }

    #[test]
    fn uniform_model() {
        let m = ising(Multigraph::two_triangles(), 0.0);
        let res = run_lbp(&m, &LbpOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 2);
        assert!(res.node_beliefs.iter().all(|b| (b[0] - 0.5).abs() < 1e-15));
        assert!((res.log_z_bethe - 6.0 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loopy_graph_has_bethe_gap() {
        let m = ising(Multigraph::two_triangles(), 0.1);
        let res = run_lbp(&m, &LbpOptions::default()).unwrap();
        assert!(res.converged);
        let ex = exact::brute_force_pairwise(&m).unwrap();
        assert!((res.log_z_bethe - ex.log_z).abs() > 1e-6);
        assert!(margin_consistency(&res) < 10.0 * 1e-12);
    }

    #[test]
    fn bethe_of_single_edge_is_exact() {
        let m = generate::pairwise(&Topology::Tree(2), 1.3, 0.7, 5).unwrap();
        let ex = exact::brute_force_pairwise(&m).unwrap();
        let b = ex.pair_marginal(0);
        let val = bethe_log_z_pairwise(&m, &ex.marginals, &[b]).unwrap();
        assert!((val - ex.log_z).abs() < 1e-12);
    }

    #[test]
    fn bethe_of_uniform_beliefs() {
        let g = Multigraph::complete(4);
        let m = ising(g.clone(), 0.0);
        let nodes = vec![[0.5, 0.5]; 4];
        let edges = vec![[[0.25; 2]; 2]; g.edge_count()];
        let val = bethe_log_z_pairwise(&m, &nodes, &edges).unwrap();
        assert!((val - 4.0 * 2f64.ln()).abs() < 1e-12);
        let bad = vec![[[0.5, 0.0], [0.25, 0.25]]; g.edge_count()];
        assert!(matches!(
            bethe_log_z_pairwise(&m, &nodes, &bad),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn lemma_route_matches_bethe() {
        let m = generate::pairwise(
            &Topology::Random {
                nodes: 8,
                edges: 11,
            },
            0.6,
            0.4,
            21,
        )
        .unwrap();
        let res = run_lbp(&m, &LbpOptions::default()).unwrap();
        assert!(res.converged);
        let ex = exact::brute_force_pairwise(&m).unwrap();
        let ratio = exact::lemma1_rhs(&res).unwrap();
        assert!(((ex.log_z - ratio.ln()) - res.log_z_bethe).abs() < 1e-8);
    }

    #[test]
    fn schedules_share_fixed_points() {
        let mut compared = 0;
        for seed in 0..20 {
            let m = generate::pairwise(
                &Topology::Random {
                    nodes: 7,
                    edges: 10,
                },
                0.8,
                0.5,
                seed,
            )
            .unwrap();
            let sync = run_lbp(&m, &LbpOptions::default()).unwrap();
            let seq = run_lbp(
                &m,
                &LbpOptions {
                    schedule: Schedule::Sequential,
                    ..LbpOptions::default()
                },
            )
            .unwrap();
            if sync.converged && seq.converged {
                assert!(
                    (sync.log_z_bethe - seq.log_z_bethe).abs() < 1e-7,
                    "seed {seed}"
                );
                compared += 1;
            }
        }
        assert!(compared >= 10);
    }

    #[test]
    fn damping_does_not_move_fixed_points() {
        let m = generate::pairwise(&Topology::Grid(3, 3), 0.5, 0.3, 8).unwrap();
        let opts = LbpOptions::default();
        let res = run_lbp(&m, &opts).unwrap();
        assert!(res.converged);
        assert!(fixed_point_residual(&m, &res.messages).unwrap() < 10.0 * opts.tol);
    }

    #[test]
    fn options_are_validated() {
        let m = ising(Multigraph::path(2), 0.1);
        assert!(run_lbp(
            &m,
            &LbpOptions {
                damping: 1.0,
                ..LbpOptions::default()
            }
        )
        .is_err());
        assert!(run_lbp(
            &m,
            &LbpOptions {
                tol: 0.0,
                ..LbpOptions::default()
            }
        )
        .is_err());
    }

    #[test]
    fn non_convergence_is_reported() {
        let m = crate::generate::pairwise(
            &crate::generate::Topology::Random {
                nodes: 6,
                edges: 12,
            },
            2.0,
            0.5,
            3,
        )
        .unwrap();
        let res = run_lbp(
            &m,
            &LbpOptions {
                max_iters: 3,
                ..LbpOptions::default()
            },
        )
        .unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 3);
        assert!(matches!(res.require_converged(), Err(Error::State(_))));
    }

    #[test]
    fn extreme_potential_scales_use_log_domain() {
        for scale in [1e290, 1e-290] {
            let base = generate::pairwise(&Topology::Cycle(4), 0.8, 0.0, 4).unwrap();
            let psi = base
                .psi()
                .iter()
                .map(|t| {
                    [
                        [t[0][0] * scale, t[0][1] * scale],
                        [t[1][0] * scale, t[1][1] * scale],
                    ]
                })
                .collect();
            let m = PairwiseModel::from_edge_potentials(base.graph().clone(), psi).unwrap();
            let res = run_lbp(&m, &LbpOptions::default()).unwrap();
            let reference = run_lbp(&base, &LbpOptions::default()).unwrap();
            assert!(res.converged);
            for (a, b) in res.node_beliefs.iter().zip(&reference.node_beliefs) {
                assert!((a[0] - b[0]).abs() < 1e-12);
            }
            let shift = 4.0 * scale.ln();
            assert!((res.log_z_bethe - reference.log_z_bethe - shift).abs() < 1e-9 * shift.abs());
        }
    }

    #[test]
    fn factor_tree_is_exact() {
        // the hypergraph {0,1}, {0,1,2}, {1} has a tree-shaped incidence graph
        // only when its factor cycle is broken; use {0,1}, {1,2,3}, {2}
        let fm = FactorModel::new(
            4,
            vec![
                Factor {
                    scope: vec![0, 1],
                    table: vec![1.0, 2.0, 0.5, 1.5],
                },
                Factor {
                    scope: vec![1, 2, 3],
                    table: vec![1.0, 0.3, 2.0, 0.7, 1.1, 0.9, 3.0, 0.2],
                },
                Factor {
                    scope: vec![2],
                    table: vec![0.4, 1.7],
                },
            ],
        )
        .unwrap();
        let res = run_lbp_factor(&fm, &LbpOptions::default()).unwrap();
        assert!(res.converged);
        let ex = exact::brute_force_factor(&fm).unwrap();
        assert!((res.log_z_bethe - ex.log_z).abs() < 1e-9);
        for (b, p) in res.node_beliefs.iter().zip(&ex.marginals) {
            assert!((b[1] - p[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn factor_and_pairwise_formulations_agree() {
        for seed in 0..5 {
            let m = generate::pairwise(&Topology::Random { nodes: 7, edges: 9 }, 0.7, 0.5, seed)
                .unwrap();
            let a = run_lbp(&m, &LbpOptions::default()).unwrap();
            let b = run_lbp_factor(&m.to_factor_model().unwrap(), &LbpOptions::default()).unwrap();
            if a.converged && b.converged {
                assert!((a.log_z_bethe - b.log_z_bethe).abs() < 1e-9);
                for (x, y) in a.node_beliefs.iter().zip(&b.node_beliefs) {
                    assert!((x[0] - y[0]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn uniform_factor_tables() {
        let mut fm = generate::factor_model(&FactorSpec::default(), 3).unwrap();
        fm = FactorModel::new(
            fm.var_count(),
            fm.factors()
                .iter()
                .map(|f| Factor {
                    scope: f.scope.clone(),
                    table: vec![1.0; f.table.len()],
                })
                .collect(),
        )
        .unwrap();
        let res = run_lbp_factor(&fm, &LbpOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.node_beliefs.iter().all(|b| (b[0] - 0.5).abs() < 1e-15));
    }
}
