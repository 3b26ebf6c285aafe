//! Loop series corrections to belief propagation.
//!
//! At an LBP fixed point the partition function factorises as
//! `Z = Z_B · Σ_s r(s)`, where `s` runs over generalized loops and each term
//! is built from per-edge coefficients `β` and per-node coefficients `γ`.
//! The same machinery with `g_n` at one node gives exact single-node
//! marginals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exact::brute_force_pairwise;
use crate::graph::{EdgeSubset, Multigraph};
use crate::lbp::LbpResult;
use crate::model::{FactorModel, PairwiseModel};
use crate::numeric::CompensatedSum;
use crate::poly::{f_value, g_value};

/// Beliefs below this are refused rather than clamped.
pub const BELIEF_FLOOR: f64 = 1e-12;

/// Tolerance for reconstructing factor beliefs from their expansion.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesCoefficients {
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    /// One per edge.
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorCoefficients {
    pub xi: Vec<f64>,
    pub gamma: Vec<f64>,
    /// `beta[λ][I]`, where bit `k` of `I` selects the `k`-th scope variable of
    /// factor `λ`. `beta[λ][0] = 1` and singleton entries are zero.
    pub beta: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesTerm {
    pub subset: EdgeSubset,
    pub size: usize,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesReport {
    /// Contributing subsets in increasing bitmask order.
    pub terms: Vec<SeriesTerm>,
    /// `Σ r(s)`, an estimate of `Z / Z_B`.
    pub total: f64,
    pub log_z_bethe: f64,
    pub z_estimate: f64,
    pub log_z_estimate: f64,
    /// `size_sums[k]` is the sum of the terms with `|s| = k`.
    pub size_sums: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarginalCorrection {
    pub target: usize,
    pub bias_series: f64,
    /// Terms of the bias series.
    pub terms: Vec<SeriesTerm>,
    /// `Z / Z_B` from the loop series on the same fixed point.
    pub total: f64,
    /// LBP belief at the target, `[b(-1), b(+1)]`.
    pub belief: [f64; 2],
    /// Corrected marginal, `[p(-1), p(+1)]`.
    pub corrected: [f64; 2],
}

/// `(ξ, γ)` of a node belief `[b(-1), b(+1)]`.
pub fn node_coefficients(b: [f64; 2]) -> Result<(f64, f64)> {
    if !(b[0] >= BELIEF_FLOOR && b[1] >= BELIEF_FLOOR) {
        return Err(Error::Domain(format!(
            "node belief {b:?} is below {BELIEF_FLOOR:e}"
        )));
    }
    let xi = (b[1] / b[0]).sqrt();
    let gamma = (b[1] - b[0]) / (b[0] * b[1]).sqrt();
    let recomputed = xi - xi.recip();
    if (gamma - recomputed).abs() > 1e-12 * gamma.abs().max(1.0) {
        return Err(Error::Internal(format!(
            "γ = {gamma} disagrees with ξ - 1/ξ = {recomputed}"
        )));
    }
    Ok((xi, gamma))
}

/// `β_ij = (b_ij(1,1) b_ij(-1,-1) - b_ij(1,-1) b_ij(-1,1)) / sqrt(b_i(1) b_i(-1) b_j(1) b_j(-1))`.
pub fn pair_beta(bij: [[f64; 2]; 2], bi: [f64; 2], bj: [f64; 2]) -> f64 {
    (bij[1][1] * bij[0][0] - bij[1][0] * bij[0][1]) / (bi[0] * bi[1] * bj[0] * bj[1]).sqrt()
}

fn check_beliefs(res: &LbpResult) -> Result<()> {
    res.require_converged()?;
    let low = res
        .node_beliefs
        .iter()
        .flatten()
        .chain(res.factor_beliefs.iter().flatten())
        .copied()
        .find(|&b| !(b >= BELIEF_FLOOR));
    match low {
        Some(b) => Err(Error::Domain(format!(
            "belief {b:e} is below {BELIEF_FLOOR:e}"
        ))),
        None => Ok(()),
    }
}

/// Pairwise coefficients from a converged pairwise LBP result.
pub fn coefficients_from_beliefs(res: &LbpResult) -> Result<SeriesCoefficients> {
    check_beliefs(res)?;
    if res.scopes.iter().any(|s| s.len() != 2) {
        return Err(Error::Argument(
            "pairwise coefficients need a pairwise LBP result".into(),
        ));
    }
    let (xi, gamma) = res
        .node_beliefs
        .iter()
        .map(|&b| node_coefficients(b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let beta = res
        .scopes
        .iter()
        .enumerate()
        .map(|(e, s)| {
            pair_beta(
                res.edge_belief(e),
                res.node_beliefs[s[0]],
                res.node_beliefs[s[1]],
            )
        })
        .collect();
    Ok(SeriesCoefficients { xi, gamma, beta })
}

/// `(x ξ^{-x})` for `x = spin(index)`.
fn basis(xi: f64, index: usize) -> f64 {
    if index == 1 {
        xi.recip()
    } else {
        -xi
    }
}

/// Factor coefficients `β^λ_I = Σ_x b_λ(x) Π_{i∈I} x_i ξ_i^{-x_i}`, verified by
/// reconstructing each factor belief from the expansion.
pub fn factor_coefficients(res: &LbpResult) -> Result<FactorCoefficients> {
    check_beliefs(res)?;
    let (xi, gamma): (Vec<f64>, Vec<f64>) = res
        .node_beliefs
        .iter()
        .map(|&b| node_coefficients(b))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .unzip();
    let mut beta = Vec::with_capacity(res.scopes.len());
    for (scope, b) in res.scopes.iter().zip(&res.factor_beliefs) {
        let a = scope.len();
        // local bit k of a table index, first scope variable most significant
        let bit = |idx: usize, k: usize| (idx >> (a - 1 - k)) & 1;
        let phi = |idx: usize, mask: usize| -> f64 {
            (0..a)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| basis(xi[scope[k]], bit(idx, k)))
                .product()
        };
        let coeffs: Vec<f64> = (0..1usize << a)
            .map(|mask| {
                (0..b.len())
                    .map(|idx| b[idx] * phi(idx, mask))
                    .collect::<CompensatedSum>()
                    .value()
            })
            .collect();
        for (idx, &target) in b.iter().enumerate() {
            let marg: f64 = (0..a)
                .map(|k| res.node_beliefs[scope[k]][bit(idx, k)])
                .product();
            let rebuilt = marg
                * (0..coeffs.len())
                    .map(|mask| coeffs[mask] * phi(idx, mask))
                    .collect::<CompensatedSum>()
                    .value();
            if (rebuilt - target).abs() > RECONSTRUCTION_TOL {
                return Err(Error::Internal(format!(
                    "factor belief expansion failed to reconstruct entry {idx} of scope {scope:?}: {rebuilt} vs {target}"
                )));
            }
        }
        let mut coeffs = coeffs;
        coeffs[0] = 1.0;
        for k in 0..a {
            coeffs[1 << k] = 0.0;
        }
        beta.push(coeffs);
    }
    Ok(FactorCoefficients { xi, gamma, beta })
}

/// Per-node tables of `f_n(γ_i)` for `n ≤ max_degree`.
fn f_tables(gamma: &[f64], degrees: &[usize]) -> Vec<Vec<f64>> {
    gamma
        .iter()
        .zip(degrees)
        .map(|(&x, &d)| (0..=d).map(|n| f_value(n, x)).collect())
        .collect()
}

fn collect_terms<F>(subsets: Vec<EdgeSubset>, term: F) -> Vec<SeriesTerm>
where
    F: Fn(EdgeSubset) -> f64 + Sync,
{
    subsets
        .into_par_iter()
        .map(|s| SeriesTerm {
            subset: s,
            size: s.len(),
            r: term(s),
        })
        .collect()
}

fn sum_terms(terms: &[SeriesTerm]) -> f64 {
    terms
        .iter()
        .map(|t| t.r)
        .collect::<CompensatedSum>()
        .value()
}

fn report(terms: Vec<SeriesTerm>, edge_count: usize, log_z_bethe: f64) -> SeriesReport {
    let mut sizes = vec![CompensatedSum::new(); edge_count + 1];
    for t in &terms {
        sizes[t.size].add(t.r);
    }
    let total = sum_terms(&terms);
    SeriesReport {
        terms,
        total,
        log_z_bethe,
        z_estimate: log_z_bethe.exp() * total,
        log_z_estimate: log_z_bethe + total.ln(),
        size_sums: sizes.iter().map(|s| s.value()).collect(),
    }
}

fn pairwise_term(
    g: &Multigraph,
    beta: &[f64],
    f: &[Vec<f64>],
    weight: Option<(usize, &[f64])>,
    s: EdgeSubset,
) -> f64 {
    let mut r: f64 = s.iter().map(|e| beta[e]).product();
    for (i, d) in g.degrees_in_subset(s).into_iter().enumerate() {
        match weight {
            Some((w, gw)) if w == i => r *= gw[d],
            _ if d > 0 => r *= f[i][d],
            _ => {}
        }
    }
    r
}

/// `Σ_s Π_{e∈s} β_e Π_i f_{d_i(s)}(γ_i)` with `γ_i = ξ_i - 1/ξ_i`. With a
/// weight node `w`, its factor is `g_{d_w(s)}(γ_w) / (ξ_w + 1/ξ_w)`.
///
/// This is the subset-sum side of the identity whose state-sum side is
/// [`crate::exact::theorem1_lhs`].
pub fn loop_series_sum(
    g: &Multigraph,
    beta: &[f64],
    xi: &[f64],
    weight_node: Option<usize>,
) -> Result<f64> {
    if beta.len() != g.edge_count() || xi.len() != g.node_count() {
        return Err(Error::Argument(
            "β must have one entry per edge and ξ one per node".into(),
        ));
    }
    if let Some(&x) = xi.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::Domain(format!("ξ must be positive, got {x}")));
    }
    if weight_node.is_some_and(|w| w >= g.node_count()) {
        return Err(Error::Argument("weight node out of range".into()));
    }
    let gamma: Vec<f64> = xi.iter().map(|x| x - x.recip()).collect();
    let degrees = g.degrees();
    let f = f_tables(&gamma, &degrees);
    let gw: Vec<f64> = weight_node
        .map(|w| (0..=degrees[w]).map(|n| g_value(n, gamma[w])).collect())
        .unwrap_or_default();
    let weight = weight_node.map(|w| (w, gw.as_slice()));
    let terms = collect_terms(g.enumerate_no_degree_one(weight_node)?, |s| {
        pairwise_term(g, beta, &f, weight, s)
    });
    let scale = weight_node.map_or(1.0, |w| (xi[w] + xi[w].recip()).recip());
    Ok(sum_terms(&terms) * scale)
}

/// Loop series for `Z` of a pairwise model at a converged LBP fixed point.
pub fn loop_series_z(m: &PairwiseModel, res: &LbpResult) -> Result<SeriesReport> {
    let c = coefficients_from_beliefs(res)?;
    check_shape(m.node_count(), m.edge_count(), res)?;
    let g = m.graph();
    let f = f_tables(&c.gamma, &g.degrees());
    let terms = collect_terms(g.enumerate_generalized_loops()?, |s| {
        pairwise_term(g, &c.beta, &f, None, s)
    });
    Ok(report(terms, g.edge_count(), res.log_z_bethe))
}

fn check_shape(nodes: usize, scopes: usize, res: &LbpResult) -> Result<()> {
    if res.node_beliefs.len() != nodes || res.scopes.len() != scopes {
        return Err(Error::Argument(
            "LBP result does not belong to this model".into(),
        ));
    }
    Ok(())
}

fn corrected_marginal(belief: [f64; 2], bias: f64, total: f64) -> [f64; 2] {
    let diff = (belief[0] * belief[1]).sqrt() * bias / total;
    let plus = (1.0 + diff) / 2.0;
    [1.0 - plus, plus]
}

/// Exact marginal of `target` from the loop series: the bias series uses
/// `g_{d}` at the target, which is exempt from degree-one pruning.
pub fn loop_series_marginal(
    m: &PairwiseModel,
    res: &LbpResult,
    target: usize,
) -> Result<MarginalCorrection> {
    if target >= m.node_count() {
        return Err(Error::Argument(format!("target {target} is not a node")));
    }
    let total = loop_series_z(m, res)?.total;
    let c = coefficients_from_beliefs(res)?;
    let g = m.graph();
    let degrees = g.degrees();
    let f = f_tables(&c.gamma, &degrees);
    let gt: Vec<f64> = (0..=degrees[target])
        .map(|n| g_value(n, c.gamma[target]))
        .collect();
    let terms = collect_terms(g.enumerate_no_degree_one(Some(target))?, |s| {
        pairwise_term(g, &c.beta, &f, Some((target, &gt)), s)
    });
    let bias = sum_terms(&terms);
    let belief = res.node_beliefs[target];
    Ok(MarginalCorrection {
        target,
        bias_series: bias,
        terms,
        total,
        belief,
        corrected: corrected_marginal(belief, bias, total),
    })
}

/// For a graph with exactly one cycle and a target on it, whether the exact
/// marginal and the LBP belief lean the same way (ties match either sign).
pub fn single_cycle_sign_check(m: &PairwiseModel, res: &LbpResult, target: usize) -> Result<bool> {
    let g = m.graph();
    if target >= m.node_count() {
        return Err(Error::Domain(format!("target {target} is not a node")));
    }
    if g.cycle_rank()? != 1 {
        return Err(Error::Domain("graph must contain exactly one cycle".into()));
    }
    let loops = g.enumerate_generalized_loops()?;
    let cycle = loops
        .iter()
        .find(|s| !s.is_empty())
        .ok_or_else(|| Error::Internal("unicyclic graph without a cycle".into()))?;
    if g.degree_in_subset(*cycle, target)? == 0 {
        return Err(Error::Domain(format!(
            "target {target} is not on the cycle"
        )));
    }
    res.require_converged()?;
    let exact = brute_force_pairwise(m)?.marginals[target];
    let b = res.node_beliefs[target];
    let p = exact[1] - exact[0];
    let q = b[1] - b[0];
    Ok(p == 0.0 || q == 0.0 || (p > 0.0) == (q > 0.0))
}

/// Index of each incidence-graph edge as `(factor, position in scope)`.
fn incidence_slots(fm: &FactorModel) -> Vec<(usize, usize)> {
    fm.factors()
        .iter()
        .enumerate()
        .flat_map(|(l, f)| (0..f.arity()).map(move |k| (l, k)))
        .collect()
}

fn factor_term(
    fm: &FactorModel,
    h: &Multigraph,
    c: &FactorCoefficients,
    slots: &[(usize, usize)],
    f: &[Vec<f64>],
    weight: Option<(usize, &[f64])>,
    s: EdgeSubset,
) -> f64 {
    let mut masks = vec![0usize; fm.factors().len()];
    for e in s.iter() {
        let (l, k) = slots[e];
        masks[l] |= 1 << k;
    }
    let mut r = if s.len().is_multiple_of(2) { 1.0 } else { -1.0 };
    for (l, &mask) in masks.iter().enumerate() {
        r *= c.beta[l][mask];
    }
    let degrees = h.degrees_in_subset(s);
    for i in 0..fm.var_count() {
        let d = degrees[i];
        match weight {
            Some((w, gw)) if w == i => r *= gw[d],
            _ if d > 0 => r *= f[i][d],
            _ => {}
        }
    }
    r
}

/// Loop series for `Z` of a factor model, summed over generalized loops of
/// the variable-factor incidence graph.
pub fn loop_series_z_factor(fm: &FactorModel, res: &LbpResult) -> Result<SeriesReport> {
    check_shape(fm.var_count(), fm.factors().len(), res)?;
    let c = factor_coefficients(res)?;
    let h = fm.factor_incidence_graph();
    let slots = incidence_slots(fm);
    let f = f_tables(&c.gamma, &fm.variable_degrees());
    let terms = collect_terms(h.enumerate_generalized_loops()?, |s| {
        factor_term(fm, &h, &c, &slots, &f, None, s)
    });
    Ok(report(terms, h.edge_count(), res.log_z_bethe))
}

/// Factor-model analogue of [`loop_series_marginal`].
pub fn loop_series_marginal_factor(
    fm: &FactorModel,
    res: &LbpResult,
    target: usize,
) -> Result<MarginalCorrection> {
    if target >= fm.var_count() {
        return Err(Error::Argument(format!(
            "target {target} is not a variable"
        )));
    }
    let total = loop_series_z_factor(fm, res)?.total;
    let c = factor_coefficients(res)?;
    let h = fm.factor_incidence_graph();
    let slots = incidence_slots(fm);
    let degrees = fm.variable_degrees();
    let f = f_tables(&c.gamma, &degrees);
    let gt: Vec<f64> = (0..=degrees[target])
        .map(|n| g_value(n, c.gamma[target]))
        .collect();
    let terms = collect_terms(h.enumerate_no_degree_one(Some(target))?, |s| {
        factor_term(fm, &h, &c, &slots, &f, Some((target, &gt)), s)
    });
    let bias = sum_terms(&terms);
    let belief = res.node_beliefs[target];
    Ok(MarginalCorrection {
        target,
        bias_series: bias,
        terms,
        total,
        belief,
        corrected: corrected_marginal(belief, bias, total),
    })
}

/// Cumulative partial sums `Σ_{|s| ≤ k} r(s)` for `k = 0..=max_size`.
pub fn truncated_series(report: &SeriesReport, max_size: usize) -> Vec<f64> {
    let mut acc = CompensatedSum::new();
    (0..=max_size)
        .map(|k| {
            if let Some(&v) = report.size_sums.get(k) {
                acc.add(v);
            }
            acc.value()
        })
        .collect()
}
