use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::theta::theta_contraction_deletion;
use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::poly::{gaussian, UniPoly};

/// `θ_G(β, 2i) / (1-β)^{|E|-|V|}` for any multigraph, disconnected ones
/// included.
fn omega_any(g: &Multigraph) -> Result<UniPoly> {
    let theta = theta_contraction_deletion(g)
        .poly
        .substitute_gamma(&gaussian(0, 2));
    if let Some((e, c)) = theta.terms().find(|(_, c)| !c.im.is_zero()) {
        return Err(Error::TheoremViolation(format!(
            "θ(β, 2i) has non-real coefficient {c} at β^{e}"
        )));
    }
    let real = UniPoly::from_terms('b', theta.terms().map(|(e, c)| (e, c.re.clone())));
    let k = g.edge_count() as i64 - g.node_count() as i64;
    if k >= 0 {
        real.exact_divide(&UniPoly::one_minus_var_pow(k as u32, 'b'))
            .map_err(|err| {
                Error::TheoremViolation(format!("θ(β, 2i) is not divisible by (1-β)^{k}: {err}"))
            })
    } else {
        Ok(&real * &UniPoly::one_minus_var_pow((-k) as u32, 'b'))
    }
}

/// `ω_G(β) = θ_G(β, 2i) / (1-β)^{|E|-|V|}`, an integer polynomial for every
/// connected multigraph. Trees, where the exponent is `-1`, are multiplied
/// by `1-β` instead.
pub fn omega(g: &Multigraph) -> Result<UniPoly> {
    if !g.is_connected() {
        return Err(Error::Domain("ω is defined for connected graphs".into()));
    }
    omega_any(g)
}

/// Checks `ω_G = ω_{G\e} + β ω_{G/e}` for the non-loop edge `e`.
pub fn omega_recurrence_check(g: &Multigraph, e: usize) -> Result<bool> {
    if g.edge(e)?.0 == g.edge(e)?.1 {
        return Err(Error::Domain(format!("edge {e} is a self-loop")));
    }
    let lhs = omega_any(g)?;
    let rhs = &omega_any(&g.delete(e)?)? + &(&UniPoly::var('b') * &omega_any(&g.contract(e)?)?);
    Ok(lhs == rhs)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OmegaCount {
    /// `ω_G(1)`.
    pub value: BigInt,
    /// Number of injective maps sending each node to one of its incident edges.
    pub count: u64,
}

fn count_assignments(incidence: &[Vec<(usize, usize)>], node: usize, used: &mut [bool]) -> u64 {
    if node == incidence.len() {
        return 1;
    }
    let mut total = 0;
    for &(e, _) in &incidence[node] {
        if !used[e] {
            used[e] = true;
            total += count_assignments(incidence, node + 1, used);
            used[e] = false;
        }
    }
    total
}

/// `ω_G(1)` alongside a brute-force count of injective incident-edge
/// assignments; the two must agree.
pub fn omega_at_1_count(g: &Multigraph) -> Result<OmegaCount> {
    if g.has_self_loops() {
        return Err(Error::Domain(
            "the counting interpretation needs a loop-free graph".into(),
        ));
    }
    let value = omega(g)?.eval(&BigInt::one());
    let count = count_assignments(&g.incidence(), 0, &mut vec![false; g.edge_count()]);
    if value != BigInt::from(count) {
        return Err(Error::TheoremViolation(format!(
            "ω(1) = {value} but {count} assignments exist"
        )));
    }
    Ok(OmegaCount { value, count })
}
