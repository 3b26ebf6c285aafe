use num_bigint::BigInt;
use num_traits::One;

use super::omega::omega;
use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::poly::UniPoly;

/// Largest node count accepted by [`omega_determinant_form`].
pub const DETERMINANT_MAX_NODES: usize = 24;

/// `α_G(x) = Σ_k (-1)^k p_G(k) x^{n-2k}` with `p_G(k)` the number of
/// `k`-edge matchings.
pub fn matching_polynomial(g: &Multigraph) -> Result<UniPoly> {
    let counts = g.enumerate_matchings()?;
    let n = g.node_count() as u32;
    Ok(UniPoly::from_terms(
        'x',
        counts.iter().enumerate().map(|(k, &p)| {
            let sign = if k % 2 == 0 { 1 } else { -1 };
            (n - 2 * k as u32, BigInt::from(sign) * BigInt::from(p))
        }),
    ))
}

/// Fraction-free determinant over `Z[u]`.
fn bareiss(mut m: Vec<Vec<UniPoly>>) -> Result<UniPoly> {
    let n = m.len();
    if n == 0 {
        return Ok(UniPoly::one('u'));
    }
    let mut negate = false;
    let mut prev = UniPoly::one('u');
    for k in 0..n - 1 {
        if m[k][k].is_zero() {
            match (k + 1..n).find(|&i| !m[i][k].is_zero()) {
                Some(i) => {
                    m.swap(i, k);
                    negate = !negate;
                }
                None => return Ok(UniPoly::zero('u')),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let num = &(&m[i][j] * &m[k][k]) - &(&m[i][k] * &m[k][j]);
                m[i][j] = num.exact_divide(&prev)?;
            }
        }
        prev = m[k][k].clone();
    }
    let det = m[n - 1][n - 1].clone();
    Ok(if negate { -&det } else { det })
}

/// `Σ_C 2^{k(C)} u^{|C|} det[I + u²(D - I) - uA]` over node-disjoint cycle
/// sets `C` with `k(C)` cycles, the matrix restricted to the nodes outside
/// `C`. Fails unless the result equals `ω_G(u²)`.
pub fn omega_determinant_form(g: &Multigraph) -> Result<UniPoly> {
    if !g.is_simple() || !g.is_connected() {
        return Err(Error::Domain(
            "the determinant form needs a simple connected graph".into(),
        ));
    }
    let n = g.node_count();
    if n > DETERMINANT_MAX_NODES {
        return Err(Error::Size(format!(
            "{n} nodes exceed the determinant limit of {DETERMINANT_MAX_NODES}"
        )));
    }
    let degrees = g.degrees();
    let mut adjacency = vec![vec![0i64; n]; n];
    for &(a, b) in g.edges() {
        adjacency[a][b] += 1;
        adjacency[b][a] += 1;
    }
    let mut total = UniPoly::zero('u');
    for cover in g.enumerate_disjoint_cycles()? {
        let covered = g.degrees_in_subset(cover.edges);
        let rest: Vec<usize> = (0..n).filter(|&v| covered[v] == 0).collect();
        let matrix = rest
            .iter()
            .map(|&i| {
                rest.iter()
                    .map(|&j| {
                        let mut entry = UniPoly::monomial(BigInt::from(-adjacency[i][j]), 1, 'u');
                        if i == j {
                            entry.add_term(0, BigInt::one());
                            entry.add_term(2, BigInt::from(degrees[i] as i64 - 1));
                        }
                        entry
                    })
                    .collect()
            })
            .collect();
        let weight = UniPoly::monomial(
            BigInt::from(2).pow(cover.components as u32),
            cover.edges.len() as u32,
            'u',
        );
        total = &total + &(&weight * &bareiss(matrix)?);
    }
    let expected = omega(g)?.substitute_power(2).with_var('u');
    if total != expected {
        return Err(Error::TheoremViolation(format!(
            "determinant form {total} differs from ω(u²) = {expected}"
        )));
    }
    Ok(total)
}

/// For a `(q+1)`-regular graph, whether `ω_G(u²) = α_G(1/u + q u) u^n`.
pub fn regular_graph_matching_check(g: &Multigraph) -> Result<bool> {
    if !g.is_simple() {
        return Err(Error::Domain(
            "the regular-graph identity needs a simple graph".into(),
        ));
    }
    let degrees = g.degrees();
    let r = degrees[0];
    if r == 0 || degrees.iter().any(|&d| d != r) {
        return Err(Error::Domain(
            "graph is not regular of positive degree".into(),
        ));
    }
    let q = BigInt::from(r - 1);
    let n = g.node_count();
    let counts = g.enumerate_matchings()?;
    let base = UniPoly::from_terms('u', [(0, BigInt::one()), (2, q)]);
    let mut lhs = UniPoly::zero('u');
    for (k, &p) in counts.iter().enumerate() {
        let sign = if k % 2 == 0 { 1 } else { -1 };
        let term = base
            .pow((n - 2 * k) as u32)
            .shift(2 * k as u32)
            .scale(&(BigInt::from(sign) * p));
        lhs = &lhs + &term;
    }
    let rhs = omega(g)?.substitute_power(2);
    Ok(lhs == rhs)
}
