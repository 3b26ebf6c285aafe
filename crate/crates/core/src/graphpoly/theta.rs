use std::collections::HashMap;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Multigraph;
use crate::poly::{f_poly, BiPoly, UniPoly};

/// `θ_G(β, γ) = Σ_s β^{|s|} Π_i f_{d_i(s)}(γ)` together with the size of
/// its host graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaPoly {
    pub poly: BiPoly,
    pub node_count: usize,
    pub edge_count: usize,
    pub components: usize,
}

impl ThetaPoly {
    fn new(g: &Multigraph, poly: BiPoly) -> Self {
        ThetaPoly {
            poly,
            node_count: g.node_count(),
            edge_count: g.edge_count(),
            components: g.connectivity().components,
        }
    }

    /// `|E| - |V| + components`.
    pub fn cycle_rank(&self) -> usize {
        self.edge_count + self.components - self.node_count
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * (n - i) / (i + 1))
}

/// Subset-sum construction over generalized loops.
pub fn theta_direct(g: &Multigraph) -> Result<ThetaPoly> {
    let loops = g.enumerate_generalized_loops()?;
    let terms: Vec<BiPoly> = loops
        .into_par_iter()
        .map(|s| {
            let gamma = g
                .degrees_in_subset(s)
                .into_iter()
                .filter(|&d| d >= 2)
                .fold(UniPoly::one('g'), |acc, d| &acc * &f_poly(d));
            BiPoly::beta_power_times(s.len() as u32, &gamma)
        })
        .collect();
    let poly = terms.iter().fold(BiPoly::zero(), |acc, t| &acc + t);
    Ok(ThetaPoly::new(g, poly))
}

/// `θ` of the bouquet with `loops` self-loops at one node:
/// `Σ_k C(L, k) β^k f_{2k}(γ)`.
pub fn bouquet_theta(loops: usize) -> BiPoly {
    (0..=loops).fold(BiPoly::zero(), |acc, k| {
        let term = BiPoly::beta_power_times(k as u32, &f_poly(2 * k)).scale(&binomial(loops, k));
        &acc + &term
    })
}

/// Memo table for contraction-deletion, keyed on the sorted edge list with
/// isolated nodes removed. Safe to share between threads; concurrent misses
/// on the same key both compute and the later insert wins.
#[derive(Debug, Default)]
pub struct ThetaMemo {
    map: Mutex<HashMap<Vec<(usize, usize)>, BiPoly>>,
}

impl ThetaMemo {
    pub fn new() -> Self {
        ThetaMemo::default()
    }

    pub fn len(&self) -> usize {
        self.map.lock().expect("memo lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get(&self, key: &[(usize, usize)]) -> Option<BiPoly> {
        self.map.lock().expect("memo lock").get(key).cloned()
    }

    fn insert(&self, key: Vec<(usize, usize)>, value: BiPoly) {
        self.map.lock().expect("memo lock").insert(key, value);
    }
}

fn canonical_key(g: &Multigraph) -> Vec<(usize, usize)> {
    let mut label = vec![usize::MAX; g.node_count()];
    let mut next = 0;
    for &(a, b) in g.edges() {
        for v in [a, b] {
            if label[v] == usize::MAX {
                label[v] = next;
                next += 1;
            }
        }
    }
    let mut key: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (a, b) = (label[a], label[b]);
            (a.min(b), a.max(b))
        })
        .collect();
    key.sort_unstable();
    key
}

fn one_minus_beta() -> BiPoly {
    let mut p = BiPoly::one();
    p.add_term(1, 0, -BigInt::one());
    p
}

fn beta() -> BiPoly {
    let mut p = BiPoly::zero();
    p.add_term(1, 0, BigInt::one());
    p
}

fn contraction_deletion(g: &Multigraph, memo: &ThetaMemo) -> BiPoly {
    let Some(pivot) = (0..g.edge_count()).find(|&e| !g.is_self_loop(e)) else {
        let mut loops = vec![0usize; g.node_count()];
        for &(a, _) in g.edges() {
            loops[a] += 1;
        }
        return loops
            .into_iter()
            .filter(|&l| l > 0)
            .fold(BiPoly::one(), |acc, l| &acc * &bouquet_theta(l));
    };
    let key = canonical_key(g);
    if let Some(hit) = memo.get(&key) {
        return hit;
    }
    let deleted = g.delete(pivot).expect("pivot is an edge");
    let contracted = g.contract(pivot).expect("pivot is not a self-loop");
    let value = &(&one_minus_beta() * &contraction_deletion(&deleted, memo))
        + &(&beta() * &contraction_deletion(&contracted, memo));
    memo.insert(key, value.clone());
    value
}

/// `θ` via `θ_G = (1-β) θ_{G\e} + β θ_{G/e}` on the lowest-id non-loop edge,
/// ending at products of bouquets.
pub fn theta_contraction_deletion(g: &Multigraph) -> ThetaPoly {
    theta_contraction_deletion_with(g, &ThetaMemo::new())
}

pub fn theta_contraction_deletion_with(g: &Multigraph, memo: &ThetaMemo) -> ThetaPoly {
    ThetaPoly::new(g, contraction_deletion(g, memo))
}

/// `θ_G(1, γ)` computed two ways.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ThetaAtOne {
    pub cycle_rank: usize,
    /// `θ_G` with `β = 1` substituted.
    pub substituted: UniPoly,
    /// `Σ_k C(n, k) f_{2k}(γ)` with `n` the cycle rank.
    pub binomial_form: UniPoly,
}

impl ThetaAtOne {
    pub fn agrees(&self) -> bool {
        self.substituted == self.binomial_form
    }
}

pub fn theta_at_beta1(g: &Multigraph) -> Result<ThetaAtOne> {
    let n = g.cycle_rank()?;
    let substituted = theta_contraction_deletion(g).poly.eval_beta(&BigInt::one());
    let binomial_form = (0..=n).fold(UniPoly::zero('g'), |acc, k| {
        &acc + &f_poly(2 * k).with_var('g').scale(&binomial(n, k))
    });
    Ok(ThetaAtOne {
        cycle_rank: n,
        substituted,
        binomial_form,
    })
}

/// `(1+ξ⁻²)^|E| (ξ/(ξ+ξ⁻¹))^|V| + (1+ξ²)^|E| (ξ⁻¹/(ξ+ξ⁻¹))^|V|`, which equals
/// `θ_G(1, ξ - ξ⁻¹)` for connected `G`.
pub fn theta_closed_form_at_beta1(g: &Multigraph, xi: f64) -> f64 {
    let (e, v) = (g.edge_count() as i32, g.node_count() as i32);
    let s = xi + xi.recip();
    (1.0 + xi.powi(-2)).powi(e) * (xi / s).powi(v)
        + (1.0 + xi * xi).powi(e) * (xi.recip() / s).powi(v)
}

/// `((5-√5)/2)^{n-1} + ((5+√5)/2)^{n-1}` for cycle rank `n`; the value of
/// `θ_G(1, γ)` at `γ = 1`, the golden ratio in `ξ`.
pub fn golden_ratio_value(g: &Multigraph) -> Result<f64> {
    let n = g.cycle_rank()? as i32;
    let r = 5f64.sqrt();
    Ok(((5.0 - r) / 2.0).powi(n - 1) + ((5.0 + r) / 2.0).powi(n - 1))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoopCountBound {
    pub cycle_rank: usize,
    pub bound: f64,
    /// Number of generalized loops, the empty set included.
    pub count: u64,
    /// Whether every generalized loop has maximum degree at most three.
    pub attained: bool,
    /// Exact `θ_G(1, 1)`.
    pub theta_value: BigInt,
}

/// The number of generalized loops is at most [`golden_ratio_value`], with
/// equality exactly when no generalized loop has a node of degree above three.
pub fn loop_count_bound(g: &Multigraph) -> Result<LoopCountBound> {
    let bound = golden_ratio_value(g)?;
    let cycle_rank = g.cycle_rank()?;
    let loops = g.enumerate_generalized_loops()?;
    let count = loops.len() as u64;
    let attained = loops
        .iter()
        .all(|&s| g.degrees_in_subset(s).into_iter().all(|d| d <= 3));
    let theta_value = theta_contraction_deletion(g)
        .poly
        .eval_beta(&BigInt::one())
        .eval(&BigInt::one());
    let theta_f = theta_value.to_f64().unwrap_or(f64::INFINITY);
    if (theta_f - bound).abs() > 1e-9 * bound.max(1.0) {
        return Err(Error::TheoremViolation(format!(
            "θ(1, 1) = {theta_value} differs from the golden-ratio value {bound}"
        )));
    }
    if count as f64 > bound + 1e-9 {
        return Err(Error::TheoremViolation(format!(
            "{count} generalized loops exceed the bound {bound}"
        )));
    }
    if attained != (BigInt::from(count) == theta_value) {
        return Err(Error::TheoremViolation(format!(
            "equality case mismatch: count {count}, θ(1, 1) = {theta_value}, degree condition {attained}"
        )));
    }
    Ok(LoopCountBound {
        cycle_rank,
        bound,
        count,
        attained,
        theta_value,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn theta_examples() {
        assert_eq!(
            theta_direct(&Multigraph::star(4)).unwrap().poly,
            BiPoly::one()
        );
        assert_eq!(
            theta_direct(&Multigraph::cycle(3))
                .unwrap()
                .poly
                .to_string(),
            "1 + b^3"
        );
        let ex = theta_direct(&Multigraph::two_triangles()).unwrap();
        assert_eq!(ex.poly.to_string(), "1 + 2*b^3 + b^6 + b^7*g^2");
        assert_eq!(ex.cycle_rank(), 2);
    }

    #[test]
    fn contraction_deletion_examples() {
        for g in [
            Multigraph::path(5),
            Multigraph::cycle(3),
            Multigraph::two_triangles(),
            Multigraph::complete(4),
        ] {
            assert_eq!(theta_contraction_deletion(&g), theta_direct(&g).unwrap());
        }
    }

    #[test]
    fn bouquets() {
        assert_eq!(bouquet_theta(1).to_string(), "1 + b");
        assert_eq!(bouquet_theta(2).to_string(), "1 + 2*b + b^2 + b^2*g^2");
        for l in 1..4 {
            assert_eq!(
                theta_direct(&Multigraph::bouquet(l)).unwrap().poly,
                bouquet_theta(l)
            );
        }
    }

    #[test]
    fn memo_is_shared() {
        let memo = ThetaMemo::new();
        let g = Multigraph::grid(2, 3);
        let a = theta_contraction_deletion_with(&g, &memo);
        let filled = memo.len();
        assert!(filled > 0);
        assert_eq!(theta_contraction_deletion_with(&g, &memo), a);
        assert_eq!(memo.len(), filled);
    }

    #[test]
    fn beta_one_examples() {
        let t = theta_at_beta1(&Multigraph::cycle(3)).unwrap();
        assert!(t.agrees());
        assert_eq!(t.substituted.to_string(), "2");
        let t = theta_at_beta1(&Multigraph::two_triangles()).unwrap();
        assert!(t.agrees());
        assert_eq!(t.substituted.to_string(), "4 + g^2");
        assert_eq!(
            theta_at_beta1(&Multigraph::path(4))
                .unwrap()
                .substituted
                .to_string(),
            "1"
        );
        let split = Multigraph::new(4, vec![(0, 1), (2, 3)]).unwrap();
        assert!(matches!(theta_at_beta1(&split), Err(Error::Domain(_))));
    }

    #[test]
    fn closed_form_at_beta_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [
            Multigraph::cycle(5),
            Multigraph::two_triangles(),
            Multigraph::complete(4),
            Multigraph::bouquet(3),
        ] {
            let t = theta_at_beta1(&g).unwrap().substituted;
            for _ in 0..20 {
                let xi: f64 = rng.gen_range(0.2..4.0);
                let exact = t.eval_f64(xi - xi.recip());
                let closed = theta_closed_form_at_beta1(&g, xi);
                assert!((exact - closed).abs() <= 1e-9 * exact.abs());
            }
        }
    }

    #[test]
    fn loop_count_examples() {
        let b = loop_count_bound(&Multigraph::two_triangles()).unwrap();
        assert_eq!((b.count, b.attained), (5, true));
        assert!((b.bound - 5.0).abs() < 1e-12);
        let b = loop_count_bound(&Multigraph::cycle(3)).unwrap();
        assert_eq!((b.count, b.attained), (2, true));
        assert!((b.bound - 2.0).abs() < 1e-12);
        let k4 = Multigraph::complete(4);
        let brute = (0..1u64 << 6)
            .filter(|&bits| {
                let s = crate::graph::EdgeSubset::from_bits(bits);
                k4.degrees_in_subset(s).into_iter().all(|d| d != 1)
            })
            .count() as u64;
        let b = loop_count_bound(&k4).unwrap();
        assert_eq!(b.count, brute);
        assert_eq!(b.count, 15);
        assert!(b.attained);
        let k5 = loop_count_bound(&Multigraph::complete(5)).unwrap();
        assert!(!k5.attained);
        assert!((k5.count as f64) < k5.bound);
        let tree = loop_count_bound(&Multigraph::star(3)).unwrap();
        assert_eq!(tree.count, 1);
        assert!((tree.bound - 1.0).abs() < 1e-12);
    }

    fn arb_connected() -> impl Strategy<Value = Multigraph> {
        (
            2usize..6,
            proptest::collection::vec((0usize..6, 0usize..6), 0..6),
        )
            .prop_map(|(n, extra)| {
                let mut edges: Vec<(usize, usize)> = (1..n).map(|v| (v - 1, v)).collect();
                edges.extend(extra.into_iter().map(|(a, b)| (a % n, b % n)));
                Multigraph::new(n, edges).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn contraction_deletion_matches_direct(g in arb_connected()) {
            prop_assert_eq!(theta_contraction_deletion(&g), theta_direct(&g).unwrap());
        }

        #[test]
        fn beta_one_matches_binomial_form(g in arb_connected()) {
            prop_assert!(theta_at_beta1(&g).unwrap().agrees());
        }

        #[test]
        fn constant_term_and_degree(g in arb_connected()) {
            let t = theta_direct(&g).unwrap();
            prop_assert_eq!(t.poly.coeff(0, 0), BigInt::one());
            prop_assert!(t.poly.beta_degree().unwrap() as usize <= g.edge_count());
        }
    }
}
