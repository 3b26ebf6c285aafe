//! The recurrence families
//!
//! `f_0 = 1, f_1 = 0, f_{n+1} = x f_n + f_{n-1}` and
//! `g_0 = x, g_1 = -2, g_{n+1} = x g_n + g_{n-1}`.
//!
//! `f_d(γ_i)` is the weight of a node of degree `d` in a loop-series term;
//! `g_d` replaces it at the node whose marginal is being expanded.

use std::sync::RwLock;

use num_bigint::BigInt;

use super::uni::UniPoly;

static F_TABLE: RwLock<Vec<UniPoly>> = RwLock::new(Vec::new());
static G_TABLE: RwLock<Vec<UniPoly>> = RwLock::new(Vec::new());

fn memoized(table: &RwLock<Vec<UniPoly>>, seeds: [UniPoly; 2], n: usize) -> UniPoly {
    if let Some(p) = table.read().expect("recurrence table poisoned").get(n) {
        return p.clone();
    }
    let mut t = table.write().expect("recurrence table poisoned");
    if t.is_empty() {
        t.extend(seeds);
    }
    let x = UniPoly::var('x');
    while t.len() <= n {
        let k = t.len();
        let next = &(&x * &t[k - 1]) + &t[k - 2];
        t.push(next);
    }
    t[n].clone()
}

pub fn f_poly(n: usize) -> UniPoly {
    memoized(&F_TABLE, [UniPoly::one('x'), UniPoly::zero('x')], n)
}

pub fn g_poly(n: usize) -> UniPoly {
    memoized(
        &G_TABLE,
        [UniPoly::var('x'), UniPoly::constant(BigInt::from(-2), 'x')],
        n,
    )
}

fn run_recurrence(seed0: f64, seed1: f64, n: usize, x: f64) -> f64 {
    let (mut prev, mut cur) = (seed0, seed1);
    if n == 0 {
        return prev;
    }
    for _ in 1..n {
        (prev, cur) = (cur, x * cur + prev);
    }
    cur
}

/// `f_n(x)` in floating point, by the recurrence.
pub fn f_value(n: usize, x: f64) -> f64 {
    run_recurrence(1.0, 0.0, n, x)
}

/// `g_n(x)` in floating point, by the recurrence.
pub fn g_value(n: usize, x: f64) -> f64 {
    run_recurrence(x, -2.0, n, x)
}

/// Checks `f_{n+m-2} = f_n f_m + f_{n-1} f_{m-1}` as exact polynomials.
pub fn f_product_identity_check(n: usize, m: usize) -> bool {
    assert!(n >= 1 && m >= 1, "identity is stated for n, m >= 1");
    f_poly(n + m - 2) == &(&f_poly(n) * &f_poly(m)) + &(&f_poly(n - 1) * &f_poly(m - 1))
}
