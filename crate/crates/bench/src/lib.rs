//! Shared inputs for the benchmarks.

use loopcorrect::generate::{self, Topology};
use loopcorrect::{LbpOptions, LbpResult, Multigraph, PairwiseModel};

pub const SEED: u64 = 7;

/// Grid models of increasing size with moderate couplings.
pub fn grid_models() -> Vec<(String, PairwiseModel)> {
    [(3, 3), (3, 4), (4, 4)]
        .into_iter()
        .map(|(r, c)| {
            let m = generate::pairwise(&Topology::Grid(r, c), 0.5, 0.5, SEED).expect("grid model");
            (format!("grid{r}x{c}"), m)
        })
        .collect()
}

/// A converged belief propagation run for the series benchmarks.
pub fn converged(m: &PairwiseModel) -> LbpResult {
    let res = loopcorrect::lbp::run_lbp(m, &LbpOptions::default()).expect("lbp runs");
    assert!(res.converged, "benchmark model must converge");
    res
}

/// Graphs for the polynomial benchmarks.
pub fn poly_graphs() -> Vec<(String, Multigraph)> {
    vec![
        ("two_triangles".into(), Multigraph::two_triangles()),
        ("k4".into(), Multigraph::complete(4)),
        ("k5".into(), Multigraph::complete(5)),
        ("grid3x3".into(), Multigraph::grid(3, 3)),
    ]
}
