use std::io::Read;

use anyhow::{anyhow, Context};

use loopcorrect::exact::{brute_force_factor, brute_force_pairwise};
use loopcorrect::generate::{self, FactorSpec, Topology};
use loopcorrect::graphpoly::{
    loop_count_bound, matching_polynomial, omega, omega_at_1_count, omega_determinant_form,
    omega_recurrence_check, regular_graph_matching_check, theta_at_beta1,
    theta_contraction_deletion, theta_direct,
};
use loopcorrect::lbp::{run_lbp, run_lbp_factor};
use loopcorrect::loopseries::{
    loop_series_marginal, loop_series_marginal_factor, loop_series_z, loop_series_z_factor,
    truncated_series,
};
use loopcorrect::numeric::CompensatedSum;
use loopcorrect::{
    AnyModel, Error, ExactResult, LbpOptions, LbpResult, MarginalCorrection, Multigraph,
    SeriesReport,
};

use crate::report::{num, Report};
use crate::{Cli, Command, LbpArgs, ThetaMethod};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_CHECK_FAILED: u8 = 3;

pub const THREADS_ENV: &str = "LOOPCORRECT_THREADS";

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
    /// Report produced before the failure was detected.
    pub output: Option<String>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::State(_) => EXIT_NOT_CONVERGED,
            Error::TheoremViolation(_) => EXIT_CHECK_FAILED,
            _ => EXIT_USAGE,
        };
        Failure {
            code,
            error: e.into(),
            output: None,
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure {
            code: EXIT_USAGE,
            error,
            output: None,
        }
    }
}

type Outcome = Result<String, Failure>;

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| anyhow!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    // a pool that already exists (as in tests) keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Outcome {
    configure_threads()?;
    let format = cli.format;
    let (report, failure) = match &cli.command {
        Command::Lbp { model, lbp } => cmd_lbp(&load_model(&model.model)?, &options(lbp))?,
        Command::Loopseries {
            model,
            lbp,
            target,
            max_size,
            terms,
        } => (
            cmd_loopseries(
                &load_model(&model.model)?,
                &options(lbp),
                *target,
                *max_size,
                *terms,
            )?,
            None,
        ),
        Command::Oracle { model } => (cmd_oracle(&load_model(&model.model)?)?, None),
        Command::Compare {
            model,
            lbp,
            tolerance,
        } => cmd_compare(&load_model(&model.model)?, &options(lbp), *tolerance)?,
        Command::Theta {
            graph,
            method,
            check,
        } => cmd_theta(&load_graph(&graph.graph)?, *method, *check)?,
        Command::Omega { graph, check } => cmd_omega(&load_graph(&graph.graph)?, *check)?,
        Command::Matching { graph, check } => cmd_matching(&load_graph(&graph.graph)?, *check)?,
        Command::Gen {
            topology,
            coupling,
            field,
            seed,
            out,
        } => {
            let text = cmd_gen(&topology.join(" "), *coupling, *field, *seed)?;
            return match out {
                Some(path) => {
                    std::fs::write(path, &text)
                        .with_context(|| format!("writing {}", path.display()))?;
                    Ok(String::new())
                }
                None => Ok(text),
            };
        }
    };
    let text = report.render(format);
    match failure {
        None => Ok(text),
        Some(mut f) => {
            f.output = Some(text);
            Err(f)
        }
    }
}

fn read_input(path: &str) -> anyhow::Result<String> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .context("reading standard input")?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).with_context(|| format!("reading {path}"))
    }
}

fn load_model(path: &str) -> Result<AnyModel, Failure> {
    let text = read_input(path)?;
    AnyModel::from_json(&text)
        .map_err(|e| Failure::from(anyhow::Error::from(e).context(format!("loading model {path}"))))
}

fn load_graph(path: &str) -> Result<Multigraph, Failure> {
    let text = read_input(path)?;
    text.parse::<Multigraph>()
        .map_err(|e| Failure::from(anyhow::Error::from(e).context(format!("loading graph {path}"))))
}

fn options(args: &LbpArgs) -> LbpOptions {
    LbpOptions {
        max_iters: args.max_iters,
        tol: args.tol,
        damping: args.damping,
        schedule: args.schedule.into(),
    }
}

fn run_any_lbp(model: &AnyModel, opts: &LbpOptions) -> Result<LbpResult, Failure> {
    Ok(match model {
        AnyModel::Pairwise(m) => run_lbp(m, opts)?,
        AnyModel::Factor(fm) => run_lbp_factor(fm, opts)?,
    })
}

fn kind(model: &AnyModel) -> &'static str {
    match model {
        AnyModel::Pairwise(_) => "pairwise",
        AnyModel::Factor(_) => "factor",
    }
}

fn not_converged(res: &LbpResult) -> Option<Failure> {
    res.require_converged().err().map(Failure::from)
}

fn cmd_lbp(model: &AnyModel, opts: &LbpOptions) -> Result<(Report, Option<Failure>), Failure> {
    let res = run_any_lbp(model, opts)?;
    let mut r = Report::new();
    r.field("model", kind(model))
        .field("log_z_bethe", num(res.log_z_bethe))
        .field("converged", res.converged)
        .field("iterations", res.iterations)
        .field("residual", num(res.residual))
        .columns(&["node", "b_minus", "b_plus"]);
    for (i, b) in res.node_beliefs.iter().enumerate() {
        r.row(vec![i.into(), num(b[0]), num(b[1])]);
    }
    Ok((r, not_converged(&res)))
}

fn series_z(model: &AnyModel, res: &LbpResult) -> Result<SeriesReport, Failure> {
    Ok(match model {
        AnyModel::Pairwise(m) => loop_series_z(m, res)?,
        AnyModel::Factor(fm) => loop_series_z_factor(fm, res)?,
    })
}

fn series_marginal(
    model: &AnyModel,
    res: &LbpResult,
    target: usize,
) -> Result<MarginalCorrection, Failure> {
    Ok(match model {
        AnyModel::Pairwise(m) => loop_series_marginal(m, res, target)?,
        AnyModel::Factor(fm) => loop_series_marginal_factor(fm, res, target)?,
    })
}

/// Width of the subset bitstrings: edges, or variable-factor incidences.
fn subset_width(model: &AnyModel) -> usize {
    match model {
        AnyModel::Pairwise(m) => m.edge_count(),
        AnyModel::Factor(fm) => fm.factor_incidence_graph().edge_count(),
    }
}

fn cmd_loopseries(
    model: &AnyModel,
    opts: &LbpOptions,
    target: Option<usize>,
    max_size: Option<usize>,
    terms: bool,
) -> Result<Report, Failure> {
    let res = run_any_lbp(model, opts)?;
    res.require_converged()?;
    let rep = series_z(model, &res)?;
    let mut r = Report::new();
    r.field("model", kind(model))
        .field("terms", rep.terms.len())
        .field("series_total", num(rep.total))
        .field("log_z_bethe", num(rep.log_z_bethe))
        .field("z_estimate", num(rep.z_estimate))
        .field("log_z_estimate", num(rep.log_z_estimate));
    if let Some(k) = max_size {
        let partial = truncated_series(&rep, k);
        r.field("max_size", k).field(
            "truncated_total",
            num(*partial.last().expect("at least size 0")),
        );
    }
    if let Some(t) = target {
        let mc = series_marginal(model, &res, t)?;
        r.field("target", t)
            .field("bias_series", num(mc.bias_series))
            .field("belief_minus", num(mc.belief[0]))
            .field("belief_plus", num(mc.belief[1]))
            .field("corrected_minus", num(mc.corrected[0]))
            .field("corrected_plus", num(mc.corrected[1]));
    }
    if terms {
        let width = subset_width(model);
        r.columns(&["subset", "size", "r", "partial_sum"]);
        let mut acc = CompensatedSum::new();
        for t in &rep.terms {
            acc.add(t.r);
            r.row(vec![
                t.subset.to_bitstring(width).into(),
                t.size.into(),
                num(t.r),
                num(acc.value()),
            ]);
        }
    }
    Ok(r)
}

fn oracle(model: &AnyModel) -> Result<ExactResult, Failure> {
    Ok(match model {
        AnyModel::Pairwise(m) => brute_force_pairwise(m)?,
        AnyModel::Factor(fm) => brute_force_factor(fm)?,
    })
}

fn cmd_oracle(model: &AnyModel) -> Result<Report, Failure> {
    let exact = oracle(model)?;
    let mut r = Report::new();
    r.field("model", kind(model))
        .field("log_z", num(exact.log_z))
        .columns(&["node", "p_minus", "p_plus"]);
    for (i, p) in exact.marginals.iter().enumerate() {
        r.row(vec![i.into(), num(p[0]), num(p[1])]);
    }
    Ok(r)
}

fn cmd_compare(
    model: &AnyModel,
    opts: &LbpOptions,
    tolerance: f64,
) -> Result<(Report, Option<Failure>), Failure> {
    let exact = oracle(model)?;
    let res = run_any_lbp(model, opts)?;
    res.require_converged()?;
    let rep = series_z(model, &res)?;
    let corrected_rel = ((rep.log_z_estimate - exact.log_z).exp() - 1.0).abs();
    let mut rows = Vec::new();
    let (mut before, mut after) = (0f64, 0f64);
    for (i, p) in exact.marginals.iter().enumerate() {
        let mc = series_marginal(model, &res, i)?;
        let eb = (mc.belief[1] - p[1]).abs();
        let ea = (mc.corrected[1] - p[1]).abs();
        before = before.max(eb);
        after = after.max(ea);
        rows.push(vec![
            i.into(),
            num(p[1]),
            num(mc.belief[1]),
            num(mc.corrected[1]),
            num(eb),
            num(ea),
        ]);
    }
    let passed = corrected_rel < tolerance && after < tolerance;
    let mut r = Report::new();
    r.field("model", kind(model))
        .field("log_z_exact", num(exact.log_z))
        .field("log_z_bethe", num(rep.log_z_bethe))
        .field("series_total", num(rep.total))
        .field("log_z_corrected", num(rep.log_z_estimate))
        .field(
            "bethe_abs_error",
            num((rep.log_z_bethe - exact.log_z).abs()),
        )
        .field(
            "bethe_rel_error",
            num(((rep.log_z_bethe - exact.log_z).exp() - 1.0).abs()),
        )
        .field(
            "corrected_abs_error",
            num((rep.log_z_estimate - exact.log_z).abs()),
        )
        .field("corrected_rel_error", num(corrected_rel))
        .field("max_marginal_error_bethe", num(before))
        .field("max_marginal_error_corrected", num(after))
        .field("tolerance", num(tolerance))
        .field("passed", passed)
        .columns(&[
            "node",
            "p_exact",
            "belief",
            "corrected",
            "error_bethe",
            "error_corrected",
        ]);
    for row in rows {
        r.row(row);
    }
    let failure = (!passed).then(|| Failure {
        code: EXIT_CHECK_FAILED,
        error: anyhow!("loop-corrected answers miss the oracle by more than {tolerance:e}"),
        output: None,
    });
    Ok((r, failure))
}

fn check_failure(failures: &[String]) -> Option<Failure> {
    (!failures.is_empty()).then(|| Failure {
        code: EXIT_CHECK_FAILED,
        error: anyhow!("identity checks failed: {}", failures.join("; ")),
        output: None,
    })
}

/// Runs `check`, recording "pass", "fail" or "skipped: reason".
fn record(
    r: &mut Report,
    failures: &mut Vec<String>,
    name: &str,
    check: Result<bool, Error>,
    skip: Option<&str>,
) {
    let status = match (skip, check) {
        (Some(reason), _) => format!("skipped: {reason}"),
        (None, Ok(true)) => "pass".into(),
        (None, Ok(false)) => {
            failures.push(name.into());
            "fail".into()
        }
        (None, Err(e)) => {
            failures.push(format!("{name}: {e}"));
            "fail".into()
        }
    };
    r.field(name, status);
}

fn graph_fields(r: &mut Report, g: &Multigraph) {
    let conn = g.connectivity();
    r.field("nodes", g.node_count())
        .field("edges", g.edge_count())
        .field("components", conn.components);
}

fn cmd_theta(
    g: &Multigraph,
    method: ThetaMethod,
    check: bool,
) -> Result<(Report, Option<Failure>), Failure> {
    let theta = match method {
        ThetaMethod::Direct => theta_direct(g)?,
        ThetaMethod::Cd => theta_contraction_deletion(g),
    };
    let mut r = Report::new();
    graph_fields(&mut r, g);
    r.field("theta", theta.poly.to_string());
    let mut failures = Vec::new();
    if check {
        let other = match method {
            ThetaMethod::Direct => Ok(theta_contraction_deletion(g)),
            ThetaMethod::Cd => theta_direct(g),
        };
        record(
            &mut r,
            &mut failures,
            "check_direct_equals_cd",
            other.map(|o| o == theta),
            None,
        );
        let connected = g.is_connected();
        let skip = (!connected).then_some("disconnected");
        let beta1 = if connected {
            theta_at_beta1(g).map(|t| t.agrees())
        } else {
            Ok(true)
        };
        record(
            &mut r,
            &mut failures,
            "check_beta1_binomial_form",
            beta1,
            skip,
        );
        let bound = if connected {
            loop_count_bound(g).map(|b| {
                r.field("loop_count", b.count)
                    .field("loop_bound", num(b.bound))
                    .field("bound_attained", b.attained);
                true
            })
        } else {
            Ok(true)
        };
        record(&mut r, &mut failures, "check_loop_count_bound", bound, skip);
    }
    Ok((r, check_failure(&failures)))
}

fn cmd_omega(g: &Multigraph, check: bool) -> Result<(Report, Option<Failure>), Failure> {
    let w = omega(g)?;
    let mut r = Report::new();
    graph_fields(&mut r, g);
    r.field("omega", w.to_string());
    let mut failures = Vec::new();
    if check {
        let recurrence = (0..g.edge_count())
            .filter(|&e| !g.is_self_loop(e))
            .try_fold(true, |ok, e| omega_recurrence_check(g, e).map(|b| ok && b));
        record(&mut r, &mut failures, "check_recurrence", recurrence, None);
        let loop_free = !g.has_self_loops();
        let count = if loop_free {
            omega_at_1_count(g).map(|c| {
                r.field("omega_at_1", c.value.to_string())
                    .field("injective_assignments", c.count);
                true
            })
        } else {
            Ok(true)
        };
        record(
            &mut r,
            &mut failures,
            "check_counting",
            count,
            (!loop_free).then_some("graph has self-loops"),
        );
        let simple = g.is_simple();
        let det = if simple {
            omega_determinant_form(g).map(|_| true)
        } else {
            Ok(true)
        };
        record(
            &mut r,
            &mut failures,
            "check_determinant_form",
            det,
            (!simple).then_some("graph is not simple"),
        );
        let degrees = g.degrees();
        let regular = simple && degrees.iter().all(|&d| d == degrees[0] && d > 0);
        let reg = if regular {
            regular_graph_matching_check(g)
        } else {
            Ok(true)
        };
        record(
            &mut r,
            &mut failures,
            "check_regular_matching",
            reg,
            (!regular).then_some("graph is not regular and simple"),
        );
    }
    Ok((r, check_failure(&failures)))
}

fn cmd_matching(g: &Multigraph, check: bool) -> Result<(Report, Option<Failure>), Failure> {
    let alpha = matching_polynomial(g)?;
    let mut r = Report::new();
    graph_fields(&mut r, g);
    r.field("matching", alpha.to_string());
    let mut failures = Vec::new();
    if check {
        let degrees = g.degrees();
        let regular =
            g.is_simple() && g.is_connected() && degrees.iter().all(|&d| d == degrees[0] && d > 0);
        let reg = if regular {
            regular_graph_matching_check(g)
        } else {
            Ok(true)
        };
        record(
            &mut r,
            &mut failures,
            "check_regular_matching",
            reg,
            (!regular).then_some("graph is not regular, simple and connected"),
        );
    }
    Ok((r, check_failure(&failures)))
}

fn cmd_gen(topology: &str, coupling: f64, field: f64, seed: u64) -> Result<String, Failure> {
    let model = if topology.trim() == "factor" {
        let spec = FactorSpec {
            strength: coupling,
            ..FactorSpec::default()
        };
        AnyModel::Factor(generate::factor_model(&spec, seed)?)
    } else {
        let topo: Topology = topology.parse()?;
        AnyModel::Pairwise(generate::pairwise(&topo, coupling, field, seed)?)
    };
    let mut text = model.to_json();
    text.push('\n');
    Ok(text)
}
