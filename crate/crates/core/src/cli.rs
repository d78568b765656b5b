//! The `fjcluster` command line.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::classify::{classify_agents, AgentProfile};
use crate::clusters::{
    empirical_clusters, predicted_clusters, predicted_from, robustness_trials, verify_refinement, TrialOptions,
    GROUPING_TOL,
};
use crate::design::{synthesize, validate_design};
use crate::dynamics::{
    convergence_of, simulate, steady_state, steady_state_simulated, Convergence, SIMULATION_MAX_ITER, SIMULATION_TOL,
};
use crate::error::Error;
use crate::graph::{Digraph, ROW_SUM_TOL};
use crate::io::{graph_to_json, one_based_blocks, parse_design, parse_graph, to_canonical_string};
use crate::kron::{build_r, certify_pair, is_laplacian, LAPLACIAN_TOL};
use crate::ltp::analyze;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERDICT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "fjcluster", version, about = "Opinion-cluster analysis for Friedkin-Johnsen networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Io {
    /// Graph JSON file.
    pub input: PathBuf,
    /// Write the result here instead of stdout.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SteadyMethod {
    ClosedForm,
    Simulate,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Agent classes, SCCs, iSCCs and convergence.
    Analyze(#[command(flatten)] Io),
    /// Iterate the dynamics and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        io: Io,
        /// Stop once no opinion moves by more than this.
        #[arg(long, default_value_t = SIMULATION_TOL, value_parser = positive)]
        tol: f64,
        #[arg(long, default_value_t = SIMULATION_MAX_ITER)]
        max_iter: usize,
    },
    /// Final opinions as JSON.
    SteadyState {
        #[command(flatten)]
        io: Io,
        #[arg(long, value_enum, default_value_t = SteadyMethod::ClosedForm)]
        method: SteadyMethod,
        /// Convergence tolerance for `--method simulate`.
        #[arg(long, default_value_t = SIMULATION_TOL, value_parser = positive)]
        tol: f64,
    },
    /// LTP agents and the agents each one persuades.
    Ltp {
        #[command(flatten)]
        io: Io,
        /// Also write the dominator tree in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Kron-reduce the augmented Laplacian and certify persuaded pairs.
    Kron {
        #[command(flatten)]
        io: Io,
        /// Nodes to keep, comma separated; sources are numbered n+1..n+m.
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<usize>,
    },
    /// Clusters implied by the topology.
    Predict(#[command(flatten)] Io),
    /// Check predicted clusters against the steady state and randomized trials.
    Verify {
        #[command(flatten)]
        io: Io,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, env = "FJCLUSTER_SEED", default_value_t = 0)]
        seed: u64,
        /// Single-linkage gap for grouping opinions.
        #[arg(long, default_value_t = GROUPING_TOL, value_parser = positive)]
        tol: f64,
        /// Require a Kron certificate for every persuaded pair in every trial.
        #[arg(long)]
        certify: bool,
    },
    /// Build a network realizing a design spec.
    Design {
        /// Design spec JSON file.
        input: PathBuf,
        /// Write the network here instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Seed used when the spec has none.
        #[arg(long, env = "FJCLUSTER_SEED", default_value_t = 0)]
        seed: u64,
    },
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Input(String),
    Verdict(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::PeriodicIscc(c) => Failure::Verdict(format!("periodic-iscc {}", one_based_blocks(&c))),
            Error::NoConvergence(_) | Error::Residual(_) | Error::SingularMatrix | Error::SpectralRadius(_) => {
                Failure::Verdict(e.to_string())
            }
            e => Failure::Input(e.to_string()),
        }
    }
}

/// Text produced by a command, and whether it reports a failed verdict.
struct Output {
    body: String,
    verdict: Option<String>,
}

impl Output {
    fn ok(body: String) -> Self {
        Self { body, verdict: None }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<(Digraph, AgentProfile), Failure> {
    let (g, p) = parse_graph(&read(path)?).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    let report = g.validate_row_stochastic(ROW_SUM_TOL);
    if let Some(d) = report.deviations.first() {
        return Err(Failure::Input(format!(
            "{}: in-weights of agent {} sum to {} instead of 1",
            path.display(),
            d.row + 1,
            d.sum
        )));
    }
    Ok((g, p))
}

fn one_based(v: impl IntoIterator<Item = usize>) -> Vec<usize> {
    v.into_iter().map(|i| i + 1).collect()
}

fn json_output(v: Value) -> Output {
    Output::ok(to_canonical_string(&v))
}

fn cmd_analyze(io: &Io) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let classes = classify_agents(&g, &p)?;
    let scc = classes.scc();
    let isccs: Vec<Value> = scc
        .independent_components()
        .map(|c| {
            let members = &scc.components()[c];
            let oblivious = members.iter().all(|&v| classes.is_oblivious(v));
            let aperiodic = g.is_aperiodic(scc, c).ok();
            json!({"members": one_based(members.iter().copied()), "oblivious": oblivious, "aperiodic": aperiodic})
        })
        .collect();
    let convergence = match convergence_of(&g, &classes)? {
        Convergence::Converges => json!({"converges": true, "periodic_isccs": []}),
        Convergence::PeriodicIscc(c) => json!({"converges": false, "periodic_isccs": one_based_blocks(&c)}),
    };
    Ok(json_output(json!({
        "n": g.node_count(),
        "stubborn": one_based(classes.stubborn()),
        "oblivious": one_based(classes.oblivious()),
        "influential": one_based(classes.influential()),
        "sccs": one_based_blocks(scc.components()),
        "isccs": isccs,
        "convergence": convergence,
    })))
}

fn cmd_simulate(io: &Io, tol: f64, max_iter: usize) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let t = simulate(&g, &p, tol, max_iter)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    let header: Vec<String> =
        std::iter::once("step".to_string()).chain((1..=g.node_count()).map(|i| format!("x_{i}"))).collect();
    let csv_err = |e: csv::Error| Failure::Input(e.to_string());
    w.write_record(&header).map_err(csv_err)?;
    for (k, x) in t.steps().iter().zip(t.states()) {
        let row = std::iter::once(k.to_string()).chain(x.iter().map(|v| v.to_string()));
        w.write_record(row).map_err(csv_err)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| Failure::Input(e.to_string()))?).expect("utf-8 CSV");
    let verdict = (!t.converged()).then(|| format!("not-converged after {} steps", t.final_step()));
    Ok(Output { body, verdict })
}

fn cmd_steady(io: &Io, method: SteadyMethod, tol: f64) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let s = match method {
        SteadyMethod::ClosedForm => steady_state(&g, &p)?,
        SteadyMethod::Simulate => steady_state_simulated(&g, &p, tol, SIMULATION_MAX_ITER)?,
    };
    Ok(json_output(json!({"x_star": s.x_star(), "method": s.method().as_str(), "residual": s.residual()})))
}

fn cmd_ltp(io: &Io, dot: Option<&Path>) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let classes = classify_agents(&g, &p)?;
    let report = analyze(&g, &classes)?;
    if let Some(path) = dot {
        std::fs::write(path, report.to_dot()).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    }
    let ltp: Vec<Value> = report
        .ltp()
        .iter()
        .map(|(&a, np)| json!({"agent": a + 1, "persuaded": one_based(np.iter().copied())}))
        .collect();
    Ok(json_output(json!({"ltp": ltp, "residual": one_based(report.residual().iter().copied())})))
}

fn cmd_kron(io: &Io, alpha: &[usize]) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let classes = classify_agents(&g, &p)?;
    let report = analyze(&g, &classes)?;
    let mut pairs = Vec::new();
    let mut all_certified = true;
    for (&lp, np) in report.ltp() {
        for &q in np {
            let (k, rel) = certify_pair(&g, &p, &classes, lp, q)?;
            all_certified &= rel.certified;
            pairs.push(json!({
                "p": lp + 1,
                "q": q + 1,
                "alpha": one_based(k.alpha().iter().copied()),
                "coeff_p": rel.coeff_p,
                "coeff_q": rel.coeff_q,
                "certified": rel.certified,
            }));
        }
    }
    let mut out = json!({"pairs": pairs});
    let mut verdict = (!all_certified).then(|| "uncertified persuaded pair".to_string());
    if !alpha.is_empty() {
        let r = build_r(&g, &p)?;
        let size = r.matrix().nrows();
        let alpha0: Vec<usize> = alpha
            .iter()
            .map(|&a| {
                if a == 0 || a > size {
                    Err(Failure::Input(format!("--alpha entry {a} is outside 1..={size}")))
                } else {
                    Ok(a - 1)
                }
            })
            .collect::<Result<_, _>>()?;
        let valid = r.valid_alpha(&alpha0);
        out["valid_alpha"] = json!(valid);
        if valid {
            let k = r.reduce(&alpha0)?;
            let rows: Vec<Vec<f64>> =
                k.reduced().row_iter().map(|row| row.iter().copied().collect()).collect();
            out["alpha"] = json!(one_based(k.alpha().iter().copied()));
            out["omega"] = json!(one_based(k.omega().iter().copied()));
            out["reduced"] = json!(rows);
            out["laplacian"] = json!(is_laplacian(k.reduced(), LAPLACIAN_TOL));
        } else {
            verdict = Some("alpha leaves eliminated nodes unreachable".into());
        }
    }
    Ok(Output { body: to_canonical_string(&out), verdict })
}

fn cmd_predict(io: &Io) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let c = predicted_clusters(&g, &p)?;
    Ok(json_output(json!({"predicted": one_based_blocks(c.blocks())})))
}

fn cmd_verify(io: &Io, trials: u64, seed: u64, tol: f64, certify: bool) -> Result<Output, Failure> {
    let (g, p) = load(&io.input)?;
    let classes = classify_agents(&g, &p)?;
    if let Convergence::PeriodicIscc(c) = convergence_of(&g, &classes)? {
        return Err(Error::PeriodicIscc(c).into());
    }
    let report = analyze(&g, &classes)?;
    let predicted = predicted_from(&classes, &report)?;
    let x = steady_state(&g, &p)?;
    let empirical = empirical_clusters(x.x_star(), tol)?;
    let refines = verify_refinement(&predicted, &empirical)?.refines();
    let opts = TrialOptions { grouping_tol: tol, certify };
    let t = robustness_trials(&g, &p.stubborn(), trials as usize, seed, &opts)?;
    let mut out = json!({
        "predicted": one_based_blocks(predicted.blocks()),
        "empirical": one_based_blocks(empirical.blocks()),
        "refines": refines,
        "trials": {"passed": t.passed, "total": t.total},
    });
    let mut verdict = (!refines).then(|| "predicted clusters do not refine the steady state".to_string());
    if let Some(c) = &t.counterexample {
        out["counterexample"] =
            json!({"trial": c.trial, "reason": c.reason, "graph": graph_to_json(&c.graph, &c.profile)});
        verdict = Some(format!("trial {} failed: {}", c.trial, c.reason));
    }
    Ok(Output { body: to_canonical_string(&out), verdict })
}

fn cmd_design(input: &Path, seed: u64) -> Result<Output, Failure> {
    let spec = parse_design(&read(input)?, seed).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let g = synthesize(&spec).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let v = validate_design(&g, &spec)?;
    Ok(Output { body: to_canonical_string(&graph_to_json(&g, &spec.profile())), verdict: v.discrepancy })
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (result, output) = match &cli.command {
        Command::Analyze(io) => (cmd_analyze(io), io.output.as_deref()),
        Command::Simulate { io, tol, max_iter } => (cmd_simulate(io, *tol, *max_iter), io.output.as_deref()),
        Command::SteadyState { io, method, tol } => (cmd_steady(io, *method, *tol), io.output.as_deref()),
        Command::Ltp { io, dot } => (cmd_ltp(io, dot.as_deref()), io.output.as_deref()),
        Command::Kron { io, alpha } => (cmd_kron(io, alpha), io.output.as_deref()),
        Command::Predict(io) => (cmd_predict(io), io.output.as_deref()),
        Command::Verify { io, trials, seed, tol, certify } => {
            (cmd_verify(io, *trials, *seed, *tol, *certify), io.output.as_deref())
        }
        Command::Design { input, output, seed } => (cmd_design(input, *seed), output.as_deref()),
    };
    match result {
        Ok(out) => {
            let written = match output {
                Some(path) => std::fs::write(path, &out.body).map_err(|e| format!("{}: {e}", path.display())),
                None => stdout.write_all(out.body.as_bytes()).map_err(|e| e.to_string()),
            };
            if let Err(e) = written {
                let _ = writeln!(stderr, "error: {e}");
                return EXIT_INPUT;
            }
            match out.verdict {
                Some(v) => {
                    let _ = writeln!(stderr, "verdict: {v}");
                    EXIT_VERDICT
                }
                None => EXIT_OK,
            }
        }
        Err(Failure::Verdict(v)) => {
            let _ = writeln!(stderr, "verdict: {v}");
            EXIT_VERDICT
        }
        Err(Failure::Input(e)) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}
