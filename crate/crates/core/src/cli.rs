//! The `gpm` command line: `build`, `solve` and `export` on model files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::certify::{msol, CertifyParams, MsolResult};
use crate::conic::{presolve_eliminate_equalities, to_conic, write_json, write_sdpa, SolveStatus, SolverParams};
use crate::dsl::{parse_model, ParsedModel};
use crate::error::Error;
use crate::model::{Label, ModelContext};
use crate::relaxation::{assemble, AssemblyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_ASSEMBLY: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "gpm", version, about = "Moment relaxations of polynomial measure problems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Assemble the relaxation and print the build log.
    Build {
        file: PathBuf,
        /// Relaxation order; overrides `order` in the file.
        #[arg(long)]
        order: Option<usize>,
    },
    /// Assemble, solve and certify.
    Solve {
        file: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        /// Solver tolerance (default: GPM_EPS or 1e-9).
        #[arg(long)]
        eps: Option<f64>,
        /// Also write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Print solver iterations to stderr.
        #[arg(long, short)]
        verbose: bool,
    },
    /// Write the conic problem to a file.
    Export {
        file: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(short = 'o', long = "output")]
        output: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        /// Keep equality rows as free variables (SDPA output then fails).
        #[arg(long)]
        no_presolve: bool,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Sdpa,
    Json,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverStats {
    pub status: SolveStatus,
    pub iterations: usize,
    pub seconds: f64,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MomentValue {
    pub monomial: String,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureReport {
    pub label: Label,
    pub name: Option<String>,
    pub variables: Vec<String>,
    pub flat: bool,
    pub rank: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub moments: Vec<MomentValue>,
}

/// Everything `gpm solve` reports.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub assembly: AssemblyReport,
    pub presolved_variables: usize,
    pub solver: SolverStats,
    pub status: i32,
    pub objective: f64,
    pub measures: Vec<MeasureReport>,
}

impl RunReport {
    pub fn new(res: &MsolResult, ctx: &ModelContext, names: &HashMap<String, Label>) -> RunReport {
        let sol = &res.solution;
        let measures = res
            .sdp
            .measures
            .iter()
            .map(|idx| {
                let flat = res.flatness.iter().find(|f| f.measure == idx.label);
                let ext = res.extraction.iter().find(|e| e.measure == idx.label);
                MeasureReport {
                    label: idx.label,
                    name: names.iter().find(|(_, &l)| l == idx.label).map(|(n, _)| n.clone()),
                    variables: idx.vars.iter().map(|v| ctx.var_name(*v)).collect(),
                    flat: flat.is_some_and(|f| f.flat),
                    rank: flat.map_or(0, |f| f.rank),
                    points: ext.map_or_else(Vec::new, |e| e.points.clone()),
                    weights: ext.map_or_else(Vec::new, |e| e.weights.clone()),
                    moments: res
                        .moment_vector(idx.label)
                        .unwrap_or_default()
                        .into_iter()
                        .map(|(m, value)| MomentValue {
                            monomial: ctx.fmt_monomial(&m),
                            value,
                        })
                        .collect(),
                }
            })
            .collect();
        RunReport {
            assembly: res.sdp.report.clone(),
            presolved_variables: res.presolved_variables,
            solver: SolverStats {
                status: sol.status,
                iterations: sol.iterations,
                seconds: sol.seconds,
                primal_objective: sol.primal_obj,
                dual_objective: sol.dual_obj,
                primal_infeasibility: sol.pinf,
                dual_infeasibility: sol.dinf,
                gap: sol.gap,
            },
            status: res.status,
            objective: res.objective,
            measures,
        }
    }

    /// Human-readable report, numbers to four decimals.
    pub fn text(&self) -> String {
        let mut out = self.assembly.to_string();
        let s = &self.solver;
        writeln!(out, "Presolved decision variables = {}", self.presolved_variables).unwrap();
        writeln!(
            out,
            "Solver: {:?}, {} iterations, {:.4} s, residuals {:.4e}/{:.4e}, gap {:.4e}",
            s.status, s.iterations, s.seconds, s.primal_infeasibility, s.dual_infeasibility, s.gap
        )
        .unwrap();
        writeln!(out, "status = {}", self.status).unwrap();
        writeln!(out, "obj = {:.4}", self.objective).unwrap();
        let four = |v: &[f64]| v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(", ");
        for m in &self.measures {
            let name = m.name.as_ref().map_or(String::new(), |n| format!(" {n}"));
            writeln!(out, "Measure #{}{name} on ({})", m.label, m.variables.join(", ")).unwrap();
            for (p, w) in m.points.iter().zip(&m.weights) {
                writeln!(out, "  point ({})  weight {w:.4}", four(p)).unwrap();
            }
            let shown: Vec<String> = m
                .moments
                .iter()
                .take(10)
                .map(|mv| format!("{}={:.4}", mv.monomial, mv.value))
                .collect();
            let more = if m.moments.len() > 10 { format!(" ... ({} total)", m.moments.len()) } else { String::new() };
            writeln!(out, "  moments {}{more}", shown.join(" ")).unwrap();
        }
        out
    }
}

fn exit_code(e: &Error, parsing: bool) -> i32 {
    match e {
        Error::Io(_) => EXIT_OTHER,
        _ if parsing => EXIT_PARSE,
        _ => EXIT_ASSEMBLY,
    }
}

fn load(path: &Path) -> Result<ParsedModel, (i32, String)> {
    let text = std::fs::read_to_string(path).map_err(|e| (EXIT_OTHER, format!("{}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| (exit_code(&e, true), format!("{}:{e}", path.display())))
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32, (i32, String)> {
    let assembly = |e: Error| (exit_code(&e, false), e.to_string());
    match cli.command {
        Command::Build { file, order } => {
            let pm = load(&file)?;
            let sdp = assemble(&pm.problem, order.or(pm.order)).map_err(assembly)?;
            print!("{}", sdp.report.log());
            Ok(EXIT_OK)
        }
        Command::Solve { file, order, eps, json, verbose } => {
            let mut pm = load(&file)?;
            let mut params = SolverParams::from_env();
            if let Some(e) = eps {
                params.eps = e;
            }
            params.verbose = verbose;
            let order = order.or(pm.order);
            let res = msol(&mut pm.problem, order, &params, &CertifyParams::default()).map_err(assembly)?;
            let report = RunReport::new(&res, pm.problem.ctx(), &pm.measures);
            print!("{}", report.text());
            if let Some(path) = json {
                let text = serde_json::to_string_pretty(&report).map_err(|e| (EXIT_OTHER, e.to_string()))?;
                std::fs::write(&path, text).map_err(|e| (EXIT_OTHER, format!("{}: {e}", path.display())))?;
            }
            Ok(if res.status == -1 { EXIT_SOLVER } else { EXIT_OK })
        }
        Command::Export { file, format, output, order, no_presolve } => {
            let pm = load(&file)?;
            let sdp = assemble(&pm.problem, order.or(pm.order)).map_err(assembly)?;
            let mut cp = to_conic(&sdp);
            if format == Format::Sdpa && !no_presolve && cp.cone.f > 0 {
                cp = presolve_eliminate_equalities(&cp)
                    .ok_or((EXIT_ASSEMBLY, "equality constraints are inconsistent".to_string()))?
                    .problem;
            }
            let written = match format {
                Format::Sdpa => write_sdpa(&cp, &output),
                Format::Json => write_json(&cp, &output),
            };
            written.map_err(|e| (exit_code(&e, false), e.to_string()))?;
            println!(
                "wrote {} ({} variables, {} free, {} nonnegative, blocks {:?})",
                output.display(),
                cp.m(),
                cp.cone.f,
                cp.cone.l,
                cp.cone.s
            );
            Ok(EXIT_OK)
        }
    }
}

/// Entry point of the `gpm` binary.
pub fn main() -> i32 {
    run(Cli::parse())
}
