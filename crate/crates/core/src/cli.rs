//! `spcov` command-line front end.
//!
//! Exit codes: 0 on success, 2 on usage errors, 1 on runtime errors
//! (non-PSD instance, disconnected graph, I/O). JSON output has sorted keys;
//! all randomness comes from `--seed`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use serde::Serialize;

use crate::bench::{lower_bound_report, run_sweep, RulerMode, SweepConfig};
use crate::error::Error;
use crate::estimator::{EstimatorConfig, EstimatorMode, RulerPipeline};
use crate::fmt::to_sorted_json;
use crate::graph::{all_pairs_shortest_paths, graph_sparse_ruler, make_graph, Graph, GraphSpec};
use crate::linalg::spectral_norm;
use crate::ruler::ruler_prop31;
use crate::spcov::{make_psd_instance, CovVector, SpCovInstance};
use crate::toeplitz::{self, circulant_spectral_bound, le_certificate, ToeplitzVec};

#[derive(Debug, Parser)]
#[command(
    name = "spcov",
    version,
    about = "Shortest-path covariance estimation with graph sparse rulers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
#[command(group(ArgGroup::new("graph_source").required(true).args(["graph", "graph_file"])))]
pub struct GraphArgs {
    /// Graph family: path:D, cycle:D, star:BRANCHES,DEPTH, grid:ROWS,COLS, complete:D
    #[arg(long, value_parser = parse_graph_spec)]
    pub graph: Option<GraphSpec>,
    /// Graph JSON file
    #[arg(long)]
    pub graph_file: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the two-block sparse ruler for diameter D.
    Ruler {
        #[arg(long = "D")]
        diameter: usize,
    },
    /// Place the sparse ruler along a diameter path of a graph.
    GraphRuler {
        #[command(flatten)]
        graph: GraphArgs,
    },
    /// Build a PSD shortest-path covariance instance.
    #[command(group(ArgGroup::new("cov").required(true).args(["decay", "a"])))]
    MakeInstance {
        #[command(flatten)]
        graph: GraphArgs,
        /// Base covariance a_s = decay^s
        #[arg(long)]
        decay: Option<f64>,
        /// JSON array file with the base covariance vector a_0..a_D
        #[arg(long)]
        a: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the ruler estimator on one instance.
    Estimate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value = "single")]
        mode: EstimatorMode,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Target accuracy used for the kappa diagnostic
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
    },
    /// Sweep vector sample counts over many seeded trials.
    Sweep {
        #[arg(long)]
        instance: PathBuf,
        /// Comma-separated ascending sample counts
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        n: Vec<usize>,
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "single")]
        mode: EstimatorMode,
        #[arg(long, value_enum, default_value = "sparse")]
        ruler: RulerMode,
        /// CSV output; the aggregate JSON is written next to it
        #[arg(long)]
        out: PathBuf,
        /// Fill wall_ms with measured times (output is then not reproducible)
        #[arg(long)]
        record_timing: bool,
    },
    /// Circulant-embedding bound for a symmetric Toeplitz first row.
    ToeplitzBound {
        /// JSON array file with t_0..t_{d-1}
        #[arg(long)]
        a: PathBuf,
    },
    /// KL / Pinsker diagnostics for I versus I + (eps/d)J on s entries.
    LowerBound {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        n: u64,
    },
}

fn parse_graph_spec(s: &str) -> Result<GraphSpec, String> {
    let (kind, params) = s
        .split_once(':')
        .ok_or_else(|| format!("expected KIND:PARAMS, got {s:?}"))?;
    let nums: Vec<usize> = params
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    let spec = match (kind, nums.as_slice()) {
        ("path", [d]) => GraphSpec::path(*d),
        ("cycle", [d]) => GraphSpec::cycle(*d),
        ("complete", [d]) => GraphSpec::complete(*d),
        ("star", [l, depth]) => GraphSpec::star(*l, *depth),
        ("grid", [r, c]) => GraphSpec::grid(*r, *c),
        _ => return Err(format!("unknown graph {s:?}")),
    };
    // reject bad family parameters at parse time; connectivity is checked later
    make_graph(&spec).map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Failure of one command.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.into()))
}

fn load_graph(args: &GraphArgs) -> CliResult<Graph> {
    match (&args.graph, &args.graph_file) {
        (Some(spec), _) => Ok(make_graph(spec)?),
        (None, Some(path)) => read_json(path),
        (None, None) => Err(CliError::Usage(
            "--graph or --graph-file is required".into(),
        )),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    fs::write(path, to_sorted_json(value)?)?;
    Ok(())
}

#[derive(Serialize)]
struct GraphRulerOut {
    #[serde(rename = "D")]
    diameter: usize,
    nodes: Vec<usize>,
    positions: Vec<usize>,
    esc: usize,
    d: usize,
}

#[derive(Serialize)]
struct MakeInstanceOut {
    d: usize,
    #[serde(rename = "D")]
    diameter: usize,
    gamma: f64,
    gamma_steps: u32,
    psd: bool,
    min_eig: f64,
    stable_rank: f64,
}

#[derive(Serialize)]
struct ToeplitzOut {
    d: usize,
    toeplitz_bound: f64,
    spectral_norm: f64,
}

/// Runs one parsed command, returning the text for stdout.
pub fn execute(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Ruler { diameter } => Ok(to_sorted_json(&ruler_prop31(*diameter))?),

        Command::GraphRuler { graph } => {
            let g = load_graph(graph)?;
            let t = all_pairs_shortest_paths(&g)?;
            let gr = graph_sparse_ruler(&g, &t, &ruler_prop31(t.diameter()))?;
            Ok(to_sorted_json(&GraphRulerOut {
                diameter: gr.diameter,
                esc: gr.esc(),
                d: g.node_count(),
                nodes: gr.nodes,
                positions: gr.positions,
            })?)
        }

        Command::MakeInstance {
            graph,
            decay,
            a,
            out,
        } => {
            let g = load_graph(graph)?;
            let t = all_pairs_shortest_paths(&g)?;
            let base = match (decay, a) {
                (Some(rho), _) => CovVector::geometric(*rho, t.diameter()),
                (None, Some(path)) => CovVector(read_json(path)?),
                (None, None) => return Err(CliError::Usage("--decay or --a is required".into())),
            };
            if base.len() != t.diameter() + 1 {
                return Err(CliError::Usage(format!(
                    "covariance vector has {} entries but the graph diameter is {}",
                    base.len(),
                    t.diameter()
                )));
            }
            let made = make_psd_instance(&g, &base)?;
            let check = crate::spcov::validate_psd(&made.instance)?;
            write_json(out, &made.instance)?;
            Ok(to_sorted_json(&MakeInstanceOut {
                d: g.node_count(),
                diameter: t.diameter(),
                gamma: made.gamma(),
                gamma_steps: made.gamma_steps,
                psd: check.psd,
                min_eig: check.min_eig,
                stable_rank: crate::spcov::stable_rank(&made.instance)?,
            })?)
        }

        Command::Estimate {
            instance,
            n,
            mode,
            seed,
            out,
            eps,
        } => {
            if *n == 0 {
                return Err(CliError::Usage("--n must be >= 1".into()));
            }
            if !(*eps > 0.0) {
                return Err(CliError::Usage("--eps must be positive".into()));
            }
            let inst: SpCovInstance = read_json(instance)?;
            let ruler = ruler_prop31(inst.distances().diameter());
            let pipeline = RulerPipeline::new(inst.clone(), &ruler)?;
            let report = pipeline.run(&EstimatorConfig {
                mode: *mode,
                n: *n,
                seed: *seed,
                stream: 0,
            })?;
            let mut json = serde_json::to_value(&report).map_err(Error::from)?;
            if inst.distances().diameter() + 1 == inst.dim() {
                // Toeplitz instance: attach the frequency-domain diagnostics
                let a_hat = ToeplitzVec::new(report.a_hat.0.clone())?;
                let e = toeplitz::error_vector(inst.a().as_slice(), a_hat.as_slice())?;
                let k = toeplitz::kappa(&inst, &ruler, *eps)?;
                let obj = json.as_object_mut().expect("report is an object");
                obj.insert(
                    "toeplitz_bound".into(),
                    circulant_spectral_bound(&a_hat).into(),
                );
                obj.insert("le_certificate".into(), le_certificate(&e).into());
                obj.insert("kappa".into(), k.kappa.into());
            }
            write_json(out, &json)?;
            let m = report.metrics.expect("pipeline scores against the truth");
            Ok(format!(
                "esc {}\nvsc {}\nspectral_rel {}\n",
                report.esc, report.vsc, m.spectral_rel
            ))
        }

        Command::Sweep {
            instance,
            n,
            trials,
            seed,
            mode,
            ruler,
            out,
            record_timing,
        } => {
            if n.is_empty() || n.contains(&0) || n.windows(2).any(|w| w[0] >= w[1]) {
                return Err(CliError::Usage(
                    "--n must be ascending positive integers".into(),
                ));
            }
            if *trials == 0 {
                return Err(CliError::Usage("--trials must be >= 1".into()));
            }
            let inst: SpCovInstance = read_json(instance)?;
            let cfg = SweepConfig {
                ruler: *ruler,
                n_list: n.clone(),
                trials: *trials,
                seed: *seed,
                mode: *mode,
                record_timing: *record_timing,
            };
            let result = run_sweep(&inst, &cfg)?;
            let mut csv = Vec::new();
            result.write_csv(&mut csv)?;
            fs::write(out, csv)?;
            let agg = to_sorted_json(&result.aggregates)?;
            fs::write(out.with_extension("json"), &agg)?;
            Ok(agg)
        }

        Command::ToeplitzBound { a } => {
            let t = ToeplitzVec::new(read_json(a)?)?;
            Ok(to_sorted_json(&ToeplitzOut {
                d: t.dim(),
                toeplitz_bound: circulant_spectral_bound(&t),
                spectral_norm: spectral_norm(&t.to_matrix())?,
            })?)
        }

        Command::LowerBound { d, s, eps, n } => match lower_bound_report(*d, *s, *eps, *n) {
            Ok(r) => Ok(to_sorted_json(&r)?),
            Err(Error::InvalidArgument(msg)) => Err(CliError::Usage(msg)),
            Err(e) => Err(e.into()),
        },
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
