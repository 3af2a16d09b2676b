use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use speccon::chebyshev::{closed_rate_chebyshev, closed_rate_constant, closed_rate_lagrange};
use speccon::experiments::{
    default_band, exact_rate_table, sweep, table3_sources, worst_case_table, write_exact_rate_csv, write_response,
    write_sweep_csv, ExperimentConfig, OutputFormat, SpectrumSource, SweepOutcome, DEFAULT_SWEEP_GRAPH,
};
use speccon::filter::{design_finite_time, design_periodic, response_grid};
use speccon::format::sig;
use speccon::rate::exact_rate;
use speccon::sim::{consensus_time, measured_period_ratio, simulate, uniform_initial_state};
use speccon::spectrum::{distinct_nonzero_eigenvalues, spectrum, DEFAULT_GROUP_TOL};
use speccon::{ControlSequence, Graph, GraphSpec, Method, SpectralBand};

#[derive(Parser)]
#[command(name = "speccon", version, about = "Design and evaluate periodic consensus filters on graphs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed for graph generation and initial states.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write output files here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Spectral band `alpha,beta` the designs target.
    #[arg(long, global = true, default_value_t = default_band())]
    band: SpectralBand,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Design a control sequence and print it as JSON.
    Design {
        #[arg(long)]
        method: Method,
        #[arg(short = 'M', long = "period")]
        period: Option<usize>,
        /// Graph for finite-time designs.
        #[arg(long)]
        graph: Option<GraphSpec>,
    },
    /// Worst-case rates over the band for each method and period.
    Table2 {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        periods: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "lagrange,chebyshev,constant")]
        methods: Vec<Method>,
    },
    /// Exact rates on specific graphs.
    Table3 {
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
        periods: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "lagrange,chebyshev,constant")]
        methods: Vec<Method>,
        /// Graphs to evaluate; defaults to star, cycle, the bundled small-world spectrum and path.
        #[arg(long)]
        graph: Vec<GraphSpec>,
    },
    /// Exact rates over seeded random graphs.
    Sweep {
        #[arg(long, default_value_t = 80)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SWEEP_GRAPH)]
        graph: GraphSpec,
        #[arg(short = 'M', long = "periods", value_delimiter = ',', default_value = "5")]
        periods: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "lagrange,chebyshev,constant")]
        methods: Vec<Method>,
    },
    /// Filter responses h(λ, M) on a uniform grid for plotting.
    Response {
        #[arg(short = 'M', long = "period", default_value_t = 3)]
        period: usize,
        #[arg(long, value_delimiter = ',', default_value = "lagrange,chebyshev,constant")]
        methods: Vec<Method>,
        #[arg(long, default_value_t = 513)]
        samples: usize,
    },
    /// Run the iteration on a graph and summarize its convergence.
    Simulate(SimulateArgs),
    /// Generate or inspect graphs.
    Graph {
        #[command(subcommand)]
        action: GraphAction,
    },
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, conflicts_with = "graph_file", required_unless_present = "graph_file")]
    graph: Option<GraphSpec>,
    #[arg(long)]
    graph_file: Option<PathBuf>,
    #[arg(long, conflicts_with = "sequence", required_unless_present = "sequence")]
    method: Option<Method>,
    /// Control sequence JSON file.
    #[arg(long)]
    sequence: Option<PathBuf>,
    #[arg(short = 'M', long = "period")]
    period: Option<usize>,
    /// `uniform`, `worst` or a path to a file of initial values.
    #[arg(long, default_value = "uniform")]
    x0: InitialState,
    #[arg(short = 'T', long = "steps", default_value_t = 30)]
    steps: usize,
    /// Relative tolerance for the consensus time.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Leave per-agent states out of the trace.
    #[arg(long)]
    no_states: bool,
}

#[derive(Subcommand)]
enum GraphAction {
    /// Print a graph as JSON.
    Generate {
        #[arg(long)]
        graph: GraphSpec,
    },
    /// Report connectivity and the Laplacian spectrum.
    Inspect {
        #[arg(long, conflicts_with = "graph_file", required_unless_present = "graph_file")]
        graph: Option<GraphSpec>,
        #[arg(long)]
        graph_file: Option<PathBuf>,
    },
}

#[derive(Clone)]
enum InitialState {
    Uniform,
    Worst,
    File(PathBuf),
}

impl FromStr for InitialState {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "uniform" => InitialState::Uniform,
            "worst" | "worst_eigenvector" => InitialState::Worst,
            path => InitialState::File(PathBuf::from(path)),
        })
    }
}

/// Sends one artifact to `--out/<name>` or to standard output.
fn emit(global: &Global, name: &str, bytes: &[u8]) -> Result<()> {
    match &global.out {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        None => std::io::stdout().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes(v: &impl serde::Serialize) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(v)?;
    out.push(b'\n');
    Ok(out)
}

fn closed_form_gamma(method: Method, band: SpectralBand, m: usize) -> Option<f64> {
    match method {
        Method::Lagrange => closed_rate_lagrange(band, m).ok(),
        Method::Chebyshev => closed_rate_chebyshev(band, m).ok(),
        Method::Constant => closed_rate_constant(band, m).ok(),
        _ => None,
    }
}

fn finite_time_sequence(g: &Graph) -> Result<ControlSequence> {
    let s = spectrum(g)?;
    Ok(design_finite_time(&distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL)?)?)
}

fn design_for(
    method: Method,
    band: SpectralBand,
    period: Option<usize>,
    graph: Option<&Graph>,
) -> Result<ControlSequence> {
    match method {
        Method::FiniteTime => finite_time_sequence(graph.ok_or_else(|| anyhow!("finite_time needs a graph"))?),
        Method::Custom => bail!("custom sequences are read from a file, not designed"),
        _ => {
            let m = period.ok_or_else(|| anyhow!("{method} needs a period (-M)"))?;
            Ok(design_periodic(method, band, m)?)
        }
    }
}

fn cmd_design(global: &Global, method: Method, period: Option<usize>, graph: Option<GraphSpec>) -> Result<()> {
    let g = graph.map(|spec| spec.build(global.seed)).transpose()?;
    let c = design_for(method, global.band, period, g.as_ref())?;
    let roots = c.roots();
    let gamma = closed_form_gamma(method, global.band, c.period());

    let mut doc = serde_json::to_value(&c)?;
    doc["roots"] = json!(roots.as_slice());
    doc["gamma"] = json!(gamma);
    emit(global, "design.json", &json_bytes(&doc)?)?;

    let shown: Vec<String> = roots.as_slice().iter().map(|r| sig(*r, 5)).collect();
    eprintln!("roots: {}", shown.join(", "));
    if let Some(gamma) = gamma {
        eprintln!("gamma: {gamma:.4}");
    }
    Ok(())
}

fn cmd_table2(global: &Global, periods: &[usize], methods: &[Method]) -> Result<()> {
    let cfg = ExperimentConfig {
        band: global.band,
        periods: periods.to_vec(),
        methods: methods.to_vec(),
        ..Default::default()
    };
    cfg.validate()?;
    let table = worst_case_table(global.band, periods, methods)?;
    let bytes = match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes(&table.to_json())?,
    };
    emit(global, &format!("table2.{}", global.format.ext()), &bytes)
}

fn cmd_table3(global: &Global, periods: &[usize], methods: &[Method], graphs: &[GraphSpec]) -> Result<()> {
    let cfg = ExperimentConfig {
        band: global.band,
        periods: periods.to_vec(),
        methods: methods.to_vec(),
        ..Default::default()
    };
    cfg.validate()?;
    let sources = if graphs.is_empty() {
        table3_sources()?
    } else {
        graphs
            .iter()
            .map(|spec| SpectrumSource::from_family(&spec.to_string(), *spec, global.seed))
            .collect::<speccon::Result<_>>()?
    };
    let cells = exact_rate_table(global.band, periods, methods, &sources)?;
    let bytes = match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_exact_rate_csv(&mut buf, &cells)?;
            buf
        }
        Format::Json => json_bytes(&cells)?,
    };
    emit(global, &format!("table3.{}", global.format.ext()), &bytes)
}

/// Returns the number of failed trials.
fn cmd_sweep(global: &Global, trials: usize, graph: GraphSpec, periods: &[usize], methods: &[Method]) -> Result<usize> {
    let cfg = ExperimentConfig {
        band: global.band,
        periods: periods.to_vec(),
        methods: methods.to_vec(),
        graphs: vec![graph],
        trials,
        seed: global.seed,
        output_dir: global.out.clone(),
        format: match global.format {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        },
    };
    let outcomes = sweep(&cfg)?;
    let bytes = match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, methods, &outcomes)?;
            buf
        }
        Format::Json => json_bytes(&outcomes)?,
    };
    emit(global, &format!("sweep.{}", global.format.ext()), &bytes)?;

    let meta = json!({ "config": cfg, "threads_env": speccon::experiments::THREADS_ENV });
    if global.out.is_some() {
        emit(global, "sweep_meta.json", &json_bytes(&meta)?)?;
    } else {
        eprintln!("{}", serde_json::to_string(&meta)?);
    }

    let mut failed = 0;
    for o in &outcomes {
        if let SweepOutcome::Failed { graph_id, reason } = o {
            eprintln!("graph {graph_id}: {reason}");
            failed += 1;
        }
    }
    Ok(failed)
}

fn cmd_response(global: &Global, period: usize, methods: &[Method], samples: usize) -> Result<()> {
    let bytes = match global.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_response(&mut buf, global.band, methods, period, samples)?;
            buf
        }
        Format::Json => {
            let grid = response_grid(global.band.beta(), samples)?;
            let mut columns = serde_json::Map::new();
            for &m in methods {
                let c = design_periodic(m, global.band, period)?;
                columns.insert(m.as_str().into(), grid.iter().map(|&l| c.eval(l, period)).collect());
            }
            json_bytes(&json!({ "M": period, "lambda": grid, "h": columns }))?
        }
    };
    emit(global, &format!("response.{}", global.format.ext()), &bytes)
}

fn read_initial_state(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(v) = serde_json::from_str::<Vec<f64>>(&text) {
        return Ok(v);
    }
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("'{t}' in {} is not a number", path.display())))
        .collect()
}

fn load_graph(spec: Option<GraphSpec>, file: Option<&Path>, seed: u64) -> Result<(Graph, String)> {
    match (spec, file) {
        (Some(spec), _) => Ok((spec.build(seed)?, spec.to_string())),
        (None, Some(path)) => {
            let g = Graph::load(path).with_context(|| format!("loading {}", path.display()))?;
            Ok((g, path.display().to_string()))
        }
        (None, None) => bail!("a graph is required (--graph or --graph-file)"),
    }
}

fn cmd_simulate(global: &Global, args: &SimulateArgs) -> Result<()> {
    let (g, graph_name) = load_graph(args.graph, args.graph_file.as_deref(), global.seed)?;
    let c = match (&args.sequence, args.method) {
        (Some(path), _) => ControlSequence::load(path).with_context(|| format!("loading {}", path.display()))?,
        (None, Some(method)) => design_for(method, global.band, args.period, Some(&g))?,
        (None, None) => bail!("either --method or --sequence is required"),
    };
    let s = spectrum(&g)?;
    let report = exact_rate(&c, &s)?;
    let x0 = match &args.x0 {
        InitialState::Uniform => uniform_initial_state(g.n(), global.seed),
        InitialState::Worst => s.eigenvector(report.argmax_index),
        InitialState::File(path) => read_initial_state(path)?,
    };
    let trace = simulate(&g, &c, &x0, args.steps)?;
    let ratios = if args.steps >= 2 * c.period() { Some(measured_period_ratio(&trace, c.period())?) } else { None };

    let summary = json!({
        "graph": graph_name,
        "method": c.method(),
        "M": c.period(),
        "steps": args.steps,
        "average": trace.average,
        "final_error": trace.errors[args.steps],
        "consensus_time": consensus_time(&trace, args.tol),
        "tolerance": args.tol,
        "measured_ratios": ratios.as_ref().map(|r| &r.ratios),
        "measured_max_ratio": ratios.as_ref().and_then(|r| r.max()),
        "predicted_rho": report.exact_rate,
        "argmax_lambda": report.argmax_eigenvalue,
    });
    if global.out.is_some() {
        let mut buf = Vec::new();
        trace.write_csv(&mut buf, !args.no_states)?;
        emit(global, "trace.csv", &buf)?;
    }
    emit(global, "summary.json", &json_bytes(&summary)?)
}

fn cmd_graph(global: &Global, action: &GraphAction) -> Result<()> {
    match action {
        GraphAction::Generate { graph } => {
            let g = graph.build(global.seed)?;
            emit(global, "graph.json", &json_bytes(&g.to_json())?)
        }
        GraphAction::Inspect { graph, graph_file } => {
            let (g, name) = load_graph(*graph, graph_file.as_deref(), global.seed)?;
            let s = spectrum(&g)?;
            match global.format {
                Format::Csv => {
                    let mut buf = Vec::new();
                    s.write_csv(&mut buf)?;
                    emit(global, "spectrum.csv", &buf)
                }
                Format::Json => {
                    let doc = json!({
                        "graph": name,
                        "n": g.n(),
                        "edges": g.edges().len(),
                        "connected": g.is_connected(),
                        "max_degree": g.max_degree(),
                        "lambda2": s.lambda2(),
                        "lambda_max": s.lambda_max(),
                        "in_band": speccon::spectrum::band_contains(&s, &global.band),
                        "eigenvalues": s.eigenvalues(),
                    });
                    emit(global, "spectrum.json", &json_bytes(&doc)?)
                }
            }
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    match &cli.command {
        Command::Design { method, period, graph } => cmd_design(g, *method, *period, *graph)?,
        Command::Table2 { periods, methods } => cmd_table2(g, periods, methods)?,
        Command::Table3 { periods, methods, graph } => cmd_table3(g, periods, methods, graph)?,
        Command::Sweep { trials, graph, periods, methods } => {
            let failed = cmd_sweep(g, *trials, *graph, periods, methods)?;
            if failed > 0 {
                eprintln!("{failed} of {trials} trials failed");
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Response { period, methods, samples } => cmd_response(g, *period, methods, *samples)?,
        Command::Simulate(args) => cmd_simulate(g, args)?,
        Command::Graph { action } => cmd_graph(g, action)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
