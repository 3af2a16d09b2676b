//! Reproducible experiments: worst-case and exact rate tables, the random-graph
//! sweep, and filter response curves.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::filter::{design_periodic, response_grid, write_response_csv, ControlSequence, Method};
use crate::format;
use crate::graph::GraphSpec;
use crate::rate::{exact_rate, exact_rate_on, worst_case_rate};
use crate::spectrum::{band_contains, distinct_nonzero_eigenvalues, spectrum, SpectralBand, DEFAULT_GROUP_TOL};

/// The band used by all the printed experiments.
pub fn default_band() -> SpectralBand {
    SpectralBand::new(0.2, 12.8).expect("valid constant band")
}

/// Periods of the printed tables.
pub const TABLE_PERIODS: [usize; 4] = [2, 3, 4, 5];

/// Band-based methods compared throughout, in table row order.
pub const TABLE_METHODS: [Method; 3] = [Method::Lagrange, Method::Chebyshev, Method::Constant];

/// Environment variable capping sweep parallelism.
pub const THREADS_ENV: &str = "SPECCON_THREADS";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Parameters shared by the experiment commands.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub band: SpectralBand,
    pub periods: Vec<usize>,
    pub methods: Vec<Method>,
    /// Graph families; for the sweep the first entry is the random model.
    #[serde(serialize_with = "serialize_specs")]
    pub graphs: Vec<GraphSpec>,
    pub trials: usize,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub format: OutputFormat,
}

fn serialize_specs<S: serde::Serializer>(specs: &[GraphSpec], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(specs.iter().map(|g| g.to_string()))
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            band: default_band(),
            periods: TABLE_PERIODS.to_vec(),
            methods: TABLE_METHODS.to_vec(),
            graphs: vec![DEFAULT_SWEEP_GRAPH],
            trials: 80,
            seed: 2024,
            output_dir: None,
            format: OutputFormat::Csv,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.periods.is_empty() || self.periods.contains(&0) {
            return param_err("periods must be a non-empty list of positive integers");
        }
        if self.trials == 0 {
            return param_err("trials must be at least 1");
        }
        if self.methods.is_empty() {
            return param_err("at least one method is required");
        }
        if let Some(m) = self.methods.iter().find(|m| !TABLE_METHODS.contains(m)) {
            return param_err(format!("method {m} is not a band design"));
        }
        for g in &self.graphs {
            g.validate()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Worst-case table

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseTable {
    pub periods: Vec<usize>,
    /// One row per method, one `γ_M` per period.
    pub rows: Vec<(Method, Vec<f64>)>,
}

/// `γ_M` for each method and period, by numerical maximization over the band.
pub fn worst_case_table(band: SpectralBand, periods: &[usize], methods: &[Method]) -> Result<WorstCaseTable> {
    let rows = methods
        .iter()
        .map(|&method| {
            let values = periods
                .iter()
                .map(|&m| Ok(worst_case_rate(&design_periodic(method, band, m)?, band)))
                .collect::<Result<Vec<f64>>>()?;
            Ok((method, values))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WorstCaseTable { periods: periods.to_vec(), rows })
}

impl WorstCaseTable {
    pub fn get(&self, method: Method, period: usize) -> Option<f64> {
        let col = self.periods.iter().position(|&m| m == period)?;
        self.rows.iter().find(|(m, _)| *m == method).map(|(_, v)| v[col])
    }

    /// `method,M=2,M=3,...` with cells rounded to four decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["method".to_string()];
        header.extend(self.periods.iter().map(|m| format!("M={m}")));
        w.write_record(&header)?;
        for (method, values) in &self.rows {
            let mut row = vec![method.label().to_string()];
            row.extend(values.iter().map(|v| format::fixed(*v, 4)));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|(method, values)| serde_json::json!({ "method": method, "periods": self.periods, "gamma": values }))
            .collect();
        serde_json::Value::Array(rows)
    }
}

// ---------------------------------------------------------------------------
// Exact-rate table

/// A graph entering the exact-rate table, reduced to its nonzero eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSource {
    pub name: String,
    pub eigenvalues: Vec<f64>,
}

impl SpectrumSource {
    pub fn from_family(name: &str, spec: GraphSpec, seed: u64) -> Result<Self> {
        let s = spectrum(&spec.build(seed)?)?;
        Ok(Self { name: name.to_string(), eigenvalues: s.nonzero(DEFAULT_GROUP_TOL)?.to_vec() })
    }
}

const SMALL_WORLD_DATA: &str = include_str!("../data/small_world_g3.csv");

/// Nonzero Laplacian eigenvalues of the 12-agent small-world example, which
/// is only available as its printed spectrum.
pub fn small_world_eigenvalues() -> Vec<f64> {
    let mut reader = csv::Reader::from_reader(SMALL_WORLD_DATA.as_bytes());
    reader.records().map(|r| r.expect("bundled data is valid")[0].parse().expect("bundled data is numeric")).collect()
}

/// The four graphs of the exact-rate table: star(12), cycle(12), the small-world
/// spectrum, and path(6).
pub fn table3_sources() -> Result<Vec<SpectrumSource>> {
    Ok(vec![
        SpectrumSource::from_family("star", GraphSpec::Star { n: 12 }, 0)?,
        SpectrumSource::from_family("cycle", GraphSpec::Cycle { n: 12 }, 0)?,
        SpectrumSource { name: "small_world".into(), eigenvalues: small_world_eigenvalues() },
        SpectrumSource::from_family("path", GraphSpec::Path { n: 6 }, 0)?,
    ])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactRateCell {
    pub graph: String,
    pub method: Method,
    #[serde(rename = "M")]
    pub period: usize,
    pub rho: f64,
}

pub fn exact_rate_table(
    band: SpectralBand,
    periods: &[usize],
    methods: &[Method],
    sources: &[SpectrumSource],
) -> Result<Vec<ExactRateCell>> {
    let mut cells = Vec::new();
    for src in sources {
        for &method in methods {
            for &m in periods {
                let c = design_periodic(method, band, m)?;
                cells.push(ExactRateCell {
                    graph: src.name.clone(),
                    method,
                    period: m,
                    rho: exact_rate_on(&c, &src.eigenvalues).exact_rate,
                });
            }
        }
    }
    Ok(cells)
}

/// `graph,method,M,rho` with `rho` rounded to four decimals.
pub fn write_exact_rate_csv<W: Write>(out: W, cells: &[ExactRateCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["graph", "method", "M", "rho"])?;
    for c in cells {
        w.write_record([c.graph.clone(), c.method.label().into(), c.period.to_string(), format::fixed(c.rho, 4)])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Random-graph sweep

/// Random model used when the sweep is given no graph family.
pub const DEFAULT_SWEEP_GRAPH: GraphSpec = GraphSpec::RandomConnected { n: 100, p: 0.045 };

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub graph_id: usize,
    #[serde(rename = "M")]
    pub period: usize,
    pub lambda2: f64,
    pub lambda_max: f64,
    /// Factor applied to all weights so that `λ_N ≤ β`.
    pub weight_scale: f64,
    pub in_band: bool,
    /// `ρ_M` per method, in the order of the config's methods.
    pub rates: Vec<(Method, f64)>,
}

impl SweepRow {
    pub fn rate(&self, method: Method) -> Option<f64> {
        self.rates.iter().find(|(m, _)| *m == method).map(|r| r.1)
    }
}

/// Outcome of one sweep trial; failures are kept so the run can continue.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SweepOutcome {
    #[serde(rename = "ok")]
    Row(SweepRow),
    Failed {
        graph_id: usize,
        reason: String,
    },
}

fn mix_seed(master: u64, id: u64) -> u64 {
    // splitmix64 finalizer over the master seed and trial index
    let mut z = master ^ id.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn sweep_trial(cfg: &ExperimentConfig, model: GraphSpec, id: usize) -> Result<Vec<SweepRow>> {
    let band = cfg.band;
    let mut g = model.build(mix_seed(cfg.seed, id as u64))?;
    let mut s = spectrum(&g)?;
    let mut weight_scale = 1.0;
    if s.lambda_max() > band.beta() {
        weight_scale = band.beta() / s.lambda_max();
        g = g.scaled(weight_scale)?;
        s = spectrum(&g)?;
    }
    let in_band = band_contains(&s, &band);
    cfg.periods
        .iter()
        .map(|&m| {
            let rates = cfg
                .methods
                .iter()
                .map(|&method| Ok((method, exact_rate(&design_periodic(method, band, m)?, &s)?.exact_rate)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepRow {
                graph_id: id,
                period: m,
                lambda2: s.lambda2(),
                lambda_max: s.lambda_max(),
                weight_scale,
                in_band,
                rates,
            })
        })
        .collect()
}

/// Runs `cfg.trials` seeded random graphs through every method and period.
///
/// Trials run in parallel (capped by `SPECCON_THREADS` when set); the output is
/// ordered by graph id.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepOutcome>> {
    cfg.validate()?;
    let model = *cfg.graphs.first().unwrap_or(&DEFAULT_SWEEP_GRAPH);
    if !model.is_random() {
        return param_err(format!("sweep needs a random graph model, got {model}"));
    }
    let threads = std::env::var(THREADS_ENV).ok().and_then(|v| v.parse::<usize>().ok()).unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))?;
    let per_trial: Vec<Vec<SweepOutcome>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|id| match sweep_trial(cfg, model, id) {
                Ok(rows) => rows.into_iter().map(SweepOutcome::Row).collect(),
                Err(e) => vec![SweepOutcome::Failed { graph_id: id, reason: e.to_string() }],
            })
            .collect()
    });
    Ok(per_trial.into_iter().flatten().collect())
}

/// `graph_id,M,lambda2,lambda_max,weight_scale,in_band,rho_<LABEL>...,error`.
pub fn write_sweep_csv<W: Write>(out: W, methods: &[Method], outcomes: &[SweepOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> =
        ["graph_id", "M", "lambda2", "lambda_max", "weight_scale", "in_band"].map(String::from).to_vec();
    header.extend(methods.iter().map(|m| format!("rho_{}", m.label())));
    header.push("error".into());
    w.write_record(&header)?;
    for outcome in outcomes {
        let row: Vec<String> = match outcome {
            SweepOutcome::Row(r) => {
                let mut row = vec![
                    r.graph_id.to_string(),
                    r.period.to_string(),
                    format::sig(r.lambda2, 6),
                    format::sig(r.lambda_max, 6),
                    format::sig(r.weight_scale, 6),
                    r.in_band.to_string(),
                ];
                row.extend(methods.iter().map(|m| r.rate(*m).map(|v| format::sig(v, 6)).unwrap_or_default()));
                row.push(String::new());
                row
            }
            SweepOutcome::Failed { graph_id, reason } => {
                let mut row = vec![graph_id.to_string()];
                row.extend(std::iter::repeat_n(String::new(), 5 + methods.len()));
                row.push(reason.clone());
                row
            }
        };
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Filter responses

/// Designs one sequence per method and writes `h(λ, M)` on `[0, 1.05 β]`.
pub fn write_response<W: Write>(
    out: W,
    band: SpectralBand,
    methods: &[Method],
    period: usize,
    samples: usize,
) -> Result<()> {
    let sequences = methods
        .iter()
        .map(|&m| Ok((m.as_str().to_string(), design_periodic(m, band, period)?)))
        .collect::<Result<Vec<(String, ControlSequence)>>>()?;
    let columns: Vec<(String, &ControlSequence)> = sequences.iter().map(|(n, c)| (n.clone(), c)).collect();
    write_response_csv(out, &response_grid(band.beta(), samples)?, &columns)
}

/// Finite-time sequence for a graph: one gain per distinct nonzero eigenvalue.
pub fn finite_time_for(spec: GraphSpec, seed: u64) -> Result<ControlSequence> {
    let s = spectrum(&spec.build(seed)?)?;
    crate::filter::design_finite_time(&distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL)?)
}
