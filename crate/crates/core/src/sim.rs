//! Discrete-time simulation of `x_i(k+1) = x_i(k) + ε(k) Σ_j a_ij (x_j(k) − x_i(k))`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Result};
use crate::filter::ControlSequence;
use crate::format;
use crate::graph::Graph;

/// Absolute floor applied to the consensus tolerance.
pub const CONSENSUS_FLOOR: f64 = 1e-12;

/// Relative error below which period ratios are no longer reported: past this
/// point floating-point cancellation in the states, not the filter, sets the ratio.
pub const VANISHED_ERROR: f64 = 1e-7;

/// One consensus step, computed from neighbor sums.
pub fn step(x: &[f64], g: &Graph, eps: f64) -> Result<Vec<f64>> {
    if x.len() != g.n() {
        return param_err(format!("state has {} entries, graph has {} vertices", x.len(), g.n()));
    }
    if !(eps.is_finite() && eps > 0.0) {
        return param_err(format!("gain must be positive, got {eps}"));
    }
    Ok(step_unchecked(x, g, eps))
}

fn step_unchecked(x: &[f64], g: &Graph, eps: f64) -> Vec<f64> {
    (0..g.n())
        .map(|i| {
            let flow: f64 = g.neighbors(i).iter().map(|&(j, w)| w * (x[j] - x[i])).sum();
            x[i] + eps * flow
        })
        .collect()
}

/// States and consensus errors of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationTrace {
    pub states: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub average: f64,
}

impl SimulationTrace {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trace holds x(0)")
    }

    /// `errors[k] / errors[0]`, or 0 when the run started at consensus.
    pub fn relative_error(&self, k: usize) -> f64 {
        if self.errors[0] == 0.0 {
            0.0
        } else {
            self.errors[k] / self.errors[0]
        }
    }

    /// Writes `k,err[,x_0,...,x_{n-1}]` rows.
    pub fn write_csv<W: Write>(&self, out: W, include_states: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k".to_string(), "err".to_string()];
        if include_states {
            let n = self.states[0].len();
            header.extend((0..n).map(|i| format!("x_{i}")));
        }
        w.write_record(&header)?;
        for (k, (x, e)) in self.states.iter().zip(&self.errors).enumerate() {
            let mut row = vec![k.to_string(), format::sig(*e, 6)];
            if include_states {
                row.extend(x.iter().map(|v| format::sig(*v, 6)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn distance_to_consensus(x: &[f64], average: f64) -> f64 {
    x.iter().map(|v| (v - average).powi(2)).sum::<f64>().sqrt()
}

/// Runs `T` steps from `x0` under the periodic sequence `c`.
pub fn simulate(g: &Graph, c: &ControlSequence, x0: &[f64], steps: usize) -> Result<SimulationTrace> {
    if x0.len() != g.n() {
        return param_err(format!("initial state has {} entries, graph has {} vertices", x0.len(), g.n()));
    }
    let average = x0.iter().sum::<f64>() / x0.len() as f64;
    let mut states = Vec::with_capacity(steps + 1);
    let mut errors = Vec::with_capacity(steps + 1);
    let mut x = x0.to_vec();
    errors.push(distance_to_consensus(&x, average));
    states.push(x.clone());
    for k in 0..steps {
        x = step_unchecked(&x, g, c.gain_at(k));
        errors.push(distance_to_consensus(&x, average));
        states.push(x.clone());
    }
    Ok(SimulationTrace { states, errors, average })
}

/// Per-period contraction ratios `errors[(j+1)M] / errors[jM]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRatios {
    pub ratios: Vec<f64>,
    /// Set when later periods were omitted because the error had vanished.
    pub vanished: bool,
}

impl PeriodRatios {
    pub fn max(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::max)
    }
}

pub fn measured_period_ratio(trace: &SimulationTrace, period: usize) -> Result<PeriodRatios> {
    if period == 0 {
        return param_err("period must be at least 1");
    }
    if trace.errors.len() < 2 * period {
        return param_err(format!("trace of {} samples is shorter than two periods of {period}", trace.errors.len()));
    }
    let mut ratios = Vec::new();
    let mut vanished = false;
    let mut j = 0;
    while (j + 1) * period < trace.errors.len() {
        let base = trace.errors[j * period];
        if base <= VANISHED_ERROR * trace.errors[0].max(1.0) {
            vanished = true;
            break;
        }
        ratios.push(trace.errors[(j + 1) * period] / base);
        j += 1;
    }
    Ok(PeriodRatios { ratios, vanished })
}

/// First `k` from which every error stays below `tol · max(1, errors[0])`
/// (floored at [`CONSENSUS_FLOOR`]).
pub fn consensus_time(trace: &SimulationTrace, tol: f64) -> Option<usize> {
    let threshold = (tol * trace.errors[0].max(1.0)).max(CONSENSUS_FLOOR);
    let mut first = None;
    for (k, &e) in trace.errors.iter().enumerate().rev() {
        if e <= threshold {
            first = Some(k);
        } else {
            break;
        }
    }
    first
}

/// Initial states uniform on `[0, 10]`, deterministic in `seed`.
pub fn uniform_initial_state(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0.0..10.0)).collect()
}
