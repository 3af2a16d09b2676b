//! Laplacian spectra: the numerical eigendecomposition, closed forms for the
//! special families, eigenvalue grouping and uncertainty bands.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::format;
use crate::graph::{Graph, GraphSpec};

/// Default relative tolerance for treating two eigenvalues as equal.
pub const DEFAULT_GROUP_TOL: f64 = 1e-8;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Ascending Laplacian eigenvalues with orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct LaplacianSpectrum {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<f64>,
    max_degree: f64,
}

impl LaplacianSpectrum {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Column `i` pairs with `eigenvalues()[i]`.
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn eigenvector(&self, i: usize) -> Vec<f64> {
        self.eigenvectors.column(i).iter().copied().collect()
    }

    pub fn max_degree(&self) -> f64 {
        self.max_degree
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Algebraic connectivity λ₂ (0 for a single vertex).
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(0.0)
    }

    /// Spectral radius λ_N.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("spectrum is never empty")
    }

    /// Absolute grouping tolerance `group_tol · max(1, λ_N)`.
    pub fn abs_tol(&self, group_tol: f64) -> f64 {
        group_tol * self.lambda_max().max(1.0)
    }

    /// Fails with a connectivity error unless λ₂ exceeds the grouping tolerance.
    pub fn require_connected(&self, group_tol: f64) -> Result<()> {
        let tol = self.abs_tol(group_tol);
        if self.n() < 2 || self.lambda2() <= tol {
            return Err(Error::Connectivity(format!(
                "lambda_2 = {:e} does not exceed tolerance {:e}",
                self.lambda2(),
                tol
            )));
        }
        Ok(())
    }

    /// The nonzero eigenvalues `λ₂ … λ_N` with multiplicity.
    pub fn nonzero(&self, group_tol: f64) -> Result<&[f64]> {
        self.require_connected(group_tol)?;
        Ok(&self.eigenvalues[1..])
    }

    /// Writes `index,eigenvalue` rows in ascending order.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "eigenvalue"])?;
        for (i, &l) in self.eigenvalues.iter().enumerate() {
            w.write_record([i.to_string(), format::sig(l, 6)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Numerical eigendecomposition of the graph Laplacian.
///
/// Eigenvectors are sign-normalized so that their largest-magnitude entry is
/// positive, which makes the output deterministic.
pub fn spectrum(g: &Graph) -> Result<LaplacianSpectrum> {
    let l = g.laplacian();
    let n = g.n();
    let eig = SymmetricEigen::try_new(l, EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or_else(|| Error::Numerical(format!("symmetric eigensolver did not converge (n = {n})")))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    if eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("eigensolver produced non-finite eigenvalues".into()));
    }
    let mut eigenvectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let pivot = col.iter().copied().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        eigenvectors.set_column(dst, &(col * sign));
    }
    Ok(LaplacianSpectrum { eigenvalues, eigenvectors, max_degree: g.max_degree() })
}

/// Closed-form Laplacian spectrum of a special family as ascending
/// `(eigenvalue, multiplicity)` pairs.
pub fn analytic_spectrum(spec: GraphSpec) -> Result<Vec<(f64, usize)>> {
    spec.validate()?;
    let mut out: Vec<(f64, usize)> = match spec {
        GraphSpec::Complete { n } => vec![(0.0, 1), (n as f64, n - 1)],
        GraphSpec::CompleteBipartite { m, n } => {
            let mut pairs = vec![(0.0, 1), ((m + n) as f64, 1)];
            if m == n {
                pairs.push((m as f64, m + n - 2));
            } else {
                pairs.push((m as f64, n - 1));
                pairs.push((n as f64, m - 1));
            }
            pairs
        }
        // K_{1,N-1}: eigenvalue 1 with multiplicity N-2, and N.
        GraphSpec::Star { n } => vec![(0.0, 1), (1.0, n - 2), (n as f64, 1)],
        GraphSpec::Cycle { n } => (0..=n / 2)
            .map(|k| {
                let mult = if k == 0 || 2 * k == n { 1 } else { 2 };
                (2.0 - 2.0 * (2.0 * PI * k as f64 / n as f64).cos(), mult)
            })
            .collect(),
        GraphSpec::Path { n } => (0..n).map(|k| (2.0 - 2.0 * (PI * k as f64 / n as f64).cos(), 1)).collect(),
        GraphSpec::WattsStrogatz { .. } | GraphSpec::RandomConnected { .. } => {
            return param_err(format!("no closed-form spectrum for random family {spec}"));
        }
    };
    out.retain(|&(_, m)| m > 0);
    // cos(0) is exact, but cos(pi/2)-style terms are not; clamp the zero mode.
    out[0].0 = 0.0;
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

/// Expands `(eigenvalue, multiplicity)` pairs into an ascending list.
pub fn expand_multiplicities(pairs: &[(f64, usize)]) -> Vec<f64> {
    pairs.iter().flat_map(|&(v, m)| std::iter::repeat_n(v, m)).collect()
}

/// Groups the nonzero eigenvalues into ascending distinct values.
///
/// Consecutive eigenvalues closer than `group_tol · max(1, λ_N)` share a group,
/// represented by its mean.
pub fn distinct_nonzero_eigenvalues(s: &LaplacianSpectrum, group_tol: f64) -> Result<Vec<f64>> {
    let tol = s.abs_tol(group_tol);
    let nonzero = s.nonzero(group_tol)?;
    Ok(group_sorted(nonzero, tol))
}

pub(crate) fn group_sorted(values: &[f64], tol: f64) -> Vec<f64> {
    let mut groups: Vec<(f64, usize, f64)> = Vec::new(); // (sum, count, last)
    for &v in values {
        match groups.last_mut() {
            Some((sum, count, last)) if v - *last <= tol => {
                *sum += v;
                *count += 1;
                *last = v;
            }
            _ => groups.push((v, 1, v)),
        }
    }
    groups.into_iter().map(|(sum, count, _)| sum / count as f64).collect()
}

/// An uncertainty interval `[α, β]` assumed to contain `[λ₂, λ_N]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct SpectralBand {
    alpha: f64,
    beta: f64,
}

impl SpectralBand {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha <= 0.0 || beta < alpha {
            return param_err(format!("band [{alpha}, {beta}] must satisfy 0 < alpha <= beta"));
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == self.beta
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn contains(&self, lambda: f64) -> bool {
        lambda >= self.alpha && lambda <= self.beta
    }
}

impl TryFrom<(f64, f64)> for SpectralBand {
    type Error = Error;

    fn try_from((alpha, beta): (f64, f64)) -> Result<Self> {
        Self::new(alpha, beta)
    }
}

impl From<SpectralBand> for (f64, f64) {
    fn from(b: SpectralBand) -> Self {
        (b.alpha, b.beta)
    }
}

impl std::fmt::Display for SpectralBand {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{},{}", self.alpha, self.beta)
    }
}

impl std::str::FromStr for SpectralBand {
    type Err = Error;

    /// Parses `alpha,beta`.
    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s.split_once(',').ok_or_else(|| Error::Parameter(format!("band '{s}' must be 'alpha,beta'")))?;
        let parse = |t: &str| {
            t.trim().parse::<f64>().map_err(|_| Error::Parameter(format!("band bound '{t}' is not a number")))
        };
        Self::new(parse(a)?, parse(b)?)
    }
}

/// Whether `[λ₂, λ_N]` lies inside the band, with a 1e-12 absolute slack.
pub fn band_contains(s: &LaplacianSpectrum, b: &SpectralBand) -> bool {
    s.lambda2() >= b.alpha - 1e-12 && s.lambda_max() <= b.beta + 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_of(g: GraphSpec) -> LaplacianSpectrum {
        spectrum(&g.build(0).unwrap()).unwrap()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn star12_spectrum() {
        let s = spec_of(GraphSpec::Star { n: 12 });
        let ev = s.eigenvalues();
        assert!(ev[0].abs() < 1e-12);
        for &v in &ev[1..11] {
            assert!((v - 1.0).abs() < 1e-10);
        }
        assert!((ev[11] - 12.0).abs() < 1e-10);
        assert_eq!(distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL).unwrap().len(), 2);
    }

    #[test]
    fn cycle12_distinct_values() {
        let s = spec_of(GraphSpec::Cycle { n: 12 });
        let d = distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL).unwrap();
        let printed = [0.2679, 1.0, 2.0, 3.0, 3.7321, 4.0];
        assert!(close(&d, &printed, 5e-5), "{d:?}");
        // 2 - sqrt(3) and 2 + sqrt(3)
        assert!((d[0] - (2.0 - 3f64.sqrt())).abs() < 1e-10);
        assert!((d[4] - (2.0 + 3f64.sqrt())).abs() < 1e-10);
    }

    #[test]
    fn complete5_spectrum() {
        let s = spec_of(GraphSpec::Complete { n: 5 });
        assert!(close(s.eigenvalues(), &[0.0, 5.0, 5.0, 5.0, 5.0], 1e-10));
        let d = distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL).unwrap();
        assert!(close(&d, &[5.0], 1e-10), "{d:?}");
    }

    #[test]
    fn analytic_examples() {
        assert_eq!(analytic_spectrum(GraphSpec::Star { n: 12 }).unwrap(), vec![(0.0, 1), (1.0, 10), (12.0, 1)]);
        let path6: Vec<f64> = analytic_spectrum(GraphSpec::Path { n: 6 }).unwrap().iter().map(|p| p.0).collect();
        assert!(close(&path6[1..], &[0.2679, 1.0, 2.0, 3.0, 3.7321], 5e-5));
        assert_eq!(
            analytic_spectrum(GraphSpec::CompleteBipartite { m: 2, n: 3 }).unwrap(),
            vec![(0.0, 1), (2.0, 2), (3.0, 1), (5.0, 1)]
        );
        assert!(analytic_spectrum(GraphSpec::RandomConnected { n: 5, p: 0.5 }).is_err());
    }

    #[test]
    fn bipartite_2_3_against_direct_eigensolve() {
        // Oracle: eigensolve the 5-vertex Laplacian directly.
        let s = spec_of(GraphSpec::CompleteBipartite { m: 2, n: 3 });
        assert!(close(s.eigenvalues(), &[0.0, 2.0, 2.0, 3.0, 5.0], 1e-10));
    }

    #[test]
    fn band_membership() {
        let star = spec_of(GraphSpec::Star { n: 12 });
        assert!(band_contains(&star, &SpectralBand::new(0.2, 12.8).unwrap()));
        let k5 = spec_of(GraphSpec::Complete { n: 5 });
        assert!(!band_contains(&k5, &SpectralBand::new(0.2, 4.0).unwrap()));
        let c12 = spec_of(GraphSpec::Cycle { n: 12 });
        let lambda2 = c12.lambda2();
        assert!(band_contains(&c12, &SpectralBand::new(lambda2, 4.0).unwrap()));
    }

    #[test]
    fn disconnected_graph_is_rejected() {
        let g = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let s = spectrum(&g).unwrap();
        assert!(matches!(distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL), Err(Error::Connectivity(_))));
    }

    #[test]
    fn band_validation_and_parsing() {
        assert!(SpectralBand::new(0.0, 1.0).is_err());
        assert!(SpectralBand::new(5.0, 2.0).is_err());
        assert!(SpectralBand::new(1.0, 1.0).unwrap().is_degenerate());
        let b: SpectralBand = "0.2,12.8".parse().unwrap();
        assert_eq!((b.alpha(), b.beta()), (0.2, 12.8));
        assert!("5,2".parse::<SpectralBand>().is_err());
        assert!(serde_json::from_str::<SpectralBand>("[3.0, 1.0]").is_err());
    }

    #[test]
    fn spectrum_csv() {
        let s = spec_of(GraphSpec::Path { n: 2 });
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("index,eigenvalue\n0,"));
        assert!(text.trim_end().ends_with("1,2"));
    }
}
