use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use speccon::filter::{design_chebyshev, design_finite_time, design_lagrange, design_periodic, Method};
use speccon::graph::{Graph, GraphSpec};
use speccon::rate::exact_rate;
use speccon::sim::{consensus_time, measured_period_ratio, simulate, uniform_initial_state};
use speccon::spectrum::{distinct_nonzero_eigenvalues, spectrum, LaplacianSpectrum, DEFAULT_GROUP_TOL};
use speccon::{ControlSequence, SpectralBand};

fn default_band() -> SpectralBand {
    SpectralBand::new(0.2, 12.8).unwrap()
}

/// x(T) from the eigendecomposition: x̄·1 + Σ_{i≥2} h(λ_i, T) v_i v_iᵀ x(0).
fn spectral_reconstruction(s: &LaplacianSpectrum, c: &ControlSequence, x0: &[f64], t: usize) -> Vec<f64> {
    let n = x0.len();
    let mean = x0.iter().sum::<f64>() / n as f64;
    let mut out = vec![mean; n];
    for i in 1..n {
        let v = s.eigenvector(i);
        let coeff = c.eval(s.eigenvalues()[i], t) * v.iter().zip(x0).map(|(a, b)| a * b).sum::<f64>();
        for (o, vi) in out.iter_mut().zip(&v) {
            *o += coeff * vi;
        }
    }
    out
}

fn finite_time(g: &Graph) -> ControlSequence {
    let s = spectrum(g).unwrap();
    design_finite_time(&distinct_nonzero_eigenvalues(&s, DEFAULT_GROUP_TOL).unwrap()).unwrap()
}

#[test]
fn star_finite_time_in_two_steps() {
    let g = GraphSpec::Star { n: 12 }.build(0).unwrap();
    let trace = simulate(&g, &finite_time(&g), &uniform_initial_state(12, 5), 2).unwrap();
    assert!(trace.errors[2] <= 1e-9 * trace.errors[0]);
}

#[test]
fn finite_time_certificates_for_special_families() {
    let cases = [
        (GraphSpec::Complete { n: 5 }, 1),
        (GraphSpec::Star { n: 12 }, 2),
        (GraphSpec::CompleteBipartite { m: 3, n: 4 }, 3),
        (GraphSpec::Cycle { n: 12 }, 6),
        (GraphSpec::Path { n: 6 }, 5),
    ];
    for (spec, t) in cases {
        let g = spec.build(0).unwrap();
        let c = finite_time(&g);
        assert_eq!(c.period(), t, "{spec}");
        let trace = simulate(&g, &c, &uniform_initial_state(g.n(), 77), t).unwrap();
        assert!(trace.relative_error(t) <= 1e-9, "{spec}: {}", trace.relative_error(t));
    }
}

#[test]
fn eigenvector_start_contracts_by_filter_value() {
    let g = GraphSpec::Cycle { n: 12 }.build(0).unwrap();
    let s = spectrum(&g).unwrap();
    let c = design_chebyshev(default_band(), 3).unwrap();
    let x0 = s.eigenvector(1);
    let trace = simulate(&g, &c, &x0, 3).unwrap();
    let want = c.eval(s.eigenvalues()[1], 3).abs();
    assert!((trace.errors[3] / trace.errors[0] - want).abs() < 1e-12);
}

#[test]
fn star_lagrange_worst_eigenvector_ratio() {
    let g = GraphSpec::Star { n: 12 }.build(0).unwrap();
    let s = spectrum(&g).unwrap();
    let c = design_lagrange(default_band(), 3).unwrap();
    let report = exact_rate(&c, &s).unwrap();
    let trace = simulate(&g, &c, &s.eigenvector(report.argmax_index), 6).unwrap();
    let ratios = measured_period_ratio(&trace, 3).unwrap();
    assert!((ratios.ratios[0] - report.exact_rate).abs() < 1e-9);
    assert!((ratios.ratios[0] - 0.5321).abs() < 5e-5);
}

#[test]
fn cycle_chebyshev_m5_ratios_bounded() {
    let g = GraphSpec::Cycle { n: 12 }.build(0).unwrap();
    let s = spectrum(&g).unwrap();
    let c = design_chebyshev(default_band(), 5).unwrap();
    let rho = exact_rate(&c, &s).unwrap().exact_rate;
    assert!((rho - 0.4696).abs() < 5e-5);
    let trace = simulate(&g, &c, &uniform_initial_state(12, 21), 40).unwrap();
    let ratios = measured_period_ratio(&trace, 5).unwrap();
    assert!(!ratios.ratios.is_empty());
    assert!(ratios.ratios.iter().all(|r| *r <= rho + 1e-9));
}

#[test]
fn consensus_time_examples() {
    let k5 = GraphSpec::Complete { n: 5 }.build(0).unwrap();
    let c = ControlSequence::new(vec![0.2], Method::Custom, None).unwrap();
    assert_eq!(consensus_time(&simulate(&k5, &c, &uniform_initial_state(5, 8), 4).unwrap(), 1e-10), Some(1));

    let p6 = GraphSpec::Path { n: 6 }.build(0).unwrap();
    let trace = simulate(&p6, &finite_time(&p6), &uniform_initial_state(6, 8), 10).unwrap();
    assert_eq!(consensus_time(&trace, 1e-8), Some(5));
}

fn random_graph(rng: &mut ChaCha8Rng) -> Graph {
    let n = rng.gen_range(4..=30);
    let p = rng.gen_range(0.2..0.7);
    GraphSpec::RandomConnected { n, p }.build(rng.gen()).unwrap()
}

#[test]
fn simulation_matches_spectral_reconstruction() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..50 {
        let g = random_graph(&mut rng);
        let s = spectrum(&g).unwrap();
        let m = rng.gen_range(1..=6);
        let gains: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..2.0) / s.lambda_max()).collect();
        let c = ControlSequence::new(gains, Method::Custom, None).unwrap();
        let x0: Vec<f64> = (0..g.n()).map(|_| rng.gen_range(0.0..10.0)).collect();
        let t = rng.gen_range(0..=40);
        let trace = simulate(&g, &c, &x0, t).unwrap();
        let oracle = spectral_reconstruction(&s, &c, &x0, t);
        for (a, b) in trace.final_state().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-8, "{a} vs {b}");
        }
    }
}

#[test]
fn average_is_preserved_and_envelope_decays() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let g = random_graph(&mut rng);
        let s = spectrum(&g).unwrap();
        let b = SpectralBand::new(0.9 * s.lambda2(), 1.05 * s.lambda_max()).unwrap();
        for method in [Method::Lagrange, Method::Chebyshev, Method::Constant] {
            let m = rng.gen_range(1..=5);
            let c = design_periodic(method, b, m).unwrap();
            let rho = exact_rate(&c, &s).unwrap().exact_rate;
            assert!(rho < 1.0);
            let x0 = uniform_initial_state(g.n(), rng.gen());
            let trace = simulate(&g, &c, &x0, 8 * m).unwrap();
            for x in &trace.states {
                let mean = x.iter().sum::<f64>() / x.len() as f64;
                assert!((mean - trace.average).abs() <= 1e-10 * trace.average.abs().max(1.0));
            }
            for j in 0..=8 {
                assert!(trace.errors[j * m] <= (rho + 1e-9).powi(j as i32) * trace.errors[0] + 1e-12);
            }
        }
    }
}

#[test]
fn rate_below_one_iff_trajectories_converge() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        let g = random_graph(&mut rng);
        let s = spectrum(&g).unwrap();
        // A band that ends well below λ_N makes the constant gain overshoot.
        let good = SpectralBand::new(0.9 * s.lambda2(), s.lambda_max()).unwrap();
        let bad = SpectralBand::new(0.9 * s.lambda2(), (0.3 * s.lambda_max()).max(0.9 * s.lambda2())).unwrap();
        for b in [good, bad] {
            let c = design_periodic(Method::Constant, b, 2).unwrap();
            let rho = exact_rate(&c, &s).unwrap().exact_rate;
            let trace = simulate(&g, &c, &uniform_initial_state(g.n(), rng.gen()), 400).unwrap();
            let converged = trace.relative_error(400) < 1.0;
            assert_eq!(rho < 1.0, converged, "rho = {rho}");
        }
    }
}

#[test]
fn dimension_mismatch_is_rejected() {
    let g = GraphSpec::Path { n: 4 }.build(0).unwrap();
    let c = ControlSequence::new(vec![0.3], Method::Custom, None).unwrap();
    assert!(simulate(&g, &c, &[1.0, 2.0], 3).is_err());
}

#[test]
fn trace_json_mirrors_fields() {
    let g = GraphSpec::Path { n: 3 }.build(0).unwrap();
    let c = ControlSequence::new(vec![0.3], Method::Custom, None).unwrap();
    let trace = simulate(&g, &c, &[1.0, 0.0, 0.0], 2).unwrap();
    let v = serde_json::to_value(&trace).unwrap();
    assert_eq!(v["states"].as_array().unwrap().len(), 3);
    assert_eq!(v["errors"].as_array().unwrap().len(), 3);
    assert!((v["average"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
}
