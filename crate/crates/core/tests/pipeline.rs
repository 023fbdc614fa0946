use dlsr::baselines::KalmanState;
use dlsr::bench::{
    elliptical_generate, emit_results, gaussian_stream, median, parse_results, run_sweep, BenchCell, Dataset, EllipticalConfig, Method,
    RunOptions,
};
use dlsr::dynlsr::{LsrSketchState, SamplerConfig, SamplingRule, SketchBackend};
use dlsr::matcore::{dot, normal_equation_solve, DenseMatrix};

fn residual(a: &DenseMatrix, b: &[f64], x: &[f64]) -> f64 {
    (0..a.rows()).map(|i| (dot(a.row(i), x) - b[i]).powi(2)).sum::<f64>().sqrt()
}

#[test]
fn smaller_epsilon_gives_smaller_error() {
    let mut by_eps = [Vec::new(), Vec::new(), Vec::new()];
    for seed in 0..10 {
        let (a, b) = elliptical_generate(&EllipticalConfig::new(6000, 30, seed)).unwrap();
        let data = Dataset::new("elliptical", a, b);
        let opts = RunOptions { seed, ..RunOptions::default() };
        let cells: Vec<BenchCell> = [0.1, 0.5, 1.0].iter().map(|&e| BenchCell::new(Method::Ours, e)).collect();
        for (i, r) in run_sweep(&data, &cells, &opts, 1).unwrap().into_iter().enumerate() {
            by_eps[i].push(r.error_ratio);
        }
    }
    let m: Vec<f64> = by_eps.iter().map(|v| median(v)).collect();
    assert!(m[0] <= m[1] && m[1] <= m[2], "medians {m:?}");
    assert!(m[0] < 1.05, "{m:?}");
}

#[test]
fn backends_agree_on_solution_quality() {
    let d = 12;
    let (a, b) = gaussian_stream(3000, d, 0.5, 4).unwrap();
    let opt = residual(&a, &b, &normal_equation_solve(&a, &b).unwrap());
    for backend in [SketchBackend::Explicit, SketchBackend::Factored] {
        let mut cfg = SamplerConfig::new(0.25, 0.1, 3000 - d - 1);
        cfg.rule = SamplingRule::Empirical;
        cfg.backend = backend;
        cfg.seed = 4;
        let mut s = LsrSketchState::preprocess(&a.row_block(0, d + 1), &b[..d + 1], cfg).unwrap();
        for i in d + 1..3000 {
            s.insert(a.row(i), b[i]).unwrap();
        }
        let ratio = residual(&a, &b, &s.current_solution()) / opt;
        assert!(ratio <= 1.25, "{backend:?}: {ratio}");
        assert!(s.s() < 3000, "{backend:?} kept every row");
    }
}

#[test]
fn snapshot_resumes_identically() {
    let d = 8;
    let (a, b) = gaussian_stream(800, d, 1.0, 9).unwrap();
    let mut cfg = SamplerConfig::new(0.5, 0.1, 800);
    cfg.rule = SamplingRule::Empirical;
    let mut s = LsrSketchState::preprocess(&a.row_block(0, d + 1), &b[..d + 1], cfg).unwrap();
    for i in d + 1..400 {
        s.insert(a.row(i), b[i]).unwrap();
    }
    let mut resumed = LsrSketchState::from_snapshot_bytes(&s.to_snapshot_bytes()).unwrap();
    for i in 400..800 {
        let x = s.insert(a.row(i), b[i]).unwrap();
        let y = resumed.insert(a.row(i), b[i]).unwrap();
        assert_eq!(x, y);
    }
    assert_eq!(s.s(), resumed.s());
}

#[test]
fn kalman_tracks_sliding_window() {
    let d = 6;
    let (a, b) = gaussian_stream(400, d, 1.0, 2).unwrap();
    let w = 50;
    let mut k = KalmanState::new(&a.row_block(0, w), &b[..w]).unwrap();
    for i in w..400 {
        k.insert(a.row(i), b[i]).unwrap();
        let x = k.delete(0).unwrap();
        let direct = normal_equation_solve(&a.row_block(i + 1 - w, i + 1), &b[i + 1 - w..=i]).unwrap();
        for (u, v) in x.iter().zip(direct.iter()) {
            assert!((u - v).abs() <= 1e-8 * (1.0 + v.abs()));
        }
    }
}

#[test]
fn sweep_results_round_trip_through_csv() {
    let (a, b) = elliptical_generate(&EllipticalConfig::new(3000, 10, 1)).unwrap();
    let data = Dataset::new("elliptical", a, b);
    let cells: Vec<BenchCell> = Method::ALL.iter().map(|&m| BenchCell::new(m, 0.5)).collect();
    let recs = run_sweep(&data, &cells, &RunOptions::default(), 2).unwrap();
    let back = parse_results(&emit_results(&recs)).unwrap();
    assert_eq!(back.len(), 4);
    let kalman = back.iter().find(|r| r.method == Method::Kalman).unwrap();
    assert_eq!(kalman.parameter, 0.0);
    assert!((kalman.error_ratio - 1.0).abs() < 1e-6);
}
