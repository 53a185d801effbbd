use afista::harness::{
    aggregate_runs, emit_csv, error_within_budget, read_csv, run_experiment, ExperimentConfig, RHat, CSV_HEADER,
};
use afista::instance::QuadraticInstance;
use afista::trace::{Algorithm, RunTrace};

fn small_config() -> ExperimentConfig {
    ExperimentConfig {
        n: 24,
        r_values: vec![2, 4],
        delta_values: vec![0.0, 1.0],
        beta: 10.0,
        outer_iters: 80,
        seeds: vec![0, 1, 2],
        algorithms: Algorithm::ALL.to_vec(),
        workers: 2,
        ..ExperimentConfig::default()
    }
}

/// Debug strings compare NaN columns as equal; wall-clock times are not
/// part of the comparison.
fn normalized(traces: &[RunTrace]) -> Vec<String> {
    traces
        .iter()
        .map(|t| {
            let mut t = t.clone();
            for r in t.rows.iter_mut() {
                r.wall_ns = 0;
            }
            format!("{t:?}")
        })
        .collect()
}

#[test]
fn emitted_cells_read_back_and_worker_count_does_not_matter() {
    let config = small_config();
    let traces = run_experiment(&config).unwrap();
    assert_eq!(traces.len(), 2 * 2 * 3 * 6);
    assert!(traces.iter().all(|t| t.is_completed()));

    let serial = run_experiment(&ExperimentConfig { workers: 1, ..config.clone() }).unwrap();
    assert_eq!(normalized(&traces), normalized(&serial));

    let dir = tempfile::tempdir().unwrap();
    let paths = emit_csv(&traces, dir.path(), Some(&config)).unwrap();
    assert_eq!(paths.len(), 4);
    let mut back = Vec::new();
    for p in &paths {
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        back.extend(read_csv(p).unwrap());
    }
    afista::harness::sort_traces(&mut back);
    assert_eq!(normalized(&back), normalized(&traces));
    // Wall-clock times come back from the sidecar files.
    assert_eq!(
        back.iter().flat_map(|t| t.rows.iter().map(|r| r.wall_ns)).collect::<Vec<_>>(),
        traces.iter().flat_map(|t| t.rows.iter().map(|r| r.wall_ns)).collect::<Vec<_>>()
    );

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["runs"], 72);
    assert_eq!(manifest["seeds"], serde_json::json!([0, 1, 2]));
    assert_eq!(manifest["config"]["outer_iters"], 80);
}

#[test]
fn aggregates_are_means_of_step_functions() {
    let inst = QuadraticInstance::<f64>::generate(24, 3, 0.1, 10.0, 5).unwrap();
    let runs: Vec<RunTrace> = (0..3)
        .map(|s| {
            let inst = QuadraticInstance::<f64>::generate(24, 3, 0.1, 10.0, s).unwrap();
            afista::harness::run_algorithm(Algorithm::AfistaSpAfw, &inst, 60, 3, false).unwrap().trace
        })
        .collect();
    let refs: Vec<&RunTrace> = runs.iter().collect();
    let agg = aggregate_runs(&refs).unwrap();
    assert_eq!(agg.runs, 3);
    assert_eq!(agg.outer_mean.len(), 60);
    assert_eq!(agg.loo_grid.len(), afista::harness::LOO_GRID_POINTS);
    assert_eq!(agg.loo_grid[0], 1.0);
    for (i, m) in agg.outer_mean.iter().enumerate() {
        let expected = runs.iter().map(|t| t.rows[i].error).sum::<f64>() / 3.0;
        assert!((m - expected).abs() <= 1e-15 * expected.abs().max(1.0));
    }
    for (b, m) in agg.loo_grid.iter().zip(&agg.loo_mean) {
        let expected = runs.iter().map(|t| error_within_budget(t, *b)).sum::<f64>() / 3.0;
        assert!((m - expected).abs() <= 1e-15 * expected.abs().max(1.0));
    }
    // Budget below the first row's count falls back to the initial error.
    let first = &runs[0];
    assert_eq!(error_within_budget(first, 0.0), first.initial_error);
    assert_eq!(error_within_budget(first, f64::INFINITY), first.final_error());

    let short = afista::harness::run_algorithm(Algorithm::Fw, &inst, 10, 3, false).unwrap().trace;
    assert!(aggregate_runs(&[&runs[0], &short]).is_err());
}

#[test]
fn invalid_grids_are_rejected() {
    let bad = [
        ExperimentConfig { n: 0, ..small_config() },
        ExperimentConfig { r_values: vec![0], ..small_config() },
        ExperimentConfig { r_values: vec![30], ..small_config() },
        ExperimentConfig { delta_values: vec![-0.1], ..small_config() },
        ExperimentConfig { beta: f64::NAN, ..small_config() },
        ExperimentConfig { outer_iters: 1, ..small_config() },
        ExperimentConfig { seeds: vec![], ..small_config() },
        ExperimentConfig { algorithms: vec![], ..small_config() },
        ExperimentConfig { r_hat: RHat::Fixed(24), ..small_config() },
    ];
    for config in bad {
        assert!(run_experiment(&config).is_err(), "{config:?}");
    }
}

#[test]
fn default_grid_matches_the_experiment_protocol() {
    let c = ExperimentConfig::default();
    assert_eq!((c.n, c.beta, c.outer_iters), (200, 100.0, 2000));
    assert_eq!(c.r_values, vec![10, 20, 40, 80]);
    assert_eq!(c.delta_values, vec![0.0, 0.1, 1.0]);
    assert_eq!(c.seeds, (0..10).collect::<Vec<_>>());
    assert_eq!(c.r_hat.resolve(20), 20);
    assert_eq!(c.num_instances(), 120);
}
