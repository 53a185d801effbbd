//! Acceptance suite: one pass/fail line per criterion, followed by the
//! individual checks behind it. Exits nonzero if any criterion fails.
//!
//! Tolerances and sizes are pinned here; the checks themselves live in
//! `afista::validation` so the `validate` command runs the same code.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use afista::harness::{emit_csv, run_experiment, ExperimentConfig};
use afista::trace::RunTrace;
use afista::validation::{self, Check, InstanceGrid};

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    elapsed: Duration,
    checks: Vec<Check>,
}

impl Criterion {
    fn passed(&self) -> bool {
        validation::all_passed(&self.checks) && self.elapsed <= self.budget
    }

    fn report(&self) {
        let tag = if self.passed() { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] criterion {}: {} ({:.1}s, budget {}s)",
            self.id,
            self.title,
            self.elapsed.as_secs_f64(),
            self.budget.as_secs()
        );
        for c in &self.checks {
            let mark = if c.passed { "ok" } else { "FAILED" };
            println!("         {mark:6} {}: {}", c.name, c.detail);
        }
    }
}

fn timed(id: u8, title: &'static str, budget_secs: u64, body: impl FnOnce() -> Vec<Check>) -> Criterion {
    let start = Instant::now();
    let checks = body();
    Criterion {
        id,
        title,
        budget: Duration::from_secs(budget_secs),
        elapsed: start.elapsed(),
        checks,
    }
}

fn sweep(seeds: std::ops::Range<u64>) -> (Vec<RunTrace>, Duration) {
    let config = ExperimentConfig {
        seeds: seeds.collect(),
        ..ExperimentConfig::default()
    };
    let start = Instant::now();
    let traces = run_experiment(&config).expect("default grid runs");
    (traces, start.elapsed())
}

fn identical_dirs(a: &Path, b: &Path) -> Check {
    let name = "emitted CSV files byte-identical across two runs";
    let mut files: Vec<_> = fs::read_dir(a)
        .expect("first output directory")
        .map(|e| e.expect("directory entry").file_name())
        .filter(|f| !f.to_string_lossy().ends_with(".timing.csv"))
        .collect();
    files.sort();
    let differing: Vec<String> = files
        .iter()
        .filter(|f| fs::read(a.join(f)).ok() != fs::read(b.join(f)).ok())
        .map(|f| f.to_string_lossy().into_owned())
        .collect();
    Check::new(
        name,
        files.len() > 1 && differing.is_empty(),
        format!("{} files compared (timing sidecars excluded), differing: {differing:?}", files.len()),
    )
}

fn main() -> ExitCode {
    let mut criteria = Vec::new();

    criteria.push(timed(1, "oracle correctness on the simplex", 10, || {
        vec![
            validation::simplex_projection_vs_enumeration(500, 101, 1e-10),
            validation::sparse_full_equals_exact(500, 102, 1e-9),
            validation::sparse_simplex_vs_brute_force(100, 103, 1e-9),
            validation::polytope_loo_minimality(200, 104),
        ]
    }));

    criteria.push(timed(2, "spectrahedron and nuclear-ball oracles", 30, || {
        vec![
            validation::spectrahedron_projection_vs_reference(200, 201, 1e-7),
            validation::nuclear_projection_vs_reference(200, 202, 1e-7),
            validation::matrix_loo_minimality(200, 1000, 203),
        ]
    }));

    // Seeds 0..3 form the reduced grid of criterion 6; seeds 3..10 complete
    // the full default sweep for criterion 3.
    let (reduced, reduced_time) = sweep(0..3);
    let (rest, rest_time) = sweep(3..10);
    let mut full = reduced.clone();
    full.extend(rest);

    criteria.push({
        let start = Instant::now();
        let checks = vec![
            validation::certificate_soundness(&full, 1e-9),
            Check::new(
                "full default sweep size",
                full.len() == 4 * 3 * 10 * 5,
                format!("{} runs", full.len()),
            ),
        ];
        Criterion {
            id: 3,
            title: "certificate soundness across the default sweep",
            budget: Duration::from_secs(1800),
            elapsed: reduced_time + rest_time + start.elapsed(),
            checks,
        }
    });

    criteria.push(timed(4, "error and step envelopes", 120, || {
        let grid = InstanceGrid {
            n: 50,
            r_values: vec![5],
            delta_values: vec![0.0, 1.0],
            beta: 10.0,
            horizon: 300,
            seeds: (0..10).collect(),
        };
        vec![validation::envelope(&grid, 1e-9)]
    }));

    criteria.push(timed(5, "face identification", 120, || {
        let grid = InstanceGrid {
            n: 100,
            r_values: vec![10],
            delta_values: vec![1.0],
            beta: 100.0,
            horizon: 1000,
            seeds: (0..3).collect(),
        };
        validation::identification(&grid, 1e-8)
    }));

    criteria.push({
        let start = Instant::now();
        let checks = validation::sweep_shape(&reduced, 2000);
        Criterion {
            id: 6,
            title: "qualitative reproduction of the simplex experiments (3 seeds)",
            budget: Duration::from_secs(1800),
            elapsed: reduced_time + start.elapsed(),
            checks,
        }
    });

    criteria.push(timed(7, "complexity scaling", 600, || {
        vec![validation::afista_scaling(), validation::fw_scaling(&[0, 1, 2])]
    }));

    criteria.push(timed(8, "structural counters and determinism", 600, || {
        let grid = InstanceGrid {
            n: 100,
            r_values: vec![5, 20],
            delta_values: vec![0.0, 0.1, 1.0],
            beta: 100.0,
            horizon: 500,
            seeds: (0..2).collect(),
        };
        let config = ExperimentConfig {
            n: 50,
            r_values: vec![5, 10],
            delta_values: vec![0.0, 1.0],
            beta: 10.0,
            outer_iters: 300,
            seeds: (0..2).collect(),
            ..ExperimentConfig::default()
        };
        let dirs = [tempfile::tempdir().expect("temp dir"), tempfile::tempdir().expect("temp dir")];
        for dir in &dirs {
            let traces = run_experiment(&config).expect("small grid runs");
            emit_csv(&traces, dir.path(), Some(&config)).expect("CSV written");
        }
        vec![
            validation::drop_step_bound(&grid),
            validation::drop_step_bound_random(2000, 12, 801),
            validation::loo_equivalent_convention(&full),
            identical_dirs(dirs[0].path(), dirs[1].path()),
        ]
    }));

    criteria.sort_by_key(|c| c.id);
    for c in &criteria {
        c.report();
    }
    let failed = criteria.iter().filter(|c| !c.passed()).count();
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
