use std::io::Cursor;

use diversity_core::bench::{
    case_study_efficient_set, case_study_objectives, efficient_set, efficient_set_exhaustive, hausdorff, mean_sem,
    objectives, read_stats_rows, run_experiment, two_sample_ttest, welch_ttest, ReplicateStats, StatsRow,
};
use diversity_core::noah::{read_trace_rows, run_noah, write_trace_rows, NoahConfig, Phase, TraceRow};
use diversity_core::Indicator;
use proptest::prelude::*;

const TTEST_REFERENCE: &str = include_str!("../fixtures/ttest_reference.txt");

struct Pair {
    a: Vec<f64>,
    b: Vec<f64>,
    pooled: (f64, f64),
    welch: (f64, f64),
}

fn reference_pairs() -> Vec<Pair> {
    let mut pairs: Vec<Pair> = Vec::new();
    for line in TTEST_REFERENCE.lines().filter(|l| !l.starts_with('#')) {
        let mut f = line.split_whitespace();
        let id: usize = f.next().unwrap().parse().unwrap();
        let kind = f.next().unwrap();
        let nums: Vec<f64> = f.map(|v| v.parse().unwrap()).collect();
        if id == pairs.len() {
            pairs.push(Pair {
                a: Vec::new(),
                b: Vec::new(),
                pooled: (0.0, 0.0),
                welch: (0.0, 0.0),
            });
        }
        let p = &mut pairs[id];
        match kind {
            "a" => p.a = nums,
            "b" => p.b = nums,
            "pooled" => p.pooled = (nums[0], nums[1]),
            "welch" => p.welch = (nums[0], nums[1]),
            other => panic!("unknown row kind {other}"),
        }
    }
    pairs
}

#[test]
fn ttest_matches_reference_pairs() {
    let pairs = reference_pairs();
    assert_eq!(pairs.len(), 20);
    for (i, p) in pairs.iter().enumerate() {
        let s = two_sample_ttest(&p.a, &p.b).unwrap();
        assert!((s.t - p.pooled.0).abs() < 1e-6, "pair {i}: t {} vs {}", s.t, p.pooled.0);
        assert!((s.p - p.pooled.1).abs() < 1e-4, "pair {i}: p {} vs {}", s.p, p.pooled.1);
        let w = welch_ttest(&p.a, &p.b).unwrap();
        assert!(
            (w.t - p.welch.0).abs() < 1e-6,
            "pair {i}: welch t {} vs {}",
            w.t,
            p.welch.0
        );
        assert!(
            (w.p - p.welch.1).abs() < 1e-4,
            "pair {i}: welch p {} vs {}",
            w.p,
            p.welch.1
        );
    }
}

#[test]
fn ttest_textbook_fixture() {
    // means 3 and 5, both sample variances 2.5, pooled sd^2 = 2.5, se = 1.
    let a = [1.0, 2.0, 3.0, 4.0, 5.0];
    let b = [3.0, 4.0, 5.0, 6.0, 7.0];
    let r = two_sample_ttest(&a, &b).unwrap();
    assert!((r.t + 2.0).abs() < 1e-12);
    assert_eq!(r.df, 8.0);
    let same = two_sample_ttest(&a, &a).unwrap();
    assert_eq!(same.t, 0.0);
    assert!((same.p - 1.0).abs() < 1e-12);
    assert!(two_sample_ttest(&[2.0, 2.0], &[2.0, 2.0]).is_err());
    assert!(two_sample_ttest(&[1.0], &[1.0, 2.0]).is_err());
}

#[test]
fn objective_examples() {
    assert_eq!(objectives(8.0, 7.0), (0.0, 9.0));
    assert_eq!(objectives(5.0, 5.0), (170.0, 0.0));
    for y in [0.0, 3.3, 10.0] {
        assert_eq!(objectives(5.0, y).1, 0.0);
    }
}

#[test]
fn case_study_efficient_set_regression() {
    let grid = case_study_efficient_set().unwrap();
    assert_eq!(grid.len(), 2405);
    let mut sizes: Vec<usize> = grid.components().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    assert_eq!(sizes, vec![2385, 13, 7]);
}

#[test]
fn efficient_set_fast_path_matches_exhaustive() {
    for (res, eps) in [(25, 1.0), (30, 0.5), (17, 3.0), (20, 0.0)] {
        let fast = efficient_set(&case_study_objectives, res, eps, 10.0).unwrap();
        let slow = efficient_set_exhaustive(&case_study_objectives, res, eps, 10.0).unwrap();
        assert_eq!(fast.member, slow.member, "res {res} eps {eps}");
    }
}

#[test]
fn efficient_set_limits() {
    let all = efficient_set(&case_study_objectives, 20, 1e12, 10.0).unwrap();
    assert_eq!(all.len(), 400);
    // Strictly conflicting objectives on a 2x2 grid: nothing dominates at eps 0.
    let toy = |p: [f64; 2]| vec![p[0] + 0.1 * p[1], -p[0] - 0.2 * p[1]];
    let g = efficient_set(&toy, 2, 0.0, 1.0).unwrap();
    assert_eq!(g.len(), 4);
    assert!(efficient_set(&case_study_objectives, 1, 1.0, 10.0).is_err());
    assert!(efficient_set(&case_study_objectives, 10, -1.0, 10.0).is_err());
}

#[test]
fn efficient_set_antitone_in_eps() {
    let sets: Vec<Vec<bool>> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&e| efficient_set(&case_study_objectives, 60, e, 10.0).unwrap().member)
        .collect();
    for w in sets.windows(2) {
        assert!(w[0].iter().zip(&w[1]).all(|(small, large)| !small || *large));
    }
}

#[test]
fn hausdorff_examples() {
    let a = [[0.0, 0.0], [1.0, 0.0]];
    assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    assert_eq!(hausdorff(&[[0.0, 0.0]], &[[3.0, 4.0]]).unwrap(), 5.0);
    assert_eq!(hausdorff(&a, &[[0.0, 0.0]]).unwrap(), 1.0);
    assert!(hausdorff(&a, &[]).is_err());
}

fn point_set() -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64).prop_map(|(x, y)| [x, y]), 1..8)
}

proptest! {
    #[test]
    fn hausdorff_is_a_metric(a in point_set(), b in point_set(), c in point_set()) {
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        prop_assert!(ab >= 0.0);
        let ac = hausdorff(&a, &c).unwrap();
        let cb = hausdorff(&c, &b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn ttest_is_antisymmetric(a in prop::collection::vec(-5.0..5.0f64, 2..12), b in prop::collection::vec(-5.0..5.0f64, 2..12)) {
        let (Ok(ab), Ok(ba)) = (two_sample_ttest(&a, &b), two_sample_ttest(&b, &a)) else { return Ok(()) };
        prop_assert!((ab.t + ba.t).abs() < 1e-9);
        prop_assert!((ab.p - ba.p).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&ab.p));
    }

    #[test]
    fn trace_rows_round_trip(
        rows in prop::collection::vec(
            (0usize..50, 0usize..4, any::<f64>(), any::<f64>(), any::<f64>(), prop::option::of(0.0..20.0f64),
             prop::collection::vec(-1e6..1e6f64, 2)),
            1..10)
    ) {
        let phases = [Phase::Initial, Phase::ObjectiveOpt, Phase::BarrierLower, Phase::DiversityOpt];
        let rows: Vec<TraceRow> = rows
            .into_iter()
            .map(|(iteration, p, maxmin, riesz_energy, solow_polasky, hausdorff, barrier)| TraceRow {
                iteration,
                phase: phases[p],
                maxmin: if maxmin.is_nan() { 0.0 } else { maxmin },
                riesz_energy: if riesz_energy.is_nan() { 0.0 } else { riesz_energy },
                solow_polasky: if solow_polasky.is_nan() { 0.0 } else { solow_polasky },
                hausdorff,
                barrier,
            })
            .collect();
        let mut buf = Vec::new();
        write_trace_rows(&rows, &mut buf).unwrap();
        prop_assert_eq!(read_trace_rows(Cursor::new(buf)).unwrap(), rows);
    }

    #[test]
    fn mean_sem_of_two_values(a in -1e3..1e3f64, b in -1e3..1e3f64) {
        let (m, s) = mean_sem(&[a, b]);
        prop_assert!((m - (a + b) / 2.0).abs() < 1e-9);
        prop_assert!((s - (a - b).abs() / 2.0).abs() < 1e-9);
    }
}

#[test]
fn stats_csv_round_trips_and_two_replicate_sem() {
    let cfg = NoahConfig {
        pop_size: 6,
        iteration_budget: 2,
        nsga2_generations: 3,
        max_diversity_generations: 30,
        rng_seed: 11,
        ..NoahConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let stats = run_experiment(&cfg, 2, Some(dir.path())).unwrap();
    let sub = dir.path().join("maxmin");
    for name in [
        "trace_11.csv",
        "trace_12.csv",
        "population_11.csv",
        "stats.csv",
        "plots/maxmin.svg",
    ] {
        assert!(sub.join(name).exists(), "{name}");
    }
    let text = std::fs::read(sub.join("stats.csv")).unwrap();
    let rows: Vec<StatsRow> = read_stats_rows(Cursor::new(text)).unwrap();
    assert_eq!(rows.len(), stats.rows.len());
    for (r, s) in rows.iter().zip(&stats.rows) {
        assert_eq!((r.iteration, r.phase), (s.iteration, s.phase));
        for q in 0..4 {
            assert!(r.mean[q] == s.mean[q] || (r.mean[q].is_nan() && s.mean[q].is_nan()));
        }
    }
    // sem of two replicates is half their absolute difference.
    let traces: Vec<_> = [11, 12]
        .iter()
        .map(|&seed| {
            run_noah(
                &NoahConfig {
                    rng_seed: seed,
                    ..cfg.clone()
                },
                &case_study_objectives,
                None,
            )
            .unwrap()
        })
        .collect();
    let agg = ReplicateStats::from_traces(Indicator::MaxMin, &traces).unwrap();
    for (row, (a, b)) in agg.rows.iter().zip(traces[0].records.iter().zip(&traces[1].records)) {
        assert!((row.sem[0] - (a.maxmin - b.maxmin).abs() / 2.0).abs() < 1e-12);
    }
}

#[test]
fn seeded_experiment_files_are_deterministic() {
    let cfg = NoahConfig {
        pop_size: 8,
        iteration_budget: 2,
        nsga2_generations: 4,
        rng_seed: 5,
        indicator: Indicator::riesz(2.0).unwrap(),
        ..NoahConfig::default()
    };
    let read_all = |dir: &std::path::Path| {
        let mut files: Vec<(String, Vec<u8>)> = Vec::new();
        let root = dir.join("riesz");
        for sub in [root.clone(), root.join("plots")] {
            for e in std::fs::read_dir(&sub).unwrap() {
                let path = e.unwrap().path();
                if path.is_file() {
                    files.push((
                        path.file_name().unwrap().to_string_lossy().into(),
                        std::fs::read(&path).unwrap(),
                    ));
                }
            }
        }
        files.sort();
        files
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_experiment(&cfg, 3, Some(a.path())).unwrap();
    run_experiment(&cfg, 3, Some(b.path())).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa.len(), 3 * 2 + 1 + 4);
    assert!(fa == fb);
}
