mod common;

use common::*;
use depth_regions::distributions::PlanarModel;
use depth_regions::empirical::{emp_region_cutting_plane, emp_region_grid_with_bound, WeightedSample};
use depth_regions::experiments::{
    load_records, medians_by_n, persist, run_inclusion, run_lil_metric, run_mz, run_slln, run_trajectories, to_bytes,
    ExperimentConfig, ExperimentKind, OutputFormat, RegionMode, WeightLaw, CSV_HEADER,
};
use depth_regions::geometry::hausdorff_distance;
use rand::Rng;

fn small(kind: ExperimentKind, law: WeightLaw) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(kind, "square", 0.25, law);
    c.n_min = 50;
    c.n_max = 2000;
    c.replications = 3;
    c.seed = 17;
    c
}

fn tmp(name: &str) -> std::path::PathBuf {
    std::env::temp_dir().join(format!("depth-regions-{}-{name}", std::process::id()))
}

#[test]
fn identical_config_gives_identical_bytes() {
    let mut c = small(ExperimentKind::Inclusion, WeightLaw::Exp1);
    c.gamma_mults = vec![0.5, 1.5];
    c.replications = 2;
    let a = run_trajectories(&c).unwrap();
    let b = run_trajectories(&c).unwrap();
    for f in [OutputFormat::Csv, OutputFormat::Json] {
        assert_eq!(to_bytes(&a, f).unwrap(), to_bytes(&b, f).unwrap());
    }
    c.seed += 1;
    assert_ne!(run_trajectories(&c).unwrap(), a);
}

#[test]
fn replications_do_not_depend_on_their_siblings() {
    let mut c = small(ExperimentKind::Slln, WeightLaw::Pois1);
    let few = run_trajectories(&c).unwrap();
    c.replications = 5;
    let many = run_trajectories(&c).unwrap();
    assert_eq!(few[..], many[..few.len()]);
}

#[test]
fn weight_law_leaves_points_unchanged() {
    // with Bern02 weights every point of weight 2 sits on a point of the
    // Const1 sample drawn from the same stream
    let c1 = small(ExperimentKind::Slln, WeightLaw::Const1);
    let model = PlanarModel::UniformUnitSquare;
    let a = model.sample(100, &mut depth_regions::experiments::stream_rng(c1.seed, 1, 0));
    let b = model.sample(100, &mut depth_regions::experiments::stream_rng(c1.seed, 1, 0));
    assert_eq!(a, b);
    let x = run_trajectories(&c1).unwrap();
    let y = run_trajectories(&small(ExperimentKind::Slln, WeightLaw::Exp1)).unwrap();
    assert_ne!(x, y);
}

#[test]
fn running_max_is_monotone_and_matches_normalized() {
    let c = small(ExperimentKind::Lil, WeightLaw::Exp1);
    let recs = run_trajectories(&c).unwrap();
    for rep in 0..c.replications {
        let mut best: Option<f64> = None;
        for r in recs.iter().filter(|r| r.replication == rep) {
            if let Some(v) = r.normalized {
                best = Some(best.map_or(v, |b: f64| b.max(v)));
                assert!((v - r.rho_h.unwrap() / r.lambda_n).abs() <= 1e-15 * v.abs().max(1.0));
                assert_eq!(r.statistic, r.normalized);
            }
            assert_eq!(r.running_max, best);
        }
    }
}

#[test]
fn sandwich_coherence_holds_record_wise() {
    for law in [WeightLaw::Const1, WeightLaw::Bern02] {
        let mut c = small(ExperimentKind::Inclusion, law);
        c.gamma_mults = vec![0.0, 0.5, 1.0, 1.5, 3.0];
        c.replications = 4;
        let recs = run_trajectories(&c).unwrap();
        let mut checked = 0;
        for r in &recs {
            for f in &r.inclusion {
                if f.holds() {
                    if let (Some(rho), Some(w)) = (r.rho_h, f.sandwich_width) {
                        assert!(rho <= w + 1e-6, "n {} gamma {}: {rho} > {w}", r.n, f.gamma_mult);
                        checked += 1;
                    }
                }
            }
        }
        assert!(checked > 10);
    }
}

#[test]
fn grid_mode_is_within_its_bound_of_exact_mode() {
    let mut g = rng(51);
    let model = PlanarModel::UniformUnitSquare;
    let pop = model.region(0.25, 1024).unwrap();
    for case in 0..50 {
        let n = g.random_range(50..=3000);
        let alpha = g.random_range(0.05..0.45);
        let pts = model.sample(n, &mut g);
        let w: Vec<f64> = (0..n)
            .map(|_| if case % 2 == 0 { 1.0 } else { WeightLaw::Exp1.draw(&mut g) })
            .collect();
        let s = WeightedSample::new(pts, w).unwrap();
        let exact = emp_region_cutting_plane(&s, alpha).unwrap();
        let (grid, bound) = emp_region_grid_with_bound(&s, alpha, 2048).unwrap();
        if exact.is_empty() {
            continue;
        }
        assert!(bound.is_finite());
        assert!(hausdorff_distance(&grid, &exact).unwrap() <= bound, "case {case}");
        let a = hausdorff_distance(&grid, &pop).unwrap();
        let b = hausdorff_distance(&exact, &pop).unwrap();
        assert!((a - b).abs() <= bound, "case {case}");
    }
}

#[test]
fn modes_are_recorded() {
    let mut c = small(ExperimentKind::Slln, WeightLaw::Const1);
    c.n_max = 5000;
    c.replications = 1;
    let recs = run_trajectories(&c).unwrap();
    for r in &recs {
        if r.n <= 3000 {
            assert_eq!(r.mode, RegionMode::Exact);
            assert!(r.grid_error_bound.is_none());
        } else {
            assert_eq!(r.mode, RegionMode::Grid);
            assert!(r.grid_error_bound.unwrap() > 0.0);
        }
        assert!(r.wall_time_s.is_none());
    }
    c.mode = RegionMode::Grid;
    c.timing = true;
    assert!(run_trajectories(&c).unwrap().iter().all(|r| r.mode == RegionMode::Grid && r.wall_time_s.is_some()));
}

#[test]
fn persisted_records_round_trip() {
    let mut c = small(ExperimentKind::Inclusion, WeightLaw::Bern02);
    c.gamma_mults = vec![0.5, 1.5];
    c.n_max = 4000;
    let recs = run_trajectories(&c).unwrap();
    let (pc, pj) = (tmp("rt.csv"), tmp("sub/rt.json"));
    persist(&recs, &pc, OutputFormat::Csv).unwrap();
    persist(&recs, &pj, OutputFormat::Json).unwrap();
    let from_csv = load_records(&pc, OutputFormat::Csv).unwrap();
    let from_json = load_records(&pj, OutputFormat::Json).unwrap();
    assert_eq!(from_csv, recs);
    assert_eq!(from_json, recs);
    // persisting again gives the same bytes
    let before = std::fs::read(&pc).unwrap();
    persist(&from_csv, &pc, OutputFormat::Csv).unwrap();
    assert_eq!(std::fs::read(&pc).unwrap(), before);
    let _ = std::fs::remove_file(pc);
    let _ = std::fs::remove_dir_all(pj.parent().unwrap());
}

#[test]
fn empty_record_list_is_header_only() {
    let p = tmp("empty.csv");
    persist(&[], &p, OutputFormat::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{}\n", CSV_HEADER.join(",")));
    assert!(load_records(&p, OutputFormat::Csv).unwrap().is_empty());
    let _ = std::fs::remove_file(p);
    assert!(persist(&[], "/proc/definitely/not/here.csv", OutputFormat::Csv).is_err());
}

#[test]
fn empty_regions_are_recorded_as_missing() {
    let mut c = ExperimentConfig::new(ExperimentKind::Slln, "square", 0.45, WeightLaw::Bern02);
    c.n_min = 3;
    c.n_max = 10;
    c.replications = 40;
    let recs = run_slln(&c).unwrap();
    let missing: usize = medians_by_n(&recs).iter().map(|s| s.missing).sum();
    assert!(missing > 0);
    assert!(recs.iter().filter(|r| r.rho_h.is_none()).all(|r| r.statistic.is_none() && r.normalized.is_none()));
    assert_eq!(missing, recs.iter().filter(|r| r.rho_h.is_none()).count());
}

#[test]
fn slln_distance_is_small_at_ten_thousand_points() {
    let mut c = ExperimentConfig::new(ExperimentKind::Slln, "square", 0.25, WeightLaw::Const1);
    c.n_min = 10_000;
    c.n_max = 10_000;
    c.replications = 50;
    c.seed = 3;
    c.mode = RegionMode::Exact;
    let m = medians_by_n(&run_slln(&c).unwrap());
    assert!(m[0].median_statistic.unwrap() < 0.05);
}

#[test]
fn slln_medians_decrease_along_the_schedule() {
    let mut c = ExperimentConfig::new(ExperimentKind::Slln, "square", 0.25, WeightLaw::Const1);
    c.n_min = 100;
    c.n_max = 10_000;
    c.replications = 20;
    c.seed = 4;
    let m = medians_by_n(&run_slln(&c).unwrap());
    let pairs = m.len() - 1;
    let down = m
        .windows(2)
        .filter(|w| w[1].median_statistic.unwrap() <= w[0].median_statistic.unwrap())
        .count();
    assert!(down as f64 >= 0.9 * pairs as f64, "{down} of {pairs}");
}

#[test]
fn mz_statistic_and_labels() {
    let mut c = small(ExperimentKind::Mz, WeightLaw::Const1);
    c.p = 1.0;
    let run = run_mz(&c).unwrap();
    assert!(run.records.iter().all(|r| r.statistic == r.rho_h));
    c.p = 1.9;
    let run = run_mz(&c).unwrap();
    assert!(!run.decay_asserted && run.label.contains("no decay guarantee asserted"));
    c.p = 1.5;
    let run = run_mz(&c).unwrap();
    assert!(run.decay_asserted);
    for r in &run.records {
        let want = (r.n as f64).powf(1.0 / 3.0) * r.rho_h.unwrap();
        assert!((r.statistic.unwrap() - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn mz_statistic_decays_for_p_one_and_a_half() {
    let mut c = ExperimentConfig::new(ExperimentKind::Mz, "square", 0.25, WeightLaw::Const1);
    c.n_min = 1000;
    c.n_max = 10_000;
    c.per_decade = 1;
    c.replications = 10;
    c.seed = 5;
    c.mode = RegionMode::Exact;
    let m = medians_by_n(&run_mz(&c).unwrap().records);
    assert!(m[1].median_statistic.unwrap() < m[0].median_statistic.unwrap());
}

#[test]
fn zero_radius_sandwich_fails_both_ways() {
    let mut c = small(ExperimentKind::Inclusion, WeightLaw::Const1);
    c.gamma_mults = vec![0.0];
    c.replications = 4;
    let run = run_inclusion(&c).unwrap();
    let s = &run.summary[0];
    assert!(s.tail_lower_failure_rate > 0.0 && s.tail_upper_failure_rate > 0.0);
    assert!(run_inclusion(&ExperimentConfig { gamma_mults: vec![], ..c }).is_err());
}

#[test]
fn lil_run_reports_ratio_to_constant() {
    let mut c = small(ExperimentKind::Lil, WeightLaw::Const1);
    c.replications = 4;
    let run = run_lil_metric(&c).unwrap();
    assert!((run.constant.constant.lower() - 3f64.sqrt() / 4.0).abs() < 1e-15);
    let med = run.median_final_running_max.unwrap();
    assert!((run.ratio_to_constant.unwrap() - med / run.constant.constant.lower()).abs() < 1e-15);
    assert_eq!(run.final_running_max.len(), 4);
}
