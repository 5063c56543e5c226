//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

mod common;

use std::time::{Duration, Instant};

use anyhow::Result;
use conflict_grid::eval::{baddeley_delta2, fld, kmeans_1d, pearson, Delta2Domain, SampleRecord};
use conflict_grid::evidence::{combine_dempster, combine_smets, weight_of_conflict};
use conflict_grid::harness::{sample_grids, sweep, write_records, ExperimentConfig};
use conflict_grid::image::BinaryImage;
use conflict_grid::indicators::{assess, enumerate_configs, FeatureContext, IndicatorConfig, IndicatorKind};
use conflict_grid::simworld::{generate_run, AnomalyParams, Hallway};
use conflict_grid::SensorKind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn evidence_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<_> = (0..1000)
        .map(|_| (common::random_mass(&mut rng, false), common::random_mass(&mut rng, false)))
        .collect();
    let with_conflict: Vec<_> = (0..1000)
        .map(|_| (common::random_mass(&mut rng, true), common::random_mass(&mut rng, true)))
        .collect();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for (a, b) in &pairs {
        let (m, _) = combine_dempster(a, b).unwrap();
        worst = worst.max(common::max_abs_diff(&m, &common::oracle_dempster(a, b)));
        let (s, _) = combine_smets(a, b).unwrap();
        worst = worst.max(common::max_abs_diff(&s, &common::oracle_smets(a, b)));
    }
    for (a, b) in &with_conflict {
        let (s, _) = combine_smets(a, b).unwrap();
        worst = worst.max(common::max_abs_diff(&s, &common::oracle_smets(a, b)));
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-12 && elapsed < Duration::from_secs(1),
        format!("max abs error {worst:.2e}, {:.1} ms", elapsed.as_secs_f64() * 1e3),
    )
}

fn con_additivity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let b: Vec<_> = (0..3).map(|_| common::random_mass(&mut rng, false)).collect();
        let (b12, o12) = combine_dempster(&b[0], &b[1]).unwrap();
        let (_, o123) = combine_dempster(&b12, &b[2]).unwrap();
        let (s12, _) = combine_smets(&b[0], &b[1]).unwrap();
        let (joint, _) = combine_smets(&s12, &b[2]).unwrap();
        let joint_con = weight_of_conflict(joint.conflict).unwrap().con;
        worst = worst.max((o12.con + o123.con - joint_con).abs());
    }
    outcome(worst <= 1e-9, format!("max |sequential - joint| {worst:.2e} over 1000 triples"))
}

fn metric_hand_values() -> Outcome {
    let mut a = BinaryImage::new(3, 3);
    a.set(0, 0, true);
    let mut b = BinaryImage::new(3, 3);
    b.set(0, 1, true);
    let d_aa = baddeley_delta2(&a, &a, 100.0, Delta2Domain::Highlighted).unwrap().value;
    let d_ab = baddeley_delta2(&a, &b, 100.0, Delta2Domain::Highlighted).unwrap().value;
    let f = fld(&[0.0, 0.2], &[1.0, 1.2]).unwrap();
    let p_pos = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
    let p_neg = pearson(&[1.0, 2.0, 3.0], &[-2.0, -4.0, -6.0]).unwrap();
    let pass = d_aa.abs() <= 1e-12
        && (d_ab - 1.0).abs() <= 1e-12
        && (f - 50.0).abs() <= 1e-12
        && (p_pos - 1.0).abs() <= 1e-12
        && (p_neg + 1.0).abs() <= 1e-12;
    outcome(pass, format!("delta2(A,A) {d_aa}, delta2(A,B) {d_ab}, fld {f}, pearson {p_pos}/{p_neg}"))
}

fn kmeans_recovery() -> Outcome {
    let planted = kmeans_1d(&[1.0, 2.0, 10.0, 11.0, 100.0, 101.0], 3, 0).unwrap();
    let planted_ok = planted.labels == vec![0, 0, 1, 1, 2, 2] && planted.centroids == vec![1.5, 10.5, 100.5];
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0;
    for trial in 0..100u64 {
        let mut values = Vec::new();
        for (center, n) in [(-40.0, 12), (10.0, 30), (75.0, 18)] {
            let dist = Normal::new(center + rng.gen_range(-5.0..5.0), rng.gen_range(1.0..3.0)).unwrap();
            values.extend((0..n).map(|_| dist.sample(&mut rng)));
        }
        let got = kmeans_1d(&values, 3, trial).unwrap();
        let (cost, centroids) = common::kmeans_dp(&values, 3);
        let same = (got.inertia - cost).abs() <= 1e-9 * cost.max(1.0)
            && got.centroids.iter().zip(&centroids).all(|(g, w)| (g - w).abs() <= 1e-9);
        if !same {
            mismatches += 1;
        }
    }
    outcome(
        planted_ok && mismatches == 0,
        format!("planted example {}, {mismatches}/100 instances off the DP optimum", if planted_ok { "recovered" } else { "missed" }),
    )
}

fn config_enumeration() -> Outcome {
    let configs = enumerate_configs();
    let n: Vec<usize> = IndicatorKind::ALL
        .iter()
        .map(|k| configs.iter().filter(|c| c.kind == *k).count())
        .collect();
    let want = vec![20, 100, 20, 20, 19, 20, 76, 20, 20, 20, 20];
    outcome(configs.len() == 355 && n == want, format!("{} configs, N = {n:?}", configs.len()))
}

fn gambino_records(records: &[SampleRecord]) -> Vec<&SampleRecord> {
    let id = IndicatorConfig::gambino(2.0).id();
    records.iter().filter(|r| r.config == id).collect()
}

fn clean_world() -> Result<Outcome> {
    let mut cfg = ExperimentConfig::default();
    cfg.anomaly = AnomalyParams::disabled();
    cfg.indicators = Some(vec![IndicatorConfig::gambino(2.0)]);
    let records = sweep(&cfg)?;
    let runs = cfg.runs().len();
    let error_violations = records.iter().filter(|r| r.error >= 300.0).count();
    let score_violations = records.iter().filter(|r| r.conflict_score != 0.0).count();
    let max_error = records.iter().map(|r| r.error).fold(0.0, f64::max);
    let max_score = records.iter().map(|r| r.conflict_score).fold(0.0, f64::max);
    Ok(outcome(
        error_violations == 0 && score_violations == 0 && records.len() == runs * 10,
        format!(
            "{runs} runs, {} samples: {error_violations} with error >= 300 (max {max_error:.1}), \
             {score_violations} with gambino@2 score > 0 (max {max_score:.3})",
            records.len()
        ),
    ))
}

fn degraded_detection(records: &[SampleRecord]) -> Outcome {
    let g = gambino_records(records);
    let watched = |r: &&&SampleRecord| r.sensor == SensorKind::Sonar || r.hallway == Hallway::Window.as_str();
    let inaccurate: Vec<_> = g.iter().filter(watched).filter(|r| r.error >= 300.0).collect();
    let detected = inaccurate.iter().filter(|r| r.conflict_score >= 3.0).count();
    let rate = if inaccurate.is_empty() { 1.0 } else { detected as f64 / inaccurate.len() as f64 };
    let smooth_laser: Vec<_> = g
        .iter()
        .filter(|r| r.sensor == SensorKind::Laser && r.hallway != Hallway::Window.as_str())
        .collect();
    let laser_over = smooth_laser.iter().filter(|r| r.error >= 300.0).count();
    let max_inacc_score = inaccurate.iter().map(|r| r.conflict_score).fold(0.0, f64::max);
    outcome(
        rate >= 0.9 && laser_over == 0,
        format!(
            "{detected}/{} inaccurate sonar/window-laser samples score >= 3 (max score {max_inacc_score:.3}); \
             {laser_over}/{} smooth-hallway laser samples at error >= 300",
            inaccurate.len(),
            smooth_laser.len()
        ),
    )
}

fn estimation_direction(records: &[SampleRecord]) -> Outcome {
    let g = gambino_records(records);
    let scores: Vec<f64> = g.iter().map(|r| r.conflict_score).collect();
    let errors: Vec<f64> = g.iter().map(|r| r.error).collect();
    match pearson(&scores, &errors) {
        Ok(r) => outcome(r >= 0.5, format!("pooled pearson {r:.4} over {} samples", g.len())),
        Err(e) => outcome(false, format!("pearson undefined: {e}")),
    }
}

fn monotonicity() -> Result<Outcome> {
    let cfg = ExperimentConfig::default();
    let configs = enumerate_configs();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut violations = 0;
    let mut checks = 0;
    for _ in 0..10 {
        let hallway = Hallway::ALL[rng.gen_range(0..3)];
        let sensor = if rng.gen_bool(0.5) { SensorKind::Sonar } else { SensorKind::Laser };
        let log = generate_run(&cfg.scenario(hallway, sensor), rng.gen())?;
        let samples = sample_grids(&cfg, &log)?;
        let grid = &samples[rng.gen_range(0..samples.len())].grid;
        let ctx = FeatureContext::new(grid, cfg.sensor_params(sensor));
        let counts = configs
            .iter()
            .map(|c| Ok(assess(grid, c, &ctx)?.0.image.count()))
            .collect::<Result<Vec<usize>>>()?;
        // Consecutive configs differ only in the primary threshold unless the
        // kind or secondary changes.
        for i in 1..configs.len() {
            let (a, b) = (&configs[i - 1], &configs[i]);
            if a.kind == b.kind && a.secondary == b.secondary {
                checks += 1;
                if counts[i] > counts[i - 1] {
                    violations += 1;
                }
            }
        }
        for (i, a) in configs.iter().enumerate() {
            for (j, b) in configs.iter().enumerate() {
                if a.kind == IndicatorKind::Area && b.kind == IndicatorKind::Area && a.primary == b.primary && b.secondary > a.secondary {
                    checks += 1;
                    if counts[j] > counts[i] {
                        violations += 1;
                    }
                }
            }
        }
    }
    Ok(outcome(violations == 0, format!("{violations} violations in {checks} comparisons over 10 sampled grids")))
}

fn timed_sweep(cfg: &ExperimentConfig) -> Result<(Vec<SampleRecord>, Vec<u8>, Duration)> {
    let start = Instant::now();
    let records = sweep(cfg)?;
    let mut bytes = Vec::new();
    write_records(&mut bytes, &records)?;
    Ok((records, bytes, start.elapsed()))
}

fn main() -> Result<()> {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    results.push((1, "evidence oracle equivalence", evidence_oracle()));
    results.push((2, "Con additivity", con_additivity()));
    results.push((3, "metric hand values", metric_hand_values()));
    results.push((4, "k-means recovery", kmeans_recovery()));
    results.push((5, "config enumeration", config_enumeration()));
    results.push((6, "clean-world anchor", clean_world()?));

    let cfg = ExperimentConfig::default();
    let (records, first, t1) = timed_sweep(&cfg)?;
    let (_, second, t2) = timed_sweep(&cfg)?;

    results.push((7, "degraded-world detection", degraded_detection(&records)));
    results.push((8, "estimation direction", estimation_direction(&records)));
    results.push((9, "suspect-count monotonicity", monotonicity()?));
    let limit = Duration::from_secs(600);
    results.push((
        10,
        "determinism and scale",
        outcome(
            first == second && t1 < limit && t2 < limit,
            format!(
                "{} records, outputs {}, {:.1} s and {:.1} s",
                records.len(),
                if first == second { "byte-identical" } else { "differ" },
                t1.as_secs_f64(),
                t2.as_secs_f64()
            ),
        ),
    ));

    let mut failed = 0;
    for (n, name, o) in &results {
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {n:>2} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
