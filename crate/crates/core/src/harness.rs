//! Batch experiments: replay run logs into grids, score every indicator
//! configuration at each sample point, sweep the full protocol and summarize.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{
    classify, delta2_fields, fld, kmeans_1d, pearson, Delta2Domain, DistanceField, GridClass, SampleRecord,
    DEFAULT_CUTOFF, DEFAULT_ERROR_THRESHOLD,
};
use crate::gridmap::{rasterize_truth, CellStats, EvidenceGrid, GambinoRule, GridSpec};
use crate::image::{otsu_binarize, BinaryImage};
use crate::indicators::{assess_stats, enumerate_configs, FeatureContext, IndicatorConfig, IndicatorKind};
use crate::sensor_model::{SensorKind, SensorModelParams};
use crate::simworld::{generate_run, AnomalyParams, Hallway, RunLog, Scenario};

pub const WORKERS_ENV: &str = "CONFLICT_GRID_WORKERS";

fn default_hallways() -> Vec<Hallway> {
    Hallway::ALL.to_vec()
}
fn default_sensors() -> Vec<SensorKind> {
    vec![SensorKind::Sonar, SensorKind::Laser]
}
fn default_seeds() -> Vec<u64> {
    (1..=5).collect()
}
fn default_samples() -> Vec<f64> {
    (0..10).map(|i| 1.0 + 0.5 * i as f64).collect()
}
fn default_step() -> f64 {
    0.1
}
fn default_run_distance() -> f64 {
    6.0
}
fn default_threshold() -> f64 {
    DEFAULT_ERROR_THRESHOLD
}
fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF
}
fn default_designated() -> IndicatorConfig {
    IndicatorConfig::gambino(2.0)
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

/// Everything a sweep needs. Every field has a default, so `{}` is a valid
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_hallways")]
    pub hallways: Vec<Hallway>,
    #[serde(default = "default_sensors")]
    pub sensors: Vec<SensorKind>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default = "SensorModelParams::sonar")]
    pub sonar: SensorModelParams,
    #[serde(default = "SensorModelParams::laser")]
    pub laser: SensorModelParams,
    #[serde(default)]
    pub anomaly: AnomalyParams,
    #[serde(default)]
    pub gambino: GambinoRule,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_run_distance")]
    pub run_distance: f64,
    /// Distances traveled (meters) at which the grid is scored.
    #[serde(default = "default_samples")]
    pub samples: Vec<f64>,
    /// Indicator configurations to score; all 355 when absent.
    #[serde(default)]
    pub indicators: Option<Vec<IndicatorConfig>>,
    #[serde(default = "default_threshold")]
    pub error_threshold: f64,
    #[serde(default = "default_cutoff")]
    pub delta2_cutoff: f64,
    #[serde(default)]
    pub delta2_domain: Delta2Domain,
    /// Configuration whose false-positive and false-negative rates are reported.
    #[serde(default = "default_designated")]
    pub designated: IndicatorConfig,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    /// Write per-sample error images and designated conflict maps as PGM.
    #[serde(default)]
    pub write_images: bool,
    /// Worker threads; falls back to `CONFLICT_GRID_WORKERS`, then all cores.
    #[serde(default)]
    pub workers: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults deserialize")
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Replaces the seed list with `base, base + 1, ...` of the same length.
    pub fn with_seed(mut self, base: u64) -> Self {
        let n = self.seeds.len().max(1) as u64;
        self.seeds = (0..n).map(|i| base.wrapping_add(i)).collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.hallways.is_empty(), "no hallways selected");
        ensure!(!self.sensors.is_empty(), "no sensors selected");
        ensure!(!self.seeds.is_empty(), "no seeds given");
        ensure!(!self.samples.is_empty(), "empty sample schedule");
        ensure!(
            self.samples.windows(2).all(|w| w[0] < w[1]),
            "sample schedule must be strictly increasing"
        );
        ensure!(
            self.samples[0] > 0.0 && *self.samples.last().unwrap() <= self.run_distance + 1e-9,
            "sample schedule must fit within the {} m run",
            self.run_distance
        );
        self.grid.validate()?;
        self.sonar.validate()?;
        self.laser.validate()?;
        ensure!(self.sonar.kind == SensorKind::Sonar, "sonar params carry kind {}", self.sonar.kind);
        ensure!(self.laser.kind == SensorKind::Laser, "laser params carry kind {}", self.laser.kind);
        self.anomaly.validate()?;
        self.designated.validate()?;
        if let Some(list) = &self.indicators {
            for c in list {
                c.validate()?;
            }
        }
        Ok(())
    }

    pub fn sensor_params(&self, kind: SensorKind) -> &SensorModelParams {
        match kind {
            SensorKind::Sonar => &self.sonar,
            SensorKind::Laser => &self.laser,
        }
    }

    pub fn indicator_list(&self) -> Vec<IndicatorConfig> {
        self.indicators.clone().unwrap_or_else(enumerate_configs)
    }

    pub fn scenario(&self, hallway: Hallway, sensor: SensorKind) -> Scenario {
        Scenario {
            environment: hallway.environment(),
            sensor: self.sensor_params(sensor).clone(),
            anomaly: self.anomaly,
            step: self.step,
            run_distance: self.run_distance,
        }
    }

    pub fn runs(&self) -> Vec<RunSpec> {
        let mut out = Vec::new();
        for &hallway in &self.hallways {
            for &sensor in &self.sensors {
                for &seed in &self.seeds {
                    out.push(RunSpec { hallway, sensor, seed });
                }
            }
        }
        out
    }

    fn worker_count(&self) -> usize {
        self.workers
            .or_else(|| std::env::var(WORKERS_ENV).ok().and_then(|v| v.parse().ok()))
            .filter(|&n| n > 0)
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
    }
}

/// One run of the protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RunSpec {
    pub hallway: Hallway,
    pub sensor: SensorKind,
    pub seed: u64,
}

impl RunSpec {
    pub fn id(&self) -> String {
        format!("{}-{}-{}", self.hallway, self.sensor, self.seed)
    }

    /// Seed of the simulator stream, distinct per hallway and sensor.
    pub fn stream_seed(&self) -> u64 {
        let h = self.hallway as u64;
        let s = self.sensor as u64;
        let mut z = self.seed ^ (h << 56) ^ (s << 48);
        // splitmix64 finalizer
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Grid, truth and per-sample results for one replayed run.
pub struct SampledGrid {
    pub distance: f64,
    pub error: f64,
    pub error_image: BinaryImage,
    pub grid: EvidenceGrid,
}

/// Grid spec centered on the run's start pose.
pub fn grid_for(config: &ExperimentConfig, log: &RunLog) -> GridSpec {
    let start = log.scenario.start_pose();
    config.grid.with_origin(start.x, start.y)
}

fn check_log(config: &ExperimentConfig, log: &RunLog) -> Result<()> {
    let kind = log.scenario.sensor.kind;
    if &log.scenario.sensor != config.sensor_params(kind) {
        bail!("run log was generated with {} parameters that differ from the config", kind);
    }
    if let Some(last) = log.records.last() {
        ensure!(
            last.distance + 1e-9 >= *config.samples.last().unwrap(),
            "run log ends at {} m, before the last sample point",
            last.distance
        );
    }
    Ok(())
}

/// Replays `log` and calls `visit` with the grid at every sample distance.
pub fn replay<F>(config: &ExperimentConfig, log: &RunLog, mut visit: F) -> Result<()>
where
    F: FnMut(f64, &EvidenceGrid) -> Result<()>,
{
    check_log(config, log)?;
    let spec = grid_for(config, log);
    let params = config.sensor_params(log.scenario.sensor.kind);
    let mut grid = EvidenceGrid::with_rule(spec, config.gambino)?;
    let mut next = 0;
    for rec in &log.records {
        grid.update(&rec.scan, params)?;
        while next < config.samples.len() && rec.distance + 1e-9 >= config.samples[next] {
            visit(config.samples[next], &grid)?;
            next += 1;
        }
    }
    ensure!(next == config.samples.len(), "run log too short for the sample schedule");
    Ok(())
}

/// Error score, error image and the grid at every sample point.
pub fn sample_grids(config: &ExperimentConfig, log: &RunLog) -> Result<Vec<SampledGrid>> {
    let truth = rasterize_truth(&log.scenario.environment, &grid_for(config, log))?;
    let mut out = Vec::new();
    replay(config, log, |distance, grid| {
        let values = grid.error_values(&truth)?;
        let w = grid.width();
        out.push(SampledGrid {
            distance,
            error: values.iter().sum(),
            error_image: otsu_binarize(w, w, &values),
            grid: grid.clone(),
        });
        Ok(())
    })?;
    Ok(out)
}

/// Receives the cropped error image and designated conflict map of each sample.
pub type ImageSink<'a> = dyn FnMut(&RunSpec, f64, &BinaryImage, &BinaryImage) -> Result<()> + 'a;

/// Scores every configuration at every sample point of one run.
pub fn run_experiment(
    config: &ExperimentConfig,
    run: &RunSpec,
    log: &RunLog,
    indicators: &[IndicatorConfig],
    mut images: Option<&mut ImageSink<'_>>,
) -> Result<Vec<SampleRecord>> {
    ensure!(
        log.scenario.sensor.kind == run.sensor,
        "run {} expects {} data, log holds {}",
        run.id(),
        run.sensor,
        log.scenario.sensor.kind
    );
    let spec = grid_for(config, log);
    let truth = rasterize_truth(&log.scenario.environment, &spec)?;
    let params = config.sensor_params(run.sensor).clone();
    let run_id = run.id();
    let mut records = Vec::with_capacity(indicators.len() * config.samples.len());
    replay(config, log, |distance, grid| {
        let values = grid.error_values(&truth)?;
        let error: f64 = values.iter().sum();
        let w = grid.width();
        let ctx = FeatureContext::new(grid, &params);

        // Everything outside the updated box is unscanned: zero error, never
        // suspect. Both images live inside the box, so Δ² on the crop is exact.
        let (x0, y0, x1, y1) = grid.updated_bounds().unwrap_or((0, 0, 0, 0));
        let cw = x1 - x0;
        let mut stats: Vec<CellStats> = Vec::with_capacity(cw * (y1 - y0));
        let mut crop_values = Vec::with_capacity(cw * (y1 - y0));
        for y in y0..y1 {
            for x in x0..x1 {
                stats.push(grid.cells()[y * w + x].stats);
                crop_values.push(values[y * w + x]);
            }
        }
        // Otsu over the crop alone would drop the unscanned zeros, so binarize
        // the full raster and crop afterwards.
        let full_err = otsu_binarize(w, w, &values);
        let err_img = full_err.crop(x0, y0, x1, y1);
        let err_field = DistanceField::new(err_img.clone(), config.delta2_cutoff);
        let mut cache: HashMap<Vec<bool>, (f64, bool)> = HashMap::new();

        for cfg in indicators {
            let (map, score) = assess_stats(&stats, cw, cfg, &ctx)?;
            let (delta2, both_empty) = match cache.get(map.pixels()) {
                Some(&v) => v,
                None => {
                    let d = delta2_fields(
                        &DistanceField::new(map.clone(), config.delta2_cutoff),
                        &err_field,
                        config.delta2_domain,
                    );
                    let v = (d.value, d.both_empty);
                    cache.insert(map.pixels().to_vec(), v);
                    v
                }
            };
            if *cfg == config.designated {
                if let Some(sink) = images.as_mut() {
                    sink(run, distance, &err_img, &map)?;
                }
            }
            records.push(SampleRecord {
                run_id: run_id.clone(),
                hallway: run.hallway.to_string(),
                sensor: run.sensor,
                seed: run.seed,
                config: cfg.id(),
                distance,
                error,
                conflict_score: score,
                delta2,
                delta2_both_empty: both_empty,
            });
        }
        Ok(())
    })?;
    Ok(records)
}

/// Simulates and scores one run.
pub fn execute_run(config: &ExperimentConfig, run: &RunSpec, indicators: &[IndicatorConfig]) -> Result<Vec<SampleRecord>> {
    let log = generate_run(&config.scenario(run.hallway, run.sensor), run.stream_seed())?;
    let mut sink = |r: &RunSpec, d: f64, err: &BinaryImage, map: &BinaryImage| -> Result<()> {
        let dir = config.output_dir.join("images").join(r.id());
        fs::create_dir_all(&dir)?;
        err.write_pgm(File::create(dir.join(format!("error_{d:.1}.pgm")))?, "error image: 255 = highlighted")?;
        map.write_pgm(
            File::create(dir.join(format!("conflict_{d:.1}.pgm")))?,
            &format!("conflict map {}: 255 = suspect", config.designated),
        )?;
        Ok(())
    };
    let images: Option<&mut ImageSink<'_>> =
        if config.write_images { Some(&mut sink) } else { None };
    run_experiment(config, run, &log, indicators, images).with_context(|| format!("run {}", run.id()))
}

/// Runs the full protocol. Records come back sorted by run, then config
/// order, then distance, independent of scheduling.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SampleRecord>> {
    config.validate()?;
    let indicators = config.indicator_list();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .context("building worker pool")?;
    let runs = config.runs();
    let per_run: Vec<Vec<SampleRecord>> = pool.install(|| {
        runs.par_iter()
            .map(|run| execute_run(config, run, &indicators))
            .collect::<Result<Vec<_>>>()
    })?;
    let order: HashMap<String, usize> = indicators.iter().enumerate().map(|(i, c)| (c.id(), i)).collect();
    let mut keyed: Vec<(RunSpec, Vec<SampleRecord>)> = runs.into_iter().zip(per_run).collect();
    keyed.sort_by_key(|k| k.0);
    let mut out = Vec::new();
    for (_, mut recs) in keyed {
        recs.sort_by(|a, b| order[&a.config].cmp(&order[&b.config]).then(a.distance.total_cmp(&b.distance)));
        out.extend(recs);
    }
    Ok(out)
}

pub fn write_records<W: Write>(out: W, records: &[SampleRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for r in rdr.deserialize() {
        out.push(r?);
    }
    Ok(out)
}

/// Runs the sweep and writes `results.csv` into the output directory.
pub fn sweep_to_disk(config: &ExperimentConfig) -> Result<(PathBuf, Vec<SampleRecord>)> {
    let records = sweep(config)?;
    fs::create_dir_all(&config.output_dir).with_context(|| format!("creating {}", config.output_dir.display()))?;
    let path = config.output_dir.join("results.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_records(BufWriter::new(file), &records)?;
    Ok((path, records))
}

/// Mean, population variance and best value of one statistic across a kind's
/// configurations. `n` counts configs with a defined value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub mean: f64,
    pub variance: f64,
    pub best: f64,
    pub n: usize,
}

impl Summary {
    fn of(values: &[f64], best: impl Fn(f64, f64) -> f64) -> Option<Self> {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        if values.is_empty() {
            return None;
        }
        let best = values.iter().copied().reduce(best)?;
        let (mean, variance) = if finite.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            let m = finite.iter().sum::<f64>() / finite.len() as f64;
            (m, finite.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / finite.len() as f64)
        };
        Some(Self {
            mean,
            variance,
            best,
            n: values.len(),
        })
    }
}

/// Per-configuration statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigStats {
    pub config: String,
    pub kind: IndicatorKind,
    pub pearson_sonar: Option<f64>,
    pub pearson_laser: Option<f64>,
    pub pearson_pooled: Option<f64>,
    pub delta2_mean: f64,
    pub fld: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KindSummary {
    pub kind: IndicatorKind,
    /// Configurations of this kind present in the results.
    pub n: usize,
    pub pearson_sonar: Option<Summary>,
    pub pearson_laser: Option<Summary>,
    pub pearson_pooled: Option<Summary>,
    /// Largest |r| over the per-sensor and pooled correlations.
    pub pearson_best_abs: Option<f64>,
    /// Best is the smallest mean Δ².
    pub delta2: Option<Summary>,
    pub fld: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassRates {
    pub config: String,
    pub accurate: usize,
    pub inaccurate: usize,
    /// Accurate grids with a positive conflict score.
    pub false_positive_rate: f64,
    /// Inaccurate grids with a zero conflict score.
    pub false_negative_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub samples: usize,
    pub error_threshold: f64,
    pub configs: Vec<ConfigStats>,
    pub kinds: Vec<KindSummary>,
    pub designated: Option<ClassRates>,
    /// Ascending k-means (k = 2) centroids of the per-sample error scores and
    /// the smallest error assigned to the upper cluster.
    pub error_clusters: Option<(Vec<f64>, f64)>,
}

fn kind_of(config_id: &str) -> Result<IndicatorKind> {
    let name = config_id.split('@').next().unwrap_or("");
    name.parse().map_err(|e: String| anyhow::anyhow!(e))
}

/// Summaries over a results set. Records of a config are matched across
/// sensors by their order in `records`.
pub fn report(records: &[SampleRecord], error_threshold: f64, designated: &IndicatorConfig) -> Result<Report> {
    ensure!(!records.is_empty(), "no records to report on");
    let mut by_config: Vec<(String, Vec<&SampleRecord>)> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for r in records {
        let i = *index.entry(r.config.as_str()).or_insert_with(|| {
            by_config.push((r.config.clone(), Vec::new()));
            by_config.len() - 1
        });
        by_config[i].1.push(r);
    }

    let corr = |rs: &[&SampleRecord]| -> Option<f64> {
        let xs: Vec<f64> = rs.iter().map(|r| r.conflict_score).collect();
        let ys: Vec<f64> = rs.iter().map(|r| r.error).collect();
        pearson(&xs, &ys).ok()
    };

    let mut configs = Vec::new();
    for (id, rs) in &by_config {
        let sonar: Vec<&SampleRecord> = rs.iter().copied().filter(|r| r.sensor == SensorKind::Sonar).collect();
        let laser: Vec<&SampleRecord> = rs.iter().copied().filter(|r| r.sensor == SensorKind::Laser).collect();
        let (acc, inacc): (Vec<f64>, Vec<f64>) = {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for r in rs {
                match classify(r.error, error_threshold) {
                    GridClass::Accurate => a.push(r.conflict_score),
                    GridClass::Inaccurate => b.push(r.conflict_score),
                }
            }
            (a, b)
        };
        configs.push(ConfigStats {
            config: id.clone(),
            kind: kind_of(id)?,
            pearson_sonar: corr(&sonar),
            pearson_laser: corr(&laser),
            pearson_pooled: corr(rs),
            delta2_mean: rs.iter().map(|r| r.delta2).sum::<f64>() / rs.len() as f64,
            fld: fld(&inacc, &acc).ok(),
        });
    }

    let max = |a: f64, b: f64| if b > a { b } else { a };
    let min = |a: f64, b: f64| if b < a { b } else { a };
    let mut kinds = Vec::new();
    for kind in IndicatorKind::ALL {
        let cs: Vec<&ConfigStats> = configs.iter().filter(|c| c.kind == kind).collect();
        if cs.is_empty() {
            continue;
        }
        let col = |f: &dyn Fn(&ConfigStats) -> Option<f64>| -> Vec<f64> { cs.iter().filter_map(|c| f(c)).collect() };
        let ps = col(&|c| c.pearson_sonar);
        let pl = col(&|c| c.pearson_laser);
        let pp = col(&|c| c.pearson_pooled);
        let best_abs = ps.iter().chain(&pl).chain(&pp).map(|v| v.abs()).reduce(f64::max);
        kinds.push(KindSummary {
            kind,
            n: cs.len(),
            pearson_sonar: Summary::of(&ps, max),
            pearson_laser: Summary::of(&pl, max),
            pearson_pooled: Summary::of(&pp, max),
            pearson_best_abs: best_abs,
            delta2: Summary::of(&col(&|c| Some(c.delta2_mean)), min),
            fld: Summary::of(&col(&|c| c.fld), max),
        });
    }

    let designated_id = designated.id();
    let designated = by_config.iter().find(|(id, _)| *id == designated_id).map(|(id, rs)| {
        let (mut acc, mut inacc, mut fp, mut fnr) = (0usize, 0usize, 0usize, 0usize);
        for r in rs {
            match classify(r.error, error_threshold) {
                GridClass::Accurate => {
                    acc += 1;
                    fp += (r.conflict_score > 0.0) as usize;
                }
                GridClass::Inaccurate => {
                    inacc += 1;
                    fnr += (r.conflict_score == 0.0) as usize;
                }
            }
        }
        let rate = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        ClassRates {
            config: id.clone(),
            accurate: acc,
            inaccurate: inacc,
            false_positive_rate: rate(fp, acc),
            false_negative_rate: rate(fnr, inacc),
        }
    });

    // One error value per sample point, taken from the first config.
    let errors: Vec<f64> = by_config[0].1.iter().map(|r| r.error).collect();
    let error_clusters = kmeans_1d(&errors, 2, 0).ok().map(|km| {
        let boundary = errors
            .iter()
            .zip(&km.labels)
            .filter(|(_, &l)| l == 1)
            .map(|(&e, _)| e)
            .fold(f64::INFINITY, f64::min);
        (km.centroids, boundary)
    });

    Ok(Report {
        samples: by_config[0].1.len(),
        error_threshold,
        configs,
        kinds,
        designated,
        error_clusters,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".to_string(), |x| format!("{x:.4}"))
}

fn fmt_summary(s: &Option<Summary>) -> [String; 3] {
    match s {
        Some(s) => [format!("{:.4}", s.mean), format!("{:.4}", s.variance), format!("{:.4}", s.best)],
        None => ["undefined".into(), "undefined".into(), "undefined".into()],
    }
}

impl Report {
    /// One row per indicator kind.
    pub fn write_summary_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec!["kind".to_string(), "n".into()];
        for group in ["pearson_sonar", "pearson_laser", "pearson_pooled", "delta2", "fld"] {
            for col in ["mean", "variance", "best"] {
                header.push(format!("{group}_{col}"));
            }
        }
        header.push("pearson_best_abs".into());
        wtr.write_record(&header)?;
        for k in &self.kinds {
            let mut row = vec![k.kind.to_string(), k.n.to_string()];
            for s in [&k.pearson_sonar, &k.pearson_laser, &k.pearson_pooled, &k.delta2, &k.fld] {
                row.extend(fmt_summary(s));
            }
            row.push(fmt_opt(k.pearson_best_abs));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// One row per configuration.
    pub fn write_config_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["config", "kind", "pearson_sonar", "pearson_laser", "pearson_pooled", "delta2_mean", "fld"])?;
        for c in &self.configs {
            wtr.write_record([
                c.config.clone(),
                c.kind.to_string(),
                fmt_opt(c.pearson_sonar),
                fmt_opt(c.pearson_laser),
                fmt_opt(c.pearson_pooled),
                format!("{:.4}", c.delta2_mean),
                fmt_opt(c.fld),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "samples per config: {}", self.samples)?;
        writeln!(out, "classification threshold: {}", self.error_threshold)?;
        writeln!(out)?;
        writeln!(
            out,
            "{:<20} {:>4} {:>26} {:>26} {:>26} {:>28} {:>26}",
            "kind", "N", "pearson sonar m/v/best", "pearson laser m/v/best", "pearson pooled m/v/best", "delta2 m/v/best", "fld m/v/best"
        )?;
        for k in &self.kinds {
            let cells: Vec<String> = [&k.pearson_sonar, &k.pearson_laser, &k.pearson_pooled, &k.delta2, &k.fld]
                .iter()
                .map(|s| fmt_summary(s).join("/"))
                .collect();
            writeln!(
                out,
                "{:<20} {:>4} {:>26} {:>26} {:>26} {:>28} {:>26}",
                k.kind.as_str(), k.n, cells[0], cells[1], cells[2], cells[3], cells[4]
            )?;
        }
        writeln!(out)?;
        match &self.designated {
            Some(d) => writeln!(
                out,
                "{}: {} accurate, {} inaccurate, false positives {:.1}%, false negatives {:.1}%",
                d.config,
                d.accurate,
                d.inaccurate,
                100.0 * d.false_positive_rate,
                100.0 * d.false_negative_rate
            )?,
            None => writeln!(out, "designated config not present in results")?,
        }
        if let Some((centroids, boundary)) = &self.error_clusters {
            writeln!(
                out,
                "error clusters (k = 2): centroids {:?}, upper cluster starts at {:.1}",
                centroids.iter().map(|c| (c * 10.0).round() / 10.0).collect::<Vec<_>>(),
                boundary
            )?;
        }
        Ok(())
    }

    /// Writes `summary.csv`, `configs.csv` and `summary.txt` into `dir`.
    pub fn write_all(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        self.write_summary_csv(BufWriter::new(File::create(dir.join("summary.csv"))?))?;
        self.write_config_csv(BufWriter::new(File::create(dir.join("configs.csv"))?))?;
        self.write_text(BufWriter::new(File::create(dir.join("summary.txt"))?))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(config: &str, sensor: SensorKind, error: f64, score: f64) -> SampleRecord {
        SampleRecord {
            run_id: "r".into(),
            hallway: "narrow".into(),
            sensor,
            seed: 1,
            config: config.into(),
            distance: 1.0,
            error,
            conflict_score: score,
            delta2: 0.0,
            delta2_both_empty: true,
        }
    }

    #[test]
    fn default_config_shape() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.runs().len(), 30);
        assert_eq!(cfg.samples, vec![1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0, 5.5]);
        assert_eq!(cfg.indicator_list().len(), 355);
        let seeds = cfg.clone().with_seed(100).seeds;
        assert_eq!(seeds, vec![100, 101, 102, 103, 104]);
    }

    #[test]
    fn config_rejects_bad_schedule() {
        let mut cfg = ExperimentConfig::default();
        cfg.samples = vec![1.0, 1.0];
        assert!(cfg.validate().is_err());
        cfg.samples = vec![1.0, 7.0];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn stream_seeds_differ() {
        let a = RunSpec { hallway: Hallway::Narrow, sensor: SensorKind::Sonar, seed: 1 };
        let b = RunSpec { sensor: SensorKind::Laser, ..a };
        let c = RunSpec { hallway: Hallway::Wide, ..a };
        assert_ne!(a.stream_seed(), b.stream_seed());
        assert_ne!(a.stream_seed(), c.stream_seed());
    }

    #[test]
    fn planted_report() {
        let mut recs = Vec::new();
        for i in 0..6 {
            let e = 100.0 * i as f64;
            let sensor = if i % 2 == 0 { SensorKind::Sonar } else { SensorKind::Laser };
            recs.push(record("total@0.25", sensor, e, e / 100.0));
            recs.push(record("gambino@2", sensor, e, 0.0));
        }
        let rep = report(&recs, 300.0, &IndicatorConfig::gambino(2.0)).unwrap();
        let total = rep.kinds.iter().find(|k| k.kind == IndicatorKind::Total).unwrap();
        assert_eq!(total.pearson_pooled.unwrap().best, 1.0);
        let g = rep.configs.iter().find(|c| c.config == "gambino@2").unwrap();
        assert_eq!(g.pearson_pooled, None);
        let d = rep.designated.unwrap();
        assert_eq!((d.accurate, d.inaccurate), (3, 3));
        assert_eq!(d.false_negative_rate, 1.0);
        assert_eq!(d.false_positive_rate, 0.0);
    }

    #[test]
    fn records_roundtrip_csv() {
        let recs = vec![record("gambino@2", SensorKind::Sonar, 12.5, 0.25)];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert_eq!(read_records(&buf[..]).unwrap(), recs);
    }
}
