use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use conflict_grid::gridmap::{rasterize_truth, EvidenceGrid};
use conflict_grid::harness::{self, read_records, report, sample_grids, ExperimentConfig, RunSpec};
use conflict_grid::indicators::{assess, enumerate_configs, FeatureContext};
use conflict_grid::image::otsu_binarize;
use conflict_grid::simworld::{generate_run, Hallway, RunLog};
use conflict_grid::SensorKind;

#[derive(Parser)]
#[command(name = "conflict-grid", version, about = "Evidential grids and conflict indicators on simulated hallway runs")]
struct Cli {
    /// Experiment config (JSON). Defaults apply to every missing field.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Base seed; replaces the config's seed list with consecutive seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write it as JSON lines.
    Simulate {
        #[arg(long)]
        hallway: Hallway,
        #[arg(long)]
        sensor: SensorKind,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Replay a run log into a grid and write PGM images and per-cell stats.
    Map {
        log: PathBuf,
        #[arg(long, short, default_value = "map")]
        out_dir: PathBuf,
    },
    /// Print error and designated conflict score at each sample point of a log.
    Score { log: PathBuf },
    /// Run the full protocol and write results.csv plus the report.
    Sweep {
        #[arg(long, short)]
        out_dir: Option<PathBuf>,
    },
    /// Summarize a results CSV.
    Report {
        results: PathBuf,
        #[arg(long, short)]
        out_dir: Option<PathBuf>,
    },
    /// List the indicator configurations.
    Configs,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    Ok(match cli.seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    })
}

fn read_log(path: &PathBuf) -> Result<RunLog> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    RunLog::read_jsonl(BufReader::new(f)).with_context(|| format!("reading {}", path.display()))
}

fn main() -> Result<()> {
    match run(Cli::parse()) {
        Err(e) if e.chain().any(|c| c.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe)) => Ok(()),
        other => other,
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    match &cli.command {
        Command::Simulate { hallway, sensor, out } => {
            let run = RunSpec {
                hallway: *hallway,
                sensor: *sensor,
                seed: cfg.seeds[0],
            };
            let log = generate_run(&cfg.scenario(*hallway, *sensor), run.stream_seed())?;
            log.write_jsonl(BufWriter::new(File::create(out)?))?;
            eprintln!("wrote {} scans to {}", log.records.len(), out.display());
        }
        Command::Map { log, out_dir } => {
            let log = read_log(log)?;
            let spec = harness::grid_for(&cfg, &log);
            let params = cfg.sensor_params(log.scenario.sensor.kind);
            let mut grid = EvidenceGrid::with_rule(spec, cfg.gambino)?;
            for rec in &log.records {
                grid.update(&rec.scan, params)?;
            }
            let truth = rasterize_truth(&log.scenario.environment, &spec)?;
            fs::create_dir_all(out_dir)?;
            grid.write_occupancy_pgm(BufWriter::new(File::create(out_dir.join("grid.pgm"))?))?;
            truth.write_pgm(BufWriter::new(File::create(out_dir.join("truth.pgm"))?))?;
            let w = grid.width();
            let err = otsu_binarize(w, w, &grid.error_values(&truth)?);
            err.write_pgm(BufWriter::new(File::create(out_dir.join("error.pgm"))?), "error image: 255 = highlighted")?;
            let ctx = FeatureContext::new(&grid, params);
            let (map, score) = assess(&grid, &cfg.designated, &ctx)?;
            map.image.write_pgm(
                BufWriter::new(File::create(out_dir.join("conflict.pgm"))?),
                &format!("conflict map {}: 255 = suspect", cfg.designated),
            )?;
            grid.write_stats_csv(BufWriter::new(File::create(out_dir.join("stats.csv"))?))?;
            println!(
                "error {:.2}, {} score {:.4}, {} cells updated",
                grid.error_values(&truth)?.iter().sum::<f64>(),
                cfg.designated,
                score,
                grid.updated_cell_count()
            );
        }
        Command::Score { log } => {
            let log = read_log(log)?;
            let params = cfg.sensor_params(log.scenario.sensor.kind);
            let mut out = io::stdout().lock();
            writeln!(out, "distance,error,class,{}", cfg.designated)?;
            for s in sample_grids(&cfg, &log)? {
                let ctx = FeatureContext::new(&s.grid, params);
                let (_, score) = assess(&s.grid, &cfg.designated, &ctx)?;
                let class = conflict_grid::eval::classify(s.error, cfg.error_threshold);
                writeln!(out, "{},{:.4},{:?},{:.4}", s.distance, s.error, class, score)?;
            }
        }
        Command::Sweep { out_dir } => {
            let mut cfg = cfg;
            if let Some(d) = out_dir {
                cfg.output_dir = d.clone();
            }
            let (path, records) = harness::sweep_to_disk(&cfg)?;
            eprintln!("wrote {} records to {}", records.len(), path.display());
            let rep = report(&records, cfg.error_threshold, &cfg.designated)?;
            rep.write_all(&cfg.output_dir)?;
            rep.write_text(io::stdout().lock())?;
        }
        Command::Report { results, out_dir } => {
            let f = File::open(results).with_context(|| format!("opening {}", results.display()))?;
            let records = read_records(BufReader::new(f))?;
            let rep = report(&records, cfg.error_threshold, &cfg.designated)?;
            if let Some(d) = out_dir {
                rep.write_all(d)?;
            }
            rep.write_text(io::stdout().lock())?;
        }
        Command::Configs => {
            let mut out = io::stdout().lock();
            for c in enumerate_configs() {
                writeln!(out, "{c}")?;
            }
        }
    }
    Ok(())
}
