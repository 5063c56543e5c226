use std::fs;

use conflict_grid::harness::{read_records, report, sweep, sweep_to_disk, write_records, ExperimentConfig};
use conflict_grid::indicators::{IndicatorConfig, IndicatorKind};
use conflict_grid::simworld::Hallway;
use conflict_grid::SensorKind;

fn small_config(dir: &std::path::Path) -> ExperimentConfig {
    let text = format!(
        r#"{{
            "hallways": ["narrow", "window"],
            "sensors": ["sonar", "laser"],
            "seeds": [3],
            "indicators": [
                {{"kind": "gambino", "primary": 2.0, "secondary": null}},
                {{"kind": "area", "primary": 1.5, "secondary": 100.0}},
                {{"kind": "increase_frequency", "primary": 0.1, "secondary": 1.0}}
            ],
            "output_dir": {:?},
            "workers": 2
        }}"#,
        dir.join("out")
    );
    let path = dir.join("config.json");
    fs::write(&path, text).unwrap();
    ExperimentConfig::load(&path).unwrap()
}

#[test]
fn config_file_overrides_only_given_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    assert_eq!(cfg.hallways, vec![Hallway::Narrow, Hallway::Window]);
    assert_eq!(cfg.samples.len(), 10);
    assert_eq!(cfg.designated, IndicatorConfig::gambino(2.0));
    assert_eq!(cfg.indicator_list()[1].kind, IndicatorKind::Area);

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"hallway": ["narrow"]}"#).unwrap();
    assert!(ExperimentConfig::load(&bad).is_err());
}

#[test]
fn sweep_rows_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (path, records) = sweep_to_disk(&cfg).unwrap();
    assert_eq!(records.len(), 3 * cfg.runs().len() * 10);
    let first = fs::read(&path).unwrap();

    let mut serial = cfg.clone();
    serial.workers = Some(1);
    serial.output_dir = dir.path().join("again");
    let (path2, _) = sweep_to_disk(&serial).unwrap();
    assert_eq!(first, fs::read(path2).unwrap());

    let back = read_records(first.as_slice()).unwrap();
    assert_eq!(back, records);
    for r in &records {
        assert!(r.error >= 0.0 && r.delta2 >= 0.0 && r.conflict_score >= 0.0);
    }
    let sonar = records.iter().filter(|r| r.sensor == SensorKind::Sonar).count();
    assert_eq!(sonar, records.len() / 2);
}

#[test]
fn report_roundtrip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let records = sweep(&cfg).unwrap();
    let mut buf = Vec::new();
    write_records(&mut buf, &records).unwrap();
    let back = read_records(buf.as_slice()).unwrap();
    let a = report(&records, cfg.error_threshold, &cfg.designated).unwrap();
    let b = report(&back, cfg.error_threshold, &cfg.designated).unwrap();
    let (mut ta, mut tb) = (Vec::new(), Vec::new());
    a.write_text(&mut ta).unwrap();
    b.write_text(&mut tb).unwrap();
    assert_eq!(ta, tb);
    a.write_all(&dir.path().join("report")).unwrap();
    for f in ["summary.csv", "configs.csv", "summary.txt"] {
        assert!(dir.path().join("report").join(f).exists(), "{f}");
    }
}
