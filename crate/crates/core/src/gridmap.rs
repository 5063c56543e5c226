//! Evidential occupancy grid with per-cell conflict bookkeeping.
//!
//! Each cell carries two belief states fed by the same evidence stream: one
//! combined with Dempster's rule (used for mapping, scoring and every Con-based
//! indicator) and one combined with the unnormalized Smets rule (used for the
//! Gambino trigger). Con is measured between the cell's current Dempster
//! belief and each incoming reading's evidence before combining.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::GridError;
use crate::error::EvidenceError;
use crate::evidence::{combine_dempster, combine_smets, conflict_k, weight_of_conflict, BeliefMass};
use crate::image::{otsu_binarize, to_level, write_pgm, BinaryImage};
use crate::sensor_model::{cells_in_footprint, evidence_for_cell, Scan, SensorModelParams};
use crate::simworld::{Environment, Point};

/// Magnitude thresholds tracked per cell for the increase-frequency indicator.
pub const MAGNITUDES: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub side_length: f64,
    pub cell_size: f64,
    /// World coordinates of the grid center.
    #[serde(default)]
    pub origin_x: f64,
    #[serde(default)]
    pub origin_y: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            side_length: 28.0,
            cell_size: 0.1016,
            origin_x: 0.0,
            origin_y: 0.0,
        }
    }
}

impl GridSpec {
    pub fn with_origin(self, x: f64, y: f64) -> Self {
        Self {
            origin_x: x,
            origin_y: y,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if !(self.side_length > 0.0 && self.cell_size > 0.0) {
            return Err(GridError::InvalidSpec(format!(
                "side {} and cell size {} must be positive",
                self.side_length, self.cell_size
            )));
        }
        if !(self.origin_x.is_finite() && self.origin_y.is_finite()) {
            return Err(GridError::InvalidSpec("non-finite origin".into()));
        }
        Ok(())
    }

    /// Cells per side: `ceil(side_length / cell_size)`.
    pub fn cells_per_side(&self) -> usize {
        // Guard against 28 / 0.1016 style quotients landing a hair above an integer.
        let q = self.side_length / self.cell_size;
        let r = q.round();
        if (q - r).abs() < 1e-9 {
            r as usize
        } else {
            q.ceil() as usize
        }
    }

    pub fn cell_count(&self) -> usize {
        let n = self.cells_per_side();
        n * n
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.cells_per_side() + col
    }

    fn half(&self) -> f64 {
        self.cells_per_side() as f64 / 2.0
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        let h = self.half();
        (
            self.origin_x + (col as f64 + 0.5 - h) * self.cell_size,
            self.origin_y + (row as f64 + 0.5 - h) * self.cell_size,
        )
    }

    /// Lower-left corner of a cell.
    pub fn cell_corner(&self, col: usize, row: usize) -> (f64, f64) {
        let h = self.half();
        (
            self.origin_x + (col as f64 - h) * self.cell_size,
            self.origin_y + (row as f64 - h) * self.cell_size,
        )
    }

    fn fractional(&self, x: f64, y: f64) -> (f64, f64) {
        let h = self.half();
        (
            (x - self.origin_x) / self.cell_size + h,
            (y - self.origin_y) / self.cell_size + h,
        )
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let n = self.cells_per_side() as f64;
        let (fx, fy) = self.fractional(x, y);
        if fx >= 0.0 && fy >= 0.0 && fx < n && fy < n {
            Some((fx as usize, fy as usize))
        } else {
            None
        }
    }

    fn clamp_axis(&self, lo: f64, hi: f64) -> (usize, usize) {
        let n = self.cells_per_side() as isize;
        let lo = (lo.floor() as isize).max(0);
        let hi = (hi.floor() as isize).min(n - 1);
        if hi < lo {
            (1, 0)
        } else {
            (lo as usize, hi as usize)
        }
    }

    /// Column range covering world x in `[xmin, xmax]`; `lo > hi` when empty.
    pub fn clamp_range_x(&self, xmin: f64, xmax: f64) -> (usize, usize) {
        let h = self.half();
        let f = |x: f64| (x - self.origin_x) / self.cell_size + h;
        self.clamp_axis(f(xmin), f(xmax))
    }

    /// Row range covering world y in `[ymin, ymax]`; `lo > hi` when empty.
    pub fn clamp_range_y(&self, ymin: f64, ymax: f64) -> (usize, usize) {
        let h = self.half();
        let f = |y: f64| (y - self.origin_y) / self.cell_size + h;
        self.clamp_axis(f(ymin), f(ymax))
    }
}

/// Per-cell conflict accumulators.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub n_updates: u32,
    /// Updates that generated Con > 0.
    pub n_conflicting: u32,
    pub total_con: f64,
    pub max_con: f64,
    /// Con summed over the trailing run of consecutive conflicting updates.
    pub seq_sum: f64,
    pub seq_len: u32,
    /// Updates with Con >= `MAGNITUDES[i]`.
    pub magnitude_counts: [u32; MAGNITUDES.len()],
    pub gambino_count: u32,
}

impl CellStats {
    pub fn record_con(&mut self, con: f64) {
        if con > 0.0 {
            self.n_conflicting += 1;
            self.total_con += con;
            self.max_con = self.max_con.max(con);
            self.seq_sum += con;
            self.seq_len += 1;
            for (count, &m) in self.magnitude_counts.iter_mut().zip(MAGNITUDES.iter()) {
                if con >= m {
                    *count += 1;
                }
            }
        } else {
            self.seq_sum = 0.0;
            self.seq_len = 0;
        }
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if self.n_conflicting > self.n_updates {
            return Err(format!("n_conflicting {} > n_updates {}", self.n_conflicting, self.n_updates));
        }
        if self.seq_len > self.n_conflicting {
            return Err(format!("seq_len {} > n_conflicting {}", self.seq_len, self.n_conflicting));
        }
        if self.n_updates > 0 && !(self.total_con >= self.max_con && self.max_con >= 0.0) {
            return Err(format!("total_con {} < max_con {}", self.total_con, self.max_con));
        }
        if self.magnitude_counts.iter().any(|&c| c > self.n_conflicting) {
            return Err("magnitude count exceeds n_conflicting".into());
        }
        Ok(())
    }
}

/// Tunables of the Gambino trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GambinoRule {
    /// Minimum pre-update `max(m(O), m(E))` in the Smets state.
    pub min_commitment: f64,
    /// Minimum rise of the Smets `m(∅)` produced by one reading.
    pub min_conflict_rise: f64,
    /// Replace the Smets belief by the incoming evidence whenever the trigger fires.
    pub reset_on_trigger: bool,
}

impl Default for GambinoRule {
    fn default() -> Self {
        Self {
            min_commitment: 0.5,
            min_conflict_rise: 0.10,
            reset_on_trigger: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cell {
    pub dempster: BeliefMass,
    pub smets: BeliefMass,
    pub stats: CellStats,
}

#[derive(Debug, Clone)]
pub struct EvidenceGrid {
    spec: GridSpec,
    gambino: GambinoRule,
    cells: Vec<Cell>,
    dempster_resets: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScanSummary {
    /// Footprint cells updated (a cell seen by two readings counts twice).
    pub cells_touched: usize,
    pub total_con: f64,
    pub saturated: usize,
}

impl EvidenceGrid {
    pub fn new(spec: GridSpec) -> Result<Self, GridError> {
        Self::with_rule(spec, GambinoRule::default())
    }

    pub fn with_rule(spec: GridSpec, gambino: GambinoRule) -> Result<Self, GridError> {
        spec.validate()?;
        Ok(Self {
            spec,
            gambino,
            cells: vec![Cell::default(); spec.cell_count()],
            dempster_resets: 0,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn gambino_rule(&self) -> &GambinoRule {
        &self.gambino
    }

    pub fn width(&self) -> usize {
        self.spec.cells_per_side()
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, col: usize, row: usize) -> &Cell {
        &self.cells[self.spec.index(col, row)]
    }

    pub fn cell_mut(&mut self, col: usize, row: usize) -> &mut Cell {
        let i = self.spec.index(col, row);
        &mut self.cells[i]
    }

    pub fn dempster_resets(&self) -> u64 {
        self.dempster_resets
    }

    pub fn updated_cell_count(&self) -> usize {
        self.cells.iter().filter(|c| c.stats.n_updates > 0).count()
    }

    /// Half-open `(x0, y0, x1, y1)` box around every updated cell.
    pub fn updated_bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let w = self.width();
        let mut b: Option<(usize, usize, usize, usize)> = None;
        for (i, c) in self.cells.iter().enumerate() {
            if c.stats.n_updates == 0 {
                continue;
            }
            let (x, y) = (i % w, i / w);
            b = Some(match b {
                None => (x, y, x + 1, y + 1),
                Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
            });
        }
        b
    }

    /// Folds one reading's evidence into a single cell.
    pub fn apply_evidence(&mut self, index: usize, evidence: &BeliefMass) -> Result<f64, EvidenceError> {
        let rule = self.gambino;
        let cell = &mut self.cells[index];

        let k = conflict_k(&cell.dempster, evidence);
        let con = weight_of_conflict(k)?.con;
        cell.stats.record_con(con);

        match combine_dempster(&cell.dempster, evidence) {
            Ok((next, _)) => cell.dempster = next,
            Err(EvidenceError::Saturated { .. }) => {
                cell.dempster = BeliefMass::vacuous();
                self.dempster_resets += 1;
            }
            Err(e) => return Err(e),
        }

        let committed = cell.smets.commitment() >= rule.min_commitment;
        let (next, obs) = combine_smets(&cell.smets, evidence)?;
        if committed && obs.smets_empty_delta >= rule.min_conflict_rise {
            cell.stats.gambino_count += 1;
            cell.smets = if rule.reset_on_trigger { *evidence } else { next };
        } else {
            cell.smets = next;
        }

        cell.stats.n_updates += 1;
        Ok(con)
    }

    /// Applies every reading of a scan to the cells in its footprint.
    pub fn update(&mut self, scan: &Scan, params: &SensorModelParams) -> Result<ScanSummary, GridError> {
        if scan.kind != params.kind {
            return Err(GridError::SensorMismatch {
                scan: scan.kind.to_string(),
                model: params.kind.to_string(),
            });
        }
        params.validate()?;
        let mut summary = ScanSummary::default();
        for reading in &scan.readings {
            for f in cells_in_footprint(reading, params, &self.spec) {
                let evidence = evidence_for_cell(f.range, f.offset, reading.range, params)?;
                if evidence.is_vacuous() {
                    continue;
                }
                let index = self.spec.index(f.col, f.row);
                let saturated_before = self.dempster_resets;
                let con = self.apply_evidence(index, &evidence)?;
                summary.cells_touched += 1;
                summary.total_con += con;
                summary.saturated += (self.dempster_resets - saturated_before) as usize;
            }
        }
        Ok(summary)
    }

    /// Per-cell `max(error_o, error_e)` on scanned, non-excluded cells; zero elsewhere.
    pub fn error_values(&self, truth: &TruthGrid) -> Result<Vec<f64>, GridError> {
        self.check_dims(truth)?;
        Ok(self
            .cells
            .iter()
            .zip(truth.labels.iter())
            .map(|(cell, label)| match (cell.stats.n_updates, label.channels()) {
                (0, _) | (_, None) => 0.0,
                (_, Some((to, te))) => {
                    let eo = (cell.dempster.occupied - to).abs();
                    let ee = (cell.dempster.empty - te).abs();
                    eo.max(ee)
                }
            })
            .collect())
    }

    fn check_dims(&self, truth: &TruthGrid) -> Result<(), GridError> {
        let (a, b) = (self.spec.cells_per_side(), truth.spec.cells_per_side());
        if a != b {
            return Err(GridError::DimensionMismatch { left: a, right: b });
        }
        Ok(())
    }

    /// Write the Dempster occupied/empty channels as an 8-bit PGM:
    /// `level = round(255 * (0.5 + (m(O) - m(E)) / 2))`, so 0 is empty, 255 occupied
    /// and 128 unknown.
    pub fn write_occupancy_pgm<W: Write>(&self, out: W) -> std::io::Result<()> {
        let w = self.width();
        // PGM rows run top-down; grid rows run bottom-up.
        let mut bytes = Vec::with_capacity(w * w);
        for row in (0..w).rev() {
            for col in 0..w {
                let m = &self.cells[row * w + col].dempster;
                bytes.push(to_level(0.5 + (m.occupied - m.empty) / 2.0));
            }
        }
        write_pgm(
            out,
            w,
            w,
            &bytes,
            "occupancy: level = round(255 * (0.5 + (m(O) - m(E)) / 2)); top row is max y",
        )
    }

    /// Per-cell stats as CSV (`col,row,...`), updated cells only.
    pub fn write_stats_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut wtr = csv::Writer::from_writer(out);
        let mut header = vec![
            "col".to_string(),
            "row".into(),
            "n_updates".into(),
            "n_conflicting".into(),
            "total_con".into(),
            "max_con".into(),
            "seq_sum".into(),
            "seq_len".into(),
        ];
        header.extend(MAGNITUDES.iter().map(|m| format!("count_con_ge_{m}")));
        header.extend(["gambino_count", "m_occupied", "m_empty", "smets_conflict"].map(String::from));
        wtr.write_record(&header)?;
        let w = self.width();
        for (i, c) in self.cells.iter().enumerate() {
            let s = &c.stats;
            if s.n_updates == 0 {
                continue;
            }
            let mut rec = vec![
                (i % w).to_string(),
                (i / w).to_string(),
                s.n_updates.to_string(),
                s.n_conflicting.to_string(),
                s.total_con.to_string(),
                s.max_con.to_string(),
                s.seq_sum.to_string(),
                s.seq_len.to_string(),
            ];
            rec.extend(s.magnitude_counts.iter().map(|c| c.to_string()));
            rec.push(s.gambino_count.to_string());
            rec.push(c.dempster.occupied.to_string());
            rec.push(c.dempster.empty.to_string());
            rec.push(c.smets.conflict.to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Folds a scan into the grid. See [`EvidenceGrid::update`].
pub fn update_grid(grid: &mut EvidenceGrid, scan: &Scan, params: &SensorModelParams) -> Result<ScanSummary, GridError> {
    grid.update(scan, params)
}

/// Sum over scanned, non-excluded cells of `max(|m(O) - t_o|, |m(E) - t_e|)`.
pub fn error_score(grid: &EvidenceGrid, truth: &TruthGrid) -> Result<f64, GridError> {
    Ok(grid.error_values(truth)?.iter().sum())
}

/// Otsu-binarized per-cell error image.
pub fn error_image(grid: &EvidenceGrid, truth: &TruthGrid) -> Result<BinaryImage, GridError> {
    let w = grid.width();
    Ok(otsu_binarize(w, w, &grid.error_values(truth)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellLabel {
    Occupied,
    Empty,
    Excluded,
}

impl CellLabel {
    /// Crisp `(truth_o, truth_e)` channels; `None` when excluded.
    pub fn channels(&self) -> Option<(f64, f64)> {
        match self {
            CellLabel::Occupied => Some((1.0, 0.0)),
            CellLabel::Empty => Some((0.0, 1.0)),
            CellLabel::Excluded => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TruthGrid {
    pub spec: GridSpec,
    pub labels: Vec<CellLabel>,
}

impl TruthGrid {
    pub fn label(&self, col: usize, row: usize) -> CellLabel {
        self.labels[self.spec.index(col, row)]
    }

    pub fn count(&self, label: CellLabel) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// 0 = excluded, 128 = empty, 255 = occupied.
    pub fn write_pgm<W: Write>(&self, out: W) -> std::io::Result<()> {
        let w = self.spec.cells_per_side();
        let mut bytes = Vec::with_capacity(w * w);
        for row in (0..w).rev() {
            for col in 0..w {
                bytes.push(match self.label(col, row) {
                    CellLabel::Excluded => 0,
                    CellLabel::Empty => 128,
                    CellLabel::Occupied => 255,
                });
            }
        }
        write_pgm(out, w, w, &bytes, "truth: 0 = excluded, 128 = empty, 255 = occupied; top row is max y")
    }
}

/// Does segment `a`-`b` touch the closed axis-aligned box? (Liang-Barsky clip.)
pub(crate) fn segment_hits_box(a: Point, b: Point, lo: (f64, f64), hi: (f64, f64)) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for (p, q) in [
        (-dx, a.x - lo.0),
        (dx, hi.0 - a.x),
        (-dy, a.y - lo.1),
        (dy, hi.1 - a.y),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    true
}

/// Ground-truth labels for a corridor: wall cells occupied, interior empty,
/// everything else (including beyond the walls) excluded.
pub fn rasterize_truth(env: &Environment, spec: &GridSpec) -> Result<TruthGrid, GridError> {
    spec.validate()?;
    env.check_closed().map_err(GridError::OpenPolygon)?;
    let n = spec.cells_per_side();
    let mut labels = vec![CellLabel::Excluded; n * n];
    if env.area().abs() < 1e-12 {
        return Ok(TruthGrid { spec: *spec, labels });
    }
    for row in 0..n {
        for col in 0..n {
            let (x, y) = spec.cell_center(col, row);
            if env.contains(x, y) {
                labels[spec.index(col, row)] = CellLabel::Empty;
            }
        }
    }
    for wall in &env.walls {
        let (c0, c1) = spec.clamp_range_x(wall.a.x.min(wall.b.x), wall.a.x.max(wall.b.x));
        let (r0, r1) = spec.clamp_range_y(wall.a.y.min(wall.b.y), wall.a.y.max(wall.b.y));
        if c0 > c1 || r0 > r1 {
            continue;
        }
        for row in r0..=r1 {
            for col in c0..=c1 {
                let lo = spec.cell_corner(col, row);
                let hi = (lo.0 + spec.cell_size, lo.1 + spec.cell_size);
                if segment_hits_box(wall.a, wall.b, lo, hi) {
                    labels[spec.index(col, row)] = CellLabel::Occupied;
                }
            }
        }
    }
    Ok(TruthGrid { spec: *spec, labels })
}
