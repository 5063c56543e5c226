//! Interpretation inconsistency indicators: per-cell features computed from
//! [`CellStats`], threshold labeling, conflict maps and conflict scores.

use serde::{Deserialize, Serialize};

use crate::error::IndicatorError;
use crate::gridmap::{CellStats, EvidenceGrid, MAGNITUDES};
use crate::image::{label_components, BinaryImage};
use crate::sensor_model::SensorModelParams;

/// The eleven indicator kinds, ordered by their short names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndicatorKind {
    NormAngular,
    Area,
    Average,
    AverageSequence,
    Frequency,
    Gambino,
    IncreaseFrequency,
    MaxIncrease,
    NormRange,
    Total,
    NormUpdateRate,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 11] = [
        IndicatorKind::NormAngular,
        IndicatorKind::Area,
        IndicatorKind::Average,
        IndicatorKind::AverageSequence,
        IndicatorKind::Frequency,
        IndicatorKind::Gambino,
        IndicatorKind::IncreaseFrequency,
        IndicatorKind::MaxIncrease,
        IndicatorKind::NormRange,
        IndicatorKind::Total,
        IndicatorKind::NormUpdateRate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            IndicatorKind::Total => "total",
            IndicatorKind::NormAngular => "norm_angular",
            IndicatorKind::NormRange => "norm_range",
            IndicatorKind::NormUpdateRate => "norm_update_rate",
            IndicatorKind::MaxIncrease => "max_increase",
            IndicatorKind::Average => "average",
            IndicatorKind::AverageSequence => "average_sequence",
            IndicatorKind::Frequency => "frequency",
            IndicatorKind::IncreaseFrequency => "increase_frequency",
            IndicatorKind::Gambino => "gambino",
            IndicatorKind::Area => "area",
        }
    }

    /// `(first, step, count)` of the primary threshold sweep.
    pub fn primary_range(&self) -> (f64, f64, usize) {
        match self {
            IndicatorKind::Total | IndicatorKind::NormRange | IndicatorKind::Area => (0.25, 0.25, 20),
            IndicatorKind::NormAngular | IndicatorKind::NormUpdateRate | IndicatorKind::Average => (0.025, 0.025, 20),
            IndicatorKind::MaxIncrease => (0.1, 0.1, 20),
            IndicatorKind::AverageSequence => (0.05, 0.05, 20),
            IndicatorKind::Frequency | IndicatorKind::IncreaseFrequency => (0.05, 0.05, 19),
            IndicatorKind::Gambino => (0.5, 0.5, 20),
        }
    }

    /// `(first, step, count)` of the secondary threshold sweep, if the kind has one.
    pub fn secondary_range(&self) -> Option<(f64, f64, usize)> {
        match self {
            IndicatorKind::IncreaseFrequency => Some((0.5, 0.5, MAGNITUDES.len())),
            IndicatorKind::Area => Some((50.0, 50.0, 5)),
            _ => None,
        }
    }

    pub fn config_count(&self) -> usize {
        self.primary_range().2 * self.secondary_range().map_or(1, |s| s.2)
    }
}

impl std::fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for IndicatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IndicatorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown indicator kind `{s}`"))
    }
}

fn sweep_value(first: f64, step: f64, i: usize) -> f64 {
    // Round away accumulated binary noise so thresholds print and compare cleanly.
    let v = first + step * i as f64;
    (v * 1e6).round() / 1e6
}

fn in_sweep(v: f64, (first, step, count): (f64, f64, usize)) -> bool {
    (0..count).any(|i| (sweep_value(first, step, i) - v).abs() < 1e-9)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorConfig {
    pub kind: IndicatorKind,
    pub primary: f64,
    /// Magnitude for `increase_frequency`, minimum component size for `area`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secondary: Option<f64>,
}

impl IndicatorConfig {
    pub fn new(kind: IndicatorKind, primary: f64, secondary: Option<f64>) -> Result<Self, IndicatorError> {
        let c = Self { kind, primary, secondary };
        c.validate()?;
        Ok(c)
    }

    pub fn gambino(threshold: f64) -> Self {
        Self {
            kind: IndicatorKind::Gambino,
            primary: threshold,
            secondary: None,
        }
    }

    pub fn validate(&self) -> Result<(), IndicatorError> {
        let bad = |m: String| Err(IndicatorError::InvalidConfig(m));
        if !in_sweep(self.primary, self.kind.primary_range()) {
            return bad(format!("{} threshold {} outside its sweep", self.kind, self.primary));
        }
        match (self.kind.secondary_range(), self.secondary) {
            (None, None) => Ok(()),
            (None, Some(_)) => bad(format!("{} takes no secondary threshold", self.kind)),
            (Some(_), None) => bad(format!("{} needs a secondary threshold", self.kind)),
            (Some(r), Some(s)) if in_sweep(s, r) => Ok(()),
            (Some(_), Some(s)) => bad(format!("{} secondary threshold {} outside its sweep", self.kind, s)),
        }
    }

    /// Stable identifier such as `gambino@2` or `area@1.5/100`.
    pub fn id(&self) -> String {
        match self.secondary {
            Some(s) => format!("{}@{}/{}", self.kind, self.primary, s),
            None => format!("{}@{}", self.kind, self.primary),
        }
    }
}

impl std::fmt::Display for IndicatorConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.id())
    }
}

/// All 355 configurations, kinds in [`IndicatorKind::ALL`] order, secondary
/// threshold varying slowest.
pub fn enumerate_configs() -> Vec<IndicatorConfig> {
    let mut out = Vec::with_capacity(355);
    for kind in IndicatorKind::ALL {
        let (p0, ps, pn) = kind.primary_range();
        let secondaries: Vec<Option<f64>> = match kind.secondary_range() {
            Some((s0, ss, sn)) => (0..sn).map(|j| Some(sweep_value(s0, ss, j))).collect(),
            None => vec![None],
        };
        for secondary in secondaries {
            for i in 0..pn {
                out.push(IndicatorConfig {
                    kind,
                    primary: sweep_value(p0, ps, i),
                    secondary,
                });
            }
        }
    }
    out
}

/// Divisors for the normalized indicators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureContext {
    /// Beam angular spacing in degrees.
    pub angular: f64,
    /// Range resolution in meters.
    pub range: f64,
    /// Mean `n_updates` over updated cells.
    pub update_rate: f64,
}

impl FeatureContext {
    pub fn new(grid: &EvidenceGrid, params: &SensorModelParams) -> Self {
        let (sum, n) = grid
            .cells()
            .iter()
            .filter(|c| c.stats.n_updates > 0)
            .fold((0u64, 0u64), |(s, n), c| (s + c.stats.n_updates as u64, n + 1));
        Self {
            angular: params.beam_spacing_degrees(),
            range: params.range_resolution,
            update_rate: if n == 0 { 1.0 } else { sum as f64 / n as f64 },
        }
    }
}

impl Default for FeatureContext {
    fn default() -> Self {
        Self {
            angular: 1.0,
            range: 1.0,
            update_rate: 1.0,
        }
    }
}

fn magnitude_slot(m: f64) -> Result<usize, IndicatorError> {
    MAGNITUDES
        .iter()
        .position(|&x| (x - m).abs() < 1e-9)
        .ok_or(IndicatorError::UnknownMagnitude(m))
}

/// The raw (pre-threshold) per-cell value of an indicator. Cells that were
/// never updated score 0. `area` uses the `total` feature.
pub fn cell_feature(stats: &CellStats, config: &IndicatorConfig, ctx: &FeatureContext) -> Result<f64, IndicatorError> {
    if stats.n_updates == 0 {
        if config.kind == IndicatorKind::IncreaseFrequency {
            magnitude_slot(config.secondary.unwrap_or(f64::NAN))?;
        }
        return Ok(0.0);
    }
    let n = stats.n_updates as f64;
    Ok(match config.kind {
        IndicatorKind::Total | IndicatorKind::Area => stats.total_con,
        IndicatorKind::NormAngular => stats.total_con / ctx.angular,
        IndicatorKind::NormRange => stats.total_con / ctx.range,
        IndicatorKind::NormUpdateRate => stats.total_con / ctx.update_rate,
        IndicatorKind::MaxIncrease => stats.max_con,
        IndicatorKind::Average => stats.total_con / n,
        IndicatorKind::AverageSequence => {
            if stats.seq_len == 0 {
                0.0
            } else {
                stats.seq_sum / stats.seq_len as f64
            }
        }
        IndicatorKind::Frequency => stats.n_conflicting as f64 / n,
        IndicatorKind::IncreaseFrequency => {
            let slot = magnitude_slot(config.secondary.unwrap_or(f64::NAN))?;
            stats.magnitude_counts[slot] as f64 / n
        }
        IndicatorKind::Gambino => stats.gambino_count as f64,
    })
}

pub fn label_suspect(feature: f64, config: &IndicatorConfig) -> bool {
    feature >= config.primary
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConflictMap {
    pub image: BinaryImage,
    pub config: IndicatorConfig,
}

/// Suspect map plus the mean thresholded feature over updated cells, for a
/// row-major block of stats `width` cells wide.
pub fn assess_stats(
    stats: &[CellStats],
    width: usize,
    config: &IndicatorConfig,
    ctx: &FeatureContext,
) -> Result<(BinaryImage, f64), IndicatorError> {
    let height = stats.len().checked_div(width).unwrap_or(0);
    let features = stats
        .iter()
        .map(|s| cell_feature(s, config, ctx))
        .collect::<Result<Vec<f64>, _>>()?;
    let mut suspect: Vec<bool> = features.iter().map(|&f| label_suspect(f, config)).collect();
    if config.kind == IndicatorKind::Area {
        let min_size = config.secondary.unwrap_or(0.0);
        let (labels, sizes) = label_components(&BinaryImage::from_pixels(width, height, suspect.clone()));
        for (s, &l) in suspect.iter_mut().zip(&labels) {
            *s = l != 0 && sizes[l as usize] as f64 >= min_size;
        }
    }
    let (mut sum, mut n) = (0.0, 0usize);
    for ((s, &f), &sus) in stats.iter().zip(&features).zip(&suspect) {
        if s.n_updates > 0 {
            n += 1;
            if sus {
                sum += f;
            }
        }
    }
    let score = if n == 0 { 0.0 } else { sum / n as f64 };
    Ok((BinaryImage::from_pixels(width, height, suspect), score))
}

/// Map and score in one pass.
pub fn assess(grid: &EvidenceGrid, config: &IndicatorConfig, ctx: &FeatureContext) -> Result<(ConflictMap, f64), IndicatorError> {
    let stats: Vec<CellStats> = grid.cells().iter().map(|c| c.stats).collect();
    let (image, score) = assess_stats(&stats, grid.width(), config, ctx)?;
    Ok((ConflictMap { image, config: *config }, score))
}

pub fn conflict_map(grid: &EvidenceGrid, config: &IndicatorConfig, ctx: &FeatureContext) -> Result<ConflictMap, IndicatorError> {
    Ok(assess(grid, config, ctx)?.0)
}

/// Mean thresholded feature over updated cells; 0 when nothing was updated.
pub fn conflict_score(grid: &EvidenceGrid, config: &IndicatorConfig, ctx: &FeatureContext) -> Result<f64, IndicatorError> {
    Ok(assess(grid, config, ctx)?.1)
}
