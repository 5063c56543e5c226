//! Cone sensor model: turns one range reading into per-cell belief masses.
//!
//! The beam is a cone of radius `R` and half-angle `β`. Cells near the measured
//! range `d` (within `range_tolerance`) receive occupied mass, cells in front of
//! it receive empty mass. Both fall off linearly with range and with angular
//! offset from the beam axis:
//!
//! ```text
//! strength = ((R - r) / R + (β - |α|) / β) / 2
//! region I  (|r - d| <= tol): m(O) = strength * max_occupied_mass
//! region II (r < d - tol):    m(E) = strength
//! ```
//!
//! A max-range reading (no echo) only contributes region II.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::evidence::BeliefMass;
use crate::gridmap::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    Sonar,
    Laser,
}

impl SensorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SensorKind::Sonar => "sonar",
            SensorKind::Laser => "laser",
        }
    }
}

impl std::fmt::Display for SensorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SensorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sonar" => Ok(SensorKind::Sonar),
            "laser" => Ok(SensorKind::Laser),
            other => Err(format!("unknown sensor kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorModelParams {
    pub kind: SensorKind,
    /// Cone radius `R` in meters.
    pub max_range: f64,
    /// Cone half-angle `β` in radians.
    pub half_angle: f64,
    pub max_occupied_mass: f64,
    /// Half-thickness of the occupied arc, meters.
    pub range_tolerance: f64,
    /// Angular spacing between adjacent beams, radians.
    pub beam_spacing: f64,
    /// Range resolution in meters; divisor of the range-normalized indicator.
    #[serde(default = "default_range_resolution")]
    pub range_resolution: f64,
}

fn default_range_resolution() -> f64 {
    1.0
}

/// One cell diagonal at the default 10.16 cm resolution.
pub const DEFAULT_RANGE_TOLERANCE: f64 = 0.1437;

impl SensorModelParams {
    pub fn sonar() -> Self {
        Self {
            kind: SensorKind::Sonar,
            max_range: 5.0,
            half_angle: 15f64.to_radians(),
            max_occupied_mass: 0.98,
            range_tolerance: DEFAULT_RANGE_TOLERANCE,
            beam_spacing: 22.5f64.to_radians(),
            range_resolution: 1.0,
        }
    }

    pub fn laser() -> Self {
        Self {
            kind: SensorKind::Laser,
            max_range: 8.0,
            half_angle: 0.5f64.to_radians(),
            max_occupied_mass: 0.98,
            range_tolerance: DEFAULT_RANGE_TOLERANCE,
            beam_spacing: 1f64.to_radians(),
            range_resolution: 1.0,
        }
    }

    pub fn for_kind(kind: SensorKind) -> Self {
        match kind {
            SensorKind::Sonar => Self::sonar(),
            SensorKind::Laser => Self::laser(),
        }
    }

    /// `β = 0` is accepted and models a line beam.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParams(msg));
        if !(self.max_range > 0.0 && self.max_range.is_finite()) {
            return bad(format!("max_range must be positive, got {}", self.max_range));
        }
        if !(0.0..=FRAC_PI_2).contains(&self.half_angle) {
            return bad(format!("half_angle must lie in [0, pi/2], got {}", self.half_angle));
        }
        if !(self.max_occupied_mass > 0.0 && self.max_occupied_mass < 1.0) {
            return bad(format!("max_occupied_mass must lie in (0, 1), got {}", self.max_occupied_mass));
        }
        if !(self.range_tolerance > 0.0) {
            return bad(format!("range_tolerance must be positive, got {}", self.range_tolerance));
        }
        if !(self.beam_spacing > 0.0) || !(self.range_resolution > 0.0) {
            return bad("beam_spacing and range_resolution must be positive".into());
        }
        Ok(())
    }

    pub fn beam_spacing_degrees(&self) -> f64 {
        self.beam_spacing.to_degrees()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeReading {
    pub sensor_pose: Pose,
    /// Beam direction relative to the pose heading.
    pub beam_bearing: f64,
    pub range: f64,
    pub at_max_range: bool,
}

impl RangeReading {
    pub fn direction(&self) -> f64 {
        self.sensor_pose.heading + self.beam_bearing
    }
}

/// All readings taken from one pose by one sensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scan {
    pub kind: SensorKind,
    pub readings: Vec<RangeReading>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FootprintCell {
    pub col: usize,
    pub row: usize,
    pub range: f64,
    pub offset: f64,
}

/// Wraps an angle to (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// Cells whose centers lie inside the reading's cone, sorted by (row, col).
pub fn cells_in_footprint(
    reading: &RangeReading,
    params: &SensorModelParams,
    spec: &GridSpec,
) -> Vec<FootprintCell> {
    let pose = reading.sensor_pose;
    if spec.cell_of(pose.x, pose.y).is_none() {
        return Vec::new();
    }
    let tol = params.range_tolerance;
    let d = reading.range.min(params.max_range);
    // Max-range readings keep only region II, strictly inside d - tol.
    let (reach, strict) = if reading.at_max_range {
        (d - tol, true)
    } else {
        ((d + tol).min(params.max_range), false)
    };
    if reach <= 0.0 {
        return Vec::new();
    }
    let within = |r: f64| r > 0.0 && if strict { r < reach } else { r <= reach };

    let theta = reading.direction();
    let beta = params.half_angle;
    let (s, c) = theta.sin_cos();

    // Bounding box of the sector.
    let mut xs = vec![pose.x];
    let mut ys = vec![pose.y];
    for a in [theta - beta, theta, theta + beta] {
        xs.push(pose.x + reach * a.cos());
        ys.push(pose.y + reach * a.sin());
    }
    for k in 0..4 {
        let axis = k as f64 * FRAC_PI_2;
        if wrap_angle(axis - theta).abs() <= beta {
            xs.push(pose.x + reach * axis.cos());
            ys.push(pose.y + reach * axis.sin());
        }
    }
    let fold = |v: &[f64], f: fn(f64, f64) -> f64| v.iter().copied().reduce(f).unwrap();
    let (lo_c, hi_c) = spec.clamp_range_x(fold(&xs, f64::min), fold(&xs, f64::max));
    let (lo_r, hi_r) = spec.clamp_range_y(fold(&ys, f64::min), fold(&ys, f64::max));
    if lo_c > hi_c || lo_r > hi_r {
        return Vec::new();
    }
    let mut cells = Vec::new();
    let tan_beta = beta.tan();

    for row in lo_r..=hi_r {
        for col in lo_c..=hi_c {
            let (cx, cy) = spec.cell_center(col, row);
            let (dx, dy) = (cx - pose.x, cy - pose.y);
            let along = dx * c + dy * s;
            let across = -dx * s + dy * c;
            let inside = if beta >= FRAC_PI_2 {
                along >= 0.0
            } else {
                along > 0.0 && across.abs() <= along * tan_beta
            };
            if !inside {
                continue;
            }
            let r = dx.hypot(dy);
            let alpha = across.atan2(along);
            if within(r) && alpha.abs() <= beta {
                cells.push(FootprintCell {
                    col,
                    row,
                    range: r,
                    offset: alpha,
                });
            }
        }
    }

    cells.sort_by_key(|f| (f.row, f.col));
    cells
}

/// Belief mass one reading assigns to a cell at range `r` and angular offset `alpha`.
pub fn evidence_for_cell(
    r: f64,
    alpha: f64,
    d: f64,
    params: &SensorModelParams,
) -> Result<BeliefMass, ModelError> {
    let big_r = params.max_range;
    let beta = params.half_angle;
    const SLACK: f64 = 1e-12;
    if !(r > 0.0 && r <= big_r + SLACK) {
        return Err(ModelError::Domain(format!("range {r} outside (0, {big_r}]")));
    }
    if alpha.abs() > beta + SLACK {
        return Err(ModelError::Domain(format!(
            "offset {alpha} outside the half-angle {beta}"
        )));
    }
    let radial = ((big_r - r) / big_r).max(0.0);
    let angular = if beta > 0.0 {
        ((beta - alpha.abs()) / beta).max(0.0)
    } else {
        1.0
    };
    let strength = (radial + angular) / 2.0;
    let tol = params.range_tolerance;
    if (r - d).abs() <= tol {
        let o = strength * params.max_occupied_mass;
        Ok(BeliefMass {
            occupied: o,
            empty: 0.0,
            theta: 1.0 - o,
            conflict: 0.0,
        })
    } else if r < d - tol {
        Ok(BeliefMass {
            occupied: 0.0,
            empty: strength,
            theta: 1.0 - strength,
            conflict: 0.0,
        })
    } else {
        Ok(BeliefMass::vacuous())
    }
}
