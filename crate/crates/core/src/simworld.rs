//! Synthetic hallway world: corridor polygons with wall materials, ray casting,
//! sonar and laser scan simulation with specular and glass anomalies, and
//! straight-line run generation.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::SimError;
use crate::sensor_model::{Pose, RangeReading, Scan, SensorKind, SensorModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Material {
    Smooth,
    Glass,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: Point,
    pub b: Point,
    pub material: Material,
}

impl Wall {
    pub fn new(a: Point, b: Point, material: Material) -> Self {
        Self { a, b, material }
    }

    /// Unit normal (left of a -> b).
    pub fn normal(&self) -> (f64, f64) {
        let (dx, dy) = (self.b.x - self.a.x, self.b.y - self.a.y);
        let len = dx.hypot(dy);
        (-dy / len, dx / len)
    }
}

/// A corridor: walls chained head to tail into a closed polygon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub name: String,
    pub walls: Vec<Wall>,
    pub width: f64,
    pub length: f64,
}

/// Width, length and window layout of the three test hallways.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hallway {
    Narrow,
    Wide,
    Window,
}

impl Hallway {
    pub const ALL: [Hallway; 3] = [Hallway::Narrow, Hallway::Wide, Hallway::Window];

    pub fn as_str(&self) -> &'static str {
        match self {
            Hallway::Narrow => "narrow",
            Hallway::Wide => "wide",
            Hallway::Window => "window",
        }
    }

    pub fn environment(&self) -> Environment {
        match self {
            Hallway::Narrow => Environment::rectangle("narrow", 1.8, 11.2),
            Hallway::Wide => Environment::rectangle("wide", 2.5, 14.2),
            Hallway::Window => Environment::window_hallway("window", 2.0, 27.0),
        }
    }
}

impl std::fmt::Display for Hallway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Hallway {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "narrow" => Ok(Hallway::Narrow),
            "wide" => Ok(Hallway::Wide),
            "window" => Ok(Hallway::Window),
            other => Err(format!("unknown hallway `{other}`")),
        }
    }
}

impl Environment {
    /// Smooth-walled corridor along +x: `x in [0, length]`, `y in [-width/2, width/2]`.
    pub fn rectangle(name: &str, width: f64, length: f64) -> Self {
        let h = width / 2.0;
        let corners = [
            Point::new(0.0, -h),
            Point::new(length, -h),
            Point::new(length, h),
            Point::new(0.0, h),
        ];
        let walls = (0..4)
            .map(|i| Wall::new(corners[i], corners[(i + 1) % 4], Material::Smooth))
            .collect();
        Self {
            name: name.to_string(),
            walls,
            width,
            length,
        }
    }

    /// Like [`Environment::rectangle`], but the +y wall is a row of 2.5 m glass
    /// panes separated by 0.5 m smooth pillars, with 1.5 m of plain wall at
    /// either end.
    pub fn window_hallway(name: &str, width: f64, length: f64) -> Self {
        let h = width / 2.0;
        let mut walls = vec![
            Wall::new(Point::new(0.0, -h), Point::new(length, -h), Material::Smooth),
            Wall::new(Point::new(length, -h), Point::new(length, h), Material::Smooth),
        ];
        // Pieces of the +y wall in increasing x, then chained from x = length back to 0.
        let (pane, pillar, margin) = (2.5, 0.5, 1.5);
        let mut pieces = vec![(0.0, margin, Material::Smooth)];
        let mut x = margin;
        while x + pane <= length - margin + 1e-9 {
            pieces.push((x, x + pane, Material::Glass));
            x += pane;
            if x + pillar + pane > length - margin + 1e-9 {
                break;
            }
            pieces.push((x, x + pillar, Material::Smooth));
            x += pillar;
        }
        pieces.push((x, length, Material::Smooth));
        for &(x0, x1, material) in pieces.iter().rev() {
            walls.push(Wall::new(Point::new(x1, h), Point::new(x0, h), material));
        }
        walls.push(Wall::new(Point::new(0.0, h), Point::new(0.0, -h), Material::Smooth));
        Self {
            name: name.to_string(),
            walls,
            width,
            length,
        }
    }

    pub fn check_closed(&self) -> Result<(), String> {
        if self.walls.len() < 3 {
            return Err(format!("{} walls cannot enclose an area", self.walls.len()));
        }
        for (i, w) in self.walls.iter().enumerate() {
            let next = &self.walls[(i + 1) % self.walls.len()];
            if (w.b.x - next.a.x).abs() > 1e-9 || (w.b.y - next.a.y).abs() > 1e-9 {
                return Err(format!("wall {i} does not end where wall {} starts", (i + 1) % self.walls.len()));
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.check_closed().map_err(SimError::InvalidEnvironment)?;
        if !(self.width > 0.0 && self.length > 0.0) {
            return Err(SimError::InvalidEnvironment("width and length must be positive".into()));
        }
        Ok(())
    }

    /// Signed shoelace area.
    pub fn area(&self) -> f64 {
        self.walls.iter().map(|w| w.a.x * w.b.y - w.b.x * w.a.y).sum::<f64>() / 2.0
    }

    /// Even-odd point-in-polygon test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        let mut inside = false;
        for w in &self.walls {
            let (a, b) = (w.a, w.b);
            if (a.y > y) != (b.y > y) {
                let xc = a.x + (y - a.y) * (b.x - a.x) / (b.y - a.y);
                if x < xc {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Centerline pose at `offset` meters from the start of a run of
    /// `run_distance` centered along the corridor.
    pub fn centerline_pose(&self, run_distance: f64, offset: f64) -> Pose {
        let x0 = (self.length - run_distance) / 2.0;
        Pose::new(x0 + offset, 0.0, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub distance: f64,
    pub normal: (f64, f64),
    pub material: Material,
    pub wall: usize,
}

impl RayHit {
    /// Angle between the incoming ray and the surface normal, in `[0, π/2]`.
    pub fn incidence(&self, direction: (f64, f64)) -> f64 {
        let dot = (direction.0 * self.normal.0 + direction.1 * self.normal.1).abs();
        dot.min(1.0).acos()
    }
}

/// Nearest wall crossing along the ray at distance strictly greater than `min_t`.
pub fn cast_ray_beyond(env: &Environment, origin: Point, direction: (f64, f64), min_t: f64) -> Option<RayHit> {
    let (dx, dy) = direction;
    let mut best: Option<RayHit> = None;
    for (i, w) in env.walls.iter().enumerate() {
        let (ex, ey) = (w.b.x - w.a.x, w.b.y - w.a.y);
        let denom = dx * ey - dy * ex;
        if denom.abs() < 1e-15 {
            continue;
        }
        let (ox, oy) = (w.a.x - origin.x, w.a.y - origin.y);
        let t = (ox * ey - oy * ex) / denom;
        let u = (ox * dy - oy * dx) / denom;
        if t > min_t + 1e-9 && (-1e-12..=1.0 + 1e-12).contains(&u) && best.is_none_or(|b| t < b.distance) {
            best = Some(RayHit {
                distance: t,
                normal: w.normal(),
                material: w.material,
                wall: i,
            });
        }
    }
    best
}

/// Nearest wall hit along a ray with unit `direction`.
pub fn cast_ray(env: &Environment, origin: Point, direction: (f64, f64)) -> Option<RayHit> {
    cast_ray_beyond(env, origin, direction, 0.0)
}

/// What a sonar beam returns when it strikes a wall beyond the critical angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpecularOutcome {
    /// Probability of a timeout (max-range return); otherwise the echo is elongated.
    pub max_range_probability: f64,
    pub multipath_factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnomalyParams {
    /// Incidence (from the surface normal) beyond which sonar reflects specularly.
    pub sonar_critical_angle: f64,
    pub specular: SpecularOutcome,
    pub glass_laser_transmission: f64,
    pub range_noise_sigma: f64,
}

impl Default for AnomalyParams {
    fn default() -> Self {
        Self {
            sonar_critical_angle: 30f64.to_radians(),
            specular: SpecularOutcome {
                max_range_probability: 0.5,
                multipath_factor: 1.5,
            },
            glass_laser_transmission: 0.9,
            range_noise_sigma: 0.01,
        }
    }
}

impl AnomalyParams {
    /// No specular reflection, opaque glass, no noise.
    pub fn disabled() -> Self {
        Self {
            sonar_critical_angle: FRAC_PI_2,
            glass_laser_transmission: 0.0,
            range_noise_sigma: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: &str| Err(SimError::InvalidAnomaly(m.to_string()));
        if !(0.0..=1.0).contains(&self.glass_laser_transmission) {
            return bad("glass_laser_transmission must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.specular.max_range_probability) {
            return bad("max_range_probability must lie in [0, 1]");
        }
        if !(self.range_noise_sigma >= 0.0) {
            return bad("range_noise_sigma must be non-negative");
        }
        if !(self.specular.multipath_factor >= 1.0) {
            return bad("multipath_factor must be at least 1");
        }
        if !(0.0..=FRAC_PI_2).contains(&self.sonar_critical_angle) {
            return bad("sonar_critical_angle must lie in [0, pi/2]");
        }
        Ok(())
    }
}

pub const SONAR_BEAMS: usize = 16;
pub const LASER_BEAMS: usize = 181;

fn noise(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    // Always draw so the random stream does not depend on sigma.
    let z: f64 = Normal::new(0.0, 1.0).unwrap().sample(rng);
    z * sigma
}

fn finish(pose: Pose, bearing: f64, range: f64, max_range: f64) -> RangeReading {
    let (range, at_max_range) = if range >= max_range {
        (max_range, true)
    } else {
        (range.max(1e-3), false)
    };
    RangeReading {
        sensor_pose: pose,
        beam_bearing: bearing,
        range,
        at_max_range,
    }
}

/// Sixteen beams at 22.5° spacing. The central ray decides the echo: within
/// the critical angle the true range comes back (plus noise); beyond it the
/// pulse reflects away and either times out or returns elongated.
pub fn simulate_sonar_scan(
    env: &Environment,
    pose: Pose,
    params: &SensorModelParams,
    anomaly: &AnomalyParams,
    rng: &mut ChaCha8Rng,
) -> Result<Scan, SimError> {
    if !env.contains(pose.x, pose.y) {
        return Err(SimError::PoseOutside { x: pose.x, y: pose.y });
    }
    let origin = Point::new(pose.x, pose.y);
    let r_max = params.max_range;
    let readings = (0..SONAR_BEAMS)
        .map(|i| {
            let bearing = i as f64 * 2.0 * PI / SONAR_BEAMS as f64;
            let dir = ((pose.heading + bearing).cos(), (pose.heading + bearing).sin());
            let n = noise(rng, anomaly.range_noise_sigma);
            let u: f64 = rng.gen();
            let range = match cast_ray(env, origin, dir) {
                None => r_max,
                Some(hit) if hit.distance >= r_max => r_max,
                Some(hit) if hit.incidence(dir) <= anomaly.sonar_critical_angle => hit.distance + n,
                Some(hit) => {
                    if u < anomaly.specular.max_range_probability {
                        r_max
                    } else {
                        hit.distance * anomaly.specular.multipath_factor + n
                    }
                }
            };
            finish(pose, bearing, range, r_max)
        })
        .collect();
    Ok(Scan {
        kind: SensorKind::Sonar,
        readings,
    })
}

/// 181 beams at 1° spacing over the forward half-plane. Glass lets a beam
/// through with probability `glass_laser_transmission`; the beam then carries
/// on to the next surface or to max range.
pub fn simulate_laser_scan(
    env: &Environment,
    pose: Pose,
    params: &SensorModelParams,
    anomaly: &AnomalyParams,
    rng: &mut ChaCha8Rng,
) -> Result<Scan, SimError> {
    if !env.contains(pose.x, pose.y) {
        return Err(SimError::PoseOutside { x: pose.x, y: pose.y });
    }
    let origin = Point::new(pose.x, pose.y);
    let r_max = params.max_range;
    let readings = (0..LASER_BEAMS)
        .map(|i| {
            let bearing = (i as f64 - 90.0).to_radians();
            let dir = ((pose.heading + bearing).cos(), (pose.heading + bearing).sin());
            let n = noise(rng, anomaly.range_noise_sigma);
            let mut t = 0.0;
            let range = loop {
                match cast_ray_beyond(env, origin, dir, t) {
                    None => break r_max,
                    Some(hit) if hit.distance >= r_max => break r_max,
                    Some(hit) if hit.material == Material::Glass => {
                        let u: f64 = rng.gen();
                        if u < anomaly.glass_laser_transmission {
                            t = hit.distance;
                            continue;
                        }
                        break hit.distance + n;
                    }
                    Some(hit) => break hit.distance + n,
                }
            };
            finish(pose, bearing, range, r_max)
        })
        .collect();
    Ok(Scan {
        kind: SensorKind::Laser,
        readings,
    })
}

/// Everything needed to generate one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub environment: Environment,
    pub sensor: SensorModelParams,
    pub anomaly: AnomalyParams,
    /// Distance between consecutive scans, meters.
    pub step: f64,
    pub run_distance: f64,
}

impl Scenario {
    pub fn new(environment: Environment, sensor: SensorModelParams, anomaly: AnomalyParams) -> Self {
        Self {
            environment,
            sensor,
            anomaly,
            step: 0.1,
            run_distance: 6.0,
        }
    }

    pub fn steps(&self) -> usize {
        (self.run_distance / self.step - 1e-9).ceil() as usize
    }

    pub fn start_pose(&self) -> Pose {
        self.environment.centerline_pose(self.run_distance, 0.0)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.environment.validate()?;
        self.anomaly.validate()?;
        self.sensor.validate()?;
        if !(self.step > 0.0 && self.run_distance > 0.0) {
            return Err(SimError::Scenario("step and run distance must be positive".into()));
        }
        if self.run_distance >= self.environment.length {
            return Err(SimError::Scenario(format!(
                "a {} m run does not fit in a {} m corridor",
                self.run_distance, self.environment.length
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub distance: f64,
    pub pose: Pose,
    pub scan: Scan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub scenario: Scenario,
    pub seed: u64,
    pub records: Vec<ScanRecord>,
}

/// Drives the robot down the centerline and records one scan per step.
pub fn generate_run(scenario: &Scenario, seed: u64) -> Result<RunLog, SimError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = scenario.steps();
    let mut records = Vec::with_capacity(n);
    for i in 1..=n {
        let distance = (i as f64 * scenario.step).min(scenario.run_distance);
        let pose = scenario.environment.centerline_pose(scenario.run_distance, distance);
        let scan = match scenario.sensor.kind {
            SensorKind::Sonar => simulate_sonar_scan(&scenario.environment, pose, &scenario.sensor, &scenario.anomaly, &mut rng)?,
            SensorKind::Laser => simulate_laser_scan(&scenario.environment, pose, &scenario.sensor, &scenario.anomaly, &mut rng)?,
        };
        records.push(ScanRecord { distance, pose, scan });
    }
    Ok(RunLog {
        scenario: scenario.clone(),
        seed,
        records,
    })
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LogLine {
    Header { scenario: Scenario, seed: u64 },
    Scan(ScanLine),
}

/// One scan as stored on disk.
#[derive(Serialize, Deserialize)]
struct ScanLine {
    distance: f64,
    pose: Pose,
    sensor: SensorKind,
    bearings: Vec<f64>,
    ranges: Vec<f64>,
    max_range: Vec<bool>,
}

impl RunLog {
    /// Line-delimited JSON: one header line, then one line per scan.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let header = LogLine::Header {
            scenario: self.scenario.clone(),
            seed: self.seed,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        for r in &self.records {
            let line = LogLine::Scan(ScanLine {
                distance: r.distance,
                pose: r.pose,
                sensor: r.scan.kind,
                bearings: r.scan.readings.iter().map(|x| x.beam_bearing).collect(),
                ranges: r.scan.readings.iter().map(|x| x.range).collect(),
                max_range: r.scan.readings.iter().map(|x| x.at_max_range).collect(),
            });
            serde_json::to_writer(&mut out, &line)?;
            out.write_all(b"\n")?;
        }
        out.flush()
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> std::io::Result<RunLog> {
        let bad = |m: String| std::io::Error::new(std::io::ErrorKind::InvalidData, m);
        let mut header = None;
        let mut records = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(&line).map_err(|e| bad(format!("line {}: {e}", n + 1)))?;
            match parsed {
                LogLine::Header { scenario, seed } => header = Some((scenario, seed)),
                LogLine::Scan(s) => {
                    if s.bearings.len() != s.ranges.len() || s.ranges.len() != s.max_range.len() {
                        return Err(bad(format!("line {}: ragged scan arrays", n + 1)));
                    }
                    let readings = s
                        .bearings
                        .iter()
                        .zip(&s.ranges)
                        .zip(&s.max_range)
                        .map(|((&b, &r), &m)| RangeReading {
                            sensor_pose: s.pose,
                            beam_bearing: b,
                            range: r,
                            at_max_range: m,
                        })
                        .collect();
                    records.push(ScanRecord {
                        distance: s.distance,
                        pose: s.pose,
                        scan: Scan {
                            kind: s.sensor,
                            readings,
                        },
                    });
                }
            }
        }
        let (scenario, seed) = header.ok_or_else(|| bad("missing header line".into()))?;
        Ok(RunLog {
            scenario,
            seed,
            records,
        })
    }
}
