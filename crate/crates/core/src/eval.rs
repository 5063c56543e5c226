//! Evaluation statistics: Pearson correlation, Fisher's linear discriminant,
//! Baddeley's Δ² image distance, 1-D k-means and threshold classification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;
use crate::image::{squared_distance_transform, BinaryImage};
use crate::sensor_model::SensorKind;

pub const DEFAULT_CUTOFF: f64 = 100.0;
pub const DEFAULT_ERROR_THRESHOLD: f64 = 300.0;
pub const KMEANS_RESTARTS: usize = 100;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// Product-moment correlation.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 3 {
        return Err(EvalError::TooFewSamples { needed: 3, got: xs.len() });
    }
    let (mx, my) = (mean(xs), mean(ys));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(EvalError::ConstantInput);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// `|μ₁ − μ₂|² / (σ₁² + σ₂²)` with population variances. Returns
/// `f64::INFINITY` when both classes are constant but apart.
pub fn fld(class1: &[f64], class2: &[f64]) -> Result<f64, EvalError> {
    for c in [class1, class2] {
        if c.len() < 2 {
            return Err(EvalError::TooFewSamples { needed: 2, got: c.len() });
        }
    }
    let d = mean(class1) - mean(class2);
    let s = variance(class1) + variance(class2);
    if s == 0.0 {
        return if d == 0.0 {
            Err(EvalError::UndefinedSeparability)
        } else {
            Ok(f64::INFINITY)
        };
    }
    Ok(d * d / s)
}

/// Which pixels Δ² averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delta2Domain {
    /// Pixels highlighted in either image.
    #[default]
    Highlighted,
    /// Every pixel of the raster.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Delta2 {
    pub value: f64,
    /// Both images were empty; the value is defined as 0.
    pub both_empty: bool,
}

/// A binary image with its distance transform truncated at `c`, reusable
/// across many Δ² evaluations.
#[derive(Debug, Clone)]
pub struct DistanceField {
    image: BinaryImage,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn new(image: BinaryImage, c: f64) -> Self {
        let dist = squared_distance_transform(&image)
            .into_iter()
            .map(|d2| d2.sqrt().min(c))
            .collect();
        Self { image, dist }
    }

    pub fn image(&self) -> &BinaryImage {
        &self.image
    }
}

/// Baddeley's Δ² between two equally sized binary images, distances in pixels
/// truncated at `c`.
pub fn baddeley_delta2(a: &BinaryImage, b: &BinaryImage, c: f64, domain: Delta2Domain) -> Result<Delta2, EvalError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(EvalError::DimensionMismatch);
    }
    if a.is_empty() && b.is_empty() {
        return Ok(Delta2 {
            value: 0.0,
            both_empty: true,
        });
    }
    Ok(delta2_fields(&DistanceField::new(a.clone(), c), &DistanceField::new(b.clone(), c), domain))
}

/// Δ² from precomputed distance fields (which must share dimensions and `c`).
pub fn delta2_fields(a: &DistanceField, b: &DistanceField, domain: Delta2Domain) -> Delta2 {
    assert_eq!(a.dist.len(), b.dist.len(), "distance field size");
    let (pa, pb) = (a.image.pixels(), b.image.pixels());
    let (mut sum, mut n) = (0.0, 0usize);
    for i in 0..a.dist.len() {
        if domain == Delta2Domain::Highlighted && !(pa[i] || pb[i]) {
            continue;
        }
        let t = a.dist[i] - b.dist[i];
        sum += t * t;
        n += 1;
    }
    if n == 0 || (a.image.is_empty() && b.image.is_empty()) {
        return Delta2 {
            value: 0.0,
            both_empty: true,
        };
    }
    Delta2 {
        value: (sum / n as f64).sqrt(),
        both_empty: false,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    /// Ascending.
    pub centroids: Vec<f64>,
    /// Cluster index of each input value.
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares.
    pub inertia: f64,
}

fn nearest(v: f64, centroids: &[f64]) -> usize {
    let mut best = 0;
    for (j, c) in centroids.iter().enumerate() {
        if (v - c).abs() < (v - centroids[best]).abs() {
            best = j;
        }
    }
    best
}

fn seed_plus_plus(values: &[f64], k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut centroids = vec![values[rng.gen_range(0..values.len())]];
    let mut d2: Vec<f64> = values.iter().map(|v| (v - centroids[0]).powi(2)).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut idx = values.len() - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.gen_range(0..values.len())
        };
        let c = values[pick];
        centroids.push(c);
        for (d, v) in d2.iter_mut().zip(values) {
            *d = d.min((v - c).powi(2));
        }
    }
    centroids
}

fn lloyd(values: &[f64], mut centroids: Vec<f64>) -> (Vec<f64>, Vec<usize>, f64) {
    let k = centroids.len();
    let mut labels = vec![usize::MAX; values.len()];
    for _ in 0..300 {
        let mut changed = false;
        for (l, &v) in labels.iter_mut().zip(values) {
            let j = nearest(v, &centroids);
            if *l != j {
                *l = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut sums = vec![0.0; k];
        let mut counts = vec![0usize; k];
        for (&l, &v) in labels.iter().zip(values) {
            sums[l] += v;
            counts[l] += 1;
        }
        for j in 0..k {
            // An emptied cluster keeps its previous centroid.
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            }
        }
    }
    let inertia = labels.iter().zip(values).map(|(&l, &v)| (v - centroids[l]).powi(2)).sum();
    (centroids, labels, inertia)
}

/// 1-D k-means: k-means++ seeding, Lloyd iterations, best of
/// [`KMEANS_RESTARTS`] restarts. Deterministic for a fixed seed.
pub fn kmeans_1d(values: &[f64], k: usize, seed: u64) -> Result<KMeans, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    if values.len() < k {
        return Err(EvalError::TooFewSamples { needed: k, got: values.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Vec<f64>, Vec<usize>, f64)> = None;
    for _ in 0..KMEANS_RESTARTS {
        let start = seed_plus_plus(values, k, &mut rng);
        let run = lloyd(values, start);
        if best.as_ref().is_none_or(|b| run.2 < b.2) {
            best = Some(run);
        }
    }
    let (centroids, labels, inertia) = best.expect("at least one restart");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centroids[a].total_cmp(&centroids[b]));
    let mut rank = vec![0; k];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    Ok(KMeans {
        centroids: order.iter().map(|&j| centroids[j]).collect(),
        labels: labels.iter().map(|&l| rank[l]).collect(),
        inertia,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GridClass {
    Accurate,
    Inaccurate,
}

pub fn classify(error: f64, threshold: f64) -> GridClass {
    if error < threshold {
        GridClass::Accurate
    } else {
        GridClass::Inaccurate
    }
}

pub fn classify_grids(errors: &[f64], threshold: f64) -> Vec<GridClass> {
    errors.iter().map(|&e| classify(e, threshold)).collect()
}

/// One indicator evaluation at one sample point of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub run_id: String,
    pub hallway: String,
    pub sensor: SensorKind,
    pub seed: u64,
    pub config: String,
    pub distance: f64,
    pub error: f64,
    pub conflict_score: f64,
    pub delta2: f64,
    pub delta2_both_empty: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[-1.0, -2.0, -3.0]).unwrap(), -1.0);
        assert!((pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(EvalError::ConstantInput));
        assert!(matches!(pearson(&[1.0], &[1.0, 2.0]), Err(EvalError::LengthMismatch(1, 2))));
    }

    #[test]
    fn fld_examples() {
        assert!((fld(&[0.0, 0.2], &[1.0, 1.2]).unwrap() - 50.0).abs() < 1e-12);
        assert_eq!(fld(&[0.0, 1.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(fld(&[1.0, 1.0], &[1.0, 1.0]), Err(EvalError::UndefinedSeparability));
        assert_eq!(fld(&[1.0, 1.0], &[2.0, 2.0]).unwrap(), f64::INFINITY);
        assert!(fld(&[1.0], &[2.0, 3.0]).is_err());
    }

    #[test]
    fn delta2_examples() {
        let mut a = BinaryImage::new(3, 3);
        a.set(0, 0, true);
        let mut b = BinaryImage::new(3, 3);
        b.set(0, 1, true);
        let h = Delta2Domain::Highlighted;
        assert_eq!(baddeley_delta2(&a, &a, 100.0, h).unwrap().value, 0.0);
        assert_eq!(baddeley_delta2(&a, &b, 100.0, h).unwrap().value, 1.0);
        let empty = BinaryImage::new(3, 3);
        assert_eq!(baddeley_delta2(&a, &empty, 100.0, h).unwrap().value, 100.0);
        let both = baddeley_delta2(&empty, &empty, 100.0, h).unwrap();
        assert!(both.both_empty);
        assert_eq!(both.value, 0.0);
        assert!(baddeley_delta2(&a, &BinaryImage::new(2, 3), 100.0, h).is_err());
    }

    #[test]
    fn delta2_full_domain_counts_every_pixel() {
        let mut a = BinaryImage::new(3, 1);
        a.set(0, 0, true);
        let mut b = BinaryImage::new(3, 1);
        b.set(2, 0, true);
        // distances to a: 0 1 2, to b: 2 1 0 -> (4 + 0 + 4) / 3
        let v = baddeley_delta2(&a, &b, 100.0, Delta2Domain::Full).unwrap().value;
        assert!((v - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        let v = baddeley_delta2(&a, &b, 1.0, Delta2Domain::Full).unwrap().value;
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn kmeans_planted() {
        let v = [1.0, 2.0, 10.0, 11.0, 100.0, 101.0];
        let km = kmeans_1d(&v, 3, 7).unwrap();
        assert_eq!(km.labels, vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(km.centroids, vec![1.5, 10.5, 100.5]);
        assert_eq!(km.inertia, 1.5);
        let each = kmeans_1d(&v, 6, 7).unwrap();
        assert_eq!(each.inertia, 0.0);
        assert_eq!(kmeans_1d(&v, 0, 1), Err(EvalError::InvalidK));
        assert!(kmeans_1d(&v[..2], 3, 1).is_err());
        assert_eq!(kmeans_1d(&v, 3, 99).unwrap(), kmeans_1d(&v, 3, 99).unwrap());
    }

    #[test]
    fn classification_boundary() {
        assert_eq!(
            classify_grids(&[0.0, 299.9, 300.0], DEFAULT_ERROR_THRESHOLD),
            vec![GridClass::Accurate, GridClass::Accurate, GridClass::Inaccurate]
        );
    }
}
