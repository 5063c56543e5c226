//! Raster helpers: binary images, Otsu binarization, exact Euclidean distance
//! transform, 8-connected component labeling and binary PGM (P5) I/O.

use std::io::{self, BufRead, Write};

/// Row-major boolean raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    pixels: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![false; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<bool>) -> Self {
        assert_eq!(pixels.len(), width * height, "pixel buffer size");
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        self.pixels[y * self.width + x] = v;
    }

    pub fn pixels(&self) -> &[bool] {
        &self.pixels
    }

    pub fn count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.pixels.iter().any(|&p| p)
    }

    /// Sub-image covering columns `x0..x1` and rows `y0..y1`.
    pub fn crop(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> BinaryImage {
        let (w, h) = (x1 - x0, y1 - y0);
        let mut pixels = Vec::with_capacity(w * h);
        for y in y0..y1 {
            pixels.extend_from_slice(&self.pixels[y * self.width + x0..y * self.width + x1]);
        }
        BinaryImage::from_pixels(w, h, pixels)
    }

    pub fn write_pgm<W: Write>(&self, out: W, comment: &str) -> io::Result<()> {
        let bytes: Vec<u8> = self.pixels.iter().map(|&p| if p { 255 } else { 0 }).collect();
        write_pgm(out, self.width, self.height, &bytes, comment)
    }
}

/// Otsu threshold over 8-bit levels. Returns the level `t` such that pixels
/// with level `> t` form the foreground, or `None` when the histogram holds a
/// single level.
pub fn otsu_level(levels: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &l in levels {
        hist[l as usize] += 1;
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return None;
    }
    let total = levels.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let mut best = (f64::NEG_INFINITY, 0u8);
    for t in 0..255usize {
        w0 += hist[t] as f64;
        sum0 += t as f64 * hist[t] as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let mu0 = sum0 / w0;
        let mu1 = (sum_all - sum0) / w1;
        let between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
        if between > best.0 {
            best = (between, t as u8);
        }
    }
    Some(best.1)
}

/// Quantizes values in `[0, 1]` to 8-bit levels.
pub fn to_level(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binarizes a `[0, 1]` grayscale raster with Otsu's method. A constant image
/// yields all-false.
pub fn otsu_binarize(width: usize, height: usize, values: &[f64]) -> BinaryImage {
    let levels: Vec<u8> = values.iter().map(|&v| to_level(v)).collect();
    match otsu_level(&levels) {
        Some(t) => BinaryImage::from_pixels(width, height, levels.iter().map(|&l| l > t).collect()),
        None => BinaryImage::new(width, height),
    }
}

// Lower envelope of parabolas along one line (Felzenszwalb & Huttenlocher).
// Infinite samples are not parabola sites.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let mut k: Option<usize> = None;
    for q in 0..f.len() {
        if f[q].is_infinite() {
            continue;
        }
        let Some(mut top) = k else {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            k = Some(0);
            continue;
        };
        loop {
            let p = v[top];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[top] {
                // z[0] is -inf, so this never underflows.
                top -= 1;
                continue;
            }
            top += 1;
            v[top] = q;
            z[top] = s;
            z[top + 1] = f64::INFINITY;
            break;
        }
        k = Some(top);
    }
    if k.is_none() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut j = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[j + 1] < q as f64 {
            j += 1;
        }
        let p = v[j];
        let dq = q as f64 - p as f64;
        *o = dq * dq + f[p];
    }
}

/// Exact squared Euclidean distance (in pixels) from every pixel to the
/// nearest foreground pixel; `f64::INFINITY` everywhere for an empty image.
pub fn squared_distance_transform(img: &BinaryImage) -> Vec<f64> {
    let (w, h) = (img.width, img.height);
    let mut grid: Vec<f64> = img
        .pixels
        .iter()
        .map(|&p| if p { 0.0 } else { f64::INFINITY })
        .collect();
    let n = w.max(h);
    let mut f = vec![0.0; n];
    let mut out = vec![0.0; n];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    // Columns.
    for x in 0..w {
        for y in 0..h {
            f[y] = grid[y * w + x];
        }
        edt_1d(&f[..h], &mut out[..h], &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = out[y];
        }
    }
    // Rows.
    for y in 0..h {
        f[..w].copy_from_slice(&grid[y * w..(y + 1) * w]);
        edt_1d(&f[..w], &mut out[..w], &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&out[..w]);
    }
    grid
}

/// 8-connected component labels (`0` = background, components numbered from 1
/// in raster order of their first pixel) and the size of each component.
pub fn label_components(img: &BinaryImage) -> (Vec<u32>, Vec<usize>) {
    let (w, h) = (img.width, img.height);
    let mut labels = vec![0u32; w * h];
    let mut sizes = vec![0usize];
    let mut stack = Vec::new();
    for start in 0..w * h {
        if !img.pixels[start] || labels[start] != 0 {
            continue;
        }
        let label = sizes.len() as u32;
        let mut size = 0;
        labels[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let j = ny as usize * w + nx as usize;
                    if img.pixels[j] && labels[j] == 0 {
                        labels[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        sizes.push(size);
    }
    (labels, sizes)
}

/// Writes an 8-bit binary PGM with a single comment line.
pub fn write_pgm<W: Write>(
    mut out: W,
    width: usize,
    height: usize,
    bytes: &[u8],
    comment: &str,
) -> io::Result<()> {
    write!(out, "P5\n# {}\n{} {}\n255\n", comment.replace('\n', " "), width, height)?;
    out.write_all(bytes)?;
    out.flush()
}

/// Reads an 8-bit binary PGM, returning `(width, height, bytes)`.
pub fn read_pgm<R: BufRead>(mut input: R) -> io::Result<(usize, usize, Vec<u8>)> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut tokens = Vec::new();
    let mut line = String::new();
    while tokens.len() < 4 {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Err(bad("truncated PGM header"));
        }
        let content = line.split('#').next().unwrap_or("");
        tokens.extend(content.split_whitespace().map(str::to_owned));
    }
    if tokens[0] != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("bad PGM header value"));
    let (w, h, maxval) = (parse(&tokens[1])?, parse(&tokens[2])?, parse(&tokens[3])?);
    if maxval != 255 {
        return Err(bad("only 8-bit PGM is supported"));
    }
    let mut bytes = vec![0u8; w * h];
    input.read_exact(&mut bytes)?;
    Ok((w, h, bytes))
}
