//! Gradient-histogram descriptors over caller-supplied gradient fields:
//! trajectory-style HOG patches and the extended co-occurrence HOG, which
//! accumulates the summed magnitudes of displaced pixel pairs binned by
//! both pixels' orientations.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum DescriptorError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

fn input(msg: impl Into<String>) -> DescriptorError {
    DescriptorError::Input(msg.into())
}

/// Gradient magnitude and orientation on a `width x height` grid, row-major
/// (`index = y * width + x`). Orientations are radians.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    width: usize,
    height: usize,
    magnitude: Vec<f64>,
    orientation: Vec<f64>,
}

impl GradientField {
    pub fn new(
        width: usize,
        height: usize,
        magnitude: Vec<f64>,
        orientation: Vec<f64>,
    ) -> Result<Self, DescriptorError> {
        if width == 0 || height == 0 {
            return Err(input("field dimensions must be positive"));
        }
        let n = width * height;
        if magnitude.len() != n || orientation.len() != n {
            return Err(input(format!(
                "{width}x{height} field needs {n} magnitudes and orientations, got {} and {}",
                magnitude.len(),
                orientation.len()
            )));
        }
        if magnitude.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(input("magnitudes must be finite and non-negative"));
        }
        if orientation.iter().any(|o| !o.is_finite()) {
            return Err(input("orientations must be finite"));
        }
        Ok(Self {
            width,
            height,
            magnitude,
            orientation,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn magnitude(&self) -> &[f64] {
        &self.magnitude
    }

    pub fn orientation(&self) -> &[f64] {
        &self.orientation
    }

    pub fn magnitude_at(&self, x: usize, y: usize) -> f64 {
        self.magnitude[y * self.width + x]
    }

    pub fn orientation_at(&self, x: usize, y: usize) -> f64 {
        self.orientation[y * self.width + x]
    }

    /// Same orientations, magnitudes multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self, DescriptorError> {
        Self::new(
            self.width,
            self.height,
            self.magnitude.iter().map(|m| m * s).collect(),
            self.orientation.clone(),
        )
    }

    /// Parses `field <n> <m>` followed by `n*m` magnitudes then `n*m`
    /// orientations, whitespace-separated (one grid row per line by
    /// convention, but line breaks are not significant).
    pub fn parse(text: &str) -> Result<Self, DescriptorError> {
        let mut tokens = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim_start().starts_with('#'))
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t)));
        let perr = |line: usize, msg: String| DescriptorError::Parse { line, msg };
        match tokens.next() {
            Some((_, "field")) => {}
            Some((line, t)) => return Err(perr(line, format!("expected `field`, found `{t}`"))),
            None => return Err(perr(1, "empty field file".into())),
        }
        let mut dim = || -> Result<usize, DescriptorError> {
            let (line, t) = tokens
                .next()
                .ok_or_else(|| perr(1, "header needs `field <n> <m>`".into()))?;
            t.parse()
                .map_err(|_| perr(line, format!("bad dimension `{t}`")))
        };
        let (width, height) = (dim()?, dim()?);
        let n = width * height;
        let mut values = Vec::with_capacity(2 * n);
        for (line, t) in tokens {
            let v: f64 = t
                .parse()
                .map_err(|_| perr(line, format!("bad number `{t}`")))?;
            values.push(v);
        }
        if values.len() != 2 * n {
            return Err(perr(
                text.lines().count(),
                format!("expected {} values, found {}", 2 * n, values.len()),
            ));
        }
        let orientation = values.split_off(n);
        Self::new(width, height, values, orientation)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("field {} {}\n", self.width, self.height);
        for grid in [&self.magnitude, &self.orientation] {
            for row in grid.chunks(self.width) {
                let line: Vec<String> = row.iter().map(f64::to_string).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
        s
    }
}

/// Orientation bin of `angle` among `bins` equal sectors of the full circle.
pub fn quantize_orientation(angle: f64, bins: usize) -> Result<usize, DescriptorError> {
    if bins == 0 {
        return Err(input("bin count must be at least 1"));
    }
    if !angle.is_finite() {
        return Err(input(format!("non-finite angle {angle}")));
    }
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    let bin = (wrapped * bins as f64 / TAU).floor() as usize;
    Ok(bin.min(bins - 1))
}

/// Cell grid and orientation bins of a spatio-temporal patch descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DescriptorLayout {
    pub cells_x: usize,
    pub cells_y: usize,
    pub cells_t: usize,
    pub direction_bins: usize,
}

impl DescriptorLayout {
    /// 2 x 2 x 3 cells, 8 directions.
    pub const HOG: Self = Self::new(2, 2, 3, 8);
    /// 2 x 2 x 3 cells, 9 directions (8 plus a zero-flow bin).
    pub const HOF: Self = Self::new(2, 2, 3, 9);
    /// Per flow component; same grid as HOG.
    pub const MBH: Self = Self::new(2, 2, 3, 8);

    pub const fn new(
        cells_x: usize,
        cells_y: usize,
        cells_t: usize,
        direction_bins: usize,
    ) -> Self {
        Self {
            cells_x,
            cells_y,
            cells_t,
            direction_bins,
        }
    }

    pub const fn dimension(&self) -> usize {
        self.cells_x * self.cells_y * self.cells_t * self.direction_bins
    }
}

/// Magnitude-weighted orientation histograms per cell, one field per
/// temporal cell, concatenated in (t, y, x) order and L2-normalized over the
/// whole patch. A patch with norm below 1e-6 is returned unnormalized.
pub fn hog_patch(
    fields: &[GradientField],
    layout: DescriptorLayout,
) -> Result<Vec<f64>, DescriptorError> {
    let DescriptorLayout {
        cells_x,
        cells_y,
        cells_t,
        direction_bins,
    } = layout;
    if cells_x == 0 || cells_y == 0 || cells_t == 0 || direction_bins == 0 {
        return Err(input("layout entries must be positive"));
    }
    if fields.len() != cells_t {
        return Err(input(format!(
            "layout has {cells_t} temporal cells but {} fields were given",
            fields.len()
        )));
    }
    let mut out = vec![0.0; layout.dimension()];
    for (t, field) in fields.iter().enumerate() {
        if field.width % cells_x != 0 || field.height % cells_y != 0 {
            return Err(input(format!(
                "{}x{} field does not split into {cells_x}x{cells_y} cells",
                field.width, field.height
            )));
        }
        let cell_w = field.width / cells_x;
        let cell_h = field.height / cells_y;
        for y in 0..field.height {
            for x in 0..field.width {
                let bin = quantize_orientation(field.orientation_at(x, y), direction_bins)?;
                let cell = (t * cells_y + y / cell_h) * cells_x + x / cell_w;
                out[cell * direction_bins + bin] += field.magnitude_at(x, y);
            }
        }
    }
    let norm = out.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 1e-6 {
        out.iter_mut().for_each(|v| *v /= norm);
    }
    Ok(out)
}

/// One `bins x bins` co-occurrence matrix per displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceHistogram {
    pub offsets: Vec<(i64, i64)>,
    pub bins: usize,
    /// Row-major `bins * bins` matrices, in offset order. Entry `(i, j)`
    /// pairs a first pixel in bin `i` with a displaced pixel in bin `j`.
    pub matrices: Vec<Vec<f64>>,
}

impl CooccurrenceHistogram {
    pub fn get(&self, offset: usize, i: usize, j: usize) -> f64 {
        self.matrices[offset][i * self.bins + j]
    }

    pub fn total_mass(&self, offset: usize) -> f64 {
        self.matrices[offset].iter().sum()
    }
}

fn valid_range(len: usize, shift: i64) -> std::ops::Range<usize> {
    let len = len as i64;
    let lo = (-shift).max(0);
    let hi = (len - shift).min(len);
    if lo >= hi {
        0..0
    } else {
        lo as usize..hi as usize
    }
}

/// For every offset `(dx, dy)`, sums `|g(p,q)| + |g(p+dx, q+dy)|` into
/// `C(bin(p,q), bin(p+dx, q+dy))`. Pairs whose displaced pixel leaves the
/// field are skipped.
pub fn ecohog(
    field: &GradientField,
    offsets: &[(i64, i64)],
    bins: usize,
) -> Result<CooccurrenceHistogram, DescriptorError> {
    if offsets.is_empty() {
        return Err(input("offset list is empty"));
    }
    let quantized = field
        .orientation
        .iter()
        .map(|&a| quantize_orientation(a, bins))
        .collect::<Result<Vec<_>, _>>()?;
    let w = field.width;
    let mut matrices = Vec::with_capacity(offsets.len());
    for &(dx, dy) in offsets {
        let xs = valid_range(field.width, dx);
        let ys = valid_range(field.height, dy);
        if xs.is_empty() || ys.is_empty() {
            return Err(input(format!(
                "offset ({dx}, {dy}) leaves no in-bounds pair in a {}x{} field",
                field.width, field.height
            )));
        }
        let mut c = vec![0.0; bins * bins];
        for y in ys {
            let y2 = (y as i64 + dy) as usize;
            for x in xs.clone() {
                let x2 = (x as i64 + dx) as usize;
                let (a, b) = (y * w + x, y2 * w + x2);
                c[quantized[a] * bins + quantized[b]] += field.magnitude[a] + field.magnitude[b];
            }
        }
        matrices.push(c);
    }
    Ok(CooccurrenceHistogram {
        offsets: offsets.to_vec(),
        bins,
        matrices,
    })
}

pub fn flatten_ecohog(h: &CooccurrenceHistogram) -> Vec<f64> {
    h.matrices.concat()
}
