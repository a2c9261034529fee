//! File ingestion and emission: numeric CSV matrices and vectors, IDX image
//! archives, binary PGM graymaps, and JSON run reports.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A batch of square grayscale images with pixels scaled to `[0, 1]`
/// (raw bytes divided by 255).
#[derive(Debug, Clone)]
pub struct ImageBatch {
    pub count: usize,
    pub side: usize,
    pub pixels: Vec<Vec<f64>>,
}

/// Parses a comma-separated numeric matrix; rows must have uniform length.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
                row: r + 1,
                col: c + 1,
                msg: format!("cannot parse {:?} as a number", field.trim()),
            })?;
            row.push(v);
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Shape(format!(
                    "row {} has {} columns, expected {}",
                    r + 1,
                    row.len(),
                    first.len()
                )));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Shape("csv file contains no rows".into()));
    }
    let (nr, nc) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(nr, nc, |r, c| rows[r][c]))
}

/// Parses a vector: a single-column file, or a single row.
pub fn read_vector_csv(path: &Path) -> Result<DVector<f64>> {
    let m = read_matrix_csv(path)?;
    if m.ncols() == 1 {
        Ok(DVector::from_column_slice(m.column(0).as_slice()))
    } else if m.nrows() == 1 {
        Ok(DVector::from_iterator(m.ncols(), m.row(0).iter().cloned()))
    } else {
        Err(Error::Shape(format!(
            "expected a vector, got a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Writes a matrix with 17 significant digits per value, which round-trips
/// doubles exactly.
pub fn write_matrix_csv(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            if c > 0 {
                out.push(',');
            }
            out.push_str(&format!("{:.16e}", m[(r, c)]));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a vector as one value per line.
pub fn write_vector_csv(path: &Path, v: &DVector<f64>) -> Result<()> {
    let mut out = String::new();
    for &x in v.iter() {
        out.push_str(&format!("{:.16e}\n", x));
    }
    fs::write(path, out)?;
    Ok(())
}

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;

/// Reads up to `limit` images from an IDX3 archive (big-endian magic
/// 0x00000803, then counts, then unsigned bytes). Images must be square.
pub fn read_idx_images(path: &Path, limit: usize) -> Result<ImageBatch> {
    let bytes = fs::read(path)?;
    if bytes.len() < 16 {
        return Err(Error::TruncatedFile(format!(
            "{} bytes is too short for an IDX3 header",
            bytes.len()
        )));
    }
    let be = |o: usize| u32::from_be_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]);
    let magic = be(0);
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::Format(format!(
            "magic 0x{magic:08x} is not an IDX3 image archive (expected 0x{IDX_IMAGE_MAGIC:08x})"
        )));
    }
    let count = be(4) as usize;
    let rows = be(8) as usize;
    let cols = be(12) as usize;
    if rows != cols || rows == 0 {
        return Err(Error::Format(format!("images must be square, got {rows}x{cols}")));
    }
    let take = limit.min(count);
    let need = 16 + take * rows * cols;
    if bytes.len() < need {
        return Err(Error::TruncatedFile(format!(
            "need {need} bytes for {take} {rows}x{cols} images, file has {}",
            bytes.len()
        )));
    }
    let mut pixels = Vec::with_capacity(take);
    for i in 0..take {
        let start = 16 + i * rows * cols;
        pixels.push(
            bytes[start..start + rows * cols]
                .iter()
                .map(|&b| b as f64 / 255.0)
                .collect(),
        );
    }
    Ok(ImageBatch { count: take, side: rows, pixels })
}

/// Writes a binary 8-bit PGM (P5, maxval 255). Values map to bytes by
/// `round(255·v)` with halves away from zero. With `clamp` set, values
/// outside `[0, 1]` are clipped and counted (the returned value); without
/// it, any out-of-range value is an error.
pub fn write_pgm(path: &Path, image: &[f64], side: usize, clamp: bool) -> Result<usize> {
    if image.len() != side * side {
        return Err(Error::Shape(format!(
            "image has {} pixels, expected {side}x{side}",
            image.len()
        )));
    }
    let mut clipped = 0usize;
    let mut data = Vec::with_capacity(side * side);
    for (i, &v) in image.iter().enumerate() {
        let vc = if !(0.0..=1.0).contains(&v) {
            if !clamp {
                return Err(Error::Range(format!("pixel {i} = {v} outside [0, 1]")));
            }
            clipped += 1;
            v.clamp(0.0, 1.0)
        } else {
            v
        };
        data.push((255.0 * vc).round() as u8);
    }
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{side} {side}\n255\n")?;
    f.write_all(&data)?;
    Ok(clipped)
}

/// Clamps values into `[eps, 1 − eps]` and returns how many were moved.
/// Doubly-bounded solves need strictly interior data; exact 0s and 1s have
/// infinite natural parameter.
pub fn nudge_unit_interval(pixels: &mut [f64], eps: f64) -> usize {
    let mut nudged = 0;
    for v in pixels.iter_mut() {
        if *v < eps {
            *v = eps;
            nudged += 1;
        } else if *v > 1.0 - eps {
            *v = 1.0 - eps;
            nudged += 1;
        }
    }
    nudged
}

pub mod report {
    //! JSON run-report schemas. Key order is the struct field order, so
    //! identical runs serialize identically (timings aside).

    use std::fs;
    use std::path::Path;

    use serde::Serialize;

    use crate::error::Result;
    use crate::priors::EntropyReport;

    #[derive(Debug, Serialize)]
    pub struct InvertParams {
        pub w: String,
        pub z: String,
        pub prior: String,
        pub tol: f64,
        pub max_iter: usize,
    }

    #[derive(Debug, Serialize)]
    pub struct InvertReport {
        pub command: &'static str,
        pub parameters: InvertParams,
        pub residual_inf: f64,
        pub iterations: usize,
        pub converged: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        pub entropy: Option<EntropyReport>,
        pub timings_ms: f64,
    }

    #[derive(Debug, Serialize)]
    pub struct SpectrumParams {
        pub nfft: usize,
        pub order: usize,
        pub seed: u64,
        #[serde(skip_serializing_if = "Option::is_none")]
        pub input: Option<String>,
        /// Noise-shaping filter applied to the generated excitation.
        pub noise_filter: &'static str,
        /// One-sided fold weighting used by the ACF map.
        pub acf_weighting: &'static str,
        /// Scale placing the AR spectrum in periodogram-bin units for the
        /// deviation metric.
        pub ar_comparison_scale: &'static str,
    }

    #[derive(Debug, Serialize)]
    pub struct SpectrumReport {
        pub command: &'static str,
        pub parameters: SpectrumParams,
        pub residual_inf: f64,
        pub iterations: usize,
        pub entropy: EntropyReport,
        pub max_rel_deviation: f64,
        pub timings_ms: f64,
    }

    #[derive(Debug, Serialize)]
    pub struct AutoencodeParams {
        pub images: String,
        pub count: usize,
        pub side: usize,
        pub keep: usize,
        pub out_dir: String,
    }

    #[derive(Debug, Serialize)]
    pub struct ImageMetrics {
        pub index: usize,
        /// Pixels moved off exact 0/1 before the bounded solves.
        pub nudged_pixels: usize,
        pub pinv_out_of_range: usize,
        pub exp_pixels_above_one: usize,
        pub exp_min_pixel: f64,
        pub residual_inf_pinv: f64,
        pub residual_inf_exp: f64,
        pub residual_inf_ted: f64,
        pub iterations_exp: usize,
        pub iterations_ted: usize,
        pub mse_pinv: f64,
        pub mse_exp: f64,
        pub mse_ted: f64,
        pub ted_in_unit_interval: bool,
    }

    #[derive(Debug, Serialize)]
    pub struct AutoencodeReport {
        pub command: &'static str,
        pub parameters: AutoencodeParams,
        /// Worst solve residual across all images and both bounded solves.
        pub residual_inf: f64,
        /// Total Newton iterations across all solves.
        pub iterations: usize,
        pub images: Vec<ImageMetrics>,
        /// Total pixels clipped while writing the pinv and exponential PGMs.
        pub clipped_pixels: usize,
        pub timings_ms: f64,
    }

    pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| crate::error::Error::Format(format!("report serialization: {e}")))?;
        text.push('\n');
        fs::write(path, text)?;
        Ok(())
    }
}
