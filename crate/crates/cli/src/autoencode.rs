//! `maxent autoencode`: reconstruct images from a retained block of DCT
//! coefficients three ways — least-squares pseudo-inverse, positive
//! (exponential prior), and doubly-bounded (uniform prior).

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use maxent_core::io::report::{AutoencodeParams, AutoencodeReport, ImageMetrics};
use maxent_core::io::{self, nudge_unit_interval, read_idx_images, write_pgm};
use maxent_core::priors::{ElementModel, PriorKind};
use maxent_core::solver::{solve, solve_gaussian, InversionProblem, SolveOptions};
use maxent_core::{dct2_map, LinearMap, Result};
use nalgebra::DVector;

use crate::args::AutoencodeArgs;
use crate::with_flag;

/// Interior clearance applied to exact 0/1 pixels before bounded solves.
const NUDGE_EPS: f64 = 1e-6;

/// Stall-free tolerances measured on digit images: background pixels push
/// the positive solve's natural parameters to ~1e6, flooring its residual
/// near 1e-9; the bounded solve converges to 1e-10 comfortably.
const EXP_OPTS: SolveOptions =
    SolveOptions { tol: 1e-8, max_iter: 500, backtrack: 0.5, min_step: 1e-12 };
const TED_OPTS: SolveOptions =
    SolveOptions { tol: 1e-10, max_iter: 500, backtrack: 0.5, min_step: 1e-12 };

pub struct ImageOutcome {
    pub metrics: ImageMetrics,
    pub pinv: DVector<f64>,
    pub exp: DVector<f64>,
    pub ted: DVector<f64>,
}

fn mse(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm_squared() / a.len() as f64
}

/// Runs the three reconstructions for one image.
pub fn reconstruct_image(
    map: &LinearMap,
    pixels: &[f64],
    index: usize,
) -> Result<ImageOutcome> {
    let x0 = DVector::from_column_slice(pixels);
    let z_raw = map.features(&x0);
    let pinv = solve_gaussian(map, &z_raw)?;
    let pinv_out_of_range =
        pinv.x_bar.iter().filter(|&&v| !(0.0..=1.0).contains(&v)).count();

    let mut nudged = pixels.to_vec();
    let nudged_pixels = nudge_unit_interval(&mut nudged, NUDGE_EPS);
    let z = map.features(&DVector::from_column_slice(&nudged));

    let n = map.n();
    let exp_problem = InversionProblem::new(
        map.clone(),
        vec![ElementModel::new(PriorKind::Exponential); n],
        z.clone(),
    )?;
    let exp = solve(&exp_problem, &EXP_OPTS)?;

    let ted_problem = InversionProblem::new(
        map.clone(),
        vec![ElementModel::new(PriorKind::Ted); n],
        z,
    )?;
    let ted = solve(&ted_problem, &TED_OPTS)?;

    let metrics = ImageMetrics {
        index,
        nudged_pixels,
        pinv_out_of_range,
        exp_pixels_above_one: exp.x_bar.iter().filter(|&&v| v > 1.0).count(),
        exp_min_pixel: exp.x_bar.min(),
        residual_inf_pinv: pinv.residual_inf,
        residual_inf_exp: exp.residual_inf,
        residual_inf_ted: ted.residual_inf,
        iterations_exp: exp.iterations,
        iterations_ted: ted.iterations,
        mse_pinv: mse(&pinv.x_bar, &x0),
        mse_exp: mse(&exp.x_bar, &x0),
        mse_ted: mse(&ted.x_bar, &x0),
        ted_in_unit_interval: ted.x_bar.iter().all(|&v| v > 0.0 && v < 1.0),
    };
    Ok(ImageOutcome { metrics, pinv: pinv.x_bar, exp: exp.x_bar, ted: ted.x_bar })
}

pub fn run_autoencode(args: &AutoencodeArgs) -> Result<i32> {
    let start = Instant::now();
    let map = dct2_map(args.side, args.keep)?;
    let batch = with_flag("--images", read_idx_images(&args.images, args.count))?;
    if batch.side != args.side {
        return Err(maxent_core::Error::Invalid(format!(
            "--side {} does not match archive image side {}",
            args.side, batch.side
        )));
    }
    fs::create_dir_all(&args.out_dir)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let result = (|| -> Result<AutoencodeReport> {
        let mut images = Vec::new();
        let mut clipped_total = 0usize;
        let mut worst_residual = 0.0f64;
        let mut total_iterations = 0usize;
        for (i, pixels) in batch.pixels.iter().enumerate() {
            let out = reconstruct_image(&map, pixels, i)?;
            let side = args.side;
            let emit = |name: &str,
                        data: &[f64],
                        clamp: bool,
                        written: &mut Vec<PathBuf>|
             -> Result<usize> {
                let path = args.out_dir.join(format!("digit_{i:02}_{name}.pgm"));
                let clipped = write_pgm(&path, data, side, clamp)?;
                written.push(path);
                Ok(clipped)
            };
            emit("original", pixels, false, &mut written)?;
            clipped_total += emit("pinv", out.pinv.as_slice(), true, &mut written)?;
            clipped_total += emit("exp", out.exp.as_slice(), true, &mut written)?;
            emit("ted", out.ted.as_slice(), false, &mut written)?;

            worst_residual = worst_residual
                .max(out.metrics.residual_inf_exp)
                .max(out.metrics.residual_inf_ted);
            total_iterations += out.metrics.iterations_exp + out.metrics.iterations_ted;
            images.push(out.metrics);
        }
        Ok(AutoencodeReport {
            command: "autoencode",
            parameters: AutoencodeParams {
                images: args.images.display().to_string(),
                count: args.count,
                side: args.side,
                keep: args.keep,
                out_dir: args.out_dir.display().to_string(),
            },
            residual_inf: worst_residual,
            iterations: total_iterations,
            images,
            clipped_pixels: clipped_total,
            timings_ms: start.elapsed().as_secs_f64() * 1e3,
        })
    })();

    match result {
        Ok(report) => {
            io::report::write_json(&args.report, &report)?;
            Ok(0)
        }
        Err(e) => {
            for path in written {
                let _ = fs::remove_file(path);
            }
            Err(e)
        }
    }
}
