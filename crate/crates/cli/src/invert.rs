//! `maxent invert`: reconstruct x from a feature CSV pair.

use std::time::Instant;

use maxent_core::io::report::{InvertParams, InvertReport};
use maxent_core::io::{self, read_matrix_csv, read_vector_csv};
use maxent_core::priors::{entropy_measures, ElementModel};
use maxent_core::solver::{solve, InversionProblem, SolveOptions};
use maxent_core::{dense_map, Error, Result};

use crate::args::{kind_from_id, InvertArgs};
use crate::with_flag;

pub fn run_invert(args: &InvertArgs) -> Result<i32> {
    let start = Instant::now();
    let w = with_flag("--w", read_matrix_csv(&args.w))?;
    let n = w.nrows();
    let z = with_flag("--z", read_vector_csv(&args.z))?;

    let (models, prior_label) = match (&args.prior, &args.prior_per_element) {
        (Some(prior), None) => {
            (vec![ElementModel::new(prior.kind()); n], format!("{}", prior.kind()))
        }
        (None, Some(path)) => {
            let ids = with_flag("--prior-per-element", read_vector_csv(path))?;
            let mut models = Vec::with_capacity(ids.len());
            for (i, &v) in ids.iter().enumerate() {
                let id = v as u32;
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(Error::Invalid(format!(
                        "--prior-per-element: entry {i} = {v} is not an integer id"
                    )));
                }
                let kind = kind_from_id(id).ok_or_else(|| {
                    Error::Invalid(format!(
                        "--prior-per-element: id {id} at entry {i} is not in 0..=4"
                    ))
                })?;
                models.push(ElementModel::new(kind));
            }
            (models, "per-element".to_string())
        }
        (None, None) => {
            return Err(Error::Invalid(
                "one of --prior or --prior-per-element is required".into(),
            ))
        }
        (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
    };

    let map = with_flag("--w", dense_map(w))?;
    let problem = InversionProblem::new(map, models, z)?;
    let opts = SolveOptions { tol: args.tol, max_iter: args.max_iter, ..Default::default() };
    let result = solve(&problem, &opts)?;

    io::write_vector_csv(&args.out, &result.x_bar)?;
    let entropy = if result.x_bar.iter().all(|&v| v > 0.0) {
        Some(entropy_measures(result.x_bar.as_slice())?)
    } else {
        None
    };
    let report = InvertReport {
        command: "invert",
        parameters: InvertParams {
            w: args.w.display().to_string(),
            z: args.z.display().to_string(),
            prior: prior_label,
            tol: args.tol,
            max_iter: args.max_iter,
        },
        residual_inf: result.residual_inf,
        iterations: result.iterations,
        converged: result.converged,
        entropy,
        timings_ms: start.elapsed().as_secs_f64() * 1e3,
    };
    io::report::write_json(&args.report, &report)?;
    Ok(0)
}
