use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Tape, Tensor, Var};
use crate::error::{contract_err, Result};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    /// Central-difference step.
    pub step: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Check at most this many coordinates per input tensor, chosen at
    /// random; `None` checks every coordinate.
    pub max_coords_per_input: Option<usize>,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        GradCheckOptions { step: 1e-5, tolerance: 1e-4, max_coords_per_input: None, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    pub coordinates: usize,
    pub passed: bool,
    /// `(input, element, analytic, numeric)` at the largest relative error.
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// Gradients below this magnitude are compared on an absolute scale: central
/// differences carry roughly `1e-16 * |f| / step` of roundoff, which swamps
/// the relative error of near-zero entries.
pub const RELATIVE_FLOOR: f64 = 1e-6;

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Compares the tape gradient of a scalar function of one tensor with
/// central differences.
pub fn grad_check<F>(f: F, input: &Tensor<f64>, step: f64, tolerance: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, Var) -> Result<Var>,
{
    let opts = GradCheckOptions { step, tolerance, ..GradCheckOptions::default() };
    grad_check_many(|tape, vars| f(tape, vars[0]), std::slice::from_ref(input), &opts)
}

/// Multi-input variant of [`grad_check`]: every input is a differentiable leaf.
pub fn grad_check_many<F>(f: F, inputs: &[Tensor<f64>], opts: &GradCheckOptions) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &[Var]) -> Result<Var>,
{
    if opts.step <= 0.0 {
        return contract_err("finite-difference step must be positive");
    }
    let eval = |values: &[Tensor<f64>]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|v| tape.variable(v.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let value = tape.value(out);
        if value.len() != 1 {
            return contract_err(format!("checked function must be scalar, got shape {}", value.shape()));
        }
        Ok(value.data()[0])
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|v| tape.variable(v.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut work: Vec<Tensor<f64>> = inputs.to_vec();
    let mut report = GradCheckReport { max_abs_error: 0.0, max_rel_error: 0.0, coordinates: 0, passed: true, worst: None };
    for (k, var) in vars.iter().enumerate() {
        let analytic = grads.get(*var);
        let n = inputs[k].len();
        let coords: Vec<usize> = match opts.max_coords_per_input {
            Some(limit) if limit < n => {
                let mut picked = sample(&mut rng, n, limit).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..n).collect(),
        };
        for i in coords {
            let original = inputs[k].data()[i];
            work[k].data_mut()[i] = original + opts.step;
            let plus = eval(&work)?;
            work[k].data_mut()[i] = original - opts.step;
            let minus = eval(&work)?;
            work[k].data_mut()[i] = original;
            let numeric = (plus - minus) / (2.0 * opts.step);
            let a = analytic.data()[i];
            report.max_abs_error = report.max_abs_error.max((a - numeric).abs());
            let rel = relative_error(a, numeric);
            if report.worst.is_none() || rel > report.max_rel_error {
                report.worst = Some((k, i, a, numeric));
            }
            report.max_rel_error = report.max_rel_error.max(rel);
            report.coordinates += 1;
        }
    }
    report.passed = report.max_rel_error <= opts.tolerance;
    Ok(report)
}
