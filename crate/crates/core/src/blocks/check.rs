use super::params::{Bound, ParamStore};
use crate::error::Result;
use crate::tensor::{grad_check_many, GradCheckOptions, GradCheckReport, Tape, Tensor, Var};

/// Reduces `out` to a scalar through a fixed random projection, so every
/// output element contributes to the gradient with its own weight.
pub fn probe_loss(tape: &mut Tape<f64>, out: Var, seed: u64) -> Result<Var> {
    let probe = tape.constant(Tensor::uniform(tape.shape(out), -1.0, 1.0, seed));
    let weighted = tape.mul(out, probe)?;
    tape.sum(weighted)
}

/// Gradient check of a parameterised block with respect to its inputs and
/// every parameter in `params`. `f` receives the bound parameters and the
/// input vars and returns the block output, which is reduced with
/// [`probe_loss`].
pub fn grad_check_block<F>(
    params: &ParamStore<f64>,
    inputs: &[Tensor<f64>],
    opts: &GradCheckOptions,
    f: F,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape<f64>, &Bound, &[Var]) -> Result<Var>,
{
    let n = inputs.len();
    let mut all: Vec<Tensor<f64>> = inputs.to_vec();
    all.extend(params.iter().map(|(_, p)| p.value.clone()));
    let seed = opts.seed;
    grad_check_many(
        |tape, vars| {
            let bound = Bound::from_vars(vars[n..].to_vec());
            let out = f(tape, &bound, &vars[..n])?;
            probe_loss(tape, out, seed ^ 0x9e37_79b9)
        },
        &all,
        opts,
    )
}
