use crate::blocks::{ParamId, ParamStore};
use crate::error::{Error, Result};
use crate::tensor::{Checkpoint, Gradients, Scalar, Var};

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

/// First and second moment estimates for every parameter of a store.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub m: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<T: Scalar>(params: &ParamStore<T>) -> Self {
        let zeros: Vec<Vec<f64>> = params.iter().map(|(_, p)| vec![0.0; p.value.len()]).collect();
        AdamState { step: 0, m: zeros.clone(), v: zeros }
    }

    /// One bias-corrected Adam update. `grads[i]` belongs to parameter `i`;
    /// `None` is treated as a zero gradient.
    pub fn step<T: Scalar>(&mut self, params: &mut ParamStore<T>, grads: &[Option<&[T]>], lr: f64) -> Result<()> {
        if grads.len() != params.len() || self.m.len() != params.len() {
            return Err(Error::Contract(format!(
                "adam_step got {} gradients for {} parameters (state holds {})",
                grads.len(),
                params.len(),
                self.m.len()
            )));
        }
        if !(lr > 0.0) {
            return Err(Error::Contract(format!("learning rate must be > 0, got {lr}")));
        }
        for (id, g) in params.ids().zip(grads) {
            let n = params.get(id).len();
            if g.is_some_and(|g| g.len() != n) || self.m[id.index()].len() != n {
                return Err(Error::Contract(format!("gradient misaligned for {}", params.param(id).name)));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for (id, g) in params.ids().zip(grads) {
            let (m, v) = (&mut self.m[id.index()], &mut self.v[id.index()]);
            let theta = params.get_mut(id).data_mut();
            for i in 0..theta.len() {
                let gi = g.map_or(0.0, |g| g[i].as_f64());
                m[i] = ADAM_BETA1 * m[i] + (1.0 - ADAM_BETA1) * gi;
                v[i] = ADAM_BETA2 * v[i] + (1.0 - ADAM_BETA2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                let update = lr * m_hat / (v_hat.sqrt() + ADAM_EPS);
                theta[i] = T::from_f64_lossy(theta[i].as_f64() - update);
            }
        }
        Ok(())
    }

    /// Convenience wrapper taking gradients straight from a backward pass.
    pub fn step_from_tape<T: Scalar>(
        &mut self,
        params: &mut ParamStore<T>,
        grads: &Gradients<T>,
        vars: &[Var],
        lr: f64,
    ) -> Result<()> {
        let per_param: Vec<Option<&[T]>> = vars.iter().map(|&v| grads.raw(v)).collect();
        self.step(params, &per_param, lr)
    }

    /// Appends `.adam_m` / `.adam_v` entries and the `adam.step` counter.
    pub fn append_to_checkpoint<T: Scalar>(&self, params: &ParamStore<T>, ckpt: &mut Checkpoint) {
        for (id, p) in params.iter() {
            let m = self.m[id.index()].iter().map(|&x| x as f32).collect();
            let v = self.v[id.index()].iter().map(|&x| x as f32).collect();
            ckpt.push(format!("{}.adam_m", p.name), p.dims.clone(), m);
            ckpt.push(format!("{}.adam_v", p.name), p.dims.clone(), v);
        }
        ckpt.push("adam.step", vec![], vec![self.step as f32]);
    }

    pub fn from_checkpoint<T: Scalar>(params: &ParamStore<T>, ckpt: &Checkpoint) -> Result<Self> {
        let mut state = AdamState::new(params);
        let step = ckpt
            .get("adam.step")
            .ok_or_else(|| Error::Config("checkpoint has no optimizer state".into()))?;
        state.step = step.values[0] as u64;
        for (id, p) in params.iter() {
            for (suffix, dst) in [("adam_m", &mut state.m), ("adam_v", &mut state.v)] {
                let name = format!("{}.{suffix}", p.name);
                let e = ckpt.get(&name).ok_or_else(|| Error::Config(format!("checkpoint is missing {name}")))?;
                if e.values.len() != p.value.len() {
                    return Err(Error::Config(format!("{name} has wrong length")));
                }
                dst[id.index()] = e.values.iter().map(|&x| x as f64).collect();
            }
        }
        Ok(state)
    }

    pub fn moments(&self, id: ParamId) -> (&[f64], &[f64]) {
        (&self.m[id.index()], &self.v[id.index()])
    }
}
