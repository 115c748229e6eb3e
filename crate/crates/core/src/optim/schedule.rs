/// Cosine annealing from `lr_init` down to `lr_min` over `total_steps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CosineSchedule {
    pub lr_init: f64,
    pub lr_min: f64,
    pub total_steps: u64,
}

impl Default for CosineSchedule {
    fn default() -> Self {
        CosineSchedule { lr_init: 2e-4, lr_min: 1e-6, total_steps: 700_000 }
    }
}

impl CosineSchedule {
    pub fn at(&self, step: u64) -> f64 {
        cosine_lr(step, self)
    }
}

/// `lr_min + (lr_init - lr_min) * (1 + cos(pi t / T)) / 2`, clamped to `lr_min` past `T`.
pub fn cosine_lr(step: u64, sched: &CosineSchedule) -> f64 {
    if step >= sched.total_steps {
        return sched.lr_min;
    }
    let c = (std::f64::consts::PI * step as f64 / sched.total_steps as f64).cos();
    // Weighted form hits both endpoints exactly.
    0.5 * (1.0 + c) * sched.lr_init + 0.5 * (1.0 - c) * sched.lr_min
}
