#![allow(dead_code)]

use mirnet_core::blocks::{ParamBuilder, ParamStore};
use mirnet_core::tensor::{GradCheckOptions, GradCheckReport, Shape, Tensor};

pub fn shape(n: usize, c: usize, h: usize, w: usize) -> Shape {
    Shape::new(n, c, h, w).unwrap()
}

pub fn rand(s: Shape, seed: u64) -> Tensor<f64> {
    Tensor::uniform(s, -1.0, 1.0, seed)
}

pub fn opts(coords: Option<usize>) -> GradCheckOptions {
    GradCheckOptions { max_coords_per_input: coords, ..GradCheckOptions::default() }
}

pub fn assert_passed(name: &str, r: &GradCheckReport) {
    assert!(r.passed, "{name}: max relative error {:.3e} over {} coordinates, worst {:?}", r.max_rel_error, r.coordinates, r.worst);
    assert!(r.coordinates > 0, "{name}: nothing checked");
}

/// Builds a block into a fresh store, then perturbs every parameter away from
/// its initial value so zero or constant initialisations do not hide terms.
pub fn build<B>(seed: u64, f: impl FnOnce(&mut ParamBuilder<'_, f64>) -> B) -> (B, ParamStore<f64>) {
    let mut store = ParamStore::new();
    let block = f(&mut ParamBuilder::new(&mut store, seed));
    jitter(&mut store, seed.wrapping_add(1));
    (block, store)
}

pub fn jitter(store: &mut ParamStore<f64>, seed: u64) {
    let ids: Vec<_> = store.ids().collect();
    for (k, id) in ids.into_iter().enumerate() {
        let t = store.get_mut(id);
        let noise: Tensor<f64> = Tensor::uniform(t.shape(), -0.2, 0.2, seed.wrapping_mul(31).wrapping_add(k as u64));
        for (v, d) in t.data_mut().iter_mut().zip(noise.data()) {
            *v += d;
        }
    }
}
