use super::params::{ParamBuilder, ParamStore};
use super::skff::{Fusion, FusionKind};
use crate::tensor::Scalar;

/// Learnable scalar counts grouped by block path.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamCount {
    /// `(path, count)` in registration order, where the path is the
    /// parameter name without its final component.
    pub groups: Vec<(String, usize)>,
    pub total: usize,
}

impl ParamCount {
    /// Sum over every parameter whose name starts with `prefix`.
    pub fn under(&self, prefix: &str) -> usize {
        self.groups
            .iter()
            .filter(|(path, _)| path == prefix || path.starts_with(&format!("{prefix}.")))
            .map(|(_, n)| n)
            .sum()
    }
}

pub fn count_parameters<T: Scalar>(store: &ParamStore<T>) -> ParamCount {
    let mut groups: Vec<(String, usize)> = Vec::new();
    for (_, p) in store.iter() {
        let path = p.name.rsplit_once('.').map_or("", |(head, _)| head).to_string();
        match groups.last_mut() {
            Some((last, n)) if *last == path => *n += p.value.len(),
            _ => groups.push((path, p.value.len())),
        }
    }
    let total = groups.iter().map(|(_, n)| n).sum();
    ParamCount { groups, total }
}

/// Parameters of one fusion module over `branches` inputs of `channels` channels.
pub fn fusion_parameter_count(kind: FusionKind, channels: usize, branches: usize) -> usize {
    let mut store = ParamStore::<f32>::new();
    let _ = Fusion::new(&mut ParamBuilder::new(&mut store, 0), "fusion", kind, channels, branches);
    store.num_scalars()
}
