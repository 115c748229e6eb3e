use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{Checkpoint, Scalar, Shape, Tape, Tensor, Var};

/// Index of a parameter inside a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug)]
pub struct Param<T> {
    pub name: String,
    /// Logical extents written to checkpoints (rank 4 for conv weights, rank 1 otherwise).
    pub dims: Vec<usize>,
    pub value: Tensor<T>,
}

/// Named learnable tensors in registration order.
#[derive(Clone, Debug, Default)]
pub struct ParamStore<T> {
    params: Vec<Param<T>>,
}

/// Parameters of a store recorded as tape leaves.
#[derive(Clone, Debug)]
pub struct Bound {
    vars: Vec<Var>,
}

impl Bound {
    pub fn var(&self, id: ParamId) -> Var {
        self.vars[id.0]
    }

    /// Parameter leaves in store order, e.g. the trailing inputs of a gradient check.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Bound { vars }
    }

    pub fn vars(&self) -> &[Var] {
        &self.vars
    }
}

impl<T: Scalar> ParamStore<T> {
    pub fn new() -> Self {
        ParamStore { params: Vec::new() }
    }

    pub fn push(&mut self, name: String, dims: Vec<usize>, value: Tensor<T>) -> ParamId {
        debug_assert!(self.params.iter().all(|p| p.name != name), "duplicate parameter {name}");
        self.params.push(Param { name, dims, value });
        ParamId(self.params.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].value
    }

    pub fn param(&self, id: ParamId) -> &Param<T> {
        &self.params[id.0]
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &Param<T>)> {
        self.params.iter().enumerate().map(|(i, p)| (ParamId(i), p))
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|p| p.name == name).map(ParamId)
    }

    /// Total number of learnable scalars.
    pub fn num_scalars(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero(&mut self, id: ParamId) {
        self.params[id.0].value.data_mut().fill(T::zero());
    }

    pub fn cast<U: Scalar>(&self) -> ParamStore<U> {
        ParamStore {
            params: self
                .params
                .iter()
                .map(|p| Param { name: p.name.clone(), dims: p.dims.clone(), value: p.value.cast() })
                .collect(),
        }
    }

    /// Records every parameter on `tape` as a leaf.
    pub fn bind(&self, tape: &mut Tape<T>, requires_grad: bool) -> Bound {
        Bound { vars: self.params.iter().map(|p| tape.leaf(p.value.clone(), requires_grad)).collect() }
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = Checkpoint::default();
        for p in &self.params {
            let values = p.value.data().iter().map(|v| v.as_f64() as f32).collect();
            ckpt.push(p.name.clone(), p.dims.clone(), values);
        }
        ckpt
    }

    /// Overwrites parameter values from `ckpt`. Every parameter must be
    /// present with identical extents; entries the store does not know about
    /// (optimizer state) are ignored.
    pub fn load_checkpoint(&mut self, ckpt: &Checkpoint) -> Result<()> {
        for p in &self.params {
            match ckpt.get(&p.name) {
                None => return Err(Error::Config(format!("checkpoint is missing parameter {}", p.name))),
                Some(e) if e.dims != p.dims => {
                    return Err(Error::Config(format!(
                        "parameter {} has extents {:?} in checkpoint, expected {:?}",
                        p.name, e.dims, p.dims
                    )))
                }
                Some(_) => {}
            }
        }
        for p in &mut self.params {
            let e = ckpt.get(&p.name).expect("checked above");
            for (dst, &src) in p.value.data_mut().iter_mut().zip(&e.values) {
                *dst = T::from_f64_lossy(src as f64);
            }
        }
        Ok(())
    }
}

/// Registers parameters under a dotted path and draws their initial values.
pub struct ParamBuilder<'a, T> {
    store: &'a mut ParamStore<T>,
    rng: ChaCha8Rng,
    path: Vec<String>,
}

impl<'a, T: Scalar> ParamBuilder<'a, T> {
    pub fn new(store: &'a mut ParamStore<T>, seed: u64) -> Self {
        ParamBuilder { store, rng: ChaCha8Rng::seed_from_u64(seed), path: Vec::new() }
    }

    /// Runs `f` with `name` appended to the current path.
    pub fn scoped<R>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> R) -> R {
        self.path.push(name.to_string());
        let r = f(self);
        self.path.pop();
        r
    }

    fn full_name(&self, leaf: &str) -> String {
        let mut name = self.path.join(".");
        if !name.is_empty() {
            name.push('.');
        }
        name.push_str(leaf);
        name
    }

    pub fn add(&mut self, leaf: &str, dims: Vec<usize>, shape: Shape, mut init: impl FnMut(&mut ChaCha8Rng) -> f64) -> ParamId {
        let data = (0..shape.numel()).map(|_| T::from_f64_lossy(init(&mut self.rng))).collect();
        let value = Tensor::from_vec(shape, data).expect("shape matches generated data");
        let name = self.full_name(leaf);
        self.store.push(name, dims, value)
    }

    /// Conv weight `(out, in, k, k)` drawn from U(-b, b) with b = 1/sqrt(fan_in).
    pub fn conv_weight(&mut self, out_c: usize, in_c: usize, k: usize) -> ParamId {
        let bound = 1.0 / ((in_c * k * k) as f64).sqrt();
        let shape = Shape::new(out_c, in_c, k, k).expect("conv extents are positive");
        self.add("weight", vec![out_c, in_c, k, k], shape, |rng| rng.random_range(-bound..bound))
    }

    pub fn vector(&mut self, leaf: &str, n: usize, value: f64) -> ParamId {
        let shape = Shape::vector(n).expect("vector length is positive");
        self.add(leaf, vec![n], shape, |_| value)
    }
}
