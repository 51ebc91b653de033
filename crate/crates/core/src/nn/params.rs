use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use candle_core::{DType, Device, Shape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

struct Store {
    vars: BTreeMap<String, Var>,
    rng: ChaCha8Rng,
}

/// Seeded, ordered parameter registry.
///
/// Plays the role of a var-builder: modules request their weights by dotted
/// path and receive a tensor backed by a trainable [`Var`]. Initialisation
/// draws from a ChaCha stream, so two stores built with the same seed and the
/// same construction order hold bit-identical weights.
#[derive(Clone)]
pub struct Params {
    store: Arc<Mutex<Store>>,
    prefix: String,
    dtype: DType,
    device: Device,
}

impl Params {
    pub fn new(seed: u64, dtype: DType) -> Self {
        Params {
            store: Arc::new(Mutex::new(Store {
                vars: BTreeMap::new(),
                rng: ChaCha8Rng::seed_from_u64(seed),
            })),
            prefix: String::new(),
            dtype,
            device: Device::Cpu,
        }
    }

    pub fn pp(&self, name: impl AsRef<str>) -> Self {
        let prefix = if self.prefix.is_empty() {
            name.as_ref().to_string()
        } else {
            format!("{}.{}", self.prefix, name.as_ref())
        };
        Params {
            store: self.store.clone(),
            prefix,
            dtype: self.dtype,
            device: self.device.clone(),
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    fn path(&self, name: &str) -> String {
        if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{}", self.prefix, name)
        }
    }

    fn create(&self, name: &str, shape: Shape, fill: impl Fn(&mut ChaCha8Rng) -> f64) -> Result<Tensor> {
        let path = self.path(name);
        let mut store = self.store.lock().expect("param store poisoned");
        if let Some(v) = store.vars.get(&path) {
            if v.shape() != &shape {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {path} exists with shape {:?}, requested {:?}",
                    v.shape(),
                    shape
                )));
            }
            return Ok(v.as_tensor().clone());
        }
        let n = shape.elem_count();
        let values: Vec<f64> = (0..n).map(|_| fill(&mut store.rng)).collect();
        let t = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&t)?;
        let out = var.as_tensor().clone();
        store.vars.insert(path, var);
        Ok(out)
    }

    pub fn uniform(&self, name: &str, shape: impl Into<Shape>, bound: f64) -> Result<Tensor> {
        self.create(name, shape.into(), |r| r.gen_range(-bound..=bound))
    }

    pub fn normal(&self, name: &str, shape: impl Into<Shape>, std: f64) -> Result<Tensor> {
        self.create(name, shape.into(), |r| r.sample::<f64, _>(StandardNormal) * std)
    }

    pub fn constant(&self, name: &str, shape: impl Into<Shape>, value: f64) -> Result<Tensor> {
        self.create(name, shape.into(), |_| value)
    }

    /// All trainable variables under this prefix, in path order.
    pub fn vars(&self) -> Vec<Var> {
        let store = self.store.lock().expect("param store poisoned");
        store
            .vars
            .iter()
            .filter(|(k, _)| self.owns(k))
            .map(|(_, v)| v.clone())
            .collect()
    }

    pub fn named_tensors(&self) -> Vec<(String, Tensor)> {
        let store = self.store.lock().expect("param store poisoned");
        store
            .vars
            .iter()
            .filter(|(k, _)| self.owns(k))
            .map(|(k, v)| (k.clone(), v.as_tensor().clone()))
            .collect()
    }

    fn owns(&self, key: &str) -> bool {
        self.prefix.is_empty()
            || key == self.prefix
            || (key.starts_with(&self.prefix) && key.as_bytes().get(self.prefix.len()) == Some(&b'.'))
    }

    /// Overwrites every registered variable from `tensors`; all must be present.
    pub fn load(&self, tensors: &BTreeMap<String, Tensor>) -> Result<()> {
        let store = self.store.lock().expect("param store poisoned");
        for (name, var) in store.vars.iter().filter(|(k, _)| self.owns(k)) {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::ShapeMismatch(format!("missing parameter {name}")))?;
            if t.shape() != var.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "parameter {name}: stored {:?}, model {:?}",
                    t.shape(),
                    var.shape()
                )));
            }
            var.set(&t.to_dtype(self.dtype)?)?;
        }
        Ok(())
    }

    pub fn num_parameters(&self) -> usize {
        self.vars().iter().map(|v| v.elem_count()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_weights() {
        let a = Params::new(7, DType::F32);
        let b = Params::new(7, DType::F32);
        let ta = a.pp("x").uniform("w", (3, 4), 0.5).unwrap();
        let tb = b.pp("x").uniform("w", (3, 4), 0.5).unwrap();
        let va: Vec<f32> = ta.flatten_all().unwrap().to_vec1().unwrap();
        let vb: Vec<f32> = tb.flatten_all().unwrap().to_vec1().unwrap();
        assert_eq!(va, vb);
    }

    #[test]
    fn prefix_scoping() {
        let p = Params::new(0, DType::F32);
        p.pp("enc").constant("a", 2, 1.0).unwrap();
        p.pp("encoder").constant("a", 2, 1.0).unwrap();
        p.pp("dec").constant("b", 2, 1.0).unwrap();
        assert_eq!(p.pp("enc").vars().len(), 1);
        assert_eq!(p.vars().len(), 3);
    }
}
