//! Single-file model archives: parameter tensors plus JSON metadata records
//! (config echo, speaker and language tables, inventory hashes) stored in the
//! safetensors header.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use candle_core::{DType, Device, Tensor};
use safetensors::tensor::{Dtype, SafeTensors, TensorView};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::nn::Params;

const KIND_KEY: &str = "kind";
const CONFIG_KEY: &str = "config";

#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub kind: String,
    pub tensors: BTreeMap<String, Tensor>,
    metadata: BTreeMap<String, String>,
}

impl Checkpoint {
    /// Snapshot of every parameter in `params` with `config` echoed.
    pub fn new(kind: &str, config: &impl Serialize, params: &Params) -> Result<Self> {
        let mut metadata = BTreeMap::new();
        metadata.insert(CONFIG_KEY.to_string(), serde_json::to_string(config)?);
        Ok(Checkpoint {
            kind: kind.to_string(),
            tensors: params.named_tensors().into_iter().collect(),
            metadata,
        })
    }

    pub fn with_record(mut self, key: &str, value: &impl Serialize) -> Result<Self> {
        self.metadata.insert(key.to_string(), serde_json::to_string(value)?);
        Ok(self)
    }

    pub fn record<T: DeserializeOwned>(&self, key: &str) -> Result<T> {
        let raw = self
            .metadata
            .get(key)
            .ok_or_else(|| Error::Checkpoint { path: "<memory>".into(), reason: format!("missing record {key:?}") })?;
        Ok(serde_json::from_str(raw)?)
    }

    pub fn config<T: DeserializeOwned>(&self) -> Result<T> {
        self.record(CONFIG_KEY)
    }

    pub fn expect_kind(&self, kind: &str, path: &Path) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Checkpoint {
                path: path.to_path_buf(),
                reason: format!("holds a {:?} model, expected {kind:?}", self.kind),
            });
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buffers = Vec::with_capacity(self.tensors.len());
        for (name, t) in &self.tensors {
            let values = t.to_dtype(DType::F32)?.flatten_all()?.to_vec1::<f32>()?;
            let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
            buffers.push((name.clone(), t.dims().to_vec(), bytes));
        }
        let views = buffers
            .iter()
            .map(|(n, shape, bytes)| {
                TensorView::new(Dtype::F32, shape.clone(), bytes)
                    .map(|v| (n.clone(), v))
                    .map_err(|e| Error::Checkpoint { path: path.to_path_buf(), reason: e.to_string() })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut meta: HashMap<String, String> = self.metadata.clone().into_iter().collect();
        meta.insert(KIND_KEY.to_string(), self.kind.clone());
        let bytes = safetensors::serialize(views, &Some(meta))
            .map_err(|e| Error::Checkpoint { path: path.to_path_buf(), reason: e.to_string() })?;
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bad = |reason: String| Error::Checkpoint { path: path.to_path_buf(), reason };
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let (_, header) = SafeTensors::read_metadata(&bytes).map_err(|e| bad(e.to_string()))?;
        let mut metadata: BTreeMap<String, String> =
            header.metadata().clone().unwrap_or_default().into_iter().collect();
        let kind = metadata.remove(KIND_KEY).ok_or_else(|| bad("no model kind recorded".into()))?;
        let st = SafeTensors::deserialize(&bytes).map_err(|e| bad(e.to_string()))?;
        let mut tensors = BTreeMap::new();
        for (name, view) in st.tensors() {
            if view.dtype() != Dtype::F32 {
                return Err(bad(format!("tensor {name} is {:?}, expected F32", view.dtype())));
            }
            let values: Vec<f32> = view
                .data()
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            tensors.insert(name, Tensor::from_vec(values, view.shape(), &Device::Cpu)?);
        }
        Ok(Checkpoint { kind, tensors, metadata })
    }

    /// Copies the stored tensors into `params`.
    pub fn restore(&self, params: &Params) -> Result<()> {
        params.load(&self.tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_tensors_and_records() {
        let p = Params::new(3, DType::F32);
        p.pp("a").normal("w", (2, 3), 1.0).unwrap();
        p.pp("b").uniform("bias", 4, 0.5).unwrap();
        let ck = Checkpoint::new("test", &serde_json::json!({"width": 3}), &p)
            .unwrap()
            .with_record("speakers", &vec!["ko0", "en0"])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.safetensors");
        ck.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!(back.kind, "test");
        assert_eq!(back.record::<Vec<String>>("speakers").unwrap(), ["ko0", "en0"]);
        assert_eq!(back.config::<serde_json::Value>().unwrap()["width"], 3);
        let q = Params::new(99, DType::F32);
        q.pp("a").normal("w", (2, 3), 1.0).unwrap();
        q.pp("b").uniform("bias", 4, 0.5).unwrap();
        back.restore(&q).unwrap();
        for ((n1, t1), (n2, t2)) in p.named_tensors().iter().zip(q.named_tensors()) {
            assert_eq!(n1, &n2);
            assert_eq!(t1.to_vec2::<f32>().ok(), t2.to_vec2::<f32>().ok());
            assert_eq!(t1.flatten_all().unwrap().to_vec1::<f32>().unwrap(), t2.flatten_all().unwrap().to_vec1::<f32>().unwrap());
        }
        assert!(back.expect_kind("tts", &path).is_err());
    }
}
