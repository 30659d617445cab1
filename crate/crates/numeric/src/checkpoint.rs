//! JSON parameter checkpoints. Values are written with shortest round-trip
//! formatting and parsed with exact rounding, so a save/load cycle is
//! bit-exact for every finite `f64`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::params::ParameterStore;
use crate::{NumericError, Result, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Checkpoint {
    pub params: Vec<ParamRecord>,
}

impl Checkpoint {
    pub fn from_store(store: &ParameterStore) -> Self {
        Self {
            params: store
                .iter()
                .map(|p| ParamRecord {
                    name: p.name.clone(),
                    shape: p.value.shape().to_vec(),
                    values: p.value.data().to_vec(),
                })
                .collect(),
        }
    }

    /// Overwrites matching parameters of `store`. Every parameter of the
    /// store must be present with the same shape.
    pub fn apply(&self, store: &mut ParameterStore) -> Result<()> {
        if self.params.len() != store.len() {
            return Err(NumericError::Checkpoint(format!(
                "checkpoint has {} parameters, model has {}",
                self.params.len(),
                store.len()
            )));
        }
        let values = self
            .params
            .iter()
            .map(|r| Ok((r.name.clone(), Tensor::new(r.shape.clone(), r.values.clone())?)))
            .collect::<Result<Vec<_>>>()?;
        store.load_values(&values)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| NumericError::Checkpoint(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| NumericError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| NumericError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| NumericError::Checkpoint(e.to_string()))?;
        Self::from_json(&s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(values in prop::collection::vec(
            any::<f64>().prop_filter("finite", |v| v.is_finite()), 1..64)) {
            let mut store = ParameterStore::new();
            store.add("w", Tensor::row_vector(values.clone()), true);
            let ck = Checkpoint::from_store(&store);
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(&back.params[0].values), bits(&values));
        }
    }

    #[test]
    fn apply_rejects_shape_mismatch() {
        let mut store = ParameterStore::new();
        store.add("w", Tensor::zeros(&[2, 2]), true);
        let ck = Checkpoint {
            params: vec![ParamRecord {
                name: "w".into(),
                shape: vec![4],
                values: vec![0.0; 4],
            }],
        };
        assert!(ck.apply(&mut store).is_err());
    }

    #[test]
    fn save_and_load_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = ParameterStore::new();
        store.add("w", Tensor::row_vector(vec![0.1, 1.0 / 3.0]), true);
        let path = dir.path().join("ck.json");
        Checkpoint::from_store(&store).save(&path).unwrap();
        let mut other = ParameterStore::new();
        other.add("w", Tensor::zeros(&[1, 2]), true);
        Checkpoint::load(&path).unwrap().apply(&mut other).unwrap();
        assert_eq!(other.value(crate::ParamId(0)), store.value(crate::ParamId(0)));
    }
}
