use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::configs::{config_count, ClassPartition};
use crate::error::{Error, Result};
use crate::imaging::ConfigHistogram;

/// Class-constant weights of an estimator of `V_i`; the estimate is
/// `a^i Σ_j w_j N̄_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub i: usize,
    pub d: usize,
    /// One weight per class of the orbit partition, by class id.
    pub weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct WeightFile {
    i: usize,
    d: usize,
    weights: BTreeMap<String, f64>,
}

impl WeightVector {
    pub fn zeros(i: usize, partition: &ClassPartition) -> Result<Self> {
        let d = partition.dim;
        if i > d {
            return Err(Error::invalid(format!("no intrinsic volume V_{i} in dimension {d}")));
        }
        Ok(WeightVector {
            i,
            d,
            weights: vec![0.0; partition.len()],
        })
    }

    /// Checks the length and the forced zeros: the empty class always, and
    /// the full class unless `i = d`.
    pub fn new(i: usize, partition: &ClassPartition, weights: Vec<f64>) -> Result<Self> {
        let mut w = Self::zeros(i, partition)?;
        if weights.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                expected: partition.len(),
                found: weights.len(),
            });
        }
        w.weights = weights;
        w.validate(partition)?;
        Ok(w)
    }

    pub fn validate(&self, partition: &ClassPartition) -> Result<()> {
        if partition.dim != self.d || self.weights.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                expected: partition.dim,
                found: self.d,
            });
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("weights must be finite"));
        }
        if self.weights[partition.empty_class()] != 0.0 {
            return Err(Error::invalid("the empty configuration must have weight 0"));
        }
        if self.i < self.d && self.weights[partition.full_class()] != 0.0 {
            return Err(Error::invalid("the full configuration must have weight 0 below the volume"));
        }
        Ok(())
    }

    /// Sets the weight of the class with the given label.
    pub fn with_label(mut self, partition: &ClassPartition, label: &str, w: f64) -> Result<Self> {
        let j = partition
            .class_by_label(label)
            .ok_or_else(|| Error::invalid(format!("no class labelled {label}")))?;
        self.weights[j] = w;
        Ok(self)
    }

    /// `w_j = -w_{j^c}` for every class.
    pub fn is_complement_antisymmetric(&self, partition: &ClassPartition) -> bool {
        (0..partition.len()).all(|j| {
            let c = partition.complement_class(j);
            (self.weights[j] + self.weights[c]).abs() <= 1e-15 * self.weights[j].abs().max(1.0)
        })
    }

    /// Weight of every configuration `l`.
    pub fn per_configuration(&self, partition: &ClassPartition) -> Vec<f64> {
        let mut out = vec![0.0; config_count(self.d)];
        for (j, &w) in self.weights.iter().enumerate() {
            for &l in partition.members(j) {
                out[l as usize] = w;
            }
        }
        out
    }

    /// `a^i Σ_j w_j N̄_j`.
    pub fn evaluate(&self, class_counts: &[u64], a: f64) -> Result<f64> {
        if class_counts.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: class_counts.len(),
            });
        }
        if !(a > 0.0) {
            return Err(Error::invalid("spacing must be positive"));
        }
        let s: f64 = self.weights.iter().zip(class_counts).map(|(w, &n)| w * n as f64).sum();
        Ok(a.powi(self.i as i32) * s)
    }

    /// Estimate straight from a configuration histogram.
    pub fn evaluate_histogram(&self, hist: &ConfigHistogram, partition: &ClassPartition, a: f64) -> Result<f64> {
        let counts = crate::imaging::count_classes(hist, partition)?;
        self.evaluate(&counts, a)
    }

    pub fn to_json(&self) -> String {
        let file = WeightFile {
            i: self.i,
            d: self.d,
            weights: self
                .weights
                .iter()
                .enumerate()
                .filter(|(_, &w)| w != 0.0)
                .map(|(j, &w)| (j.to_string(), w))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("weights serialize")
    }

    /// Reads `{i, d, weights: {class_id: value}}`; absent classes weigh 0.
    pub fn from_json(text: &str, partition: &ClassPartition) -> Result<Self> {
        let file: WeightFile = serde_json::from_str(text)?;
        if file.d != partition.dim {
            return Err(Error::DimensionMismatch {
                expected: partition.dim,
                found: file.d,
            });
        }
        let mut w = Self::zeros(file.i, partition)?;
        for (key, value) in file.weights {
            let j: usize = key
                .parse()
                .map_err(|_| Error::Format(format!("class id `{key}` is not an integer")))?;
            *w.weights
                .get_mut(j)
                .ok_or_else(|| Error::Format(format!("no class {j} in dimension {}", file.d)))? = value;
        }
        w.validate(partition)?;
        Ok(w)
    }
}
