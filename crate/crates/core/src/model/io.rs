//! JSON instance files.
//!
//! ```json
//! {"n": 3, "d": 2, "x": [[..], [..], [..]], "y": [..],
//!  "anchor": {"x0": [..], "y0": 0.5},
//!  "truth": {"w_bar": [..], "pi_bar": [..], "sigma": 0.0, "snr": null},
//!  "quantization": {"p": 16}}
//! ```
//!
//! `anchor`, `truth` and `quantization` are optional. When an anchor is
//! present, `pi_bar` acts on `{0..n}` with 0 the anchor slot. An infinite SNR
//! is written as `null`. Doubles are written in shortest round-trip form.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{AnchoredInstance, GroundTruth, Instance, ModelError, Permutation, QuantizationConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub d: usize,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<TruthBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantization: Option<QuantBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchorBlock {
    pub x0: Vec<f64>,
    pub y0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthBlock {
    pub w_bar: Vec<f64>,
    pub pi_bar: Vec<usize>,
    pub sigma: f64,
    pub snr: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantBlock {
    pub p: u32,
}

/// A validated instance file.
#[derive(Clone, Debug, PartialEq)]
pub enum Document {
    Plain {
        instance: Instance<f64>,
        truth: Option<GroundTruth<f64>>,
    },
    Anchored {
        instance: AnchoredInstance<f64>,
        truth: Option<GroundTruth<f64>>,
        quantization: Option<QuantizationConfig>,
    },
}

impl Document {
    /// The measurements as a plain instance (anchor row first, if any).
    pub fn instance(&self) -> Instance<f64> {
        match self {
            Self::Plain { instance, .. } => instance.clone(),
            Self::Anchored { instance, .. } => instance.to_instance(),
        }
    }

    pub fn truth(&self) -> Option<&GroundTruth<f64>> {
        match self {
            Self::Plain { truth, .. } | Self::Anchored { truth, .. } => truth.as_ref(),
        }
    }

    pub fn to_file(&self) -> InstanceFile {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
        };
        let truth_block = |t: &GroundTruth<f64>| TruthBlock {
            w_bar: t.w_bar.iter().copied().collect(),
            pi_bar: t.pi_bar.as_slice().to_vec(),
            sigma: t.sigma,
            snr: t.snr.is_finite().then_some(t.snr),
        };
        match self {
            Self::Plain { instance, truth } => InstanceFile {
                n: instance.n(),
                d: instance.d(),
                x: rows(instance.x()),
                y: instance.y().iter().copied().collect(),
                anchor: None,
                truth: truth.as_ref().map(truth_block),
                quantization: None,
            },
            Self::Anchored {
                instance,
                truth,
                quantization,
            } => InstanceFile {
                n: instance.n(),
                d: instance.d(),
                x: rows(instance.x()),
                y: instance.y().iter().copied().collect(),
                anchor: Some(AnchorBlock {
                    x0: instance.x0().iter().copied().collect(),
                    y0: instance.y0(),
                }),
                truth: truth.as_ref().map(truth_block),
                quantization: quantization.map(|q| QuantBlock { p: q.p() }),
            },
        }
    }

    pub fn from_file(f: InstanceFile) -> Result<Self, ModelError> {
        let schema = |msg: String| ModelError::Schema(msg);
        if f.x.len() != f.n {
            return Err(schema(format!("field x has {} rows, expected n={}", f.x.len(), f.n)));
        }
        if let Some(i) = f.x.iter().position(|r| r.len() != f.d) {
            return Err(schema(format!(
                "field x row {i} has {} entries, expected d={}",
                f.x[i].len(),
                f.d
            )));
        }
        if f.y.len() != f.n {
            return Err(schema(format!("field y has length {}, expected n={}", f.y.len(), f.n)));
        }
        let x = DMatrix::from_fn(f.n, f.d, |i, j| f.x[i][j]);
        let y = DVector::from_vec(f.y);
        let m = f.n + usize::from(f.anchor.is_some());
        let truth = match f.truth {
            None => None,
            Some(t) => {
                if t.w_bar.len() != f.d {
                    return Err(schema(format!(
                        "field truth.w_bar has length {}, expected d={}",
                        t.w_bar.len(),
                        f.d
                    )));
                }
                if t.pi_bar.len() != m {
                    return Err(schema(format!(
                        "field truth.pi_bar has length {}, expected {m}",
                        t.pi_bar.len()
                    )));
                }
                let pi = Permutation::new(t.pi_bar)
                    .map_err(|e| schema(format!("field truth.pi_bar: {e}")))?;
                Some(GroundTruth::new(DVector::from_vec(t.w_bar), pi, t.sigma))
            }
        };
        match f.anchor {
            None => {
                if f.quantization.is_some() {
                    return Err(schema("field quantization requires an anchor block".into()));
                }
                Ok(Self::Plain {
                    instance: Instance::new(x, y)?,
                    truth,
                })
            }
            Some(a) => {
                if a.x0.len() != f.d {
                    return Err(schema(format!(
                        "field anchor.x0 has length {}, expected d={}",
                        a.x0.len(),
                        f.d
                    )));
                }
                let quantization = f
                    .quantization
                    .map(|q| QuantizationConfig::new(q.p))
                    .transpose()?;
                Ok(Self::Anchored {
                    instance: AnchoredInstance::new(DVector::from_vec(a.x0), x, a.y0, y)?,
                    truth,
                    quantization,
                })
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("instance files serialize")
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self, ModelError> {
        let file: InstanceFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }
}

pub fn read_document(path: impl AsRef<Path>) -> Result<Document, ModelError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Document::from_json(&text, &path.display().to_string())
}

pub fn write_document(path: impl AsRef<Path>, doc: &Document) -> Result<(), ModelError> {
    let path = path.as_ref();
    let mut text = doc.to_json();
    text.push('\n');
    std::fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Reads the measurements of any instance file as a plain instance.
pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance<f64>, ModelError> {
    read_document(path).map(|d| d.instance())
}

pub fn write_instance(path: impl AsRef<Path>, inst: &Instance<f64>) -> Result<(), ModelError> {
    write_document(
        path,
        &Document::Plain {
            instance: inst.clone(),
            truth: None,
        },
    )
}
