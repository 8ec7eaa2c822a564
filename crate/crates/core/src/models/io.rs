//! Binary model files.
//!
//! ```text
//! magic        8 bytes   "ABSDMODL"
//! version      u32 LE    FORMAT_VERSION
//! kind         u8        1 = LR, 2 = MNB, 3 = SVM, 4 = LSTM
//! header_len   u32 LE
//! header       header_len bytes of UTF-8 JSON (hyperparameters, shapes, training metadata)
//! n_arrays     u32 LE
//! per array:   u64 LE element count, then that many f64 LE
//! checksum     8 bytes   first 8 bytes of SHA-256 over everything above
//! ```
//!
//! Parameter arrays per kind: LR and SVM `[weights, [bias]]`; MNB
//! `[log_priors, log_likelihoods(human), log_likelihoods(ai)]`; LSTM
//! `[params]` in the layout documented on [`LstmModel`](super::LstmModel).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LogRegModel, LstmModel, LstmTrainingMeta, MnbModel, ModelKind, SvmModel, TrainedModel, TrainingMeta};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"ABSDMODL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Header {
    LogReg { l2: f64, meta: TrainingMeta },
    Mnb { alpha: f64 },
    Svm { lambda: f64, meta: TrainingMeta },
    Lstm {
        input_dim: usize,
        hidden_dim: usize,
        dropout_rate: f64,
        meta: Option<LstmTrainingMeta>,
    },
}

fn parts(model: &TrainedModel) -> (Header, Vec<&[f64]>) {
    match model {
        TrainedModel::LogReg(m) => (
            Header::LogReg {
                l2: m.l2,
                meta: m.meta.clone(),
            },
            vec![&m.weights, std::slice::from_ref(&m.bias)],
        ),
        TrainedModel::Mnb(m) => (
            Header::Mnb { alpha: m.alpha },
            vec![&m.log_priors[..], &m.log_likelihoods[0], &m.log_likelihoods[1]],
        ),
        TrainedModel::Svm(m) => (
            Header::Svm {
                lambda: m.lambda,
                meta: m.meta.clone(),
            },
            vec![&m.weights, std::slice::from_ref(&m.bias)],
        ),
        TrainedModel::Lstm(m) => (
            Header::Lstm {
                input_dim: m.input_dim(),
                hidden_dim: m.hidden_dim(),
                dropout_rate: m.dropout_rate(),
                meta: m.meta.clone(),
            },
            vec![m.params()],
        ),
    }
}

pub fn write_model(model: &TrainedModel) -> Vec<u8> {
    let (header, arrays) = parts(model);
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(model.kind().tag());
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&(arrays.len() as u32).to_le_bytes());
    for a in arrays {
        out.extend_from_slice(&(a.len() as u64).to_le_bytes());
        for v in a {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest[..8]);
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::ModelFormat("truncated file".into())),
        }
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<TrainedModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::ModelFormat("not a model file (bad magic)".into()));
    }
    if bytes.len() < MAGIC.len() + 8 {
        return Err(Error::ModelFormat("truncated file".into()));
    }
    let (body, checksum) = bytes.split_at(bytes.len() - 8);
    let mut cur = Cursor { bytes: body, pos: MAGIC.len() };
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let tag = cur.take(1)?[0];
    let kind = ModelKind::from_tag(tag).ok_or_else(|| Error::ModelFormat(format!("unknown model kind tag {tag}")))?;
    if Sha256::digest(body)[..8] != *checksum {
        return Err(Error::ModelFormat("checksum mismatch (corrupted or truncated file)".into()));
    }
    let header_len = cur.u32()? as usize;
    let header: Header = serde_json::from_slice(cur.take(header_len)?)
        .map_err(|e| Error::ModelFormat(format!("bad header: {e}")))?;
    let n_arrays = cur.u32()? as usize;
    if n_arrays > 16 {
        return Err(Error::ModelFormat(format!("implausible array count {n_arrays}")));
    }
    let mut arrays = Vec::with_capacity(n_arrays);
    for _ in 0..n_arrays {
        let len = cur.u64()? as usize;
        let raw = cur.take(len.checked_mul(8).ok_or_else(|| Error::ModelFormat("array too large".into()))?)?;
        arrays.push(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect::<Vec<f64>>(),
        );
    }
    if cur.pos != body.len() {
        return Err(Error::ModelFormat("trailing bytes before checksum".into()));
    }

    let wrong_shape = || Error::ModelFormat(format!("unexpected parameter arrays for {kind:?}"));
    let model = match (kind, header) {
        (ModelKind::LogReg, Header::LogReg { l2, meta }) => {
            let [weights, bias]: [Vec<f64>; 2] = arrays.try_into().map_err(|_| wrong_shape())?;
            let bias = *bias.first().filter(|_| bias.len() == 1).ok_or_else(wrong_shape)?;
            TrainedModel::LogReg(LogRegModel { weights, bias, l2, meta })
        }
        (ModelKind::Svm, Header::Svm { lambda, meta }) => {
            let [weights, bias]: [Vec<f64>; 2] = arrays.try_into().map_err(|_| wrong_shape())?;
            let bias = *bias.first().filter(|_| bias.len() == 1).ok_or_else(wrong_shape)?;
            TrainedModel::Svm(SvmModel {
                weights,
                bias,
                lambda,
                meta,
            })
        }
        (ModelKind::Mnb, Header::Mnb { alpha }) => {
            let [priors, human, ai]: [Vec<f64>; 3] = arrays.try_into().map_err(|_| wrong_shape())?;
            if priors.len() != 2 || human.len() != ai.len() {
                return Err(wrong_shape());
            }
            TrainedModel::Mnb(MnbModel {
                log_priors: [priors[0], priors[1]],
                log_likelihoods: [human, ai],
                alpha,
            })
        }
        (
            ModelKind::Lstm,
            Header::Lstm {
                input_dim,
                hidden_dim,
                dropout_rate,
                meta,
            },
        ) => {
            let [params]: [Vec<f64>; 1] = arrays.try_into().map_err(|_| wrong_shape())?;
            let mut m = LstmModel::from_parts(input_dim, hidden_dim, dropout_rate, params)
                .map_err(|e| Error::ModelFormat(e.to_string()))?;
            m.meta = meta;
            TrainedModel::Lstm(m)
        }
        _ => return Err(Error::ModelFormat("header does not match kind tag".into())),
    };
    Ok(model)
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::features::DenseVector;
    use crate::models::{DenseSequence, LogRegHyper, LstmHyper, SvmHyper};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn data(seed: u64) -> (Vec<DenseVector>, Vec<Label>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<DenseVector> = (0..30).map(|_| DenseVector((0..4).map(|_| rng.random_range(0.0..1.0)).collect())).collect();
        let y = x.iter().map(|r| if r.0[0] > r.0[1] { Label::Ai } else { Label::Human }).collect();
        (x, y)
    }

    fn models() -> Vec<TrainedModel> {
        let (x, y) = data(1);
        let seqs: Vec<DenseSequence> = x.iter().map(|r| DenseSequence { data: r.0.clone(), dim: 2 }).collect();
        let hyper = LstmHyper {
            hidden_dim: 3,
            max_epochs: 2,
            ..Default::default()
        };
        vec![
            TrainedModel::LogReg(LogRegModel::train(&x, &y, &LogRegHyper::default()).unwrap()),
            TrainedModel::Mnb(MnbModel::train(&x, &y, 1.0).unwrap()),
            TrainedModel::Svm(SvmModel::train(&x, &y, &SvmHyper::default()).unwrap()),
            TrainedModel::Lstm(LstmModel::train(&seqs, &y, &seqs[..5], &y[..5], &hyper).unwrap()),
        ]
    }

    fn predictions(m: &TrainedModel, inputs: &[DenseVector]) -> Vec<u64> {
        inputs
            .iter()
            .map(|x| match m {
                TrainedModel::Lstm(l) => l
                    .predict_proba(&DenseSequence { data: x.0.clone(), dim: 2 })
                    .unwrap()
                    .to_bits(),
                other => other.score_vector(x).unwrap().0.to_bits(),
            })
            .collect()
    }

    #[test]
    fn round_trip_bit_identical_predictions() {
        let (probe, _) = data(99);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut inputs = probe;
        inputs.extend((0..70).map(|_| DenseVector((0..4).map(|_| rng.random_range(0.0..3.0)).collect())));
        for m in models() {
            let bytes = write_model(&m);
            let back = read_model(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(predictions(&m, &inputs), predictions(&back, &inputs));
        }
    }

    #[test]
    fn corruption_detected() {
        let m = &models()[0];
        let bytes = write_model(m);
        assert!(matches!(read_model(&bytes[..bytes.len() - 3]), Err(Error::ModelFormat(_))));
        assert!(matches!(read_model(&bytes[..20]), Err(Error::ModelFormat(_))));

        let mut flipped = bytes.clone();
        let mid = flipped.len() - 20;
        flipped[mid] ^= 0x40;
        assert!(read_model(&flipped).unwrap_err().to_string().contains("checksum"));

        let mut versioned = bytes.clone();
        versioned[8..12].copy_from_slice(&7u32.to_le_bytes());
        assert!(read_model(&versioned).unwrap_err().to_string().contains("version 7"));

        let mut kind = bytes;
        kind[12] = 9;
        assert!(read_model(&kind).unwrap_err().to_string().contains("kind tag"));

        assert!(read_model(b"hello world").is_err());
    }
}
