//! JSON file formats. Every top-level artifact carries `format_version`.
//! Fourier coefficients are stored with `k` ascending from `-f_c`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LowPassData, MultiLowPassData, MultiSpikeTrain, ProblemConfig, SpikeTrain, C64};

pub const FORMAT_VERSION: u32 = 1;

/// Serde adapter storing a complex matrix as row-major real and imaginary parts.
pub mod cmatrix {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Repr {
        rows: usize,
        cols: usize,
        re: Vec<f64>,
        im: Vec<f64>,
    }

    pub fn serialize<S: Serializer>(m: &DMatrix<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        let (rows, cols) = m.shape();
        let mut re = Vec::with_capacity(rows * cols);
        let mut im = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                re.push(m[(i, j)].re);
                im.push(m[(i, j)].im);
            }
        }
        Repr { rows, cols, re, im }.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<DMatrix<C64>, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.re.len() != r.rows * r.cols || r.im.len() != r.re.len() {
            return Err(serde::de::Error::custom("matrix entry count does not match its shape"));
        }
        Ok(DMatrix::from_fn(r.rows, r.cols, |i, j| {
            C64::new(r.re[i * r.cols + j], r.im[i * r.cols + j])
        }))
    }
}

fn split(v: &[C64]) -> (Vec<f64>, Vec<f64>) {
    (v.iter().map(|c| c.re).collect(), v.iter().map(|c| c.im).collect())
}

fn join(re: &[f64], im: &[f64]) -> Result<Vec<C64>> {
    if re.len() != im.len() {
        return Err(Error::LengthMismatch {
            expected: re.len(),
            got: im.len(),
        });
    }
    Ok(re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpikeTrainFile {
    pub support: Vec<f64>,
    pub amp_re: Vec<f64>,
    pub amp_im: Vec<f64>,
}

impl From<&SpikeTrain> for SpikeTrainFile {
    fn from(x: &SpikeTrain) -> Self {
        let (amp_re, amp_im) = split(x.amplitudes());
        Self {
            support: x.support().to_vec(),
            amp_re,
            amp_im,
        }
    }
}

impl From<SpikeTrain> for SpikeTrainFile {
    fn from(x: SpikeTrain) -> Self {
        Self::from(&x)
    }
}

impl TryFrom<SpikeTrainFile> for SpikeTrain {
    type Error = Error;
    fn try_from(f: SpikeTrainFile) -> Result<Self> {
        SpikeTrain::new(f.support, join(&f.amp_re, &f.amp_im)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LowPassFile {
    pub f_cut: usize,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl From<&LowPassData> for LowPassFile {
    fn from(y: &LowPassData) -> Self {
        let (re, im) = split(y.coeffs());
        Self {
            f_cut: y.config().f_cut(),
            re,
            im,
        }
    }
}

impl TryFrom<LowPassFile> for LowPassData {
    type Error = Error;
    fn try_from(f: LowPassFile) -> Result<Self> {
        LowPassData::new(ProblemConfig::new(f.f_cut)?, join(&f.re, &f.im)?)
    }
}

/// Multi-signal data: one column of coefficients per signal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiLowPassFile {
    pub f_cut: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl From<&MultiLowPassData> for MultiLowPassFile {
    fn from(y: &MultiLowPassData) -> Self {
        let cols: Vec<(Vec<f64>, Vec<f64>)> = (0..y.signals()).map(|k| split(y.column(k).coeffs())).collect();
        Self {
            f_cut: y.config().f_cut(),
            re: cols.iter().map(|c| c.0.clone()).collect(),
            im: cols.iter().map(|c| c.1.clone()).collect(),
        }
    }
}

impl TryFrom<MultiLowPassFile> for MultiLowPassData {
    type Error = Error;
    fn try_from(f: MultiLowPassFile) -> Result<Self> {
        let cfg = ProblemConfig::new(f.f_cut)?;
        if f.re.len() != f.im.len() {
            return Err(Error::LengthMismatch {
                expected: f.re.len(),
                got: f.im.len(),
            });
        }
        let cols: Vec<Vec<C64>> = f.re.iter().zip(&f.im).map(|(r, i)| join(r, i)).collect::<Result<_>>()?;
        if let Some(bad) = cols.iter().find(|c| c.len() != cfg.n()) {
            return Err(Error::LengthMismatch {
                expected: cfg.n(),
                got: bad.len(),
            });
        }
        MultiLowPassData::new(cfg, DMatrix::from_fn(cfg.n(), cols.len(), |i, k| cols[k][i]))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiSpikeTrainFile {
    pub support: Vec<f64>,
    #[serde(with = "cmatrix")]
    pub amplitudes: DMatrix<C64>,
}

impl From<&MultiSpikeTrain> for MultiSpikeTrainFile {
    fn from(x: &MultiSpikeTrain) -> Self {
        Self {
            support: x.support().to_vec(),
            amplitudes: x.amplitudes().clone(),
        }
    }
}

impl From<MultiSpikeTrain> for MultiSpikeTrainFile {
    fn from(x: MultiSpikeTrain) -> Self {
        Self::from(&x)
    }
}

impl TryFrom<MultiSpikeTrainFile> for MultiSpikeTrain {
    type Error = Error;
    fn try_from(f: MultiSpikeTrainFile) -> Result<Self> {
        MultiSpikeTrain::new(f.support, f.amplitudes)
    }
}

/// Versioned envelope around any payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub format_version: u32,
    #[serde(flatten)]
    pub payload: T,
}

impl<T> Versioned<T> {
    pub fn new(payload: T) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            payload,
        }
    }
}

/// Parse a versioned JSON document, rejecting unknown versions.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let v: Versioned<T> = serde_json::from_str(text)?;
    if v.format_version != FORMAT_VERSION {
        return Err(Error::Config(format!(
            "unsupported format_version {} (expected {FORMAT_VERSION})",
            v.format_version
        )));
    }
    Ok(v.payload)
}

/// Pretty JSON with a `format_version` field. serde_json prints the shortest
/// representation that round-trips, which never needs more than 17
/// significant digits.
pub fn to_json<T: Serialize>(payload: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Versioned::new(payload))?)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json(&std::fs::read_to_string(path)?)
}

/// Format a float with 17 significant digits for tabular output.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
