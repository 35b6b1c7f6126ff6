//! Binary model file.
//!
//! All integers and floats little-endian:
//!
//! | field | type |
//! |-------|------|
//! | magic `CHFNNMDL` | 8 bytes |
//! | format version | u32 |
//! | layer count `k` | u32 |
//! | layer sizes | `k` x u32 |
//! | seed | u64 |
//! | input mean, input scale | 2 x `sizes[0]` x f64 |
//! | output mean, output scale | 2 x f64 |
//! | parameter count | u64 |
//! | per layer: weights (row-major, one row per output unit), biases | f64 |
//!
//! Nothing may follow the last bias.

use std::path::Path;

use super::{parameter_count, NnError, NnModel, Normalization};

pub const MAGIC: &[u8; 8] = b"CHFNNMDL";
pub const VERSION: u32 = 1;

pub fn write_model(model: &NnModel) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + 8 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let sizes = model.layer_sizes();
    out.extend_from_slice(&(sizes.len() as u32).to_le_bytes());
    for &s in sizes {
        out.extend_from_slice(&(s as u32).to_le_bytes());
    }
    out.extend_from_slice(&model.seed.to_le_bytes());
    for v in model.input_norm.mean.iter().chain(&model.input_norm.scale) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&model.output_norm.0.to_le_bytes());
    out.extend_from_slice(&model.output_norm.1.to_le_bytes());
    out.extend_from_slice(&(model.parameter_count() as u64).to_le_bytes());
    for v in model.params() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8], NnError> {
        if self.buf.len() - self.pos < n {
            return Err(NnError::Format(format!("file truncated while reading {what}")));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64, NnError> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn read_model(bytes: &[u8]) -> Result<NnModel, NnError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8, "magic")? != MAGIC {
        return Err(NnError::Format("not a model file (bad magic)".into()));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(NnError::Version { found: version, expected: VERSION });
    }
    let k = r.u32("layer count")? as usize;
    if !(2..=64).contains(&k) {
        return Err(NnError::Format(format!("implausible layer count {k}")));
    }
    let sizes = (0..k).map(|_| r.u32("layer sizes").map(|v| v as usize)).collect::<Result<Vec<_>, _>>()?;
    if sizes.contains(&0) || sizes[k - 1] != 1 {
        return Err(NnError::Format(format!("invalid layer sizes {sizes:?}")));
    }
    let seed = r.u64("seed")?;
    let width = sizes[0];
    let mean = (0..width).map(|_| r.f64("input mean")).collect::<Result<Vec<_>, _>>()?;
    let scale = (0..width).map(|_| r.f64("input scale")).collect::<Result<Vec<_>, _>>()?;
    let out_mean = r.f64("output mean")?;
    let out_scale = r.f64("output scale")?;
    if scale.iter().chain(std::iter::once(&out_scale)).any(|s| !(*s > 0.0 && s.is_finite())) {
        return Err(NnError::Format("normalization scales must be positive".into()));
    }
    let declared = r.u64("parameter count")? as usize;
    let expected = parameter_count(&sizes);
    if declared != expected {
        return Err(NnError::Format(format!("layer sizes imply {expected} parameters, header declares {declared}")));
    }
    let remaining = bytes.len() - r.pos;
    if remaining != 8 * expected {
        return Err(NnError::Format(format!(
            "payload holds {remaining} bytes, layer sizes require {}",
            8 * expected
        )));
    }
    let params = (0..expected).map(|_| r.f64("parameters")).collect::<Result<Vec<_>, _>>()?;
    Ok(NnModel::from_parts(sizes, params, Normalization { mean, scale }, (out_mean, out_scale), seed))
}

pub fn save_model(model: &NnModel, path: impl AsRef<Path>) -> Result<(), NnError> {
    std::fs::write(path, write_model(model)).map_err(|e| NnError::Io(e.to_string()))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<NnModel, NnError> {
    let bytes = std::fs::read(path).map_err(|e| NnError::Io(e.to_string()))?;
    read_model(&bytes)
}
