//! Versioned binary parameter file.
//!
//! Layout, all integers little-endian `u32`:
//! magic `ECGOTMDL`, version, header length, header JSON (model config and
//! tensor count), then per tensor: name length, name, rank, dims, and the
//! values as little-endian `f32`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams, Standardizer};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"ECGOTMDL";
pub const CHECKPOINT_VERSION: u32 = 1;

const INPUT_MEAN: &str = "input.mean";
const INPUT_SCALE: &str = "input.scale";

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    n_tensors: usize,
}

fn put_u32<W: Write>(w: &mut W, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32<R: Read>(r: &mut R) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn put_tensor<W: Write>(w: &mut W, name: &str, shape: &[usize], values: &[f64]) -> Result<()> {
    put_u32(w, name.len())?;
    w.write_all(name.as_bytes())?;
    put_u32(w, shape.len())?;
    for &d in shape {
        put_u32(w, d)?;
    }
    let mut buf = Vec::with_capacity(values.len() * 4);
    for &v in values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn write_checkpoint<W: Write>(mut w: W, params: &ModelParams, standardizer: Option<&Standardizer>) -> Result<()> {
    params.audit_shapes()?;
    let tensors = params.tensors();
    let header = serde_json::to_vec(&Header {
        model: params.config.clone(),
        n_tensors: tensors.len() + if standardizer.is_some() { 2 } else { 0 },
    })?;
    w.write_all(CHECKPOINT_MAGIC)?;
    put_u32(&mut w, CHECKPOINT_VERSION as usize)?;
    put_u32(&mut w, header.len())?;
    w.write_all(&header)?;
    for (name, shape, values) in &tensors {
        put_tensor(&mut w, name, shape, values)?;
    }
    if let Some(s) = standardizer {
        put_tensor(&mut w, INPUT_MEAN, &[s.mean.len()], &s.mean)?;
        put_tensor(&mut w, INPUT_SCALE, &[s.scale.len()], &s.scale)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<(ModelParams, Option<Standardizer>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("not a model checkpoint".into()));
    }
    let version = get_u32(&mut r)?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let mut header = vec![0u8; get_u32(&mut r)?];
    r.read_exact(&mut header)?;
    let header: Header = serde_json::from_slice(&header)?;
    let mut found: BTreeMap<String, (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    for _ in 0..header.n_tensors {
        let mut name = vec![0u8; get_u32(&mut r)?];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        let rank = get_u32(&mut r)?;
        let shape = (0..rank).map(|_| get_u32(&mut r)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let mut raw = vec![0u8; count * 4];
        r.read_exact(&mut raw)?;
        let values = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        if found.insert(name.clone(), (shape, values)).is_some() {
            return Err(Error::Checkpoint(format!("duplicate tensor {name}")));
        }
    }

    let mut params = ModelParams::zeros(&header.model)?;
    let expected: Vec<(String, Vec<usize>)> =
        params.tensors().into_iter().map(|(n, s, _)| (n, s)).collect();
    for ((name, shape), dst) in expected.iter().zip(params.tensors_mut()) {
        let (got_shape, values) = found
            .remove(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing tensor {name}")))?;
        if &got_shape != shape {
            return Err(Error::Checkpoint(format!("{name}: shape {got_shape:?}, expected {shape:?}")));
        }
        dst.copy_from_slice(&values);
    }
    let standardizer = match (found.remove(INPUT_MEAN), found.remove(INPUT_SCALE)) {
        (Some((_, mean)), Some((_, scale))) if mean.len() == scale.len() => Some(Standardizer { mean, scale }),
        (None, None) => None,
        _ => return Err(Error::Checkpoint("incomplete input standardizer".into())),
    };
    if let Some(extra) = found.keys().next() {
        return Err(Error::Checkpoint(format!("unexpected tensor {extra}")));
    }
    params.audit_shapes()?;
    Ok((params, standardizer))
}

pub fn save_checkpoint(path: &Path, params: &ModelParams, standardizer: Option<&Standardizer>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_checkpoint(f, params, standardizer)
}

pub fn load_checkpoint(path: &Path) -> Result<(ModelParams, Option<Standardizer>)> {
    read_checkpoint(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig { input_len: 12, seq_len: 4, d_model: 8, n_layers: 2, n_heads: 2, d_k: 4, d_v: 4, d_ff: 16, ..Default::default() }
    }

    #[test]
    fn round_trip_to_f32_precision() {
        let p = ModelParams::init(&cfg(), 1).unwrap();
        let s = Standardizer { mean: (0..12).map(|i| i as f64 * 0.5).collect(), scale: vec![2.0; 12] };
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p, Some(&s)).unwrap();
        assert_eq!(&buf[..8], CHECKPOINT_MAGIC);
        let (q, s2) = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(q.config, p.config);
        assert_eq!(s2.unwrap(), s);
        for ((_, _, a), (_, _, b)) in p.tensors().iter().zip(q.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x as f32, *y as f32);
            }
        }
        // A second pass is exact once values are already f32.
        let mut buf2 = Vec::new();
        write_checkpoint(&mut buf2, &q, None).unwrap();
        let (r, none) = read_checkpoint(buf2.as_slice()).unwrap();
        assert_eq!(r, q);
        assert!(none.is_none());
    }

    #[test]
    fn corrupt_files_rejected() {
        let p = ModelParams::init(&cfg(), 1).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &p, None).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_checkpoint(bad.as_slice()), Err(Error::Checkpoint(_))));
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(matches!(read_checkpoint(bad.as_slice()), Err(Error::Checkpoint(_))));
        assert!(read_checkpoint(&buf[..buf.len() - 3]).is_err());
    }
}
