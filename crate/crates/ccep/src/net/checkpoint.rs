//! Versioned binary checkpoint format.
//!
//! Layout: 8-byte magic `CCEPNET\0`, u32 LE version, u64 LE length of a
//! JSON-encoded architecture spec followed by that many bytes, then for
//! each parametric layer the weight and bias arrays, each as a u64 LE
//! element count followed by little-endian 32-bit floats.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{ArchitectureSpec, LayerWeights, NetError, NetworkModel};

const MAGIC: &[u8; 8] = b"CCEPNET\0";
const VERSION: u32 = 1;

pub fn save(net: &NetworkModel, path: &Path) -> Result<(), NetError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let spec_json = serde_json::to_vec(net.spec())
        .map_err(|e| NetError::Checkpoint(format!("spec encode: {e}")))?;
    w.write_u64::<LittleEndian>(spec_json.len() as u64)?;
    w.write_all(&spec_json)?;
    for lw in net.weights() {
        let (LayerWeights::Dense { w: wt, b } | LayerWeights::Conv { w: wt, b }) = lw else {
            continue;
        };
        write_array(&mut w, wt)?;
        write_array(&mut w, b)?;
    }
    w.flush()?;
    Ok(())
}

fn write_array(w: &mut impl Write, data: &[f64]) -> Result<(), NetError> {
    w.write_u64::<LittleEndian>(data.len() as u64)?;
    for &v in data {
        w.write_f32::<LittleEndian>(v as f32)?;
    }
    Ok(())
}

fn read_array(r: &mut impl Read, expected: usize) -> Result<Vec<f64>, NetError> {
    let n = r.read_u64::<LittleEndian>()? as usize;
    if n != expected {
        return Err(NetError::Checkpoint(format!(
            "array holds {n} values, spec requires {expected}"
        )));
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(f64::from(r.read_f32::<LittleEndian>()?));
    }
    Ok(out)
}

pub fn load(path: &Path) -> Result<NetworkModel, NetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NetError::Checkpoint("bad magic bytes".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(NetError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let spec_len = r.read_u64::<LittleEndian>()? as usize;
    let mut spec_json = vec![0u8; spec_len];
    r.read_exact(&mut spec_json)?;
    let spec: ArchitectureSpec = serde_json::from_slice(&spec_json)
        .map_err(|e| NetError::Checkpoint(format!("spec decode: {e}")))?;
    spec.shapes()?;

    let weights = spec
        .layers
        .iter()
        .map(|layer| match *layer {
            super::LayerSpec::Dense {
                in_units,
                out_units,
            } => Ok(LayerWeights::Dense {
                w: read_array(&mut r, in_units * out_units)?,
                b: read_array(&mut r, out_units)?,
            }),
            super::LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_size,
                ..
            } => Ok(LayerWeights::Conv {
                w: read_array(&mut r, out_channels * in_channels * kernel_size * kernel_size)?,
                b: read_array(&mut r, out_channels)?,
            }),
            super::LayerSpec::GlobalAvgPool | super::LayerSpec::Relu => Ok(LayerWeights::None),
        })
        .collect::<Result<Vec<_>, NetError>>()?;
    NetworkModel::new(spec, weights)
}
