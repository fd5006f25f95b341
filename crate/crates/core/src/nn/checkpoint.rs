//! Checkpoint files: a self-describing binary container holding the
//! architecture as JSON plus every named parameter tensor in f64.
//!
//! Layout, all integers little-endian:
//!   magic "MLNETCKP" | u32 version | u64 spec-JSON length | spec JSON
//!   u64 parameter count | per parameter:
//!     u64 name length | name UTF-8 | u64 ndim | dims as u64 | data as f64

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::network::{Network, NetworkSpec};
use super::tensor::Tensor;
use super::NnError;

const MAGIC: &[u8; 8] = b"MLNETCKP";
const VERSION: u32 = 1;

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<(), NnError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let spec = serde_json::to_vec(net.spec())
        .map_err(|e| NnError::Checkpoint(format!("spec serialization failed: {e}")))?;
    w.write_all(&(spec.len() as u64).to_le_bytes())?;
    w.write_all(&spec)?;
    w.write_all(&(net.n_params() as u64).to_le_bytes())?;
    for i in 0..net.n_params() {
        let name = net.param_names()[i].as_bytes();
        let p = net.param(i);
        w.write_all(&(name.len() as u64).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.shape().len() as u64).to_le_bytes())?;
        for &d in p.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in p.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Network, NnError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint("not a network checkpoint".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let spec_len = read_u64(&mut r)? as usize;
    let mut spec_buf = vec![0u8; spec_len];
    r.read_exact(&mut spec_buf)?;
    let spec: NetworkSpec = serde_json::from_slice(&spec_buf)
        .map_err(|e| NnError::Checkpoint(format!("bad architecture block: {e}")))?;
    // reconstruct from the spec, then overwrite parameters in file order;
    // names and shapes must match the reconstruction exactly
    let mut net = Network::new(spec, 0)?;
    let n = read_u64(&mut r)? as usize;
    if n != net.n_params() {
        return Err(NnError::Checkpoint(format!(
            "file has {n} parameters, architecture needs {}",
            net.n_params()
        )));
    }
    let mut restored = Vec::with_capacity(n);
    for i in 0..n {
        let name_len = read_u64(&mut r)? as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf)?;
        let name = String::from_utf8(name_buf)
            .map_err(|_| NnError::Checkpoint("parameter name is not UTF-8".into()))?;
        if name != net.param_names()[i] {
            return Err(NnError::Checkpoint(format!(
                "parameter {i} is named {name:?}, expected {:?}",
                net.param_names()[i]
            )));
        }
        let ndim = read_u64(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u64(&mut r)? as usize);
        }
        if shape != net.param(i).shape() {
            return Err(NnError::Checkpoint(format!(
                "parameter {name} has shape {shape:?}, expected {:?}",
                net.param(i).shape()
            )));
        }
        let mut data = vec![0.0f64; shape.iter().product()];
        let mut buf = [0u8; 8];
        for v in &mut data {
            r.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
        restored.push(Tensor::from_vec(&shape, data)?);
    }
    let mut trailer = [0u8; 1];
    if r.read(&mut trailer)? != 0 {
        return Err(NnError::Checkpoint("trailing bytes after last parameter".into()));
    }
    net.restore_params(restored)?;
    Ok(net)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NnError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NnError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
