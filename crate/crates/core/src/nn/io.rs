//! Flat named-tensor file format, little-endian throughout:
//!
//! ```text
//! magic   b"WCNT"
//! version u32
//! count   u32
//! count × { name_len u32, name utf-8, ndim u32, dims u64 × ndim, values f64 × prod(dims) }
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::Param;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"WCNT";

pub fn write_tensors<T: Scalar, W: Write>(mut w: W, tensors: &[(&str, &Tensor<T>)]) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for (name, t) in tensors {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.shape().len() as u32).to_le_bytes())?;
        for &d in t.shape() {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for &v in t.data() {
            w.write_all(&v.to_f64_lossy().to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::ModelFile(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

pub fn read_tensors<T: Scalar, R: Read>(mut r: R) -> Result<Vec<(String, Tensor<T>)>> {
    let magic: [u8; 4] = read_array(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::ModelFile("not a parameter file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported format version {version} (expected {FORMAT_VERSION})"
        )));
    }
    let count = read_u32(&mut r)? as usize;
    let mut out = Vec::with_capacity(count.min(4096));
    for _ in 0..count {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)
            .map_err(|e| Error::ModelFile(format!("truncated file: {e}")))?;
        let name = String::from_utf8(name).map_err(|_| Error::ModelFile("tensor name is not UTF-8".into()))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim.min(8));
        for _ in 0..ndim {
            shape.push(u64::from_le_bytes(read_array(&mut r)?) as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len.min(1 << 24));
        for _ in 0..len {
            let v = f64::from_le_bytes(read_array(&mut r)?);
            data.push(T::from_f64(v).ok_or_else(|| Error::ModelFile(format!("{name}: unrepresentable value")))?);
        }
        out.push((name, Tensor::from_vec(&shape, data)?));
    }
    Ok(out)
}

pub fn save_params<T: Scalar>(path: impl AsRef<Path>, params: &[&Param<T>]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let named: Vec<(&str, &Tensor<T>)> = params.iter().map(|p| (p.name.as_str(), &p.value)).collect();
    write_tensors(std::io::BufWriter::new(file), &named).map_err(|e| Error::io(path, e))
}

/// Fills `params` by name. Every parameter must be present with a matching
/// shape; extra tensors in the file are an error too.
pub fn load_params<T: Scalar>(path: impl AsRef<Path>, params: &mut [&mut Param<T>]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let tensors = read_tensors::<T, _>(std::io::BufReader::new(file))?;
    assign_params(tensors, params)
}

pub(crate) fn assign_params<T: Scalar>(tensors: Vec<(String, Tensor<T>)>, params: &mut [&mut Param<T>]) -> Result<()> {
    if tensors.len() != params.len() {
        return Err(Error::ModelFile(format!(
            "file holds {} tensors, model expects {}",
            tensors.len(),
            params.len()
        )));
    }
    let mut by_name: std::collections::HashMap<String, Tensor<T>> = tensors.into_iter().collect();
    for p in params.iter_mut() {
        let t = by_name
            .remove(&p.name)
            .ok_or_else(|| Error::ModelFile(format!("missing tensor {:?}", p.name)))?;
        if t.shape() != p.value.shape() {
            return Err(Error::ModelFile(format!(
                "tensor {:?} has shape {:?}, expected {:?}",
                p.name,
                t.shape(),
                p.value.shape()
            )));
        }
        p.value = t;
        p.zero_grad();
    }
    Ok(())
}
