//! Flat binary persistence for tensors and parameter stores.
//!
//! Tensor layout (all integers little-endian):
//!
//! ```text
//!   magic           4 bytes   "TSR1"
//!   ndim            u32
//!   extents         ndim x u64
//!   data            numel x f64 (IEEE-754 bits, little-endian)
//! ```
//!
//! Store layout:
//!
//! ```text
//!   magic           4 bytes   "PST1"
//!   leaf count      u32
//!   per leaf (lexicographic by path):
//!     path length   u32
//!     path          UTF-8 bytes
//!     trainable     u8 (0 or 1)
//!     tensor        as above
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::NumericsError;

const TENSOR_MAGIC: &[u8; 4] = b"TSR1";
const STORE_MAGIC: &[u8; 4] = b"PST1";

pub fn write_tensor<W: Write>(w: &mut W, tensor: &Tensor) -> Result<(), NumericsError> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(tensor.shape().len() as u32).to_le_bytes())?;
    for &d in tensor.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in tensor.data() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_tensor<R: Read>(r: &mut R) -> Result<Tensor, NumericsError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(NumericsError::BadFormat("tensor magic mismatch".into()));
    }
    let ndim = read_u32(r)? as usize;
    let mut shape = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        shape.push(read_u64(r)? as usize);
    }
    let numel: usize = shape.iter().product();
    let mut data = Vec::with_capacity(numel);
    let mut buf = [0u8; 8];
    for _ in 0..numel {
        r.read_exact(&mut buf)?;
        data.push(f64::from_le_bytes(buf));
    }
    Ok(Tensor::new(shape, data))
}

pub fn save_store(path: &Path, store: &ParamStore) -> Result<(), NumericsError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(STORE_MAGIC)?;
    w.write_all(&(store.len() as u32).to_le_bytes())?;
    for (leaf_path, param) in store.iter() {
        w.write_all(&(leaf_path.len() as u32).to_le_bytes())?;
        w.write_all(leaf_path.as_bytes())?;
        w.write_all(&[u8::from(param.trainable)])?;
        write_tensor(&mut w, &param.value)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_store(path: &Path) -> Result<ParamStore, NumericsError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != STORE_MAGIC {
        return Err(NumericsError::BadFormat("store magic mismatch".into()));
    }
    let count = read_u32(&mut r)?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| NumericsError::BadFormat("non-UTF-8 leaf path".into()))?;
        let mut flag = [0u8; 1];
        r.read_exact(&mut flag)?;
        let tensor = read_tensor(&mut r)?;
        store.insert(&name, tensor, flag[0] != 0)?;
    }
    Ok(store)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NumericsError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, NumericsError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}
