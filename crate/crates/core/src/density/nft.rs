//! Minimal tensor file format.
//!
//! Layout: 4-byte magic (`NFT1` for float32, `NFI1` for int32), u32 rank,
//! `rank` u32 dims, then the row-major payload. All integers and floats
//! are little-endian.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const MAGIC_F32: &[u8; 4] = b"NFT1";
pub const MAGIC_I32: &[u8; 4] = b"NFI1";
const MAX_RANK: u32 = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum Tensor {
    F32 { dims: Vec<usize>, data: Vec<f32> },
    I32 { dims: Vec<usize>, data: Vec<i32> },
}

impl Tensor {
    pub fn dims(&self) -> &[usize] {
        match self {
            Tensor::F32 { dims, .. } | Tensor::I32 { dims, .. } => dims,
        }
    }

    pub fn into_f32(self) -> Result<(Vec<usize>, Vec<f32>)> {
        match self {
            Tensor::F32 { dims, data } => Ok((dims, data)),
            Tensor::I32 { .. } => Err(Error::BadTensorHeader("expected a float tensor".into())),
        }
    }

    pub fn into_i32(self) -> Result<(Vec<usize>, Vec<i32>)> {
        match self {
            Tensor::I32 { dims, data } => Ok((dims, data)),
            Tensor::F32 { .. } => Err(Error::BadTensorHeader("expected an int tensor".into())),
        }
    }
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|_| Error::BadTensorHeader("truncated header".into()))?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_tensor<R: Read>(mut r: R) -> Result<Tensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::BadTensorHeader("truncated header".into()))?;
    let is_float = match &magic {
        m if m == MAGIC_F32 => true,
        m if m == MAGIC_I32 => false,
        m => return Err(Error::BadTensorHeader(format!("unknown magic {m:?}"))),
    };
    let rank = read_u32(&mut r)?;
    if rank == 0 || rank > MAX_RANK {
        return Err(Error::BadTensorHeader(format!("rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| read_u32(&mut r).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let count = dims
        .iter()
        .try_fold(1usize, |a, &d| a.checked_mul(d))
        .ok_or_else(|| Error::BadTensorHeader("dims overflow".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != count * 4 {
        return Err(Error::BadTensorHeader(format!(
            "payload has {} bytes, header implies {}",
            payload.len(),
            count * 4
        )));
    }
    let words = payload.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]);
    Ok(if is_float {
        Tensor::F32 {
            dims,
            data: words.map(f32::from_le_bytes).collect(),
        }
    } else {
        Tensor::I32 {
            dims,
            data: words.map(i32::from_le_bytes).collect(),
        }
    })
}

fn write_header<W: Write>(w: &mut W, magic: &[u8; 4], dims: &[usize], len: usize) -> Result<()> {
    if dims.iter().product::<usize>() != len {
        return Err(Error::ShapeMismatch(format!("dims {dims:?} vs {len} values")));
    }
    w.write_all(magic)?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::ShapeMismatch(format!("dim {d}")))?;
        w.write_all(&d.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_f32<W: Write>(mut w: W, dims: &[usize], data: &[f32]) -> Result<()> {
    write_header(&mut w, MAGIC_F32, dims, data.len())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_i32<W: Write>(mut w: W, dims: &[usize], data: &[i32]) -> Result<()> {
    write_header(&mut w, MAGIC_I32, dims, data.len())?;
    for v in data {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
