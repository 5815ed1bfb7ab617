//! `ETEN` raw tensor files.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! b"ETEN" | u32 version = 1 | u32 order (3 or 6) | order x u64 dims | f64 values, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Dims3, ImageTensor, Operator6};

pub const MAGIC: &[u8; 4] = b"ETEN";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum EtenTensor {
    Image(ImageTensor),
    Operator(Operator6),
}

fn write_header<W: Write>(w: &mut W, dims: &[usize]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(*d as u64).to_le_bytes())?;
    }
    Ok(())
}

fn write_values<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn write_image<W: Write>(w: &mut W, x: &ImageTensor) -> Result<()> {
    write_header(w, &x.dims().as_array())?;
    write_values(w, x.data())
}

pub fn write_operator<W: Write>(w: &mut W, t: &Operator6) -> Result<()> {
    let d = t.dims().as_array();
    write_header(w, &[d[0], d[1], d[2], d[0], d[1], d[2]])?;
    write_values(w, t.data())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_values<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn read<R: Read>(r: &mut R) -> Result<EtenTensor> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let order = read_u32(r)?;
    if order != 3 && order != 6 {
        return Err(Error::Format(format!("unsupported order {order}")));
    }
    let mut dims = Vec::with_capacity(order as usize);
    for _ in 0..order {
        let d = read_u64(r)?;
        let d = usize::try_from(d).map_err(|_| Error::Format(format!("dimension {d} too large")))?;
        dims.push(d);
    }
    let shape = Dims3::new(dims[0], dims[1], dims[2]);
    if order == 6 && dims[3..] != dims[..3] {
        return Err(Error::Format(format!("non-square order-6 dims {dims:?}")));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| Error::Format("element count overflows".into()))?;
    let values = read_values(r, count)?;
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    Ok(if order == 3 {
        EtenTensor::Image(ImageTensor::new(shape, values)?)
    } else {
        EtenTensor::Operator(Operator6::from_unfolded(shape, values)?)
    })
}

pub fn save_image(path: impl AsRef<Path>, x: &ImageTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_image(&mut w, x)?;
    w.flush()?;
    Ok(())
}

pub fn load_image(path: impl AsRef<Path>) -> Result<ImageTensor> {
    let mut r = BufReader::new(File::open(path)?);
    match read(&mut r)? {
        EtenTensor::Image(x) => Ok(x),
        EtenTensor::Operator(_) => Err(Error::Format("expected an order-3 tensor".into())),
    }
}
