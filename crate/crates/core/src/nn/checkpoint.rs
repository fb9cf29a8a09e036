//! Network checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "PBNN"            magic
//! u16               version (1)
//! u32               layer count
//! per layer:
//!   u8              kind tag: 0 conv2d, 1 relu, 2 dense
//!   conv2d:         u32 kernel, u32 in_channels, u32 out_channels
//!   dense:          u32 in_features, u32 out_features
//!   conv2d, dense:  weight tensor, bias tensor
//! u32               skip count
//! per skip:         u32 from, u32 to
//!
//! tensor:           u32 ndim, ndim x u32 dims, product(dims) x f64 data
//! ```

use std::io::{Read, Write};

use super::layer::{Conv2d, Dense, Layer};
use super::network::{Network, Skip};
use super::NnError;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"PBNN";
pub const VERSION: u16 = 1;

const TAG_CONV: u8 = 0;
const TAG_RELU: u8 = 1;
const TAG_DENSE: u8 = 2;

pub fn write_checkpoint(out: &mut impl Write, net: &Network) -> Result<(), NnError> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    put_u32(out, net.layers().len())?;
    for layer in net.layers() {
        match layer {
            Layer::Conv2d(c) => {
                out.write_all(&[TAG_CONV])?;
                put_u32(out, c.kernel())?;
                put_u32(out, c.in_channels())?;
                put_u32(out, c.out_channels())?;
                put_tensor(out, &c.weight)?;
                put_tensor(out, &c.bias)?;
            }
            Layer::Relu => out.write_all(&[TAG_RELU])?,
            Layer::Dense(d) => {
                out.write_all(&[TAG_DENSE])?;
                put_u32(out, d.in_features())?;
                put_u32(out, d.out_features())?;
                put_tensor(out, &d.weight)?;
                put_tensor(out, &d.bias)?;
            }
        }
    }
    put_u32(out, net.skips().len())?;
    for s in net.skips() {
        put_u32(out, s.from)?;
        put_u32(out, s.to)?;
    }
    Ok(())
}

pub fn read_checkpoint(input: &mut impl Read) -> Result<Network, NnError> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NnError::Checkpoint(format!("bad magic {magic:?}")));
    }
    let mut v = [0u8; 2];
    input.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != VERSION {
        return Err(NnError::Checkpoint(format!("unsupported version {version}")));
    }
    let count = get_u32(input)?;
    let mut layers = Vec::with_capacity(count.min(1 << 16));
    for index in 0..count {
        let mut tag = [0u8; 1];
        input.read_exact(&mut tag)?;
        let layer = match tag[0] {
            TAG_CONV => {
                let (k, cin, cout) = (get_u32(input)?, get_u32(input)?, get_u32(input)?);
                let weight = get_tensor(input)?;
                let bias = get_tensor(input)?;
                expect_shape(index, &weight, &[cout, cin, k, k])?;
                expect_shape(index, &bias, &[cout])?;
                Layer::Conv2d(Conv2d::from_parts(weight, bias))
            }
            TAG_RELU => Layer::Relu,
            TAG_DENSE => {
                let (fin, fout) = (get_u32(input)?, get_u32(input)?);
                let weight = get_tensor(input)?;
                let bias = get_tensor(input)?;
                expect_shape(index, &weight, &[fout, fin])?;
                expect_shape(index, &bias, &[fout])?;
                Layer::Dense(Dense::from_parts(weight, bias))
            }
            other => return Err(NnError::Checkpoint(format!("layer {index}: unknown tag {other}"))),
        };
        layers.push(layer);
    }
    let skip_count = get_u32(input)?;
    let mut skips = Vec::with_capacity(skip_count.min(1 << 16));
    for _ in 0..skip_count {
        skips.push(Skip {
            from: get_u32(input)?,
            to: get_u32(input)?,
        });
    }
    Network::new(layers, skips)
}

pub fn save_checkpoint(path: impl AsRef<std::path::Path>, net: &Network) -> Result<(), NnError> {
    let mut buf = Vec::new();
    write_checkpoint(&mut buf, net)?;
    std::fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<std::path::Path>) -> Result<Network, NnError> {
    let bytes = std::fs::read(path)?;
    read_checkpoint(&mut bytes.as_slice())
}

fn expect_shape(index: usize, t: &Tensor, shape: &[usize]) -> Result<(), NnError> {
    if t.shape() != shape {
        return Err(NnError::Checkpoint(format!(
            "layer {index}: tensor shape {:?} disagrees with header {shape:?}",
            t.shape()
        )));
    }
    Ok(())
}

fn put_u32(out: &mut impl Write, v: usize) -> Result<(), NnError> {
    let v = u32::try_from(v).map_err(|_| NnError::Checkpoint(format!("{v} exceeds u32")))?;
    out.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(input: &mut impl Read) -> Result<usize, NnError> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn put_tensor(out: &mut impl Write, t: &Tensor) -> Result<(), NnError> {
    put_u32(out, t.ndim())?;
    for &d in t.shape() {
        put_u32(out, d)?;
    }
    for v in t.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn get_tensor(input: &mut impl Read) -> Result<Tensor, NnError> {
    let ndim = get_u32(input)?;
    if ndim > 8 {
        return Err(NnError::Checkpoint(format!("tensor rank {ndim} too large")));
    }
    let shape = (0..ndim).map(|_| get_u32(input)).collect::<Result<Vec<_>, _>>()?;
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n.min(1 << 24));
    let mut b = [0u8; 8];
    for _ in 0..n {
        input.read_exact(&mut b)?;
        data.push(f64::from_le_bytes(b));
    }
    Ok(Tensor::from_vec(&shape, data)?)
}
