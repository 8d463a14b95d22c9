//! Binary weights file.
//!
//! Layout (all integers little-endian, no padding, no checksum):
//!
//! ```text
//! magic   4 bytes  "FEMR"
//! version u32      1
//! count   u32      number of tensors
//! per tensor:
//!   name_len u16, then name_len bytes UTF-8
//!   ndim     u8,  then ndim × u32 dims
//!   data     product(dims) × f32, row-major
//! ```
//!
//! A file's byte length is therefore exactly determined by its header and
//! tensor table; loaders reject both truncated files and trailing bytes.
//! Round-tripping a model through save/load reproduces every parameter
//! bit for bit.

use crate::error::Error;
use crate::net::{EmotionModel, NetworkConfig, ParamSet};
use crate::tensor::Tensor;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"FEMR";
pub const VERSION: u32 = 1;

/// Exact byte length of the file [`serialize_weights`] produces for a
/// model of this configuration.
pub fn expected_file_size(config: &NetworkConfig) -> Result<usize> {
    let mut size = 4 + 4 + 4;
    for decl in config.param_decls()? {
        size += 2 + decl.name.len() + 1 + 4 * decl.shape.len();
        size += 4 * decl.shape.iter().product::<usize>();
    }
    Ok(size)
}

/// Encodes the model's parameters in declaration order.
pub fn serialize_weights(model: &EmotionModel) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let count: u32 = model
        .params
        .len()
        .try_into()
        .map_err(|_| Error::format("too many tensors for the u32 count field"))?;
    out.extend_from_slice(&count.to_le_bytes());
    for (name, tensor) in model.params.iter() {
        let name_len: u16 = name
            .len()
            .try_into()
            .map_err(|_| Error::format(format!("tensor name '{name}' exceeds u16 length")))?;
        out.extend_from_slice(&name_len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        let ndim: u8 = tensor
            .rank()
            .try_into()
            .map_err(|_| Error::format("tensor rank exceeds u8"))?;
        out.push(ndim);
        for &d in tensor.shape() {
            let d: u32 = d
                .try_into()
                .map_err(|_| Error::format("tensor dimension exceeds u32"))?;
            out.extend_from_slice(&d.to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn save_weights(model: &EmotionModel, path: &std::path::Path) -> Result<()> {
    Ok(std::fs::write(path, serialize_weights(model)?)?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(format!(
                "truncated file: {what} needs {n} bytes at offset {}, only {} remain",
                self.pos,
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
}

/// Decodes a weights buffer and checks every tensor against the config's
/// declarations (same names, same order, same shapes).
pub fn parse_weights(bytes: &[u8], config: &NetworkConfig) -> Result<EmotionModel> {
    let mut c = Cursor { bytes, pos: 0 };
    let magic = c.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::format(format!("bad magic {magic:02x?}, expected \"FEMR\"")));
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::format(format!("unsupported format version {version}, expected {VERSION}")));
    }
    let count = c.u32("tensor count")? as usize;
    let decls = config.param_decls()?;
    if count != decls.len() {
        let name = decls
            .get(count)
            .map(|d| d.name.clone())
            .unwrap_or_else(|| format!("tensor #{}", decls.len()));
        return Err(Error::shape(
            name,
            format!("file holds {count} tensors, config declares {}", decls.len()),
        ));
    }

    let mut params = ParamSet::new();
    for decl in &decls {
        let name_len = c.u16("name length")? as usize;
        let name_bytes = c.take(name_len, "tensor name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::format("tensor name is not valid UTF-8"))?;
        if name != decl.name {
            return Err(Error::shape(
                name,
                format!("expected tensor '{}' at this position", decl.name),
            ));
        }
        let ndim = c.u8("rank")? as usize;
        let mut shape = Vec::with_capacity(ndim);
        let mut numel: usize = 1;
        for _ in 0..ndim {
            let d = c.u32("dimension")? as usize;
            numel = numel
                .checked_mul(d)
                .ok_or_else(|| Error::format("tensor dimensions overflow"))?;
            shape.push(d);
        }
        if shape != decl.shape {
            return Err(Error::shape(
                name,
                format!("file shape {shape:?} does not match config shape {:?}", decl.shape),
            ));
        }
        let raw = c.take(4 * numel, "tensor data")?;
        let data: Vec<f32> = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        params.push(name, Tensor::new(&shape, data)?)?;
    }
    if c.pos != bytes.len() {
        return Err(Error::format(format!(
            "{} trailing bytes after the last tensor",
            bytes.len() - c.pos
        )));
    }
    Ok(EmotionModel { config: config.clone(), params })
}

pub fn load_weights(path: &std::path::Path, config: &NetworkConfig) -> Result<EmotionModel> {
    parse_weights(&std::fs::read(path)?, config)
}
