//! Binary tensor files.
//!
//! Layout (all integers little-endian):
//!
//! | offset | size | content |
//! |---|---|---|
//! | 0 | 4 | magic `TNS1` |
//! | 4 | 1 | version, `1` |
//! | 5 | 1 | `ndim`, at least 1 |
//! | 6 | 8·ndim | extents as `u64` |
//! | 6 + 8·ndim | 8·numel | `f64` payload, column-major |

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

pub const MAGIC: &[u8; 4] = b"TNS1";
pub const VERSION: u8 = 1;

fn format_err<T>(offset: u64, message: impl Into<String>) -> Result<T> {
    Err(Error::Format {
        offset,
        message: message.into(),
    })
}

pub fn write_tensor<W: Write>(mut out: W, t: &DenseTensor) -> Result<()> {
    if t.ndim() > u8::MAX as usize {
        return Err(Error::InvalidArgument(format!(
            "{} modes do not fit the header",
            t.ndim()
        )));
    }
    out.write_all(MAGIC)?;
    out.write_all(&[VERSION, t.ndim() as u8])?;
    for &d in t.shape() {
        out.write_all(&(d as u64).to_le_bytes())?;
    }
    for &v in t.data() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

/// Read exactly `buf.len()` bytes at `offset`, reporting truncation as a format error.
fn fill<R: Read>(inp: &mut R, buf: &mut [u8], offset: u64, what: &str) -> Result<()> {
    let mut got = 0;
    while got < buf.len() {
        match inp.read(&mut buf[got..]) {
            Ok(0) => {
                return format_err(
                    offset + got as u64,
                    format!(
                        "truncated {what}: expected {} bytes, found {got}",
                        buf.len()
                    ),
                )
            }
            Ok(n) => got += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(())
}

pub fn read_tensor<R: Read>(mut inp: R) -> Result<DenseTensor> {
    let mut head = [0u8; 6];
    fill(&mut inp, &mut head, 0, "header")?;
    if &head[..4] != MAGIC {
        return format_err(0, format!("bad magic {:?}", &head[..4]));
    }
    if head[4] != VERSION {
        return format_err(4, format!("unsupported version {}", head[4]));
    }
    let ndim = head[5] as usize;
    if ndim == 0 {
        return format_err(5, "ndim must be at least 1");
    }
    let mut shape = Vec::with_capacity(ndim);
    let mut numel: u64 = 1;
    let mut b8 = [0u8; 8];
    for k in 0..ndim {
        let off = 6 + 8 * k as u64;
        fill(&mut inp, &mut b8, off, "extents")?;
        let d = u64::from_le_bytes(b8);
        numel = match numel.checked_mul(d) {
            Some(n) if n.checked_mul(8).is_some() && usize::try_from(n).is_ok() => n,
            _ => return format_err(off, "extent product overflows"),
        };
        shape.push(d as usize);
    }
    let base = 6 + 8 * ndim as u64;
    let mut payload = vec![0u8; (numel * 8) as usize];
    fill(&mut inp, &mut payload, base, "payload")?;
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let mut probe = [0u8; 1];
    loop {
        match inp.read(&mut probe) {
            Ok(0) => break,
            Ok(_) => return format_err(base + numel * 8, "trailing bytes after payload"),
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    DenseTensor::from_vec(&shape, data)
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    write_tensor(BufWriter::new(File::create(path)?), t)
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor(BufReader::new(File::open(path)?))
}
