//! `.wxstack` binary layout (all little-endian):
//!
//! ```text
//! b"WXS1"
//! u32 n_cols | u32 n_rows | f64 x_ll | f64 y_ll | f64 cell_size | f64 nodata
//! u32 n_days | i64 start_date (days since 1970-01-01) | u8 variable code
//! f32 × n_days × n_rows × n_cols   (day-major, row-major, row 0 = north)
//! ```

use std::io::{BufWriter, Write};
use std::path::Path;

use super::{date_from_epoch_days, days_since_epoch, GridGeoref, GridStack, Variable};
use crate::error::{Error, Result};

pub const STACK_MAGIC: &[u8; 4] = b"WXS1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 * 4 + 4 + 8 + 1;

pub fn read_stack(path: impl AsRef<Path>) -> Result<GridStack> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_stack(&bytes)
}

pub fn write_stack(stack: &GridStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_stack(stack)?;
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub(crate) struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Cursor { buf, pos: 0 }
    }

    pub(crate) fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.pos + N;
        let s = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| Error::Shape(format!("truncated input at byte {}", self.pos)))?;
        self.pos = end;
        Ok(s.try_into().unwrap())
    }

    pub(crate) fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .buf
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Shape(format!("truncated input at byte {}", self.pos)))?;
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take::<1>()?[0])
    }
    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take()?))
    }
    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take()?))
    }
    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take()?))
    }
    pub(crate) fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take()?))
    }
    pub(crate) fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

pub fn decode_stack(bytes: &[u8]) -> Result<GridStack> {
    if bytes.len() < 4 || &bytes[..4] != STACK_MAGIC {
        return Err(Error::Format("missing WXS1 magic".into()));
    }
    let mut cur = Cursor::new(&bytes[4..]);
    let n_cols = cur.u32()? as usize;
    let n_rows = cur.u32()? as usize;
    let x_ll = cur.f64()?;
    let y_ll = cur.f64()?;
    let cell_size = cur.f64()?;
    let nodata = cur.f64()?;
    let n_days = cur.u32()? as usize;
    let start = cur.i64()?;
    let variable = Variable::from_code(cur.u8()?)?;
    if n_days == 0 {
        return Err(Error::Shape("stack has zero days".into()));
    }
    let georef = GridGeoref::new(n_cols, n_rows, x_ll, y_ll, cell_size, nodata)?;
    let n = n_days
        .checked_mul(georef.n_cells())
        .ok_or_else(|| Error::Shape("stack dimensions overflow".into()))?;
    if cur.remaining() != n * 4 {
        return Err(Error::Shape(format!("payload has {} bytes, header implies {}", cur.remaining(), n * 4)));
    }
    let nodata32 = nodata as f32;
    let values = cur
        .bytes(n * 4)?
        .chunks_exact(4)
        .map(|c| {
            let v = f32::from_le_bytes(c.try_into().unwrap());
            if v == nodata32 || (v.is_nan() && nodata.is_nan()) {
                nodata
            } else {
                v as f64
            }
        })
        .collect();
    Ok(GridStack { georef, start_date: date_from_epoch_days(start)?, n_days, variable, values })
}

pub fn encode_stack(stack: &GridStack) -> Result<Vec<u8>> {
    let g = &stack.georef;
    g.validate()?;
    if stack.n_days == 0 {
        return Err(Error::Shape("refusing to write an empty stack".into()));
    }
    if stack.values.len() != stack.n_days * g.n_cells() {
        return Err(Error::Shape("stack value count does not match n_days x cells".into()));
    }
    let to_u32 = |v: usize, what: &str| u32::try_from(v).map_err(|_| Error::Shape(format!("{what} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN + stack.values.len() * 4);
    out.extend_from_slice(STACK_MAGIC);
    out.extend_from_slice(&to_u32(g.n_cols, "n_cols")?.to_le_bytes());
    out.extend_from_slice(&to_u32(g.n_rows, "n_rows")?.to_le_bytes());
    for v in [g.x_ll, g.y_ll, g.cell_size, g.nodata] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&to_u32(stack.n_days, "n_days")?.to_le_bytes());
    out.extend_from_slice(&days_since_epoch(stack.start_date).to_le_bytes());
    out.push(stack.variable.code());
    for v in &stack.values {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    Ok(out)
}
