//! Flat binary container and CSV export for fields and masks.
//!
//! Container layout (little endian):
//! magic `GFB1`, u32 dim, u32 payload kind (0 = f64 field, 1 = mask),
//! u32 nodes per axis (3 entries), f64 origin (3), f64 extent (3),
//! then the payload: row-major f64 values, or booleans packed LSB-first.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::{GridDomain, MAX_DIM};
use crate::mask::{RegionKind, RegionMask};
use crate::scalar::Scalar;

const MAGIC: &[u8; 4] = b"GFB1";
const KIND_FIELD: u32 = 0;
const KIND_MASK: u32 = 1;

fn write_header<T: Scalar, W: Write>(out: &mut W, grid: &GridDomain<T>, kind: u32) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(grid.dim() as u32).to_le_bytes())?;
    out.write_all(&kind.to_le_bytes())?;
    for a in 0..MAX_DIM {
        let n = if a < grid.dim() { grid.nodes(a) } else { 1 } as u32;
        out.write_all(&n.to_le_bytes())?;
    }
    for a in 0..MAX_DIM {
        let v = if a < grid.dim() {
            grid.origin(a).as_f64()
        } else {
            0.0
        };
        out.write_all(&v.to_le_bytes())?;
    }
    for a in 0..MAX_DIM {
        let v = if a < grid.dim() {
            grid.extent(a).as_f64()
        } else {
            0.0
        };
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

struct Header {
    dim: usize,
    kind: u32,
    nodes: [usize; MAX_DIM],
    origin: [f64; MAX_DIM],
    extent: [f64; MAX_DIM],
}

fn read_header<R: Read>(input: &mut R) -> Result<Header> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Container("bad magic".into()));
    }
    let mut u = [0u8; 4];
    input.read_exact(&mut u)?;
    let dim = u32::from_le_bytes(u) as usize;
    input.read_exact(&mut u)?;
    let kind = u32::from_le_bytes(u);
    let mut nodes = [1usize; MAX_DIM];
    for n in nodes.iter_mut() {
        input.read_exact(&mut u)?;
        *n = u32::from_le_bytes(u) as usize;
    }
    let mut f = [0u8; 8];
    let mut origin = [0.0f64; MAX_DIM];
    for o in origin.iter_mut() {
        input.read_exact(&mut f)?;
        *o = f64::from_le_bytes(f);
    }
    let mut extent = [0.0f64; MAX_DIM];
    for e in extent.iter_mut() {
        input.read_exact(&mut f)?;
        *e = f64::from_le_bytes(f);
    }
    if dim == 0 || dim > MAX_DIM {
        return Err(Error::Container(format!("bad dimension {dim}")));
    }
    Ok(Header {
        dim,
        kind,
        nodes,
        origin,
        extent,
    })
}

fn grid_from_header<T: Scalar>(h: &Header) -> Result<GridDomain<T>> {
    let origin: Vec<T> = h.origin[..h.dim].iter().map(|&v| T::of(v)).collect();
    let extent: Vec<T> = h.extent[..h.dim].iter().map(|&v| T::of(v)).collect();
    GridDomain::new(h.dim, &origin, &extent, &h.nodes[..h.dim])
}

/// Writes a scalar field in the binary container format.
pub fn write_field<T: Scalar, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    write_header(&mut out, field.grid(), KIND_FIELD)?;
    for v in field.values() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Reads a scalar field from the binary container format.
pub fn read_field<T: Scalar, R: Read>(mut input: R) -> Result<ScalarField<T>> {
    let h = read_header(&mut input)?;
    if h.kind != KIND_FIELD {
        return Err(Error::Container("expected a field payload".into()));
    }
    let grid = grid_from_header::<T>(&h)?;
    let mut values = Vec::with_capacity(grid.len());
    let mut f = [0u8; 8];
    for _ in 0..grid.len() {
        input.read_exact(&mut f)?;
        values.push(T::of(f64::from_le_bytes(f)));
    }
    ScalarField::new(grid, values)
}

/// Writes a mask in the binary container format. The mask kind is encoded
/// in the payload-kind high bits.
pub fn write_mask<T: Scalar, W: Write>(
    mask: &RegionMask,
    grid: &GridDomain<T>,
    mut out: W,
) -> Result<()> {
    if !mask.matches_grid(grid) {
        return Err(Error::GridMismatch);
    }
    let kind_tag = match mask.kind() {
        RegionKind::Compact => 0u32,
        RegionKind::Open => 1,
        RegionKind::Arbitrary => 2,
    };
    write_header(&mut out, grid, KIND_MASK | (kind_tag << 8))?;
    let bits = mask.bits();
    let mut byte = 0u8;
    let mut used = 0;
    for &b in bits {
        if b {
            byte |= 1 << used;
        }
        used += 1;
        if used == 8 {
            out.write_all(&[byte])?;
            byte = 0;
            used = 0;
        }
    }
    if used > 0 {
        out.write_all(&[byte])?;
    }
    Ok(())
}

/// Reads a mask and the grid it was saved with.
pub fn read_mask<T: Scalar, R: Read>(mut input: R) -> Result<(RegionMask, GridDomain<T>)> {
    let h = read_header(&mut input)?;
    if h.kind & 0xff != KIND_MASK {
        return Err(Error::Container("expected a mask payload".into()));
    }
    let kind = match (h.kind >> 8) & 0xff {
        0 => RegionKind::Compact,
        1 => RegionKind::Open,
        _ => RegionKind::Arbitrary,
    };
    let grid = grid_from_header::<T>(&h)?;
    let n = grid.len();
    let mut mask = RegionMask::empty(&grid, kind);
    let mut byte = [0u8; 1];
    let mut idx = 0;
    while idx < n {
        input.read_exact(&mut byte)?;
        for bit in 0..8 {
            if idx >= n {
                break;
            }
            if byte[0] & (1 << bit) != 0 {
                mask.insert(idx);
            }
            idx += 1;
        }
    }
    Ok((mask, grid))
}

/// CSV dump of a field: one row per node, coordinates then value.
pub fn write_field_csv<T: Scalar, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    let grid = field.grid();
    let names = ["x", "y", "z"];
    let header: Vec<&str> = names[..grid.dim()]
        .iter()
        .copied()
        .chain(["value"])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        for a in 0..grid.dim() {
            write!(out, "{},", p[a].as_f64())?;
        }
        writeln!(out, "{}", field.values()[idx].as_f64())?;
    }
    Ok(())
}

/// CSV dump of a mask: coordinates and 0/1 membership.
pub fn write_mask_csv<T: Scalar, W: Write>(
    mask: &RegionMask,
    grid: &GridDomain<T>,
    mut out: W,
) -> Result<()> {
    if !mask.matches_grid(grid) {
        return Err(Error::GridMismatch);
    }
    let names = ["x", "y", "z"];
    let header: Vec<&str> = names[..grid.dim()]
        .iter()
        .copied()
        .chain(["member"])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for idx in 0..grid.len() {
        let p = grid.point(idx);
        for a in 0..grid.dim() {
            write!(out, "{},", p[a].as_f64())?;
        }
        writeln!(out, "{}", u8::from(mask.contains(idx)))?;
    }
    Ok(())
}
