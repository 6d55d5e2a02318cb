//! Flat binary snapshot codec.
//!
//! Layout, all little-endian, byte-exact:
//!
//! ```text
//! offset  size  field
//! 0       8     magic "KGLABSNP"
//! 8       2     format version (u16, currently 1)
//! 10      2     endianness tag (u16, 0x0102; reads as 0x0201 on a
//!               big-endian misread)
//! 12      4     dim (u32)
//! 16      4     points_per_dim (u32)
//! 20      8     extent (f64)
//! 28      8     time (f64)
//! 36      16*S  u values, S = points_per_dim^dim sites, each (re, im) f64
//! 36+16S  16*S  udot values, same encoding
//! ```
//!
//! The decoder validates the header against the grid rules before touching
//! the payload and demands the exact payload length, so arbitrary input is
//! rejected cheaply.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Field, FieldState, Grid, Representation};

pub const SNAPSHOT_MAGIC: [u8; 8] = *b"KGLABSNP";
pub const SNAPSHOT_VERSION: u16 = 1;
pub const SNAPSHOT_ENDIAN_TAG: u16 = 0x0102;
const HEADER_LEN: usize = 36;

/// Serializes `(time, state)` into the flat layout.
pub fn encode_snapshot(state: &FieldState, time: f64) -> Vec<u8> {
    let grid = state.grid();
    let sites = grid.site_count();
    let mut out = Vec::with_capacity(HEADER_LEN + 32 * sites);
    out.extend_from_slice(&SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&SNAPSHOT_ENDIAN_TAG.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.points_per_dim() as u32).to_le_bytes());
    out.extend_from_slice(&grid.extent().to_le_bytes());
    out.extend_from_slice(&time.to_le_bytes());
    for field in [state.u().to_physical(), state.udot().to_physical()] {
        for z in field.values() {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    out
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

fn read_f64(bytes: &[u8], at: usize) -> f64 {
    let mut buf = [0u8; 8];
    buf.copy_from_slice(&bytes[at..at + 8]);
    f64::from_le_bytes(buf)
}

/// Parses a snapshot back into `(time, state)`.
pub fn decode_snapshot(bytes: &[u8]) -> Result<(f64, FieldState)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::SnapshotFormat(format!(
            "{} bytes is shorter than the {HEADER_LEN}-byte header",
            bytes.len()
        )));
    }
    if bytes[..8] != SNAPSHOT_MAGIC {
        return Err(Error::SnapshotFormat("bad magic".into()));
    }
    let version = read_u16(bytes, 8);
    if version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotFormat(format!("unsupported version {version}")));
    }
    let endian = read_u16(bytes, 10);
    if endian != SNAPSHOT_ENDIAN_TAG {
        return Err(Error::SnapshotFormat(format!("bad endianness tag {endian:#06x}")));
    }
    let dim = read_u32(bytes, 12) as usize;
    let n = read_u32(bytes, 16) as usize;
    let extent = read_f64(bytes, 20);
    let time = read_f64(bytes, 28);
    if !time.is_finite() {
        return Err(Error::SnapshotFormat(format!("non-finite time {time}")));
    }
    // Grid::new enforces dim, parity, and the site budget.
    let grid = Grid::new(dim, extent, n)
        .map_err(|e| Error::SnapshotFormat(format!("header describes no valid grid: {e}")))?;
    let sites = grid.site_count();
    let expect = HEADER_LEN + 32 * sites;
    if bytes.len() != expect {
        return Err(Error::SnapshotFormat(format!(
            "expected {expect} bytes for {sites} sites, got {}",
            bytes.len()
        )));
    }
    let read_block = |offset: usize| -> Result<Field> {
        let mut values = Vec::with_capacity(sites);
        for i in 0..sites {
            let at = offset + 16 * i;
            values.push(Complex64::new(read_f64(bytes, at), read_f64(bytes, at + 8)));
        }
        Field::from_values(&grid, Representation::Physical, values)
    };
    let u = read_block(HEADER_LEN)?;
    let udot = read_block(HEADER_LEN + 16 * sites)?;
    Ok((time, FieldState::new(u, udot)?))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    use super::*;
    use crate::grid::Grid;

    fn sample_state(seed: u64) -> FieldState {
        let grid = Grid::new(2, 6.5, 8).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u = Field::zeros(&grid);
        let mut v = Field::zeros(&grid);
        for z in u.values_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        for z in v.values_mut() {
            *z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        FieldState::new(u, v).unwrap()
    }

    #[test]
    fn decode_rejects_garbage_headers() {
        assert!(decode_snapshot(b"").is_err());
        assert!(decode_snapshot(b"KGLABSNP").is_err());
        let state = sample_state(0);
        let mut bytes = encode_snapshot(&state, 1.0);
        bytes[0] ^= 0xff; // magic
        assert!(decode_snapshot(&bytes).is_err());

        let mut bytes = encode_snapshot(&state, 1.0);
        bytes[12] = 7; // dim
        assert!(decode_snapshot(&bytes).is_err());

        let mut bytes = encode_snapshot(&state, 1.0);
        bytes.truncate(bytes.len() - 1); // payload length
        assert!(decode_snapshot(&bytes).is_err());

        let mut bytes = encode_snapshot(&state, 1.0);
        bytes[10] = 0x01;
        bytes[11] = 0x02; // endian tag swapped (reads back 0x0201)
        assert!(decode_snapshot(&bytes).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(8))]

        #[test]
        fn round_trip_is_exact(seed in any::<u64>(), time in -100.0f64..100.0) {
            let state = sample_state(seed);
            let bytes = encode_snapshot(&state, time);
            let (t, back) = decode_snapshot(&bytes).unwrap();
            prop_assert_eq!(t, time);
            prop_assert_eq!(back.u().values(), state.u().values());
            prop_assert_eq!(back.udot().values(), state.udot().values());
        }
    }
}
