//! Binary operator dump.
//!
//! Layout, all integers little-endian `u64`, values little-endian `f64`:
//! magic `BKULAM01`, `m`, `nrows`, `nnz`, `row_ptr[nrows + 1]`, `col[nnz]`,
//! `val[nnz]`. Rows of hole cells are stored empty.

use super::{check_resolution, UlamOperator};
use crate::error::{Error, Result};

pub const DUMP_MAGIC: &[u8; 8] = b"BKULAM01";

const HEADER_LEN: usize = 8 + 3 * 8;

pub fn encode_dump(op: &UlamOperator) -> Vec<u8> {
    let n = op.n_cells();
    let rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| op.effective_row(i)).collect();
    let nnz: usize = rows.iter().map(Vec::len).sum();
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * (n + 1 + 2 * nnz));
    out.extend_from_slice(DUMP_MAGIC);
    for v in [op.m() as u64, n as u64, nnz as u64] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut acc = 0u64;
    out.extend_from_slice(&acc.to_le_bytes());
    for r in &rows {
        acc += r.len() as u64;
        out.extend_from_slice(&acc.to_le_bytes());
    }
    for &(j, _) in rows.iter().flatten() {
        out.extend_from_slice(&(j as u64).to_le_bytes());
    }
    for &(_, w) in rows.iter().flatten() {
        out.extend_from_slice(&w.to_le_bytes());
    }
    out
}

fn words(bytes: &[u8]) -> impl Iterator<Item = [u8; 8]> + '_ {
    bytes
        .chunks_exact(8)
        .map(|c| c.try_into().expect("chunks of 8"))
}

/// Parse and validate a dump. Entries must be finite and in `[0, 1]`, column
/// indices in range and row sums at most `1 + 1e-12`.
pub fn decode_dump(bytes: &[u8]) -> Result<UlamOperator> {
    let bad = |msg: String| Err(Error::Decode(msg));
    if bytes.len() < HEADER_LEN {
        return bad(format!(
            "dump of {} bytes is shorter than its header",
            bytes.len()
        ));
    }
    if &bytes[..8] != DUMP_MAGIC {
        return bad("missing BKULAM01 magic".into());
    }
    let mut header = words(&bytes[8..HEADER_LEN]).map(u64::from_le_bytes);
    let (m, nrows, nnz) = (
        header.next().unwrap_or(0),
        header.next().unwrap_or(0),
        header.next().unwrap_or(0),
    );
    let m = u32::try_from(m).map_err(|_| Error::Decode(format!("resolution {m} out of range")))?;
    check_resolution(m).map_err(|e| Error::Decode(e.to_string()))?;
    let n = 1u64 << (2 * m);
    if nrows != n {
        return bad(format!("{nrows} rows, expected 4^{m} = {n}"));
    }
    // Checked before allocating anything sized by the header.
    let expected = (nrows + 1)
        .checked_add(nnz.checked_mul(2).unwrap_or(u64::MAX))
        .and_then(|w| w.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER_LEN as u64));
    if expected != Some(bytes.len() as u64) {
        return bad(format!(
            "dump is {} bytes; header (nrows {nrows}, nnz {nnz}) implies {expected:?}",
            bytes.len()
        ));
    }
    let body = &bytes[HEADER_LEN..];
    let (ptr_bytes, rest) = body.split_at(8 * (nrows as usize + 1));
    let (col_bytes, val_bytes) = rest.split_at(8 * nnz as usize);
    let row_ptr: Vec<u64> = words(ptr_bytes).map(u64::from_le_bytes).collect();
    let col: Vec<u64> = words(col_bytes).map(u64::from_le_bytes).collect();
    let val: Vec<f64> = words(val_bytes).map(f64::from_le_bytes).collect();
    if row_ptr[0] != 0 || row_ptr[nrows as usize] != nnz || row_ptr.windows(2).any(|w| w[0] > w[1])
    {
        return bad("row pointers must rise from 0 to nnz".into());
    }
    if let Some(k) = col.iter().position(|&j| j >= n) {
        return bad(format!("column index {} at entry {k} out of range", col[k]));
    }
    if let Some(k) = val.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return bad(format!("weight {} at entry {k} not in [0, 1]", val[k]));
    }
    for (i, w) in row_ptr.windows(2).enumerate() {
        let s: f64 = val[w[0] as usize..w[1] as usize].iter().sum();
        if s > 1.0 + 1e-12 {
            return bad(format!("row {i} sums to {s} > 1"));
        }
    }
    Ok(UlamOperator::from_csr(m, row_ptr, col, val))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Ball;
    use crate::symbolic::{Metric, Point};
    use crate::ulam::{
        build_ulam, leading_eigenvalue, punch_hole, survival_probability, CoverKind,
    };

    #[test]
    fn round_trip_closed_and_open() {
        let op = build_ulam(3).unwrap();
        let bytes = encode_dump(&op);
        assert_eq!(&bytes[..8], DUMP_MAGIC);
        assert_eq!(bytes.len(), HEADER_LEN + 8 * (65 + 2 * 128));
        let back = decode_dump(&bytes).unwrap();
        for i in 0..64 {
            assert_eq!(back.row(i), op.row(i));
        }
        assert_eq!(encode_dump(&back), bytes);

        let ball = Ball::new(Point::new(0.0, 0.0), 0.25, Metric::Sup).unwrap();
        let holed = punch_hole(&op, &ball, CoverKind::Outer).unwrap();
        let back = decode_dump(&encode_dump(&holed)).unwrap();
        let (a, b) = (
            leading_eigenvalue(&holed, 1e-13).unwrap().lambda,
            leading_eigenvalue(&back, 1e-13).unwrap().lambda,
        );
        assert!((a - b).abs() < 1e-14);
        assert_eq!(
            survival_probability(&holed, 5),
            survival_probability(&back, 5)
        );
    }

    #[test]
    fn rejects_malformed() {
        let good = encode_dump(&build_ulam(1).unwrap());
        assert!(decode_dump(&good[..20]).is_err());
        assert!(decode_dump(&good[..good.len() - 1]).is_err());
        let mut bad = good.clone();
        bad[0] = b'X';
        assert!(decode_dump(&bad).is_err());
        let mut bad = good.clone();
        bad[8..16].copy_from_slice(&15u64.to_le_bytes());
        assert!(decode_dump(&bad).is_err());
        // Column index out of range: first col entry sits after the 5 row pointers.
        let mut bad = good.clone();
        let first_col = HEADER_LEN + 8 * 5;
        bad[first_col..first_col + 8].copy_from_slice(&9u64.to_le_bytes());
        assert!(decode_dump(&bad).is_err());
        // Weight above 1.
        let mut bad = good.clone();
        let first_val = HEADER_LEN + 8 * (5 + 8);
        bad[first_val..first_val + 8].copy_from_slice(&1.5f64.to_le_bytes());
        assert!(decode_dump(&bad).is_err());
        // Huge nnz must not allocate.
        let mut bad = good;
        bad[24..32].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(decode_dump(&bad).is_err());
    }
}
