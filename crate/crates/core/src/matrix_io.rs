//! Binary container for dense complex matrices (format in `docs/matrix-format.md`).
//!
//! Header (32 bytes, little-endian): magic `b"QKRMAT\0\0"`, `u32` version,
//! `u32` layout (0 = row-major), `u64` rows, `u64` cols. Then `rows·cols`
//! entries of 16 bytes each: real part `f64`, imaginary part `f64`.

use std::io::{Read, Write};

use faer::{c64, Mat};

use crate::error::{QkrError, Result};

pub const MAGIC: [u8; 8] = *b"QKRMAT\0\0";
pub const VERSION: u32 = 1;
pub const LAYOUT_ROW_MAJOR: u32 = 0;
pub const HEADER_LEN: usize = 32;

pub fn write_matrix<W: Write>(mut w: W, m: &Mat<c64>) -> Result<()> {
    let mut header = Vec::with_capacity(HEADER_LEN);
    header.extend_from_slice(&MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&LAYOUT_ROW_MAJOR.to_le_bytes());
    header.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    header.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    w.write_all(&header)?;
    let mut row = Vec::with_capacity(16 * m.ncols());
    for i in 0..m.nrows() {
        row.clear();
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            row.extend_from_slice(&z.re.to_le_bytes());
            row.extend_from_slice(&z.im.to_le_bytes());
        }
        w.write_all(&row)?;
    }
    Ok(())
}

fn word<const K: usize>(bytes: &[u8], at: usize) -> [u8; K] {
    bytes[at..at + K].try_into().expect("slice length")
}

pub fn read_matrix<R: Read>(mut r: R) -> Result<Mat<c64>> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| QkrError::Format("truncated header".into()))?;
    if header[..8] != MAGIC {
        return Err(QkrError::Format("bad magic".into()));
    }
    let version = u32::from_le_bytes(word(&header, 8));
    if version != VERSION {
        return Err(QkrError::Format(format!("unsupported version {version}")));
    }
    let layout = u32::from_le_bytes(word(&header, 12));
    if layout != LAYOUT_ROW_MAJOR {
        return Err(QkrError::Format(format!("unsupported layout {layout}")));
    }
    let rows = u64::from_le_bytes(word(&header, 16)) as usize;
    let cols = u64::from_le_bytes(word(&header, 24)) as usize;
    let len = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(16))
        .ok_or_else(|| QkrError::Format("matrix size overflows".into()))?;
    let mut data = vec![0u8; len];
    r.read_exact(&mut data).map_err(|_| QkrError::Format(format!("expected {len} bytes of entries")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(QkrError::Format("trailing bytes after entries".into()));
    }
    Ok(Mat::from_fn(rows, cols, |i, j| {
        let at = 16 * (i * cols + j);
        c64::new(f64::from_le_bytes(word(&data, at)), f64::from_le_bytes(word(&data, at + 8)))
    }))
}

pub fn save_matrix(path: &std::path::Path, m: &Mat<c64>) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_matrix(f, m)
}

pub fn load_matrix(path: &std::path::Path) -> Result<Mat<c64>> {
    read_matrix(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let m = Mat::from_fn(3, 2, |i, j| c64::new(i as f64 + 0.1, -(j as f64) / 3.0));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), HEADER_LEN + 6 * 16);
        assert_eq!(&buf[..8], b"QKRMAT\0\0");
        // entry (0, 1) is the second in row-major order
        assert_eq!(f64::from_le_bytes(buf[48..56].try_into().unwrap()), 0.1);
        let back = read_matrix(buf.as_slice()).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(back[(i, j)].re.to_bits(), m[(i, j)].re.to_bits());
                assert_eq!(back[(i, j)].im.to_bits(), m[(i, j)].im.to_bits());
            }
        }
    }

    #[test]
    fn rejects_damaged_input() {
        let m = Mat::from_fn(2, 2, |_, _| c64::new(1.0, 0.0));
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert!(read_matrix(&buf[..40]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_matrix(bad.as_slice()), Err(QkrError::Format(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(read_matrix(long.as_slice()).is_err());
    }
}
