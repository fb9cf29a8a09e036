//! Binary greyscale PGM (P5, maxval 255).

use std::fs;
use std::io::Write;
use std::path::Path;

use super::DataError;
use crate::tensor::Tensor;

/// Reads a P5 file into an `[H, W]` tensor of integer-valued floats.
pub fn load_pgm(path: impl AsRef<Path>) -> Result<Tensor, DataError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |reason: &str| DataError::MalformedHeader {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(malformed("missing P5 magic"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in &mut fields {
        // Whitespace and `#` comments separate header fields.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(malformed("truncated header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| malformed("expected a decimal header field"))?;
    }
    let [width, height, maxval] = fields;
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(malformed("missing whitespace after maxval"));
    }
    pos += 1;
    if maxval != 255 {
        return Err(DataError::UnsupportedMaxval {
            path: path.to_path_buf(),
            maxval,
        });
    }
    let (w, h) = (width as usize, height as usize);
    let payload = &bytes[pos..];
    if payload.len() < w * h {
        return Err(malformed("payload shorter than width*height"));
    }
    let data = payload[..w * h].iter().map(|&b| f64::from(b)).collect();
    Ok(Tensor::from_vec(&[h, w], data).expect("payload sized above"))
}

/// Encodes an `[H, W]` tensor as P5 bytes. Values are rounded half away from
/// zero and clamped to [0, 255].
pub fn write_pgm(out: &mut impl Write, image: &Tensor) -> std::io::Result<()> {
    let s = image.shape();
    assert_eq!(s.len(), 2, "PGM images are [H, W]");
    write!(out, "P5\n{} {}\n255\n", s[1], s[0])?;
    let payload: Vec<u8> = image
        .data()
        .iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    out.write_all(&payload)
}

pub fn save_pgm(path: impl AsRef<Path>, image: &Tensor) -> Result<(), DataError> {
    let path = path.as_ref();
    let mut buf = Vec::with_capacity(image.len() + 16);
    write_pgm(&mut buf, image).expect("in-memory write");
    fs::write(path, buf).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn payload_size_and_rounding() {
        let img = Tensor::from_vec(&[2, 3], vec![0.0, 1.5, 2.49, 254.5, 300.0, -3.0]).unwrap();
        let mut buf = Vec::new();
        write_pgm(&mut buf, &img).unwrap();
        let header = b"P5\n3 2\n255\n";
        assert_eq!(&buf[..header.len()], header);
        assert_eq!(&buf[header.len()..], &[0, 2, 2, 255, 255, 0]);
    }

    #[test]
    fn comments_in_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        fs::write(&path, b"P5\n# made by hand\n2 1\n255\n\x07\x09").unwrap();
        assert_eq!(load_pgm(&path).unwrap().data(), &[7.0, 9.0]);
    }

    #[test]
    fn rejects_16_bit() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.pgm");
        fs::write(&path, b"P5\n1 1\n65535\n\x00\x01").unwrap();
        assert!(matches!(load_pgm(&path), Err(DataError::UnsupportedMaxval { maxval: 65535, .. })));
        fs::write(&path, b"P2\n1 1\n255\n0").unwrap();
        assert!(matches!(load_pgm(&path), Err(DataError::MalformedHeader { .. })));
    }
}
