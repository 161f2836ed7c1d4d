//! Binary PGM (P5) and PPM (P6) with maxval 255.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PnmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn is_pnm(bytes: &[u8]) -> bool {
    bytes.len() >= 2 && bytes[0] == b'P' && matches!(bytes[1], b'1'..=b'7')
}

struct Header<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Header<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, String> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("missing {what} in header"));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| format!("{what} out of range"))
    }
}

/// Parses a P5/P6 image. The error is a reason string; callers attach the
/// path.
pub fn decode(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(PnmError::Invalid("not a PNM file".into()));
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        other => {
            return Err(PnmError::Unsupported(format!(
                "PNM variant P{} (only binary P5/P6 are read)",
                other as char
            )))
        }
    };
    let mut h = Header { bytes, pos: 2 };
    let width = h.number("width").map_err(PnmError::Invalid)?;
    let height = h.number("height").map_err(PnmError::Invalid)?;
    let maxval = h.number("maxval").map_err(PnmError::Invalid)?;
    if width == 0 || height == 0 {
        return Err(PnmError::Invalid(format!("empty image {width}x{height}")));
    }
    if maxval != 255 {
        return Err(PnmError::Unsupported(format!("maxval {maxval} (only 255 is supported)")));
    }
    match bytes.get(h.pos) {
        Some(c) if c.is_ascii_whitespace() => h.pos += 1,
        _ => return Err(PnmError::Invalid("header not terminated by whitespace".into())),
    }
    let need = width * height * channels;
    let body = &bytes[h.pos..];
    if body.len() < need {
        return Err(PnmError::Invalid(format!(
            "truncated raster: {} of {need} bytes",
            body.len()
        )));
    }
    Ok(PnmImage {
        width,
        height,
        channels,
        data: body[..need].to_vec(),
    })
}

#[derive(Debug)]
pub enum PnmError {
    Invalid(String),
    Unsupported(String),
}

pub fn encode(img: &PnmImage) -> Result<Vec<u8>> {
    let magic = match img.channels {
        1 => "P5",
        3 => "P6",
        c => return Err(Error::InvalidInput(format!("PNM holds 1 or 3 channels, not {c}"))),
    };
    if img.data.len() != img.width * img.height * img.channels {
        return Err(Error::InvalidInput("raster size does not match dimensions".into()));
    }
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.data);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decodes_p5_passthrough() {
        let mut bytes = b"P5\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 128, 255, 7]);
        let img = decode(&bytes).unwrap();
        assert_eq!((img.width, img.height, img.channels), (2, 2, 1));
        assert_eq!(img.data, vec![0, 128, 255, 7]);
    }

    #[test]
    fn tolerates_comments() {
        let mut bytes = b"P6 # made by hand\n1 # w\n1\n255 ".to_vec();
        bytes.extend_from_slice(&[1, 2, 3]);
        let img = decode(&bytes).unwrap();
        assert_eq!(img.data, vec![1, 2, 3]);
    }

    #[test]
    fn rejects_other_maxval() {
        let mut bytes = b"P6\n1 1\n65535\n".to_vec();
        bytes.extend_from_slice(&[0; 6]);
        assert!(matches!(decode(&bytes), Err(PnmError::Unsupported(_))));
        let bytes = b"P6\n1 1\n15\n\x01\x02\x03".to_vec();
        assert!(matches!(decode(&bytes), Err(PnmError::Unsupported(_))));
    }

    #[test]
    fn rejects_truncation_and_ascii_variants() {
        assert!(matches!(decode(b"P5\n2 2\n255\n\x00"), Err(PnmError::Invalid(_))));
        assert!(matches!(decode(b"P2\n1 1\n255\n0"), Err(PnmError::Unsupported(_))));
        assert!(matches!(decode(b"P5\n2"), Err(PnmError::Invalid(_))));
    }

    #[test]
    fn encode_then_decode() {
        let img = PnmImage {
            width: 3,
            height: 1,
            channels: 3,
            data: (0..9).collect(),
        };
        assert_eq!(decode(&encode(&img).unwrap()).unwrap(), img);
    }
}
