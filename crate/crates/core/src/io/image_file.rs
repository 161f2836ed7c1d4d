use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ExtendedColorType, ImageFormat};

use super::pnm::{self, PnmError, PnmImage};
use crate::error::{Error, Result};
use crate::frame::{Frame, Label, LabelMask};
use crate::scalar::Real;

/// Decodes a PGM/PPM, PNG, BMP or JPEG file into a frame of 8-bit intensities.
///
/// The format is chosen from the file contents, not the extension.
pub fn read_frame<T: Real>(path: impl AsRef<Path>) -> Result<Frame<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (width, height, channels, data) = decode_bytes(path, &bytes)?;
    Frame::from_u8(width, height, channels, &data).map_err(|e| Error::decode(path, e.to_string()))
}

fn decode_bytes(path: &Path, bytes: &[u8]) -> Result<(usize, usize, usize, Vec<u8>)> {
    if pnm::is_pnm(bytes) {
        return match pnm::decode(bytes) {
            Ok(img) => Ok((img.width, img.height, img.channels, img.data)),
            Err(PnmError::Invalid(reason)) => Err(Error::decode(path, reason)),
            Err(PnmError::Unsupported(reason)) => Err(Error::UnsupportedFormat(format!("{}: {reason}", path.display()))),
        };
    }
    let img = image::load_from_memory(bytes).map_err(|e| Error::decode(path, e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    match img {
        DynamicImage::ImageLuma8(buf) => Ok((w, h, 1, buf.into_raw())),
        DynamicImage::ImageLumaA8(_) => Ok((w, h, 1, img.to_luma8().into_raw())),
        DynamicImage::ImageRgb8(buf) => Ok((w, h, 3, buf.into_raw())),
        DynamicImage::ImageRgba8(_) => Ok((w, h, 3, img.to_rgb8().into_raw())),
        other => Err(Error::UnsupportedFormat(format!(
            "{}: {:?} samples (8-bit gray or RGB expected)",
            path.display(),
            other.color()
        ))),
    }
}

enum OutputKind {
    Pnm,
    Png,
}

fn output_kind(path: &Path) -> Result<OutputKind> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    match ext.as_str() {
        "pgm" | "ppm" | "pnm" => Ok(OutputKind::Pnm),
        "png" => Ok(OutputKind::Png),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: cannot write '.{ext}' (use .pgm, .ppm or .png)",
            path.display()
        ))),
    }
}

/// Writes 8-bit samples as PNM or PNG depending on the extension.
pub fn write_u8(path: &Path, width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<()> {
    let bytes = match output_kind(path)? {
        OutputKind::Pnm => pnm::encode(&PnmImage {
            width,
            height,
            channels,
            data,
        })?,
        OutputKind::Png => {
            let color = if channels == 1 {
                ExtendedColorType::L8
            } else {
                ExtendedColorType::Rgb8
            };
            let mut out = Cursor::new(Vec::new());
            image::write_buffer_with_format(&mut out, &data, width as u32, height as u32, color, ImageFormat::Png)
                .map_err(|e| Error::decode(path, e.to_string()))?;
            out.into_inner()
        }
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes a frame rounded and clamped to 8 bits.
pub fn write_frame<T: Real>(frame: &Frame<T>, path: impl AsRef<Path>) -> Result<()> {
    write_u8(
        path.as_ref(),
        frame.width(),
        frame.height(),
        frame.channels(),
        frame.to_u8(),
    )
}

/// Foreground → 255, background → 0, single channel.
pub fn write_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let data = mask
        .labels()
        .iter()
        .map(|l| if l.is_foreground() { 255 } else { 0 })
        .collect();
    write_u8(path.as_ref(), mask.width(), mask.height(), 1, data)
}

/// Reads a binary mask; any nonzero gray level is foreground.
pub fn read_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    let frame: Frame<f32> = read_frame(path)?;
    if frame.channels() != 1 {
        return Err(Error::decode(path, "masks must be single-channel"));
    }
    let labels = frame
        .samples()
        .iter()
        .map(|&s| if s > 0.0 { Label::Foreground } else { Label::Background })
        .collect();
    LabelMask::new(frame.width(), frame.height(), labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_bytes_are_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.pgm");
        let labels = (0..9)
            .map(|i| if i % 2 == 0 { Label::Background } else { Label::Foreground })
            .collect();
        write_mask(&LabelMask::new(3, 3, labels).unwrap(), &path).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..11], b"P5\n3 3\n255\n");
        assert_eq!(&bytes[11..], &[0, 255, 0, 255, 0, 255, 0, 255, 0]);

        write_mask(&LabelMask::background(3, 3).unwrap(), &path).unwrap();
        assert_eq!(&fs::read(&path).unwrap()[11..], &[0u8; 9]);
    }

    #[test]
    fn png_mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.png");
        let labels = (0..20)
            .map(|i| if i % 3 == 0 { Label::Foreground } else { Label::Background })
            .collect();
        let mask = LabelMask::new(5, 4, labels).unwrap();
        write_mask(&mask, &path).unwrap();
        assert_eq!(read_mask(&path).unwrap(), mask);
    }

    #[test]
    fn unknown_extension_rejected() {
        let f = Frame::<f64>::filled(1, 1, 1, 0.0).unwrap();
        assert!(matches!(write_frame(&f, "/tmp/x.tiff"), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn decode_error_names_path() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.pgm");
        fs::write(&path, b"P5\n2 2\n255\n\x00").unwrap();
        let err = read_frame::<f64>(&path).unwrap_err();
        assert!(err.to_string().contains("bad.pgm"), "{err}");
        let path = dir.path().join("deep.ppm");
        fs::write(&path, b"P6\n1 1\n1023\n\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(read_frame::<f64>(&path), Err(Error::UnsupportedFormat(_))));
        assert!(matches!(read_frame::<f64>(dir.path().join("missing.pgm")), Err(Error::Io { .. })));
    }
}
