//! Versioned little-endian model format.
//!
//! ```text
//! "CP3M"  u32 version  u32 scalar_bytes
//! u32 width  u32 height  u32 channels
//! params: u32 k_supports  f64 pf_threshold  f64 gauss_c  f64 alpha
//!         u32 candidate_multiplier  f64 gamma_scale  f64 gamma_floor
//!         f64 range_margin_lo  f64 range_margin_hi  u8 range_check_enabled
//!         f64 cov_epsilon  u64 seed  u32 training_frames
//! per pixel, row-major:
//!   K × { u32 q_u  u32 q_v  C reals delta  C(C+1)/2 reals sigma (upper triangle, row-major) }
//!   C reals range_lo  C reals range_hi
//! ```
//!
//! Reals use the model's scalar width (`scalar_bytes`, 4 or 8).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::frame::Coord;
use crate::model::{packed_index, BackgroundModel, ModelParams, PairModel, PixelModel, MAX_CHANNELS};
use crate::scalar::Real;

pub const MAGIC: &[u8; 4] = b"CP3M";
pub const FORMAT_VERSION: u32 = 1;

pub fn save_model<T: Real>(model: &BackgroundModel<T>) -> Vec<u8> {
    let c = model.channels();
    let p = model.params();
    let per_pair = 8 + T::BYTES * (c + c * (c + 1) / 2);
    let mut out = Vec::with_capacity(128 + model.pixels().len() * (p.k_supports * per_pair + 2 * c * T::BYTES));
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, FORMAT_VERSION);
    put_u32(&mut out, T::BYTES as u32);
    put_u32(&mut out, model.width() as u32);
    put_u32(&mut out, model.height() as u32);
    put_u32(&mut out, c as u32);

    put_u32(&mut out, p.k_supports as u32);
    put_f64(&mut out, p.pf_threshold);
    put_f64(&mut out, p.gauss_c);
    put_f64(&mut out, p.alpha);
    put_u32(&mut out, p.candidate_multiplier as u32);
    put_f64(&mut out, p.gamma_scale);
    put_f64(&mut out, p.gamma_floor);
    put_f64(&mut out, p.range_margin_lo);
    put_f64(&mut out, p.range_margin_hi);
    out.push(p.range_check_enabled as u8);
    put_f64(&mut out, p.cov_epsilon);
    out.extend_from_slice(&p.seed.to_le_bytes());
    put_u32(&mut out, p.training_frames as u32);

    for pm in model.pixels() {
        for pair in &pm.pairs {
            put_u32(&mut out, pair.q.u);
            put_u32(&mut out, pair.q.v);
            for &d in &pair.delta[..c] {
                d.write_le(&mut out);
            }
            for i in 0..c {
                for j in i..c {
                    pair.sigma[packed_index(i, j)].write_le(&mut out);
                }
            }
        }
        for &x in pm.range_lo[..c].iter().chain(&pm.range_hi[..c]) {
            x.write_le(&mut out);
        }
    }
    out
}

fn put_u32(out: &mut Vec<u8>, x: u32) {
    out.extend_from_slice(&x.to_le_bytes());
}

fn put_f64(out: &mut Vec<u8>, x: f64) {
    out.extend_from_slice(&x.to_le_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::IncompatibleModel(format!("truncated model: need {n} bytes at offset {}", self.pos))
        })?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn real<T: Real>(&mut self) -> Result<T> {
        Ok(T::read_le(self.take(T::BYTES)?))
    }
}

/// Scalar width (4 or 8) recorded in a model file header.
pub fn model_scalar_bytes(bytes: &[u8]) -> Result<usize> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::IncompatibleModel("missing CP3M magic".into()));
    }
    let _version = r.u32()?;
    match r.u32()? {
        s @ (4 | 8) => Ok(s as usize),
        s => Err(Error::IncompatibleModel(format!("unsupported scalar width {s}"))),
    }
}

pub fn load_model<T: Real>(bytes: &[u8]) -> Result<BackgroundModel<T>> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(&MAGIC[..]) {
        return Err(Error::IncompatibleModel("missing CP3M magic".into()));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::IncompatibleModel(format!(
            "format version {version}, this build reads {FORMAT_VERSION}"
        )));
    }
    let scalar = r.u32()? as usize;
    if scalar != T::BYTES {
        return Err(Error::IncompatibleModel(format!(
            "model stores {scalar}-byte reals, loader expects {}",
            T::BYTES
        )));
    }
    let width = r.u32()? as usize;
    let height = r.u32()? as usize;
    let channels = r.u32()? as usize;
    if channels != 1 && channels != 3 {
        return Err(Error::IncompatibleModel(format!("unsupported channel count {channels}")));
    }
    let params = ModelParams {
        k_supports: r.u32()? as usize,
        pf_threshold: r.f64()?,
        gauss_c: r.f64()?,
        alpha: r.f64()?,
        candidate_multiplier: r.u32()? as usize,
        gamma_scale: r.f64()?,
        gamma_floor: r.f64()?,
        range_margin_lo: r.f64()?,
        range_margin_hi: r.f64()?,
        range_check_enabled: match r.u8()? {
            0 => false,
            1 => true,
            b => return Err(Error::IncompatibleModel(format!("bad range_check flag {b}"))),
        },
        cov_epsilon: r.f64()?,
        seed: r.u64()?,
        training_frames: r.u32()? as usize,
    };
    params
        .validate()
        .map_err(|e| Error::IncompatibleModel(format!("stored parameters invalid: {e}")))?;

    let c = channels;
    let per_pair = 8 + T::BYTES * (c + c * (c + 1) / 2);
    let per_pixel = params.k_supports * per_pair + 2 * c * T::BYTES;
    let expected = width
        .checked_mul(height)
        .and_then(|p| p.checked_mul(per_pixel))
        .ok_or_else(|| Error::IncompatibleModel("model dimensions overflow".into()))?;
    if bytes.len() - r.pos != expected {
        return Err(Error::IncompatibleModel(format!(
            "pixel records are {} bytes, expected {expected}",
            bytes.len() - r.pos
        )));
    }

    let mut pixels = Vec::with_capacity(width * height);
    for _ in 0..width * height {
        let mut pairs = Vec::with_capacity(params.k_supports);
        for _ in 0..params.k_supports {
            let u = r.u32()?;
            let v = r.u32()?;
            let mut pair = PairModel::new(Coord::new(u, v));
            for d in &mut pair.delta[..c] {
                *d = r.real()?;
            }
            for i in 0..c {
                for j in i..c {
                    pair.sigma[packed_index(i, j)] = r.real()?;
                }
            }
            pairs.push(pair);
        }
        let mut range_lo = [T::zero(); MAX_CHANNELS];
        let mut range_hi = [T::zero(); MAX_CHANNELS];
        for x in &mut range_lo[..c] {
            *x = r.real()?;
        }
        for x in &mut range_hi[..c] {
            *x = r.real()?;
        }
        pixels.push(PixelModel {
            pairs,
            range_lo,
            range_hi,
        });
    }
    BackgroundModel::new(width, height, channels, params, pixels).map_err(|e| Error::IncompatibleModel(e.to_string()))
}

pub fn save_model_file<T: Real>(model: &BackgroundModel<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, save_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model_file<T: Real>(path: impl AsRef<Path>) -> Result<BackgroundModel<T>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    load_model(&bytes)
}
