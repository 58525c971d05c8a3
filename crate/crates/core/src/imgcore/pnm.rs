//! Binary PGM (P5) and PPM (P6) with 8-bit samples.
//!
//! Masks are stored as PGM with 0 for background and 255 for fluid; on read any
//! sample of 128 or more counts as fluid.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage, Raster};

struct Header {
    magic: [u8; 2],
    width: usize,
    height: usize,
    body: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(Error::Format("not a PNM file".into()));
    }
    let magic = [bytes[0], bytes[1]];
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments between tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PNM header".into()));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Format("bad PNM header number".into()))?;
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::Format("missing whitespace after PNM header".into()));
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported maxval {maxval}, need 255")));
    }
    Ok(Header {
        magic,
        width,
        height,
        body: pos + 1,
    })
}

fn body<'a>(bytes: &'a [u8], header: &Header, channels: usize) -> Result<&'a [u8]> {
    let need = header.width * header.height * channels;
    let rest = &bytes[header.body..];
    if rest.len() < need {
        return Err(Error::Format(format!(
            "PNM payload truncated: {} of {} bytes",
            rest.len(),
            need
        )));
    }
    Ok(&rest[..need])
}

pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage> {
    let header = parse_header(bytes)?;
    if &header.magic != b"P5" {
        return Err(Error::Format("expected binary PGM (P5)".into()));
    }
    let data = body(bytes, &header, 1)?.to_vec();
    GrayImage::new(header.width, header.height, data)
}

pub fn decode_ppm(bytes: &[u8]) -> Result<Raster<[u8; 3]>> {
    let header = parse_header(bytes)?;
    if &header.magic != b"P6" {
        return Err(Error::Format("expected binary PPM (P6)".into()));
    }
    let data = body(bytes, &header, 3)?
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Raster::new(header.width, header.height, data)
}

pub fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}

pub fn encode_ppm(img: &Raster<[u8; 3]>) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().flatten());
    out
}

pub fn mask_to_gray(mask: &BinaryMask) -> GrayImage {
    mask.map(|m| if m { 255 } else { 0 })
}

pub fn gray_to_mask(img: &GrayImage) -> BinaryMask {
    img.map(|v| v >= 128)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<GrayImage> {
    decode_pgm(&read(path.as_ref())?)
}

pub fn read_mask(path: impl AsRef<Path>) -> Result<BinaryMask> {
    read_pgm(path).map(|g| gray_to_mask(&g))
}

pub fn read_ppm(path: impl AsRef<Path>) -> Result<Raster<[u8; 3]>> {
    decode_ppm(&read(path.as_ref())?)
}

pub fn write_pgm(path: impl AsRef<Path>, img: &GrayImage) -> Result<()> {
    write(path.as_ref(), &encode_pgm(img))
}

pub fn write_mask(path: impl AsRef<Path>, mask: &BinaryMask) -> Result<()> {
    write_pgm(path, &mask_to_gray(mask))
}

pub fn write_ppm(path: impl AsRef<Path>, img: &Raster<[u8; 3]>) -> Result<()> {
    write(path.as_ref(), &encode_ppm(img))
}
