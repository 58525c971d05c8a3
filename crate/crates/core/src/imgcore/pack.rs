use crate::error::{Error, Result};
use crate::imgcore::{BinaryMask, GrayImage, Raster};

/// Weight applied to the mask before it is written to the green channel.
pub const MASK_WEIGHT: f64 = 0.5;

/// Green value that marks a fluid pixel: 255 × 0.5 rounded half away from zero.
pub const MASK_LEVEL: u8 = 128;

/// Green values above this decode as fluid.
pub const UNPACK_THRESHOLD: u8 = 63;

/// RGB training image: scan in red, weighted mask in green, blue unused.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedImage(Raster<[u8; 3]>);

impl PackedImage {
    /// Wraps an RGB raster, checking the packing invariants.
    pub fn from_rgb(rgb: Raster<[u8; 3]>) -> Result<Self> {
        if let Some(px) = rgb
            .data()
            .iter()
            .find(|px| px[2] != 0 || (px[1] != 0 && px[1] != MASK_LEVEL))
        {
            return Err(Error::Format(format!(
                "pixel {px:?} violates packing (green must be 0 or {MASK_LEVEL}, blue 0)"
            )));
        }
        Ok(Self(rgb))
    }

    pub fn rgb(&self) -> &Raster<[u8; 3]> {
        &self.0
    }

    pub fn into_rgb(self) -> Raster<[u8; 3]> {
        self.0
    }

    pub fn dims(&self) -> (usize, usize) {
        self.0.dims()
    }

    pub fn hflip(&self) -> Self {
        Self(self.0.hflip())
    }
}

fn mask_level() -> u8 {
    (255.0 * MASK_WEIGHT).round() as u8
}

pub fn pack(scan: &GrayImage, mask: &BinaryMask) -> Result<PackedImage> {
    scan.ensure_same_dims(mask)?;
    let level = mask_level();
    let data = scan
        .data()
        .iter()
        .zip(mask.data())
        .map(|(&s, &m)| [s, if m { level } else { 0 }, 0])
        .collect();
    Ok(PackedImage(Raster::new(scan.width(), scan.height(), data)?))
}

pub fn unpack(packed: &PackedImage) -> (GrayImage, BinaryMask) {
    unpack_rgb(&packed.0)
}

/// Decodes any RGB raster with the packing layout, tolerating lossy green values.
pub fn unpack_rgb(rgb: &Raster<[u8; 3]>) -> (GrayImage, BinaryMask) {
    (rgb.map(|px| px[0]), rgb.map(|px| px[1] > UNPACK_THRESHOLD))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn level_is_128() {
        assert_eq!(mask_level(), MASK_LEVEL);
    }

    #[test]
    fn channels() {
        let scan = GrayImage::new(3, 1, vec![200, 0, 17]).unwrap();
        let mask = BinaryMask::new(3, 1, vec![true, true, false]).unwrap();
        let p = pack(&scan, &mask).unwrap();
        assert_eq!(p.rgb().data(), &[[200, 128, 0], [0, 128, 0], [17, 0, 0]]);
    }

    #[test]
    fn empty_mask_gives_zero_green() {
        let scan = GrayImage::filled(4, 4, 90);
        let mask = BinaryMask::filled(4, 4, false);
        let p = pack(&scan, &mask).unwrap();
        assert!(p.rgb().data().iter().all(|px| px[1] == 0 && px[2] == 0));
    }

    #[test]
    fn threshold_decoding() {
        let rgb = Raster::new(4, 1, vec![[1, 128, 0], [2, 0, 0], [3, 64, 0], [4, 63, 0]]).unwrap();
        let (scan, mask) = unpack_rgb(&rgb);
        assert_eq!(scan.data(), &[1, 2, 3, 4]);
        assert_eq!(mask.data(), &[true, false, true, false]);
        assert!(PackedImage::from_rgb(rgb).is_err());
    }

    #[test]
    fn mismatched_dims() {
        let scan = GrayImage::filled(2, 2, 0);
        let mask = BinaryMask::filled(2, 3, false);
        assert!(matches!(pack(&scan, &mask), Err(Error::Shape { .. })));
    }

    proptest! {
        #[test]
        fn round_trip(w in 1usize..12, h in 1usize..12, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let scan = GrayImage::from_fn(w, h, |_, _| rng.random());
            let mask = BinaryMask::from_fn(w, h, |_, _| rng.random());
            let p = pack(&scan, &mask).unwrap();
            prop_assert!(PackedImage::from_rgb(p.rgb().clone()).is_ok());
            let (s, m) = unpack(&p);
            prop_assert_eq!(s, scan);
            prop_assert_eq!(m, mask);
        }
    }
}
