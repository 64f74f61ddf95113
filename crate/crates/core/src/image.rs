//! 8-bit RGB raster and its file I/O.

use std::io::Cursor;
use std::path::Path;

use image::{ImageFormat, RgbImage};

use crate::error::{Error, Result};

pub const MIN_SIDE: u32 = 8;

/// Row-major interleaved RGB image, 8 bits per channel, at least 8x8.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Image {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::ImageTooSmall { width, height });
        }
        let expected = width as usize * height as usize * 3;
        if pixels.len() != expected {
            return Err(Error::BufferLength {
                width,
                height,
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Image { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb
            .iter()
            .copied()
            .cycle()
            .take(width as usize * height as usize * 3)
            .collect();
        Image::new(width, height, pixels)
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize * 3);
        for y in 0..height {
            for x in 0..width {
                pixels.extend_from_slice(&f(x, y));
            }
        }
        Image::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    fn offset(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> [u8; 3] {
        let i = self.offset(x, y);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    #[inline]
    pub fn put(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = self.offset(x, y);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn same_dimensions(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn to_rgb_image(&self) -> RgbImage {
        RgbImage::from_raw(self.width, self.height, self.pixels.clone()).expect("buffer length checked at construction")
    }

    pub fn from_rgb_image(img: RgbImage) -> Result<Self> {
        let (w, h) = img.dimensions();
        Image::new(w, h, img.into_raw())
    }

    /// Decodes PNG or JPEG bytes (format sniffed from the header).
    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, image::ImageError> {
        let dynamic = image::load_from_memory(bytes)?;
        let rgb = dynamic.to_rgb8();
        let (w, h) = rgb.dimensions();
        Image::new(w, h, rgb.into_raw()).map_err(|e| {
            image::ImageError::Decoding(image::error::DecodingError::new(
                image::error::ImageFormatHint::Unknown,
                e.to_string(),
            ))
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Image::decode(&bytes).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = Cursor::new(Vec::new());
        self.to_rgb_image()
            .write_to(&mut out, ImageFormat::Png)
            .expect("PNG encoding into memory cannot fail");
        out.into_inner()
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.encode_png()).map_err(|e| Error::io(path, e))
    }
}

/// Quantizes a value on the [0, 1] scale to 8 bits: scale by 255, round half
/// away from zero, clamp to [0, 255]. NaN maps to 0.
#[inline]
pub fn quantize(v: f32) -> u8 {
    let s = (v * 255.0).round();
    if s >= 255.0 {
        255
    } else if s > 0.0 {
        s as u8
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_images() {
        assert!(matches!(
            Image::filled(7, 8, [0, 0, 0]),
            Err(Error::ImageTooSmall { .. })
        ));
        assert!(Image::filled(8, 8, [0, 0, 0]).is_ok());
    }

    #[test]
    fn rejects_wrong_buffer_length() {
        assert!(matches!(Image::new(8, 8, vec![0; 10]), Err(Error::BufferLength { .. })));
    }

    #[test]
    fn quantize_rounds_half_away_and_clamps() {
        assert_eq!(quantize(0.5 / 255.0), 1);
        assert_eq!(quantize(0.49 / 255.0), 0);
        assert_eq!(quantize(-0.3), 0);
        assert_eq!(quantize(1.7), 255);
        assert_eq!(quantize(f32::NAN), 0);
        assert_eq!(quantize(128.0 / 255.0), 128);
    }

    #[test]
    fn png_round_trip_is_lossless() {
        let img = Image::from_fn(13, 9, |x, y| [x as u8 * 7, y as u8 * 11, (x ^ y) as u8]).unwrap();
        let back = Image::decode(&img.encode_png()).unwrap();
        assert_eq!(img, back);
    }
}
