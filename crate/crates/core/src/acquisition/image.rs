use std::io::Cursor;
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{ExtendedColorType, ImageEncoder};
use rand::{Rng, RngExt};

use super::AcquisitionError;

/// Largest absolute per-channel offset drawn by [`rgb_shift`].
pub const RGB_SHIFT_LIMIT: f32 = 0.1;

/// Interleaved RGB image with channel values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    width: u32,
    height: u32,
    data: Vec<f32>,
}

impl FloatImage {
    pub fn new(width: u32, height: u32, data: Vec<f32>) -> Result<Self, AcquisitionError> {
        let expected = width as usize * height as usize * 3;
        if width == 0 || height == 0 || data.len() != expected {
            return Err(AcquisitionError::MalformedImage(format!(
                "{width}x{height} RGB image needs {expected} values, got {}",
                data.len()
            )));
        }
        Ok(FloatImage {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: u32, height: u32, rgb: [f32; 3]) -> Result<Self, AcquisitionError> {
        let n = width as usize * height as usize;
        let data = (0..n).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    pub fn open(path: &Path) -> Result<Self, AcquisitionError> {
        let img = image::open(path).map_err(|e| AcquisitionError::Image {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let rgb = img.to_rgb32f();
        let (width, height) = rgb.dimensions();
        Self::new(width, height, rgb.into_raw())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    /// 8-bit PNG encoding, rounding each channel to the nearest level.
    pub fn to_png(&self) -> Vec<u8> {
        let bytes: Vec<u8> = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        let mut out = Vec::new();
        PngEncoder::new(Cursor::new(&mut out))
            .write_image(&bytes, self.width, self.height, ExtendedColorType::Rgb8)
            .expect("in-memory PNG encoding");
        out
    }
}

/// Adds `shift[c]` to every pixel of channel `c`, clamping to `[0, 1]`.
pub fn apply_channel_shift(image: &FloatImage, shift: [f32; 3]) -> FloatImage {
    let data = image
        .data
        .chunks_exact(3)
        .flat_map(|px| [0, 1, 2].map(|c| (px[c] + shift[c]).clamp(0.0, 1.0)))
        .collect();
    FloatImage {
        width: image.width,
        height: image.height,
        data,
    }
}

/// RGBShift augmentation: one offset per channel, uniform in `[-0.1, 0.1]`.
pub fn rgb_shift<R: Rng + ?Sized>(image: &FloatImage, rng: &mut R) -> FloatImage {
    let shift = [0; 3].map(|_| rng.random_range(-RGB_SHIFT_LIMIT..=RGB_SHIFT_LIMIT));
    apply_channel_shift(image, shift)
}
