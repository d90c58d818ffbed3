//! Turns camera images into point sets: decode PNG/PPM, keep the pixels whose
//! color falls inside an HSV box, and express them in normalized image
//! coordinates with their gray value attached.

use std::path::Path;

use cfpose::PointSet;
use image::{ImageFormat, ImageReader, RgbImage};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),
    #[error("corrupt image file: {0}")]
    CorruptFile(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("no pixel passed the color threshold")]
    EmptySegmentation,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, IngestError>;

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl Raster {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize * 3 {
            return Err(IngestError::InvalidInput(format!(
                "{} bytes do not fill a {width}x{height} RGB raster",
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, rgb: [u8; 3]) -> Self {
        let data = rgb.iter().copied().cycle().take(width as usize * height as usize * 3).collect();
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = (y as usize * self.width as usize + x as usize) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> IngestError {
    IngestError::Io(format!("{}: {e}", path.display()))
}

/// Decodes a PNG or PPM file. The format is sniffed from the content.
pub fn load_image(path: &Path) -> Result<Raster> {
    let reader = ImageReader::open(path)
        .map_err(|e| io_err(path, e))?
        .with_guessed_format()
        .map_err(|e| io_err(path, e))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        Some(other) => return Err(IngestError::UnsupportedFormat(format!("{other:?}"))),
        None => {
            return Err(IngestError::UnsupportedFormat(format!(
                "{}: unrecognized content",
                path.display()
            )))
        }
    }
    let img = reader
        .decode()
        .map_err(|e| IngestError::CorruptFile(format!("{}: {e}", path.display())))?
        .to_rgb8();
    let (w, h) = img.dimensions();
    Raster::new(w, h, img.into_raw())
}

/// Writes PNG or binary PPM depending on the extension.
pub fn save_image(path: &Path, raster: &Raster) -> Result<()> {
    let format = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ref e) if e == "png" => ImageFormat::Png,
        Some(ref e) if e == "ppm" || e == "pnm" => ImageFormat::Pnm,
        other => return Err(IngestError::UnsupportedFormat(format!("extension {other:?}"))),
    };
    let img = RgbImage::from_raw(raster.width, raster.height, raster.data.clone())
        .expect("raster size checked on construction");
    img.save_with_format(path, format).map_err(|e| io_err(path, e))
}

/// Hexcone RGB → HSV: hue in degrees `[0, 360)`, saturation and value in `[0, 1]`.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    if max == 0.0 || delta == 0.0 {
        return (0.0, 0.0, v);
    }
    let s = delta / max;
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h.rem_euclid(360.0), s, v)
}

/// `0.299 R + 0.587 G + 0.114 B`, scaled to `[0, 1]`.
pub fn luma(rgb: [u8; 3]) -> f64 {
    (0.299 * rgb[0] as f64 + 0.587 * rgb[1] as f64 + 0.114 * rgb[2] as f64) / 255.0
}

/// Accepts hues in `[hue_lo, hue_hi]`, wrapping through 0 when `hue_lo > hue_hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HsvThreshold {
    pub hue_lo: f64,
    pub hue_hi: f64,
    pub sat_min: f64,
    pub val_min: f64,
}

impl Default for HsvThreshold {
    /// Saturated red.
    fn default() -> Self {
        Self {
            hue_lo: 340.0,
            hue_hi: 20.0,
            sat_min: 0.5,
            val_min: 0.3,
        }
    }
}

impl HsvThreshold {
    pub fn validate(&self) -> Result<()> {
        let hue_ok = |h: f64| (0.0..360.0).contains(&h);
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !hue_ok(self.hue_lo) || !hue_ok(self.hue_hi) || !unit(self.sat_min) || !unit(self.val_min) {
            return Err(IngestError::InvalidInput(
                "hue bounds must lie in [0, 360), saturation and value minima in [0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, h: f64, s: f64, v: f64) -> bool {
        let in_hue = if self.hue_lo <= self.hue_hi {
            h >= self.hue_lo && h <= self.hue_hi
        } else {
            h >= self.hue_lo || h <= self.hue_hi
        };
        in_hue && s >= self.sat_min && v >= self.val_min
    }

    pub fn accepts(&self, rgb: [u8; 3]) -> bool {
        let (h, s, v) = rgb_to_hsv(rgb);
        self.contains(h, s, v)
    }
}

/// Pinhole intrinsics used to normalize pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub focal_length: f64,
    /// Defaults to the image center.
    pub principal_point: Option<[f64; 2]>,
}

impl Intrinsics {
    pub fn new(focal_length: f64) -> Self {
        Self { focal_length, principal_point: None }
    }

    pub fn center(&self, raster: &Raster) -> [f64; 2] {
        self.principal_point
            .unwrap_or([raster.width as f64 / 2.0, raster.height as f64 / 2.0])
    }

    /// Pixel `(x, y)` → `((x − c_x)/f, (y − c_y)/f)`.
    pub fn normalize(&self, raster: &Raster, x: f64, y: f64) -> (f64, f64) {
        let c = self.center(raster);
        ((x - c[0]) / self.focal_length, (y - c[1]) / self.focal_length)
    }

    /// Inverse of [`Intrinsics::normalize`].
    pub fn to_pixel(&self, raster: &Raster, u: f64, v: f64) -> (f64, f64) {
        let c = self.center(raster);
        (u * self.focal_length + c[0], v * self.focal_length + c[1])
    }
}

/// Pixels passing `thr`, in row-major order, as homogeneous normalized points
/// with luma gray values.
pub fn segment_hsv(raster: &Raster, thr: &HsvThreshold, intrinsics: &Intrinsics) -> Result<PointSet<f64>> {
    thr.validate()?;
    if !(intrinsics.focal_length > 0.0 && intrinsics.focal_length.is_finite()) {
        return Err(IngestError::InvalidInput("focal length must be positive".into()));
    }
    let mut uv = Vec::new();
    let mut gray = Vec::new();
    for y in 0..raster.height {
        for x in 0..raster.width {
            let rgb = raster.pixel(x, y);
            if thr.accepts(rgb) {
                uv.push(intrinsics.normalize(raster, x as f64, y as f64));
                gray.push(luma(rgb));
            }
        }
    }
    if uv.is_empty() {
        return Err(IngestError::EmptySegmentation);
    }
    PointSet::planar(uv)
        .and_then(|s| s.with_gray(gray))
        .map_err(|e| IngestError::InvalidInput(e.to_string()))
}

/// Draws normalized points `(u, v)` into a `width × height` image, one pixel
/// each, rounding to the nearest pixel. Points outside the frame are skipped;
/// the number drawn is returned alongside the raster.
pub fn render_points(
    uv: impl IntoIterator<Item = (f64, f64)>,
    width: u32,
    height: u32,
    intrinsics: &Intrinsics,
    color: [u8; 3],
    background: [u8; 3],
) -> (Raster, usize) {
    let mut raster = Raster::filled(width, height, background);
    let mut drawn = 0;
    for (u, v) in uv {
        let (x, y) = intrinsics.to_pixel(&raster, u, v);
        let (x, y) = (x.round(), y.round());
        if x >= 0.0 && y >= 0.0 && x < width as f64 && y < height as f64 {
            raster.set_pixel(x as u32, y as u32, color);
            drawn += 1;
        }
    }
    (raster, drawn)
}
