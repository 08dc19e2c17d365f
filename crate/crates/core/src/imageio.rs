//! 8-bit raster images and their binary PNM (P5/P6) encoding.

use crate::error::{Error, PnmError, Result};

/// A single 8-bit channel in row-major order, top-left origin.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImagePlane {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!(
                "dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} plane needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }
}

/// Three planes (R, G, B) of identical dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    channels: [ImagePlane; 3],
}

impl RgbImage {
    pub fn new(red: ImagePlane, green: ImagePlane, blue: ImagePlane) -> Result<Self> {
        let dims = (red.width, red.height);
        if (green.width, green.height) != dims || (blue.width, blue.height) != dims {
            return Err(Error::InvalidImage(
                "RGB channels must share width and height".into(),
            ));
        }
        Ok(Self {
            channels: [red, green, blue],
        })
    }

    /// Builds an image from interleaved `RGBRGB...` samples.
    pub fn from_interleaved(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(Error::InvalidImage(format!(
                "{width}x{height} RGB image needs {} samples, got {}",
                3 * width * height,
                data.len()
            )));
        }
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for px in data.chunks_exact(3) {
            for (plane, &v) in planes.iter_mut().zip(px) {
                plane.push(v);
            }
        }
        let [r, g, b] = planes;
        Self::new(
            ImagePlane::new(width, height, r)?,
            ImagePlane::new(width, height, g)?,
            ImagePlane::new(width, height, b)?,
        )
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let [r, g, b] = &self.channels;
        r.pixels
            .iter()
            .zip(&g.pixels)
            .zip(&b.pixels)
            .flat_map(|((&r, &g), &b)| [r, g, b])
            .collect()
    }

    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    pub fn channels(&self) -> &[ImagePlane; 3] {
        &self.channels
    }

    pub fn channels_mut(&mut self) -> &mut [ImagePlane; 3] {
        &mut self.channels
    }
}

/// Either kind of carrier image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(ImagePlane),
    Rgb(RgbImage),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(p) => p.width(),
            Image::Rgb(img) => img.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(p) => p.height(),
            Image::Rgb(img) => img.height(),
        }
    }

    /// Channels in storage order (R, G, B for colour images).
    pub fn channels(&self) -> &[ImagePlane] {
        match self {
            Image::Gray(p) => std::slice::from_ref(p),
            Image::Rgb(img) => img.channels(),
        }
    }

    pub fn channels_mut(&mut self) -> &mut [ImagePlane] {
        match self {
            Image::Gray(p) => std::slice::from_mut(p),
            Image::Rgb(img) => img.channels_mut(),
        }
    }

    pub fn channel_count(&self) -> usize {
        self.channels().len()
    }

    /// Total number of samples across all channels.
    pub fn sample_count(&self) -> usize {
        self.width() * self.height() * self.channel_count()
    }
}

impl From<ImagePlane> for Image {
    fn from(p: ImagePlane) -> Self {
        Image::Gray(p)
    }
}

impl From<RgbImage> for Image {
    fn from(img: RgbImage) -> Self {
        Image::Rgb(img)
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl HeaderCursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u32, PnmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(PnmError::MalformedHeader(format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PnmError::MalformedHeader(format!("{what} out of range")))
    }
}

/// Decodes a binary P5 (grayscale) or P6 (RGB) image with maxval 255.
pub fn read_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(PnmError::MalformedHeader("missing P magic".into()).into());
    }
    let channels = match bytes[1] {
        b'5' => 1,
        b'6' => 3,
        b'1'..=b'4' | b'7' => {
            return Err(PnmError::UnsupportedMagic(format!("P{}", bytes[1] as char)).into())
        }
        _ => return Err(PnmError::MalformedHeader("unknown magic".into()).into()),
    };
    let mut cursor = HeaderCursor { bytes, pos: 2 };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PnmError::MalformedHeader("no separator after magic".into()).into());
    }
    let width = cursor.number("width")? as usize;
    let height = cursor.number("height")? as usize;
    let maxval = cursor.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(PnmError::MalformedHeader(format!("zero dimension {width}x{height}")).into());
    }
    if maxval != 255 {
        return Err(PnmError::UnsupportedMaxval(maxval).into());
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(cursor.pos) {
        Some(b) if b.is_ascii_whitespace() => cursor.pos += 1,
        _ => return Err(PnmError::MalformedHeader("no separator after maxval".into()).into()),
    }
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| PnmError::MalformedHeader("dimensions overflow".into()))?;
    let data = &bytes[cursor.pos..];
    if data.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: data.len(),
        }
        .into());
    }
    let data = &data[..expected];
    Ok(match channels {
        1 => Image::Gray(ImagePlane::new(width, height, data.to_vec())?),
        _ => Image::Rgb(RgbImage::from_interleaved(width, height, data)?),
    })
}

/// Encodes in canonical form: `P5|P6\n<w> <h>\n255\n` followed by raw samples.
pub fn write_pnm(image: &Image) -> Vec<u8> {
    let (magic, body) = match image {
        Image::Gray(p) => ("P5", p.pixels().to_vec()),
        Image::Rgb(img) => ("P6", img.to_interleaved()),
    };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(&body);
    out
}
