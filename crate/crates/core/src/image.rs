//! In-memory 24-bit color rasters and their lossless PNG encoding.

use std::borrow::Cow;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::palette::ColorCode;

/// Encoder configuration pinned for every raster this crate writes. Any
/// change alters byte lengths and therefore the trim threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSettings {
    pub format: Cow<'static, str>,
    pub color: Cow<'static, str>,
    pub filter: Cow<'static, str>,
    pub deflate_level: u8,
}

pub const ENCODER: EncoderSettings = EncoderSettings {
    format: Cow::Borrowed("png"),
    color: Cow::Borrowed("rgb8"),
    filter: Cow::Borrowed("paeth"),
    deflate_level: 6,
};

/// Row-major 24-bit raster, row 0 at the top.
#[derive(Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    pixels: Vec<ColorCode>,
}

impl std::fmt::Debug for ColorImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ColorImage({}x{})", self.width, self.height)
    }
}

impl ColorImage {
    pub fn filled(width: usize, height: usize, color: ColorCode) -> Self {
        ColorImage {
            width,
            height,
            pixels: vec![color; width * height],
        }
    }

    pub(crate) fn from_pixels(width: usize, height: usize, raw: Vec<u32>) -> Result<Self> {
        if raw.len() != width * height {
            return Err(Error::Range {
                what: "pixel buffer",
                detail: format!("{} values for {width}x{height}", raw.len()),
            });
        }
        Ok(ColorImage {
            width,
            height,
            pixels: raw
                .into_iter()
                .map(|v| ColorCode::from_raw(v & 0xFF_FFFF))
                .collect(),
        })
    }

    pub fn from_colors(width: usize, height: usize, pixels: Vec<ColorCode>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Range {
                what: "pixel buffer",
                detail: format!("{} values for {width}x{height}", pixels.len()),
            });
        }
        Ok(ColorImage {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[ColorCode] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [ColorCode] {
        &mut self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> ColorCode {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: ColorCode) {
        self.pixels[y * self.width + x] = c;
    }

    pub fn to_rgb_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(|c| c.rgb()).collect()
    }

    /// RGBA bytes with opaque alpha, the layout browser canvases expect.
    pub fn to_rgba_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .flat_map(|c| {
                let [r, g, b] = c.rgb();
                [r, g, b, 255]
            })
            .collect()
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.encode_png_into(&mut out)?;
        Ok(out)
    }

    fn encode_png_into<W: Write>(&self, w: W) -> Result<()> {
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_deflate_compression(png::DeflateCompression::Level(ENCODER.deflate_level));
        enc.set_filter(png::Filter::Paeth);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&self.to_rgb_bytes())?;
        writer.finish()?;
        Ok(())
    }

    pub fn write_png(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.encode_png_into(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        Self::decode_from(std::io::Cursor::new(bytes))
    }

    pub fn read_png(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::decode_from(BufReader::new(file))
    }

    fn decode_from<R: std::io::BufRead + std::io::Seek>(r: R) -> Result<Self> {
        let mut reader = png::Decoder::new(r).read_info()?;
        let info = reader.info();
        if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
            return Err(Error::Encoder(format!(
                "expected 8-bit RGB, found {:?} {:?}",
                info.color_type, info.bit_depth
            )));
        }
        let (width, height) = (info.width as usize, info.height as usize);
        let mut buf = vec![0; reader.output_buffer_size().unwrap_or(width * height * 3)];
        let frame = reader.next_frame(&mut buf)?;
        let pixels = buf[..frame.buffer_size()]
            .chunks_exact(3)
            .map(|p| ColorCode::from_rgb(p[0], p[1], p[2]))
            .collect();
        Ok(ColorImage {
            width,
            height,
            pixels,
        })
    }
}
