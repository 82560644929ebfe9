//! The full color space palette: a 4096×4096 texture holding every 24-bit
//! RGB color exactly once.
//!
//! Texel `(x, y)` (row 0 at the top) carries the color whose packed value is
//! its row-major linear index `y * 4096 + x`, so conversion in either
//! direction is a shift and a mask.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ColorImage;

/// Side length of the palette texture in texels.
pub const TEXTURE_SIZE: u32 = 4096;
/// Number of texels in the palette, equal to the number of 24-bit colors.
pub const COLOR_COUNT: usize = 1 << 24;
/// The ignore color used when the mesh leaves it uncovered.
pub const DEFAULT_IGNORE: ColorCode = ColorCode(0x000FFF);

/// A packed 24-bit RGB color: red in bits 23–16, green 15–8, blue 7–0.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct ColorCode(u32);

impl ColorCode {
    pub fn new(value: u32) -> Result<Self> {
        if value < COLOR_COUNT as u32 {
            Ok(ColorCode(value))
        } else {
            Err(Error::Range {
                what: "color",
                detail: format!("{value:#x} exceeds 24 bits"),
            })
        }
    }

    /// Callers guarantee `value < 2^24`.
    #[inline]
    pub(crate) const fn from_raw(value: u32) -> Self {
        ColorCode(value)
    }

    #[inline]
    pub const fn from_rgb(r: u8, g: u8, b: u8) -> Self {
        ColorCode(((r as u32) << 16) | ((g as u32) << 8) | b as u32)
    }

    #[inline]
    pub const fn value(self) -> u32 {
        self.0
    }

    #[inline]
    pub const fn rgb(self) -> [u8; 3] {
        [(self.0 >> 16) as u8, (self.0 >> 8) as u8, self.0 as u8]
    }

    /// Parses `RRGGBB`, optionally prefixed by `#` or `0x`.
    pub fn parse_hex(text: &str) -> Result<Self> {
        let digits = text
            .trim()
            .trim_start_matches('#')
            .trim_start_matches("0x")
            .trim_start_matches("0X");
        let bad = || Error::Config(format!("not a 24-bit hex color: {text:?}"));
        if digits.is_empty() || digits.len() > 6 {
            return Err(bad());
        }
        u32::from_str_radix(digits, 16)
            .map_err(|_| bad())
            .and_then(ColorCode::new)
    }
}

impl fmt::Debug for ColorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ColorCode({:06X})", self.0)
    }
}

impl fmt::Display for ColorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:06X}", self.0)
    }
}

impl From<ColorCode> for String {
    fn from(c: ColorCode) -> String {
        c.to_string()
    }
}

impl TryFrom<String> for ColorCode {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        ColorCode::parse_hex(&s)
    }
}

/// A texel position in the palette texture; row 0 is the top row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TexelIndex {
    pub x: u32,
    pub y: u32,
}

impl TexelIndex {
    pub fn new(x: u32, y: u32) -> Result<Self> {
        let t = TexelIndex { x, y };
        t.check()?;
        Ok(t)
    }

    fn check(self) -> Result<()> {
        if self.x < TEXTURE_SIZE && self.y < TEXTURE_SIZE {
            Ok(())
        } else {
            Err(Error::Range {
                what: "texel",
                detail: format!(
                    "({}, {}) outside {TEXTURE_SIZE}x{TEXTURE_SIZE}",
                    self.x, self.y
                ),
            })
        }
    }

    #[inline]
    pub fn linear(self) -> usize {
        self.y as usize * TEXTURE_SIZE as usize + self.x as usize
    }

    #[inline]
    pub fn from_linear(index: usize) -> Self {
        debug_assert!(index < COLOR_COUNT);
        TexelIndex {
            x: (index % TEXTURE_SIZE as usize) as u32,
            y: (index / TEXTURE_SIZE as usize) as u32,
        }
    }
}

pub fn index_to_color(t: TexelIndex) -> Result<ColorCode> {
    t.check()?;
    Ok(ColorCode(t.linear() as u32))
}

pub fn color_to_index(c: ColorCode) -> TexelIndex {
    TexelIndex::from_linear(c.0 as usize)
}

/// Builds the 4096×4096 palette image.
pub fn generate_fcsp() -> ColorImage {
    let pixels = (0..COLOR_COUNT as u32).collect();
    ColorImage::from_pixels(TEXTURE_SIZE as usize, TEXTURE_SIZE as usize, pixels)
        .expect("palette dimensions are consistent")
}

pub fn write_fcsp(path: &Path) -> Result<()> {
    generate_fcsp().write_png(path)
}

/// Occupancy set over the whole 24-bit color space (2 MiB).
#[derive(Clone, PartialEq, Eq)]
pub struct ColorSet {
    words: Vec<u64>,
}

impl Default for ColorSet {
    fn default() -> Self {
        ColorSet::new()
    }
}

impl fmt::Debug for ColorSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ColorSet({} colors)", self.len())
    }
}

impl ColorSet {
    pub fn new() -> Self {
        ColorSet {
            words: vec![0; COLOR_COUNT / 64],
        }
    }

    pub fn full() -> Self {
        ColorSet {
            words: vec![u64::MAX; COLOR_COUNT / 64],
        }
    }

    /// Returns true if the color was not present before.
    #[inline]
    pub fn insert(&mut self, c: ColorCode) -> bool {
        let (w, b) = (c.0 as usize / 64, c.0 % 64);
        let fresh = self.words[w] & (1 << b) == 0;
        self.words[w] |= 1 << b;
        fresh
    }

    #[inline]
    pub fn remove(&mut self, c: ColorCode) {
        self.words[c.0 as usize / 64] &= !(1 << (c.0 % 64));
    }

    #[inline]
    pub fn contains(&self, c: ColorCode) -> bool {
        self.words[c.0 as usize / 64] & (1 << (c.0 % 64)) != 0
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Smallest color not in the set.
    pub fn first_absent(&self) -> Option<ColorCode> {
        self.words
            .iter()
            .enumerate()
            .find(|(_, &w)| w != u64::MAX)
            .map(|(i, &w)| ColorCode((i * 64) as u32 + (!w).trailing_zeros()))
    }
}

impl FromIterator<ColorCode> for ColorSet {
    fn from_iter<I: IntoIterator<Item = ColorCode>>(iter: I) -> Self {
        let mut set = ColorSet::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

/// Picks the background/occluder color: `000FFF` when the mesh does not
/// cover it, otherwise the smallest uncovered color.
pub fn select_ignore_color(covered: &ColorSet) -> Result<ColorCode> {
    if !covered.contains(DEFAULT_IGNORE) {
        return Ok(DEFAULT_IGNORE);
    }
    covered.first_absent().ok_or(Error::NoIgnoreColor)
}
