//! Image loading and channel extraction.
//!
//! Supported inputs are the four Netpbm graymap/pixmap variants (`P2`, `P3`,
//! `P5`, `P6`, maxval 255 only) and a plain CSV matrix of grayscale integers.
//! Channels are stored scaled by three so that the grayscale channel, the
//! unweighted mean of R, G and B, stays an exact integer.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest value of a scaled channel (`3 * 255`).
pub const SCALED_MAX: u16 = 765;

/// Scale factor between stored channel values and 8-bit color values.
pub const SCALE: u16 = 3;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header at byte {offset}: {msg}")]
    Header { offset: usize, msg: String },
    #[error("unsupported maxval {maxval} at byte {offset}: only 255 is accepted")]
    UnsupportedMaxval { maxval: u64, offset: usize },
    #[error("truncated pixel data at byte {offset}: expected {expected} samples, found {found}")]
    Truncated {
        offset: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid sample at byte {offset}: {msg}")]
    Sample { offset: usize, msg: String },
    #[error("zero-sized image ({rows}x{cols}) at byte {offset}")]
    ZeroSized { rows: usize, cols: usize, offset: usize },
    #[error("pixel buffer holds {found} pixels, expected {rows}x{cols}")]
    Dimensions { rows: usize, cols: usize, found: usize },
    #[error("image has color pixels and cannot be encoded as {0}")]
    NotGrayscale(ImageFormat),
    #[error("unknown image format {0:?}")]
    UnknownFormat(String),
}

pub type Result<T, E = ImageError> = std::result::Result<T, E>;

/// An 8-bit RGB raster in row-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RgbImage {
    rows: usize,
    cols: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(rows: usize, cols: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(ImageError::ZeroSized { rows, cols, offset: 0 });
        }
        if pixels.len() != rows * cols {
            return Err(ImageError::Dimensions {
                rows,
                cols,
                found: pixels.len(),
            });
        }
        Ok(Self { rows, cols, pixels })
    }

    /// Promotes a grayscale raster to RGB with `r = g = b`.
    pub fn from_gray(rows: usize, cols: usize, gray: &[u8]) -> Result<Self> {
        Self::new(rows, cols, gray.iter().map(|&v| [v, v, v]).collect())
    }

    /// Builds an image by evaluating `f(row, col)` for every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                pixels.push(f(r, c));
            }
        }
        Self::new(rows, cols, pixels)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        self.pixels[row * self.cols + col]
    }

    pub fn is_grayscale(&self) -> bool {
        self.pixels.iter().all(|&[r, g, b]| r == g && g == b)
    }
}

/// One of the four color channels used for filtrations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Red,
    Green,
    Blue,
    Gray,
}

impl Channel {
    /// Channels in feature-vector order.
    pub const ALL: [Channel; 4] = [Channel::Red, Channel::Green, Channel::Blue, Channel::Gray];

    pub fn name(self) -> &'static str {
        match self {
            Channel::Red => "red",
            Channel::Green => "green",
            Channel::Blue => "blue",
            Channel::Gray => "gray",
        }
    }

    /// Position of the channel in [`Channel::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Channel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "red" | "r" => Ok(Channel::Red),
            "green" | "g" => Ok(Channel::Green),
            "blue" | "b" => Ok(Channel::Blue),
            "gray" | "grey" | "grayscale" => Ok(Channel::Gray),
            other => Err(format!("unknown channel {other:?} (expected red, green, blue or gray)")),
        }
    }
}

/// A single channel in scaled integer units: `3 * value` for R/G/B and
/// `r + g + b` for gray. All values lie in `0..=765`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelMatrix {
    rows: usize,
    cols: usize,
    values: Vec<u16>,
}

impl ChannelMatrix {
    /// Wraps already-scaled values. Fails if any value exceeds 765.
    pub fn from_scaled(rows: usize, cols: usize, values: Vec<u16>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(ImageError::ZeroSized { rows, cols, offset: 0 });
        }
        if values.len() != rows * cols {
            return Err(ImageError::Dimensions {
                rows,
                cols,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|&v| v > SCALED_MAX) {
            return Err(ImageError::Sample {
                offset: pos,
                msg: format!("scaled value {} exceeds {SCALED_MAX}", values[pos]),
            });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> &[u16] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.values[row * self.cols + col]
    }
}

pub fn extract_channel(img: &RgbImage, channel: Channel) -> ChannelMatrix {
    let values = img
        .pixels
        .iter()
        .map(|&[r, g, b]| match channel {
            Channel::Red => SCALE * r as u16,
            Channel::Green => SCALE * g as u16,
            Channel::Blue => SCALE * b as u16,
            Channel::Gray => r as u16 + g as u16 + b as u16,
        })
        .collect();
    ChannelMatrix {
        rows: img.rows,
        cols: img.cols,
        values,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ImageFormat {
    PgmAscii,
    PgmBinary,
    PpmAscii,
    PpmBinary,
    Csv,
}

impl ImageFormat {
    pub const ALL: [ImageFormat; 5] = [
        ImageFormat::PgmAscii,
        ImageFormat::PgmBinary,
        ImageFormat::PpmAscii,
        ImageFormat::PpmBinary,
        ImageFormat::Csv,
    ];

    fn magic(self) -> Option<&'static [u8; 2]> {
        match self {
            ImageFormat::PgmAscii => Some(b"P2"),
            ImageFormat::PpmAscii => Some(b"P3"),
            ImageFormat::PgmBinary => Some(b"P5"),
            ImageFormat::PpmBinary => Some(b"P6"),
            ImageFormat::Csv => None,
        }
    }

    fn is_color(self) -> bool {
        matches!(self, ImageFormat::PpmAscii | ImageFormat::PpmBinary)
    }

    fn is_plain(self) -> bool {
        matches!(self, ImageFormat::PgmAscii | ImageFormat::PpmAscii)
    }

    /// Guesses the format from the Netpbm magic number, falling back to the
    /// file extension for CSV.
    pub fn detect(path: &Path, bytes: &[u8]) -> Result<Self> {
        if bytes.len() >= 2 {
            for fmt in ImageFormat::ALL {
                if fmt.magic().is_some_and(|m| &bytes[..2] == m) {
                    return Ok(fmt);
                }
            }
        }
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("csv") | Some("txt") => Ok(ImageFormat::Csv),
            _ => Err(ImageError::UnknownFormat(path.display().to_string())),
        }
    }
}

impl fmt::Display for ImageFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ImageFormat::PgmAscii => "pgm-ascii",
            ImageFormat::PgmBinary => "pgm-binary",
            ImageFormat::PpmAscii => "ppm-ascii",
            ImageFormat::PpmBinary => "ppm-binary",
            ImageFormat::Csv => "csv",
        })
    }
}

impl FromStr for ImageFormat {
    type Err = ImageError;

    fn from_str(s: &str) -> Result<Self> {
        ImageFormat::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| ImageError::UnknownFormat(s.to_string()))
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|source| ImageError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_image(path: impl AsRef<Path>, format: ImageFormat) -> Result<RgbImage> {
    decode(&read_file(path.as_ref())?, format)
}

/// Loads an image, detecting its format from content and extension.
pub fn load_image_auto(path: impl AsRef<Path>) -> Result<RgbImage> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let format = ImageFormat::detect(path, &bytes)?;
    decode(&bytes, format)
}

pub fn decode(bytes: &[u8], format: ImageFormat) -> Result<RgbImage> {
    match format {
        ImageFormat::Csv => decode_csv(bytes),
        _ => decode_netpbm(bytes, format),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    /// Reads an unsigned decimal token. Returns `None` at end of input.
    fn number(&mut self) -> Result<Option<(u64, usize)>> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        if start >= self.bytes.len() {
            return Ok(None);
        }
        let mut value: u64 = 0;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            value = value
                .saturating_mul(10)
                .saturating_add((self.bytes[self.pos] - b'0') as u64);
            self.pos += 1;
        }
        if self.pos == start {
            return Err(ImageError::Header {
                offset: start,
                msg: format!("expected a decimal number, found byte 0x{:02x}", self.bytes[start]),
            });
        }
        if self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() && self.bytes[self.pos] != b'#' {
            return Err(ImageError::Header {
                offset: self.pos,
                msg: "number not followed by whitespace".into(),
            });
        }
        Ok(Some((value, start)))
    }

    fn header_field(&mut self, name: &str) -> Result<(u64, usize)> {
        let at = self.pos;
        self.number()?.ok_or_else(|| ImageError::Header {
            offset: at,
            msg: format!("missing {name}"),
        })
    }
}

fn decode_netpbm(bytes: &[u8], format: ImageFormat) -> Result<RgbImage> {
    let magic = format.magic().expect("netpbm format");
    if bytes.len() < 2 || &bytes[..2] != magic {
        return Err(ImageError::Header {
            offset: 0,
            msg: format!("expected magic {} for {format}", String::from_utf8_lossy(magic)),
        });
    }
    let mut cur = Cursor { bytes, pos: 2 };
    if cur.pos < bytes.len() && !bytes[cur.pos].is_ascii_whitespace() && bytes[cur.pos] != b'#' {
        return Err(ImageError::Header {
            offset: 2,
            msg: "magic number not followed by whitespace".into(),
        });
    }
    let (cols, cols_at) = cur.header_field("width")?;
    let (rows, _) = cur.header_field("height")?;
    let (maxval, maxval_at) = cur.header_field("maxval")?;
    if rows == 0 || cols == 0 {
        return Err(ImageError::ZeroSized {
            rows: rows as usize,
            cols: cols as usize,
            offset: cols_at,
        });
    }
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval {
            maxval,
            offset: maxval_at,
        });
    }
    let (rows, cols) = (rows as usize, cols as usize);
    let channels = if format.is_color() { 3 } else { 1 };
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| ImageError::Header {
            offset: cols_at,
            msg: "image dimensions overflow".into(),
        })?;

    let samples: Vec<u8> = if format.is_plain() {
        let mut samples = Vec::with_capacity(expected);
        while samples.len() < expected {
            match cur.number() {
                Ok(Some((v, at))) => {
                    if v > 255 {
                        return Err(ImageError::Sample {
                            offset: at,
                            msg: format!("sample {v} exceeds maxval 255"),
                        });
                    }
                    samples.push(v as u8);
                }
                Ok(None) => {
                    return Err(ImageError::Truncated {
                        offset: bytes.len(),
                        expected,
                        found: samples.len(),
                    })
                }
                Err(ImageError::Header { offset, msg }) => return Err(ImageError::Sample { offset, msg }),
                Err(e) => return Err(e),
            }
        }
        samples
    } else {
        // Exactly one whitespace byte separates the header from the raster.
        let start = cur.pos + 1;
        if cur.pos >= bytes.len() || !bytes[cur.pos].is_ascii_whitespace() {
            return Err(ImageError::Truncated {
                offset: cur.pos,
                expected,
                found: 0,
            });
        }
        let available = bytes.len().saturating_sub(start);
        if available < expected {
            return Err(ImageError::Truncated {
                offset: bytes.len(),
                expected,
                found: available,
            });
        }
        bytes[start..start + expected].to_vec()
    };

    let pixels = if channels == 3 {
        samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
    } else {
        samples.iter().map(|&v| [v, v, v]).collect()
    };
    RgbImage::new(rows, cols, pixels)
}

fn decode_csv(bytes: &[u8]) -> Result<RgbImage> {
    let mut gray = Vec::new();
    let mut cols: Option<usize> = None;
    let mut rows = 0;
    let mut offset = 0;
    for line in bytes.split_inclusive(|&b| b == b'\n') {
        let line_start = offset;
        offset += line.len();
        let text = std::str::from_utf8(line).map_err(|_| ImageError::Sample {
            offset: line_start,
            msg: "line is not valid UTF-8".into(),
        })?;
        if text.trim().is_empty() {
            continue;
        }
        let mut field_start = line_start;
        let mut count = 0;
        for field in text.trim_end_matches(['\r', '\n']).split(',') {
            let v: u16 = field.trim().parse().map_err(|_| ImageError::Sample {
                offset: field_start,
                msg: format!("{:?} is not an integer", field.trim()),
            })?;
            if v > 255 {
                return Err(ImageError::Sample {
                    offset: field_start,
                    msg: format!("value {v} exceeds 255"),
                });
            }
            gray.push(v as u8);
            field_start += field.len() + 1;
            count += 1;
        }
        match cols {
            None => cols = Some(count),
            Some(c) if c != count => {
                return Err(ImageError::Truncated {
                    offset: line_start,
                    expected: c,
                    found: count,
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    if rows == 0 || cols == 0 {
        return Err(ImageError::ZeroSized { rows, cols, offset: 0 });
    }
    RgbImage::from_gray(rows, cols, &gray)
}

/// Encodes an image. Grayscale formats require `r = g = b` at every pixel.
pub fn encode(img: &RgbImage, format: ImageFormat) -> Result<Vec<u8>> {
    if !format.is_color() && !img.is_grayscale() {
        return Err(ImageError::NotGrayscale(format));
    }
    let mut out = Vec::new();
    if format == ImageFormat::Csv {
        for row in img.pixels.chunks(img.cols) {
            let line: Vec<String> = row.iter().map(|p| p[0].to_string()).collect();
            out.extend_from_slice(line.join(",").as_bytes());
            out.push(b'\n');
        }
        return Ok(out);
    }
    let magic = format.magic().expect("netpbm format");
    out.extend_from_slice(magic);
    out.extend_from_slice(format!("\n{} {}\n255\n", img.cols, img.rows).as_bytes());
    let samples = |p: &[u8; 3]| -> Vec<u8> {
        if format.is_color() {
            p.to_vec()
        } else {
            vec![p[0]]
        }
    };
    if format.is_plain() {
        for row in img.pixels.chunks(img.cols) {
            let line: Vec<String> = row.iter().flat_map(samples).map(|v| v.to_string()).collect();
            out.extend_from_slice(line.join(" ").as_bytes());
            out.push(b'\n');
        }
    } else {
        out.extend(img.pixels.iter().flat_map(samples));
    }
    Ok(out)
}

pub fn save_image(img: &RgbImage, path: impl AsRef<Path>, format: ImageFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(img, format)?).map_err(|source| ImageError::Io {
        path: path.display().to_string(),
        source,
    })
}
