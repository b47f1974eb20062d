//! Encryption-quality metrics: signal-to-noise ratio, byte histograms,
//! neighbouring-pixel correlation and the key-sensitivity difference ratio.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::bmp::BmpImage;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("inputs differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    EmptyInput,
    #[error("signals are identical, SNR denominator is zero")]
    IdenticalSignals,
    #[error("image must be at least 2x2, got {width}x{height}")]
    DegenerateImage { width: usize, height: usize },
    #[error("correlation needs at least 2 pairs, got {0}")]
    TooFewPairs(usize),
    #[error("one series is constant, correlation undefined")]
    ZeroVariance,
}

/// Ratio of encrypted-signal energy to the energy of the difference,
/// `Σ E² / Σ (E − S)²`.
///
/// No logarithm is taken. Both sums are exact: each term is at most
/// 255² < 2¹⁶, so a `u64` accumulator cannot overflow below 2⁴⁸ bytes of
/// input. The single division at the end is the only rounding step.
pub fn snr(source: &[u8], encrypted: &[u8]) -> Result<f64, AnalysisError> {
    let (num, den) = snr_terms(source, encrypted)?;
    if den == 0 {
        return Err(AnalysisError::IdenticalSignals);
    }
    Ok(num as f64 / den as f64)
}

/// Numerator and denominator of [`snr`] as exact integers.
pub fn snr_terms(source: &[u8], encrypted: &[u8]) -> Result<(u64, u64), AnalysisError> {
    if source.len() != encrypted.len() {
        return Err(AnalysisError::LengthMismatch(source.len(), encrypted.len()));
    }
    if source.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    Ok(source
        .iter()
        .zip(encrypted)
        .fold((0u64, 0u64), |(num, den), (&s, &e)| {
            let d = u64::from(s.abs_diff(e));
            (num + u64::from(e) * u64::from(e), den + d * d)
        }))
}

pub type Histogram = [u64; 256];

pub fn histogram(data: &[u8]) -> Histogram {
    let mut counts = [0u64; 256];
    for &b in data {
        counts[b as usize] += 1;
    }
    counts
}

/// `value,count` lines for 0..=255.
pub fn histogram_csv(counts: &Histogram) -> String {
    let mut out = String::with_capacity(256 * 8);
    for (value, count) in counts.iter().enumerate() {
        let _ = writeln!(out, "{value},{count}");
    }
    out
}

pub fn histogram_l1(a: &Histogram, b: &Histogram) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Horizontal,
    Vertical,
    Diagonal,
}

impl Direction {
    pub const ALL: [Direction; 3] = [
        Direction::Horizontal,
        Direction::Vertical,
        Direction::Diagonal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Direction::Horizontal => "horizontal",
            Direction::Vertical => "vertical",
            Direction::Diagonal => "diagonal",
        }
    }

    fn offset(self) -> (usize, usize) {
        match self {
            Direction::Horizontal => (0, 1),
            Direction::Vertical => (1, 0),
            Direction::Diagonal => (1, 1),
        }
    }
}

/// Single-channel image, row-major, top row first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// # Panics
    /// If `pixels.len() != width * height`.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel count must equal width * height"
        );
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == width), "ragged rows");
        GrayImage::new(width, rows.len(), rows.concat())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

impl From<&BmpImage> for GrayImage {
    /// `floor((R + G + B) / 3)` per pixel.
    fn from(img: &BmpImage) -> Self {
        let pixels = img
            .pixels()
            .iter()
            .map(|&[r, g, b]| ((u16::from(r) + u16::from(g) + u16::from(b)) / 3) as u8)
            .collect();
        GrayImage::new(img.width() as usize, img.height() as usize, pixels)
    }
}

/// Every pair of a pixel and its right / lower / lower-right neighbour.
pub fn neighbor_pairs(
    image: &GrayImage,
    direction: Direction,
) -> Result<Vec<(u8, u8)>, AnalysisError> {
    if image.width < 2 || image.height < 2 {
        return Err(AnalysisError::DegenerateImage {
            width: image.width,
            height: image.height,
        });
    }
    let (dr, dc) = direction.offset();
    let mut pairs = Vec::with_capacity((image.height - dr) * (image.width - dc));
    for r in 0..image.height - dr {
        for c in 0..image.width - dc {
            pairs.push((image.get(r, c), image.get(r + dr, c + dc)));
        }
    }
    Ok(pairs)
}

/// Pearson correlation coefficient.
///
/// Uses the centred two-pass form so that large offsets don't cancel.
pub fn correlation<T>(pairs: &[(T, T)]) -> Result<f64, AnalysisError>
where
    T: Copy + Into<f64>,
{
    if pairs.len() < 2 {
        return Err(AnalysisError::TooFewPairs(pairs.len()));
    }
    let n = pairs.len() as f64;
    let (sx, sy) = pairs.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| {
        (sx + x.into(), sy + y.into())
    });
    let (mean_x, mean_y) = (sx / n, sy / n);

    let (mut cov, mut var_x, mut var_y) = (0.0f64, 0.0f64, 0.0f64);
    for &(x, y) in pairs {
        let dx = x.into() - mean_x;
        let dy = y.into() - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == 0.0 || var_y == 0.0 {
        return Err(AnalysisError::ZeroVariance);
    }
    Ok((cov / (var_x * var_y).sqrt()).clamp(-1.0, 1.0))
}

pub fn image_correlation(image: &GrayImage, direction: Direction) -> Result<f64, AnalysisError> {
    correlation(&neighbor_pairs(image, direction)?)
}

/// Fraction of positions at which the two buffers differ.
pub fn diff_ratio(a: &[u8], b: &[u8]) -> Result<f64, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let differing = a.iter().zip(b).filter(|(x, y)| x != y).count();
    Ok(differing as f64 / a.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub snr: f64,
    pub histogram_source: Histogram,
    pub histogram_encrypted: Histogram,
    /// Neighbour correlation of the encrypted image. `None` where
    /// undefined (constant image) and empty for non-image inputs.
    pub correlation: BTreeMap<Direction, Option<f64>>,
    /// Same for the source image.
    pub source_correlation: BTreeMap<Direction, Option<f64>>,
    pub diff_ratio: f64,
}

impl AnalysisReport {
    /// Metrics over two arbitrary byte buffers; no correlations.
    pub fn from_bytes(source: &[u8], encrypted: &[u8]) -> Result<Self, AnalysisError> {
        Ok(AnalysisReport {
            snr: snr(source, encrypted)?,
            histogram_source: histogram(source),
            histogram_encrypted: histogram(encrypted),
            correlation: BTreeMap::new(),
            source_correlation: BTreeMap::new(),
            diff_ratio: diff_ratio(source, encrypted)?,
        })
    }

    /// Metrics over the pixel bytes of two same-sized images, plus
    /// neighbour correlations of both.
    pub fn from_images(source: &BmpImage, encrypted: &BmpImage) -> Result<Self, AnalysisError> {
        let src_bytes = source.pixel_bytes();
        let enc_bytes = encrypted.pixel_bytes();
        let mut report = AnalysisReport::from_bytes(&src_bytes, &enc_bytes)?;
        if (source.width(), source.height()) != (encrypted.width(), encrypted.height()) {
            return Err(AnalysisError::LengthMismatch(
                src_bytes.len(),
                enc_bytes.len(),
            ));
        }
        report.correlation = all_directions(&GrayImage::from(encrypted))?;
        report.source_correlation = all_directions(&GrayImage::from(source))?;
        Ok(report)
    }

    /// Flat JSON object with fixed six-decimal numbers and stable field
    /// order. Undefined correlations are `null`.
    pub fn to_report_text(&self) -> String {
        self.to_string()
    }
}

fn all_directions(image: &GrayImage) -> Result<BTreeMap<Direction, Option<f64>>, AnalysisError> {
    Direction::ALL
        .iter()
        .map(|&d| match image_correlation(image, d) {
            Ok(r) => Ok((d, Some(r))),
            Err(AnalysisError::ZeroVariance) => Ok((d, None)),
            Err(e) => Err(e),
        })
        .collect()
}

impl fmt::Display for AnalysisReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let num = |v: Option<f64>| match v {
            Some(v) => format!("{v:.6}"),
            None => "null".to_string(),
        };
        let corr = |map: &BTreeMap<Direction, Option<f64>>, d| num(map.get(&d).copied().flatten());

        let mut fields: Vec<(String, String)> = vec![
            ("snr".into(), num(Some(self.snr))),
            ("snr_unit".into(), "\"db\"".into()),
        ];
        for d in Direction::ALL {
            fields.push((format!("corr_{}", d.name()), corr(&self.correlation, d)));
        }
        for d in Direction::ALL {
            fields.push((
                format!("source_corr_{}", d.name()),
                corr(&self.source_correlation, d),
            ));
        }
        fields.push(("diff_ratio".into(), num(Some(self.diff_ratio))));

        writeln!(f, "{{")?;
        let last = fields.len() - 1;
        for (i, (k, v)) in fields.iter().enumerate() {
            let comma = if i == last { "" } else { "," };
            writeln!(f, "  \"{k}\": {v}{comma}")?;
        }
        writeln!(f, "}}")
    }
}
