//! Uncompressed 24-bit BMP reading and writing.
//!
//! Only `BI_RGB` with one plane and 24 bits per pixel is handled. Rows are
//! stored bottom-up on disk unless the height is negative; in memory they
//! are always top row first, and pixels are exposed as `[R, G, B]`.

use thiserror::Error;

use crate::cipher::{decrypt, encrypt, CipherMode};
use crate::key::MacKey;

pub const FILE_HEADER_LEN: usize = 14;
pub const INFO_HEADER_LEN: usize = 40;
/// Pixel data offset of every file we write.
pub const HEADER_LEN: usize = FILE_HEADER_LEN + INFO_HEADER_LEN;

pub type Rgb = [u8; 3];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BmpError {
    #[error("not a BMP file (signature {0:02X?})")]
    BadSignature([u8; 2]),
    #[error("unsupported bit depth {0}, only 24-bit images are handled")]
    UnsupportedBitDepth(u16),
    #[error("unsupported compression {0}, only uncompressed images are handled")]
    UnsupportedCompression(u32),
    #[error("invalid header: {0}")]
    InvalidHeader(String),
    #[error("truncated: need {needed} bytes, have {available}")]
    Truncated { needed: u64, available: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BmpImage {
    width: u32,
    height: u32,
    pixel_data_offset: u32,
    pixels: Vec<Rgb>,
}

/// Bytes per stored row: `3 * width` rounded up to a multiple of 4.
pub fn row_stride(width: u32) -> usize {
    (width as usize * 3).div_ceil(4) * 4
}

fn le_u16(data: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([data[at], data[at + 1]])
}

fn le_u32(data: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(data[at..at + 4].try_into().unwrap())
}

impl BmpImage {
    /// # Panics
    /// If either dimension is zero or `pixels.len() != width * height`.
    pub fn new(width: u32, height: u32, pixels: Vec<Rgb>) -> Self {
        assert!(width > 0 && height > 0, "BMP dimensions must be positive");
        assert_eq!(
            pixels.len(),
            width as usize * height as usize,
            "pixel count must equal width * height"
        );
        BmpImage {
            width,
            height,
            pixel_data_offset: HEADER_LEN as u32,
            pixels,
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> Rgb) -> Self {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        BmpImage::new(width, height, pixels)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixel_data_offset(&self) -> u32 {
        self.pixel_data_offset
    }

    pub fn row_stride(&self) -> usize {
        row_stride(self.width)
    }

    /// Row-major, top row first.
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn pixel(&self, x: u32, y: u32) -> Rgb {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    /// Pixels flattened to `R, G, B, R, G, B, ...` without row padding.
    pub fn pixel_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }
}

pub fn parse_bmp(data: &[u8]) -> Result<BmpImage, BmpError> {
    let truncated = |needed: u64| BmpError::Truncated {
        needed,
        available: data.len(),
    };
    if data.len() < 2 {
        return Err(truncated(2));
    }
    if &data[..2] != b"BM" {
        return Err(BmpError::BadSignature([data[0], data[1]]));
    }
    if data.len() < FILE_HEADER_LEN + 4 {
        return Err(truncated((FILE_HEADER_LEN + 4) as u64));
    }
    let pixel_data_offset = le_u32(data, 10);
    let info_len = le_u32(data, FILE_HEADER_LEN);
    if (info_len as usize) < INFO_HEADER_LEN {
        // OS/2 BITMAPCOREHEADER and friends.
        return Err(BmpError::InvalidHeader(format!(
            "info header size {info_len}"
        )));
    }
    if data.len() < HEADER_LEN {
        return Err(truncated(HEADER_LEN as u64));
    }

    let width = le_u32(data, 18) as i32;
    let height = le_u32(data, 22) as i32;
    let planes = le_u16(data, 26);
    let bit_count = le_u16(data, 28);
    let compression = le_u32(data, 30);

    if bit_count != 24 {
        return Err(BmpError::UnsupportedBitDepth(bit_count));
    }
    if compression != 0 {
        return Err(BmpError::UnsupportedCompression(compression));
    }
    if planes != 1 {
        return Err(BmpError::InvalidHeader(format!("{planes} planes")));
    }
    if width <= 0 {
        return Err(BmpError::InvalidHeader(format!("width {width}")));
    }
    if height == 0 || height == i32::MIN {
        return Err(BmpError::InvalidHeader(format!("height {height}")));
    }
    if (pixel_data_offset as u64) < (FILE_HEADER_LEN as u64 + info_len as u64) {
        return Err(BmpError::InvalidHeader(format!(
            "pixel data offset {pixel_data_offset} overlaps headers"
        )));
    }

    let width = width as u32;
    let top_down = height < 0;
    let height = height.unsigned_abs();
    let stride = row_stride(width);

    // The last row needs only its pixel bytes, not its padding.
    let needed = pixel_data_offset as u64 + (height as u64 - 1) * stride as u64 + width as u64 * 3;
    if needed > data.len() as u64 {
        return Err(truncated(needed));
    }

    let body = &data[pixel_data_offset as usize..];
    let mut pixels = Vec::with_capacity(width as usize * height as usize);
    for y in 0..height as usize {
        let stored_row = if top_down { y } else { height as usize - 1 - y };
        let row = &body[stored_row * stride..][..width as usize * 3];
        pixels.extend(row.chunks_exact(3).map(|bgr| [bgr[2], bgr[1], bgr[0]]));
    }

    Ok(BmpImage {
        width,
        height,
        pixel_data_offset,
        pixels,
    })
}

/// Canonical bottom-up file with a 54-byte header and zero row padding.
pub fn write_bmp(image: &BmpImage) -> Vec<u8> {
    let stride = image.row_stride();
    let image_size = stride * image.height as usize;
    let file_size = HEADER_LEN + image_size;

    let mut out = Vec::with_capacity(file_size);
    out.extend_from_slice(b"BM");
    out.extend_from_slice(&(file_size as u32).to_le_bytes());
    out.extend_from_slice(&[0; 4]);
    out.extend_from_slice(&(HEADER_LEN as u32).to_le_bytes());

    out.extend_from_slice(&(INFO_HEADER_LEN as u32).to_le_bytes());
    out.extend_from_slice(&(image.width as i32).to_le_bytes());
    out.extend_from_slice(&(image.height as i32).to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&24u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes());
    out.extend_from_slice(&(image_size as u32).to_le_bytes());
    // Resolution and palette fields all zero.
    out.extend_from_slice(&[0; 16]);

    let pad = stride - image.width as usize * 3;
    for row in image.pixels.chunks_exact(image.width as usize).rev() {
        for &[r, g, b] in row {
            out.extend_from_slice(&[b, g, r]);
        }
        out.extend(std::iter::repeat_n(0, pad));
    }
    out
}

fn transform_body(data: &[u8], f: impl FnOnce(&[u8]) -> Vec<u8>) -> Result<Vec<u8>, BmpError> {
    let image = parse_bmp(data)?;
    let offset = image.pixel_data_offset as usize;
    let mut out = Vec::with_capacity(data.len());
    out.extend_from_slice(&data[..offset]);
    let body = f(&data[offset..]);
    debug_assert_eq!(body.len(), data.len() - offset);
    out.extend_from_slice(&body);
    Ok(out)
}

/// Encrypts everything from the pixel data offset to the end of the file in
/// raw (length-preserving) mode, leaving the headers intact so the result is
/// still a viewable BMP.
pub fn encrypt_bmp_body(data: &[u8], key: &MacKey) -> Result<Vec<u8>, BmpError> {
    transform_body(data, |body| encrypt(body, key, CipherMode::Raw))
}

pub fn decrypt_bmp_body(data: &[u8], key: &MacKey) -> Result<Vec<u8>, BmpError> {
    transform_body(data, |body| {
        decrypt(body, key, CipherMode::Raw).expect("raw mode decryption is infallible")
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 2x1 image, red then blue, assembled field by field.
    fn hand_assembled_2x1() -> Vec<u8> {
        let mut f = Vec::new();
        f.extend_from_slice(b"BM");
        f.extend_from_slice(&62u32.to_le_bytes()); // file size
        f.extend_from_slice(&[0, 0, 0, 0]);
        f.extend_from_slice(&54u32.to_le_bytes()); // pixel offset
        f.extend_from_slice(&40u32.to_le_bytes());
        f.extend_from_slice(&2i32.to_le_bytes());
        f.extend_from_slice(&1i32.to_le_bytes());
        f.extend_from_slice(&1u16.to_le_bytes());
        f.extend_from_slice(&24u16.to_le_bytes());
        f.extend_from_slice(&0u32.to_le_bytes());
        f.extend_from_slice(&8u32.to_le_bytes());
        f.extend_from_slice(&[0; 16]);
        f.extend_from_slice(&[0x00, 0x00, 0xFF, 0xFF, 0x00, 0x00, 0x00, 0x00]);
        assert_eq!(f.len(), 62);
        f
    }

    #[test]
    fn parses_hand_assembled() {
        let img = parse_bmp(&hand_assembled_2x1()).unwrap();
        assert_eq!((img.width(), img.height()), (2, 1));
        assert_eq!(img.row_stride(), 8);
        assert_eq!(img.pixels(), &[[255, 0, 0], [0, 0, 255]]);
        assert_eq!(write_bmp(&img), hand_assembled_2x1());
    }

    #[test]
    fn one_pixel_file_length() {
        let out = write_bmp(&BmpImage::new(1, 1, vec![[255, 255, 255]]));
        assert_eq!(out.len(), 58);
        assert_eq!(&out[..2], &[0x42, 0x4D]);
        assert_eq!(&out[54..], &[255, 255, 255, 0]);
    }

    #[test]
    fn top_down_rows() {
        let img = BmpImage::new(1, 2, vec![[1, 2, 3], [4, 5, 6]]);
        let mut data = write_bmp(&img);
        // Flip to top-down: negate height and swap the two stored rows.
        data[22..26].copy_from_slice(&(-2i32).to_le_bytes());
        let (a, b) = data[54..].split_at_mut(4);
        a.swap_with_slice(b);
        assert_eq!(parse_bmp(&data).unwrap(), img);
    }

    #[test]
    fn header_errors() {
        assert_eq!(
            parse_bmp(b"PK\x03\x04"),
            Err(BmpError::BadSignature(*b"PK"))
        );
        assert!(matches!(parse_bmp(b"B"), Err(BmpError::Truncated { .. })));

        let good = write_bmp(&BmpImage::new(3, 3, vec![[7, 8, 9]; 9]));

        let mut bad = good.clone();
        bad[28..30].copy_from_slice(&32u16.to_le_bytes());
        assert_eq!(parse_bmp(&bad), Err(BmpError::UnsupportedBitDepth(32)));

        let mut bad = good.clone();
        bad[30..34].copy_from_slice(&1u32.to_le_bytes());
        assert_eq!(parse_bmp(&bad), Err(BmpError::UnsupportedCompression(1)));

        let mut bad = good.clone();
        bad[26..28].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(parse_bmp(&bad), Err(BmpError::InvalidHeader(_))));

        assert!(matches!(
            parse_bmp(&good[..good.len() - 4]),
            Err(BmpError::Truncated { .. })
        ));
        assert!(matches!(
            parse_bmp(&good[..40]),
            Err(BmpError::Truncated { .. })
        ));
    }

    #[test]
    fn body_encryption_keeps_header_and_length() {
        let key = MacKey::new([0, 160, 201, 20, 200, 41]);
        let img = BmpImage::from_fn(13, 7, |x, y| [x as u8 * 9, y as u8 * 30, 77]);
        let file = write_bmp(&img);
        let enc = encrypt_bmp_body(&file, &key).unwrap();
        assert_eq!(enc.len(), file.len());
        assert_eq!(&enc[..54], &file[..54]);
        assert_ne!(enc, file);
        let parsed = parse_bmp(&enc).unwrap();
        assert_eq!(
            (parsed.width(), parsed.height(), parsed.pixel_data_offset()),
            (13, 7, 54)
        );
        assert_eq!(decrypt_bmp_body(&enc, &key).unwrap(), file);
        assert_eq!(
            encrypt_bmp_body(b"PK..", &key),
            Err(BmpError::BadSignature(*b"PK"))
        );
    }

    #[test]
    fn gap_bytes_before_pixels_are_preserved() {
        let key = MacKey::new([1, 2, 3, 4, 5, 6]);
        let img = BmpImage::new(2, 2, vec![[1, 2, 3], [4, 5, 6], [7, 8, 9], [10, 11, 12]]);
        let plain = write_bmp(&img);
        let mut file = plain[..54].to_vec();
        file.extend_from_slice(&[0xEE; 10]);
        file.extend_from_slice(&plain[54..]);
        file[10..14].copy_from_slice(&64u32.to_le_bytes());
        assert_eq!(parse_bmp(&file).unwrap().pixels(), img.pixels());

        let enc = encrypt_bmp_body(&file, &key).unwrap();
        assert_eq!(&enc[..64], &file[..64]);
        assert_eq!(decrypt_bmp_body(&enc, &key).unwrap(), file);
    }

    proptest! {
        #[test]
        fn write_parse_round_trip(w in 1u32..=64, h in 1u32..=64, seed in any::<u64>()) {
            let mut s = seed;
            let img = BmpImage::from_fn(w, h, |_, _| {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1);
                let b = s.to_be_bytes();
                [b[0], b[1], b[2]]
            });
            let file = write_bmp(&img);
            prop_assert_eq!(file.len(), 54 + row_stride(w) * h as usize);
            prop_assert_eq!(row_stride(w) % 4, 0);
            prop_assert!(row_stride(w) - (3 * w as usize) < 4);
            prop_assert_eq!(parse_bmp(&file).unwrap(), img);
        }
    }
}
