//! The 48-bit secret key: a network adapter's hardware (MAC) address.
//!
//! Octets are kept in printed order, so `00:A0:C9:14:C8:29` is
//! `[0x00, 0xA0, 0xC9, 0x14, 0xC8, 0x29]`.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Number of key bytes.
pub const KEY_LEN: usize = 6;

/// Size of the key space. Fixed by the hardware address width.
pub const KEYSPACE_BITS: u32 = 48;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum KeyError {
    #[error("malformed MAC address {text:?}: {reason}")]
    MalformedMac { text: String, reason: &'static str },
    #[error("bit index {0} out of range 0..48")]
    BitIndexOutOfRange(u32),
    #[error("network interface {0:?} not found")]
    InterfaceNotFound(String),
    #[error("network interface {0:?} has no hardware address")]
    NoHardwareAddress(String),
}

/// Separator used when printing a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MacStyle {
    #[default]
    Colon,
    Hyphen,
}

impl MacStyle {
    fn separator(self) -> char {
        match self {
            MacStyle::Colon => ':',
            MacStyle::Hyphen => '-',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MacKey([u8; KEY_LEN]);

impl MacKey {
    pub const fn new(bytes: [u8; KEY_LEN]) -> Self {
        MacKey(bytes)
    }

    pub const fn bytes(&self) -> &[u8; KEY_LEN] {
        &self.0
    }

    /// The key as a big-endian 48-bit integer, zero-extended to 64 bits.
    pub fn as_u64(&self) -> u64 {
        self.0
            .iter()
            .fold(0u64, |acc, &b| (acc << 8) | u64::from(b))
    }

    pub fn format(&self, style: MacStyle) -> String {
        format_mac(self, style)
    }

    pub fn flip_bit(&self, bit_index: u32) -> Result<MacKey, KeyError> {
        flip_bit(self, bit_index)
    }
}

impl From<[u8; KEY_LEN]> for MacKey {
    fn from(bytes: [u8; KEY_LEN]) -> Self {
        MacKey(bytes)
    }
}

impl fmt::Display for MacKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_mac(self, MacStyle::Colon))
    }
}

impl FromStr for MacKey {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_mac(s)
    }
}

/// Parses six two-digit hex groups separated uniformly by `:` or `-`.
///
/// Hex digits may be either case. Mixed separators and any whitespace are
/// rejected.
pub fn parse_mac(text: &str) -> Result<MacKey, KeyError> {
    let malformed = |reason| KeyError::MalformedMac {
        text: text.to_string(),
        reason,
    };

    let sep = match (text.contains(':'), text.contains('-')) {
        (true, true) => return Err(malformed("mixed separators")),
        (true, false) => ':',
        (false, true) => '-',
        (false, false) => return Err(malformed("expected ':' or '-' separators")),
    };

    let mut bytes = [0u8; KEY_LEN];
    let mut count = 0;
    for group in text.split(sep) {
        if count == KEY_LEN {
            return Err(malformed("expected 6 groups"));
        }
        if group.len() != 2 || !group.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(malformed("each group must be two hex digits"));
        }
        // Both bytes are ASCII hex digits, so this cannot fail.
        bytes[count] = u8::from_str_radix(group, 16).map_err(|_| malformed("bad hex digit"))?;
        count += 1;
    }
    if count != KEY_LEN {
        return Err(malformed("expected 6 groups"));
    }
    Ok(MacKey(bytes))
}

/// Uppercase hex, two digits per octet.
pub fn format_mac(key: &MacKey, style: MacStyle) -> String {
    let sep = style.separator();
    let mut out = String::with_capacity(3 * KEY_LEN - 1);
    for (i, b) in key.0.iter().enumerate() {
        if i > 0 {
            out.push(sep);
        }
        out.push_str(&format!("{b:02X}"));
    }
    out
}

/// Flips one key bit. Bit 0 is the most significant bit of byte 0, bit 47
/// the least significant bit of byte 5.
pub fn flip_bit(key: &MacKey, bit_index: u32) -> Result<MacKey, KeyError> {
    if bit_index >= KEYSPACE_BITS {
        return Err(KeyError::BitIndexOutOfRange(bit_index));
    }
    let mut bytes = key.0;
    bytes[(bit_index / 8) as usize] ^= 0x80 >> (bit_index % 8);
    Ok(MacKey(bytes))
}

/// Reads the hardware address of a local network interface.
///
/// An all-zero address (as reported for loopback) counts as no address.
pub fn get_system_mac(interface_name: &str) -> Result<MacKey, KeyError> {
    let bytes = platform::hardware_address(interface_name)?;
    if bytes == [0u8; KEY_LEN] {
        return Err(KeyError::NoHardwareAddress(interface_name.to_string()));
    }
    Ok(MacKey(bytes))
}

#[cfg(target_os = "linux")]
mod platform {
    use std::path::Path;

    use super::{parse_mac, KeyError, KEY_LEN};

    pub(super) fn hardware_address(name: &str) -> Result<[u8; KEY_LEN], KeyError> {
        // Reject anything that could walk out of /sys/class/net.
        if name.is_empty() || name.contains('/') || name == "." || name == ".." {
            return Err(KeyError::InterfaceNotFound(name.to_string()));
        }
        let dir = Path::new("/sys/class/net").join(name);
        if !dir.exists() {
            return Err(KeyError::InterfaceNotFound(name.to_string()));
        }
        let no_addr = || KeyError::NoHardwareAddress(name.to_string());
        let text = std::fs::read_to_string(dir.join("address")).map_err(|_| no_addr())?;
        // Non-Ethernet links (e.g. tunnels) report addresses of other widths.
        parse_mac(text.trim())
            .map(|k| *k.bytes())
            .map_err(|_| no_addr())
    }
}

#[cfg(not(target_os = "linux"))]
mod platform {
    use super::{KeyError, KEY_LEN};

    pub(super) fn hardware_address(name: &str) -> Result<[u8; KEY_LEN], KeyError> {
        match mac_address::mac_address_by_name(name) {
            Ok(Some(addr)) => Ok(addr.bytes()),
            Ok(None) => Err(KeyError::InterfaceNotFound(name.to_string())),
            Err(_) => Err(KeyError::NoHardwareAddress(name.to_string())),
        }
    }
}

/// Where a key comes from: a literal address or a local interface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KeySource {
    Literal(MacKey),
    Interface(String),
}

impl KeySource {
    pub fn resolve(&self) -> Result<MacKey, KeyError> {
        match self {
            KeySource::Literal(key) => Ok(*key),
            KeySource::Interface(name) => get_system_mac(name),
        }
    }
}

impl From<MacKey> for KeySource {
    fn from(key: MacKey) -> Self {
        KeySource::Literal(key)
    }
}
