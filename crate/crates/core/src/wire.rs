//! Demonstration file transfer keyed by the receiver's hardware address.
//!
//! ```text
//! receiver -> sender   "MKX1" | mac[6]
//! sender   -> receiver "MKF1" | payload_len u64 BE | container ciphertext
//! receiver -> sender   status u8 (0x00 ok, 0x01 decrypt error)
//! ```
//!
//! The receiver sends its key in the clear. Anyone watching the connection
//! can decrypt the file; this mirrors the scheme's key model and is not a
//! secure protocol.

use std::fs;
use std::io::{self, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::time::Duration;

use thiserror::Error;

use crate::cipher::{decrypt, encrypt, CipherError, CipherMode};
use crate::key::{KeyError, KeySource, MacKey, KEY_LEN};

pub const HELLO_MAGIC: [u8; 4] = *b"MKX1";
pub const FILE_MAGIC: [u8; 4] = *b"MKF1";
pub const HELLO_LEN: usize = 10;
pub const STATUS_OK: u8 = 0x00;
pub const STATUS_DECRYPT_ERROR: u8 = 0x01;
/// Largest payload a receiver will accept.
pub const MAX_PAYLOAD: u64 = 64 * 1024 * 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Error)]
pub enum WireError {
    #[error("cannot bind {addr}: {source}")]
    BindFailure { addr: String, source: io::Error },
    #[error("cannot connect to {addr}: {source}")]
    ConnectFailure { addr: String, source: io::Error },
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("payload failed to decrypt: {0}")]
    DecryptFailure(#[from] CipherError),
    #[error("receiver reported a decrypt failure")]
    RemoteDecryptFailure,
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn short_read(what: &str, err: io::Error) -> WireError {
    match err.kind() {
        io::ErrorKind::UnexpectedEof => {
            WireError::ProtocolViolation(format!("short read in {what}"))
        }
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut => {
            WireError::ProtocolViolation(format!("timed out reading {what}"))
        }
        _ => WireError::Io(err),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HelloFrame {
    pub mac: MacKey,
}

impl HelloFrame {
    pub fn to_bytes(&self) -> [u8; HELLO_LEN] {
        let mut out = [0u8; HELLO_LEN];
        out[..4].copy_from_slice(&HELLO_MAGIC);
        out[4..].copy_from_slice(self.mac.bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8; HELLO_LEN]) -> Result<Self, WireError> {
        if bytes[..4] != HELLO_MAGIC {
            return Err(WireError::ProtocolViolation(format!(
                "bad hello magic {:02X?}",
                &bytes[..4]
            )));
        }
        let mac: [u8; KEY_LEN] = bytes[4..].try_into().unwrap();
        Ok(HelloFrame {
            mac: MacKey::new(mac),
        })
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, WireError> {
        let mut buf = [0u8; HELLO_LEN];
        r.read_exact(&mut buf)
            .map_err(|e| short_read("hello frame", e))?;
        HelloFrame::from_bytes(&buf)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileFrame {
    pub payload: Vec<u8>,
}

impl FileFrame {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.payload.len());
        out.extend_from_slice(&FILE_MAGIC);
        out.extend_from_slice(&(self.payload.len() as u64).to_be_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self, WireError> {
        let mut header = [0u8; 12];
        r.read_exact(&mut header)
            .map_err(|e| short_read("file frame header", e))?;
        if header[..4] != FILE_MAGIC {
            return Err(WireError::ProtocolViolation(format!(
                "bad file frame magic {:02X?}",
                &header[..4]
            )));
        }
        let len = u64::from_be_bytes(header[4..].try_into().unwrap());
        if len > MAX_PAYLOAD {
            return Err(WireError::ProtocolViolation(format!(
                "payload length {len} exceeds limit {MAX_PAYLOAD}"
            )));
        }
        let mut payload = vec![0u8; len as usize];
        r.read_exact(&mut payload)
            .map_err(|e| short_read("file payload", e))?;
        Ok(FileFrame { payload })
    }
}

/// Builds the frame a sender would transmit for `plaintext` under `key`.
pub fn file_frame_for(plaintext: &[u8], key: &MacKey) -> FileFrame {
    FileFrame {
        payload: encrypt(plaintext, key, CipherMode::Container),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WireConfig {
    /// Applied to every blocking read and write.
    pub timeout: Duration,
}

impl Default for WireConfig {
    fn default() -> Self {
        WireConfig {
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

fn configure(stream: &TcpStream, config: &WireConfig) -> io::Result<()> {
    stream.set_read_timeout(Some(config.timeout))?;
    stream.set_write_timeout(Some(config.timeout))?;
    stream.set_nodelay(true)
}

/// Listening side. Handles one connection at a time.
#[derive(Debug)]
pub struct Receiver {
    listener: TcpListener,
    key: MacKey,
    config: WireConfig,
}

impl Receiver {
    pub fn bind(addr: &str, key: MacKey) -> Result<Self, WireError> {
        let listener = TcpListener::bind(addr).map_err(|source| WireError::BindFailure {
            addr: addr.to_string(),
            source,
        })?;
        Ok(Receiver {
            listener,
            key,
            config: WireConfig::default(),
        })
    }

    pub fn with_config(mut self, config: WireConfig) -> Self {
        self.config = config;
        self
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Accepts one connection and handles one transfer, returning the
    /// plaintext byte count written to `output_path`.
    ///
    /// Nothing is written unless the payload decrypts.
    pub fn serve_one(&self, output_path: &Path) -> Result<u64, WireError> {
        let (stream, _) = self.listener.accept()?;
        self.handle(stream, output_path)
    }

    fn handle(&self, mut stream: TcpStream, output_path: &Path) -> Result<u64, WireError> {
        configure(&stream, &self.config)?;
        stream.write_all(&HelloFrame { mac: self.key }.to_bytes())?;
        let frame = FileFrame::read_from(&mut stream)?;

        let plaintext = match decrypt(&frame.payload, &self.key, CipherMode::Container) {
            Ok(p) => p,
            Err(e) => {
                // Best effort; the decrypt error is what gets reported.
                let _ = stream.write_all(&[STATUS_DECRYPT_ERROR]);
                return Err(e.into());
            }
        };
        if let Err(e) = fs::write(output_path, &plaintext) {
            let _ = fs::remove_file(output_path);
            return Err(e.into());
        }
        stream.write_all(&[STATUS_OK])?;
        Ok(plaintext.len() as u64)
    }
}

/// Binds `0.0.0.0:port`, resolves the key, and receives one file.
pub fn serve_receive(
    port: u16,
    key_source: &KeySource,
    output_path: &Path,
) -> Result<u64, WireError> {
    let key = key_source.resolve()?;
    Receiver::bind(&format!("0.0.0.0:{port}"), key)?.serve_one(output_path)
}

/// Runs the sender half over an established stream and returns the
/// receiver's status byte.
pub fn send_over(stream: &mut TcpStream, plaintext: &[u8]) -> Result<u8, WireError> {
    let hello = HelloFrame::read_from(stream)?;
    stream.write_all(&file_frame_for(plaintext, &hello.mac).to_bytes())?;
    stream.flush()?;
    let mut status = [0u8; 1];
    stream
        .read_exact(&mut status)
        .map_err(|e| short_read("status byte", e))?;
    match status[0] {
        STATUS_OK => Ok(STATUS_OK),
        STATUS_DECRYPT_ERROR => Err(WireError::RemoteDecryptFailure),
        other => Err(WireError::ProtocolViolation(format!(
            "unknown status byte {other:#04x}"
        ))),
    }
}

pub fn send_file_with(
    host: &str,
    port: u16,
    input_path: &Path,
    config: &WireConfig,
) -> Result<u8, WireError> {
    let plaintext = fs::read(input_path)?;
    let addr = format!("{host}:{port}");
    let connect_err = |source| WireError::ConnectFailure {
        addr: addr.clone(),
        source,
    };
    let target = addr
        .to_socket_addrs()
        .map_err(connect_err)?
        .next()
        .ok_or_else(|| {
            connect_err(io::Error::new(
                io::ErrorKind::NotFound,
                "no address resolved",
            ))
        })?;
    let mut stream = TcpStream::connect_timeout(&target, config.timeout).map_err(connect_err)?;
    configure(&stream, config)?;
    send_over(&mut stream, &plaintext)
}

pub fn send_file(host: &str, port: u16, input_path: &Path) -> Result<u8, WireError> {
    send_file_with(host, port, input_path, &WireConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hello_layout() {
        let hello = HelloFrame {
            mac: MacKey::new([0, 160, 201, 20, 200, 41]),
        };
        let bytes = hello.to_bytes();
        assert_eq!(&bytes, b"MKX1\x00\xA0\xC9\x14\xC8\x29");
        assert_eq!(HelloFrame::from_bytes(&bytes).unwrap(), hello);

        let mut bad = bytes;
        bad[0] = b'X';
        assert!(matches!(
            HelloFrame::from_bytes(&bad),
            Err(WireError::ProtocolViolation(_))
        ));
    }

    #[test]
    fn hello_short_read() {
        let mut r: &[u8] = b"MKX1\x00\x01\x02\x03\x04";
        assert!(matches!(
            HelloFrame::read_from(&mut r),
            Err(WireError::ProtocolViolation(_))
        ));
    }

    #[test]
    fn file_frame_layout() {
        let frame = file_frame_for(b"", &MacKey::new([1; 6]));
        let bytes = frame.to_bytes();
        assert_eq!(&bytes[..4], b"MKF1");
        assert_eq!(u64::from_be_bytes(bytes[4..12].try_into().unwrap()), 16);
        assert_eq!(bytes.len(), 28);
        assert_eq!(FileFrame::read_from(&mut bytes.as_slice()).unwrap(), frame);
    }

    #[test]
    fn file_frame_rejects_oversized_length() {
        let mut bytes = b"MKF1".to_vec();
        bytes.extend_from_slice(&(MAX_PAYLOAD + 1).to_be_bytes());
        assert!(matches!(
            FileFrame::read_from(&mut bytes.as_slice()),
            Err(WireError::ProtocolViolation(_))
        ));
    }

    #[test]
    fn file_frame_short_payload() {
        let mut bytes = b"MKF1".to_vec();
        bytes.extend_from_slice(&100u64.to_be_bytes());
        bytes.extend_from_slice(&[0; 50]);
        assert!(matches!(
            FileFrame::read_from(&mut bytes.as_slice()),
            Err(WireError::ProtocolViolation(_))
        ));
    }
}
