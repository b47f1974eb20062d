//! `maccrypt` command line.
//!
//! Exit codes: 0 success, 2 usage, 3 I/O, 4 format or protocol, 5 key
//! resolution. Errors go to stderr as a single `error: ...` line.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use maccrypt::analysis::{histogram, histogram_csv, AnalysisReport};
use maccrypt::bmp::{decrypt_bmp_body, encrypt_bmp_body};
use maccrypt::wire::{self, Receiver, WireError};
use maccrypt::{
    decrypt, encrypt, parse_bmp, AnalysisError, BmpError, CipherError, CipherMode, KeyError,
    KeySource, MacKey, MacStyle, KEYSPACE_BITS,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_FORMAT: i32 = 4;
pub const EXIT_KEY: i32 = 5;

#[derive(Debug, Parser)]
#[command(
    name = "maccrypt",
    version,
    about = "Scramble data under a MAC-address key"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Exactly one of a literal address or a local interface.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct KeySpec {
    /// Key as a MAC address, e.g. 00:A0:C9:14:C8:29
    #[arg(long, value_name = "MAC")]
    key: Option<String>,
    /// Use the hardware address of this network interface
    #[arg(long, value_name = "NAME")]
    iface: Option<String>,
}

impl KeySpec {
    fn resolve(&self) -> Result<MacKey, CliError> {
        let source = match (&self.key, &self.iface) {
            (Some(text), _) => KeySource::Literal(text.parse()?),
            (None, Some(name)) => KeySource::Interface(name.clone()),
            (None, None) => unreachable!("clap enforces one key source"),
        };
        Ok(source.resolve()?)
    }
}

#[derive(Debug, Args)]
struct CryptArgs {
    #[command(flatten)]
    key: KeySpec,
    /// Length-preserving mode without the container header
    #[arg(long)]
    raw: bool,
    input: PathBuf,
    output: PathBuf,
}

impl CryptArgs {
    fn mode(&self) -> CipherMode {
        if self.raw {
            CipherMode::Raw
        } else {
            CipherMode::Container
        }
    }
}

#[derive(Debug, Args)]
struct BmpArgs {
    #[command(flatten)]
    key: KeySpec,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encrypt a file
    Encrypt(CryptArgs),
    /// Decrypt a file
    Decrypt(CryptArgs),
    /// Encrypt the pixel data of a 24-bit BMP, keeping its header
    EncryptBmp(BmpArgs),
    /// Reverse encrypt-bmp
    DecryptBmp(BmpArgs),
    /// Print SNR, correlation and difference metrics as JSON
    Analyze {
        #[arg(long)]
        source: PathBuf,
        #[arg(long)]
        encrypted: PathBuf,
        /// Treat both inputs as BMP images and compare pixels
        #[arg(long)]
        bmp: bool,
    },
    /// Print a byte histogram as value,count CSV
    Histogram { file: PathBuf },
    /// Print a key in canonical form
    Keyinfo {
        #[command(flatten)]
        key: KeySpec,
    },
    /// Receive one file, decrypting with this host's key
    Recv {
        #[arg(long)]
        port: u16,
        #[command(flatten)]
        key: KeySpec,
        #[arg(long)]
        out: PathBuf,
    },
    /// Send a file, encrypted under the receiver's announced key
    Send {
        #[arg(long)]
        host: String,
        #[arg(long)]
        port: u16,
        file: PathBuf,
    },
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Key(#[from] KeyError),
    #[error(transparent)]
    Cipher(#[from] CipherError),
    #[error(transparent)]
    Bmp(#[from] BmpError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Wire(#[from] WireError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Key(_) => EXIT_KEY,
            CliError::Cipher(_) | CliError::Bmp(_) | CliError::Analysis(_) => EXIT_FORMAT,
            CliError::Wire(w) => match w {
                WireError::Key(_) => EXIT_KEY,
                WireError::Io(_)
                | WireError::BindFailure { .. }
                | WireError::ConnectFailure { .. } => EXIT_IO,
                WireError::ProtocolViolation(_)
                | WireError::DecryptFailure(_)
                | WireError::RemoteDecryptFailure => EXIT_FORMAT,
            },
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes the whole buffer or removes whatever was partially written.
fn write(path: &Path, data: &[u8]) -> Result<(), CliError> {
    fs::write(path, data).map_err(|source| {
        let _ = fs::remove_file(path);
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    })
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Encrypt(args) => {
            let key = args.key.resolve()?;
            let data = read(&args.input)?;
            write(&args.output, &encrypt(&data, &key, args.mode()))
        }
        Command::Decrypt(args) => {
            let key = args.key.resolve()?;
            let data = read(&args.input)?;
            write(&args.output, &decrypt(&data, &key, args.mode())?)
        }
        Command::EncryptBmp(args) => {
            let key = args.key.resolve()?;
            let data = read(&args.input)?;
            write(&args.output, &encrypt_bmp_body(&data, &key)?)
        }
        Command::DecryptBmp(args) => {
            let key = args.key.resolve()?;
            let data = read(&args.input)?;
            write(&args.output, &decrypt_bmp_body(&data, &key)?)
        }
        Command::Analyze {
            source,
            encrypted,
            bmp,
        } => {
            let src = read(&source)?;
            let enc = read(&encrypted)?;
            let report = if bmp {
                AnalysisReport::from_images(&parse_bmp(&src)?, &parse_bmp(&enc)?)?
            } else {
                AnalysisReport::from_bytes(&src, &enc)?
            };
            print!("{}", report.to_report_text());
            Ok(())
        }
        Command::Histogram { file } => {
            print!("{}", histogram_csv(&histogram(&read(&file)?)));
            Ok(())
        }
        Command::Keyinfo { key } => {
            let key = key.resolve()?;
            println!("{}", key.format(MacStyle::Colon));
            println!("keyspace: {KEYSPACE_BITS} bits");
            Ok(())
        }
        Command::Recv { port, key, out } => {
            let key = key.resolve()?;
            let receiver = Receiver::bind(&format!("0.0.0.0:{port}"), key)?;
            eprintln!(
                "listening on {} as {key}",
                receiver
                    .local_addr()
                    .map_or_else(|_| format!("port {port}"), |a| a.to_string())
            );
            let n = receiver.serve_one(&out)?;
            eprintln!("received {n} bytes into {}", out.display());
            Ok(())
        }
        Command::Send { host, port, file } => {
            // Read first so a missing file is an I/O error, not a connect error.
            read(&file)?;
            wire::send_file(&host, port, &file)?;
            Ok(())
        }
    }
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
