//! Crate-wide error type.

use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// Filesystem failure while reading or writing `path`.
    Io { path: PathBuf, source: io::Error },

    /// A file exists but its contents do not match the expected format.
    /// `detail` names the offending line, offset, or field.
    Parse { path: PathBuf, detail: String },

    /// A serialized artifact carries a format version this build cannot read.
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },

    /// No built-in platform with this name.
    UnknownProfile { name: String },

    /// A profile or run configuration fails validation.
    InvalidConfig { reason: String },

    /// Requested supply voltage is below the crash boundary, where the
    /// chip no longer completes reads at all.
    CrashRegion { voltage_mv: u32, crash_mv: u32 },

    /// Requested voltage lies outside the operable range or off the
    /// profile's 10 mV grid where a grid point is required.
    VoltageRange { voltage_mv: u32, lo_mv: u32, hi_mv: u32 },

    /// Two aligned series (power vs. error) disagree on their voltage grid.
    GridMismatch { reason: String },

    /// A BRAM, row, or column index is outside the platform geometry,
    /// or supplied data has the wrong length for it.
    Geometry { reason: String },

    /// A placement strategy needs more BRAMs of some class than exist.
    CapacityExceeded { what: String, needed: usize, available: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            Error::Io { path, source } => {
                write!(f, "io error on {}: {}", path.display(), source)
            }
            Error::Parse { path, detail } => {
                write!(f, "malformed file {}: {}", path.display(), detail)
            }
            Error::VersionMismatch { path, found, expected } => {
                write!(
                    f,
                    "{}: format version {} not supported (expected {})",
                    path.display(),
                    found,
                    expected
                )
            }
            Error::UnknownProfile { name } => {
                write!(f, "unknown platform profile `{}`", name)
            }
            Error::InvalidConfig { reason } => write!(f, "invalid configuration: {}", reason),
            Error::CrashRegion { voltage_mv, crash_mv } => {
                write!(
                    f,
                    "{} mV is below the {} mV crash boundary; reads do not complete there",
                    voltage_mv, crash_mv
                )
            }
            Error::VoltageRange { voltage_mv, lo_mv, hi_mv } => {
                write!(
                    f,
                    "voltage {} mV outside operable range [{}, {}] mV",
                    voltage_mv, lo_mv, hi_mv
                )
            }
            Error::GridMismatch { reason } => write!(f, "voltage grid mismatch: {}", reason),
            Error::Geometry { reason } => write!(f, "geometry violation: {}", reason),
            Error::CapacityExceeded { what, needed, available } => {
                write!(
                    f,
                    "placement needs {} BRAMs for {} but only {} are available",
                    needed, what, available
                )
            }
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, detail: impl Into<String>) -> Self {
        Error::Parse { path: path.into(), detail: detail.into() }
    }
}
