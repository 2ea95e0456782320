//! Binary model file.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes  "ARMDMODL"
//! version      u32
//! horizon      u32
//! n_channels   u32
//! b, c, d      3 x f64
//! beta_start   f64
//! beta_end     f64
//! weight       T*T x f64, row-major
//! bias         T x f64
//! w_logits     T x f64
//! mean, std    C x f64 each
//! names        C x (u32 byte length + UTF-8)
//! checksum     u64, first 8 bytes of SHA-256 over everything above
//! ```

use std::path::Path;

use sha2::{Digest, Sha256};

use crate::devolution::{BalanceParams, DevolutionModel};
use crate::error::{Error, Result};
use crate::io::NormalizationStats;
use crate::schedule::DiffusionSchedule;

pub const MAGIC: &[u8; 8] = b"ARMDMODL";
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to forecast in the original data units.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelArtifact {
    pub model: DevolutionModel,
    pub schedule: DiffusionSchedule,
    pub stats: NormalizationStats,
    pub channel_names: Vec<String>,
}

fn checksum(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

impl ModelArtifact {
    pub fn new(
        model: DevolutionModel,
        schedule: DiffusionSchedule,
        stats: NormalizationStats,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if model.horizon() != schedule.horizon() {
            return Err(Error::ShapeMismatch {
                expected: format!("model horizon {}", schedule.horizon()),
                actual: format!("{}", model.horizon()),
            });
        }
        if stats.std.len() != stats.mean.len() || stats.mean.len() != channel_names.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channel statistics and names", channel_names.len()),
                actual: format!("{} means, {} stds", stats.mean.len(), stats.std.len()),
            });
        }
        Ok(Self {
            model,
            schedule,
            stats,
            channel_names,
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let horizon = self.model.horizon();
        let mut out = Vec::with_capacity(64 + 8 * (horizon * horizon + 2 * horizon));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(horizon as u32).to_le_bytes());
        out.extend_from_slice(&(self.channel_names.len() as u32).to_le_bytes());
        let BalanceParams { b, c, d } = self.model.balance();
        for v in [b, c, d, self.schedule.beta_start(), self.schedule.beta_end()] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in self
            .model
            .weight()
            .iter()
            .chain(self.model.bias())
            .chain(self.model.w_logits())
            .chain(&self.stats.mean)
            .chain(&self.stats.std)
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for name in &self.channel_names {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
        }
        let sum = checksum(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(Error::CorruptModel("missing magic header".into()));
        }
        let found = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
        if found != FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < 12 + 8 {
            return Err(Error::CorruptModel("file too short for a checksum".into()));
        }
        let (body, trailer) = bytes.split_at(bytes.len() - 8);
        let stored = u64::from_le_bytes(trailer.try_into().expect("8 bytes"));
        let computed = checksum(body);
        if stored != computed {
            return Err(Error::ChecksumMismatch { stored, computed });
        }

        let mut r = Reader { buf: body, pos: 12 };
        let horizon = r.u32()? as usize;
        let n_channels = r.u32()? as usize;
        let (b, c, d) = (r.f64()?, r.f64()?, r.f64()?);
        let (beta_start, beta_end) = (r.f64()?, r.f64()?);
        let weight = r.f64s(horizon.checked_mul(horizon).ok_or_else(|| Error::CorruptModel("horizon overflow".into()))?)?;
        let bias = r.f64s(horizon)?;
        let w_logits = r.f64s(horizon)?;
        let mean = r.f64s(n_channels)?;
        let std = r.f64s(n_channels)?;
        let mut channel_names = Vec::with_capacity(n_channels.min(1024));
        for _ in 0..n_channels {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            let name = std::str::from_utf8(raw).map_err(|_| Error::CorruptModel("channel name is not UTF-8".into()))?;
            channel_names.push(name.to_string());
        }
        if r.pos != body.len() {
            return Err(Error::CorruptModel(format!("{} trailing bytes", body.len() - r.pos)));
        }
        let schedule = DiffusionSchedule::new(horizon, beta_start, beta_end)?;
        let model = DevolutionModel::from_parts(horizon, weight, bias, w_logits, BalanceParams { b, c, d })?;
        Self::new(model, schedule, NormalizationStats { mean, std }, channel_names)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::CorruptModel(format!("unexpected end of data at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::CorruptModel("length overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }
}

pub fn save_model(path: impl AsRef<Path>, artifact: &ModelArtifact) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, artifact.to_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelArtifact> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    ModelArtifact::from_bytes(&bytes)
}
