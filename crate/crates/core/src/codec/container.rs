//! `RDC1` container: everything a decoder needs except the database,
//! which it regenerates from the seed.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! "RDC1"            4 bytes
//! codec id          u8   (1 = GVW, 2 = LLZ, 3 = HYB)
//! version           u8   (1)
//! n                 u64
//! l                 u64
//! alpha (micro)     u64  (LLZ only)
//! gamma (micro)     u64
//! D target (micro)  u64
//! seed              u64
//! pmf               u32 byte count + ASCII decimals separated by ' '
//! matrix            u32 byte count + rows separated by ';', entries by ' '
//! checksum          u16  (first 64 reproduction symbols)
//! bit length        u64
//! payload           ceil(bit length / 8) bytes
//! ```
//!
//! Decimals are written in shortest round-trip form, so parsing them back
//! yields the identical `f64` values.

use std::path::Path;

use super::{Bitstream, CodecId, CodecParams, Limits, Settings};
use crate::error::{Error, Result};
use crate::model::{DistortionSpec, Model, SourceModel};
use crate::source::Seed;

pub const MAGIC: &[u8; 4] = b"RDC1";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub codec: CodecId,
    pub model: Model,
    pub settings: Settings,
    pub checksum: u16,
    pub stream: Bitstream,
}

impl Container {
    pub fn seal(params: &CodecParams, stream: Bitstream) -> Self {
        let mut settings = *params.settings();
        if params.codec() != CodecId::Llz {
            settings.alpha_micros = 0;
        }
        Self {
            codec: params.codec(),
            model: params.model().clone(),
            settings,
            checksum: params.checksum(),
            stream,
        }
    }

    /// Rebuilds the codec parameters, optionally under a different seed,
    /// and checks them against the stored database checksum.
    pub fn params(&self, limits: Limits, seed: Option<Seed>) -> Result<CodecParams> {
        let mut settings = self.settings;
        if let Some(s) = seed {
            settings.seed = s;
        }
        let p = CodecParams::new(self.codec, &self.model, settings, limits)?;
        let found = p.checksum();
        if found != self.checksum {
            return Err(Error::SeedMismatch {
                stored: self.checksum,
                found,
            });
        }
        Ok(p)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let s = &self.settings;
        let mut out = Vec::with_capacity(96 + self.stream.bytes().len());
        out.extend_from_slice(MAGIC);
        out.push(self.codec as u8);
        out.push(VERSION);
        out.extend_from_slice(&(s.n as u64).to_le_bytes());
        out.extend_from_slice(&(s.ell as u64).to_le_bytes());
        if self.codec == CodecId::Llz {
            out.extend_from_slice(&s.alpha_micros.to_le_bytes());
        }
        out.extend_from_slice(&s.gamma_micros.to_le_bytes());
        out.extend_from_slice(&s.d_micros.to_le_bytes());
        out.extend_from_slice(&s.seed.0.to_le_bytes());
        put_str(&mut out, &join(self.model.source.pmf()));
        let rows: Vec<String> = self.model.dist.rows().iter().map(|r| join(r)).collect();
        put_str(&mut out, &rows.join(";"));
        out.extend_from_slice(&self.checksum.to_le_bytes());
        out.extend_from_slice(&self.stream.bit_length().to_le_bytes());
        out.extend_from_slice(self.stream.bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::MalformedContainer("bad magic".into()));
        }
        let codec = CodecId::from_byte(r.u8()?)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::MalformedContainer(format!(
                "unsupported version {version}"
            )));
        }
        let n = to_usize(r.u64()?)?;
        let ell = to_usize(r.u64()?)?;
        let alpha_micros = if codec == CodecId::Llz { r.u64()? } else { 0 };
        let gamma_micros = r.u64()?;
        let d_micros = r.u64()?;
        let seed = Seed(r.u64()?);
        let pmf = parse_reals(r.string()?)?;
        let rows = r
            .string()?
            .split(';')
            .map(parse_reals)
            .collect::<Result<Vec<_>>>()?;
        let model = Model::new(SourceModel::new(pmf)?, DistortionSpec::new(rows)?)?;
        let checksum = r.u16()?;
        let bit_length = r.u64()?;
        let payload = r.take(bit_length.div_ceil(8) as usize)?.to_vec();
        if r.pos != bytes.len() {
            return Err(Error::MalformedContainer(format!(
                "{} trailing bytes",
                bytes.len() - r.pos
            )));
        }
        Ok(Self {
            codec,
            model,
            settings: Settings {
                n,
                ell,
                d_micros,
                gamma_micros,
                alpha_micros,
                seed,
            },
            checksum,
            stream: Bitstream::from_parts(payload, bit_length)?,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(Error::from)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::MalformedContainer(format!("bad decimal {t:?}")))
        })
        .collect()
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

fn to_usize(v: u64) -> Result<usize> {
    usize::try_from(v).map_err(|_| Error::MalformedContainer(format!("{v} overflows usize")))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(k)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::MalformedContainer("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn string(&mut self) -> Result<&'a str> {
        let len = self.u32()? as usize;
        std::str::from_utf8(self.take(len)?)
            .map_err(|_| Error::MalformedContainer("non-ASCII text field".into()))
    }
}
