//! Versioned little-endian model file.
//!
//! Layout: magic, version (u32), dim (u32), lambda (f64), flags (u8), five
//! vocabulary sizes (u64: words, users, items, aspect words, values), then
//! every present table in declaration order as f64.

use std::io::{Read, Write};
use std::path::Path;

use super::{Model, ModelConfig, ModelParams, VocabSizes};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"AVLM";
pub const FORMAT_VERSION: u32 = 1;

const F_ASPECT: u8 = 1;
const F_VALUE: u8 = 2;
const F_NEGATIVE: u8 = 4;
const F_SEPARATE: u8 = 8;
const F_SHARE: u8 = 16;

impl Model {
    pub fn to_bytes(&self) -> Vec<u8> {
        let c = &self.config;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(c.dim as u32).to_le_bytes());
        out.extend_from_slice(&c.lambda.to_le_bytes());
        let flags = [
            (c.use_aspect_net, F_ASPECT),
            (c.use_value_net, F_VALUE),
            (c.use_negative_values, F_NEGATIVE),
            (c.separate_negative_table, F_SEPARATE),
            (c.share_query_aspect_projection, F_SHARE),
        ]
        .iter()
        .filter(|(on, _)| *on)
        .fold(0u8, |acc, (_, f)| acc | f);
        out.push(flags);
        let s = self.params.sizes();
        for n in [s.words, s.users, s.items, s.aspect_words, s.values] {
            out.extend_from_slice(&(n as u64).to_le_bytes());
        }
        for t in self.params.tables() {
            for x in t.as_slice() {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let r = &mut bytes;
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = u32::from_le_bytes(read_n(r)?);
        if version != FORMAT_VERSION {
            return Err(Error::ModelFormat(format!("unsupported version {version}")));
        }
        let dim = u32::from_le_bytes(read_n(r)?) as usize;
        let lambda = f64::from_le_bytes(read_n(r)?);
        let [flags] = read_n::<1>(r)?;
        let config = ModelConfig {
            dim,
            lambda,
            use_aspect_net: flags & F_ASPECT != 0,
            use_value_net: flags & F_VALUE != 0,
            use_negative_values: flags & F_NEGATIVE != 0,
            separate_negative_table: flags & F_SEPARATE != 0,
            share_query_aspect_projection: flags & F_SHARE != 0,
        };
        config.validate()?;
        let mut n = [0usize; 5];
        for x in &mut n {
            *x = u64::from_le_bytes(read_n(r)?) as usize;
        }
        let sizes = VocabSizes {
            words: n[0],
            users: n[1],
            items: n[2],
            aspect_words: n[3],
            values: n[4],
        };
        let mut params = ModelParams::zeros(&config, sizes);
        let expected: usize = params.tables().iter().map(|t| t.as_slice().len()).sum();
        if r.len() != expected * 8 {
            return Err(Error::ModelFormat(format!(
                "expected {} bytes of parameters, found {}",
                expected * 8,
                r.len()
            )));
        }
        for t in params.tables_mut() {
            for x in t.as_mut_slice() {
                *x = f64::from_le_bytes(read_n(r)?);
            }
        }
        Ok(Model { config, params })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    /// Loads and checks the vocabulary sizes against a corpus.
    pub fn load_for(path: &Path, expected: VocabSizes) -> Result<Self> {
        let m = Self::load(path)?;
        let found = m.params.sizes();
        if found != expected {
            return Err(Error::ModelFormat(format!(
                "vocabulary sizes {found:?} do not match corpus {expected:?}"
            )));
        }
        Ok(m)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::ModelFormat("truncated file".into()))
}

fn read_n<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    read_exact(r, &mut b)?;
    Ok(b)
}
