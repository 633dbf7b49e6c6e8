//! Chain files: one JSON header line, then little-endian `f64` records in
//! iteration-major, walker, dimension-innermost order.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{EssError, Result};
use crate::run::ChainStore;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainHeader {
    pub version: u32,
    pub dim: usize,
    pub n_walkers: usize,
    /// Recorded iterations in the file.
    pub n_iterations: usize,
    pub seed: u64,
    #[serde(rename = "move")]
    pub move_kind: String,
    #[serde(rename = "target-id")]
    pub target_id: String,
    pub mu_final: Option<f64>,
    pub sampler: String,
    /// `"complete"` or `"failed: <reason>"` for partial chains.
    pub status: String,
}

pub fn write_chain<W: Write>(mut out: W, header: &ChainHeader, chain: &ChainStore) -> Result<()> {
    if header.dim != chain.dim || header.n_walkers != chain.n_walkers || header.n_iterations != chain.n_recorded() {
        return Err(EssError::InvalidArgument("chain header does not match the chain shape".into()));
    }
    let line = serde_json::to_string(header).map_err(|e| EssError::Io(e.to_string()))?;
    out.write_all(line.as_bytes())?;
    out.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(chain.samples.len() * 8);
    for v in &chain.samples {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&buf)?;
    out.flush()?;
    Ok(())
}

pub fn write_chain_file(path: &Path, header: &ChainHeader, chain: &ChainStore) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_chain(std::io::BufWriter::new(file), header, chain)
}

/// Reads a chain; only positions and shape are restored.
pub fn read_chain<R: Read>(input: R) -> Result<(ChainHeader, ChainStore)> {
    let mut reader = BufReader::new(input);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: ChainHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| EssError::Io(format!("bad chain header: {e}")))?;
    let mut bytes = Vec::new();
    reader.read_to_end(&mut bytes)?;
    let expected = header.n_iterations * header.n_walkers * header.dim * 8;
    if bytes.len() != expected {
        return Err(EssError::Io(format!(
            "chain body has {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut chain = ChainStore::new(header.dim, header.n_walkers);
    chain.samples = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(mu) = header.mu_final {
        chain.mu_trajectory.push(mu);
    }
    Ok((header, chain))
}

pub fn read_chain_file(path: &Path) -> Result<(ChainHeader, ChainStore)> {
    read_chain(std::fs::File::open(path)?)
}

/// One CSV row per sample: `iteration,walker,x_0,…,x_{D-1}`.
pub fn write_csv<W: Write>(mut out: W, chain: &ChainStore) -> Result<()> {
    let mut head = String::from("iteration,walker");
    for d in 0..chain.dim {
        head.push_str(&format!(",x_{d}"));
    }
    writeln!(out, "{head}")?;
    for it in 0..chain.n_recorded() {
        for w in 0..chain.n_walkers {
            let mut row = format!("{it},{w}");
            for v in chain.sample(it, w) {
                row.push_str(&format!(",{v}"));
            }
            writeln!(out, "{row}")?;
        }
    }
    out.flush()?;
    Ok(())
}
