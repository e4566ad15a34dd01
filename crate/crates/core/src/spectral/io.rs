//! Little-endian binary container for cached factorizations.
//!
//! Layout: magic `FLSVD001`, then `n: u64`, `k: u64`, `truncated: u8`,
//! `policy: u8`, `total_sq: f64`, followed by `sigma` (k values), `U` and `V`
//! (each `n x k`, row-major).

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use sha2::{Digest, Sha256};

use super::SnaFactors;
use crate::error::{Error, Result};
use crate::graph::{hex, DegreePolicy, DirectedGraph};

const MAGIC: &[u8; 8] = b"FLSVD001";

fn policy_code(p: DegreePolicy) -> u8 {
    match p {
        DegreePolicy::Error => 0,
        DegreePolicy::PseudoInverse => 1,
        DegreePolicy::SelfLoop => 2,
    }
}

pub fn write_factors<W: Write>(mut w: W, f: &SnaFactors) -> Result<()> {
    let (n, k) = (f.dim(), f.rank_k());
    w.write_all(MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(k as u64).to_le_bytes())?;
    w.write_all(&[f.truncated as u8, policy_code(f.policy)])?;
    w.write_all(&f.total_sq.to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * (k + 2 * n * k));
    buf.extend(f.sigma.iter().flat_map(|v| v.to_le_bytes()));
    for m in [&f.u, &f.v] {
        for i in 0..n {
            buf.extend(m.row(i).iter().flat_map(|v| v.to_le_bytes()));
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_array<R: Read>(r: &mut R, len: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes)
        .map_err(|e| Error::Format(format!("truncated payload: {e}")))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_factors<R: Read>(mut r: R) -> Result<SnaFactors> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|e| Error::Format(format!("missing header: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = read_u64(&mut r)? as usize;
    let k = read_u64(&mut r)? as usize;
    if k > n || n > 1 << 20 {
        return Err(Error::Format(format!("implausible dimensions n={n}, k={k}")));
    }
    let mut flags = [0u8; 2];
    r.read_exact(&mut flags).map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let policy = match flags[1] {
        0 => DegreePolicy::Error,
        1 => DegreePolicy::PseudoInverse,
        2 => DegreePolicy::SelfLoop,
        other => return Err(Error::Format(format!("unknown degree policy {other}"))),
    };
    let total_sq = read_array(&mut r, 1)?[0];
    let sigma = DVector::from_vec(read_array(&mut r, k)?);
    let u = DMatrix::from_row_slice(n, k, &read_array(&mut r, n * k)?);
    let v = DMatrix::from_row_slice(n, k, &read_array(&mut r, n * k)?);
    Ok(SnaFactors { u, sigma, v, truncated: flags[0] != 0, total_sq, policy })
}

/// Cache key from graph content, degree policy, rank (`None` = full) and seed.
pub fn factor_cache_key(graph: &DirectedGraph, policy: DegreePolicy, rank: Option<usize>, seed: u64) -> String {
    let mut h = Sha256::new();
    h.update(graph.content_hash().as_bytes());
    h.update(policy.as_str().as_bytes());
    h.update(rank.map_or(0u64, |k| k as u64 + 1).to_le_bytes());
    h.update(seed.to_le_bytes());
    hex(&h.finalize())[..32].to_string()
}
