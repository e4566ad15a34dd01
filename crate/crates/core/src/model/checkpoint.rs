use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::flode::{build_layout, FlodeModel};
use super::{ModelConfig, Param, ParamKind};
use crate::error::{Error, Result};
use crate::spectral::SnaFactors;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"FLCKPT01";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ParamHeader {
    name: String,
    kind: ParamKind,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    in_dim: usize,
    num_classes: usize,
    num_nodes: usize,
    rank: usize,
    params: Vec<ParamHeader>,
}

/// Writes magic, version, a length-prefixed JSON header and the parameter
/// values as row-major little-endian `f64`.
pub fn write_checkpoint<W: Write>(model: &FlodeModel, mut w: W) -> Result<()> {
    let header = Header {
        config: model.config.clone(),
        in_dim: model.in_dim,
        num_classes: model.num_classes,
        num_nodes: model.factors.dim(),
        rank: model.factors.rank_k(),
        params: model
            .params
            .iter()
            .map(|p| ParamHeader { name: p.name.clone(), kind: p.kind, rows: p.value.nrows(), cols: p.value.ncols() })
            .collect(),
    };
    let json = serde_json::to_vec(&header)?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for p in &model.params {
        for i in 0..p.value.nrows() {
            for j in 0..p.value.ncols() {
                w.write_all(&p.value[(i, j)].to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn read_exact<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b)?;
    Ok(b)
}

/// Reads a checkpoint written by [`write_checkpoint`], attaching `factors`,
/// which must match the operator the model was trained on.
pub fn read_checkpoint<R: Read>(mut r: R, factors: Arc<SnaFactors>) -> Result<FlodeModel> {
    if &read_exact::<8, _>(&mut r)? != CHECKPOINT_MAGIC {
        return Err(Error::Format("not a model checkpoint".into()));
    }
    let version = u32::from_le_bytes(read_exact::<4, _>(&mut r)?);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!("unsupported checkpoint version {version}")));
    }
    let len = u64::from_le_bytes(read_exact::<8, _>(&mut r)?) as usize;
    if len > 1 << 26 {
        return Err(Error::Format(format!("header length {len} is implausible")));
    }
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: Header = serde_json::from_slice(&json)?;
    if header.num_nodes != factors.dim() || header.rank != factors.rank_k() {
        return Err(Error::Format(format!(
            "checkpoint was trained on {} nodes at rank {}, factors are {} at rank {}",
            header.num_nodes,
            header.rank,
            factors.dim(),
            factors.rank_k()
        )));
    }
    header.config.validate()?;
    let (layout, specs) = build_layout(&header.config, header.in_dim, header.num_classes);
    if specs.len() != header.params.len()
        || specs
            .iter()
            .zip(&header.params)
            .any(|((n, k, r, c), h)| *n != h.name || *k != h.kind || *r != h.rows || *c != h.cols)
    {
        return Err(Error::Format("parameter table does not match the configuration".into()));
    }
    let mut params = Vec::with_capacity(specs.len());
    for h in header.params {
        let mut value = DMatrix::zeros(h.rows, h.cols);
        for i in 0..h.rows {
            for j in 0..h.cols {
                value[(i, j)] = f64::from_le_bytes(read_exact::<8, _>(&mut r)?);
            }
        }
        params.push(Param { name: h.name, kind: h.kind, value });
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(Error::Format("trailing bytes after parameters".into()));
    }
    Ok(FlodeModel {
        config: header.config,
        in_dim: header.in_dim,
        num_classes: header.num_classes,
        params,
        layout,
        factors,
    })
}

pub fn save_checkpoint(model: &FlodeModel, path: impl AsRef<Path>) -> Result<()> {
    write_checkpoint(model, BufWriter::new(File::create(path)?))
}

pub fn load_checkpoint(path: impl AsRef<Path>, factors: Arc<SnaFactors>) -> Result<FlodeModel> {
    read_checkpoint(BufReader::new(File::open(path)?), factors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Scheme;
    use crate::graph::{build_sna, cycle_graph, DegreePolicy};
    use crate::model::init_model;
    use crate::spectral::svd_full;

    #[test]
    fn round_trip() {
        let f = Arc::new(svd_full(&build_sna(&cycle_graph(6).unwrap(), DegreePolicy::Error).unwrap()).unwrap());
        for scheme in [Scheme::Heat, Scheme::Schrodinger] {
            let cfg = ModelConfig { hidden_channels: 3, scheme, encoder_layers: 2, ..Default::default() };
            let m = init_model(&cfg, f.clone(), 4, 3, 11).unwrap();
            let mut buf = Vec::new();
            write_checkpoint(&m, &mut buf).unwrap();
            let back = read_checkpoint(buf.as_slice(), f.clone()).unwrap();
            assert_eq!(back.params, m.params);
            assert_eq!(back.config, m.config);
            let mut bad = buf.clone();
            bad[0] = b'X';
            assert!(read_checkpoint(bad.as_slice(), f.clone()).is_err());
            buf.push(0);
            assert!(read_checkpoint(buf.as_slice(), f.clone()).is_err());
        }
        let dir = tempfile::tempdir().unwrap();
        let m = init_model(&ModelConfig { hidden_channels: 2, ..Default::default() }, f.clone(), 2, 2, 0).unwrap();
        let p = dir.path().join("m.ckpt");
        save_checkpoint(&m, &p).unwrap();
        assert_eq!(load_checkpoint(&p, f).unwrap().params, m.params);
    }
}
