use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Training nodes drawn per class by [`dsbm_splits`].
pub const TRAIN_PER_CLASS: usize = 20;
/// Validation nodes drawn by [`dsbm_splits`].
pub const VALIDATION_SIZE: usize = 500;

/// Disjoint node index sets.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Checks that every index is below `num_nodes` and the sets are disjoint.
    pub fn validate(&self, num_nodes: usize) -> Result<()> {
        let mut seen = vec![false; num_nodes];
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= num_nodes {
                return Err(Error::NodeOutOfRange { index: i, num_nodes });
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(invalid(format!("node {i} appears in more than one split")));
            }
        }
        Ok(())
    }
}

/// `TRAIN_PER_CLASS` nodes of every class for training, `VALIDATION_SIZE`
/// of the remainder for validation, the rest for testing.
pub fn dsbm_splits(labels: &[usize], seed: u64) -> Result<Splits> {
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    if labels.len() < TRAIN_PER_CLASS * classes + VALIDATION_SIZE {
        return Err(invalid(format!(
            "{} nodes cannot hold {TRAIN_PER_CLASS} per class for {classes} classes plus {VALIDATION_SIZE} validation nodes",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::with_capacity(TRAIN_PER_CLASS * classes);
    let mut rest = Vec::new();
    for c in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == c).collect();
        if members.len() < TRAIN_PER_CLASS {
            return Err(invalid(format!("class {c} has only {} nodes", members.len())));
        }
        members.shuffle(&mut rng);
        train.extend_from_slice(&members[..TRAIN_PER_CLASS]);
        rest.extend_from_slice(&members[TRAIN_PER_CLASS..]);
    }
    rest.sort_unstable();
    rest.shuffle(&mut rng);
    let test = rest.split_off(VALIDATION_SIZE);
    let mut s = Splits { train, val: rest, test };
    s.train.sort_unstable();
    s.val.sort_unstable();
    s.test.sort_unstable();
    Ok(s)
}

/// Uniform random split with the given fractions for training and validation.
pub fn random_splits(num_nodes: usize, train_frac: f64, val_frac: f64, seed: u64) -> Result<Splits> {
    if !(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac <= 1.0) {
        return Err(invalid("fractions must be positive and sum to at most 1"));
    }
    let mut order: Vec<usize> = (0..num_nodes).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((num_nodes as f64) * train_frac).round().max(1.0) as usize;
    let n_val = ((num_nodes as f64) * val_frac).round().max(1.0) as usize;
    if n_train + n_val > num_nodes {
        return Err(invalid(format!("{num_nodes} nodes are too few for the requested split")));
    }
    let mut train = order[..n_train].to_vec();
    let mut val = order[n_train..n_train + n_val].to_vec();
    let mut test = order[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Splits { train, val, test })
}
