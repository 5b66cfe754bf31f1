//! Data augmentation by randomized graph re-walking: alternative SMILES
//! writings of one molecule, sampled uniformly over start atoms and
//! per-atom neighbor orders.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use crate::smiles::{write_smiles, Molecule, WriteError};

/// A depth-first walk over a molecule: where to start and, for every atom,
/// in which order to visit its neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkOrder {
    pub start_atom: usize,
    /// `neighbor_order[i]` is a permutation of the adjacency list of atom `i`.
    pub neighbor_order: Vec<Vec<usize>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WalkError {
    #[error("start atom {0} out of range")]
    StartOutOfRange(usize),
    #[error("walk covers {got} atoms, molecule has {want}")]
    WrongLength { got: usize, want: usize },
    #[error("neighbor order of atom {0} is not a permutation of its adjacency list")]
    NotAPermutation(usize),
}

impl WalkOrder {
    /// The walk that follows atom 0 and raw adjacency order.
    pub fn natural(molecule: &Molecule) -> WalkOrder {
        WalkOrder {
            start_atom: 0,
            neighbor_order: (0..molecule.atom_count())
                .map(|i| molecule.neighbors(i).to_vec())
                .collect(),
        }
    }

    pub fn validate(&self, molecule: &Molecule) -> Result<(), WalkError> {
        let n = molecule.atom_count();
        if self.start_atom >= n {
            return Err(WalkError::StartOutOfRange(self.start_atom));
        }
        if self.neighbor_order.len() != n {
            return Err(WalkError::WrongLength {
                got: self.neighbor_order.len(),
                want: n,
            });
        }
        for (i, order) in self.neighbor_order.iter().enumerate() {
            let mut got: Vec<usize> = order.clone();
            let mut want: Vec<usize> = molecule.neighbors(i).to_vec();
            got.sort_unstable();
            want.sort_unstable();
            if got != want {
                return Err(WalkError::NotAPermutation(i));
            }
        }
        Ok(())
    }
}

/// Augmentation intensity: how many walks per molecule at train and predict
/// time, and the seed every stream derives from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentConfig {
    pub train_walks_per_molecule: usize,
    pub predict_walks_per_molecule: usize,
    pub seed: u64,
}

impl AugmentConfig {
    /// Both walk counts must be at least 1.
    pub fn new(train_walks: usize, predict_walks: usize, seed: u64) -> Self {
        assert!(
            train_walks >= 1 && predict_walks >= 1,
            "walk counts must be >= 1"
        );
        AugmentConfig {
            train_walks_per_molecule: train_walks,
            predict_walks_per_molecule: predict_walks,
            seed,
        }
    }
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            train_walks_per_molecule: 10,
            predict_walks_per_molecule: 20,
            seed: 0,
        }
    }
}

/// Samples a walk: start atom uniform over atoms, every neighbor list
/// independently and uniformly permuted.
pub fn random_walk<R: Rng>(molecule: &Molecule, rng: &mut R) -> WalkOrder {
    let n = molecule.atom_count();
    let start_atom = rng.gen_range(0..n);
    let neighbor_order = (0..n)
        .map(|i| {
            let mut order = molecule.neighbors(i).to_vec();
            order.shuffle(rng);
            order
        })
        .collect();
    WalkOrder {
        start_atom,
        neighbor_order,
    }
}

/// Writes `n` randomized SMILES strings for one molecule. Duplicates are
/// allowed; every output parses back to a graph isomorphic to the input.
pub fn enumerate_smiles<R: Rng>(
    molecule: &Molecule,
    n: usize,
    rng: &mut R,
) -> Result<Vec<String>, WriteError> {
    (0..n)
        .map(|_| write_smiles(molecule, &random_walk(molecule, rng)))
        .collect()
}
