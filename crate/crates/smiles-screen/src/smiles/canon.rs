//! Canonical atom ranking by iterative neighborhood refinement, and the
//! canonical SMILES writing derived from it.

use std::collections::VecDeque;

use super::{Molecule, WriteError};
use crate::augment::WalkOrder;

/// One refinement sweep: atoms get dense ranks ordered by (current rank,
/// sorted multiset of (neighbor rank, bond order)), repeated to a fixed
/// point. Classes only ever split, so the class count is the stop signal.
fn refine(molecule: &Molecule, mut ranks: Vec<usize>) -> Vec<usize> {
    let n = molecule.atom_count();
    loop {
        let before = count_classes(&ranks);
        let mut keys: Vec<(usize, Vec<(usize, u8)>, usize)> = (0..n)
            .map(|i| {
                let mut neighbor_ranks: Vec<(usize, u8)> = molecule
                    .neighbors(i)
                    .iter()
                    .map(|&j| {
                        let order = molecule
                            .bond_between(i, j)
                            .expect("adjacency mirrors bonds")
                            .order;
                        (ranks[j], order as u8)
                    })
                    .collect();
                neighbor_ranks.sort_unstable();
                (ranks[i], neighbor_ranks, i)
            })
            .collect();
        keys.sort();
        let mut new_ranks = vec![0usize; n];
        let mut rank = 0;
        for w in 0..keys.len() {
            if w > 0 && (keys[w].0, &keys[w].1) != (keys[w - 1].0, &keys[w - 1].1) {
                rank += 1;
            }
            new_ranks[keys[w].2] = rank;
        }
        ranks = new_ranks;
        if count_classes(&ranks) == before {
            return ranks;
        }
    }
}

fn count_classes(ranks: &[usize]) -> usize {
    ranks.iter().max().map_or(0, |&m| m + 1)
}

type InitialKey = (String, bool, i32, Option<u32>, Option<u8>, usize);

fn initial_ranks(molecule: &Molecule) -> Vec<usize> {
    let n = molecule.atom_count();
    let mut keyed: Vec<(InitialKey, usize)> = (0..n)
        .map(|i| {
            let a = molecule.atom(i);
            let key = (
                a.element.symbol().to_string(),
                a.aromatic,
                a.charge,
                a.isotope,
                a.explicit_h,
                molecule.degree(i),
            );
            (key, i)
        })
        .collect();
    keyed.sort();
    let mut ranks = vec![0usize; n];
    let mut rank = 0;
    for w in 0..keyed.len() {
        if w > 0 && keyed[w].0 != keyed[w - 1].0 {
            rank += 1;
        }
        ranks[keyed[w].1] = rank;
    }
    ranks
}

/// Stable refinement classes without tie-breaking: atoms sharing a class are
/// indistinguishable by element, aromaticity, charge, isotope, explicit
/// hydrogens, degree, and iterated neighborhood structure.
pub fn symmetry_classes(molecule: &Molecule) -> Vec<usize> {
    refine(molecule, initial_ranks(molecule))
}

fn bfs_distances(molecule: &Molecule, from: usize) -> Vec<usize> {
    let n = molecule.atom_count();
    let mut dist = vec![usize::MAX; n];
    dist[from] = 0;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        for &v in molecule.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Sorted (distance, rank) profile of one atom against all others; a
/// permutation-invariant key used to pick the atom whose tie gets broken.
fn distance_profile(molecule: &Molecule, atom: usize, ranks: &[usize]) -> Vec<(usize, usize)> {
    let dist = bfs_distances(molecule, atom);
    let mut profile: Vec<(usize, usize)> = dist
        .iter()
        .zip(ranks.iter())
        .map(|(&d, &r)| (d, r))
        .collect();
    profile.sort_unstable();
    profile
}

/// Permutation-invariant atom ranks, refined to a full ordering (a
/// permutation of `0..n`). Remaining ties after refinement are broken by
/// doubling the rank of one atom from the lowest tied class and refining
/// again; the atom is chosen by its distance profile so the choice does not
/// depend on input labeling.
pub fn canonical_ranks(molecule: &Molecule) -> Vec<usize> {
    let n = molecule.atom_count();
    let mut ranks = refine(molecule, initial_ranks(molecule));
    while count_classes(&ranks) < n {
        let tied_rank = (0..n)
            .map(|i| ranks[i])
            .filter(|&r| ranks.iter().filter(|&&x| x == r).count() > 1)
            .min()
            .expect("some class has more than one member");
        let members: Vec<usize> = (0..n).filter(|&i| ranks[i] == tied_rank).collect();
        let chosen = members
            .iter()
            .copied()
            .min_by(|&a, &b| {
                distance_profile(molecule, a, &ranks)
                    .cmp(&distance_profile(molecule, b, &ranks))
                    .then(a.cmp(&b))
            })
            .expect("class is nonempty");
        // Double every rank and nudge the chosen atom into its own class.
        for r in ranks.iter_mut() {
            *r *= 2;
        }
        ranks[chosen] += 1;
        ranks = refine(molecule, ranks);
    }
    ranks
}

/// The canonical walk: start at the lowest-ranked atom, visit neighbors in
/// ascending rank.
fn canonical_walk(molecule: &Molecule, ranks: &[usize]) -> WalkOrder {
    let start_atom = (0..molecule.atom_count())
        .min_by_key(|&i| ranks[i])
        .expect("molecule is nonempty");
    let neighbor_order = (0..molecule.atom_count())
        .map(|i| {
            let mut order = molecule.neighbors(i).to_vec();
            order.sort_by_key(|&j| ranks[j]);
            order
        })
        .collect();
    WalkOrder {
        start_atom,
        neighbor_order,
    }
}

/// A labeling-independent SMILES string: isomorphic inputs produce equal
/// output. Fails only for atoms the grammar cannot express.
pub fn canonical_smiles(molecule: &Molecule) -> Result<String, WriteError> {
    let ranks = canonical_ranks(molecule);
    super::write_smiles(molecule, &canonical_walk(molecule, &ranks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn benzene_is_one_class_before_tie_breaking() {
        let m = parse_smiles("c1ccccc1").unwrap();
        let classes = symmetry_classes(&m);
        assert!(classes.iter().all(|&c| c == 0));
        // ...and canonical ranks still become a full permutation.
        let mut ranks = canonical_ranks(&m);
        ranks.sort_unstable();
        assert_eq!(ranks, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn cco_has_three_distinct_ranks() {
        let m = parse_smiles("CCO").unwrap();
        let classes = symmetry_classes(&m);
        let mut sorted = classes.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![0, 1, 2]);
    }

    #[test]
    fn same_graph_two_writings_same_canonical() {
        let a = parse_smiles("OCC").unwrap();
        let b = parse_smiles("CCO").unwrap();
        assert_eq!(canonical_smiles(&a).unwrap(), canonical_smiles(&b).unwrap());
    }

    #[test]
    fn canonical_smiles_survives_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for seed in 0..40 {
            let m = crate::synthetic::random_molecule(
                &crate::synthetic::MoleculeGenConfig::default(),
                &mut ChaCha8Rng::seed_from_u64(1000 + seed),
            );
            let reference = canonical_smiles(&m).unwrap();
            for _ in 0..5 {
                let mut perm: Vec<usize> = (0..m.atom_count()).collect();
                perm.shuffle(&mut rng);
                let relabeled = m.relabeled(&perm).unwrap();
                assert_eq!(
                    canonical_smiles(&relabeled).unwrap(),
                    reference,
                    "seed {} permutation broke canonicalization",
                    seed
                );
            }
        }
    }
}
