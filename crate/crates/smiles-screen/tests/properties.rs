//! Property tests over the grammar layer: round trips, canonical stability,
//! lexer losslessness, ring bookkeeping, and parser totality on arbitrary
//! input.

mod common;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::random_walk;
use smiles_screen::features::{tokenize, TokenKind};
use smiles_screen::smiles::{canonical_smiles, is_isomorphic, parse_smiles, write_smiles};
use smiles_screen::synthetic::{random_molecule, MoleculeGenConfig};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// parse . write is isomorphic to the source for any valid walk.
    #[test]
    fn random_walks_round_trip(seed in any::<u64>(), walk_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let molecule = random_molecule(&MoleculeGenConfig::default(), &mut rng);
        let mut walk_rng = ChaCha8Rng::seed_from_u64(walk_seed);
        let walk = random_walk(&molecule, &mut walk_rng);
        let written = write_smiles(&molecule, &walk).unwrap();
        let back = parse_smiles(&written).unwrap();
        prop_assert!(is_isomorphic(&molecule, &back));
    }

    /// canonical SMILES is a function of the graph, not the labeling.
    #[test]
    fn canonical_is_relabeling_invariant(seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let molecule = random_molecule(&MoleculeGenConfig::default(), &mut rng);
        let mut perm: Vec<usize> = (0..molecule.atom_count()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let relabeled = molecule.relabeled(&perm).unwrap();
        prop_assert_eq!(
            canonical_smiles(&molecule).unwrap(),
            canonical_smiles(&relabeled).unwrap()
        );
    }

    /// Tokenizing any writable molecule is lossless, and ring bookkeeping
    /// holds: bonds = atoms - 1 + ring closures consumed.
    #[test]
    fn lexing_is_lossless_and_rings_balance(seed in any::<u64>(), walk_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let molecule = random_molecule(&MoleculeGenConfig::default(), &mut rng);
        let walk = random_walk(&molecule, &mut ChaCha8Rng::seed_from_u64(walk_seed));
        let written = write_smiles(&molecule, &walk).unwrap();
        let tokens = tokenize(&written).unwrap();
        let joined: String = tokens.iter().map(|t| t.text).collect();
        prop_assert_eq!(joined, written.clone());

        let ring_digits = tokens
            .iter()
            .filter(|t| t.kind == TokenKind::RingClosure)
            .count();
        prop_assert_eq!(ring_digits % 2, 0);
        let parsed = parse_smiles(&written).unwrap();
        prop_assert_eq!(
            parsed.bond_count(),
            parsed.atom_count() - 1 + ring_digits / 2
        );
    }

    /// The parser never panics, whatever the input bytes.
    #[test]
    fn parser_is_total(input in "\\PC*") {
        let _ = parse_smiles(&input);
        let _ = tokenize(&input);
    }

    /// ASCII soup leaning on grammar characters; denser error coverage.
    #[test]
    fn parser_is_total_on_grammar_soup(input in "[A-Za-z0-9%\\[\\]()=#:+\\-@/\\\\.*]{0,40}") {
        let _ = parse_smiles(&input);
        let _ = tokenize(&input);
    }
}

/// Deterministic spot check that small molecules agree with the factorial
/// isomorphism oracle through a write/parse cycle.
#[test]
fn tiny_molecule_rewrites_agree_with_brute_force() {
    let cfg = MoleculeGenConfig::tiny();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..60 {
        let molecule = random_molecule(&cfg, &mut rng);
        let walk = random_walk(&molecule, &mut rng);
        let written = write_smiles(&molecule, &walk).unwrap();
        let back = parse_smiles(&written).unwrap();
        assert!(common::brute_force_isomorphic(&molecule, &back));
        assert!(is_isomorphic(&molecule, &back));
    }
}
