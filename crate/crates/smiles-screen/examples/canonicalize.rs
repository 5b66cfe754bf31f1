//! Many writings, one canonical form: the canonical SMILES depends on the
//! molecular graph alone, not on how the input happened to be written.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::enumerate_smiles;
use smiles_screen::smiles::{canonical_smiles, parse_smiles, symmetry_classes};

fn main() {
    // three hand-written spellings of the same molecule
    for spelling in ["CCO", "OCC", "C(O)C"] {
        let molecule = parse_smiles(spelling).unwrap();
        println!("{:<8} -> {}", spelling, canonical_smiles(&molecule).unwrap());
    }

    // randomized rewrites collapse to one canonical string too
    let molecule = parse_smiles("CC(=O)Nc1ccccc1").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut canonical_forms = std::collections::BTreeSet::new();
    for rewrite in enumerate_smiles(&molecule, 12, &mut rng).unwrap() {
        let reparsed = parse_smiles(&rewrite).unwrap();
        canonical_forms.insert(canonical_smiles(&reparsed).unwrap());
        println!("rewrite {:<24} canonical {}", rewrite, canonical_smiles(&reparsed).unwrap());
    }
    assert_eq!(canonical_forms.len(), 1);

    // symmetry classes: benzene is fully symmetric
    let benzene = parse_smiles("c1ccccc1").unwrap();
    println!("benzene symmetry classes: {:?}", symmetry_classes(&benzene));
}
