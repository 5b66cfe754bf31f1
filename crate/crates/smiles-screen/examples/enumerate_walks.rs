//! Data augmentation by graph re-walking: sample randomized SMILES writings
//! of one molecule and check they all describe the same graph.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use smiles_screen::augment::{enumerate_smiles, random_walk};
use smiles_screen::smiles::{is_isomorphic, parse_smiles, write_smiles};

fn main() {
    let molecule = parse_smiles("CC(C)Cc1ccc(cc1)C(C)C(=O)O").unwrap(); // ibuprofen
    let mut rng = ChaCha8Rng::seed_from_u64(2024);

    println!("20 randomized writings:");
    let writings = enumerate_smiles(&molecule, 20, &mut rng).unwrap();
    for w in &writings {
        let back = parse_smiles(w).unwrap();
        assert!(is_isomorphic(&molecule, &back));
        println!("  {}", w);
    }
    let distinct: std::collections::BTreeSet<&String> = writings.iter().collect();
    println!("{} distinct strings out of {}", distinct.len(), writings.len());

    // a walk is just a start atom plus per-atom neighbor orders
    let walk = random_walk(&molecule, &mut rng);
    println!(
        "one more walk starting at atom {}: {}",
        walk.start_atom,
        write_smiles(&molecule, &walk).unwrap()
    );
}
