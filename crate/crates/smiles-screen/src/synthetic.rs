//! Random drug-like molecule generation and the planted-motif screening
//! corpus used by the examples and the verification suite. Real activity
//! datasets are not bundled, so end-to-end behavior is demonstrated on
//! synthetic data with a known ground truth.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::features::{tokenize, Token};
use crate::harness::{Dataset, Record};
use crate::smiles::{canonical_smiles, Atom, Bond, BondOrder, Element, Molecule};

/// Knobs for the random molecule generator. Molecules are connected
/// (random spanning tree plus a few ring bonds) and sparse, like typical
/// drug-like compounds.
#[derive(Debug, Clone)]
pub struct MoleculeGenConfig {
    pub min_atoms: usize,
    pub max_atoms: usize,
    /// Upper bound on extra (ring-forming) bonds beyond the spanning tree.
    pub max_ring_bonds: usize,
    /// Probability that a non-carbon element is drawn for an atom.
    pub hetero_prob: f64,
    /// Probability that an eligible atom is flagged aromatic.
    pub aromatic_prob: f64,
    pub charge_prob: f64,
    pub isotope_prob: f64,
    pub explicit_h_prob: f64,
    /// Probability of a bracket-only element (Na, Se, Si, ...).
    pub exotic_prob: f64,
    /// Probability that a bond is promoted to double/triple.
    pub multi_bond_prob: f64,
    /// Forbid N-N bonds (the planted motif is an O-N-N-O chain, so corpora
    /// built for screening keep it unambiguous).
    pub forbid_nn_bonds: bool,
}

impl Default for MoleculeGenConfig {
    fn default() -> Self {
        MoleculeGenConfig {
            min_atoms: 5,
            max_atoms: 60,
            max_ring_bonds: 3,
            hetero_prob: 0.25,
            aromatic_prob: 0.2,
            charge_prob: 0.05,
            isotope_prob: 0.02,
            explicit_h_prob: 0.03,
            exotic_prob: 0.02,
            multi_bond_prob: 0.12,
            forbid_nn_bonds: false,
        }
    }
}

impl MoleculeGenConfig {
    /// Up to 8 atoms; small enough for factorial brute-force oracles.
    pub fn tiny() -> Self {
        MoleculeGenConfig {
            min_atoms: 1,
            max_atoms: 8,
            max_ring_bonds: 1,
            ..MoleculeGenConfig::default()
        }
    }

    /// Carbon-rich molecules for chain/diameter statistics.
    pub fn carbon_rich(max_atoms: usize) -> Self {
        MoleculeGenConfig {
            min_atoms: 2,
            max_atoms,
            max_ring_bonds: 2,
            hetero_prob: 0.12,
            aromatic_prob: 0.0,
            charge_prob: 0.0,
            isotope_prob: 0.0,
            explicit_h_prob: 0.0,
            exotic_prob: 0.0,
            multi_bond_prob: 0.08,
            forbid_nn_bonds: false,
        }
    }

    /// Scaffolds for the screening corpus: moderate size, no N-N bonds.
    pub fn screening() -> Self {
        MoleculeGenConfig {
            min_atoms: 12,
            max_atoms: 32,
            max_ring_bonds: 2,
            hetero_prob: 0.22,
            aromatic_prob: 0.15,
            charge_prob: 0.01,
            isotope_prob: 0.0,
            explicit_h_prob: 0.0,
            exotic_prob: 0.005,
            multi_bond_prob: 0.1,
            forbid_nn_bonds: true,
        }
    }
}

const HETERO: &[Element] = &[
    Element::N,
    Element::O,
    Element::S,
    Element::P,
    Element::F,
    Element::Cl,
    Element::Br,
    Element::I,
    Element::B,
];

const EXOTIC: &[&str] = &["Na", "Se", "Si", "Zn", "K", "Li"];

fn draw_element<R: Rng>(cfg: &MoleculeGenConfig, rng: &mut R) -> Element {
    if rng.gen_bool(cfg.exotic_prob) {
        return Element::Other(EXOTIC[rng.gen_range(0..EXOTIC.len())].to_string());
    }
    if rng.gen_bool(cfg.hetero_prob) {
        HETERO[rng.gen_range(0..HETERO.len())].clone()
    } else {
        Element::C
    }
}

fn decorate_atom<R: Rng>(element: Element, cfg: &MoleculeGenConfig, rng: &mut R) -> Atom {
    let aromatic = element.aromatic_capable() && rng.gen_bool(cfg.aromatic_prob);
    let charge = if rng.gen_bool(cfg.charge_prob) {
        *[-2, -1, 1, 2].get(rng.gen_range(0..4)).unwrap()
    } else {
        0
    };
    let isotope = if rng.gen_bool(cfg.isotope_prob) {
        Some(rng.gen_range(2..250))
    } else {
        None
    };
    let explicit_h = if rng.gen_bool(cfg.explicit_h_prob) {
        Some(rng.gen_range(0..4) as u8)
    } else {
        None
    };
    let bracket = charge != 0
        || isotope.is_some()
        || explicit_h.is_some()
        || !(element.in_organic_subset() || element == Element::Wildcard);
    Atom {
        element,
        aromatic,
        charge,
        isotope,
        explicit_h,
        bracket,
    }
}

/// Generates a random connected molecule: spanning tree with degree cap 4,
/// a few ring bonds, and attribute noise per the config.
pub fn random_molecule<R: Rng>(cfg: &MoleculeGenConfig, rng: &mut R) -> Molecule {
    let n = rng.gen_range(cfg.min_atoms..=cfg.max_atoms);
    let mut atoms: Vec<Atom> = Vec::with_capacity(n);
    let mut degrees = vec![0usize; n];
    let mut bonds: Vec<Bond> = Vec::new();

    for i in 0..n {
        let mut element = draw_element(cfg, rng);
        if i > 0 {
            // attach to a random earlier atom with spare valence
            let candidates: Vec<usize> = (0..i).filter(|&p| degrees[p] < 4).collect();
            let parent = candidates[rng.gen_range(0..candidates.len())];
            if cfg.forbid_nn_bonds
                && element == Element::N
                && atoms[parent].element == Element::N
            {
                element = Element::C;
            }
            let atom = decorate_atom(element, cfg, rng);
            let order = draw_bond_order(&atoms[parent], &atom, cfg, rng);
            bonds.push(Bond::new(parent, i, order));
            degrees[parent] += 1;
            degrees[i] += 1;
            atoms.push(atom);
        } else {
            atoms.push(decorate_atom(element, cfg, rng));
        }
    }

    if n >= 4 {
        let extra = rng.gen_range(0..=cfg.max_ring_bonds);
        let mut existing: std::collections::HashSet<(usize, usize)> =
            bonds.iter().map(|b| b.key()).collect();
        for _ in 0..extra {
            for _attempt in 0..20 {
                let a = rng.gen_range(0..n);
                let b = rng.gen_range(0..n);
                if a == b || degrees[a] >= 4 || degrees[b] >= 4 {
                    continue;
                }
                let key = if a < b { (a, b) } else { (b, a) };
                if existing.contains(&key) {
                    continue;
                }
                if cfg.forbid_nn_bonds
                    && atoms[a].element == Element::N
                    && atoms[b].element == Element::N
                {
                    continue;
                }
                let order = draw_bond_order(&atoms[a], &atoms[b], cfg, rng);
                existing.insert(key);
                bonds.push(Bond::new(a, b, order));
                degrees[a] += 1;
                degrees[b] += 1;
                break;
            }
        }
    }

    Molecule::new(atoms, bonds).expect("generator emits valid molecules")
}

fn draw_bond_order<R: Rng>(
    a: &Atom,
    b: &Atom,
    cfg: &MoleculeGenConfig,
    rng: &mut R,
) -> BondOrder {
    if a.aromatic && b.aromatic {
        // mostly aromatic bonds between aromatic atoms, sometimes single
        return if rng.gen_bool(0.85) {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        };
    }
    if rng.gen_bool(cfg.multi_bond_prob) {
        if rng.gen_bool(0.25) {
            BondOrder::Triple
        } else {
            BondOrder::Double
        }
    } else {
        BondOrder::Single
    }
}

/// The fixed 4-token motif separating actives from inactives in the
/// synthetic screening corpus: an O-N-N-O chain written consecutively.
pub const MOTIF_TOKENS: [&str; 4] = ["O", "N", "N", "O"];

/// True when four consecutive tokens spell the motif.
pub fn contains_motif(tokens: &[Token]) -> bool {
    tokens
        .windows(MOTIF_TOKENS.len())
        .any(|w| w.iter().zip(MOTIF_TOKENS.iter()).all(|(t, m)| t.text == *m))
}

/// Appends a terminal single-bonded chain at a random eligible anchor.
fn plant_chain<R: Rng>(
    molecule: &Molecule,
    chain: &[Element],
    anchor_may_be_n: bool,
    rng: &mut R,
) -> Option<Molecule> {
    let n = molecule.atom_count();
    let anchors: Vec<usize> = (0..n)
        .filter(|&i| {
            molecule.degree(i) < 4
                && (anchor_may_be_n || molecule.atom(i).element != Element::N)
        })
        .collect();
    if anchors.is_empty() {
        return None;
    }
    let anchor = anchors[rng.gen_range(0..anchors.len())];
    let mut atoms = molecule.atoms().to_vec();
    let mut bonds = molecule.bonds().to_vec();
    let mut prev = anchor;
    for element in chain {
        let idx = atoms.len();
        atoms.push(Atom::organic(element.clone(), false));
        bonds.push(Bond::new(prev, idx, BondOrder::Single));
        prev = idx;
    }
    Some(Molecule::new(atoms, bonds).expect("tail extension keeps the graph valid"))
}

fn plant_motif_tail<R: Rng>(molecule: &Molecule, rng: &mut R) -> Option<Molecule> {
    plant_chain(
        molecule,
        &[Element::O, Element::N, Element::N, Element::O],
        false,
        rng,
    )
}

/// Near-motif fragments that never complete an O-N-N-O path: they flood the
/// feature space with correlated partial-motif grams in both classes, which
/// is what separates calibrated margin models from naive Bayes here.
fn plant_decoy_tail<R: Rng>(molecule: &Molecule, rng: &mut R) -> Option<Molecule> {
    if rng.gen_bool(0.5) {
        // terminal C keeps the second N away from any oxygen
        plant_chain(
            molecule,
            &[Element::O, Element::N, Element::N, Element::C],
            true,
            rng,
        )
    } else {
        // C anchor keeps the first N away from any oxygen
        let anchor_is_c = molecule
            .atoms()
            .iter()
            .enumerate()
            .any(|(i, a)| a.element == Element::C && molecule.degree(i) < 4);
        if !anchor_is_c {
            return None;
        }
        let carbons: Vec<usize> = (0..molecule.atom_count())
            .filter(|&i| {
                molecule.atom(i).element == Element::C && molecule.degree(i) < 4
            })
            .collect();
        let anchor = carbons[rng.gen_range(0..carbons.len())];
        let mut atoms = molecule.atoms().to_vec();
        let mut bonds = molecule.bonds().to_vec();
        let mut prev = anchor;
        for element in [Element::N, Element::N, Element::C] {
            let idx = atoms.len();
            atoms.push(Atom::organic(element, false));
            bonds.push(Bond::new(prev, idx, BondOrder::Single));
            prev = idx;
        }
        Some(Molecule::new(atoms, bonds).expect("tail extension keeps the graph valid"))
    }
}

/// A labeled screening dataset: `n` molecules, roughly one third active.
/// Active molecules carry the planted O-N-N-O tail; 40% of molecules of
/// either class also carry a near-motif decoy fragment. The label is
/// verified against the canonical tokenization, so
/// `label == 1  <=>  the canonical SMILES contains the 4-token motif`.
pub fn planted_motif_dataset(name: &str, n: usize, seed: u64) -> Dataset {
    let cfg = MoleculeGenConfig::screening();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(n);
    let n_active = n / 3;
    for i in 0..n {
        let want_active = i < n_active;
        loop {
            let scaffold = random_molecule(&cfg, &mut rng);
            let decoyed = if rng.gen_bool(0.4) {
                match plant_decoy_tail(&scaffold, &mut rng) {
                    Some(m) => m,
                    None => continue,
                }
            } else {
                scaffold
            };
            let molecule = if want_active {
                match plant_motif_tail(&decoyed, &mut rng) {
                    Some(m) => m,
                    None => continue,
                }
            } else {
                decoyed
            };
            let smiles = match canonical_smiles(&molecule) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let tokens = match tokenize(&smiles) {
                Ok(t) => t,
                Err(_) => continue,
            };
            // Reject the rare writing where the walk enters the tail in the
            // middle and the label would disagree with the construction.
            if contains_motif(&tokens) != want_active {
                continue;
            }
            records.push(Record {
                id: format!("m{:05}", i),
                smiles,
                label: u8::from(want_active),
            });
            break;
        }
    }
    Dataset::new(name.to_string(), records).expect("constructed corpus is valid")
}

/// Random molecules whose token streams may or may not contain arbitrary
/// n-grams; handy for kernel and featurizer tests.
pub fn random_smiles_corpus(n: usize, seed: u64, cfg: &MoleculeGenConfig) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let m = random_molecule(cfg, &mut rng);
            canonical_smiles(&m).expect("generator molecules are writable")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::TokenKind;
    use crate::smiles::parse_smiles;

    #[test]
    fn generated_molecules_are_valid_and_writable() {
        let cfg = MoleculeGenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let m = random_molecule(&cfg, &mut rng);
            assert!(m.atom_count() >= cfg.min_atoms && m.atom_count() <= cfg.max_atoms);
            let s = canonical_smiles(&m).unwrap();
            parse_smiles(&s).unwrap();
        }
    }

    #[test]
    fn motif_dataset_labels_match_canonical_tokens() {
        let ds = planted_motif_dataset("toy", 60, 7);
        assert_eq!(ds.records().len(), 60);
        let actives = ds.records().iter().filter(|r| r.label == 1).count();
        assert_eq!(actives, 20);
        for r in ds.records() {
            let tokens = tokenize(&r.smiles).unwrap();
            assert_eq!(contains_motif(&tokens), r.label == 1, "record {}", r.id);
        }
    }

    #[test]
    fn motif_detection_requires_consecutive_tokens() {
        let tokens = tokenize("ONNO").unwrap();
        assert!(contains_motif(&tokens));
        let tokens = tokenize("ON(C)NO").unwrap();
        assert!(!contains_motif(&tokens));
        assert_eq!(
            tokenize("ONNO").unwrap()[0].kind,
            TokenKind::Atom
        );
    }

    #[test]
    fn dataset_generation_is_deterministic() {
        let a = planted_motif_dataset("a", 30, 99);
        let b = planted_motif_dataset("a", 30, 99);
        let left: Vec<&str> = a.records().iter().map(|r| r.smiles.as_str()).collect();
        let right: Vec<&str> = b.records().iter().map(|r| r.smiles.as_str()).collect();
        assert_eq!(left, right);
    }
}
