//! Parse a few SMILES strings, well-formed and broken, and show what the
//! parser reports for each.

use smiles_screen::smiles::parse_smiles;

fn main() {
    let inputs = [
        "N(c1)ccc1N",      // two anilines sharing a ring, from the docs
        "CC(=O)[O-]",      // acetate with a charged bracket atom
        "[13CH4]",         // isotope + explicit hydrogens
        "C%12CCCCC%12",    // two-digit ring label
        "C(C",             // unclosed branch
        "C1CC",            // unclosed ring
        "CC.O",            // multi-fragment input is rejected
        "C==C",            // doubled bond symbol
    ];

    for input in inputs {
        match parse_smiles(input) {
            Ok(molecule) => {
                let aromatic = molecule.atoms().iter().filter(|a| a.aromatic).count();
                println!(
                    "{:<14} -> {} atoms, {} bonds, {} aromatic",
                    input,
                    molecule.atom_count(),
                    molecule.bond_count(),
                    aromatic
                );
            }
            Err(diagnostic) => {
                println!("{:<14} -> ERROR {}: {}", input, diagnostic.position, diagnostic.message);
                // a little caret art, since offsets are exact
                println!("{:WIDTH$}{}^", "", " ".repeat(diagnostic.position), WIDTH = 18);
            }
        }
    }
}
