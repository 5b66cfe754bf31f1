//! Molecular graphs and the SMILES grammar subset: parsing, writing along
//! arbitrary walks, canonical ordering, and attributed-graph isomorphism.

mod canon;
mod iso;
pub(crate) mod lexer;
mod parser;
mod writer;

pub use canon::{canonical_ranks, canonical_smiles, symmetry_classes};
pub use iso::is_isomorphic;
pub use parser::parse_smiles;
pub use writer::{write_smiles, WriteError};

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Chemical element of an atom. Everything outside the organic subset and the
/// wildcard is carried verbatim as a 1-2 letter bracket symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
    /// The `*` wildcard atom.
    Wildcard,
    /// Any other 1-2 letter element symbol, as written in brackets.
    Other(String),
}

impl Element {
    /// Looks up a symbol, normalizing known elements to their variant.
    /// Accepts one uppercase letter optionally followed by one lowercase
    /// letter, or `*`.
    pub fn from_symbol(sym: &str) -> Option<Element> {
        match sym {
            "B" => Some(Element::B),
            "C" => Some(Element::C),
            "N" => Some(Element::N),
            "O" => Some(Element::O),
            "P" => Some(Element::P),
            "S" => Some(Element::S),
            "F" => Some(Element::F),
            "Cl" => Some(Element::Cl),
            "Br" => Some(Element::Br),
            "I" => Some(Element::I),
            "*" => Some(Element::Wildcard),
            _ => {
                let mut chars = sym.chars();
                match (chars.next(), chars.next(), chars.next()) {
                    (Some(a), None, _) if a.is_ascii_uppercase() => {
                        Some(Element::Other(sym.to_string()))
                    }
                    (Some(a), Some(b), None) if a.is_ascii_uppercase() && b.is_ascii_lowercase() => {
                        Some(Element::Other(sym.to_string()))
                    }
                    _ => None,
                }
            }
        }
    }

    pub fn symbol(&self) -> &str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::Wildcard => "*",
            Element::Other(s) => s,
        }
    }

    /// True for the ten organic-subset elements that may be written bare.
    pub fn in_organic_subset(&self) -> bool {
        !matches!(self, Element::Wildcard | Element::Other(_))
    }

    /// Elements that have a lowercase aromatic form.
    pub fn aromatic_capable(&self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// A single atom with the attributes the grammar subset can express.
/// Chirality markers are parsed and discarded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    /// Formal charge in elementary units.
    pub charge: i32,
    pub isotope: Option<u32>,
    /// Explicit hydrogen count from a bracket `H` field; stored but unused
    /// by the featurizers.
    pub explicit_h: Option<u8>,
    /// Whether the atom was written (or must be written) in brackets.
    pub bracket: bool,
}

impl Atom {
    /// A plain organic-subset atom as written outside brackets.
    pub fn organic(element: Element, aromatic: bool) -> Atom {
        Atom {
            element,
            aromatic,
            charge: 0,
            isotope: None,
            explicit_h: None,
            bracket: false,
        }
    }

    /// Whether writing this atom back requires bracket notation.
    pub fn needs_brackets(&self) -> bool {
        self.charge != 0
            || self.isotope.is_some()
            || self.explicit_h.is_some()
            || !(self.element.in_organic_subset() || self.element == Element::Wildcard)
    }

    /// The attributes that participate in graph equality. The `bracket` flag
    /// is presentation only: `[C]` and `C` denote the same atom here.
    pub fn invariant_key(&self) -> (&Element, bool, i32, Option<u32>, Option<u8>) {
        (
            &self.element,
            self.aromatic,
            self.charge,
            self.isotope,
            self.explicit_h,
        )
    }

    fn validate(&self) -> Result<(), MoleculeError> {
        if self.aromatic && !(self.element.aromatic_capable() || self.element == Element::Wildcard)
        {
            return Err(MoleculeError::InvalidAtom(format!(
                "element {} cannot be aromatic",
                self.element
            )));
        }
        if !self.bracket
            && (self.charge != 0 || self.isotope.is_some() || self.explicit_h.is_some())
        {
            return Err(MoleculeError::InvalidAtom(
                "non-bracket atom carries bracket-only attributes".into(),
            ));
        }
        Ok(())
    }
}

/// Bond order; directional bonds are recorded as single.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn symbol(&self) -> char {
        match self {
            BondOrder::Single => '-',
            BondOrder::Double => '=',
            BondOrder::Triple => '#',
            BondOrder::Aromatic => ':',
        }
    }
}

/// An undirected bond between two atom indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(a: usize, b: usize, order: BondOrder) -> Bond {
        Bond { a, b, order }
    }

    /// Endpoints normalized to (low, high) for map keys.
    pub fn key(&self) -> (usize, usize) {
        if self.a <= self.b {
            (self.a, self.b)
        } else {
            (self.b, self.a)
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

/// The default bond written between two adjacent atoms when no symbol is
/// present: aromatic if both atoms are aromatic, single otherwise.
pub fn default_bond(a: &Atom, b: &Atom) -> BondOrder {
    if a.aromatic && b.aromatic {
        BondOrder::Aromatic
    } else {
        BondOrder::Single
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MoleculeError {
    #[error("molecule must contain at least one atom")]
    Empty,
    #[error("bond endpoint {0} out of range")]
    BondOutOfRange(usize),
    #[error("bond connects atom {0} to itself")]
    SelfLoop(usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
    #[error("molecule graph is not connected")]
    Disconnected,
    #[error("invalid atom: {0}")]
    InvalidAtom(String),
    #[error("atom permutation is not a bijection")]
    BadPermutation,
}

/// A connected attributed molecular graph. Atom order is significant (it is
/// the SMILES reading order for parsed molecules); adjacency lists mirror the
/// bond list in insertion order.
#[derive(Debug, Clone)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<usize>>,
    pair_to_bond: HashMap<(usize, usize), usize>,
}

impl Molecule {
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Molecule, MoleculeError> {
        if atoms.is_empty() {
            return Err(MoleculeError::Empty);
        }
        for atom in &atoms {
            atom.validate()?;
        }
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut pair_to_bond = HashMap::new();
        for (i, bond) in bonds.iter().enumerate() {
            if bond.a >= n {
                return Err(MoleculeError::BondOutOfRange(bond.a));
            }
            if bond.b >= n {
                return Err(MoleculeError::BondOutOfRange(bond.b));
            }
            if bond.a == bond.b {
                return Err(MoleculeError::SelfLoop(bond.a));
            }
            if pair_to_bond.insert(bond.key(), i).is_some() {
                return Err(MoleculeError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push(bond.b);
            adjacency[bond.b].push(bond.a);
        }
        let mol = Molecule {
            atoms,
            bonds,
            adjacency,
            pair_to_bond,
        };
        if !mol.is_connected() {
            return Err(MoleculeError::Disconnected);
        }
        Ok(mol)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    /// Neighbor atom indices of `i`, in bond insertion order.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn bond_between(&self, i: usize, j: usize) -> Option<&Bond> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.pair_to_bond.get(&key).map(|&idx| &self.bonds[idx])
    }

    fn is_connected(&self) -> bool {
        let n = self.atoms.len();
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }

    /// Rebuilds the molecule with atom `i` renamed to `perm[i]`. Bond order
    /// within the new adjacency lists follows the remapped bond list.
    pub fn relabeled(&self, perm: &[usize]) -> Result<Molecule, MoleculeError> {
        let n = self.atoms.len();
        if perm.len() != n {
            return Err(MoleculeError::BadPermutation);
        }
        let mut seen = vec![false; n];
        for &p in perm {
            if p >= n || seen[p] {
                return Err(MoleculeError::BadPermutation);
            }
            seen[p] = true;
        }
        let mut atoms = vec![self.atoms[0].clone(); n];
        for (i, atom) in self.atoms.iter().enumerate() {
            atoms[perm[i]] = atom.clone();
        }
        let mut bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|b| Bond::new(perm[b.a], perm[b.b], b.order))
            .collect();
        // Keep bond list order canonical under relabeling so adjacency order
        // is a function of the new labels alone.
        bonds.sort_by_key(|b| b.key());
        Molecule::new(atoms, bonds)
    }
}

/// What went wrong while reading a SMILES string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiagnosticKind {
    UnexpectedChar,
    UnclosedRing,
    UnclosedBranch,
    UnclosedBracket,
    BondConflict,
    EmptyInput,
    MultiFragment,
}

impl fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            DiagnosticKind::UnexpectedChar => "unexpected_char",
            DiagnosticKind::UnclosedRing => "unclosed_ring",
            DiagnosticKind::UnclosedBranch => "unclosed_branch",
            DiagnosticKind::UnclosedBracket => "unclosed_bracket",
            DiagnosticKind::BondConflict => "bond_conflict",
            DiagnosticKind::EmptyInput => "empty_input",
            DiagnosticKind::MultiFragment => "multi_fragment",
        };
        f.write_str(name)
    }
}

/// A parse failure with the byte offset of the offending position (equal to
/// the character offset for ASCII input).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseDiagnostic {
    pub position: usize,
    pub kind: DiagnosticKind,
    pub message: String,
}

impl ParseDiagnostic {
    pub fn new(position: usize, kind: DiagnosticKind, message: impl Into<String>) -> Self {
        ParseDiagnostic {
            position,
            kind,
            message: message.into(),
        }
    }

    pub(crate) fn offset_by(mut self, base: usize) -> Self {
        self.position += base;
        self
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} at offset {}: {}",
            self.kind, self.position, self.message
        )
    }
}

impl std::error::Error for ParseDiagnostic {}
