//! SMILES parsing: lexemes in, connected molecular graph out.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet};

use super::lexer::{lex, LexemeData};
use super::{default_bond, Atom, Bond, BondOrder, DiagnosticKind, Molecule, ParseDiagnostic};

fn err(pos: usize, kind: DiagnosticKind, msg: impl Into<String>) -> ParseDiagnostic {
    ParseDiagnostic::new(pos, kind, msg)
}

/// Parses one single-fragment SMILES string into a [`Molecule`].
///
/// Atom order equals reading order; every malformed input yields a
/// [`ParseDiagnostic`] carrying the offset of the offending position in the
/// original (untrimmed) string.
pub fn parse_smiles(text: &str) -> Result<Molecule, ParseDiagnostic> {
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(err(
            0,
            DiagnosticKind::EmptyInput,
            "input is empty after trimming whitespace",
        ));
    }
    let base = text.len() - text.trim_start().len();
    parse_trimmed(trimmed).map_err(|d| d.offset_by(base))
}

fn parse_trimmed(text: &str) -> Result<Molecule, ParseDiagnostic> {
    let lexemes = lex(text)?;

    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut bond_keys: HashSet<(usize, usize)> = HashSet::new();
    // Attachment point for the next atom, plus the branch return stack.
    let mut prev: Option<usize> = None;
    let mut branch_stack: Vec<(usize, usize)> = Vec::new();
    // A bond symbol waiting for its right-hand atom or ring digit.
    let mut pending_bond: Option<(BondOrder, usize)> = None;
    // Ring label -> (atom, explicit bond at the opening, digit offset).
    let mut ring_open: HashMap<u16, (usize, Option<BondOrder>, usize)> = HashMap::new();

    let push_bond = |bonds: &mut Vec<Bond>,
                         bond_keys: &mut HashSet<(usize, usize)>,
                         a: usize,
                         b: usize,
                         order: BondOrder,
                         pos: usize|
     -> Result<(), ParseDiagnostic> {
        let bond = Bond::new(a, b, order);
        if !bond_keys.insert(bond.key()) {
            return Err(err(
                pos,
                DiagnosticKind::BondConflict,
                format!("duplicate bond between atoms {} and {}", a, b),
            ));
        }
        bonds.push(bond);
        Ok(())
    };

    for lexeme in &lexemes {
        match &lexeme.data {
            LexemeData::Atom(atom) => {
                let idx = atoms.len();
                atoms.push(atom.clone());
                if let Some(p) = prev {
                    let order = match pending_bond.take() {
                        Some((order, _)) => order,
                        None => default_bond(&atoms[p], &atoms[idx]),
                    };
                    push_bond(&mut bonds, &mut bond_keys, p, idx, order, lexeme.offset)?;
                }
                prev = Some(idx);
            }
            LexemeData::Bond(order) => {
                if prev.is_none() {
                    return Err(err(
                        lexeme.offset,
                        DiagnosticKind::UnexpectedChar,
                        "bond symbol with no preceding atom",
                    ));
                }
                if pending_bond.is_some() {
                    return Err(err(
                        lexeme.offset,
                        DiagnosticKind::UnexpectedChar,
                        "two bond symbols in a row",
                    ));
                }
                pending_bond = Some((*order, lexeme.offset));
            }
            LexemeData::Ring(label) => {
                let cur = match prev {
                    Some(cur) => cur,
                    None => {
                        return Err(err(
                            lexeme.offset,
                            DiagnosticKind::UnexpectedChar,
                            "ring closure with no preceding atom",
                        ))
                    }
                };
                let close_bond = pending_bond.take().map(|(order, _)| order);
                match ring_open.entry(*label) {
                    Entry::Occupied(entry) => {
                        let (open_atom, open_bond, _) = entry.remove();
                        if open_atom == cur {
                            return Err(err(
                                lexeme.offset,
                                DiagnosticKind::BondConflict,
                                format!("ring closure {} bonds atom {} to itself", label, cur),
                            ));
                        }
                        let order = match (open_bond, close_bond) {
                            (None, None) => default_bond(&atoms[open_atom], &atoms[cur]),
                            (Some(o), None) | (None, Some(o)) => o,
                            (Some(a), Some(b)) if a == b => a,
                            (Some(_), Some(_)) => {
                                return Err(err(
                                    lexeme.offset,
                                    DiagnosticKind::BondConflict,
                                    format!(
                                        "ring closure {} has conflicting bond symbols",
                                        label
                                    ),
                                ))
                            }
                        };
                        push_bond(
                            &mut bonds,
                            &mut bond_keys,
                            open_atom,
                            cur,
                            order,
                            lexeme.offset,
                        )?;
                    }
                    Entry::Vacant(entry) => {
                        entry.insert((cur, close_bond, lexeme.offset));
                    }
                }
            }
            LexemeData::BranchOpen => {
                let cur = match prev {
                    Some(cur) => cur,
                    None => {
                        return Err(err(
                            lexeme.offset,
                            DiagnosticKind::UnexpectedChar,
                            "branch with no preceding atom",
                        ))
                    }
                };
                if let Some((_, pos)) = pending_bond {
                    return Err(err(
                        pos,
                        DiagnosticKind::UnexpectedChar,
                        "bond symbol is not followed by an atom or ring closure",
                    ));
                }
                branch_stack.push((cur, lexeme.offset));
            }
            LexemeData::BranchClose => {
                if let Some((_, pos)) = pending_bond {
                    return Err(err(
                        pos,
                        DiagnosticKind::UnexpectedChar,
                        "bond symbol is not followed by an atom or ring closure",
                    ));
                }
                match branch_stack.pop() {
                    Some((return_to, _)) => prev = Some(return_to),
                    None => {
                        return Err(err(
                            lexeme.offset,
                            DiagnosticKind::UnexpectedChar,
                            "unmatched ')'",
                        ))
                    }
                }
            }
        }
    }

    if let Some((_, pos)) = pending_bond {
        return Err(err(
            pos,
            DiagnosticKind::UnexpectedChar,
            "bond symbol is not followed by an atom or ring closure",
        ));
    }
    if let Some(&(_, pos)) = branch_stack.first() {
        return Err(err(
            pos,
            DiagnosticKind::UnclosedBranch,
            "branch is never closed",
        ));
    }
    if !ring_open.is_empty() {
        let pos = ring_open.values().map(|&(_, _, pos)| pos).min().unwrap();
        return Err(err(
            pos,
            DiagnosticKind::UnclosedRing,
            "ring closure digit is never matched",
        ));
    }

    Ok(Molecule::new(atoms, bonds).expect("parser maintains molecule invariants"))
}
