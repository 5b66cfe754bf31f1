//! Writing a molecule back to SMILES along a caller-supplied depth-first
//! walk. Two passes: classify edges under the walk, then emit text with
//! smallest-available ring digits.

use thiserror::Error;

use super::{default_bond, Atom, BondOrder, Molecule};
use crate::augment::{WalkError, WalkOrder};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WriteError {
    #[error("invalid walk: {0}")]
    InvalidWalk(#[from] WalkError),
    #[error("atom {0} is not expressible in the grammar (aromatic wildcard)")]
    Unwritable(usize),
    #[error("more than 99 ring closures open at once")]
    RingLabelOverflow,
}

struct WalkTree {
    /// Atoms in visit order.
    visit_order: Vec<usize>,
    visit_index: Vec<usize>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    /// Ring bonds as (earlier endpoint, later endpoint) in visit order.
    ring_bonds: Vec<(usize, usize)>,
    /// Ring bond ids incident to each atom, in emission order.
    ring_at: Vec<Vec<usize>>,
}

fn walk_tree(molecule: &Molecule, walk: &WalkOrder) -> WalkTree {
    let n = molecule.atom_count();
    let mut tree = WalkTree {
        visit_order: Vec::with_capacity(n),
        visit_index: vec![usize::MAX; n],
        parent: vec![None; n],
        children: vec![Vec::new(); n],
        ring_bonds: Vec::new(),
        ring_at: vec![Vec::new(); n],
    };
    let mut ring_seen = std::collections::HashSet::new();

    let start = walk.start_atom;
    tree.visit_index[start] = 0;
    tree.visit_order.push(start);
    // Iterative DFS so arbitrarily long chains cannot overflow the stack.
    let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
    while let Some(&mut (u, ref mut next)) = stack.last_mut() {
        if *next >= walk.neighbor_order[u].len() {
            stack.pop();
            continue;
        }
        let v = walk.neighbor_order[u][*next];
        *next += 1;
        if tree.visit_index[v] == usize::MAX {
            tree.visit_index[v] = tree.visit_order.len();
            tree.visit_order.push(v);
            tree.parent[v] = Some(u);
            tree.children[u].push(v);
            stack.push((v, 0));
        } else if tree.parent[u] != Some(v) {
            let key = if u < v { (u, v) } else { (v, u) };
            if ring_seen.insert(key) {
                let (first, second) = if tree.visit_index[u] < tree.visit_index[v] {
                    (u, v)
                } else {
                    (v, u)
                };
                let id = tree.ring_bonds.len();
                tree.ring_bonds.push((first, second));
                tree.ring_at[first].push(id);
                tree.ring_at[second].push(id);
            }
        }
    }
    tree
}

fn atom_text(atom: &Atom, index: usize) -> Result<String, WriteError> {
    let symbol: String = if atom.aromatic {
        if !atom.element.aromatic_capable() {
            // `*` has no lowercase form, so an aromatic wildcard cannot be
            // written without losing the flag.
            return Err(WriteError::Unwritable(index));
        }
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if !atom.needs_brackets() {
        return Ok(symbol);
    }
    let mut text = String::from("[");
    if let Some(isotope) = atom.isotope {
        text.push_str(&isotope.to_string());
    }
    text.push_str(&symbol);
    match atom.explicit_h {
        None => {}
        Some(1) => text.push('H'),
        Some(h) => {
            text.push('H');
            text.push_str(&h.to_string());
        }
    }
    match atom.charge {
        0 => {}
        1 => text.push('+'),
        -1 => text.push('-'),
        c if c > 0 => text.push_str(&format!("+{}", c)),
        c => text.push_str(&format!("-{}", -c)),
    }
    text.push(']');
    Ok(text)
}

fn bond_text(molecule: &Molecule, a: usize, b: usize) -> &'static str {
    let bond = molecule
        .bond_between(a, b)
        .expect("walk only traverses existing bonds");
    if bond.order == default_bond(molecule.atom(a), molecule.atom(b)) {
        return "";
    }
    match bond.order {
        BondOrder::Single => "-",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic => ":",
    }
}

fn ring_digit(label: u16) -> String {
    if label < 10 {
        label.to_string()
    } else {
        format!("%{:02}", label)
    }
}

/// Writes `molecule` as SMILES following `walk`. The output parses back to a
/// graph isomorphic to the input; ring-closure labels take the smallest digit
/// available at their opening; brackets appear only when an atom requires
/// them.
pub fn write_smiles(molecule: &Molecule, walk: &WalkOrder) -> Result<String, WriteError> {
    walk.validate(molecule)?;
    let tree = walk_tree(molecule, walk);

    // Digit bookkeeping: labels are assigned when a ring bond opens and
    // freed when it closes, so digits get reused along the string.
    let mut assigned: Vec<Option<u16>> = vec![None; tree.ring_bonds.len()];
    let mut in_use = [false; 100];

    enum Event {
        Atom(usize),
        Open,
        Close,
    }

    let mut out = String::new();
    let mut events = vec![Event::Atom(walk.start_atom)];
    while let Some(event) = events.pop() {
        match event {
            Event::Open => out.push('('),
            Event::Close => out.push(')'),
            Event::Atom(u) => {
                if let Some(p) = tree.parent[u] {
                    out.push_str(bond_text(molecule, p, u));
                }
                out.push_str(&atom_text(molecule.atom(u), u)?);
                for &ring_id in &tree.ring_at[u] {
                    let (first, second) = tree.ring_bonds[ring_id];
                    match assigned[ring_id] {
                        None => {
                            debug_assert_eq!(u, first);
                            let label = (1..100)
                                .find(|&d| !in_use[d as usize])
                                .ok_or(WriteError::RingLabelOverflow)?;
                            in_use[label as usize] = true;
                            assigned[ring_id] = Some(label);
                            // The explicit bond symbol, when needed, rides on
                            // the opening digit.
                            out.push_str(bond_text(molecule, first, second));
                            out.push_str(&ring_digit(label));
                        }
                        Some(label) => {
                            in_use[label as usize] = false;
                            out.push_str(&ring_digit(label));
                        }
                    }
                }
                // Children: all but the last are parenthesized. Push in
                // reverse so the stack pops them in order; each child's
                // subtree lands above its pending Close.
                if let Some((last, init)) = tree.children[u].split_last() {
                    events.push(Event::Atom(*last));
                    for &child in init.iter().rev() {
                        events.push(Event::Close);
                        events.push(Event::Atom(child));
                        events.push(Event::Open);
                    }
                }
            }
        }
    }
    Ok(out)
}
