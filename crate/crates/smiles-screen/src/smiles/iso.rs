//! Exact attributed-graph isomorphism by joint refinement plus backtracking.
//! Intended for molecules up to a couple of hundred atoms.

use std::collections::BTreeMap;

use super::Molecule;

type AtomKey = (String, bool, i32, Option<u32>, Option<u8>, usize);

fn atom_key(m: &Molecule, i: usize) -> AtomKey {
    let a = m.atom(i);
    (
        a.element.symbol().to_string(),
        a.aromatic,
        a.charge,
        a.isotope,
        a.explicit_h,
        m.degree(i),
    )
}

/// Refines colorings of both graphs together so color ids are comparable
/// across them. Returns None as soon as the color histograms diverge.
fn joint_colors(a: &Molecule, b: &Molecule) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut shared: BTreeMap<AtomKey, usize> = BTreeMap::new();
    for key in (0..a.atom_count())
        .map(|i| atom_key(a, i))
        .chain((0..b.atom_count()).map(|i| atom_key(b, i)))
    {
        let next = shared.len();
        shared.entry(key).or_insert(next);
    }
    // Dense renumber in key order to decouple from insertion order.
    let remap: BTreeMap<&AtomKey, usize> =
        shared.keys().enumerate().map(|(r, k)| (k, r)).collect();
    let mut colors_a: Vec<usize> = (0..a.atom_count())
        .map(|i| remap[&atom_key(a, i)])
        .collect();
    let mut colors_b: Vec<usize> = (0..b.atom_count())
        .map(|i| remap[&atom_key(b, i)])
        .collect();

    loop {
        if histogram(&colors_a) != histogram(&colors_b) {
            return None;
        }
        let key_of = |m: &Molecule, colors: &[usize], i: usize| {
            let mut nb: Vec<(usize, u8)> = m
                .neighbors(i)
                .iter()
                .map(|&j| {
                    let order = m.bond_between(i, j).expect("adjacent").order;
                    (colors[j], order as u8)
                })
                .collect();
            nb.sort_unstable();
            (colors[i], nb)
        };
        let mut keys: BTreeMap<(usize, Vec<(usize, u8)>), usize> = BTreeMap::new();
        let keys_a: Vec<_> = (0..a.atom_count()).map(|i| key_of(a, &colors_a, i)).collect();
        let keys_b: Vec<_> = (0..b.atom_count()).map(|i| key_of(b, &colors_b, i)).collect();
        for key in keys_a.iter().chain(keys_b.iter()) {
            let next = keys.len();
            keys.entry(key.clone()).or_insert(next);
        }
        let remap: BTreeMap<_, usize> = keys.keys().enumerate().map(|(r, k)| (k.clone(), r)).collect();
        let new_a: Vec<usize> = keys_a.iter().map(|k| remap[k]).collect();
        let new_b: Vec<usize> = keys_b.iter().map(|k| remap[k]).collect();
        let stabilized = count_classes(&new_a) == count_classes(&colors_a)
            && count_classes(&new_b) == count_classes(&colors_b);
        colors_a = new_a;
        colors_b = new_b;
        if stabilized {
            if histogram(&colors_a) != histogram(&colors_b) {
                return None;
            }
            return Some((colors_a, colors_b));
        }
    }
}

fn histogram(colors: &[usize]) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for &c in colors {
        *h.entry(c).or_insert(0) += 1;
    }
    h
}

fn count_classes(colors: &[usize]) -> usize {
    let mut sorted: Vec<usize> = colors.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len()
}

/// Decides whether two molecules are isomorphic as attributed graphs:
/// a bijection of atoms preserving atom attributes (bracket presentation
/// excluded) and bond orders.
pub fn is_isomorphic(a: &Molecule, b: &Molecule) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let (colors_a, colors_b) = match joint_colors(a, b) {
        Some(c) => c,
        None => return false,
    };

    // Candidate atoms of b per color.
    let mut by_color: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &c) in colors_b.iter().enumerate() {
        by_color.entry(c).or_default().push(i);
    }
    // Match rare colors first to fail fast.
    let mut order: Vec<usize> = (0..a.atom_count()).collect();
    order.sort_by_key(|&i| (by_color[&colors_a[i]].len(), colors_a[i], i));

    let mut mapping: Vec<Option<usize>> = vec![None; a.atom_count()];
    let mut used: Vec<bool> = vec![false; b.atom_count()];

    fn compatible(
        a: &Molecule,
        b: &Molecule,
        mapping: &[Option<usize>],
        i: usize,
        j: usize,
    ) -> bool {
        for &k in a.neighbors(i) {
            if let Some(jk) = mapping[k] {
                match (a.bond_between(i, k), b.bond_between(j, jk)) {
                    (Some(ba), Some(bb)) if ba.order == bb.order => {}
                    _ => return false,
                }
            }
        }
        // Mapped neighbors of j must be exactly the images of mapped
        // neighbors of i; counting both ways rules out extra edges.
        let mapped_i = a
            .neighbors(i)
            .iter()
            .filter(|&&k| mapping[k].is_some())
            .count();
        let mapped_j = b
            .neighbors(j)
            .iter()
            .filter(|&&jk| mapping.iter().any(|&m| m == Some(jk)))
            .count();
        mapped_i == mapped_j
    }

    fn search(
        a: &Molecule,
        b: &Molecule,
        order: &[usize],
        depth: usize,
        colors_a: &[usize],
        by_color: &BTreeMap<usize, Vec<usize>>,
        mapping: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
    ) -> bool {
        if depth == order.len() {
            return true;
        }
        let i = order[depth];
        for &j in &by_color[&colors_a[i]] {
            if used[j] || !compatible(a, b, mapping, i, j) {
                continue;
            }
            mapping[i] = Some(j);
            used[j] = true;
            if search(a, b, order, depth + 1, colors_a, by_color, mapping, used) {
                return true;
            }
            mapping[i] = None;
            used[j] = false;
        }
        false
    }

    search(
        a,
        b,
        &order,
        0,
        &colors_a,
        &by_color,
        &mut mapping,
        &mut used,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smiles::parse_smiles;

    #[test]
    fn identical_molecules_are_isomorphic() {
        let m = parse_smiles("N(c1)ccc1N").unwrap();
        assert!(is_isomorphic(&m, &m));
    }

    #[test]
    fn different_elements_are_not() {
        let a = parse_smiles("CCO").unwrap();
        let b = parse_smiles("CCN").unwrap();
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn bond_orders_matter() {
        let a = parse_smiles("CC=O").unwrap();
        let b = parse_smiles("CCO").unwrap();
        assert!(!is_isomorphic(&a, &b));
    }

    #[test]
    fn bracket_presentation_does_not_matter() {
        let a = parse_smiles("[C]").unwrap();
        let b = parse_smiles("C").unwrap();
        assert!(is_isomorphic(&a, &b));
    }

    #[test]
    fn same_degree_sequence_different_structure() {
        // Hexane vs 2-methylpentane share atom counts, not structure.
        let a = parse_smiles("CCCCCC").unwrap();
        let b = parse_smiles("CC(C)CCC").unwrap();
        assert!(!is_isomorphic(&a, &b));
    }

    /// Brute-force oracle: tries every atom bijection. Only usable on tiny
    /// molecules; independent of the refinement-guided implementation.
    fn brute_force_isomorphic(a: &Molecule, b: &Molecule) -> bool {
        if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
            return false;
        }
        let n = a.atom_count();
        assert!(n <= 8, "oracle is factorial; keep it tiny");
        let mut perm: Vec<usize> = (0..n).collect();
        loop {
            let ok = (0..n).all(|i| {
                a.atom(i).invariant_key() == b.atom(perm[i]).invariant_key()
            }) && a.bonds().iter().all(|bond| {
                matches!(
                    b.bond_between(perm[bond.a], perm[bond.b]),
                    Some(other) if other.order == bond.order
                )
            });
            if ok {
                return true;
            }
            // next_permutation
            let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
                return false;
            };
            let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
            perm.swap(i, j);
            perm[i + 1..].reverse();
        }
    }

    #[test]
    fn rewrites_of_the_figure_molecule_match_brute_force() {
        use crate::augment::random_walk;
        use crate::smiles::write_smiles;
        use rand::SeedableRng;
        let m = parse_smiles("N(c1)ccc1N").unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let rewrite = write_smiles(&m, &random_walk(&m, &mut rng)).unwrap();
            let r = parse_smiles(&rewrite).unwrap();
            assert!(brute_force_isomorphic(&m, &r), "oracle rejects {}", rewrite);
            assert!(is_isomorphic(&m, &r), "implementation rejects {}", rewrite);
        }
        // A deliberately different 6-atom graph: the ring does not pass
        // through nitrogen here.
        let other = parse_smiles("Nc1ccc1N").unwrap();
        assert!(!brute_force_isomorphic(&m, &other));
        assert!(!is_isomorphic(&m, &other));
        // Agreement on random small molecule pairs.
        for seed in 0..40u64 {
            let cfg = crate::synthetic::MoleculeGenConfig::tiny();
            let a = crate::synthetic::random_molecule(
                &cfg,
                &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed),
            );
            let b = crate::synthetic::random_molecule(
                &cfg,
                &mut rand_chacha::ChaCha8Rng::seed_from_u64(seed + 1),
            );
            assert_eq!(is_isomorphic(&a, &b), brute_force_isomorphic(&a, &b));
            assert!(is_isomorphic(&a, &a));
        }
    }
}
