//! Independent oracles shared by the integration tests. Everything here
//! recomputes results by brute force or generic optimization, never through
//! the code paths under test.

#![allow(dead_code)]

use smiles_screen::models::GramMatrix;
use smiles_screen::smiles::Molecule;

/// Generic projected-gradient solver for the SVM dual
///   min 1/2 a'Qa - e'a   s.t.  0 <= a <= C,  y'a = 0,
/// with Q_ij = y_i y_j K_ij. Slow but implementation-independent; returns
/// the objective value at its solution.
pub fn qp_dual_objective_oracle(gram: &GramMatrix, y: &[f64], c: f64, iterations: usize) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * gram.get(i, j);

    // Lipschitz bound for the step size: max row sum of |Q|.
    let mut lipschitz: f64 = 0.0;
    for i in 0..n {
        let row: f64 = (0..n).map(|j| q(i, j).abs()).sum();
        lipschitz = lipschitz.max(row);
    }
    let step = 1.0 / lipschitz.max(1e-12);

    // Projection onto the box intersected with the hyperplane y'a = 0:
    // bisection over the multiplier nu in clip(a - nu*y).
    let project = |alpha: &mut Vec<f64>| {
        let residual = |nu: f64| -> f64 {
            (0..n)
                .map(|i| y[i] * (alpha[i] - nu * y[i]).clamp(0.0, c))
                .sum()
        };
        let bound = alpha.iter().fold(c + 1.0, |acc, a| acc + a.abs());
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if residual(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let nu = 0.5 * (lo + hi);
        for i in 0..n {
            alpha[i] = (alpha[i] - nu * y[i]).clamp(0.0, c);
        }
    };

    let mut alpha = vec![0.0; n];
    project(&mut alpha);
    for _ in 0..iterations {
        let mut grad = vec![-1.0; n];
        for i in 0..n {
            for j in 0..n {
                grad[i] += q(i, j) * alpha[j];
            }
        }
        for i in 0..n {
            alpha[i] -= step * grad[i];
        }
        project(&mut alpha);
    }

    let mut quadratic = 0.0;
    for i in 0..n {
        for j in 0..n {
            quadratic += alpha[i] * alpha[j] * q(i, j);
        }
    }
    0.5 * quadratic - alpha.iter().sum::<f64>()
}

/// All simple carbon paths by exhaustive DFS without pruning; returns
/// (longest length, minimum diameter among longest chains).
pub fn brute_force_chain_and_diameter(molecule: &Molecule) -> (usize, usize) {
    use smiles_screen::smiles::Element;
    use std::collections::VecDeque;

    let is_carbon = |i: usize| molecule.atom(i).element == Element::C;
    let diameter_of = |chain: &[usize]| -> usize {
        let n = molecule.atom_count();
        let mut dist = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for &c in chain {
            dist[c] = 0;
            queue.push_back(c);
        }
        while let Some(u) = queue.pop_front() {
            for &v in molecule.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist.into_iter().max().unwrap_or(0)
    };

    fn extend(
        molecule: &Molecule,
        is_carbon: &dyn Fn(usize) -> bool,
        u: usize,
        on_path: &mut Vec<bool>,
        path: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
    ) {
        path.push(u);
        on_path[u] = true;
        paths.push(path.clone());
        for &v in molecule.neighbors(u) {
            if is_carbon(v) && !on_path[v] {
                extend(molecule, is_carbon, v, on_path, path, paths);
            }
        }
        on_path[u] = false;
        path.pop();
    }

    let mut paths = Vec::new();
    for i in 0..molecule.atom_count() {
        if is_carbon(i) {
            extend(
                molecule,
                &is_carbon,
                i,
                &mut vec![false; molecule.atom_count()],
                &mut Vec::new(),
                &mut paths,
            );
        }
    }
    let longest = paths.iter().map(Vec::len).max().expect("some carbon path");
    let diameter = paths
        .iter()
        .filter(|p| p.len() == longest)
        .map(|p| diameter_of(p))
        .min()
        .expect("some longest chain");
    (longest, diameter)
}

/// Factorial-time isomorphism decision for tiny molecules.
pub fn brute_force_isomorphic(a: &Molecule, b: &Molecule) -> bool {
    if a.atom_count() != b.atom_count() || a.bond_count() != b.bond_count() {
        return false;
    }
    let n = a.atom_count();
    assert!(n <= 8, "factorial oracle needs tiny inputs");
    let mut perm: Vec<usize> = (0..n).collect();
    loop {
        let ok = (0..n).all(|i| a.atom(i).invariant_key() == b.atom(perm[i]).invariant_key())
            && a.bonds().iter().all(|bond| {
                matches!(
                    b.bond_between(perm[bond.a], perm[bond.b]),
                    Some(other) if other.order == bond.order
                )
            });
        if ok {
            return true;
        }
        let Some(i) = (0..n - 1).rev().find(|&i| perm[i] < perm[i + 1]) else {
            return false;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).unwrap();
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
}
