//! Finite projective control groups, their Cayley graphs and Eulerian cycles.
//!
//! Group elements are stored modulo global phase: every matrix is rotated so
//! that its first entry of largest modulus is real and positive, and two
//! elements are identified when their canonical forms agree entrywise to
//! [`PHASE_TOL`].

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{DenseOperator, OperatorSum, PauliWord, UNITARY_TOL};

/// Entrywise tolerance for identifying canonicalized elements.
pub const PHASE_TOL: f64 = 1e-8;

/// Closure cap used by the presets.
pub const DEFAULT_MAX_ORDER: usize = 256;

/// A generator `γ`: its unitary `U_γ`, plus the Hermitian axis `X_γ` and
/// pulse area `θ` such that `exp(−iθ X_γ) ∝ U_γ`.
#[derive(Debug, Clone)]
pub struct GeneratorSpec {
    pub label: String,
    pub unitary: DenseOperator,
    pub control_axis: OperatorSum,
    pub target_angle: f64,
}

impl GeneratorSpec {
    /// Generator realized by driving `axis` with total area `angle`.
    pub fn from_axis(label: impl Into<String>, axis: OperatorSum, angle: f64) -> Result<Self> {
        let unitary = axis.to_dense()?.matrix_exp(angle)?;
        Ok(Self {
            label: label.into(),
            unitary,
            control_axis: axis,
            target_angle: angle,
        })
    }

    /// Generator with an explicit unitary; the axis/angle pair must reproduce
    /// it up to phase within `1e−10`.
    pub fn new(
        label: impl Into<String>,
        unitary: DenseOperator,
        control_axis: OperatorSum,
        target_angle: f64,
    ) -> Result<Self> {
        let label = label.into();
        unitary.ensure_unitary(UNITARY_TOL)?;
        let driven = control_axis.to_dense()?.matrix_exp(target_angle)?;
        let mismatch = phase_distance(&driven, &unitary);
        if mismatch > 1e-10 {
            return Err(Error::GeneratorMismatch { label, mismatch });
        }
        Ok(Self {
            label,
            unitary,
            control_axis,
            target_angle,
        })
    }
}

/// `1 − |tr(a†b)|/d`: zero iff `a = e^{iφ} b` for unitaries.
pub fn phase_distance(a: &DenseOperator, b: &DenseOperator) -> f64 {
    let overlap = (a.matrix().adjoint() * b.matrix()).trace().norm();
    (1.0 - overlap / a.dim() as f64).max(0.0)
}

/// Rotate the global phase so the first entry (row-major) of maximal modulus
/// is real and positive.
pub fn canonicalize(u: &DenseOperator) -> DenseOperator {
    let m = u.matrix();
    let max = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return u.clone();
    }
    let d = u.dim();
    let mut pivot = Complex64::new(1.0, 0.0);
    'scan: for r in 0..d {
        for c in 0..d {
            let z = m[(r, c)];
            if z.norm() >= max - 1e-9 {
                pivot = z;
                break 'scan;
            }
        }
    }
    u.scale_complex(pivot.conj() / pivot.norm())
}

fn same_element(a: &DenseOperator, b: &DenseOperator) -> bool {
    a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .all(|(x, y)| (x - y).norm() < PHASE_TOL)
}

/// Finite group of unitaries modulo phase, closed from a generator set.
#[derive(Debug, Clone)]
pub struct GroupClosure {
    label: String,
    elements: Vec<DenseOperator>,
    element_labels: Vec<String>,
    generators: Vec<GeneratorSpec>,
    /// `generator_perms[k][g]` = index of `γ_k · g`.
    generator_perms: Vec<Vec<usize>>,
    /// `mult_table[a][b]` = index of `a · b`.
    mult_table: Vec<Vec<usize>>,
    /// Generator word reaching each element from the identity (first letter applied first).
    words: Vec<Vec<usize>>,
}

impl GroupClosure {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn n_generators(&self) -> usize {
        self.generators.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.elements[0].n_qubits()
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    pub fn elements(&self) -> &[DenseOperator] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &DenseOperator {
        &self.elements[i]
    }

    pub fn element_labels(&self) -> &[String] {
        &self.element_labels
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    pub fn generator_labels(&self) -> Vec<String> {
        self.generators.iter().map(|g| g.label.clone()).collect()
    }

    pub fn generator_index(&self, label: &str) -> Option<usize> {
        self.generators.iter().position(|g| g.label == label)
    }

    pub fn generator_perm(&self, k: usize) -> &[usize] {
        &self.generator_perms[k]
    }

    pub fn mult_table(&self) -> &[Vec<usize>] {
        &self.mult_table
    }

    pub fn multiply(&self, a: usize, b: usize) -> usize {
        self.mult_table[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.mult_table[a]
            .iter()
            .position(|&p| p == 0)
            .expect("every row of a group table contains the identity")
    }

    /// Index of `u` (up to phase), if it belongs to the group.
    pub fn find(&self, u: &DenseOperator) -> Option<usize> {
        if u.dim() != self.elements[0].dim() {
            return None;
        }
        let c = canonicalize(u);
        self.elements.iter().position(|e| same_element(e, &c))
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.element_labels.iter().position(|l| l == label)
    }

    /// Generator word of element `i`, outermost factor first (`γ_k ⋯ γ_1`).
    pub fn word(&self, i: usize) -> Vec<&str> {
        self.words[i]
            .iter()
            .rev()
            .map(|&k| self.generators[k].label.as_str())
            .collect()
    }
}

/// Breadth-first closure under left multiplication by the generators.
pub fn close_group(
    label: impl Into<String>,
    generators: Vec<GeneratorSpec>,
    max_order: usize,
) -> Result<GroupClosure> {
    let first = generators
        .first()
        .ok_or_else(|| Error::Invalid("at least one generator is required".into()))?;
    let dim = first.unitary.dim();
    let n_qubits = first.unitary.n_qubits();
    for g in &generators {
        if g.unitary.dim() != dim {
            return Err(Error::DimensionMismatch(format!(
                "generator `{}` acts on {} qubits, expected {n_qubits}",
                g.label,
                g.unitary.n_qubits()
            )));
        }
        g.unitary.ensure_unitary(UNITARY_TOL)?;
    }

    let mut elements = vec![canonicalize(&DenseOperator::identity(n_qubits))];
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    let mut perms = vec![Vec::new(); generators.len()];
    let mut cursor = 0;
    while cursor < elements.len() {
        for (k, g) in generators.iter().enumerate() {
            let prod = canonicalize(&(&g.unitary * &elements[cursor]));
            let idx = match elements.iter().position(|e| same_element(e, &prod)) {
                Some(i) => i,
                None => {
                    if elements.len() >= max_order {
                        return Err(Error::ClosureOverflow(max_order));
                    }
                    let mut w = words[cursor].clone();
                    w.push(k);
                    elements.push(prod);
                    words.push(w);
                    elements.len() - 1
                }
            };
            perms[k].push(idx);
        }
        cursor += 1;
    }

    // a·b: apply the generator word of a to b, innermost letter first
    let order = elements.len();
    let mult_table = (0..order)
        .map(|a| {
            (0..order)
                .map(|b| words[a].iter().fold(b, |acc, &k| perms[k][acc]))
                .collect()
        })
        .collect();

    let element_labels = elements
        .iter()
        .zip(&words)
        .map(|(e, w)| {
            pauli_label(e).unwrap_or_else(|| {
                w.iter()
                    .rev()
                    .map(|&k| generators[k].label.as_str())
                    .collect::<Vec<_>>()
                    .join("*")
            })
        })
        .collect();

    Ok(GroupClosure {
        label: label.into(),
        elements,
        element_labels,
        generators,
        generator_perms: perms,
        mult_table,
        words,
    })
}

/// Pauli word equal to `u` up to phase, if any.
pub fn as_pauli_word(u: &DenseOperator) -> Option<PauliWord> {
    let m = u.matrix();
    let d = u.dim();
    let n = u.n_qubits();
    let x = (0..d).find(|&r| m[(r, 0)].norm() > 0.5)?;
    let reference = m[(x, 0)];
    let mut z = 0usize;
    for q in 0..n {
        let bit = 1usize << q;
        let ratio = m[(bit ^ x, bit)] / reference;
        if (ratio + 1.0).norm() < 1e-6 {
            z |= bit;
        } else if (ratio - 1.0).norm() >= 1e-6 {
            return None;
        }
    }
    let mut letters = Vec::new();
    for q in 0..n {
        let bit = 1usize << (n - 1 - q);
        let p = match (x & bit != 0, z & bit != 0) {
            (false, false) => continue,
            (true, false) => crate::pauli::Pauli::X,
            (false, true) => crate::pauli::Pauli::Z,
            (true, true) => crate::pauli::Pauli::Y,
        };
        letters.push((q, p));
    }
    let word = PauliWord::new(n, letters).ok()?;
    let p = OperatorSum::term(1.0, word.clone()).to_dense().ok()?;
    (phase_distance(&p, u) < 1e-9).then_some(word)
}

fn pauli_label(u: &DenseOperator) -> Option<String> {
    as_pauli_word(u).map(|w| w.to_string().replace(' ', ""))
}

/// Directed Cayley graph: an edge `g → γg` for every element and generator.
#[derive(Debug, Clone, Serialize)]
pub struct CayleyGraph {
    pub n_vertices: usize,
    pub generator_labels: Vec<String>,
    /// `(generator, from, to)`, grouped by vertex in generator order.
    pub edges: Vec<(usize, usize, usize)>,
    pub start: usize,
}

pub fn build_cayley_graph(g: &GroupClosure) -> CayleyGraph {
    let mut edges = Vec::with_capacity(g.order() * g.n_generators());
    for v in 0..g.order() {
        for k in 0..g.n_generators() {
            edges.push((k, v, g.generator_perms[k][v]));
        }
    }
    CayleyGraph {
        n_vertices: g.order(),
        generator_labels: g.generator_labels(),
        edges,
        start: g.identity_index(),
    }
}

impl CayleyGraph {
    pub fn n_generators(&self) -> usize {
        self.generator_labels.len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == v).count()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.2 == v).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EulerStep {
    pub generator: usize,
    pub from: usize,
    pub to: usize,
}

/// Closed walk over every Cayley-graph edge exactly once.
#[derive(Debug, Clone, Serialize)]
pub struct EulerCycle {
    pub steps: Vec<EulerStep>,
    pub generator_labels: Vec<String>,
    pub n_vertices: usize,
    pub start: usize,
}

impl EulerCycle {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.steps
            .iter()
            .map(|s| self.generator_labels[s.generator].as_str())
            .collect()
    }

    /// Checks edge coverage, chaining, closure at the start vertex and the
    /// per-vertex visit count `|Γ|`.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        let n_gen = self.generator_labels.len();
        if self.steps.len() != self.n_vertices * n_gen {
            return Err(format!(
                "length {} != |G||Γ| = {}",
                self.steps.len(),
                self.n_vertices * n_gen
            ));
        }
        let mut seen = vec![false; self.n_vertices * n_gen];
        let mut visits = vec![0usize; self.n_vertices];
        for (j, s) in self.steps.iter().enumerate() {
            let key = s.from * n_gen + s.generator;
            if seen[key] {
                return Err(format!("edge ({}, {}) repeated", s.generator, s.from));
            }
            seen[key] = true;
            visits[s.from] += 1;
            let next = &self.steps[(j + 1) % self.steps.len()];
            if s.to != next.from {
                return Err(format!("step {j} does not chain"));
            }
        }
        if self.steps.first().map(|s| s.from) != Some(self.start)
            || self.steps.last().map(|s| s.to) != Some(self.start)
        {
            return Err("cycle does not start and end at the identity".into());
        }
        if let Some(v) = visits.iter().position(|&c| c != n_gen) {
            return Err(format!("vertex {v} visited {} times", visits[v]));
        }
        Ok(())
    }
}

/// Hierholzer's algorithm from the identity, taking each vertex's outgoing
/// edges in declared generator order.
pub fn eulerian_cycle(graph: &CayleyGraph) -> Result<EulerCycle> {
    let n = graph.n_vertices;
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for &(k, from, to) in &graph.edges {
        adj[from].push((k, to));
    }
    for v in 0..n {
        if adj[v].len() != graph.in_degree(v) {
            return Err(Error::Invalid(format!("vertex {v} is unbalanced")));
        }
    }
    let mut next = vec![0usize; n];
    let mut stack: Vec<(usize, Option<EulerStep>)> = vec![(graph.start, None)];
    let mut circuit = Vec::with_capacity(graph.edges.len());
    while let Some((v, _)) = stack.last() {
        let v = *v;
        if next[v] < adj[v].len() {
            let (k, to) = adj[v][next[v]];
            next[v] += 1;
            stack.push((
                to,
                Some(EulerStep {
                    generator: k,
                    from: v,
                    to,
                }),
            ));
        } else {
            let (_, step) = stack.pop().expect("stack is non-empty");
            if let Some(s) = step {
                circuit.push(s);
            }
        }
    }
    circuit.reverse();
    if circuit.len() != graph.edges.len() {
        return Err(Error::Invalid(
            "Cayley graph is disconnected; generators do not generate the group".into(),
        ));
    }
    Ok(EulerCycle {
        steps: circuit,
        generator_labels: graph.generator_labels.clone(),
        n_vertices: n,
        start: graph.start,
    })
}

fn lifted_elements(g: &GroupClosure, n_qubits: usize) -> Result<Vec<DenseOperator>> {
    g.elements.iter().map(|u| u.lift(n_qubits)).collect()
}

/// Centralizer projector `Π_G(a) = (1/|G|) Σ_g U_g† a U_g`. Elements are
/// lifted as `U_g ⊗ I` when `a` lives on a larger register.
pub fn group_average(a: &DenseOperator, g: &GroupClosure) -> Result<DenseOperator> {
    let elems = lifted_elements(g, a.n_qubits())?;
    let mut acc = DenseOperator::zeros(a.n_qubits());
    for u in &elems {
        acc = &acc + &a.conjugate_unchecked(u);
    }
    Ok(acc.scale(1.0 / g.order() as f64))
}

/// Dimension of the commutant `{A : [A, U_g] = 0 ∀g}`; 1 iff irreducible.
///
/// Up to four qubits the commutation constraints `U_γ A − A U_γ = 0` for
/// every generator are stacked and the null space counted by SVD. Larger
/// registers use the rank of `Π_G`, which projects onto the same space.
pub fn commutant_dimension(g: &GroupClosure) -> usize {
    let d = g.elements[0].dim();
    if g.n_qubits() <= 4 {
        let d2 = d * d;
        let mut system = nalgebra::DMatrix::<Complex64>::zeros(g.n_generators() * d2, d2);
        let eye = nalgebra::DMatrix::<Complex64>::identity(d, d);
        for (k, gen) in g.generators.iter().enumerate() {
            let u = gen.unitary.matrix();
            // column-major vec: vec(UA) = (I ⊗ U) vec(A), vec(AU) = (Uᵀ ⊗ I) vec(A)
            let block = eye.kronecker(u) - u.transpose().kronecker(&eye);
            system.view_mut((k * d2, 0), (d2, d2)).copy_from(&block);
        }
        let sv = system.singular_values();
        let scale = sv.iter().fold(0.0f64, |m, v| m.max(*v)).max(1.0);
        let rank = sv.iter().filter(|&&s| s > 1e-9 * scale).count();
        d2 - rank
    } else {
        // tr(Π_G) over the matrix-unit basis
        let mut trace = 0.0;
        for u in &g.elements {
            trace += u.trace().norm_sqr();
        }
        (trace / g.order() as f64).round() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Pauli;
    use std::f64::consts::FRAC_PI_2;

    fn pauli_gen(n: usize, label: &str, qubits: &[usize], p: Pauli) -> GeneratorSpec {
        let axis = OperatorSum::new(
            n,
            qubits.iter().map(|&q| (1.0, PauliWord::single(n, q, p))),
        )
        .unwrap();
        GeneratorSpec::from_axis(label, axis, FRAC_PI_2).unwrap()
    }

    fn g1() -> GroupClosure {
        close_group(
            "g1",
            vec![
                pauli_gen(2, "x1", &[0], Pauli::X),
                pauli_gen(2, "z1", &[0], Pauli::Z),
            ],
            DEFAULT_MAX_ORDER,
        )
        .unwrap()
    }

    fn pauli2() -> GroupClosure {
        close_group(
            "pauli2",
            vec![
                pauli_gen(2, "x1", &[0], Pauli::X),
                pauli_gen(2, "z1", &[0], Pauli::Z),
                pauli_gen(2, "x2", &[1], Pauli::X),
                pauli_gen(2, "z2", &[1], Pauli::Z),
            ],
            DEFAULT_MAX_ORDER,
        )
        .unwrap()
    }

    #[test]
    fn g1_has_four_pauli_elements() {
        let g = g1();
        assert_eq!(g.order(), 4);
        let mut labels = g.element_labels().to_vec();
        labels.sort();
        assert_eq!(labels, vec!["I", "X0", "Y0", "Z0"]);
    }

    #[test]
    fn identity_generator_gives_trivial_group() {
        let id = GeneratorSpec::from_axis("id", OperatorSum::zero(1), FRAC_PI_2).unwrap();
        let g = close_group("trivial", vec![id], 4).unwrap();
        assert_eq!(g.order(), 1);
        assert_eq!(commutant_dimension(&g), 4);
    }

    #[test]
    fn overflow_is_reported() {
        // rotation by an irrational fraction of 2π never closes
        let axis = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::Z));
        let gen = GeneratorSpec::from_axis("rz", axis, 1.0).unwrap();
        assert!(matches!(
            close_group("inf", vec![gen], 16),
            Err(Error::ClosureOverflow(16))
        ));
    }

    #[test]
    fn empty_generator_list_rejected() {
        assert!(close_group("none", vec![], 8).is_err());
    }

    #[test]
    fn mult_table_is_a_latin_square() {
        let g = pauli2();
        let n = g.order();
        for row in g.mult_table() {
            let mut seen = vec![false; n];
            for &x in row {
                assert!(!seen[x]);
                seen[x] = true;
            }
        }
        for c in 0..n {
            let mut seen = vec![false; n];
            for r in 0..n {
                assert!(!seen[g.multiply(r, c)]);
                seen[g.multiply(r, c)] = true;
            }
        }
    }

    #[test]
    fn mult_table_matches_matrix_products() {
        let g = pauli2();
        for a in 0..g.order() {
            for b in 0..g.order() {
                let prod = g.element(a) * g.element(b);
                assert_eq!(g.find(&prod), Some(g.multiply(a, b)));
            }
        }
    }

    #[test]
    fn associativity_and_inverses() {
        let g = pauli2();
        let n = g.order();
        for a in 0..n {
            let inv = g.inverse(a);
            assert_eq!(g.multiply(inv, a), 0);
            for b in (0..n).step_by(3) {
                for c in (0..n).step_by(5) {
                    assert_eq!(
                        g.multiply(g.multiply(a, b), c),
                        g.multiply(a, g.multiply(b, c))
                    );
                }
            }
        }
    }

    #[test]
    fn cayley_graph_of_z2() {
        let g = close_group("z2", vec![pauli_gen(1, "x", &[0], Pauli::X)], 8).unwrap();
        let graph = build_cayley_graph(&g);
        assert_eq!(graph.n_vertices, 2);
        assert_eq!(graph.edges, vec![(0, 0, 1), (0, 1, 0)]);
        let cycle = eulerian_cycle(&graph).unwrap();
        assert_eq!(cycle.len(), 2);
        cycle.check_invariants().unwrap();
    }

    #[test]
    fn g1_cycle_visits_each_vertex_twice() {
        let g = g1();
        let graph = build_cayley_graph(&g);
        assert_eq!(graph.edges.len(), 8);
        for v in 0..4 {
            assert_eq!(graph.in_degree(v), 2);
            assert_eq!(graph.out_degree(v), 2);
        }
        let cycle = eulerian_cycle(&graph).unwrap();
        assert_eq!(cycle.len(), 8);
        cycle.check_invariants().unwrap();
        // exhaustive oracle: every (generator, vertex) pair exactly once
        let mut pairs: Vec<(usize, usize)> =
            cycle.steps.iter().map(|s| (s.generator, s.from)).collect();
        pairs.sort();
        let expect: Vec<(usize, usize)> =
            (0..2).flat_map(|k| (0..4).map(move |v| (k, v))).collect();
        assert_eq!(pairs, expect);
    }

    #[test]
    fn cycle_is_deterministic() {
        let a = eulerian_cycle(&build_cayley_graph(&g1())).unwrap();
        let b = eulerian_cycle(&build_cayley_graph(&g1())).unwrap();
        assert_eq!(a.steps, b.steps);
        assert_eq!(a.labels()[0], "x1");
    }

    #[test]
    fn invariant_checker_catches_broken_cycles() {
        let mut c = eulerian_cycle(&build_cayley_graph(&g1())).unwrap();
        c.steps.swap(0, 1);
        assert!(c.check_invariants().is_err());
    }

    #[test]
    fn disconnected_graph_rejected() {
        let graph = CayleyGraph {
            n_vertices: 2,
            generator_labels: vec!["a".into()],
            edges: vec![(0, 0, 0), (0, 1, 1)],
            start: 0,
        };
        assert!(eulerian_cycle(&graph).is_err());
    }

    fn dense(s: &OperatorSum) -> DenseOperator {
        s.to_dense().unwrap()
    }

    #[test]
    fn g1_average_of_product_traces_first_factor() {
        // Π(A⊗B) = ½ tr(A) I⊗B with A = I + X, B = Z
        let a_b = OperatorSum::new(
            2,
            [
                (1.0, PauliWord::single(2, 1, Pauli::Z)),
                (1.0, PauliWord::new(2, [(0, Pauli::X), (1, Pauli::Z)]).unwrap()),
            ],
        )
        .unwrap();
        let avg = group_average(&dense(&a_b), &g1()).unwrap();
        let expect = dense(&OperatorSum::term(1.0, PauliWord::single(2, 1, Pauli::Z)));
        assert!((&avg - &expect).frobenius_norm() < 1e-14);
    }

    #[test]
    fn average_of_identity_is_identity() {
        let i = DenseOperator::identity(2);
        let avg = group_average(&i, &pauli2()).unwrap();
        assert!((&avg - &i).frobenius_norm() < 1e-14);
    }

    #[test]
    fn pauli2_average_kills_traceless() {
        let a = OperatorSum::new(
            2,
            [
                (0.3, PauliWord::single(2, 0, Pauli::Y)),
                (-1.2, PauliWord::uniform(2, &[0, 1], Pauli::Z)),
                (0.7, PauliWord::single(2, 1, Pauli::X)),
            ],
        )
        .unwrap();
        let avg = group_average(&dense(&a), &pauli2()).unwrap();
        assert!(avg.frobenius_norm() < 1e-14);
    }

    #[test]
    fn average_lifts_onto_larger_register() {
        let a = dense(&OperatorSum::term(1.0, PauliWord::new(3, [(0, Pauli::X), (2, Pauli::Z)]).unwrap()));
        let avg = group_average(&a, &g1()).unwrap();
        assert!(avg.frobenius_norm() < 1e-14);
    }

    /// Pauli-basis oracle: count basis words commuting with every generator.
    /// Valid for Pauli groups, where the commutant is spanned by Pauli words.
    fn pauli_commutant_oracle(g: &GroupClosure) -> usize {
        let n = g.n_qubits();
        let d = 1usize << n;
        let mut count = 0;
        for x in 0..d {
            for z in 0..d {
                let mut letters = Vec::new();
                for q in 0..n {
                    let bit = 1 << (n - 1 - q);
                    match (x & bit != 0, z & bit != 0) {
                        (true, false) => letters.push((q, Pauli::X)),
                        (false, true) => letters.push((q, Pauli::Z)),
                        (true, true) => letters.push((q, Pauli::Y)),
                        _ => {}
                    }
                }
                let p = dense(&OperatorSum::term(1.0, PauliWord::new(n, letters).unwrap()));
                if g
                    .generators()
                    .iter()
                    .all(|gen| p.commutator(&gen.unitary).frobenius_norm() < 1e-12)
                {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn commutant_dimensions() {
        assert_eq!(commutant_dimension(&pauli2()), 1);
        assert_eq!(commutant_dimension(&g1()), 4);
        assert_eq!(pauli_commutant_oracle(&g1()), 4);
        assert_eq!(pauli_commutant_oracle(&pauli2()), 1);
    }

    #[test]
    fn canonical_form_ignores_phase() {
        let g = g1();
        let y = dense(&OperatorSum::term(1.0, PauliWord::single(2, 0, Pauli::Y)));
        let shifted = y.scale_complex(Complex64::from_polar(1.0, 0.7));
        assert_eq!(g.find(&y), g.find(&shifted));
        assert!(g.find(&y).is_some());
    }

    #[test]
    fn generator_spec_checks_consistency() {
        let x = dense(&OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::X)));
        let axis_z = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::Z));
        assert!(GeneratorSpec::new("bad", x.clone(), axis_z, FRAC_PI_2).is_err());
        let axis_x = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::X));
        assert!(GeneratorSpec::new("ok", x, axis_x, FRAC_PI_2).is_ok());
    }
}
