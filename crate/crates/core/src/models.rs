//! Hamiltonians, control groups and lattices for the worked examples.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::OpenSystemModel;
use crate::error::{Error, Result};
use crate::group::{close_group, GeneratorSpec, GroupClosure, DEFAULT_MAX_ORDER};
use crate::pauli::{OperatorSum, Pauli, PauliWord};
use crate::reachability::WeightAssignment;

/// Default seed for the random bath instance.
pub const DEFAULT_BATH_SEED: u64 = 20_140_617;

fn pair(n: usize, i: usize, j: usize, p: Pauli) -> PauliWord {
    PauliWord::uniform(n, &[i, j], p)
}

/// `Σ_i J (X_iX_{i+1} + Y_iY_{i+1} + Z_iZ_{i+1})` with open boundary.
/// Odd `n` is accepted; only the odd-site group needs even `n`.
pub fn heisenberg_chain(n: usize, j: f64) -> Result<OperatorSum> {
    if n < 2 {
        return Err(Error::Invalid(format!("a chain needs at least 2 sites, got {n}")));
    }
    let terms = (0..n - 1).flat_map(|i| {
        [Pauli::X, Pauli::Y, Pauli::Z]
            .into_iter()
            .map(move |p| (j, pair(n, i, i + 1, p)))
    });
    OperatorSum::new(n, terms)
}

pub fn xyz_target(jx: f64, jy: f64, jz: f64) -> OperatorSum {
    OperatorSum::new(
        2,
        [
            (jx, pair(2, 0, 1, Pauli::X)),
            (jy, pair(2, 0, 1, Pauli::Y)),
            (jz, pair(2, 0, 1, Pauli::Z)),
        ],
    )
    .expect("two-qubit words are valid")
}

/// `−J(X₀X₁ + Y₀Y₁ − 2Z₀Z₁)`.
pub fn dipolar_target(j: f64) -> OperatorSum {
    xyz_target(-j, -j, 2.0 * j)
}

/// Sum of `p` on each listed qubit.
pub fn collective_axis(n: usize, qubits: &[usize], p: Pauli) -> OperatorSum {
    OperatorSum::new(n, qubits.iter().map(|&q| (1.0, PauliWord::single(n, q, p))))
        .expect("qubits in range")
}

/// Generator for the Pauli string `p` on `qubits`, driven on the commuting
/// collective axis with area `π/2`.
fn pauli_string_generator(n: usize, qubits: &[usize], p: Pauli) -> Result<GeneratorSpec> {
    let label: String = qubits.iter().map(|q| format!("{}{q}", p.as_char())).collect();
    GeneratorSpec::from_axis(label, collective_axis(n, qubits, p), FRAC_PI_2)
}

/// Axis `Σ_k (X_k + Y_k + Z_k)/√3` on the listed qubits; with area `2π/3`
/// it rotates every qubit by `4π/3` about `(1,1,1)/√3`.
fn transformer_axis(n: usize, qubits: &[usize]) -> OperatorSum {
    let c = 1.0 / 3f64.sqrt();
    OperatorSum::new(
        n,
        qubits.iter().flat_map(|&q| {
            [Pauli::X, Pauli::Y, Pauli::Z]
                .into_iter()
                .map(move |p| (c, PauliWord::single(n, q, p)))
        }),
    )
    .expect("qubits in range")
}

pub const TRANSFORMER_ANGLE: f64 = 2.0 * PI / 3.0;

/// Single-qubit transformer `R` (or `R` on every listed qubit).
pub fn transformer_generator(n: usize, qubits: &[usize]) -> Result<GeneratorSpec> {
    GeneratorSpec::from_axis("R", transformer_axis(n, qubits), TRANSFORMER_ANGLE)
}

pub const PRESETS: &[&str] = &["g1", "g_odd", "g_gl", "g_d", "g_dephasing", "pauli2", "honeycomb"];

/// Named control groups. `n` is the register size; `honeycomb` requires the
/// 6-qubit plaquette.
pub fn group_preset(name: &str, n: usize) -> Result<(GroupClosure, Vec<GeneratorSpec>)> {
    let need = |min: usize| -> Result<()> {
        if n < min {
            Err(Error::Invalid(format!("preset `{name}` needs at least {min} qubits, got {n}")))
        } else {
            Ok(())
        }
    };
    let gens = match name {
        "g1" => {
            need(1)?;
            vec![
                pauli_string_generator(n, &[0], Pauli::X)?,
                pauli_string_generator(n, &[0], Pauli::Z)?,
            ]
        }
        "g_odd" => {
            need(1)?;
            let mut gens = Vec::new();
            for q in (0..n).step_by(2) {
                gens.push(pauli_string_generator(n, &[q], Pauli::X)?);
                gens.push(pauli_string_generator(n, &[q], Pauli::Z)?);
            }
            gens
        }
        "g_gl" => {
            need(2)?;
            vec![
                pauli_string_generator(n, &[0, 1], Pauli::X)?,
                pauli_string_generator(n, &[0, 1], Pauli::Z)?,
            ]
        }
        "g_d" => {
            need(2)?;
            vec![pauli_string_generator(n, &[0, 1], Pauli::Z)?]
        }
        "g_dephasing" => {
            need(2)?;
            vec![
                pauli_string_generator(n, &[0], Pauli::X)?,
                pauli_string_generator(n, &[0], Pauli::Z)?,
                pauli_string_generator(n, &[0, 1], Pauli::Z)?,
            ]
        }
        "pauli2" => {
            need(2)?;
            vec![
                pauli_string_generator(n, &[0], Pauli::X)?,
                pauli_string_generator(n, &[0], Pauli::Z)?,
                pauli_string_generator(n, &[0, 1], Pauli::X)?,
                pauli_string_generator(n, &[0, 1], Pauli::Z)?,
            ]
        }
        "honeycomb" => {
            let lat = HoneycombLattice::single_plaquette();
            if n != lat.n_vertices() {
                return Err(Error::Invalid(format!(
                    "preset `honeycomb` acts on {} qubits, got {n}",
                    lat.n_vertices()
                )));
            }
            honeycomb_group_generators(&lat)?
        }
        other => return Err(Error::UnknownPreset(other.to_string())),
    };
    let g = close_group(name, gens.clone(), DEFAULT_MAX_ORDER)?;
    Ok((g, gens))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    ForwardSlash,
    BackSlash,
    Vertical,
}

impl EdgeKind {
    /// Coupling letter of the target model on this edge kind.
    pub fn target_pauli(self) -> Pauli {
        match self {
            Self::ForwardSlash => Pauli::X,
            Self::BackSlash => Pauli::Y,
            Self::Vertical => Pauli::Z,
        }
    }
}

/// Honeycomb patch in the brick-wall embedding: site `(r, c)` has index
/// `r·cols + c`; row neighbours alternate forward/back slashes and rungs
/// join `(r, c)`–`(r+1, c)` when `r + c` is even.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoneycombLattice {
    pub rows: usize,
    pub cols: usize,
    pub edges: Vec<(usize, usize, EdgeKind)>,
}

impl HoneycombLattice {
    pub fn brick_wall(rows: usize, cols: usize) -> Result<Self> {
        if rows < 1 || cols < 2 {
            return Err(Error::Invalid(format!("lattice {rows}×{cols} is too small")));
        }
        let idx = |r: usize, c: usize| r * cols + c;
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols - 1 {
                let kind = if (r + c) % 2 == 0 {
                    EdgeKind::ForwardSlash
                } else {
                    EdgeKind::BackSlash
                };
                edges.push((idx(r, c), idx(r, c + 1), kind));
            }
        }
        for r in 0..rows.saturating_sub(1) {
            for c in 0..cols {
                if (r + c) % 2 == 0 {
                    edges.push((idx(r, c), idx(r + 1, c), EdgeKind::Vertical));
                }
            }
        }
        if rows * cols > crate::pauli::DEFAULT_DENSE_LIMIT {
            return Err(Error::DimensionLimit {
                n_qubits: rows * cols,
                limit: crate::pauli::DEFAULT_DENSE_LIMIT,
            });
        }
        Ok(Self { rows, cols, edges })
    }

    /// The 6-site hexagon.
    pub fn single_plaquette() -> Self {
        Self::brick_wall(2, 3).expect("2×3 patch is valid")
    }

    pub fn n_vertices(&self) -> usize {
        self.rows * self.cols
    }

    pub fn edges_of(&self, kind: EdgeKind) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .filter(move |e| e.2 == kind)
            .map(|&(a, b, _)| (a, b))
    }

    /// Sublattice parity of each site.
    pub fn parity(&self, v: usize) -> usize {
        (v / self.cols + v % self.cols) % 2
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Export<'a> {
            format_version: u32,
            rows: usize,
            cols: usize,
            vertices: Vec<(usize, usize, usize)>,
            edges: &'a [(usize, usize, EdgeKind)],
        }
        let vertices = (0..self.n_vertices())
            .map(|v| (v / self.cols, v % self.cols, self.parity(v)))
            .collect();
        serde_json::to_string_pretty(&Export {
            format_version: crate::FORMAT_VERSION,
            rows: self.rows,
            cols: self.cols,
            vertices,
            edges: &self.edges,
        })
        .expect("lattice serializes")
    }

    /// Sites carrying `X` in the flip generator for `keep`: a union of
    /// `keep`-edges (both ends or neither) such that every other edge has
    /// exactly one end flipped. Solved as a 2-colouring of the `keep`-edge
    /// classes.
    pub fn alternating_sites(&self, keep: EdgeKind) -> Result<Vec<usize>> {
        let n = self.n_vertices();
        let mut class: Vec<usize> = (0..n).collect();
        for (a, b) in self.edges_of(keep) {
            let (lo, hi) = (class[a].min(class[b]), class[a].max(class[b]));
            for c in class.iter_mut() {
                if *c == hi {
                    *c = lo;
                }
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, kind) in &self.edges {
            if kind == keep {
                continue;
            }
            let (ca, cb) = (class[a], class[b]);
            if ca == cb {
                return Err(Error::Invalid(
                    "lattice too small or irregular for the alternating pattern".into(),
                ));
            }
            adjacency[ca].push(cb);
            adjacency[cb].push(ca);
        }
        let mut colour: Vec<Option<bool>> = vec![None; n];
        for root in 0..n {
            if class[root] != root || colour[root].is_some() {
                continue;
            }
            colour[root] = Some(true);
            let mut queue = VecDeque::from([root]);
            while let Some(c) = queue.pop_front() {
                let here = colour[c].expect("queued classes are coloured");
                for &d in &adjacency[c] {
                    match colour[d] {
                        None => {
                            colour[d] = Some(!here);
                            queue.push_back(d);
                        }
                        Some(x) if x == here => {
                            return Err(Error::Invalid(
                                "lattice too small or irregular for the alternating pattern".into(),
                            ))
                        }
                        Some(_) => {}
                    }
                }
            }
        }
        Ok((0..n).filter(|&v| colour[class[v]] == Some(true)).collect())
    }
}

/// `(J·Σ_edges Z_kZ_ℓ, J·Σ σ^{kind}_k σ^{kind}_ℓ)`.
pub fn honeycomb_hamiltonians(lat: &HoneycombLattice, j: f64) -> Result<(OperatorSum, OperatorSum)> {
    let n = lat.n_vertices();
    let ising = OperatorSum::new(n, lat.edges.iter().map(|&(a, b, _)| (j, pair(n, a, b, Pauli::Z))))?;
    let kitaev = OperatorSum::new(
        n,
        lat.edges
            .iter()
            .map(|&(a, b, kind)| (j, pair(n, a, b, kind.target_pauli()))),
    )?;
    Ok((ising, kitaev))
}

/// `ρ_X` (X on alternate forward-slashes), `τ_X` (alternate back-slashes)
/// and `R` on every site.
pub fn honeycomb_group_generators(lat: &HoneycombLattice) -> Result<Vec<GeneratorSpec>> {
    let n = lat.n_vertices();
    let rho = lat.alternating_sites(EdgeKind::ForwardSlash)?;
    let tau = lat.alternating_sites(EdgeKind::BackSlash)?;
    let all: Vec<usize> = (0..n).collect();
    Ok(vec![
        GeneratorSpec::from_axis("rho_X", collective_axis(n, &rho, Pauli::X), FRAC_PI_2)?,
        GeneratorSpec::from_axis("tau_X", collective_axis(n, &tau, Pauli::X), FRAC_PI_2)?,
        transformer_generator(n, &all)?,
    ])
}

fn generator_element(g: &GroupClosure, label: &str) -> Result<usize> {
    let k = g
        .generator_index(label)
        .ok_or_else(|| Error::ElementNotFound(format!("generator {label}")))?;
    Ok(g.generator_perm(k)[g.identity_index()])
}

/// Indices of the six elements `R, ρ_X R, R², τ_X R², I, ρ_X τ_X`.
pub fn honeycomb_support(g: &GroupClosure) -> Result<[usize; 6]> {
    let rho = generator_element(g, "rho_X")?;
    let tau = generator_element(g, "tau_X")?;
    let r = generator_element(g, "R")?;
    let r2 = g.multiply(r, r);
    Ok([
        r,
        g.multiply(rho, r),
        r2,
        g.multiply(tau, r2),
        g.identity_index(),
        g.multiply(rho, tau),
    ])
}

/// Weight 1/2 on each of the six support elements, `W = 3`.
pub fn honeycomb_weights(g: &GroupClosure) -> Result<WeightAssignment> {
    let mut w = vec![0.0; g.order()];
    for i in honeycomb_support(g)? {
        w[i] += 0.5;
    }
    WeightAssignment::new(g, w)
}

/// Coupling axes for the open chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingAxis {
    X,
    Y,
    Z,
}

impl CouplingAxis {
    pub fn parse_list(s: &str) -> Result<Vec<Self>> {
        s.chars()
            .filter(|c| !matches!(c, ',' | ' '))
            .map(|c| match c.to_ascii_lowercase() {
                'x' => Ok(Self::X),
                'y' => Ok(Self::Y),
                'z' => Ok(Self::Z),
                other => Err(Error::Invalid(format!("unknown coupling axis `{other}`"))),
            })
            .collect()
    }

    fn pauli(self) -> Pauli {
        match self {
            Self::X => Pauli::X,
            Self::Y => Pauli::Y,
            Self::Z => Pauli::Z,
        }
    }
}

/// Random traceless single-qubit Hermitian operator of spectral norm `norm`.
fn random_bath_operator(rng: &mut ChaCha8Rng, norm: f64) -> OperatorSum {
    let v: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let len = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    OperatorSum::new(
        1,
        [Pauli::X, Pauli::Y, Pauli::Z]
            .into_iter()
            .zip(v)
            .map(|(p, c)| (norm * c / len, PauliWord::single(1, 0, p))),
    )
    .expect("single-qubit words")
}

/// Heisenberg chain (`J = 1`) on `n_s` qubits coupled through each listed
/// axis to a one-qubit bath: `Σ_i σ^a_i ⊗ B^a_i`. Every `B` and `H_B` has
/// spectral norm `strength`.
pub fn open_chain_model(
    n_s: usize,
    axes: &[CouplingAxis],
    seed: u64,
    strength: f64,
) -> Result<OpenSystemModel> {
    let system = heisenberg_chain(n_s, 1.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bath = random_bath_operator(&mut rng, strength);
    let mut couplings = Vec::new();
    for q in 0..n_s {
        for &a in axes {
            let s = OperatorSum::term(1.0, PauliWord::single(n_s, q, a.pauli()));
            couplings.push((s, random_bath_operator(&mut rng, strength)));
        }
    }
    OpenSystemModel::new(system, bath, couplings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{build_cayley_graph, commutant_dimension, eulerian_cycle};
    use crate::pauli::DenseOperator;
    use crate::reachability::weighted_conjugation;

    fn word(n: usize, spec: &[(usize, Pauli)]) -> PauliWord {
        PauliWord::new(n, spec.iter().copied()).unwrap()
    }

    #[test]
    fn heisenberg_two_sites() {
        let h = heisenberg_chain(2, 1.0).unwrap();
        assert_eq!(h.len(), 3);
        assert!(heisenberg_chain(2, 0.0).unwrap().is_empty());
        assert!(heisenberg_chain(1, 1.0).is_err());
        assert_eq!(heisenberg_chain(3, 1.0).unwrap().len(), 6);
    }

    #[test]
    fn heisenberg_four_sites_spectrum() {
        let h = heisenberg_chain(4, 1.0).unwrap();
        assert_eq!(h.len(), 9);
        let d = h.to_dense().unwrap();
        // power-iteration oracle for the spectral norm
        let m = d.matrix();
        let mut v = nalgebra::DVector::from_fn(16, |i, _| num_complex::Complex64::new(1.0 + i as f64 * 0.1, 0.0));
        let mut lambda = 0.0;
        for _ in 0..2000 {
            let w = m * &v;
            lambda = w.norm() / v.norm();
            v = w / num_complex::Complex64::new(lambda, 0.0);
        }
        assert!((d.operator_norm() - lambda).abs() < 1e-8);
    }

    #[test]
    fn xyz_and_dipolar() {
        let xx = xyz_target(1.0, 1.0, 0.0);
        assert_eq!(xx.len(), 2);
        assert!(xyz_target(0.0, 0.0, 0.0).is_empty());
        let d = dipolar_target(1.0);
        assert_eq!(d.coefficient(&word(2, &[(0, Pauli::X), (1, Pauli::X)])), -1.0);
        assert_eq!(d.coefficient(&word(2, &[(0, Pauli::Y), (1, Pauli::Y)])), -1.0);
        assert_eq!(d.coefficient(&word(2, &[(0, Pauli::Z), (1, Pauli::Z)])), 2.0);
    }

    #[test]
    fn preset_orders() {
        let expect = [("g1", 2, 4), ("g_gl", 2, 4), ("g_d", 2, 2), ("g_dephasing", 2, 8), ("pauli2", 2, 16), ("g_odd", 4, 16)];
        for (name, n, order) in expect {
            let (g, _) = group_preset(name, n).unwrap();
            assert_eq!(g.order(), order, "{name}");
        }
        assert!(matches!(group_preset("nope", 2), Err(Error::UnknownPreset(_))));
        assert!(group_preset("honeycomb", 4).is_err());
    }

    #[test]
    fn g1_and_dephasing_labels() {
        let (g, _) = group_preset("g1", 2).unwrap();
        let mut labels = g.element_labels().to_vec();
        labels.sort();
        assert_eq!(labels, ["I", "X0", "Y0", "Z0"]);
        let (g, _) = group_preset("g_dephasing", 2).unwrap();
        let mut labels = g.element_labels().to_vec();
        labels.sort();
        assert_eq!(labels, ["I", "X0", "X0Z1", "Y0", "Y0Z1", "Z0", "Z0Z1", "Z1"]);
    }

    #[test]
    fn g_gl_commutes_with_isotropic_chain() {
        let (g, _) = group_preset("g_gl", 2).unwrap();
        let mut labels = g.element_labels().to_vec();
        labels.sort();
        assert_eq!(labels, ["I", "X0X1", "Y0Y1", "Z0Z1"]);
        let h = heisenberg_chain(2, 1.0).unwrap().to_dense().unwrap();
        for u in g.elements() {
            assert!(h.commutator(u).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn pauli2_is_irreducible() {
        let (g, _) = group_preset("pauli2", 2).unwrap();
        assert_eq!(commutant_dimension(&g), 1);
    }

    #[test]
    fn transformer_identities() {
        let r = transformer_generator(1, &[0]).unwrap().unitary;
        let r3 = &(&r * &r) * &r;
        assert!(crate::group::phase_distance(&r3, &DenseOperator::identity(1)) < 1e-12);
        let z = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::Z)).to_dense().unwrap();
        let x = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::X)).to_dense().unwrap();
        let y = OperatorSum::term(1.0, PauliWord::single(1, 0, Pauli::Y)).to_dense().unwrap();
        assert!((&z.conjugate(&r).unwrap() - &x).frobenius_norm() < 1e-12);
        assert!((&x.conjugate(&r).unwrap() - &y).frobenius_norm() < 1e-12);
    }

    #[test]
    fn plaquette_structure() {
        let lat = HoneycombLattice::single_plaquette();
        assert_eq!(lat.n_vertices(), 6);
        assert_eq!(lat.edges.len(), 6);
        for kind in [EdgeKind::ForwardSlash, EdgeKind::BackSlash, EdgeKind::Vertical] {
            assert_eq!(lat.edges_of(kind).count(), 2);
        }
        for v in 0..6 {
            let kinds: Vec<EdgeKind> = lat
                .edges
                .iter()
                .filter(|e| e.0 == v || e.1 == v)
                .map(|e| e.2)
                .collect();
            assert_eq!(kinds.len(), 2);
            assert_ne!(kinds[0], kinds[1]);
        }
        let json: serde_json::Value = serde_json::from_str(&lat.to_json()).unwrap();
        assert_eq!(json["edges"].as_array().unwrap().len(), 6);
    }

    #[test]
    fn larger_brick_wall_degrees() {
        let lat = HoneycombLattice::brick_wall(3, 4).unwrap();
        for v in 0..lat.n_vertices() {
            let mut kinds: Vec<EdgeKind> = lat
                .edges
                .iter()
                .filter(|e| e.0 == v || e.1 == v)
                .map(|e| e.2)
                .collect();
            assert!(kinds.len() <= 3);
            kinds.sort_by_key(|k| *k as u8);
            kinds.dedup();
            assert_eq!(kinds.len(), lat.edges.iter().filter(|e| e.0 == v || e.1 == v).count());
        }
        assert!(HoneycombLattice::brick_wall(1, 1).is_err());
    }

    #[test]
    fn honeycomb_hamiltonian_counts() {
        let lat = HoneycombLattice::single_plaquette();
        let (input, target) = honeycomb_hamiltonians(&lat, 1.0).unwrap();
        assert_eq!(input.len(), 6);
        assert_eq!(target.len(), 6);
        let (a, b) = honeycomb_hamiltonians(&lat, 0.0).unwrap();
        assert!(a.is_empty() && b.is_empty());
        for (k, l) in lat.edges_of(EdgeKind::Vertical) {
            let w = pair(6, k, l, Pauli::Z);
            assert_eq!(input.coefficient(&w), target.coefficient(&w));
        }
    }

    #[test]
    fn honeycomb_group_and_weights() {
        let lat = HoneycombLattice::single_plaquette();
        let (g, gens) = group_preset("honeycomb", 6).unwrap();
        assert_eq!(gens.len(), 3);
        assert_eq!(g.order(), 48);
        let cycle = eulerian_cycle(&build_cayley_graph(&g)).unwrap();
        assert_eq!(cycle.len(), 144);

        let (h, target) = honeycomb_hamiltonians(&lat, 1.0).unwrap();
        let w = honeycomb_weights(&g).unwrap();
        assert!((w.total() - 3.0).abs() < 1e-15);
        assert_eq!(w.nonzero().count(), 6);
        let got = weighted_conjugation(&h.to_dense().unwrap(), &w, &g)
            .unwrap()
            .pauli_coefficients()
            .unwrap();
        assert!(got.max_coefficient_diff(&target) < 1e-9);
    }

    #[test]
    fn alternating_sites_on_plaquette() {
        let lat = HoneycombLattice::single_plaquette();
        let rho = lat.alternating_sites(EdgeKind::ForwardSlash).unwrap();
        for &(a, b, kind) in &lat.edges {
            let hits = rho.contains(&a) as usize + rho.contains(&b) as usize;
            if kind == EdgeKind::ForwardSlash {
                assert!(hits != 1);
            } else {
                assert_eq!(hits, 1);
            }
        }
    }

    #[test]
    fn open_models() {
        let m = open_chain_model(2, &CouplingAxis::parse_list("xyz").unwrap(), DEFAULT_BATH_SEED, 0.1).unwrap();
        assert_eq!(m.couplings().len(), 6);
        for (_, b) in m.couplings() {
            assert!((b.to_dense().unwrap().operator_norm() - 0.1).abs() < 1e-12);
        }
        let closed = open_chain_model(2, &[], DEFAULT_BATH_SEED, 0.1).unwrap();
        assert!(closed.couplings().is_empty());
        let x = open_chain_model(2, &[CouplingAxis::X], DEFAULT_BATH_SEED, 0.1).unwrap();
        assert_eq!(x.couplings().len(), 2);
        let again = open_chain_model(2, &[CouplingAxis::X], DEFAULT_BATH_SEED, 0.1).unwrap();
        assert_eq!(x.couplings(), again.couplings());
        assert!(CouplingAxis::parse_list("xq").is_err());
    }
}
