//! Two-qubit Clifford group as stabilizer tableaus, compiled to native gates.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::OnceLock;

use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::channels::pauli::{pauli_matrix, single_pauli};
use crate::dynamics::{ideal_unitary, NativeGate};
use crate::numerics::{CMatrix, C64};

/// Order of the two-qubit Clifford group modulo phases.
pub const CLIFFORD_GROUP_ORDER: usize = 11520;

/// Native operation of a compiled circuit. Qubits are 0 (q1) and 1 (q2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NativeOp {
    X90(usize),
    Y90(usize),
    /// Virtual Rz(quarter_turns·π/2).
    Z { qubit: usize, quarter_turns: i8 },
    CZ,
}

impl NativeOp {
    pub fn is_virtual(self) -> bool {
        matches!(self, NativeOp::Z { .. })
    }

    pub fn qubit(self) -> Option<usize> {
        match self {
            NativeOp::X90(q) | NativeOp::Y90(q) | NativeOp::Z { qubit: q, .. } => Some(q),
            NativeOp::CZ => None,
        }
    }

    /// 2×2 matrix of a single-qubit op.
    pub fn local_matrix(self) -> Option<CMatrix> {
        match self {
            NativeOp::X90(_) => Some(ideal_unitary(NativeGate::X90)),
            NativeOp::Y90(_) => Some(ideal_unitary(NativeGate::Y90)),
            NativeOp::Z { quarter_turns, .. } => Some(rz(quarter_turns as f64 * FRAC_PI_2)),
            NativeOp::CZ => None,
        }
    }

    pub fn unitary(self) -> CMatrix {
        match (self.qubit(), self.local_matrix()) {
            (Some(q), Some(m)) => embed(&m, q),
            _ => ideal_unitary(NativeGate::CZ),
        }
    }
}

impl fmt::Display for NativeOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NativeOp::X90(q) => write!(f, "X90(q{})", q + 1),
            NativeOp::Y90(q) => write!(f, "Y90(q{})", q + 1),
            NativeOp::Z { qubit, quarter_turns } => write!(f, "Z({}π/2, q{})", quarter_turns, qubit + 1),
            NativeOp::CZ => write!(f, "CZ"),
        }
    }
}

pub(crate) fn rz(theta: f64) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(0, 0)] = C64::from_polar(1.0, -theta / 2.0);
    m[(1, 1)] = C64::from_polar(1.0, theta / 2.0);
    m
}

/// Single-qubit matrix acting on `qubit` of the pair.
pub(crate) fn embed(m: &CMatrix, qubit: usize) -> CMatrix {
    let id = CMatrix::identity(2, 2);
    if qubit == 0 { m.kronecker(&id) } else { id.kronecker(m) }
}

/// Two-qubit Pauli `i^phase · P1 ⊗ P2`, letters 0..4 = I, X, Y, Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pauli2 {
    pub letters: [u8; 2],
    pub phase: u8,
}

/// a·b = i^k c for single-qubit letters.
fn letter_product(a: u8, b: u8) -> (u8, u8) {
    if a == 0 {
        return (b, 0);
    }
    if b == 0 || a == b {
        return (if a == b { 0 } else { a }, 0);
    }
    let c = 6 - a - b;
    let cyclic = (a % 3) + 1 == b;
    (c, if cyclic { 1 } else { 3 })
}

impl Pauli2 {
    pub const IDENTITY: Pauli2 = Pauli2 { letters: [0, 0], phase: 0 };

    pub fn single(qubit: usize, letter: u8) -> Self {
        let mut letters = [0, 0];
        letters[qubit] = letter;
        Pauli2 { letters, phase: 0 }
    }

    pub fn mul(self, other: Pauli2) -> Pauli2 {
        let mut phase = self.phase + other.phase;
        let mut letters = [0; 2];
        for q in 0..2 {
            let (c, k) = letter_product(self.letters[q], other.letters[q]);
            letters[q] = c;
            phase += k;
        }
        Pauli2 { letters, phase: phase % 4 }
    }

    pub fn with_phase(self, extra: u8) -> Pauli2 {
        Pauli2 { letters: self.letters, phase: (self.phase + extra) % 4 }
    }

    /// (x1, z1, x2, z2) bits.
    pub fn symplectic(self) -> [u8; 4] {
        let xz = |l: u8| match l {
            0 => (0, 0),
            1 => (1, 0),
            2 => (1, 1),
            _ => (0, 1),
        };
        let (x1, z1) = xz(self.letters[0]);
        let (x2, z2) = xz(self.letters[1]);
        [x1, z1, x2, z2]
    }

    pub fn matrix(self) -> CMatrix {
        let m = single_pauli(self.letters[0] as usize).kronecker(&single_pauli(self.letters[1] as usize));
        m * C64::new(0.0, 1.0).powu(self.phase as u32)
    }
}

/// Images of X1, Z1, X2, Z2 under conjugation `P ↦ C P C†`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Tableau {
    pub images: [Pauli2; 4],
}

impl Tableau {
    pub fn identity() -> Self {
        Tableau {
            images: [Pauli2::single(0, 1), Pauli2::single(0, 3), Pauli2::single(1, 1), Pauli2::single(1, 3)],
        }
    }

    /// Image of an arbitrary Pauli.
    pub fn apply(&self, p: Pauli2) -> Pauli2 {
        let mut out = Pauli2 { letters: [0, 0], phase: p.phase };
        for q in 0..2 {
            let (x, z) = (self.images[2 * q], self.images[2 * q + 1]);
            out = match p.letters[q] {
                0 => out,
                1 => out.mul(x),
                3 => out.mul(z),
                // Y = i X Z
                _ => out.mul(x).mul(z).with_phase(1),
            };
        }
        out
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Tableau) -> Tableau {
        Tableau { images: self.images.map(|p| next.apply(p)) }
    }

    /// Binary symplectic matrix; column k holds the (x1,z1,x2,z2) bits of image k.
    pub fn symplectic_matrix(&self) -> [[u8; 4]; 4] {
        let mut m = [[0u8; 4]; 4];
        for (k, img) in self.images.iter().enumerate() {
            for (r, b) in img.symplectic().iter().enumerate() {
                m[r][k] = *b;
            }
        }
        m
    }

    /// Sign bits of the four images.
    pub fn phase_bits(&self) -> [bool; 4] {
        self.images.map(|p| p.phase == 2)
    }

    pub fn is_symplectic(&self) -> bool {
        let s = self.symplectic_matrix();
        // ω(a, b) = x1 z1' + z1 x1' + x2 z2' + z2 x2' (mod 2)
        let omega = |a: usize, b: usize| -> u8 {
            let col = |k: usize| [s[0][k], s[1][k], s[2][k], s[3][k]];
            let (u, v) = (col(a), col(b));
            (u[0] * v[1] + u[1] * v[0] + u[2] * v[3] + u[3] * v[2]) % 2
        };
        (0..4).all(|a| (0..4).all(|b| omega(a, b) == u8::from(a / 2 == b / 2 && a != b)))
            && self.images.iter().all(|p| p.phase % 2 == 0)
    }

    /// Tableau of a 4×4 Clifford unitary; `None` if `u` is not Clifford.
    pub fn from_unitary(u: &CMatrix) -> Option<Tableau> {
        let ud = u.adjoint();
        let mut images = [Pauli2::IDENTITY; 4];
        for (k, g) in Tableau::identity().images.iter().enumerate() {
            let m = u * g.matrix() * &ud;
            let mut found = None;
            for idx in 1..16 {
                let q = pauli_matrix(idx, 2);
                let t = (q * &m).trace() / 4.0;
                if (t.norm() - 1.0).abs() < 1e-8 {
                    if t.im.abs() > 1e-8 {
                        return None;
                    }
                    let letters = [(idx >> 2) as u8, (idx & 3) as u8];
                    found = Some(Pauli2 { letters, phase: if t.re > 0.0 { 0 } else { 2 } });
                    break;
                }
            }
            images[k] = found?;
        }
        Some(Tableau { images })
    }
}

/// Tableau of one native op.
pub fn op_tableau(op: NativeOp) -> Tableau {
    Tableau::from_unitary(&op.unitary()).expect("native ops are Clifford")
}

/// One group element with its minimal-cost native compilation.
#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub index: usize,
    pub tableau: Tableau,
    pub native_sequence: Vec<NativeOp>,
    /// Product of the native sequence.
    pub unitary: CMatrix,
}

impl CliffordElement {
    pub fn cz_count(&self) -> usize {
        self.native_sequence.iter().filter(|o| **o == NativeOp::CZ).count()
    }
}

/// Per-op weights of the compilation search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompileCosts {
    pub cz: u32,
    pub x90: u32,
    pub y90: u32,
    pub virtual_z: u32,
}

impl Default for CompileCosts {
    /// Fewest CZ gates first, then fewest physical single-qubit gates.
    fn default() -> Self {
        CompileCosts { cz: 10_000, x90: 10, y90: 10, virtual_z: 1 }
    }
}

impl CompileCosts {
    fn of(&self, op: NativeOp) -> u32 {
        match op {
            NativeOp::CZ => self.cz,
            NativeOp::X90(_) => self.x90,
            NativeOp::Y90(_) => self.y90,
            NativeOp::Z { .. } => self.virtual_z,
        }
    }
}

fn generators(qubits: &[usize], with_cz: bool) -> Vec<NativeOp> {
    let mut g = if with_cz { vec![NativeOp::CZ] } else { vec![] };
    for &q in qubits {
        g.push(NativeOp::X90(q));
        g.push(NativeOp::Y90(q));
        for t in [1, -1, 2] {
            g.push(NativeOp::Z { qubit: q, quarter_turns: t });
        }
    }
    g
}

/// Cheapest native sequence of every tableau reachable from the identity.
fn cheapest_paths(gens: &[NativeOp], costs: CompileCosts) -> Vec<Vec<NativeOp>> {
    let gens: Vec<(NativeOp, Tableau, u32)> = gens.iter().map(|&o| (o, op_tableau(o), costs.of(o))).collect();
    let mut lookup: HashMap<Tableau, usize> = HashMap::new();
    let mut tableaus = vec![Tableau::identity()];
    let mut best = vec![0u32];
    let mut parent: Vec<Option<(usize, NativeOp)>> = vec![None];
    let mut done = vec![false];
    lookup.insert(Tableau::identity(), 0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((0u32, 0usize)));
    while let Some(Reverse((cost, i))) = heap.pop() {
        if done[i] || cost > best[i] {
            continue;
        }
        done[i] = true;
        let t = tableaus[i];
        for (op, gt, c) in &gens {
            let next = t.then(gt);
            let nc = cost + c;
            let j = *lookup.entry(next).or_insert_with(|| {
                tableaus.push(next);
                best.push(u32::MAX);
                parent.push(None);
                done.push(false);
                tableaus.len() - 1
            });
            if nc < best[j] {
                best[j] = nc;
                parent[j] = Some((i, *op));
                heap.push(Reverse((nc, j)));
            }
        }
    }
    (0..tableaus.len())
        .map(|i| {
            let mut seq = Vec::new();
            let mut k = i;
            while let Some((p, op)) = parent[k] {
                seq.push(op);
                k = p;
            }
            seq.reverse();
            seq
        })
        .collect()
}

fn sequence_unitary(seq: &[NativeOp]) -> CMatrix {
    seq.iter().fold(CMatrix::identity(4, 4), |u, op| op.unitary() * u)
}

/// The 24 single-qubit Cliffords on qubit 0, cheapest compilation each.
struct LocalCliffords {
    seqs: Vec<Vec<NativeOp>>,
    lookup: HashMap<Tableau, usize>,
}

impl LocalCliffords {
    fn new() -> Self {
        let seqs = cheapest_paths(&generators(&[0], false), CompileCosts::default());
        let lookup = seqs.iter().enumerate().map(|(i, s)| (Tableau::from_unitary(&sequence_unitary(s)).unwrap(), i)).collect();
        LocalCliffords { seqs, lookup }
    }

    /// Compiled form of the 2×2 Clifford `u`, placed on `qubit`.
    fn compile(&self, u: &CMatrix, qubit: usize) -> Vec<NativeOp> {
        let t = Tableau::from_unitary(&embed(u, 0)).expect("single-qubit Clifford");
        self.seqs[self.lookup[&t]]
            .iter()
            .map(|op| match *op {
                NativeOp::X90(_) => NativeOp::X90(qubit),
                NativeOp::Y90(_) => NativeOp::Y90(qubit),
                NativeOp::Z { quarter_turns, .. } => NativeOp::Z { qubit, quarter_turns },
                NativeOp::CZ => NativeOp::CZ,
            })
            .collect()
    }

    fn unitaries(&self) -> Vec<CMatrix> {
        self.seqs
            .iter()
            .map(|s| {
                s.iter().fold(CMatrix::identity(2, 2), |u, op| op.local_matrix().expect("local op") * u)
            })
            .collect()
    }
}

/// Ops of a simultaneous single-qubit layer, alternating qubits so that
/// layering pairs them up.
fn local_layer(lc: &LocalCliffords, u0: &CMatrix, u1: &CMatrix) -> Vec<NativeOp> {
    let split = |seq: Vec<NativeOp>| -> Vec<Vec<NativeOp>> {
        // group each physical gate with the virtual rotations before it
        let mut groups: Vec<Vec<NativeOp>> = vec![vec![]];
        for op in seq {
            groups.last_mut().unwrap().push(op);
            if !op.is_virtual() {
                groups.push(vec![]);
            }
        }
        groups
    };
    let (a, b) = (split(lc.compile(u0, 0)), split(lc.compile(u1, 1)));
    let mut out = Vec::new();
    for k in 0..a.len().max(b.len()) {
        out.extend(a.get(k).into_iter().flatten());
        out.extend(b.get(k).into_iter().flatten());
    }
    out
}

/// The enumerated group with lookup and inverse tables.
#[derive(Debug)]
pub struct CliffordGroup {
    elements: Vec<CliffordElement>,
    lookup: HashMap<Tableau, usize>,
    inverses: Vec<usize>,
}

impl CliffordGroup {
    /// Enumerate by cheapest-path search from the identity over native ops.
    pub fn build(costs: CompileCosts) -> Self {
        Self::from_sequences(cheapest_paths(&generators(&[0, 1], true), costs))
    }

    /// Canonical class decomposition: a random single-qubit Clifford layer
    /// followed by one of the identity, CNOT-like, iSWAP-like or SWAP-like
    /// entangling classes.
    pub fn canonical() -> Self {
        let lc = LocalCliffords::new();
        let c1 = lc.unitaries();
        let x90 = ideal_unitary(NativeGate::X90);
        let y90 = ideal_unitary(NativeGate::Y90);
        let mx90 = x90.adjoint();
        let my90 = y90.adjoint();
        let id = CMatrix::identity(2, 2);
        // S1: identity and the two 2π/3 rotations about (1,1,1)
        let s1: Vec<CMatrix> = c1
            .iter()
            .filter(|u| {
                let t = Tableau::from_unitary(&embed(u, 0)).unwrap();
                let (ix, iz) = (t.images[0], t.images[1]);
                let xy = ix.letters[0] == 2 && iz.letters[0] == 1;
                let xz = ix.letters[0] == 3 && iz.letters[0] == 2;
                let ident = ix.letters[0] == 1 && iz.letters[0] == 3;
                (xy || xz || ident) && ix.phase == 0 && iz.phase == 0
            })
            .cloned()
            .collect();
        assert_eq!(s1.len(), 3, "S1 subgroup");
        let cz = vec![NativeOp::CZ];
        let mut seqs = Vec::with_capacity(CLIFFORD_GROUP_ORDER);
        for a in &c1 {
            for b in &c1 {
                let head = local_layer(&lc, a, b);
                seqs.push(head.clone());
                for s in &s1 {
                    for t in &s1 {
                        let mut cnot = head.clone();
                        cnot.extend(&cz);
                        cnot.extend(local_layer(&lc, s, &(&y90 * t)));
                        seqs.push(cnot);
                        let mut iswap = head.clone();
                        iswap.extend(&cz);
                        iswap.extend(local_layer(&lc, &y90, &mx90));
                        iswap.extend(&cz);
                        iswap.extend(local_layer(&lc, &(&y90 * s), &(&mx90 * t)));
                        seqs.push(iswap);
                    }
                }
                let mut swap = head.clone();
                swap.extend(&cz);
                swap.extend(local_layer(&lc, &my90, &y90));
                swap.extend(&cz);
                swap.extend(local_layer(&lc, &y90, &my90));
                swap.extend(&cz);
                swap.extend(local_layer(&lc, &id, &y90));
                seqs.push(swap);
            }
        }
        Self::from_sequences(seqs)
    }

    /// Group from one native sequence per element; the identity must compile
    /// to a virtual-only sequence and every element must appear exactly once.
    fn from_sequences(seqs: Vec<Vec<NativeOp>>) -> Self {
        let mut elements: Vec<CliffordElement> = seqs
            .into_iter()
            .map(|seq| {
                let unitary = sequence_unitary(&seq);
                let tableau = Tableau::from_unitary(&unitary).expect("native ops are Clifford");
                CliffordElement { index: 0, tableau, native_sequence: seq, unitary }
            })
            .collect();
        // identity first
        let id = Tableau::identity();
        let pos = elements.iter().position(|e| e.tableau == id).expect("identity present");
        elements.swap(0, pos);
        let mut lookup = HashMap::new();
        for (i, e) in elements.iter_mut().enumerate() {
            e.index = i;
            let prev = lookup.insert(e.tableau, i);
            assert!(prev.is_none(), "duplicate Clifford in decomposition");
        }
        assert_eq!(elements.len(), CLIFFORD_GROUP_ORDER, "incomplete Clifford enumeration");
        let inverses = elements
            .iter()
            .map(|e| {
                let t = Tableau::from_unitary(&e.unitary.adjoint()).expect("inverse is Clifford");
                lookup[&t]
            })
            .collect();
        CliffordGroup { elements, lookup, inverses }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CliffordElement] {
        &self.elements
    }

    pub fn get(&self, index: usize) -> &CliffordElement {
        &self.elements[index]
    }

    pub fn find(&self, t: &Tableau) -> Option<&CliffordElement> {
        self.lookup.get(t).map(|&i| &self.elements[i])
    }

    pub fn identity(&self) -> &CliffordElement {
        &self.elements[0]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &CliffordElement {
        &self.elements[rng.random_range(0..self.elements.len())]
    }

    pub fn inverse_of(&self, e: &CliffordElement) -> &CliffordElement {
        &self.elements[self.inverses[e.index]]
    }

    /// Element undoing the running product `t`.
    pub fn invert(&self, t: &Tableau) -> &CliffordElement {
        let e = self.find(t).expect("tableau belongs to the group");
        self.inverse_of(e)
    }
}

/// Shared group in canonical class decomposition.
pub fn clifford_group() -> &'static CliffordGroup {
    static GROUP: OnceLock<CliffordGroup> = OnceLock::new();
    GROUP.get_or_init(CliffordGroup::canonical)
}

/// Uniformly random two-qubit Clifford.
pub fn sample_clifford<R: Rng + ?Sized>(rng: &mut R) -> &'static CliffordElement {
    clifford_group().sample(rng)
}

/// Inverse of the product of `elements` applied in order.
pub fn invert_clifford<'a>(elements: impl IntoIterator<Item = &'a Tableau>) -> &'static CliffordElement {
    let t = elements.into_iter().fold(Tableau::identity(), |acc, e| acc.then(e));
    clifford_group().invert(&t)
}

/// |Tr(A†B)|/d, one when equal up to global phase.
pub fn phase_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    (a.adjoint() * b).trace().norm() / a.nrows() as f64
}
