//! Exact Clifford group algebra on binary symplectic tableaux.
//!
//! A Clifford is stored by the images of the generators `X_0..X_{n-1}`,
//! `Z_0..Z_{n-1}` under conjugation. Signs are tracked exactly, so two
//! tableaux are equal iff the unitaries agree up to a global phase.

use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use rand::Rng;

use crate::error::{QcvvError, Result};
use crate::linalg::{self, c, CMat};
use crate::qmodel::QuantumChannel;

/// `i^phase · Π_k X_k^{x_k} Z_k^{z_k}`; bit k of `x`/`z` is qubit k.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliWord {
    pub x: u32,
    pub z: u32,
    pub phase: u8,
}

impl PauliWord {
    pub fn identity() -> Self {
        Self {
            x: 0,
            z: 0,
            phase: 0,
        }
    }

    pub fn x(q: usize) -> Self {
        Self {
            x: 1 << q,
            z: 0,
            phase: 0,
        }
    }

    pub fn z(q: usize) -> Self {
        Self {
            x: 0,
            z: 1 << q,
            phase: 0,
        }
    }

    /// Hermitian Pauli `(-1)^sign · σ` with σ a tensor product of I, X, Y, Z.
    pub fn signed(x: u32, z: u32, negative: bool) -> Self {
        let ys = (x & z).count_ones() as u8;
        Self {
            x,
            z,
            phase: (2 * negative as u8 + ys) % 4,
        }
    }

    fn y_count(&self) -> u8 {
        (self.x & self.z).count_ones() as u8
    }

    pub fn is_hermitian(&self) -> bool {
        (self.phase + 4 - self.y_count() % 4).is_multiple_of(2)
    }

    /// Sign of the Hermitian form; only meaningful when `is_hermitian`.
    pub fn is_negative(&self) -> bool {
        (self.phase + 4 - self.y_count() % 4) % 4 == 2
    }

    pub fn mul(&self, other: &PauliWord) -> PauliWord {
        // Z^a X^b = (-1)^{a·b} X^b Z^a
        let swap = (self.z & other.x).count_ones() as u8 % 2;
        PauliWord {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            phase: (self.phase + other.phase + 2 * swap) % 4,
        }
    }

    /// Symplectic product: true when the two words anticommute.
    pub fn anticommutes(&self, other: &PauliWord) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    pub fn matrix(&self, n: usize) -> CMat {
        let mut m = linalg::identity(1);
        for q in 0..n {
            let (xb, zb) = ((self.x >> q) & 1, (self.z >> q) & 1);
            let mut f = linalg::identity(2);
            if xb == 1 {
                f = linalg::pauli_x();
            }
            if zb == 1 {
                f *= linalg::pauli_z();
            }
            m = m.kronecker(&f);
        }
        let ph = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)][self.phase as usize];
        m * ph
    }

    /// Parse a signed label such as `+XZ`, `-YY` or `IZ` (qubit 0 leftmost).
    pub fn parse(s: &str) -> Result<(usize, PauliWord)> {
        let (negative, body) = match s.as_bytes().first() {
            Some(b'-') => (true, &s[1..]),
            Some(b'+') => (false, &s[1..]),
            _ => (false, s),
        };
        if body.is_empty() || body.len() > 32 {
            return Err(QcvvError::validation(format!("invalid Pauli string `{s}`")));
        }
        let (mut x, mut z) = (0u32, 0u32);
        for (q, ch) in body.chars().enumerate() {
            match ch {
                'I' => {}
                'X' => x |= 1 << q,
                'Y' => {
                    x |= 1 << q;
                    z |= 1 << q
                }
                'Z' => z |= 1 << q,
                _ => {
                    return Err(QcvvError::validation(format!(
                        "invalid Pauli letter `{ch}` in `{s}`"
                    )))
                }
            }
        }
        Ok((body.len(), PauliWord::signed(x, z, negative)))
    }

    /// Signed label of a Hermitian word, e.g. `-YY`.
    pub fn label(&self, n: usize) -> String {
        let mut out = String::from(if self.is_negative() { "-" } else { "+" });
        for q in 0..n {
            out.push(match ((self.x >> q) & 1, (self.z >> q) & 1) {
                (0, 0) => 'I',
                (1, 0) => 'X',
                (1, 1) => 'Y',
                _ => 'Z',
            });
        }
        out
    }
}

/// Images of `X_0..X_{n-1}, Z_0..Z_{n-1}` under conjugation by a Clifford.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Tableau {
    n: usize,
    rows: Vec<PauliWord>,
}

impl Tableau {
    pub fn identity(n: usize) -> Self {
        let rows = (0..n)
            .map(PauliWord::x)
            .chain((0..n).map(PauliWord::z))
            .collect();
        Self { n, rows }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[PauliWord] {
        &self.rows
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity(self.n)
    }

    /// Symplectic condition over GF(2) plus Hermitian images.
    pub fn is_valid(&self) -> bool {
        let n = self.n;
        if self.rows.len() != 2 * n || !self.rows.iter().all(|r| r.is_hermitian()) {
            return false;
        }
        for i in 0..2 * n {
            for j in 0..2 * n {
                let expect = i % n == j % n && (i < n) != (j < n);
                if self.rows[i].anticommutes(&self.rows[j]) != expect {
                    return false;
                }
            }
        }
        true
    }

    /// `C P C†` for an arbitrary Pauli word.
    pub fn conjugate(&self, p: &PauliWord) -> PauliWord {
        let mut out = PauliWord {
            x: 0,
            z: 0,
            phase: p.phase,
        };
        for q in 0..self.n {
            if (p.x >> q) & 1 == 1 {
                out = out.mul(&self.rows[q]);
            }
            if (p.z >> q) & 1 == 1 {
                out = out.mul(&self.rows[self.n + q]);
            }
        }
        out
    }

    /// `after ∘ self`: this Clifford is applied first.
    pub fn then(&self, after: &Tableau) -> Tableau {
        assert_eq!(self.n, after.n, "tableau qubit counts differ");
        Tableau {
            n: self.n,
            rows: self.rows.iter().map(|r| after.conjugate(r)).collect(),
        }
    }

    pub fn inverse(&self) -> Tableau {
        let n = self.n;
        let inv_bits = gf2_inverse(
            &self.rows.iter().map(|r| bits_of(r, n)).collect::<Vec<_>>(),
            2 * n,
        )
        .expect("valid tableau has an invertible symplectic part");
        let unsigned = Tableau {
            n,
            rows: inv_bits
                .iter()
                .map(|&b| {
                    let (x, z) = ((b & ((1 << n) - 1)) as u32, (b >> n) as u32);
                    PauliWord::signed(x, z, false)
                })
                .collect(),
        };
        // unsigned ∘ self is a Pauli frame; it is its own inverse
        let frame = self.then(&unsigned);
        unsigned.then(&frame)
    }

    /// Tableau of a unitary, or `None` if it is not Clifford.
    pub fn from_unitary(u: &CMat) -> Option<Tableau> {
        let d = u.nrows();
        let n = linalg::qubits_of(d);
        if 1 << n != d || n > 8 {
            return None;
        }
        let mut rows = Vec::with_capacity(2 * n);
        for g in (0..n).map(PauliWord::x).chain((0..n).map(PauliWord::z)) {
            let image = u * g.matrix(n) * u.adjoint();
            rows.push(decompose_pauli(&image, n)?);
        }
        Some(Tableau { n, rows })
    }
}

fn bits_of(p: &PauliWord, n: usize) -> u64 {
    p.x as u64 | ((p.z as u64) << n)
}

/// Inverse of a matrix over GF(2) given as row bitmasks (row i, bit j = entry (i, j)).
fn gf2_inverse(rows: &[u64], m: usize) -> Option<Vec<u64>> {
    let mut a = rows.to_vec();
    let mut inv: Vec<u64> = (0..m).map(|i| 1u64 << i).collect();
    for col in 0..m {
        let pivot = (col..m).find(|&r| (a[r] >> col) & 1 == 1)?;
        a.swap(col, pivot);
        inv.swap(col, pivot);
        for r in 0..m {
            if r != col && (a[r] >> col) & 1 == 1 {
                a[r] ^= a[col];
                inv[r] ^= inv[col];
            }
        }
    }
    Some(inv)
}

fn decompose_pauli(m: &CMat, n: usize) -> Option<PauliWord> {
    let d = (1usize << n) as f64;
    for x in 0..(1u32 << n) {
        for z in 0..(1u32 << n) {
            let p = PauliWord::signed(x, z, false);
            let overlap = (p.matrix(n).adjoint() * m).trace() / c(d, 0.0);
            if (overlap - c(1.0, 0.0)).norm() < 1e-8 {
                return Some(p);
            }
            if (overlap + c(1.0, 0.0)).norm() < 1e-8 {
                return Some(PauliWord::signed(x, z, true));
            }
        }
    }
    None
}

/// Clifford group element with an optional cached unitary.
#[derive(Debug, Clone)]
pub struct CliffordElement {
    pub tableau: Tableau,
    pub unitary: Option<CMat>,
}

impl CliffordElement {
    pub fn n_qubits(&self) -> usize {
        self.tableau.n
    }

    pub fn then(&self, after: &CliffordElement) -> CliffordElement {
        CliffordElement {
            tableau: self.tableau.then(&after.tableau),
            unitary: match (&self.unitary, &after.unitary) {
                (Some(a), Some(b)) => Some(b * a),
                _ => None,
            },
        }
    }

    pub fn inverse(&self) -> CliffordElement {
        CliffordElement {
            tableau: self.tableau.inverse(),
            unitary: self.unitary.as_ref().map(|u| u.adjoint()),
        }
    }
}

/// Fully enumerated n-qubit Clifford group (modulo global phase).
#[derive(Debug)]
pub struct CliffordGroup {
    n: usize,
    elements: Vec<Tableau>,
    unitaries: Vec<CMat>,
    index: HashMap<Tableau, usize>,
}

fn generators(n: usize) -> Vec<CMat> {
    let s = CMat::from_row_slice(2, 2, &[linalg::ONE, linalg::ZERO, linalg::ZERO, linalg::I]);
    let mut gens = Vec::new();
    for q in 0..n {
        gens.push(linalg::embed_one_qubit(&linalg::hadamard(), q, n));
        gens.push(linalg::embed_one_qubit(&s, q, n));
    }
    for a in 0..n {
        for b in 0..n {
            if a != b && (n == 2 || b == a + 1) {
                gens.push(linalg::embed_two_qubit(&cnot(), a, b, n));
                break;
            }
        }
    }
    gens
}

pub(crate) fn cnot() -> CMat {
    linalg::real_mat(
        4,
        &[
            1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.,
        ],
    )
}

static GROUP_1Q: OnceLock<CliffordGroup> = OnceLock::new();
static GROUP_2Q: OnceLock<CliffordGroup> = OnceLock::new();

impl CliffordGroup {
    /// Shared enumeration for n ∈ {1, 2}.
    pub fn get(n: usize) -> Result<&'static CliffordGroup> {
        match n {
            1 => Ok(GROUP_1Q.get_or_init(|| Self::enumerate(1))),
            2 => Ok(GROUP_2Q.get_or_init(|| Self::enumerate(2))),
            _ => Err(QcvvError::validation(format!(
                "Clifford group supported for 1 or 2 qubits, got {n}"
            ))),
        }
    }

    /// Breadth-first closure from the identity under {H, S, CNOT}.
    pub fn enumerate(n: usize) -> CliffordGroup {
        let gens: Vec<(Tableau, CMat)> = generators(n)
            .into_iter()
            .map(|u| (Tableau::from_unitary(&u).expect("generator is Clifford"), u))
            .collect();
        let mut elements = vec![Tableau::identity(n)];
        let mut unitaries = vec![linalg::identity(1 << n)];
        let mut index = HashMap::from([(Tableau::identity(n), 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            for (gt, gu) in &gens {
                let t = elements[i].then(gt);
                if index.contains_key(&t) {
                    continue;
                }
                let u = gu * &unitaries[i];
                index.insert(t.clone(), elements.len());
                queue.push_back(elements.len());
                elements.push(t);
                unitaries.push(u);
            }
        }
        CliffordGroup {
            n,
            elements,
            unitaries,
            index,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn tableau(&self, idx: usize) -> &Tableau {
        &self.elements[idx]
    }

    pub fn unitary(&self, idx: usize) -> &CMat {
        &self.unitaries[idx]
    }

    pub fn element(&self, idx: usize) -> CliffordElement {
        CliffordElement {
            tableau: self.elements[idx].clone(),
            unitary: Some(self.unitaries[idx].clone()),
        }
    }

    pub fn index_of(&self, t: &Tableau) -> Option<usize> {
        self.index.get(t).copied()
    }

    /// Index of `b ∘ a` (a applied first).
    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.index[&self.elements[a].then(&self.elements[b])]
    }

    pub fn inverse(&self, a: usize) -> usize {
        self.index[&self.elements[a].inverse()]
    }

    pub fn identity_index(&self) -> usize {
        0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order())
    }

    pub fn channel(&self, idx: usize) -> QuantumChannel {
        QuantumChannel::unitary(self.unitaries[idx].clone()).expect("group elements are unitary")
    }

    pub fn label(&self, idx: usize) -> String {
        clifford_label(self.n, idx)
    }
}

pub fn clifford_label(n: usize, idx: usize) -> String {
    format!("C{n}:{idx}")
}

/// Inverse of [`clifford_label`].
pub fn parse_clifford_label(label: &str) -> Option<(usize, usize)> {
    let rest = label.strip_prefix('C')?;
    let (n, idx) = rest.split_once(':')?;
    Some((n.parse().ok()?, idx.parse().ok()?))
}

/// The group handle for n qubits.
pub fn clifford_group(n_qubits: usize) -> Result<&'static CliffordGroup> {
    CliffordGroup::get(n_qubits)
}
