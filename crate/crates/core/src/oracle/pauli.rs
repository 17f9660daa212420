//! Pauli-frame propagation of Bell-pair errors through a teleported CNOT.
//!
//! Wires: 0 is the control data qubit, 1 and 2 hold the Bell pair (1 on the
//! control side, 2 on the target side), 3 is the target data qubit. The
//! circuit is `CNOT(0->1)`, `CNOT(2->3)`, measure 1 in Z with an X fix-up on
//! 3, measure 2 in X with a Z fix-up on 0.

use serde::{Deserialize, Serialize};

pub const CONTROL: usize = 0;
pub const BELL_A: usize = 1;
pub const BELL_B: usize = 2;
pub const TARGET: usize = 3;

/// Pauli operator on up to 8 qubits in symplectic form with a sign bit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Pauli {
    pub x: u8,
    pub z: u8,
    pub negative: bool,
}

impl Pauli {
    pub fn single(q: usize, letter: char) -> Self {
        let bit = 1u8 << q;
        match letter {
            'I' => Self::default(),
            'X' => Self {
                x: bit,
                ..Self::default()
            },
            'Z' => Self {
                z: bit,
                ..Self::default()
            },
            'Y' => Self {
                x: bit,
                z: bit,
                negative: false,
            },
            _ => panic!("not a Pauli letter: {letter}"),
        }
    }

    /// Product ignoring phase.
    pub fn frame_mul(self, other: Pauli) -> Pauli {
        Pauli {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            negative: false,
        }
    }

    pub fn letter(&self, q: usize) -> char {
        match ((self.x >> q) & 1, (self.z >> q) & 1) {
            (0, 0) => 'I',
            (1, 0) => 'X',
            (0, 1) => 'Z',
            _ => 'Y',
        }
    }

    /// Product of two commuting Hermitian Paulis, with sign.
    pub fn mul(self, other: Pauli) -> Pauli {
        let mut phase = 2 * (self.negative as i32 + other.negative as i32);
        for q in 0..8 {
            let (x1, z1) = (Self::bit(self.x, q) as i32, Self::bit(self.z, q) as i32);
            let (x2, z2) = (Self::bit(other.x, q) as i32, Self::bit(other.z, q) as i32);
            phase += match (x1, z1) {
                (0, 0) => 0,
                (1, 1) => z2 - x2,
                (1, 0) => z2 * (2 * x2 - 1),
                _ => x2 * (1 - 2 * z2),
            };
        }
        let phase = phase.rem_euclid(4);
        assert!(phase % 2 == 0, "operators anticommute");
        Pauli {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
            negative: phase == 2,
        }
    }

    fn clear(&mut self, q: usize) {
        self.x &= !(1 << q);
        self.z &= !(1 << q);
    }

    fn bit(v: u8, q: usize) -> bool {
        (v >> q) & 1 == 1
    }

    /// Conjugation by a Hadamard on `q`.
    pub fn hadamard(&mut self, q: usize) {
        let (xq, zq) = (Self::bit(self.x, q), Self::bit(self.z, q));
        self.negative ^= xq && zq;
        self.x = (self.x & !(1 << q)) | ((zq as u8) << q);
        self.z = (self.z & !(1 << q)) | ((xq as u8) << q);
    }

    /// Conjugation by a CNOT with control `c` and target `t`.
    pub fn cnot(&mut self, c: usize, t: usize) {
        let (xc, zc) = (Self::bit(self.x, c), Self::bit(self.z, c));
        let (xt, zt) = (Self::bit(self.x, t), Self::bit(self.z, t));
        self.negative ^= xc && zt && !(xt ^ zc);
        self.x ^= (xc as u8) << t;
        self.z ^= (zt as u8) << c;
    }
}

/// Propagates a frame error through the teleported CNOT and returns the
/// residual on the two data qubits.
pub fn propagate(mut frame: Pauli) -> Pauli {
    frame.cnot(CONTROL, BELL_A);
    frame.cnot(BELL_B, TARGET);
    let flip_a = Pauli::bit(frame.x, BELL_A);
    frame.clear(BELL_A);
    if flip_a {
        frame = frame.frame_mul(Pauli::single(TARGET, 'X'));
    }
    let flip_b = Pauli::bit(frame.z, BELL_B);
    frame.clear(BELL_B);
    if flip_b {
        frame = frame.frame_mul(Pauli::single(CONTROL, 'Z'));
    }
    frame.negative = false;
    frame
}

/// Checks the propagation rules: X on either Bell qubit reaches the target,
/// Z on either Bell qubit reaches the control, and both Bell stabilizers act
/// trivially.
pub fn verify_propagation() -> bool {
    let table = pauli_propagation_table();
    let get = |input: &str| {
        let e = table
            .iter()
            .find(|e| e.input == input)
            .expect("complete table");
        (e.control, e.target)
    };
    let rules = [
        ("II", ('I', 'I')),
        ("XI", ('I', 'X')),
        ("IX", ('I', 'X')),
        ("ZI", ('Z', 'I')),
        ("IZ", ('Z', 'I')),
        ("XX", ('I', 'I')),
        ("ZZ", ('I', 'I')),
    ];
    let gens = bell_stabilizers();
    let xx = Pauli::single(BELL_A, 'X').frame_mul(Pauli::single(BELL_B, 'X'));
    let zz = Pauli::single(BELL_A, 'Z').frame_mul(Pauli::single(BELL_B, 'Z'));
    rules.iter().all(|(input, out)| get(input) == *out)
        && in_stabilizer_group(xx, &gens)
        && in_stabilizer_group(zz, &gens)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropagationEntry {
    /// Letters on (Bell A, Bell B), e.g. `"XI"`.
    pub input: String,
    pub control: char,
    pub target: char,
}

/// Residual data-qubit error for each of the 16 Bell-pair Paulis.
pub fn pauli_propagation_table() -> Vec<PropagationEntry> {
    let letters = ['I', 'X', 'Y', 'Z'];
    let mut out = Vec::with_capacity(16);
    for a in letters {
        for b in letters {
            let input = Pauli::single(BELL_A, a).frame_mul(Pauli::single(BELL_B, b));
            let res = propagate(input);
            out.push(PropagationEntry {
                input: format!("{a}{b}"),
                control: res.letter(CONTROL),
                target: res.letter(TARGET),
            });
        }
    }
    out
}

/// Stabilizer generators of the Bell pair prepared by `H(A)`, `CNOT(A->B)`
/// from `|00>`.
pub fn bell_stabilizers() -> [Pauli; 2] {
    let mut gens = [Pauli::single(BELL_A, 'Z'), Pauli::single(BELL_B, 'Z')];
    for g in gens.iter_mut() {
        g.hadamard(BELL_A);
        g.cnot(BELL_A, BELL_B);
    }
    gens
}

/// Whether `p` is, with sign, an element of the group generated by `gens`.
pub fn in_stabilizer_group(p: Pauli, gens: &[Pauli; 2]) -> bool {
    let [g1, g2] = *gens;
    [Pauli::default(), g1, g2, g1.mul(g2)].contains(&p)
}
