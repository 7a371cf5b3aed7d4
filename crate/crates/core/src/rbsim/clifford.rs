//! The 24-element single-qubit Clifford group as SU(2) representatives.

use std::f64::consts::FRAC_1_SQRT_2;
use std::ops::Mul;
use std::sync::LazyLock;

use num_complex::Complex64;

pub type State = [Complex64; 2];

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A 2×2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[C1, C0], [C0, C1]]);

    pub fn dagger(&self) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn apply(&self, s: &State) -> State {
        let m = &self.0;
        [
            m[0][0] * s[0] + m[0][1] * s[1],
            m[1][0] * s[0] + m[1][1] * s[1],
        ]
    }

    pub fn scale(&self, c: Complex64) -> Mat2 {
        let m = &self.0;
        Mat2([[m[0][0] * c, m[0][1] * c], [m[1][0] * c, m[1][1] * c]])
    }

    /// Largest entry deviation of `U†U` from the identity.
    pub fn unitarity_error(&self) -> f64 {
        let p = self.dagger() * *self;
        let mut err: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let target = if i == j { C1 } else { C0 };
                err = err.max((p.0[i][j] - target).norm());
            }
        }
        err
    }

    /// `|Tr(A†B)|/2`, equal to 1 exactly when the two unitaries agree up to phase.
    pub fn phase_overlap(&self, other: &Mat2) -> f64 {
        let p = self.dagger() * *other;
        (p.0[0][0] + p.0[1][1]).norm() / 2.0
    }

    pub fn approx_eq_up_to_phase(&self, other: &Mat2, tol: f64) -> bool {
        1.0 - self.phase_overlap(other) <= tol
    }

    /// Special-unitary representative with a fixed sign convention: the first
    /// entry of non-negligible magnitude has positive real part (or positive
    /// imaginary part if it is purely imaginary).
    fn canonical(&self) -> Mat2 {
        let m = self.scale(self.det().sqrt().inv());
        let lead = m
            .0
            .iter()
            .flatten()
            .copied()
            .find(|c| c.norm() > 1e-9)
            .expect("unitary has a nonzero entry");
        let flip = lead.re < -1e-12 || (lead.re.abs() <= 1e-12 && lead.im < 0.0);
        if flip {
            m.scale(-C1)
        } else {
            m
        }
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[C0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliffordGate {
    pub index: usize,
    pub unitary: Mat2,
}

pub const N_CLIFFORDS: usize = 24;

/// Gate table plus its multiplication table (`compose[a][b]` is the index of `U_a U_b`).
pub struct CliffordGroup {
    gates: Vec<CliffordGate>,
    compose: Vec<[u8; N_CLIFFORDS]>,
}

impl std::fmt::Debug for CliffordGroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CliffordGroup")
            .field("len", &self.gates.len())
            .finish_non_exhaustive()
    }
}

static GROUP: LazyLock<CliffordGroup> = LazyLock::new(CliffordGroup::generate);

impl CliffordGroup {
    pub fn get() -> &'static CliffordGroup {
        &GROUP
    }

    /// Breadth-first closure of `{H, S}` starting from the identity.
    fn generate() -> CliffordGroup {
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let hadamard = Mat2([[h, h], [h, -h]]);
        let phase = Mat2([[C1, C0], [C0, Complex64::new(0.0, 1.0)]]);
        let mut elems = vec![Mat2::IDENTITY.canonical()];
        let mut frontier = 0;
        while frontier < elems.len() {
            let g = elems[frontier];
            for gen in [hadamard, phase] {
                let cand = (gen * g).canonical();
                if !elems.iter().any(|e| e.approx_eq_up_to_phase(&cand, 1e-10)) {
                    elems.push(cand);
                }
            }
            frontier += 1;
        }
        assert_eq!(elems.len(), N_CLIFFORDS, "Clifford closure produced wrong order");
        let find = |m: &Mat2| {
            elems
                .iter()
                .position(|e| e.approx_eq_up_to_phase(m, 1e-10))
                .expect("Clifford table not closed under composition")
        };
        let compose = elems
            .iter()
            .map(|a| {
                let mut row = [0u8; N_CLIFFORDS];
                for (j, b) in elems.iter().enumerate() {
                    row[j] = find(&(*a * *b)) as u8;
                }
                row
            })
            .collect();
        let gates = elems
            .into_iter()
            .enumerate()
            .map(|(index, unitary)| CliffordGate { index, unitary })
            .collect();
        CliffordGroup { gates, compose }
    }

    pub fn gates(&self) -> &[CliffordGate] {
        &self.gates
    }

    pub fn gate(&self, index: usize) -> &CliffordGate {
        &self.gates[index]
    }

    pub fn compose(&self, a: usize, b: usize) -> usize {
        self.compose[a][b] as usize
    }

    /// Index of the table entry equal to `m` up to phase.
    pub fn lookup(&self, m: &Mat2, tol: f64) -> Option<usize> {
        self.gates
            .iter()
            .position(|g| g.unitary.approx_eq_up_to_phase(m, tol))
    }
}

/// All 24 single-qubit Clifford gates; index 0 is the identity.
pub fn clifford_table() -> Vec<CliffordGate> {
    CliffordGroup::get().gates().to_vec()
}
