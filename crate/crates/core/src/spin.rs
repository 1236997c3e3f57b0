//! Angular-momentum matrices in the `|j, m⟩` basis, ordered `m = j, j−1, …, −j`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Spin quantum number stored as `2j` so half-integer spins are exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinQuantumNumber {
    two_j: u32,
}

impl SpinQuantumNumber {
    pub const HALF: Self = Self { two_j: 1 };
    pub const ONE: Self = Self { two_j: 2 };

    pub const fn from_twice(two_j: u32) -> Self {
        Self { two_j }
    }

    /// Integer spin `j`.
    pub const fn integer(j: u32) -> Self {
        Self { two_j: 2 * j }
    }

    pub const fn two_j(self) -> u32 {
        self.two_j
    }

    pub fn value(self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub const fn dim(self) -> usize {
        self.two_j as usize + 1
    }

    /// `m` values in basis order (descending).
    pub fn m_values(self) -> impl Iterator<Item = f64> {
        let j = self.value();
        (0..self.dim()).map(move |i| j - i as f64)
    }

    pub fn casimir(self) -> f64 {
        let j = self.value();
        j * (j + 1.0)
    }
}

impl std::fmt::Display for SpinQuantumNumber {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.two_j % 2 == 0 {
            write!(f, "{}", self.two_j / 2)
        } else {
            write!(f, "{}/2", self.two_j)
        }
    }
}

impl std::str::FromStr for SpinQuantumNumber {
    type Err = Error;

    /// Accepts `"1"`, `"3/2"`, `"1.5"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("not a spin quantum number: {s:?}"));
        let s = s.trim();
        if let Some((num, den)) = s.split_once('/') {
            let num: u32 = num.trim().parse().map_err(|_| bad())?;
            match den.trim() {
                "2" => Ok(Self::from_twice(num)),
                "1" => Ok(Self::from_twice(2 * num)),
                _ => Err(bad()),
            }
        } else {
            let v: f64 = s.parse().map_err(|_| bad())?;
            let twice = 2.0 * v;
            if v < 0.0 || (twice - twice.round()).abs() > 1e-12 {
                return Err(bad());
            }
            Ok(Self::from_twice(twice.round() as u32))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinTriple {
    pub sx: ComplexMatrix,
    pub sy: ComplexMatrix,
    pub sz: ComplexMatrix,
}

impl SpinTriple {
    pub fn components(&self) -> [&ComplexMatrix; 3] {
        [&self.sx, &self.sy, &self.sz]
    }

    /// `v·S = v_x S_x + v_y S_y + v_z S_z` for a real 3-vector.
    pub fn dot(&self, v: [f64; 3]) -> ComplexMatrix {
        &self.sx * Complex64::from(v[0]) + &self.sy * Complex64::from(v[1]) + &self.sz * Complex64::from(v[2])
    }

    pub fn dim(&self) -> usize {
        self.sz.nrows()
    }

    /// `S_+ = S_x + i S_y`.
    pub fn raising(&self) -> ComplexMatrix {
        &self.sx + &self.sy * I
    }
}

/// Spin matrices with the Condon–Shortley phase: `⟨m+1|S_+|m⟩ = √(j(j+1) − m(m+1))`.
pub fn spin_operators(j: SpinQuantumNumber) -> SpinTriple {
    let d = j.dim();
    let jj = j.casimir();
    let m: Vec<f64> = j.m_values().collect();

    let sz = ComplexMatrix::from_fn(d, d, |r, c| if r == c { Complex64::from(m[r]) } else { Complex64::new(0.0, 0.0) });
    // Row r has m[r] = m[r+1] + 1, so S_+ sits on the superdiagonal.
    let raising = ComplexMatrix::from_fn(d, d, |r, c| {
        if c == r + 1 {
            Complex64::from((jj - m[c] * (m[c] + 1.0)).sqrt())
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let lowering = raising.adjoint();
    let sx = (&raising + &lowering) * Complex64::from(0.5);
    let sy = (&raising - &lowering) * Complex64::new(0.0, -0.5);
    SpinTriple { sx, sy, sz }
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            left: a.shape(),
            right: b.shape(),
        });
    }
    Ok(a * b - b * a)
}

/// Largest entrywise modulus of `m − m†`.
pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    #[test]
    fn spin_one_sz_is_diagonal_descending() {
        let s = spin_operators(SpinQuantumNumber::ONE);
        let expected = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0), c(-1.0)]));
        assert_eq!(s.sz, expected);
    }

    #[test]
    fn spin_half_is_pauli_over_two() {
        let s = spin_operators(SpinQuantumNumber::HALF);
        assert!((s.sx[(0, 1)] - c(0.5)).norm() < 1e-15);
        assert!((s.sx[(1, 0)] - c(0.5)).norm() < 1e-15);
        assert!(s.sx[(0, 0)].norm() < 1e-15 && s.sx[(1, 1)].norm() < 1e-15);
        assert!((s.sy[(0, 1)] - Complex64::new(0.0, -0.5)).norm() < 1e-15);
    }

    #[test]
    fn spin_two_casimir() {
        let s = spin_operators(SpinQuantumNumber::integer(2));
        let cas = &s.sx * &s.sx + &s.sy * &s.sy + &s.sz * &s.sz;
        assert!(max_abs(&(cas - identity(5) * c(6.0))) < 1e-12);
    }

    #[test]
    fn algebra_holds_up_to_two_j_eight() {
        for two_j in 0..=8 {
            let j = SpinQuantumNumber::from_twice(two_j);
            let s = spin_operators(j);
            let d = j.dim();
            for m in s.components() {
                assert!(hermitian_residual(m) < 1e-12);
            }
            let xy = commutator(&s.sx, &s.sy).unwrap();
            let yz = commutator(&s.sy, &s.sz).unwrap();
            let zx = commutator(&s.sz, &s.sx).unwrap();
            assert!(max_abs(&(xy - &s.sz * I)) < 1e-12, "two_j={two_j}");
            assert!(max_abs(&(yz - &s.sx * I)) < 1e-12, "two_j={two_j}");
            assert!(max_abs(&(zx - &s.sy * I)) < 1e-12, "two_j={two_j}");
            let cas = &s.sx * &s.sx + &s.sy * &s.sy + &s.sz * &s.sz;
            assert!(max_abs(&(cas - identity(d) * c(j.casimir()))) < 1e-12);
        }
    }

    #[test]
    fn ladder_norms() {
        for two_j in 1..=8 {
            let j = SpinQuantumNumber::from_twice(two_j);
            let s = spin_operators(j);
            let sp = s.raising();
            for (i, m) in j.m_values().enumerate() {
                let norm = sp.column(i).norm();
                let expected = (j.casimir() - m * (m + 1.0)).max(0.0).sqrt();
                assert!((norm - expected).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn kron_identities() {
        let i2 = identity(2);
        let i3 = identity(3);
        assert_eq!(kron(&i2, &i3), identity(6));

        let d = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let k = kron(&d, &i2);
        let expected = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(1.0), c(-1.0), c(-1.0)]));
        assert_eq!(k, expected);

        let sz = spin_operators(SpinQuantumNumber::ONE).sz;
        let k = kron(&sz, &i3);
        let mut diag: Vec<f64> = (0..9).map(|i| k[(i, i)].re).collect();
        diag.sort_by(f64::total_cmp);
        assert_eq!(diag, vec![-1.0, -1.0, -1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn commutator_with_identity_vanishes() {
        let s = spin_operators(SpinQuantumNumber::integer(2));
        assert!(max_abs(&commutator(&s.sx, &identity(5)).unwrap()) == 0.0);
    }

    #[test]
    fn commutator_rejects_mismatched_dims() {
        let err = commutator(&identity(2), &identity(3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn parses_spin_labels() {
        assert_eq!("1".parse::<SpinQuantumNumber>().unwrap(), SpinQuantumNumber::ONE);
        assert_eq!("3/2".parse::<SpinQuantumNumber>().unwrap(), SpinQuantumNumber::from_twice(3));
        assert_eq!("1.5".parse::<SpinQuantumNumber>().unwrap(), SpinQuantumNumber::from_twice(3));
        assert!("0.3".parse::<SpinQuantumNumber>().is_err());
        assert_eq!(SpinQuantumNumber::from_twice(3).to_string(), "3/2");
    }
}
