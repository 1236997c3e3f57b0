//! Happer Hamiltonians on the coupled electron (spin-1) × nuclear (spin-L) space.
//!
//! The product basis is `|S_z, L_z⟩` in lexicographic order with both quantum
//! numbers descending, so index `3·(2L+1)` runs `|1,L⟩, |1,L−1⟩, …, |−1,−L⟩`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectrum::EigenSystem;
use crate::spin::{identity, kron, spin_operators, ComplexMatrix, SpinQuantumNumber, SpinTriple, I};
use crate::tolerance::TOL;

pub const ELECTRON_SPIN: SpinQuantumNumber = SpinQuantumNumber::ONE;

/// Direction of the applied field, `n_B = (sinθ cosφ, sinθ sinφ, cosθ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldDirection {
    pub theta: f64,
    pub phi: f64,
}

impl FieldDirection {
    pub const NORTH: FieldDirection = FieldDirection { theta: 0.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    pub fn from_vector(v: [f64; 3]) -> Self {
        let r = norm3(v);
        let theta = (v[2] / r).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]).rem_euclid(std::f64::consts::TAU);
        Self { theta, phi }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub nuclear_spin: SpinQuantumNumber,
    pub x: f64,
    pub y: f64,
    pub field: FieldDirection,
    pub axis: [f64; 3],
}

impl ModelParams {
    /// `y = 0`, field along `ẑ`, axis `ẑ`.
    pub fn new(nuclear_spin: SpinQuantumNumber, x: f64) -> Self {
        Self {
            nuclear_spin,
            x,
            y: 0.0,
            field: FieldDirection::NORTH,
            axis: [0.0, 0.0, 1.0],
        }
    }

    pub fn with_y(mut self, y: f64) -> Self {
        self.y = y;
        self
    }

    pub fn with_field(mut self, field: FieldDirection) -> Self {
        self.field = field;
        self
    }

    pub fn with_axis(mut self, axis: [f64; 3]) -> Self {
        self.axis = axis;
        self
    }

    pub fn with_x(mut self, x: f64) -> Self {
        self.x = x;
        self
    }

    pub fn dim(&self) -> usize {
        ELECTRON_SPIN.dim() * self.nuclear_spin.dim()
    }

    /// `x* = 2/(2L+1)`, where `2L+1` levels cross when `y = 0`.
    pub fn crossing_point(&self) -> f64 {
        crossing_point(self.nuclear_spin)
    }

    pub fn validate(&self) -> Result<()> {
        let n = norm3(self.axis);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::NonUnitAxis { norm: n });
        }
        if !(self.x.is_finite() && self.y.is_finite()) {
            return Err(Error::InvalidParameter("x and y must be finite".into()));
        }
        Ok(())
    }
}

pub fn crossing_point(nuclear_spin: SpinQuantumNumber) -> f64 {
    2.0 / f64::from(nuclear_spin.two_j() + 1)
}

/// Precomputed operators on the coupled space for one nuclear spin.
#[derive(Debug, Clone)]
pub struct HapperOperators {
    nuclear_spin: SpinQuantumNumber,
    electron: SpinTriple,
    /// `S_i ⊗ I_L`
    s: [ComplexMatrix; 3],
    /// `I_S ⊗ L_i`
    l: [ComplexMatrix; 3],
    s_dot_l: ComplexMatrix,
}

impl HapperOperators {
    pub fn new(nuclear_spin: SpinQuantumNumber) -> Self {
        let electron = spin_operators(ELECTRON_SPIN);
        let nuclear = spin_operators(nuclear_spin);
        let il = identity(nuclear_spin.dim());
        let is = identity(ELECTRON_SPIN.dim());
        let s = [kron(&electron.sx, &il), kron(&electron.sy, &il), kron(&electron.sz, &il)];
        let l = [kron(&is, &nuclear.sx), kron(&is, &nuclear.sy), kron(&is, &nuclear.sz)];
        let s_dot_l = kron(&electron.sx, &nuclear.sx) + kron(&electron.sy, &nuclear.sy) + kron(&electron.sz, &nuclear.sz);
        Self {
            nuclear_spin,
            electron,
            s,
            l,
            s_dot_l,
        }
    }

    pub fn nuclear_spin(&self) -> SpinQuantumNumber {
        self.nuclear_spin
    }

    pub fn dim(&self) -> usize {
        self.s_dot_l.nrows()
    }

    pub fn s(&self) -> &[ComplexMatrix; 3] {
        &self.s
    }

    pub fn l(&self) -> &[ComplexMatrix; 3] {
        &self.l
    }

    pub fn s_dot_l(&self) -> &ComplexMatrix {
        &self.s_dot_l
    }

    /// `v·S ⊗ I`
    pub fn s_along(&self, v: [f64; 3]) -> ComplexMatrix {
        dot3(&self.s, v)
    }

    /// `v·(S ⊗ I + I ⊗ L)`
    pub fn j_along(&self, v: [f64; 3]) -> ComplexMatrix {
        dot3(&self.s, v) + dot3(&self.l, v)
    }

    /// `[3(â·S)² − S²] ⊗ I`, which equals `S·(3ââ − I)·S`.
    pub fn spin_axis_term(&self, axis: [f64; 3]) -> ComplexMatrix {
        let a_s = self.electron.dot(axis);
        let s2 = Complex64::from(ELECTRON_SPIN.casimir());
        let single = &a_s * &a_s * Complex64::from(3.0) - identity(3) * s2;
        kron(&single, &identity(self.nuclear_spin.dim()))
    }

    /// `B·S + x S·L + y S·(3ââ − I)·S` with an arbitrary (not necessarily unit) field vector `B`.
    pub fn hamiltonian_with_field(&self, field: [f64; 3], x: f64, y: f64, axis: [f64; 3]) -> ComplexMatrix {
        let mut h = self.s_along(field);
        h += &self.s_dot_l * Complex64::from(x);
        if y != 0.0 {
            h += self.spin_axis_term(axis) * Complex64::from(y);
        }
        h
    }

    pub fn hamiltonian(&self, p: &ModelParams) -> ComplexMatrix {
        self.hamiltonian_with_field(p.field.unit_vector(), p.x, p.y, p.axis)
    }

    /// Exact `[n_B·J, H] = 3iy {(n_B×â)·S, â·S} ⊗ I`.
    pub fn spin_axis_commutator(&self, p: &ModelParams) -> ComplexMatrix {
        let b = cross3(p.field.unit_vector(), p.axis);
        let bs = self.electron.dot(b);
        let a_s = self.electron.dot(p.axis);
        let anti = &bs * &a_s + &a_s * &bs;
        kron(&anti, &identity(self.nuclear_spin.dim())) * (I * Complex64::from(3.0 * p.y))
    }

    /// `6y (n_B×â)·S (â·S) ⊗ I` as literally printed; differs from the true
    /// commutator by an `i` and a symmetrization but shares its zero set.
    pub fn spin_axis_commutator_printed(&self, p: &ModelParams) -> ComplexMatrix {
        let b = cross3(p.field.unit_vector(), p.axis);
        let prod = self.electron.dot(b) * self.electron.dot(p.axis);
        kron(&prod, &identity(self.nuclear_spin.dim())) * Complex64::from(6.0 * p.y)
    }
}

pub fn build_hamiltonian(p: &ModelParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(HapperOperators::new(p.nuclear_spin).hamiltonian(p))
}

/// `J_{n_B} = n_B·(S + L)`.
pub fn conserved_j(p: &ModelParams) -> ComplexMatrix {
    HapperOperators::new(p.nuclear_spin).j_along(p.field.unit_vector())
}

pub fn spin_axis_commutator(p: &ModelParams) -> Result<ComplexMatrix> {
    p.validate()?;
    Ok(HapperOperators::new(p.nuclear_spin).spin_axis_commutator(p))
}

/// `H' = k·S + S·L`: the field direction scaled to `|k|` with unit exchange.
///
/// Equals `|k|·H(x = 1/|k|)` at `y = 0`, so `|k| = (2L+1)/2` is the sphere
/// on which the crossing cluster is degenerate.
pub fn momentum_hamiltonian(k: [f64; 3], nuclear_spin: SpinQuantumNumber) -> ComplexMatrix {
    HapperOperators::new(nuclear_spin).hamiltonian_with_field(k, 1.0, 0.0, [0.0, 0.0, 1.0])
}

/// `H_sm = k·F` with `F` the spin-`j` triple.
pub fn semimetal_hamiltonian(k: [f64; 3], spin: SpinQuantumNumber) -> ComplexMatrix {
    spin_operators(spin).dot(k)
}

/// `P H P` with `P = Σ_{n ∈ bands} |ψ_n⟩⟨ψ_n|`, bands given as 0-based sorted indices
/// of `reference`.
///
/// Fails when one of the chosen levels is degenerate with a level outside the set,
/// since the projector would then depend on an arbitrary basis choice.
pub fn projected_hamiltonian(h: &ComplexMatrix, bands: &[usize], reference: &EigenSystem) -> Result<ComplexMatrix> {
    let n = reference.dim();
    if h.nrows() != n || !h.is_square() {
        return Err(Error::DimensionMismatch {
            left: h.shape(),
            right: (n, n),
        });
    }
    if bands.is_empty() || bands.iter().any(|&b| b >= n) {
        return Err(Error::InvalidParameter(format!("band indices {bands:?} out of range for dimension {n}")));
    }
    for &b in bands {
        for other in (0..n).filter(|o| !bands.contains(o)) {
            if (reference.eigenvalues[b] - reference.eigenvalues[other]).abs() < TOL.crossing_exclusion {
                return Err(Error::InseparableLevels {
                    x: f64::NAN,
                    labels: vec![b, other],
                });
            }
        }
    }
    let p = reference.projector(bands);
    Ok(&p * h * &p)
}

pub(crate) fn dot3(ops: &[ComplexMatrix; 3], v: [f64; 3]) -> ComplexMatrix {
    &ops[0] * Complex64::from(v[0]) + &ops[1] * Complex64::from(v[1]) + &ops[2] * Complex64::from(v[2])
}

pub fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn normalize3(v: [f64; 3]) -> [f64; 3] {
    let n = norm3(v);
    [v[0] / n, v[1] / n, v[2] / n]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::eigensystem;
    use crate::spin::{commutator, hermitian_residual, max_abs};
    use std::f64::consts::PI;

    fn l(two: u32) -> SpinQuantumNumber {
        SpinQuantumNumber::from_twice(two)
    }

    #[test]
    fn field_unit_vector_is_normalized() {
        for &(t, p) in &[(0.0, 0.0), (0.3, 1.2), (PI, 5.0), (1.9, 6.2)] {
            let v = FieldDirection::new(t, p).unit_vector();
            assert!((norm3(v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_printed_nine_by_nine_matrix() {
        let (t, p) = (0.83, 2.1);
        let h = build_hamiltonian(&ModelParams::new(SpinQuantumNumber::ONE, 2.0 / 3.0).with_field(FieldDirection::new(t, p))).unwrap();
        let c = t.cos();
        let off = Complex64::from_polar(t.sin() / 2f64.sqrt(), -p);
        assert!((h[(0, 0)] - Complex64::from(c + 2.0 / 3.0)).norm() < 1e-14);
        assert!((h[(0, 3)] - off).norm() < 1e-14);
        assert!((h[(3, 0)] - off.conj()).norm() < 1e-14);
        assert!((h[(1, 3)] - Complex64::from(2.0 / 3.0)).norm() < 1e-14);
        assert!((h[(2, 2)] - Complex64::from(c - 2.0 / 3.0)).norm() < 1e-14);
        assert!((h[(6, 6)] - Complex64::from(-c - 2.0 / 3.0)).norm() < 1e-14);
        assert!((h[(8, 8)] - Complex64::from(2.0 / 3.0 - c)).norm() < 1e-14);
        assert!((h[(4, 6)] - Complex64::from(2.0 / 3.0)).norm() < 1e-14);
        assert!(h[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn decoupled_zeeman_spectrum() {
        let p = ModelParams::new(l(4), 0.0);
        let es = eigensystem(&build_hamiltonian(&p).unwrap()).unwrap();
        for (i, e) in es.eigenvalues.iter().enumerate() {
            let expected = (i / 5) as f64 - 1.0;
            assert!((e - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn l1_crossing_energy() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 2.0 / 3.0);
        let es = eigensystem(&build_hamiltonian(&p).unwrap()).unwrap();
        let count = es.eigenvalues.iter().filter(|e| (**e + 1.0 / 3.0).abs() < 1e-10).count();
        assert_eq!(count, 3);
    }

    #[test]
    fn rejects_non_unit_axis() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.5).with_axis([0.0, 0.0, 2.0]);
        assert!(matches!(build_hamiltonian(&p), Err(Error::NonUnitAxis { .. })));
    }

    #[test]
    fn conserved_j_at_north_is_diagonal() {
        let j = conserved_j(&ModelParams::new(SpinQuantumNumber::ONE, 0.5));
        for r in 0..9 {
            for c in 0..9 {
                if r != c {
                    assert_eq!(j[(r, c)].norm(), 0.0);
                }
            }
        }
        assert_eq!(j[(0, 0)].re, 2.0);
        assert_eq!(j[(8, 8)].re, -2.0);
    }

    #[test]
    fn spin_axis_commutator_zero_cases() {
        let base = ModelParams::new(SpinQuantumNumber::ONE, 0.7).with_field(FieldDirection::new(1.1, 0.4));
        assert_eq!(max_abs(&spin_axis_commutator(&base).unwrap()), 0.0);

        let axis = FieldDirection::new(1.1, 0.4).unit_vector();
        let aligned = base.with_y(0.3).with_axis(axis);
        assert!(max_abs(&spin_axis_commutator(&aligned).unwrap()) < 1e-14);
    }

    #[test]
    fn spin_axis_commutator_matches_direct() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.8)
            .with_y(0.1)
            .with_field(FieldDirection::new(0.9, 2.3))
            .with_axis(normalize3([0.3, -0.5, 0.8]));
        let h = build_hamiltonian(&p).unwrap();
        let direct = commutator(&conserved_j(&p), &h).unwrap();
        let formula = spin_axis_commutator(&p).unwrap();
        assert!(max_abs(&(direct - formula)) < 1e-12);
    }

    #[test]
    fn printed_commutator_shares_zero_set_but_differs_elsewhere() {
        let ops = HapperOperators::new(SpinQuantumNumber::ONE);
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.8)
            .with_y(0.1)
            .with_field(FieldDirection::new(0.9, 2.3))
            .with_axis(normalize3([0.3, -0.5, 0.8]));
        assert!(max_abs(&(ops.spin_axis_commutator(&p) - ops.spin_axis_commutator_printed(&p))) > 1e-3);
        let aligned = p.with_axis(p.field.unit_vector());
        assert!(max_abs(&ops.spin_axis_commutator_printed(&aligned)) < 1e-14);
    }

    #[test]
    fn hamiltonian_is_traceless_and_hermitian() {
        let p = ModelParams::new(l(3), 0.37)
            .with_y(0.2)
            .with_field(FieldDirection::new(2.0, 4.0))
            .with_axis(normalize3([1.0, 1.0, -0.4]));
        let h = build_hamiltonian(&p).unwrap();
        assert!(hermitian_residual(&h) < 1e-12);
        assert!(h.trace().norm() < 1e-10);
    }

    #[test]
    fn projected_all_levels_is_identity_projection() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.5).with_field(FieldDirection::new(0.6, 1.0));
        let h = build_hamiltonian(&p).unwrap();
        let es = eigensystem(&h).unwrap();
        let all: Vec<usize> = (0..9).collect();
        let hp = projected_hamiltonian(&h, &all, &es).unwrap();
        assert!(max_abs(&(hp - &h)) < 1e-12);
    }

    #[test]
    fn projected_cluster_keeps_cluster_levels() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.5).with_field(FieldDirection::new(0.6, 1.0));
        let h = build_hamiltonian(&p).unwrap();
        let es = eigensystem(&h).unwrap();
        let hp = projected_hamiltonian(&h, &[2, 3, 4], &es).unwrap();
        let ep = eigensystem(&hp).unwrap();
        let mut nonzero: Vec<f64> = ep.eigenvalues.iter().copied().filter(|e| e.abs() > 1e-9).collect();
        nonzero.sort_by(f64::total_cmp);
        assert_eq!(nonzero.len(), 3);
        for (a, b) in nonzero.iter().zip(&es.eigenvalues[2..5]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn projected_refuses_split_degenerate_cluster() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 2.0 / 3.0);
        let h = build_hamiltonian(&p).unwrap();
        let es = eigensystem(&h).unwrap();
        assert!(matches!(projected_hamiltonian(&h, &[2, 3], &es), Err(Error::InseparableLevels { .. })));
    }

    #[test]
    fn weyl_sphere_radius_is_degenerate() {
        let k = FieldDirection::new(0.7, 0.2).unit_vector().map(|c| 1.5 * c);
        let es = eigensystem(&momentum_hamiltonian(k, SpinQuantumNumber::ONE)).unwrap();
        let e = &es.eigenvalues;
        assert!((e[2] - e[4]).abs() < 1e-10);
        assert!((e[2] + 0.5).abs() < 1e-10);
    }

    #[test]
    fn semimetal_half_spin_levels() {
        let es = eigensystem(&semimetal_hamiltonian([0.0, 0.0, 1.0], SpinQuantumNumber::HALF)).unwrap();
        assert!((es.eigenvalues[0] + 0.5).abs() < 1e-14);
        assert!((es.eigenvalues[1] - 0.5).abs() < 1e-14);
    }
}
