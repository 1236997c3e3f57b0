//! Closed-form bases of the `(2L+1)`-fold degenerate subspace at `x* = 2/(2L+1)`
//! for `L = 1` and `L = 2`, plus a numerical null-space solver for any `L`.
//!
//! Each closed-form vector has a single `−1` pivot component and entries that
//! are smooth away from the poles. Components are written as an amplitude
//! times `e^{−inφ}`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::FrameSource;
use crate::model::{crossing_point, FieldDirection, HapperOperators, ModelParams};
use crate::spectrum::eigensystem;
use crate::spin::{ComplexMatrix, SpinQuantumNumber};
use crate::tolerance::TOL;

pub type ComplexVector = DVector<Complex64>;

#[derive(Debug, Clone)]
pub struct AnalyticFrame {
    pub nuclear_spin: SpinQuantumNumber,
    pub theta: f64,
    pub phi: f64,
    /// Vectors exactly as given by the closed form.
    pub raw: Vec<ComplexVector>,
    /// Gram–Schmidt of `raw`, in the same order.
    pub orthonormal: Vec<ComplexVector>,
}

impl AnalyticFrame {
    /// Orthonormal vectors as columns.
    pub fn frame(&self) -> ComplexMatrix {
        ComplexMatrix::from_columns(&self.orthonormal)
    }

    pub fn projector(&self) -> ComplexMatrix {
        let f = self.frame();
        &f * f.adjoint()
    }
}

/// Amplitude `a` on `e^{−inφ}`.
#[derive(Clone, Copy)]
struct Term(f64, i32);

const ZERO: Term = Term(0.0, 0);
const PIVOT: Term = Term(-1.0, 0);

struct Trig {
    c: f64,
    csc: f64,
    cot: f64,
    /// `1/cos(θ/2)`, `1/sin(θ/2)`, `tan(θ/2)`.
    sec_h: f64,
    csc_h: f64,
    tan_h: f64,
}

impl Trig {
    fn new(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let (sh, ch) = (theta / 2.0).sin_cos();
        Trig {
            c,
            csc: 1.0 / s,
            cot: c / s,
            sec_h: 1.0 / ch,
            csc_h: 1.0 / sh,
            tan_h: sh / ch,
        }
    }
}

fn spin_one_terms(theta: f64) -> Vec<[Term; 9]> {
    let Trig { c, csc, cot, sec_h, tan_h, .. } = Trig::new(theta);
    let s2 = SQRT_2;
    let a = 2.0 * s2 * csc * (4.0 * csc * csc - 4.0 * cot * csc - 3.0) / 9.0;
    let b = (-2.0 * csc * csc + 2.0 * cot * csc + 3.0) / 3.0;
    let d = 2.0 / 3.0 * s2 * csc;
    vec![
        [
            Term(-2.0 * sec_h.powi(4) / 9.0, 4),
            Term(a, 3),
            Term(b, 2),
            Term(-8.0 * s2 * (c - 1.0) * csc.powi(3) / 9.0, 3),
            Term(4.0 * (c - 1.0) * csc * csc / 3.0, 2),
            Term(s2 * tan_h, 1),
            ZERO,
            ZERO,
            PIVOT,
        ],
        [
            Term(a, 3),
            Term(-(1.0 - 3.0 * c).powi(2) * csc * csc / 9.0, 2),
            Term(d, 1),
            Term(4.0 * (3.0 * c - 1.0) * csc * csc / 9.0, 2),
            Term(-s2 * (3.0 * c - 1.0) * csc / 3.0, 1),
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
        ],
        [
            Term(b, 2),
            Term(d, 1),
            ZERO,
            Term(-s2 * (3.0 * c + 1.0) * csc / 3.0, 1),
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
            ZERO,
        ],
    ]
}

fn spin_two_terms(theta: f64) -> Vec<[Term; 15]> {
    let Trig { c, csc, cot, sec_h, csc_h, tan_h } = Trig::new(theta);
    let (s2, s3, s6) = (SQRT_2, 3f64.sqrt(), 6f64.sqrt());
    let cos2 = (2.0 * theta).cos();
    let sin_h = (theta / 2.0).sin();

    let a = -6.0 * (5.0 * c - 3.0) * csc_h.powi(3) * sec_h.powi(5) / 625.0;
    let b = 8.0 * s6 * csc * csc * (-6.0 * csc * csc + 6.0 * cot * csc + 5.0) / 125.0;
    let d = -(5.0 * c + 1.0) * csc_h * sec_h.powi(3) / 25.0;
    let e = (-2.0 * csc * csc + 2.0 * cot * csc + 5.0) / 5.0;
    let f = s6 * (-40.0 * c + 25.0 * cos2 + 31.0) * csc.powi(3) / 125.0;
    let g = (-22.0 * csc * csc + 10.0 * cot * csc + 25.0) / 25.0;
    let h = 4.0 / 5.0 * csc;
    let k = 2.0 / 5.0 * s6 * csc;
    vec![
        [
            Term(-1536.0 * csc.powi(6) * sin_h.powi(4) / 625.0, 6),
            Term(a, 5),
            Term(b, 4),
            Term(d, 3),
            Term(e, 2),
            Term(-384.0 * s2 * (c - 1.0) * csc.powi(5) / 625.0, 5),
            Term(96.0 * s2 * (c - 1.0) * csc.powi(4) / 125.0, 4),
            Term(-16.0 * s3 * (c - 1.0) * csc.powi(3) / 25.0, 3),
            Term(4.0 * s2 * (c - 1.0) * csc * csc / 5.0, 2),
            Term(s2 * tan_h, 1),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            PIVOT,
        ],
        [
            Term(a, 5),
            Term(-24.0 * (3.0 - 5.0 * c).powi(2) * csc.powi(4) / 625.0, 4),
            Term(f, 3),
            Term(g, 2),
            Term(h, 1),
            Term(96.0 * s2 * (5.0 * c - 3.0) * csc.powi(4) / 625.0, 4),
            Term(-24.0 * s2 * (5.0 * c - 3.0) * csc.powi(3) / 125.0, 3),
            Term(4.0 * s3 * (5.0 * c - 3.0) * csc * csc / 25.0, 2),
            Term(-s2 * (5.0 * c - 3.0) * csc / 5.0, 1),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
        ],
        [
            Term(b, 4),
            Term(f, 3),
            Term(-(1.0 - 5.0 * c).powi(2) * csc * csc / 25.0, 2),
            Term(k, 1),
            ZERO,
            Term(-16.0 * s3 * (5.0 * c - 1.0) * csc.powi(3) / 125.0, 3),
            Term(4.0 * s3 * (5.0 * c - 1.0) * csc * csc / 25.0, 2),
            Term(-s2 * (5.0 * c - 1.0) * csc / 5.0, 1),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
            ZERO,
        ],
        [
            Term(d, 3),
            Term(g, 2),
            Term(k, 1),
            ZERO,
            ZERO,
            Term(4.0 * s2 * (5.0 * c + 1.0) * csc * csc / 25.0, 2),
            Term(-s2 * (5.0 * c + 1.0) * csc / 5.0, 1),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
            ZERO,
            ZERO,
        ],
        [
            Term(e, 2),
            Term(h, 1),
            ZERO,
            ZERO,
            ZERO,
            Term(-s2 * (5.0 * c + 3.0) * csc / 5.0, 1),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
            PIVOT,
            ZERO,
            ZERO,
            ZERO,
            ZERO,
        ],
    ]
}

fn evaluate(terms: &[Term], phi: f64) -> ComplexVector {
    ComplexVector::from_iterator(terms.len(), terms.iter().map(|t| Complex64::from_polar(t.0, -f64::from(t.1) * phi)))
}

/// Closed-form degenerate basis at `(θ, φ)` for `L ∈ {1, 2}`.
///
/// Close to the poles the printed vectors, while still eigenvectors, become
/// numerically dependent and orthonormalization fails with
/// [`Error::LinearlyDependent`]; see [`closed_form_margin`].
pub fn analytic_degenerate_states(nuclear_spin: SpinQuantumNumber, theta: f64, phi: f64) -> Result<AnalyticFrame> {
    let raw = analytic_degenerate_vectors(nuclear_spin, theta, phi)?;
    let orthonormal = gram_schmidt(&raw)?;
    Ok(AnalyticFrame {
        nuclear_spin,
        theta,
        phi,
        raw,
        orthonormal,
    })
}

/// The closed-form vectors alone, without orthonormalization.
pub fn analytic_degenerate_vectors(nuclear_spin: SpinQuantumNumber, theta: f64, phi: f64) -> Result<Vec<ComplexVector>> {
    if theta.abs() < TOL.pole_exclusion || (theta - PI).abs() < TOL.pole_exclusion || !(0.0..=PI).contains(&theta) {
        return Err(Error::PoleSingularity { theta });
    }
    match nuclear_spin.two_j() {
        2 => Ok(spin_one_terms(theta).iter().map(|t| evaluate(t, phi)).collect()),
        4 => Ok(spin_two_terms(theta).iter().map(|t| evaluate(t, phi)).collect()),
        _ => Err(Error::InvalidParameter(format!(
            "closed-form degenerate basis exists only for L = 1 and L = 2, not L = {nuclear_spin}"
        ))),
    }
}

/// Polar distance below which the closed-form vectors are too close to
/// dependent for Gram–Schmidt: about 0.06 (south side) for `L = 1` and
/// 0.16 north / 0.35 south for `L = 2`, rounded up.
pub fn closed_form_margin(nuclear_spin: SpinQuantumNumber) -> f64 {
    match nuclear_spin.two_j() {
        2 => 0.1,
        _ => 0.4,
    }
}

/// Classical Gram–Schmidt in input order.
///
/// Fails at the first index where the Gram determinant of the normalized
/// inputs so far drops below the dependence threshold.
pub fn gram_schmidt(vectors: &[ComplexVector]) -> Result<Vec<ComplexVector>> {
    let mut out: Vec<ComplexVector> = Vec::with_capacity(vectors.len());
    let mut gram = 1.0;
    for (index, v) in vectors.iter().enumerate() {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::LinearlyDependent { index });
        }
        let mut w = v.clone();
        for q in &out {
            w -= q * q.dotc(v);
        }
        let r = w.norm();
        gram *= (r / norm).powi(2);
        if gram < TOL.gram_determinant {
            return Err(Error::LinearlyDependent { index });
        }
        out.push(w / Complex64::from(r));
    }
    Ok(out)
}

/// The `(2L+1)`-fold eigenvalue of `H(x*, y = 0)`.
pub fn degenerate_energy(nuclear_spin: SpinQuantumNumber) -> Result<f64> {
    Ok(degenerate_null_space(nuclear_spin, FRAC_PI_2, 0.0)?.0)
}

/// Energy and orthonormal frame of the degenerate eigenspace of `H(x*, y = 0)`
/// at `(θ, φ)`, found by eigensolve. Works for any `L`.
pub fn degenerate_null_space(nuclear_spin: SpinQuantumNumber, theta: f64, phi: f64) -> Result<(f64, ComplexMatrix)> {
    let p = ModelParams::new(nuclear_spin, crossing_point(nuclear_spin)).with_field(FieldDirection::new(theta, phi));
    let es = eigensystem(&HapperOperators::new(nuclear_spin).hamiltonian(&p))?;
    let size = nuclear_spin.dim();
    let cluster = es
        .clusters(TOL.degenerate_cluster)
        .into_iter()
        .find(|c| c.len() == size)
        .ok_or_else(|| Error::InvalidParameter(format!("no {size}-fold cluster at x* for L = {nuclear_spin}")))?;
    let idx: Vec<usize> = cluster.collect();
    let energy = idx.iter().map(|&i| es.eigenvalues[i]).sum::<f64>() / size as f64;
    Ok((energy, es.frame(&idx)))
}

/// Frame source over the degenerate subspace using the closed forms, with
/// eigensolver frames within `pole_margin` of either pole or wherever the
/// closed forms are too close to dependent.
pub struct DegenerateFrames {
    nuclear_spin: SpinQuantumNumber,
    pole_margin: f64,
}

impl DegenerateFrames {
    pub fn new(nuclear_spin: SpinQuantumNumber) -> Result<Self> {
        if !matches!(nuclear_spin.two_j(), 2 | 4) {
            return Err(Error::InvalidParameter(format!("no closed-form basis for L = {nuclear_spin}")));
        }
        Ok(Self {
            nuclear_spin,
            pole_margin: closed_form_margin(nuclear_spin),
        })
    }

    pub fn with_pole_margin(mut self, margin: f64) -> Self {
        self.pole_margin = margin.max(TOL.pole_exclusion);
        self
    }
}

impl FrameSource for DegenerateFrames {
    fn rank(&self) -> usize {
        self.nuclear_spin.dim()
    }

    fn frame(&self, field: FieldDirection) -> Result<ComplexMatrix> {
        if field.theta < self.pole_margin || field.theta > PI - self.pole_margin {
            return Ok(degenerate_null_space(self.nuclear_spin, field.theta, field.phi)?.1);
        }
        match analytic_degenerate_states(self.nuclear_spin, field.theta, field.phi) {
            Ok(frame) => Ok(frame.frame()),
            Err(Error::LinearlyDependent { .. }) => Ok(degenerate_null_space(self.nuclear_spin, field.theta, field.phi)?.1),
            Err(e) => Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::max_abs;

    fn c(re: f64) -> Complex64 {
        Complex64::from(re)
    }

    #[test]
    fn third_spin_one_vector_at_equator() {
        let frame = analytic_degenerate_states(SpinQuantumNumber::ONE, FRAC_PI_2, 0.0).unwrap();
        let s2 = SQRT_2;
        let expected = [1.0 / 3.0, 2.0 * s2 / 3.0, 0.0, -s2 / 3.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        for (z, e) in frame.raw[2].iter().zip(expected) {
            assert!((z - c(e)).norm() < 1e-14, "{z} vs {e}");
        }
    }

    #[test]
    fn closed_forms_orthonormalize_outside_the_margin() {
        for l in [SpinQuantumNumber::ONE, SpinQuantumNumber::integer(2)] {
            let m = closed_form_margin(l);
            for k in 0..=400 {
                let t = m + (PI - 2.0 * m) * k as f64 / 400.0;
                assert!(analytic_degenerate_states(l, t, 0.3).is_ok(), "L={l} θ={t}");
            }
        }
    }

    #[test]
    fn closed_forms_are_eigenvectors() {
        for (l, e_deg) in [(SpinQuantumNumber::ONE, -1.0 / 3.0), (SpinQuantumNumber::integer(2), -0.2)] {
            let ops = HapperOperators::new(l);
            for &(t, p) in &[(0.3, 0.1), (1.0, 0.7), (2.5, 4.0), (FRAC_PI_2, 2.0)] {
                let frame = analytic_degenerate_states(l, t, p).unwrap();
                let h = ops.hamiltonian(&ModelParams::new(l, crossing_point(l)).with_field(FieldDirection::new(t, p)));
                for v in &frame.raw {
                    let r = (&h * v - v * c(e_deg)).norm() / v.norm();
                    assert!(r < 1e-12, "L={l} θ={t}: residual {r}");
                }
            }
        }
    }

    #[test]
    fn spans_match_eigensolver() {
        for l in [SpinQuantumNumber::ONE, SpinQuantumNumber::integer(2)] {
            let frame = analytic_degenerate_states(l, 1.0, 0.7).unwrap();
            let (_, numeric) = degenerate_null_space(l, 1.0, 0.7).unwrap();
            assert!((frame.projector() - &numeric * numeric.adjoint()).norm() < 1e-10);
        }
    }

    #[test]
    fn degenerate_energies() {
        assert!((degenerate_energy(SpinQuantumNumber::ONE).unwrap() + 1.0 / 3.0).abs() < 1e-12);
        assert!((degenerate_energy(SpinQuantumNumber::integer(2)).unwrap() + 0.2).abs() < 1e-12);
        assert!((degenerate_energy(SpinQuantumNumber::integer(3)).unwrap() + 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn poles_and_unsupported_spins_are_refused() {
        assert!(matches!(analytic_degenerate_states(SpinQuantumNumber::ONE, 0.0, 0.0), Err(Error::PoleSingularity { .. })));
        assert!(matches!(analytic_degenerate_states(SpinQuantumNumber::ONE, PI - 1e-7, 0.0), Err(Error::PoleSingularity { .. })));
        assert!(matches!(
            analytic_degenerate_states(SpinQuantumNumber::integer(3), 1.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn gram_schmidt_small_cases() {
        let v = |a: f64, b: f64| ComplexVector::from_vec(vec![c(a), c(b)]);
        let out = gram_schmidt(&[v(1.0, 0.0), v(1.0, 1.0)]).unwrap();
        assert!((&out[0] - v(1.0, 0.0)).norm() < 1e-15);
        assert!((&out[1] - v(0.0, 1.0)).norm() < 1e-15);

        let basis = gram_schmidt(&[v(0.6, 0.8), v(-0.8, 0.6)]).unwrap();
        assert!((&basis[0] - v(0.6, 0.8)).norm() < 1e-14 && (&basis[1] - v(-0.8, 0.6)).norm() < 1e-14);

        let err = gram_schmidt(&[v(1.0, 0.0), v(1.0, 1e-7)]).unwrap_err();
        assert_eq!(err, Error::LinearlyDependent { index: 1 });
    }

    #[test]
    fn frame_source_falls_back_near_poles() {
        let src = DegenerateFrames::new(SpinQuantumNumber::ONE).unwrap();
        let near = src.frame(FieldDirection::new(0.01, 1.0)).unwrap();
        let (_, numeric) = degenerate_null_space(SpinQuantumNumber::ONE, 0.01, 1.0).unwrap();
        assert!(max_abs(&(&near * near.adjoint() - &numeric * numeric.adjoint())) < 1e-10);
        assert_eq!(src.rank(), 3);
    }
}
