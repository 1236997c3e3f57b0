//! Unitary propagation under a rotating field or a ramped exchange, geometric
//! phases from adiabatic runs, and Landau–Zener scans through anti-crossings.

use std::f64::consts::TAU;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::degenerate_basis::ComplexVector;
use crate::error::{Error, Result};
use crate::geometry::wrap_phase;
use crate::model::{cross3, crossing_point, FieldDirection, HapperOperators, ModelParams};
use crate::spectrum::{eigensystem, EigenSystem};
use crate::spin::ComplexMatrix;
use crate::tolerance::TOL;

/// Parameter value over `t ∈ [0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ramp {
    Constant(f64),
    Linear { start: f64, end: f64 },
}

impl Ramp {
    pub fn at(&self, s: f64) -> f64 {
        match *self {
            Ramp::Constant(v) => v,
            Ramp::Linear { start, end } => start + (end - start) * s,
        }
    }
}

/// Field at `(θ₀, φ₀ + ωt)`; `x` and `y` follow ramps over the run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveProtocol {
    pub theta0: f64,
    pub phi0: f64,
    pub omega: f64,
    pub duration: f64,
    pub x: Ramp,
    pub y: Ramp,
}

impl DriveProtocol {
    /// `periods` full turns of the field about `ẑ` at fixed `x`, `y`.
    pub fn rotating(theta0: f64, omega: f64, periods: usize, x: f64, y: f64) -> Result<Self> {
        if !(omega > 0.0) || periods == 0 {
            return Err(Error::InvalidParameter("rotating drive needs ω > 0 and at least one period".into()));
        }
        Ok(Self {
            theta0,
            phi0: 0.0,
            omega,
            duration: periods as f64 * TAU / omega,
            x: Ramp::Constant(x),
            y: Ramp::Constant(y),
        })
    }

    /// Fixed field with `x` ramped linearly from `x_start` to `x_end` at `rate`.
    pub fn x_ramp(field: FieldDirection, x_start: f64, x_end: f64, rate: f64, y: f64) -> Result<Self> {
        if !(rate > 0.0) || x_start == x_end {
            return Err(Error::InvalidParameter("x ramp needs a positive rate and distinct endpoints".into()));
        }
        Ok(Self {
            theta0: field.theta,
            phi0: field.phi,
            omega: 0.0,
            duration: (x_end - x_start).abs() / rate,
            x: Ramp::Linear { start: x_start, end: x_end },
            y: Ramp::Constant(y),
        })
    }

    pub fn period(&self) -> Option<f64> {
        (self.omega != 0.0).then(|| TAU / self.omega.abs())
    }

    /// Number of field periods in the run (one for a static field).
    pub fn periods(&self) -> usize {
        self.period().map_or(1, |p| (self.duration / p).round().max(1.0) as usize)
    }

    pub fn field_at(&self, t: f64) -> FieldDirection {
        FieldDirection::new(self.theta0, self.phi0 + self.omega * t)
    }

    pub fn params_at(&self, p0: &ModelParams, t: f64) -> ModelParams {
        let s = if self.duration > 0.0 { t / self.duration } else { 0.0 };
        ModelParams {
            x: self.x.at(s),
            y: self.y.at(s),
            field: self.field_at(t),
            ..*p0
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ComplexVector>,
    pub s_avg: Vec<[f64; 3]>,
    pub l_avg: Vec<[f64; 3]>,
    pub j_avg: Vec<[f64; 3]>,
    /// Largest `|‖ψ‖ − 1|` seen.
    pub norm_drift: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &ComplexVector {
        self.states.last().expect("trajectory has at least the initial state")
    }
}

fn expectations(ops: &[ComplexMatrix; 3], psi: &ComplexVector) -> [f64; 3] {
    std::array::from_fn(|k| psi.dotc(&(&ops[k] * psi)).re)
}

/// `exp(−i H dt)` from the eigendecomposition of `H`.
pub fn unitary_step(h: &ComplexMatrix, dt: f64) -> Result<ComplexMatrix> {
    let es = eigensystem(h)?;
    let phases = DVector::from_iterator(es.dim(), es.eigenvalues.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)));
    let v = &es.eigenvectors;
    Ok(v * ComplexMatrix::from_diagonal(&phases) * v.adjoint())
}

/// Propagate `initial` under `H(t)` built from `p0` and `protocol`, stepping
/// with the exact exponential of the midpoint Hamiltonian.
pub fn propagate(p0: &ModelParams, protocol: &DriveProtocol, initial: &ComplexVector, steps_per_period: usize) -> Result<Trajectory> {
    p0.validate()?;
    if steps_per_period < 100 {
        return Err(Error::InvalidParameter(format!("need at least 100 steps per period, got {steps_per_period}")));
    }
    let ops = HapperOperators::new(p0.nuclear_spin);
    if initial.len() != ops.dim() {
        return Err(Error::DimensionMismatch {
            left: (initial.len(), 1),
            right: (ops.dim(), 1),
        });
    }
    if (initial.norm() - 1.0).abs() > TOL.norm_drift {
        return Err(Error::InvalidParameter(format!("initial state has norm {}", initial.norm())));
    }
    let steps = steps_per_period * protocol.periods();
    let dt = protocol.duration / steps as f64;

    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        s_avg: Vec::with_capacity(steps + 1),
        l_avg: Vec::with_capacity(steps + 1),
        j_avg: Vec::with_capacity(steps + 1),
        norm_drift: 0.0,
    };
    let record = |t: f64, psi: &ComplexVector, traj: &mut Trajectory| {
        let s = expectations(ops.s(), psi);
        let l = expectations(ops.l(), psi);
        traj.times.push(t);
        traj.states.push(psi.clone());
        traj.s_avg.push(s);
        traj.l_avg.push(l);
        traj.j_avg.push([s[0] + l[0], s[1] + l[1], s[2] + l[2]]);
    };

    let rotating = RotatingFrame::for_protocol(&ops, p0, protocol);
    let u0 = match &rotating {
        Some(_) => Some(unitary_step(&ops.hamiltonian(&protocol.params_at(p0, 0.0)), dt)?),
        None => None,
    };
    let mut psi = initial.clone();
    record(0.0, &psi, &mut traj);
    for step in 0..steps {
        let t_mid = (step as f64 + 0.5) * dt;
        psi = match (&rotating, &u0) {
            (Some(r), Some(u0)) => {
                let alpha = protocol.omega * t_mid;
                r.rotate(alpha, &(u0 * r.rotate(-alpha, &psi)))
            }
            _ => unitary_step(&ops.hamiltonian(&protocol.params_at(p0, t_mid)), dt)? * psi,
        };
        let drift = (psi.norm() - 1.0).abs();
        traj.norm_drift = traj.norm_drift.max(drift);
        if drift > TOL.norm_drift {
            return Err(Error::NormDrift { step: step + 1, drift });
        }
        record((step + 1) as f64 * dt, &psi, &mut traj);
    }
    Ok(traj)
}

/// `exp(−iα J_z)`, which is diagonal in the product basis.
///
/// When `x` and `y` are constant and the spin-axis term is symmetric about
/// `ẑ`, `H(t) = R(ωt) H(0) R(ωt)†`, so every midpoint exponential is a
/// conjugate of one fixed step and the eigensystem at time `t` is the rotated
/// one at `t = 0`.
struct RotatingFrame {
    m: Vec<f64>,
}

impl RotatingFrame {
    fn for_protocol(ops: &HapperOperators, p0: &ModelParams, protocol: &DriveProtocol) -> Option<Self> {
        let constant = matches!(protocol.x, Ramp::Constant(_)) && matches!(protocol.y, Ramp::Constant(_));
        let y = protocol.y.at(0.0);
        let axial = y == 0.0 || (p0.axis[0] == 0.0 && p0.axis[1] == 0.0);
        (constant && axial).then(|| Self {
            m: ops.j_along([0.0, 0.0, 1.0]).diagonal().iter().map(|z| z.re).collect(),
        })
    }

    fn rotate(&self, alpha: f64, psi: &ComplexVector) -> ComplexVector {
        ComplexVector::from_iterator(psi.len(), psi.iter().zip(&self.m).map(|(z, &m)| z * Complex64::from_polar(1.0, -alpha * m)))
    }
}

/// Steps per period that keep `dt · (E_max − E_min) ≤ 0.5` at the start of
/// the run (and never fewer than 100). Coarser steps can alias the level
/// splittings against the drive and fake non-adiabatic transfer.
pub fn suggested_steps_per_period(p0: &ModelParams, protocol: &DriveProtocol) -> Result<usize> {
    let es = instantaneous(p0, protocol, 0.0)?;
    let width = es.eigenvalues[es.dim() - 1] - es.eigenvalues[0];
    let span = protocol.duration / protocol.periods() as f64;
    Ok(((span * width / 0.5).ceil() as usize).max(100))
}

/// Eigenstate `level` (ascending, 0-based) of `H` at the start of `protocol`.
/// At `y = 0` degenerate clusters are resolved by `J_{n_B}`.
pub fn instantaneous_eigenstate(p0: &ModelParams, protocol: &DriveProtocol, level: usize) -> Result<ComplexVector> {
    let es = instantaneous(p0, protocol, 0.0)?;
    if level >= es.dim() {
        return Err(Error::InvalidParameter(format!("level {level} out of range for dimension {}", es.dim())));
    }
    Ok(es.vector(level))
}

fn instantaneous(p0: &ModelParams, protocol: &DriveProtocol, t: f64) -> Result<EigenSystem> {
    let p = protocol.params_at(p0, t);
    let ops = HapperOperators::new(p.nuclear_spin);
    let mut es = eigensystem(&ops.hamiltonian(&p))?;
    if p.y == 0.0 {
        es.resolve_clusters(&ops.j_along(p.field.unit_vector()), TOL.isolation_gap);
    }
    Ok(es)
}

/// `arg⟨ψ(0)|ψ(T)⟩ + ∫E_level dt`, wrapped to (−π, π].
///
/// The trajectory must start in eigenstate `level` and stay there; any
/// recorded step with fidelity below the adiabatic threshold is reported as
/// leakage.
pub fn extract_geometric_phase(traj: &Trajectory, p0: &ModelParams, protocol: &DriveProtocol, level: usize) -> Result<f64> {
    if traj.len() < 2 {
        return Err(Error::InvalidParameter("trajectory too short".into()));
    }
    let ops = HapperOperators::new(p0.nuclear_spin);
    let rotating = RotatingFrame::for_protocol(&ops, p0, protocol);
    let start = instantaneous(p0, protocol, 0.0)?;
    let energies: Vec<f64> = traj
        .times
        .par_iter()
        .zip(&traj.states)
        .map(|(&t, psi)| {
            let (v, e) = match &rotating {
                Some(r) => (r.rotate(protocol.omega * t, &start.vector(level)), start.eigenvalues[level]),
                None => {
                    let es = instantaneous(p0, protocol, t)?;
                    (es.vector(level), es.eigenvalues[level])
                }
            };
            let fidelity = v.dotc(psi).norm_sqr();
            if fidelity < TOL.adiabatic_fidelity {
                return Err(Error::Leakage { time: t, fidelity });
            }
            Ok(e)
        })
        .collect::<Result<_>>()?;
    let integral: f64 = traj.times.windows(2).zip(energies.windows(2)).map(|(t, e)| 0.5 * (e[0] + e[1]) * (t[1] - t[0])).sum();
    let overlap = traj.states[0].dotc(traj.final_state());
    Ok(wrap_phase(overlap.arg() + integral))
}

/// Smallest gap between level `level` and its neighbours along the field loop
/// or ramp of `protocol`, sampled at `samples` points.
pub fn minimum_gap(p0: &ModelParams, protocol: &DriveProtocol, level: usize, samples: usize) -> Result<f64> {
    let ops = HapperOperators::new(p0.nuclear_spin);
    let samples = samples.max(2);
    (0..samples)
        .into_par_iter()
        .map(|k| {
            let t = protocol.duration * k as f64 / (samples - 1) as f64;
            let es = eigensystem(&ops.hamiltonian(&protocol.params_at(p0, t)))?;
            Ok(neighbour_gap(&es.eigenvalues, level))
        })
        .try_reduce(|| f64::INFINITY, |a, b| Ok(a.min(b)))
}

fn neighbour_gap(e: &[f64], level: usize) -> f64 {
    let below = level.checked_sub(1).map_or(f64::INFINITY, |b| e[level] - e[b]);
    let above = e.get(level + 1).map_or(f64::INFINITY, |a| a - e[level]);
    below.min(above)
}

/// Signed solid angle swept by the closed curve `points` as seen from the
/// origin, measured about the mean direction of the curve.
pub fn solid_angle(points: &[[f64; 3]]) -> f64 {
    let unit = |v: [f64; 3]| {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    };
    let dot = |a: [f64; 3], b: [f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let mean = points.iter().fold([0.0; 3], |acc, p| {
        let u = unit(*p);
        [acc[0] + u[0], acc[1] + u[1], acc[2] + u[2]]
    });
    let a = unit(mean);
    let n = points.len();
    let mut total = 0.0;
    for k in 0..n {
        let b = unit(points[k]);
        let c = unit(points[(k + 1) % n]);
        let triple = dot(a, cross3(b, c));
        total += 2.0 * triple.atan2(1.0 + dot(a, b) + dot(b, c) + dot(c, a));
    }
    total
}

/// Angle between `v` and `n` in radians.
pub fn angle_between(v: [f64; 3], n: [f64; 3]) -> f64 {
    let dot = v[0] * n[0] + v[1] * n[1] + v[2] * n[2];
    let nv = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    let nn = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
    (dot / (nv * nn)).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LzRamp {
    pub x_start: f64,
    pub x_end: f64,
}

#[derive(Debug, Clone)]
pub struct LzScan {
    pub rates: Vec<f64>,
    /// `1 − |⟨ψ_level(x_end)|ψ⟩|²` per rate.
    pub probabilities: Vec<f64>,
    /// Final population on every ascending level, per rate.
    pub populations: Vec<Vec<f64>>,
    /// Location and size of the smallest gap to `level` along the ramp.
    pub x_gap: f64,
    pub min_gap: f64,
}

impl LzScan {
    /// Transition probability never decreases as the rate grows.
    pub fn is_monotone(&self) -> bool {
        let mut pairs: Vec<(f64, f64)> = self.rates.iter().copied().zip(self.probabilities.iter().copied()).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        pairs.windows(2).all(|w| w[1].1 >= w[0].1)
    }
}

/// Largest `x` change per propagation step in Landau–Zener runs.
pub const LZ_MAX_DX: f64 = 5e-6;
/// Largest time step in Landau–Zener runs.
pub const LZ_MAX_DT: f64 = 50.0;

/// Ramp `x` through the anti-crossing near `x*` at each rate, starting in the
/// instantaneous eigenstate `level` (ascending, 0-based) at `x_start`.
pub fn landau_zener_scan(p_base: &ModelParams, ramp: LzRamp, rates: &[f64], level: usize) -> Result<LzScan> {
    p_base.validate()?;
    if p_base.y == 0.0 {
        return Err(Error::InvalidParameter("Landau–Zener scans need y ≠ 0 so the crossing is avoided".into()));
    }
    let ops = HapperOperators::new(p_base.nuclear_spin);
    if level >= ops.dim() {
        return Err(Error::InvalidParameter(format!("level {level} out of range")));
    }
    let (lo, hi) = (ramp.x_start.min(ramp.x_end), ramp.x_start.max(ramp.x_end));
    let x_star = crossing_point(p_base.nuclear_spin);
    let gap_at = |x: f64| -> f64 {
        let es = eigensystem(&ops.hamiltonian(&p_base.with_x(x))).expect("model Hamiltonian is Hermitian");
        neighbour_gap(&es.eigenvalues, level)
    };
    let (x_gap, min_gap) = locate_min_gap(&gap_at, lo, hi);
    let at_edge = (x_gap - lo).abs() < 1e-9 * (1.0 + lo.abs()) || (hi - x_gap).abs() < 1e-9 * (1.0 + hi.abs());
    if !(lo < x_star && x_star < hi) || at_edge {
        return Err(Error::RampMissesCrossing {
            x_start: ramp.x_start,
            x_end: ramp.x_end,
            x_gap: if at_edge { x_gap } else { x_star },
        });
    }

    let runs: Vec<(f64, Vec<f64>)> = rates
        .par_iter()
        .map(|&rate| {
            let protocol = DriveProtocol::x_ramp(p_base.field, ramp.x_start, ramp.x_end, rate, p_base.y)?;
            let steps = ((hi - lo) / LZ_MAX_DX).ceil().max((protocol.duration / LZ_MAX_DT).ceil()).max(100.0) as usize;
            let psi0 = instantaneous_eigenstate(p_base, &protocol, level)?;
            let psi = evolve_final(&ops, p_base, &protocol, psi0, steps)?;
            let end = instantaneous(p_base, &protocol, protocol.duration)?;
            let populations: Vec<f64> = (0..end.dim()).map(|n| end.vector(n).dotc(&psi).norm_sqr()).collect();
            Ok((1.0 - populations[level], populations))
        })
        .collect::<Result<_>>()?;
    let (probabilities, populations) = runs.into_iter().unzip();
    Ok(LzScan {
        rates: rates.to_vec(),
        probabilities,
        populations,
        x_gap,
        min_gap,
    })
}

/// Like [`propagate`] but keeps only the final state.
fn evolve_final(ops: &HapperOperators, p0: &ModelParams, protocol: &DriveProtocol, mut psi: ComplexVector, steps: usize) -> Result<ComplexVector> {
    let dt = protocol.duration / steps as f64;
    for step in 0..steps {
        let h = ops.hamiltonian(&protocol.params_at(p0, (step as f64 + 0.5) * dt));
        psi = unitary_step(&h, dt)? * psi;
        let drift = (psi.norm() - 1.0).abs();
        if drift > TOL.norm_drift {
            return Err(Error::NormDrift { step: step + 1, drift });
        }
    }
    Ok(psi)
}

/// Grid scan followed by golden-section refinement of the smallest value.
fn locate_min_gap(f: &(dyn Fn(f64) -> f64 + Sync), lo: f64, hi: f64) -> (f64, f64) {
    const N: usize = 2001;
    let values: Vec<f64> = (0..N).into_par_iter().map(|k| f(lo + (hi - lo) * k as f64 / (N - 1) as f64)).collect();
    let k = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k).unwrap_or(0);
    let h = (hi - lo) / (N - 1) as f64;
    let (mut a, mut b) = ((lo + h * k.saturating_sub(1) as f64).max(lo), (lo + h * (k + 1) as f64).min(hi));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut c, mut d) = (b - g * (b - a), a + g * (b - a));
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-12 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    if values[k] < fx {
        (lo + h * k as f64, values[k])
    } else {
        (x, fx)
    }
}

/// `⟨ψ|H|ψ⟩`.
pub fn energy_expectation(h: &ComplexMatrix, psi: &ComplexVector) -> f64 {
    psi.dotc(&(h * psi)).re
}

/// `⟨ψ|n·S|ψ⟩` etc. for an arbitrary vector operator triple.
pub fn vector_expectation(ops: &[ComplexMatrix; 3], psi: &ComplexVector) -> [f64; 3] {
    expectations(ops, psi)
}
