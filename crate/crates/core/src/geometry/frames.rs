//! Orthonormal frames of a band subspace as functions of the field direction.

use std::f64::consts::PI;

use nalgebra::SVD;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{crossing_point, semimetal_hamiltonian, FieldDirection, HapperOperators, ModelParams};
use crate::spectrum::{eigensystem, EigenSystem};
use crate::spin::{ComplexMatrix, SpinQuantumNumber};
use crate::tolerance::TOL;

use super::mesh::{MeshScheme, SphereMesh};

/// Anything that can hand out a `dim × rank` orthonormal frame at each point
/// of the sphere.
pub trait FrameSource: Sync {
    fn rank(&self) -> usize;
    fn frame(&self, field: FieldDirection) -> Result<ComplexMatrix>;
}

/// A source that can produce frames of several band sets from one eigensolve.
pub trait MultiFrameSource: Sync {
    fn frames_for_sets(&self, field: FieldDirection, sets: &[Vec<usize>]) -> Result<Vec<ComplexMatrix>>;
}

type MatrixFn = Box<dyn Fn([f64; 3]) -> ComplexMatrix + Send + Sync>;

/// Eigenvector frames of selected sorted levels of a sphere-parametrized
/// Hamiltonian.
pub struct BandFrames {
    hamiltonian: MatrixFn,
    /// Conserved operator used to split degenerate clusters; levels with distinct
    /// eigenvalues of it do not count against isolation.
    symmetry: Option<MatrixFn>,
    bands: Vec<usize>,
}

impl BandFrames {
    pub fn new(hamiltonian: impl Fn([f64; 3]) -> ComplexMatrix + Send + Sync + 'static, bands: Vec<usize>) -> Self {
        Self {
            hamiltonian: Box::new(hamiltonian),
            symmetry: None,
            bands,
        }
    }

    pub fn with_symmetry(mut self, op: impl Fn([f64; 3]) -> ComplexMatrix + Send + Sync + 'static) -> Self {
        self.symmetry = Some(Box::new(op));
        self
    }

    /// Levels of `H(p)` with `n_B` swept over the sphere (`p.field` ignored).
    ///
    /// At `y = 0` a partial selection from the crossing cluster is refused within
    /// the crossing exclusion window of `x*`.
    pub fn happer(p: &ModelParams, bands: Vec<usize>) -> Result<Self> {
        p.validate()?;
        let ops = HapperOperators::new(p.nuclear_spin);
        check_band_range(&bands, ops.dim())?;
        if p.y == 0.0 && (p.x - crossing_point(p.nuclear_spin)).abs() < TOL.crossing_exclusion {
            let es = eigensystem(&ops.hamiltonian(&p.with_field(FieldDirection::NORTH)))?;
            for cluster in es.clusters(1e-5).into_iter().filter(|c| c.len() > 1) {
                let inside = cluster.clone().filter(|c| bands.contains(c)).count();
                if inside > 0 && inside < cluster.len() {
                    return Err(Error::InseparableLevels {
                        x: p.x,
                        labels: cluster.collect(),
                    });
                }
            }
        }
        let (x, y, axis) = (p.x, p.y, p.axis);
        let sym_ops = ops.clone();
        let frames = Self::new(move |n| ops.hamiltonian_with_field(n, x, y, axis), bands);
        Ok(if y == 0.0 { frames.with_symmetry(move |n| sym_ops.j_along(n)) } else { frames })
    }

    /// Levels of `n_B·S` for spin `spin`; band `i` has `m = −j + i`.
    pub fn zeeman(spin: SpinQuantumNumber, bands: Vec<usize>) -> Result<Self> {
        check_band_range(&bands, spin.dim())?;
        Ok(Self::new(move |n| semimetal_hamiltonian(n, spin), bands))
    }

    pub fn bands(&self) -> &[usize] {
        &self.bands
    }

    fn eigen(&self, n: [f64; 3]) -> Result<EigenSystem> {
        let mut es = eigensystem(&(self.hamiltonian)(n))?;
        if let Some(sym) = &self.symmetry {
            es.resolve_clusters(&sym(n), TOL.isolation_gap);
        }
        Ok(es)
    }
}

fn check_band_range(bands: &[usize], dim: usize) -> Result<()> {
    if bands.is_empty() || bands.iter().any(|&b| b >= dim) {
        return Err(Error::InvalidParameter(format!("band indices {bands:?} out of range for dimension {dim}")));
    }
    Ok(())
}

impl FrameSource for BandFrames {
    fn rank(&self) -> usize {
        self.bands.len()
    }

    fn frame(&self, field: FieldDirection) -> Result<ComplexMatrix> {
        Ok(self.frames_for_sets(field, std::slice::from_ref(&self.bands))?.remove(0))
    }
}

impl MultiFrameSource for BandFrames {
    /// `self.bands` is ignored.
    fn frames_for_sets(&self, field: FieldDirection, sets: &[Vec<usize>]) -> Result<Vec<ComplexMatrix>> {
        let n = field.unit_vector();
        let es = self.eigen(n)?;
        let sym = self.symmetry.as_ref().map(|s| s(n));
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            check_band_range(set, es.dim())?;
            for &b in set {
                for o in (0..es.dim()).filter(|o| !set.contains(o)) {
                    let d = (es.eigenvalues[b] - es.eigenvalues[o]).abs();
                    if d >= TOL.isolation_gap {
                        continue;
                    }
                    let distinct = sym.as_ref().is_some_and(|s| (es.expectation(s, b) - es.expectation(s, o)).abs() > 0.5);
                    if !distinct {
                        return Err(Error::SubspaceNotIsolated {
                            labels: set.clone(),
                            theta: field.theta,
                            phi: field.phi,
                            gap: d,
                        });
                    }
                }
            }
            out.push(es.frame(set));
        }
        Ok(out)
    }
}

/// Bands of `Π H′ Π`, with `H′ = k·S + S·L` on the sphere `|k| = radius` and
/// `Π` the projector onto the levels `cluster` of `H′`.
pub struct ProjectedBandFrames {
    ops: HapperOperators,
    radius: f64,
    cluster: Vec<usize>,
    bands: Vec<usize>,
}

impl ProjectedBandFrames {
    /// `bands` index the ascending levels of the projected block.
    pub fn new(nuclear_spin: SpinQuantumNumber, radius: f64, cluster: Vec<usize>, bands: Vec<usize>) -> Result<Self> {
        let ops = HapperOperators::new(nuclear_spin);
        check_band_range(&cluster, ops.dim())?;
        check_band_range(&bands, cluster.len())?;
        if !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!("momentum radius must be positive, got {radius}")));
        }
        Ok(Self {
            ops,
            radius,
            cluster,
            bands,
        })
    }
}

impl MultiFrameSource for ProjectedBandFrames {
    /// Sets index the ascending levels of the projected block; `self.bands` is ignored.
    fn frames_for_sets(&self, field: FieldDirection, sets: &[Vec<usize>]) -> Result<Vec<ComplexMatrix>> {
        let n = field.unit_vector();
        let k = n.map(|c| c * self.radius);
        let h = self.ops.hamiltonian_with_field(k, 1.0, 0.0, [0.0, 0.0, 1.0]);
        let mut es = eigensystem(&h)?;
        es.resolve_clusters(&self.ops.j_along(n), TOL.isolation_gap);
        let gap = es.isolation_gap(&self.cluster);
        if gap < TOL.isolation_gap {
            return Err(Error::SubspaceNotIsolated {
                labels: self.cluster.clone(),
                theta: field.theta,
                phi: field.phi,
                gap,
            });
        }
        let v = es.frame(&self.cluster);
        let block = eigensystem(&(v.adjoint() * &h * &v))?;
        sets.iter()
            .map(|bands| {
                check_band_range(bands, self.cluster.len())?;
                let inner_gap = block.isolation_gap(bands);
                if inner_gap < TOL.isolation_gap {
                    return Err(Error::SubspaceNotIsolated {
                        labels: bands.clone(),
                        theta: field.theta,
                        phi: field.phi,
                        gap: inner_gap,
                    });
                }
                Ok(&v * block.frame(bands))
            })
            .collect()
    }
}

impl FrameSource for ProjectedBandFrames {
    fn rank(&self) -> usize {
        self.bands.len()
    }

    fn frame(&self, field: FieldDirection) -> Result<ComplexMatrix> {
        Ok(self.frames_for_sets(field, std::slice::from_ref(&self.bands))?.pop().expect("one set requested"))
    }
}

/// Rotate `raw` within its span so that `raw† · reference` is Hermitian
/// positive (polar decomposition of the overlap).
pub fn align_frame(raw: &ComplexMatrix, reference: &ComplexMatrix, at: FieldDirection) -> Result<ComplexMatrix> {
    let overlap = raw.adjoint() * reference;
    let svd = SVD::new(overlap, true, true);
    let smallest = svd.singular_values.iter().copied().fold(f64::INFINITY, f64::min);
    if smallest < TOL.singular_overlap {
        return Err(Error::SingularOverlap {
            det: smallest,
            theta: at.theta,
            phi: at.phi,
        });
    }
    let (u, v_t) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    Ok(raw * (u * v_t))
}

/// Frames on the nodes of a uniform grid, smoothly gauged by parallel transport
/// along meridians from a common south-pole frame.
#[derive(Debug, Clone)]
pub struct FrameField {
    thetas: Vec<f64>,
    n_phi: usize,
    rank: usize,
    /// Row-major over (ring, φ index).
    frames: Vec<ComplexMatrix>,
}

impl FrameField {
    pub fn n_theta(&self) -> usize {
        self.thetas.len() - 1
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * (j % self.n_phi) as f64 / self.n_phi as f64
    }

    /// Frame at ring `i`, φ index `j` (periodic in `j`).
    pub fn at(&self, i: usize, j: usize) -> &ComplexMatrix {
        &self.frames[i * self.n_phi + j % self.n_phi]
    }

    /// Right-multiply every frame by `g(θ, φ)`; `g` must be unitary.
    pub fn gauge_transformed(&self, g: impl Fn(f64, f64) -> ComplexMatrix + Sync) -> FrameField {
        let frames = self
            .frames
            .par_iter()
            .enumerate()
            .map(|(idx, f)| f * g(self.thetas[idx / self.n_phi], self.phi(idx)))
            .collect();
        FrameField { frames, ..self.clone() }
    }

    /// Build directly from a frame function; no smoothing.
    pub fn from_fn(thetas: Vec<f64>, n_phi: usize, rank: usize, f: impl Fn(f64, f64) -> ComplexMatrix + Sync) -> FrameField {
        let frames = (0..thetas.len() * n_phi)
            .into_par_iter()
            .map(|idx| f(thetas[idx / n_phi], 2.0 * PI * (idx % n_phi) as f64 / n_phi as f64))
            .collect();
        FrameField {
            thetas,
            n_phi,
            rank,
            frames,
        }
    }
}

/// Smooth frames of `source` on a uniform mesh.
///
/// Every meridian starts from the same frame at `θ = π`, so the south-pole row
/// is identical across φ; each step north aligns the next eigenframe to its
/// predecessor. The resulting gauge is smooth everywhere except at `θ = 0`.
pub fn smooth_gauge_states(source: &dyn FrameSource, mesh: &SphereMesh) -> Result<FrameField> {
    let n_phi = mesh.band_counts()[0];
    if mesh.scheme() != MeshScheme::Uniform || mesh.band_counts().iter().any(|&n| n != n_phi) {
        return Err(Error::UnsupportedMesh("finite-difference frames need the same φ count on every band".into()));
    }
    let thetas = mesh.rings().to_vec();
    let n_rings = thetas.len();
    let seed = source.frame(FieldDirection::new(PI, 0.0))?;
    let columns: Vec<Vec<ComplexMatrix>> = (0..n_phi)
        .into_par_iter()
        .map(|j| {
            let phi = 2.0 * PI * j as f64 / n_phi as f64;
            let mut column = vec![seed.clone(); n_rings];
            for i in (0..n_rings - 1).rev() {
                let at = FieldDirection::new(thetas[i], phi);
                let raw = source.frame(at)?;
                column[i] = align_frame(&raw, &column[i + 1], at)?;
            }
            Ok(column)
        })
        .collect::<Result<_>>()?;
    let mut frames = Vec::with_capacity(n_rings * n_phi);
    for i in 0..n_rings {
        for column in &columns {
            frames.push(column[i].clone());
        }
    }
    Ok(FrameField {
        thetas,
        n_phi,
        rank: source.rank(),
        frames,
    })
}

/// `det(a† b)`, the overlap between two frames.
pub fn frame_overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    (a.adjoint() * b).determinant()
}
