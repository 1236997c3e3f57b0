//! Geometric phases of closed paths on the field sphere.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::model::FieldDirection;
use crate::spin::ComplexMatrix;
use crate::tolerance::TOL;

use super::frames::FrameSource;
use super::link::{link_fluxes, wrap_phase};
use super::mesh::{MeshScheme, SphereMesh};

/// Step used to densify paths for the Wilson-loop product.
const PATH_STEP: f64 = 2e-3;

/// Traced geometric phase picked up around `path`, a closed list of (θ, φ).
///
/// A latitude circle is evaluated as the flux through the cap it bounds (the
/// northern cap for increasing φ), on a mesh of about `n_theta` bands with a
/// ring exactly on the loop; the result is the Wilson-loop phase moved to the
/// 2π branch nearest that flux. Any other closed path gives the Wilson-loop
/// phase in (−π, π].
pub fn loop_phase(source: &dyn FrameSource, path: &[(f64, f64)], n_theta: usize) -> Result<f64> {
    let (first, last) = match (path.first(), path.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::OpenLoop),
    };
    let same_point = |a: (f64, f64), b: (f64, f64)| {
        let dphi = wrap_phase(a.1 - b.1);
        (a.0 - b.0).abs() < 1e-12 && (dphi.abs() < 1e-12 || a.0.sin().abs() < 1e-12)
    };
    if !same_point(first, last) {
        return Err(Error::OpenLoop);
    }
    if path.iter().all(|&p| same_point(p, first)) {
        return Ok(0.0);
    }
    let wilson = wilson_phase(source, path)?;
    match latitude_orientation(path) {
        Some(orientation) => {
            let flux = cap_flux(source, first.0, n_theta)? * orientation;
            Ok(wilson + TAU * ((flux - wilson) / TAU).round())
        }
        None => Ok(wilson),
    }
}

/// `±1` when `path` winds once around a fixed-θ circle, monotone in φ.
fn latitude_orientation(path: &[(f64, f64)]) -> Option<f64> {
    let theta = path[0].0;
    if path.iter().any(|p| (p.0 - theta).abs() > 1e-12) || theta <= 0.0 || theta >= PI {
        return None;
    }
    let steps: Vec<f64> = path.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let sign = if steps.iter().all(|&d| d >= 0.0) {
        1.0
    } else if steps.iter().all(|&d| d <= 0.0) {
        -1.0
    } else {
        return None;
    };
    let winding = steps.iter().sum::<f64>() / TAU;
    ((winding.abs() - 1.0).abs() < 1e-9).then_some(sign)
}

/// Flux through the northern cap `θ < theta0`.
pub fn cap_flux(source: &dyn FrameSource, theta0: f64, n_theta: usize) -> Result<f64> {
    let mesh = SphereMesh::with_ring_at(theta0, n_theta, 2 * n_theta, MeshScheme::EqualArea)?;
    let ring = mesh.rings().iter().position(|&t| t == theta0).expect("mesh has a ring at theta0");
    Ok(link_fluxes(source, &mesh, ring)?.iter().sum())
}

/// `−arg det Π_k F_k† F_{k+1}` along the densified path.
pub fn wilson_phase(source: &dyn FrameSource, path: &[(f64, f64)]) -> Result<f64> {
    let mut points = Vec::new();
    for w in path.windows(2) {
        let (a, b) = (w[0], w[1]);
        let n = (((b.0 - a.0).hypot((b.1 - a.1) * a.0.sin().max(b.0.sin()))) / PATH_STEP).ceil().max(1.0) as usize;
        for k in 0..n {
            let s = k as f64 / n as f64;
            points.push((a.0 + s * (b.0 - a.0), a.1 + s * (b.1 - a.1)));
        }
    }
    let frames: Vec<ComplexMatrix> = points.iter().map(|&(t, p)| source.frame(FieldDirection::new(t, p))).collect::<Result<_>>()?;
    let mut phase = 0.0;
    for k in 0..frames.len() {
        let det = (frames[k].adjoint() * &frames[(k + 1) % frames.len()]).determinant();
        if det.norm() < TOL.singular_overlap {
            let (theta, phi) = points[k];
            return Err(Error::SingularOverlap {
                det: det.norm(),
                theta,
                phi,
            });
        }
        phase += det.arg();
    }
    Ok(-wrap_phase(phase))
}

/// Solid angle `2π(1 − cos θ₀)` of the cap bounded by the latitude `θ₀`.
pub fn cap_solid_angle(theta0: f64) -> f64 {
    TAU * (1.0 - theta0.cos())
}

/// Latitude circle at `theta0` sampled with `n` segments, φ increasing.
pub fn latitude_loop(theta0: f64, n: usize) -> Vec<(f64, f64)> {
    (0..=n).map(|k| (theta0, TAU * k as f64 / n as f64)).collect()
}
