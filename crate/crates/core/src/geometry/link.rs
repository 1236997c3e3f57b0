//! Gauge-invariant plaquette fluxes from overlap determinants.
//!
//! The flux through a cell is `−arg Π det(F_a† F_b)` around its polygon. Each
//! edge appears once in each orientation across the mesh, so the fluxes sum to
//! an exact multiple of 2π whatever gauge the frames come in.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::FieldDirection;
use crate::spin::ComplexMatrix;
use crate::tolerance::TOL;

use super::frames::{FrameSource, MultiFrameSource};
use super::mesh::SphereMesh;
use super::ChernNumber;

#[derive(Debug, Clone)]
pub struct LinkChern {
    pub chern: ChernNumber,
    /// Flux per mesh cell, in mesh cell order.
    pub cell_flux: Vec<f64>,
}

impl LinkChern {
    pub fn total_flux(&self) -> f64 {
        self.cell_flux.iter().sum()
    }
}

/// Wrap into (−π, π].
pub fn wrap_phase(a: f64) -> f64 {
    let r = (a + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Fluxes of the cells in bands `0..bands` (all cells when `bands` is the band count).
pub fn link_fluxes(source: &dyn FrameSource, mesh: &SphereMesh, bands: usize) -> Result<Vec<f64>> {
    let frames = |f: FieldDirection| source.frame(f).map(|m| vec![m]);
    Ok(link_fluxes_multi(&frames, 1, mesh, bands)?.pop().expect("one subspace requested"))
}

/// Like [`link_fluxes`] for `count` subspaces whose frames come out of one
/// call per mesh vertex.
pub fn link_fluxes_multi(
    frames: &(dyn Fn(FieldDirection) -> Result<Vec<ComplexMatrix>> + Sync),
    count: usize,
    mesh: &SphereMesh,
    bands: usize,
) -> Result<Vec<Vec<f64>>> {
    let ring_frames = |ring: usize| -> Result<Vec<Vec<ComplexMatrix>>> {
        mesh.ring_vertices(ring)
            .into_par_iter()
            .map(|v| {
                let (t, p) = mesh.vertex(v);
                frames(FieldDirection::new(t, p))
            })
            .collect()
    };
    let cells = mesh.cells();
    let mut out = vec![Vec::new(); count];
    let mut upper = ring_frames(0)?;
    let mut start = 0;
    for band in 0..bands.min(mesh.n_theta()) {
        let lower = ring_frames(band + 1)?;
        let end = start + mesh.band_counts()[band];
        let (off_up, off_low) = (mesh.ring_vertices(band).start, mesh.ring_vertices(band + 1).start);
        let frame_of = |v: usize, s: usize| if v >= off_low { &lower[v - off_low][s] } else { &upper[v - off_up][s] };
        let flux: Vec<Vec<f64>> = cells[start..end]
            .par_iter()
            .map(|cell| {
                let n = cell.polygon.len();
                (0..count)
                    .map(|s| {
                        let mut phase = 0.0;
                        for k in 0..n {
                            let (a, b) = (cell.polygon[k], cell.polygon[(k + 1) % n]);
                            let det: Complex64 = (frame_of(a, s).adjoint() * frame_of(b, s)).determinant();
                            if det.norm() < TOL.singular_overlap {
                                let (theta, phi) = mesh.vertex(a);
                                return Err(Error::SingularOverlap {
                                    det: det.norm(),
                                    theta,
                                    phi,
                                });
                            }
                            phase += det.arg();
                        }
                        Ok(-wrap_phase(phase))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        for cell in flux {
            for (s, f) in cell.into_iter().enumerate() {
                out[s].push(f);
            }
        }
        upper = lower;
        start = end;
    }
    Ok(out)
}

/// Chern number of the subspace handed out by `source`, exact up to rounding.
pub fn chern_number_link_variable(source: &dyn FrameSource, mesh: &SphereMesh) -> Result<LinkChern> {
    let cell_flux = link_fluxes(source, mesh, mesh.n_theta())?;
    Ok(LinkChern {
        chern: ChernNumber::from_flux(cell_flux.iter().sum()),
        cell_flux,
    })
}

/// Chern numbers of several level sets of `source`, sharing one eigensolve
/// per mesh vertex.
pub fn chern_numbers_link_variable(source: &dyn MultiFrameSource, sets: &[Vec<usize>], mesh: &SphereMesh) -> Result<Vec<LinkChern>> {
    let frames = |f: FieldDirection| source.frames_for_sets(f, sets);
    let fluxes = link_fluxes_multi(&frames, sets.len(), mesh, mesh.n_theta())?;
    Ok(fluxes
        .into_iter()
        .map(|cell_flux| LinkChern {
            chern: ChernNumber::from_flux(cell_flux.iter().sum()),
            cell_flux,
        })
        .collect())
}
