//! Hermitian eigensolves, persistent level labels across `x` sweeps, and
//! crossing / anti-crossing detection.
//!
//! Level labels are 0-based throughout the library: label `n` here is level
//! `n + 1` in the usual 1-based numbering (ascending energy at large `x`).

use std::ops::Range;

use nalgebra::{DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{conserved_j, crossing_point, HapperOperators, ModelParams};
use crate::spin::{hermitian_residual, ComplexMatrix, SpinQuantumNumber};
use crate::tolerance::TOL;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `n` is the eigenvector of `eigenvalues[n]`.
    pub eigenvectors: ComplexMatrix,
    pub params: Option<ModelParams>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vector(&self, n: usize) -> DVector<Complex64> {
        self.eigenvectors.column(n).into_owned()
    }

    /// Columns `indices` as a `dim × indices.len()` frame.
    pub fn frame(&self, indices: &[usize]) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.dim(), indices.len(), |r, c| self.eigenvectors[(r, indices[c])])
    }

    pub fn projector(&self, indices: &[usize]) -> ComplexMatrix {
        let f = self.frame(indices);
        &f * f.adjoint()
    }

    pub fn expectation(&self, op: &ComplexMatrix, n: usize) -> f64 {
        let v = self.eigenvectors.column(n);
        v.dotc(&(op * v)).re
    }

    /// Runs of consecutive eigenvalues closer than `tol`.
    pub fn clusters(&self, tol: f64) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.dim() {
            if i == self.dim() || self.eigenvalues[i] - self.eigenvalues[i - 1] > tol {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// Smallest gap between a level in `indices` and any level outside it.
    pub fn isolation_gap(&self, indices: &[usize]) -> f64 {
        let mut gap = f64::INFINITY;
        for &i in indices {
            for j in (0..self.dim()).filter(|j| !indices.contains(j)) {
                gap = gap.min((self.eigenvalues[i] - self.eigenvalues[j]).abs());
            }
        }
        gap
    }

    /// Inside each degenerate cluster, rotate the eigenvectors so they also
    /// diagonalize `op` (ascending `op` eigenvalue within the cluster).
    pub fn resolve_clusters(&mut self, op: &ComplexMatrix, tol: f64) {
        for range in self.clusters(tol) {
            if range.len() < 2 {
                continue;
            }
            let idx: Vec<usize> = range.clone().collect();
            let v = self.frame(&idx);
            let restricted = v.adjoint() * op * &v;
            let inner = sorted_eigen(restricted);
            let rotated = &v * &inner.1;
            for (k, col) in range.clone().enumerate() {
                self.eigenvectors.set_column(col, &rotated.column(k));
            }
        }
        fix_phases(&mut self.eigenvectors);
    }
}

/// Full decomposition of a Hermitian matrix; eigenvalues ascending and each
/// eigenvector's largest component real positive (first index wins ties).
pub fn eigensystem(h: &ComplexMatrix) -> Result<EigenSystem> {
    let asym = hermitian_residual(h);
    if asym > TOL.hermitian_input {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let (eigenvalues, mut eigenvectors) = sorted_eigen(h.clone());
    fix_phases(&mut eigenvectors);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        params: None,
    })
}

/// Eigensystem of `H(p)`; at `y = 0` degenerate clusters are resolved by `J_{n_B}`.
pub fn eigensystem_for(p: &ModelParams) -> Result<EigenSystem> {
    p.validate()?;
    let ops = HapperOperators::new(p.nuclear_spin);
    let mut es = eigensystem(&ops.hamiltonian(p))?;
    if p.y == 0.0 {
        es.resolve_clusters(&ops.j_along(p.field.unit_vector()), TOL.degenerate_cluster);
    }
    es.params = Some(*p);
    Ok(es)
}

fn sorted_eigen(m: ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

pub(crate) fn fix_phases(vectors: &mut ComplexMatrix) {
    for mut col in vectors.column_iter_mut() {
        let mut best = 0;
        let mut best_abs = -1.0;
        for (i, z) in col.iter().enumerate() {
            let a = z.norm();
            if a > best_abs + 1e-12 {
                best = i;
                best_abs = a;
            }
        }
        if best_abs > 0.0 {
            let phase = col[best].conj() / best_abs;
            for z in col.iter_mut() {
                *z *= phase;
            }
        }
    }
}

/// Persistent labels along an `x` grid.
#[derive(Debug, Clone)]
pub struct LevelTrack {
    pub x_grid: Vec<f64>,
    /// `labels[k][i]` is the label of the `i`-th lowest level at `x_grid[k]`.
    pub labels: Vec<Vec<usize>>,
    /// `energies[k][n]` is the energy of label `n` at `x_grid[k]`.
    pub energies: Vec<Vec<f64>>,
    /// `⟨J_{n_B}⟩` per grid point and label.
    pub j_expectation: Vec<Vec<f64>>,
    /// Smallest overlap `|⟨v_n(x_k)|v_n(x_{k+1})⟩|` used when linking each label.
    pub min_overlap: Vec<f64>,
}

impl LevelTrack {
    /// Sorted position of `label` at grid index `k`.
    pub fn position(&self, k: usize, label: usize) -> usize {
        self.labels[k].iter().position(|&l| l == label).expect("label present at every grid point")
    }

    pub fn num_levels(&self) -> usize {
        self.labels.first().map_or(0, Vec::len)
    }
}

const MAX_REFINEMENT_DEPTH: usize = 12;

/// Labels levels by continuity from ascending order at `max(x_grid)`, moving
/// down in `x`.
///
/// At `y = 0` labels follow maximal eigenvector overlap (degenerate clusters are
/// first resolved by `J_{n_B}`, and near-tied overlaps are broken by `⟨J⟩`
/// continuity). At `y ≠ 0` labels follow strict energy order.
pub fn track_levels(p0: &ModelParams, x_grid: &[f64]) -> Result<LevelTrack> {
    p0.validate()?;
    if x_grid.is_empty() || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("x grid must be nonempty and strictly ascending".into()));
    }
    let ops = HapperOperators::new(p0.nuclear_spin);
    let j_op = ops.j_along(p0.field.unit_vector());
    let solve = |x: f64| -> Result<EigenSystem> {
        let p = p0.with_x(x);
        let mut es = eigensystem(&ops.hamiltonian(&p))?;
        if p.y == 0.0 {
            es.resolve_clusters(&j_op, TOL.degenerate_cluster);
        }
        Ok(es)
    };
    let systems: Vec<EigenSystem> = x_grid.par_iter().map(|&x| solve(x)).collect::<Result<_>>()?;
    let n = systems[0].dim();
    let last = x_grid.len() - 1;

    let mut labels = vec![Vec::new(); x_grid.len()];
    let mut min_overlap = vec![1.0; x_grid.len()];
    labels[last] = (0..n).collect();

    for k in (0..last).rev() {
        if p0.y != 0.0 {
            labels[k] = (0..n).collect();
            min_overlap[k] = link_overlaps(&systems[k], &systems[k + 1], &labels[k], &labels[k + 1]);
            continue;
        }
        let (lab, ov) = link_by_overlap(&systems[k + 1], &labels[k + 1], &systems[k], &j_op)
            .or_else(|_| link_refined(&solve, &systems[k + 1], &labels[k + 1], x_grid[k + 1], x_grid[k], &j_op, 0))?;
        labels[k] = lab;
        min_overlap[k] = ov;
    }

    let mut energies = vec![vec![0.0; n]; x_grid.len()];
    let mut j_expectation = vec![vec![0.0; n]; x_grid.len()];
    for k in 0..x_grid.len() {
        for (pos, &label) in labels[k].iter().enumerate() {
            energies[k][label] = systems[k].eigenvalues[pos];
            j_expectation[k][label] = systems[k].expectation(&j_op, pos);
        }
    }

    Ok(LevelTrack {
        x_grid: x_grid.to_vec(),
        labels,
        energies,
        j_expectation,
        min_overlap,
    })
}

fn link_overlaps(a: &EigenSystem, b: &EigenSystem, la: &[usize], lb: &[usize]) -> f64 {
    let mut worst: f64 = 1.0;
    for (ia, &label) in la.iter().enumerate() {
        let ib = lb.iter().position(|&l| l == label).unwrap();
        worst = worst.min(a.eigenvectors.column(ia).dotc(&b.eigenvectors.column(ib)).norm());
    }
    worst
}

/// Assign labels at `next` from labels at `prev` by greedy maximal overlap.
fn link_by_overlap(prev: &EigenSystem, prev_labels: &[usize], next: &EigenSystem, j_op: &ComplexMatrix) -> Result<(Vec<usize>, f64)> {
    let n = prev.dim();
    let overlap = next.eigenvectors.adjoint() * &prev.eigenvectors;
    let j_prev: Vec<f64> = (0..n).map(|i| prev.expectation(j_op, i)).collect();
    let j_next: Vec<f64> = (0..n).map(|i| next.expectation(j_op, i)).collect();

    let mut pairs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            pairs.push((i, j, overlap[(i, j)].norm()));
        }
    }
    // Overlaps equal to within 1e-6 are ordered by ⟨J⟩ continuity instead.
    let bucket = |o: f64| -(o * 1e6).round() as i64;
    pairs.sort_by(|a, b| {
        let da = (j_next[a.0] - j_prev[a.1]).abs();
        let db = (j_next[b.0] - j_prev[b.1]).abs();
        bucket(a.2).cmp(&bucket(b.2)).then(da.total_cmp(&db))
    });

    let mut labels = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut worst: f64 = 1.0;
    for (i, j, o) in pairs {
        if labels[i] == usize::MAX && !used[j] {
            labels[i] = prev_labels[j];
            used[j] = true;
            worst = worst.min(o);
        }
    }
    if worst < 0.5 {
        return Err(Error::TrackingFailed { x_lo: f64::NAN, x_hi: f64::NAN });
    }
    Ok((labels, worst))
}

fn link_refined<F>(
    solve: &F,
    prev: &EigenSystem,
    prev_labels: &[usize],
    x_prev: f64,
    x_next: f64,
    j_op: &ComplexMatrix,
    depth: usize,
) -> Result<(Vec<usize>, f64)>
where
    F: Fn(f64) -> Result<EigenSystem>,
{
    let fail = Error::TrackingFailed {
        x_lo: x_next.min(x_prev),
        x_hi: x_next.max(x_prev),
    };
    if depth >= MAX_REFINEMENT_DEPTH {
        return Err(fail);
    }
    let x_mid = 0.5 * (x_prev + x_next);
    let mid = solve(x_mid)?;
    let (mid_labels, o1) = match link_by_overlap(prev, prev_labels, &mid, j_op) {
        Ok(r) => r,
        Err(_) => link_refined(solve, prev, prev_labels, x_prev, x_mid, j_op, depth + 1)?,
    };
    let next = solve(x_next)?;
    let (labels, o2) = match link_by_overlap(&mid, &mid_labels, &next, j_op) {
        Ok(r) => r,
        Err(_) => link_refined(solve, &mid, &mid_labels, x_mid, x_next, j_op, depth + 1)?,
    };
    Ok((labels, o1.min(o2)))
}

/// Sorted positions at each `x` in `xs` of the levels that make up the
/// `(2L+1)`-fold crossing at `x*` (`y = 0`), followed by label tracking.
pub fn crossing_cluster_positions(nuclear_spin: SpinQuantumNumber, xs: &[f64]) -> Result<Vec<Vec<usize>>> {
    let x_star = crossing_point(nuclear_spin);
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("x values must be finite".into()));
    }
    let lo = xs.iter().copied().fold(x_star, f64::min);
    let hi = xs.iter().copied().fold(x_star, f64::max);
    let mut grid: Vec<f64> = (0..=400).map(|i| lo + (hi - lo) * i as f64 / 400.0).collect();
    grid.extend(xs);
    grid.push(x_star);
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let p = ModelParams::new(nuclear_spin, x_star);
    let track = track_levels(&p, &grid)?;
    let index_of = |x: f64| grid.iter().position(|&g| (g - x).abs() < 1e-12).expect("grid contains every requested x");
    let at_star = eigensystem_for(&p)?;
    let size = nuclear_spin.dim();
    let positions = at_star
        .clusters(TOL.degenerate_cluster)
        .into_iter()
        .find(|c| c.len() == size)
        .ok_or_else(|| Error::InvalidParameter(format!("no {size}-fold cluster at x* for L = {nuclear_spin}")))?;
    let k_star = index_of(x_star);
    let labels: Vec<usize> = positions.map(|pos| track.labels[k_star][pos]).collect();
    Ok(xs
        .iter()
        .map(|&x| {
            let k = index_of(x);
            let mut out: Vec<usize> = labels.iter().map(|&l| track.position(k, l)).collect();
            out.sort_unstable();
            out
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingKind {
    /// Exact level crossing (gap below tolerance).
    Crossing,
    /// Local minimum of a nonzero gap.
    AntiCrossing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Degeneracy {
    pub x: f64,
    /// 0-based sorted positions of the involved levels at `x`.
    pub levels: Vec<usize>,
    pub energy: f64,
    /// Largest gap between adjacent involved levels at `x`.
    pub gap: f64,
    pub kind: CrossingKind,
}

impl Degeneracy {
    pub fn multiplicity(&self) -> usize {
        self.levels.len()
    }
}

pub const DEFAULT_SCAN_POINTS: usize = 1000;

/// Crossings (`y = 0`) or anti-crossings (`y ≠ 0`) of `H(x)` for `x` in `x_range`
/// at the field direction of `p`.
pub fn find_degeneracies(p: &ModelParams, x_range: (f64, f64), gap_tol: f64) -> Result<Vec<Degeneracy>> {
    find_degeneracies_with(p, x_range, gap_tol, DEFAULT_SCAN_POINTS)
}

pub fn find_degeneracies_with(p: &ModelParams, x_range: (f64, f64), gap_tol: f64, points: usize) -> Result<Vec<Degeneracy>> {
    p.validate()?;
    let (lo, hi) = x_range;
    if !(hi > lo) || points < 3 {
        return Ok(Vec::new());
    }
    let grid: Vec<f64> = (0..points).map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64).collect();
    if p.y == 0.0 {
        exact_crossings(p, &grid, gap_tol)
    } else {
        anti_crossings(p, &grid, gap_tol)
    }
}

/// `H(x)` restricted to one `J_{n_B}` eigenspace: `Z + x·X`.
struct Sector {
    zeeman: ComplexMatrix,
    exchange: ComplexMatrix,
}

impl Sector {
    fn energies(&self, x: f64) -> Vec<f64> {
        let m = &self.zeeman + &self.exchange * Complex64::from(x);
        let mut e: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }
}

fn exact_crossings(p: &ModelParams, grid: &[f64], gap_tol: f64) -> Result<Vec<Degeneracy>> {
    let ops = HapperOperators::new(p.nuclear_spin);
    let j = eigensystem(&conserved_j(p))?;
    let zeeman = ops.s_along(p.field.unit_vector());
    let sectors: Vec<Sector> = j
        .clusters(1e-8)
        .into_iter()
        .map(|r| {
            let idx: Vec<usize> = r.collect();
            let v = j.frame(&idx);
            Sector {
                zeeman: v.adjoint() * &zeeman * &v,
                exchange: v.adjoint() * ops.s_dot_l() * &v,
            }
        })
        .collect();
    // Levels are (sector, rank); levels in one sector never cross.
    let level_ids: Vec<(usize, usize)> = sectors.iter().enumerate().flat_map(|(s, sec)| (0..sec.zeeman.nrows()).map(move |r| (s, r))).collect();
    let energy = |x: f64, id: (usize, usize)| sectors[id.0].energies(x)[id.1];

    let table: Vec<Vec<f64>> = grid
        .par_iter()
        .map(|&x| {
            let per: Vec<Vec<f64>> = sectors.iter().map(|s| s.energies(x)).collect();
            level_ids.iter().map(|&(s, r)| per[s][r]).collect()
        })
        .collect();

    let mut roots = Vec::new();
    for a in 0..level_ids.len() {
        for b in a + 1..level_ids.len() {
            if level_ids[a].0 == level_ids[b].0 {
                continue;
            }
            for k in 0..grid.len() - 1 {
                let d0 = table[k][a] - table[k][b];
                let d1 = table[k + 1][a] - table[k + 1][b];
                if d0 == 0.0 && k > 0 {
                    continue;
                }
                if d0 * d1 > 0.0 {
                    continue;
                }
                let f = |x: f64| energy(x, level_ids[a]) - energy(x, level_ids[b]);
                roots.push(bisect(f, grid[k], grid[k + 1], d0, TOL.crossing_root));
            }
        }
    }
    roots.sort_by(f64::total_cmp);

    let mut groups: Vec<Vec<f64>> = Vec::new();
    for r in roots {
        match groups.last_mut() {
            Some(g) if (r - g[g.len() - 1]).abs() < 1e-9 => g.push(r),
            _ => groups.push(vec![r]),
        }
    }

    let mut out = Vec::new();
    for g in groups {
        let x = g[g.len() / 2];
        let es = eigensystem(&ops.hamiltonian(&p.with_x(x)))?;
        // Largest cluster of eigenvalues within gap_tol at the root.
        let mut best: Option<Range<usize>> = None;
        for c in es.clusters(gap_tol) {
            if c.len() >= 2 && best.as_ref().is_none_or(|b| c.len() > b.len()) {
                best = Some(c);
            }
        }
        let Some(range) = best else { continue };
        let levels: Vec<usize> = range.clone().collect();
        let vals = &es.eigenvalues[range];
        let energy = vals.iter().sum::<f64>() / vals.len() as f64;
        let gap = vals.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        out.push(Degeneracy {
            x,
            levels,
            energy,
            gap,
            kind: CrossingKind::Crossing,
        });
    }
    Ok(out)
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, fa: f64, tol: f64) -> f64 {
    if fa == 0.0 {
        return a;
    }
    let mut sa = fa.signum();
    while b - a > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
            sa = fm.signum();
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn anti_crossings(p: &ModelParams, grid: &[f64], gap_tol: f64) -> Result<Vec<Degeneracy>> {
    let ops = HapperOperators::new(p.nuclear_spin);
    let spectrum = |x: f64| -> Vec<f64> {
        let (e, _) = sorted_eigen(ops.hamiltonian(&p.with_x(x)));
        e
    };
    let table: Vec<Vec<f64>> = grid.par_iter().map(|&x| spectrum(x)).collect();
    let n = table[0].len();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        let gaps: Vec<f64> = table.iter().map(|e| e[i + 1] - e[i]).collect();
        for k in 1..grid.len() - 1 {
            if gaps[k] < gaps[k - 1] && gaps[k] <= gaps[k + 1] {
                let g = |x: f64| {
                    let e = spectrum(x);
                    e[i + 1] - e[i]
                };
                let x = golden_min(g, grid[k - 1], grid[k + 1], 1e-11);
                let e = spectrum(x);
                let gap = e[i + 1] - e[i];
                out.push(Degeneracy {
                    x,
                    levels: vec![i, i + 1],
                    energy: 0.5 * (e[i] + e[i + 1]),
                    gap,
                    kind: if gap < gap_tol { CrossingKind::Crossing } else { CrossingKind::AntiCrossing },
                });
            }
        }
    }
    out.sort_by(|a, b| a.x.total_cmp(&b.x));
    Ok(out)
}

pub(crate) fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_hamiltonian, FieldDirection};
    use crate::spin::SpinQuantumNumber;

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_diagonal(&DVector::from_iterator(v.len(), v.iter().map(|&x| Complex64::from(x))))
    }

    #[test]
    fn diagonal_is_sorted() {
        let es = eigensystem(&diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(es.eigenvalues, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = diag(&[1.0, 2.0]);
        m[(0, 1)] = Complex64::new(0.0, 1.0);
        assert!(matches!(eigensystem(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn invariants_on_random_model() {
        let p = ModelParams::new(SpinQuantumNumber::integer(2), 0.63)
            .with_y(0.05)
            .with_field(FieldDirection::new(1.3, 0.2))
            .with_axis(crate::model::normalize3([1.0, -2.0, 0.5]));
        let h = build_hamiltonian(&p).unwrap();
        let es = eigensystem(&h).unwrap();
        let v = &es.eigenvectors;
        let gram = v.adjoint() * v;
        for r in 0..15 {
            let hv = &h * v.column(r) - v.column(r) * Complex64::from(es.eigenvalues[r]);
            assert!(hv.norm() < 1e-10);
            for c in 0..15 {
                let expected = if r == c { 1.0 } else { 0.0 };
                assert!((gram[(r, c)] - Complex64::from(expected)).norm() < 1e-10);
            }
            // phase convention
            let col = v.column(r);
            let (imax, _) = col.iter().enumerate().fold((0, -1.0), |acc, (i, z)| if z.norm() > acc.1 + 1e-12 { (i, z.norm()) } else { acc });
            assert!(col[imax].im.abs() < 1e-14 && col[imax].re > 0.0);
        }
        let sum: f64 = es.eigenvalues.iter().sum();
        assert!((sum - h.trace().re).abs() < 1e-10);
        assert!(sum.abs() < 1e-10);
    }

    #[test]
    fn l2_fivefold_at_two_fifths() {
        let es = eigensystem_for(&ModelParams::new(SpinQuantumNumber::integer(2), 0.4)).unwrap();
        let big = es.clusters(1e-9).into_iter().map(|r| r.len()).max().unwrap();
        assert_eq!(big, 5);
    }

    #[test]
    fn crossing_positions_for_small_l() {
        for two_l in 1..=4u32 {
            let l = SpinQuantumNumber::from_twice(two_l);
            let p = ModelParams::new(l, 0.0);
            let found = find_degeneracies(&p, (0.05, 1.5), TOL.crossing_gap).unwrap();
            let big = found.iter().find(|d| d.multiplicity() == l.dim()).expect("(2L+1)-fold crossing");
            assert!((big.x - 2.0 / f64::from(two_l + 1)).abs() < 1e-10, "L={l}: {}", big.x);
            assert_eq!(big.kind, CrossingKind::Crossing);
        }
    }

    #[test]
    fn l1_cluster_levels() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.0).with_field(FieldDirection::new(0.4, 1.0));
        let found = find_degeneracies(&p, (0.05, 1.5), TOL.crossing_gap).unwrap();
        let big = found.iter().find(|d| d.multiplicity() == 3).unwrap();
        assert_eq!(big.levels, vec![2, 3, 4]);
        assert!((big.energy + 1.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn anti_crossing_has_open_gap() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.0)
            .with_y(0.001)
            .with_field(FieldDirection::new(std::f64::consts::FRAC_PI_3, 0.4));
        let found = find_degeneracies(&p, (0.6, 0.73), TOL.crossing_gap).unwrap();
        let near: Vec<_> = found.iter().filter(|d| (d.x - 2.0 / 3.0).abs() < 0.01).collect();
        assert!(!near.is_empty());
        for d in near {
            assert_eq!(d.kind, CrossingKind::AntiCrossing);
            assert!(d.gap > 1e-5);
        }
    }

    #[test]
    fn empty_range_gives_nothing() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.0);
        assert!(find_degeneracies(&p, (1.0, 1.0), 1e-9).unwrap().is_empty());
    }

    #[test]
    fn track_l1_cluster_meets_at_two_thirds() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.0).with_field(FieldDirection::new(0.9, 0.3));
        let grid: Vec<f64> = (0..=300).map(|i| 0.3 + i as f64 * (2.5 - 0.3) / 300.0).collect();
        let track = track_levels(&p, &grid).unwrap();
        // labels ascending at the top of the grid
        assert_eq!(track.labels[300], (0..9).collect::<Vec<_>>());
        // ⟨J⟩ conserved along every label
        for n in 0..9 {
            let j0 = track.j_expectation[0][n];
            for k in 0..grid.len() {
                assert!((track.j_expectation[k][n] - j0).abs() < 1e-8);
            }
        }
        // labels 3,4,5 (0-based 2,3,4) reverse order across 2/3
        let below = grid.iter().position(|&x| x > 0.6).unwrap();
        let above = grid.iter().position(|&x| x > 0.75).unwrap();
        let e = |k: usize, n: usize| track.energies[k][n];
        assert!(e(above, 2) < e(above, 3) && e(above, 3) < e(above, 4));
        assert!(e(below, 2) > e(below, 3) && e(below, 3) > e(below, 4));
        assert!(track.min_overlap.iter().all(|&o| o > 0.9));
    }

    #[test]
    fn crossing_cluster_positions_follow_the_cluster() {
        let l = SpinQuantumNumber::ONE;
        let x_star = crossing_point(l);
        let got = crossing_cluster_positions(l, &[x_star - 1e-3, x_star, x_star + 1e-3, 1.0 / 3.0]).unwrap();
        let star = eigensystem_for(&ModelParams::new(l, x_star)).unwrap();
        let cluster: Vec<usize> = star.clusters(1e-8).into_iter().find(|c| c.len() == 3).unwrap().collect();
        assert_eq!(got[0], cluster);
        assert_eq!(got[1], cluster);
        assert_eq!(got[2], cluster);
        assert_eq!(got[3].len(), 3);
    }

    #[test]
    fn track_with_y_uses_energy_order() {
        let p = ModelParams::new(SpinQuantumNumber::ONE, 0.0).with_y(0.01).with_field(FieldDirection::new(0.9, 0.3));
        let grid: Vec<f64> = (0..50).map(|i| 0.4 + 0.02 * i as f64).collect();
        let track = track_levels(&p, &grid).unwrap();
        for labels in &track.labels {
            assert_eq!(*labels, (0..9).collect::<Vec<_>>());
        }
    }
}
