//! The five scan commands. Each returns a [`Table`] whose checks decide the
//! exit status.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, Result};
use happer_core::dynamics::{
    angle_between, extract_geometric_phase, instantaneous_eigenstate, minimum_gap, propagate, solid_angle, suggested_steps_per_period, DriveProtocol,
    Trajectory,
};
use happer_core::error::Error;
use happer_core::geometry::{
    cap_solid_angle, chern_number, chern_numbers_link_variable, connection_discrete, curvature_discrete, latitude_loop, loop_phase, smooth_gauge_states,
    wrap_phase, BandFrames, ChernNumber, Convention, ProjectedBandFrames, SphereMesh,
};
use happer_core::model::{conserved_j, crossing_point, FieldDirection, ModelParams};
use happer_core::spectrum::{crossing_cluster_positions, eigensystem, eigensystem_for, find_degeneracies, track_levels, CrossingKind};
use happer_core::spin::SpinQuantumNumber;
use serde_json::Value;

use crate::config::{Command, Method, ScanConfig};
use crate::output::{level_list, num, opt_num, text, Table};

/// Largest allowed distance of a Chern number from its quantized value
/// (flux/4π units).
pub const QUANTIZATION_LIMIT: f64 = 0.02;
/// Gap below which levels count as crossing.
pub const CROSSING_GAP: f64 = 1e-9;
/// Offset from `x*` used for the member levels of a crossing cluster.
pub const CLUSTER_CHERN_OFFSET: f64 = 0.01;
pub const CLUSTER_PHASE_OFFSET: f64 = 1e-3;
/// Segments of the latitude loop.
pub const LOOP_SEGMENTS: usize = 256;
/// Total propagation steps above which `dynamics` refuses to run.
pub const MAX_STEPS: usize = 20_000_000;
/// Trajectory rows written per file when no stride is given.
pub const TRAJECTORY_ROWS: usize = 2000;

pub fn run(cfg: &ScanConfig) -> Result<Table> {
    match cfg.command {
        Command::Spectrum => spectrum(cfg),
        Command::Chern => chern(cfg),
        Command::Phase => phase(cfg),
        Command::Dynamics => dynamics(cfg),
        Command::WeylCompare => weyl_compare(cfg),
    }
}

fn base_params(cfg: &ScanConfig, x: f64) -> ModelParams {
    ModelParams::new(cfg.nuclear_spin, x).with_y(cfg.y).with_axis(cfg.axis).with_field(cfg.field)
}

fn link_mesh(cfg: &ScanConfig) -> Result<SphereMesh> {
    Ok(SphereMesh::new(cfg.mesh.rings, 2 * cfg.mesh.rings, cfg.mesh.scheme)?)
}

fn selected_levels(cfg: &ScanConfig, dim: usize) -> Result<Vec<usize>> {
    match &cfg.levels {
        Some(l) => {
            if let Some(&bad) = l.iter().find(|&&n| n >= dim) {
                bail!("level {} out of range 1..={dim}", bad + 1);
            }
            Ok(l.clone())
        }
        None => Ok((0..dim).collect()),
    }
}

fn list_opts(values: &[Option<f64>]) -> String {
    values.iter().map(|v| v.map_or("none".to_string(), |v| format!("{v}"))).collect::<Vec<_>>().join(", ")
}

// ---------------------------------------------------------------- spectrum

fn spectrum(cfg: &ScanConfig) -> Result<Table> {
    let dim = 3 * cfg.nuclear_spin.dim();
    let mut columns: Vec<String> = Vec::new();
    if cfg.axis_sweep.is_some() {
        columns.push("axis_theta".into());
    }
    columns.push("x".into());
    columns.extend((1..=dim).map(|n| format!("E_{n}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(cfg.command.name(), &cfg.settings, &cols);

    let ascending = cfg.x_grid.len() < 2 || cfg.x_grid[1] > cfg.x_grid[0];
    let mut grid = cfg.x_grid.clone();
    if !ascending {
        grid.reverse();
    }
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);

    let axes: Vec<(Option<f64>, [f64; 3])> = match &cfg.axis_sweep {
        Some(angles) => angles.iter().map(|&a| (Some(a), [a.sin(), 0.0, a.cos()])).collect(),
        None => vec![(None, cfg.axis)],
    };
    let mut worst_trace: f64 = 0.0;
    for (angle, axis) in axes {
        let p0 = base_params(cfg, lo).with_axis(axis);
        let track = track_levels(&p0, &grid)?;
        let order: Vec<usize> = if ascending { (0..grid.len()).collect() } else { (0..grid.len()).rev().collect() };
        for k in order {
            let mut row = Vec::with_capacity(dim + 2);
            if let Some(a) = angle {
                row.push(num(a));
            }
            row.push(num(grid[k]));
            row.extend(track.energies[k].iter().map(|&e| num(e)));
            worst_trace = worst_trace.max(track.energies[k].iter().sum::<f64>().abs());
            table.push_row(row);
        }

        let prefix = angle.map_or(String::new(), |a| format!("axis_theta={a} "));
        let found = find_degeneracies(&p0, (lo, hi), CROSSING_GAP)?;
        for d in &found {
            let kind = match d.kind {
                CrossingKind::Crossing => "crossing",
                CrossingKind::AntiCrossing => "anti-crossing",
            };
            table.annotate(format!(
                "{prefix}{kind} x={} levels={} energy={} gap={:e}",
                d.x,
                crate::output::cell_text(&level_list(&d.levels)),
                d.energy,
                d.gap
            ));
        }
        let x_star = crossing_point(cfg.nuclear_spin);
        if cfg.y == 0.0 && lo < x_star && x_star < hi {
            let hit = found.iter().any(|d| d.kind == CrossingKind::Crossing && (d.x - x_star).abs() < 1e-6);
            table.check("crossing_at_x_star", hit, format!("{prefix}x*={x_star}"));
        }
    }
    table.check("traceless", worst_trace < 1e-9 * dim as f64, format!("max |sum E| = {worst_trace:e}"));
    Ok(table)
}

// ------------------------------------------------------------------- chern

const CHERN_COLUMNS: &[&str] = &["x", "levels", "ch", "ch_primary", "ch_standard", "deviation", "j", "reference", "quantized", "ok", "note"];

/// Chern numbers of `sets` (0-based level indices of `p`) with the configured
/// scheme. One result per set so a single bad set does not sink the others.
fn set_cherns(cfg: &ScanConfig, p: &ModelParams, sets: &[Vec<usize>]) -> Vec<Result<ChernNumber, Error>> {
    match cfg.method {
        Method::Link => {
            let mesh = match link_mesh(cfg) {
                Ok(m) => m,
                Err(e) => return sets.iter().map(|_| Err(Error::InvalidParameter(e.to_string()))).collect(),
            };
            let batch = BandFrames::happer(p, vec![0]).and_then(|src| chern_numbers_link_variable(&src, sets, &mesh));
            match batch {
                Ok(all) => all.into_iter().map(|c| Ok(c.chern)).collect(),
                Err(_) => sets
                    .iter()
                    .map(|set| {
                        let src = BandFrames::happer(p, set.clone())?;
                        Ok(chern_numbers_link_variable(&src, std::slice::from_ref(set), &mesh)?.remove(0).chern)
                    })
                    .collect(),
            }
        }
        Method::FiniteDifference => sets
            .iter()
            .map(|set| {
                let mesh = SphereMesh::uniform(cfg.mesh.rings, 2 * cfg.mesh.rings)?;
                let frames = smooth_gauge_states(&BandFrames::happer(p, set.clone())?, &mesh)?;
                chern_number(&curvature_discrete(&connection_discrete(&frames)))
            })
            .collect(),
    }
}

/// Cells `ch, ch_primary, ch_standard, deviation` and whether the value is quantized.
fn chern_cells(c: &ChernNumber, conv: Convention) -> ([Value; 4], bool) {
    (
        [num(c.rounded(conv)), num(c.ch), num(c.standard), num(c.deviation_in(conv))],
        c.deviation < QUANTIZATION_LIMIT,
    )
}

/// `−⟨J⟩` expressed in `conv`.
fn minus_j(j: f64, conv: Convention) -> f64 {
    let r = -(2.0 * j).round() / 2.0;
    match conv {
        Convention::Primary => r,
        Convention::Standard => 2.0 * r,
    }
}

fn error_row(x: f64, levels: &[usize], e: &dyn std::fmt::Display) -> Vec<Value> {
    let mut row = vec![num(x), level_list(levels)];
    row.extend(std::iter::repeat(Value::Null).take(CHERN_COLUMNS.len() - 5));
    row.extend([Value::Bool(false), Value::Bool(false), text(format!("error: {e}"))]);
    row
}

fn chern(cfg: &ScanConfig) -> Result<Table> {
    let mut table = Table::new(cfg.command.name(), &cfg.settings, CHERN_COLUMNS);
    if cfg.cluster {
        chern_cluster(cfg, &mut table)?;
        return Ok(table);
    }
    let conv = cfg.convention;
    let (mut quantized_all, mut reference_all) = (true, true);
    let (mut worst_dev, mut compared): (f64, usize) = (0.0, 0);
    for &x in &cfg.x_grid {
        let p = base_params(cfg, x);
        let levels = selected_levels(cfg, p.dim())?;
        let es = eigensystem_for(&p)?;
        let j_op = conserved_j(&p);
        let sets: Vec<Vec<usize>> = levels.iter().map(|&l| vec![l]).collect();
        for (set, result) in sets.iter().zip(set_cherns(cfg, &p, &sets)) {
            let level = set[0];
            let j = es.expectation(&j_op, level);
            match result {
                Ok(c) => {
                    let (cells, quantized) = chern_cells(&c, conv);
                    let reference = (cfg.y == 0.0).then(|| minus_j(j, conv));
                    let matches = reference.is_none_or(|r| r == c.rounded(conv));
                    quantized_all &= quantized;
                    reference_all &= matches;
                    worst_dev = worst_dev.max(c.deviation);
                    compared += usize::from(reference.is_some());
                    let mut row = vec![num(x), level_list(set)];
                    row.extend(cells);
                    row.extend([num(j), opt_num(reference), Value::Bool(quantized), Value::Bool(quantized && matches), text("")]);
                    table.push_row(row);
                }
                Err(e) => {
                    quantized_all = false;
                    table.push_row(error_row(x, set, &e));
                }
            }
        }
    }
    table.check("quantization", quantized_all, format!("worst deviation {worst_dev:e} (limit {QUANTIZATION_LIMIT})"));
    if compared > 0 {
        table.check("chern_equals_minus_j", reference_all, format!("{compared} levels compared"));
    }
    Ok(table)
}

/// Members of the `(2L+1)`-fold crossing cluster at `x*` (north field).
fn crossing_cluster(spin: SpinQuantumNumber) -> Result<Vec<usize>> {
    let p = ModelParams::new(spin, crossing_point(spin));
    let es = eigensystem_for(&p)?;
    match es.clusters(1e-8).into_iter().find(|c| c.len() == spin.dim()) {
        Some(c) => Ok(c.collect()),
        None => bail!("no {}-fold cluster at x* for L = {spin}", spin.dim()),
    }
}

fn chern_cluster(cfg: &ScanConfig, table: &mut Table) -> Result<()> {
    if cfg.y != 0.0 {
        bail!("cluster mode needs y = 0 (the crossing cluster only exists there)");
    }
    let conv = cfg.convention;
    let x_star = crossing_point(cfg.nuclear_spin);
    let cluster = crossing_cluster(cfg.nuclear_spin)?;
    let mut quantized_all = true;
    let mut sums = Vec::new();
    for dx in [-CLUSTER_CHERN_OFFSET, CLUSTER_CHERN_OFFSET] {
        let p = base_params(cfg, x_star + dx);
        let es = eigensystem_for(&p)?;
        let j_op = conserved_j(&p);
        let sets: Vec<Vec<usize>> = cluster.iter().map(|&l| vec![l]).collect();
        let mut sum = Some(0.0);
        for (set, result) in sets.iter().zip(set_cherns(cfg, &p, &sets)) {
            match result {
                Ok(c) => {
                    let (cells, quantized) = chern_cells(&c, conv);
                    let j = es.expectation(&j_op, set[0]);
                    quantized_all &= quantized;
                    sum = sum.map(|s| s + c.rounded(conv));
                    let mut row = vec![num(p.x), level_list(set)];
                    row.extend(cells);
                    let r = minus_j(j, conv);
                    row.extend([num(j), num(r), Value::Bool(quantized), Value::Bool(quantized && r == c.rounded(conv)), text("cluster member")]);
                    table.push_row(row);
                }
                Err(e) => {
                    quantized_all = false;
                    sum = None;
                    table.push_row(error_row(p.x, set, &e));
                }
            }
        }
        sums.push(sum);
    }

    let p = base_params(cfg, x_star);
    let whole = set_cherns(cfg, &p, std::slice::from_ref(&cluster)).remove(0);
    match whole {
        Ok(c) => {
            let (cells, quantized) = chern_cells(&c, conv);
            quantized_all &= quantized;
            let agree = sums.iter().all(|s| *s == Some(c.rounded(conv)));
            let mut row = vec![num(x_star), level_list(&cluster)];
            row.extend(cells);
            row.extend([Value::Null, opt_num(sums[0]), Value::Bool(quantized), Value::Bool(quantized && agree), text("degenerate cluster")]);
            table.push_row(row);
            let unit = match conv {
                Convention::Primary => 1.0,
                Convention::Standard => 2.0,
            };
            table.check("cluster_chern_is_one", c.rounded(conv) == unit, format!("Ch_deg = {}", c.rounded(conv)));
            table.check("cluster_equals_member_sum", agree, format!("member sums at x*-{0}, x*+{0}: {1}", CLUSTER_CHERN_OFFSET, list_opts(&sums)));
        }
        Err(e) => {
            quantized_all = false;
            table.push_row(error_row(x_star, &cluster, &e));
        }
    }
    table.check("quantization", quantized_all, format!("limit {QUANTIZATION_LIMIT}"));
    Ok(())
}

// ------------------------------------------------------------------- phase

const PHASE_COLUMNS: &[&str] = &["x", "levels", "gamma", "reference", "ok", "note"];
const PHASE_TOLERANCE: f64 = 1e-3;
const CLUSTER_PHASE_TOLERANCE: f64 = 1e-2;

fn loop_phase_of(cfg: &ScanConfig, p: &ModelParams, levels: Vec<usize>) -> Result<f64, Error> {
    let path = latitude_loop(cfg.theta0, LOOP_SEGMENTS);
    loop_phase(&BandFrames::happer(p, levels)?, &path, cfg.mesh.rings)
}

fn phase(cfg: &ScanConfig) -> Result<Table> {
    let mut table = Table::new(cfg.command.name(), &cfg.settings, PHASE_COLUMNS);
    if cfg.cluster {
        phase_cluster(cfg, &mut table)?;
        return Ok(table);
    }
    let omega = cap_solid_angle(cfg.theta0);
    let (mut all_ok, mut worst, mut compared): (bool, f64, usize) = (true, 0.0, 0);
    for &x in &cfg.x_grid {
        let p = base_params(cfg, x);
        let levels = selected_levels(cfg, p.dim())?;
        // J along the loop's own field direction.
        let at_loop = p.with_field(FieldDirection::new(cfg.theta0, 0.0));
        let es = eigensystem_for(&at_loop)?;
        let j_op = conserved_j(&at_loop);
        for level in levels {
            let row = match loop_phase_of(cfg, &p, vec![level]) {
                Ok(gamma) => {
                    // Eigenstates of J_{n_B} pick up −m_J times the enclosed solid angle.
                    let reference = (cfg.y == 0.0).then(|| wrap_phase(-(2.0 * es.expectation(&j_op, level)).round() / 2.0 * omega));
                    let ok = reference.is_none_or(|r| {
                        let err = wrap_phase(gamma - r).abs();
                        worst = worst.max(err);
                        err < PHASE_TOLERANCE
                    });
                    compared += usize::from(reference.is_some());
                    all_ok &= ok;
                    vec![num(x), level_list(&[level]), num(gamma), opt_num(reference), Value::Bool(ok), text("")]
                }
                Err(e) => {
                    all_ok = false;
                    vec![num(x), level_list(&[level]), Value::Null, Value::Null, Value::Bool(false), text(format!("error: {e}"))]
                }
            };
            table.push_row(row);
        }
    }
    let detail = if compared > 0 { format!("{compared} phases vs -J*Omega, worst {worst:e} (limit {PHASE_TOLERANCE})") } else { "no reference at y != 0".into() };
    table.check("phase", all_ok, detail);
    Ok(table)
}

fn phase_cluster(cfg: &ScanConfig, table: &mut Table) -> Result<()> {
    if cfg.y != 0.0 {
        bail!("cluster mode needs y = 0 (the crossing cluster only exists there)");
    }
    let x_star = crossing_point(cfg.nuclear_spin);
    let cluster = crossing_cluster(cfg.nuclear_spin)?;
    let mut sums = Vec::new();
    let mut all_ok = true;
    for dx in [-CLUSTER_PHASE_OFFSET, CLUSTER_PHASE_OFFSET] {
        let p = base_params(cfg, x_star + dx);
        let mut sum = Some(0.0);
        for &level in &cluster {
            match loop_phase_of(cfg, &p, vec![level]) {
                Ok(g) => {
                    sum = sum.map(|s| s + g);
                    table.push_row(vec![num(p.x), level_list(&[level]), num(g), Value::Null, Value::Bool(true), text("cluster member")]);
                }
                Err(e) => {
                    sum = None;
                    all_ok = false;
                    table.push_row(vec![num(p.x), level_list(&[level]), Value::Null, Value::Null, Value::Bool(false), text(format!("error: {e}"))]);
                }
            }
        }
        sums.push(sum);
    }
    let whole = loop_phase_of(cfg, &base_params(cfg, x_star), cluster.clone());
    match whole {
        Ok(g) => {
            let errs: Vec<Option<f64>> = sums.iter().map(|s| s.map(|s| wrap_phase(s - g).abs())).collect();
            let ok = errs.iter().all(|e| e.is_some_and(|e| e < CLUSTER_PHASE_TOLERANCE));
            all_ok &= ok;
            table.push_row(vec![num(x_star), level_list(&cluster), num(g), opt_num(sums[0]), Value::Bool(ok), text("degenerate cluster")]);
            table.check("cluster_phase_is_member_sum", ok, format!("|sum - gamma_deg| at x*-{0}, x*+{0}: {1}", CLUSTER_PHASE_OFFSET, list_opts(&errs)));
        }
        Err(e) => {
            all_ok = false;
            table.push_row(vec![num(x_star), level_list(&cluster), Value::Null, Value::Null, Value::Bool(false), text(format!("error: {e}"))]);
        }
    }
    table.check("phase", all_ok, format!("limit {CLUSTER_PHASE_TOLERANCE}"));
    Ok(())
}

// ---------------------------------------------------------------- dynamics

const DYNAMICS_COLUMNS: &[&str] = &[
    "x",
    "level",
    "omega",
    "steps",
    "solid_angle",
    "gamma",
    "gamma_reference",
    "leakage",
    "alignment_deg",
    "distortion",
    "norm_drift",
    "ok",
    "note",
];
const DYNAMICS_PHASE_TOLERANCE: f64 = 1e-2;
const ALIGNMENT_LIMIT_DEG: f64 = 1.0;
/// Gap samples along the loop when choosing ω.
const GAP_SAMPLES: usize = 400;

struct Run {
    protocol: DriveProtocol,
    steps_per_period: usize,
    traj: Trajectory,
}

fn drive(cfg: &ScanConfig, p: &ModelParams, level: usize, omega: Option<f64>, steps: Option<usize>) -> Result<Run> {
    let omega = match omega {
        Some(w) => w,
        None => {
            let probe = DriveProtocol::rotating(cfg.theta0, 1.0, 1, p.x, p.y)?;
            let gap = minimum_gap(p, &probe, level, GAP_SAMPLES)?;
            if !(gap > 0.0) {
                bail!("level {} has no gap along the loop; set omega explicitly", level + 1);
            }
            cfg.omega_factor * gap
        }
    };
    let protocol = DriveProtocol::rotating(cfg.theta0, omega, cfg.periods, p.x, p.y)?;
    let steps_per_period = match steps {
        Some(s) => s,
        None => suggested_steps_per_period(p, &protocol)?,
    };
    if steps_per_period.saturating_mul(cfg.periods) > MAX_STEPS {
        bail!("{} steps per period over {} periods exceeds {MAX_STEPS}; raise omega or omega-factor", steps_per_period, cfg.periods);
    }
    let psi0 = instantaneous_eigenstate(p, &protocol, level)?;
    let traj = propagate(p, &protocol, &psi0, steps_per_period)?;
    Ok(Run { protocol, steps_per_period, traj })
}

fn norm3(v: [f64; 3]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Largest angle of `⟨J⟩` from the field axis (parallel or antiparallel).
fn alignment(run: &Run) -> Option<f64> {
    let mut worst: f64 = 0.0;
    for (&t, j) in run.traj.times.iter().zip(&run.traj.j_avg) {
        if norm3(*j) < 1e-6 {
            return None;
        }
        let a = angle_between(*j, run.protocol.field_at(t).unit_vector());
        worst = worst.max(a.min(PI - a));
    }
    Some(worst.to_degrees())
}

fn trajectory_path(out: &Path, multi_x: Option<usize>, level: usize) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trajectory".into());
    let x_part = multi_x.map_or(String::new(), |k| format!("_x{}", k + 1));
    out.with_file_name(format!("{stem}{x_part}_level{}.csv", level + 1))
}

/// Columns `t, sx, sy, sz, lx, ly, lz, jx, jy, jz`, every `stride`-th sample
/// plus the final one.
pub fn write_trajectory(path: &Path, traj: &Trajectory, stride: usize) -> Result<()> {
    use std::io::Write;
    let mut out = Vec::new();
    writeln!(out, "# schema={}", crate::output::SCHEMA)?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(["t", "sx", "sy", "sz", "lx", "ly", "lz", "jx", "jy", "jz"])?;
        let last = traj.len() - 1;
        for k in (0..traj.len()).filter(|&k| k % stride == 0 || k == last) {
            let mut rec = vec![traj.times[k].to_string()];
            for v in [traj.s_avg[k], traj.l_avg[k], traj.j_avg[k]] {
                rec.extend(v.iter().map(|c| c.to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    crate::output::write_bytes(Some(path), &out)
}

fn dynamics(cfg: &ScanConfig) -> Result<Table> {
    let mut table = Table::new(cfg.command.name(), &cfg.settings, DYNAMICS_COLUMNS);
    let multi_x = cfg.x_grid.len() > 1;
    let (mut norm_ok, mut phase_ok, mut align_ok) = (true, true, true);
    let (mut worst_phase, mut worst_align, mut worst_norm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (xi, &x) in cfg.x_grid.iter().enumerate() {
        let p = base_params(cfg, x).with_field(FieldDirection::new(cfg.theta0, 0.0));
        for level in selected_levels(cfg, p.dim())? {
            let run = match drive(cfg, &p, level, cfg.omega, None) {
                Ok(r) => r,
                Err(e) => {
                    phase_ok = false;
                    let mut row = vec![num(x), Value::from(level + 1)];
                    row.extend(std::iter::repeat(Value::Null).take(DYNAMICS_COLUMNS.len() - 4));
                    row.extend([Value::Bool(false), text(format!("error: {e}"))]);
                    table.push_row(row);
                    continue;
                }
            };
            let traj = &run.traj;
            let mut notes = Vec::new();
            let gamma = match extract_geometric_phase(traj, &p, &run.protocol, level) {
                Ok(g) => Some(g),
                Err(e) => {
                    notes.push(format!("no adiabatic phase: {e}"));
                    None
                }
            };
            let reference = match loop_phase_of(cfg, &p, vec![level]) {
                Ok(g) => Some(g),
                Err(e) => {
                    notes.push(format!("no loop phase: {e}"));
                    None
                }
            };
            let overlap = traj.states[0].dotc(traj.final_state()).norm_sqr();
            let leakage = 1.0 - overlap;
            let aligned = alignment(&run);
            // Neither the cone nor the alignment is defined when ⟨J⟩ vanishes.
            let cone = aligned.map(|_| solid_angle(&traj.j_avg));
            let distortion = if p.y == 0.0 {
                Some(0.0)
            } else {
                match drive(cfg, &p.with_y(0.0), level, Some(run.protocol.omega), Some(run.steps_per_period)) {
                    Ok(flat) => Some(traj.j_avg.iter().zip(&flat.traj.j_avg).map(|(a, b)| norm3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])).fold(0.0, f64::max)),
                    Err(e) => {
                        notes.push(format!("no y=0 baseline: {e}"));
                        None
                    }
                }
            };

            let mut ok = traj.norm_drift < happer_core::tolerance::TOL.norm_drift;
            norm_ok &= ok;
            worst_norm = worst_norm.max(traj.norm_drift);
            let phase_err = match (gamma, reference) {
                (Some(g), Some(r)) => Some(wrap_phase(g - r).abs()),
                _ => None,
            };
            let this_phase_ok = phase_err.is_some_and(|e| e < DYNAMICS_PHASE_TOLERANCE);
            phase_ok &= this_phase_ok;
            ok &= this_phase_ok;
            worst_phase = worst_phase.max(phase_err.unwrap_or(f64::INFINITY));
            if p.y == 0.0 {
                if let Some(a) = aligned {
                    let this_align = a < ALIGNMENT_LIMIT_DEG;
                    align_ok &= this_align;
                    ok &= this_align;
                    worst_align = worst_align.max(a);
                }
            }
            if p.y != 0.0 {
                notes.push("distorted by the spin-axis term".into());
            }

            table.push_row(vec![
                num(x),
                Value::from(level + 1),
                num(run.protocol.omega),
                Value::from(run.steps_per_period * cfg.periods),
                opt_num(cone),
                opt_num(gamma),
                opt_num(reference),
                num(leakage),
                opt_num(aligned),
                opt_num(distortion),
                num(traj.norm_drift),
                Value::Bool(ok),
                text(notes.join("; ")),
            ]);

            if let Some(out) = &cfg.out {
                let stride = cfg.stride.unwrap_or_else(|| (traj.len() / TRAJECTORY_ROWS).max(1));
                write_trajectory(&trajectory_path(out, multi_x.then_some(xi), level), traj, stride)?;
            }
        }
    }
    table.check("norm", norm_ok, format!("worst drift {worst_norm:e}"));
    table.check("phase_matches_loop", phase_ok, format!("worst |gamma - loop phase| {worst_phase:e} (limit {DYNAMICS_PHASE_TOLERANCE})"));
    if cfg.y == 0.0 {
        table.check("alignment", align_ok, format!("worst {worst_align:.4} deg (limit {ALIGNMENT_LIMIT_DEG})"));
    }
    Ok(table)
}

// ------------------------------------------------------------ weyl-compare

const WEYL_COLUMNS: &[&str] = &["k", "kind", "band", "ch", "ch_primary", "ch_standard", "deviation", "expected", "ok", "note"];

fn weyl_row(k: Option<f64>, kind: &str, band: Value, c: &ChernNumber, conv: Convention, expected: Option<f64>, note: &str) -> (Vec<Value>, bool) {
    let (cells, quantized) = chern_cells(c, conv);
    let ok = quantized && expected.is_none_or(|e| e == c.rounded(conv));
    let mut row = vec![opt_num(k), text(kind), band];
    row.extend(cells);
    row.extend([opt_num(expected), Value::Bool(ok), text(note)]);
    (row, ok)
}

fn weyl_compare(cfg: &ScanConfig) -> Result<Table> {
    let mut table = Table::new(cfg.command.name(), &cfg.settings, WEYL_COLUMNS);
    let spin = cfg.nuclear_spin;
    let conv = cfg.convention;
    let scale = match conv {
        Convention::Primary => 1.0,
        Convention::Standard => 2.0,
    };
    let mesh = link_mesh(cfg)?;
    let n = spin.dim();
    let radius_star = 1.0 / crossing_point(spin);
    let xs: Vec<f64> = cfg.k_grid.iter().map(|k| 1.0 / k).collect();
    let clusters = crossing_cluster_positions(spin, &xs)?;
    let mut sets: Vec<Vec<usize>> = (0..n).map(|b| vec![b]).collect();
    sets.push((0..n).collect());

    let (mut all_ok, mut skipped) = (true, 0usize);
    for (&k, cluster) in cfg.k_grid.iter().zip(clusters) {
        let result = ProjectedBandFrames::new(spin, k, cluster, vec![0]).and_then(|src| chern_numbers_link_variable(&src, &sets, &mesh));
        let cherns = match result {
            Ok(c) => c,
            Err(e @ Error::SubspaceNotIsolated { .. }) => {
                skipped += 1;
                table.push_row(vec![num(k), text("projected"), Value::Null, Value::Null, Value::Null, Value::Null, Value::Null, Value::Null, Value::Null, text(format!("skipped: {e}"))]);
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let lowest_expected = (spin == SpinQuantumNumber::ONE).then(|| scale * if k > radius_star { 2.0 } else { 0.0 });
        let mut band_sum = 0.0;
        for (b, c) in cherns[..n].iter().enumerate() {
            band_sum += c.chern.rounded(conv);
            let expected = if b == 0 { lowest_expected } else { None };
            let (row, ok) = weyl_row(Some(k), "projected", Value::from(b + 1), &c.chern, conv, expected, "");
            all_ok &= ok;
            table.push_row(row);
        }
        let whole = &cherns[n].chern;
        let (row, ok) = weyl_row(Some(k), "projected-cluster", text("all"), whole, conv, Some(scale), "whole projected block");
        all_ok &= ok;
        table.push_row(row);
        let sum_ok = band_sum == scale;
        all_ok &= sum_ok;
        table.push_row(vec![num(k), text("projected-sum"), text("all"), num(band_sum), Value::Null, Value::Null, Value::Null, num(scale), Value::Bool(sum_ok), text("sum of band values")]);
    }

    // Semimetal H = k·F with F the spin-L triple; band b has m = b − L.
    let semimetal = BandFrames::zeeman(spin, vec![0])?;
    let sm_sets: Vec<Vec<usize>> = (0..n).map(|b| vec![b]).collect();
    let sm = chern_numbers_link_variable(&semimetal, &sm_sets, &mesh)?;
    let mut sm_sum = 0.0;
    for (b, c) in sm.iter().enumerate() {
        let m = b as f64 - spin.value();
        let (row, ok) = weyl_row(None, "semimetal", Value::from(b + 1), &c.chern, conv, Some(-scale * m), "");
        all_ok &= ok;
        sm_sum += c.chern.rounded(conv);
        table.push_row(row);
    }
    let sm_ok = sm_sum == 0.0;
    table.push_row(vec![Value::Null, text("semimetal-sum"), text("all"), num(sm_sum), Value::Null, Value::Null, Value::Null, num(0.0), Value::Bool(sm_ok), text("sum of band values")]);
    table.check("projected_bands", all_ok, format!("per-band quantization, lowest-band and sum references; {skipped} radii skipped"));
    table.check("semimetal_sum_zero", sm_ok, format!("sum {sm_sum}"));
    if skipped > 0 {
        table.annotate(format!("{skipped} radii too close to |k| = {} skipped", radius_star));
    }
    Ok(table)
}

// ------------------------------------------------------ randomized checks

/// Seeded random draws of model parameters at the configured `L`, checking
/// Hermiticity, tracelessness and the commutator identity.
pub fn random_checks(cfg: &ScanConfig, table: &mut Table) -> Result<()> {
    use happer_core::model::HapperOperators;
    use happer_core::spin::{commutator, hermitian_residual, max_abs};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    if cfg.checks == 0 {
        return Ok(());
    }
    let mut rng = StdRng::seed_from_u64(cfg.seed);
    let ops = HapperOperators::new(cfg.nuclear_spin);
    let (mut herm, mut trace, mut comm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..cfg.checks {
        let field = FieldDirection::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
        let axis = FieldDirection::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI)).unit_vector();
        let p = ModelParams::new(cfg.nuclear_spin, rng.gen_range(0.0..2.0)).with_y(rng.gen_range(-0.5..0.5)).with_field(field).with_axis(axis);
        let h = ops.hamiltonian(&p);
        herm = herm.max(hermitian_residual(&h));
        trace = trace.max(h.trace().norm());
        let direct = commutator(&conserved_j(&p), &h)?;
        comm = comm.max(max_abs(&(direct - ops.spin_axis_commutator(&p))));
        // Energies must also sum to zero.
        trace = trace.max(eigensystem(&h)?.eigenvalues.iter().sum::<f64>().abs());
    }
    let n = cfg.checks;
    table.check("random_hermitian", herm < 1e-12, format!("{n} draws, seed {}, max residual {herm:e}", cfg.seed));
    table.check("random_traceless", trace < 1e-9, format!("{n} draws, max |trace| {trace:e}"));
    table.check("random_commutator", comm < 1e-12, format!("{n} draws, max entry error {comm:e}"));
    Ok(())
}
