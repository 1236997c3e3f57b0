//! Acceptance suite. Run with `--nocapture` to see one line per criterion.
//!
//! The criteria run one after another inside a single test so that each
//! runtime bound is measured without other criteria competing for cores.

use std::f64::consts::{FRAC_PI_6, PI, TAU};
use std::time::{Duration, Instant};

use happer_core::degenerate_basis::{analytic_degenerate_states, analytic_degenerate_vectors, closed_form_margin, gram_schmidt};
use happer_core::dynamics::{
    extract_geometric_phase, instantaneous_eigenstate, landau_zener_scan, minimum_gap, propagate, suggested_steps_per_period, DriveProtocol, LzRamp,
};
use happer_core::geometry::{
    cap_solid_angle, chern_number, chern_number_link_variable, chern_numbers_link_variable, connection_discrete, curvature_discrete, latitude_loop, loop_phase,
    smooth_gauge_states, wrap_phase, BandFrames, ChernNumber, Convention, ProjectedBandFrames, SphereMesh,
};
use happer_core::model::{crossing_point, FieldDirection, HapperOperators, ModelParams};
use happer_core::spectrum::{crossing_cluster_positions, eigensystem, eigensystem_for, find_degeneracies};
use happer_core::spin::{commutator, max_abs, ComplexMatrix, SpinQuantumNumber};
use happer_core::error::Result;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

/// Criteria whose literal statement cannot hold; reported but not asserted.
const KNOWN_UNATTAINABLE: &[usize] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn run(n: usize, limit: Duration, f: impl FnOnce() -> Result<Outcome>) -> bool {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(o) => (o.pass && elapsed <= limit, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    let timing = if elapsed <= limit { "" } else { " (over time limit)" };
    println!(
        "criterion {n}: {} [{:.1}s / {}s]{timing} {detail}",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn l_spin(twice: u32) -> SpinQuantumNumber {
    SpinQuantumNumber::from_twice(twice)
}

/// Chern number of every single level of `p`, sharing one eigensolve per vertex.
fn level_cherns(p: &ModelParams, mesh: &SphereMesh) -> Result<Vec<ChernNumber>> {
    let src = BandFrames::happer(p, vec![0])?;
    let sets: Vec<Vec<usize>> = (0..p.dim()).map(|b| vec![b]).collect();
    Ok(chern_numbers_link_variable(&src, &sets, mesh)?.into_iter().map(|c| c.chern).collect())
}

fn primary(c: &ChernNumber) -> f64 {
    c.rounded(Convention::Primary)
}

fn criterion_1() -> Result<Outcome> {
    let link_mesh = SphereMesh::equal_area(200)?;
    let grid_mesh = SphereMesh::uniform(200, 400)?;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    for (band, k) in [(0usize, -1.0), (1, 0.0), (2, 1.0)] {
        let src = BandFrames::zeeman(SpinQuantumNumber::ONE, vec![band])?;
        let link = chern_number_link_variable(&src, &link_mesh)?.chern;
        let frames = smooth_gauge_states(&src, &grid_mesh)?;
        let grid = chern_number(&curvature_discrete(&connection_discrete(&frames)))?;
        for c in [link, grid] {
            ok &= primary(&c) == -k && c.deviation < 0.02;
            worst = worst.max(c.deviation);
        }
    }
    Ok(outcome(ok, format!("Zeeman bands give Ch = -k in both schemes, worst deviation {worst:.2e}")))
}

fn criterion_2() -> Result<Outcome> {
    let mut ok = true;
    let mut notes = Vec::new();
    for twice in [1u32, 2, 3, 4] {
        let spin = l_spin(twice);
        let x_star = crossing_point(spin);
        let found = find_degeneracies(&ModelParams::new(spin, 1.0), (0.1, 1.5), 1e-9)?;
        let hit = found.iter().find(|d| d.multiplicity() == spin.dim() && (d.x - x_star).abs() < 1e-8);
        match hit {
            Some(d) => {
                notes.push(format!("L={spin}: x={:.12}", d.x));
                if twice == 2 {
                    ok &= (d.energy + 1.0 / 3.0).abs() < 1e-10;
                    notes.push(format!("E={:.12}", d.energy));
                }
            }
            None => {
                ok = false;
                notes.push(format!("L={spin}: no {}-fold crossing at {x_star}", spin.dim()));
            }
        }
    }
    Ok(outcome(ok, notes.join(", ")))
}

fn criterion_3() -> Result<Outcome> {
    let mesh = SphereMesh::equal_area(200)?;
    let mut ok = true;
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (twice, xs) in [(2u32, [0.5, 1.0]), (4, [0.25, 1.0])] {
        for x in xs {
            let p = ModelParams::new(l_spin(twice), x);
            let es = eigensystem_for(&p)?;
            let j = HapperOperators::new(p.nuclear_spin).j_along(p.field.unit_vector());
            for (n, c) in level_cherns(&p, &mesh)?.iter().enumerate() {
                let jn = es.expectation(&j, n);
                ok &= primary(c) == -jn.round() && c.deviation < 0.02;
                worst = worst.max(c.deviation);
                checked += 1;
            }
        }
    }
    Ok(outcome(ok, format!("Ch = -<J> on {checked} levels, worst deviation {worst:.2e}")))
}

fn criterion_4() -> Result<Outcome> {
    let mesh = SphereMesh::equal_area(200)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for twice in [2u32, 4, 6] {
        let spin = l_spin(twice);
        let x_star = crossing_point(spin);
        let p = ModelParams::new(spin, x_star);
        let es = eigensystem(&HapperOperators::new(spin).hamiltonian(&p))?;
        let cluster: Vec<usize> = es
            .clusters(1e-8)
            .into_iter()
            .find(|c| c.len() == spin.dim())
            .expect("crossing cluster at x*")
            .collect();
        let deg = chern_number_link_variable(&BandFrames::happer(&p, cluster.clone())?, &mesh)?.chern;
        ok &= primary(&deg) == 1.0 && deg.deviation < 0.02;
        let mut sums = Vec::new();
        for dx in [-0.01, 0.01] {
            let cherns = level_cherns(&p.with_x(x_star + dx), &mesh)?;
            let sum: f64 = cluster.iter().map(|&b| primary(&cherns[b])).sum();
            ok &= sum == primary(&deg) && cluster.iter().all(|&b| cherns[b].deviation < 0.02);
            sums.push(sum);
        }
        notes.push(format!("L={spin}: Ch_deg={} sums {:?}", primary(&deg), sums));
    }
    Ok(outcome(ok, notes.join(", ")))
}

/// `[n_B·J, H]` computed directly, against the exact closed form and the
/// product form `6y (n_B×â)·S (â·S)`.
fn commutator_draws(seed: u64) -> Result<(f64, f64, f64, bool)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let (mut exact_err, mut printed_entry, mut printed_norm) = (0.0f64, 0.0f64, 0.0f64);
    let mut zero_set_ok = true;
    for draw in 0..100 {
        let spin = l_spin(rng.gen_range(1..=4));
        let ops = HapperOperators::new(spin);
        let axis = FieldDirection::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU)).unit_vector();
        let y = rng.gen_range(-0.5..0.5);
        let x = rng.gen_range(0.0..2.0);
        // every fifth draw puts the field on ±â
        let field = match draw % 5 {
            0 => FieldDirection::from_vector(axis),
            1 => FieldDirection::from_vector(axis.map(|c| -c)),
            _ => FieldDirection::new(rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU)),
        };
        let p = ModelParams::new(spin, x).with_y(y).with_field(field).with_axis(axis);
        let direct = commutator(&ops.j_along(field.unit_vector()), &ops.hamiltonian(&p))?;
        let exact = ops.spin_axis_commutator(&p);
        let printed = ops.spin_axis_commutator_printed(&p);
        exact_err = exact_err.max(max_abs(&(&direct - &exact)));
        let moduli = |m: &ComplexMatrix| m.map(|z| z.norm());
        printed_entry = printed_entry.max((moduli(&direct) - moduli(&printed)).amax());
        printed_norm = printed_norm.max((direct.norm() - printed.norm()).abs());
        let on_axis = draw % 5 < 2;
        zero_set_ok &= if on_axis { max_abs(&direct) < 1e-12 } else { max_abs(&direct) > 1e-6 };
    }
    Ok((exact_err, printed_entry, printed_norm, zero_set_ok))
}

fn criterion_5() -> Result<Outcome> {
    let (exact_err, printed_entry, printed_norm, zero_set_ok) = commutator_draws(5)?;
    let printed_ok = printed_entry < 1e-12;
    Ok(outcome(
        printed_ok && exact_err < 1e-12 && zero_set_ok,
        format!(
            "product form 6y(n×â)·S(â·S) differs entrywise by up to {printed_entry:.3e} (Frobenius {printed_norm:.3e}); \
             exact form 3iy{{(n×â)·S, â·S}} matches to {exact_err:.1e}; zero iff n=±â: {zero_set_ok}"
        ),
    ))
}

fn criterion_6() -> Result<Outcome> {
    let mut rng = StdRng::seed_from_u64(6);
    let (mut residual, mut projector): (f64, f64) = (0.0, 0.0);
    for twice in [2u32, 4] {
        let spin = l_spin(twice);
        let ops = HapperOperators::new(spin);
        let margin = closed_form_margin(spin);
        for draw in 0..100 {
            // Residuals use the printed vectors anywhere off the poles; spans
            // need Gram–Schmidt, which the vectors only admit away from them.
            let span_check = draw >= 50;
            let theta = if span_check { rng.gen_range(margin..PI - margin) } else { rng.gen_range(1e-3..PI - 1e-3) };
            let field = FieldDirection::new(theta, rng.gen_range(0.0..TAU));
            let h = ops.hamiltonian(&ModelParams::new(spin, crossing_point(spin)).with_field(field));
            // oracle: the (2L+1)-fold eigenspace from a direct eigensolve
            let es = eigensystem(&h)?;
            let cluster: Vec<usize> = es.clusters(1e-8).into_iter().find(|c| c.len() == spin.dim()).expect("crossing cluster").collect();
            let energy = es.eigenvalues[cluster[0]];
            if span_check {
                let frame = analytic_degenerate_states(spin, field.theta, field.phi)?;
                let f = ComplexMatrix::from_columns(&gram_schmidt(&frame.raw)?);
                projector = projector.max((&f * f.adjoint() - es.projector(&cluster)).norm());
            } else {
                for v in analytic_degenerate_vectors(spin, field.theta, field.phi)? {
                    let r = (&h * &v - &v * Complex64::from(energy)).norm() / (h.norm() * v.norm());
                    residual = residual.max(r);
                }
            }
        }
    }
    Ok(outcome(
        residual < 1e-8 && projector < 1e-8,
        format!("max relative residual {residual:.2e} on 50 points per L, max projector difference {projector:.2e} on 50 points per L"),
    ))
}

fn criterion_7() -> Result<Outcome> {
    let spin = SpinQuantumNumber::ONE;
    let mesh = SphereMesh::equal_area(200)?;
    let radii = [0.5, 1.0, 1.4, 1.6, 2.0, 3.0];
    let xs: Vec<f64> = radii.iter().map(|k| 1.0 / k).collect();
    let clusters = crossing_cluster_positions(spin, &xs)?;

    let mut ok = true;
    let mut notes = Vec::new();
    for (&radius, cluster) in radii.iter().zip(clusters) {
        let src = ProjectedBandFrames::new(spin, radius, cluster, vec![0])?;
        let sets = [vec![0], vec![1], vec![2], vec![0, 1, 2]];
        let all: Vec<f64> = chern_numbers_link_variable(&src, &sets, &mesh)?.iter().map(|c| primary(&c.chern)).collect();
        let (cherns, whole) = (&all[..3], all[3]);
        let expected = if radius > 1.5 { 2.0 } else { 0.0 };
        let sum: f64 = cherns.iter().sum();
        ok &= cherns[0] == expected && sum == 1.0 && whole == 1.0;
        notes.push(format!("|k|={radius}: {cherns:?}"));
    }
    let semimetal: f64 = (0..3)
        .map(|b| Ok(primary(&chern_number_link_variable(&BandFrames::zeeman(spin, vec![b])?, &mesh)?.chern)))
        .sum::<Result<f64>>()?;
    ok &= semimetal == 0.0;
    notes.push(format!("semimetal sum {semimetal}"));
    Ok(outcome(ok, notes.join(", ")))
}

fn criterion_8() -> Result<Outcome> {
    let mesh = SphereMesh::equal_area(200)?;
    let y = 0.001;
    // Exact crossings at the poles (n_B = ±â) sit near x ≈ 0.67 for L = 1, so
    // that window is not sampled.
    let cases: [(u32, &[f64], &[f64], &[usize]); 2] = [
        (2, &[0.5, 0.55, 0.6, 0.64], &[0.7, 0.75, 0.8, 0.85], &[3, 5]),
        (4, &[0.37, 0.39], &[0.41, 0.43], &[5, 6, 8, 9]),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (twice, below, above, jumping) in cases {
        let spin = l_spin(twice);
        let table = |xs: &[f64]| -> Result<Vec<Vec<f64>>> {
            xs.iter()
                .map(|&x| {
                    let cherns = level_cherns(&ModelParams::new(spin, x).with_y(y), &mesh)?;
                    Ok(cherns.iter().map(|c| if c.deviation < 0.02 { primary(c) } else { f64::NAN }).collect())
                })
                .collect()
        };
        let (lo, hi) = (table(below)?, table(above)?);
        for level in 1..=spin.dim() * 3 {
            let i = level - 1;
            let lo_const = lo.iter().all(|r| r[i] == lo[0][i]);
            let hi_const = hi.iter().all(|r| r[i] == hi[0][i]);
            let changes = lo[0][i] != hi[0][i];
            ok &= lo_const && hi_const && changes == jumping.contains(&level);
        }
        notes.push(format!("L={spin}: below {:?} above {:?}", lo[lo.len() - 1], hi[0]));
    }
    Ok(outcome(ok, notes.join("; ")))
}

fn criterion_9() -> Result<Outcome> {
    let mut ok = true;
    let mut worst_levels: f64 = 0.0;
    let p = ModelParams::new(SpinQuantumNumber::ONE, 1.0).with_field(FieldDirection::new(FRAC_PI_6, 0.0));
    let loop_path = latitude_loop(FRAC_PI_6, 256);
    for level in 0..p.dim() {
        let gap = minimum_gap(&p, &DriveProtocol::rotating(FRAC_PI_6, 1.0, 1, 1.0, 0.0)?, level, 400)?;
        let protocol = DriveProtocol::rotating(FRAC_PI_6, 1e-3 * gap, 1, 1.0, 0.0)?;
        let psi0 = instantaneous_eigenstate(&p, &protocol, level)?;
        let traj = propagate(&p, &protocol, &psi0, suggested_steps_per_period(&p, &protocol)?)?;
        let gamma = extract_geometric_phase(&traj, &p, &protocol, level)?;
        let reference = loop_phase(&BandFrames::happer(&p, vec![level])?, &loop_path, 200)?;
        let err = wrap_phase(gamma - reference).abs();
        ok &= err < 1e-2;
        worst_levels = worst_levels.max(err);
    }

    let zeeman = ModelParams::new(SpinQuantumNumber::from_twice(0), 0.0).with_field(FieldDirection::new(FRAC_PI_6, 0.0));
    let protocol = DriveProtocol::rotating(FRAC_PI_6, 2.5e-4, 1, 0.0, 0.0)?;
    let mut worst_zeeman: f64 = 0.0;
    for (level, k) in [(0usize, -1.0), (1, 0.0), (2, 1.0)] {
        let psi0 = instantaneous_eigenstate(&zeeman, &protocol, level)?;
        let traj = propagate(&zeeman, &protocol, &psi0, suggested_steps_per_period(&zeeman, &protocol)?)?;
        let gamma = extract_geometric_phase(&traj, &zeeman, &protocol, level)?;
        let err = wrap_phase(gamma + k * cap_solid_angle(FRAC_PI_6)).abs();
        ok &= err < 1e-3;
        worst_zeeman = worst_zeeman.max(err);
    }
    Ok(outcome(
        ok,
        format!("L=1 levels vs loop phase worst {worst_levels:.2e}, Zeeman vs -kΩ worst {worst_zeeman:.2e}"),
    ))
}

fn criterion_10() -> Result<Outcome> {
    let p = ModelParams::new(SpinQuantumNumber::ONE, 0.62).with_y(0.001).with_field(FieldDirection::new(PI / 3.0, 0.4));
    let scan = landau_zener_scan(&p, LzRamp { x_start: 0.62, x_end: 0.72 }, &[1e-7, 1e-6, 1e-5, 1e-4], 2)?;
    let probs = &scan.probabilities;
    let ok = scan.is_monotone() && probs[0] < 0.05 && probs[3] > 0.95;
    let shown: Vec<String> = probs.iter().map(|v| format!("{v:.3e}")).collect();
    Ok(outcome(ok, format!("P = [{}] at rates 1e-7..1e-4, min gap {:.2e} at x = {:.5}", shown.join(", "), scan.min_gap, scan.x_gap)))
}

#[test]
fn acceptance_criteria() {
    let secs = Duration::from_secs;
    let results = [
        run(1, secs(10), criterion_1),
        run(2, secs(10), criterion_2),
        run(3, secs(300), criterion_3),
        run(4, secs(300), criterion_4),
        run(5, secs(5), criterion_5),
        run(6, secs(10), criterion_6),
        run(7, secs(120), criterion_7),
        run(8, secs(600), criterion_8),
        run(9, secs(120), criterion_9),
        run(10, secs(300), criterion_10),
    ];
    let failed: Vec<usize> = (1..=10).filter(|n| !results[n - 1] && !KNOWN_UNATTAINABLE.contains(n)).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

/// The commutator in product form, compared literally. This cannot pass: the
/// true commutator is `3iy{(n×â)·S, â·S}`, which differs from the product by
/// the factor `i` and by `[(n×â)·S, â·S]`. Run with `--ignored` to see it fail.
#[test]
#[ignore = "product form of the commutator does not hold; see README"]
fn criterion_5_product_form_literal() {
    let (_, printed_entry, _, _) = commutator_draws(5).unwrap();
    assert!(printed_entry < 1e-12, "entrywise modulus mismatch {printed_entry:.3e}");
}

#[test]
fn criterion_5_exact_form_and_zero_set() {
    let (exact_err, _, _, zero_set_ok) = commutator_draws(55).unwrap();
    assert!(exact_err < 1e-12, "{exact_err:.3e}");
    assert!(zero_set_ok);
}
