//! End-to-end acceptance checks. Each test prints one PASS/FAIL line with the
//! measured numbers, written past the harness capture so it always shows.

use std::io::Write;
use std::time::Instant;

use jc_pcs::ensemble::{build_mask_distribution, delta_distribution, MaskSpec};
use jc_pcs::floquet::{min_eigenvalue, solve_liouvillian, time_integrate_oracle, FloquetOptions, OracleOptions};
use jc_pcs::liouvillian::{AblationSpec, Liouvillian, PhysicalParams};
use jc_pcs::operators::{
    build_annihilation, build_dressed_basis, build_jc_hamiltonian, off_diagonal_norm, Atom, SystemDims,
};
use jc_pcs::par::Execution;
use jc_pcs::spectroscopy::{
    ablation_preset, calibrate_cutoff, locate_peak, scan_observable, two_photon_rate, uniform_grid, Observable,
    ScanOptions, Spectrum, RESONANCE_1M_2P,
};
use jc_pcs::vee::{vee_scan_peak, vee_variant_scan, VeeParams, VeeVariant};
use rand::{Rng, SeedableRng};

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "criterion {id} [{verdict}] {title}: {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {id} ({title}) failed: {detail}");
}

fn peak_shift(spec: &Spectrum, search: (f64, f64)) -> f64 {
    locate_peak(spec, RESONANCE_1M_2P, search).unwrap().location
}

#[test]
fn criterion_1_single_coupling_recentering() {
    let p = PhysicalParams::reference_point();
    let dist = delta_distribution(9.0).unwrap();
    let grid: Vec<f64> = (0..200).map(|k| 2.2 + 0.002 * k as f64).collect();
    let opts = ScanOptions::default();
    let start = Instant::now();
    let plain = scan_observable(&p, &dist, &grid, &AblationSpec::none(), Observable::W2, &opts).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let ablated =
        scan_observable(&p, &dist, &grid, &ablation_preset("no-1m-2m").unwrap(), Observable::W2, &opts).unwrap();
    let search = (2.25, 2.58);
    let (s0, s1) = (peak_shift(&plain, search), peak_shift(&ablated, search));
    let pass = s0 < 0.0 && s1.abs() < 0.005 && elapsed < 10.0;
    report(
        1,
        "single-coupling recentering",
        pass,
        &format!(
            "shift {s0:+.5} without ablation, {s1:+.5} with (|.| < 0.005), 200-point scan {elapsed:.2} s (< 10 s)"
        ),
    );
}

#[test]
fn criterion_2_ablation_ladder() {
    let p = PhysicalParams::reference_point();
    let grid = uniform_grid(2.1, 2.55, 0.01).unwrap();
    let search = (2.1, 2.55);
    let opts = ScanOptions::default();
    let shift_at = |cutoff: f64, preset: &str| -> jc_pcs::Result<f64> {
        let dist = build_mask_distribution(&MaskSpec::default().with_cutoff(cutoff))?;
        let spec = scan_observable(&p, &dist, &grid, &ablation_preset(preset)?, Observable::W2, &opts)?;
        Ok(locate_peak(&spec, RESONANCE_1M_2P, search)?.location)
    };
    let targets = [-0.141, -0.094, -0.057, -0.018];
    let cal = calibrate_cutoff(targets[0], (0.74, 0.99), 0.002, 8, |f| shift_at(f, "none")).unwrap();
    let presets = ["no-1m-2m", "no-1m-2m+no-1m-linewidth", "combined-all"];
    let mut shifts = vec![cal.shift];
    shifts.extend(presets.iter().map(|name| shift_at(cal.cutoff, name).unwrap()));

    let rungs_ok: Vec<bool> = shifts.iter().zip(&targets).map(|(s, t)| (s - t).abs() <= 0.02).collect();
    let ordered = shifts.windows(2).all(|w| w[0].abs() > w[1].abs());
    let recovered = 1.0 - shifts[3] / shifts[0];
    let fraction_ok = (recovered - (1.0 - 0.018 / 0.141)).abs() <= 0.10;
    let pass = rungs_ok.iter().all(|&b| b) && ordered && fraction_ok;
    let ladder: Vec<String> = shifts
        .iter()
        .zip(&targets)
        .zip(&rungs_ok)
        .map(|((s, t), ok)| format!("{s:+.4} (want {t:+.3}{})", if *ok { "" } else { ", off" }))
        .collect();
    report(
        2,
        "ablation ladder",
        pass,
        &format!(
            "cutoff {:.4} after {} bisection steps; ladder {}; monotone {ordered}; recovered {:.0}% (want 87 +/- 10)",
            cal.cutoff,
            cal.iterations,
            ladder.join(" -> "),
            100.0 * recovered
        ),
    );
}

#[test]
fn criterion_3_three_level_closed_form() {
    let p = VeeParams::reference_point();
    let fine = uniform_grid(0.8, 1.2, 0.002).unwrap();
    let jump_free =
        vee_scan_peak(&vee_variant_scan(&p, &fine, VeeVariant::JumpFree, Execution::Parallel).unwrap()).unwrap();
    let closed_form = -0.012423;
    let rel = ((jump_free.location - closed_form) / closed_form).abs();

    let weak = VeeParams { e: 0.01, ..p };
    let weak_peak =
        vee_scan_peak(&vee_variant_scan(&weak, &fine, VeeVariant::JumpFree, Execution::Parallel).unwrap()).unwrap();
    let weak_expected = (1.0 - 1.0 / (p.g * p.g)).sqrt() - 1.0;
    let weak_err = (weak_peak.location - weak_expected).abs();

    let ablated = vee_variant_scan(&p, &fine, VeeVariant::Ablated, Execution::Parallel).unwrap();
    let ablated_peak = vee_scan_peak(&ablated).unwrap();
    let mut mirrored = Vec::new();
    for k in (1..=20).rev() {
        mirrored.push(1.0 - 0.01 * k as f64);
    }
    mirrored.extend((1..=20).map(|k| 1.0 + 0.01 * k as f64));
    let sym = vee_variant_scan(&p, &mirrored, VeeVariant::Ablated, Execution::Parallel).unwrap();
    let v = sym.values();
    let asym = (0..20).map(|k| (v[19 - k] - v[20 + k]).abs()).fold(0.0, f64::max);

    let pass = rel < 0.25 && weak_err < 1e-4 && ablated_peak.location.abs() < 0.002 && asym < 1e-10;
    report(
        3,
        "three-level closed form",
        pass,
        &format!(
            "jump-free shift {:+.6} vs {closed_form} ({:.2}% off, < 25%); weak drive {:+.6} vs {weak_expected:+.6} (err {weak_err:.1e} < 1e-4); ablated peak {:+.1e} (< 0.002), mirror asymmetry {asym:.1e} (< 1e-10)",
            jump_free.location,
            100.0 * rel,
            weak_peak.location,
            ablated_peak.location
        ),
    );
}

#[test]
fn criterion_4_incoherent_pathways_widen_shift() {
    let p = VeeParams::reference_point();
    let fine = uniform_grid(0.8, 1.2, 0.002).unwrap();
    let shift =
        |variant| vee_scan_peak(&vee_variant_scan(&p, &fine, variant, Execution::Parallel).unwrap()).unwrap().location;
    let (full, jump_free) = (shift(VeeVariant::Full), shift(VeeVariant::JumpFree));
    report(
        4,
        "jump term contribution",
        full.abs() > jump_free.abs(),
        &format!("with jumps {full:+.6}, jump-free {jump_free:+.6}"),
    );
}

#[test]
fn criterion_5_floquet_matches_time_integration() {
    let dims = SystemDims::new(2).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x0f10);
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for k in 0..20 {
        let p = PhysicalParams {
            g: rng.gen_range(6.0..11.0),
            g_f: 9.0,
            gamma: rng.gen_range(0.5..3.0),
            e1: rng.gen_range(0.2..1.0),
            e2: rng.gen_range(0.5..1.5),
            delta: 0.0,
        }
        .with_delta_tilde(rng.gen_range(1.5..3.0));
        let m_max = if k % 2 == 0 { 2 } else { 3 };
        let l = Liouvillian::assemble(&p.model(), &dims, &AblationSpec::none()).unwrap();
        let sol = solve_liouvillian(&l, p.delta, &FloquetOptions::default().with_m_max(m_max)).unwrap();
        let oracle =
            time_integrate_oracle(&l.static_part, &l.scan_plus, &l.scan_minus, p.delta, &OracleOptions::default())
                .unwrap();
        let (a, b) = (two_photon_rate(sol.rho0(), &dims), two_photon_rate(&oracle.mean_state, &dims));
        worst = worst.max(((a - b) / b).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    report(
        5,
        "harmonic solver vs direct integration",
        worst < 0.01 && elapsed < 60.0,
        &format!("worst relative w2 difference {worst:.2e} over 20 points (< 1e-2), {elapsed:.1} s (< 60 s)"),
    );
}

#[test]
fn criterion_6_structural_invariants() {
    let start = Instant::now();
    let dims = SystemDims::new(3).unwrap();
    let p = PhysicalParams::reference_point();

    let (mut reality, mut trace, mut floor, mut annihilation) = (0.0f64, 0.0f64, f64::INFINITY, 0.0f64);
    for dt in [-0.4, 0.0, 0.4, 2.4, 2.41, 3.0] {
        let q = p.with_delta_tilde(dt);
        let l = Liouvillian::assemble(&q.model(), &dims, &AblationSpec::none()).unwrap();
        let sol = solve_liouvillian(&l, q.delta, &FloquetOptions::default()).unwrap();
        reality = reality.max(sol.reality_defect());
        trace = trace.max(sol.trace_defect());
        floor = floor.min(min_eigenvalue(sol.rho0()));
        for t in [0.0, 0.13, 1.7] {
            annihilation = annihilation.max(l.at_time(q.delta, t).trace_defect());
        }
    }

    let mut diag: f64 = 0.0;
    for g in [0.5, 3.0, 9.0, 15.0] {
        let h = build_jc_hamiltonian(g, 0.0, &dims);
        let basis = build_dressed_basis(g, 0.0, &dims).unwrap();
        diag = diag.max(off_diagonal_norm(&basis.to_dressed(&h)));
    }

    let a = build_annihilation(&dims);
    let lowered = &a * dims.ket(2, Atom::Ground);
    let expected = dims.ket(1, Atom::Ground) * jc_pcs::C64::new(2f64.sqrt(), 0.0);
    let ladder_exact = lowered == expected;

    let quiet = PhysicalParams { e1: 0.0, ..p };
    let grid = uniform_grid(-1.0, 3.0, 0.25).unwrap();
    let sub = scan_observable(
        &quiet,
        &delta_distribution(9.0).unwrap(),
        &grid,
        &AblationSpec::none(),
        Observable::Delta2,
        &ScanOptions::default(),
    )
    .unwrap();
    let sub_max = sub.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));

    let elapsed = start.elapsed().as_secs_f64();
    let pass = reality <= 1e-10
        && trace <= 1e-10
        && floor >= -1e-8
        && diag <= 1e-12
        && ladder_exact
        && annihilation <= 1e-10
        && sub_max == 0.0
        && elapsed < 30.0;
    report(
        6,
        "structural invariants",
        pass,
        &format!(
            "conjugate symmetry {reality:.1e}, trace {trace:.1e}, min eigenvalue {floor:.1e}, dressed off-diagonal {diag:.1e}, a|2> exact {ladder_exact}, trace annihilation {annihilation:.1e}, subtraction at zero fixed drive {sub_max:.1e}, {elapsed:.1} s"
        ),
    );
}

#[test]
fn criterion_7_background_subtraction_is_local() {
    let p = PhysicalParams::reference_point();
    let dist = build_mask_distribution(&MaskSpec::default()).unwrap();
    let grid = jc_pcs::spectroscopy::merge_grids(&[
        uniform_grid(-1.0, 1.0, 0.025).unwrap(),
        uniform_grid(2.2, 2.6, 0.025).unwrap(),
    ]);
    let opts = ScanOptions::default();
    let ab = AblationSpec::none();
    let w2 = scan_observable(&p, &dist, &grid, &ab, Observable::W2, &opts).unwrap();
    let d2 = scan_observable(&p, &dist, &grid, &ab, Observable::Delta2, &opts).unwrap();
    let diff = Spectrum::new(Observable::Delta2, w2.difference(&d2).unwrap(), Vec::new()).unwrap();
    let (near, homogeneous) = (diff.integrate_abs(2.2, 2.6), diff.integrate_abs(-1.0, 1.0));
    let ratio = near / homogeneous;
    report(
        7,
        "background subtraction locality",
        ratio < 0.10,
        &format!("integral of |w2 - subtracted| near the peak {near:.3e}, homogeneous region {homogeneous:.3e}, ratio {ratio:.2e} (< 0.1)"),
    );
}
