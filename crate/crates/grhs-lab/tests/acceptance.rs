//! Nine release gates, one test per criterion. Each prints a single
//! `criterion N: PASS/FAIL` line with the measured numbers before asserting,
//! so a red run still reports every measurement.
//!
//! Criterion 7 is expected red: the catalog completeness argument for the
//! null-rate exponential pair integrates a reduced system that drops the
//! conformal Christoffel terms of both factors. The actual geodesic flow
//! satisfies xi'' = 2A xi'^2 along the invariant direction, which blows up
//! in finite parameter for one sign of xi', so seeded probes terminate
//! early. The reduced system's own claims (fiber closed forms, the |y1''|
//! bound) are verified here and do hold.

use std::time::Instant;

use grhs_lab::candidate::WarpedCandidate;
use grhs_lab::constructor::{
    case2_residuals, construct_case2, construct_case3_constant_z,
    construct_case3_variable_z, gallery, CaseParams, GalleryOverrides, ZMode,
};
use grhs_lab::curvature::ricci_oracle_error;
use grhs_lab::geodesics::{
    completeness_probe, geodesic_rhs, integrate_geodesic, seeded_states, FlowKind,
    IntegrateOptions, ProbeConfig,
};
use grhs_lab::profile::{affine, Profile};
use grhs_lab::sampling::{oracle_candidate, oracle_points};
use grhs_lab::soliton::{
    reduced_residuals_base, reduced_residuals_fiber, verify, AxisSpec, GridSpec,
};
use grhs_lab::zflow::ZConvention;

fn grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

fn theta_free() -> GalleryOverrides {
    GalleryOverrides {
        theta_free: true,
        ..GalleryOverrides::default()
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

#[test]
fn criterion_1_exponential_pair_reproduction() {
    let c = gallery("1.5", &GalleryOverrides::default()).unwrap();
    let r = verify(&c, &GridSpec::new(AxisSpec::new(-5.0, 5.0, 101), None), 1e-10)
        .unwrap();
    let sup_of = |prefix: &str| -> f64 {
        r.equations
            .iter()
            .zip(&r.sup_residuals)
            .filter(|(e, _)| e.starts_with(prefix))
            .map(|(_, &s)| s)
            .fold(0.0, f64::max)
    };
    let reduced = sup_of("E");
    let assembled = sup_of("grhs.").max(r.sup("harmonic").unwrap());
    let ok = reduced <= 1e-10 && assembled <= 1e-10;
    println!(
        "criterion 1: {} - reduced-system sup {reduced:.2e}, assembled-tensor sup \
         {assembled:.2e} (both <= 1e-10 on 101 points of [-5, 5])",
        verdict(ok)
    );
    assert!(ok, "reduced {reduced:e}, assembled {assembled:e}");
}

#[test]
fn criterion_2_curvature_oracle_equivalence() {
    let mut targets = vec![("gallery 1.5".to_string(),
        gallery("1.5", &GalleryOverrides::default()).unwrap())];
    for seed in 0..3u64 {
        targets.push((format!("random candidate {seed}"), oracle_candidate(seed)));
    }
    let mut worst_err = 0.0f64;
    let mut ratios = Vec::new();
    let mut ok = true;
    for (name, c) in &targets {
        let points = oracle_points(c, 7, 5);
        let coarse = ricci_oracle_error(c, &points, 1e-3).unwrap();
        let fine = ricci_oracle_error(c, &points, 5e-4).unwrap();
        let blockwise = coarse.base.max(coarse.mixed).max(coarse.fiber);
        let ratio = coarse.overall() / fine.overall();
        worst_err = worst_err.max(blockwise);
        ratios.push(ratio);
        if blockwise > 1e-5 || !(3.0..=5.0).contains(&ratio) {
            ok = false;
            println!("  {name}: blockwise {blockwise:.2e}, ratio {ratio:.2}");
        }
    }
    println!(
        "criterion 2: {} - worst blockwise error {worst_err:.2e} (<= 1e-5 at step \
         1e-3), halving ratios {:?} (in [3, 5])",
        verdict(ok),
        ratios.iter().map(|r| (r * 100.0).round() / 100.0).collect::<Vec<_>>()
    );
    assert!(ok);
}

#[test]
fn criterion_3_power_law_fiber_closed_forms() {
    let mut worst = 0.0f64;
    for m in [3usize, 4, 5] {
        for theta in [1.0, 2.0] {
            let mut p = CaseParams::for_case(2).unwrap();
            p.m = m;
            p.theta = theta;
            let c = construct_case2(&p).unwrap();
            let lo = -1.0 / (m as f64 - 2.0) + 0.1;
            for z in grid(lo, lo + 10.0, 101) {
                for v in case2_residuals(&c, z).unwrap() {
                    worst = worst.max(v.abs());
                }
            }
        }
    }
    let ok = worst <= 1e-10;
    println!(
        "criterion 3: {} - sup residual {worst:.2e} over m in {{3,4,5}}, theta in \
         {{1,2}}, 101 points past the fiber half-space edge (<= 1e-10)",
        verdict(ok)
    );
    assert!(ok, "sup {worst:e}");
}

#[test]
fn criterion_4_constant_rate_family_reproduction() {
    // Defaults: n = 2, m = 3, k = 1, plus branch, b = 1, c4 = c5 = 1.
    let p = CaseParams::for_case(3).unwrap();
    let c = construct_case3_constant_z(&p).unwrap();
    let (b, c4, c5) = (p.b, p.c[3], p.c[4]);
    let window = grid(-b + 0.1, -b + 10.0, 101);

    let mut form_err = 0.0f64;
    for &xi in &window {
        let s = xi + b;
        form_err = form_err.max((c.phi.eval(xi).unwrap().v - c5 / s).abs());
        form_err = form_err.max((c.f.eval(xi).unwrap().v - c4 / s).abs());
        form_err = form_err.max((c.h.eval(xi).unwrap().v + 4.0 * s.ln()).abs());
    }

    let mut sup = 0.0f64;
    for &xi in &window {
        let r = reduced_residuals_fiber(&c, xi, 0.2).unwrap();
        for v in &r[..3] {
            sup = sup.max(v.abs());
        }
    }
    let ok = form_err <= 1e-12 && sup <= 1e-10;
    println!(
        "criterion 4: {} - printed profile deviation {form_err:.2e}, first three \
         equations sup {sup:.2e} on (-b+0.1, -b+10) (<= 1e-10)",
        verdict(ok)
    );
    assert!(ok, "forms {form_err:e}, sup {sup:e}");
}

#[test]
fn criterion_5_flowing_rate_pipeline() {
    let mut p = CaseParams::for_case(3).unwrap();
    p.z_mode = ZMode::Variable {
        z0: 2.0,
        c6: 0.1,
        span: 5.0,
        convention: ZConvention::Consistent,
    };
    let c = construct_case3_variable_z(&p).unwrap();
    let (mut lo, mut hi) = c.phi.domain();
    for prof in [&c.f, &c.h] {
        let (a, b) = prof.domain();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    let pad = 0.02 * (hi - lo);
    let mut sup = 0.0f64;
    for xi in grid(lo + pad, hi - pad, 101) {
        let r = reduced_residuals_fiber(&c, xi, 0.2).unwrap();
        for v in &r[..3] {
            sup = sup.max(v.abs());
        }
    }
    let ok = sup <= 1e-6;
    println!(
        "criterion 5: {} - base-equation sup {sup:.2e} over the integrated span \
         [{lo:.2}, {hi:.2}] (<= 1e-6)",
        verdict(ok)
    );
    assert!(ok, "sup {sup:e}");
}

#[test]
fn criterion_6_coupling_defect_detection() {
    let printed = gallery("1.8", &GalleryOverrides::default()).unwrap();
    let rp = verify(&printed, &GridSpec::default_for(&printed), 1e-8).unwrap();
    let defect = rp.sup("E1.fiber").unwrap();
    let isolated = (defect - 1.0).abs() <= 0.01 && !rp.passed;

    let free = gallery("1.8", &theta_free()).unwrap();
    let rf = verify(&free, &GridSpec::default_for(&free), 1e-8).unwrap();

    let ok = isolated && rf.passed;
    println!(
        "criterion 6: {} - printed variant E1 sup {defect:.6} (want theta A^2 = 1 \
         within 1%), theta-free variant passes at 1e-8: {}",
        verdict(ok),
        rf.passed
    );
    assert!(ok, "defect {defect}, theta-free passed {}", rf.passed);
}

/// Fiber closed form of the reduced system for constant xi-rate c1: linear
/// when c1 = 0, saturating exponential otherwise.
fn reduced_fiber_closed_form(y0: f64, w0: f64, two_a_c1: f64, s: f64) -> f64 {
    if two_a_c1 == 0.0 {
        y0 + w0 * s
    } else {
        y0 + w0 * (1.0 - (-two_a_c1 * s).exp()) / two_a_c1
    }
}

#[test]
fn criterion_7_completeness_probe() {
    let started = Instant::now();
    let c = gallery("1.8", &theta_free()).unwrap();
    let (n, m) = (c.n(), c.m());
    let dim = n + m;

    // |c10,1| = k^4 |A| |g2(w(0), w(0))| e^{4A xi(0)} with k = A = 1.
    let bound_for = |state: &[f64]| -> f64 {
        let xi0 = state[0] + state[1];
        let eta_f: f64 = -state[dim + n].powi(2)
            + state[dim + n + 1].powi(2)
            + state[dim + n + 2].powi(2);
        eta_f.abs() * (4.0 * xi0).exp()
    };

    // (a) 50 seeded geodesics of the actual flow to |s| = 1e3.
    let cfg = ProbeConfig {
        count: 50,
        s_max: 1e3,
        seed: 0,
        ..ProbeConfig::default()
    };
    let outcome = completeness_probe(&c, &cfg).unwrap();
    let zero_early = outcome.early_terminations == 0;

    // (b) conserved-speed drift on the runs that did reach s_max.
    let completed_drift = outcome
        .runs
        .iter()
        .filter(|r| r.termination.is_complete())
        .map(|r| r.max_drift)
        .fold(0.0f64, f64::max);
    let completed = outcome
        .runs
        .iter()
        .filter(|r| r.termination.is_complete())
        .count();
    let drift_ok = completed_drift <= 1e-6;

    // (d, actual flow) the catalog bound |y1''| < |c10,1| checked at every
    // sample of every probe trajectory.
    let mut bound_true = true;
    let states = seeded_states(&c, &cfg).unwrap();
    for (_, state) in &states {
        let bound = bound_for(state);
        for dir in [1.0, -1.0] {
            let traj =
                integrate_geodesic(&c, state, dir * cfg.s_max, &cfg.options).unwrap();
            for sample in &traj.states {
                let acc = geodesic_rhs(&c, FlowKind::Full, sample).unwrap();
                if !(acc[dim].abs() < bound) {
                    bound_true = false;
                }
            }
        }
    }

    // (c) fiber closed forms of the reduced system, matched at 1e-8 over
    // |s| <= 1e3, one run with c1 = 0 and one with c1 != 0; (d, reduced
    // system) the same |y1''| bound along those trajectories, where the
    // argument that derives it actually applies.
    let opts = IntegrateOptions {
        rtol: 1e-12,
        atol: 1e-14,
        flow: FlowKind::WarpForcing,
        ..IntegrateOptions::default()
    };
    let mut forms_err = 0.0f64;
    let mut bound_reduced = true;
    for c1 in [0.0, 5e-4] {
        let state = [
            0.05, -0.05, 0.1, 0.1, 0.3, -0.2, // positions: xi(0) = 0, zeta(0) = 0.4
            0.35 + c1, -0.35, 0.2, // base velocities: xi'(0) = c1
            0.02, -0.02, 0.03, // fiber velocities: zeta'(0) = 0
        ];
        let bound = bound_for(&state);
        let two_a_c1 = 2.0 * c1;
        for dir in [1.0, -1.0] {
            let traj = integrate_geodesic(&c, &state, dir * 1e3, &opts).unwrap();
            assert!(
                traj.termination.is_complete(),
                "reduced flow should reach s = {} but stopped: {:?}",
                dir * 1e3,
                traj.termination
            );
            for (s, sample) in traj.ss.iter().zip(&traj.states) {
                for a in 0..m {
                    let closed = reduced_fiber_closed_form(
                        state[n + a],
                        state[dim + n + a],
                        two_a_c1,
                        *s,
                    );
                    forms_err = forms_err.max((sample[n + a] - closed).abs());
                }
                let acc = geodesic_rhs(&c, FlowKind::WarpForcing, sample).unwrap();
                if !(acc[dim].abs() < bound) {
                    bound_reduced = false;
                }
            }
        }
    }
    let forms_ok = forms_err <= 1e-8;

    // (e) runtime budget.
    let elapsed = started.elapsed().as_secs_f64();
    let time_ok = elapsed < 60.0;

    let ok = zero_early && drift_ok && forms_ok && bound_true && time_ok;
    println!(
        "criterion 7: {} - early terminations {}/{} (want 0; the actual flow obeys \
         xi'' = 2A xi'^2 along the null invariant direction and blows up at \
         s* = 1/(2A xi'(0)) whenever the sign matches, so the incompleteness is \
         genuine), drift on the {completed} completed runs {completed_drift:.2e} \
         (<= 1e-6: {drift_ok}), fiber closed forms matched to {forms_err:.2e} \
         (<= 1e-8: {forms_ok}), |y1''| < |c10,1| on actual-flow samples: \
         {bound_true} (holds on the reduced system it was derived for: \
         {bound_reduced}), runtime {elapsed:.1}s (< 60)",
        verdict(ok),
        outcome.early_terminations,
        outcome.runs.len(),
    );
    assert!(bound_reduced, "the reduced-system bound must hold");
    assert!(
        ok,
        "early {} drift {completed_drift:e} forms {forms_err:e} bound {bound_true} \
         time {elapsed:.1}s",
        outcome.early_terminations
    );
}

#[test]
fn criterion_8_degeneracy_suite() {
    // All-constant profiles with lambda = 0: every residual is a product of
    // vanishing derivative jets, so the sups must be exactly zero, both for
    // a base-placed candidate without tau and a fiber-placed one with tau.
    let mut flat_base = gallery("1.5", &GalleryOverrides::default()).unwrap();
    flat_base.phi = Profile::constant(2.0);
    flat_base.f = Profile::constant(1.5);
    flat_base.h = Profile::constant(0.7);
    flat_base.u = Profile::constant(-0.3);
    flat_base.validate().unwrap();
    let rb = verify(&flat_base, &GridSpec::default_for(&flat_base), 1e-300).unwrap();

    let mut flat_fiber = gallery("1.8", &theta_free()).unwrap();
    flat_fiber.phi = Profile::constant(0.8);
    flat_fiber.f = Profile::constant(2.5);
    flat_fiber.tau = Some(Profile::constant(1.2));
    flat_fiber.h = Profile::constant(-0.4);
    flat_fiber.u = Profile::constant(0.6);
    flat_fiber.mu = 0.0;
    flat_fiber.validate().unwrap();
    let rf = verify(&flat_fiber, &GridSpec::default_for(&flat_fiber), 1e-300).unwrap();

    let flat_zero = rb.sup_residuals.iter().chain(&rf.sup_residuals).all(|&s| s == 0.0);

    // Null base direction with lambda = mu = 0 zeroes the second through
    // fourth base equations identically, whatever the profiles do: each is
    // a finite bracket times ||alpha||^2 = 0. Checked bitwise on the catalog
    // profiles and on a deliberately unrelated pair.
    let mut wild = gallery("1.5", &GalleryOverrides::default()).unwrap();
    wild.h = Profile::new(affine(0.7, 0.3).exp() + affine(1.3, 0.0));
    wild.u = Profile::new(affine(-0.4, 0.2).exp() * 0.5 + affine(0.9, 0.1));
    wild.validate().unwrap();
    let mut structural_zero = true;
    for c in [&flat_base, &wild] {
        for xi in grid(-3.0, 3.0, 13) {
            let r = reduced_residuals_base(c, xi).unwrap();
            if r[1] != 0.0 || r[2] != 0.0 || r[3] != 0.0 {
                structural_zero = false;
            }
        }
    }

    let ok = flat_zero && structural_zero;
    println!(
        "criterion 8: {} - all-constant candidates give bitwise-zero sups: \
         {flat_zero}; null direction zeroes equations two through four bitwise \
         for arbitrary profiles: {structural_zero}",
        verdict(ok)
    );
    assert!(ok);
}

#[test]
fn criterion_9_single_coefficient_sensitivity() {
    let baseline = gallery("1.5", &GalleryOverrides::default()).unwrap();
    let grid_spec = GridSpec::new(AxisSpec::new(-5.0, 5.0, 101), None);
    let base_report = verify(&baseline, &grid_spec, 1e-5).unwrap();
    assert!(base_report.passed, "baseline must pass before perturbing");

    // One coefficient each: the conformal rates (their overall scale drops
    // out of every log-derivative, so the rate is the coefficient that
    // matters), the linear coefficient of h, and the slope of u.
    let bump = 1.0 + 1e-3;
    let perturbed: Vec<(&str, WarpedCandidate)> = vec![
        ("phi rate", {
            let mut c = baseline.clone();
            c.phi = Profile::new(affine(bump, 0.0).exp());
            c
        }),
        ("f rate", {
            let mut c = baseline.clone();
            c.f = Profile::new(affine(bump, 0.0).exp());
            c
        }),
        ("h linear coefficient", {
            let mut c = baseline.clone();
            c.h = Profile::new(affine(3.0 * bump, 0.0) + affine(-2.0, 0.0).exp() * -0.5);
            c
        }),
        ("u slope", {
            let mut c = baseline.clone();
            c.u = Profile::new(affine(bump, 0.0));
            c
        }),
    ];

    let mut ok = true;
    let mut weakest = f64::INFINITY;
    for (what, c) in &perturbed {
        c.validate().unwrap();
        let r = verify(c, &grid_spec, 1e-5).unwrap();
        let worst = r.sup_residuals.iter().copied().fold(0.0f64, f64::max);
        weakest = weakest.min(worst);
        if r.passed {
            ok = false;
            println!("  {what}: perturbation went undetected (max sup {worst:.2e})");
        }
    }
    println!(
        "criterion 9: {} - every single-coefficient 1e-3 perturbation trips at \
         least one sup above 1e-5 (weakest response {weakest:.2e})",
        verdict(ok)
    );
    assert!(ok);
}
