//! Probe geodesic completeness and watch an incomplete candidate blow up on
//! schedule.
//!
//! The probe integrates a deterministic sweep of seeded geodesics in both
//! parameter directions, classifies terminations, and tracks the drift of
//! the conserved speed g(gamma', gamma'). A flat candidate passes; the
//! exponential-pair candidate 1.8 does not, and the failure is structural:
//! along a null invariant direction with silent fiber the full flow reduces
//! to xi'' = 2A xi'^2, which leaves every compact set at s* = 1/(2A xi'(0)).
//! The example integrates exactly that initial state and compares the
//! observed escape parameter with the prediction.
//!
//!     cargo run --example geodesic_probe

use grhs_lab::candidate::WarpedCandidate;
use grhs_lab::constructor::{gallery, GalleryOverrides};
use grhs_lab::geodesics::{
    completeness_probe, integrate_geodesic, IntegrateOptions, ProbeConfig,
};
use grhs_lab::profile::Profile;

fn flat_candidate() -> Result<WarpedCandidate, Box<dyn std::error::Error>> {
    // Constant profiles on the 1.5 skeleton: a product metric, geodesically
    // complete, every probe run must reach s_max.
    let mut c = gallery("1.5", &GalleryOverrides::default())?;
    c.phi = Profile::constant(1.0);
    c.f = Profile::constant(1.5);
    c.h = Profile::constant(0.0);
    c.u = Profile::constant(0.0);
    Ok(c)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ProbeConfig {
        count: 20,
        s_max: 100.0,
        seed: 1,
        ..Default::default()
    };

    let flat = flat_candidate()?;
    let outcome = completeness_probe(&flat, &cfg)?;
    println!("flat product: {}", outcome.summary);

    let c = gallery(
        "1.8",
        &GalleryOverrides {
            theta_free: true,
            ..Default::default()
        },
    )?;
    let outcome = completeness_probe(&c, &cfg)?;
    println!("entry 1.8:    {}", outcome.summary);
    for run in outcome.runs.iter().take(4) {
        println!(
            "  run {:>2} ({}, s -> {:+}): {} at s = {:+.4e}",
            run.index,
            run.class.as_str(),
            run.direction,
            run.termination.label(),
            run.end_s
        );
    }

    // The escape in slow motion. Null base velocity aligned with the
    // invariant direction, fiber at rest: xi(s) = -ln(1 - 2 xi'(0) s) / 2
    // for A = 1, so the geodesic leaves every compact set as s approaches
    // 1 / (2 xi'(0)) = 0.5. No parameter choice pushes that past s_max; the
    // incompleteness is genuine, not a step-size artifact.
    let xi_dot0 = 1.0;
    let mut state = vec![0.0; 12];
    state[6] = 0.5 * xi_dot0;
    state[7] = 0.5 * xi_dot0;
    let traj = integrate_geodesic(&c, &state, 10.0, &IntegrateOptions::default())?;
    println!(
        "\nnull-direction run: {} at s = {:.6} (predicted escape {:.6})",
        traj.termination.label(),
        traj.end_s(),
        1.0 / (2.0 * xi_dot0)
    );
    println!(
        "conserved-speed drift up to the escape: {:.3e}",
        traj.max_drift()
    );
    Ok(())
}
