//! The closed-form solution families, constructed and verified.
//!
//! When the invariant directions have unit pseudo-norm the soliton system
//! collapses to constant-coefficient ODEs and the profiles are power laws,
//! logarithms, or exponentials with pinned exponents. This example builds
//! the three families that need no numerical integration at all and checks
//! their residuals on the windows the constructor vouches for.
//!
//!     cargo run --example closed_form_families

use grhs_lab::constructor::{
    case2_residuals, construct, construct_grid, Branch, CaseParams, ZMode,
};
use grhs_lab::soliton::verify;

fn show(label: &str, params: &CaseParams) -> Result<(), Box<dyn std::error::Error>> {
    let c = construct(params)?;
    let report = verify(&c, &construct_grid(&c), 1e-6)?;
    let worst = report
        .sup_residuals
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    println!(
        "{label}: n = {}, m = {}, ||alpha||^2 = {}, ||beta||^2 = {:?}",
        c.n(),
        c.m(),
        c.alpha_norm_sq(),
        c.beta_norm_sq()
    );
    println!(
        "  phi domain {:?}, tau domain {:?}",
        c.phi.domain(),
        c.tau.as_ref().map(|t| t.domain())
    );
    println!(
        "  worst residual {worst:.3e} over {} equations: {}",
        report.equations.len(),
        if report.passed { "pass" } else { "FAIL" }
    );
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // Null base, unit fiber: the base data is free, the fiber pair
    // tau = c2 (c1 + (m-2) zeta)^{1/(2-m)}, u logarithmic, solves its three
    // equations identically in zeta.
    let case2 = CaseParams::for_case(2)?;
    show("case 2", &case2)?;
    let c = construct(&case2)?;
    for zeta in [-0.3, 0.0, 1.7, 4.0] {
        let r = case2_residuals(&c, zeta)?;
        println!(
            "    fiber identities at zeta = {zeta:>4}: {:.1e} {:.1e} {:.1e}",
            r[0].abs(),
            r[1].abs(),
            r[2].abs()
        );
    }

    // Unit base, null fiber, constant conformal rate: power laws
    // phi = c4 (nn xi + b)^{-k/nn}, f = c5 (...)^{-1/nn} with
    // nn = -k +/- sqrt(m + k^2 (n-1)). Both branches solve the system; they
    // differ in the domain pole and the decay rates.
    for branch in [Branch::Plus, Branch::Minus] {
        let mut p = CaseParams::for_case(3)?;
        p.z_mode = ZMode::Constant { branch };
        show(&format!("case 3, {} branch", branch.as_str()), &p)?;
    }

    // Unit base and unit fiber: everything is pinned at once.
    show("case 4", &CaseParams::for_case(4)?)?;
    Ok(())
}
