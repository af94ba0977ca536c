//! Profiles: expression trees with exact jets.
//!
//! Everything the library computes flows through one-variable profiles
//! carrying value, first and second derivative. Derivatives come from
//! structural differentiation, never finite differences; antiderivative
//! nodes get their value from cached adaptive quadrature and their
//! derivatives from the integrand. Profiles serialize to a small JSON
//! schema and round-trip exactly.
//!
//!     cargo run --example profile_playground

use grhs_lab::profile::{affine, constant, from_value, to_value, var, Profile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // (1 + xi^2)^{-1} and friends.
    let p = Profile::new((var() * var() + constant(1.0)).pow(-1.0));
    let j = p.eval(2.0)?;
    println!("p = 1/(1+t^2):  p(2) = {:.6}, p'(2) = {:.6}, p''(2) = {:.6}", j.v, j.d1, j.d2);

    // Domains narrow automatically where the tree demands positivity.
    let q = Profile::new(affine(1.0, -3.0).log());
    println!("log(t - 3) domain: {:?}", q.domain());

    // The antiderivative of 1/(1+t^2) anchored at 0 is arctan. The node
    // integrates adaptively behind a checkpoint cache, so sweeping it is
    // cheap and the values match the closed form to quadrature tolerance.
    let arctan = Profile::new(
        (var() * var() + constant(1.0))
            .pow(-1.0)
            .antiderivative(0.0),
    );
    let mut worst = 0.0f64;
    for i in 0..=100 {
        let t = -4.0 + 0.08 * i as f64;
        worst = worst.max((arctan.value(t)? - t.atan()).abs());
    }
    println!("max |antiderivative - atan| on [-4, 4]: {worst:.3e}");

    // Structural differentiation inverts the node exactly.
    let d = arctan.differentiate()?;
    println!("(d/dt antiderivative)(1) = {:.12} (exact 0.5)", d.value(1.0)?);

    // profile-v1 round trip preserves jets bit for bit for closed-form trees.
    let v = to_value(&p)?;
    let back = from_value(&v)?;
    let a = p.eval(-1.3)?;
    let b = back.eval(-1.3)?;
    println!(
        "round trip through {} bytes of JSON: jets {}",
        v.to_string().len(),
        if (a.v, a.d1, a.d2) == (b.v, b.d1, b.d2) { "identical" } else { "DIFFER" }
    );
    Ok(())
}
