//! Check the closed-form Ricci blocks against a route that shares no formula
//! with them.
//!
//! The library assembles Ricci tensors of warped products from profile jets.
//! The oracle instead builds the metric as a plain diagonal field in the
//! product chart and differentiates Christoffel symbols by central
//! differences. Agreement is certified by step halving: the finite-difference
//! truncation error is second order, so halving the step must shrink the gap
//! by a factor close to four. A ratio near one would mean the two routes
//! disagree by more than truncation, i.e. a real bug in one of them.
//!
//!     cargo run --example curvature_oracle

use grhs_lab::curvature::ricci_oracle_error;
use grhs_lab::sampling::{oracle_candidate, oracle_points};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("seed   step      base       mixed      fiber      ratio");
    for seed in 0..4u64 {
        let c = oracle_candidate(seed);
        let points = oracle_points(&c, 7, 5);
        let coarse = ricci_oracle_error(&c, &points, 1e-3)?;
        let fine = ricci_oracle_error(&c, &points, 5e-4)?;
        let ratio = coarse.overall() / fine.overall();
        for e in [&coarse, &fine] {
            println!(
                "{seed:>4}   {:.1e}  {:.3e}  {:.3e}  {:.3e}",
                e.step, e.base, e.mixed, e.fiber
            );
        }
        println!("{:>58.2}", ratio);
    }
    println!("\nratios near 4 certify second-order agreement of the routes");
    Ok(())
}
