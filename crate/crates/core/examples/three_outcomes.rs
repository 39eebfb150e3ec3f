//! Reading the apparatus after the interaction: plus, minus, or undetermined,
//! with exact probabilities and seeded sampling.

use std::error::Error;

use waylab::born::{sample_outcomes, three_outcome_stats};
use waylab::graded::ObjectState;
use waylab::scheme::build_wigner_scheme;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let s = build_wigner_scheme(3, 2)?;
    for (name, obj) in [("plus", ObjectState::plus()), ("minus", ObjectState::minus()), ("0.6,0.8", ObjectState::real(0.6, 0.8))] {
        let dist = three_outcome_stats(&s, obj)?;
        let probs: Vec<String> = dist.outcomes.iter().map(|o| format!("{} {:.4}", o.label, o.probability)).collect();
        println!("{name:>8}: {}", probs.join(", "));
    }

    let dist = three_outcome_stats(&s, ObjectState::plus())?;
    let counts = sample_outcomes(&dist, 10_000, 7);
    print!("\n{}", counts.to_csv_string());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
