//! Outcome probabilities for an observable with a degenerate eigenvalue.

use std::error::Error;

use nalgebra::DMatrix;
use waylab::born::{born_distribution, Observable};
use waylab::graded::C64;

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // diag(1, 1, 2) and a state with weight on every axis
    let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0)]));
    let obs = Observable::from_hermitian(&m, 1e-9)?;
    let h = 0.5;
    let phi = [C64::new(h, 0.0), C64::new(h, 0.0), C64::new(0.5f64.sqrt(), 0.0)];
    let dist = born_distribution(&obs, &phi)?;
    for o in &dist.outcomes {
        println!("{:>14}: p = {:.4}, post state {:?}", o.label, o.probability, o.post_state.as_ref().map(|v| v.iter().map(|z| z.re).collect::<Vec<_>>()));
    }
    println!("total {:.15}", dist.total());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
