//! Classifying product-form branches: which sectors may be populated, and
//! when the apparatus takes over the object's charge.

use std::error::Error;

use waylab::generalized::{classify, exchange_form, support_check, BranchSpec};
use waylab::graded::{GradedVector, C64};

fn single(d: usize, nu: i64, amp: &[f64]) -> GradedVector {
    GradedVector::from_sectors(d, [(nu, amp.iter().map(|&x| C64::new(x, 0.0)).collect())]).unwrap()
}

pub fn run_example() -> Result<(), Box<dyn Error>> {
    // object stays in charge 0, the apparatus absorbs the difference
    let psi = single(1, 0, &[1.0]);
    let chi0 = single(2, 0, &[0.6, 0.0]);
    let chi1 = single(2, 1, &[0.0, 0.8]);
    let plus = BranchSpec::new(psi.clone(), chi0.add(&chi1)?);
    let minus = BranchSpec::new(psi, chi0.sub(&chi1)?);
    let v = classify(&plus, &minus)?;
    println!("{}", serde_json::to_string_pretty(&v)?);
    let form = exchange_form(&v, &plus, &minus)?;
    println!("reproduction residual {:.1e}", form.reproduction_residual(&plus, &minus)?);
    println!("|chi0|^2 = {:.2}, |chi1|^2 = {:.2}", form.chi0.norm_sqr(), form.chi1.norm_sqr());

    // an apparatus spread over too many sectors
    let wide = GradedVector::from_sectors(1, [(0, vec![C64::new(0.6, 0.0)]), (2, vec![C64::new(0.8, 0.0)])])?;
    let plus = BranchSpec::new(single(1, 0, &[1.0]), wide.clone());
    let minus = BranchSpec::new(single(1, 1, &[1.0]), wide);
    for viol in support_check(&plus, &minus) {
        println!("{:?}: object sector {} with apparatus sector {}", viol.branch, viol.mu, viol.lambda());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
