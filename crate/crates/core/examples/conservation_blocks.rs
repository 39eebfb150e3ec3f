//! The interaction of a scheme as a block-diagonal map over total charge,
//! and why it cannot separate pointer states of overlapping inputs.

use std::error::Error;

use waylab::blockmap::{check_conserving, max_abs_diff, orthogonality_transfer_check};
use waylab::graded::{join_parts, ObjectState, tensor};
use waylab::scheme::{apply_interaction, build_wigner_scheme};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let s = build_wigner_scheme(3, 2)?;
    let map = s.interaction_map()?;
    for (id, r) in check_conserving(&map).worst(4) {
        println!("{id}: {r:.1e}");
    }

    let zero = waylab::graded::GradedVector::zero(2)?;
    let inputs = vec![join_parts(&s.xi, &zero)?, join_parts(&zero, &s.xi)?, tensor(ObjectState::plus(), &s.xi)];
    let (before, after) = orthogonality_transfer_check(&map, &inputs)?;
    println!("Gram matrices differ by {:.1e}", max_abs_diff(&before, &after));

    let out = apply_interaction(&s, ObjectState::plus())?;
    println!("final state norm {:.12}", out.norm());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
