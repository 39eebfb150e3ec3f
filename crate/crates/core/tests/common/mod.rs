#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use waylab::blockmap::{Block, BlockMap};
use waylab::born::Observable;
use waylab::generalized::{BranchSpec, CaseKind};
use waylab::graded::{GradedVector, C64};

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn random_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<C64> {
    (0..d).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
}

pub fn scaled(v: Vec<C64>, norm: f64) -> Vec<C64> {
    let cur = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z * (norm / cur)).collect()
}

/// `k` orthonormal columns in dimension `d`.
pub fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> DMatrix<C64> {
    let m = DMatrix::from_fn(d, k, |_, _| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    m.qr().q()
}

/// Random isometric block map on sectors `lo..=hi`, and random inputs in
/// its domain.
pub fn random_isometry(rng: &mut ChaCha8Rng, d: usize, lo: i64, hi: i64, inputs: usize) -> (BlockMap, Vec<GradedVector>) {
    let mut map = BlockMap::new(d);
    let mut domains = Vec::new();
    for total in lo..=hi {
        let k = rng.gen_range(1..=d);
        let domain = random_orthonormal(rng, d, k);
        let image = random_orthonormal(rng, d, k);
        let labels = (0..k).map(|j| format!("col{total}.{j}")).collect();
        map.insert(total, Block::new(labels, domain.clone(), image).unwrap()).unwrap();
        domains.push((total, domain));
    }
    let vs = (0..inputs)
        .map(|_| {
            let sectors = domains.iter().map(|(total, dom)| {
                let coef = DVector::from_vec(random_vec(rng, dom.ncols()));
                (*total, (dom * coef).iter().copied().collect::<Vec<_>>())
            });
            GradedVector::from_sectors(d, sectors).unwrap()
        })
        .collect();
    (map, vs)
}

fn single(d: usize, nu: i64, amp: Vec<C64>) -> GradedVector {
    GradedVector::from_sectors(d, [(nu, amp)]).unwrap()
}

/// A product-form pair of branches that respects the conservation law, with
/// the expected case. The overall charge offset and the split of each
/// branch's scalar factor between object and apparatus are random.
pub fn random_clean_instance(rng: &mut ChaCha8Rng) -> (BranchSpec, BranchSpec, CaseKind) {
    let (dobj, dapp) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
    let shift = rng.gen_range(-2..=2i64);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let split = |b: BranchSpec, rng: &mut ChaCha8Rng| {
        let z = C64::from_polar(rng.gen_range(0.3..3.0), rng.gen_range(0.0..6.3));
        BranchSpec::new(b.object_part.scale(z), b.apparatus_part.scale(C64::new(1.0, 0.0) / z))
    };
    if rng.gen_bool(0.5) {
        let p0 = single(dobj, shift, scaled(random_vec(rng, dobj), h));
        let p1 = single(dobj, shift + 1, scaled(random_vec(rng, dobj), h));
        let chi = single(dapp, -shift, scaled(random_vec(rng, dapp), 1.0));
        let plus = BranchSpec::new(p0.add(&p1).unwrap(), chi.clone());
        let minus = BranchSpec::new(p0.sub(&p1).unwrap(), chi);
        (split(plus, rng), split(minus, rng), CaseKind::Case1)
    } else {
        let psi = single(dobj, shift, scaled(random_vec(rng, dobj), 1.0));
        let chi0 = single(dapp, -shift, scaled(random_vec(rng, dapp), h));
        let chi1 = single(dapp, 1 - shift, scaled(random_vec(rng, dapp), h));
        let plus = BranchSpec::new(psi.clone(), chi0.add(&chi1).unwrap());
        let minus = BranchSpec::new(psi, chi0.sub(&chi1).unwrap());
        (split(plus, rng), split(minus, rng), CaseKind::Case2)
    }
}

/// Observable with random eigenvectors and random degeneracies, and a
/// random normalized state.
pub fn random_observable(rng: &mut ChaCha8Rng) -> (Observable, Vec<C64>) {
    let dim = rng.gen_range(1..=6);
    let u = random_orthonormal(rng, dim, dim);
    let mut values = Vec::new();
    let mut spaces: Vec<Vec<Vec<C64>>> = Vec::new();
    let mut col = 0;
    while col < dim {
        let k = rng.gen_range(1..=dim - col);
        values.push(values.len() as f64 * 1.5 - 2.0);
        spaces.push((col..col + k).map(|j| u.column(j).iter().copied().collect()).collect());
        col += k;
    }
    let phi = scaled(random_vec(rng, dim), 1.0);
    (Observable::new(values, spaces).unwrap(), phi)
}

// ---------------------------------------------------------------------------
// Exact-measurement oracle
//
// With |α| = |β| the cross relations involve only a and b and are solved by
// a = b = 0, so the minimal violation is that of the balance and
// normalization relations in the nonnegative x, s, t alone. That is a
// convex problem whose optimum is attained on some support with linearly
// independent columns; enumerating every support and keeping the best
// nonnegative unconstrained solution gives the exact minimum.

/// Residuals of the balance relations and of `Σx = Σs = Σt = 1`, computed
/// straight from the relations. `x` covers `1..=n`, `s` and `t` cover
/// `0..=n+1`.
fn oracle_residuals(n: usize, z: &[f64]) -> Vec<f64> {
    let n = n as i64;
    let x = |nu: i64| if (1..=n).contains(&nu) { z[(nu - 1) as usize] } else { 0.0 };
    let off = n as usize;
    let s = |nu: i64| if (0..=n + 1).contains(&nu) { z[off + nu as usize] } else { 0.0 };
    let t = |nu: i64| if (0..=n + 1).contains(&nu) { z[off + n as usize + 2 + nu as usize] } else { 0.0 };
    let mut r = Vec::new();
    for nu in -2..=n + 4 {
        r.push(x(nu) - 0.5 * s(nu) - 0.5 * t(nu - 1));
        r.push(x(nu - 1) - 0.5 * t(nu) - 0.5 * s(nu - 1));
    }
    r.push((1..=n).map(x).sum::<f64>() - 1.0);
    r.push((0..=n + 1).map(s).sum::<f64>() - 1.0);
    r.push((0..=n + 1).map(t).sum::<f64>() - 1.0);
    r
}

/// Minimal sum of squared violations over nonnegative `x, s, t`.
pub fn oracle_min_violation(n: usize) -> f64 {
    let p = 3 * n + 4;
    let zero = vec![0.0; p];
    let r0 = DVector::from_vec(oracle_residuals(n, &zero));
    // the residual is affine: r(z) = A z + r0, columns found by probing
    let mut a = DMatrix::zeros(r0.len(), p);
    for j in 0..p {
        let mut e = zero.clone();
        e[j] = 1.0;
        let col = DVector::from_vec(oracle_residuals(n, &e)) - &r0;
        a.set_column(j, &col);
    }
    let mut best = r0.norm_squared();
    for mask in 1u64..(1u64 << p) {
        let cols: Vec<usize> = (0..p).filter(|j| mask >> j & 1 == 1).collect();
        let sub = DMatrix::from_columns(&cols.iter().map(|&j| a.column(j).clone_owned()).collect::<Vec<_>>());
        let svd = sub.clone().svd(true, true);
        let smax = svd.singular_values.max();
        if svd.singular_values.min() < 1e-10 * smax {
            continue;
        }
        let y = svd.solve(&(-&r0), 0.0).unwrap();
        if y.iter().any(|&v| v < 0.0) {
            continue;
        }
        let v = (&sub * &y + &r0).norm_squared();
        best = best.min(v);
    }
    best
}
