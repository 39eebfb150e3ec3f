//! Symbolic derivation of why the exact system has no solution.
//!
//! Works only with index bookkeeping, never with the numerical minimizer:
//! the cross relations force `a` and `b` to vanish by recursion from the
//! lower edge of the window, and the two balance equations give
//! `t[ν−1] = t[ν+1]`. Each parity class of `t` therefore shares one value,
//! and since every class reaches an index outside the window where `t` is
//! zero, all of `t` vanishes, contradicting `Σt = 1`.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityClass {
    /// In-window indices tied together by `t[ν−1] = t[ν+1]`.
    pub members: Vec<i64>,
    /// An index in the same class lying outside the window, if any.
    pub boundary_zero: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub n: usize,
    pub window: (i64, i64),
    pub ab_forced_zero: bool,
    pub t_classes: Vec<ParityClass>,
    /// True when the forced values contradict `Σt = 1`.
    pub conflict: bool,
    pub steps: Vec<String>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.0[root] != root {
            root = self.0[root];
        }
        let mut k = i;
        while self.0[k] != root {
            let next = self.0[k];
            self.0[k] = root;
            k = next;
        }
        root
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Derives the contradiction for support size `n`.
///
/// `t` lives on the window `0..=n+1`; the balance equations are written for
/// every `ν` in `−1..=n+2`, so the relation `t[ν−1] = t[ν+1]` links window
/// indices to the zeros at `−2, −1, n+2, n+3`.
pub fn derive_witness(n: usize) -> Witness {
    let lo = 0i64;
    let hi = n as i64 + 1;
    let ext_lo = lo - 2;
    let ext_hi = hi + 2;
    let pos = |nu: i64| (nu - ext_lo) as usize;
    let mut uf = UnionFind((0..=(ext_hi - ext_lo) as usize).collect());
    for nu in (ext_lo + 1)..ext_hi {
        uf.union(pos(nu - 1), pos(nu + 1));
    }

    // a[ν] = −a[ν−1], b[ν] = b[ν−1], seeded by a[lo−1] = b[lo−1] = 0
    let mut a_known = true;
    let mut b_known = true;
    let (mut a_prev, mut b_prev) = (0.0f64, 0.0f64);
    for _ in lo..=hi {
        let a_next = -a_prev;
        let b_next = b_prev;
        a_known &= a_next == 0.0;
        b_known &= b_next == 0.0;
        a_prev = a_next;
        b_prev = b_next;
    }
    let ab_forced_zero = a_known && b_known;

    let mut classes: Vec<(usize, ParityClass)> = Vec::new();
    for nu in lo..=hi {
        let root = uf.find(pos(nu));
        match classes.iter_mut().find(|(r, _)| *r == root) {
            Some((_, c)) => c.members.push(nu),
            None => classes.push((root, ParityClass { members: vec![nu], boundary_zero: None })),
        }
    }
    for nu in (ext_lo..lo).chain(hi + 1..=ext_hi) {
        let root = uf.find(pos(nu));
        if let Some((_, c)) = classes.iter_mut().find(|(r, _)| *r == root) {
            if c.boundary_zero.is_none() {
                c.boundary_zero = Some(nu);
            }
        }
    }
    let t_classes: Vec<ParityClass> = classes.into_iter().map(|(_, c)| c).collect();
    let all_zero = t_classes.iter().all(|c| c.boundary_zero.is_some());
    let conflict = ab_forced_zero && all_zero;

    let mut steps = vec![
        format!(
            "cross relation, real part: a[ν] = -a[ν-1] for ν = {lo}..={hi}, with a[{}] = 0 outside the window, forces a = 0",
            lo - 1
        ),
        format!(
            "cross relation, imaginary part: b[ν] = b[ν-1] for ν = {lo}..={hi}, with b[{}] = 0 outside the window, forces b = 0",
            lo - 1
        ),
        "balance equations: x[ν+1] - s[ν+1]/2 = t[ν]/2 = x[ν-1] - s[ν-1]/2, hence t[ν-1] = t[ν+1]".to_string(),
    ];
    for c in &t_classes {
        let list = c.members.iter().map(i64::to_string).collect::<Vec<_>>().join(", ");
        steps.push(match c.boundary_zero {
            Some(z) => format!("t is constant on {{{list}}} and equals t[{z}] = 0 outside the window"),
            None => format!("t is constant on {{{list}}} with no boundary zero"),
        });
    }
    steps.push(if conflict {
        "therefore t = 0 everywhere, so sum t = 0, contradicting the normalization sum t = 1".to_string()
    } else {
        "no contradiction derived".to_string()
    });

    Witness { n, window: (lo, hi), ab_forced_zero, t_classes, conflict, steps }
}
