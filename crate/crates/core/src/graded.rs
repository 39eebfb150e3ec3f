//! Charge-graded complex vectors.
//!
//! A state of a system carrying an additive, integer-valued conserved
//! quantity decomposes into sectors of sharp charge `ν`. [`GradedVector`]
//! stores those components as a map from `ν` to a complex amplitude vector of
//! a common per-sector dimension `d`. Absent sectors are zero.
//!
//! Joint object/apparatus states use the layout produced by [`tensor`]: the
//! object is a two-level system with charges 0 and 1, and total-charge sector
//! `N` of the joint vector stacks the object-charge-0 part (apparatus sector
//! `N`) above the object-charge-1 part (apparatus sector `N - 1`).

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Squared norms below this are treated as zero when canonicalizing.
const ZERO_SQR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GradedRepr", into = "GradedRepr")]
pub struct GradedVector {
    d: usize,
    sectors: BTreeMap<i64, Vec<C64>>,
}

impl GradedVector {
    /// The zero vector with per-sector dimension `d`.
    pub fn zero(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::structural("per-sector dimension must be at least 1"));
        }
        Ok(Self { d, sectors: BTreeMap::new() })
    }

    pub fn from_sectors<I>(d: usize, sectors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (i64, Vec<C64>)>,
    {
        let mut v = Self::zero(d)?;
        for (nu, amp) in sectors {
            v.set_sector(nu, amp)?;
        }
        Ok(v)
    }

    /// Basis vector `k` of sector `nu`.
    pub fn unit(d: usize, nu: i64, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::structural(format!("basis index {k} out of range for d = {d}")));
        }
        let mut amp = vec![C64::new(0.0, 0.0); d];
        amp[k] = C64::new(1.0, 0.0);
        Self::from_sectors(d, [(nu, amp)])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn set_sector(&mut self, nu: i64, amp: Vec<C64>) -> Result<()> {
        if amp.len() != self.d {
            return Err(Error::structural(format!(
                "sector {nu}: amplitude length {} does not match d = {}",
                amp.len(),
                self.d
            )));
        }
        self.sectors.insert(nu, amp);
        Ok(())
    }

    pub fn sector(&self, nu: i64) -> Option<&[C64]> {
        self.sectors.get(&nu).map(Vec::as_slice)
    }

    /// Sector `nu`, or zeros when absent.
    pub fn sector_or_zero(&self, nu: i64) -> Vec<C64> {
        self.sector(nu).map(<[C64]>::to_vec).unwrap_or_else(|| vec![C64::new(0.0, 0.0); self.d])
    }

    pub fn sectors(&self) -> impl Iterator<Item = (i64, &[C64])> + '_ {
        self.sectors.iter().map(|(nu, a)| (*nu, a.as_slice()))
    }

    pub fn sector_norm_sqr(&self, nu: i64) -> f64 {
        self.sector(nu).map(norm_sqr).unwrap_or(0.0)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.sectors.values().map(|a| norm_sqr(a)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Sector indices whose norm exceeds `tol`.
    pub fn support(&self, tol: f64) -> Vec<i64> {
        self.sectors
            .iter()
            .filter(|(_, a)| norm_sqr(a).sqrt() > tol)
            .map(|(nu, _)| *nu)
            .collect()
    }

    /// Lowest and highest stored sector, if any.
    pub fn range(&self) -> Option<(i64, i64)> {
        let lo = *self.sectors.keys().next()?;
        let hi = *self.sectors.keys().next_back()?;
        Some((lo, hi))
    }

    pub fn scale(&self, k: C64) -> Self {
        Self {
            d: self.d,
            sectors: self
                .sectors
                .iter()
                .map(|(nu, a)| (*nu, a.iter().map(|z| z * k).collect()))
                .collect(),
        }
    }

    /// Every sector index moved by `shift`.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            d: self.d,
            sectors: self.sectors.iter().map(|(nu, a)| (nu + shift, a.clone())).collect(),
        }
    }

    /// `Σ k_i v_i` over vectors of equal dimension.
    pub fn lin_comb(terms: &[(C64, &GradedVector)]) -> Result<Self> {
        let d = terms
            .first()
            .map(|(_, v)| v.d)
            .ok_or_else(|| Error::structural("empty linear combination"))?;
        let mut out = Self::zero(d)?;
        for (k, v) in terms {
            check_dims(&out, v)?;
            for (nu, a) in &v.sectors {
                let slot = out
                    .sectors
                    .entry(*nu)
                    .or_insert_with(|| vec![C64::new(0.0, 0.0); d]);
                for (s, z) in slot.iter_mut().zip(a) {
                    *s += k * z;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &GradedVector) -> Result<Self> {
        let one = C64::new(1.0, 0.0);
        Self::lin_comb(&[(one, self), (one, other)])
    }

    pub fn sub(&self, other: &GradedVector) -> Result<Self> {
        Self::lin_comb(&[(C64::new(1.0, 0.0), self), (C64::new(-1.0, 0.0), other)])
    }

    /// Copy with zero sectors dropped.
    pub fn canonical(&self) -> Self {
        Self {
            d: self.d,
            sectors: self
                .sectors
                .iter()
                .filter(|(_, a)| norm_sqr(a) > ZERO_SQR)
                .map(|(nu, a)| (*nu, a.clone()))
                .collect(),
        }
    }

    /// Equality up to `tol` per amplitude; absent and explicit zero sectors agree.
    pub fn approx_eq(&self, other: &GradedVector, tol: f64) -> bool {
        if self.d != other.d {
            return false;
        }
        let keys: std::collections::BTreeSet<i64> =
            self.sectors.keys().chain(other.sectors.keys()).copied().collect();
        keys.into_iter().all(|nu| {
            let a = self.sector_or_zero(nu);
            let b = other.sector_or_zero(nu);
            a.iter().zip(&b).all(|(x, y)| (x - y).norm() <= tol)
        })
    }

    /// Restriction to the sectors for which `keep` returns true.
    pub fn restrict(&self, keep: impl Fn(i64) -> bool) -> Self {
        Self {
            d: self.d,
            sectors: self
                .sectors
                .iter()
                .filter(|(nu, _)| keep(**nu))
                .map(|(nu, a)| (*nu, a.clone()))
                .collect(),
        }
    }
}

pub(crate) fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// `Σ conj(u_k) v_k`.
pub(crate) fn dot(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

fn check_dims(u: &GradedVector, v: &GradedVector) -> Result<()> {
    if u.d == v.d {
        return Ok(());
    }
    let nu = u
        .sectors
        .keys()
        .find(|k| v.sectors.contains_key(k))
        .or_else(|| v.sectors.keys().next())
        .or_else(|| u.sectors.keys().next());
    Err(Error::structural(match nu {
        Some(nu) => format!("sector {nu}: dimension {} does not match {}", u.d, v.d),
        None => format!("per-sector dimension {} does not match {}", u.d, v.d),
    }))
}

/// Hermitian inner product, conjugate-linear in `u`.
pub fn inner(u: &GradedVector, v: &GradedVector) -> Result<C64> {
    check_dims(u, v)?;
    Ok(u.sectors
        .iter()
        .filter_map(|(nu, a)| v.sectors.get(nu).map(|b| dot(a, b)))
        .sum())
}

/// Pure state `amp0 ψ₀ + amp1 ψ₁` of the two-level measured object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectState {
    pub amp0: C64,
    pub amp1: C64,
}

impl ObjectState {
    pub const fn new(amp0: C64, amp1: C64) -> Self {
        Self { amp0, amp1 }
    }

    pub fn real(a: f64, b: f64) -> Self {
        Self::new(C64::new(a, 0.0), C64::new(b, 0.0))
    }

    /// `(ψ₀ + ψ₁)/√2`
    pub fn plus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, h)
    }

    /// `(ψ₀ − ψ₁)/√2`
    pub fn minus() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::real(h, -h)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp0.norm_sqr() + self.amp1.norm_sqr()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub(crate) fn require_normalized(&self, tol: f64) -> Result<()> {
        if self.is_normalized(tol) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "object state is not normalized: |amp0|^2 + |amp1|^2 = {}",
                self.norm_sqr()
            )))
        }
    }

    /// The orthogonal partner `−conj(amp1) ψ₀ + conj(amp0) ψ₁`.
    pub fn orthogonal(&self) -> Self {
        Self::new(-self.amp1.conj(), self.amp0.conj())
    }
}

/// Joint vector from the object-charge-0 and object-charge-1 apparatus parts.
///
/// `part0` is the apparatus factor multiplying `ψ₀`, `part1` the one
/// multiplying `ψ₁`. The result has per-sector dimension `2d`.
pub fn join_parts(part0: &GradedVector, part1: &GradedVector) -> Result<GradedVector> {
    check_dims(part0, part1)?;
    let d = part0.d;
    let mut totals: Vec<i64> = part0.sectors.keys().copied().collect();
    totals.extend(part1.sectors.keys().map(|nu| nu + 1));
    totals.sort_unstable();
    totals.dedup();
    let mut out = GradedVector::zero(2 * d)?;
    for n in totals {
        let mut amp = part0.sector_or_zero(n);
        amp.extend(part1.sector_or_zero(n - 1));
        out.set_sector(n, amp)?;
    }
    Ok(out)
}

/// Inverse of [`join_parts`].
pub fn split_joint(joint: &GradedVector) -> Result<(GradedVector, GradedVector)> {
    if joint.d % 2 != 0 {
        return Err(Error::structural(format!(
            "joint per-sector dimension {} is odd",
            joint.d
        )));
    }
    let d = joint.d / 2;
    let mut p0 = GradedVector::zero(d)?;
    let mut p1 = GradedVector::zero(d)?;
    for (n, a) in joint.sectors() {
        p0.set_sector(n, a[..d].to_vec())?;
        p1.set_sector(n - 1, a[d..].to_vec())?;
    }
    Ok((p0, p1))
}

/// Product of an object state with an apparatus state, graded by total charge.
pub fn tensor(obj: ObjectState, app: &GradedVector) -> GradedVector {
    join_parts(&app.scale(obj.amp0), &app.scale(obj.amp1))
        .expect("parts built from one vector share their dimension")
}

/// Mean charge `Σ ν ‖v_ν‖² / ‖v‖²`.
pub fn charge_expectation(v: &GradedVector) -> Result<f64> {
    let total = v.norm_sqr();
    if total == 0.0 {
        return Err(Error::domain("charge expectation of the zero vector"));
    }
    let weighted: f64 = v.sectors().map(|(nu, a)| nu as f64 * norm_sqr(a)).sum();
    Ok(weighted / total)
}

#[derive(Serialize, Deserialize)]
struct GradedRepr {
    d: usize,
    sectors: Vec<SectorRepr>,
}

#[derive(Serialize, Deserialize)]
struct SectorRepr {
    nu: i64,
    amp: Vec<[f64; 2]>,
}

impl From<GradedVector> for GradedRepr {
    fn from(v: GradedVector) -> Self {
        GradedRepr {
            d: v.d,
            sectors: v
                .sectors
                .into_iter()
                .map(|(nu, a)| SectorRepr { nu, amp: a.iter().map(|z| [z.re, z.im]).collect() })
                .collect(),
        }
    }
}

impl TryFrom<GradedRepr> for GradedVector {
    type Error = Error;

    fn try_from(r: GradedRepr) -> Result<Self> {
        let mut v = GradedVector::zero(r.d)?;
        for s in r.sectors {
            if v.sectors.contains_key(&s.nu) {
                return Err(Error::structural(format!("sector {} listed twice", s.nu)));
            }
            v.set_sector(s.nu, s.amp.into_iter().map(|[re, im]| C64::new(re, im)).collect())?;
        }
        Ok(v)
    }
}
