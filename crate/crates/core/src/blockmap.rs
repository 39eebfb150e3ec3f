//! Charge-conserving linear maps stored one total-charge block at a time.
//!
//! A map that commutes with the conserved quantity is block diagonal in the
//! charge grading. [`BlockMap`] keeps, for each total charge `N`, a list of
//! domain columns inside sector `N` together with their images. The map is
//! only defined on the span of the domain columns; [`Block::complete_unitary`]
//! extends it to a full unitary on the sector when the block is isometric.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graded::{GradedVector, C64};
use crate::report::ConstraintReport;

/// Default absolute tolerance for structural checks.
pub const TOL: f64 = 1e-10;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub labels: Vec<String>,
    /// `dim × k`, one domain vector per column.
    pub domain: DMatrix<C64>,
    /// `dim × k`, image of the matching domain column.
    pub image: DMatrix<C64>,
}

impl Block {
    pub fn new(labels: Vec<String>, domain: DMatrix<C64>, image: DMatrix<C64>) -> Result<Self> {
        if domain.shape() != image.shape() {
            return Err(Error::structural(format!(
                "domain shape {:?} differs from image shape {:?}",
                domain.shape(),
                image.shape()
            )));
        }
        if labels.len() != domain.ncols() {
            return Err(Error::structural(format!(
                "{} labels for {} domain columns",
                labels.len(),
                domain.ncols()
            )));
        }
        Ok(Self { labels, domain, image })
    }

    pub fn identity(dim: usize) -> Self {
        let eye = DMatrix::<C64>::identity(dim, dim);
        Self {
            labels: (0..dim).map(|k| format!("e{k}")).collect(),
            domain: eye.clone(),
            image: eye,
        }
    }

    pub fn gram_domain(&self) -> DMatrix<C64> {
        self.domain.adjoint() * &self.domain
    }

    pub fn gram_image(&self) -> DMatrix<C64> {
        self.image.adjoint() * &self.image
    }

    /// `max |G_image − G_domain|` over entries.
    pub fn isometry_defect(&self) -> f64 {
        (self.gram_image() - self.gram_domain()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Applies the block to a sector vector lying in the span of the domain.
    pub fn apply(&self, v: &[C64], tol: f64) -> Result<Vec<C64>> {
        let dim = self.domain.nrows();
        if v.len() != dim {
            return Err(Error::structural(format!("vector length {} for block of dimension {dim}", v.len())));
        }
        let v = DVector::from_column_slice(v);
        let coef = if self.domain.ncols() == 0 {
            DVector::zeros(0)
        } else {
            self.domain
                .clone()
                .pseudo_inverse(1e-12)
                .map_err(|e| Error::structural(format!("pseudo-inverse failed: {e}")))?
                * &v
        };
        let outside = (&self.domain * &coef - &v).norm();
        if outside > tol * v.norm().max(1.0) {
            return Err(Error::domain(format!(
                "vector has a component of norm {outside:e} outside the declared domain"
            )));
        }
        Ok((&self.image * coef).as_slice().to_vec())
    }

    /// Full unitary on the sector agreeing with the block on its domain.
    ///
    /// Pivot columns of the domain are orthonormalized by modified
    /// Gram–Schmidt and the same triangular factor is applied to the image.
    /// Both partial bases are then completed with standard basis vectors in
    /// index order.
    pub fn complete_unitary(&self, tol: f64) -> Result<DMatrix<C64>> {
        let defect = self.isometry_defect();
        if defect > tol {
            return Err(Error::domain(format!("block is not isometric (defect {defect:e})")));
        }
        let dim = self.domain.nrows();
        let mut qd: Vec<DVector<C64>> = Vec::new();
        let mut qi: Vec<DVector<C64>> = Vec::new();
        for k in 0..self.domain.ncols() {
            let mut d = self.domain.column(k).clone_owned();
            let mut m = self.image.column(k).clone_owned();
            for (a, b) in qd.iter().zip(&qi) {
                let r = a.dotc(&d);
                d -= a * r;
                m -= b * r;
            }
            let r = d.norm();
            if r > 1e-9 {
                qd.push(d / C64::new(r, 0.0));
                qi.push(m / C64::new(r, 0.0));
            }
        }
        let complete = |basis: &mut Vec<DVector<C64>>| {
            for k in 0..dim {
                if basis.len() == dim {
                    break;
                }
                let mut e = DVector::<C64>::zeros(dim);
                e[k] = C64::new(1.0, 0.0);
                for q in basis.iter() {
                    let r = q.dotc(&e);
                    e -= q * r;
                }
                let r = e.norm();
                if r > 1e-6 {
                    basis.push(e / C64::new(r, 0.0));
                }
            }
        };
        complete(&mut qd);
        complete(&mut qi);
        let d = DMatrix::from_columns(&qd);
        let i = DMatrix::from_columns(&qi);
        Ok(i * d.adjoint())
    }
}

/// A grading-preserving map given blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockMap {
    pub dim: usize,
    pub blocks: BTreeMap<i64, Block>,
    /// Norm of image components that fell outside their block's sector.
    pub leakage: f64,
}

impl BlockMap {
    pub fn new(dim: usize) -> Self {
        Self { dim, blocks: BTreeMap::new(), leakage: 0.0 }
    }

    pub fn insert(&mut self, total: i64, block: Block) -> Result<()> {
        if block.domain.nrows() != self.dim {
            return Err(Error::structural(format!(
                "sector {total}: block dimension {} does not match {}",
                block.domain.nrows(),
                self.dim
            )));
        }
        self.blocks.insert(total, block);
        Ok(())
    }

    /// Builds a map from `(label, input, output)` triples.
    ///
    /// Each input must live in a single sector `N`; its output's sector-`N`
    /// component becomes the image column and everything else is recorded as
    /// leakage.
    pub fn from_columns(dim: usize, columns: Vec<(String, GradedVector, GradedVector)>) -> Result<Self> {
        let mut grouped: BTreeMap<i64, Vec<(String, Vec<C64>, Vec<C64>)>> = BTreeMap::new();
        let mut leakage_sqr: f64 = 0.0;
        for (label, input, output) in columns {
            if input.dim() != dim || output.dim() != dim {
                return Err(Error::structural(format!("column {label}: dimension does not match {dim}")));
            }
            let support = input.support(0.0);
            let total = match support.as_slice() {
                [n] => *n,
                [] => input.range().map(|(lo, _)| lo).ok_or_else(|| {
                    Error::structural(format!("column {label}: input has no sector"))
                })?,
                _ => {
                    return Err(Error::structural(format!(
                        "column {label}: input spans sectors {support:?}"
                    )))
                }
            };
            leakage_sqr += output.restrict(|nu| nu != total).norm_sqr();
            grouped.entry(total).or_default().push((
                label,
                input.sector_or_zero(total),
                output.sector_or_zero(total),
            ));
        }
        let mut map = Self::new(dim);
        map.leakage = leakage_sqr.sqrt();
        for (total, cols) in grouped {
            let k = cols.len();
            let mut domain = DMatrix::from_element(dim, k, zero());
            let mut image = DMatrix::from_element(dim, k, zero());
            let mut labels = Vec::with_capacity(k);
            for (j, (label, d, i)) in cols.into_iter().enumerate() {
                domain.set_column(j, &DVector::from_vec(d));
                image.set_column(j, &DVector::from_vec(i));
                labels.push(label);
            }
            map.insert(total, Block::new(labels, domain, image)?)?;
        }
        Ok(map)
    }

    /// Applies the map sector by sector.
    pub fn apply(&self, v: &GradedVector) -> Result<GradedVector> {
        if v.dim() != self.dim {
            return Err(Error::structural(format!(
                "vector dimension {} does not match map dimension {}",
                v.dim(),
                self.dim
            )));
        }
        let mut out = GradedVector::zero(self.dim)?;
        for (n, amp) in v.sectors() {
            match self.blocks.get(&n) {
                Some(b) => {
                    let img = b.apply(amp, TOL).map_err(|e| match e {
                        Error::Domain(m) => Error::domain(format!("sector {n}: {m}")),
                        other => other,
                    })?;
                    out.set_sector(n, img)?;
                }
                None if crate::graded::norm_sqr(amp) == 0.0 => {}
                None => {
                    return Err(Error::domain(format!("sector {n} is outside the declared domain")));
                }
            }
        }
        Ok(out)
    }
}

/// Grading leakage and per-block isometry defect.
pub fn check_conserving(m: &BlockMap) -> ConstraintReport {
    let mut r = ConstraintReport::new();
    r.push("leakage", m.leakage);
    for (n, b) in &m.blocks {
        r.push(format!("isometry[{n}]"), b.isometry_defect());
    }
    r
}

fn gram(vs: &[GradedVector]) -> Result<DMatrix<C64>> {
    let k = vs.len();
    let mut g = DMatrix::from_element(k, k, zero());
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = crate::graded::inner(&vs[i], &vs[j])?;
        }
    }
    Ok(g)
}

/// Gram matrices of `inputs` and of their images under `m`.
///
/// For an isometric map the two agree, so orthogonal pointer states can only
/// come from orthogonal inputs.
pub fn orthogonality_transfer_check(
    m: &BlockMap,
    inputs: &[GradedVector],
) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let images = inputs.iter().map(|v| m.apply(v)).collect::<Result<Vec<_>>>()?;
    Ok((gram(inputs)?, gram(&images)?))
}

/// `max |a − b|` over matrix entries.
pub fn max_abs_diff(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
