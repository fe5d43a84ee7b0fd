//! Bounded bilinear forms and their operators `T: X -> X*`.
//!
//! An [`OperatorToDual`] is a dense matrix `A` acting on its domain space;
//! `<Ax, z> = a(x, z)` realizes the bilinear form and the adjoint
//! (restricted back to `X`) is the plain transpose. The module computes the
//! constants attached to such operators: coercivity `inf <Tx,x>/|x|^2`, the
//! bound `inf <Tx,x>/|Tx|^2`, the adjoint-domination constant
//! `sup |T*x|/|Tx|`, the operator norm, and positivity verdicts. All are
//! extrema of degree-0 ratios and go through the multi-start sphere search.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::search::{self, RatioObjective, SearchConfig};
use crate::space::{Functional, Point, Space};

/// A bounded linear operator `T: X -> X*` as a dense matrix over a space.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorToDual {
    matrix: DMatrix<f64>,
    domain: Space,
}

impl OperatorToDual {
    pub fn new(matrix: DMatrix<f64>, domain: Space) -> Result<Self> {
        if matrix.nrows() != domain.dim() || matrix.ncols() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(OperatorToDual { matrix, domain })
    }

    pub fn from_rows(rows: &[Vec<f64>], domain: Space) -> Result<Self> {
        let n = domain.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: rows.len(),
            });
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        OperatorToDual::new(DMatrix::from_row_slice(n, n, &flat), domain)
    }

    pub fn identity(domain: Space) -> Self {
        let n = domain.dim();
        OperatorToDual {
            matrix: DMatrix::identity(n, n),
            domain,
        }
    }

    pub fn diagonal(diag: &[f64], domain: Space) -> Result<Self> {
        if diag.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                got: diag.len(),
            });
        }
        Ok(OperatorToDual {
            matrix: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
            domain,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn domain(&self) -> &Space {
        &self.domain
    }

    /// `Tx` as a dual element.
    pub fn apply(&self, x: &Point) -> Result<Functional> {
        self.domain.check_dim(x.len())?;
        Ok(Functional(self.apply_raw(&x.0)))
    }

    pub(crate) fn apply_raw(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.matrix * x
    }

    /// The adjoint restricted to `X`: the transpose matrix.
    /// `pairing(Tx, y) = pairing(T*y, x)` for all `x, y`.
    pub fn adjoint(&self) -> OperatorToDual {
        OperatorToDual {
            matrix: self.matrix.transpose(),
            domain: self.domain.clone(),
        }
    }

    /// `S = (T + T*)/2`; `<Sx, x> = <Tx, x>` for all `x`.
    pub fn symmetric_part(&self) -> OperatorToDual {
        let s = (&self.matrix + self.matrix.transpose()) * 0.5;
        OperatorToDual {
            matrix: s,
            domain: self.domain.clone(),
        }
    }

    /// Exact entrywise symmetry check.
    pub fn is_symmetric(&self) -> bool {
        self.max_asymmetry() == 0.0
    }

    pub fn max_asymmetry(&self) -> f64 {
        let n = self.domain.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm()
    }

    /// `inf_{x != 0} <Tx, x> / norm(x)^2`; nonpositive means not coercive.
    pub fn coercivity_constant(&self, cfg: &SearchConfig) -> f64 {
        let obj = CoercivityObj::new(self);
        let out = search::minimize_on_sphere(&self.domain, &obj, cfg, &[])
            .expect("coercivity objective has no exclusion band");
        out.value
    }

    /// Positivity verdicts from the sphere minimum of `<Tx, x>` plus the
    /// exact symmetry check. `strictly_positive` certifies the minimum
    /// exceeds the tolerance, which at finite dimension coincides with
    /// coercivity; `min_value` is the sphere minimum itself.
    pub fn positivity_report(&self, cfg: &SearchConfig) -> PositivityReport {
        let obj = CoercivityObj::new(self);
        let out = search::minimize_on_sphere(&self.domain, &obj, cfg, &[])
            .expect("no exclusion band");
        let positive = out.value >= -cfg.tol;
        let strictly_positive = out.value > cfg.tol;
        PositivityReport {
            positive,
            strictly_positive,
            symmetric: self.is_symmetric(),
            witness: if strictly_positive {
                None
            } else {
                Some(Point(out.witness))
            },
            min_value: out.value,
        }
    }

    /// Largest `c` with `<Tx, x> >= c |Tx|^2` for all `x`:
    /// `inf over {x : Tx != 0} of <Tx, x> / dual_norm(Tx)^2`.
    pub fn hes_constant(&self, cfg: &SearchConfig) -> Result<f64> {
        if self.frobenius() == 0.0 {
            return Err(Error::ZeroOperator);
        }
        let obj = HesObj::new(self, cfg.tol);
        let out = search::minimize_on_sphere(&self.domain, &obj, cfg, &[])
            .ok_or(Error::ZeroOperator)?;
        Ok(out.value)
    }

    /// Smallest `c` with `|T*x| <= c |Tx|` for all `x`:
    /// `sup over {x : Tx != 0} of dual_norm(T*x) / dual_norm(Tx)`.
    ///
    /// When `ker T` is not contained in `ker T*` the true supremum is
    /// infinite; the search then reports a large finite lower bound.
    pub fn ineq_constant(&self, cfg: &SearchConfig) -> Result<f64> {
        if self.frobenius() == 0.0 {
            return Err(Error::ZeroOperator);
        }
        let obj = IneqObj::new(self, cfg.tol);
        let out = search::maximize_on_sphere(&self.domain, &obj, cfg, &[])
            .ok_or(Error::ZeroOperator)?;
        Ok(out.value)
    }

    /// `sup dual_norm(Tx) / norm(x)`.
    pub fn operator_norm(&self, cfg: &SearchConfig) -> f64 {
        let obj = OpNormObj::new(self);
        match search::maximize_on_sphere(&self.domain, &obj, cfg, &[]) {
            Some(out) => out.value,
            None => 0.0,
        }
    }

    /// Exact coercivity constant at p = 2 (any weights): the smallest
    /// eigenvalue of the weighted symmetrized matrix.
    pub(crate) fn p2_coercivity_exact(&self) -> Option<f64> {
        let m = self.p2_scaled()?;
        let sym = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        Some(eig.eigenvalues.min())
    }

    /// Exact operator norm at p = 2 (any weights): largest singular value
    /// of the weighted scaling of the matrix.
    pub(crate) fn p2_operator_norm_exact(&self) -> Option<f64> {
        let m = self.p2_scaled()?;
        Some(m.singular_values().max())
    }

    /// `W^(-1/2) A W^(-1/2)` when the domain has p = 2.
    fn p2_scaled(&self) -> Option<DMatrix<f64>> {
        if self.domain.exponent() != 2.0 {
            return None;
        }
        let n = self.domain.dim();
        let inv_sqrt: Vec<f64> = self.domain.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut m = self.matrix.clone();
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        Some(m)
    }

    /// Norm-independent positivity check: smallest eigenvalue of the
    /// symmetric part, relative to its spectral scale.
    pub(crate) fn positive_semidefinite(&self, tol: f64) -> bool {
        let sym = (&self.matrix + self.matrix.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let scale = eig.eigenvalues.amax().max(1e-300);
        eig.eigenvalues.min() >= -tol * scale
    }
}

/// Verdicts of the positivity search.
#[derive(Clone, Debug, serde::Serialize)]
pub struct PositivityReport {
    pub positive: bool,
    pub strictly_positive: bool,
    pub symmetric: bool,
    /// Minimizing direction when the operator is not strictly positive.
    pub witness: Option<Point>,
    /// `min <Tx,x>` over the unit sphere.
    pub min_value: f64,
}

/// The bounded bilinear form `a(x, z) = <Tx, z>` of an operator.
#[derive(Clone, Debug)]
pub struct BilinearForm {
    op: OperatorToDual,
}

impl BilinearForm {
    pub fn new(op: OperatorToDual) -> Self {
        BilinearForm { op }
    }

    pub fn op(&self) -> &OperatorToDual {
        &self.op
    }

    pub fn domain(&self) -> &Space {
        self.op.domain()
    }

    pub fn eval(&self, x: &Point, z: &Point) -> Result<f64> {
        let fx = self.op.apply(x)?;
        crate::space::pairing(&fx, z)
    }

    /// `sup a(x,z)/(norm(x) norm(z))`, via the operator norm.
    pub fn norm(&self, cfg: &SearchConfig) -> f64 {
        self.op.operator_norm(cfg)
    }

    /// The symmetrized form `(x, y) = [a(x,y) + a(y,x)] / 2` of the remark
    /// on coercive forms; `positive_definite` reports whether it is an
    /// inner product (checked on the symmetrized matrix spectrum).
    pub fn symmetrized_inner(&self) -> SymmetrizedInner {
        let sym = self.op.symmetric_part();
        let positive_definite = {
            let eig = SymmetricEigen::new(sym.matrix().clone());
            let scale = eig.eigenvalues.amax().max(1e-300);
            eig.eigenvalues.min() > 1e-12 * scale
        };
        SymmetrizedInner {
            form: BilinearForm::new(sym),
            positive_definite,
        }
    }
}

/// Result of [`BilinearForm::symmetrized_inner`].
#[derive(Clone, Debug)]
pub struct SymmetrizedInner {
    pub form: BilinearForm,
    /// True when the symmetrized form is positive definite, i.e. induces
    /// an inner product.
    pub positive_definite: bool,
}

// ---------------------------------------------------------------------------
// Ratio objectives

struct CoercivityObj<'a> {
    op: &'a OperatorToDual,
    sym2: DMatrix<f64>, // A + A^T
}

impl<'a> CoercivityObj<'a> {
    fn new(op: &'a OperatorToDual) -> Self {
        let sym2 = op.matrix() + op.matrix().transpose();
        CoercivityObj { op, sym2 }
    }
}

impl RatioObjective for CoercivityObj<'_> {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let num = self.op.apply_raw(x).dot(x);
        Some(num / self.op.domain.norm_sq_raw(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let space = &self.op.domain;
        let num = self.op.apply_raw(x).dot(x);
        let dnum = &self.sym2 * x;
        let den = space.norm_sq_raw(x);
        let n = den.sqrt();
        let dden = space.gauge_raw(x) * (2.0 * n.powf(2.0 - space.exponent()));
        Some((dnum * den - dden * num) / (den * den))
    }
}

struct HesObj<'a> {
    op: &'a OperatorToDual,
    sym2: DMatrix<f64>,
    at: DMatrix<f64>,
    dual: Space,
    band: f64,
}

impl<'a> HesObj<'a> {
    fn new(op: &'a OperatorToDual, tol: f64) -> Self {
        HesObj {
            op,
            sym2: op.matrix() + op.matrix().transpose(),
            at: op.matrix().transpose(),
            dual: op.domain().dual(),
            band: tol * op.frobenius().max(1e-300),
        }
    }
}

impl RatioObjective for HesObj<'_> {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let f = self.op.apply_raw(x);
        let dsq = self.dual.norm_sq_raw(&f);
        if dsq.sqrt() <= self.band * self.op.domain.norm_raw(x) {
            return None;
        }
        Some(f.dot(x) / dsq)
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let f = self.op.apply_raw(x);
        let dsq = self.dual.norm_sq_raw(&f);
        let dn = dsq.sqrt();
        if dn <= self.band * self.op.domain.norm_raw(x) {
            return None;
        }
        let num = f.dot(x);
        let dnum = &self.sym2 * x;
        let dden = (&self.at * self.dual.gauge_raw(&f))
            * (2.0 * dn.powf(2.0 - self.dual.exponent()));
        Some((dnum * dsq - dden * num) / (dsq * dsq))
    }
}

struct IneqObj<'a> {
    op: &'a OperatorToDual,
    at: DMatrix<f64>,
    dual: Space,
    band: f64,
}

impl<'a> IneqObj<'a> {
    fn new(op: &'a OperatorToDual, tol: f64) -> Self {
        IneqObj {
            op,
            at: op.matrix().transpose(),
            dual: op.domain().dual(),
            band: tol * op.frobenius().max(1e-300),
        }
    }
}

impl RatioObjective for IneqObj<'_> {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let fx = self.op.apply_raw(x);
        let v = self.dual.norm_raw(&fx);
        if v <= self.band * self.op.domain.norm_raw(x) {
            return None;
        }
        let u = self.dual.norm_raw(&(&self.at * x));
        Some(u / v)
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let fx = self.op.apply_raw(x);
        let v = self.dual.norm_raw(&fx);
        if v <= self.band * self.op.domain.norm_raw(x) {
            return None;
        }
        let gx = &self.at * x;
        let u = self.dual.norm_raw(&gx);
        if u <= 1e-300 {
            return None;
        }
        let du = self.op.matrix() * self.dual.norm_gradient_raw(&gx);
        let dv = &self.at * self.dual.norm_gradient_raw(&fx);
        Some((du * v - dv * u) / (v * v))
    }
}

struct OpNormObj<'a> {
    op: &'a OperatorToDual,
    at: DMatrix<f64>,
    dual: Space,
}

impl<'a> OpNormObj<'a> {
    fn new(op: &'a OperatorToDual) -> Self {
        OpNormObj {
            op,
            at: op.matrix().transpose(),
            dual: op.domain().dual(),
        }
    }
}

impl RatioObjective for OpNormObj<'_> {
    fn value(&self, x: &DVector<f64>) -> Option<f64> {
        let fx = self.op.apply_raw(x);
        Some(self.dual.norm_raw(&fx) / self.op.domain.norm_raw(x))
    }

    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
        let space = &self.op.domain;
        let fx = self.op.apply_raw(x);
        let u = self.dual.norm_raw(&fx);
        if u <= 1e-300 {
            return None;
        }
        let n = space.norm_raw(x);
        let du = &self.at * self.dual.norm_gradient_raw(&fx);
        let dn = space.norm_gradient_raw(x);
        Some((du * n - dn * u) / (n * n))
    }
}
