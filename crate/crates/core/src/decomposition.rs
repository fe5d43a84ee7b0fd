//! Annihilators, quotient norms and the Galerkin-type projection.
//!
//! For a subspace `M` with basis `B` and a form `a(x,z) = <Ax,z>` that is
//! nondegenerate on `M`, the projector `P = B (B^T A B)^-1 B^T A` maps onto
//! `M` along `T^-1(M_perp)`, realizing the splitting
//! `X = M (+) T^-1(M_perp)`. The quotient norm on `X*/M_perp` is computed
//! as a minimization over the annihilator (closed form at p = 2, certified
//! descent otherwise), and the two-sided bounds of the induced map
//! `pi . T|_M` onto the quotient decide whether it is an isomorphism at
//! this scale.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::operator::BilinearForm;
use crate::search::{self, RatioObjective, SearchConfig};
use crate::space::{Functional, Space};

/// A linear subspace given by a full-column-rank basis matrix (n x k).
#[derive(Clone, Debug)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

impl Subspace {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, k) = basis.shape();
        if k > n || k == 0 {
            return Err(Error::InvalidParameter(format!(
                "subspace basis must be n x k with 1 <= k <= n, got {n} x {k}"
            )));
        }
        let eps = rank_tolerance(&basis);
        if basis.clone().col_piv_qr().rank(eps) < k {
            return Err(Error::InvalidParameter(
                "subspace basis is rank deficient".into(),
            ));
        }
        Ok(Subspace { basis })
    }

    pub fn span(columns: &[DVector<f64>]) -> Result<Self> {
        let n = columns.first().map_or(0, |c| c.len());
        let mut m = DMatrix::zeros(n, columns.len());
        for (j, c) in columns.iter().enumerate() {
            m.set_column(j, c);
        }
        Subspace::new(m)
    }

    /// Coordinate subspace spanned by the listed axes.
    pub fn axes(n: usize, axes: &[usize]) -> Result<Self> {
        let cols: Vec<DVector<f64>> = axes
            .iter()
            .map(|&i| {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                e
            })
            .collect();
        Subspace::span(&cols)
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            basis: DMatrix::identity(n, n),
        }
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Basis of `M_perp = { f : <f, m> = 0 for all m in M }` (n x (n-k)).
#[derive(Clone, Debug)]
pub struct AnnihilatorBasis {
    basis: DMatrix<f64>,
}

impl AnnihilatorBasis {
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

fn rank_tolerance(m: &DMatrix<f64>) -> f64 {
    let mut max_col: f64 = 0.0;
    for j in 0..m.ncols() {
        max_col = max_col.max(m.column(j).norm());
    }
    1e-10 * max_col.max(1.0)
}

/// Modified Gram-Schmidt; drops columns below the rank tolerance.
fn orthonormal_columns(m: &DMatrix<f64>, tol: f64) -> Vec<DVector<f64>> {
    let mut q: Vec<DVector<f64>> = Vec::new();
    for j in 0..m.ncols() {
        let mut v = m.column(j).clone_owned();
        for u in &q {
            let c = u.dot(&v);
            v -= u * c;
        }
        // Re-orthogonalize once against MGS drift.
        for u in &q {
            let c = u.dot(&v);
            v -= u * c;
        }
        let n = v.norm();
        if n > tol {
            q.push(v / n);
        }
    }
    q
}

/// Extends an orthonormal set to an orthonormal basis of R^n; returns the
/// added vectors (they span the Euclidean orthogonal complement).
fn orthonormal_completion(q: &[DVector<f64>], n: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut all: Vec<DVector<f64>> = q.to_vec();
    let mut extra: Vec<DVector<f64>> = Vec::new();
    for i in 0..n {
        if all.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for u in &all {
            let c = u.dot(&v);
            v -= u * c;
        }
        for u in &all {
            let c = u.dot(&v);
            v -= u * c;
        }
        let norm = v.norm();
        if norm > tol {
            let v = v / norm;
            all.push(v.clone());
            extra.push(v);
        }
    }
    extra
}

fn columns_to_matrix(cols: &[DVector<f64>], n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Annihilator of `M` under the coordinate pairing: the null space of
/// `B^T`, i.e. the Euclidean orthogonal complement of `range(B)`.
pub fn annihilator(m: &Subspace) -> AnnihilatorBasis {
    let n = m.ambient_dim();
    let tol = rank_tolerance(m.basis());
    let q = orthonormal_columns(m.basis(), tol);
    let extra = orthonormal_completion(&q, n, 1e-10);
    AnnihilatorBasis {
        basis: columns_to_matrix(&extra, n),
    }
}

/// The projector onto `M` along `T^-1(M_perp)` and a basis of that kernel.
#[derive(Clone, Debug)]
pub struct ProjectionReport {
    /// `P = B (B^T A B)^-1 B^T A`; idempotent with range `M`.
    pub projector: DMatrix<f64>,
    /// Basis of `ker P = T^-1(M_perp)` (n x (n-k)).
    pub complement_basis: DMatrix<f64>,
}

/// Builds the bounded projection produced by the solvability of the
/// form-Galerkin problem on `M`: `A(y - Py)` annihilates `M` for every `y`.
pub fn stampacchia_projection(a: &BilinearForm, m: &Subspace) -> Result<ProjectionReport> {
    let b = m.basis();
    let n = m.ambient_dim();
    let reduced = b.transpose() * a.op().matrix() * b;
    let inv = reduced.try_inverse().ok_or(Error::SingularSystem)?;
    let bta = b.transpose() * a.op().matrix();
    let projector = b * inv * &bta;

    // ker P = null(B^T A): complement of range((B^T A)^T).
    let bta_t = bta.transpose();
    let tol = rank_tolerance(&bta_t);
    let q = orthonormal_columns(&bta_t, tol);
    let extra = orthonormal_completion(&q, n, 1e-10);
    Ok(ProjectionReport {
        projector,
        complement_basis: columns_to_matrix(&extra, n),
    })
}

/// Distance in the dual norm from `f` to the coset `f + M_perp`, i.e. the
/// quotient norm of `pi(f)` in `X*/M_perp`. Closed form at p = 2,
/// descent with certified decrease otherwise.
pub fn quotient_distance(f: &Functional, mperp: &AnnihilatorBasis, space: &Space) -> Result<f64> {
    space.check_dim(f.len())?;
    if mperp.dim() == 0 {
        return Ok(space.dual_norm(f)?);
    }
    if mperp.basis().nrows() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            got: mperp.basis().nrows(),
        });
    }
    Ok(quotient_distance_raw(&f.0, mperp.basis(), space))
}

pub(crate) fn quotient_distance_raw(
    f: &DVector<f64>,
    nbasis: &DMatrix<f64>,
    space: &Space,
) -> f64 {
    let dual = space.dual();
    if nbasis.ncols() == 0 {
        return dual.norm_raw(f);
    }

    // Weighted least squares in the dual p=2 metric; exact there, warm
    // start elsewhere.
    let wd = dual.weights();
    let mut ntw = nbasis.transpose();
    for j in 0..ntw.ncols() {
        let mut col = ntw.column_mut(j);
        col *= wd[j];
    }
    let gram = &ntw * nbasis;
    let rhs = &ntw * f;
    let u_ls = gram
        .lu()
        .solve(&(-&rhs))
        .unwrap_or_else(|| DVector::zeros(nbasis.ncols()));

    if space.exponent() == 2.0 {
        return dual.norm_raw(&(f + nbasis * u_ls));
    }

    // Convex descent on phi(u) = sum wd_i |f + N u|_i^q with Armijo
    // backtracking; gradient is q * N^T gauge_dual(f + N u).
    let q = dual.exponent();
    let phi = |u: &DVector<f64>| dual.norm_pow_raw(&(f + nbasis * u));
    let grad = |u: &DVector<f64>| {
        let h = f + nbasis * u;
        nbasis.transpose() * dual.gauge_raw(&h) * q
    };

    let mut best_u = DVector::zeros(nbasis.ncols());
    let mut best_phi = phi(&best_u);
    let ls_phi = phi(&u_ls);
    if ls_phi < best_phi {
        best_u = u_ls;
        best_phi = ls_phi;
    }

    let mut step = 1.0;
    for _ in 0..500 {
        let g = grad(&best_u);
        let gn = g.norm();
        if gn <= 1e-14 * (1.0 + best_phi) {
            break;
        }
        let dir = g / gn;
        let mut t = step;
        let mut moved = false;
        while t > 1e-16 {
            let cand = &best_u - &dir * t;
            let pc = phi(&cand);
            if pc < best_phi {
                best_u = cand;
                let gain = best_phi - pc;
                best_phi = pc;
                step = (t * 1.5).min(1.0);
                moved = true;
                if gain <= 1e-15 * (1.0 + best_phi) {
                    return dual.norm_raw(&(f + nbasis * &best_u));
                }
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    dual.norm_raw(&(f + nbasis * &best_u))
}

/// Two-sided bounds of `x -> pi(Tx)` on the unit sphere of `M`:
/// `lower = inf quotient_distance(Tx) / norm(x)` and the matching sup.
/// `lower > 0` certifies that the map into `X*/M_perp` is an isomorphism
/// at this scale; `lower = 0` flags degeneracy (`T(M)` meets `M_perp`).
#[derive(Clone, Debug)]
pub struct IsoConstants {
    pub lower: f64,
    pub upper: f64,
    pub isomorphism: bool,
}

pub fn pi_t_iso_constants(
    a: &BilinearForm,
    m: &Subspace,
    cfg: &SearchConfig,
) -> Result<IsoConstants> {
    let space = a.domain().clone();
    space.check_dim(m.ambient_dim())?;
    let ann = annihilator(m);
    let k = m.dim();

    struct QuotObj<'a> {
        b: &'a DMatrix<f64>,
        amat: &'a DMatrix<f64>,
        nbasis: &'a DMatrix<f64>,
        space: &'a Space,
    }
    impl QuotObj<'_> {
        fn ratio(&self, u: &DVector<f64>) -> f64 {
            let x = self.b * u;
            let n = self.space.norm_raw(&x);
            let d = quotient_distance_raw(&(self.amat * &x), self.nbasis, self.space);
            d / n
        }
    }
    impl RatioObjective for QuotObj<'_> {
        fn value(&self, u: &DVector<f64>) -> Option<f64> {
            Some(self.ratio(u))
        }
        fn gradient(&self, u: &DVector<f64>) -> Option<DVector<f64>> {
            // Central differences; the inner minimization makes the exact
            // gradient unwieldy and k is small.
            let h = 1e-6;
            let mut g = DVector::zeros(u.len());
            let mut up = u.clone();
            for i in 0..u.len() {
                up[i] = u[i] + h;
                let fp = self.ratio(&up);
                up[i] = u[i] - h;
                let fm = self.ratio(&up);
                up[i] = u[i];
                g[i] = (fp - fm) / (2.0 * h);
            }
            Some(g)
        }
    }

    let obj = QuotObj {
        b: m.basis(),
        amat: a.op().matrix(),
        nbasis: ann.basis(),
        space: &space,
    };
    let usphere = Space::euclidean(k);
    let lo = search::minimize_on_sphere(&usphere, &obj, cfg, &[])
        .expect("no exclusion band")
        .value;
    let hi = search::maximize_on_sphere(&usphere, &obj, cfg, &[])
        .expect("no exclusion band")
        .value;
    Ok(IsoConstants {
        lower: lo,
        upper: hi,
        isomorphism: lo > cfg.tol,
    })
}

/// The projection `S^-1 . S_hat` built from an invertible map `S` on `M`
/// (k x k, in basis coordinates) and an extension `S_hat : X -> R^k`
/// (k x n with `S_hat B = S`). Returns its n x n matrix: idempotent with
/// range `M`.
pub fn extension_projection(
    s_on_m: &DMatrix<f64>,
    s_hat: &DMatrix<f64>,
    m: &Subspace,
) -> Result<DMatrix<f64>> {
    let k = m.dim();
    let n = m.ambient_dim();
    if s_on_m.shape() != (k, k) || s_hat.shape() != (k, n) {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: s_on_m.nrows(),
        });
    }
    let restricted = s_hat * m.basis();
    let scale = s_on_m.norm().max(1.0);
    if (&restricted - s_on_m).norm() > 1e-8 * scale {
        return Err(Error::InvalidParameter(
            "S_hat does not extend S: S_hat * B != S".into(),
        ));
    }
    let inv = s_on_m.clone().try_inverse().ok_or(Error::SingularMap)?;
    Ok(m.basis() * inv * s_hat)
}
