//! Stampacchia variational inequality on weighted l2 spaces.
//!
//! Find `x` in a closed convex set `M` with `a(x, z - x) >= <h, z - x>` for
//! all `z` in `M`. For a coercive form this has a unique solution; the
//! solver is the classical projected fixed-point iteration
//! `x <- P_M(x - rho G(Ax - h))` with the Riesz map `(Gf)_i = f_i / w_i`,
//! step `rho = c / L^2` and contraction factor `sqrt(1 - c^2/L^2)`, which
//! doubles as a test oracle. Positive-but-noncoercive forms on bounded sets
//! are accepted in best-effort mode, which switches to the extragradient
//! iteration and leans on [`verify_vi`] for its certificate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::decomposition::Subspace;
use crate::error::{Error, Result};
use crate::operator::BilinearForm;
use crate::search;
use crate::space::{pairing_raw, Functional, Point, Space};

/// Closed convex feasible sets with classical projections.
#[derive(Clone, Debug)]
pub enum ConvexSet {
    WholeSpace,
    /// `lo <= x <= hi` componentwise; entries may be infinite.
    Box { lo: DVector<f64>, hi: DVector<f64> },
    /// Norm ball in the space norm.
    Ball { center: Point, radius: f64 },
    /// `offset + range(basis)`; basis n x k of full column rank.
    AffineSubspace { basis: DMatrix<f64>, offset: Point },
    /// `{ x >= 0, sum x_i = scale }`.
    Simplex { scale: f64 },
}

impl ConvexSet {
    pub fn unit_box(n: usize) -> ConvexSet {
        ConvexSet::Box {
            lo: DVector::zeros(n),
            hi: DVector::from_element(n, 1.0),
        }
    }

    pub fn validate(&self, space: &Space) -> Result<()> {
        match self {
            ConvexSet::WholeSpace => Ok(()),
            ConvexSet::Box { lo, hi } => {
                space.check_dim(lo.len())?;
                space.check_dim(hi.len())?;
                if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                    return Err(Error::InvalidParameter("box requires lo <= hi".into()));
                }
                Ok(())
            }
            ConvexSet::Ball { center, radius } => {
                space.check_dim(center.len())?;
                if !(*radius > 0.0) {
                    return Err(Error::InvalidParameter("ball radius must be > 0".into()));
                }
                Ok(())
            }
            ConvexSet::AffineSubspace { basis, offset } => {
                space.check_dim(basis.nrows())?;
                space.check_dim(offset.len())?;
                Ok(())
            }
            ConvexSet::Simplex { scale } => {
                if !(*scale > 0.0) {
                    return Err(Error::InvalidParameter("simplex scale must be > 0".into()));
                }
                Ok(())
            }
        }
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConvexSet::WholeSpace | ConvexSet::AffineSubspace { .. } => false,
            ConvexSet::Box { lo, hi } => {
                lo.iter().all(|v| v.is_finite()) && hi.iter().all(|v| v.is_finite())
            }
            ConvexSet::Ball { .. } | ConvexSet::Simplex { .. } => true,
        }
    }

    /// Nearest point of the set in the weighted l2 norm. Requires p = 2;
    /// the simplex additionally requires uniform weights.
    pub fn project(&self, x: &Point, space: &Space) -> Result<Point> {
        if space.exponent() != 2.0 {
            return Err(Error::UnsupportedProjection(
                "projections are implemented for p = 2 only".into(),
            ));
        }
        space.check_dim(x.len())?;
        self.validate(space)?;
        Ok(Point(self.project_raw(&x.0, space)?))
    }

    pub(crate) fn project_raw(&self, x: &DVector<f64>, space: &Space) -> Result<DVector<f64>> {
        match self {
            ConvexSet::WholeSpace => Ok(x.clone()),
            ConvexSet::Box { lo, hi } => Ok(DVector::from_fn(x.len(), |i, _| {
                x[i].max(lo[i]).min(hi[i])
            })),
            ConvexSet::Ball { center, radius } => {
                let d = x - &center.0;
                let dist = space.norm_raw(&d);
                if dist <= *radius {
                    Ok(x.clone())
                } else {
                    Ok(&center.0 + d * (*radius / dist))
                }
            }
            ConvexSet::AffineSubspace { basis, offset } => {
                // Weighted least squares: u = (B^T W B)^-1 B^T W (x - o).
                let w = space.weights();
                let mut btw = basis.transpose();
                for j in 0..btw.ncols() {
                    let mut col = btw.column_mut(j);
                    col *= w[j];
                }
                let gram = &btw * basis;
                let rhs = &btw * (x - &offset.0);
                let u = gram.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
                Ok(&offset.0 + basis * u)
            }
            ConvexSet::Simplex { scale } => {
                let w0 = space.weights()[0];
                if space.weights().iter().any(|w| (w - w0).abs() > 1e-14 * w0) {
                    return Err(Error::UnsupportedProjection(
                        "simplex projection requires uniform weights".into(),
                    ));
                }
                Ok(project_simplex(x, *scale))
            }
        }
    }

    pub fn contains(&self, x: &Point, space: &Space, tol: f64) -> Result<bool> {
        space.check_dim(x.len())?;
        Ok(match self {
            ConvexSet::WholeSpace => true,
            ConvexSet::Box { lo, hi } => x
                .0
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= lo[i] - tol && *v <= hi[i] + tol),
            ConvexSet::Ball { center, radius } => {
                space.norm_raw(&(&x.0 - &center.0)) <= radius + tol
            }
            ConvexSet::AffineSubspace { .. } => {
                let p = self.project_raw(&x.0, space)?;
                space.norm_raw(&(&x.0 - &p)) <= tol
            }
            ConvexSet::Simplex { scale } => {
                x.0.iter().all(|v| *v >= -tol) && (x.0.sum() - scale).abs() <= tol
            }
        })
    }

    /// A feasible sample near the scale of `around`.
    pub(crate) fn sample(
        &self,
        around: &DVector<f64>,
        space: &Space,
        rng: &mut ChaCha8Rng,
    ) -> DVector<f64> {
        let n = space.dim();
        match self {
            ConvexSet::WholeSpace => {
                let scale = 1.0 + space.norm_raw(around);
                around + search::gaussian(n, rng) * scale * rng.gen_range(0.1..10.0)
            }
            ConvexSet::Box { lo, hi } => DVector::from_fn(n, |i, _| {
                match (lo[i].is_finite(), hi[i].is_finite()) {
                    (true, true) => rng.gen_range(lo[i]..=hi[i]),
                    (true, false) => lo[i] + rng.gen::<f64>().abs() * (1.0 + around[i].abs()) * 3.0,
                    (false, true) => hi[i] - rng.gen::<f64>().abs() * (1.0 + around[i].abs()) * 3.0,
                    (false, false) => {
                        around[i] + rng.sample::<f64, _>(rand_distr::StandardNormal) * (1.0 + around[i].abs()) * 3.0
                    }
                }
            }),
            ConvexSet::Ball { center, radius } => {
                let dir = search::sphere_sample(space, rng);
                let r = *radius * rng.gen::<f64>().powf(1.0 / n as f64);
                &center.0 + dir * r
            }
            ConvexSet::AffineSubspace { basis, offset } => {
                let u = search::gaussian(basis.ncols(), rng) * rng.gen_range(0.1..10.0);
                &offset.0 + basis * u
            }
            ConvexSet::Simplex { scale } => {
                // Dirichlet(1,...,1) via exponentials.
                let mut e = DVector::from_fn(n, |_, _| -rng.gen::<f64>().max(1e-300).ln());
                let s = e.sum();
                e *= *scale / s;
                e
            }
        }
    }

    /// Vertices for the polytope cases when there are at most 2^16 of them.
    pub(crate) fn vertices(&self, space: &Space) -> Option<Vec<DVector<f64>>> {
        let n = space.dim();
        match self {
            ConvexSet::Box { lo, hi } => {
                if n > 16 || lo.iter().any(|v| !v.is_finite()) || hi.iter().any(|v| !v.is_finite())
                {
                    return None;
                }
                let count = 1usize << n;
                let mut out = Vec::with_capacity(count);
                for mask in 0..count {
                    out.push(DVector::from_fn(n, |i, _| {
                        if mask >> i & 1 == 1 {
                            hi[i]
                        } else {
                            lo[i]
                        }
                    }));
                }
                Some(out)
            }
            ConvexSet::Simplex { scale } => {
                if n > 1 << 16 {
                    return None;
                }
                Some(
                    (0..n)
                        .map(|i| {
                            let mut e = DVector::zeros(n);
                            e[i] = *scale;
                            e
                        })
                        .collect(),
                )
            }
            _ => None,
        }
    }
}

/// Euclidean projection onto `{ x >= 0, sum x = scale }` (sort-based).
fn project_simplex(x: &DVector<f64>, scale: f64) -> DVector<f64> {
    let n = x.len();
    let mut sorted: Vec<f64> = x.iter().copied().collect();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cumsum = 0.0;
    let mut tau = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - scale) / (j as f64 + 1.0);
        if v - t > 0.0 {
            tau = t;
        }
    }
    DVector::from_fn(n, |i, _| (x[i] - tau).max(0.0))
}

/// A variational-inequality problem over a coercive (or, in best-effort
/// mode, positive) form on a p = 2 space.
#[derive(Clone, Debug)]
pub struct ViProblem {
    form: BilinearForm,
    set: ConvexSet,
    rhs: Functional,
    coercivity: f64,
    op_norm: f64,
    best_effort: bool,
}

impl ViProblem {
    /// Standard construction: requires p = 2 and a coercive form
    /// (`c > 0` is verified here, through the exact p = 2 eigenvalue
    /// route).
    pub fn new(form: BilinearForm, set: ConvexSet, rhs: Functional) -> Result<Self> {
        Self::build(form, set, rhs, false)
    }

    /// Accepts a positive-but-noncoercive form on a bounded set; the
    /// solver then runs the extragradient iteration without a contraction
    /// certificate and the caller should certify with [`verify_vi`].
    pub fn best_effort(form: BilinearForm, set: ConvexSet, rhs: Functional) -> Result<Self> {
        Self::build(form, set, rhs, true)
    }

    fn build(form: BilinearForm, set: ConvexSet, rhs: Functional, best_effort: bool) -> Result<Self> {
        let space = form.domain();
        if space.exponent() != 2.0 {
            return Err(Error::InvalidParameter(
                "variational inequalities require p = 2".into(),
            ));
        }
        space.check_dim(rhs.len())?;
        set.validate(space)?;
        let coercivity = form
            .op()
            .p2_coercivity_exact()
            .expect("p = 2 checked above");
        let op_norm = form.op().p2_operator_norm_exact().expect("p = 2");
        if !best_effort && coercivity <= 0.0 {
            return Err(Error::NotCoercive {
                constant: coercivity,
            });
        }
        if best_effort && coercivity <= 0.0 {
            if !form.op().positive_semidefinite(1e-12) {
                return Err(Error::NotPositive { value: coercivity });
            }
            if !set.is_bounded() {
                return Err(Error::InvalidParameter(
                    "best-effort mode requires a bounded set".into(),
                ));
            }
        }
        Ok(ViProblem {
            form,
            set,
            rhs,
            coercivity,
            op_norm,
            best_effort,
        })
    }

    pub fn form(&self) -> &BilinearForm {
        &self.form
    }

    pub fn set(&self) -> &ConvexSet {
        &self.set
    }

    pub fn rhs(&self) -> &Functional {
        &self.rhs
    }

    pub fn space(&self) -> &Space {
        self.form.domain()
    }

    pub fn coercivity(&self) -> f64 {
        self.coercivity
    }

    pub fn operator_norm(&self) -> f64 {
        self.op_norm
    }

    /// Residual map `x -> P(x - rho G(Ax - h))` and its distance to `x`.
    fn fixed_point_step(&self, x: &DVector<f64>, rho: f64) -> Result<(DVector<f64>, f64)> {
        let space = self.space();
        let grad = self.form.op().apply_raw(x) - &self.rhs.0;
        let riesz = DVector::from_fn(space.dim(), |i, _| grad[i] / space.weights()[i]);
        let next = self.set.project_raw(&(x - riesz * rho), space)?;
        let residual = space.norm_raw(&(x - &next));
        Ok((next, residual))
    }
}

/// Solver options; the seed drives the uniqueness-certificate restart.
#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    /// Re-solve from an independent random start and require agreement
    /// within `10 * tol`.
    pub certify_uniqueness: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 200_000,
            seed: 42,
            certify_uniqueness: true,
        }
    }
}

/// A certified solution of the variational inequality.
#[derive(Clone, Debug, Serialize)]
pub struct ViSolution {
    pub x: Point,
    /// Natural residual `|x - P(x - rho G(Ax - h))|` at the solution.
    pub residual: f64,
    pub iterations: usize,
    /// Step `rho` used by the iteration.
    pub step: f64,
    /// Contraction factor `sqrt(1 - c^2/L^2)` of the coercive path;
    /// absent in best-effort mode.
    pub contraction: Option<f64>,
}

/// Projected fixed-point (coercive) or extragradient (best-effort) solve.
pub fn solve_vi(prob: &ViProblem, opts: &SolveOptions) -> Result<ViSolution> {
    let space = prob.space();
    let x0 = prob.set.project_raw(&DVector::zeros(space.dim()), space)?;
    let first = solve_from(prob, x0, opts)?;

    if opts.certify_uniqueness {
        let mut rng = search::rng(opts.seed);
        let start = search::gaussian(space.dim(), &mut rng)
            * (1.0 + space.norm_raw(&first.x.0));
        let start = prob.set.project_raw(&start, space)?;
        let second = solve_from(prob, start, opts)?;
        let gap = space.norm_raw(&(&first.x.0 - &second.x.0));
        let allowed = 10.0 * opts.tol;
        if gap > allowed {
            return Err(Error::UniquenessCertificate { gap, allowed });
        }
    }
    Ok(first)
}

fn solve_from(prob: &ViProblem, x0: DVector<f64>, opts: &SolveOptions) -> Result<ViSolution> {
    let c = prob.coercivity;
    let l = prob.op_norm;
    if prob.best_effort && c <= 0.0 {
        return extragradient(prob, x0, opts);
    }

    let rho = c / (l * l);
    let contraction = (1.0 - (c * c) / (l * l)).max(0.0).sqrt();
    let mut x = x0;
    for k in 0..opts.max_iter {
        let (next, residual) = prob.fixed_point_step(&x, rho)?;
        x = next;
        if residual < opts.tol {
            return Ok(ViSolution {
                x: Point(x),
                residual,
                iterations: k + 1,
                step: rho,
                contraction: Some(contraction),
            });
        }
    }
    let (_, residual) = prob.fixed_point_step(&x, rho)?;
    Err(Error::NonConvergence {
        max_iter: opts.max_iter,
        residual,
        best: Box::new(ViSolution {
            x: Point(x),
            residual,
            iterations: opts.max_iter,
            step: rho,
            contraction: Some(contraction),
        }),
    })
}

/// Korpelevich extragradient for monotone (positive-semidefinite) maps.
fn extragradient(prob: &ViProblem, x0: DVector<f64>, opts: &SolveOptions) -> Result<ViSolution> {
    let space = prob.space();
    let l = prob.op_norm.max(1e-12);
    let rho = 0.7 / l;
    let field = |x: &DVector<f64>| -> DVector<f64> {
        let grad = prob.form.op().apply_raw(x) - &prob.rhs.0;
        DVector::from_fn(space.dim(), |i, _| grad[i] / space.weights()[i])
    };
    let mut x = x0;
    for k in 0..opts.max_iter {
        let y = prob.set.project_raw(&(&x - field(&x) * rho), space)?;
        let next = prob.set.project_raw(&(&x - field(&y) * rho), space)?;
        let residual = space.norm_raw(&(&x - &y));
        x = next;
        if residual < opts.tol {
            let (_, res) = prob.fixed_point_step(&x, rho)?;
            return Ok(ViSolution {
                x: Point(x),
                residual: res,
                iterations: k + 1,
                step: rho,
                contraction: None,
            });
        }
    }
    let (_, residual) = prob.fixed_point_step(&x, rho)?;
    Err(Error::NonConvergence {
        max_iter: opts.max_iter,
        residual,
        best: Box::new(ViSolution {
            x: Point(x),
            residual,
            iterations: opts.max_iter,
            step: rho,
            contraction: None,
        }),
    })
}

/// Result of sampling the inequality `a(x, z-x) >= <h, z-x>` over the set.
#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub ok: bool,
    /// Largest observed `<h, z-x> - a(x, z-x)` (positive = violated).
    pub worst_violation: f64,
    pub witness: Option<Point>,
    pub samples: usize,
    pub seed: u64,
}

/// Checks the defining inequality on `n_samples` random feasible points
/// plus all box/simplex vertices when there are at most 2^16 of them.
pub fn verify_vi(
    x: &Point,
    prob: &ViProblem,
    n_samples: usize,
    seed: u64,
    tol: f64,
) -> Result<VerifyReport> {
    let space = prob.space();
    space.check_dim(x.len())?;
    if !prob.set.contains(x, space, 1e-7)? {
        return Err(Error::InvalidParameter(
            "candidate point is not in the feasible set".into(),
        ));
    }
    let ax = prob.form.op().apply_raw(&x.0);
    let mut worst = f64::NEG_INFINITY;
    let mut witness: Option<DVector<f64>> = None;
    let mut consider = |z: DVector<f64>| {
        let d = &z - &x.0;
        let violation = pairing_raw(&prob.rhs.0, &d) - pairing_raw(&ax, &d);
        if violation > worst {
            worst = violation;
            witness = Some(z);
        }
    };

    if let Some(vertices) = prob.set.vertices(space) {
        for v in vertices {
            consider(v);
        }
    }
    let mut rng = search::rng(seed);
    for _ in 0..n_samples {
        consider(prob.set.sample(&x.0, space, &mut rng));
    }

    Ok(VerifyReport {
        ok: worst <= tol,
        worst_violation: worst,
        witness: witness.map(Point),
        samples: n_samples,
        seed,
    })
}

/// Galerkin solve on a subspace through the origin: `x = Bu` with
/// `(B^T A B) u = B^T h`. Agrees with [`solve_vi`] on the same data.
pub fn subspace_galerkin_solve(
    a: &BilinearForm,
    m: &Subspace,
    h: &Functional,
) -> Result<Point> {
    let space = a.domain();
    space.check_dim(m.ambient_dim())?;
    space.check_dim(h.len())?;
    let b = m.basis();
    let reduced = b.transpose() * a.op().matrix() * b;
    let rhs = b.transpose() * &h.0;
    let u = reduced.lu().solve(&rhs).ok_or(Error::SingularSystem)?;
    Ok(Point(b * u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::OperatorToDual;
    use crate::space::pairing;

    fn euclid(n: usize) -> Space {
        Space::euclidean(n)
    }

    fn form(rows: &[Vec<f64>], s: Space) -> BilinearForm {
        BilinearForm::new(OperatorToDual::from_rows(rows, s).unwrap())
    }

    fn box_problem() -> ViProblem {
        ViProblem::new(
            form(&[vec![2.0, 1.0], vec![-1.0, 2.0]], euclid(2)),
            ConvexSet::unit_box(2),
            Functional::from_slice(&[-1.0, 3.0]),
        )
        .unwrap()
    }

    #[test]
    fn project_box_clamps() {
        let s = euclid(2);
        let set = ConvexSet::unit_box(2);
        let p = set.project(&Point::from_slice(&[2.0, -1.0]), &s).unwrap();
        assert_eq!(p.0.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn project_ball_is_radial() {
        let s = euclid(2);
        let set = ConvexSet::Ball {
            center: Point::zeros(2),
            radius: 1.0,
        };
        let p = set.project(&Point::from_slice(&[3.0, 4.0]), &s).unwrap();
        assert!((p.0[0] - 0.6).abs() < 1e-14);
        assert!((p.0[1] - 0.8).abs() < 1e-14);
    }

    #[test]
    fn project_simplex_matches_grid_oracle() {
        let s = euclid(2);
        let set = ConvexSet::Simplex { scale: 1.0 };
        let x = Point::from_slice(&[0.8, 0.8]);
        let p = set.project(&x, &s).unwrap();
        assert!((p.0[0] - 0.5).abs() < 1e-12 && (p.0[1] - 0.5).abs() < 1e-12);

        // Brute-force fine grid over the simplex.
        let mut best = f64::INFINITY;
        let mut arg = 0.0;
        let mut t = 0.0;
        while t <= 1.0 {
            let cand = DVector::from_row_slice(&[t, 1.0 - t]);
            let d = s.norm_raw(&(&cand - &x.0));
            if d < best {
                best = d;
                arg = t;
            }
            t += 1e-5;
        }
        assert!((arg - 0.5).abs() < 1e-4);
        assert!((s.norm_raw(&(&p.0 - &x.0)) - best).abs() < 1e-8);
    }

    #[test]
    fn project_affine_weighted() {
        let s = Space::new(2, 2.0, vec![1.0, 4.0]).unwrap();
        let set = ConvexSet::AffineSubspace {
            basis: DMatrix::from_row_slice(2, 1, &[1.0, 1.0]),
            offset: Point::zeros(2),
        };
        let x = Point::from_slice(&[1.0, 0.0]);
        let p = set.project(&x, &s).unwrap();
        // minimize (u-1)^2 + 4 u^2 -> u = 1/5.
        assert!((p.0[0] - 0.2).abs() < 1e-12 && (p.0[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn projections_are_idempotent_and_nonexpansive() {
        let s = euclid(3);
        let sets = vec![
            ConvexSet::WholeSpace,
            ConvexSet::unit_box(3),
            ConvexSet::Box {
                lo: DVector::from_row_slice(&[0.0, f64::NEG_INFINITY, -1.0]),
                hi: DVector::from_row_slice(&[f64::INFINITY, 2.0, 1.0]),
            },
            ConvexSet::Ball {
                center: Point::from_slice(&[0.5, 0.0, 0.0]),
                radius: 2.0,
            },
            ConvexSet::AffineSubspace {
                basis: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
                offset: Point::from_slice(&[0.0, 0.0, 1.0]),
            },
            ConvexSet::Simplex { scale: 2.0 },
        ];
        let mut rng = search::rng(71);
        for set in &sets {
            for _ in 0..300 {
                let x = search::gaussian(3, &mut rng) * 3.0;
                let y = search::gaussian(3, &mut rng) * 3.0;
                let px = set.project_raw(&x, &s).unwrap();
                let py = set.project_raw(&y, &s).unwrap();
                let pp = set.project_raw(&px, &s).unwrap();
                assert!(s.norm_raw(&(&pp - &px)) <= 1e-10, "idempotent");
                assert!(
                    s.norm_raw(&(&px - &py)) <= s.norm_raw(&(&x - &y)) + 1e-12,
                    "nonexpansive"
                );
                assert!(set
                    .contains(&Point(px), &s, 1e-9)
                    .unwrap());
            }
        }
    }

    #[test]
    fn project_requires_p2() {
        let s = Space::unweighted(2, 4.0).unwrap();
        let set = ConvexSet::unit_box(2);
        assert!(matches!(
            set.project(&Point::zeros(2), &s),
            Err(Error::UnsupportedProjection(_))
        ));
    }

    #[test]
    fn simplex_projection_requires_uniform_weights() {
        let s = Space::new(2, 2.0, vec![1.0, 2.0]).unwrap();
        let set = ConvexSet::Simplex { scale: 1.0 };
        assert!(matches!(
            set.project(&Point::zeros(2), &s),
            Err(Error::UnsupportedProjection(_))
        ));
    }

    #[test]
    fn solve_unconstrained_identity() {
        let prob = ViProblem::new(
            form(&[vec![1.0, 0.0], vec![0.0, 1.0]], euclid(2)),
            ConvexSet::WholeSpace,
            Functional::from_slice(&[1.0, 2.0]),
        )
        .unwrap();
        let sol = solve_vi(&prob, &SolveOptions::default()).unwrap();
        assert!((sol.x.0[0] - 1.0).abs() < 1e-9);
        assert!((sol.x.0[1] - 2.0).abs() < 1e-9);
        assert!(sol.residual < 1e-10);
    }

    #[test]
    fn solve_ball_projects_rhs_for_identity_form() {
        let prob = ViProblem::new(
            form(&[vec![1.0, 0.0], vec![0.0, 1.0]], euclid(2)),
            ConvexSet::Ball {
                center: Point::zeros(2),
                radius: 1.0,
            },
            Functional::from_slice(&[3.0, 4.0]),
        )
        .unwrap();
        let sol = solve_vi(&prob, &SolveOptions::default()).unwrap();
        assert!((sol.x.0[0] - 0.6).abs() < 1e-8);
        assert!((sol.x.0[1] - 0.8).abs() < 1e-8);
    }

    #[test]
    fn solve_box_example() {
        let sol = solve_vi(&box_problem(), &SolveOptions::default()).unwrap();
        assert!(sol.x.0[0].abs() < 1e-8, "x = {:?}", sol.x.0.as_slice());
        assert!((sol.x.0[1] - 1.0).abs() < 1e-8);
        assert!(sol.contraction.unwrap() < 1.0);

        // Direct check of the inequality at the solution on a dense grid.
        let prob = box_problem();
        let ax = prob.form().op().apply(&sol.x).unwrap();
        for i in 0..=100 {
            for j in 0..=100 {
                let z = Point::from_slice(&[i as f64 / 100.0, j as f64 / 100.0]);
                let d = Point(&z.0 - &sol.x.0);
                let lhs = pairing(&ax, &d).unwrap();
                let rhs = pairing(prob.rhs(), &d).unwrap();
                assert!(lhs >= rhs - 1e-9);
            }
        }
    }

    #[test]
    fn rejects_non_coercive_without_flag() {
        let err = ViProblem::new(
            form(&[vec![0.0, -1.0], vec![1.0, 0.0]], euclid(2)),
            ConvexSet::unit_box(2),
            Functional::from_slice(&[1.0, 0.0]),
        );
        assert!(matches!(err, Err(Error::NotCoercive { .. })));
    }

    #[test]
    fn best_effort_solves_monotone_rotation_on_box() {
        // Antisymmetric form: pairing term vanishes, strictly positive fails,
        // the extragradient still settles the VI on the bounded box.
        let prob = ViProblem::best_effort(
            form(&[vec![0.0, -1.0], vec![1.0, 0.0]], euclid(2)),
            ConvexSet::unit_box(2),
            Functional::from_slice(&[-1.0, -1.0]),
        )
        .unwrap();
        let opts = SolveOptions {
            tol: 1e-9,
            certify_uniqueness: false,
            ..Default::default()
        };
        let sol = solve_vi(&prob, &opts).unwrap();
        let report = verify_vi(&sol.x, &prob, 20_000, 5, 1e-7).unwrap();
        assert!(report.ok, "worst violation {}", report.worst_violation);
        assert!(sol.contraction.is_none());
    }

    #[test]
    fn best_effort_requires_bounded_set() {
        let err = ViProblem::best_effort(
            form(&[vec![0.0, -1.0], vec![1.0, 0.0]], euclid(2)),
            ConvexSet::WholeSpace,
            Functional::zeros(2),
        );
        assert!(err.is_err());
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let prob = box_problem();
        let opts = SolveOptions {
            tol: 1e-14,
            max_iter: 3,
            certify_uniqueness: false,
            ..Default::default()
        };
        match solve_vi(&prob, &opts) {
            Err(Error::NonConvergence { best, .. }) => {
                assert_eq!(best.iterations, 3);
            }
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }

    #[test]
    fn verify_vi_accepts_solution_and_rejects_interior_fake() {
        let prob = box_problem();
        let sol = solve_vi(&prob, &SolveOptions::default()).unwrap();
        let good = verify_vi(&sol.x, &prob, 5000, 9, 1e-9).unwrap();
        assert!(good.ok, "worst = {}", good.worst_violation);

        let bad = verify_vi(&Point::from_slice(&[1.0, 1.0]), &prob, 5000, 9, 1e-9).unwrap();
        assert!(!bad.ok);
        let w = bad.witness.unwrap();
        // The violated direction: moving along -e1 exposes it.
        assert!(w.0[0] < 1.0);
    }

    #[test]
    fn verify_vi_whole_space_equality_case() {
        let prob = ViProblem::new(
            form(&[vec![2.0, 1.0], vec![-1.0, 2.0]], euclid(2)),
            ConvexSet::WholeSpace,
            Functional::from_slice(&[1.0, 1.0]),
        )
        .unwrap();
        // x = A^-1 h.
        let a = prob.form().op().matrix().clone();
        let x = Point(a.lu().solve(&prob.rhs().0).unwrap());
        let rep = verify_vi(&x, &prob, 10_000, 12, 1e-8).unwrap();
        assert!(rep.ok, "worst = {}", rep.worst_violation);
    }

    #[test]
    fn galerkin_examples() {
        // M = span{e1}, A = [[1,1],[0,1]], h = (2,5): u = 2.
        let a = form(&[vec![1.0, 1.0], vec![0.0, 1.0]], euclid(2));
        let m = Subspace::axes(2, &[0]).unwrap();
        let x = subspace_galerkin_solve(&a, &m, &Functional::from_slice(&[2.0, 5.0])).unwrap();
        assert!((x.0[0] - 2.0).abs() < 1e-12 && x.0[1].abs() < 1e-12);

        // M = whole space: x = A^-1 h.
        let a2 = form(&[vec![2.0, 1.0], vec![-1.0, 2.0]], euclid(2));
        let h = Functional::from_slice(&[1.0, 3.0]);
        let x2 = subspace_galerkin_solve(&a2, &Subspace::full(2), &h).unwrap();
        let direct = a2.op().matrix().clone().lu().solve(&h.0).unwrap();
        assert!((&x2.0 - &direct).amax() < 1e-12);
    }

    #[test]
    fn galerkin_agrees_with_vi_on_subspaces() {
        let a = form(
            &[vec![3.0, 1.0, 0.0], vec![-1.0, 2.0, 0.5], vec![0.0, -0.5, 1.5]],
            euclid(3),
        );
        let basis = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, -1.0]);
        let m = Subspace::new(basis.clone()).unwrap();
        let h = Functional::from_slice(&[1.0, -2.0, 0.5]);

        let galerkin = subspace_galerkin_solve(&a, &m, &h).unwrap();
        let prob = ViProblem::new(
            a,
            ConvexSet::AffineSubspace {
                basis,
                offset: Point::zeros(3),
            },
            h,
        )
        .unwrap();
        let opts = SolveOptions {
            tol: 1e-12,
            ..Default::default()
        };
        let sol = solve_vi(&prob, &opts).unwrap();
        assert!(
            (&sol.x.0 - &galerkin.0).amax() < 1e-8,
            "galerkin {:?} vs vi {:?}",
            galerkin.0.as_slice(),
            sol.x.0.as_slice()
        );
    }

    #[test]
    fn contraction_rate_is_met() {
        let prob = box_problem();
        let opts = SolveOptions {
            tol: 1e-13,
            ..Default::default()
        };
        let sol = solve_vi(&prob, &opts).unwrap();
        let rho = sol.step;
        let factor = sol.contraction.unwrap();

        // Replay the iteration and measure per-step error decay against
        // the converged point.
        let space = prob.space();
        let mut x = prob
            .set()
            .project_raw(&DVector::from_row_slice(&[0.9, 0.1]), space)
            .unwrap();
        let mut err = space.norm_raw(&(&x - &sol.x.0));
        for _ in 0..60 {
            let (next, _) = prob.fixed_point_step(&x, rho).unwrap();
            let next_err = space.norm_raw(&(&next - &sol.x.0));
            if err < 1e-12 {
                break;
            }
            assert!(
                next_err <= factor * 1.05 * err + 1e-15,
                "decay {next_err} vs predicted {}",
                factor * err
            );
            x = next;
            err = next_err;
        }
    }

    #[test]
    fn uniqueness_ten_random_starts() {
        let prob = box_problem();
        let opts = SolveOptions {
            tol: 1e-11,
            certify_uniqueness: false,
            ..Default::default()
        };
        let reference = solve_vi(&prob, &opts).unwrap();
        let space = prob.space();
        let mut rng = search::rng(33);
        for _ in 0..10 {
            let start = prob
                .set()
                .project_raw(&(search::gaussian(2, &mut rng) * 5.0), space)
                .unwrap();
            let sol = solve_from(&prob, start, &opts).unwrap();
            assert!(space.norm_raw(&(&sol.x.0 - &reference.x.0)) <= 10.0 * opts.tol);
        }
    }
}
