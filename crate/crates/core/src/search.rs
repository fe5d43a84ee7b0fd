//! Seeded samplers and the multi-start sphere search.
//!
//! Every extremal constant in this crate is an inf or sup of a
//! degree-0-homogeneous ratio, so it is searched on the unit sphere of the
//! owning space: multi-start projected gradient descent with step halving,
//! cross-checked by plain random sampling, reporting the better bound.
//! All randomness flows from an explicit seed through one ChaCha stream,
//! so results replay exactly.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::space::Space;

/// Budget and seed for the extremum searches and samplers.
#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Gradient-descent starts (random, on top of the structured starts).
    pub starts: usize,
    /// Iteration cap per start.
    pub iters: usize,
    /// Random cross-check samples.
    pub samples: usize,
    /// Master seed; mandatory input for reproducibility.
    pub seed: u64,
    /// Tolerance: exclusion bands and stall detection.
    pub tol: f64,
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        SearchConfig {
            seed,
            ..SearchConfig::default()
        }
    }

    /// Smaller budget for searches repeated across a parameter sweep.
    pub fn quick(seed: u64) -> Self {
        SearchConfig {
            starts: 12,
            iters: 300,
            samples: 20_000,
            seed,
            tol: 1e-9,
        }
    }
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            starts: 32,
            iters: 500,
            samples: 100_000,
            seed: 42,
            tol: 1e-9,
        }
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian(dim: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample(StandardNormal))
}

/// Uniform-direction sample on the unit sphere of `space` (Gaussian
/// direction, rescaled to space norm 1).
pub(crate) fn sphere_sample(space: &Space, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let g = gaussian(space.dim(), rng);
        let n = space.norm_raw(&g);
        if n > 1e-12 {
            return g / n;
        }
    }
}

/// A ratio objective on the sphere. `value` returns `None` inside an
/// exclusion band (e.g. near the kernel of the operator in play).
pub(crate) trait RatioObjective {
    fn value(&self, x: &DVector<f64>) -> Option<f64>;
    fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>>;
}

pub(crate) struct SearchOutcome {
    pub value: f64,
    pub witness: DVector<f64>,
}

/// Minimize a degree-0 ratio over the unit sphere. `extra_starts` are
/// deterministic structured starts (axes, constants, warm starts from a
/// coarser problem); they are normalized internally. Returns `None` when
/// every probe fell in the exclusion band.
pub(crate) fn minimize_on_sphere(
    space: &Space,
    obj: &dyn RatioObjective,
    cfg: &SearchConfig,
    extra_starts: &[DVector<f64>],
) -> Option<SearchOutcome> {
    let mut rng = rng(cfg.seed);
    let mut best: Option<SearchOutcome> = None;

    let mut consider = |value: f64, witness: DVector<f64>, best: &mut Option<SearchOutcome>| {
        if best.as_ref().map_or(true, |b| value < b.value) {
            *best = Some(SearchOutcome { value, witness });
        }
    };

    let mut structured: Vec<DVector<f64>> = Vec::new();
    for s in extra_starts {
        structured.push(s.clone());
    }
    // Axes and the constant vector are cheap and catch the common extremal
    // shapes of lp ratios.
    let axis_cap = space.dim().min(16);
    for i in 0..axis_cap {
        let mut e = DVector::zeros(space.dim());
        e[i] = 1.0;
        structured.push(e);
    }
    structured.push(DVector::from_element(space.dim(), 1.0));

    for k in 0..structured.len() + cfg.starts {
        let raw = if k < structured.len() {
            structured[k].clone()
        } else {
            gaussian(space.dim(), &mut rng)
        };
        let n = space.norm_raw(&raw);
        if n <= 1e-14 {
            continue;
        }
        let start = raw / n;
        if let Some(out) = descend(space, obj, start, cfg.iters) {
            consider(out.value, out.witness, &mut best);
        }
    }

    for _ in 0..cfg.samples {
        let x = sphere_sample(space, &mut rng);
        if let Some(v) = obj.value(&x) {
            consider(v, x, &mut best);
        }
    }

    best
}

/// Maximize by minimizing the negated objective.
pub(crate) fn maximize_on_sphere(
    space: &Space,
    obj: &dyn RatioObjective,
    cfg: &SearchConfig,
    extra_starts: &[DVector<f64>],
) -> Option<SearchOutcome> {
    struct Neg<'a>(&'a dyn RatioObjective);
    impl RatioObjective for Neg<'_> {
        fn value(&self, x: &DVector<f64>) -> Option<f64> {
            self.0.value(x).map(|v| -v)
        }
        fn gradient(&self, x: &DVector<f64>) -> Option<DVector<f64>> {
            self.0.gradient(x).map(|g| -g)
        }
    }
    minimize_on_sphere(space, &Neg(obj), cfg, extra_starts).map(|o| SearchOutcome {
        value: -o.value,
        witness: o.witness,
    })
}

fn descend(
    space: &Space,
    obj: &dyn RatioObjective,
    mut x: DVector<f64>,
    iters: usize,
) -> Option<SearchOutcome> {
    let mut fx = obj.value(&x)?;
    let mut step = 0.5;
    let mut stalls = 0usize;

    for _ in 0..iters {
        let Some(g) = obj.gradient(&x) else { break };
        let gnorm = g.norm();
        if gnorm <= 1e-16 * (1.0 + fx.abs()) {
            break;
        }
        let dir = g / gnorm;

        let mut improved = false;
        let mut t = step;
        while t > 1e-16 {
            let candidate = &x - &dir * t;
            let n = space.norm_raw(&candidate);
            if n > 1e-14 {
                let candidate = candidate / n;
                if let Some(fc) = obj.value(&candidate) {
                    if fc < fx {
                        let gain = fx - fc;
                        x = candidate;
                        fx = fc;
                        step = (t * 1.5).min(1.0);
                        improved = true;
                        if gain <= 1e-15 * (1.0 + fx.abs()) {
                            stalls += 1;
                        } else {
                            stalls = 0;
                        }
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
        if stalls >= 3 {
            break;
        }
    }

    Some(SearchOutcome { value: fx, witness: x })
}

/// Golden-section minimization of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    (mid, f(mid))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}
