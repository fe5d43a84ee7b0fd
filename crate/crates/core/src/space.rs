//! Finite-dimensional weighted `l^p` spaces, their duals and the duality map.
//!
//! A [`Space`] is the triple `(n, p, w)` with `p` in `(1, inf)` and positive
//! weights. Primal elements are [`Point`]s, dual elements are
//! [`Functional`]s; the duality product is the plain coordinate sum
//! `<f, x> = sum_i f_i x_i`, so all weights live in the norms:
//!
//! - `norm(x)      = (sum_i w_i |x_i|^p)^(1/p)`
//! - `dual_norm(f) = (sum_i w_i^(1-q) |f_i|^q)^(1/q)`, `1/p + 1/q = 1`
//!
//! With this convention the adjoint of a matrix operator is its plain
//! transpose and the dual of `(n, q, w^(1-q))` is `(n, p, w)` again.

use std::ops::Deref;

use nalgebra::DVector;
use serde::de::{SeqAccess, Visitor};
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A primal element `x` of a weighted `l^p` space.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub DVector<f64>);

/// A dual element acting through the unweighted coordinate pairing.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional(pub DVector<f64>);

macro_rules! coord_vector {
    ($name:ident) => {
        impl $name {
            pub fn from_slice(coords: &[f64]) -> Self {
                Self(DVector::from_row_slice(coords))
            }

            pub fn from_vec(coords: Vec<f64>) -> Self {
                Self(DVector::from_vec(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(DVector::zeros(dim))
            }

            pub fn len(&self) -> usize {
                self.0.len()
            }

            pub fn is_empty(&self) -> bool {
                self.0.is_empty()
            }
        }

        impl Deref for $name {
            type Target = DVector<f64>;

            fn deref(&self) -> &DVector<f64> {
                &self.0
            }
        }

        impl From<DVector<f64>> for $name {
            fn from(v: DVector<f64>) -> Self {
                Self(v)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
                let mut seq = serializer.serialize_seq(Some(self.0.len()))?;
                for v in self.0.iter() {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
                struct V;
                impl<'de> Visitor<'de> for V {
                    type Value = $name;

                    fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                        f.write_str("a sequence of floats")
                    }

                    fn visit_seq<A: SeqAccess<'de>>(
                        self,
                        mut seq: A,
                    ) -> std::result::Result<$name, A::Error> {
                        let mut out = Vec::with_capacity(seq.size_hint().unwrap_or(0));
                        while let Some(v) = seq.next_element::<f64>()? {
                            out.push(v);
                        }
                        Ok($name(DVector::from_vec(out)))
                    }
                }
                deserializer.deserialize_seq(V)
            }
        }
    };
}

coord_vector!(Point);
coord_vector!(Functional);

/// Duality product `<f, x> = sum_i f_i x_i`.
pub fn pairing(f: &Functional, x: &Point) -> Result<f64> {
    if f.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: f.len(),
            got: x.len(),
        });
    }
    Ok(pairing_raw(&f.0, &x.0))
}

pub(crate) fn pairing_raw(f: &DVector<f64>, x: &DVector<f64>) -> f64 {
    f.dot(x)
}

/// A finite-dimensional weighted `l^p` space.
#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    dim: usize,
    exponent: f64,
    weights: DVector<f64>,
}

impl Space {
    /// Requires `dim >= 1`, `p` strictly between 1 and infinity, and
    /// strictly positive weights of matching length.
    pub fn new(dim: usize, exponent: f64, weights: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(exponent > 1.0 && exponent.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponent p must lie in (1, inf), got {exponent}"
            )));
        }
        if weights.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "weights must be strictly positive and finite".into(),
            ));
        }
        Ok(Space {
            dim,
            exponent,
            weights: DVector::from_vec(weights),
        })
    }

    /// Unweighted `l^p` in dimension `dim`.
    pub fn unweighted(dim: usize, exponent: f64) -> Result<Self> {
        Space::new(dim, exponent, vec![1.0; dim])
    }

    /// Euclidean space: `p = 2`, unit weights.
    pub fn euclidean(dim: usize) -> Self {
        Space::unweighted(dim, 2.0).expect("dim >= 1")
    }

    /// Uniform quadrature of `[0,1]`: `w_i = 1/n`.
    pub fn uniform_quadrature(dim: usize, exponent: f64) -> Result<Self> {
        Space::new(dim, exponent, vec![1.0 / dim as f64; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Conjugate exponent `q = p / (p - 1)`.
    pub fn dual_exponent(&self) -> f64 {
        self.exponent / (self.exponent - 1.0)
    }

    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    /// The dual space `(n, q, w^(1-q))`: its `norm` is this space's
    /// `dual_norm` and its duality map is the dual-side gauge map.
    pub fn dual(&self) -> Space {
        let q = self.dual_exponent();
        let weights = self.weights.map(|w| w.powf(1.0 - q));
        Space {
            dim: self.dim,
            exponent: q,
            weights,
        }
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: len,
            });
        }
        Ok(())
    }

    /// `(sum_i w_i |x_i|^p)^(1/p)`.
    pub fn norm(&self, x: &Point) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.norm_raw(&x.0))
    }

    /// `(sum_i w_i^(1-q) |f_i|^q)^(1/q)`; equals `sup <f,x>/norm(x)`.
    pub fn dual_norm(&self, f: &Functional) -> Result<f64> {
        self.check_dim(f.len())?;
        Ok(self.dual().norm_raw(&f.0))
    }

    /// `J(x)_i = w_i |x_i|^(p-1) sign(x_i)`, the norm-attaining functional:
    /// `<J(x), x> = norm(x)^p` and `dual_norm(J(x)) = norm(x)^(p-1)`.
    pub fn duality_map(&self, x: &Point) -> Result<Functional> {
        self.check_dim(x.len())?;
        if self.norm_raw(&x.0) == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(Functional(self.gauge_raw(&x.0)))
    }

    pub(crate) fn norm_raw(&self, x: &DVector<f64>) -> f64 {
        self.norm_pow_raw(x).powf(1.0 / self.exponent)
    }

    /// `sum_i w_i |x_i|^p` (the p-th power of the norm), with an exact
    /// `x*x` path at p = 2.
    pub(crate) fn norm_pow_raw(&self, x: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        if self.exponent == 2.0 {
            for i in 0..self.dim {
                acc += self.weights[i] * x[i] * x[i];
            }
        } else {
            for i in 0..self.dim {
                acc += self.weights[i] * x[i].abs().powf(self.exponent);
            }
        }
        acc
    }

    /// Squared norm; shares the p = 2 fast path with `norm_pow_raw`.
    pub(crate) fn norm_sq_raw(&self, x: &DVector<f64>) -> f64 {
        let pow = self.norm_pow_raw(x);
        if self.exponent == 2.0 {
            pow
        } else {
            pow.powf(2.0 / self.exponent)
        }
    }

    pub(crate) fn dual_norm_raw(&self, f: &DVector<f64>) -> f64 {
        self.dual().norm_raw(f)
    }

    pub(crate) fn dual_norm_sq_raw(&self, f: &DVector<f64>) -> f64 {
        self.dual().norm_sq_raw(f)
    }

    /// Raw duality map, no zero check.
    pub(crate) fn gauge_raw(&self, x: &DVector<f64>) -> DVector<f64> {
        let p = self.exponent;
        DVector::from_fn(self.dim, |i, _| {
            let xi: f64 = x[i];
            if xi == 0.0 {
                0.0
            } else {
                self.weights[i] * xi.abs().powf(p - 1.0) * xi.signum()
            }
        })
    }

    /// Gradient of `x -> norm(x)` at a nonzero `x`: `J(x) / norm(x)^(p-1)`.
    pub(crate) fn norm_gradient_raw(&self, x: &DVector<f64>) -> DVector<f64> {
        let n = self.norm_raw(x);
        self.gauge_raw(x) / n.powf(self.exponent - 1.0)
    }
}

impl Serialize for Space {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = serializer.serialize_struct("Space", 3)?;
        s.serialize_field("dim", &self.dim)?;
        s.serialize_field("p", &self.exponent)?;
        s.serialize_field("weights", &self.weights.as_slice())?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Space {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Dto {
            dim: usize,
            p: f64,
            weights: Vec<f64>,
        }
        let dto = Dto::deserialize(deserializer)?;
        Space::new(dto.dim, dto.p, dto.weights).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search;
    use rand::Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn euclidean_norm() {
        let s = Space::euclidean(2);
        assert_eq!(s.norm(&Point::from_slice(&[3.0, 4.0])).unwrap(), 5.0);
    }

    #[test]
    fn unit_vector_norm_is_one_for_any_p() {
        for p in [1.5, 2.0, 3.0, 4.0, 10.0] {
            let s = Space::unweighted(4, p).unwrap();
            let e1 = Point::from_slice(&[1.0, 0.0, 0.0, 0.0]);
            assert!(close(s.norm(&e1).unwrap(), 1.0, 1e-15), "p = {p}");
        }
    }

    #[test]
    fn weighted_p3_norm_matches_hand_formula() {
        // (1*1 + 2*1)^(1/3) = 3^(1/3)
        let s = Space::new(2, 3.0, vec![1.0, 2.0]).unwrap();
        let x = Point::from_slice(&[1.0, 1.0]);
        assert!(close(s.norm(&x).unwrap(), 3.0_f64.powf(1.0 / 3.0), 1e-14));
    }

    #[test]
    fn norm_zero_iff_zero() {
        let s = Space::new(3, 2.5, vec![0.1, 1.0, 7.0]).unwrap();
        assert_eq!(s.norm(&Point::zeros(3)).unwrap(), 0.0);
        assert!(s.norm(&Point::from_slice(&[0.0, 1e-30, 0.0])).unwrap() > 0.0);
    }

    #[test]
    fn dual_norm_self_dual_euclidean() {
        let s = Space::euclidean(2);
        let f = Functional::from_slice(&[3.0, 4.0]);
        assert!(close(s.dual_norm(&f).unwrap(), 5.0, 1e-15));
    }

    #[test]
    fn dual_norm_coordinate_functional() {
        let s = Space::unweighted(2, 4.0).unwrap();
        let f = Functional::from_slice(&[1.0, 0.0]);
        assert!(close(s.dual_norm(&f).unwrap(), 1.0, 1e-15));
    }

    #[test]
    fn dual_norm_is_the_pairing_supremum() {
        // p = 4, w = 1, f = (1,1): dual norm = 2^(3/4). The supremum oracle
        // samples random x and also evaluates the known maximizer
        // x_i = |f_i|^(q-1) sign(f_i).
        let s = Space::unweighted(2, 4.0).unwrap();
        let f = Functional::from_slice(&[1.0, 1.0]);
        let claimed = s.dual_norm(&f).unwrap();
        assert!(close(claimed, 2.0_f64.powf(0.75), 1e-14));

        let mut rng = search::rng(7);
        let mut sup: f64 = 0.0;
        for _ in 0..100_000 {
            let x = search::sphere_sample(&s, &mut rng);
            sup = sup.max(pairing_raw(&f.0, &x));
        }
        let q = s.dual_exponent();
        let maximizer = DVector::from_fn(2, |i, _| f.0[i].abs().powf(q - 1.0) * f.0[i].signum());
        let reach = pairing_raw(&f.0, &maximizer) / s.norm_raw(&maximizer);
        sup = sup.max(reach);
        assert!(sup <= claimed + 1e-12, "sampled sup exceeds dual norm");
        assert!(close(sup, claimed, 1e-10), "sup {sup} vs dual norm {claimed}");
    }

    #[test]
    fn pairing_examples() {
        let f = Functional::from_slice(&[1.0, 2.0]);
        let x = Point::from_slice(&[3.0, 4.0]);
        assert_eq!(pairing(&f, &x).unwrap(), 11.0);
        assert_eq!(pairing(&Functional::zeros(2), &x).unwrap(), 0.0);
        let g = Functional::from_slice(&[1.0, -1.0]);
        let y = Point::from_slice(&[1.0, 1.0]);
        assert_eq!(pairing(&g, &y).unwrap(), 0.0);
    }

    #[test]
    fn pairing_dimension_mismatch() {
        let f = Functional::from_slice(&[1.0, 2.0, 3.0]);
        let x = Point::from_slice(&[1.0]);
        assert!(matches!(
            pairing(&f, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn duality_map_examples() {
        // p = 2, w = 1: identity.
        let s = Space::euclidean(2);
        let x = Point::from_slice(&[3.0, 4.0]);
        assert_eq!(s.duality_map(&x).unwrap().0, x.0);

        // p = 4, w = 1: |x|^3 sign(x).
        let s = Space::unweighted(2, 4.0).unwrap();
        let x = Point::from_slice(&[1.0, -2.0]);
        let j = s.duality_map(&x).unwrap();
        assert!(close(j.0[0], 1.0, 1e-15));
        assert!(close(j.0[1], -8.0, 1e-15));

        // p = 3, w = (2,1): w |x|^2 sign(x).
        let s = Space::new(2, 3.0, vec![2.0, 1.0]).unwrap();
        let x = Point::from_slice(&[1.0, 1.0]);
        let j = s.duality_map(&x).unwrap();
        assert!(close(j.0[0], 2.0, 1e-15));
        assert!(close(j.0[1], 1.0, 1e-15));
    }

    #[test]
    fn duality_map_rejects_zero() {
        let s = Space::unweighted(3, 4.0).unwrap();
        assert!(matches!(
            s.duality_map(&Point::zeros(3)),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn duality_map_extremality() {
        let s = Space::new(3, 3.5, vec![0.2, 1.0, 4.0]).unwrap();
        let mut rng = search::rng(11);
        for _ in 0..200 {
            let x = Point(search::gaussian(3, &mut rng));
            let n = s.norm(&x).unwrap();
            let j = s.duality_map(&x).unwrap();
            let lhs = pairing(&j, &x).unwrap();
            assert!(
                (lhs - n * s.dual_norm(&j).unwrap()).abs() <= 1e-10 * lhs.abs().max(1.0),
                "extremality failed"
            );
            assert!((lhs - n.powf(s.exponent())).abs() <= 1e-9 * lhs.abs().max(1.0));
        }
    }

    #[test]
    fn dual_of_dual_is_the_original_space() {
        let s = Space::new(4, 2.7, vec![0.3, 1.0, 2.0, 5.5]).unwrap();
        let dd = s.dual().dual();
        assert_eq!(dd.dim(), s.dim());
        assert!(close(dd.exponent(), s.exponent(), 1e-12));
        for i in 0..4 {
            assert!(close(dd.weights()[i], s.weights()[i], 1e-12));
        }
        // dual_norm(f) on S equals norm of the Riesz-like image f/w in (q, w).
        let qspace = Space::new(4, s.dual_exponent(), s.weights().as_slice().to_vec()).unwrap();
        let mut rng = search::rng(3);
        for _ in 0..100 {
            let f = Functional(search::gaussian(4, &mut rng));
            let image = Point(DVector::from_fn(4, |i, _| f.0[i] / s.weights()[i]));
            let a = s.dual_norm(&f).unwrap();
            let b = qspace.norm(&image).unwrap();
            assert!(close(a, b, 1e-12 * a.max(1.0)));
        }
    }

    #[test]
    fn triangle_inequality_sampled() {
        let s = Space::new(5, 3.0, vec![0.5, 1.0, 2.0, 0.1, 4.0]).unwrap();
        let mut rng = search::rng(5);
        for _ in 0..10_000 {
            let x = search::gaussian(5, &mut rng);
            let y = search::gaussian(5, &mut rng);
            let lhs = s.norm_raw(&(&x + &y));
            assert!(lhs <= s.norm_raw(&x) + s.norm_raw(&y) + 1e-12);
        }
    }

    #[test]
    fn hoelder_inequality_sampled() {
        let s = Space::new(4, 4.0, vec![0.5, 1.0, 2.0, 3.0]).unwrap();
        let mut rng = search::rng(6);
        for _ in 0..10_000 {
            let x = search::gaussian(4, &mut rng);
            let f = search::gaussian(4, &mut rng);
            let lhs = f.dot(&x);
            assert!(lhs <= s.dual_norm_raw(&f) * s.norm_raw(&x) + 1e-12);
        }
    }

    #[test]
    fn homogeneity_of_norm() {
        let s = Space::new(3, 2.5, vec![1.0, 2.0, 3.0]).unwrap();
        let mut rng = search::rng(9);
        for _ in 0..500 {
            let x = search::gaussian(3, &mut rng);
            let t: f64 = rng.gen_range(-10.0..10.0);
            let a = s.norm_raw(&(&x * t));
            let b = t.abs() * s.norm_raw(&x);
            assert!(close(a, b, 1e-12 * b.max(1.0)));
        }
    }

    #[test]
    fn space_serialization_round_trip() {
        let s = Space::new(3, 4.0, vec![1.0, 0.5, 2.0]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"dim":3,"p":4.0,"weights":[1.0,0.5,2.0]}"#);
        let back: Space = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn space_rejects_bad_parameters() {
        assert!(Space::new(0, 2.0, vec![]).is_err());
        assert!(Space::new(2, 1.0, vec![1.0, 1.0]).is_err());
        assert!(Space::new(2, f64::INFINITY, vec![1.0, 1.0]).is_err());
        assert!(Space::new(2, 2.0, vec![1.0, 0.0]).is_err());
        assert!(Space::new(2, 2.0, vec![1.0, -1.0]).is_err());
        assert!(Space::new(2, 2.0, vec![1.0]).is_err());
    }
}
