//! t-norms, t-conorms, generators and transfer functions, and the two
//! correspondences between them and m-schemes.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use super::MScheme;
use crate::error::{Error, Result};
use crate::value::ExtendedValue;

/// Binary laws on `[0, 1]` with identity 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TNorm {
    Minimum,
    Product,
    /// `W(x, y) = max(x + y - 1, 0)`
    Lukasiewicz,
}

impl TNorm {
    #[inline]
    pub fn apply(self, x: f64, y: f64) -> f64 {
        match self {
            TNorm::Minimum => x.min(y),
            TNorm::Product => x * y,
            TNorm::Lukasiewicz => (x + y - 1.0).max(0.0),
        }
    }
}

/// Binary laws on `[0, 1]` with identity 0.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum TConorm {
    Maximum,
    DrasticSum,
}

impl TConorm {
    #[inline]
    pub fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            TConorm::Maximum => a.max(b),
            TConorm::DrasticSum => {
                if a == 0.0 {
                    b
                } else if b == 0.0 {
                    a
                } else {
                    1.0
                }
            }
        }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A strictly increasing continuous map `psi: [0, 1] -> [0, inf]` with
/// `psi(0) = 0`, together with its inverse.
#[derive(Clone)]
pub enum Generator {
    /// `psi(x) = -(1/c) ln(1 - x)`, inverse `1 - exp(-c r)`.
    NegLogComplement { c: f64 },
    /// `psi(x) = -1 / ln(x)`, inverse `exp(-1 / r)`.
    NegReciprocalLog,
    Custom {
        name: String,
        forward: ScalarFn,
        inverse: ScalarFn,
    },
}

impl Generator {
    pub fn custom(
        name: impl Into<String>,
        forward: impl Fn(f64) -> f64 + Send + Sync + 'static,
        inverse: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Generator::Custom {
            name: name.into(),
            forward: Arc::new(forward),
            inverse: Arc::new(inverse),
        }
    }

    pub fn forward(&self, x: f64) -> f64 {
        match self {
            Generator::NegLogComplement { c } => {
                if x >= 1.0 {
                    f64::INFINITY
                } else {
                    -(-x).ln_1p() / c + 0.0
                }
            }
            Generator::NegReciprocalLog => {
                if x <= 0.0 {
                    0.0
                } else if x >= 1.0 {
                    f64::INFINITY
                } else {
                    -1.0 / x.ln()
                }
            }
            Generator::Custom { forward, .. } => forward(x),
        }
    }

    pub fn inverse(&self, r: f64) -> f64 {
        match self {
            Generator::NegLogComplement { c } => -(-c * r).exp_m1(),
            Generator::NegReciprocalLog => {
                if r <= 0.0 {
                    0.0
                } else {
                    (-1.0 / r).exp()
                }
            }
            Generator::Custom { inverse, .. } => inverse(r),
        }
    }

    /// Checks strict monotonicity, the endpoint values and the inverse on a
    /// sample of `[0, 1]`.
    fn check_invertible(&self) -> Result<()> {
        if let Generator::NegLogComplement { c } = self {
            if !(c.is_finite() && *c > 0.0) {
                return Err(Error::NonInvertibleGenerator(format!("scale c = {c} must be positive")));
            }
        }
        let at0 = self.forward(0.0);
        if at0 != 0.0 {
            return Err(Error::NonInvertibleGenerator(format!("psi(0) = {at0}, expected 0")));
        }
        const SAMPLES: usize = 257;
        let mut prev = at0;
        for i in 1..SAMPLES {
            let x = i as f64 / (SAMPLES - 1) as f64;
            let y = self.forward(x);
            if y.is_nan() || y <= prev {
                return Err(Error::NonInvertibleGenerator(format!(
                    "psi is not strictly increasing near x = {x}"
                )));
            }
            if y.is_finite() {
                let back = self.inverse(y);
                if (back - x).abs() > 1e-6 {
                    return Err(Error::NonInvertibleGenerator(format!(
                        "inverse(psi({x})) = {back}"
                    )));
                }
            }
            prev = y;
        }
        Ok(())
    }
}

impl fmt::Debug for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::NegLogComplement { c } => write!(f, "NegLogComplement {{ c: {c} }}"),
            Generator::NegReciprocalLog => f.write_str("NegReciprocalLog"),
            Generator::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl PartialEq for Generator {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Generator::NegLogComplement { c: a }, Generator::NegLogComplement { c: b }) => a == b,
            (Generator::NegReciprocalLog, Generator::NegReciprocalLog) => true,
            (Generator::Custom { forward: a, inverse: ai, .. }, Generator::Custom { forward: b, inverse: bi, .. }) => {
                Arc::ptr_eq(a, b) && Arc::ptr_eq(ai, bi)
            }
            _ => false,
        }
    }
}

/// The m-scheme `psi(T(psi^-1(r), psi^-1(s)))`.
#[derive(Clone, Debug, PartialEq)]
pub struct Conjugate {
    pub tnorm: TNorm,
    pub generator: Generator,
}

impl Conjugate {
    pub(crate) fn eval(&self, r: f64, s: f64) -> f64 {
        let x = self.generator.inverse(r);
        let y = self.generator.inverse(s);
        let v = self.generator.forward(self.tnorm.apply(x, y));
        if v.is_nan() {
            0.0
        } else {
            v.max(0.0)
        }
    }
}

/// Builds the m-scheme conjugate to `tnorm` under `generator`.
pub fn conjugate_tnorm(tnorm: TNorm, generator: Generator) -> Result<MScheme> {
    generator.check_invertible()?;
    Ok(MScheme::GeneratorConjugate(Conjugate { tnorm, generator }))
}

/// A nonincreasing bijection `f: [0, inf] -> [0, 1]` with `f(0) = 1`, `f(inf) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Transfer {
    /// `f(x) = exp(-x)`
    Exp,
    /// `f(x) = 1 / (1 + x)`
    Reciprocal,
}

impl Transfer {
    pub fn forward(self, x: ExtendedValue) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        match self {
            Transfer::Exp => (-x.get()).exp(),
            Transfer::Reciprocal => 1.0 / (1.0 + x.get()),
        }
    }

    pub fn inverse(self, a: f64) -> ExtendedValue {
        if a <= 0.0 {
            return ExtendedValue::INFINITY;
        }
        let x = match self {
            Transfer::Exp => -a.ln(),
            Transfer::Reciprocal => 1.0 / a - 1.0,
        };
        ExtendedValue::new_unchecked(x.max(0.0))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TConormReport {
    pub tconorm: TConorm,
    pub transfer: Transfer,
    pub samples: usize,
    pub max_residual: f64,
}

/// Pairs `Min` with `Maximum` and `Ext` with `DrasticSum`.
pub fn tconorm_partner(scheme: &MScheme) -> Option<TConorm> {
    match scheme {
        MScheme::Min => Some(TConorm::Maximum),
        MScheme::Ext => Some(TConorm::DrasticSum),
        _ => None,
    }
}

/// Measures `max |f(M(f^-1 a, f^-1 b)) - T(a, b)|` over `grid x grid`.
pub fn to_tconorm_check(
    scheme: &MScheme,
    tconorm: TConorm,
    transfer: Transfer,
    grid: &[f64],
) -> Result<TConormReport> {
    if tconorm_partner(scheme) != Some(tconorm) {
        return Err(Error::UnsupportedPairing(format!("{scheme} with {tconorm:?}")));
    }
    if let Some(bad) = grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(Error::InvalidParameter(format!("grid value {bad} outside [0, 1]")));
    }
    let mut max_residual = 0.0f64;
    for &a in grid {
        for &b in grid {
            let m = scheme.apply(transfer.inverse(a), transfer.inverse(b));
            let r = (transfer.forward(m) - tconorm.apply(a, b)).abs();
            max_residual = max_residual.max(r);
        }
    }
    Ok(TConormReport {
        tconorm,
        transfer,
        samples: grid.len() * grid.len(),
        max_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64) -> ExtendedValue {
        ExtendedValue::new(x).unwrap()
    }

    #[test]
    fn conjugate_w_matches_wiener_shannon_at_one_one() {
        let m = conjugate_tnorm(TNorm::Lukasiewicz, Generator::NegLogComplement { c: 1.0 }).unwrap();
        let v = m.apply(ev(1.0), ev(1.0)).get();
        let closed = -(2.0 * (-1.0f64).exp()).ln();
        assert!((v - closed).abs() < 1e-12);
        assert!((v - 0.3069).abs() < 1e-4);
    }

    #[test]
    fn conjugate_product_reciprocal_log_is_hyperbolic() {
        let m = conjugate_tnorm(TNorm::Product, Generator::NegReciprocalLog).unwrap();
        assert!((m.apply(ev(2.0), ev(2.0)).get() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_boundary_is_exact() {
        let m = conjugate_tnorm(TNorm::Lukasiewicz, Generator::NegLogComplement { c: 1.0 }).unwrap();
        for s in [0.0, 1e-3, 0.5, 1.0, 7.0, 1e3] {
            assert_eq!(m.apply(ev(s), ExtendedValue::INFINITY), ev(s));
            assert_eq!(m.apply(ExtendedValue::INFINITY, ev(s)), ev(s));
        }
    }

    #[test]
    fn non_invertible_generators_are_rejected() {
        assert!(matches!(
            conjugate_tnorm(TNorm::Product, Generator::NegLogComplement { c: 0.0 }),
            Err(Error::NonInvertibleGenerator(_))
        ));
        assert!(conjugate_tnorm(TNorm::Product, Generator::NegLogComplement { c: -1.0 }).is_err());
        let flat = Generator::custom("flat", |x| if x < 0.5 { x } else { 0.5 }, |r| r);
        assert!(conjugate_tnorm(TNorm::Product, flat).is_err());
        let shifted = Generator::custom("shifted", |x| x + 1.0, |r| r - 1.0);
        assert!(conjugate_tnorm(TNorm::Product, shifted).is_err());
        // the generator as literally written, (1/c) ln(1 - x), is decreasing
        let literal = Generator::custom("literal", |x: f64| (-x).ln_1p(), |r: f64| 1.0 - r.exp());
        assert!(conjugate_tnorm(TNorm::Lukasiewicz, literal).is_err());
    }

    #[test]
    fn custom_generator_is_accepted() {
        let g = Generator::custom("odds", |x: f64| if x >= 1.0 { f64::INFINITY } else { x / (1.0 - x) }, |r: f64| r / (1.0 + r));
        let m = conjugate_tnorm(TNorm::Minimum, g).unwrap();
        assert!((m.apply(ev(2.0), ev(3.0)).get() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tconorm_pairings() {
        let grid: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        let r = to_tconorm_check(&MScheme::Min, TConorm::Maximum, Transfer::Exp, &grid).unwrap();
        assert!(r.max_residual <= 1e-12, "{}", r.max_residual);
        let r = to_tconorm_check(&MScheme::Ext, TConorm::DrasticSum, Transfer::Exp, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(r.max_residual, 0.0);
        let r = to_tconorm_check(&MScheme::Ext, TConorm::DrasticSum, Transfer::Reciprocal, &grid).unwrap();
        assert!(r.max_residual <= 1e-12);
        assert!(matches!(
            to_tconorm_check(&MScheme::Min, TConorm::DrasticSum, Transfer::Exp, &grid),
            Err(Error::UnsupportedPairing(_))
        ));
        assert!(to_tconorm_check(&MScheme::Hyperbolic, TConorm::Maximum, Transfer::Exp, &grid).is_err());
    }

    #[test]
    fn tconorm_laws_on_unit_square() {
        for t in [TConorm::Maximum, TConorm::DrasticSum] {
            for a in [0.0, 0.3, 1.0] {
                assert_eq!(t.apply(a, 0.0), a);
                for b in [0.0, 0.6, 1.0] {
                    assert_eq!(t.apply(a, b), t.apply(b, a));
                }
            }
        }
    }
}
