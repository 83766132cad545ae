//! m-schemes: symmetric, monotone, associative laws on `[0, inf]` with
//! `inf` as the identity, used to merge dissimilarities and haziness values.
//!
//! Every law short-circuits `M(s, inf) = s` before evaluating its formula so
//! the boundary condition holds bit-exactly.

mod tnorm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

pub use tnorm::{
    conjugate_tnorm, tconorm_partner, to_tconorm_check, Conjugate, Generator, TConorm,
    TConormReport, TNorm, Transfer,
};

use crate::error::{Error, Result};
use crate::value::ExtendedValue;

#[derive(Clone, Debug, PartialEq)]
pub enum MScheme {
    /// `min(s, t)`, the canonical law.
    Min,
    /// `0` unless one argument is `inf`.
    Ext,
    /// `min(a, s, t)` on finite inputs: the law for `V = [0, a]`.
    Truncated { bound: ExtendedValue },
    /// `max(-(1/c) ln(e^{-cs} + e^{-ct}), 0)`
    WienerShannon { c: f64 },
    /// `-(1/c) ln(e^{-cs} + e^{-ct} - e^{-c(s+t)})`
    ProductLaw { c: f64 },
    /// `st / (s + t)`
    Hyperbolic,
    GeneratorConjugate(Conjugate),
}

impl MScheme {
    pub fn truncated(bound: f64) -> Result<Self> {
        Ok(MScheme::Truncated {
            bound: ExtendedValue::new(bound)?,
        })
    }

    pub fn wiener_shannon(c: f64) -> Result<Self> {
        check_scale(c)?;
        Ok(MScheme::WienerShannon { c })
    }

    pub fn product_law(c: f64) -> Result<Self> {
        check_scale(c)?;
        Ok(MScheme::ProductLaw { c })
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MScheme::WienerShannon { c } | MScheme::ProductLaw { c } => check_scale(*c),
            _ => Ok(()),
        }
    }

    /// `M(s, t)`.
    #[inline]
    pub fn apply(&self, s: ExtendedValue, t: ExtendedValue) -> ExtendedValue {
        if s.is_infinite() {
            return t;
        }
        if t.is_infinite() {
            return s;
        }
        let (lo, hi) = if s <= t { (s.get(), t.get()) } else { (t.get(), s.get()) };
        let v = match self {
            MScheme::Min => lo,
            MScheme::Ext => 0.0,
            MScheme::Truncated { bound } => lo.min(bound.get()),
            MScheme::WienerShannon { c } => {
                // factor e^{-c lo} out of the log sum
                let v = lo - (-c * (hi - lo)).exp().ln_1p() / c;
                v.max(0.0)
            }
            MScheme::ProductLaw { c } => {
                let inner = (-c * (hi - lo)).exp() - (-c * hi).exp();
                let v = lo - inner.ln_1p() / c;
                v.max(0.0)
            }
            MScheme::Hyperbolic => {
                if lo == 0.0 {
                    0.0
                } else {
                    lo / (1.0 + lo / hi)
                }
            }
            MScheme::GeneratorConjugate(conj) => conj.eval(lo, hi),
        };
        ExtendedValue::new_unchecked(v)
    }

    /// Folds `values` with this law. `inf` entries are the identity and are
    /// dropped; the rest are sorted ascending first so the result does not
    /// depend on input order.
    pub fn fold<I>(&self, values: I) -> Result<ExtendedValue>
    where
        I: IntoIterator<Item = ExtendedValue>,
    {
        let mut any = false;
        let mut finite: Vec<ExtendedValue> = values
            .into_iter()
            .inspect(|_| any = true)
            .filter(|v| v.is_finite())
            .collect();
        if !any {
            return Err(Error::EmptyFold);
        }
        Ok(self.fold_finite(&mut finite))
    }

    /// Fold over a scratch buffer of finite values; reorders the buffer.
    pub(crate) fn fold_finite(&self, values: &mut [ExtendedValue]) -> ExtendedValue {
        values.sort_unstable();
        match self {
            // the first element already is the answer
            MScheme::Min => values.first().copied().unwrap_or(ExtendedValue::INFINITY),
            _ => values
                .iter()
                .copied()
                .reduce(|acc, v| self.apply(acc, v))
                .unwrap_or(ExtendedValue::INFINITY),
        }
    }

    /// Whether the law has a short string code (everything but generator conjugates).
    pub fn has_code(&self) -> bool {
        !matches!(self, MScheme::GeneratorConjugate(_))
    }
}

fn check_scale(c: f64) -> Result<()> {
    if c.is_finite() && c > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("scale c must be positive and finite, got {c}")))
    }
}

/// Short codes: `min`, `ext`, `mv:<a>`, `mw:<c>`, `mpi:<c>`, `h`.
impl fmt::Display for MScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MScheme::Min => f.write_str("min"),
            MScheme::Ext => f.write_str("ext"),
            MScheme::Truncated { bound } => {
                if bound.is_infinite() {
                    f.write_str("mv:inf")
                } else {
                    write!(f, "mv:{}", bound.get())
                }
            }
            MScheme::WienerShannon { c } => write!(f, "mw:{c}"),
            MScheme::ProductLaw { c } => write!(f, "mpi:{c}"),
            MScheme::Hyperbolic => f.write_str("h"),
            MScheme::GeneratorConjugate(conj) => {
                write!(f, "conj({:?}, {:?})", conj.tnorm, conj.generator)
            }
        }
    }
}

impl FromStr for MScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, arg) = match s.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (s, None),
        };
        let param = |name: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| Error::Parse(format!("scheme {name:?} needs a parameter, e.g. {name}:1")))?;
            let v: ExtendedValue = a.parse()?;
            Ok(v.get())
        };
        let scheme = match (head.to_ascii_lowercase().as_str(), arg) {
            ("min", None) => MScheme::Min,
            ("ext", None) => MScheme::Ext,
            ("h", None) => MScheme::Hyperbolic,
            ("mv", _) => MScheme::truncated(param("mv")?)?,
            ("mw", _) => MScheme::wiener_shannon(param("mw")?)?,
            ("mpi", _) => MScheme::product_law(param("mpi")?)?,
            _ => return Err(Error::Parse(format!("unknown m-scheme {s:?}"))),
        };
        Ok(scheme)
    }
}

impl Serialize for MScheme {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MScheme {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A parameterized family of laws, used to lay out parameter sweeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeFamily {
    Min,
    Ext,
    Mv,
    Mpi,
    Mw,
    H,
}

impl SchemeFamily {
    pub fn takes_parameter(self) -> bool {
        matches!(self, SchemeFamily::Mv | SchemeFamily::Mpi | SchemeFamily::Mw)
    }

    pub fn instantiate(self, param: f64) -> Result<MScheme> {
        match self {
            SchemeFamily::Min => Ok(MScheme::Min),
            SchemeFamily::Ext => Ok(MScheme::Ext),
            SchemeFamily::H => Ok(MScheme::Hyperbolic),
            SchemeFamily::Mv => MScheme::truncated(param),
            SchemeFamily::Mpi => MScheme::product_law(param),
            SchemeFamily::Mw => MScheme::wiener_shannon(param),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SchemeFamily::Min => "M_min",
            SchemeFamily::Ext => "M_ext",
            SchemeFamily::Mv => "M_V",
            SchemeFamily::Mpi => "M_Pi",
            SchemeFamily::Mw => "M_W",
            SchemeFamily::H => "H",
        }
    }
}

impl FromStr for SchemeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "min" => Ok(SchemeFamily::Min),
            "ext" => Ok(SchemeFamily::Ext),
            "mv" => Ok(SchemeFamily::Mv),
            "mpi" => Ok(SchemeFamily::Mpi),
            "mw" => Ok(SchemeFamily::Mw),
            "h" => Ok(SchemeFamily::H),
            other => Err(Error::Parse(format!("unknown scheme family {other:?}"))),
        }
    }
}

/// Residuals of the m-scheme axioms over a sample grid.
///
/// Symmetry and associativity residuals are `|a - b| / max(1, |a|, |b|)`;
/// boundary and annihilator residuals are absolute, so `0.0` means the
/// identity held exactly.
#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub symmetry: f64,
    pub associativity: f64,
    pub monotonicity_violations: usize,
    /// `max |M(s, inf) - s|` and `max |M(inf, s) - s|`
    pub boundary: f64,
    /// `max |M(s, 0)|` and `max |M(0, s)|`
    pub annihilator: f64,
    pub idempotent: bool,
}

impl AxiomReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.symmetry <= tol
            && self.associativity <= tol
            && self.monotonicity_violations == 0
            && self.boundary == 0.0
            && self.annihilator == 0.0
    }
}

fn mixed_residual(a: ExtendedValue, b: ExtendedValue) -> f64 {
    if a == b {
        return 0.0;
    }
    if a.is_infinite() || b.is_infinite() {
        return f64::INFINITY;
    }
    let (a, b) = (a.get(), b.get());
    (a - b).abs() / 1f64.max(a.abs()).max(b.abs())
}

fn abs_residual(a: ExtendedValue, b: ExtendedValue) -> f64 {
    if a == b {
        0.0
    } else {
        (a.get() - b.get()).abs()
    }
}

/// Evaluates the four m-scheme axioms, `M(s, 0) = 0` and idempotency on
/// every pair and triple drawn from `grid`.
pub fn check_axioms(scheme: &MScheme, grid: &[ExtendedValue]) -> AxiomReport {
    let mut report = AxiomReport {
        idempotent: true,
        ..Default::default()
    };
    let inf = ExtendedValue::INFINITY;
    let zero = ExtendedValue::ZERO;

    for &s in grid {
        report.boundary = report
            .boundary
            .max(abs_residual(scheme.apply(s, inf), s))
            .max(abs_residual(scheme.apply(inf, s), s));
        report.annihilator = report
            .annihilator
            .max(abs_residual(scheme.apply(s, zero), zero))
            .max(abs_residual(scheme.apply(zero, s), zero));
        if mixed_residual(scheme.apply(s, s), s) > 1e-12 {
            report.idempotent = false;
        }
        for &t in grid {
            let st = scheme.apply(s, t);
            report.symmetry = report.symmetry.max(mixed_residual(st, scheme.apply(t, s)));
            for &r in grid {
                let left = scheme.apply(r, st);
                let right = scheme.apply(scheme.apply(r, s), t);
                report.associativity = report.associativity.max(mixed_residual(left, right));
            }
            for &v in grid.iter().filter(|&&v| v >= s) {
                for &w in grid.iter().filter(|&&w| w >= t) {
                    if st > scheme.apply(v, w) {
                        report.monotonicity_violations += 1;
                    }
                }
            }
        }
    }
    report
}

/// `{0, 10^-3, ..., 10^3, inf}` with three points per decade.
pub fn default_axiom_grid() -> Vec<ExtendedValue> {
    let mut grid = vec![ExtendedValue::ZERO];
    for e in -9..=9 {
        grid.push(ExtendedValue::new_unchecked(10f64.powf(e as f64 / 3.0)));
    }
    grid.push(ExtendedValue::INFINITY);
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(x: f64) -> ExtendedValue {
        ExtendedValue::new(x).unwrap()
    }

    fn shipped() -> Vec<MScheme> {
        vec![
            MScheme::Min,
            MScheme::Ext,
            MScheme::truncated(0.5).unwrap(),
            MScheme::truncated(3.0).unwrap(),
            MScheme::wiener_shannon(1.0).unwrap(),
            MScheme::wiener_shannon(0.1).unwrap(),
            MScheme::wiener_shannon(10.0).unwrap(),
            MScheme::product_law(1.0).unwrap(),
            MScheme::product_law(5.0).unwrap(),
            MScheme::Hyperbolic,
        ]
    }

    #[test]
    fn apply_examples() {
        assert_eq!(MScheme::Min.apply(ev(2.0), ev(3.0)), ev(2.0));
        let ws = MScheme::wiener_shannon(1.0).unwrap();
        assert_eq!(ws.apply(ev(1.5), ExtendedValue::INFINITY), ev(1.5));
        assert_eq!(MScheme::Ext.apply(ev(2.0), ev(3.0)), ev(0.0));
        assert_eq!(MScheme::truncated(0.5).unwrap().apply(ev(2.0), ev(3.0)), ev(0.5));
        assert_eq!(MScheme::Hyperbolic.apply(ev(2.0), ev(2.0)), ev(1.0));
        let ln2 = std::f64::consts::LN_2;
        assert_eq!(ws.apply(ev(ln2), ev(ln2)), ev(0.0));
    }

    #[test]
    fn wiener_shannon_zero_region() {
        let ws = MScheme::wiener_shannon(1.0).unwrap();
        // e^{-r} + e^{-s} >= 1
        assert_eq!(ws.apply(ev(0.5), ev(0.9)).get(), 0.0);
        assert!(ws.apply(ev(1.0), ev(1.0)).get() > 0.0);
    }

    #[test]
    fn both_infinite_is_infinite() {
        for m in shipped() {
            assert_eq!(m.apply(ExtendedValue::INFINITY, ExtendedValue::INFINITY), ExtendedValue::INFINITY);
        }
    }

    #[test]
    fn fold_examples() {
        let inf = ExtendedValue::INFINITY;
        assert_eq!(MScheme::Min.fold([ev(3.0), inf, ev(1.0)]).unwrap(), ev(1.0));
        let h = MScheme::Hyperbolic.fold([ev(2.0); 3]).unwrap().get();
        assert!((h - 2.0 / 3.0).abs() < 1e-15);
        let pairwise = MScheme::Hyperbolic.apply(MScheme::Hyperbolic.apply(ev(2.0), ev(2.0)), ev(2.0));
        assert!((h - pairwise.get()).abs() < 1e-15);
        for m in shipped() {
            assert_eq!(m.fold([ev(5.0)]).unwrap(), ev(5.0));
            assert_eq!(m.fold([inf, inf]).unwrap(), inf);
        }
        assert!(matches!(MScheme::Min.fold(std::iter::empty()), Err(Error::EmptyFold)));
    }

    #[test]
    fn axioms_hold_for_shipped_schemes() {
        let grid = default_axiom_grid();
        for m in shipped() {
            let r = check_axioms(&m, &grid);
            assert!(r.holds(1e-9), "{m}: {r:?}");
        }
    }

    #[test]
    fn idempotency_only_for_min() {
        let grid = default_axiom_grid();
        assert!(check_axioms(&MScheme::Min, &grid).idempotent);
        assert!(check_axioms(&MScheme::truncated(f64::INFINITY).unwrap(), &grid).idempotent);
        for m in shipped().into_iter().skip(1) {
            assert!(!check_axioms(&m, &grid).idempotent, "{m}");
            assert_ne!(m.apply(ev(100.0), ev(100.0)), ev(100.0), "{m}");
        }
        let h = check_axioms(&MScheme::Hyperbolic, &grid);
        assert!(!h.idempotent && h.holds(1e-9));
    }

    #[test]
    fn truncated_endpoints() {
        let grid = default_axiom_grid();
        let top = MScheme::truncated(f64::INFINITY).unwrap();
        let bottom = MScheme::truncated(0.0).unwrap();
        for &s in &grid {
            for &t in &grid {
                assert_eq!(top.apply(s, t), MScheme::Min.apply(s, t));
                assert_eq!(bottom.apply(s, t), MScheme::Ext.apply(s, t));
            }
        }
    }

    #[test]
    fn stable_forms_match_naive() {
        for c in [0.1, 1.0, 3.0] {
            let ws = MScheme::wiener_shannon(c).unwrap();
            let pi = MScheme::product_law(c).unwrap();
            for r in [0.01, 0.3, 1.0, 2.5, 10.0, 40.0] {
                for s in [0.02, 0.7, 1.0, 5.0, 30.0] {
                    let (er, es) = ((-c * r).exp(), (-c * s).exp());
                    let naive_ws = (-(er + es).ln() / c).max(0.0);
                    let naive_pi = (-(er + es - er * es).ln() / c).max(0.0);
                    let got_ws = ws.apply(ev(r), ev(s)).get();
                    let got_pi = pi.apply(ev(r), ev(s)).get();
                    assert!((got_ws - naive_ws).abs() <= 1e-12 * naive_ws.max(1.0), "ws {c} {r} {s}");
                    assert!((got_pi - naive_pi).abs() <= 1e-12 * naive_pi.max(1.0), "pi {c} {r} {s}");
                }
            }
        }
        // the naive form underflows to ln(0) here; the stable one does not
        let ws = MScheme::wiener_shannon(1.0).unwrap();
        let v = ws.apply(ev(800.0), ev(800.0)).get();
        assert!((v - (800.0 - std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn codes_round_trip() {
        for code in ["min", "ext", "mv:0.25", "mv:inf", "mw:1", "mpi:10", "h"] {
            let m: MScheme = code.parse().unwrap();
            assert_eq!(m.to_string(), code);
            assert_eq!(m.to_string().parse::<MScheme>().unwrap(), m);
        }
        for bad in ["mw", "mw:0", "mpi:-1", "mv:-2", "foo", "min:3", "h:1"] {
            assert!(bad.parse::<MScheme>().is_err(), "{bad}");
        }
    }
}
