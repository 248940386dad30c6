//! The dictionary between twist/shift data and reducible algebraic
//! spectral curves: curve emission, exact factorization verification, and
//! the omega_{0,1} <-> dilaton-shift extraction.
//!
//! Emission and verification only; no residue recursion is performed on
//! the curves.

use crate::classify::classify;
use crate::scalar::{CycloScalar, ScalarCtx, ScalarError};
use crate::wmodes::TwistSpec;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CurveError {
    #[error("(rho={0}, n={1}, s={2}) is not admissible with root-of-unity shifts")]
    NotAdmissible(u32, u32, u32),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A bivariate polynomial in (x, y) with exact coefficients, optionally
/// with a factored form whose expanded product equals the polynomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneCurve {
    coeffs: BTreeMap<(u32, u32), CycloScalar>,
    pub factors: Option<Vec<PlaneCurve>>,
}

impl PlaneCurve {
    pub fn zero() -> Self {
        PlaneCurve {
            coeffs: BTreeMap::new(),
            factors: None,
        }
    }

    pub fn add_term(&mut self, x_deg: u32, y_deg: u32, coeff: CycloScalar) {
        if coeff.is_zero() {
            return;
        }
        match self.coeffs.get_mut(&(x_deg, y_deg)) {
            Some(c) => {
                *c = c.try_add(&coeff).expect("contexts unify");
                if c.is_zero() {
                    self.coeffs.remove(&(x_deg, y_deg));
                }
            }
            None => {
                self.coeffs.insert((x_deg, y_deg), coeff);
            }
        }
    }

    pub fn coefficient(&self, x_deg: u32, y_deg: u32) -> Option<&CycloScalar> {
        self.coeffs.get(&(x_deg, y_deg))
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &CycloScalar)> {
        self.coeffs.iter()
    }

    pub fn mul(&self, other: &PlaneCurve) -> PlaneCurve {
        let mut out = PlaneCurve::zero();
        for (&(xa, ya), ca) in &self.coeffs {
            for (&(xb, yb), cb) in &other.coeffs {
                out.add_term(xa + xb, ya + yb, ca.try_mul(cb).expect("contexts unify"));
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        serde_json::Value::Array(
            self.coeffs
                .iter()
                .map(|(&(x, y), c)| json!({"x": x, "y": y, "coeff": c.to_json()}))
                .collect(),
        )
    }
}

impl std::fmt::Display for PlaneCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(x, y), c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if x > 0 {
                write!(f, "*x^{x}")?;
            }
            if y > 0 {
                write!(f, "*y^{y}")?;
            }
        }
        Ok(())
    }
}

/// One irreducible component in parametric form:
/// x(z) = z^rho / rho, y(z) = -Q / z^{rho - s}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParametricComponent {
    pub rho: u32,
    pub s: u32,
    pub q: CycloScalar,
}

/// The reducible spectral curve attached to admissible (rho, n, s) with
/// root-of-unity shifts, together with its parametric components. For
/// s = 1 the curve is rho^{r-n} x^{r-n} y^r - (-1)^r with the n factors
/// rho^{rho-1} x^{rho-1} y^rho - (-w^j)^rho; for s = 2 (n = 2, rho odd)
/// it is rho^{r-4} x^{r-4} y^r - (-1)^r with the two analogous factors.
pub fn curve_for(
    rho: u32,
    n: u32,
    s: u32,
) -> Result<(PlaneCurve, Vec<ParametricComponent>), CurveError> {
    let spec = TwistSpec::with_root_shifts(rho, n, s);
    let verdict = classify(rho, n, s, spec.shifts());
    if !verdict.admissible || !(s == 1 || s == 2) {
        return Err(CurveError::NotAdmissible(rho, n, s));
    }
    let r = rho * n;
    let ctx = ScalarCtx::field(r);
    let x_total = if s == 1 { r - n } else { r - 4 };
    let x_factor = if s == 1 { rho - 1 } else { rho - 2 };

    let mut main = PlaneCurve::zero();
    let rho_pow = ctx.integer(rho as i64).pow(x_total as i64)?;
    main.add_term(x_total, r, rho_pow);
    // -(-1)^r
    let sign = if r % 2 == 0 { -1 } else { 1 };
    main.add_term(0, 0, ctx.integer(sign));

    let mut factors = Vec::with_capacity(n as usize);
    let mut components = Vec::with_capacity(n as usize);
    for j in 1..=n {
        let q = ctx.root_power(j as i64);
        let mut f = PlaneCurve::zero();
        f.add_term(
            x_factor,
            rho,
            ctx.integer(rho as i64).pow(x_factor as i64)?,
        );
        // -(-w^j)^rho
        f.add_term(0, 0, q.neg().pow(rho as i64)?.neg());
        factors.push(f);
        components.push(ParametricComponent { rho, s, q });
    }
    main.factors = Some(factors);
    Ok((main, components))
}

/// Exact expansion of the factored form, compared coefficient-wise.
pub fn verify_factorization(curve: &PlaneCurve) -> bool {
    let Some(factors) = &curve.factors else {
        return false;
    };
    let mut product = PlaneCurve::zero();
    product.add_term(0, 0, ScalarCtx::rationals().one());
    for f in factors {
        product = product.mul(f);
    }
    product.coeffs == curve.coeffs
}

/// omega_{0,1} = y dx = -Q z^{s-1} dz on a component: the Laurent
/// coefficient and the exponent of z.
pub fn omega01(pc: &ParametricComponent) -> (CycloScalar, i64) {
    (pc.q.neg(), pc.s as i64 - 1)
}

/// Read the dilaton shift back from omega_{0,1} = c z^e dz: the shifted
/// mode index is one more than the exponent, and the shift is -c.
pub fn dilaton_from_omega01(coefficient: &CycloScalar, exponent: i64) -> (u32, CycloScalar) {
    assert!(exponent >= 0);
    (exponent as u32 + 1, coefficient.neg())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl4_curve_is_4x2y4_minus_1() {
        let (curve, components) = curve_for(2, 2, 1).unwrap();
        let ctx = ScalarCtx::field(4);
        assert_eq!(curve.coefficient(2, 4).unwrap(), &ctx.integer(4));
        assert_eq!(curve.coefficient(0, 0).unwrap(), &ctx.integer(-1));
        assert_eq!(curve.terms().count(), 2);
        // Factors 2xy^2 + 1 and 2xy^2 - 1.
        let factors = curve.factors.as_ref().unwrap();
        assert_eq!(factors.len(), 2);
        assert_eq!(factors[0].coefficient(0, 0).unwrap(), &ctx.one());
        assert_eq!(factors[1].coefficient(0, 0).unwrap(), &ctx.integer(-1));
        assert!(verify_factorization(&curve));
        assert_eq!(components.len(), 2);
    }

    #[test]
    fn degenerate_untwisted_curve() {
        // rho = 1: x-power zero, y^n - (-1)^n.
        let (curve, _) = curve_for(1, 3, 1).unwrap();
        let ctx = ScalarCtx::field(3);
        assert_eq!(curve.coefficient(0, 3).unwrap(), &ctx.one());
        assert_eq!(curve.coefficient(0, 0).unwrap(), &ctx.one());
        assert!(verify_factorization(&curve));
    }

    #[test]
    fn two_cycle_s2_curve() {
        // (3, 2, 2): 9 x^2 y^6 - 1 with two cubic-in-y factors.
        let (curve, components) = curve_for(3, 2, 2).unwrap();
        let ctx = ScalarCtx::field(6);
        assert_eq!(curve.coefficient(2, 6).unwrap(), &ctx.integer(9));
        assert_eq!(curve.coefficient(0, 0).unwrap(), &ctx.integer(-1));
        assert!(verify_factorization(&curve));
        for c in &components {
            assert_eq!(c.s, 2);
        }
    }

    #[test]
    fn factorization_families() {
        for rho in 1..=3u32 {
            for n in 2..=3u32 {
                let (curve, _) = curve_for(rho, n, 1).unwrap();
                assert!(verify_factorization(&curve), "(rho={rho}, n={n})");
            }
        }
        // Tampering breaks verification.
        let (mut curve, _) = curve_for(2, 2, 1).unwrap();
        if let Some(f) = curve.factors.as_mut() {
            let ctx = ScalarCtx::field(4);
            f[0].add_term(0, 0, ctx.integer(-2)); // flip +1 to -1
        }
        assert!(!verify_factorization(&curve));
    }

    #[test]
    fn inadmissible_rejected() {
        assert!(matches!(
            curve_for(2, 2, 2),
            Err(CurveError::NotAdmissible(2, 2, 2))
        ));
        assert!(curve_for(1, 3, 2).is_err());
    }

    #[test]
    fn omega01_round_trip() {
        let ctx = ScalarCtx::field(6);
        for (rho, s) in [(3u32, 2u32), (2, 1), (6, 1)] {
            for j in 1..=3 {
                let pc = ParametricComponent {
                    rho,
                    s,
                    q: ctx.root_power(j),
                };
                let (coeff, exp) = omega01(&pc);
                let (s2, q2) = dilaton_from_omega01(&coeff, exp);
                assert_eq!(s2, pc.s);
                assert_eq!(q2, pc.q);
            }
        }
        // Spot values: (rho=2, s=1, Q=i) -> (-i, 0); (rho=3, s=2, Q=-1) -> (1, 1).
        let pc = ParametricComponent {
            rho: 2,
            s: 1,
            q: ScalarCtx::field(4).root_power(1),
        };
        let (c, e) = omega01(&pc);
        assert_eq!(c, ScalarCtx::field(4).root_power(1).neg());
        assert_eq!(e, 0);
        let pc = ParametricComponent {
            rho: 3,
            s: 2,
            q: ScalarCtx::field(4).integer(-1),
        };
        let (c, e) = omega01(&pc);
        assert_eq!(c, ScalarCtx::field(4).one());
        assert_eq!(e, 1);
    }
}
