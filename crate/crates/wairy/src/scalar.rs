//! Exact arithmetic in the cyclotomic field Q(w_N) extended by commuting
//! zero-mode symbols C_1, ..., C_n subject to C_1 + ... + C_n = 0.
//!
//! Elements are kept reduced modulo the N-th cyclotomic polynomial Phi_N,
//! so the symbol-free part is a field with decidable, canonical zero
//! testing. The last symbol C_n is eliminated structurally via
//! C_n = -(C_1 + ... + C_{n-1}), which makes the zero-mode relation hold
//! identically rather than being checked.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScalarError {
    #[error("mismatched cyclotomic orders {0} and {1}")]
    OrderMismatch(u32, u32),
    #[error("mismatched symbol counts {0} and {1}")]
    SymbolMismatch(u32, u32),
    #[error("division by zero")]
    ZeroDivision,
    #[error("value with C-symbol content is not invertible")]
    NotInvertible,
    #[error("symbol index {0} out of range 1..={1}")]
    SymbolOutOfRange(u32, u32),
    #[error("invalid scalar serialization: {0}")]
    Parse(String),
}

/// Ambient ring parameters: the root-of-unity order N and the number of
/// zero-mode symbols n. Two scalars interoperate when these match, with
/// rational (N = 1) and symbol-free values coercing freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ScalarCtx {
    pub order: u32,
    pub symbols: u32,
}

impl ScalarCtx {
    pub fn new(order: u32, symbols: u32) -> Self {
        assert!(order >= 1, "order must be positive");
        assert!(symbols >= 1, "symbol count must be positive");
        ScalarCtx { order, symbols }
    }

    /// Plain field context: no usable symbols (C_1 alone is forced to 0).
    pub fn field(order: u32) -> Self {
        ScalarCtx::new(order, 1)
    }

    pub fn rationals() -> Self {
        ScalarCtx::field(1)
    }

    /// Degree of Phi_N = phi(N), the dimension of the omega-power basis.
    pub fn phi_degree(&self) -> usize {
        cyclotomic_poly(self.order).len() - 1
    }

    pub fn zero(&self) -> CycloScalar {
        CycloScalar {
            ctx: *self,
            terms: Vec::new(),
        }
    }

    pub fn one(&self) -> CycloScalar {
        self.integer(1)
    }

    pub fn integer(&self, v: i64) -> CycloScalar {
        self.from_rat(Rat::from_integer(BigInt::from(v)))
    }

    pub fn rational(&self, num: i64, den: i64) -> CycloScalar {
        assert!(den != 0);
        self.from_rat(Rat::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_rat(&self, r: Rat) -> CycloScalar {
        if r.is_zero() {
            return self.zero();
        }
        let mut poly = vec![Rat::zero(); self.phi_degree()];
        poly[0] = r;
        CycloScalar {
            ctx: *self,
            terms: vec![(CMono::empty(self.symbols), poly)],
        }
    }

    /// w^e with w a primitive N-th root of unity; e is reduced mod N first,
    /// then the power is reduced modulo Phi_N.
    pub fn root_power(&self, e: i64) -> CycloScalar {
        let n = self.order as i64;
        let e = e.rem_euclid(n) as usize;
        let mut raw = vec![Rat::zero(); e + 1];
        raw[e] = Rat::one();
        let poly = reduce_mod_phi(raw, self.order);
        CycloScalar {
            ctx: *self,
            terms: if poly_is_zero(&poly) {
                Vec::new()
            } else {
                vec![(CMono::empty(self.symbols), poly)]
            },
        }
    }

    /// The zero-mode symbol C_j (1-based). C_n expands to -(C_1+...+C_{n-1}).
    pub fn c_symbol(&self, j: u32) -> Result<CycloScalar, ScalarError> {
        if j == 0 || j > self.symbols {
            return Err(ScalarError::SymbolOutOfRange(j, self.symbols));
        }
        let free = self.symbols - 1;
        let mut out = self.zero();
        if j <= free {
            let mut exps = vec![0u32; free as usize];
            exps[(j - 1) as usize] = 1;
            let mut poly = vec![Rat::zero(); self.phi_degree()];
            poly[0] = Rat::one();
            out.terms.push((CMono { exps }, poly));
            out.normalize();
        } else {
            // j == n: the eliminated symbol.
            for k in 1..=free {
                let term = self.c_symbol(k)?;
                out = out.try_sub(&term)?;
            }
        }
        Ok(out)
    }
}

/// Monomial in the free symbols C_1..C_{n-1}; exponent vector of fixed
/// length n-1.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CMono {
    exps: Vec<u32>,
}

impl CMono {
    fn empty(symbols: u32) -> Self {
        CMono {
            exps: vec![0; (symbols - 1) as usize],
        }
    }

    fn is_empty(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    fn mul(&self, other: &CMono) -> CMono {
        CMono {
            exps: self
                .exps
                .iter()
                .zip(&other.exps)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exps
    }
}

/// An exact element of Q(w_N)[C_1..C_{n-1}], reduced mod Phi_N.
///
/// The representation is canonical: two values are equal iff their
/// representations are identical, so `==` and `is_zero` are decidable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycloScalar {
    ctx: ScalarCtx,
    // Sorted by CMono; each omega-polynomial is nonzero and has length
    // phi(N).
    terms: Vec<(CMono, Vec<Rat>)>,
}

impl CycloScalar {
    pub fn ctx(&self) -> ScalarCtx {
        self.ctx
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_empty() && {
            let p = &self.terms[0].1;
            p[0].is_one() && p[1..].iter().all(|c| c.is_zero())
        }
    }

    pub fn is_c_free(&self) -> bool {
        self.terms.iter().all(|(m, _)| m.is_empty())
    }

    /// Largest total degree in the C symbols.
    pub fn c_degree(&self) -> u32 {
        self.terms.iter().map(|(m, _)| m.degree()).max().unwrap_or(0)
    }

    /// The value with every C_j set to 0.
    pub fn with_c_zero(&self) -> CycloScalar {
        let mut out = self.clone();
        out.terms.retain(|(m, _)| m.is_empty());
        out
    }

    /// Rational part: the coefficient of w^0 in the symbol-free term.
    pub fn rational_part(&self) -> Rat {
        for (m, p) in &self.terms {
            if m.is_empty() {
                return p[0].clone();
            }
        }
        Rat::zero()
    }

    fn normalize(&mut self) {
        self.terms.retain(|(_, p)| !poly_is_zero(p));
        self.terms.sort_by(|a, b| a.0.cmp(&b.0));
    }

    /// Reconcile contexts: rational-order and symbol-free values coerce.
    fn unify(a: &CycloScalar, b: &CycloScalar) -> Result<(CycloScalar, CycloScalar), ScalarError> {
        let mut a = a.clone();
        let mut b = b.clone();
        if a.ctx.order != b.ctx.order {
            if a.ctx.order == 1 {
                a = a.lift_order(b.ctx.order);
            } else if b.ctx.order == 1 {
                b = b.lift_order(a.ctx.order);
            } else {
                return Err(ScalarError::OrderMismatch(a.ctx.order, b.ctx.order));
            }
        }
        if a.ctx.symbols != b.ctx.symbols {
            // Symbol-free values coerce; the larger symbol count wins so
            // the ambient context is stable under mixing in rationals.
            if a.ctx.symbols < b.ctx.symbols && a.is_c_free() {
                a = a.resymbol(b.ctx.symbols);
            } else if b.ctx.symbols < a.ctx.symbols && b.is_c_free() {
                b = b.resymbol(a.ctx.symbols);
            } else {
                return Err(ScalarError::SymbolMismatch(a.ctx.symbols, b.ctx.symbols));
            }
        }
        Ok((a, b))
    }

    fn lift_order(&self, order: u32) -> CycloScalar {
        // Only valid from order 1 (pure rationals).
        let ctx = ScalarCtx::new(order, self.ctx.symbols);
        let deg = ctx.phi_degree();
        let terms = self
            .terms
            .iter()
            .map(|(m, p)| {
                let mut q = vec![Rat::zero(); deg];
                q[0] = p[0].clone();
                (m.clone(), q)
            })
            .collect();
        CycloScalar { ctx, terms }
    }

    fn resymbol(&self, symbols: u32) -> CycloScalar {
        debug_assert!(self.is_c_free());
        let ctx = ScalarCtx::new(self.ctx.order, symbols);
        let terms = self
            .terms
            .iter()
            .map(|(_, p)| (CMono::empty(symbols), p.clone()))
            .collect();
        CycloScalar { ctx, terms }
    }

    pub fn try_add(&self, other: &CycloScalar) -> Result<CycloScalar, ScalarError> {
        let (a, b) = CycloScalar::unify(self, other)?;
        let mut map: HashMap<CMono, Vec<Rat>> = a.terms.into_iter().collect();
        for (m, p) in b.terms {
            match map.get_mut(&m) {
                Some(q) => poly_add_assign(q, &p),
                None => {
                    map.insert(m, p);
                }
            }
        }
        let mut out = CycloScalar {
            ctx: a.ctx,
            terms: map.into_iter().collect(),
        };
        out.normalize();
        Ok(out)
    }

    pub fn try_sub(&self, other: &CycloScalar) -> Result<CycloScalar, ScalarError> {
        self.try_add(&other.neg())
    }

    pub fn neg(&self) -> CycloScalar {
        let mut out = self.clone();
        for (_, p) in &mut out.terms {
            for c in p.iter_mut() {
                *c = -c.clone();
            }
        }
        out
    }

    pub fn try_mul(&self, other: &CycloScalar) -> Result<CycloScalar, ScalarError> {
        let (a, b) = CycloScalar::unify(self, other)?;
        let order = a.ctx.order;
        let mut map: HashMap<CMono, Vec<Rat>> = HashMap::new();
        for (ma, pa) in &a.terms {
            for (mb, pb) in &b.terms {
                let m = ma.mul(mb);
                let p = reduce_mod_phi(poly_mul(pa, pb), order);
                match map.get_mut(&m) {
                    Some(q) => poly_add_assign(q, &p),
                    None => {
                        map.insert(m, p);
                    }
                }
            }
        }
        let mut out = CycloScalar {
            ctx: a.ctx,
            terms: map.into_iter().collect(),
        };
        out.normalize();
        Ok(out)
    }

    pub fn scale(&self, r: &Rat) -> CycloScalar {
        if r.is_zero() {
            return self.ctx.zero();
        }
        let mut out = self.clone();
        for (_, p) in &mut out.terms {
            for c in p.iter_mut() {
                *c = c.clone() * r;
            }
        }
        out
    }

    /// Multiplicative inverse of a nonzero symbol-free value, via the
    /// extended Euclidean algorithm in Q[x] modulo Phi_N.
    pub fn invert(&self) -> Result<CycloScalar, ScalarError> {
        if self.is_zero() {
            return Err(ScalarError::ZeroDivision);
        }
        if !self.is_c_free() {
            return Err(ScalarError::NotInvertible);
        }
        let poly = &self.terms[0].1;
        let phi = cyclotomic_poly(self.ctx.order);
        let inv = poly_invert_mod(poly, &phi).ok_or(ScalarError::NotInvertible)?;
        let inv = reduce_mod_phi(inv, self.ctx.order);
        let mut out = CycloScalar {
            ctx: self.ctx,
            terms: vec![(CMono::empty(self.ctx.symbols), inv)],
        };
        out.normalize();
        Ok(out)
    }

    pub fn try_div(&self, other: &CycloScalar) -> Result<CycloScalar, ScalarError> {
        self.try_mul(&other.invert()?)
    }

    /// Integer power; negative exponents require an invertible base.
    pub fn pow(&self, e: i64) -> Result<CycloScalar, ScalarError> {
        let base = if e < 0 { self.invert()? } else { self.clone() };
        let mut acc = self.ctx.one();
        for _ in 0..e.unsigned_abs() {
            acc = acc.try_mul(&base)?;
        }
        Ok(acc)
    }

    /// Serialize to the canonical JSON object form.
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::{json, Value};
        let mut terms = Vec::new();
        for (m, p) in &self.terms {
            for (e, c) in p.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                terms.push(json!({
                    "omega_pow": e,
                    "num": c.numer().to_string(),
                    "den": c.denom().to_string(),
                    "c_monomial": m.exps,
                }));
            }
        }
        Value::Object(
            [
                ("N".to_string(), json!(self.ctx.order)),
                ("terms".to_string(), Value::Array(terms)),
            ]
            .into_iter()
            .collect(),
        )
    }

    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json(v: &serde_json::Value) -> Result<CycloScalar, ScalarError> {
        let obj = v
            .as_object()
            .ok_or_else(|| ScalarError::Parse("expected object".into()))?;
        // Orders are capped well beyond desk scale; Phi_N computation is
        // quadratic in N and parsing is exposed to untrusted input.
        let order = obj
            .get("N")
            .and_then(|x| x.as_u64())
            .filter(|&n| n >= 1 && n <= 360)
            .ok_or_else(|| ScalarError::Parse("bad or missing N".into()))? as u32;
        let terms = obj
            .get("terms")
            .and_then(|x| x.as_array())
            .ok_or_else(|| ScalarError::Parse("bad or missing terms".into()))?;
        let mut symbols: Option<u32> = None;
        let mut parsed: Vec<(CMono, usize, Rat)> = Vec::new();
        for t in terms {
            let t = t
                .as_object()
                .ok_or_else(|| ScalarError::Parse("term must be an object".into()))?;
            let pow = t
                .get("omega_pow")
                .and_then(|x| x.as_u64())
                .ok_or_else(|| ScalarError::Parse("bad omega_pow".into()))?
                as usize;
            let num: BigInt = t
                .get("num")
                .and_then(|x| x.as_str())
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| ScalarError::Parse("bad num".into()))?;
            let den: BigInt = t
                .get("den")
                .and_then(|x| x.as_str())
                .and_then(|s| s.parse().ok())
                .filter(|d: &BigInt| !d.is_zero())
                .ok_or_else(|| ScalarError::Parse("bad den".into()))?;
            let mono = t
                .get("c_monomial")
                .and_then(|x| x.as_array())
                .filter(|m| m.len() <= 64)
                .ok_or_else(|| ScalarError::Parse("bad c_monomial".into()))?;
            let exps: Vec<u32> = mono
                .iter()
                .map(|e| {
                    e.as_u64()
                        .filter(|&x| x <= 1_000_000)
                        .map(|x| x as u32)
                        .ok_or_else(|| ScalarError::Parse("bad c exponent".into()))
                })
                .collect::<Result<_, _>>()?;
            let n_here = exps.len() as u32 + 1;
            match symbols {
                None => symbols = Some(n_here),
                Some(n) if n != n_here => {
                    return Err(ScalarError::Parse("inconsistent c_monomial lengths".into()))
                }
                _ => {}
            }
            parsed.push((CMono { exps }, pow, Rat::new(num, den)));
        }
        let ctx = ScalarCtx::new(order, symbols.unwrap_or(1));
        let deg = ctx.phi_degree();
        let mut map: HashMap<CMono, Vec<Rat>> = HashMap::new();
        for (m, pow, r) in parsed {
            if pow >= deg {
                return Err(ScalarError::Parse(format!(
                    "omega_pow {pow} not reduced mod Phi_{order}"
                )));
            }
            let p = map.entry(m).or_insert_with(|| vec![Rat::zero(); deg]);
            p[pow] = p[pow].clone() + r;
        }
        let mut out = CycloScalar {
            ctx,
            terms: map.into_iter().collect(),
        };
        out.normalize();
        Ok(out)
    }

    pub fn from_json_str(s: &str) -> Result<CycloScalar, ScalarError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| ScalarError::Parse(e.to_string()))?;
        CycloScalar::from_json(&v)
    }
}

/// w^e in Q(w_N), reduced mod Phi_N (exponent reduced mod N first).
pub fn make_root_power(order: u32, e: i64) -> CycloScalar {
    ScalarCtx::field(order).root_power(e)
}

impl fmt::Display for CycloScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, p) in &self.terms {
            for (e, c) in p.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let neg = c.is_negative();
                let mag = c.abs();
                if first {
                    if neg {
                        write!(f, "-")?;
                    }
                    first = false;
                } else if neg {
                    write!(f, " - ")?;
                } else {
                    write!(f, " + ")?;
                }
                let mut factors: Vec<String> = Vec::new();
                if !mag.is_one() || (e == 0 && m.is_empty()) {
                    factors.push(mag.to_string());
                }
                if e > 0 {
                    factors.push(if e == 1 {
                        "w".to_string()
                    } else {
                        format!("w^{e}")
                    });
                }
                for (j, &x) in m.exps.iter().enumerate() {
                    if x == 1 {
                        factors.push(format!("C{}", j + 1));
                    } else if x > 1 {
                        factors.push(format!("C{}^{}", j + 1, x));
                    }
                }
                write!(f, "{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

macro_rules! panicking_op {
    ($trait:ident, $method:ident, $checked:ident) => {
        impl std::ops::$trait for &CycloScalar {
            type Output = CycloScalar;
            fn $method(self, rhs: &CycloScalar) -> CycloScalar {
                self.$checked(rhs).expect("incompatible scalar contexts")
            }
        }
        impl std::ops::$trait for CycloScalar {
            type Output = CycloScalar;
            fn $method(self, rhs: CycloScalar) -> CycloScalar {
                (&self).$method(&rhs)
            }
        }
    };
}

panicking_op!(Add, add, try_add);
panicking_op!(Sub, sub, try_sub);
panicking_op!(Mul, mul, try_mul);

impl std::ops::Neg for &CycloScalar {
    type Output = CycloScalar;
    fn neg(self) -> CycloScalar {
        CycloScalar::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Dense polynomial helpers over Q (little-endian coefficient vectors).

fn poly_is_zero(p: &[Rat]) -> bool {
    p.iter().all(|c| c.is_zero())
}

fn poly_add_assign(a: &mut Vec<Rat>, b: &[Rat]) {
    if a.len() < b.len() {
        a.resize(b.len(), Rat::zero());
    }
    for (i, c) in b.iter().enumerate() {
        a[i] = a[i].clone() + c;
    }
}

fn poly_mul(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    if poly_is_zero(a) || poly_is_zero(b) {
        return vec![Rat::zero()];
    }
    let mut out = vec![Rat::zero(); a.len() + b.len() - 1];
    for (i, ca) in a.iter().enumerate() {
        if ca.is_zero() {
            continue;
        }
        for (j, cb) in b.iter().enumerate() {
            if cb.is_zero() {
                continue;
            }
            out[i + j] = out[i + j].clone() + ca * cb;
        }
    }
    out
}

fn poly_deg(p: &[Rat]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

/// Remainder of a modulo b (b nonzero), in-place long division.
fn poly_rem(mut a: Vec<Rat>, b: &[Rat]) -> Vec<Rat> {
    let db = poly_deg(b).expect("division by zero polynomial");
    let lead = b[db].clone();
    while let Some(da) = poly_deg(&a) {
        if da < db {
            break;
        }
        let factor = a[da].clone() / lead.clone();
        let shift = da - db;
        for i in 0..=db {
            if !b[i].is_zero() {
                a[i + shift] = a[i + shift].clone() - factor.clone() * b[i].clone();
            }
        }
    }
    a
}

/// Exact quotient a / b, panicking if the division is not exact.
fn poly_exact_div(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let da = match poly_deg(a) {
        None => return vec![Rat::zero()],
        Some(d) => d,
    };
    let db = poly_deg(b).expect("division by zero polynomial");
    assert!(da >= db, "inexact polynomial division");
    let lead = b[db].clone();
    let mut rem: Vec<Rat> = a.to_vec();
    let mut quot = vec![Rat::zero(); da - db + 1];
    for k in (0..=(da - db)).rev() {
        let c = rem[k + db].clone() / lead.clone();
        quot[k] = c.clone();
        if c.is_zero() {
            continue;
        }
        for i in 0..=db {
            rem[k + i] = rem[k + i].clone() - c.clone() * b[i].clone();
        }
    }
    assert!(poly_is_zero(&rem), "inexact polynomial division");
    quot
}

/// Inverse of a modulo m via extended Euclid, if gcd(a, m) is constant.
fn poly_invert_mod(a: &[Rat], m: &[Rat]) -> Option<Vec<Rat>> {
    // Maintain r0 = s0*a mod m, r1 = s1*a mod m.
    let mut r0 = m.to_vec();
    let mut r1 = poly_rem(a.to_vec(), m);
    let mut s0 = vec![Rat::zero()];
    let mut s1 = vec![Rat::one()];
    while poly_deg(&r1).is_some() {
        // Divide r0 by r1.
        let db = poly_deg(&r1).unwrap();
        let lead = r1[db].clone();
        let mut q = vec![Rat::zero(); poly_deg(&r0).map_or(1, |d| d.max(db) - db + 1)];
        let mut rem = r0.clone();
        while let Some(da) = poly_deg(&rem) {
            if da < db {
                break;
            }
            let factor = rem[da].clone() / lead.clone();
            q[da - db] = factor.clone();
            for i in 0..=db {
                if !r1[i].is_zero() {
                    rem[da - db + i] = rem[da - db + i].clone() - factor.clone() * r1[i].clone();
                }
            }
        }
        let s2_sub = poly_mul(&q, &s1);
        let mut s2 = s0.clone();
        if s2.len() < s2_sub.len() {
            s2.resize(s2_sub.len(), Rat::zero());
        }
        for (i, c) in s2_sub.iter().enumerate() {
            s2[i] = s2[i].clone() - c;
        }
        r0 = r1;
        r1 = rem;
        s0 = s1;
        s1 = s2;
    }
    // r0 is the gcd; invertible iff it is a nonzero constant.
    match poly_deg(&r0) {
        Some(0) => {
            let inv = Rat::one() / r0[0].clone();
            Some(s0.iter().map(|c| c * inv.clone()).collect())
        }
        _ => None,
    }
}

/// Coefficients of the N-th cyclotomic polynomial, little-endian, cached.
fn cyclotomic_poly(n: u32) -> Arc<Vec<Rat>> {
    static CACHE: OnceLock<Mutex<HashMap<u32, Arc<Vec<Rat>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(p) = cache.lock().unwrap().get(&n) {
        return p.clone();
    }
    // Phi_n = (x^n - 1) / prod_{d | n, d < n} Phi_d
    let mut num = vec![Rat::zero(); (n + 1) as usize];
    num[0] = -Rat::one();
    num[n as usize] = Rat::one();
    let mut p = num;
    for d in 1..n {
        if n % d == 0 {
            let phi_d = cyclotomic_poly(d);
            p = poly_exact_div(&p, &phi_d);
        }
    }
    let arc = Arc::new(p);
    cache.lock().unwrap().insert(n, arc.clone());
    arc
}

/// Reduce a raw omega-power polynomial mod Phi_N and pad to length phi(N).
fn reduce_mod_phi(raw: Vec<Rat>, order: u32) -> Vec<Rat> {
    let phi = cyclotomic_poly(order);
    let deg = phi.len() - 1;
    let mut r = poly_rem(raw, &phi);
    r.resize(deg.max(1), Rat::zero());
    r.truncate(deg.max(1));
    // Degree-0 fields (order 1) still need one slot.
    if deg == 0 {
        // Phi_1 = x - 1: the quotient is Q itself, representation length 1.
        // poly_rem already produced a constant.
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(order: u32) -> ScalarCtx {
        ScalarCtx::field(order)
    }

    #[test]
    fn root_powers_in_q_i() {
        let i = make_root_power(4, 1);
        assert_eq!(make_root_power(4, 2), f(4).integer(-1));
        assert_eq!(make_root_power(4, 5), i);
        assert_eq!(i.try_mul(&i).unwrap(), f(4).integer(-1));
    }

    #[test]
    fn phi6_reduction() {
        // Phi_6 = w^2 - w + 1, so w^2 = w - 1 in the {1, w} basis.
        let w = make_root_power(6, 1);
        let w2 = make_root_power(6, 2);
        let expected = w.try_sub(&f(6).one()).unwrap();
        assert_eq!(w2, expected);
    }

    #[test]
    fn add_and_conjugate() {
        let i = make_root_power(4, 1);
        let one = f(4).one();
        let a = one.try_add(&i).unwrap(); // 1 + i
        let b = one.try_sub(&i).unwrap(); // 1 - i
        assert_eq!(a.try_add(&b).unwrap(), f(4).integer(2));
        assert_eq!(a.try_mul(&b).unwrap(), f(4).integer(2));
    }

    #[test]
    fn symbol_relation() {
        // n = 2: C_2 = -C_1, so C_1 + C_2 = 0.
        let ctx = ScalarCtx::new(4, 2);
        let c1 = ctx.c_symbol(1).unwrap();
        let c2 = ctx.c_symbol(2).unwrap();
        assert!(c1.try_add(&c2).unwrap().is_zero());
        // General n: the full sum vanishes identically.
        for n in 1..=4 {
            let ctx = ScalarCtx::new(3, n);
            let mut sum = ctx.zero();
            for j in 1..=n {
                sum = sum.try_add(&ctx.c_symbol(j).unwrap()).unwrap();
            }
            assert!(sum.is_zero(), "sum of C_j nonzero for n={n}");
        }
    }

    #[test]
    fn inversion() {
        let i = make_root_power(4, 1);
        let a = f(4).one().try_add(&i).unwrap();
        let inv = a.invert().unwrap();
        let expected = f(4).one().try_sub(&i).unwrap().scale(&Rat::new(1.into(), 2.into()));
        assert_eq!(inv, expected);
        assert!(a.try_mul(&inv).unwrap().is_one());

        assert_eq!(f(5).integer(2).invert().unwrap(), f(5).rational(1, 2));

        // w^{-1} = w^2 = -1 - w in Q(w_3).
        let w = make_root_power(3, 1);
        let winv = w.invert().unwrap();
        let expected = f(3).integer(-1).try_sub(&w).unwrap();
        assert_eq!(winv, expected);
        assert!(w.try_mul(&winv).unwrap().is_one());
    }

    #[test]
    fn inversion_errors() {
        assert_eq!(f(4).zero().invert(), Err(ScalarError::ZeroDivision));
        let ctx = ScalarCtx::new(4, 3);
        let c = ctx.c_symbol(1).unwrap();
        assert_eq!(c.invert(), Err(ScalarError::NotInvertible));
    }

    #[test]
    fn omega_identities() {
        for n in [1u32, 2, 3, 4, 5, 6, 8, 12] {
            let w = make_root_power(n, 1);
            assert!(w.pow(n as i64).unwrap().is_one(), "w^{n} != 1");
            // Phi_N(w) = 0 by construction of the representation.
            let phi = cyclotomic_poly(n);
            let mut acc = f(n).zero();
            for (e, c) in phi.iter().enumerate() {
                let term = w.pow(e as i64).unwrap().scale(c);
                acc = acc.try_add(&term).unwrap();
            }
            assert!(acc.is_zero(), "Phi_{n}(w) != 0");
        }
    }

    #[test]
    fn order_mismatch() {
        let a = make_root_power(4, 1);
        let b = make_root_power(3, 1);
        assert!(matches!(
            a.try_add(&b),
            Err(ScalarError::OrderMismatch(4, 3))
        ));
        // Rationals coerce into any order.
        let two = ScalarCtx::rationals().integer(2);
        assert_eq!(a.try_mul(&two).unwrap(), a.scale(&Rat::from_integer(2.into())));
    }

    #[test]
    fn json_round_trip() {
        let ctx = ScalarCtx::new(4, 2);
        let val = ctx
            .root_power(1)
            .scale(&Rat::new(3.into(), 7.into()))
            .try_add(&ctx.c_symbol(1).unwrap())
            .unwrap()
            .try_sub(&ctx.rational(5, 2))
            .unwrap();
        let s = val.to_json_string();
        let back = CycloScalar::from_json_str(&s).unwrap();
        assert_eq!(val, back);
        // Deterministic bytes.
        assert_eq!(s, back.to_json_string());
    }

    #[test]
    fn json_rejects_garbage() {
        assert!(CycloScalar::from_json_str("{}").is_err());
        assert!(CycloScalar::from_json_str("{\"N\":0,\"terms\":[]}").is_err());
        assert!(CycloScalar::from_json_str(
            "{\"N\":4,\"terms\":[{\"omega_pow\":9,\"num\":\"1\",\"den\":\"1\",\"c_monomial\":[]}]}"
        )
        .is_err());
        assert!(CycloScalar::from_json_str(
            "{\"N\":4,\"terms\":[{\"omega_pow\":0,\"num\":\"1\",\"den\":\"0\",\"c_monomial\":[]}]}"
        )
        .is_err());
    }

    #[test]
    fn pow_negative() {
        let w = make_root_power(5, 1);
        assert!(w.pow(-1).unwrap().try_mul(&w).unwrap().is_one());
    }
}
