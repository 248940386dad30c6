//! The graded algebra of normal-ordered differential operators presented
//! via bosonic modes K^j_m.
//!
//! Quantization: K^j_m = hbar d/dx^j_m for m > 0, K^j_{-m} = m x^j_m for
//! m > 0, and K^j_0 = hbar^{1/2} C_j, which is folded into the scalar
//! coefficient. A normal-ordered monomial keeps all creators to the left
//! of all annihilators; the hbar exponent is tracked in half-units and
//! includes the hbar implicit in every annihilator and zero mode.
//!
//! Operators are always materialized against a finite window (W, D): all
//! mode indices satisfy |m| <= W and all term degrees are <= D. Infinite
//! mode sums only ever enter through the window.

use crate::scalar::{CycloScalar, ScalarError};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WeylError {
    #[error("term exceeds window: mode index {index} or degree {degree} out of (W={w}, D={d})")]
    WindowOverflow {
        index: i64,
        degree: u32,
        w: i64,
        d: u32,
    },
    #[error("hbar_half {0} below the minimum {1} implied by annihilators and zero modes")]
    HbarTooSmall(u32, u32),
    #[error("scalar error: {0}")]
    Scalar(#[from] ScalarError),
    #[error("invalid operator serialization: {0}")]
    Parse(String),
}

/// A single bosonic mode K^j_m. The sign of `index` determines the kind:
/// positive is an annihilator, negative a creator, zero the central mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mode {
    pub cycle: u32,
    pub index: i64,
}

impl Mode {
    pub fn new(cycle: u32, index: i64) -> Self {
        Mode { cycle, index }
    }

    pub fn is_creator(&self) -> bool {
        self.index < 0
    }

    pub fn is_annihilator(&self) -> bool {
        self.index > 0
    }

    pub fn is_zero_mode(&self) -> bool {
        self.index == 0
    }
}

/// Materialization region: |mode index| <= max_mode, degree <= max_degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Window {
    pub max_mode: i64,
    pub max_degree: u32,
}

impl Window {
    pub fn new(max_mode: i64, max_degree: u32) -> Self {
        assert!(max_mode >= 1);
        Window {
            max_mode,
            max_degree,
        }
    }

    fn meet(&self, other: &Window) -> Window {
        Window {
            max_mode: self.max_mode.min(other.max_mode),
            max_degree: self.max_degree.min(other.max_degree),
        }
    }
}

/// Signature of a normal-ordered monomial: the scalar-free content.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub hbar_half: u32,
    /// Modes with negative index, sorted by (cycle, index).
    pub creators: Vec<(u32, i64)>,
    /// Modes with positive index, sorted by (cycle, index).
    pub annihilators: Vec<(u32, i64)>,
}

impl TermKey {
    pub fn scalar(hbar_half: u32) -> Self {
        TermKey {
            hbar_half,
            creators: Vec::new(),
            annihilators: Vec::new(),
        }
    }

    /// Grading degree: every K-mode contributes 1 and every surplus
    /// hbar^{1/2} contributes 1, which collapses to
    /// #creators + hbar_half - #annihilators.
    pub fn degree(&self) -> u32 {
        self.creators.len() as u32 + self.hbar_half - self.annihilators.len() as u32
    }

    fn max_index(&self) -> i64 {
        self.creators
            .iter()
            .map(|&(_, m)| m.unsigned_abs() as i64)
            .chain(self.annihilators.iter().map(|&(_, m)| m))
            .max()
            .unwrap_or(0)
    }

    fn fits(&self, w: &Window) -> bool {
        self.max_index() <= w.max_mode && self.degree() <= w.max_degree
    }
}

/// A finite sum of normal-ordered monomials with exact coefficients,
/// materialized on a window. Terms are merged eagerly and kept in sorted
/// signature order, so the representation is canonical.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedOperator {
    window: Window,
    terms: BTreeMap<TermKey, CycloScalar>,
}

impl GradedOperator {
    pub fn zero(window: Window) -> Self {
        GradedOperator {
            window,
            terms: BTreeMap::new(),
        }
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &CycloScalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &TermKey) -> Option<&CycloScalar> {
        self.terms.get(key)
    }

    /// The single mode K^j_m as an operator. A zero mode folds to the
    /// scalar hbar^{1/2} C_j.
    pub fn mode(m: Mode, coeff: CycloScalar, window: Window) -> Result<Self, WeylError> {
        let mut op = GradedOperator::zero(window);
        op.add_normal_term(coeff, 0, &[m], false)?;
        Ok(op)
    }

    /// Scalar multiple of hbar^{hbar_half/2}.
    pub fn constant(coeff: CycloScalar, hbar_half: u32, window: Window) -> Result<Self, WeylError> {
        let mut op = GradedOperator::zero(window);
        op.add_normal_term(coeff, hbar_half, &[], false)?;
        Ok(op)
    }

    /// Add coeff * hbar^{extra_hbar_half/2} * :prod modes: to the sum.
    /// Annihilator and zero-mode hbar factors are added automatically;
    /// zero modes fold into the coefficient as hbar^{1/2} C_j.
    ///
    /// With `truncate` set, terms outside the window are dropped silently
    /// (the materialization semantics); otherwise they are an error.
    pub fn add_normal_term(
        &mut self,
        coeff: CycloScalar,
        extra_hbar_half: u32,
        modes: &[Mode],
        truncate: bool,
    ) -> Result<(), WeylError> {
        if coeff.is_zero() {
            return Ok(());
        }
        let mut coeff = coeff;
        let mut hbar_half = extra_hbar_half;
        let mut creators = Vec::new();
        let mut annihilators = Vec::new();
        for m in modes {
            if m.is_zero_mode() {
                let c = coeff.ctx().c_symbol(m.cycle)?;
                coeff = coeff.try_mul(&c)?;
                hbar_half += 1;
                if coeff.is_zero() {
                    return Ok(());
                }
            } else if m.is_creator() {
                creators.push((m.cycle, m.index));
            } else {
                annihilators.push((m.cycle, m.index));
                hbar_half += 2;
            }
        }
        creators.sort_unstable();
        annihilators.sort_unstable();
        let key = TermKey {
            hbar_half,
            creators,
            annihilators,
        };
        self.accumulate(key, coeff, truncate)
    }

    fn accumulate(&mut self, key: TermKey, coeff: CycloScalar, truncate: bool) -> Result<(), WeylError> {
        let min_h = 2 * key.annihilators.len() as u32;
        if key.hbar_half < min_h {
            return Err(WeylError::HbarTooSmall(key.hbar_half, min_h));
        }
        if !key.fits(&self.window) {
            if truncate {
                return Ok(());
            }
            return Err(WeylError::WindowOverflow {
                index: key.max_index(),
                degree: key.degree(),
                w: self.window.max_mode,
                d: self.window.max_degree,
            });
        }
        match self.terms.get_mut(&key) {
            Some(c) => {
                *c = c.try_add(&coeff)?;
                if c.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
        Ok(())
    }

    pub fn scale(&self, s: &CycloScalar) -> Result<GradedOperator, WeylError> {
        let mut out = GradedOperator::zero(self.window);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), c.try_mul(s)?, false)?;
        }
        Ok(out)
    }

    pub fn add(&self, other: &GradedOperator) -> Result<GradedOperator, WeylError> {
        let window = self.window.meet(&other.window);
        let mut out = GradedOperator::zero(window);
        for (k, c) in self.terms.iter().chain(other.terms.iter()) {
            out.accumulate(k.clone(), c.clone(), false)?;
        }
        Ok(out)
    }

    /// Sum with silent window truncation of out-of-window terms.
    pub fn add_truncating(&self, other: &GradedOperator) -> Result<GradedOperator, WeylError> {
        let mut out = self.clone();
        out.window = self.window.meet(&other.window);
        out.merge_from(other, true)?;
        Ok(out)
    }

    /// In-place accumulation of all terms of `other`.
    pub fn merge_from(&mut self, other: &GradedOperator, truncate: bool) -> Result<(), WeylError> {
        for (k, c) in &other.terms {
            self.accumulate(k.clone(), c.clone(), truncate)?;
        }
        Ok(())
    }

    /// In-place accumulation of `other` scaled by a coefficient.
    pub fn merge_scaled(
        &mut self,
        other: &GradedOperator,
        scale: &CycloScalar,
        truncate: bool,
    ) -> Result<(), WeylError> {
        if scale.is_zero() {
            return Ok(());
        }
        for (k, c) in &other.terms {
            self.accumulate(k.clone(), c.try_mul(scale)?, truncate)?;
        }
        Ok(())
    }

    pub fn sub(&self, other: &GradedOperator) -> Result<GradedOperator, WeylError> {
        let window = self.window.meet(&other.window);
        let mut out = GradedOperator::zero(window);
        for (k, c) in &self.terms {
            out.accumulate(k.clone(), c.clone(), false)?;
        }
        for (k, c) in &other.terms {
            out.accumulate(k.clone(), c.neg(), false)?;
        }
        Ok(out)
    }

    /// Operator with only the terms whose key satisfies the predicate.
    pub fn filter_terms(&self, pred: impl Fn(&TermKey) -> bool) -> GradedOperator {
        let mut out = GradedOperator::zero(self.window);
        for (k, c) in &self.terms {
            if pred(k) {
                out.terms.insert(k.clone(), c.clone());
            }
        }
        out
    }

    /// Restriction to terms of grading degree <= d.
    pub fn truncate_degree(&self, d: u32) -> GradedOperator {
        let mut out = GradedOperator::zero(self.window);
        for (k, c) in &self.terms {
            if k.degree() <= d {
                out.terms.insert(k.clone(), c.clone());
            }
        }
        out
    }

    /// Replace every creator K^j_{-s} by K^j_{-s} - q (binomial expansion;
    /// the word stays normal-ordered because only creators are touched).
    pub fn substitute_creator(
        &self,
        cycle: u32,
        s: i64,
        q: &CycloScalar,
    ) -> Result<GradedOperator, WeylError> {
        assert!(s >= 1);
        let target = (cycle, -s);
        let mut out = GradedOperator::zero(self.window);
        for (k, c) in &self.terms {
            let count = k.creators.iter().filter(|&&m| m == target).count();
            if count == 0 {
                out.accumulate(k.clone(), c.clone(), false)?;
                continue;
            }
            let others: Vec<(u32, i64)> = k
                .creators
                .iter()
                .copied()
                .filter(|&m| m != target)
                .collect();
            // (K - q)^count = sum_b C(count, b) K^b (-q)^{count-b}
            let minus_q = q.neg();
            for b in 0..=count {
                let mut creators = others.clone();
                creators.extend(std::iter::repeat(target).take(b));
                creators.sort_unstable();
                let mut coeff = c.try_mul(&binomial(count, b))?;
                for _ in 0..(count - b) {
                    coeff = coeff.try_mul(&minus_q)?;
                }
                let key = TermKey {
                    hbar_half: k.hbar_half,
                    creators,
                    annihilators: k.annihilators.clone(),
                };
                out.accumulate(key, coeff, false)?;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let terms: Vec<serde_json::Value> = self
            .terms
            .iter()
            .map(|(k, c)| {
                json!({
                    "coeff": c.to_json(),
                    "hbar_half": k.hbar_half,
                    "creators": k.creators.iter().map(|&(j, m)| json!([j, m])).collect::<Vec<_>>(),
                    "annihilators": k.annihilators.iter().map(|&(j, m)| json!([j, m])).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "window": {"W": self.window.max_mode, "D": self.window.max_degree},
            "terms": terms,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<GradedOperator, WeylError> {
        let obj = v
            .as_object()
            .ok_or_else(|| WeylError::Parse("expected object".into()))?;
        let win = obj
            .get("window")
            .and_then(|w| w.as_object())
            .ok_or_else(|| WeylError::Parse("missing window".into()))?;
        let w = win
            .get("W")
            .and_then(|x| x.as_i64())
            .filter(|&x| (1..=1_000_000).contains(&x))
            .ok_or_else(|| WeylError::Parse("bad window W".into()))?;
        let d = win
            .get("D")
            .and_then(|x| x.as_u64())
            .filter(|&x| x <= 1_000_000)
            .ok_or_else(|| WeylError::Parse("bad window D".into()))? as u32;
        let mut op = GradedOperator::zero(Window::new(w, d));
        let terms = obj
            .get("terms")
            .and_then(|t| t.as_array())
            .ok_or_else(|| WeylError::Parse("missing terms".into()))?;
        for t in terms {
            let t = t
                .as_object()
                .ok_or_else(|| WeylError::Parse("term must be an object".into()))?;
            let coeff = CycloScalar::from_json(
                t.get("coeff")
                    .ok_or_else(|| WeylError::Parse("missing coeff".into()))?,
            )?;
            let hbar_half = t
                .get("hbar_half")
                .and_then(|x| x.as_u64())
                .filter(|&x| x <= 1_000_000)
                .ok_or_else(|| WeylError::Parse("bad hbar_half".into()))? as u32;
            let parse_modes = |name: &str, sign: i64| -> Result<Vec<(u32, i64)>, WeylError> {
                let arr = t
                    .get(name)
                    .and_then(|x| x.as_array())
                    .ok_or_else(|| WeylError::Parse(format!("missing {name}")))?;
                arr.iter()
                    .map(|pair| {
                        let pair = pair
                            .as_array()
                            .filter(|p| p.len() == 2)
                            .ok_or_else(|| WeylError::Parse(format!("bad mode in {name}")))?;
                        let j = pair[0]
                            .as_u64()
                            .filter(|&j| j >= 1 && j <= 1_000_000)
                            .ok_or_else(|| WeylError::Parse("bad cycle".into()))?
                            as u32;
                        let m = pair[1]
                            .as_i64()
                            .filter(|&m| m != 0 && m.signum() == sign && m.abs() <= 1_000_000)
                            .ok_or_else(|| WeylError::Parse(format!("bad index in {name}")))?;
                        Ok((j, m))
                    })
                    .collect()
            };
            let mut creators = parse_modes("creators", -1)?;
            let mut annihilators = parse_modes("annihilators", 1)?;
            creators.sort_unstable();
            annihilators.sort_unstable();
            op.accumulate(
                TermKey {
                    hbar_half,
                    creators,
                    annihilators,
                },
                coeff,
                false,
            )?;
        }
        Ok(op)
    }

    pub fn from_json_str(s: &str) -> Result<GradedOperator, WeylError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| WeylError::Parse(e.to_string()))?;
        GradedOperator::from_json(&v)
    }
}

fn binomial(n: usize, k: usize) -> CycloScalar {
    let mut v = 1i64;
    for i in 0..k {
        v = v * (n - i) as i64 / (i + 1) as i64;
    }
    crate::scalar::ScalarCtx::rationals().integer(v)
}

/// [K^j_a, K^{j'}_b] = a hbar delta_{j,j'} delta_{a+b,0}; zero modes are
/// central.
pub fn commutator_basic(a: Mode, b: Mode, window: Window) -> GradedOperator {
    let mut out = GradedOperator::zero(window);
    if a.cycle == b.cycle && a.index + b.index == 0 && a.index != 0 {
        let ctx = crate::scalar::ScalarCtx::rationals();
        out.add_normal_term(ctx.integer(a.index), 2, &[], false)
            .expect("scalar term fits any window");
    }
    out
}

fn wick_term(
    out: &mut GradedOperator,
    k1: &TermKey,
    k2: &TermKey,
    coeff: CycloScalar,
    truncate: bool,
) -> Result<(), WeylError> {
    // Move the annihilators of k1 past the creators of k2, summing over
    // contraction matchings. Modes on distinct cycles commute.
    let mut avail: BTreeMap<(u32, i64), usize> = BTreeMap::new();
    for &c in &k2.creators {
        *avail.entry(c).or_insert(0) += 1;
    }
    struct Rec<'a> {
        anns: &'a [(u32, i64)],
        k1: &'a TermKey,
        k2: &'a TermKey,
        truncate: bool,
    }
    fn go(
        r: &Rec,
        i: usize,
        avail: &mut BTreeMap<(u32, i64), usize>,
        kept: &mut Vec<(u32, i64)>,
        factor: i64,
        out: &mut GradedOperator,
        coeff: &CycloScalar,
    ) -> Result<(), WeylError> {
        if i == r.anns.len() {
            let mut creators: Vec<(u32, i64)> = r.k1.creators.clone();
            for (&m, &cnt) in avail.iter() {
                creators.extend(std::iter::repeat(m).take(cnt));
            }
            creators.sort_unstable();
            let mut annihilators: Vec<(u32, i64)> = kept.clone();
            annihilators.extend(r.k2.annihilators.iter().copied());
            annihilators.sort_unstable();
            let contractions = r.anns.len() - kept.len();
            // Contracted pairs keep their hbar (the annihilator's own
            // hbar becomes the bracket hbar), so the total is unchanged.
            let key = TermKey {
                hbar_half: r.k1.hbar_half + r.k2.hbar_half,
                creators,
                annihilators,
            };
            let _ = contractions;
            let c = coeff.scale(&num_rational::BigRational::from_integer(factor.into()));
            return out.accumulate(key, c, r.truncate);
        }
        let a = r.anns[i];
        // Keep the annihilator.
        kept.push(a);
        go(r, i + 1, avail, kept, factor, out, coeff)?;
        kept.pop();
        // Contract with one of the matching creators, if any.
        let partner = (a.0, -a.1);
        if let Some(&cnt) = avail.get(&partner) {
            if cnt > 0 {
                *avail.get_mut(&partner).unwrap() -= 1;
                go(
                    r,
                    i + 1,
                    avail,
                    kept,
                    factor * cnt as i64 * a.1,
                    out,
                    coeff,
                )?;
                *avail.get_mut(&partner).unwrap() += 1;
            }
        }
        Ok(())
    }
    let rec = Rec {
        anns: &k1.annihilators,
        k1,
        k2,
        truncate,
    };
    go(
        &rec,
        0,
        &mut avail,
        &mut Vec::new(),
        1,
        out,
        &coeff,
    )
}

fn product_impl(
    a: &GradedOperator,
    b: &GradedOperator,
    truncate: bool,
) -> Result<GradedOperator, WeylError> {
    let window = a.window.meet(&b.window);
    let mut out = GradedOperator::zero(window);
    for (k1, c1) in &a.terms {
        for (k2, c2) in &b.terms {
            let coeff = c1.try_mul(c2)?;
            wick_term(&mut out, k1, k2, coeff, truncate)?;
        }
    }
    Ok(out)
}

/// The operator product A * B rewritten as a sum of normal-ordered
/// monomials (Wick's theorem); exact, with terms merged. A produced term
/// outside the window is an error.
pub fn normal_order_product(
    a: &GradedOperator,
    b: &GradedOperator,
) -> Result<GradedOperator, WeylError> {
    product_impl(a, b, false)
}

/// Product with silent window truncation, for materializing mode sums.
pub fn product_truncating(
    a: &GradedOperator,
    b: &GradedOperator,
) -> Result<GradedOperator, WeylError> {
    product_impl(a, b, true)
}

/// [A, B] = AB - BA.
pub fn operator_commutator(
    a: &GradedOperator,
    b: &GradedOperator,
) -> Result<GradedOperator, WeylError> {
    normal_order_product(a, b)?.sub(&normal_order_product(b, a)?)
}

// ---------------------------------------------------------------------------
// Polynomials acted on by operators.

/// Monomial key of a polynomial in the variables x^j_m with hbar-graded
/// coefficients. The hbar exponent is in half-units and may be negative
/// (the free energy lives at hbar^{-1} and up).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PolyKey {
    pub hbar_half: i32,
    /// Sorted multiset of (cycle, index), index >= 1.
    pub vars: Vec<(u32, u32)>,
}

impl PolyKey {
    pub fn unit() -> Self {
        PolyKey {
            hbar_half: 0,
            vars: Vec::new(),
        }
    }

    /// Grading degree: each variable counts 1, each hbar half-unit 1.
    pub fn degree(&self) -> i32 {
        self.vars.len() as i32 + self.hbar_half
    }
}

/// Exact polynomial in countably many variables, finitely supported.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<PolyKey, CycloScalar>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn one(ctx: crate::scalar::ScalarCtx) -> Self {
        let mut p = Poly::zero();
        p.add_term(PolyKey::unit(), ctx.one());
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PolyKey, &CycloScalar)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, key: &PolyKey) -> Option<&CycloScalar> {
        self.terms.get(key)
    }

    pub fn add_term(&mut self, key: PolyKey, coeff: CycloScalar) {
        if coeff.is_zero() {
            return;
        }
        debug_assert!(key.vars.windows(2).all(|w| w[0] <= w[1]));
        match self.terms.get_mut(&key) {
            Some(c) => {
                *c = c.try_add(&coeff).expect("poly coefficient contexts unify");
                if c.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, coeff);
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        out.merge(other);
        out
    }

    /// In-place accumulation of all terms of `other`.
    pub fn merge(&mut self, other: &Poly) {
        for (k, c) in &other.terms {
            self.add_term(k.clone(), c.clone());
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(k.clone(), c.neg());
        }
        out
    }

    pub fn scale(&self, s: &CycloScalar) -> Poly {
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            out.add_term(k.clone(), c.try_mul(s).expect("contexts unify"));
        }
        out
    }

    /// Product, dropping result terms of grading degree > cap.
    pub fn mul_capped(&self, other: &Poly, cap: i32) -> Poly {
        let mut out = Poly::zero();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let mut vars = k1.vars.clone();
                vars.extend(k2.vars.iter().copied());
                vars.sort_unstable();
                let key = PolyKey {
                    hbar_half: k1.hbar_half + k2.hbar_half,
                    vars,
                };
                if key.degree() > cap {
                    continue;
                }
                out.add_term(key, c1.try_mul(c2).expect("contexts unify"));
            }
        }
        out
    }

    /// Partial derivative in x^j_m (no hbar factor attached).
    pub fn differentiate(&self, cycle: u32, index: u32) -> Poly {
        let var = (cycle, index);
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            let count = k.vars.iter().filter(|&&v| v == var).count();
            if count == 0 {
                continue;
            }
            let mut vars = k.vars.clone();
            let pos = vars.iter().position(|&v| v == var).unwrap();
            vars.remove(pos);
            out.add_term(
                PolyKey {
                    hbar_half: k.hbar_half,
                    vars,
                },
                c.scale(&num_rational::BigRational::from_integer((count as i64).into())),
            );
        }
        out
    }

    /// Restriction to terms of grading degree <= cap.
    pub fn truncate_degree(&self, cap: i32) -> Poly {
        let mut out = Poly::zero();
        for (k, c) in &self.terms {
            if k.degree() <= cap {
                out.add_term(k.clone(), c.clone());
            }
        }
        out
    }

    pub fn max_degree(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.degree()).max()
    }
}

/// The differential-operator action: K^j_m (m>0) acts as hbar d/dx^j_m,
/// K^j_{-m} as multiplication by m x^j_m, and zero modes were already
/// folded into coefficients as hbar^{1/2} C_j.
pub fn apply(op: &GradedOperator, f: &Poly) -> Poly {
    apply_capped(op, f, i32::MAX)
}

/// The action with every result component of grading degree > cap
/// discarded before it is computed (result degree is the sum of the
/// operator-term and polynomial-term degrees).
pub fn apply_capped(op: &GradedOperator, f: &Poly, cap: i32) -> Poly {
    let mut fvars: std::collections::BTreeSet<(u32, u32)> = Default::default();
    for (pk, _) in &f.terms {
        fvars.extend(pk.vars.iter().copied());
    }
    let mut out = Poly::zero();
    for (k, c) in &op.terms {
        if k
            .annihilators
            .iter()
            .any(|&(j, m)| !fvars.contains(&(j, m as u32)))
        {
            continue;
        }
        let op_degree = k.degree() as i32;
        for (pk, pc) in &f.terms {
            if op_degree + pk.degree() > cap {
                continue;
            }
            // Differentiate by every annihilator first (they all commute);
            // a missing variable kills the contribution.
            let mut vars = pk.vars.clone();
            let mut factor: i64 = 1;
            let mut dead = false;
            for &(j, m) in &k.annihilators {
                let var = (j, m as u32);
                match vars.iter().position(|&v| v == var) {
                    Some(pos) => {
                        let count = vars.iter().filter(|&&v| v == var).count();
                        factor *= count as i64;
                        vars.remove(pos);
                    }
                    None => {
                        dead = true;
                        break;
                    }
                }
            }
            if dead {
                continue;
            }
            for &(j, m) in &k.creators {
                let mag = m.unsigned_abs();
                factor *= mag as i64;
                vars.push((j, mag as u32));
            }
            vars.sort_unstable();
            let key = PolyKey {
                hbar_half: pk.hbar_half + k.hbar_half as i32,
                vars,
            };
            let coeff = c
                .try_mul(pc)
                .expect("contexts unify")
                .scale(&num_rational::BigRational::from_integer(factor.into()));
            out.add_term(key, coeff);
        }
    }
    out
}

impl fmt::Display for GradedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({c})")?;
            if k.hbar_half > 0 {
                write!(f, "*h^{}", k.hbar_half)?;
            }
            for &(j, m) in k.creators.iter().chain(k.annihilators.iter()) {
                write!(f, "*K[{j},{m}]")?;
            }
        }
        Ok(())
    }
}
