//! Construction of the W(gl_r) mode operators from twisted bosonic modes:
//! per-cycle modes W^{j,i}_m through a pluggable Psi-coefficient provider,
//! and composite modes W^i_m assembled across cycles, both materialized on
//! a finite window.
//!
//! Every term of W^{j,i}_m and of W^i_m has grading degree exactly i, so a
//! window with max_degree >= i captures the full degree content and only
//! the mode-index bound truncates; the infinite index sums contribute to a
//! bounded region only through finitely many tuples.

use crate::scalar::{CycloScalar, Rat, ScalarCtx, ScalarError};
use crate::weyl::{product_truncating, GradedOperator, Mode, WeylError, Window};
use num_bigint::BigInt;
use num_traits::One;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModeError {
    #[error("no Psi provider registered for cycle length {0}")]
    UnsupportedRho(u32),
    #[error("invalid Psi query: rho={rho}, ell={ell}, arity={arity}")]
    InvalidPsiQuery { rho: u32, ell: u32, arity: usize },
    #[error("window too small: modes of weight {needed} need max_degree >= {needed}, have {have}")]
    WindowTooSmall { needed: u32, have: u32 },
    #[error("index {0} out of range 1..={1}")]
    IndexOutOfRange(u32, u32),
    #[error("cycle {0} out of range 1..={1}")]
    CycleOutOfRange(u32, u32),
    #[error("shift vector has length {0}, expected {1}")]
    BadShiftLength(usize, u32),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// Twist and shift data: n cycles of equal length rho (r = n rho), a
/// uniform dilaton-shift index s, and the shift constants Q_j.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistSpec {
    pub rho: u32,
    pub n: u32,
    pub s: u32,
    q: Vec<CycloScalar>,
}

impl TwistSpec {
    pub fn new(rho: u32, n: u32, s: u32, q: Vec<CycloScalar>) -> Result<Self, ModeError> {
        assert!(rho >= 1 && n >= 1 && s >= 1);
        if q.len() != n as usize {
            return Err(ModeError::BadShiftLength(q.len(), n));
        }
        // Lift all shifts into the common context with n symbols.
        let order = q
            .iter()
            .map(|x| x.ctx().order)
            .filter(|&o| o > 1)
            .max()
            .unwrap_or(1);
        let ctx = ScalarCtx::new(order, n);
        let one = ctx.one();
        let q = q
            .into_iter()
            .map(|x| x.try_mul(&one).map_err(ModeError::from))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TwistSpec { rho, n, s, q })
    }

    /// Root-of-unity shifts Q_j = w^j with w a primitive r-th root.
    pub fn with_root_shifts(rho: u32, n: u32, s: u32) -> Self {
        let r = rho * n;
        let ctx = ScalarCtx::new(r, n);
        let q = (1..=n).map(|j| ctx.root_power(j as i64)).collect();
        TwistSpec::new(rho, n, s, q).expect("lengths match by construction")
    }

    pub fn r(&self) -> u32 {
        self.rho * self.n
    }

    pub fn shifts(&self) -> &[CycloScalar] {
        &self.q
    }

    pub fn shift(&self, j: u32) -> &CycloScalar {
        &self.q[(j - 1) as usize]
    }

    /// Scalar context of every coefficient this spec produces.
    pub fn ctx(&self) -> ScalarCtx {
        self.q[0].ctx()
    }

    /// Unique (k, l) with i = k + l*rho, 1 <= k <= rho.
    pub fn reindex(&self, i: u32) -> Result<(u32, u32), ModeError> {
        if i == 0 || i > self.r() {
            return Err(ModeError::IndexOutOfRange(i, self.r()));
        }
        Ok((((i - 1) % self.rho) + 1, (i - 1) / self.rho))
    }

    /// Inverse of `reindex`.
    pub fn compose_index(&self, k: u32, l: u32) -> u32 {
        k + l * self.rho
    }
}

/// Coefficient functions Psi^{(ell)}_rho of the twisted-module mode
/// expansion. Implementations must be symmetric in the argument list.
///
/// Normalization contract: the engine absorbs the overall 1/rho prefactor
/// of the mode expansion into the current mode, so for single-argument
/// queries (the i = 1 field) Psi^{(0)} = 1 makes W^{j,1}_m = K^j_{rho m}
/// exactly.
pub trait PsiProvider {
    fn supports(&self, rho: u32) -> bool;
    fn psi(&self, rho: u32, ell: u32, ps: &[i64]) -> Result<CycloScalar, ModeError>;
}

/// Pinned coefficients for the untwisted (rho = 1) and 2-twisted cases.
#[derive(Debug, Default, Clone, Copy)]
pub struct BuiltinPsi;

impl PsiProvider for BuiltinPsi {
    fn supports(&self, rho: u32) -> bool {
        rho == 1 || rho == 2
    }

    fn psi(&self, rho: u32, ell: u32, ps: &[i64]) -> Result<CycloScalar, ModeError> {
        let ctx = ScalarCtx::rationals();
        let bad = || ModeError::InvalidPsiQuery {
            rho,
            ell,
            arity: ps.len(),
        };
        match (rho, ell, ps.len()) {
            (1, 0, 1) => Ok(ctx.one()),
            (2, 0, 1) => Ok(ctx.one()),
            // Parity sign 2 delta_{2|p1} delta_{2|p2} - 1.
            (2, 0, 2) => {
                if ps[0] % 2 == 0 && ps[1] % 2 == 0 {
                    Ok(ctx.one())
                } else {
                    Ok(ctx.integer(-1))
                }
            }
            (2, 1, 0) => Ok(ctx.rational(-1, 4)),
            _ => Err(bad()),
        }
    }
}

/// Psi^{(ell)}_rho(ps) through a provider, after validating the query
/// shape: the arity plus 2*ell must be a field label i with 1 <= i <= rho.
pub fn psi_coefficient(
    provider: &dyn PsiProvider,
    rho: u32,
    ell: u32,
    ps: &[i64],
) -> Result<CycloScalar, ModeError> {
    if !provider.supports(rho) {
        return Err(ModeError::UnsupportedRho(rho));
    }
    let i = ps.len() as u32 + 2 * ell;
    if i == 0 || i > rho {
        return Err(ModeError::InvalidPsiQuery {
            rho,
            ell,
            arity: ps.len(),
        });
    }
    provider.psi(rho, ell, ps)
}

fn factorial(n: u32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n as u64 {
        acc *= k;
    }
    acc
}

/// Ordered integer tuples of the given length with the given sum and every
/// entry bounded by |p| <= max_abs.
fn tuples_with_sum(len: usize, sum: i64, max_abs: i64, out: &mut Vec<Vec<i64>>) {
    fn rec(len: usize, sum: i64, max_abs: i64, acc: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if len == 0 {
            if sum == 0 {
                out.push(acc.clone());
            }
            return;
        }
        let rest = (len - 1) as i64 * max_abs;
        let lo = (-max_abs).max(sum - rest);
        let hi = max_abs.min(sum + rest);
        for p in lo..=hi {
            acc.push(p);
            rec(len - 1, sum - p, max_abs, acc, out);
            acc.pop();
        }
    }
    rec(len, sum, max_abs, &mut Vec::new(), out);
}

/// The per-cycle mode W^{j,i}_m materialized on the window: the sum over
/// ell and over integer tuples (p_{2ell+1}, ..., p_i) with
/// sum p_k = rho (m - i + 1), each term normal-ordered with coefficient
/// (1/rho) i! hbar^ell / (2^ell ell! (i-2ell)!) Psi^{(ell)}_rho(p).
///
/// For i = 1 this is the current mode K^j_{rho m} exactly (see the
/// `PsiProvider` normalization contract). Terms whose mode indices exceed
/// the window are dropped; a max_degree below i is an error because every
/// term of W^{j,i}_m has grading degree exactly i.
pub fn cycle_mode(
    spec: &TwistSpec,
    provider: &dyn PsiProvider,
    j: u32,
    i: u32,
    m: i64,
    window: Window,
) -> Result<GradedOperator, ModeError> {
    if !provider.supports(spec.rho) {
        return Err(ModeError::UnsupportedRho(spec.rho));
    }
    if i == 0 || i > spec.rho {
        return Err(ModeError::IndexOutOfRange(i, spec.rho));
    }
    if j == 0 || j > spec.n {
        return Err(ModeError::CycleOutOfRange(j, spec.n));
    }
    if window.max_degree < i {
        return Err(ModeError::WindowTooSmall {
            needed: i,
            have: window.max_degree,
        });
    }
    let ctx = spec.ctx();
    let rho = spec.rho as i64;
    let mut op = GradedOperator::zero(window);
    if i == 1 {
        let p = rho * m;
        let coeff = psi_coefficient(provider, spec.rho, 0, &[p])?.try_mul(&ctx.one())?;
        if p.abs() <= window.max_mode {
            op.add_normal_term(coeff, 0, &[Mode::new(j, p)], true)?;
        }
        return Ok(op);
    }
    let target: i64 = rho * (m - i as i64 + 1);
    for ell in 0..=(i / 2) {
        let len = (i - 2 * ell) as usize;
        // (1/rho) * i! / (2^ell ell! (i-2ell)!)
        let num = factorial(i);
        let den = BigInt::from(rho)
            * BigInt::from(2u32).pow(ell)
            * factorial(ell)
            * factorial(i - 2 * ell);
        let pref = Rat::new(num, den);
        let mut tuples = Vec::new();
        tuples_with_sum(len, target, window.max_mode, &mut tuples);
        for ps in tuples {
            let psi = psi_coefficient(provider, spec.rho, ell, &ps)?;
            let coeff = psi.try_mul(&ctx.one())?.scale(&pref);
            let modes: Vec<Mode> = ps.iter().map(|&p| Mode::new(j, p)).collect();
            op.add_normal_term(coeff, 2 * ell, &modes, true)?;
        }
    }
    Ok(op)
}

/// The composite mode W^i_m =
/// rho^{-i} sum_{M subset {1..n}} rho^{|M|}
///   sum_{i_j, sum = i} sum_{m_j, sum = m+1-|M|} prod_{j in M} W^{j,i_j}_{m_j},
/// with the infinite m_j sums truncated to the window-relevant range (a
/// tuple contributes only when every factor materializes nonzero).
pub fn composite_mode(
    spec: &TwistSpec,
    provider: &dyn PsiProvider,
    i: u32,
    m: i64,
    window: Window,
) -> Result<GradedOperator, ModeError> {
    composite_impl(spec, provider, i, m, window, None)
}

/// Weight of a term once every shiftable creator K^j_{-s} is discounted:
/// the lowest grading degree any summand of its dilaton shift can have.
fn shift_leading_weight(key: &crate::weyl::TermKey, s: i64) -> u32 {
    let shift_creators = key.creators.iter().filter(|&&(_, m)| m == -s).count() as u32;
    key.degree() - shift_creators
}

/// The composite mode restricted to terms that can still contribute at
/// grading degree <= keep after the dilaton shift K^j_{-s} -> K^j_{-s} - Q_j
/// (a term with more than `keep` non-shift modes keeps degree > keep under
/// every substitution). Used by the leading-order oracle, where the full
/// materialization would be needlessly wide.
pub fn composite_mode_shift_leading(
    spec: &TwistSpec,
    provider: &dyn PsiProvider,
    i: u32,
    m: i64,
    window: Window,
    keep: u32,
) -> Result<GradedOperator, ModeError> {
    composite_impl(spec, provider, i, m, window, Some((spec.s as i64, keep)))
}

fn composite_impl(
    spec: &TwistSpec,
    provider: &dyn PsiProvider,
    i: u32,
    m: i64,
    window: Window,
    filter: Option<(i64, u32)>,
) -> Result<GradedOperator, ModeError> {
    if i == 0 || i > spec.r() {
        return Err(ModeError::IndexOutOfRange(i, spec.r()));
    }
    if window.max_degree < i {
        return Err(ModeError::WindowTooSmall {
            needed: i,
            have: window.max_degree,
        });
    }
    let ctx = spec.ctx();
    let rho = spec.rho as i64;
    // Factor cache: (j, i_j, m_j) -> materialized cycle mode.
    let mut cache: HashMap<(u32, u32, i64), GradedOperator> = HashMap::new();
    let factor = |j: u32, ij: u32, mj: i64, cache: &mut HashMap<(u32, u32, i64), GradedOperator>| -> Result<GradedOperator, ModeError> {
        if let Some(op) = cache.get(&(j, ij, mj)) {
            return Ok(op.clone());
        }
        let mut op = cycle_mode(spec, provider, j, ij, mj, window)?;
        if let Some((s, keep)) = filter {
            op = op.filter_terms(|k| shift_leading_weight(k, s) <= keep);
        }
        cache.insert((j, ij, mj), op.clone());
        Ok(op)
    };
    // A cycle mode W^{j,i}_m is empty unless some tuple with |p| <= W sums
    // to rho(m - i + 1), i.e. |m - i + 1| <= i W / rho.
    let m_range = |ij: u32| -> (i64, i64) {
        let span = (ij as i64) * window.max_mode / rho;
        (ij as i64 - 1 - span, ij as i64 - 1 + span)
    };

    let mut out = GradedOperator::zero(window);
    let n = spec.n;
    for mask in 1u32..(1 << n) {
        let cycles: Vec<u32> = (1..=n).filter(|j| mask & (1 << (j - 1)) != 0).collect();
        let size = cycles.len() as u32;
        // rho^{|M| - i}
        let pref = Rat::new(
            BigInt::from(rho).pow(size),
            BigInt::from(rho).pow(i),
        );
        // Compositions of i into parts 1..=rho over the chosen cycles.
        let mut comps = Vec::new();
        compositions(i, spec.rho, size as usize, &mut Vec::new(), &mut comps);
        for comp in &comps {
            // Index tuples m_j with sum = m + 1 - |M|, each factor within
            // its nonzero range; the last index is forced by the sum.
            let msum = m + 1 - size as i64;
            let mut stack: Vec<(usize, i64, GradedOperator)> = vec![(
                0,
                msum,
                GradedOperator::constant(ctx.one().scale(&pref), 0, window)?,
            )];
            while let Some((pos, remaining, acc)) = stack.pop() {
                if pos == cycles.len() {
                    debug_assert_eq!(remaining, 0);
                    let acc = match filter {
                        Some((s, keep)) => acc.filter_terms(|k| shift_leading_weight(k, s) <= keep),
                        None => acc,
                    };
                    out.merge_from(&acc, true)?;
                    continue;
                }
                let j = cycles[pos];
                let ij = comp[pos];
                let (lo, hi) = m_range(ij);
                if pos == cycles.len() - 1 {
                    let mj = remaining;
                    if mj < lo || mj > hi {
                        continue;
                    }
                    let f = factor(j, ij, mj, &mut cache)?;
                    if f.is_zero() {
                        continue;
                    }
                    let prod = product_truncating(&acc, &f)?;
                    if !prod.is_zero() {
                        stack.push((pos + 1, 0, prod));
                    }
                } else {
                    for mj in lo..=hi {
                        let f = factor(j, ij, mj, &mut cache)?;
                        if f.is_zero() {
                            continue;
                        }
                        let prod = product_truncating(&acc, &f)?;
                        if !prod.is_zero() {
                            stack.push((pos + 1, remaining - mj, prod));
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Ordered compositions of total into `parts` parts, each in 1..=max_part.
fn compositions(total: u32, max_part: u32, parts: usize, acc: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 0 {
        if total == 0 {
            out.push(acc.clone());
        }
        return;
    }
    let lo = 1.max(total.saturating_sub(max_part * (parts as u32 - 1)));
    let hi = max_part.min(total.saturating_sub(parts as u32 - 1));
    for p in lo..=hi {
        acc.push(p);
        compositions(total - p, max_part, parts - 1, acc, out);
        acc.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ScalarCtx;
    use crate::weyl::{PolyKey, TermKey};

    fn win() -> Window {
        Window::new(12, 8)
    }

    fn gl4_spec() -> TwistSpec {
        // rho = 2, n = 2, s = 1, Q = (i, -1).
        TwistSpec::with_root_shifts(2, 2, 1)
    }

    #[test]
    fn root_shift_values() {
        let spec = gl4_spec();
        let ctx = spec.ctx();
        assert_eq!(spec.shift(1), &ctx.root_power(1));
        assert_eq!(spec.shift(2), &ctx.integer(-1));
    }

    #[test]
    fn reindex_examples() {
        let s2 = TwistSpec::with_root_shifts(2, 2, 1);
        assert_eq!(s2.reindex(3).unwrap(), (1, 1));
        assert_eq!(s2.reindex(2).unwrap(), (2, 0));
        let s3 = TwistSpec::with_root_shifts(3, 3, 1);
        assert_eq!(s3.reindex(7).unwrap(), (1, 2));
        assert!(s3.reindex(0).is_err());
        assert!(s3.reindex(10).is_err());
    }

    #[test]
    fn psi_pinned_values() {
        let p = BuiltinPsi;
        let one = ScalarCtx::rationals().one();
        assert_eq!(psi_coefficient(&p, 2, 0, &[4, -2]).unwrap(), one);
        assert_eq!(
            psi_coefficient(&p, 2, 0, &[3, -1]).unwrap(),
            ScalarCtx::rationals().integer(-1)
        );
        assert_eq!(
            psi_coefficient(&p, 2, 1, &[]).unwrap(),
            ScalarCtx::rationals().rational(-1, 4)
        );
        assert!(matches!(
            psi_coefficient(&p, 3, 0, &[1, 2, 3]),
            Err(ModeError::UnsupportedRho(3))
        ));
        // Arity must fit a field label.
        assert!(psi_coefficient(&p, 2, 2, &[]).is_err());
    }

    #[test]
    fn untwisted_cycle_mode_is_current() {
        let ctx = ScalarCtx::new(1, 1);
        let spec = TwistSpec::new(1, 1, 1, vec![ctx.one()]).unwrap();
        let op = cycle_mode(&spec, &BuiltinPsi, 1, 1, 5, win()).unwrap();
        let expected = GradedOperator::mode(Mode::new(1, 5), spec.ctx().one(), win()).unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn twisted_current_mode() {
        let spec = gl4_spec();
        let op = cycle_mode(&spec, &BuiltinPsi, 1, 1, 3, win()).unwrap();
        let expected = GradedOperator::mode(Mode::new(1, 6), spec.ctx().one(), win()).unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn twisted_quadratic_mode_constants() {
        // W^{j,2}_m carries the hbar constant (1/2) hbar Psi^{(1)}_2 = -hbar/8
        // exactly at m = 1, plus the parity-signed quadratic sum.
        let spec = gl4_spec();
        let ctx = spec.ctx();
        let op = cycle_mode(&spec, &BuiltinPsi, 1, 2, 1, win()).unwrap();
        let hbar_const = op.coefficient(&TermKey::scalar(2)).expect("hbar term");
        // The (0,0) zero-mode tuple contributes (1/2) C_1^2 on top.
        let c1 = ctx.c_symbol(1).unwrap();
        let expected = ctx
            .rational(-1, 8)
            .try_add(&c1.try_mul(&c1).unwrap().scale(&Rat::new(1.into(), 2.into())))
            .unwrap();
        assert_eq!(hbar_const, &expected);
        assert_eq!(hbar_const.with_c_zero(), ctx.rational(-1, 8));
        // Ordered tuples (2,-2) and (-2,2) merge with parity sign +1.
        let key = TermKey {
            hbar_half: 2,
            creators: vec![(1, -2)],
            annihilators: vec![(1, 2)],
        };
        assert_eq!(op.coefficient(&key).unwrap(), &ctx.one());
        // Odd-odd tuples pick up the sign -1.
        let key = TermKey {
            hbar_half: 2,
            creators: vec![(1, -1)],
            annihilators: vec![(1, 1)],
        };
        assert_eq!(op.coefficient(&key).unwrap(), &ctx.integer(-1));
        // No hbar constant away from m = 1.
        let op = cycle_mode(&spec, &BuiltinPsi, 1, 2, 0, win()).unwrap();
        assert!(op.coefficient(&TermKey::scalar(2)).is_none());
    }

    #[test]
    fn composite_is_sum_of_currents() {
        // (rho=2, n=2), i=1: W^1_m = W^{1,1}_m + W^{2,1}_m.
        let spec = gl4_spec();
        let op = composite_mode(&spec, &BuiltinPsi, 1, 2, win()).unwrap();
        let expected = cycle_mode(&spec, &BuiltinPsi, 1, 1, 2, win())
            .unwrap()
            .add(&cycle_mode(&spec, &BuiltinPsi, 2, 1, 2, win()).unwrap())
            .unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn composite_quadratic_assembly() {
        // (rho=2, n=2), i=2:
        // W^2_m = 1/2 W^{1,2}_m + 1/2 W^{2,2}_m + sum_{m1+m2=m-1} W^{1,1} W^{2,1}.
        let spec = gl4_spec();
        let m = 1i64;
        let op = composite_mode(&spec, &BuiltinPsi, 2, m, win()).unwrap();
        let half = Rat::new(1.into(), 2.into());
        let mut expected = cycle_mode(&spec, &BuiltinPsi, 1, 2, m, win())
            .unwrap()
            .scale(&spec.ctx().one().scale(&half))
            .unwrap()
            .add(
                &cycle_mode(&spec, &BuiltinPsi, 2, 2, m, win())
                    .unwrap()
                    .scale(&spec.ctx().one().scale(&half))
                    .unwrap(),
            )
            .unwrap();
        let span = win().max_mode / 2;
        for m1 in -span..=span {
            let m2 = m - 1 - m1;
            if m2.abs() > span {
                continue;
            }
            let prod = product_truncating(
                &cycle_mode(&spec, &BuiltinPsi, 1, 1, m1, win()).unwrap(),
                &cycle_mode(&spec, &BuiltinPsi, 2, 1, m2, win()).unwrap(),
            )
            .unwrap();
            expected = expected.add(&prod).unwrap();
        }
        assert_eq!(op, expected);
    }

    #[test]
    fn untwisted_single_cycle_composite() {
        // (rho=1, n=1), i=1: W^1_m = K^1_m.
        let ctx = ScalarCtx::new(1, 1);
        let spec = TwistSpec::new(1, 1, 1, vec![ctx.one()]).unwrap();
        let op = composite_mode(&spec, &BuiltinPsi, 1, 4, win()).unwrap();
        let expected = GradedOperator::mode(Mode::new(1, 4), spec.ctx().one(), win()).unwrap();
        assert_eq!(op, expected);
    }

    #[test]
    fn untwisted_composites_have_no_psi_corrections() {
        // rho = 1: every term of W^i_m is a product of distinct-cycle
        // currents; no hbar corrections appear.
        let spec = TwistSpec::with_root_shifts(1, 3, 1);
        for i in 1..=3u32 {
            for m in -2..=3i64 {
                let op = composite_mode(&spec, &BuiltinPsi, i, m, win()).unwrap();
                for (k, c) in op.terms() {
                    // All hbar content is accounted for by annihilators and
                    // folded zero modes; nothing is left for a correction.
                    assert_eq!(
                        k.hbar_half,
                        2 * k.annihilators.len() as u32 + c.c_degree()
                    );
                    assert_eq!(k.degree(), i);
                }
            }
        }
    }

    #[test]
    fn window_monotonicity() {
        let spec = gl4_spec();
        let small = Window::new(6, 8);
        let large = Window::new(10, 8);
        for i in 1..=4u32 {
            let a = composite_mode(&spec, &BuiltinPsi, i, 1, small).unwrap();
            let b = composite_mode(&spec, &BuiltinPsi, i, 1, large).unwrap();
            for (k, c) in a.terms() {
                assert_eq!(b.coefficient(k), Some(c), "term lost when enlarging window");
            }
        }
    }

    #[test]
    fn cycle_permutation_symmetry() {
        // Swapping the two cycles together with their Q labels is a
        // symmetry of the composite modes.
        let ctx = ScalarCtx::new(4, 2);
        let qa = vec![ctx.root_power(1), ctx.integer(-1)];
        let qb = vec![ctx.integer(-1), ctx.root_power(1)];
        let sa = TwistSpec::new(2, 2, 1, qa).unwrap();
        let sb = TwistSpec::new(2, 2, 1, qb).unwrap();
        for i in 1..=4u32 {
            let a = composite_mode(&sa, &BuiltinPsi, i, 1, win()).unwrap();
            let b = composite_mode(&sb, &BuiltinPsi, i, 1, win()).unwrap();
            // Relabel cycles 1 <-> 2 in b and compare.
            let mut swapped = GradedOperator::zero(win());
            for (k, c) in b.terms() {
                let flip = |v: &Vec<(u32, i64)>| {
                    let mut out: Vec<(u32, i64)> =
                        v.iter().map(|&(j, m)| (3 - j, m)).collect();
                    out.sort_unstable();
                    out
                };
                let modes: Vec<Mode> = flip(&k.creators)
                    .into_iter()
                    .chain(flip(&k.annihilators))
                    .map(|(j, m)| Mode::new(j, m))
                    .collect();
                // Zero modes were folded into C symbols; swapping cycle
                // labels means swapping C_1 and C_2 = -C_1, which flips
                // the sign of odd-degree C content. The quadratic modes
                // here see only C-free and C^1 content, so flip signs of
                // odd c-degree terms.
                let c_flipped = swap_two_symbols(c);
                swapped
                    .add_normal_term(
                        c_flipped,
                        k.hbar_half
                            - 2 * k.annihilators.len() as u32,
                        &modes,
                        false,
                    )
                    .unwrap();
            }
            assert_eq!(a, swapped, "cycle swap mismatch at i={i}");
        }
    }

    // C_1 <-> C_2 with C_2 = -C_1: send C_1 to -C_1.
    fn swap_two_symbols(c: &CycloScalar) -> CycloScalar {
        let ctx = c.ctx();
        assert_eq!(ctx.symbols, 2);
        // Decompose by powers of C_1 using with_c_zero on derivatives is
        // overkill; reconstruct from JSON terms instead.
        let v = c.to_json();
        let mut out = ctx.zero();
        let terms = v.get("terms").unwrap().as_array().unwrap();
        for t in terms {
            let pow = t.get("omega_pow").unwrap().as_u64().unwrap() as i64;
            let num: num_bigint::BigInt =
                t.get("num").unwrap().as_str().unwrap().parse().unwrap();
            let den: num_bigint::BigInt =
                t.get("den").unwrap().as_str().unwrap().parse().unwrap();
            let cdeg = t.get("c_monomial").unwrap().as_array().unwrap()[0]
                .as_u64()
                .unwrap();
            let mut term = ctx.root_power(pow).scale(&Rat::new(num, den));
            let c1 = ctx.c_symbol(1).unwrap();
            for _ in 0..cdeg {
                term = term.try_mul(&c1.neg()).unwrap();
            }
            out = out.try_add(&term).unwrap();
        }
        out
    }

    #[test]
    fn degree_is_homogeneous() {
        let spec = gl4_spec();
        for i in 1..=4u32 {
            let op = composite_mode(&spec, &BuiltinPsi, i, 2, win()).unwrap();
            for (k, _) in op.terms() {
                assert_eq!(k.degree(), i);
            }
        }
    }

    #[test]
    fn window_too_small_for_degree() {
        let spec = gl4_spec();
        let tiny = Window::new(8, 1);
        assert!(matches!(
            composite_mode(&spec, &BuiltinPsi, 3, 1, tiny),
            Err(ModeError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn poly_degree_sanity() {
        let k = PolyKey {
            hbar_half: -2,
            vars: vec![(1, 1), (1, 1), (1, 1)],
        };
        assert_eq!(k.degree(), 1);
    }
}
