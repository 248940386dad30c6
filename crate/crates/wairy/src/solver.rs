//! Solve H_k Z = 0 for Z = exp(F) given operators in Airy form
//! H_k = hbar d/dx_k - P_k, by induction on the grading degree.
//!
//! The free energy is stored in the symmetric 1/n! convention with a
//! shifted hbar exponent: the table entry (h, sigma) represents the term
//! `hbar^((h-2)/2) F[h, sigma] x^sigma / n!` with n = |sigma|,
//! so h = 0 is the leading hbar^{-1} sector and the grading degree of an
//! entry is |sigma| + h. Every entry has degree >= 3. The constraint
//! hbar dF/dx_k = e^{-F} P_k e^F (1) is triangular in this degree: the
//! degree-D entries are determined by entries of degree <= D-1 through
//! the Faa di Bruno expansion of P_k acting on exp(F).

use crate::dilaton::{check_airy_shape, AiryOp, DilatonError};
use crate::scalar::{CycloScalar, Rat, ScalarCtx, ScalarError};
use crate::weyl::{GradedOperator, Poly, PolyKey, WeylError, Window};
use num_bigint::BigInt;
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("structure violates the Airy shape: {0}")]
    BadStructure(String),
    #[error("duplicate distinguished variable K^{0}_{1}")]
    DuplicateVariable(u32, u32),
    #[error(
        "inconsistent determination of F[h={h}, {sigma:?}]: {left} vs {right} (not an Airy structure?)"
    )]
    Inconsistent {
        h: u32,
        sigma: Vec<(u32, u32)>,
        left: String,
        right: String,
    },
    #[error("window too small: solved keys reach variable index {reached}, target cover is {covered}")]
    WindowTooSmall { reached: u32, covered: u32 },
    #[error("coefficient key has degree {0}, beyond the cutoff {1}")]
    OutOfCutoff(i64, u32),
    #[error(transparent)]
    Dilaton(#[from] DilatonError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

/// A family of Airy-form operators, each tagged with its distinguished
/// variable; the tags are pairwise distinct and cover every x^mu_q with
/// 1 <= mu <= n_cycles and 1 <= q <= q_cover.
#[derive(Debug, Clone)]
pub struct AiryStructure {
    ops: Vec<AiryOp>,
    ctx: ScalarCtx,
    n_cycles: u32,
    q_cover: u32,
    window: Window,
    max_p_degree: u32,
}

impl AiryStructure {
    /// Upper degree bound declared for the remainders P_k.
    pub fn max_p_degree(&self) -> u32 {
        self.max_p_degree
    }
}

impl AiryStructure {
    pub fn new(
        ops: Vec<AiryOp>,
        ctx: ScalarCtx,
        max_p_degree: u32,
    ) -> Result<Self, SolverError> {
        if ops.is_empty() {
            return Err(SolverError::BadStructure("no operators".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for a in &ops {
            check_airy_shape(a, ctx, max_p_degree)
                .map_err(|e| SolverError::BadStructure(e.to_string()))?;
            if !seen.insert((a.cycle, a.index)) {
                return Err(SolverError::DuplicateVariable(a.cycle, a.index));
            }
        }
        let n_cycles = ops.iter().map(|a| a.cycle).max().unwrap();
        // Coverage: the distinguished variables must fill a full rectangle
        // of cycles 1..=n and indices 1..=q_cover.
        let mut q_cover = 0u32;
        'outer: for q in 1.. {
            for mu in 1..=n_cycles {
                if !seen.contains(&(mu, q)) {
                    break 'outer;
                }
            }
            q_cover = q;
        }
        if q_cover == 0 {
            return Err(SolverError::BadStructure(
                "distinguished variables do not cover index 1 on every cycle".into(),
            ));
        }
        let window = ops[0].op.window();
        Ok(AiryStructure {
            ops,
            ctx,
            n_cycles,
            q_cover,
            window,
            max_p_degree,
        })
    }

    pub fn ops(&self) -> &[AiryOp] {
        &self.ops
    }

    pub fn ctx(&self) -> ScalarCtx {
        self.ctx
    }

    pub fn q_cover(&self) -> u32 {
        self.q_cover
    }

    pub fn n_cycles(&self) -> u32 {
        self.n_cycles
    }

    pub fn window(&self) -> Window {
        self.window
    }

    /// P_k = hbar d/dx_k - H_k for the operator tagged (cycle, index).
    fn p_of(&self, a: &AiryOp) -> Result<GradedOperator, SolverError> {
        let mut lin = GradedOperator::zero(a.op.window());
        lin.add_normal_term(
            self.ctx.one(),
            0,
            &[crate::weyl::Mode::new(a.cycle, a.index as i64)],
            false,
        )?;
        Ok(lin.sub(&a.op)?)
    }
}

/// Serialize a structure: the tagged operators plus the remainder degree
/// bound.
pub fn structure_to_json(structure: &AiryStructure) -> serde_json::Value {
    use serde_json::json;
    json!({
        "max_p_degree": structure.max_p_degree,
        "ops": structure
            .ops
            .iter()
            .map(|a| json!({"cycle": a.cycle, "index": a.index, "op": a.op.to_json()}))
            .collect::<Vec<_>>(),
    })
}

/// Parse and validate a structure from its JSON form.
pub fn structure_from_json(v: &serde_json::Value) -> Result<AiryStructure, SolverError> {
    let obj = v
        .as_object()
        .ok_or_else(|| SolverError::BadStructure("expected object".into()))?;
    let max_p_degree = obj
        .get("max_p_degree")
        .and_then(|x| x.as_u64())
        .filter(|&x| (1..=64).contains(&x))
        .ok_or_else(|| SolverError::BadStructure("bad max_p_degree".into()))? as u32;
    let ops_json = obj
        .get("ops")
        .and_then(|x| x.as_array())
        .filter(|a| !a.is_empty() && a.len() <= 4096)
        .ok_or_else(|| SolverError::BadStructure("bad ops".into()))?;
    let mut ops = Vec::with_capacity(ops_json.len());
    let mut ctx = None;
    for o in ops_json {
        let cycle = o
            .get("cycle")
            .and_then(|x| x.as_u64())
            .filter(|&x| (1..=1024).contains(&x))
            .ok_or_else(|| SolverError::BadStructure("bad cycle".into()))? as u32;
        let index = o
            .get("index")
            .and_then(|x| x.as_u64())
            .filter(|&x| (1..=1_000_000).contains(&x))
            .ok_or_else(|| SolverError::BadStructure("bad index".into()))? as u32;
        let op = GradedOperator::from_json(
            o.get("op")
                .ok_or_else(|| SolverError::BadStructure("missing op".into()))?,
        )
        .map_err(|e| SolverError::BadStructure(e.to_string()))?;
        if ctx.is_none() {
            ctx = op.terms().next().map(|(_, c)| c.ctx());
        }
        ops.push(AiryOp { cycle, index, op });
    }
    let ctx = ctx.ok_or_else(|| SolverError::BadStructure("no nonzero operator".into()))?;
    AiryStructure::new(ops, ctx, max_p_degree)
}

pub fn structure_from_json_str(s: &str) -> Result<AiryStructure, SolverError> {
    let v: serde_json::Value =
        serde_json::from_str(s).map_err(|e| SolverError::BadStructure(e.to_string()))?;
    structure_from_json(&v)
}

type FeKey = (u32, Vec<(u32, u32)>);

/// Symmetric coefficient table of log Z, graded by |sigma| + h.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeEnergy {
    cutoff: u32,
    entries: BTreeMap<FeKey, CycloScalar>,
}

impl FreeEnergy {
    pub fn cutoff(&self) -> u32 {
        self.cutoff
    }

    pub fn entries(&self) -> impl Iterator<Item = (&FeKey, &CycloScalar)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Lookup with symmetrization: the variable list is sorted before the
    /// lookup, an absent key is zero, and a key beyond the cutoff is an
    /// error.
    pub fn coefficient(
        &self,
        h: u32,
        sigma: &[(u32, u32)],
        ctx: ScalarCtx,
    ) -> Result<CycloScalar, SolverError> {
        let mut key: Vec<(u32, u32)> = sigma.to_vec();
        key.sort_unstable();
        let degree = h as i64 + key.len() as i64;
        if degree > self.cutoff as i64 {
            return Err(SolverError::OutOfCutoff(degree, self.cutoff));
        }
        Ok(self
            .entries
            .get(&(h, key))
            .cloned()
            .unwrap_or_else(|| ctx.zero()))
    }

    /// The polynomial materialization of F: coefficient of x^sigma is
    /// sum_h hbar^{(h-2)/2} F[h, sigma] / prod_v mult_sigma(v)!.
    pub fn to_poly(&self) -> Poly {
        let mut out = Poly::zero();
        for ((h, sigma), value) in &self.entries {
            let denom = multiplicity_factorial(sigma);
            out.add_term(
                PolyKey {
                    hbar_half: *h as i32 - 2,
                    vars: sigma.clone(),
                },
                value.scale(&Rat::new(1.into(), denom)),
            );
        }
        out
    }

    /// Serialize sorted by (degree, h, sigma).
    pub fn to_json(&self) -> serde_json::Value {
        use serde_json::json;
        let mut items: Vec<(&FeKey, &CycloScalar)> = self.entries.iter().collect();
        items.sort_by_key(|((h, sigma), _)| (*h as usize + sigma.len(), *h, sigma.clone()));
        serde_json::Value::Array(
            items
                .into_iter()
                .map(|((h, sigma), v)| {
                    json!({
                        "hbar_half": h,
                        "vars": sigma.iter().map(|&(j, m)| json!([j, m])).collect::<Vec<_>>(),
                        "value": v.to_json(),
                    })
                })
                .collect(),
        )
    }
}

fn multiplicity_factorial(sigma: &[(u32, u32)]) -> BigInt {
    let mut acc = BigInt::from(1);
    let mut run = 0u64;
    for i in 0..sigma.len() {
        if i > 0 && sigma[i] == sigma[i - 1] {
            run += 1;
            acc *= run + 1;
        } else {
            run = 0;
        }
    }
    acc
}

/// Set partitions of 0..n (n small).
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    fn rec(i: usize, n: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            rec(i + 1, n, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        rec(i + 1, n, blocks, out);
        blocks.pop();
    }
    rec(0, n, &mut Vec::new(), &mut out);
    out
}

/// e^{-F} P e^F applied to 1, with every produced term capped at grading
/// degree `cap`: sum over P-terms of
/// coeff * hbar^{h_t} * x^{creators} * sum over set partitions of the
/// annihilators of prod_B (d_B F).
fn conjugated_p_applied(p: &GradedOperator, f_poly: &Poly, cap: i32) -> Poly {
    // A term whose annihilators touch a variable absent from F acts as
    // zero through every partition.
    let mut fvars: std::collections::BTreeSet<(u32, u32)> = Default::default();
    for (pk, _) in f_poly.terms() {
        fvars.extend(pk.vars.iter().copied());
    }
    let mut out = Poly::zero();
    for (key, coeff) in p.terms() {
        if key
            .annihilators
            .iter()
            .any(|&(j, m)| !fvars.contains(&(j, m as u32)))
        {
            continue;
        }
        // Base factor: hbar^{h_t} times the creator monomial.
        let mut base = Poly::zero();
        let mut vars: Vec<(u32, u32)> = Vec::new();
        let mut factor: i64 = 1;
        for &(j, m) in &key.creators {
            let mag = m.unsigned_abs() as u32;
            factor *= mag as i64;
            vars.push((j, mag));
        }
        vars.sort_unstable();
        base.add_term(
            PolyKey {
                hbar_half: key.hbar_half as i32,
                vars,
            },
            coeff.scale(&Rat::from_integer(factor.into())),
        );
        if key.annihilators.is_empty() {
            out.merge(&base.truncate_degree(cap));
            continue;
        }
        // Faa di Bruno over the annihilator multiset.
        for partition in set_partitions(key.annihilators.len()) {
            let mut acc = base.clone();
            for block in &partition {
                let mut d = f_poly.clone();
                for &pos in block {
                    let (j, m) = key.annihilators[pos];
                    d = d.differentiate(j, m as u32);
                }
                if d.is_zero() {
                    acc = Poly::zero();
                    break;
                }
                acc = acc.mul_capped(&d, cap);
                if acc.is_zero() {
                    break;
                }
            }
            out.merge(&acc);
        }
    }
    out.truncate_degree(cap)
}

/// Compute the unique F with entries of degree in [3, cutoff] such that
/// the degree <= cutoff part of e^{-F} H_k e^F applied to 1 vanishes for
/// every operator. Inconsistent determinations (which a genuine Airy
/// structure cannot produce) are an error, as is a solution escaping the
/// covered variable rectangle.
pub fn solve(structure: &AiryStructure, cutoff: u32) -> Result<FreeEnergy, SolverError> {
    let ctx = structure.ctx;
    // Only P-terms of degree <= cutoff - 1 can touch the solved region
    // (blocks add at least one degree each).
    let ps: Vec<(u32, u32, GradedOperator)> = structure
        .ops
        .iter()
        .map(|a| Ok((a.cycle, a.index, structure.p_of(a)?.truncate_degree(cutoff - 1))))
        .collect::<Result<_, SolverError>>()?;
    let mut fe = FreeEnergy {
        cutoff,
        entries: BTreeMap::new(),
    };
    let mut f_poly = Poly::zero();
    for level in 3..=cutoff {
        let cap = level as i32 - 1;
        let rhs_list: Vec<((u32, u32), Poly)> = ps
            .iter()
            .map(|(mu, q, p)| ((*mu, *q), conjugated_p_applied(p, &f_poly, cap)))
            .collect();
        // Candidate keys at this level: every constraint term extended by
        // its distinguished variable.
        let mut candidates: std::collections::BTreeSet<FeKey> = Default::default();
        for ((mu, q), rhs) in &rhs_list {
            for (pk, _) in rhs.terms() {
                if pk.degree() != cap {
                    continue;
                }
                if pk.hbar_half < 0 {
                    return Err(SolverError::BadStructure(format!(
                        "negative hbar power {} in constraint",
                        pk.hbar_half
                    )));
                }
                let mut sigma = pk.vars.clone();
                sigma.push((*mu, *q));
                sigma.sort_unstable();
                candidates.insert((pk.hbar_half as u32, sigma));
            }
        }
        // Each constraint whose variable occurs in the key determines its
        // value F[h, sigma] = rhs(h, sigma \ q) * prod mult_{sigma\q}!;
        // an absent term reads as zero. All determinations must agree.
        for key in candidates {
            let (h, sigma) = &key;
            let mut value: Option<(CycloScalar, (u32, u32))> = None;
            for ((mu, q), rhs) in &rhs_list {
                let Some(pos) = sigma.iter().position(|v| v == &(*mu, *q)) else {
                    continue;
                };
                let mut tau = sigma.clone();
                tau.remove(pos);
                let pk = PolyKey {
                    hbar_half: *h as i32,
                    vars: tau.clone(),
                };
                let v = rhs
                    .coefficient(&pk)
                    .cloned()
                    .unwrap_or_else(|| ctx.zero())
                    .scale(&Rat::from_integer(multiplicity_factorial(&tau)));
                match &value {
                    None => value = Some((v, (*mu, *q))),
                    Some((existing, _)) => {
                        if existing != &v {
                            return Err(SolverError::Inconsistent {
                                h: *h,
                                sigma: sigma.clone(),
                                left: existing.to_string(),
                                right: v.to_string(),
                            });
                        }
                    }
                }
            }
            let Some((value, _)) = value else { continue };
            if value.is_zero() {
                continue;
            }
            // A nonzero key touching a variable outside the covered
            // rectangle has an uncheckable constraint: the window must
            // grow.
            for &(mu, q) in sigma.iter() {
                if mu > structure.n_cycles || q > structure.q_cover {
                    return Err(SolverError::WindowTooSmall {
                        reached: q,
                        covered: structure.q_cover,
                    });
                }
            }
            f_poly.add_term(
                PolyKey {
                    hbar_half: *h as i32 - 2,
                    vars: sigma.clone(),
                },
                value.scale(&Rat::new(1.into(), multiplicity_factorial(sigma))),
            );
            fe.entries.insert(key.clone(), value);
        }
    }
    Ok(fe)
}

/// Outcome of the independent residual verification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualReport {
    pub checked_degree: u32,
    /// (cycle, index, degree) of nonzero residual components.
    pub failures: Vec<(u32, u32, i32)>,
}

impl ResidualReport {
    pub fn clean(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Apply each H_k to the exp-truncation of F and report any nonzero
/// residual component. An F correct through key degree `depth` makes all
/// components of grading degree <= depth - 1 vanish (the degree-d
/// component involves keys of degree d + 1), so that is the region
/// checked. This path goes through the literal operator action on
/// polynomials and shares nothing with the triangular solver.
pub fn residual_check(
    structure: &AiryStructure,
    fe: &FreeEnergy,
    depth: u32,
) -> Result<ResidualReport, SolverError> {
    let ctx = structure.ctx;
    let cap = depth as i32 - 1;
    let f_poly = fe.to_poly();
    // exp(F) truncated: F-terms have degree >= 1, so D factors suffice.
    let mut z = Poly::one(ctx);
    let mut power = Poly::one(ctx);
    let mut factorial = Rat::from_integer(1.into());
    for j in 1..=depth as i64 {
        power = power.mul_capped(&f_poly, cap);
        if power.is_zero() {
            break;
        }
        factorial = factorial * Rat::from_integer(j.into());
        z.merge(&power.scale(&ctx.one().scale(&factorial.clone().recip())));
    }
    let mut failures = Vec::new();
    for a in &structure.ops {
        let residual = crate::weyl::apply_capped(&a.op, &z, cap);
        for (pk, coeff) in residual.terms() {
            if pk.degree() <= cap && !coeff.is_zero() {
                failures.push((a.cycle, a.index, pk.degree()));
            }
        }
    }
    failures.sort_unstable();
    failures.dedup();
    Ok(ResidualReport {
        checked_degree: depth,
        failures,
    })
}


#[cfg(test)]
mod json_tests {
    use super::*;

    #[test]
    fn structure_round_trip() {
        use crate::weyl::Mode;
        let ctx = ScalarCtx::new(1, 1);
        let window = Window::new(4, 6);
        let mut h = GradedOperator::zero(window);
        h.add_normal_term(ctx.one(), 0, &[Mode::new(1, 1)], false).unwrap();
        h.add_normal_term(ctx.integer(-1), 0, &[Mode::new(1, -1), Mode::new(1, -1)], false)
            .unwrap();
        let s = AiryStructure::new(
            vec![AiryOp {
                cycle: 1,
                index: 1,
                op: h,
            }],
            ctx,
            2,
        )
        .unwrap();
        let json = structure_to_json(&s).to_string();
        let back = structure_from_json_str(&json).unwrap();
        assert_eq!(structure_to_json(&back).to_string(), json);
        assert!(structure_from_json_str("{}").is_err());
        // A non-Airy operator is rejected on parse.
        assert!(structure_from_json_str(
            "{\"max_p_degree\":2,\"ops\":[{\"cycle\":1,\"index\":1,\"op\":{\"window\":{\"W\":4,\"D\":6},\"terms\":[]}}]}"
        )
        .is_err());
    }
}
