//! Existence of quantum r-Airy structures for equal-cycle twists: the
//! subalgebra bounds, the four admissible (rho, s, n) families with their
//! partitions, the exhaustive admissibility table, the ceiling-sum witness
//! against 3 <= s <= rho-1, and the one-cycle appending construction.

use crate::dilaton::{shift_matrix, shifted_composite_mode, DilatonError};
use crate::partitions::{find_partition_with_profile, Partition, ProfileSearch};
use crate::scalar::CycloScalar;
use crate::weyl::{product_truncating, GradedOperator, Mode, WeylError, Window};
use crate::wmodes::{ModeError, PsiProvider, TwistSpec};
use num_integer::Integer;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("classification requires n >= 2 cycles, got {0}")]
    TooFewCycles(u32),
    #[error("base structure is not admissible: {0:?}")]
    BaseNotAdmissible(RejectReason),
    #[error(transparent)]
    Dilaton(#[from] DilatonError),
    #[error(transparent)]
    Mode(#[from] ModeError),
    #[error(transparent)]
    Weyl(#[from] WeylError),
}

/// Minimal admissible m for the mode H^{k + l rho}_m:
/// l(rho - s) + k - 1 - floor(s(k-1)/rho) + delta_{k,1}.
pub fn subalgebra_bound(rho: u32, s: u32, k: u32, l: u32) -> i64 {
    debug_assert!(k >= 1 && k <= rho);
    let (rho, s, k, l) = (rho as i64, s as i64, k as i64, l as i64);
    l * (rho - s) + (k - 1) - (s * (k - 1)).div_euclid(rho) + i64::from(k == 1)
}

/// Bounds for i = 1..r from the subalgebra condition, plus the extra
/// (i, m) = (1, 0) slot occupied by the vanishing sum of zero modes.
pub fn bounds_with_zero_slot(rho: u32, n: u32, s: u32) -> Vec<i64> {
    let mut out = Vec::with_capacity((rho * n) as usize);
    for i in 1..=(rho * n) {
        let k = ((i - 1) % rho) + 1;
        let l = (i - 1) / rho;
        out.push(subalgebra_bound(rho, s, k, l));
    }
    out[0] = out[0].min(0);
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CaseLabel {
    A,
    B,
    C,
    D,
}

impl CaseLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CaseLabel::A => "a",
            CaseLabel::B => "b",
            CaseLabel::C => "c",
            CaseLabel::D => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    NonCoprime,
    STooLarge,
    NoLambdaGoodPartition,
    ZeroShift,
    SingularShiftMatrix,
}

impl RejectReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            RejectReason::NonCoprime => "NonCoprime",
            RejectReason::STooLarge => "STooLarge",
            RejectReason::NoLambdaGoodPartition => "NoLambdaGoodPartition",
            RejectReason::ZeroShift => "ZeroShift",
            RejectReason::SingularShiftMatrix => "SingularShiftMatrix",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Requirement {
    SumK0Zero,
    ShiftMatrixInvertible,
    AllQNonzero,
}

impl Requirement {
    pub fn as_str(&self) -> &'static str {
        match self {
            Requirement::SumK0Zero => "sum_K0_zero",
            Requirement::ShiftMatrixInvertible => "shift_matrix_invertible",
            Requirement::AllQNonzero => "all_Q_nonzero",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationVerdict {
    pub admissible: bool,
    pub case_label: Option<CaseLabel>,
    pub partition: Option<Partition>,
    pub requirements: Vec<Requirement>,
    pub reason: Option<RejectReason>,
}

impl ClassificationVerdict {
    fn rejected(reason: RejectReason) -> Self {
        ClassificationVerdict {
            admissible: false,
            case_label: None,
            partition: None,
            requirements: Vec::new(),
            reason: Some(reason),
        }
    }
}

/// The partition attached to each admissible family.
pub fn case_partition(case: CaseLabel, rho: u32, n: u32) -> Partition {
    let parts = match case {
        CaseLabel::A => {
            let mut p = vec![2u32];
            p.extend(std::iter::repeat(1).take(n as usize - 2));
            p
        }
        CaseLabel::B => {
            let mut p = vec![rho + 1];
            p.extend(std::iter::repeat(rho).take(n as usize - 2));
            p.push(rho - 1);
            p
        }
        CaseLabel::C => vec![1, 1],
        CaseLabel::D => vec![(rho + 1) / 2, (rho + 1) / 2, (rho - 1) / 2, (rho - 1) / 2],
    };
    Partition::new(parts).expect("case partitions are weakly decreasing")
}

/// Decide whether (rho, n, s) with the given shifts produces a quantum
/// r-Airy structure, r = n rho, n >= 2. Admissible data falls in one of
/// four families:
///   (a) rho = 1, s = 1, any n;
///   (b) rho > 1, s = 1, any n, all Q_j nonzero;
///   (c) rho = 1, s = 2, n = 2;
///   (d) rho > 1 odd, s = 2, n = 2, all Q_j nonzero;
/// in every case the shift matrix must be invertible and the zero modes
/// must sum to zero (imposed structurally by the scalar ring).
pub fn classify(rho: u32, n: u32, s: u32, q: &[CycloScalar]) -> ClassificationVerdict {
    assert!(rho >= 1 && s >= 1);
    assert!(n >= 2, "classification covers n >= 2");
    assert_eq!(q.len(), n as usize);

    if rho > 1 && (s as i64).gcd(&(rho as i64)) != 1 {
        return ClassificationVerdict::rejected(RejectReason::NonCoprime);
    }
    let case = match (rho, s, n) {
        (1, 1, _) => CaseLabel::A,
        (_, 1, _) => CaseLabel::B,
        (1, 2, 2) => CaseLabel::C,
        (1, 2, _) => return ClassificationVerdict::rejected(RejectReason::NoLambdaGoodPartition),
        (_, 2, 2) => CaseLabel::D,
        (_, 2, _) => return ClassificationVerdict::rejected(RejectReason::NoLambdaGoodPartition),
        (1, _, _) => return ClassificationVerdict::rejected(RejectReason::STooLarge),
        (_, s, _) if s > rho => return ClassificationVerdict::rejected(RejectReason::STooLarge),
        _ => return ClassificationVerdict::rejected(RejectReason::NoLambdaGoodPartition),
    };
    if rho > 1 && q.iter().any(|x| x.is_zero()) {
        return ClassificationVerdict::rejected(RejectReason::ZeroShift);
    }
    let m = shift_matrix(rho, q);
    match m.matrix.invert() {
        Ok(Some(_)) => {}
        _ => return ClassificationVerdict::rejected(RejectReason::SingularShiftMatrix),
    }
    let mut requirements = vec![Requirement::SumK0Zero, Requirement::ShiftMatrixInvertible];
    if rho > 1 {
        requirements.push(Requirement::AllQNonzero);
    }
    ClassificationVerdict {
        admissible: true,
        case_label: Some(case),
        partition: Some(case_partition(case, rho, n)),
        requirements,
        reason: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdmissibleEntry {
    pub rho: u32,
    pub n: u32,
    pub s: u32,
    pub r: u32,
    pub case_label: CaseLabel,
}

/// All admissible (rho, n, s) with n rho <= r_max and n >= 2, assuming
/// root-of-unity shifts; ordered by (r, rho, s).
pub fn enumerate_admissible(r_max: u32) -> Vec<AdmissibleEntry> {
    assert!(r_max >= 4);
    let mut out = Vec::new();
    for rho in 1..=r_max {
        for n in 2..=r_max {
            if rho * n > r_max {
                continue;
            }
            for s in 1..=(r_max + 1) {
                let spec = TwistSpec::with_root_shifts(rho, n, s);
                let verdict = classify(rho, n, s, spec.shifts());
                if verdict.admissible {
                    out.push(AdmissibleEntry {
                        rho,
                        n,
                        s,
                        r: rho * n,
                        case_label: verdict.case_label.unwrap(),
                    });
                }
            }
        }
    }
    out.sort_by_key(|e| (e.r, e.rho, e.s));
    out
}

/// Why the middle shifts 3 <= s <= rho-1 admit no lambda-good partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForbiddenWitness {
    /// A_j = ceil(rho j / s) - ceil(rho (j-1) / s), j = 1..s; sums to rho.
    pub a: Vec<i64>,
    pub violation: PartitionObstruction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionObstruction {
    /// Some middle A_j differs from A_1 - 1.
    UnequalMiddle { j: u32, value: i64, expected: i64 },
    /// A_s + 1 differs from A_1 - 1.
    LastMismatch { value: i64, expected: i64 },
    /// The decreasing-parts chain forces a*s = rho against coprimality.
    CoprimalityContradiction { a: i64 },
}

fn ceil_div(a: i64, b: i64) -> i64 {
    debug_assert!(b > 0);
    a.div_euclid(b) + i64::from(a.rem_euclid(b) != 0)
}

/// Verify the obstruction for 3 <= s <= rho - 1, gcd(s, rho) = 1: the
/// would-be partition repeats A_1, A_2, ..., A_{s-1}, A_s + 1, A_1 - 1,
/// ..., whose weakly-decreasing requirement cannot be met.
pub fn forbidden_partition_witness(rho: u32, s: u32) -> ForbiddenWitness {
    assert!(s >= 3 && s <= rho - 1, "witness covers 3 <= s <= rho-1");
    assert_eq!((s as i64).gcd(&(rho as i64)), 1, "witness needs coprimality");
    let (rho, s) = (rho as i64, s as i64);
    let a_vals: Vec<i64> = (1..=s)
        .map(|j| ceil_div(rho * j, s) - ceil_div(rho * (j - 1), s))
        .collect();
    debug_assert_eq!(a_vals.iter().sum::<i64>(), rho);
    let a = a_vals[0] - 1;
    for j in 2..s {
        let v = a_vals[(j - 1) as usize];
        if v != a {
            return ForbiddenWitness {
                a: a_vals.clone(),
                violation: PartitionObstruction::UnequalMiddle {
                    j: j as u32,
                    value: v,
                    expected: a,
                },
            };
        }
    }
    let last = a_vals[(s - 1) as usize];
    if last + 1 != a {
        return ForbiddenWitness {
            a: a_vals.clone(),
            violation: PartitionObstruction::LastMismatch {
                value: last + 1,
                expected: a,
            },
        };
    }
    // All chain equalities hold, so a*s = sum A_j = rho, impossible for
    // s coprime with rho and s >= 3.
    debug_assert_eq!(a * s, rho);
    ForbiddenWitness {
        a: a_vals,
        violation: PartitionObstruction::CoprimalityContradiction { a },
    }
}

// ---------------------------------------------------------------------------
// Appending a one-cycle.

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppendRejection {
    /// Some dilaton shift vanishes.
    ZeroShift { cycle: u32 },
    /// No partition of r+1 extends lambda with lambda~(r+1) = sum s_j.
    /// `achievable` lists the lambda~(r+1) values of the partitions that do
    /// extend lambda.
    NoPartitionExtension { achievable: Vec<u32>, required: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AppendVerdict {
    Accepted { lambda_tilde: Partition },
    Rejected(AppendRejection),
}

/// Decide whether a one-cycle (no extra dilaton shift) can be appended to
/// a structure with the given partition and per-cycle shift data. The
/// conditions: all Q_j nonzero, and a partition lambda~ of r+1 with
/// lambda~(i) = lambda(i) for i <= r and lambda~(r+1) = sum_j s_j.
pub fn append_check(
    partition: &Partition,
    s_per_cycle: &[u32],
    q: &[CycloScalar],
) -> AppendVerdict {
    assert_eq!(s_per_cycle.len(), q.len());
    for (idx, qj) in q.iter().enumerate() {
        if qj.is_zero() {
            return AppendVerdict::Rejected(AppendRejection::ZeroShift {
                cycle: idx as u32 + 1,
            });
        }
    }
    let r = partition.sum();
    let required: u32 = s_per_cycle.iter().sum();
    let base_profile = partition.lambda_profile();
    let mut profile = base_profile.clone();
    profile.push(required);
    match find_partition_with_profile(r + 1, &profile) {
        ProfileSearch::Found(lambda_tilde) => AppendVerdict::Accepted { lambda_tilde },
        ProfileSearch::NotFound => {
            // Collect the achievable lambda~(r+1) values among genuine
            // extensions, as the arithmetic witness.
            let mut achievable: Vec<u32> = crate::partitions::partitions_of(r + 1)
                .into_iter()
                .filter(|p| p.lambda_profile()[..r as usize] == base_profile[..])
                .map(|p| p.lambda_of(r + 1).unwrap())
                .collect();
            achievable.sort_unstable();
            achievable.dedup();
            AppendVerdict::Rejected(AppendRejection::NoPartitionExtension {
                achievable,
                required,
            })
        }
    }
}

/// The appended structure: mode operators H~^i_m for i = 1..r+1 built from
/// the base modes and the fresh untwisted cycle, with their subalgebra
/// bounds.
#[derive(Debug, Clone)]
pub struct AppendedStructure {
    pub lambda_tilde: Partition,
    pub r_new: u32,
    /// Cycle label of the appended one-cycle.
    pub new_cycle: u32,
    /// bounds[i-1] = minimal admissible m for H~^i, i = 1..r+1.
    pub bounds: Vec<i64>,
    /// Materialized (i, m, operator) for bounds[i-1] <= m <= m_max.
    pub operators: Vec<(u32, i64, GradedOperator)>,
}

/// Construct the appended quantum (r+1)-Airy structure from an equal-cycle
/// base pipeline:
///   H~^1_m = K^{new}_m + H^1_m,
///   r^{i-1} H~^i_m = H^i_m + r sum_{m1+m2=m-1} K^{new}_{m1} H^{i-1}_{m2},
///   r^r H~^{r+1}_m = r sum_{m1+m2=m-1} K^{new}_{m1} H^r_{m2},
/// with bounds: base bounds for i <= r, and m >= r+1 - sum s_j for i=r+1.
///
/// The appended cycle's zero mode is pinned to zero (its constant would
/// otherwise survive in H~^1_0, which must vanish identically), so the
/// m1 = 0 term drops out of the sums.
pub fn append_one_cycle(
    spec: &TwistSpec,
    provider: &dyn PsiProvider,
    window: Window,
    m_max: i64,
) -> Result<Result<AppendedStructure, AppendRejection>, ClassifyError> {
    let verdict = classify(spec.rho, spec.n, spec.s, spec.shifts());
    let Some(partition) = verdict.partition.clone() else {
        return Err(ClassifyError::BaseNotAdmissible(verdict.reason.unwrap()));
    };
    let s_per_cycle = vec![spec.s; spec.n as usize];
    let lambda_tilde = match append_check(&partition, &s_per_cycle, spec.shifts()) {
        AppendVerdict::Accepted { lambda_tilde } => lambda_tilde,
        AppendVerdict::Rejected(rej) => return Ok(Err(rej)),
    };
    let r = spec.r();
    let new_cycle = spec.n + 1;
    let ctx = spec.ctx();
    let sum_s: i64 = (spec.s as i64) * (spec.n as i64);

    // Base modes are needed across the window range of m2.
    let mut base: std::collections::HashMap<(u32, i64), GradedOperator> =
        std::collections::HashMap::new();
    let base_mode = |i: u32,
                         m: i64,
                         base: &mut std::collections::HashMap<(u32, i64), GradedOperator>|
     -> Result<GradedOperator, ClassifyError> {
        if let Some(op) = base.get(&(i, m)) {
            return Ok(op.clone());
        }
        let op = shifted_composite_mode(spec, provider, i, m, window)?;
        base.insert((i, m), op.clone());
        Ok(op)
    };

    let mut bounds: Vec<i64> = Vec::with_capacity(r as usize + 1);
    for i in 1..=r {
        bounds.push(i as i64 - partition.lambda_of(i).unwrap() as i64);
    }
    bounds.push(r as i64 + 1 - sum_s);

    let r_rat = crate::scalar::Rat::from_integer((r as i64).into());
    let mut operators = Vec::new();
    for i in 1..=(r + 1) {
        let lower = bounds[(i - 1) as usize];
        for m in lower..=m_max {
            let mut op = if i == 1 {
                let mut acc = GradedOperator::mode(Mode::new(new_cycle, m), ctx.one(), window)
                    .map_or_else(|_| GradedOperator::zero(window), |x| x);
                acc.merge_from(&base_mode(1, m, &mut base)?, true)?;
                acc
            } else {
                // r^{1-i} (H^i_m + r sum K^{new}_{m1} H^{i-1}_{m2}),
                // where the H^i term is absent for i = r+1.
                let mut acc = if i <= r {
                    base_mode(i, m, &mut base)?
                } else {
                    GradedOperator::zero(window)
                };
                for m1 in -window.max_mode..=window.max_mode {
                    if m1 == 0 {
                        continue;
                    }
                    let m2 = m - 1 - m1;
                    let h = base_mode(i - 1, m2, &mut base)?;
                    if h.is_zero() {
                        continue;
                    }
                    let k_new = GradedOperator::mode(Mode::new(new_cycle, m1), ctx.one(), window)?;
                    let prod = product_truncating(&k_new, &h)?;
                    acc.merge_scaled(&prod, &ctx.one().scale(&r_rat), true)?;
                }
                let pref = crate::scalar::Rat::new(
                    1.into(),
                    num_bigint::BigInt::from(r).pow(i.min(r + 1) - 1),
                );
                acc.scale(&ctx.one().scale(&pref))?
            };
            // Degree content beyond r+1 cannot occur; assert cheaply.
            op = op.truncate_degree(window.max_degree);
            operators.push((i, m, op));
        }
    }
    Ok(Ok(AppendedStructure {
        lambda_tilde,
        r_new: r + 1,
        new_cycle,
        bounds,
        operators,
    }))
}
