//! Integer partitions, the lambda(i) staircase function, lambda-good index
//! sets, and exhaustive partition search against a lambda profile.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("index {0} out of range 1..={1}")]
    IndexOutOfRange(u32, u32),
    #[error("parts must be positive and weakly decreasing")]
    InvalidParts,
    #[error("invalid partition serialization: {0}")]
    Parse(String),
}

/// A partition of r: positive parts in weakly decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Partition {
    parts: Vec<u32>,
}

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self, PartitionError> {
        if parts.iter().any(|&p| p == 0) || parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(PartitionError::InvalidParts);
        }
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[u32] {
        &self.parts
    }

    pub fn sum(&self) -> u32 {
        self.parts.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// lambda(i) = min { s : lambda_1 + ... + lambda_s >= i }.
    pub fn lambda_of(&self, i: u32) -> Result<u32, PartitionError> {
        let r = self.sum();
        if i == 0 || i > r {
            return Err(PartitionError::IndexOutOfRange(i, r));
        }
        let mut acc = 0u32;
        for (s, &p) in self.parts.iter().enumerate() {
            acc += p;
            if acc >= i {
                return Ok(s as u32 + 1);
            }
        }
        unreachable!("prefix sums reach r");
    }

    /// Full lambda profile as a vector indexed by i-1.
    pub fn lambda_profile(&self) -> Vec<u32> {
        (1..=self.sum()).map(|i| self.lambda_of(i).unwrap()).collect()
    }

    /// The induced lambda-good index set.
    pub fn lambda_good_set(&self) -> LambdaIndexSet {
        let bounds = (1..=self.sum())
            .map(|i| i as i64 - self.lambda_of(i).unwrap() as i64)
            .collect();
        LambdaIndexSet {
            r: self.sum(),
            bounds,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.parts
                .iter()
                .map(|&p| serde_json::Value::from(p))
                .collect(),
        )
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self, PartitionError> {
        let arr = v
            .as_array()
            .ok_or_else(|| PartitionError::Parse("expected array".into()))?;
        let parts = arr
            .iter()
            .map(|x| {
                x.as_u64()
                    .filter(|&p| p >= 1 && p <= 1_000_000)
                    .map(|p| p as u32)
                    .ok_or_else(|| PartitionError::Parse("bad part".into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Partition::new(parts).map_err(|_| PartitionError::Parse("not weakly decreasing".into()))
    }

    pub fn from_json_str(s: &str) -> Result<Self, PartitionError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| PartitionError::Parse(e.to_string()))?;
        Partition::from_json(&v)
    }
}

/// The mode-index set Lambda_r = {(i, m) : 1 <= i <= r, m >= i - lambda(i)}
/// presented by its per-i lower bounds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LambdaIndexSet {
    pub r: u32,
    /// bounds[i-1] = minimal admissible m for row i.
    pub bounds: Vec<i64>,
}

impl LambdaIndexSet {
    pub fn bound(&self, i: u32) -> Option<i64> {
        if i == 0 || i > self.r {
            None
        } else {
            Some(self.bounds[(i - 1) as usize])
        }
    }

    pub fn contains(&self, i: u32, m: i64) -> bool {
        self.bound(i).is_some_and(|b| m >= b)
    }
}

/// All partitions of r in descending lexicographic order, (r) first.
pub fn partitions_of(r: u32) -> Vec<Partition> {
    let mut out = Vec::new();
    let mut current: Vec<u32> = Vec::new();
    fn rec(remaining: u32, max_part: u32, current: &mut Vec<u32>, out: &mut Vec<Partition>) {
        if remaining == 0 {
            out.push(Partition {
                parts: current.clone(),
            });
            return;
        }
        let hi = remaining.min(max_part);
        for p in (1..=hi).rev() {
            current.push(p);
            rec(remaining - p, p, current, out);
            current.pop();
        }
    }
    rec(r, r, &mut current, &mut out);
    out
}

/// Outcome of the profile search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProfileSearch {
    Found(Partition),
    NotFound,
}

impl ProfileSearch {
    pub fn found(self) -> Option<Partition> {
        match self {
            ProfileSearch::Found(p) => Some(p),
            ProfileSearch::NotFound => None,
        }
    }
}

/// Exhaustive search for a partition of r whose lambda profile equals the
/// given one (profile[i-1] = required lambda(i)). When several match, the
/// lexicographically largest is returned; the search scans the full
/// partition list of r, so a negative answer is a certificate.
pub fn find_partition_with_profile(r: u32, profile: &[u32]) -> ProfileSearch {
    if profile.len() != r as usize {
        return ProfileSearch::NotFound;
    }
    for p in partitions_of(r) {
        if p.lambda_profile() == profile {
            return ProfileSearch::Found(p);
        }
    }
    ProfileSearch::NotFound
}
