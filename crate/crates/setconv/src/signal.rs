//! Set functions and the three shift operator families.
//!
//! A [`SetFunction`] stores one real value per subset of its ground set,
//! `values[b]` being the value on the subset encoded by bitmask `b`. Values
//! are `f64`; the training stack keeps its own 32-bit buffers.

use crate::error::{Error, Result};
use crate::ground::{GroundSet, SubsetIndex};

/// Shift semantics for set-function signals.
///
/// * `Absorb`:  `(T_Q s)_A = s_{A \ Q}`
/// * `Union`:   `(T_Q s)_A = s_{A ∪ Q}`
/// * `SymDiff`: `(T_Q s)_A = s_{A Δ Q}`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ShiftModel {
    Absorb,
    Union,
    SymDiff,
}

impl ShiftModel {
    pub const ALL: [ShiftModel; 3] = [ShiftModel::Absorb, ShiftModel::Union, ShiftModel::SymDiff];

    pub fn name(self) -> &'static str {
        match self {
            ShiftModel::Absorb => "absorb",
            ShiftModel::Union => "union",
            ShiftModel::SymDiff => "symdiff",
        }
    }

    /// Index of the shifted argument: the subset whose value lands at `a`.
    #[inline]
    pub fn apply(self, a: u32, q: u32) -> u32 {
        match self {
            ShiftModel::Absorb => a & !q,
            ShiftModel::Union => a | q,
            ShiftModel::SymDiff => a ^ q,
        }
    }
}

impl std::fmt::Display for ShiftModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ShiftModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "absorb" | "*" => Ok(ShiftModel::Absorb),
            "union" | "diamond" => Ok(ShiftModel::Union),
            "symdiff" | "symmetric-difference" => Ok(ShiftModel::SymDiff),
            other => Err(Error::Config(format!("unknown shift model `{other}`"))),
        }
    }
}

/// A real-valued signal on the powerset of a ground set.
#[derive(Debug, Clone, PartialEq)]
pub struct SetFunction {
    ground: GroundSet,
    values: Vec<f64>,
}

impl SetFunction {
    pub fn new(ground: GroundSet, values: Vec<f64>) -> Result<Self> {
        if values.len() != ground.subset_count() {
            return Err(Error::ValueCount { expected: ground.subset_count(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue { index: i });
        }
        Ok(Self { ground, values })
    }

    pub fn zeros(ground: GroundSet) -> Self {
        let len = ground.subset_count();
        Self { ground, values: vec![0.0; len] }
    }

    /// Builds a set function by evaluating `f` on every subset.
    pub fn from_fn(ground: GroundSet, mut f: impl FnMut(SubsetIndex) -> f64) -> Self {
        let values = ground.subsets().map(&mut f).collect();
        Self { ground, values }
    }

    /// The indicator of a single subset (`1` at `a`, `0` elsewhere).
    pub fn delta(ground: GroundSet, a: SubsetIndex) -> Result<Self> {
        ground.check_subset(a)?;
        let mut s = Self::zeros(ground);
        s.values[a.index()] = 1.0;
        Ok(s)
    }

    pub fn ground(&self) -> &GroundSet {
        &self.ground
    }

    pub fn n(&self) -> usize {
        self.ground.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Value on the subset `a` (checked).
    pub fn evaluate(&self, a: SubsetIndex) -> Result<f64> {
        self.ground.check_subset(a)?;
        Ok(self.values[a.index()])
    }

    /// Shifted signal `T_Q s` under the chosen model.
    pub fn shift(&self, q: SubsetIndex, model: ShiftModel) -> Result<SetFunction> {
        self.ground.check_subset(q)?;
        let values = (0..self.values.len() as u32)
            .map(|a| self.values[model.apply(a, q.bits()) as usize])
            .collect();
        Ok(SetFunction { ground: self.ground.clone(), values })
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Checks the absorbing-shift composition law `T_Q (T_R s) = T_{Q ∪ R} s`
/// by evaluating both sides element by element.
pub fn compose_shift_check(q: SubsetIndex, r: SubsetIndex, s: &SetFunction) -> Result<bool> {
    let lhs = s.shift(r, ShiftModel::Absorb)?.shift(q, ShiftModel::Absorb)?;
    let rhs = s.shift(q.union(r), ShiftModel::Absorb)?;
    Ok(lhs.values == rhs.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sf(n: usize, values: &[f64]) -> SetFunction {
        SetFunction::new(GroundSet::new(n).unwrap(), values.to_vec()).unwrap()
    }

    #[test]
    fn evaluate_reads_table() {
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.evaluate(SubsetIndex::EMPTY).unwrap(), 1.0);
        assert_eq!(s.evaluate(SubsetIndex::new_unchecked(3)).unwrap(), 4.0);
        assert!(s.evaluate(SubsetIndex::new_unchecked(4)).is_err());
    }

    #[test]
    fn rejects_bad_tables() {
        let g = GroundSet::new(2).unwrap();
        assert!(SetFunction::new(g.clone(), vec![0.0; 3]).is_err());
        assert!(SetFunction::new(g, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn shift_examples() {
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        let q = SubsetIndex::singleton(0);
        assert_eq!(s.shift(q, ShiftModel::Absorb).unwrap().values(), &[1.0, 1.0, 3.0, 3.0]);
        assert_eq!(s.shift(q, ShiftModel::SymDiff).unwrap().values(), &[2.0, 1.0, 4.0, 3.0]);
        // Empty shift is the identity for every model.
        for m in ShiftModel::ALL {
            assert_eq!(s.shift(SubsetIndex::EMPTY, m).unwrap().values(), s.values());
        }
    }

    #[test]
    fn compose_example() {
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        let q = SubsetIndex::singleton(0);
        let r = SubsetIndex::singleton(1);
        assert!(compose_shift_check(q, r, &s).unwrap());
        let both = s.shift(q.union(r), ShiftModel::Absorb).unwrap();
        assert_eq!(both.values(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn monoid_action_exhaustive_small() {
        // T_Q T_R = T_{Q∘R} where ∘ is union (absorb/union) or xor (symdiff).
        for n in 1..=4usize {
            let g = GroundSet::new(n).unwrap();
            let s = SetFunction::from_fn(g.clone(), |a| (a.bits() as f64).sin() + 1.0);
            for q in g.subsets() {
                for r in g.subsets() {
                    for m in ShiftModel::ALL {
                        let lhs = s.shift(r, m).unwrap().shift(q, m).unwrap();
                        let combined = match m {
                            ShiftModel::Absorb | ShiftModel::Union => q.union(r),
                            ShiftModel::SymDiff => q.sym_diff(r),
                        };
                        let rhs = s.shift(combined, m).unwrap();
                        assert_eq!(lhs.values(), rhs.values(), "n={n} m={m:?} q={q:?} r={r:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn symdiff_is_permutation_others_are_not() {
        // Rank of the shift matrix over the index space, by brute force.
        let n = 3usize;
        let len = 1usize << n;
        let g = GroundSet::new(n).unwrap();
        for m in ShiftModel::ALL {
            for q in g.subsets().skip(1) {
                let mut hit = vec![false; len];
                for a in 0..len as u32 {
                    hit[m.apply(a, q.bits()) as usize] = true;
                }
                let bijective = hit.iter().all(|&h| h);
                match m {
                    ShiftModel::SymDiff => assert!(bijective),
                    _ => assert!(!bijective, "m={m:?} q={q:?}"),
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn monoid_action_randomized(
            n in 5usize..=10,
            seed in any::<u64>(),
            qbits in any::<u32>(),
            rbits in any::<u32>(),
        ) {
            let g = GroundSet::new(n).unwrap();
            let mask = g.full_subset().bits();
            let q = SubsetIndex::new_unchecked(qbits & mask);
            let r = SubsetIndex::new_unchecked(rbits & mask);
            let mut rng = crate::rng::stream_rng(seed, 0);
            let s = SetFunction::from_fn(g, |_| rand::Rng::random_range(&mut rng, -1.0..1.0));
            for m in ShiftModel::ALL {
                let lhs = s.shift(r, m).unwrap().shift(q, m).unwrap();
                let combined = match m {
                    ShiftModel::Absorb | ShiftModel::Union => q.union(r),
                    ShiftModel::SymDiff => q.sym_diff(r),
                };
                let rhs = s.shift(combined, m).unwrap();
                prop_assert_eq!(lhs.values(), rhs.values());
            }
        }

        #[test]
        fn shift_is_linear(seed in any::<u64>(), qbits in any::<u32>()) {
            let n = 5usize;
            let g = GroundSet::new(n).unwrap();
            let q = SubsetIndex::new_unchecked(qbits & g.full_subset().bits());
            let mut rng = crate::rng::stream_rng(seed, 1);
            let mut draw = |_: SubsetIndex| rand::Rng::random_range(&mut rng, -1.0..1.0);
            let s = SetFunction::from_fn(g.clone(), &mut draw);
            let t = SetFunction::from_fn(g.clone(), &mut draw);
            let (alpha, beta) = (0.37, -1.25);
            let combo = SetFunction::from_fn(g, |a| {
                alpha * s.values()[a.index()] + beta * t.values()[a.index()]
            });
            for m in ShiftModel::ALL {
                let lhs = combo.shift(q, m).unwrap();
                let s_shift = s.shift(q, m).unwrap();
                let t_shift = t.shift(q, m).unwrap();
                for a in 0..lhs.len() {
                    let rhs = alpha * s_shift.values()[a] + beta * t_shift.values()[a];
                    prop_assert!((lhs.values()[a] - rhs).abs() < 1e-12);
                }
            }
        }
    }
}
