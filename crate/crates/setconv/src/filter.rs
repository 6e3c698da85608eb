//! Convolution of set functions, localized filters, matched patterns, and
//! pooling.
//!
//! [`convolve_direct`] is the O(4^n) reference implementation straight from
//! the shift definitions; it is the oracle against which the spectral path
//! and the network layers are tested. [`convolve_spectral`] computes the
//! same map in O(n·2^n) through the frequency domain.

use crate::error::{Error, Result};
use crate::ground::{GroundSet, SubsetIndex};
use crate::signal::{SetFunction, ShiftModel};
use crate::transform::{fourier_forward, fourier_inverse, frequency_response};

/// A set function used as a convolution filter, optionally `k`-localized
/// (zero on every subset of cardinality greater than `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    coeffs: SetFunction,
    locality: Option<usize>,
}

impl FilterSpec {
    pub fn new(coeffs: SetFunction, locality: Option<usize>) -> Result<Self> {
        if let Some(k) = locality {
            for a in coeffs.ground().subsets() {
                if a.cardinality() > k && coeffs.values()[a.index()] != 0.0 {
                    return Err(Error::LocalityViolation { k, got: a.cardinality() });
                }
            }
        }
        Ok(Self { coeffs, locality })
    }

    /// Dense filter with no declared locality.
    pub fn dense(coeffs: SetFunction) -> Self {
        Self { coeffs, locality: None }
    }

    /// One-hop filter: `h_∅ = c0`, `h_{x_i} = c[i-1]`, zero elsewhere.
    pub fn one_hop(ground: GroundSet, c0: f64, c: &[f64]) -> Result<Self> {
        if c.len() != ground.len() {
            return Err(Error::CoefficientCount { n: ground.len(), got: c.len() });
        }
        let mut h = SetFunction::zeros(ground);
        h.values_mut()[0] = c0;
        for (i, &ci) in c.iter().enumerate() {
            h.values_mut()[1 << i] = ci;
        }
        Ok(Self { coeffs: h, locality: Some(1) })
    }

    /// The identity filter `δ_∅`.
    pub fn identity(ground: GroundSet) -> Self {
        let coeffs = SetFunction::delta(ground, SubsetIndex::EMPTY).expect("empty set is valid");
        Self { coeffs, locality: Some(0) }
    }

    pub fn coeffs(&self) -> &SetFunction {
        &self.coeffs
    }

    pub fn locality(&self) -> Option<usize> {
        self.locality
    }

    pub fn ground(&self) -> &GroundSet {
        self.coeffs.ground()
    }

    /// Indices the convolution loop has to visit: the declared support if
    /// the filter is localized, every subset otherwise.
    fn support_indices(&self) -> Vec<u32> {
        match self.locality {
            Some(k) => (0..self.coeffs.len() as u32)
                .filter(|q| (q.count_ones() as usize) <= k)
                .collect(),
            None => (0..self.coeffs.len() as u32).collect(),
        }
    }
}

/// Direct-form convolution `(h * s)_A = Σ_Q h_Q s_{m(A,Q)}`.
pub fn convolve_direct(h: &FilterSpec, s: &SetFunction, model: ShiftModel) -> Result<SetFunction> {
    h.ground().check_same(s.ground())?;
    let support = h.support_indices();
    let hv = h.coeffs().values();
    let sv = s.values();
    let values: Vec<f64> = (0..s.len() as u32)
        .map(|a| support.iter().map(|&q| hv[q as usize] * sv[model.apply(a, q) as usize]).sum())
        .collect();
    SetFunction::new(s.ground().clone(), values)
}

/// Frequency-domain convolution: `h * s = F^{-1}(diag(F̄ h) · F s)`.
pub fn convolve_spectral(h: &FilterSpec, s: &SetFunction, model: ShiftModel) -> Result<SetFunction> {
    h.ground().check_same(s.ground())?;
    let resp = frequency_response(h.coeffs(), model);
    let mut hat = fourier_forward(s, model);
    for (v, r) in hat.values_mut().iter_mut().zip(resp.values()) {
        *v *= r;
    }
    Ok(fourier_inverse(&hat, model))
}

/// Restriction of an absorbing-model filter to the powerset of `a`:
/// `h'_{Q1} = Σ_{Q2 ⊆ N\A} h_{Q1 ∪ Q2}`, re-indexed onto a ground set with
/// `|a|` elements (ascending original order).
///
/// `a = ∅` yields a single coefficient (the full sum of `h`); since ground
/// sets have at least one element it is stored at ∅ of a one-element
/// ground set, with the other slot zero.
pub fn restrict_filter(h: &FilterSpec, a: SubsetIndex) -> Result<FilterSpec> {
    h.ground().check_subset(a)?;
    let hv = h.coeffs().values();
    if a.is_empty() {
        let mut values = vec![0.0; 2];
        values[0] = hv.iter().sum();
        let coeffs = SetFunction::new(GroundSet::new(1)?, values)?;
        return FilterSpec::new(coeffs, h.locality().map(|k| k.min(1)));
    }
    let k = a.cardinality();
    let sub_ground = match h.ground().labels() {
        Some(labels) => {
            let kept: Vec<String> = a.elements().map(|i| labels[i].clone()).collect();
            GroundSet::with_labels(k, kept)?
        }
        None => GroundSet::new(k)?,
    };
    // Element j of the restricted ground set is the j-th smallest element
    // of `a`; expand maps restricted masks back to original masks.
    let positions: Vec<usize> = a.elements().collect();
    let expand = |q1: u32| -> u32 {
        let mut m = 0u32;
        for (j, &pos) in positions.iter().enumerate() {
            if q1 & (1 << j) != 0 {
                m |= 1 << pos;
            }
        }
        m
    };
    let complement = h.ground().full_subset().minus(a);
    let mut values = vec![0.0; 1usize << k];
    for (q1_idx, v) in values.iter_mut().enumerate() {
        let base = expand(q1_idx as u32);
        let mut sum = 0.0;
        for q2 in complement.subsets() {
            sum += hv[(base | q2.bits()) as usize];
        }
        *v = sum;
    }
    let locality = h.locality().map(|k0| k0.min(k));
    let coeffs = SetFunction::new(sub_ground, values)?;
    FilterSpec::new(coeffs, locality)
}

/// The unit-norm signal to which an absorbing-model filter responds
/// strongest at position `a`: `p_B = h'_{A\B} / ‖h'‖` for `B ⊆ A`, zero
/// elsewhere. Defined for the absorbing model only.
pub fn matched_pattern(h: &FilterSpec, a: SubsetIndex) -> Result<SetFunction> {
    matched_pattern_for(h, a, ShiftModel::Absorb)
}

/// Model-checked variant of [`matched_pattern`].
pub fn matched_pattern_for(h: &FilterSpec, a: SubsetIndex, model: ShiftModel) -> Result<SetFunction> {
    if model != ShiftModel::Absorb {
        return Err(Error::UnsupportedModel { op: "matched_pattern", model: model.name() });
    }
    h.ground().check_subset(a)?;
    // Restricted filter on the original index space: h'_{Q1} for Q1 ⊆ A.
    let complement = h.ground().full_subset().minus(a);
    let hv = h.coeffs().values();
    let mut pattern = SetFunction::zeros(h.ground().clone());
    let mut norm_sq = 0.0;
    for q1 in a.subsets() {
        let mut sum = 0.0;
        for q2 in complement.subsets() {
            sum += hv[(q1.bits() | q2.bits()) as usize];
        }
        norm_sq += sum * sum;
        // p_B with B = A \ Q1 picks up h'_{Q1}.
        pattern.values_mut()[a.minus(q1).index()] = sum;
    }
    if norm_sq <= 0.0 {
        return Err(Error::DegenerateFilter);
    }
    let norm = norm_sq.sqrt();
    for v in pattern.values_mut() {
        *v /= norm;
    }
    Ok(pattern)
}

/// Merge set or single element describing a pooling operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolSpec {
    /// Combine the elements of the merge set into one; keeps subsets whose
    /// intersection with the merge set is empty or the whole set.
    Combine(SubsetIndex),
    /// `s_B = max(s_B, s_{B ∪ {x}})` on the ground set without `x`.
    MaxElement(usize),
}

impl PoolSpec {
    pub fn apply(self, s: &SetFunction) -> Result<SetFunction> {
        match self {
            PoolSpec::Combine(x) => pool_combine(s, x),
            PoolSpec::MaxElement(x) => pool_max_element(s, x),
        }
    }
}

/// Index map of the combine pooling: entry `b'` is the original index whose
/// value the pooled signal keeps. The merged element sits at the bit
/// position of the smallest-index element of `x`; the remaining elements
/// keep their relative order.
pub(crate) fn combine_index_map(n: usize, x: u32) -> Vec<u32> {
    let lowest = x.trailing_zeros() as usize;
    // New element j -> original bitmask.
    let mut masks = Vec::with_capacity(n - x.count_ones() as usize + 1);
    for i in 0..n {
        if i == lowest {
            masks.push(x);
        } else if x & (1 << i) == 0 {
            masks.push(1 << i);
        }
    }
    let out_len = 1usize << masks.len();
    (0..out_len as u32)
        .map(|bp| {
            let mut b = 0u32;
            for (j, &m) in masks.iter().enumerate() {
                if bp & (1 << j) != 0 {
                    b |= m;
                }
            }
            b
        })
        .collect()
}

/// Pooling by combining the elements of `x` (|x| >= 2) into a single
/// element; a pure selection of the retained values.
pub fn pool_combine(s: &SetFunction, x: SubsetIndex) -> Result<SetFunction> {
    s.ground().check_subset(x)?;
    if x.cardinality() < 2 {
        return Err(Error::MergeSetTooSmall);
    }
    let map = combine_index_map(s.n(), x.bits());
    let new_n = s.n() - x.cardinality() + 1;
    let ground = GroundSet::new(new_n)?;
    let values = map.iter().map(|&b| s.values()[b as usize]).collect();
    SetFunction::new(ground, values)
}

/// Pooling by dropping element `x` (0-based index) and keeping the maximum
/// over its absence/presence.
pub fn pool_max_element(s: &SetFunction, x: usize) -> Result<SetFunction> {
    if x >= s.n() {
        return Err(Error::UnknownElement { x, n: s.n() });
    }
    if s.n() == 1 {
        return Err(Error::GroundSetSize { n: 0 });
    }
    let bit = 1u32 << x;
    let ground = GroundSet::new(s.n() - 1)?;
    let low_mask = bit - 1;
    let values = (0..(s.len() / 2) as u32)
        .map(|bp| {
            let b = (bp & low_mask) | ((bp & !low_mask) << 1);
            s.values()[b as usize].max(s.values()[(b | bit) as usize])
        })
        .collect();
    SetFunction::new(ground, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use rand::Rng;

    fn sf(n: usize, values: &[f64]) -> SetFunction {
        SetFunction::new(GroundSet::new(n).unwrap(), values.to_vec()).unwrap()
    }

    fn random_sf(n: usize, seed: u64) -> SetFunction {
        let mut rng = stream_rng(seed, 3);
        SetFunction::from_fn(GroundSet::new(n).unwrap(), |_| rng.random_range(-1.0..1.0))
    }

    fn max_rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max)
    }

    #[test]
    fn one_hop_layout() {
        let g = GroundSet::new(2).unwrap();
        let h = FilterSpec::one_hop(g, 1.0, &[1.0, 0.0]).unwrap();
        assert_eq!(h.coeffs().values(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(h.locality(), Some(1));

        let g10 = GroundSet::new(10).unwrap();
        let h10 = FilterSpec::one_hop(g10, 1.0, &[1.0; 10]).unwrap();
        assert_eq!(h10.coeffs().values().iter().filter(|&&v| v != 0.0).count(), 11);

        assert!(FilterSpec::one_hop(GroundSet::new(3).unwrap(), 1.0, &[0.0; 2]).is_err());
    }

    #[test]
    fn locality_invariant_enforced() {
        let bad = sf(2, &[0.0, 0.0, 0.0, 1.0]);
        assert!(FilterSpec::new(bad, Some(1)).is_err());
    }

    #[test]
    fn identity_filter_is_identity() {
        let s = random_sf(4, 11);
        let h = FilterSpec::identity(s.ground().clone());
        for m in ShiftModel::ALL {
            assert_eq!(convolve_direct(&h, &s, m).unwrap().values(), s.values());
            assert!(
                max_rel_err(convolve_spectral(&h, &s, m).unwrap().values(), s.values()) < 1e-12
            );
        }
    }

    #[test]
    fn direct_example() {
        let h = FilterSpec::dense(sf(2, &[1.0, 1.0, 0.0, 0.0]));
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        let out = convolve_direct(&h, &s, ShiftModel::Absorb).unwrap();
        assert_eq!(out.values(), &[2.0, 3.0, 6.0, 7.0]);
        let spec = convolve_spectral(&h, &s, ShiftModel::Absorb).unwrap();
        assert!(max_rel_err(spec.values(), &[2.0, 3.0, 6.0, 7.0]) < 1e-12);
    }

    #[test]
    fn delta_filter_is_shift() {
        let s = random_sf(5, 21);
        for m in ShiftModel::ALL {
            for qbits in [0u32, 3, 17, 31] {
                let q = SubsetIndex::new_unchecked(qbits);
                let h = FilterSpec::dense(
                    SetFunction::delta(s.ground().clone(), q).unwrap(),
                );
                let out = convolve_direct(&h, &s, m).unwrap();
                let shifted = s.shift(q, m).unwrap();
                assert_eq!(out.values(), shifted.values(), "m={m:?} q={qbits}");
            }
        }
    }

    #[test]
    fn spectral_matches_direct_random() {
        for m in ShiftModel::ALL {
            for seed in 0..20u64 {
                let h = FilterSpec::dense(random_sf(6, 500 + seed));
                let s = random_sf(6, 700 + seed);
                let d = convolve_direct(&h, &s, m).unwrap();
                let f = convolve_spectral(&h, &s, m).unwrap();
                assert!(max_rel_err(f.values(), d.values()) < 1e-10, "m={m:?} seed={seed}");
            }
        }
    }

    #[test]
    fn convolution_commutes_with_shifts() {
        let mut rng = stream_rng(4242, 0);
        for m in ShiftModel::ALL {
            for _ in 0..10 {
                let h = FilterSpec::dense(random_sf(5, rng.random()));
                let s = random_sf(5, rng.random());
                let q = SubsetIndex::new_unchecked(rng.random_range(0..32));
                let lhs = convolve_direct(&h, &s.shift(q, m).unwrap(), m).unwrap();
                let rhs = convolve_direct(&h, &s, m).unwrap().shift(q, m).unwrap();
                assert!(max_rel_err(lhs.values(), rhs.values()) < 1e-10);
            }
        }
    }

    #[test]
    fn localized_filter_prunes_consistently() {
        // A localized filter must convolve identically to its dense twin.
        let g = GroundSet::new(6).unwrap();
        let mut rng = stream_rng(5, 5);
        let mut coeffs = SetFunction::zeros(g.clone());
        for a in g.subsets() {
            if a.cardinality() <= 2 {
                coeffs.values_mut()[a.index()] = rng.random_range(-1.0..1.0);
            }
        }
        let local = FilterSpec::new(coeffs.clone(), Some(2)).unwrap();
        let dense = FilterSpec::dense(coeffs);
        let s = random_sf(6, 55);
        for m in ShiftModel::ALL {
            let a = convolve_direct(&local, &s, m).unwrap();
            let b = convolve_direct(&dense, &s, m).unwrap();
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn locality_limits_dependence() {
        // Changing s on sets differing from A by more than k elements does
        // not change (h*s)_A under the absorbing model.
        let g = GroundSet::new(6).unwrap();
        let mut rng = stream_rng(6, 6);
        let h = FilterSpec::one_hop(
            g.clone(),
            rng.random_range(-1.0..1.0),
            &(0..6).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let s = random_sf(6, 66);
        let a = SubsetIndex::new_unchecked(0b010110);
        let base = convolve_direct(&h, &s, ShiftModel::Absorb).unwrap().values()[a.index()];
        let mut tweaked = s.clone();
        for b in g.subsets() {
            let diff = (b.bits() ^ a.bits()).count_ones();
            if diff > 1 {
                tweaked.values_mut()[b.index()] += 100.0;
            }
        }
        let after = convolve_direct(&h, &tweaked, ShiftModel::Absorb).unwrap().values()[a.index()];
        assert!((base - after).abs() < 1e-12);
    }

    #[test]
    fn restrict_examples() {
        // One-hop h with h_∅=1, h_{x1}=2, h_{x2}=3 restricted to {x1}.
        let g = GroundSet::new(2).unwrap();
        let h = FilterSpec::one_hop(g.clone(), 1.0, &[2.0, 3.0]).unwrap();
        let r = restrict_filter(&h, SubsetIndex::singleton(0)).unwrap();
        assert_eq!(r.ground().len(), 1);
        assert_eq!(r.coeffs().values(), &[4.0, 2.0]);

        // A = N leaves the filter unchanged.
        let full = restrict_filter(&h, g.full_subset()).unwrap();
        assert_eq!(full.coeffs().values(), h.coeffs().values());

        // A = ∅ collapses to the full coefficient sum.
        let empty = restrict_filter(&h, SubsetIndex::EMPTY).unwrap();
        assert_eq!(empty.coeffs().values()[0], 6.0);
    }

    #[test]
    fn matched_pattern_example() {
        let g = GroundSet::new(2).unwrap();
        let h = FilterSpec::one_hop(g, 1.0, &[2.0, 3.0]).unwrap();
        let p = matched_pattern(&h, SubsetIndex::singleton(0)).unwrap();
        let norm = 20.0f64.sqrt();
        let expect = [2.0 / norm, 4.0 / norm, 0.0, 0.0];
        assert!(max_rel_err(p.values(), &expect) < 1e-12);
        assert!((p.l2_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matched_pattern_full_set_delta() {
        // h = δ_∅ at A = N responds to the indicator of N.
        let g = GroundSet::new(3).unwrap();
        let h = FilterSpec::identity(g.clone());
        let p = matched_pattern(&h, g.full_subset()).unwrap();
        let mut expect = vec![0.0; 8];
        expect[7] = 1.0;
        assert_eq!(p.values(), &expect[..]);
    }

    #[test]
    fn matched_pattern_rejects_other_models() {
        let g = GroundSet::new(2).unwrap();
        let h = FilterSpec::identity(g);
        assert!(matches!(
            matched_pattern_for(&h, SubsetIndex::EMPTY, ShiftModel::Union),
            Err(Error::UnsupportedModel { .. })
        ));
    }

    #[test]
    fn matched_pattern_degenerate_filter() {
        let g = GroundSet::new(2).unwrap();
        let h = FilterSpec::dense(SetFunction::zeros(g));
        assert!(matches!(
            matched_pattern(&h, SubsetIndex::singleton(0)),
            Err(Error::DegenerateFilter)
        ));
    }

    #[test]
    fn matched_pattern_is_unit_norm() {
        let mut rng = stream_rng(77, 0);
        let g = GroundSet::new(4).unwrap();
        let h = FilterSpec::one_hop(
            g.clone(),
            rng.random_range(-1.0..1.0),
            &(0..4).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        for a in g.subsets() {
            let p = matched_pattern(&h, a).unwrap();
            assert!((p.l2_norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pool_combine_examples() {
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        let pooled = pool_combine(&s, SubsetIndex::new_unchecked(0b11)).unwrap();
        assert_eq!(pooled.values(), &[1.0, 4.0]);
        assert_eq!(pooled.n(), 1);

        assert!(pool_combine(&s, SubsetIndex::singleton(0)).is_err());

        let s10 = random_sf(10, 10);
        let once = pool_combine(&s10, SubsetIndex::new_unchecked(0b11)).unwrap();
        assert_eq!(once.len(), 512);
        let twice = pool_combine(&once, SubsetIndex::new_unchecked(0b11)).unwrap();
        assert_eq!(twice.len(), 256);
    }

    #[test]
    fn pool_combine_is_a_selection() {
        let s = random_sf(5, 15);
        let x = SubsetIndex::new_unchecked(0b01100);
        let pooled = pool_combine(&s, x).unwrap();
        // Every retained value appears verbatim at the mapped index.
        let map = combine_index_map(5, x.bits());
        for (bp, &orig) in map.iter().enumerate() {
            assert_eq!(pooled.values()[bp], s.values()[orig as usize]);
            let inter = orig & x.bits();
            assert!(inter == 0 || inter == x.bits());
        }
    }

    #[test]
    fn pool_max_examples() {
        let s = sf(2, &[1.0, 2.0, 3.0, 4.0]);
        let pooled = pool_max_element(&s, 1).unwrap();
        assert_eq!(pooled.values(), &[3.0, 4.0]);

        let c = sf(3, &[7.0; 8]);
        let pc = pool_max_element(&c, 0).unwrap();
        assert_eq!(pc.values(), &[7.0; 4]);

        assert!(pool_max_element(&s, 5).is_err());
    }
}
