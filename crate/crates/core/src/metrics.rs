// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Fidelity metrics over measured output distributions.
//!
//! d-R² compares the noisy count vector `y` with the noise-free vector `Y`
//! over all `2^n` outcomes of the `n` measured bits:
//!
//! ```text
//! SSR = Σ (Y_i − y_i)²      SST = Σ (Y_i − mean(Y))²
//! d-R² = 1 − SSR/SST  if SSR < SST, else 0
//! ```
//!
//! A noisy output that is no closer to `Y` than the flat line `mean(Y)` (a
//! uniform superposition) scores 0. Sums are evaluated in integer
//! arithmetic so the only rounding happens in the final division.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::sim::{bitstring, Counts, Distribution};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("bit widths differ: ideal {ideal}, noisy {noisy}")]
    WidthMismatch { ideal: usize, noisy: usize },
    #[error("shot totals differ: ideal {ideal}, noisy {noisy}")]
    ShotMismatch { ideal: u64, noisy: u64 },
    #[error("ideal output is uniform by design (SST = 0); d-R² is undefined")]
    UniformByDesign,
    #[error("the set of correct bitstrings is empty")]
    EmptyCorrectSet,
}

/// Ideal and noisy counts laid out over all `2^n` bitstrings in canonical
/// (ascending binary) order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlignedPair {
    ideal: Vec<u64>,
    noisy: Vec<u64>,
    n_bits: usize,
}

impl AlignedPair {
    /// Builds a pair from dense vectors of equal length `2^n` and equal sum.
    pub fn from_vectors(ideal: Vec<u64>, noisy: Vec<u64>) -> Result<AlignedPair, MetricError> {
        let len = ideal.len();
        assert!(len.is_power_of_two(), "vector length must be a power of two");
        let n_bits = len.trailing_zeros() as usize;
        if noisy.len() != len {
            return Err(MetricError::WidthMismatch {
                ideal: n_bits,
                noisy: noisy.len().trailing_zeros() as usize,
            });
        }
        let (si, sn) = (ideal.iter().sum::<u64>(), noisy.iter().sum::<u64>());
        if si != sn {
            return Err(MetricError::ShotMismatch {
                ideal: si,
                noisy: sn,
            });
        }
        Ok(AlignedPair {
            ideal,
            noisy,
            n_bits,
        })
    }

    pub fn ideal(&self) -> &[u64] {
        &self.ideal
    }

    pub fn noisy(&self) -> &[u64] {
        &self.noisy
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    /// `(SSR, N·SST)` with `N = 2^n`, both exact.
    fn sums(&self) -> (i128, i128) {
        let ssr: i128 = self
            .ideal
            .iter()
            .zip(&self.noisy)
            .map(|(&a, &b)| {
                let d = a as i128 - b as i128;
                d * d
            })
            .sum();
        let n = self.ideal.len() as i128;
        let sum: i128 = self.ideal.iter().map(|&v| v as i128).sum();
        let sq: i128 = self.ideal.iter().map(|&v| (v as i128) * (v as i128)).sum();
        (ssr, n * sq - sum * sum)
    }

    pub fn ssr(&self) -> f64 {
        self.sums().0 as f64
    }

    pub fn sst(&self) -> f64 {
        self.sums().1 as f64 / self.ideal.len() as f64
    }
}

/// Expands both count sets to the full canonical bitstring order.
pub fn align(ideal: &Counts, noisy: &Counts) -> Result<AlignedPair, MetricError> {
    if ideal.n_bits() != noisy.n_bits() {
        return Err(MetricError::WidthMismatch {
            ideal: ideal.n_bits(),
            noisy: noisy.n_bits(),
        });
    }
    if ideal.shots() != noisy.shots() {
        return Err(MetricError::ShotMismatch {
            ideal: ideal.shots(),
            noisy: noisy.shots(),
        });
    }
    Ok(AlignedPair {
        ideal: ideal.to_dense(),
        noisy: noisy.to_dense(),
        n_bits: ideal.n_bits(),
    })
}

/// `1 − SSR/SST` without the lower clamp; negative when the noisy output
/// fits worse than a uniform distribution.
pub fn d_r2_unbounded(p: &AlignedPair) -> Result<f64, MetricError> {
    let (ssr, n_sst) = p.sums();
    if n_sst == 0 {
        return Err(MetricError::UniformByDesign);
    }
    let n = p.ideal.len() as i128;
    Ok(1.0 - (n * ssr) as f64 / n_sst as f64)
}

/// d-R² in `[0, 1]`.
pub fn d_r2(p: &AlignedPair) -> Result<f64, MetricError> {
    let (ssr, n_sst) = p.sums();
    if n_sst == 0 {
        return Err(MetricError::UniformByDesign);
    }
    let n = p.ideal.len() as i128;
    if n * ssr < n_sst {
        d_r2_unbounded(p)
    } else {
        Ok(0.0)
    }
}

/// Probability of successful trials: the fraction of shots that landed on
/// one of the `correct` bitstrings.
pub fn pst<S: AsRef<str>>(correct: &[S], noisy: &Counts) -> Result<f64, MetricError> {
    if correct.is_empty() {
        return Err(MetricError::EmptyCorrectSet);
    }
    let mut seen = std::collections::BTreeSet::new();
    let hits: u64 = correct
        .iter()
        .map(|s| s.as_ref())
        .filter(|s| seen.insert(*s))
        .map(|s| noisy.get(s))
        .sum();
    Ok(hits as f64 / noisy.shots() as f64)
}

/// Expected ideal counts `round(p_i · shots)`, corrected with the
/// largest-remainder rule so they sum to exactly `shots`. Remainder ties go
/// to the lower bitstring.
pub fn expected_ideal_counts(dist: &Distribution, shots: u64) -> Counts {
    let raw: Vec<f64> = dist.probs().iter().map(|&p| p.max(0.0) * shots as f64).collect();
    let mut counts: Vec<u64> = raw.iter().map(|&x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut missing = shots.saturating_sub(assigned) as usize;
    if missing > 0 {
        let mut order: Vec<usize> = (0..raw.len()).collect();
        order.sort_by(|&a, &b| {
            let ra = raw[a] - raw[a].floor();
            let rb = raw[b] - raw[b].floor();
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &i in order.iter().cycle() {
            if missing == 0 {
                break;
            }
            counts[i] += 1;
            missing -= 1;
        }
    }
    Counts::from_dense(dist.n_bits(), &counts)
}

/// Counts with every shot on the all-zeros bitstring.
pub fn all_zero_counts(n_bits: usize, shots: u64) -> Counts {
    let mut m = BTreeMap::new();
    m.insert(bitstring(0, n_bits), shots);
    Counts::new(n_bits, m).expect("well-formed key")
}

/// Interpretation bands for d-R² values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Band {
    Perfect,
    Good,
    Fair,
    Significant,
    Extreme,
    Uniform,
}

impl Band {
    pub fn classify(v: f64) -> Band {
        if v >= 1.0 {
            Band::Perfect
        } else if v > 0.7 {
            Band::Good
        } else if v > 0.5 {
            Band::Fair
        } else if v > 0.3 {
            Band::Significant
        } else if v > 0.0 {
            Band::Extreme
        } else {
            Band::Uniform
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Band::Perfect => "perfect: same as a noise-free run",
            Band::Good => "good: high fidelity",
            Band::Fair => "fair: noticeable noise",
            Band::Significant => "significant noise: interpret with caution",
            Band::Extreme => "extremely noisy: do not use",
            Band::Uniform => "no better than a uniform superposition",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(pairs: &[(&str, u64)]) -> Counts {
        let n = pairs[0].0.len();
        Counts::new(n, pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()).unwrap()
    }

    #[test]
    fn aligns_to_canonical_order() {
        let y = counts(&[("00", 137), ("01", 17), ("10", 789), ("11", 81)]);
        let p = align(&counts(&[("10", 1024)]), &y).unwrap();
        assert_eq!(p.ideal(), &[0, 0, 1024, 0]);
        assert_eq!(p.noisy(), &[137, 17, 789, 81]);
        let z = align(&counts(&[("0", 4)]), &counts(&[("0", 4)])).unwrap();
        assert_eq!(z.ideal(), &[4, 0]);
        assert_eq!(z.ideal(), z.noisy());
    }

    #[test]
    fn align_errors() {
        assert!(matches!(
            align(&counts(&[("0", 4)]), &counts(&[("00", 4)])),
            Err(MetricError::WidthMismatch { .. })
        ));
        assert!(matches!(
            align(&counts(&[("0", 4)]), &counts(&[("0", 5)])),
            Err(MetricError::ShotMismatch { .. })
        ));
    }

    #[test]
    fn worked_example() {
        // SSR = 137² + 17² + 235² + 81² = 80 844, SST = 3·256² + 768² = 786 432.
        let p = AlignedPair::from_vectors(vec![0, 0, 1024, 0], vec![137, 17, 789, 81]).unwrap();
        assert_eq!(p.ssr(), 80_844.0);
        assert_eq!(p.sst(), 786_432.0);
        let expected = 1.0 - 80_844.0 / 786_432.0;
        assert!((d_r2(&p).unwrap() - 0.897202).abs() < 1e-6);
        assert_eq!(d_r2(&p).unwrap(), expected);
        assert_eq!(d_r2_unbounded(&p).unwrap(), expected);
    }

    #[test]
    fn boundary_values() {
        let perfect = AlignedPair::from_vectors(vec![0, 0, 1024, 0], vec![0, 0, 1024, 0]).unwrap();
        assert_eq!(d_r2(&perfect).unwrap(), 1.0);
        let flat = AlignedPair::from_vectors(vec![0, 0, 1024, 0], vec![256; 4]).unwrap();
        assert_eq!(d_r2(&flat).unwrap(), 0.0);
        assert_eq!(d_r2_unbounded(&flat).unwrap(), 0.0);
        let wrong = AlignedPair::from_vectors(vec![0, 0, 1024, 0], vec![1024, 0, 0, 0]).unwrap();
        let u = d_r2_unbounded(&wrong).unwrap();
        assert!((u - (1.0 - 2.0 * 1024.0 * 1024.0 / 786_432.0)).abs() < 1e-12);
        assert!((u + 1.666_666_666_7).abs() < 1e-9);
        assert_eq!(d_r2(&wrong).unwrap(), 0.0);
        let uniform = AlignedPair::from_vectors(vec![5, 5], vec![3, 7]).unwrap();
        assert_eq!(d_r2(&uniform), Err(MetricError::UniformByDesign));
    }

    #[test]
    fn pst_examples() {
        let y = counts(&[("00", 137), ("01", 17), ("10", 789), ("11", 81)]);
        assert!((pst(&["10"], &y).unwrap() - 0.770508).abs() < 1e-6);
        assert_eq!(pst(&["10", "10"], &y).unwrap(), 789.0 / 1024.0);
        assert_eq!(pst(&["00", "01", "10", "11"], &y).unwrap(), 1.0);
        let all = counts(&[("10", 1024)]);
        assert_eq!(pst(&["01"], &all).unwrap(), 0.0);
        assert_eq!(pst::<&str>(&[], &all), Err(MetricError::EmptyCorrectSet));
    }

    #[test]
    fn expected_counts() {
        let d = Distribution::new(2, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(expected_ideal_counts(&d, 1024).to_dense(), vec![0, 0, 1024, 0]);
        let d = Distribution::new(2, vec![0.5, 0.0, 0.0, 0.5]);
        assert_eq!(expected_ideal_counts(&d, 1000).to_dense(), vec![500, 0, 0, 500]);
        let d = Distribution::new(2, vec![1.0 / 3.0; 3].into_iter().chain([0.0]).collect());
        let c = expected_ideal_counts(&d, 1024);
        assert_eq!(c.to_dense(), vec![342, 341, 341, 0]);
        assert_eq!(all_zero_counts(3, 10).get("000"), 10);
    }

    #[test]
    fn bands() {
        assert_eq!(Band::classify(1.0), Band::Perfect);
        assert_eq!(Band::classify(0.9999), Band::Good);
        assert_eq!(Band::classify(0.7), Band::Fair);
        assert_eq!(Band::classify(0.5), Band::Significant);
        assert_eq!(Band::classify(0.3), Band::Extreme);
        assert_eq!(Band::classify(1e-9), Band::Extreme);
        assert_eq!(Band::classify(0.0), Band::Uniform);
        assert_eq!(Band::classify(-0.4), Band::Uniform);
    }

    fn arb_pair() -> impl Strategy<Value = (Vec<u64>, Vec<u64>)> {
        (1usize..4).prop_flat_map(|n| {
            let len = 1usize << n;
            (
                prop::collection::vec(0u64..50, len),
                prop::collection::vec(0u64..50, len),
            )
        })
        .prop_filter_map("equal totals", |(a, mut b)| {
            let (sa, sb) = (a.iter().sum::<u64>(), b.iter().sum::<u64>());
            if sb > sa || sa == 0 {
                return None;
            }
            b[0] += sa - sb;
            Some((a, b))
        })
    }

    proptest! {
        #[test]
        fn clamped_range_and_identity((a, b) in arb_pair()) {
            let p = AlignedPair::from_vectors(a.clone(), b.clone()).unwrap();
            if let Ok(v) = d_r2(&p) {
                prop_assert!((0.0..=1.0).contains(&v));
                prop_assert_eq!(v == 1.0, a == b);
                prop_assert_eq!(v == 0.0, p.ssr() >= p.sst());
                prop_assert_eq!(v, d_r2_unbounded(&p).unwrap().max(0.0));
            }
        }

        #[test]
        fn permutation_equivariance((a, b) in arb_pair(), rot in 0usize..16) {
            let p = AlignedPair::from_vectors(a.clone(), b.clone()).unwrap();
            let k = rot % a.len();
            let (mut a2, mut b2) = (a.clone(), b.clone());
            a2.rotate_left(k);
            b2.rotate_left(k);
            a2.reverse();
            b2.reverse();
            let q = AlignedPair::from_vectors(a2, b2).unwrap();
            prop_assert_eq!(d_r2(&p).ok(), d_r2(&q).ok());
        }

        #[test]
        fn largest_remainder_preserves_total(w in prop::collection::vec(0.0f64..1.0, 8), shots in 1u64..5000) {
            let s: f64 = w.iter().sum();
            prop_assume!(s > 0.0);
            let d = Distribution::new(3, w.iter().map(|x| x / s).collect());
            prop_assert_eq!(expected_ideal_counts(&d, shots).shots(), shots);
        }
    }
}
