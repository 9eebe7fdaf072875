//! Deterministic uniform frame selection.
//!
//! The sampling rule is center-aligned: index i of n from F frames is
//! floor((i + 0.5) * F / n). The hierarchical subset is drawn from the
//! already-sampled flat indices so every spatial-stream frame also has a
//! semantic-stream representation.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SamplerError {
    #[error("requested a sample of zero frames")]
    ZeroCount,
    #[error("requested {requested} frames but only {available} are available")]
    InsufficientFrames { requested: usize, available: usize },
}

/// Frame selection for both encoder streams.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameIndexPlan {
    pub source_frame_count: usize,
    /// Strictly increasing indices for the flat encoder (length n_total).
    pub flat_indices: Vec<usize>,
    /// Strictly increasing subset of `flat_indices` for the hierarchical
    /// encoder (length n_hiera).
    pub hier_indices: Vec<usize>,
}

impl FrameIndexPlan {
    pub fn new(
        source_frame_count: usize,
        n_total: usize,
        n_hiera: usize,
    ) -> Result<Self, SamplerError> {
        let flat_indices = sample_uniform(source_frame_count, n_total)?;
        let hier_indices = if n_hiera == 0 {
            Vec::new()
        } else {
            subsample(&flat_indices, n_hiera)?
        };
        Ok(Self {
            source_frame_count,
            flat_indices,
            hier_indices,
        })
    }
}

/// Center-aligned uniform sampling: floor((i + 0.5) * F / n) for i in 0..n.
/// Strictly increasing for every 1 <= n <= F.
pub fn sample_uniform(source_frame_count: usize, n: usize) -> Result<Vec<usize>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::ZeroCount);
    }
    if n > source_frame_count {
        return Err(SamplerError::InsufficientFrames {
            requested: n,
            available: source_frame_count,
        });
    }
    // Exact integer form of floor((i + 0.5) * F / n): (2i + 1) * F / (2n).
    Ok((0..n)
        .map(|i| (2 * i + 1) * source_frame_count / (2 * n))
        .collect())
}

/// Uniformly sub-select positions of `flat_indices`, mapping back to frame
/// indices. The result is strictly increasing.
pub fn subsample(flat_indices: &[usize], n_hiera: usize) -> Result<Vec<usize>, SamplerError> {
    if n_hiera == 0 {
        return Err(SamplerError::ZeroCount);
    }
    let positions = sample_uniform(flat_indices.len(), n_hiera)?;
    Ok(positions.into_iter().map(|p| flat_indices[p]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_when_n_equals_count() {
        assert_eq!(
            sample_uniform(64, 64).unwrap(),
            (0..64).collect::<Vec<_>>()
        );
    }

    #[test]
    fn identity_exhaustive_up_to_1024() {
        for f in 1..=1024 {
            let got = sample_uniform(f, f).unwrap();
            assert!(got.iter().copied().eq(0..f), "F = {f}");
        }
    }

    #[test]
    fn center_aligned_hand_oracle() {
        // floor((i + 0.5) * 8 / 4) = [1, 3, 5, 7]
        assert_eq!(sample_uniform(8, 4).unwrap(), vec![1, 3, 5, 7]);
        // floor(0.5 * 100) = 50
        assert_eq!(sample_uniform(100, 1).unwrap(), vec![50]);
    }

    #[test]
    fn matches_floating_point_formula() {
        for f in 1..200 {
            for n in 1..=f {
                let got = sample_uniform(f, n).unwrap();
                let oracle: Vec<usize> = (0..n)
                    .map(|i| ((i as f64 + 0.5) * f as f64 / n as f64).floor() as usize)
                    .collect();
                assert_eq!(got, oracle, "F = {f}, n = {n}");
            }
        }
    }

    #[test]
    fn strictly_increasing_and_in_range() {
        for f in [1usize, 3, 7, 10, 64, 100, 333] {
            for n in 1..=f.min(40) {
                let got = sample_uniform(f, n).unwrap();
                assert_eq!(got.len(), n);
                assert!(got.windows(2).all(|w| w[0] < w[1]), "F = {f}, n = {n}");
                assert!(got.iter().all(|&i| i < f));
            }
        }
    }

    #[test]
    fn errors_on_bad_counts() {
        assert_eq!(sample_uniform(4, 5).unwrap_err(), SamplerError::InsufficientFrames {
            requested: 5,
            available: 4
        });
        assert_eq!(sample_uniform(4, 0).unwrap_err(), SamplerError::ZeroCount);
        assert_eq!(subsample(&[1, 2, 3], 0).unwrap_err(), SamplerError::ZeroCount);
    }

    #[test]
    fn subsample_odd_frames_from_sixty_four() {
        let flat = sample_uniform(64, 64).unwrap();
        let hier = subsample(&flat, 32).unwrap();
        let expected: Vec<usize> = (0..32).map(|i| 2 * i + 1).collect();
        assert_eq!(hier, expected);
    }

    #[test]
    fn subsample_identity_and_single_center() {
        assert_eq!(subsample(&[5, 9], 2).unwrap(), vec![5, 9]);
        let flat = sample_uniform(64, 64).unwrap();
        assert_eq!(subsample(&flat, 1).unwrap(), vec![32]);
    }

    #[test]
    fn subsample_is_subset_and_increasing() {
        let flat = sample_uniform(100, 37).unwrap();
        for n in 1..=37 {
            let hier = subsample(&flat, n).unwrap();
            assert!(hier.windows(2).all(|w| w[0] < w[1]));
            assert!(hier.iter().all(|i| flat.contains(i)));
        }
    }

    #[test]
    fn plan_composes_both_streams() {
        let plan = FrameIndexPlan::new(128, 64, 32).unwrap();
        assert_eq!(plan.flat_indices.len(), 64);
        assert_eq!(plan.hier_indices.len(), 32);
        assert!(plan.hier_indices.iter().all(|i| plan.flat_indices.contains(i)));
        let empty = FrameIndexPlan::new(128, 64, 0).unwrap();
        assert!(empty.hier_indices.is_empty());
    }

    #[test]
    fn composition_matches_direct_sampling_for_odd_ratios() {
        // subsample(sample_uniform(F, n_total), n_hiera) equals direct
        // center-sampling when n_total/n_hiera is odd or n_total == F.
        // (For even ratios with F > n_total the two differ by a half-step;
        // see the sampler notes in the repo docs.)
        for (f, n_total, n_hiera) in [
            (12usize, 6usize, 2usize), // ratio 3
            (60, 20, 4),               // ratio 5
            (64, 64, 32),              // n_total == F
            (90, 30, 30),              // ratio 1
            (45, 9, 3),                // ratio 3
        ] {
            let composed = subsample(&sample_uniform(f, n_total).unwrap(), n_hiera).unwrap();
            let direct = sample_uniform(f, n_hiera).unwrap();
            assert_eq!(composed, direct, "F = {f}, n_total = {n_total}, n_hiera = {n_hiera}");
        }
    }
}
