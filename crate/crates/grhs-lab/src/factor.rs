//! Semi-Euclidean factors and invariant translation directions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FactorError {
    #[error("factor must have positive dimension")]
    EmptyFactor,
    #[error("signature entry must be +1 or -1, got {0}")]
    BadSignatureEntry(i8),
    #[error("direction has {got} coefficients, factor has dimension {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("invariant direction must be nonzero")]
    ZeroDirection,
}

/// Flat factor (R^n, g₀) with g₀ = Σ εᵢ dxᵢ², εᵢ = ±1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiEuclideanFactor {
    signature: Vec<i8>,
}

impl SemiEuclideanFactor {
    pub fn new(signature: Vec<i8>) -> Result<Self, FactorError> {
        if signature.is_empty() {
            return Err(FactorError::EmptyFactor);
        }
        if let Some(&bad) = signature.iter().find(|&&e| e != 1 && e != -1) {
            return Err(FactorError::BadSignatureEntry(bad));
        }
        Ok(SemiEuclideanFactor { signature })
    }

    /// Euclidean factor: all εᵢ = +1.
    pub fn euclidean(dim: usize) -> Result<Self, FactorError> {
        Self::new(vec![1; dim])
    }

    /// Lorentzian factor: ε₁ = −1, the rest +1.
    pub fn lorentzian(dim: usize) -> Result<Self, FactorError> {
        let mut s = vec![1; dim];
        if s.is_empty() {
            return Err(FactorError::EmptyFactor);
        }
        s[0] = -1;
        Self::new(s)
    }

    pub fn dim(&self) -> usize {
        self.signature.len()
    }

    pub fn epsilon(&self, i: usize) -> f64 {
        self.signature[i] as f64
    }

    pub fn signature(&self) -> &[i8] {
        &self.signature
    }
}

/// Direction vector α defining the invariant coordinate ξ = Σ αᵢ xᵢ. All
/// profile data of a candidate depends on the factor coordinates only through
/// ξ, so the pseudo-norm ||α||² = Σ εᵢ αᵢ² controls every curvature formula;
/// ||α||² = 0 is the null (degenerate) regime, not an error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantDirection {
    coefficients: Vec<f64>,
    pseudo_norm_sq: f64,
}

impl InvariantDirection {
    pub fn new(
        factor: &SemiEuclideanFactor,
        coefficients: Vec<f64>,
    ) -> Result<Self, FactorError> {
        if coefficients.len() != factor.dim() {
            return Err(FactorError::DimensionMismatch {
                got: coefficients.len(),
                want: factor.dim(),
            });
        }
        if coefficients.iter().all(|&c| c == 0.0) {
            return Err(FactorError::ZeroDirection);
        }
        // Sum in a canonical order so the result is bit-identical under
        // simultaneous permutation of signature and coefficients.
        let mut terms: Vec<f64> = coefficients
            .iter()
            .enumerate()
            .map(|(i, &c)| factor.epsilon(i) * c * c)
            .collect();
        terms.sort_by(f64::total_cmp);
        let pseudo_norm_sq = terms.into_iter().sum();
        Ok(InvariantDirection {
            coefficients,
            pseudo_norm_sq,
        })
    }

    pub fn coefficient(&self, i: usize) -> f64 {
        self.coefficients[i]
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// ||α||² = Σ εᵢ αᵢ². Exactly zero iff the direction is null.
    pub fn pseudo_norm_sq(&self) -> f64 {
        self.pseudo_norm_sq
    }

    pub fn is_null(&self) -> bool {
        self.pseudo_norm_sq == 0.0
    }

    /// ξ = Σ αᵢ xᵢ at a factor point.
    pub fn invariant_coordinate(&self, x: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(x)
            .map(|(a, xi)| a * xi)
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn null_direction_in_lorentzian_plane() {
        let f = SemiEuclideanFactor::lorentzian(2).unwrap();
        let d = InvariantDirection::new(&f, vec![1.0, 1.0]).unwrap();
        assert_eq!(d.pseudo_norm_sq(), 0.0);
        assert!(d.is_null());
    }

    #[test]
    fn euclidean_axis_direction_has_unit_norm() {
        let f = SemiEuclideanFactor::euclidean(3).unwrap();
        let d = InvariantDirection::new(&f, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(d.pseudo_norm_sq(), 1.0);
        assert!(!d.is_null());
    }

    #[test]
    fn timelike_direction_has_negative_norm() {
        let f = SemiEuclideanFactor::lorentzian(3).unwrap();
        let d = InvariantDirection::new(&f, vec![2.0, 1.0, 0.0]).unwrap();
        assert_eq!(d.pseudo_norm_sq(), -3.0);
    }

    #[test]
    fn invariant_coordinate_is_linear_pairing() {
        let f = SemiEuclideanFactor::lorentzian(2).unwrap();
        let d = InvariantDirection::new(&f, vec![3.0, -1.0]).unwrap();
        assert_eq!(d.invariant_coordinate(&[0.5, 2.0]), -0.5);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let f = SemiEuclideanFactor::euclidean(2).unwrap();
        assert_eq!(
            InvariantDirection::new(&f, vec![1.0]).unwrap_err(),
            FactorError::DimensionMismatch { got: 1, want: 2 }
        );
    }

    #[test]
    fn zero_direction_rejected() {
        let f = SemiEuclideanFactor::euclidean(2).unwrap();
        assert_eq!(
            InvariantDirection::new(&f, vec![0.0, 0.0]).unwrap_err(),
            FactorError::ZeroDirection
        );
    }

    #[test]
    fn bad_signature_rejected() {
        assert_eq!(
            SemiEuclideanFactor::new(vec![1, 0]).unwrap_err(),
            FactorError::BadSignatureEntry(0)
        );
    }

    proptest! {
        /// Permuting (εᵢ, αᵢ) pairs together leaves ||α||² unchanged.
        #[test]
        fn pseudo_norm_is_permutation_invariant(
            entries in prop::collection::vec((prop::bool::ANY, -5.0f64..5.0), 1..8),
            seed in 0u64..1000,
        ) {
            let signature: Vec<i8> = entries.iter().map(|(s, _)| if *s { 1 } else { -1 }).collect();
            let coeffs: Vec<f64> = entries.iter().map(|(_, c)| *c).collect();
            prop_assume!(coeffs.iter().any(|&c| c != 0.0));

            let f = SemiEuclideanFactor::new(signature.clone()).unwrap();
            let d = InvariantDirection::new(&f, coeffs.clone()).unwrap();

            // Deterministic shuffle driven by the seed.
            let mut idx: Vec<usize> = (0..entries.len()).collect();
            let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
            for i in (1..idx.len()).rev() {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                let j = (state >> 33) as usize % (i + 1);
                idx.swap(i, j);
            }
            let sig_p: Vec<i8> = idx.iter().map(|&i| signature[i]).collect();
            let coef_p: Vec<f64> = idx.iter().map(|&i| coeffs[i]).collect();
            let fp = SemiEuclideanFactor::new(sig_p).unwrap();
            let dp = InvariantDirection::new(&fp, coef_p).unwrap();

            prop_assert_eq!(d.pseudo_norm_sq(), dp.pseudo_norm_sq());
        }
    }
}
