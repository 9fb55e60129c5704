use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pose::NUM_KEYPOINTS;

/// Matching and verification parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchConfig {
    /// A keypoint is detected iff its confidence is strictly above this value.
    pub detection_threshold: f64,
    /// Maximum penalty for a query pose without a match in `dist_t`.
    pub t: f64,
    /// Pose pairs above this mirror-invariant distance are not verified.
    pub pose_dist_max: f64,
    /// Maximum torso angle difference, in radians.
    pub torso_angle_max: f64,
    /// Number of images kept from fast matching.
    pub shortlist_len: usize,
    /// Fraction of all keypoints that must be inliers for a pose pair to validate.
    pub min_inlier_frac: f64,
    /// Inlier radius in units of the relative query pose size.
    pub inlier_dist_factor: f64,
    pub flip_enabled: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            detection_threshold: 0.0,
            t: 0.05,
            pose_dist_max: 0.1,
            torso_angle_max: 0.4,
            shortlist_len: 50,
            min_inlier_frac: 0.25,
            inlier_dist_factor: 0.1,
            flip_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid configuration: {field} {reason}")]
pub struct ConfigError {
    pub field: &'static str,
    pub reason: String,
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |field, reason: &str| Err(ConfigError { field, reason: reason.to_string() });
        if !(0.0..1.0).contains(&self.detection_threshold) {
            return err("detection_threshold", "must lie in [0, 1)");
        }
        for (field, v) in [
            ("t", self.t),
            ("pose_dist_max", self.pose_dist_max),
            ("torso_angle_max", self.torso_angle_max),
            ("inlier_dist_factor", self.inlier_dist_factor),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return err(field, "must be finite and strictly positive");
            }
        }
        if !(self.min_inlier_frac > 0.0 && self.min_inlier_frac <= 1.0) {
            return err("min_inlier_frac", "must lie in (0, 1]");
        }
        if self.shortlist_len == 0 {
            return err("shortlist_len", "must be at least 1");
        }
        Ok(())
    }

    /// Minimum number of inlier keypoints for a validated pose pair.
    pub fn min_inliers(&self) -> usize {
        // the small epsilon keeps exact products such as 0.25 * 25 from rounding up
        ((self.min_inlier_frac * NUM_KEYPOINTS as f64) - 1e-9).ceil().max(1.0) as usize
    }

    /// Hash of the fields that decide which poses are eligible for matching.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"detection_threshold=");
        hasher.update(self.detection_threshold.to_bits().to_le_bytes());
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = MatchConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.min_inliers(), 7);
        assert_eq!(cfg.shortlist_len, 50);
    }

    #[test]
    fn quota_rounds_up() {
        let mut cfg = MatchConfig::default();
        cfg.min_inlier_frac = 0.26;
        assert_eq!(cfg.min_inliers(), 7);
        cfg.min_inlier_frac = 0.2;
        assert_eq!(cfg.min_inliers(), 5);
        cfg.min_inlier_frac = 1.0;
        assert_eq!(cfg.min_inliers(), 25);
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = MatchConfig::default();
        cfg.t = 0.0;
        assert_eq!(cfg.validate().unwrap_err().field, "t");
        let mut cfg = MatchConfig::default();
        cfg.min_inlier_frac = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = MatchConfig::default();
        cfg.shortlist_len = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = MatchConfig::default();
        cfg.detection_threshold = -0.1;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn fingerprint_tracks_only_eligibility_fields() {
        let base = MatchConfig::default();
        let mut other = base.clone();
        other.t = 0.2;
        assert_eq!(base.fingerprint(), other.fingerprint());
        other.detection_threshold = 0.1;
        assert_ne!(base.fingerprint(), other.fingerprint());
        assert_eq!(base.fingerprint().len(), 16);
    }
}
