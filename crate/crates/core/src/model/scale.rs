use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::Skeleton;

/// Per-limb scale factors keyed by joint name. Missing joints keep 1.0.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScaleSpec {
    pub factors: BTreeMap<String, f64>,
}

impl ScaleSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Same factor on every joint of `skeleton`.
    pub fn uniform(skeleton: &Skeleton, factor: f64) -> Self {
        ScaleSpec {
            factors: skeleton
                .joints()
                .iter()
                .map(|j| (j.name.clone(), factor))
                .collect(),
        }
    }

    pub fn with(mut self, joint: impl Into<String>, factor: f64) -> Self {
        self.factors.insert(joint.into(), factor);
        self
    }

    pub fn factor(&self, joint: &str) -> f64 {
        self.factors.get(joint).copied().unwrap_or(1.0)
    }

    pub fn is_identity(&self) -> bool {
        self.factors.values().all(|&f| f == 1.0)
    }

    pub fn validate(&self, skeleton: &Skeleton) -> Result<()> {
        for (name, &factor) in &self.factors {
            if !(factor > 0.0) || !factor.is_finite() {
                return Err(Error::Validation(format!(
                    "scale factor for '{name}' must be positive, got {factor}"
                )));
            }
            if skeleton.joint_index(name).is_none() {
                return Err(Error::Validation(format!(
                    "scale spec names unknown joint '{name}'"
                )));
            }
        }
        Ok(())
    }
}

/// Multiplies each joint's local offset (and link center) by its factor.
/// Link masses scale with the cube of the factor.
pub fn apply_scale(skeleton: &Skeleton, spec: &ScaleSpec) -> Result<Skeleton> {
    spec.validate(skeleton)?;
    let mut out = skeleton.clone();
    for joint in out.joints_mut() {
        let f = spec.factor(&joint.name);
        joint.offset *= f;
        joint.center *= f;
        joint.mass *= f * f * f;
    }
    Ok(out)
}
