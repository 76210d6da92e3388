use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ScaleSpec, Skeleton};
use crate::Vec3;

/// Addresses a character or a rigid object of a scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityRef {
    Character(usize),
    Object(usize),
}

impl EntityRef {
    pub fn is_character(&self) -> bool {
        matches!(self, EntityRef::Character(_))
    }

    pub fn index(&self) -> usize {
        match *self {
            EntityRef::Character(i) | EntityRef::Object(i) => i,
        }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Character(i) => write!(f, "character {i}"),
            EntityRef::Object(i) => write!(f, "object {i}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub name: String,
    /// Body (joint) the marker rides on; for objects, the object name.
    pub body: String,
    pub offset: Vec3,
}

impl Marker {
    pub fn new(name: impl Into<String>, body: impl Into<String>, offset: Vec3) -> Self {
        Marker {
            name: name.into(),
            body: body.into(),
            offset,
        }
    }
}

/// Marker placement for one entity.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkerConfig {
    pub markers: Vec<Marker>,
}

/// A marker bound to a body index of its skeleton (0 for objects).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedMarker {
    pub body: usize,
    pub offset: Vec3,
}

impl MarkerConfig {
    pub fn new(markers: Vec<Marker>) -> Self {
        MarkerConfig { markers }
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.markers.iter().position(|m| m.name == name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.markers.iter().map(|m| m.name.as_str())
    }

    fn check_unique(&self) -> Result<()> {
        for (i, m) in self.markers.iter().enumerate() {
            if self.markers[..i].iter().any(|o| o.name == m.name) {
                return Err(Error::Validation(format!("duplicate marker name '{}'", m.name)));
            }
            if !m.offset.iter().all(|c| c.is_finite()) {
                return Err(Error::Validation(format!(
                    "marker '{}' has a non-finite offset",
                    m.name
                )));
            }
        }
        Ok(())
    }

    /// Binds every marker to a joint index; unknown bodies are config errors.
    pub fn resolve(&self, skeleton: &Skeleton) -> Result<Vec<ResolvedMarker>> {
        self.check_unique()?;
        self.markers
            .iter()
            .map(|m| {
                skeleton
                    .joint_index(&m.body)
                    .map(|body| ResolvedMarker {
                        body,
                        offset: m.offset,
                    })
                    .ok_or_else(|| {
                        Error::Validation(format!(
                            "marker '{}' refers to missing body '{}'",
                            m.name, m.body
                        ))
                    })
            })
            .collect()
    }

    /// Binds markers of a rigid object; every marker must sit on `object_name`.
    pub fn resolve_object(&self, object_name: &str) -> Result<Vec<ResolvedMarker>> {
        self.check_unique()?;
        self.markers
            .iter()
            .map(|m| {
                if m.body == object_name {
                    Ok(ResolvedMarker {
                        body: 0,
                        offset: m.offset,
                    })
                } else {
                    Err(Error::Validation(format!(
                        "marker '{}' refers to missing body '{}' on object '{}'",
                        m.name, m.body, object_name
                    )))
                }
            })
            .collect()
    }

    /// Offsets scaled by the factor of the body each marker rides on.
    pub fn scaled(&self, spec: &ScaleSpec) -> MarkerConfig {
        MarkerConfig {
            markers: self
                .markers
                .iter()
                .map(|m| Marker {
                    name: m.name.clone(),
                    body: m.body.clone(),
                    offset: m.offset * spec.factor(&m.body),
                })
                .collect(),
        }
    }
}
