use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Detector / label class. The numeric ids are the on-disk values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "u8")]
pub enum ObjectClass {
    SinglePlatform = 0,
    PlatformCluster = 1,
    WindTurbine = 2,
}

impl ObjectClass {
    pub const ALL: [ObjectClass; 3] = [
        ObjectClass::SinglePlatform,
        ObjectClass::PlatformCluster,
        ObjectClass::WindTurbine,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: i64) -> Result<Self> {
        match id {
            0 => Ok(ObjectClass::SinglePlatform),
            1 => Ok(ObjectClass::PlatformCluster),
            2 => Ok(ObjectClass::WindTurbine),
            other => Err(Error::InvalidClassId(other)),
        }
    }

    pub fn name(self) -> &'static str {
        EvalClass::from(self).name()
    }
}

impl TryFrom<i64> for ObjectClass {
    type Error = Error;

    fn try_from(id: i64) -> Result<Self> {
        ObjectClass::from_id(id)
    }
}

impl From<ObjectClass> for u8 {
    fn from(c: ObjectClass) -> u8 {
        c.id()
    }
}

impl fmt::Display for ObjectClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Class space used for scoring: the three detector classes plus the merged
/// `Platform` class (single platforms and clusters together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalClass {
    SinglePlatform,
    PlatformCluster,
    WindTurbine,
    Platform,
}

impl EvalClass {
    pub const UNMERGED: [EvalClass; 3] = [
        EvalClass::SinglePlatform,
        EvalClass::PlatformCluster,
        EvalClass::WindTurbine,
    ];
    pub const MERGED: [EvalClass; 2] = [EvalClass::Platform, EvalClass::WindTurbine];

    pub fn name(self) -> &'static str {
        match self {
            EvalClass::SinglePlatform => "single platform",
            EvalClass::PlatformCluster => "platform cluster",
            EvalClass::WindTurbine => "wind turbine",
            EvalClass::Platform => "platform",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        [
            EvalClass::SinglePlatform,
            EvalClass::PlatformCluster,
            EvalClass::WindTurbine,
            EvalClass::Platform,
        ]
        .into_iter()
        .find(|c| c.name() == name)
    }

    /// On-disk class id; the merged class has none.
    pub fn class_id(self) -> Option<u8> {
        match self {
            EvalClass::SinglePlatform => Some(0),
            EvalClass::PlatformCluster => Some(1),
            EvalClass::WindTurbine => Some(2),
            EvalClass::Platform => None,
        }
    }

    pub fn merged(self) -> EvalClass {
        match self {
            EvalClass::SinglePlatform | EvalClass::PlatformCluster | EvalClass::Platform => {
                EvalClass::Platform
            }
            EvalClass::WindTurbine => EvalClass::WindTurbine,
        }
    }
}

impl From<ObjectClass> for EvalClass {
    fn from(c: ObjectClass) -> Self {
        match c {
            ObjectClass::SinglePlatform => EvalClass::SinglePlatform,
            ObjectClass::PlatformCluster => EvalClass::PlatformCluster,
            ObjectClass::WindTurbine => EvalClass::WindTurbine,
        }
    }
}

impl fmt::Display for EvalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Collapse single platforms and clusters into one platform class.
pub fn merge_class(c: ObjectClass) -> EvalClass {
    EvalClass::from(c).merged()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_examples() {
        assert_eq!(merge_class(ObjectClass::SinglePlatform), EvalClass::Platform);
        assert_eq!(merge_class(ObjectClass::PlatformCluster), EvalClass::Platform);
        assert_eq!(merge_class(ObjectClass::WindTurbine), EvalClass::WindTurbine);
    }

    #[test]
    fn merge_is_idempotent() {
        for c in ObjectClass::ALL {
            let once = merge_class(c);
            assert_eq!(once.merged(), once);
        }
    }

    #[test]
    fn class_ids() {
        for c in ObjectClass::ALL {
            assert_eq!(ObjectClass::from_id(c.id() as i64).unwrap(), c);
        }
        assert!(ObjectClass::from_id(3).is_err());
        assert!(ObjectClass::from_id(-1).is_err());
        assert!(serde_json::from_str::<ObjectClass>("4").is_err());
        assert_eq!(serde_json::to_string(&ObjectClass::WindTurbine).unwrap(), "2");
    }
}
