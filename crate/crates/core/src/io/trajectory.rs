use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Vector3, Vector4};

/// One frame of a trajectory file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub index: usize,
    pub tx: f64,
    pub ty: f64,
    pub tz: f64,
    pub qw: f64,
    pub qx: f64,
    pub qy: f64,
    pub qz: f64,
    pub failed: bool,
    /// Keyframe indices joined by `;`.
    #[serde(with = "index_list")]
    pub keyframes: Vec<usize>,
    pub loss_f: f64,
    pub loss_s: f64,
}

impl TrajectoryRecord {
    pub fn new(index: usize, pose: &Pose, failed: bool, keyframes: Vec<usize>, loss_f: f64, loss_s: f64) -> Self {
        Self {
            index,
            tx: pose.translation.x,
            ty: pose.translation.y,
            tz: pose.translation.z,
            qw: pose.rotation[0],
            qx: pose.rotation[1],
            qy: pose.rotation[2],
            qz: pose.rotation[3],
            failed,
            keyframes,
            loss_f,
            loss_s,
        }
    }

    pub fn pose(&self) -> Pose {
        Pose::new(
            Vector3::new(self.tx, self.ty, self.tz),
            Vector4::new(self.qw, self.qx, self.qy, self.qz),
        )
    }
}

mod index_list {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[usize], s: S) -> Result<S::Ok, S::Error> {
        let joined: Vec<String> = v.iter().map(|i| i.to_string()).collect();
        s.serialize_str(&joined.join(";"))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        let s = String::deserialize(d)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(';')
            .map(|t| t.parse().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Writes records as CSV with a header row. Floats use the shortest
/// representation that parses back to the same value.
pub fn write_trajectory(path: impl AsRef<Path>, records: &[TrajectoryRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    let to_err = |e: csv::Error| Error::Parse {
        path: path.to_path_buf(),
        reason: e.to_string(),
    };
    w.write_record([
        "index",
        "tx",
        "ty",
        "tz",
        "qw",
        "qx",
        "qy",
        "qz",
        "failed",
        "keyframes",
        "loss_f",
        "loss_s",
    ])
    .map_err(to_err)?;
    for r in records {
        w.serialize(r).map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<TrajectoryRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    r.deserialize()
        .map(|rec| {
            rec.map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })
        .collect()
}
