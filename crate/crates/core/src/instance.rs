//! Benchmark instances: node sets with planar coordinates.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{suite_seed, UnitStream};
use crate::topology::NodeId;

/// Nodes closer than this are redrawn during generation.
pub const MIN_SEPARATION_M: f64 = 50.0;

/// Default side length of the deployment square.
pub const DEFAULT_AREA_KM: f64 = 10.0;

/// Network sizes of the canonical benchmark suite.
pub const SUITE_SIZES: [usize; 4] = [10, 15, 20, 30];

/// Instances per size in the canonical benchmark suite.
pub const SUITE_PER_SIZE: usize = 10;

const MAX_DRAWS_PER_NODE: usize = 100_000;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance size {0}: at least 3 nodes are required")]
    InvalidSize(usize),
    #[error("invalid area {0} km: must be positive and finite")]
    InvalidArea(f64),
    #[error("could not place {size} nodes {MIN_SEPARATION_M} m apart in a {area_km} km square")]
    AreaTooSmall { size: usize, area_km: f64 },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x_m: f64,
    pub y_m: f64,
}

impl Point {
    pub fn distance_m(&self, other: &Point) -> f64 {
        (self.x_m - other.x_m).hypot(self.y_m - other.y_m)
    }
}

/// Immutable problem input. Node `i` sits at `coords[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub seed: u64,
    pub area_km: f64,
    pub coords: Vec<Point>,
}

impl Instance {
    pub fn size(&self) -> usize {
        self.coords.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        0..self.coords.len()
    }

    pub fn distance_m(&self, a: NodeId, b: NodeId) -> f64 {
        self.coords[a].distance_m(&self.coords[b])
    }

    /// Builds an instance from explicit coordinates, checking every invariant.
    pub fn from_coords(
        id: impl Into<String>,
        seed: u64,
        area_km: f64,
        coords: Vec<Point>,
    ) -> Result<Self, InstanceError> {
        let inst = Instance {
            id: id.into(),
            seed,
            area_km,
            coords,
        };
        inst.check()?;
        Ok(inst)
    }

    fn check(&self) -> Result<(), InstanceError> {
        if self.size() < 3 {
            return Err(InstanceError::InvalidSize(self.size()));
        }
        for (i, p) in self.coords.iter().enumerate() {
            if !p.x_m.is_finite() || !p.y_m.is_finite() {
                return Err(InstanceError::Field {
                    field: format!("nodes[{i}]"),
                    message: "coordinates must be finite".into(),
                });
            }
        }
        for i in 0..self.size() {
            for j in i + 1..self.size() {
                if self.distance_m(i, j) <= 0.0 {
                    return Err(InstanceError::Field {
                        field: format!("nodes[{j}]"),
                        message: format!("coincides with node {i}"),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let doc = InstanceDoc {
            id: self.id.clone(),
            size: self.size(),
            seed: self.seed,
            area_km: self.area_km,
            nodes: self
                .coords
                .iter()
                .enumerate()
                .map(|(id, p)| NodeDoc {
                    id,
                    x_m: p.x_m,
                    y_m: p.y_m,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| InstanceError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if doc.size != doc.nodes.len() {
            return Err(InstanceError::Field {
                field: "size".into(),
                message: format!("declares {} nodes but {} are listed", doc.size, doc.nodes.len()),
            });
        }
        let mut coords: Vec<Option<Point>> = vec![None; doc.nodes.len()];
        for (pos, node) in doc.nodes.iter().enumerate() {
            let field = format!("nodes[{pos}].id");
            let slot = coords.get_mut(node.id).ok_or_else(|| InstanceError::Field {
                field: field.clone(),
                message: format!("node id {} outside [0, {})", node.id, doc.size),
            })?;
            if slot.is_some() {
                return Err(InstanceError::Field {
                    field,
                    message: format!("duplicate node id {}", node.id),
                });
            }
            *slot = Some(Point {
                x_m: node.x_m,
                y_m: node.y_m,
            });
        }
        let coords = coords.into_iter().map(|c| c.expect("dense ids")).collect();
        Instance::from_coords(doc.id, doc.seed, doc.area_km, coords)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    id: String,
    size: usize,
    seed: u64,
    area_km: f64,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: NodeId,
    x_m: f64,
    y_m: f64,
}

/// Draws `size` nodes uniformly on `[0, area_km]^2`.
///
/// Coordinates are consumed from [`UnitStream`] in node order, x before y.
/// A draw within [`MIN_SEPARATION_M`] of an accepted node is discarded and
/// redrawn from the continuing stream.
pub fn generate_instance(size: usize, seed: u64, area_km: f64) -> Result<Instance, InstanceError> {
    if size < 3 {
        return Err(InstanceError::InvalidSize(size));
    }
    if !(area_km > 0.0 && area_km.is_finite()) {
        return Err(InstanceError::InvalidArea(area_km));
    }
    let side_m = area_km * 1000.0;
    let mut stream = UnitStream::new(seed);
    let mut coords: Vec<Point> = Vec::with_capacity(size);
    while coords.len() < size {
        let mut placed = false;
        for _ in 0..MAX_DRAWS_PER_NODE {
            let p = Point {
                x_m: stream.next_unit() * side_m,
                y_m: stream.next_unit() * side_m,
            };
            if coords.iter().all(|q| q.distance_m(&p) >= MIN_SEPARATION_M) {
                coords.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(InstanceError::AreaTooSmall { size, area_km });
        }
    }
    Ok(Instance {
        id: format!("n{size}-s{seed}"),
        seed,
        area_km,
        coords,
    })
}

/// `per_size` instances for each size, ids `s<size>-i<k>` with k starting at 1.
pub fn generate_suite(
    sizes: &[usize],
    per_size: usize,
    base_seed: u64,
    area_km: f64,
) -> Result<Vec<Instance>, InstanceError> {
    let mut out = Vec::with_capacity(sizes.len() * per_size);
    for &size in sizes {
        for k in 1..=per_size {
            let mut inst = generate_instance(size, suite_seed(base_seed, size, k), area_km)?;
            inst.id = format!("s{size:02}-i{k:02}");
            out.push(inst);
        }
    }
    Ok(out)
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<(), InstanceError> {
    fs::write(path, inst.to_json())?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance, InstanceError> {
    Instance::from_json(&fs::read_to_string(path)?)
}

/// Loads every `*.json` instance in a directory, sorted by (size, id).
pub fn load_suite(dir: &Path) -> Result<Vec<Instance>, InstanceError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "json") {
            out.push(load_instance(&path)?);
        }
    }
    out.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}
