//! Pairwise distances and azimuths of an instance, precomputed once.

use crate::instance::Instance;
use crate::num::Scalar;
use crate::topology::NodeId;

#[derive(Debug, Clone)]
pub struct Geometry<S> {
    n: usize,
    dist_km: Vec<S>,
    azimuth_deg: Vec<S>,
}

/// Azimuth of `(dx, dy)` in degrees, counterclockwise from east, in `[0, 360)`.
pub fn azimuth_deg<S: Scalar>(dx: S, dy: S) -> S {
    let full = S::lit(360.0);
    let mut az = dy.atan2(dx).to_degrees();
    if az < S::zero() {
        az = az + full;
    }
    if az >= full {
        az = az - full;
    }
    az
}

impl<S: Scalar> Geometry<S> {
    pub fn new(inst: &Instance) -> Self {
        let n = inst.size();
        let mut dist_km = vec![S::zero(); n * n];
        let mut azimuth_deg_v = vec![S::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                if a == b {
                    continue;
                }
                let pa = inst.coords[a];
                let pb = inst.coords[b];
                let dx = S::lit(pb.x_m - pa.x_m);
                let dy = S::lit(pb.y_m - pa.y_m);
                dist_km[a * n + b] = S::lit(inst.distance_m(a, b) / 1000.0);
                azimuth_deg_v[a * n + b] = azimuth_deg(dx, dy);
            }
        }
        Self {
            n,
            dist_km,
            azimuth_deg: azimuth_deg_v,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn dist_km(&self, a: NodeId, b: NodeId) -> S {
        self.dist_km[a * self.n + b]
    }

    /// Direction from `a` towards `b`.
    pub fn azimuth_deg(&self, a: NodeId, b: NodeId) -> S {
        self.azimuth_deg[a * self.n + b]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{Instance, Point};

    #[test]
    fn azimuth_quadrants() {
        assert_eq!(azimuth_deg(1.0f64, 0.0), 0.0);
        assert!((azimuth_deg(0.0f64, 1.0) - 90.0).abs() < 1e-12);
        assert!((azimuth_deg(-1.0f64, 0.0) - 180.0).abs() < 1e-12);
        assert!((azimuth_deg(0.0f64, -1.0) - 270.0).abs() < 1e-12);
        assert!(azimuth_deg(1.0f64, -1e-18) < 360.0);
    }

    #[test]
    fn distances_are_symmetric_in_km() {
        let inst = Instance::from_coords(
            "g",
            0,
            1.0,
            vec![
                Point { x_m: 0.0, y_m: 0.0 },
                Point { x_m: 3000.0, y_m: 4000.0 },
                Point { x_m: 0.0, y_m: 100.0 },
            ],
        )
        .unwrap();
        let g = Geometry::<f64>::new(&inst);
        assert_eq!(g.dist_km(0, 1), 5.0);
        assert_eq!(g.dist_km(1, 0), 5.0);
        assert!((g.azimuth_deg(0, 2) - 90.0).abs() < 1e-12);
        assert!((g.azimuth_deg(2, 0) - 270.0).abs() < 1e-12);
    }
}
