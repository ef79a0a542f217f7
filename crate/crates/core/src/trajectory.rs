//! Discretized paths on a uniform time grid, and closed phase-space loops.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PhasePoint;

/// Coordinates `q_0..q_N` (and optionally momenta) at times `t0 + k·dt`.
///
/// Node vectors are stored row-major in one flat buffer. The end nodes
/// `q_0` and `q_N` are the fixed boundary under variations; only interior
/// nodes are moved by the optimizer and the samplers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    t0: f64,
    dt: f64,
    dim: usize,
    nodes: Vec<f64>,
    momenta: Option<Vec<f64>>,
}

impl Trajectory {
    /// Builds a path from a flat row-major node buffer of `(N+1)·dim` values.
    pub fn new(t0: f64, dt: f64, dim: usize, nodes: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain("dt", format!("must be positive and finite, got {dt}")));
        }
        if dim == 0 {
            return Err(Error::domain("dim", "must be positive"));
        }
        if nodes.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                what: "trajectory nodes",
                expected: dim * (nodes.len() / dim + 1),
                got: nodes.len(),
            });
        }
        if nodes.len() / dim < 2 {
            return Err(Error::domain("trajectory", "needs at least two nodes (N ≥ 1)"));
        }
        Ok(Self {
            t0,
            dt,
            dim,
            nodes,
            momenta: None,
        })
    }

    /// One-dimensional path from scalar node values.
    pub fn from_scalars(t0: f64, dt: f64, nodes: Vec<f64>) -> Result<Self> {
        Self::new(t0, dt, 1, nodes)
    }

    /// Straight line between `q_start` at `t0` and `q_end` at `t1` with `n` segments.
    pub fn straight_line(t0: f64, t1: f64, q_start: &[f64], q_end: &[f64], n: usize) -> Result<Self> {
        if q_start.len() != q_end.len() {
            return Err(Error::DimensionMismatch {
                what: "endpoints",
                expected: q_start.len(),
                got: q_end.len(),
            });
        }
        if n == 0 {
            return Err(Error::domain("segments", "must be at least 1"));
        }
        let dim = q_start.len();
        let mut nodes = Vec::with_capacity((n + 1) * dim);
        for k in 0..=n {
            let s = k as f64 / n as f64;
            nodes.extend(q_start.iter().zip(q_end).map(|(a, b)| a + s * (b - a)));
        }
        Self::new(t0, (t1 - t0) / n as f64, dim, nodes)
    }

    pub fn with_momenta(mut self, momenta: Vec<f64>) -> Result<Self> {
        if momenta.len() != self.nodes.len() {
            return Err(Error::DimensionMismatch {
                what: "trajectory momenta",
                expected: self.nodes.len(),
                got: momenta.len(),
            });
        }
        self.momenta = Some(momenta);
        Ok(self)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of segments `N`.
    pub fn segments(&self) -> usize {
        self.nodes.len() / self.dim - 1
    }

    pub fn len(&self) -> usize {
        self.segments() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.segments())
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.nodes[k * self.dim..(k + 1) * self.dim]
    }

    pub fn momentum(&self, k: usize) -> Option<&[f64]> {
        self.momenta.as_ref().map(|p| &p[k * self.dim..(k + 1) * self.dim])
    }

    pub fn has_momenta(&self) -> bool {
        self.momenta.is_some()
    }

    pub fn nodes_flat(&self) -> &[f64] {
        &self.nodes
    }

    pub(crate) fn nodes_flat_mut(&mut self) -> &mut [f64] {
        &mut self.nodes
    }

    pub fn momenta_flat(&self) -> Option<&[f64]> {
        self.momenta.as_deref()
    }

    pub fn phase_point(&self, k: usize) -> Option<PhasePoint> {
        self.momentum(k)
            .map(|p| PhasePoint::new(self.time(k), self.node(k).to_vec(), p.to_vec()))
    }

    /// Drops momenta; used when a path is handed to coordinate-only code.
    pub fn without_momenta(mut self) -> Self {
        self.momenta = None;
        self
    }

    /// Largest per-component distance between two paths with the same shape.
    pub fn max_node_distance(&self, other: &Trajectory) -> Result<f64> {
        if self.nodes.len() != other.nodes.len() || self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                what: "trajectory shape",
                expected: self.nodes.len(),
                got: other.nodes.len(),
            });
        }
        Ok(self
            .nodes
            .iter()
            .zip(&other.nodes)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }

    /// CSV with header `t,q0..q{n-1}[,p0..p{n-1}]`, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 0..self.dim {
            write!(out, ",q{i}").unwrap();
        }
        if self.momenta.is_some() {
            for i in 0..self.dim {
                write!(out, ",p{i}").unwrap();
            }
        }
        out.push('\n');
        for k in 0..self.len() {
            write!(out, "{}", fmt_f64(self.time(k))).unwrap();
            for v in self.node(k) {
                write!(out, ",{}", fmt_f64(*v)).unwrap();
            }
            if let Some(p) = self.momentum(k) {
                for v in p {
                    write!(out, ",{}", fmt_f64(*v)).unwrap();
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV written by [`Trajectory::to_csv`]. The time step is
    /// taken from the first two rows.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::domain("csv", "empty input"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.first() != Some(&"t") {
            return Err(Error::domain("csv", "first column must be `t`"));
        }
        let nq = cols.iter().filter(|c| c.starts_with('q')).count();
        let np = cols.iter().filter(|c| c.starts_with('p')).count();
        if nq == 0 || (np != 0 && np != nq) || 1 + nq + np != cols.len() {
            return Err(Error::domain("csv", format!("malformed header `{header}`")));
        }
        let mut times = Vec::new();
        let mut nodes = Vec::new();
        let mut momenta = Vec::new();
        for (row, line) in lines.enumerate() {
            let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::domain("csv", format!("row {}: {e}", row + 1)))?;
            if vals.len() != cols.len() {
                return Err(Error::domain(
                    "csv",
                    format!("row {} has {} fields", row + 1, vals.len()),
                ));
            }
            times.push(vals[0]);
            nodes.extend_from_slice(&vals[1..1 + nq]);
            momenta.extend_from_slice(&vals[1 + nq..]);
        }
        if times.len() < 2 {
            return Err(Error::domain("csv", "needs at least two rows"));
        }
        let traj = Self::new(times[0], times[1] - times[0], nq, nodes)?;
        if np > 0 {
            traj.with_momenta(momenta)
        } else {
            Ok(traj)
        }
    }
}

/// Shortest round-trip formatting is not stable in width; this keeps the
/// documented 17 significant digits.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Closed polygon of phase points sharing one order-parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseLoop {
    points: Vec<PhasePoint>,
}

impl PhaseLoop {
    pub fn new(points: Vec<PhasePoint>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::domain(
                "loop",
                format!("needs at least 3 points, got {}", points.len()),
            ));
        }
        let t = points[0].t;
        let dim = points[0].q.len();
        for pt in &points {
            if pt.t != t {
                return Err(Error::domain("loop", "all points must share the same t"));
            }
            if pt.q.len() != dim || pt.p.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "loop point",
                    expected: dim,
                    got: pt.q.len().max(pt.p.len()),
                });
            }
        }
        Ok(Self { points })
    }

    /// `n` points on a circle of radius `radius` around `(q, p) = center`.
    ///
    /// Orientation convention: a `counterclockwise` loop has positive `∮p dq`
    /// (counterclockwise with `p` on the horizontal axis).
    pub fn circle(t: f64, center: (f64, f64), radius: f64, n: usize, counterclockwise: bool) -> Result<Self> {
        let sign = if counterclockwise { -1.0 } else { 1.0 };
        let points = (0..n)
            .map(|j| {
                let a = sign * 2.0 * std::f64::consts::PI * j as f64 / n as f64;
                PhasePoint::scalar(t, center.0 + radius * a.cos(), center.1 + radius * a.sin())
            })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[PhasePoint] {
        &self.points
    }

    pub fn t(&self) -> f64 {
        self.points[0].t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn csv_header_and_precision() {
        let t = Trajectory::from_scalars(0.0, 0.5, vec![0.0, 1.0 / 3.0, 1.0])
            .unwrap()
            .with_momenta(vec![1.0, 1.0, 1.0])
            .unwrap();
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,q0,p0"));
        assert_eq!(
            lines.nth(1),
            Some("5.0000000000000000e-1,3.3333333333333331e-1,1.0000000000000000e0")
        );
    }

    #[test]
    fn invalid_shapes() {
        assert!(Trajectory::from_scalars(0.0, 1.0, vec![1.0]).is_err());
        assert!(Trajectory::from_scalars(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(Trajectory::new(0.0, 1.0, 2, vec![1.0, 2.0, 3.0]).is_err());
        assert!(PhaseLoop::new(vec![PhasePoint::scalar(0.0, 0.0, 0.0); 2]).is_err());
        let mixed = vec![
            PhasePoint::scalar(0.0, 0.0, 0.0),
            PhasePoint::scalar(0.0, 1.0, 0.0),
            PhasePoint::scalar(1.0, 0.0, 1.0),
        ];
        assert!(PhaseLoop::new(mixed).is_err());
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(
            nodes in proptest::collection::vec(-1e6f64..1e6, 4..20),
            dt in 1e-3f64..10.0,
        ) {
            let n = nodes.len() / 2 * 2;
            let traj = Trajectory::new(0.0, dt, 2, nodes[..n].to_vec()).unwrap();
            let back = Trajectory::from_csv(&traj.to_csv()).unwrap();
            prop_assert_eq!(back.nodes_flat(), traj.nodes_flat());
            prop_assert_eq!(back.dim(), 2);
            prop_assert!((back.dt() - dt).abs() <= 1e-15 * dt.max(1.0));
        }
    }
}
