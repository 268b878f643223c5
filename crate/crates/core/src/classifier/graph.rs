use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_maps::Sign;
use crate::orbit_engine::IFSystem;

/// Fixed points of different maps closer than this are identified.
pub const CANONICAL_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// `τ_s(r) > r` on the interval.
    Up,
    /// `τ_s(r) < r` on the interval.
    Down,
}

/// An interval `(a_{s,m}, a_{s,m+1})` between consecutive fixed points of `τ_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntervalVertex {
    pub id: usize,
    pub map: usize,
    pub lo: f64,
    pub hi: f64,
    pub orientation: Orientation,
}

impl IntervalVertex {
    pub fn label(&self) -> String {
        let tag = match self.orientation {
            Orientation::Up => "up",
            Orientation::Down => "down",
        };
        format!("{tag}[{}]({}, {})", self.map, self.lo, self.hi)
    }
}

/// Sorted representatives of all fixed points of all maps, with clusters
/// closer than [`CANONICAL_RADIUS`] merged and 0, 1 kept exact.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalPoints(pub Vec<f64>);

impl CanonicalPoints {
    pub fn of(ifs: &IFSystem) -> Result<Self> {
        let mut all = Vec::new();
        for m in ifs.maps() {
            all.extend(m.fixed_point_set()?.values());
        }
        all.sort_by(f64::total_cmp);
        let mut reps: Vec<Vec<f64>> = Vec::new();
        for x in all {
            match reps.last_mut() {
                Some(c) if x - c[c.len() - 1] <= CANONICAL_RADIUS => c.push(x),
                _ => reps.push(vec![x]),
            }
        }
        Ok(CanonicalPoints(
            reps.into_iter()
                .map(|c| {
                    if c.contains(&0.0) {
                        0.0
                    } else if c.contains(&1.0) {
                        1.0
                    } else {
                        c.iter().sum::<f64>() / c.len() as f64
                    }
                })
                .collect(),
        ))
    }

    /// Representative for a fixed point `x` of some map.
    pub fn canon(&self, x: f64) -> f64 {
        self.0
            .iter()
            .copied()
            .min_by(|a, b| (a - x).abs().total_cmp(&(b - x).abs()))
            .filter(|r| (r - x).abs() <= 2.0 * CANONICAL_RADIUS)
            .unwrap_or(x)
    }

    /// Points in `(0, 1)` fixed by every map.
    pub fn common_interior(&self, ifs: &IFSystem) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for &x in &self.0 {
            if x <= 0.0 || x >= 1.0 {
                continue;
            }
            let mut all = true;
            for m in ifs.maps() {
                if !m.fixed_point_set()?.contains(x, 2.0 * CANONICAL_RADIUS) {
                    all = false;
                }
            }
            if all {
                out.push(x);
            }
        }
        Ok(out)
    }
}

/// One vertex per pair of consecutive fixed points of each map.
pub fn build_vertices(ifs: &IFSystem) -> Result<Vec<IntervalVertex>> {
    let canon = CanonicalPoints::of(ifs)?;
    let mut out = Vec::new();
    for (s, m) in ifs.maps().iter().enumerate() {
        for gap in &m.fixed_point_set()?.gaps {
            let (lo, hi) = (canon.canon(gap.lo), canon.canon(gap.hi));
            let orientation = match gap.sign {
                Sign::Up => Orientation::Up,
                Sign::Down => Orientation::Down,
            };
            let mid = 0.5 * (gap.lo + gap.hi);
            let g = m.apply(mid) - mid;
            let agrees = match orientation {
                Orientation::Up => g >= 0.0,
                Orientation::Down => g <= 0.0,
            };
            if !agrees {
                return Err(Error::Inconsistent(format!(
                    "map {s}: orientation of ({lo}, {hi}) disagrees with the midpoint sign"
                )));
            }
            out.push(IntervalVertex {
                id: out.len(),
                map: s,
                lo,
                hi,
                orientation,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// `G_d`: edges leave Down vertices.
    Down,
    /// `G_u`: edges leave Up vertices.
    Up,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VertexGraph {
    pub direction: Direction,
    pub vertices: Vec<IntervalVertex>,
    pub edges: Vec<(usize, usize)>,
}

/// Builds `G_d` or `G_u` combinatorially from the interval endpoints.
///
/// `G_d`: a Down vertex `(a, b)` of map `s` points at a vertex of another map
/// whose right end lies strictly inside `(a, b)`. `G_u`: an Up vertex points
/// at a vertex whose left end lies strictly inside.
pub fn build_graph(vertices: &[IntervalVertex], direction: Direction) -> Result<VertexGraph> {
    let mut edges = Vec::new();
    for v in vertices {
        let emits = matches!(
            (direction, v.orientation),
            (Direction::Down, Orientation::Down) | (Direction::Up, Orientation::Up)
        );
        if !emits {
            continue;
        }
        for w in vertices {
            let probe = match direction {
                Direction::Down => w.hi,
                Direction::Up => w.lo,
            };
            if v.lo < probe && probe < v.hi {
                edges.push((v.id, w.id));
            }
        }
    }
    let g = VertexGraph {
        direction,
        vertices: vertices.to_vec(),
        edges,
    };
    g.check_invariants()?;
    Ok(g)
}

impl VertexGraph {
    pub fn out_degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == id).count()
    }

    pub fn in_degree(&self, id: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == id).count()
    }

    pub fn is_source(&self, id: usize) -> bool {
        self.in_degree(id) == 0
    }

    pub fn is_sink(&self, id: usize) -> bool {
        self.out_degree(id) == 0
    }

    pub fn sources(&self) -> impl Iterator<Item = &IntervalVertex> {
        self.vertices.iter().filter(|v| self.is_source(v.id))
    }

    /// Vertices of the wrong orientation are sinks, and no edge joins two
    /// intervals of the same map.
    pub fn check_invariants(&self) -> Result<()> {
        let passive = match self.direction {
            Direction::Down => Orientation::Up,
            Direction::Up => Orientation::Down,
        };
        for v in &self.vertices {
            if v.orientation == passive && !self.is_sink(v.id) {
                return Err(Error::Inconsistent(format!(
                    "{} has outgoing edges in the {:?} graph",
                    v.label(),
                    self.direction
                )));
            }
        }
        for &(a, b) in &self.edges {
            if self.vertices[a].map == self.vertices[b].map {
                return Err(Error::Inconsistent(format!(
                    "edge joins two intervals of map {}",
                    self.vertices[a].map
                )));
            }
        }
        Ok(())
    }

    /// Plain edge list: `#` comment lines describe the vertices, then one
    /// `source target` pair of vertex ids per line.
    pub fn to_edge_list(&self) -> String {
        let name = match self.direction {
            Direction::Down => "G_d",
            Direction::Up => "G_u",
        };
        let mut out = format!("# {name}\n");
        for v in &self.vertices {
            out.push_str(&format!("# {} {}\n", v.id, v.label()));
        }
        for (a, b) in &self.edges {
            out.push_str(&format!("{a} {b}\n"));
        }
        out
    }
}
