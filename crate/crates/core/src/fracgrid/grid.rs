use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Description of a node set inside the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionSpec {
    /// Nodes whose coordinates lie in the open box `lo < x < hi`, one entry per axis.
    Interval { lo: Vec<f64>, hi: Vec<f64> },
    /// Half-open index ranges, one per axis.
    IndexRange { start: Vec<usize>, end: Vec<usize> },
    /// The first `count` node columns along the first axis.
    LeftEdge { count: usize },
    /// The last `count` node columns along the first axis.
    RightEdge { count: usize },
}

/// Truncated box `[-L, L]^d` with interior nodes only (homogeneous Dirichlet on the box boundary).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    half_width: f64,
    n: usize,
    h: f64,
    omega: Vec<usize>,
    omega_e: Vec<usize>,
    w1: Vec<usize>,
    w2: Vec<usize>,
    in_omega: Vec<bool>,
}

impl Grid {
    pub fn new(
        dim: usize,
        half_width: f64,
        n: usize,
        omega: &RegionSpec,
        w1: &RegionSpec,
        w2: &RegionSpec,
    ) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not supported")));
        }
        if !(half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be positive"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!(
                "need at least 8 nodes per axis, got {n}"
            )));
        }
        let h = 2.0 * half_width / (n + 1) as f64;
        let mut grid = Grid {
            dim,
            half_width,
            n,
            h,
            omega: Vec::new(),
            omega_e: Vec::new(),
            w1: Vec::new(),
            w2: Vec::new(),
            in_omega: vec![false; n.pow(dim as u32)],
        };

        let (lo, hi) = grid.axis_ranges(omega, "omega")?;
        if lo.contains(&0) || hi.iter().any(|&b| b >= n) {
            return Err(Error::InvalidGrid(
                "omega must lie strictly inside the box".into(),
            ));
        }
        grid.omega = grid.collect(&lo, &hi);
        if grid.omega.is_empty() {
            return Err(Error::EmptySet("omega"));
        }
        for &i in &grid.omega {
            grid.in_omega[i] = true;
        }
        grid.omega_e = (0..grid.len()).filter(|&i| !grid.in_omega[i]).collect();
        if grid.omega_e.is_empty() {
            return Err(Error::EmptySet("omega_e"));
        }
        grid.w1 = grid.window(w1, "w1")?;
        grid.w2 = grid.window(w2, "w2")?;
        Ok(grid)
    }

    /// One-dimensional grid with Ω = (-1, 1) and windows made of the `window` outermost nodes.
    pub fn interval(half_width: f64, n: usize, window: usize) -> Result<Self> {
        Self::new(
            1,
            half_width,
            n,
            &RegionSpec::Interval {
                lo: vec![-1.0],
                hi: vec![1.0],
            },
            &RegionSpec::LeftEdge { count: window },
            &RegionSpec::RightEdge { count: window },
        )
    }

    fn window(&self, spec: &RegionSpec, name: &'static str) -> Result<Vec<usize>> {
        let (lo, hi) = self.axis_ranges(spec, name)?;
        let nodes = self.collect(&lo, &hi);
        if nodes.is_empty() {
            return Err(Error::EmptySet(name));
        }
        if nodes.iter().any(|&i| self.in_omega[i]) {
            return Err(Error::Overlap(name));
        }
        Ok(nodes)
    }

    fn axis_ranges(
        &self,
        spec: &RegionSpec,
        name: &'static str,
    ) -> Result<(Vec<usize>, Vec<usize>)> {
        let d = self.dim;
        let n = self.n;
        let check_len = |len: usize| {
            if len != d {
                Err(Error::InvalidGrid(format!(
                    "{name}: expected {d} axis entries, got {len}"
                )))
            } else {
                Ok(())
            }
        };
        match spec {
            RegionSpec::Interval { lo, hi } => {
                check_len(lo.len())?;
                check_len(hi.len())?;
                let mut a = Vec::with_capacity(d);
                let mut b = Vec::with_capacity(d);
                for axis in 0..d {
                    let inside: Vec<usize> = (0..n)
                        .filter(|&i| {
                            let x = self.coord_1d(i);
                            x > lo[axis] && x < hi[axis]
                        })
                        .collect();
                    match (inside.first(), inside.last()) {
                        (Some(&first), Some(&last)) => {
                            a.push(first);
                            b.push(last + 1);
                        }
                        _ => return Err(Error::EmptySet(name)),
                    }
                }
                Ok((a, b))
            }
            RegionSpec::IndexRange { start, end } => {
                check_len(start.len())?;
                check_len(end.len())?;
                if start.iter().zip(end).any(|(s, e)| s >= e || *e > n) {
                    return Err(Error::InvalidGrid(format!("{name}: bad index range")));
                }
                Ok((start.clone(), end.clone()))
            }
            RegionSpec::LeftEdge { count } => {
                let count = (*count).min(n);
                let mut a = vec![0; d];
                let mut b = vec![n; d];
                a[0] = 0;
                b[0] = count;
                Ok((a, b))
            }
            RegionSpec::RightEdge { count } => {
                let count = (*count).min(n);
                let mut a = vec![0; d];
                let b = vec![n; d];
                a[0] = n - count;
                Ok((a, b))
            }
        }
    }

    fn collect(&self, lo: &[usize], hi: &[usize]) -> Vec<usize> {
        if self.dim == 1 {
            (lo[0]..hi[0]).collect()
        } else {
            let mut out = Vec::new();
            for j in lo[1]..hi[1] {
                for i in lo[0]..hi[0] {
                    out.push(j * self.n + i);
                }
            }
            out.sort_unstable();
            out
        }
    }

    fn coord_1d(&self, i: usize) -> f64 {
        -self.half_width + (i + 1) as f64 * self.h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Cell measure `h^d`.
    pub fn cell(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.in_omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.in_omega.is_empty()
    }

    pub fn omega(&self) -> &[usize] {
        &self.omega
    }

    pub fn omega_e(&self) -> &[usize] {
        &self.omega_e
    }

    pub fn w1(&self) -> &[usize] {
        &self.w1
    }

    pub fn w2(&self) -> &[usize] {
        &self.w2
    }

    pub fn in_omega(&self, node: usize) -> bool {
        self.in_omega[node]
    }

    /// Coordinates of a node, one entry per axis.
    pub fn coords(&self, node: usize) -> Vec<f64> {
        if self.dim == 1 {
            vec![self.coord_1d(node)]
        } else {
            vec![self.coord_1d(node % self.n), self.coord_1d(node / self.n)]
        }
    }

    /// Bounding box of Ω in coordinates: (lo, hi) per axis, spanning the outermost nodes.
    pub fn omega_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        bounds(self, &self.omega)
    }

    pub fn window_bounds(&self, nodes: &[usize]) -> (Vec<f64>, Vec<f64>) {
        bounds(self, nodes)
    }
}

fn bounds(grid: &Grid, nodes: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let mut lo = vec![f64::INFINITY; grid.dim];
    let mut hi = vec![f64::NEG_INFINITY; grid.dim];
    for &node in nodes {
        for (axis, x) in grid.coords(node).into_iter().enumerate() {
            lo[axis] = lo[axis].min(x);
            hi[axis] = hi[axis].max(x);
        }
    }
    (lo, hi)
}
