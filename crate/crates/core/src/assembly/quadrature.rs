//! Gauss–Legendre rules and tensor-product cell grids.

use crate::error::{Error, Result};
use crate::splines::{KnotVector, Span, UnivariateBasis};

pub const MAX_POINTS: usize = 16;

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact for polynomials of
/// degree `2n − 1`.
pub fn gauss_rule(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 || n > MAX_POINTS {
        return Err(Error::QuadratureOrder(n));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton on P_n from the Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Ok((nodes, weights))
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Breakpoints of several knot vectors merged into one sorted set of 1D
/// integration cells.
pub fn merged_cells(kvs: &[&KnotVector]) -> Vec<(f64, f64)> {
    let mut pts: Vec<f64> = kvs.iter().flat_map(|kv| kv.breakpoints()).collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
    pts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Tensor grid of integration cells with a Gauss rule on each.
#[derive(Debug, Clone)]
pub struct QuadGrid {
    pub cells: [Vec<(f64, f64)>; 2],
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadGrid {
    pub fn new(dir1: &[&KnotVector], dir2: &[&KnotVector], npts: usize) -> Result<Self> {
        let (nodes, weights) = gauss_rule(npts)?;
        Ok(QuadGrid {
            cells: [merged_cells(dir1), merged_cells(dir2)],
            nodes,
            weights,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.cells[0].len() * self.cells[1].len()
    }

    /// `(c₁, c₂)` of cell `c = c₁ + n₁·c₂`.
    pub fn cell_coords(&self, c: usize) -> (usize, usize) {
        (c % self.cells[0].len(), c / self.cells[0].len())
    }

    pub fn npts(&self) -> usize {
        self.nodes.len()
    }

    /// Parameter coordinates of point `q` in 1D cell `c` along `dir`.
    pub fn point(&self, dir: usize, c: usize, q: usize) -> f64 {
        let (lo, hi) = self.cells[dir][c];
        lo + self.nodes[q] * (hi - lo)
    }

    pub fn weight(&self, dir: usize, c: usize, q: usize) -> f64 {
        let (lo, hi) = self.cells[dir][c];
        self.weights[q] * (hi - lo)
    }

    /// Precomputed univariate tables of `kv` on this grid, `[cell][point]`.
    pub fn tables(
        &self,
        dir: usize,
        kv: &KnotVector,
        max_deriv: usize,
    ) -> Vec<Vec<UnivariateBasis>> {
        self.cells[dir]
            .iter()
            .enumerate()
            .map(|(c, &(lo, hi))| {
                let span = kv.find_span(0.5 * (lo + hi)).expect("cell inside [0,1]");
                (0..self.npts())
                    .map(|q| kv.eval_basis_in_span(span, self.point(dir, c, q), max_deriv))
                    .collect()
            })
            .collect()
    }

    /// Ordinal of the non-empty span of `kv` containing 1D cell `c`.
    pub fn owner_cells(&self, dir: usize, kv: &KnotVector) -> Vec<usize> {
        let spans: Vec<Span> = kv.spans();
        self.cells[dir]
            .iter()
            .map(|&(lo, hi)| {
                let mid = 0.5 * (lo + hi);
                spans
                    .iter()
                    .position(|s| s.lo <= mid && mid < s.hi)
                    .unwrap_or(spans.len() - 1)
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_rule() {
        let (x, w) = gauss_rule(1).unwrap();
        assert_eq!(x, vec![0.5]);
        assert_eq!(w, vec![1.0]);
    }

    #[test]
    fn exactness() {
        for n in 1..=MAX_POINTS {
            let (x, w) = gauss_rule(n).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            for d in 0..2 * n {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - 1.0 / (d as f64 + 1.0)).abs() < 1e-14, "n={n} d={d}");
            }
        }
        let (x, w) = gauss_rule(2).unwrap();
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(3)).sum();
        assert!((q - 0.25).abs() < 1e-16);
        let (x, w) = gauss_rule(5).unwrap();
        let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(9)).sum();
        assert!((q - 0.1).abs() < 1e-15);
    }

    #[test]
    fn out_of_range() {
        assert!(gauss_rule(0).is_err());
        assert!(gauss_rule(17).is_err());
    }

    #[test]
    fn merged_breakpoints() {
        let a = KnotVector::uniform(2, 2).unwrap();
        let b = KnotVector::uniform(3, 1).unwrap();
        let c = merged_cells(&[&a, &b]);
        assert_eq!(c.len(), 4);
        let g = QuadGrid::new(&[&a, &b], &[&a], 2).unwrap();
        assert_eq!(g.owner_cells(0, &a), vec![0, 0, 1, 1]);
    }
}
