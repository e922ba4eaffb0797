//! Quadrature, sparse patterns and the Galerkin / majorant assembly
//! routines.
//!
//! Element contributions are computed per cell in parallel and scattered in
//! a fixed cell order, so assembled values do not depend on the thread count.

pub mod dirichlet;
pub mod majorant_systems;
pub mod norms;
pub mod primal;
pub mod quadrature;

use rayon::prelude::*;

use crate::error::Result;
use crate::geometry::{GeometryEval, NurbsGeometry};
use crate::linsolve::SparseMatrix;
use crate::splines::{BasisEval, KnotVector, SplineSpace2D, UnivariateBasis, WeightEval};

pub use dirichlet::{apply_dirichlet, boundary_coefficients};
pub use majorant_systems::{assemble_majorant_systems, MajorantSystems};
pub use norms::{cheap_indicator, compute_b_terms, exact_energy_error, BTerms};
pub use primal::{assemble_primal, PrimalSystem};
pub use quadrature::{gauss_rule, QuadGrid};

/// Geometry data at one quadrature point.
#[derive(Debug, Clone, Copy)]
pub struct QPoint {
    pub xi: [f64; 2],
    pub ge: GeometryEval,
    pub w: WeightEval,
    /// Gauss weight times `|det J|` times the parameter cell size.
    pub jxw: f64,
    pub q: [usize; 2],
}

/// Quadrature grid bound to a geometry, with the geometry's univariate
/// tables cached.
pub struct Integrator<'g> {
    pub geom: &'g NurbsGeometry,
    pub grid: QuadGrid,
    geo_tab: [Vec<Vec<UnivariateBasis>>; 2],
}

impl<'g> Integrator<'g> {
    /// Cells are the merged breakpoints of the listed knot vectors and the
    /// geometry's own knots.
    pub fn new(
        geom: &'g NurbsGeometry,
        dir1: &[&KnotVector],
        dir2: &[&KnotVector],
        npts: usize,
    ) -> Result<Self> {
        let gk = geom.knot_vectors();
        let mut d1 = dir1.to_vec();
        d1.push(&gk[0]);
        let mut d2 = dir2.to_vec();
        d2.push(&gk[1]);
        let grid = QuadGrid::new(&d1, &d2, npts)?;
        let geo_tab = [grid.tables(0, &gk[0], 2), grid.tables(1, &gk[1], 2)];
        Ok(Integrator {
            geom,
            grid,
            geo_tab,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.grid.n_cells()
    }

    /// Fills `out` with the quadrature points of cell `c`. Second map
    /// derivatives are included when `second` is set.
    pub fn cell_points(
        &self,
        c: usize,
        second: bool,
        buf: &mut BasisEval,
        out: &mut Vec<QPoint>,
    ) -> Result<()> {
        let (c1, c2) = self.grid.cell_coords(c);
        let n = self.grid.npts();
        out.clear();
        for q2 in 0..n {
            for q1 in 0..n {
                let b1 = &self.geo_tab[0][c1][q1];
                let b2 = &self.geo_tab[1][c2][q2];
                let w = self.geom.weight_function().eval_tables(b1, b2)?;
                self.geom
                    .basis()
                    .combine(b1, b2, if second { 2 } else { 1 }, Some(&w), buf);
                let xi = [self.grid.point(0, c1, q1), self.grid.point(1, c2, q2)];
                let ge = self.geom.from_basis(buf, xi)?;
                let jxw = ge.det.abs() * self.grid.weight(0, c1, q1) * self.grid.weight(1, c2, q2);
                out.push(QPoint {
                    xi,
                    ge,
                    w,
                    jxw,
                    q: [q1, q2],
                });
            }
        }
        Ok(())
    }

    pub fn tables<'s>(&self, space: &'s SplineSpace2D, max_deriv: usize) -> SpaceTables<'s> {
        SpaceTables {
            space,
            tab: [
                self.grid.tables(0, space.kv(0), max_deriv),
                self.grid.tables(1, space.kv(1), max_deriv),
            ],
            max_deriv,
        }
    }

    /// Parameter corners of cell `c`.
    pub fn cell_corners(&self, c: usize) -> [[f64; 2]; 4] {
        let (c1, c2) = self.grid.cell_coords(c);
        let (a0, a1) = self.grid.cells[0][c1];
        let (b0, b1) = self.grid.cells[1][c2];
        [[a0, b0], [a1, b0], [a0, b1], [a1, b1]]
    }
}

/// A scalar space's univariate tables on an integration grid.
pub struct SpaceTables<'s> {
    pub space: &'s SplineSpace2D,
    tab: [Vec<Vec<UnivariateBasis>>; 2],
    max_deriv: usize,
}

impl SpaceTables<'_> {
    pub fn eval(&self, grid: &QuadGrid, c: usize, qp: &QPoint, out: &mut BasisEval) {
        let (c1, c2) = grid.cell_coords(c);
        let b1 = &self.tab[0][c1][qp.q[0]];
        let b2 = &self.tab[1][c2][qp.q[1]];
        self.space.combine(b1, b2, self.max_deriv, Some(&qp.w), out);
    }
}

/// Physical gradients of all local functions.
pub fn phys_grads(b: &BasisEval, ge: &GeometryEval, out: &mut Vec<[f64; 2]>) {
    out.clear();
    out.extend(b.grads.iter().map(|&g| ge.phys_grad(g)));
}

pub fn inverse2(a: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ]
}

#[inline]
pub fn matvec2(a: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        a[0][0] * v[0] + a[0][1] * v[1],
        a[1][0] * v[0] + a[1][1] * v[1],
    ]
}

#[inline]
pub fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Dof numbering of a list of scalar spaces stacked as blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct DofLayout {
    n1: Vec<usize>,
    offsets: Vec<usize>,
}

impl DofLayout {
    pub fn new(spaces: &[&SplineSpace2D]) -> Self {
        let mut offsets = vec![0];
        for s in spaces {
            offsets.push(offsets.last().unwrap() + s.dof_count());
        }
        DofLayout {
            n1: spaces.iter().map(|s| s.n(0)).collect(),
            offsets,
        }
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    #[inline]
    pub fn global(&self, block: usize, i: usize, j: usize) -> usize {
        self.offsets[block] + i + self.n1[block] * j
    }
}

// For each basis function `i` of one knot vector, the contiguous range of
// functions of another that share a cell with it.
#[derive(Debug, Clone)]
struct Coupling1D {
    lo: Vec<usize>,
    len: Vec<usize>,
}

fn coupling_1d(a: &KnotVector, b: &KnotVector, cells: &[(f64, f64)]) -> Coupling1D {
    let n = a.n_basis();
    let mut lo = vec![usize::MAX; n];
    let mut hi = vec![0usize; n];
    for &(c0, c1) in cells {
        let mid = 0.5 * (c0 + c1);
        let sa = a.find_span(mid).expect("cell inside [0,1]");
        let sb = b.find_span(mid).expect("cell inside [0,1]");
        let (b_lo, b_hi) = (sb - b.degree(), sb);
        for i in sa - a.degree()..=sa {
            lo[i] = lo[i].min(b_lo);
            hi[i] = hi[i].max(b_hi);
        }
    }
    let len = lo
        .iter()
        .zip(&hi)
        .map(|(&l, &h)| if l == usize::MAX { 0 } else { h + 1 - l })
        .collect();
    let lo = lo
        .into_iter()
        .map(|l| if l == usize::MAX { 0 } else { l })
        .collect();
    Coupling1D { lo, len }
}

/// CSR sparsity of a block tensor-product operator, with arithmetic entry
/// lookup.
#[derive(Debug, Clone)]
pub struct BlockPattern {
    pub layout: DofLayout,
    nblocks: usize,
    coupling: Vec<[Coupling1D; 2]>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
}

impl BlockPattern {
    pub fn new(spaces: &[&SplineSpace2D], grid: &QuadGrid) -> Self {
        let layout = DofLayout::new(spaces);
        let nb = spaces.len();
        let mut coupling = Vec::with_capacity(nb * nb);
        for a in spaces {
            for b in spaces {
                coupling.push([
                    coupling_1d(a.kv(0), b.kv(0), &grid.cells[0]),
                    coupling_1d(a.kv(1), b.kv(1), &grid.cells[1]),
                ]);
            }
        }
        let mut row_ptr = vec![0usize];
        let mut col_idx = Vec::new();
        for (ai, a) in spaces.iter().enumerate() {
            for j in 0..a.n(1) {
                for i in 0..a.n(0) {
                    for bi in 0..nb {
                        let [c1, c2] = &coupling[ai * nb + bi];
                        for l in c2.lo[j]..c2.lo[j] + c2.len[j] {
                            for k in c1.lo[i]..c1.lo[i] + c1.len[i] {
                                col_idx.push(layout.global(bi, k, l));
                            }
                        }
                    }
                    row_ptr.push(col_idx.len());
                }
            }
        }
        BlockPattern {
            layout,
            nblocks: nb,
            coupling,
            row_ptr,
            col_idx,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    fn block_len(&self, a: usize, b: usize, i: usize, j: usize) -> usize {
        let [c1, c2] = &self.coupling[a * self.nblocks + b];
        c1.len[i] * c2.len[j]
    }

    #[inline]
    fn row_start(&self, a: usize, i: usize, j: usize, b: usize) -> usize {
        let row = self.layout.global(a, i, j);
        let mut s = self.row_ptr[row];
        for bb in 0..b {
            s += self.block_len(a, bb, i, j);
        }
        s
    }

    pub fn matrix(&self, values: Vec<f64>, symmetric: bool) -> SparseMatrix {
        SparseMatrix::new(
            self.layout.dim(),
            self.row_ptr.clone(),
            self.col_idx.clone(),
            values,
            symmetric,
        )
        .expect("pattern is a valid CSR structure")
    }
}

/// Local functions of one block on one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalBlock {
    pub block: usize,
    pub first: [usize; 2],
    pub nloc: [usize; 2],
}

impl LocalBlock {
    pub fn of(block: usize, b: &BasisEval) -> Self {
        LocalBlock {
            block,
            first: b.first,
            nloc: b.nloc,
        }
    }

    pub fn len(&self) -> usize {
        self.nloc[0] * self.nloc[1]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    fn ij(&self, a: usize) -> (usize, usize) {
        (
            self.first[0] + a % self.nloc[0],
            self.first[1] + a / self.nloc[0],
        )
    }
}

/// Dense element matrices (row-major over the concatenated local blocks) and
/// element vectors.
#[derive(Debug, Clone, Default)]
pub struct Element {
    pub blocks: Vec<LocalBlock>,
    pub mats: Vec<Vec<f64>>,
    pub vecs: Vec<Vec<f64>>,
}

impl Element {
    pub fn new(blocks: Vec<LocalBlock>, nmats: usize, nvecs: usize) -> Self {
        let n: usize = blocks.iter().map(LocalBlock::len).sum();
        Element {
            blocks,
            mats: vec![vec![0.0; n * n]; nmats],
            vecs: vec![vec![0.0; n]; nvecs],
        }
    }

    pub fn size(&self) -> usize {
        self.blocks.iter().map(LocalBlock::len).sum()
    }
}

const CHUNK: usize = 512;

/// Computes elements cell by cell in parallel and scatters them in cell
/// order. Returns `nmats` value arrays on `pattern` and `nvecs` vectors.
pub fn assemble_cells<S, I, F>(
    n_cells: usize,
    layout: &DofLayout,
    pattern: Option<&BlockPattern>,
    nmats: usize,
    nvecs: usize,
    init: I,
    element: F,
) -> Result<(Vec<Vec<f64>>, Vec<Vec<f64>>)>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(usize, &mut S) -> Result<Element> + Sync + Send,
{
    let nnz = pattern.map_or(0, BlockPattern::nnz);
    let mut mats = vec![vec![0.0; nnz]; nmats];
    let mut vecs = vec![vec![0.0; layout.dim()]; nvecs];
    let mut start = 0;
    while start < n_cells {
        let end = (start + CHUNK).min(n_cells);
        let elements: Vec<Result<Element>> = (start..end)
            .into_par_iter()
            .map_init(&init, |s, c| element(c, s))
            .collect();
        for e in elements {
            let e = e?;
            scatter(&e, layout, pattern, &mut mats, &mut vecs);
        }
        start = end;
    }
    Ok((mats, vecs))
}

fn scatter(
    e: &Element,
    layout: &DofLayout,
    pattern: Option<&BlockPattern>,
    mats: &mut [Vec<f64>],
    vecs: &mut [Vec<f64>],
) {
    let n = e.size();
    let mut ro = 0;
    for rb in &e.blocks {
        for r in 0..rb.len() {
            let (i, j) = rb.ij(r);
            let row = ro + r;
            for (v, ev) in vecs.iter_mut().zip(&e.vecs) {
                v[layout.global(rb.block, i, j)] += ev[row];
            }
            if let Some(p) = pattern {
                let mut co = 0;
                for cb in &e.blocks {
                    let start = p.row_start(rb.block, i, j, cb.block);
                    let [c1, c2] = &p.coupling[rb.block * p.nblocks + cb.block];
                    let (lo1, len1, lo2) = (c1.lo[i], c1.len[i], c2.lo[j]);
                    for s in 0..cb.len() {
                        let (k, l) = cb.ij(s);
                        let pos = start + (l - lo2) * len1 + (k - lo1);
                        for (m, em) in mats.iter_mut().zip(&e.mats) {
                            m[pos] += em[row * n + co + s];
                        }
                    }
                    co += cb.len();
                }
            }
        }
        ro += rb.len();
    }
}
