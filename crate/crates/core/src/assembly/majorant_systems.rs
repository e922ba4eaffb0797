//! Linear systems of the flux minimisation.

use crate::error::Result;
use crate::geometry::{mapped_vector, GeometryEval};
use crate::linsolve::SparseMatrix;
use crate::problems::ProblemSpec;
use crate::splines::{contract, BasisEval, DiscreteFunction, VectorSpace, VectorTransform};

use super::{
    assemble_cells, dot2, inverse2, matvec2, BlockPattern, DofLayout, Element, Integrator,
    LocalBlock, QPoint, SpaceTables,
};

/// `L₁ = (A⁻¹ y_b, y_a)`, `L₂ = (div y_b, div y_a)`, `r₁ = (∇u_h, y_a)` and
/// `r₂ = (f − b·∇u_h, div y_a)`. Both matrices share one sparsity pattern.
#[derive(Debug, Clone)]
pub struct MajorantSystems {
    pub l1: SparseMatrix,
    pub l2: SparseMatrix,
    pub r1: Vec<f64>,
    pub r2: Vec<f64>,
}

/// Physical values and divergences of all local flux basis functions, both
/// components concatenated.
pub fn flux_basis_fields(
    comps: &[BasisEval; 2],
    ge: &GeometryEval,
    transform: VectorTransform,
    ys: &mut Vec<[f64; 2]>,
    divs: &mut Vec<f64>,
) {
    ys.clear();
    divs.clear();
    for (k, b) in comps.iter().enumerate() {
        for a in 0..b.len() {
            let mut yh = [0.0; 2];
            yh[k] = b.values[a];
            let mut p = [[0.0; 2]; 2];
            p[k] = b.grads[a];
            let (y, d) = mapped_vector(yh, p, ge, transform);
            ys.push(y);
            divs.push(d);
        }
    }
}

pub(crate) struct FluxScratch {
    pub geo: BasisEval,
    pub comps: [BasisEval; 2],
    pub u: BasisEval,
    pub pts: Vec<QPoint>,
    pub ys: Vec<[f64; 2]>,
    pub divs: Vec<f64>,
}

impl FluxScratch {
    pub fn new() -> Self {
        FluxScratch {
            geo: BasisEval::default(),
            comps: [BasisEval::default(), BasisEval::default()],
            u: BasisEval::default(),
            pts: Vec::new(),
            ys: Vec::new(),
            divs: Vec::new(),
        }
    }
}

pub(crate) fn eval_flux(
    tabs: &[SpaceTables; 2],
    integ: &Integrator,
    c: usize,
    qp: &QPoint,
    s: &mut FluxScratch,
    t: VectorTransform,
) {
    for (k, tab) in tabs.iter().enumerate() {
        tab.eval(&integ.grid, c, qp, &mut s.comps[k]);
    }
    flux_basis_fields(&s.comps, &qp.ge, t, &mut s.ys, &mut s.divs);
}

pub fn assemble_majorant_systems(
    yspace: &VectorSpace,
    problem: &ProblemSpec,
    u_h: &DiscreteFunction,
    npts_mat: usize,
    npts_rhs: usize,
) -> Result<MajorantSystems> {
    let [s1, s2] = &yspace.components;
    let t = yspace.transform;
    let geom = &problem.geometry;

    // matrices on the cells shared by the flux and u_h meshes
    let us = &u_h.space;
    let integ = Integrator::new(
        geom,
        &[s1.kv(0), s2.kv(0), us.kv(0)],
        &[s1.kv(1), s2.kv(1), us.kv(1)],
        npts_mat,
    )?;
    let pattern = BlockPattern::new(&[s1, s2], &integ.grid);
    let tabs = [integ.tables(s1, 1), integ.tables(s2, 1)];
    let element = |c: usize, s: &mut FluxScratch| -> Result<Element> {
        integ.cell_points(c, false, &mut s.geo, &mut s.pts)?;
        let pts = std::mem::take(&mut s.pts);
        let mut e: Option<Element> = None;
        for qp in &pts {
            eval_flux(&tabs, &integ, c, qp, s, t);
            let el = e.get_or_insert_with(|| {
                Element::new(
                    vec![
                        LocalBlock::of(0, &s.comps[0]),
                        LocalBlock::of(1, &s.comps[1]),
                    ],
                    2,
                    0,
                )
            });
            let n = s.ys.len();
            let ainv = inverse2((problem.a)(qp.ge.x));
            let jxw = qp.jxw;
            for b in 0..n {
                let ay = matvec2(&ainv, s.ys[b]);
                let db = s.divs[b] * jxw;
                for a in 0..n {
                    el.mats[0][a * n + b] += dot2(ay, s.ys[a]) * jxw;
                    el.mats[1][a * n + b] += db * s.divs[a];
                }
            }
        }
        s.pts = pts;
        Ok(e.unwrap_or_default())
    };
    let (mut mats, _) = assemble_cells(
        integ.n_cells(),
        &pattern.layout,
        Some(&pattern),
        2,
        0,
        FluxScratch::new,
        element,
    )?;
    let l2 = pattern.matrix(mats.pop().unwrap(), true);
    let l1 = pattern.matrix(mats.pop().unwrap(), true);

    let integ = Integrator::new(
        geom,
        &[s1.kv(0), s2.kv(0), us.kv(0)],
        &[s1.kv(1), s2.kv(1), us.kv(1)],
        npts_rhs,
    )?;
    let layout = DofLayout::new(&[s1, s2]);
    let tabs = [integ.tables(s1, 1), integ.tables(s2, 1)];
    let utab = integ.tables(us, 1);
    let adv = problem.advection;
    let element = |c: usize, s: &mut FluxScratch| -> Result<Element> {
        integ.cell_points(c, false, &mut s.geo, &mut s.pts)?;
        let pts = std::mem::take(&mut s.pts);
        let mut e: Option<Element> = None;
        for qp in &pts {
            eval_flux(&tabs, &integ, c, qp, s, t);
            utab.eval(&integ.grid, c, qp, &mut s.u);
            let gu = qp.ge.phys_grad(contract(&s.u, &u_h.coefficients).1);
            let el = e.get_or_insert_with(|| {
                Element::new(
                    vec![
                        LocalBlock::of(0, &s.comps[0]),
                        LocalBlock::of(1, &s.comps[1]),
                    ],
                    0,
                    2,
                )
            });
            let mut src = (problem.f)(qp.ge.x);
            if let Some(ad) = adv {
                src -= dot2(ad.b, gu);
            }
            for a in 0..s.ys.len() {
                el.vecs[0][a] += dot2(gu, s.ys[a]) * qp.jxw;
                el.vecs[1][a] += src * s.divs[a] * qp.jxw;
            }
        }
        s.pts = pts;
        Ok(e.unwrap_or_default())
    };
    let (_, mut vecs) = assemble_cells(
        integ.n_cells(),
        &layout,
        None,
        0,
        2,
        FluxScratch::new,
        element,
    )?;
    let r2 = vecs.pop().unwrap();
    let r1 = vecs.pop().unwrap();
    Ok(MajorantSystems { l1, l2, r1, r2 })
}
