//! Majorant terms, exact energy error and the residual indicator, with
//! per-cell contributions on the cells of the primal mesh.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::NurbsGeometry;
use crate::problems::ProblemSpec;
use crate::splines::{
    contract, BasisEval, DiscreteFunction, DiscreteVectorField, KnotVector, SplineSpace2D,
};

use super::majorant_systems::{eval_flux, FluxScratch};
use super::{dot2, inverse2, matvec2, Integrator, QPoint};

/// `B₁ = ‖A∇u_h − y‖²_{A⁻¹}` and `B₂ = ‖div y + f − b·∇u_h‖²`, totals and
/// per primal cell.
#[derive(Debug, Clone, PartialEq)]
pub struct BTerms {
    pub b1: f64,
    pub b2: f64,
    pub b1_cells: Vec<f64>,
    pub b2_cells: Vec<f64>,
}

// Integrates `K` quantities per grid cell in parallel and sums them into the
// cells of `primal`, in grid order.
fn per_primal_cell<const K: usize, S, I, F>(
    integ: &Integrator,
    primal: &SplineSpace2D,
    init: I,
    f: F,
) -> Result<[Vec<f64>; K]>
where
    I: Fn() -> S + Sync + Send,
    F: Fn(usize, &mut S) -> Result<[f64; K]> + Sync + Send,
{
    let o1 = integ.grid.owner_cells(0, primal.kv(0));
    let o2 = integ.grid.owner_cells(1, primal.kv(1));
    let n1 = primal.kv(0).n_cells();
    let ncells = n1 * primal.kv(1).n_cells();
    let vals: Vec<Result<[f64; K]>> = (0..integ.n_cells())
        .into_par_iter()
        .map_init(&init, |s, c| f(c, s))
        .collect();
    let mut out: [Vec<f64>; K] = std::array::from_fn(|_| vec![0.0; ncells]);
    for (c, v) in vals.into_iter().enumerate() {
        let v = v?;
        let (c1, c2) = integ.grid.cell_coords(c);
        let pc = o1[c1] + n1 * o2[c2];
        for k in 0..K {
            out[k][pc] += v[k];
        }
    }
    Ok(out)
}

fn kvs<'a>(spaces: &[&'a SplineSpace2D], dir: usize) -> Vec<&'a KnotVector> {
    spaces.iter().map(|s| s.kv(dir)).collect()
}

pub fn compute_b_terms(
    y: &DiscreteVectorField,
    u_h: &DiscreteFunction,
    problem: &ProblemSpec,
    npts: usize,
) -> Result<BTerms> {
    let [s1, s2] = &y.space.components;
    let us = &u_h.space;
    let sp = [s1, s2, us];
    let integ = Integrator::new(&problem.geometry, &kvs(&sp, 0), &kvs(&sp, 1), npts)?;
    let tabs = [integ.tables(s1, 1), integ.tables(s2, 1)];
    let utab = integ.tables(us, 1);
    let t = y.space.transform;
    let off = y.space.offset(1);
    let [b1c, b2c] = per_primal_cell::<2, _, _, _>(&integ, us, FluxScratch::new, |c, s| {
        integ.cell_points(c, false, &mut s.geo, &mut s.pts)?;
        let pts = std::mem::take(&mut s.pts);
        let mut acc = [0.0; 2];
        for qp in &pts {
            eval_flux(&tabs, &integ, c, qp, s, t);
            let mut yv = [0.0; 2];
            let mut dv = 0.0;
            let mut a = 0;
            for (k, b) in s.comps.iter().enumerate() {
                let base = if k == 0 { 0 } else { off };
                for l in 0..b.len() {
                    let coef = y.coefficients[base + (b.global(l))];
                    yv[0] += coef * s.ys[a][0];
                    yv[1] += coef * s.ys[a][1];
                    dv += coef * s.divs[a];
                    a += 1;
                }
            }
            utab.eval(&integ.grid, c, qp, &mut s.u);
            let gu = qp.ge.phys_grad(contract(&s.u, &u_h.coefficients).1);
            let am = (problem.a)(qp.ge.x);
            let ag = matvec2(&am, gu);
            let d = [ag[0] - yv[0], ag[1] - yv[1]];
            acc[0] += dot2(matvec2(&inverse2(am), d), d) * qp.jxw;
            let mut r = dv + (problem.f)(qp.ge.x);
            if let Some(ad) = problem.advection {
                r -= dot2(ad.b, gu);
            }
            acc[1] += r * r * qp.jxw;
        }
        s.pts = pts;
        Ok(acc)
    })?;
    Ok(BTerms {
        b1: b1c.iter().sum(),
        b2: b2c.iter().sum(),
        b1_cells: b1c,
        b2_cells: b2c,
    })
}

struct UScratch {
    geo: BasisEval,
    u: BasisEval,
    pts: Vec<QPoint>,
}

fn uscratch() -> UScratch {
    UScratch {
        geo: BasisEval::default(),
        u: BasisEval::default(),
        pts: Vec::new(),
    }
}

/// Energy norm `‖∇(u − u_h)‖_A` and its square per primal cell.
pub fn exact_energy_error(
    u_h: &DiscreteFunction,
    problem: &ProblemSpec,
    npts: usize,
) -> Result<(f64, Vec<f64>)> {
    let grad = problem.exact_grad.as_ref().ok_or(Error::ZeroExactError)?;
    let us = &u_h.space;
    let integ = Integrator::new(&problem.geometry, &[us.kv(0)], &[us.kv(1)], npts)?;
    let utab = integ.tables(us, 1);
    let [cells] = per_primal_cell::<1, _, _, _>(&integ, us, uscratch, |c, s| {
        integ.cell_points(c, false, &mut s.geo, &mut s.pts)?;
        let mut acc = 0.0;
        for qp in &s.pts {
            utab.eval(&integ.grid, c, qp, &mut s.u);
            let gu = qp.ge.phys_grad(contract(&s.u, &u_h.coefficients).1);
            let g = grad(qp.ge.x);
            let d = [g[0] - gu[0], g[1] - gu[1]];
            acc += dot2(matvec2(&(problem.a)(qp.ge.x), d), d) * qp.jxw;
        }
        Ok([acc])
    })?;
    Ok((cells.iter().sum::<f64>().sqrt(), cells))
}

/// Residual indicator `C_Ω ‖div(A∇u_h) + f − b·∇u_h‖` and the squared
/// residual per primal cell. Needs `C¹` discrete functions, so degree ≥ 2.
pub fn cheap_indicator(
    u_h: &DiscreteFunction,
    problem: &ProblemSpec,
    c_omega: f64,
    npts: usize,
) -> Result<(f64, Vec<f64>)> {
    let us = &u_h.space;
    let pmin = us.degrees().into_iter().min().unwrap_or(0);
    if pmin < 2 {
        return Err(Error::DegreeTooLow(pmin));
    }
    let integ = Integrator::new(&problem.geometry, &[us.kv(0)], &[us.kv(1)], npts)?;
    let utab = integ.tables(us, 2);
    let [cells] = per_primal_cell::<1, _, _, _>(&integ, us, uscratch, |c, s| {
        integ.cell_points(c, true, &mut s.geo, &mut s.pts)?;
        let mut acc = 0.0;
        for qp in &s.pts {
            utab.eval(&integ.grid, c, qp, &mut s.u);
            let (_, gp) = contract(&s.u, &u_h.coefficients);
            let mut h = [0.0; 3];
            for a in 0..s.u.len() {
                let cf = u_h.coefficients[s.u.global(a)];
                for k in 0..3 {
                    h[k] += cf * s.u.hess[a][k];
                }
            }
            let gu = qp.ge.phys_grad(gp);
            let hx = qp.ge.phys_hessian(h, gu);
            let x = qp.ge.x;
            let am = (problem.a)(x);
            let da = (problem.div_a)(x);
            let mut r = am[0][0] * hx[0]
                + (am[0][1] + am[1][0]) * hx[1]
                + am[1][1] * hx[2]
                + dot2(da, gu)
                + (problem.f)(x);
            if let Some(ad) = problem.advection {
                r -= dot2(ad.b, gu);
            }
            acc += r * r * qp.jxw;
        }
        Ok([acc])
    })?;
    Ok((c_omega * cells.iter().sum::<f64>().sqrt(), cells))
}

/// `∫_Ω 1`, used by tests and diagnostics.
pub fn domain_area(geom: &NurbsGeometry, npts: usize) -> Result<f64> {
    let integ = Integrator::new(geom, &[], &[], npts)?;
    let mut geo = BasisEval::default();
    let mut pts = Vec::new();
    let mut area = 0.0;
    for c in 0..integ.n_cells() {
        integ.cell_points(c, false, &mut geo, &mut pts)?;
        area += pts.iter().map(|q| q.jxw).sum::<f64>();
    }
    Ok(area)
}
