//! Stiffness matrix and load vector of the primal problem.

use crate::error::Result;
use crate::linsolve::SparseMatrix;
use crate::problems::ProblemSpec;
use crate::splines::{BasisEval, SplineSpace2D};

use super::{
    assemble_cells, dot2, matvec2, phys_grads, BlockPattern, Element, Integrator, LocalBlock,
    QPoint,
};

#[derive(Debug, Clone)]
pub struct PrimalSystem {
    pub k: SparseMatrix,
    pub f: Vec<f64>,
}

/// Streamline-diffusion parameter of a cell: extent of the mapped corners
/// along `b` divided by `2|b|`.
pub fn supg_tau(corners: &[[f64; 2]; 4], b: [f64; 2]) -> f64 {
    let nb = dot2(b, b).sqrt();
    if nb == 0.0 {
        return 0.0;
    }
    let proj = corners.map(|x| dot2(x, b) / nb);
    let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - lo) / (2.0 * nb)
}

/// Assembles `K` and `F` without boundary conditions. For
/// advection–diffusion problems the streamline-diffusion terms are added and
/// `K` is flagged nonsymmetric.
pub fn assemble_primal(
    space: &SplineSpace2D,
    problem: &ProblemSpec,
    npts: usize,
) -> Result<PrimalSystem> {
    let integ = Integrator::new(&problem.geometry, &[space.kv(0)], &[space.kv(1)], npts)?;
    let pattern = BlockPattern::new(&[space], &integ.grid);
    let adv = problem.advection;
    let second = adv.is_some_and(|a| a.kappa != 0.0);
    let tables = integ.tables(space, if second { 2 } else { 1 });

    struct Scratch {
        geo: BasisEval,
        b: BasisEval,
        pts: Vec<QPoint>,
        gx: Vec<[f64; 2]>,
        lap: Vec<f64>,
    }
    let init = || Scratch {
        geo: BasisEval::default(),
        b: BasisEval::default(),
        pts: Vec::new(),
        gx: Vec::new(),
        lap: Vec::new(),
    };

    let element = |c: usize, s: &mut Scratch| -> Result<Element> {
        integ.cell_points(c, second, &mut s.geo, &mut s.pts)?;
        let tau = match adv {
            Some(a) => {
                let mut corners = [[0.0; 2]; 4];
                for (x, xi) in corners.iter_mut().zip(integ.cell_corners(c)) {
                    *x = problem.geometry.eval_map(xi)?;
                }
                supg_tau(&corners, a.b)
            }
            None => 0.0,
        };
        let mut e: Option<Element> = None;
        for qp in &s.pts {
            tables.eval(&integ.grid, c, qp, &mut s.b);
            let el = e.get_or_insert_with(|| Element::new(vec![LocalBlock::of(0, &s.b)], 1, 1));
            let n = s.b.len();
            phys_grads(&s.b, &qp.ge, &mut s.gx);
            let x = qp.ge.x;
            let am = (problem.a)(x);
            let fx = (problem.f)(x);
            let jxw = qp.jxw;
            let (mat, vec) = (&mut el.mats[0], &mut el.vecs[0]);
            for b in 0..n {
                let agb = matvec2(&am, s.gx[b]);
                for a in 0..n {
                    mat[a * n + b] += dot2(agb, s.gx[a]) * jxw;
                }
            }
            for a in 0..n {
                vec[a] += fx * s.b.values[a] * jxw;
            }
            if let Some(ad) = adv {
                s.lap.clear();
                if second {
                    for a in 0..n {
                        s.lap.push(qp.ge.phys_laplacian(s.b.hess[a], s.gx[a]));
                    }
                } else {
                    s.lap.resize(n, 0.0);
                }
                for b in 0..n {
                    let bgb = dot2(ad.b, s.gx[b]);
                    let strong = -ad.kappa * s.lap[b] + bgb;
                    for a in 0..n {
                        let bga = dot2(ad.b, s.gx[a]);
                        mat[a * n + b] += (bgb * s.b.values[a] + tau * strong * bga) * jxw;
                    }
                }
                for a in 0..n {
                    vec[a] += tau * fx * dot2(ad.b, s.gx[a]) * jxw;
                }
            }
        }
        Ok(e.unwrap_or_default())
    };

    let (mut mats, mut vecs) = assemble_cells(
        integ.n_cells(),
        &pattern.layout,
        Some(&pattern),
        1,
        1,
        init,
        element,
    )?;
    let k = pattern.matrix(mats.pop().unwrap(), adv.is_none());
    Ok(PrimalSystem {
        k,
        f: vecs.pop().unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{get_example, ExampleId};

    #[test]
    fn stiffness_annihilates_constants() {
        let p = get_example(ExampleId::E4a).unwrap();
        let [k1, k2] = p.geometry.knot_vectors().clone();
        let space = p.geometry.space_on(k1, k2);
        let sys = assemble_primal(&space, &p, 4).unwrap();
        // B/W with the geometry weights as coefficients is the constant 1
        let ones = p.geometry.weight_function().weights().to_vec();
        let r = sys.k.matvec(&ones);
        assert!(r.iter().all(|v| v.abs() < 1e-11), "{r:?}");
        assert!(sys.k.symmetry_defect() < 1e-13);
    }

    #[test]
    fn tau_of_axis_aligned_cell() {
        let c = [[0.0, 0.0], [0.5, 0.0], [0.0, 0.5], [0.5, 0.5]];
        assert!((supg_tau(&c, [2.0, 0.0]) - 0.125).abs() < 1e-15);
        assert_eq!(supg_tau(&c, [0.0, 0.0]), 0.0);
    }
}
