//! Dirichlet data: boundary coefficients by edge-wise L² projection and
//! symmetric elimination.

use std::collections::BTreeMap;

use crate::error::Result;
use crate::geometry::NurbsGeometry;
use crate::linsolve::{solve_spd, SparseMatrix};
use crate::problems::ScalarFn;
use crate::splines::SplineSpace2D;

use super::quadrature::{gauss_rule, merged_cells};

/// Boundary dofs and their values, sorted by dof index. Corner values are
/// interpolated, the remaining edge values come from a 1D projection
/// weighted by arclength.
pub fn boundary_coefficients(
    space: &SplineSpace2D,
    geom: &NurbsGeometry,
    u_d: &ScalarFn,
    npts: usize,
) -> Result<Vec<(usize, f64)>> {
    let weight = |xi: [f64; 2]| -> Result<f64> {
        Ok(match space.weight_function() {
            Some(w) => w.eval(xi)?.value,
            None => 1.0,
        })
    };
    let mut out = BTreeMap::new();
    let (nodes, wts) = gauss_rule(npts)?;
    // (direction along the edge, fixed parameter value)
    for (d, fixed) in [(0usize, 0.0f64), (0, 1.0), (1, 0.0), (1, 1.0)] {
        let kv = space.kv(d);
        let n = kv.n_basis();
        let other = 1 - d;
        let fixed_idx = if fixed == 0.0 { 0 } else { space.n(other) - 1 };
        let dof = |i: usize| {
            if d == 0 {
                space.dof_index(i, fixed_idx)
            } else {
                space.dof_index(fixed_idx, i)
            }
        };
        let at = |s: f64| if d == 0 { [s, fixed] } else { [fixed, s] };

        let c0 = u_d(geom.eval_map(at(0.0))?) * weight(at(0.0))?;
        let c1 = u_d(geom.eval_map(at(1.0))?) * weight(at(1.0))?;
        let mut coef = vec![0.0; n];
        coef[0] = c0;
        coef[n - 1] = c1;
        if n > 2 {
            let m = n - 2;
            let mut trip = Vec::new();
            let mut rhs = vec![0.0; m];
            for (lo, hi) in merged_cells(&[kv, &geom.knot_vectors()[d]]) {
                let span = kv.find_span(0.5 * (lo + hi))?;
                for (x, w) in nodes.iter().zip(&wts) {
                    let s = lo + x * (hi - lo);
                    let xi = at(s);
                    let ge = geom.eval_jacobian(xi)?;
                    let speed = (ge.jac[0][d].powi(2) + ge.jac[1][d].powi(2)).sqrt();
                    let dx = w * (hi - lo) * speed;
                    let wv = weight(xi)?;
                    let g = u_d(ge.x);
                    let b = kv.eval_basis_in_span(span, s, 0);
                    for k in 0..b.len() {
                        let i = b.first + k;
                        if i == 0 || i == n - 1 {
                            continue;
                        }
                        let bi = b.get(0, k) / wv;
                        rhs[i - 1] += g * bi * dx;
                        for l in 0..b.len() {
                            let j = b.first + l;
                            let bj = b.get(0, l) / wv;
                            let v = bi * bj * dx;
                            if j == 0 {
                                rhs[i - 1] -= v * c0;
                            } else if j == n - 1 {
                                rhs[i - 1] -= v * c1;
                            } else {
                                trip.push((i - 1, j - 1, v));
                            }
                        }
                    }
                }
            }
            let mass = SparseMatrix::from_triplets(m, &trip, true)?;
            let sol = solve_spd(&mass, &rhs, 1e-10)?;
            coef[1..n - 1].copy_from_slice(&sol.solution);
        }
        for (i, c) in coef.into_iter().enumerate() {
            out.insert(dof(i), c);
        }
    }
    Ok(out.into_iter().collect())
}

/// Replaces boundary rows by identity rows and moves the known columns to the
/// right-hand side, keeping a symmetric matrix symmetric.
pub fn apply_dirichlet(
    k: &SparseMatrix,
    f: &[f64],
    bc: &[(usize, f64)],
) -> (SparseMatrix, Vec<f64>) {
    let n = k.dim();
    let mut is_bc = vec![false; n];
    let mut val = vec![0.0; n];
    for &(i, v) in bc {
        is_bc[i] = true;
        val[i] = v;
    }
    let mut m = k.clone();
    let mut rhs = f.to_vec();
    let row_ptr = k.row_ptr().to_vec();
    let cols = k.col_idx().to_vec();
    let vals = m.values_mut();
    for r in 0..n {
        for p in row_ptr[r]..row_ptr[r + 1] {
            let c = cols[p];
            if is_bc[r] {
                vals[p] = if c == r { 1.0 } else { 0.0 };
            } else if is_bc[c] {
                rhs[r] -= vals[p] * val[c];
                vals[p] = 0.0;
            }
        }
        if is_bc[r] {
            rhs[r] = val[r];
        }
    }
    (m, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{quarter_annulus, unit_square};
    use crate::splines::{DiscreteFunction, KnotVector};
    use std::sync::Arc;

    #[test]
    fn reproduces_affine_data_on_square() {
        let g = unit_square(1, 1).unwrap();
        let space = SplineSpace2D::new(
            KnotVector::uniform(4, 3).unwrap(),
            KnotVector::uniform(5, 2).unwrap(),
        );
        let u: ScalarFn = Arc::new(|x| 1.0 + 2.0 * x[0] - x[1]);
        let bc = boundary_coefficients(&space, &g, &u, 5).unwrap();
        assert_eq!(bc.len(), 2 * space.n(0) + 2 * space.n(1) - 4);
        let mut coef = vec![0.0; space.dof_count()];
        for &(i, v) in &bc {
            coef[i] = v;
        }
        let f = DiscreteFunction::new(space, coef).unwrap();
        for s in [0.0, 0.13, 0.5, 0.77, 1.0] {
            for xi in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                let (v, _) = f.eval_param(xi).unwrap();
                assert!((v - u(xi)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rational_constant_is_exact() {
        let g = quarter_annulus().unwrap();
        let space = g.space_on(
            KnotVector::uniform(3, 2).unwrap(),
            KnotVector::uniform(2, 2).unwrap(),
        );
        let u: ScalarFn = Arc::new(|_| 3.0);
        let bc = boundary_coefficients(&space, &g, &u, 5).unwrap();
        let mut coef = vec![0.0; space.dof_count()];
        for &(i, v) in &bc {
            coef[i] = v;
        }
        let f = DiscreteFunction::new(space, coef).unwrap();
        for xi in [[0.3, 0.0], [0.0, 0.4], [1.0, 0.71], [0.55, 1.0]] {
            assert!((f.eval_param(xi).unwrap().0 - 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn elimination_keeps_symmetry() {
        let trip = [
            (0, 0, 2.0),
            (0, 1, -1.0),
            (1, 0, -1.0),
            (1, 1, 2.0),
            (1, 2, -1.0),
            (2, 1, -1.0),
            (2, 2, 2.0),
        ];
        let k = SparseMatrix::from_triplets(3, &trip, true).unwrap();
        let (m, r) = apply_dirichlet(&k, &[0.0, 1.0, 0.0], &[(0, 1.0), (2, 2.0)]);
        assert_eq!(m.symmetry_defect(), 0.0);
        assert_eq!(r, vec![1.0, 4.0, 2.0]);
        assert_eq!(m.get(1, 1), 2.0);
        assert_eq!(m.get(0, 0), 1.0);
    }
}
