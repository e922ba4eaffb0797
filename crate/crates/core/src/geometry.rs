//! NURBS geometry maps `G: (0,1)² → Ω`, Jacobians, and the chain rules that
//! carry parameter-domain derivatives and vector fields to `Ω`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::splines::{
    BasisEval, KnotVector, SplineSpace2D, VectorTransform, WeightEval, WeightFunction,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NurbsGeometry {
    weight: Arc<WeightFunction>,
    basis: SplineSpace2D,
    control: Vec<[f64; 2]>,
}

/// Map data at one parameter point. `jac[i][j] = ∂xᵢ/∂ξⱼ`; `d2x[i]` holds the
/// second parameter derivatives `(∂₁₁, ∂₁₂, ∂₂₂)` of `xᵢ` when requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryEval {
    pub x: [f64; 2],
    pub jac: [[f64; 2]; 2],
    /// Signed; quadrature uses its absolute value.
    pub det: f64,
    pub jinv: [[f64; 2]; 2],
    pub d2x: [[f64; 3]; 2],
}

impl NurbsGeometry {
    /// `control` and `weights` are indexed lexicographically `i + n₁·j`.
    pub fn new(
        kv1: KnotVector,
        kv2: KnotVector,
        control: Vec<[f64; 2]>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        let n = kv1.n_basis() * kv2.n_basis();
        if control.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: control.len(),
            });
        }
        let weight = Arc::new(WeightFunction::new(kv1, kv2, weights)?);
        let basis = SplineSpace2D::geometry_basis(weight.clone());
        Ok(NurbsGeometry {
            weight,
            basis,
            control,
        })
    }

    pub fn weight_function(&self) -> &Arc<WeightFunction> {
        &self.weight
    }

    /// The denominator to attach to refined spaces; `None` for B-spline maps.
    pub fn rational_weight(&self) -> Option<Arc<WeightFunction>> {
        if self.weight.is_constant_one() {
            None
        } else {
            Some(self.weight.clone())
        }
    }

    pub fn knot_vectors(&self) -> &[KnotVector; 2] {
        self.weight.knot_vectors()
    }

    pub fn degrees(&self) -> [usize; 2] {
        self.basis.degrees()
    }

    /// The geometry's own NURBS basis.
    pub fn basis(&self) -> &SplineSpace2D {
        &self.basis
    }

    pub fn control_points(&self) -> &[[f64; 2]] {
        &self.control
    }

    /// Spline space on new knots that shares this geometry's denominator.
    pub fn space_on(&self, kv1: KnotVector, kv2: KnotVector) -> SplineSpace2D {
        SplineSpace2D::new(kv1, kv2).with_weight(self.rational_weight())
    }

    pub fn eval_weight(&self, xi: [f64; 2]) -> Result<WeightEval> {
        self.weight.eval(xi)
    }

    pub fn eval_map(&self, xi: [f64; 2]) -> Result<[f64; 2]> {
        let b = self.basis.eval_rational_basis_2d(xi, 0)?;
        let mut x = [0.0; 2];
        for a in 0..b.len() {
            let p = self.control[b.global(a)];
            x[0] += b.values[a] * p[0];
            x[1] += b.values[a] * p[1];
        }
        Ok(x)
    }

    pub fn eval_jacobian(&self, xi: [f64; 2]) -> Result<GeometryEval> {
        self.eval_full(xi, 1)
    }

    /// Map, Jacobian and (for `max_deriv = 2`) second derivatives.
    pub fn eval_full(&self, xi: [f64; 2], max_deriv: usize) -> Result<GeometryEval> {
        let mut buf = BasisEval::default();
        let w = self.weight.eval(xi)?;
        let s1 = self.knot_vectors()[0].find_span(xi[0])?;
        let s2 = self.knot_vectors()[1].find_span(xi[1])?;
        self.basis
            .eval_in_spans([s1, s2], xi, max_deriv.clamp(1, 2), Some(&w), &mut buf);
        self.from_basis(&buf, xi)
    }

    /// Assembles [`GeometryEval`] from an evaluated geometry basis.
    pub fn from_basis(&self, b: &BasisEval, xi: [f64; 2]) -> Result<GeometryEval> {
        let mut x = [0.0; 2];
        let mut jac = [[0.0; 2]; 2];
        let mut d2x = [[0.0; 3]; 2];
        let want_hess = !b.hess.is_empty();
        for a in 0..b.len() {
            let p = self.control[b.global(a)];
            for i in 0..2 {
                x[i] += b.values[a] * p[i];
                jac[i][0] += b.grads[a][0] * p[i];
                jac[i][1] += b.grads[a][1] * p[i];
                if want_hess {
                    for k in 0..3 {
                        d2x[i][k] += b.hess[a][k] * p[i];
                    }
                }
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        let scale = jac.iter().flatten().map(|v| v * v).sum::<f64>();
        // orientation may be negative (the annulus parametrisation is)
        if !(det.abs() > 1e-14 * scale) {
            return Err(Error::SingularJacobian {
                det,
                xi0: xi[0],
                xi1: xi[1],
            });
        }
        let jinv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Ok(GeometryEval {
            x,
            jac,
            det,
            jinv,
            d2x,
        })
    }

    /// Evaluates the geometry's own basis at `xi` into `buf` (first and second
    /// parameter derivatives included when `max_deriv = 2`).
    pub fn eval_basis_into(
        &self,
        xi: [f64; 2],
        max_deriv: usize,
        buf: &mut BasisEval,
    ) -> Result<WeightEval> {
        let w = self.weight.eval(xi)?;
        let s1 = self.knot_vectors()[0].find_span(xi[0])?;
        let s2 = self.knot_vectors()[1].find_span(xi[1])?;
        self.basis
            .eval_in_spans([s1, s2], xi, max_deriv.clamp(1, 2), Some(&w), buf);
        Ok(w)
    }
}

impl GeometryEval {
    /// Physical gradient `J⁻ᵀ ∇_ξ φ`.
    #[inline]
    pub fn phys_grad(&self, g: [f64; 2]) -> [f64; 2] {
        [
            g[0] * self.jinv[0][0] + g[1] * self.jinv[1][0],
            g[0] * self.jinv[0][1] + g[1] * self.jinv[1][1],
        ]
    }

    /// Physical Hessian `(∂xx, ∂xy, ∂yy)` from parameter gradient and Hessian;
    /// `grad_x` is the already-mapped gradient. Requires `d2x`.
    #[inline]
    pub fn phys_hessian(&self, h: [f64; 3], grad_x: [f64; 2]) -> [f64; 3] {
        let c = [
            h[0] - grad_x[0] * self.d2x[0][0] - grad_x[1] * self.d2x[1][0],
            h[1] - grad_x[0] * self.d2x[0][1] - grad_x[1] * self.d2x[1][1],
            h[2] - grad_x[0] * self.d2x[0][2] - grad_x[1] * self.d2x[1][2],
        ];
        let m = [[c[0], c[1]], [c[1], c[2]]];
        let ji = &self.jinv;
        let entry = |k: usize, l: usize| -> f64 {
            let mut s = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    s += ji[a][k] * m[a][b] * ji[b][l];
                }
            }
            s
        };
        [entry(0, 0), entry(0, 1), entry(1, 1)]
    }

    #[inline]
    pub fn phys_laplacian(&self, h: [f64; 3], grad_x: [f64; 2]) -> f64 {
        let hx = self.phys_hessian(h, grad_x);
        hx[0] + hx[2]
    }
}

/// Physical vector value and divergence of a parameter field `ŷ` with
/// parameter Jacobian `p[i][j] = ∂ŷᵢ/∂ξⱼ`.
#[inline]
pub fn mapped_vector(
    y_hat: [f64; 2],
    p: [[f64; 2]; 2],
    ge: &GeometryEval,
    transform: VectorTransform,
) -> ([f64; 2], f64) {
    match transform {
        VectorTransform::Componentwise => {
            let ji = &ge.jinv;
            let div =
                p[0][0] * ji[0][0] + p[0][1] * ji[1][0] + p[1][0] * ji[0][1] + p[1][1] * ji[1][1];
            (y_hat, div)
        }
        VectorTransform::Piola => {
            let j = &ge.jac;
            let inv = 1.0 / ge.det;
            let y = [
                (j[0][0] * y_hat[0] + j[0][1] * y_hat[1]) * inv,
                (j[1][0] * y_hat[0] + j[1][1] * y_hat[1]) * inv,
            ];
            (y, (p[0][0] + p[1][1]) * inv)
        }
    }
}

/// Greville abscissae: control point positions that make a spline reproduce
/// the identity.
pub fn greville(kv: &KnotVector) -> Vec<f64> {
    let p = kv.degree();
    let k = kv.knots();
    if p == 0 {
        return (0..kv.n_basis()).map(|i| 0.5 * (k[i] + k[i + 1])).collect();
    }
    (0..kv.n_basis())
        .map(|i| k[i + 1..=i + p].iter().sum::<f64>() / p as f64)
        .collect()
}

/// Built-in benchmark domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryKind {
    UnitSquare,
    QuarterAnnulus,
    LShape,
}

impl std::str::FromStr for GeometryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" => Ok(GeometryKind::UnitSquare),
            "quarter_annulus" => Ok(GeometryKind::QuarterAnnulus),
            "l_shape" => Ok(GeometryKind::LShape),
            other => Err(Error::UnknownGeometry(other.to_string())),
        }
    }
}

pub fn builtin_geometry(name: &str) -> Result<NurbsGeometry> {
    match name.parse::<GeometryKind>()? {
        GeometryKind::UnitSquare => unit_square(2, 2),
        GeometryKind::QuarterAnnulus => quarter_annulus(),
        GeometryKind::LShape => l_shape(),
    }
}

/// Identity map of degree `(p, q)` on a single cell.
pub fn unit_square(p: usize, q: usize) -> Result<NurbsGeometry> {
    identity_on(KnotVector::uniform(1, p)?, KnotVector::uniform(1, q)?)
}

/// Identity map represented on the given knot vectors.
pub fn identity_on(kv1: KnotVector, kv2: KnotVector) -> Result<NurbsGeometry> {
    let g1 = greville(&kv1);
    let g2 = greville(&kv2);
    let control = g2
        .iter()
        .flat_map(|&y| g1.iter().map(move |&x| [x, y]))
        .collect::<Vec<_>>();
    let weights = vec![1.0; control.len()];
    NurbsGeometry::new(kv1, kv2, control, weights)
}

/// Quarter annulus `1 ≤ r ≤ 2`, `0 ≤ φ ≤ π/2`; first parameter angular.
pub fn quarter_annulus() -> Result<NurbsGeometry> {
    let kv1 = KnotVector::uniform(1, 2)?;
    let kv2 = KnotVector::uniform(1, 2)?;
    let dirs = [[1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let ang_w = [1.0, FRAC_1_SQRT_2, 1.0];
    let mut control = Vec::with_capacity(9);
    let mut weights = Vec::with_capacity(9);
    for r in [1.0, 1.5, 2.0] {
        for i in 0..3 {
            control.push([r * dirs[i][0], r * dirs[i][1]]);
            weights.push(ang_w[i]);
        }
    }
    NurbsGeometry::new(kv1, kv2, control, weights)
}

/// Bilinear L-shaped domain `(-1,1)² \ [0,1]²` with the re-entrant corner at
/// the origin. The inner boundary (the two re-entrant edges) is `η = 0`.
pub fn l_shape() -> Result<NurbsGeometry> {
    let kv1 = KnotVector::new(1, vec![0.0, 0.0, 0.5, 1.0, 1.0])?;
    let kv2 = KnotVector::new(1, vec![0.0, 0.0, 1.0, 1.0])?;
    let control = vec![
        [1.0, 0.0],
        [0.0, 0.0],
        [0.0, 1.0],
        [1.0, -1.0],
        [-1.0, -1.0],
        [-1.0, 1.0],
    ];
    NurbsGeometry::new(kv1, kv2, control, vec![1.0; 6])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn all() -> Vec<NurbsGeometry> {
        vec![
            unit_square(2, 2).unwrap(),
            quarter_annulus().unwrap(),
            l_shape().unwrap(),
        ]
    }

    #[test]
    fn identity_map() {
        let g = unit_square(2, 2).unwrap();
        let ge = g.eval_jacobian([0.3, 0.8]).unwrap();
        assert!((ge.x[0] - 0.3).abs() < 1e-15 && (ge.x[1] - 0.8).abs() < 1e-15);
        assert!((ge.det - 1.0).abs() < 1e-14);
        let ex2 = identity_on(
            KnotVector::open(&[0.0, 0.5, 1.0], 4, Some(&[3])).unwrap(),
            KnotVector::open(&[0.0, 0.5, 1.0], 4, Some(&[3])).unwrap(),
        )
        .unwrap();
        let x = ex2.eval_map([0.37, 0.61]).unwrap();
        assert!((x[0] - 0.37).abs() < 1e-14 && (x[1] - 0.61).abs() < 1e-14);
        assert!(g.rational_weight().is_none());
    }

    #[test]
    fn affine_scaling() {
        let kv = || KnotVector::uniform(1, 1).unwrap();
        let g = NurbsGeometry::new(
            kv(),
            kv(),
            vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [2.0, 2.0]],
            vec![1.0; 4],
        )
        .unwrap();
        let ge = g.eval_jacobian([0.4, 0.4]).unwrap();
        assert!((ge.det - 4.0).abs() < 1e-14);
        let p = [[1.0, 0.5], [0.25, 3.0]];
        let (_, d) = mapped_vector([1.0, 1.0], p, &ge, VectorTransform::Componentwise);
        assert!((d - 0.5 * 4.0).abs() < 1e-14);
        let (_, d) = mapped_vector([1.0, 1.0], p, &ge, VectorTransform::Piola);
        assert!((d - 4.0 / 4.0).abs() < 1e-14);
    }

    #[test]
    fn transforms_coincide_on_identity() {
        let g = unit_square(2, 2).unwrap();
        let ge = g.eval_jacobian([0.2, 0.9]).unwrap();
        let p = [[0.3, -1.0], [2.0, 0.7]];
        let a = mapped_vector([0.1, 0.2], p, &ge, VectorTransform::Componentwise);
        let b = mapped_vector([0.1, 0.2], p, &ge, VectorTransform::Piola);
        assert!((a.0[0] - b.0[0]).abs() < 1e-15 && (a.0[1] - b.0[1]).abs() < 1e-15);
        assert!((a.1 - 1.0).abs() < 1e-15 && (b.1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quarter_annulus_is_exact() {
        let g = quarter_annulus().unwrap();
        let x = g.eval_map([0.0, 0.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && x[1].abs() < 1e-15);
        let x = g.eval_map([1.0, 1.0]).unwrap();
        assert!(x[0].abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        let mut r = rng();
        for _ in 0..100 {
            let s: f64 = r.gen();
            let a = g.eval_map([s, 0.0]).unwrap();
            let b = g.eval_map([s, 1.0]).unwrap();
            assert!((a[0].hypot(a[1]) - 1.0).abs() < 1e-12);
            assert!((b[0].hypot(b[1]) - 2.0).abs() < 1e-12);
            let t: f64 = r.gen();
            let c = g.eval_map([s, t]).unwrap();
            let rr = c[0].hypot(c[1]);
            assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&rr));
        }
    }

    #[test]
    fn l_shape_corners_and_orientation() {
        let g = l_shape().unwrap();
        let img = |xi| g.eval_map(xi).unwrap();
        let mut corners: Vec<[f64; 2]> = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]
            .iter()
            .map(|&c| img(c))
            .collect();
        corners.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(
            corners,
            vec![[-1.0, 1.0], [0.0, 1.0], [1.0, -1.0], [1.0, 0.0]]
        );
        assert_eq!(img([0.5, 0.0]), [0.0, 0.0]);
        assert_eq!(img([0.5, 1.0]), [-1.0, -1.0]);
        let mut r = rng();
        for _ in 0..10_000 {
            let xi = [r.gen_range(1e-9..1.0), r.gen_range(1e-9..1.0)];
            assert!(g.eval_jacobian(xi).unwrap().det > 0.0);
        }
    }

    #[test]
    fn l_shape_area() {
        let g = l_shape().unwrap();
        let (nodes, weights) = crate::assembly::quadrature::gauss_rule(3).unwrap();
        let mut area = 0.0;
        for span in g.knot_vectors()[0].spans() {
            for (a, wa) in nodes.iter().zip(&weights) {
                for (b, wb) in nodes.iter().zip(&weights) {
                    let xi = [span.lo + a * span.width(), *b];
                    area += g.eval_jacobian(xi).unwrap().det * wa * wb * span.width();
                }
            }
        }
        assert!((area - 3.0).abs() < 1e-10);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let h = 1e-6;
        let mut r = rng();
        for g in all() {
            for _ in 0..100 {
                let xi = [r.gen_range(0.01..0.99), r.gen_range(0.01..0.99)];
                let ge = g.eval_full(xi, 2).unwrap();
                for j in 0..2 {
                    let mut xp = xi;
                    let mut xm = xi;
                    xp[j] += h;
                    xm[j] -= h;
                    let (a, b) = (g.eval_map(xp).unwrap(), g.eval_map(xm).unwrap());
                    for i in 0..2 {
                        let fd = (a[i] - b[i]) / (2.0 * h);
                        assert!((fd - ge.jac[i][j]).abs() <= 1e-5 * (1.0 + fd.abs()));
                    }
                }
                let m = [
                    [
                        ge.jac[0][0] * ge.jinv[0][0] + ge.jac[0][1] * ge.jinv[1][0],
                        ge.jac[0][0] * ge.jinv[0][1] + ge.jac[0][1] * ge.jinv[1][1],
                    ],
                    [
                        ge.jac[1][0] * ge.jinv[0][0] + ge.jac[1][1] * ge.jinv[1][0],
                        ge.jac[1][0] * ge.jinv[0][1] + ge.jac[1][1] * ge.jinv[1][1],
                    ],
                ];
                assert!((m[0][0] - 1.0).abs() < 1e-12 && m[0][1].abs() < 1e-12);
                assert!(m[1][0].abs() < 1e-12 && (m[1][1] - 1.0).abs() < 1e-12);
            }
        }
    }

    // ŷ(ξ) = (sin(ξ₁+2ξ₂), ξ₁²ξ₂); y(x) formed through each transform and
    // differentiated numerically in x via the inverse map.
    #[test]
    fn divergence_chain_rule_on_annulus() {
        let g = quarter_annulus().unwrap();
        let y_hat = |xi: [f64; 2]| [(xi[0] + 2.0 * xi[1]).sin(), xi[0] * xi[0] * xi[1]];
        let p_hat = |xi: [f64; 2]| {
            let c = (xi[0] + 2.0 * xi[1]).cos();
            [[c, 2.0 * c], [2.0 * xi[0] * xi[1], xi[0] * xi[0]]]
        };
        let inverse = |x: [f64; 2]| -> [f64; 2] {
            let r = x[0].hypot(x[1]);
            let phi = x[1].atan2(x[0]);
            let s = newton_angular(&g, phi / std::f64::consts::FRAC_PI_2, phi);
            [s, r - 1.0]
        };
        let mut r = rng();
        for tr in [VectorTransform::Componentwise, VectorTransform::Piola] {
            for _ in 0..20 {
                let xi = [r.gen_range(0.1..0.9), r.gen_range(0.1..0.9)];
                let ge = g.eval_jacobian(xi).unwrap();
                let (_, div) = mapped_vector(y_hat(xi), p_hat(xi), &ge, tr);
                let h = 1e-5;
                let field = |x: [f64; 2]| {
                    let xi = inverse(x);
                    let ge = g.eval_jacobian(xi).unwrap();
                    mapped_vector(y_hat(xi), p_hat(xi), &ge, tr).0
                };
                let x = ge.x;
                let fd = (field([x[0] + h, x[1]])[0] - field([x[0] - h, x[1]])[0]) / (2.0 * h)
                    + (field([x[0], x[1] + h])[1] - field([x[0], x[1] - h])[1]) / (2.0 * h);
                assert!(
                    (fd - div).abs() <= 1e-5 * (1.0 + div.abs()),
                    "{tr:?}: {fd} vs {div}"
                );
            }
        }
    }

    fn newton_angular(g: &NurbsGeometry, mut s: f64, phi: f64) -> f64 {
        for _ in 0..50 {
            let x = g.eval_map([s.clamp(0.0, 1.0), 0.0]).unwrap();
            let f = x[1].atan2(x[0]) - phi;
            let ge = g.eval_jacobian([s.clamp(0.0, 1.0), 0.0]).unwrap();
            let dphi = (x[0] * ge.jac[1][0] - x[1] * ge.jac[0][0]) / (x[0] * x[0] + x[1] * x[1]);
            let step = f / dphi;
            s -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        s
    }

    #[test]
    fn physical_hessian_matches_finite_differences() {
        // φ(ξ) = ξ₁²ξ₂ + sin ξ₂ seen as a function of x on the annulus
        let g = quarter_annulus().unwrap();
        let xi: [f64; 2] = [0.35, 0.6];
        let grad = |xi: [f64; 2]| [2.0 * xi[0] * xi[1], xi[0] * xi[0] + xi[1].cos()];
        let hess = [2.0 * xi[1], 2.0 * xi[0], -xi[1].sin()];
        let ge = g.eval_full(xi, 2).unwrap();
        let gx = ge.phys_grad(grad(xi));
        let hx = ge.phys_hessian(hess, gx);
        let h = 1e-5;
        for j in 0..2 {
            let mut xp = xi;
            let mut xm = xi;
            xp[j] += h;
            xm[j] -= h;
            let gp = g.eval_jacobian(xp).unwrap().phys_grad(grad(xp));
            let gm = g.eval_jacobian(xm).unwrap().phys_grad(grad(xm));
            // ∂/∂ξⱼ of physical gradient = H_x · (∂x/∂ξⱼ)
            let col = [ge.jac[0][j], ge.jac[1][j]];
            let expect = [
                hx[0] * col[0] + hx[1] * col[1],
                hx[1] * col[0] + hx[2] * col[1],
            ];
            for i in 0..2 {
                let fd = (gp[i] - gm[i]) / (2.0 * h);
                assert!((fd - expect[i]).abs() < 1e-6 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn unknown_geometry() {
        assert!(matches!(
            builtin_geometry("torus"),
            Err(Error::UnknownGeometry(_))
        ));
        assert!(builtin_geometry("l_shape").is_ok());
    }
}
