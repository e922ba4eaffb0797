//! Benchmark problems: geometry, coefficients, data and exact solutions.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::{identity_on, l_shape, quarter_annulus, NurbsGeometry};
use crate::splines::KnotVector;

pub type ScalarFn = Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2]) -> [f64; 2] + Send + Sync>;
pub type MatrixFn = Arc<dyn Fn([f64; 2]) -> [[f64; 2]; 2] + Send + Sync>;

/// `−κΔu + b·∇u = f` with constant `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Advection {
    pub kappa: f64,
    pub b: [f64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExampleId {
    E1,
    E2,
    E3,
    E4a,
    E4b,
    E5,
    E6,
    E7,
}

impl ExampleId {
    pub const ALL: [ExampleId; 8] = [
        ExampleId::E1,
        ExampleId::E2,
        ExampleId::E3,
        ExampleId::E4a,
        ExampleId::E4b,
        ExampleId::E5,
        ExampleId::E6,
        ExampleId::E7,
    ];
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ExampleId::E1 => "1",
            ExampleId::E2 => "2",
            ExampleId::E3 => "3",
            ExampleId::E4a => "4a",
            ExampleId::E4b => "4b",
            ExampleId::E5 => "5",
            ExampleId::E6 => "6",
            ExampleId::E7 => "7",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "1" => Ok(ExampleId::E1),
            "2" => Ok(ExampleId::E2),
            "3" => Ok(ExampleId::E3),
            "4a" | "4" => Ok(ExampleId::E4a),
            "4b" => Ok(ExampleId::E4b),
            "5" => Ok(ExampleId::E5),
            "6" => Ok(ExampleId::E6),
            "7" => Ok(ExampleId::E7),
            other => Err(Error::UnknownExample(other.to_string())),
        }
    }
}

#[derive(Clone)]
pub struct ProblemSpec {
    pub id: ExampleId,
    pub geometry: NurbsGeometry,
    /// Knot vectors of the first (coarsest) discretization in a study.
    pub initial_knots: [KnotVector; 2],
    pub a: MatrixFn,
    /// `(div A)ⱼ = Σᵢ ∂ᵢAᵢⱼ`, needed for `div(A∇u_h)`.
    pub div_a: VectorFn,
    pub advection: Option<Advection>,
    pub f: ScalarFn,
    pub u_d: ScalarFn,
    pub exact_u: Option<ScalarFn>,
    pub exact_grad: Option<VectorFn>,
    pub c1: f64,
    pub c2: f64,
    /// Side of a square containing `Ω`.
    pub bbox_side: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("id", &self.id)
            .field("advection", &self.advection)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("bbox_side", &self.bbox_side)
            .finish_non_exhaustive()
    }
}

impl ProblemSpec {
    pub fn has_exact(&self) -> bool {
        self.exact_grad.is_some()
    }

    /// Multiplies `f`, `u_D` and the exact solution by `c`.
    pub fn scaled(&self, c: f64) -> ProblemSpec {
        let mut p = self.clone();
        let (f, ud) = (self.f.clone(), self.u_d.clone());
        p.f = Arc::new(move |x| c * f(x));
        p.u_d = Arc::new(move |x| c * ud(x));
        if let Some(u) = self.exact_u.clone() {
            p.exact_u = Some(Arc::new(move |x| c * u(x)));
        }
        if let Some(g) = self.exact_grad.clone() {
            p.exact_grad = Some(Arc::new(move |x| {
                let v = g(x);
                [c * v[0], c * v[1]]
            }));
        }
        p
    }
}

fn constant_matrix(m: [[f64; 2]; 2]) -> MatrixFn {
    Arc::new(move |_| m)
}

fn zero_vector() -> VectorFn {
    Arc::new(|_| [0.0, 0.0])
}

fn uniform_knots(n1: usize, n2: usize, p: usize) -> Result<[KnotVector; 2]> {
    Ok([KnotVector::uniform(n1, p)?, KnotVector::uniform(n2, p)?])
}

fn sine_solution() -> (ScalarFn, VectorFn) {
    let u: ScalarFn = Arc::new(|x| (6.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin());
    let g: VectorFn = Arc::new(|x| {
        [
            6.0 * PI * (6.0 * PI * x[0]).cos() * (3.0 * PI * x[1]).sin(),
            3.0 * PI * (6.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).cos(),
        ]
    });
    (u, g)
}

fn laplace_diffusion(
    id: ExampleId,
    geometry: NurbsGeometry,
    initial_knots: [KnotVector; 2],
    u: ScalarFn,
    grad: VectorFn,
    f: ScalarFn,
    bbox_side: f64,
) -> ProblemSpec {
    ProblemSpec {
        id,
        geometry,
        initial_knots,
        a: constant_matrix([[1.0, 0.0], [0.0, 1.0]]),
        div_a: zero_vector(),
        advection: None,
        f,
        u_d: u.clone(),
        exact_u: Some(u),
        exact_grad: Some(grad),
        c1: 1.0,
        c2: 1.0,
        bbox_side,
    }
}

pub fn get_example(id: ExampleId) -> Result<ProblemSpec> {
    match id {
        ExampleId::E1 => {
            let (u, g) = sine_solution();
            let f: ScalarFn =
                Arc::new(|x| 45.0 * PI * PI * (6.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin());
            let kv = uniform_knots(8, 8, 2)?;
            let geom = identity_on(kv[0].clone(), kv[1].clone())?;
            Ok(laplace_diffusion(id, geom, kv, u, g, f, 1.0))
        }
        ExampleId::E2 => {
            let (u, g) = sine_solution();
            let f: ScalarFn =
                Arc::new(|x| 45.0 * PI * PI * (6.0 * PI * x[0]).sin() * (3.0 * PI * x[1]).sin());
            let base = KnotVector::open(&[0.0, 0.5, 1.0], 4, Some(&[3]))?;
            let geom = identity_on(base.clone(), base.clone())?;
            let refined = base.refine_uniform().refine_uniform().refine_uniform();
            Ok(laplace_diffusion(
                id,
                geom,
                [refined.clone(), refined],
                u,
                g,
                f,
                1.0,
            ))
        }
        ExampleId::E3 => example3(),
        ExampleId::E4a => example4(id, 20.0),
        ExampleId::E4b => example4(id, 50.0),
        ExampleId::E5 => example5(),
        ExampleId::E6 => example6(),
        ExampleId::E7 => example7(),
    }
}

pub fn get_example_by_name(name: &str) -> Result<ProblemSpec> {
    get_example(name.parse()?)
}

const B11: f64 = 0.1;
const B12: f64 = 0.8;
const B21: f64 = 0.4;
const B22: f64 = 0.7;

fn example3() -> Result<ProblemSpec> {
    let (u, g) = sine_solution();
    let a11 = |x: [f64; 2]| (B11 * x[0] + B12 * x[1]).exp();
    let a22 = |x: [f64; 2]| (B21 * x[0] + B22 * x[1]).exp();
    let f: ScalarFn = Arc::new(move |x| {
        let (s6, c6) = (6.0 * PI * x[0]).sin_cos();
        let (s3, c3) = (3.0 * PI * x[1]).sin_cos();
        let ux = 6.0 * PI * c6 * s3;
        let uy = 3.0 * PI * s6 * c3;
        let uxx = -36.0 * PI * PI * s6 * s3;
        let uyy = -9.0 * PI * PI * s6 * s3;
        -(a11(x) * (uxx + B11 * ux) + a22(x) * (uyy + B22 * uy))
    });
    let kv = uniform_knots(8, 8, 2)?;
    let geom = identity_on(kv[0].clone(), kv[1].clone())?;
    Ok(ProblemSpec {
        id: ExampleId::E3,
        geometry: geom,
        initial_knots: kv,
        a: Arc::new(move |x| [[a11(x), 0.0], [0.0, a22(x)]]),
        div_a: Arc::new(move |x| [B11 * a11(x), B22 * a22(x)]),
        advection: None,
        f,
        u_d: u.clone(),
        exact_u: Some(u),
        exact_grad: Some(g),
        c1: 1.0,
        c2: 1.1f64.exp(),
        bbox_side: 1.0,
    })
}

fn polar(x: [f64; 2]) -> (f64, f64) {
    (x[0].hypot(x[1]), x[1].atan2(x[0]))
}

fn example4(id: ExampleId, alpha: f64) -> Result<ProblemSpec> {
    let u: ScalarFn = Arc::new(move |x| {
        let (r, phi) = polar(x);
        (r - 1.0) * (r - 2.0) * phi * (phi - FRAC_PI_2) * (-alpha * (x[0] - 1.0).powi(2)).exp()
    });
    // u = P(r, φ)·E(x) with P = g(r)h(φ)
    let parts = move |x: [f64; 2]| {
        let (r, phi) = polar(x);
        let (g, g1, g2) = ((r - 1.0) * (r - 2.0), 2.0 * r - 3.0, 2.0);
        let (h, h1, h2) = (phi * (phi - FRAC_PI_2), 2.0 * phi - FRAC_PI_2, 2.0);
        let (rx, ry) = (x[0] / r, x[1] / r);
        let (px, py) = (-x[1] / (r * r), x[0] / (r * r));
        let p = g * h;
        let grad_p = [g1 * h * rx + g * h1 * px, g1 * h * ry + g * h1 * py];
        let lap_p = g2 * h + g1 * h / r + g * h2 / (r * r);
        let d = x[0] - 1.0;
        let e = (-alpha * d * d).exp();
        let ex = -2.0 * alpha * d * e;
        let exx = (4.0 * alpha * alpha * d * d - 2.0 * alpha) * e;
        (p, grad_p, lap_p, e, ex, exx)
    };
    let grad: VectorFn = Arc::new(move |x| {
        let (p, gp, _, e, ex, _) = parts(x);
        [gp[0] * e + p * ex, gp[1] * e]
    });
    let f: ScalarFn = Arc::new(move |x| {
        let (p, gp, lp, e, ex, exx) = parts(x);
        -(e * lp + 2.0 * gp[0] * ex + p * exx)
    });
    let geom = quarter_annulus()?;
    let kv = uniform_knots(16, 8, 2)?;
    Ok(laplace_diffusion(id, geom, kv, u, grad, f, 2.0))
}

const PEAKS: [[f64; 2]; 2] = [[0.8, 0.05], [0.8, 0.95]];

fn example5() -> Result<ProblemSpec> {
    // sum of two Gaussian bumps times the boundary factor
    let peaks = |x: [f64; 2]| {
        let mut g = 0.0;
        let mut gx = [0.0; 2];
        let mut lap = 0.0;
        for c in PEAKS {
            let d = [x[0] - c[0], x[1] - c[1]];
            let d2 = d[0] * d[0] + d[1] * d[1];
            let e = (-100.0 * d2).exp();
            g += e;
            gx[0] += -200.0 * d[0] * e;
            gx[1] += -200.0 * d[1] * e;
            lap += (40000.0 * d2 - 400.0) * e;
        }
        (g, gx, lap)
    };
    let q = |x: [f64; 2]| {
        let (a, b) = (x[0] * x[0] - x[0], x[1] * x[1] - x[1]);
        let grad = [(2.0 * x[0] - 1.0) * b, a * (2.0 * x[1] - 1.0)];
        (a * b, grad, 2.0 * (a + b))
    };
    let u: ScalarFn = Arc::new(move |x| q(x).0 * peaks(x).0);
    let grad: VectorFn = Arc::new(move |x| {
        let (qv, qg, _) = q(x);
        let (g, gg, _) = peaks(x);
        [qg[0] * g + qv * gg[0], qg[1] * g + qv * gg[1]]
    });
    let f: ScalarFn = Arc::new(move |x| {
        let (qv, qg, ql) = q(x);
        let (g, gg, gl) = peaks(x);
        -(ql * g + 2.0 * (qg[0] * gg[0] + qg[1] * gg[1]) + qv * gl)
    });
    let kv = uniform_knots(16, 16, 2)?;
    let geom = identity_on(kv[0].clone(), kv[1].clone())?;
    Ok(laplace_diffusion(ExampleId::E5, geom, kv, u, grad, f, 1.0))
}

/// Polar angle of `x` taken in `[π/2, 2π]`.
pub fn l_shape_angle(x: [f64; 2]) -> f64 {
    let phi = x[1].atan2(x[0]);
    if phi < FRAC_PI_2 - 1e-15 {
        phi + 2.0 * PI
    } else {
        phi
    }
}

fn example6() -> Result<ProblemSpec> {
    let u: ScalarFn = Arc::new(|x| {
        let r = x[0].hypot(x[1]);
        r.powf(2.0 / 3.0) * ((2.0 * l_shape_angle(x) - PI) / 3.0).sin()
    });
    let grad: VectorFn = Arc::new(|x| {
        let r = x[0].hypot(x[1]);
        let phi = l_shape_angle(x);
        let th = (2.0 * phi - PI) / 3.0;
        let ur = 2.0 / 3.0 * r.powf(-1.0 / 3.0) * th.sin();
        let uphi_r = 2.0 / 3.0 * r.powf(-1.0 / 3.0) * th.cos();
        let (s, c) = phi.sin_cos();
        [ur * c - uphi_r * s, ur * s + uphi_r * c]
    });
    let geom = l_shape()?;
    let kv1 = KnotVector::uniform(16, 1)?;
    let kv2 = KnotVector::uniform(8, 1)?;
    Ok(laplace_diffusion(
        ExampleId::E6,
        geom,
        [kv1, kv2],
        u,
        grad,
        Arc::new(|_| 0.0),
        2.0,
    ))
}

pub const E7_KAPPA: f64 = 1e-6;

fn example7() -> Result<ProblemSpec> {
    let b = [(PI / 3.0).cos(), (PI / 3.0).sin()];
    let kv = uniform_knots(16, 16, 2)?;
    let geom = identity_on(kv[0].clone(), kv[1].clone())?;
    Ok(ProblemSpec {
        id: ExampleId::E7,
        geometry: geom,
        initial_knots: kv,
        a: constant_matrix([[E7_KAPPA, 0.0], [0.0, E7_KAPPA]]),
        div_a: zero_vector(),
        advection: Some(Advection { kappa: E7_KAPPA, b }),
        f: Arc::new(|_| 0.0),
        u_d: Arc::new(|x| if x[1].abs() <= 1e-14 { 1.0 } else { 0.0 }),
        exact_u: None,
        exact_grad: None,
        c1: E7_KAPPA,
        c2: E7_KAPPA,
        bbox_side: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_interior(p: &ProblemSpec, rng: &mut ChaCha8Rng) -> [f64; 2] {
        let xi = [rng.gen_range(0.02..0.98), rng.gen_range(0.02..0.98)];
        p.geometry.eval_map(xi).unwrap()
    }

    // −div(A∇u) by central differences of the flux A∇u (exact gradient)
    fn fd_operator(p: &ProblemSpec, x: [f64; 2]) -> f64 {
        let h = 1e-5;
        let g = p.exact_grad.as_ref().unwrap();
        let flux = |x: [f64; 2]| {
            let a = (p.a)(x);
            let gr = g(x);
            [
                a[0][0] * gr[0] + a[0][1] * gr[1],
                a[1][0] * gr[0] + a[1][1] * gr[1],
            ]
        };
        let dx = (flux([x[0] + h, x[1]])[0] - flux([x[0] - h, x[1]])[0]) / (2.0 * h);
        let dy = (flux([x[0], x[1] + h])[1] - flux([x[0], x[1] - h])[1]) / (2.0 * h);
        -(dx + dy)
    }

    #[test]
    fn point_values() {
        let p = get_example(ExampleId::E1).unwrap();
        assert!(((p.exact_u.as_ref().unwrap())([0.25, 0.5]) - 1.0).abs() < 1e-14);
        let p = get_example(ExampleId::E6).unwrap();
        let u = p.exact_u.as_ref().unwrap();
        assert!((u([-1.0, 0.0]) - 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(u([0.0, 0.7]).abs() < 1e-14);
        assert!(u([0.7, 0.0]).abs() < 1e-14);
    }

    #[test]
    fn unknown_example() {
        assert!(matches!(
            "9".parse::<ExampleId>(),
            Err(Error::UnknownExample(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for id in ExampleId::ALL {
            let p = get_example(id).unwrap();
            let (Some(u), Some(g)) = (p.exact_u.clone(), p.exact_grad.clone()) else {
                continue;
            };
            for _ in 0..100 {
                let x = sample_interior(&p, &mut rng);
                let h = 1e-6;
                let fd = [
                    (u([x[0] + h, x[1]]) - u([x[0] - h, x[1]])) / (2.0 * h),
                    (u([x[0], x[1] + h]) - u([x[0], x[1] - h])) / (2.0 * h),
                ];
                let gv = g(x);
                let scale = 1.0 + gv[0].abs().max(gv[1].abs());
                assert!(
                    (fd[0] - gv[0]).abs() < 1e-6 * scale,
                    "{id}: {fd:?} vs {gv:?} at {x:?}"
                );
                assert!(
                    (fd[1] - gv[1]).abs() < 1e-6 * scale,
                    "{id}: {fd:?} vs {gv:?} at {x:?}"
                );
            }
        }
    }

    #[test]
    fn sources_match_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for id in ExampleId::ALL {
            let p = get_example(id).unwrap();
            if !p.has_exact() {
                continue;
            }
            let mut worst = 0.0f64;
            let mut scale = 0.0f64;
            for _ in 0..100 {
                let x = sample_interior(&p, &mut rng);
                let fd = fd_operator(&p, x);
                let f = (p.f)(x);
                worst = worst.max((fd - f).abs());
                scale = scale.max(f.abs());
            }
            assert!(
                worst <= 1e-5 * scale.max(1.0),
                "{id}: residual {worst} (scale {scale})"
            );
        }
    }

    #[test]
    fn boundary_data_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for id in ExampleId::ALL {
            let p = get_example(id).unwrap();
            let Some(u) = p.exact_u.clone() else { continue };
            for k in 0..1000 {
                let s: f64 = rng.gen();
                let xi = match k % 4 {
                    0 => [s, 0.0],
                    1 => [s, 1.0],
                    2 => [0.0, s],
                    _ => [1.0, s],
                };
                let x = p.geometry.eval_map(xi).unwrap();
                assert!((u(x) - (p.u_d)(x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn homogeneous_boundaries() {
        for id in [
            ExampleId::E1,
            ExampleId::E3,
            ExampleId::E4a,
            ExampleId::E4b,
            ExampleId::E5,
        ] {
            let p = get_example(id).unwrap();
            for k in 0..=20 {
                let s = k as f64 / 20.0;
                for xi in [[s, 0.0], [s, 1.0], [0.0, s], [1.0, s]] {
                    let x = p.geometry.eval_map(xi).unwrap();
                    assert!((p.u_d)(x).abs() < 1e-12, "{id} at {x:?}");
                }
            }
        }
    }

    #[test]
    fn coefficient_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for id in ExampleId::ALL {
            let p = get_example(id).unwrap();
            for _ in 0..200 {
                let x = sample_interior(&p, &mut rng);
                let a = (p.a)(x);
                let tr = a[0][0] + a[1][1];
                let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
                let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                let (lo, hi) = (tr / 2.0 - disc, tr / 2.0 + disc);
                assert!(lo >= p.c1 * (1.0 - 1e-12) && hi <= p.c2 * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn example7_boundary_data() {
        let p = get_example(ExampleId::E7).unwrap();
        assert_eq!((p.u_d)([0.3, 0.0]), 1.0);
        assert_eq!((p.u_d)([0.0, 0.3]), 0.0);
        assert!(p.exact_grad.is_none());
        let b = p.advection.unwrap().b;
        assert!((b[0].hypot(b[1]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn div_a_matches_finite_differences() {
        let p = get_example(ExampleId::E3).unwrap();
        let x = [0.3, 0.6];
        let h = 1e-6;
        let a = |x| (p.a)(x);
        let d0 = (a([x[0] + h, x[1]])[0][0] - a([x[0] - h, x[1]])[0][0]) / (2.0 * h)
            + (a([x[0], x[1] + h])[1][0] - a([x[0], x[1] - h])[1][0]) / (2.0 * h);
        let d1 = (a([x[0] + h, x[1]])[0][1] - a([x[0] - h, x[1]])[0][1]) / (2.0 * h)
            + (a([x[0], x[1] + h])[1][1] - a([x[0], x[1] - h])[1][1]) / (2.0 * h);
        let got = (p.div_a)(x);
        assert!((got[0] - d0).abs() < 1e-8 && (got[1] - d1).abs() < 1e-8);
    }
}
