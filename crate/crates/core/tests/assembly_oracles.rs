use std::sync::Arc;

use iga_majorant::assembly::{
    apply_dirichlet, assemble_majorant_systems, assemble_primal, boundary_coefficients,
    exact_energy_error,
};
use iga_majorant::geometry::identity_on;
use iga_majorant::linsolve::{solve_spd, SolverKind};
use iga_majorant::majorant::{build_flux_space, FluxCase};
use iga_majorant::problems::{get_example, Advection, ExampleId, ProblemSpec};
use iga_majorant::splines::{DiscreteFunction, KnotVector, SplineSpace2D};
use iga_majorant::study::{initial_space, solve_primal};

fn square(spans: usize, p: usize) -> (ProblemSpec, SplineSpace2D) {
    let kv = KnotVector::uniform(spans, p).unwrap();
    let mut prob = get_example(ExampleId::E1).unwrap();
    prob.geometry = identity_on(kv.clone(), kv.clone()).unwrap();
    prob.initial_knots = [kv.clone(), kv.clone()];
    let space = prob.geometry.space_on(kv.clone(), kv);
    (prob, space)
}

#[test]
fn bilinear_element_matrix() {
    let (prob, space) = square(1, 1);
    let k = assemble_primal(&space, &prob, 2).unwrap().k;
    let expect = [
        [2.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, -1.0 / 3.0],
        [-1.0 / 6.0, 2.0 / 3.0, -1.0 / 3.0, -1.0 / 6.0],
        [-1.0 / 6.0, -1.0 / 3.0, 2.0 / 3.0, -1.0 / 6.0],
        [-1.0 / 3.0, -1.0 / 6.0, -1.0 / 6.0, 2.0 / 3.0],
    ];
    for (i, row) in expect.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            assert!(
                (k.get(i, j) - v).abs() < 1e-14,
                "K[{i}][{j}] = {}",
                k.get(i, j)
            );
        }
    }
}

#[test]
fn linear_patch_test() {
    let (mut prob, _) = square(4, 2);
    let lin = |x: [f64; 2]| 1.0 + 2.0 * x[0] - 3.0 * x[1];
    prob.f = Arc::new(|_| 0.0);
    prob.u_d = Arc::new(lin);
    prob.exact_u = Some(Arc::new(lin));
    prob.exact_grad = Some(Arc::new(|_| [2.0, -3.0]));
    let space = initial_space(&prob);
    let (u_h, _, _) = solve_primal(&prob, &space, None, SolverKind::Direct).unwrap();
    let (err, _) = exact_energy_error(&u_h, &prob, 4).unwrap();
    assert!(err < 1e-10, "energy error {err}");
    // the unconstrained residual vanishes on interior rows
    let sys = assemble_primal(&space, &prob, 3).unwrap();
    let r = sys.k.matvec(&u_h.coefficients);
    let n = space.n(0);
    for j in 1..space.n(1) - 1 {
        for i in 1..n - 1 {
            let a = space.dof_index(i, j);
            assert!((r[a] - sys.f[a]).abs() < 1e-12);
        }
    }
}

#[test]
fn quadrature_sufficiency_on_affine_maps() {
    let (prob, space) = square(6, 2);
    let a = assemble_primal(&space, &prob, 3).unwrap().k;
    let b = assemble_primal(&space, &prob, 6).unwrap().k;
    for (x, y) in a.values().iter().zip(b.values()) {
        assert!((x - y).abs() <= 1e-10 * y.abs().max(1e-12));
    }
}

#[test]
fn supg_path_reduces_to_diffusion() {
    let (prob, space) = square(5, 2);
    let mut adv = prob.clone();
    adv.advection = Some(Advection {
        kappa: 1.0,
        b: [0.0, 0.0],
    });
    let k0 = assemble_primal(&space, &prob, 3).unwrap();
    let k1 = assemble_primal(&space, &adv, 3).unwrap();
    assert_eq!(k0.k.values(), k1.k.values());
    assert_eq!(k0.f, k1.f);
}

#[test]
fn assembly_independent_of_thread_count() {
    let prob = get_example(ExampleId::E4a).unwrap();
    let space = initial_space(&prob);
    let space = space.with_knots(space.kv(0).refine_uniform(), space.kv(1).refine_uniform());
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| assemble_primal(&space, &prob, 3).unwrap())
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.k.values(), b.k.values());
    assert_eq!(a.f, b.f);
}

#[test]
fn l1_is_symmetric_positive_definite() {
    let prob = get_example(ExampleId::E3).unwrap();
    let space = initial_space(&prob);
    let (u_h, _, _) = solve_primal(&prob, &space, None, SolverKind::Direct).unwrap();
    for case in [FluxCase::Case0, FluxCase::CASE1, FluxCase::CASE3] {
        let y = build_flux_space(case, &space).unwrap();
        let s = assemble_majorant_systems(&y, &prob, &u_h, 3, 3).unwrap();
        assert!(s.l1.symmetry_defect() < 1e-12);
        assert!(s.l2.symmetry_defect() < 1e-12);
        let ones = vec![1.0; s.l1.dim()];
        assert!(solve_spd(&s.l1, &ones, 1e-10).is_ok(), "case {case}");
        let x: Vec<f64> = (0..s.l2.dim())
            .map(|i| ((i * 7919) % 13) as f64 - 6.0)
            .collect();
        let q: f64 = s.l2.matvec(&x).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!(q >= -1e-10);
    }
}

#[test]
fn energy_error_decreases_under_refinement() {
    for id in [ExampleId::E1, ExampleId::E4a, ExampleId::E6] {
        let prob = get_example(id).unwrap();
        let mut space = initial_space(&prob);
        let mut prev = f64::INFINITY;
        for _ in 0..3 {
            let (u_h, _, _) = solve_primal(&prob, &space, None, SolverKind::Direct).unwrap();
            let (e, _) = exact_energy_error(&u_h, &prob, 6).unwrap();
            assert!(e < prev, "{id}: {e} after {prev}");
            prev = e;
            space = space.with_knots(space.kv(0).refine_uniform(), space.kv(1).refine_uniform());
        }
    }
}

#[test]
fn l_shape_boundary_projection() {
    let prob = get_example(ExampleId::E6).unwrap();
    let kv1 = KnotVector::uniform(64, 1).unwrap();
    let kv2 = KnotVector::uniform(32, 1).unwrap();
    let space = prob.geometry.space_on(kv1, kv2);
    let bc = boundary_coefficients(&space, &prob.geometry, &prob.u_d, 4).unwrap();
    let mut c = vec![0.0; space.dof_count()];
    for (i, v) in bc {
        c[i] = v;
    }
    let u = DiscreteFunction::new(space, c).unwrap();
    // parameter (0.75, 1) is the outer boundary point (-1, 0)
    let x = prob.geometry.eval_map([0.75, 1.0]).unwrap();
    assert!((x[0] + 1.0).abs() < 1e-14 && x[1].abs() < 1e-14);
    let (v, _) = u.eval_param([0.75, 1.0]).unwrap();
    assert!((v - 3f64.sqrt() / 2.0).abs() < 1e-3, "{v}");
}

#[test]
fn dirichlet_rows_are_identity() {
    let (prob, space) = square(3, 2);
    let sys = assemble_primal(&space, &prob, 3).unwrap();
    let bc = boundary_coefficients(&space, &prob.geometry, &prob.u_d, 5).unwrap();
    let (k, f) = apply_dirichlet(&sys.k, &sys.f, &bc);
    assert!(k.symmetry_defect() < 1e-14);
    for &(i, v) in &bc {
        assert_eq!(k.get(i, i), 1.0);
        assert_eq!(f[i], v);
        let (cols, vals) = k.row(i);
        assert!(cols.iter().zip(vals).all(|(&c, &x)| c == i || x == 0.0));
    }
}
