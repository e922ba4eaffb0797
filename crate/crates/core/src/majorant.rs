//! Flux spaces, the interleaved flux / β minimisation, and the quantities
//! derived from the majorant: efficiency index, quality criterion, marking.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::assembly::{compute_b_terms, MajorantSystems};
use crate::error::{Error, Result};
use crate::linsolve::SolverKind;
use crate::problems::ProblemSpec;
use crate::splines::{
    elevate_space, DiscreteFunction, DiscreteVectorField, SplineSpace2D, VectorSpace,
    VectorTransform,
};

/// Cap on β when `B₁` vanishes.
pub const BETA_CAP: f64 = 1e8;

/// Relative residual accepted for the flux solve. Any flux gives an upper
/// bound, so this only affects sharpness.
pub const FLUX_TOL: f64 = 1e-8;

/// Flux space selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxCase {
    /// `S^{p+1,q} × S^{p,q+1}` on the primal breakpoints with the Piola map.
    Case0,
    /// Both components on the primal mesh coarsened by `coarsen`, degree
    /// raised by `elevate`, mapped componentwise.
    General { coarsen: usize, elevate: usize },
}

impl FluxCase {
    pub const CASE1: FluxCase = FluxCase::General {
        coarsen: 1,
        elevate: 1,
    };
    pub const CASE2: FluxCase = FluxCase::General {
        coarsen: 2,
        elevate: 2,
    };
    pub const CASE3: FluxCase = FluxCase::General {
        coarsen: 4,
        elevate: 4,
    };

    /// Case numbers 0 to 3.
    pub fn numbered(n: usize) -> Result<FluxCase> {
        match n {
            0 => Ok(FluxCase::Case0),
            1 => Ok(Self::CASE1),
            2 => Ok(Self::CASE2),
            3 => Ok(Self::CASE3),
            _ => Err(Error::InvalidInput(format!("unknown flux case {n}"))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            FluxCase::General { coarsen: 0, .. } => Err(Error::InvalidInput(
                "coarsening factor K must be >= 1".into(),
            )),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for FluxCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxCase::Case0 => write!(f, "0"),
            FluxCase::General { coarsen, elevate } => write!(f, "{coarsen},{elevate}"),
        }
    }
}

/// `"0"` or `"K,k"`.
impl FromStr for FluxCase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(FluxCase::Case0);
        }
        let bad = || Error::InvalidInput(format!("invalid case `{s}` (expected 0 or K,k)"));
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let coarsen = a.trim().parse().map_err(|_| bad())?;
        let elevate = b.trim().parse().map_err(|_| bad())?;
        let c = FluxCase::General { coarsen, elevate };
        c.validate()?;
        Ok(c)
    }
}

/// Flux space for `case` over the primal space. Rational primal spaces pass
/// their weight function on to the flux components.
pub fn build_flux_space(case: FluxCase, primal: &SplineSpace2D) -> Result<VectorSpace> {
    case.validate()?;
    let w = primal.weight_function().cloned();
    let [p1, p2] = primal.degrees();
    let (b1, b2) = (primal.kv(0).breakpoints(), primal.kv(1).breakpoints());
    let (components, transform) = match case {
        FluxCase::Case0 => (
            [
                SplineSpace2D::new(elevate_space(&b1, p1, 1)?, elevate_space(&b2, p2, 0)?),
                SplineSpace2D::new(elevate_space(&b1, p1, 0)?, elevate_space(&b2, p2, 1)?),
            ],
            VectorTransform::Piola,
        ),
        FluxCase::General { coarsen, elevate } => {
            let k1 = primal.kv(0).coarsen_by_factor(coarsen).elevated(elevate)?;
            let k2 = primal.kv(1).coarsen_by_factor(coarsen).elevated(elevate)?;
            let s = SplineSpace2D::new(k1, k2);
            ([s.clone(), s], VectorTransform::Componentwise)
        }
    };
    Ok(VectorSpace {
        components: components.map(|s| s.with_weight(w.clone())),
        transform,
    })
}

/// `C_Ω ≤ c₂ ℓ / (π √d)`.
pub fn compute_c_omega(bbox_side: f64, c1: f64, c2: f64, dim: usize) -> Result<f64> {
    if !(bbox_side > 0.0 && c1 > 0.0 && c1 <= c2) {
        return Err(Error::InvalidInput(format!(
            "need l > 0 and 0 < c1 <= c2 (l={bbox_side}, c1={c1}, c2={c2})"
        )));
    }
    Ok(c2 * bbox_side / (std::f64::consts::PI * (dim as f64).sqrt()))
}

/// Friedrichs constant with respect to `‖∇v‖_A` for `A = κ I`:
/// `ℓ / (π √d √κ)`.
pub fn compute_c_omega_advection(bbox_side: f64, kappa: f64, dim: usize) -> Result<f64> {
    if !(bbox_side > 0.0 && kappa > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need l > 0 and kappa > 0 (l={bbox_side}, kappa={kappa})"
        )));
    }
    Ok(bbox_side / (std::f64::consts::PI * (dim as f64).sqrt() * kappa.sqrt()))
}

/// The constant used for `problem`.
pub fn c_omega_for(problem: &ProblemSpec) -> Result<f64> {
    match problem.advection {
        Some(a) => compute_c_omega_advection(problem.bbox_side, a.kappa, 2),
        None => compute_c_omega(problem.bbox_side, problem.c1, problem.c2, 2),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantConfig {
    pub c_omega: f64,
    pub beta0: f64,
    pub max_iterations: usize,
    pub convergence_rtol: f64,
    pub c_plus: f64,
    pub case: FluxCase,
    pub solver: SolverKind,
}

impl MajorantConfig {
    pub fn new(c_omega: f64, case: FluxCase) -> Self {
        MajorantConfig {
            c_omega,
            beta0: 0.01,
            max_iterations: 2,
            convergence_rtol: 1e-4,
            c_plus: 5.0,
            case,
            solver: SolverKind::Direct,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.beta0 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "beta0 must be positive, got {}",
                self.beta0
            )));
        }
        if !(self.c_plus > 1.0) {
            return Err(Error::InvalidInput(format!(
                "C+ must exceed 1, got {}",
                self.c_plus
            )));
        }
        if !(self.c_omega > 0.0) {
            return Err(Error::InvalidInput(format!(
                "C_Omega must be positive, got {}",
                self.c_omega
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidInput(
                "at least one iteration is required".into(),
            ));
        }
        self.case.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MajorantResult {
    pub b1: f64,
    pub b2: f64,
    pub beta: f64,
    pub a1: f64,
    pub a2: f64,
    pub a1b1: f64,
    pub a2b2: f64,
    pub majorant: f64,
    /// `η_Q²` per primal cell (no `a₁` factor).
    pub eta2: Vec<f64>,
    /// `(β, M)` after each iteration.
    pub trace: Vec<(f64, f64)>,
    /// Set when `B₁ = 0` forced the β cap.
    pub beta_capped: bool,
    pub flux: DiscreteVectorField,
    pub solve_time: Duration,
}

/// `a₁ = 1 + β`, `a₂ = (1 + 1/β) C_Ω²`.
pub fn weights(beta: f64, c_omega: f64) -> (f64, f64) {
    (1.0 + beta, (1.0 + 1.0 / beta) * c_omega * c_omega)
}

/// Minimiser of `(1+β)B₁ + (1+1/β)C²B₂` over β; `None` when `B₁ = 0 < B₂`.
pub fn beta_update(b1: f64, b2: f64, c_omega: f64) -> Option<f64> {
    if b1 > 0.0 {
        let beta = c_omega * (b2 / b1).sqrt();
        // B₂ = 0 would give β = 0; any small positive value is then optimal
        Some(if beta > 0.0 {
            beta
        } else {
            f64::MIN_POSITIVE.sqrt()
        })
    } else {
        None
    }
}

/// Alternates the flux solve for fixed β with the closed-form β update.
/// `npts_b` is the point count for the `B` integrals on the primal grid.
pub fn minimize_majorant(
    config: &MajorantConfig,
    systems: &MajorantSystems,
    yspace: &VectorSpace,
    u_h: &DiscreteFunction,
    problem: &ProblemSpec,
    npts_b: usize,
) -> Result<MajorantResult> {
    config.validate()?;
    let c = config.c_omega;
    let mut beta = config.beta0;
    let mut trace = Vec::new();
    let mut solve_time = Duration::ZERO;
    let mut capped = false;
    let mut prev_m2: Option<f64> = None;
    let mut last = None;
    for _ in 0..config.max_iterations {
        let (a1, a2) = weights(beta, c);
        let l = systems.l1.linear_combination(a1, &systems.l2, a2)?;
        let r: Vec<f64> = systems
            .r1
            .iter()
            .zip(&systems.r2)
            .map(|(x, y)| a1 * x - a2 * y)
            .collect();
        let t0 = Instant::now();
        let sol = config.solver.solve(&l, &r, FLUX_TOL)?;
        solve_time += t0.elapsed();
        let flux = DiscreteVectorField::new(yspace.clone(), sol.solution)?;
        let bt = compute_b_terms(&flux, u_h, problem, npts_b)?;
        beta = match beta_update(bt.b1, bt.b2, c) {
            Some(b) => b,
            None => {
                capped = true;
                BETA_CAP
            }
        };
        let (a1, a2) = weights(beta, c);
        let m2 = a1 * bt.b1 + a2 * bt.b2;
        trace.push((beta, m2.sqrt()));
        last = Some((bt, flux));
        let done = prev_m2.is_some_and(|p| (p - m2).abs() <= config.convergence_rtol * p);
        prev_m2 = Some(m2);
        if done {
            break;
        }
    }
    let (bt, flux) = last.expect("at least one iteration");
    let (a1, a2) = weights(beta, c);
    let (a1b1, a2b2) = (a1 * bt.b1, a2 * bt.b2);
    Ok(MajorantResult {
        b1: bt.b1,
        b2: bt.b2,
        beta,
        a1,
        a2,
        a1b1,
        a2b2,
        majorant: (a1b1 + a2b2).sqrt(),
        eta2: bt.b1_cells,
        trace,
        beta_capped: capped,
        flux,
        solve_time,
    })
}

pub fn efficiency_index(majorant: f64, exact_error: f64) -> Result<f64> {
    if !(exact_error > 0.0) {
        return Err(Error::ZeroExactError);
    }
    Ok(majorant / exact_error)
}

/// `(a₁B₁ > C⊕ a₂B₂, a₁B₁ / a₂B₂)`.
pub fn quality_check(a1b1: f64, a2b2: f64, c_plus: f64) -> (bool, f64) {
    let ratio = if a2b2 == 0.0 {
        f64::INFINITY
    } else {
        a1b1 / a2b2
    };
    (a1b1 > c_plus * a2b2, ratio)
}

/// Threshold of the ψ-percentage marking: the ascending order statistic at
/// 1-based position `⌈N (100 − ψ) / 100⌉`.
pub fn marking_threshold(values: &[f64], psi: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::EmptyCells);
    }
    if !(psi > 0.0 && psi < 100.0) {
        return Err(Error::InvalidInput(format!(
            "psi must lie in (0, 100), got {psi}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let pos = ((n as f64) * (100.0 - psi) / 100.0 - 1e-9)
        .ceil()
        .clamp(1.0, n as f64) as usize;
    Ok(sorted[pos - 1])
}

/// Cells whose value exceeds the ψ-percentage threshold.
pub fn mark_cells(values: &[f64], psi: f64) -> Result<Vec<bool>> {
    let theta = marking_threshold(values, psi)?;
    Ok(values.iter().map(|&v| v > theta).collect())
}
