//! Uniform and adaptive studies, timing, and report files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::assembly::{
    apply_dirichlet, assemble_majorant_systems, assemble_primal, boundary_coefficients,
    exact_energy_error,
};
use crate::error::{Error, Result};
use crate::linsolve::{SolverKind, DEFAULT_TOL};
use crate::majorant::{
    build_flux_space, c_omega_for, efficiency_index, mark_cells, minimize_majorant, quality_check,
    FluxCase, MajorantConfig, MajorantResult,
};
use crate::problems::ProblemSpec;
use crate::splines::{refine_marked, DiscreteFunction, SplineSpace2D};

pub const CSV_HEADER: &str =
    "level,spans_s,spans_t,dof_u,dof_y,a1B1,a2B2,majorant,exact_error,ieff,ratio,criterion,t_asm_pde,t_solve_pde,t_asm_est,t_solve_est";

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub psi: f64,
    pub c_plus: f64,
    pub iterations: usize,
    pub beta0: f64,
    /// Points per direction for every volume integral; `None` picks the
    /// primal degree plus one. Cells are always those of the merged primal,
    /// flux and geometry meshes.
    pub quad: Option<usize>,
    pub solver: SolverKind,
    /// Overrides the Friedrichs-type constant derived from the problem.
    pub c_omega: Option<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            psi: 20.0,
            c_plus: 5.0,
            iterations: 2,
            beta0: 0.01,
            quad: None,
            solver: SolverKind::Direct,
            c_omega: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub level: usize,
    pub spans: [usize; 2],
    pub dof_u: usize,
    pub dof_y: usize,
    pub a1b1: f64,
    pub a2b2: f64,
    pub majorant: f64,
    pub exact_error: Option<f64>,
    pub ieff: Option<f64>,
    pub ratio: f64,
    pub criterion: bool,
    pub t_asm_pde: f64,
    pub t_solve_pde: f64,
    pub t_asm_est: f64,
    pub t_solve_est: f64,
}

impl StudyRow {
    pub fn ratio_assembly(&self) -> f64 {
        self.t_asm_est / self.t_asm_pde
    }

    pub fn ratio_solve(&self) -> f64 {
        self.t_solve_est / self.t_solve_pde
    }

    pub fn ratio_sum(&self) -> f64 {
        (self.t_asm_est + self.t_solve_est) / (self.t_asm_pde + self.t_solve_pde)
    }

    pub fn csv_line(&self) -> String {
        let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.level,
            self.spans[0],
            self.spans[1],
            self.dof_u,
            self.dof_y,
            sci(self.a1b1),
            sci(self.a2b2),
            sci(self.majorant),
            opt(self.exact_error),
            opt(self.ieff),
            sci(self.ratio),
            self.criterion,
            sci(self.t_asm_pde),
            sci(self.t_solve_pde),
            sci(self.t_asm_est),
            sci(self.t_solve_est),
        )
    }
}

/// Scientific notation with six significant digits.
pub fn sci(v: f64) -> String {
    format!("{v:.5e}")
}

/// Marked cells of one level, indexed `c₁ + n₁·c₂` over non-empty spans.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellMap {
    pub dims: [usize; 2],
    pub estimator: Vec<bool>,
    pub exact: Vec<bool>,
}

impl CellMap {
    pub fn new(dims: [usize; 2], estimator: Vec<bool>, exact: Vec<bool>) -> Result<Self> {
        let n = dims[0] * dims[1];
        for v in [&estimator, &exact] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
        }
        Ok(CellMap {
            dims,
            estimator,
            exact,
        })
    }

    /// 0 unmarked, 1 estimator only, 2 exact only, 3 both.
    pub fn code(&self, c1: usize, c2: usize) -> u8 {
        let i = c1 + self.dims[0] * c2;
        self.estimator[i] as u8 + 2 * self.exact[i] as u8
    }

    /// One line per row of cells, first parameter along the line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for c2 in 0..self.dims[1] {
            for c1 in 0..self.dims[0] {
                s.push(['.', 'E', 'X', 'B'][self.code(c1, c2) as usize]);
            }
            s.push('\n');
        }
        s
    }

    pub fn to_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n3\n", self.dims[0], self.dims[1]);
        for c2 in 0..self.dims[1] {
            let line: Vec<String> = (0..self.dims[0])
                .map(|c1| self.code(c1, c2).to_string())
                .collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }

    /// Fraction of cells on which both markings agree.
    pub fn agreement(&self) -> f64 {
        let same = self
            .estimator
            .iter()
            .zip(&self.exact)
            .filter(|(a, b)| a == b)
            .count();
        same as f64 / self.estimator.len() as f64
    }

    pub fn marked_estimator(&self) -> Vec<(usize, usize)> {
        (0..self.estimator.len())
            .filter(|&i| self.estimator[i])
            .map(|i| (i % self.dims[0], i / self.dims[0]))
            .collect()
    }
}

/// Everything computed on one mesh.
#[derive(Debug, Clone)]
pub struct LevelData {
    pub row: StudyRow,
    pub map: CellMap,
    pub majorant: MajorantResult,
    pub u_h: DiscreteFunction,
    pub exact_cells: Option<Vec<f64>>,
}

fn primal_points(space: &SplineSpace2D, quad: Option<usize>) -> usize {
    quad.unwrap_or_else(|| space.degrees().into_iter().max().unwrap_or(1) + 1)
}

/// Galerkin solution on `space` with Dirichlet data; returns the solution and
/// the assembly and solve times in seconds.
pub fn solve_primal(
    problem: &ProblemSpec,
    space: &SplineSpace2D,
    quad: Option<usize>,
    solver: SolverKind,
) -> Result<(DiscreteFunction, f64, f64)> {
    let t0 = Instant::now();
    let sys = assemble_primal(space, problem, primal_points(space, quad))?;
    let p = space.degrees().into_iter().max().unwrap_or(1);
    let bc = boundary_coefficients(space, &problem.geometry, &problem.u_d, (p + 3).min(16))?;
    let (k, f) = apply_dirichlet(&sys.k, &sys.f, &bc);
    let t_asm = t0.elapsed().as_secs_f64();
    let rep = solver.solve(&k, &f, DEFAULT_TOL)?;
    let t_solve = rep.wall_time.as_secs_f64();
    Ok((
        DiscreteFunction::new(space.clone(), rep.solution)?,
        t_asm,
        t_solve,
    ))
}

/// Solve, estimate, and mark on one mesh.
pub fn run_level(
    problem: &ProblemSpec,
    space: &SplineSpace2D,
    case: FluxCase,
    cfg: &StudyConfig,
    level: usize,
) -> Result<LevelData> {
    let (u_h, t_asm_pde, t_solve_pde) = solve_primal(problem, space, cfg.quad, cfg.solver)?;
    let yspace = build_flux_space(case, space)?;
    let p = space.degrees().into_iter().max().unwrap_or(1);
    let npts = primal_points(space, cfg.quad);

    let mut mcfg = MajorantConfig::new(
        match cfg.c_omega {
            Some(c) => c,
            None => c_omega_for(problem)?,
        },
        case,
    );
    mcfg.beta0 = cfg.beta0;
    mcfg.max_iterations = cfg.iterations;
    mcfg.c_plus = cfg.c_plus;
    mcfg.solver = cfg.solver;

    let t0 = Instant::now();
    let systems = assemble_majorant_systems(&yspace, problem, &u_h, npts, npts)?;
    let t_asm_est = t0.elapsed().as_secs_f64();
    let t0 = Instant::now();
    let res = minimize_majorant(&mcfg, &systems, &yspace, &u_h, problem, npts)?;
    let t_solve_est = t0.elapsed().as_secs_f64();

    let (exact_error, exact_cells) = if problem.has_exact() {
        let (e, cells) = exact_energy_error(&u_h, problem, (p + 3).max(npts).min(16))?;
        (Some(e), Some(cells))
    } else {
        (None, None)
    };
    let ieff = match exact_error {
        Some(e) if e > 0.0 => Some(efficiency_index(res.majorant, e)?),
        _ => None,
    };
    let (criterion, ratio) = quality_check(res.a1b1, res.a2b2, cfg.c_plus);
    let dims = [space.kv(0).n_cells(), space.kv(1).n_cells()];
    let est_marks = mark_cells(&res.eta2, cfg.psi)?;
    let exact_marks = match &exact_cells {
        Some(c) => mark_cells(c, cfg.psi)?,
        None => vec![false; est_marks.len()],
    };
    let (s1, s2) = space.mesh_size();
    let row = StudyRow {
        level,
        spans: [s1, s2],
        dof_u: space.dof_count(),
        dof_y: yspace.dof_count(),
        a1b1: res.a1b1,
        a2b2: res.a2b2,
        majorant: res.majorant,
        exact_error,
        ieff,
        ratio,
        criterion,
        t_asm_pde,
        t_solve_pde,
        t_asm_est,
        t_solve_est,
    };
    Ok(LevelData {
        row,
        map: CellMap::new(dims, est_marks, exact_marks)?,
        majorant: res,
        u_h,
        exact_cells,
    })
}

fn at_level<T>(level: usize, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::AtLevel {
        level,
        source: Box::new(e),
    })
}

/// The problem's initial primal space.
pub fn initial_space(problem: &ProblemSpec) -> SplineSpace2D {
    let [k1, k2] = problem.initial_knots.clone();
    problem.geometry.space_on(k1, k2)
}

/// Levels `0..=levels`, refining uniformly in between.
pub fn run_uniform_study(
    problem: &ProblemSpec,
    case: FluxCase,
    levels: usize,
    cfg: &StudyConfig,
) -> Result<Vec<LevelData>> {
    let mut space = initial_space(problem);
    let mut out = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        out.push(at_level(
            level,
            run_level(problem, &space, case, cfg, level),
        )?);
        if level < levels {
            space = space.with_knots(space.kv(0).refine_uniform(), space.kv(1).refine_uniform());
        }
    }
    Ok(out)
}

/// Example 5's schedule: Case 1 for four steps, Case 2 for three, Case 3
/// afterwards.
pub fn example5_schedule(steps: usize) -> Vec<FluxCase> {
    (0..steps)
        .map(|s| match s {
            0..=3 => FluxCase::CASE1,
            4..=6 => FluxCase::CASE2,
            _ => FluxCase::CASE3,
        })
        .collect()
}

/// `steps` adaptive steps; step `s` uses `schedule[s]` and refines the cells
/// marked by the majorant indicator with `cfg.psi`.
pub fn run_adaptive_study(
    problem: &ProblemSpec,
    schedule: &[FluxCase],
    steps: usize,
    cfg: &StudyConfig,
) -> Result<Vec<LevelData>> {
    if schedule.len() < steps {
        return Err(Error::InvalidInput(format!(
            "case schedule has {} entries for {steps} steps",
            schedule.len()
        )));
    }
    let mut space = initial_space(problem);
    let mut out = Vec::with_capacity(steps);
    for step in 0..steps {
        let data = at_level(step, run_level(problem, &space, schedule[step], cfg, step))?;
        let marked = data.map.marked_estimator();
        let (k1, k2) = refine_marked(space.kv(0), space.kv(1), &marked);
        space = space.with_knots(k1, k2);
        out.push(data);
    }
    Ok(out)
}

/// Writes `study.csv` and one text and one PGM cell map per level.
pub fn emit_reports(rows: &[StudyRow], maps: &[CellMap], out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in rows {
        csv.push_str(&r.csv_line());
        csv.push('\n');
    }
    std::fs::write(out_dir.join("study.csv"), csv)?;
    for (i, m) in maps.iter().enumerate() {
        std::fs::write(out_dir.join(format!("cells_{i:02}.txt")), m.to_text())?;
        std::fs::write(out_dir.join(format!("cells_{i:02}.pgm")), m.to_pgm())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cellmap_encoding() {
        let m = CellMap::new(
            [2, 2],
            vec![true, false, false, false],
            vec![true, false, false, true],
        )
        .unwrap();
        assert_eq!(m.to_text(), "B.\n.X\n");
        assert_eq!(m.to_pgm(), "P2\n2 2\n3\n3 0\n0 2\n");
        assert_eq!(m.agreement(), 0.75);
        assert!(CellMap::new([2, 2], vec![true], vec![true; 4]).is_err());
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci(1.11e-3), "1.11000e-3");
        assert_eq!(sci(123456.7), "1.23457e5");
    }

    #[test]
    fn schedule() {
        let s = example5_schedule(9);
        assert_eq!(s[3], FluxCase::CASE1);
        assert_eq!(s[4], FluxCase::CASE2);
        assert_eq!(s[6], FluxCase::CASE2);
        assert_eq!(s[7], FluxCase::CASE3);
    }
}
