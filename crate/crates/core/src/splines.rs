//! Knot vectors, univariate B-spline evaluation and tensor-product
//! (rational) spline spaces.
//!
//! All spaces live on the parameter domain `(0,1)²`. Refined spaces that sit
//! on top of a NURBS geometry are represented as plain B-splines on the
//! refined knots divided by the geometry's fixed denominator `W(ξ)`; this spans
//! the same space as knot-inserted NURBS without transforming weights.

use std::sync::Arc;

use crate::error::{Error, Result};

/// Largest polynomial degree supported by the fixed-size evaluation buffers.
pub const MAX_DEGREE: usize = 12;
const MAX_LOCAL: usize = MAX_DEGREE + 1;

/// Tolerance used when comparing knot values.
const KNOT_EPS: f64 = 1e-14;

/// Open knot vector on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotVector {
    degree: usize,
    knots: Vec<f64>,
}

/// A non-empty knot span `[lo, hi)`; `index` is the position of `lo` in the
/// knot sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub index: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Span {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

impl KnotVector {
    pub fn new(degree: usize, knots: Vec<f64>) -> Result<Self> {
        if degree > MAX_DEGREE {
            return Err(Error::InvalidKnots(format!(
                "degree {degree} exceeds maximum {MAX_DEGREE}"
            )));
        }
        let m = knots.len();
        if m < 2 * (degree + 1) {
            return Err(Error::InvalidKnots(format!(
                "{m} knots is too few for degree {degree}"
            )));
        }
        if knots.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(Error::InvalidKnots("knots are not non-decreasing".into()));
        }
        if knots[0] != 0.0 || knots[m - 1] != 1.0 {
            return Err(Error::InvalidKnots(
                "knots must start at 0 and end at 1".into(),
            ));
        }
        let kv = KnotVector { degree, knots };
        let (breaks, mults) = kv.breakpoints_with_multiplicity();
        let last = mults.len() - 1;
        if mults[0] != degree + 1 || mults[last] != degree + 1 {
            return Err(Error::InvalidKnots(format!(
                "boundary knots must have multiplicity exactly {}",
                degree + 1
            )));
        }
        if let Some((b, &mu)) = breaks[1..last]
            .iter()
            .zip(&mults[1..last])
            .find(|(_, &mu)| mu > degree)
        {
            return Err(Error::InvalidKnots(format!(
                "interior knot {b} has multiplicity {mu} > degree {degree}"
            )));
        }
        Ok(kv)
    }

    /// Builds the open knot vector of `degree` over strictly increasing
    /// `breakpoints` (including 0 and 1). `interior_multiplicities`, when
    /// given, lists one multiplicity per interior breakpoint.
    pub fn open(
        breakpoints: &[f64],
        degree: usize,
        interior_multiplicities: Option<&[usize]>,
    ) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidKnots(
                "need at least the breakpoints 0 and 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidKnots(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let interior = &breakpoints[1..breakpoints.len() - 1];
        if let Some(mults) = interior_multiplicities {
            if mults.len() != interior.len() {
                return Err(Error::InvalidKnots(format!(
                    "{} multiplicities given for {} interior breakpoints",
                    mults.len(),
                    interior.len()
                )));
            }
            if let Some(&mu) = mults.iter().find(|&&mu| mu == 0 || mu > degree) {
                return Err(Error::InvalidKnots(format!(
                    "interior multiplicity {mu} not in 1..={degree}"
                )));
            }
        }
        let mut knots = vec![breakpoints[0]; degree + 1];
        for (k, &b) in interior.iter().enumerate() {
            let mu = interior_multiplicities.map_or(1, |m| m[k]);
            knots.extend(std::iter::repeat(b).take(mu));
        }
        knots.extend(std::iter::repeat(breakpoints[breakpoints.len() - 1]).take(degree + 1));
        KnotVector::new(degree, knots)
    }

    /// Uniform open knot vector with `spans` equal spans.
    pub fn uniform(spans: usize, degree: usize) -> Result<Self> {
        let spans = spans.max(1);
        let breaks: Vec<f64> = (0..=spans).map(|i| i as f64 / spans as f64).collect();
        KnotVector::open(&breaks, degree, None)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Number of basis functions `n = #knots − degree − 1`.
    pub fn n_basis(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Mesh size as reported in tables: interior spans including empty ones.
    pub fn mesh_spans(&self) -> usize {
        self.knots.len() - 1 - 2 * self.degree
    }

    fn breakpoints_with_multiplicity(&self) -> (Vec<f64>, Vec<usize>) {
        let mut breaks: Vec<f64> = Vec::new();
        let mut mults: Vec<usize> = Vec::new();
        for &k in &self.knots {
            match breaks.last() {
                Some(&b) if (k - b).abs() <= KNOT_EPS => *mults.last_mut().unwrap() += 1,
                _ => {
                    breaks.push(k);
                    mults.push(1);
                }
            }
        }
        (breaks, mults)
    }

    /// Distinct knot values, including 0 and 1.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints_with_multiplicity().0
    }

    pub fn interior_multiplicities(&self) -> Vec<usize> {
        let m = self.breakpoints_with_multiplicity().1;
        m[1..m.len() - 1].to_vec()
    }

    /// Non-empty knot spans in increasing order. These are the mesh cells.
    pub fn spans(&self) -> Vec<Span> {
        (self.degree..self.n_basis())
            .filter(|&i| self.knots[i + 1] > self.knots[i])
            .map(|i| Span {
                index: i,
                lo: self.knots[i],
                hi: self.knots[i + 1],
            })
            .collect()
    }

    pub fn n_cells(&self) -> usize {
        self.spans().len()
    }

    /// Span index `i` with `knots[i] <= xi < knots[i+1]`; `xi = 1` maps to the
    /// last non-empty span.
    pub fn find_span(&self, xi: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::ParameterOutOfRange { value: xi });
        }
        Ok(self.find_span_unchecked(xi))
    }

    fn find_span_unchecked(&self, xi: f64) -> usize {
        let n = self.n_basis();
        let upper = self.knots.partition_point(|&k| k <= xi);
        upper.saturating_sub(1).clamp(self.degree, n - 1)
    }

    /// Values and derivatives (up to order `max_deriv`) of the `degree + 1`
    /// basis functions that may be non-zero at `xi`.
    pub fn eval_basis(&self, xi: f64, max_deriv: usize) -> Result<UnivariateBasis> {
        if max_deriv > 2 {
            return Err(Error::DerivativeOrder {
                order: max_deriv,
                max: 2,
            });
        }
        let span = self.find_span(xi)?;
        Ok(self.eval_basis_in_span(span, xi, max_deriv))
    }

    /// Evaluation in a known span; `xi` may lie on the span's closure.
    pub fn eval_basis_in_span(&self, span: usize, xi: f64, max_deriv: usize) -> UnivariateBasis {
        let mut out = UnivariateBasis {
            first: span - self.degree,
            degree: self.degree,
            ders: [[0.0; MAX_LOCAL]; 3],
        };
        ders_basis_funs(
            &self.knots,
            self.degree,
            span,
            xi,
            max_deriv.min(2),
            &mut out.ders,
        );
        out
    }

    /// Bisects every non-empty span.
    pub fn refine_uniform(&self) -> KnotVector {
        let all: Vec<usize> = (0..self.n_cells()).collect();
        self.bisect_cells(&all)
    }

    /// Inserts the midpoint of each listed cell (ordinal among non-empty spans)
    /// with multiplicity one.
    pub fn bisect_cells(&self, cells: &[usize]) -> KnotVector {
        let spans = self.spans();
        let mut mids: Vec<f64> = cells
            .iter()
            .filter_map(|&c| spans.get(c).map(Span::midpoint))
            .collect();
        if mids.is_empty() {
            return self.clone();
        }
        mids.sort_by(f64::total_cmp);
        mids.dedup();
        let mut knots = Vec::with_capacity(self.knots.len() + mids.len());
        let mut it = mids.into_iter().peekable();
        for &k in &self.knots {
            while let Some(&m) = it.peek() {
                if m < k {
                    knots.push(m);
                    it.next();
                } else {
                    break;
                }
            }
            knots.push(k);
        }
        KnotVector {
            degree: self.degree,
            knots,
        }
    }

    /// Keeps every `factor`-th distinct interior breakpoint, counting from the
    /// left, with multiplicity one.
    pub fn coarsen_by_factor(&self, factor: usize) -> KnotVector {
        let factor = factor.max(1);
        let breaks = self.breakpoints();
        let interior = &breaks[1..breaks.len() - 1];
        let mut kept = vec![0.0];
        kept.extend(
            interior
                .iter()
                .enumerate()
                .filter(|(k, _)| (k + 1) % factor == 0)
                .map(|(_, &b)| b),
        );
        kept.push(1.0);
        KnotVector::open(&kept, self.degree, None).expect("coarsened breakpoints are valid")
    }

    /// Maximal-smoothness open knot vector of degree `degree + increment` over
    /// this vector's breakpoints.
    pub fn elevated(&self, increment: usize) -> Result<KnotVector> {
        elevate_space(&self.breakpoints(), self.degree, increment)
    }
}

/// Maximal-smoothness knot vector of degree `base_degree + increment` over
/// the given breakpoints.
pub fn elevate_space(
    breakpoints: &[f64],
    base_degree: usize,
    increment: usize,
) -> Result<KnotVector> {
    KnotVector::open(breakpoints, base_degree + increment, None)
}

/// Bisects direction-1 spans that contain a marked column and direction-2
/// spans that contain a marked row. Cells are `(column, row)` ordinals among
/// the non-empty spans.
pub fn refine_marked(
    kv1: &KnotVector,
    kv2: &KnotVector,
    marked: &[(usize, usize)],
) -> (KnotVector, KnotVector) {
    let cols: Vec<usize> = marked.iter().map(|c| c.0).collect();
    let rows: Vec<usize> = marked.iter().map(|c| c.1).collect();
    (kv1.bisect_cells(&cols), kv2.bisect_cells(&rows))
}

/// Non-zero univariate basis functions at a point, with up to two
/// derivatives.
#[derive(Debug, Clone, Copy)]
pub struct UnivariateBasis {
    pub first: usize,
    degree: usize,
    ders: [[f64; MAX_LOCAL]; 3],
}

impl UnivariateBasis {
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `d`-th derivative of the `k`-th local function (global `first + k`).
    #[inline]
    pub fn get(&self, d: usize, k: usize) -> f64 {
        self.ders[d][k]
    }

    pub fn values(&self, d: usize) -> &[f64] {
        &self.ders[d][..self.degree + 1]
    }
}

// Derivatives of the non-vanishing B-splines via the triangular table of
// knot differences (Piegl & Tiller, A2.3). On a non-empty span every divisor
// is at least the span width.
fn ders_basis_funs(
    knots: &[f64],
    p: usize,
    span: usize,
    u: f64,
    n: usize,
    ders: &mut [[f64; MAX_LOCAL]; 3],
) {
    let mut ndu = [[0.0f64; MAX_LOCAL]; MAX_LOCAL];
    let mut left = [0.0f64; MAX_LOCAL];
    let mut right = [0.0f64; MAX_LOCAL];
    ndu[0][0] = 1.0;
    for j in 1..=p {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        let mut saved = 0.0;
        for r in 0..j {
            ndu[j][r] = right[r + 1] + left[j - r];
            let temp = ndu[r][j - 1] / ndu[j][r];
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for j in 0..=p {
        ders[0][j] = ndu[j][p];
    }
    let nd = n.min(p);
    for row in ders.iter_mut().skip(1) {
        row.iter_mut().for_each(|v| *v = 0.0);
    }
    if nd == 0 {
        return;
    }
    let mut a = [[0.0f64; MAX_LOCAL]; 2];
    for r in 0..=p {
        let (mut s1, mut s2) = (0usize, 1usize);
        a[0][0] = 1.0;
        for k in 1..=nd {
            let mut d = 0.0;
            let rk = r as isize - k as isize;
            let pk = p - k;
            if r >= k {
                let rk = rk as usize;
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            let j1: usize = if rk >= -1 { 1 } else { (-rk) as usize };
            let j2: usize = if (r as isize - 1) <= pk as isize {
                k - 1
            } else {
                p - r
            };
            for j in j1..=j2 {
                let idx = (rk + j as isize) as usize;
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                d += a[s2][j] * ndu[idx][pk];
            }
            if r <= pk {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::mem::swap(&mut s1, &mut s2);
        }
    }
    let mut factor = p as f64;
    for k in 1..=nd {
        for j in 0..=p {
            ders[k][j] *= factor;
        }
        factor *= (p - k) as f64;
    }
}

/// Bivariate weighted sum `W(ξ) = Σ w_ij B_i(ξ₁) B_j(ξ₂)`: the denominator of
/// a NURBS geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    kv: [KnotVector; 2],
    weights: Vec<f64>,
}

/// `W` with gradient and second derivatives `(∂₁₁, ∂₁₂, ∂₂₂)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightEval {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl WeightEval {
    pub const ONE: WeightEval = WeightEval {
        value: 1.0,
        grad: [0.0; 2],
        hess: [0.0; 3],
    };
}

impl WeightFunction {
    pub fn new(kv1: KnotVector, kv2: KnotVector, weights: Vec<f64>) -> Result<Self> {
        let n = kv1.n_basis() * kv2.n_basis();
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|&&w| !(w > 0.0)) {
            return Err(Error::NonPositiveWeight(w));
        }
        Ok(WeightFunction {
            kv: [kv1, kv2],
            weights,
        })
    }

    pub fn knot_vectors(&self) -> &[KnotVector; 2] {
        &self.kv
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn is_constant_one(&self) -> bool {
        self.weights.iter().all(|&w| w == 1.0)
    }

    pub fn eval(&self, xi: [f64; 2]) -> Result<WeightEval> {
        let b1 = self.kv[0].eval_basis(xi[0], 2)?;
        let b2 = self.kv[1].eval_basis(xi[1], 2)?;
        self.eval_tables(&b1, &b2)
    }

    /// `W` from univariate tables of this function's own knot vectors
    /// (evaluated with two derivatives).
    pub fn eval_tables(&self, b1: &UnivariateBasis, b2: &UnivariateBasis) -> Result<WeightEval> {
        let n1 = self.kv[0].n_basis();
        let mut out = WeightEval {
            value: 0.0,
            grad: [0.0; 2],
            hess: [0.0; 3],
        };
        for l in 0..b2.len() {
            for k in 0..b1.len() {
                let w = self.weights[(b1.first + k) + n1 * (b2.first + l)];
                out.value += w * b1.get(0, k) * b2.get(0, l);
                out.grad[0] += w * b1.get(1, k) * b2.get(0, l);
                out.grad[1] += w * b1.get(0, k) * b2.get(1, l);
                out.hess[0] += w * b1.get(2, k) * b2.get(0, l);
                out.hess[1] += w * b1.get(1, k) * b2.get(1, l);
                out.hess[2] += w * b1.get(0, k) * b2.get(2, l);
            }
        }
        if !(out.value > 0.0) {
            return Err(Error::NonPositiveWeight(out.value));
        }
        Ok(out)
    }
}

/// Tensor-product spline space `S^{p,q}` on `(0,1)²`, optionally rational.
///
/// Basis function `(i,j)` is `w_ij B_i B_j / W` where `W` is the attached
/// weight function (or 1) and `w_ij` are the optional numerator weights
/// (only set for a geometry's own basis; otherwise 1). Dofs are numbered
/// lexicographically `i + n₁·j`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplineSpace2D {
    kv: [KnotVector; 2],
    weight: Option<Arc<WeightFunction>>,
    numerators: Option<Arc<[f64]>>,
}

/// Local basis data at one parameter point.
#[derive(Debug, Clone, Default)]
pub struct BasisEval {
    pub first: [usize; 2],
    pub nloc: [usize; 2],
    pub values: Vec<f64>,
    /// Parameter-domain gradients.
    pub grads: Vec<[f64; 2]>,
    /// Parameter-domain second derivatives `(∂₁₁, ∂₁₂, ∂₂₂)`; empty unless
    /// requested.
    pub hess: Vec<[f64; 3]>,
    n1: usize,
}

impl BasisEval {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Global dof of local function `a` (local numbering `a₁ + nloc₁·a₂`).
    #[inline]
    pub fn global(&self, a: usize) -> usize {
        let a1 = a % self.nloc[0];
        let a2 = a / self.nloc[0];
        (self.first[0] + a1) + self.n1 * (self.first[1] + a2)
    }

    pub fn globals(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).map(move |a| self.global(a))
    }
}

impl SplineSpace2D {
    pub fn new(kv1: KnotVector, kv2: KnotVector) -> Self {
        SplineSpace2D {
            kv: [kv1, kv2],
            weight: None,
            numerators: None,
        }
    }

    /// Attaches a fixed rational denominator. Constant-one weights are
    /// dropped so that B-spline geometries yield plain B-spline spaces.
    pub fn with_weight(mut self, weight: Option<Arc<WeightFunction>>) -> Self {
        self.weight = weight.filter(|w| !w.is_constant_one());
        self
    }

    /// The NURBS basis of a geometry itself: numerator weights equal to the
    /// denominator's weights.
    pub fn geometry_basis(weight: Arc<WeightFunction>) -> Self {
        let [kv1, kv2] = weight.knot_vectors().clone();
        let numerators: Arc<[f64]> = weight.weights().into();
        SplineSpace2D {
            kv: [kv1, kv2],
            weight: Some(weight),
            numerators: Some(numerators),
        }
    }

    pub fn kv(&self, dir: usize) -> &KnotVector {
        &self.kv[dir]
    }

    pub fn knot_vectors(&self) -> &[KnotVector; 2] {
        &self.kv
    }

    pub fn weight_function(&self) -> Option<&Arc<WeightFunction>> {
        self.weight.as_ref()
    }

    pub fn degrees(&self) -> [usize; 2] {
        [self.kv[0].degree(), self.kv[1].degree()]
    }

    pub fn n(&self, dir: usize) -> usize {
        self.kv[dir].n_basis()
    }

    pub fn dof_count(&self) -> usize {
        self.n(0) * self.n(1)
    }

    pub fn dof_index(&self, i: usize, j: usize) -> usize {
        i + self.n(0) * j
    }

    /// Mesh size in the table convention (empty spans counted).
    pub fn mesh_size(&self) -> (usize, usize) {
        (self.kv[0].mesh_spans(), self.kv[1].mesh_spans())
    }

    /// Number of non-empty cells per direction.
    pub fn cell_counts(&self) -> (usize, usize) {
        (self.kv[0].n_cells(), self.kv[1].n_cells())
    }

    pub fn with_knots(&self, kv1: KnotVector, kv2: KnotVector) -> SplineSpace2D {
        SplineSpace2D {
            kv: [kv1, kv2],
            weight: self.weight.clone(),
            numerators: None,
        }
    }

    /// Evaluates the local rational basis at `xi`.
    pub fn eval_rational_basis_2d(&self, xi: [f64; 2], max_deriv: usize) -> Result<BasisEval> {
        if max_deriv > 2 {
            return Err(Error::DerivativeOrder {
                order: max_deriv,
                max: 2,
            });
        }
        let w = match &self.weight {
            Some(wf) => Some(wf.eval(xi)?),
            None => None,
        };
        let s1 = self.kv[0].find_span(xi[0])?;
        let s2 = self.kv[1].find_span(xi[1])?;
        let mut out = BasisEval::default();
        self.eval_in_spans([s1, s2], xi, max_deriv, w.as_ref(), &mut out);
        Ok(out)
    }

    /// Evaluation with known spans and a precomputed denominator, writing into
    /// a reusable buffer. `w` must be the attached weight function evaluated
    /// at `xi` (ignored for polynomial spaces).
    pub fn eval_in_spans(
        &self,
        spans: [usize; 2],
        xi: [f64; 2],
        max_deriv: usize,
        w: Option<&WeightEval>,
        out: &mut BasisEval,
    ) {
        let b1 = self.kv[0].eval_basis_in_span(spans[0], xi[0], max_deriv);
        let b2 = self.kv[1].eval_basis_in_span(spans[1], xi[1], max_deriv);
        self.combine(&b1, &b2, max_deriv, w, out);
    }

    /// Tensor combination of univariate tables, followed by the quotient rule
    /// when the space is rational.
    pub fn combine(
        &self,
        b1: &UnivariateBasis,
        b2: &UnivariateBasis,
        max_deriv: usize,
        w: Option<&WeightEval>,
        out: &mut BasisEval,
    ) {
        let (l1, l2) = (b1.len(), b2.len());
        let nloc = l1 * l2;
        out.first = [b1.first, b2.first];
        out.nloc = [l1, l2];
        out.n1 = self.n(0);
        out.values.clear();
        out.grads.clear();
        out.hess.clear();
        let want_hess = max_deriv >= 2;
        let n1 = self.n(0);
        for l in 0..l2 {
            for k in 0..l1 {
                let c = match &self.numerators {
                    Some(nw) => nw[(b1.first + k) + n1 * (b2.first + l)],
                    None => 1.0,
                };
                out.values.push(c * b1.get(0, k) * b2.get(0, l));
                if max_deriv >= 1 {
                    out.grads.push([
                        c * b1.get(1, k) * b2.get(0, l),
                        c * b1.get(0, k) * b2.get(1, l),
                    ]);
                }
                if want_hess {
                    out.hess.push([
                        c * b1.get(2, k) * b2.get(0, l),
                        c * b1.get(1, k) * b2.get(1, l),
                        c * b1.get(0, k) * b2.get(2, l),
                    ]);
                }
            }
        }
        let w = match (&self.weight, w) {
            (Some(_), Some(w)) => *w,
            _ => return,
        };
        let inv = 1.0 / w.value;
        for a in 0..nloc {
            let r = out.values[a] * inv;
            out.values[a] = r;
            if max_deriv >= 1 {
                let n = out.grads[a];
                let g = [(n[0] - r * w.grad[0]) * inv, (n[1] - r * w.grad[1]) * inv];
                out.grads[a] = g;
                if want_hess {
                    let h = out.hess[a];
                    out.hess[a] = [
                        (h[0] - 2.0 * g[0] * w.grad[0] - r * w.hess[0]) * inv,
                        (h[1] - g[0] * w.grad[1] - g[1] * w.grad[0] - r * w.hess[1]) * inv,
                        (h[2] - 2.0 * g[1] * w.grad[1] - r * w.hess[2]) * inv,
                    ];
                }
            }
        }
    }
}

/// Coefficients over a scalar spline space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteFunction {
    pub space: SplineSpace2D,
    pub coefficients: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(space: SplineSpace2D, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: space.dof_count(),
                got: coefficients.len(),
            });
        }
        Ok(DiscreteFunction {
            space,
            coefficients,
        })
    }

    /// Value and parameter gradient at `xi`.
    pub fn eval_param(&self, xi: [f64; 2]) -> Result<(f64, [f64; 2])> {
        let b = self.space.eval_rational_basis_2d(xi, 1)?;
        Ok(contract(&b, &self.coefficients))
    }
}

/// Sums `c_a φ_a` and `c_a ∇φ_a` over the local basis.
pub fn contract(b: &BasisEval, coefficients: &[f64]) -> (f64, [f64; 2]) {
    let mut v = 0.0;
    let mut g = [0.0; 2];
    for a in 0..b.len() {
        let c = coefficients[b.global(a)];
        v += c * b.values[a];
        if !b.grads.is_empty() {
            g[0] += c * b.grads[a][0];
            g[1] += c * b.grads[a][1];
        }
    }
    (v, g)
}

/// How a parameter-domain vector field is carried to the physical domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorTransform {
    /// `y = ŷ ∘ G⁻¹`.
    Componentwise,
    /// `y = (1/det J) J ŷ`.
    Piola,
}

/// Pair of scalar spaces carrying the two components of a flux field.
/// Component 1 dofs come first.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorSpace {
    pub components: [SplineSpace2D; 2],
    pub transform: VectorTransform,
}

impl VectorSpace {
    pub fn dof_count(&self) -> usize {
        self.components[0].dof_count() + self.components[1].dof_count()
    }

    pub fn offset(&self, comp: usize) -> usize {
        if comp == 0 {
            0
        } else {
            self.components[0].dof_count()
        }
    }

    pub fn max_degree(&self) -> usize {
        self.components
            .iter()
            .flat_map(|s| s.degrees())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteVectorField {
    pub space: VectorSpace,
    pub coefficients: Vec<f64>,
}

impl DiscreteVectorField {
    pub fn new(space: VectorSpace, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != space.dof_count() {
            return Err(Error::DimensionMismatch {
                expected: space.dof_count(),
                got: coefficients.len(),
            });
        }
        Ok(DiscreteVectorField {
            space,
            coefficients,
        })
    }
}
