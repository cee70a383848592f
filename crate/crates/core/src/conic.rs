//! Real-valued conic programs (linear objective; linear, second-order cone
//! and rotated second-order cone constraints) and the helpers that lift
//! complex beamformers into real variable blocks.
//!
//! Programs are solved with the Clarabel interior-point solver. Every
//! `Optimal` answer is re-checked against the original constraint data
//! before it is returned.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, SolverStatus, SupportedConeT,
};

use crate::error::{Error, Result};
use crate::linalg::{CMat, CVec, C64};

/// Absolute tolerance for linear rows and relative tolerance for cones
/// when accepting a solver answer.
pub const ACCEPT_TOL: f64 = 1e-7;

pub const DEFAULT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
}

/// `row . x + constant`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub row: Vec<f64>,
    pub constant: f64,
}

impl Affine {
    pub fn new(row: Vec<f64>, constant: f64) -> Self {
        Affine { row, constant }
    }

    pub fn constant(n_vars: usize, c: f64) -> Self {
        Affine { row: vec![0.0; n_vars], constant: c }
    }

    pub fn var(n_vars: usize, idx: usize) -> Self {
        let mut row = vec![0.0; n_vars];
        row[idx] = 1.0;
        Affine { row, constant: 0.0 }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.row, x) + self.constant
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub row: Vec<f64>,
    pub rhs: f64,
    pub sense: Sense,
}

/// `||A x + d|| <= g . x + h`.
#[derive(Debug, Clone, PartialEq)]
pub struct SocConstraint {
    pub a: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub g: Vec<f64>,
    pub h: f64,
}

/// `||A x + d||^2 <= p(x) q(x)`, `p(x) >= 0`, `q(x) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RsocConstraint {
    pub a: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    pub p: Affine,
    pub q: Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintId {
    Linear(usize),
    Soc(usize),
    Rsoc(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeProgram {
    n_vars: usize,
    objective: Vec<f64>,
    linear: Vec<LinearConstraint>,
    soc: Vec<SocConstraint>,
    rsoc: Vec<RsocConstraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConeSolution {
    pub status: ConeStatus,
    pub x: Vec<f64>,
    pub obj: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn affine_rows(a: &[Vec<f64>], d: &[f64], x: &[f64]) -> Vec<f64> {
    a.iter().zip(d).map(|(row, di)| dot(row, x) + di).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl ConeProgram {
    pub fn new(n_vars: usize) -> Self {
        ConeProgram { n_vars, objective: vec![0.0; n_vars], linear: vec![], soc: vec![], rsoc: vec![] }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_objective(&mut self, c: Vec<f64>) -> Result<()> {
        self.check_row(&c, "objective")?;
        self.objective = c;
        Ok(())
    }

    fn check_row(&self, row: &[f64], what: &str) -> Result<()> {
        if row.len() != self.n_vars {
            return Err(Error::DimensionMismatch(format!(
                "{what} row has {} entries for {} variables",
                row.len(),
                self.n_vars
            )));
        }
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("{what} row has non-finite coefficients")));
        }
        Ok(())
    }

    fn check_map(&self, a: &[Vec<f64>], d: &[f64], what: &str) -> Result<()> {
        if a.len() != d.len() {
            return Err(Error::DimensionMismatch(format!("{what}: {} rows but {} offsets", a.len(), d.len())));
        }
        for row in a {
            self.check_row(row, what)?;
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("{what}: non-finite offset")));
        }
        Ok(())
    }

    pub fn add_linear(&mut self, row: Vec<f64>, sense: Sense, rhs: f64) -> Result<ConstraintId> {
        self.check_row(&row, "linear")?;
        if !rhs.is_finite() {
            return Err(Error::Domain("linear rhs is not finite".into()));
        }
        self.linear.push(LinearConstraint { row, rhs, sense });
        Ok(ConstraintId::Linear(self.linear.len() - 1))
    }

    /// `lhs(x) >= rhs(x)` for affine forms.
    pub fn add_ge(&mut self, lhs: &Affine, rhs: &Affine) -> Result<ConstraintId> {
        let row: Vec<f64> = rhs.row.iter().zip(&lhs.row).map(|(r, l)| r - l).collect();
        self.add_linear(row, Sense::Le, lhs.constant - rhs.constant)
    }

    pub fn add_soc(&mut self, a: Vec<Vec<f64>>, d: Vec<f64>, g: Vec<f64>, h: f64) -> Result<ConstraintId> {
        self.check_map(&a, &d, "soc")?;
        self.check_row(&g, "soc bound")?;
        self.soc.push(SocConstraint { a, d, g, h });
        Ok(ConstraintId::Soc(self.soc.len() - 1))
    }

    pub fn add_rsoc(&mut self, a: Vec<Vec<f64>>, d: Vec<f64>, p: Affine, q: Affine) -> Result<ConstraintId> {
        self.check_map(&a, &d, "rsoc")?;
        self.check_row(&p.row, "rsoc p")?;
        self.check_row(&q.row, "rsoc q")?;
        self.rsoc.push(RsocConstraint { a, d, p, q });
        Ok(ConstraintId::Rsoc(self.rsoc.len() - 1))
    }

    /// Slack of a constraint at `x`: nonnegative when satisfied. Linear rows
    /// report absolute slack, cones report slack relative to the size of
    /// both sides.
    pub fn slack(&self, id: ConstraintId, x: &[f64]) -> f64 {
        match id {
            ConstraintId::Linear(k) => {
                let c = &self.linear[k];
                let r = c.rhs - dot(&c.row, x);
                match c.sense {
                    Sense::Le => r,
                    Sense::Eq => -r.abs(),
                }
            }
            ConstraintId::Soc(k) => {
                let c = &self.soc[k];
                let lhs = norm(&affine_rows(&c.a, &c.d, x));
                let rhs = dot(&c.g, x) + c.h;
                (rhs - lhs) / lhs.abs().max(rhs.abs()).max(1.0)
            }
            ConstraintId::Rsoc(k) => {
                let c = &self.rsoc[k];
                let lhs = norm(&affine_rows(&c.a, &c.d, x));
                let (p, q) = (c.p.eval(x), c.q.eval(x));
                // compare as a standard cone: ||(2 lhs, p - q)|| <= p + q
                let cone_lhs = (4.0 * lhs * lhs + (p - q) * (p - q)).sqrt();
                (p + q - cone_lhs) / cone_lhs.max((p + q).abs()).max(1.0)
            }
        }
    }

    pub fn constraint_ids(&self) -> Vec<ConstraintId> {
        (0..self.linear.len())
            .map(ConstraintId::Linear)
            .chain((0..self.soc.len()).map(ConstraintId::Soc))
            .chain((0..self.rsoc.len()).map(ConstraintId::Rsoc))
            .collect()
    }

    /// Smallest slack over all constraints (`+inf` for an unconstrained program).
    pub fn min_slack(&self, x: &[f64]) -> f64 {
        self.constraint_ids().into_iter().map(|id| self.slack(id, x)).fold(f64::INFINITY, f64::min)
    }

    /// Assembles `A x + s = b, s in K` for the solver.
    fn assemble(&self) -> (CscMatrix<f64>, Vec<f64>, Vec<SupportedConeT<f64>>) {
        let mut rows: Vec<Vec<f64>> = vec![];
        let mut b = vec![];
        let mut cones = vec![];

        let eqs: Vec<_> = self.linear.iter().filter(|c| c.sense == Sense::Eq).collect();
        if !eqs.is_empty() {
            for c in &eqs {
                rows.push(c.row.clone());
                b.push(c.rhs);
            }
            cones.push(SupportedConeT::ZeroConeT(eqs.len()));
        }
        let les: Vec<_> = self.linear.iter().filter(|c| c.sense == Sense::Le).collect();
        if !les.is_empty() {
            for c in &les {
                rows.push(c.row.clone());
                b.push(c.rhs);
            }
            cones.push(SupportedConeT::NonnegativeConeT(les.len()));
        }
        let neg = |r: &[f64]| r.iter().map(|x| -x).collect::<Vec<_>>();
        for c in &self.soc {
            rows.push(neg(&c.g));
            b.push(c.h);
            for (r, d) in c.a.iter().zip(&c.d) {
                rows.push(neg(r));
                b.push(*d);
            }
            cones.push(SupportedConeT::SecondOrderConeT(1 + c.a.len()));
        }
        for c in &self.rsoc {
            // ||(2(Ax + d), p - q)|| <= p + q
            let sum: Vec<f64> = c.p.row.iter().zip(&c.q.row).map(|(p, q)| p + q).collect();
            let diff: Vec<f64> = c.p.row.iter().zip(&c.q.row).map(|(p, q)| p - q).collect();
            rows.push(neg(&sum));
            b.push(c.p.constant + c.q.constant);
            rows.push(neg(&diff));
            b.push(c.p.constant - c.q.constant);
            for (r, d) in c.a.iter().zip(&c.d) {
                rows.push(r.iter().map(|x| -2.0 * x).collect());
                b.push(2.0 * d);
            }
            cones.push(SupportedConeT::SecondOrderConeT(2 + c.a.len()));
        }

        let (mut ii, mut jj, mut vv) = (vec![], vec![], vec![]);
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                if x != 0.0 {
                    ii.push(i);
                    jj.push(j);
                    vv.push(x);
                }
            }
        }
        let a = CscMatrix::new_from_triplets(rows.len(), self.n_vars, ii, jj, vv);
        (a, b, cones)
    }
}

/// Solves `program` to the requested duality-gap tolerance.
pub fn solve(program: &ConeProgram, tol: f64) -> ConeSolution {
    let n = program.n_vars;
    if program.linear.is_empty() && program.soc.is_empty() && program.rsoc.is_empty() {
        // only the zero objective is bounded without constraints
        let status = if program.objective.iter().all(|&c| c == 0.0) {
            ConeStatus::Optimal
        } else {
            ConeStatus::Unbounded
        };
        return ConeSolution { status, x: vec![0.0; n], obj: 0.0 };
    }
    let (a, b, cones) = program.assemble();
    let p = CscMatrix::zeros((n, n));
    let settings = match DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(200)
        .tol_gap_abs(tol)
        .tol_gap_rel(tol)
        .tol_feas(tol)
        .build()
    {
        Ok(s) => s,
        Err(_) => return ConeSolution { status: ConeStatus::NumericFailure, x: vec![0.0; n], obj: f64::NAN },
    };
    let mut solver = match DefaultSolver::new(&p, &program.objective, &a, &b, &cones, settings) {
        Ok(s) => s,
        Err(_) => return ConeSolution { status: ConeStatus::NumericFailure, x: vec![0.0; n], obj: f64::NAN },
    };
    solver.solve();
    let sol = &solver.solution;
    let x = sol.x.clone();
    let obj = dot(&program.objective, &x);
    let status = match sol.status {
        SolverStatus::Solved | SolverStatus::AlmostSolved => {
            if x.iter().all(|v| v.is_finite()) && program.min_slack(&x) >= -ACCEPT_TOL {
                ConeStatus::Optimal
            } else {
                ConeStatus::NumericFailure
            }
        }
        SolverStatus::PrimalInfeasible | SolverStatus::AlmostPrimalInfeasible => ConeStatus::Infeasible,
        SolverStatus::DualInfeasible | SolverStatus::AlmostDualInfeasible => ConeStatus::Unbounded,
        _ => ConeStatus::NumericFailure,
    };
    ConeSolution { status, x, obj }
}

/// Solves at `tol`, retrying once at `10 * tol` on a numeric failure, and
/// turns non-optimal outcomes into errors tagged with `context`.
pub fn solve_checked(program: &ConeProgram, tol: f64, context: &str) -> Result<ConeSolution> {
    let mut sol = solve(program, tol);
    if sol.status == ConeStatus::NumericFailure {
        sol = solve(program, 10.0 * tol);
    }
    match sol.status {
        ConeStatus::Optimal => Ok(sol),
        ConeStatus::Infeasible => Err(Error::Infeasible(context.to_string())),
        ConeStatus::Unbounded => Err(Error::NumericFailure(format!("{context}: unbounded"))),
        ConeStatus::NumericFailure => Err(Error::NumericFailure(context.to_string())),
    }
}

/// A complex vector of length `dim` stored as real parts at
/// `offset..offset+dim` followed by imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ComplexBlock {
    pub offset: usize,
    pub dim: usize,
}

impl ComplexBlock {
    pub fn new(offset: usize, dim: usize) -> Self {
        ComplexBlock { offset, dim }
    }

    pub fn len(&self) -> usize {
        2 * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }

    pub fn end(&self) -> usize {
        self.offset + self.len()
    }

    fn re(&self, k: usize) -> usize {
        self.offset + k
    }

    fn im(&self, k: usize) -> usize {
        self.offset + self.dim + k
    }

    fn check(&self, a: &CVec) -> Result<()> {
        if a.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} against a complex block of length {}",
                a.len(),
                self.dim
            )));
        }
        Ok(())
    }

    pub fn lift(&self, z: &CVec, x: &mut [f64]) {
        for k in 0..self.dim {
            x[self.re(k)] = z[k].re;
            x[self.im(k)] = z[k].im;
        }
    }

    pub fn extract(&self, x: &[f64]) -> CVec {
        CVec::from_fn(self.dim, |k, _| C64::new(x[self.re(k)], x[self.im(k)]))
    }

    /// Row giving `Re(a^H z)`.
    pub fn real_part_row(&self, a: &CVec, n_vars: usize) -> Result<Vec<f64>> {
        self.check(a)?;
        let mut row = vec![0.0; n_vars];
        for k in 0..self.dim {
            row[self.re(k)] = a[k].re;
            row[self.im(k)] = a[k].im;
        }
        Ok(row)
    }

    /// Row giving `Im(a^H z)`.
    pub fn imag_part_row(&self, a: &CVec, n_vars: usize) -> Result<Vec<f64>> {
        self.check(a)?;
        let mut row = vec![0.0; n_vars];
        for k in 0..self.dim {
            row[self.re(k)] = -a[k].im;
            row[self.im(k)] = a[k].re;
        }
        Ok(row)
    }

    /// Two rows whose Euclidean norm equals `|a^H z|`.
    pub fn quad_norm_rows(&self, a: &CVec, n_vars: usize) -> Result<Vec<Vec<f64>>> {
        Ok(vec![self.real_part_row(a, n_vars)?, self.imag_part_row(a, n_vars)?])
    }

    /// Rows whose Euclidean norm equals `||M z||`.
    pub fn matrix_rows(&self, m: &CMat, n_vars: usize) -> Result<Vec<Vec<f64>>> {
        if m.ncols() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} map against a complex block of length {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        let mut rows = Vec::with_capacity(2 * m.nrows());
        for r in 0..m.nrows() {
            // (M z)_r = a^H z with a = conj(M[r, :])
            let a = CVec::from_fn(self.dim, |k, _| m[(r, k)].conj());
            rows.extend(self.quad_norm_rows(&a, n_vars)?);
        }
        Ok(rows)
    }

    /// Rows whose Euclidean norm equals `||z||`.
    pub fn identity_rows(&self, n_vars: usize) -> Vec<Vec<f64>> {
        (0..self.len())
            .map(|k| {
                let mut row = vec![0.0; n_vars];
                row[self.offset + k] = 1.0;
                row
            })
            .collect()
    }
}

/// `|s|^2 <= lambda * rho` with `lambda, rho >= 0`: the rotated-cone form of
/// the 2x2 Hermitian block `[[lambda, s], [conj(s), rho]] >= 0`, and with
/// `|s|^2 = ||v||^2` of the arrow block `[[mu, v^H], [v, xi I]] >= 0`.
pub fn in_rotated_cone(norm_sq: f64, lambda: f64, rho: f64) -> bool {
    lambda >= 0.0 && rho >= 0.0 && norm_sq <= lambda * rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cn_vector, inner};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit(n: usize, k: usize) -> Vec<f64> {
        let mut r = vec![0.0; n];
        r[k] = 1.0;
        r
    }

    #[test]
    fn soc_with_fixed_component() {
        // min x1 s.t. ||x0|| <= x1, x0 = 3
        let mut p = ConeProgram::new(2);
        p.set_objective(vec![0.0, 1.0]).unwrap();
        p.add_soc(vec![unit(2, 0)], vec![0.0], unit(2, 1), 0.0).unwrap();
        p.add_linear(unit(2, 0), Sense::Eq, 3.0).unwrap();
        let s = solve(&p, DEFAULT_TOL);
        assert_eq!(s.status, ConeStatus::Optimal);
        assert!((s.obj - 3.0).abs() < 1e-6);
    }

    #[test]
    fn rsoc_am_gm() {
        // min x1 + x2 s.t. x0^2 <= x1 x2, x0 = 2
        let mut p = ConeProgram::new(3);
        p.set_objective(vec![0.0, 1.0, 1.0]).unwrap();
        p.add_rsoc(vec![unit(3, 0)], vec![0.0], Affine::var(3, 1), Affine::var(3, 2)).unwrap();
        p.add_linear(unit(3, 0), Sense::Eq, 2.0).unwrap();
        let s = solve(&p, DEFAULT_TOL);
        assert_eq!(s.status, ConeStatus::Optimal);
        assert!((s.obj - 4.0).abs() < 1e-6);
        assert!((s.x[1] - 2.0).abs() < 1e-4 && (s.x[2] - 2.0).abs() < 1e-4);

        // 1-D scan of x1 + 4 / x1 agrees
        let scan = (1..4000).map(|k| k as f64 * 1e-3).map(|a| a + 4.0 / a).fold(f64::INFINITY, f64::min);
        assert!((scan - s.obj).abs() < 1e-5);
    }

    #[test]
    fn empty_program_and_simple_bounds() {
        let p = ConeProgram::new(2);
        let s = solve(&p, DEFAULT_TOL);
        assert_eq!(s.status, ConeStatus::Optimal);
        assert_eq!(s.obj, 0.0);

        let mut p = ConeProgram::new(1);
        p.set_objective(vec![1.0]).unwrap();
        p.add_ge(&Affine::var(1, 0), &Affine::constant(1, 1.0)).unwrap();
        let s = solve(&p, DEFAULT_TOL);
        assert_eq!(s.status, ConeStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn contradictory_constraints_are_infeasible() {
        let mut p = ConeProgram::new(1);
        p.set_objective(vec![1.0]).unwrap();
        p.add_linear(vec![1.0], Sense::Le, 0.0).unwrap();
        p.add_linear(vec![-1.0], Sense::Le, -1.0).unwrap();
        assert_eq!(solve(&p, DEFAULT_TOL).status, ConeStatus::Infeasible);
        assert!(matches!(solve_checked(&p, DEFAULT_TOL, "test"), Err(Error::Infeasible(_))));
    }

    #[test]
    fn dimension_checks() {
        let mut p = ConeProgram::new(2);
        assert!(matches!(p.add_linear(vec![1.0], Sense::Le, 0.0), Err(Error::DimensionMismatch(_))));
        assert!(p.add_soc(vec![vec![1.0, 0.0]], vec![], vec![0.0, 1.0], 0.0).is_err());
        let blk = ComplexBlock::new(0, 2);
        assert!(blk.real_part_row(&CVec::zeros(3), 4).is_err());
    }

    #[test]
    fn min_norm_under_real_part_constraint() {
        // min ||v||^2 s.t. Re(a^H v) >= 1 -> 1 / ||a||^2 at v = a / ||a||^2
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = cn_vector(&mut rng, 3, 1.0);
        let blk = ComplexBlock::new(0, 3);
        let n = blk.len() + 1;
        let t = blk.end();
        let mut p = ConeProgram::new(n);
        p.set_objective(unit(n, t)).unwrap();
        p.add_rsoc(blk.identity_rows(n), vec![0.0; 6], Affine::var(n, t), Affine::constant(n, 1.0)).unwrap();
        let re = blk.real_part_row(&a, n).unwrap();
        p.add_ge(&Affine::new(re, 0.0), &Affine::constant(n, 1.0)).unwrap();
        let s = solve(&p, DEFAULT_TOL);
        assert_eq!(s.status, ConeStatus::Optimal);
        let an = a.norm_squared();
        assert!((s.obj - 1.0 / an).abs() < 1e-6 / an);
        let v = blk.extract(&s.x);
        assert!((v - &a / C64::from(an)).norm() < 1e-4 / an.sqrt());
    }

    #[test]
    fn lifted_rows_match_complex_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let blk = ComplexBlock::new(1, 4);
        let n = blk.end() + 1;
        let e1 = {
            let mut e = CVec::zeros(4);
            e[0] = C64::from(1.0);
            e
        };
        let z = CVec::from_vec(vec![C64::new(3.0, 4.0), C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(-2.0, 1.0)]);
        let mut x = vec![0.0; n];
        blk.lift(&z, &mut x);
        let rows = blk.quad_norm_rows(&e1, n).unwrap();
        assert!((norm(&affine_rows(&rows, &[0.0, 0.0], &x)) - 5.0).abs() < 1e-14);

        let zu = &z / C64::from(z.norm());
        blk.lift(&zu, &mut x);
        assert!((dot(&blk.real_part_row(&zu, n).unwrap(), &x) - 1.0).abs() < 1e-14);

        for _ in 0..100 {
            let a = cn_vector(&mut rng, 4, 1.0);
            let z = cn_vector(&mut rng, 4, 1.0);
            blk.lift(&z, &mut x);
            let direct = inner(&a, &z);
            assert!((dot(&blk.real_part_row(&a, n).unwrap(), &x) - direct.re).abs() < 1e-12);
            assert!((dot(&blk.imag_part_row(&a, n).unwrap(), &x) - direct.im).abs() < 1e-12);
            let rows = blk.quad_norm_rows(&a, n).unwrap();
            assert!((norm(&affine_rows(&rows, &[0.0, 0.0], &x)) - direct.norm()).abs() < 1e-12);
            assert_eq!(blk.extract(&x), z);
        }
    }

    #[test]
    fn solves_are_bitwise_deterministic() {
        let mut p = ConeProgram::new(3);
        p.set_objective(vec![0.3, 1.0, 1.7]).unwrap();
        p.add_rsoc(vec![vec![1.0, 0.0, 0.0]], vec![0.5], Affine::var(3, 1), Affine::var(3, 2)).unwrap();
        p.add_linear(vec![-1.0, 0.0, 0.0], Sense::Le, 1.0).unwrap();
        let a = solve(&p, DEFAULT_TOL);
        let b = solve(&p, DEFAULT_TOL);
        assert_eq!(a, b);
    }
}
