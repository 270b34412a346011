//! Tikhonov-regularized least squares for severely ill-posed systems,
//! solved by restarted GMRES on the regularized normal equations
//! `(A^T A + lambda P^T P) x = A^T b`.

use crate::error::{Error, Result};
use crate::fraclap::{assemble_fd_matrix, normalization_constant, FracOrder};
use crate::grid::Grid1D;
use crate::operator::DenseOperator;
use crate::real::{r, Real};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_RESTART: usize = 50;
pub const DEFAULT_MAXIT: usize = 1000;

/// One regularized least-squares problem.
#[derive(Debug, Clone)]
pub struct TikhonovProblem<R> {
    forward: DenseOperator<R>,
    data: Vec<R>,
    penalty: DenseOperator<R>,
    lambda: R,
}

impl<R: Real> TikhonovProblem<R> {
    pub fn new(
        forward: DenseOperator<R>,
        data: Vec<R>,
        penalty: DenseOperator<R>,
        lambda: R,
    ) -> Result<Self> {
        if forward.rows() != data.len() {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "forward operator has {} rows but data has {} entries",
                    forward.rows(),
                    data.len()
                ),
            });
        }
        if penalty.cols() != forward.cols() {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "penalty acts on {} unknowns, forward on {}",
                    penalty.cols(),
                    forward.cols()
                ),
            });
        }
        if !(lambda > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                detail: "regularization weight must be positive".into(),
            });
        }
        Ok(Self {
            forward,
            data,
            penalty,
            lambda,
        })
    }

    pub fn forward(&self) -> &DenseOperator<R> {
        &self.forward
    }

    pub fn data(&self) -> &[R] {
        &self.data
    }

    pub fn penalty(&self) -> &DenseOperator<R> {
        &self.penalty
    }

    pub fn lambda(&self) -> R {
        self.lambda
    }
}

/// Outcome of one solve.
#[derive(Debug, Clone)]
pub struct SolveReport<R> {
    pub solution: Vec<R>,
    /// `||A x - b||`, recomputed from the returned solution.
    pub residual_norm: R,
    /// `||P x||` for the problem's penalty (zero for plain GMRES calls).
    pub penalty_norm: R,
    pub iterations: usize,
    pub converged: bool,
}

fn norm<R: Real>(v: &[R]) -> R {
    v.iter().fold(R::zero(), |acc, &x| acc + x * x).sqrt()
}

fn dot<R: Real>(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).fold(R::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations.
/// `converged = false` reports stagnation; it is never an `Err`.
pub fn gmres<R: Real>(
    apply: impl Fn(&[R]) -> Vec<R>,
    rhs: &[R],
    tol: R,
    maxit: usize,
    restart: usize,
) -> SolveReport<R> {
    let (x, iterations, converged, _history) = gmres_with_history(&apply, rhs, tol, maxit, restart);
    let residual = sub(rhs, &apply(&x));
    SolveReport {
        residual_norm: norm(&residual),
        solution: x,
        penalty_norm: R::zero(),
        iterations,
        converged,
    }
}

fn sub<R: Real>(a: &[R], b: &[R]) -> Vec<R> {
    a.iter().zip(b).map(|(&x, &y)| x - y).collect()
}

/// GMRES core; also returns the per-iteration residual estimates so the
/// monotonicity property can be tested.
pub(crate) fn gmres_with_history<R: Real>(
    apply: &impl Fn(&[R]) -> Vec<R>,
    rhs: &[R],
    tol: R,
    maxit: usize,
    restart: usize,
) -> (Vec<R>, usize, bool, Vec<R>) {
    let n = rhs.len();
    let restart = restart.max(1);
    let b_norm = norm(rhs);
    let mut history = Vec::new();
    if b_norm == R::zero() {
        return (vec![R::zero(); n], 0, true, history);
    }
    let target = tol * b_norm;
    let mut x = vec![R::zero(); n];
    let mut total_iter = 0usize;

    while total_iter < maxit {
        let r0 = sub(rhs, &apply(&x));
        let beta = norm(&r0);
        if beta <= target {
            return (x, total_iter, true, history);
        }

        let m = restart.min(maxit - total_iter);
        let mut basis: Vec<Vec<R>> = Vec::with_capacity(m + 1);
        basis.push(r0.iter().map(|&v| v / beta).collect());
        // Column-major Hessenberg entries after Givens elimination.
        let mut h_cols: Vec<Vec<R>> = Vec::with_capacity(m);
        let mut cs: Vec<R> = Vec::with_capacity(m);
        let mut sn: Vec<R> = Vec::with_capacity(m);
        let mut g = vec![R::zero(); m + 1];
        g[0] = beta;
        let mut k_used = 0usize;
        let mut happy = false;

        for k in 0..m {
            total_iter += 1;
            let mut w = apply(&basis[k]);
            let mut col = vec![R::zero(); k + 2];
            for (i, v) in basis.iter().enumerate().take(k + 1) {
                let hik = dot(&w, v);
                col[i] = hik;
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= hik * *vj;
                }
            }
            let h_next = norm(&w);
            col[k + 1] = h_next;

            // Apply accumulated rotations, then a new one to zero col[k+1].
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = (col[k] * col[k] + col[k + 1] * col[k + 1]).sqrt();
            if denom == R::zero() {
                // The operator annihilates this direction; no progress is
                // possible along it. Solve with the columns gathered so far.
                history.push(g[k].abs());
                break;
            }
            let (c, s) = (col[k] / denom, col[k + 1] / denom);
            cs.push(c);
            sn.push(s);
            col[k] = denom;
            col[k + 1] = R::zero();
            let g_next = -s * g[k];
            g[k] = c * g[k];
            g[k + 1] = g_next;
            h_cols.push(col);
            k_used = k + 1;
            history.push(g[k + 1].abs());

            if g[k + 1].abs() <= target {
                break;
            }
            if h_next <= r::<R>(1e-300) {
                // Happy breakdown: the Krylov space is invariant.
                happy = true;
                break;
            }
            basis.push(w.iter().map(|&v| v / h_next).collect());
        }

        // Back substitution on the triangular system.
        let mut y = vec![R::zero(); k_used];
        for i in (0..k_used).rev() {
            let mut acc = g[i];
            for j in i + 1..k_used {
                acc -= h_cols[j][i] * y[j];
            }
            y[i] = acc / h_cols[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += *yj * *vi;
            }
        }

        let achieved = g[k_used].abs() <= target;
        if achieved || happy {
            return (x, total_iter, true, history);
        }
    }
    (x, total_iter, false, history)
}

/// Minimize `||A x - b||^2 + lambda ||P x||^2` with default restart.
pub fn solve_tikhonov<R: Real>(
    problem: &TikhonovProblem<R>,
    tol: R,
    maxit: usize,
) -> Result<SolveReport<R>> {
    solve_tikhonov_with(problem, tol, maxit, DEFAULT_RESTART)
}

/// Minimize `||A x - b||^2 + lambda ||P x||^2` by GMRES on the normal map.
pub fn solve_tikhonov_with<R: Real>(
    problem: &TikhonovProblem<R>,
    tol: R,
    maxit: usize,
    restart: usize,
) -> Result<SolveReport<R>> {
    let mut normal = problem.forward.gram();
    normal.add_scaled(&problem.penalty.gram(), problem.lambda)?;
    let rhs = problem.forward.apply_transpose(&problem.data)?;
    solve_normal_system(problem, &normal, &rhs, tol, maxit, restart)
}

fn solve_normal_system<R: Real>(
    problem: &TikhonovProblem<R>,
    normal: &DenseOperator<R>,
    rhs: &[R],
    tol: R,
    maxit: usize,
    restart: usize,
) -> Result<SolveReport<R>> {
    let apply = |x: &[R]| normal.apply(x).expect("normal system shape");
    let mut report = gmres(apply, rhs, tol, maxit, restart);
    let ax = problem.forward.apply(&report.solution)?;
    report.residual_norm = norm(&sub(&ax, &problem.data));
    report.penalty_norm = norm(&problem.penalty.apply(&report.solution)?);
    Ok(report)
}

/// Discrete H^s seminorm penalty, realized exactly as the seminorm identity
/// states it: `P = sqrt(2 / C_{1,s}) * (FD fractional Laplacian matrix)`,
/// so that `||P u||^2` matches `(2 / C_{1,s}) ||(-Delta)^s u||^2`.
pub fn hs_penalty_operator<R: Real>(
    grid: &Grid1D<R>,
    order: &FracOrder<R>,
) -> Result<DenseOperator<R>> {
    if order.n() != 1 {
        return Err(Error::UnsupportedDimension { n: order.n() });
    }
    let mut p = assemble_fd_matrix(grid, order)?;
    let scale = (r::<R>(2.0) / normalization_constant(order)).sqrt();
    p.scale_in_place(scale);
    Ok(p)
}

/// Penalty flavor selector: the identity as printed uses the full-order
/// operator; `HalfOrder` switches to the spectral `(-Delta)^(s/2)` variant
/// for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PenaltyKind {
    SeminormAsPrinted,
    HalfOrder,
    Identity,
}

/// Penalty operator of the requested kind on the grid.
pub fn penalty_operator<R: Real + rustfft::FftNum>(
    grid: &Grid1D<R>,
    order: &FracOrder<R>,
    kind: PenaltyKind,
) -> Result<DenseOperator<R>> {
    match kind {
        PenaltyKind::SeminormAsPrinted => hs_penalty_operator(grid, order),
        PenaltyKind::HalfOrder => {
            let mut p = crate::spectral::half_order_penalty_matrix(grid, order)?;
            let scale = (r::<R>(2.0) / normalization_constant(order)).sqrt();
            p.scale_in_place(scale);
            Ok(p)
        }
        PenaltyKind::Identity => Ok(DenseOperator::identity(grid.len())),
    }
}

/// One solve per lambda, reusing the Gram matrices across the sweep. The
/// reports are ordered like the input lambdas.
pub fn lambda_sweep<R: Real>(
    forward: &DenseOperator<R>,
    data: &[R],
    penalty: &DenseOperator<R>,
    lambdas: &[R],
    tol: R,
    maxit: usize,
) -> Result<Vec<SolveReport<R>>> {
    if lambdas.is_empty() {
        return Ok(Vec::new());
    }
    let ata = forward.gram();
    let ptp = penalty.gram();
    let rhs = forward.apply_transpose(data)?;
    let mut reports = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let problem =
            TikhonovProblem::new(forward.clone(), data.to_vec(), penalty.clone(), lambda)?;
        let mut normal = ata.clone();
        normal.add_scaled(&ptp, lambda)?;
        reports.push(solve_normal_system(
            &problem,
            &normal,
            &rhs,
            tol,
            maxit,
            DEFAULT_RESTART,
        )?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};

    fn diag(values: &[f64]) -> DenseOperator<f64> {
        let mut a = DenseOperator::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            a.set(i, i, v);
        }
        a
    }

    #[test]
    fn gmres_identity_converges_immediately() {
        let rhs = vec![3.0, -1.0, 2.0];
        let report = gmres(|x: &[f64]| x.to_vec(), &rhs, 1e-12, 10, 5);
        assert!(report.converged);
        assert_eq!(report.iterations, 1);
        for (a, b) in report.solution.iter().zip(&rhs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn gmres_two_by_two_oracle() {
        // [[2,1],[1,2]] x = (1,0)  =>  x = (2/3, -1/3)
        let apply = |x: &[f64]| vec![2.0 * x[0] + x[1], x[0] + 2.0 * x[1]];
        let report = gmres(apply, &[1.0, 0.0], 1e-12, 50, 10);
        assert!(report.converged);
        assert_abs_diff_eq!(report.solution[0], 2.0 / 3.0, epsilon = 1e-10);
        assert_abs_diff_eq!(report.solution[1], -1.0 / 3.0, epsilon = 1e-10);
    }

    #[test]
    fn gmres_reports_failure_on_singular_map() {
        let report = gmres(|x: &[f64]| vec![0.0; x.len()], &[1.0, 1.0], 1e-10, 20, 5);
        assert!(!report.converged);
    }

    #[test]
    fn gmres_zero_rhs_is_trivial() {
        let report = gmres(|x: &[f64]| x.to_vec(), &[0.0, 0.0], 1e-12, 10, 5);
        assert!(report.converged);
        assert_eq!(report.iterations, 0);
        assert_eq!(report.solution, vec![0.0, 0.0]);
    }

    #[test]
    fn gmres_residual_history_is_nonincreasing_within_cycle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 30;
        let mut a = DenseOperator::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a.set(i, j, v + if i == j { 4.0 } else { 0.0 });
            }
        }
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let apply = |x: &[f64]| a.apply(x).unwrap();
        let (_x, _iters, converged, history) =
            gmres_with_history(&apply, &rhs, 1e-10, 200, 200);
        assert!(converged);
        for w in history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "residual increased: {w:?}");
        }
    }

    #[test]
    fn tikhonov_identity_closed_form() {
        let n = 5;
        let b: Vec<f64> = vec![1.0, -2.0, 0.5, 3.0, -0.25];
        let lambda = 0.37;
        let p = TikhonovProblem::new(
            DenseOperator::identity(n),
            b.clone(),
            DenseOperator::identity(n),
            lambda,
        )
        .unwrap();
        let report = solve_tikhonov(&p, 1e-12, 100).unwrap();
        assert!(report.converged);
        for (x, bi) in report.solution.iter().zip(&b) {
            assert_abs_diff_eq!(x, &(bi / (1.0 + lambda)), epsilon = 1e-10);
        }
    }

    #[test]
    fn tikhonov_diagonal_closed_form() {
        let a = diag(&[1.0, 0.1, 0.01]);
        let lambda = 1e-4;
        let p = TikhonovProblem::new(
            a,
            vec![1.0, 1.0, 1.0],
            DenseOperator::identity(3),
            lambda,
        )
        .unwrap();
        let report = solve_tikhonov(&p, 1e-14, 200).unwrap();
        assert!(report.converged);
        for (i, &ai) in [1.0, 0.1, 0.01].iter().enumerate() {
            let expected = ai / (ai * ai + lambda);
            assert_abs_diff_eq!(report.solution[i], expected, epsilon = 1e-10 * expected.abs());
        }
    }

    #[test]
    fn tikhonov_random_diagonal_systems_match_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let n = rng.gen_range(2..12);
            let avals: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let lambda: f64 = rng.gen_range(1e-6..1e-1);
            let p = TikhonovProblem::new(
                diag(&avals),
                b.clone(),
                DenseOperator::identity(n),
                lambda,
            )
            .unwrap();
            let report = solve_tikhonov(&p, 1e-14, 500).unwrap();
            assert!(report.converged);
            for i in 0..n {
                let expected = avals[i] * b[i] / (avals[i] * avals[i] + lambda);
                assert_abs_diff_eq!(report.solution[i], expected, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn solution_norm_shrinks_as_lambda_grows() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let n = 20;
        let mut a = DenseOperator::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let data: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let penalty = DenseOperator::identity(n);
        let lambdas = [1e-3, 1e-2, 1e-1, 1.0, 10.0];
        let reports = lambda_sweep(&a, &data, &penalty, &lambdas, 1e-12, 2000).unwrap();
        for w in reports.windows(2) {
            let n0 = norm(&w[0].solution);
            let n1 = norm(&w[1].solution);
            assert!(n1 <= n0 + 1e-9, "solution norm must shrink in lambda");
            assert!(
                w[1].residual_norm + 1e-9 >= w[0].residual_norm,
                "residual must grow in lambda"
            );
            assert!(
                w[1].penalty_norm <= w[0].penalty_norm + 1e-9,
                "penalty must shrink in lambda"
            );
        }
    }

    #[test]
    fn sweep_consistency_and_empty_list() {
        let a = diag(&[1.0, 2.0]);
        let penalty = DenseOperator::identity(2);
        let data = vec![1.0, 1.0];
        let single = lambda_sweep(&a, &data, &penalty, &[1e-3], 1e-13, 100).unwrap();
        let p = TikhonovProblem::new(a.clone(), data.clone(), penalty.clone(), 1e-3).unwrap();
        let direct = solve_tikhonov(&p, 1e-13, 100).unwrap();
        for (x, y) in single[0].solution.iter().zip(&direct.solution) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        assert!(lambda_sweep(&a, &data, &penalty, &[], 1e-13, 100)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn normal_equation_optimality_holds_at_the_solution() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let (rows, cols) = (15, 8);
        let mut a = DenseOperator::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                a.set(i, j, rng.gen_range(-1.0..1.0));
            }
        }
        let data: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let penalty = DenseOperator::identity(cols);
        let lambda = 1e-3;
        let tol = 1e-12;
        let p = TikhonovProblem::new(a.clone(), data.clone(), penalty.clone(), lambda).unwrap();
        let report = solve_tikhonov(&p, tol, 500).unwrap();
        assert!(report.converged);
        let ax = a.apply(&report.solution).unwrap();
        let grad_data = a.apply_transpose(&sub(&ax, &data)).unwrap();
        let px = penalty.apply(&report.solution).unwrap();
        let grad_pen = penalty.apply_transpose(&px).unwrap();
        let grad: Vec<f64> = grad_data
            .iter()
            .zip(&grad_pen)
            .map(|(&g1, &g2)| g1 + lambda * g2)
            .collect();
        let atb = norm(&a.apply_transpose(&data).unwrap());
        assert!(norm(&grad) <= 10.0 * tol * (atb + 1.0));
    }

    #[test]
    fn penalty_operator_matches_seminorm_identity() {
        let g = Grid1D::new(-3.0, 3.0, 200).unwrap();
        let order = FracOrder::new(1, 0.4_f64).unwrap();
        let p = hs_penalty_operator(&g, &order).unwrap();
        let a = assemble_fd_matrix(&g, &order).unwrap();
        let u = sample(|x: f64| (-x * x).exp(), &g).unwrap();
        let pu = norm(&p.apply(u.values()).unwrap());
        let au = norm(&a.apply(u.values()).unwrap());
        let c = normalization_constant(&order);
        assert_abs_diff_eq!(pu * pu, 2.0 / c * au * au, epsilon = 1e-8 * (pu * pu));

        // Linearity in norm and positivity on a zero-extended constant.
        let two_u = norm(&p.apply(&u.values().iter().map(|v| 2.0 * v).collect::<Vec<_>>()).unwrap());
        assert_abs_diff_eq!(two_u, 2.0 * pu, epsilon = 1e-9 * two_u);
        let ones = vec![1.0; g.len()];
        assert!(norm(&p.apply(&ones).unwrap()) > 0.0);
        let zeros = vec![0.0; g.len()];
        assert_eq!(norm(&p.apply(&zeros).unwrap()), 0.0);
    }

    #[test]
    fn rejects_inconsistent_shapes_and_lambda() {
        let a = DenseOperator::<f64>::identity(3);
        assert!(matches!(
            TikhonovProblem::new(a.clone(), vec![1.0; 2], DenseOperator::identity(3), 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            TikhonovProblem::new(a.clone(), vec![1.0; 3], DenseOperator::identity(2), 0.1),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            TikhonovProblem::new(a, vec![1.0; 3], DenseOperator::identity(3), 0.0),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
