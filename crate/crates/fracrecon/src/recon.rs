//! End-to-end reconstruction pipelines: the Kelvin route (extension,
//! transform, convolve, Tikhonov, deconvolve, transform back) and the Green
//! route (ball solver plus Fredholm inversion), together with pointwise
//! potential recovery and the space-fractional heat application.

use crate::error::{Error, Result};
use crate::extension::{build_extension_with_width, DEFAULT_PLATEAU_WIDTH};
use crate::fraclap::{assemble_fd_matrix, FracOrder};
use crate::greens::{assemble_fredholm, eval_uh, BallSpec, ExteriorFunction, ExteriorGrid};
use crate::grid::{Grid1D, GridFunction, MaskedGridFunction};
use crate::operator::DenseOperator;
use crate::quad::simpson;
use crate::real::{r, Real};
use crate::spectral;
use crate::tikhonov::{solve_tikhonov_with, PenaltyKind, TikhonovProblem};
use rustfft::{FftNum, FftPlanner};

/// Local measurements: `u` and `(-Delta)^s u` sampled on the same window.
#[derive(Debug, Clone)]
pub struct LocalData<R> {
    window: Grid1D<R>,
    u_local: GridFunction<R>,
    lap_local: GridFunction<R>,
}

impl<R: Real> LocalData<R> {
    pub fn new(u_local: GridFunction<R>, lap_local: GridFunction<R>) -> Result<Self> {
        if !u_local.grid().same_as(lap_local.grid()) {
            return Err(Error::GridMismatch {
                detail: "u and its fractional Laplacian must share the window grid".into(),
            });
        }
        Ok(Self {
            window: *u_local.grid(),
            u_local,
            lap_local,
        })
    }

    pub fn window(&self) -> &Grid1D<R> {
        &self.window
    }

    pub fn u_local(&self) -> &GridFunction<R> {
        &self.u_local
    }

    pub fn lap_local(&self) -> &GridFunction<R> {
        &self.lap_local
    }
}

/// Compactly supported positive-definite mollifier, a Wendland bump
/// `psi(x) = (1 - |x|/a)^3 (3|x|/a + 1)` scaled to support radius `a > 1`.
#[derive(Debug, Clone, Copy)]
pub struct MollifierSpec<R> {
    support_radius: R,
    fourier_floor: R,
}

impl<R: Real> MollifierSpec<R> {
    pub fn new(support_radius: R, fourier_floor: R) -> Result<Self> {
        if !(support_radius > R::one()) {
            return Err(Error::InvalidParameter {
                name: "support_radius",
                detail: "the unit ball must fit inside the mollifier support".into(),
            });
        }
        if !(fourier_floor > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "fourier_floor",
                detail: "deconvolution floor must be positive".into(),
            });
        }
        Ok(Self {
            support_radius,
            fourier_floor,
        })
    }

    pub fn support_radius(&self) -> R {
        self.support_radius
    }

    pub fn fourier_floor(&self) -> R {
        self.fourier_floor
    }

    /// Bump value at `x`; zero for `|x| >= support_radius`.
    pub fn eval(&self, x: R) -> R {
        let t = x.abs() / self.support_radius;
        if t >= R::one() {
            R::zero()
        } else {
            let one_minus = R::one() - t;
            one_minus * one_minus * one_minus * (r::<R>(3.0) * t + R::one())
        }
    }
}

impl<R: Real> Default for MollifierSpec<R> {
    fn default() -> Self {
        Self {
            support_radius: r(1.1),
            fourier_floor: r(1e-8),
        }
    }
}

/// Per-stage diagnostics of one pipeline run.
#[derive(Debug, Clone)]
pub struct StageDiag<R> {
    pub stage: String,
    pub residual: R,
    pub iterations: usize,
    pub note: String,
}

/// Pipeline outcome: reconstruction plus relative error when ground truth
/// was supplied.
#[derive(Debug, Clone)]
pub struct ReconReport<R> {
    pub reconstructed: GridFunction<R>,
    pub rel_l2_error: Option<R>,
    pub stage_diagnostics: Vec<StageDiag<R>>,
}

/// Discrete convolution of `f` with the sampled mollifier, grid-weighted.
pub fn mollify<R: Real>(f: &GridFunction<R>, moll: &MollifierSpec<R>) -> Result<GridFunction<R>> {
    let grid = f.grid();
    let h = grid.spacing();
    let n = grid.len();
    let reach = (moll.support_radius / h).to_f64().unwrap_or(0.0).ceil() as usize;

    // Effective support of f must stay clear of the grid ends by the
    // mollifier reach, otherwise the convolution leaks past the window.
    let peak = f.max_abs();
    if peak > R::zero() {
        let tol = r::<R>(1e-12) * peak;
        let first = f.values().iter().position(|v| v.abs() > tol).unwrap();
        let last = n - 1 - f.values().iter().rev().position(|v| v.abs() > tol).unwrap();
        let overflow = reach.saturating_sub(first).max((last + reach).saturating_sub(n - 1));
        if overflow > 0 {
            return Err(Error::SupportOverflow { overflow });
        }
    }

    let psi: Vec<R> = (0..=reach).map(|k| moll.eval(r::<R>(k as f64) * h)).collect();
    let mut out = vec![R::zero(); n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = R::zero();
        let lo = i.saturating_sub(reach);
        let hi = (i + reach).min(n - 1);
        for j in lo..=hi {
            let k = i.abs_diff(j);
            acc += psi[k] * f.values()[j];
        }
        *o = acc * h;
    }
    GridFunction::from_values(*grid, out)
}

/// Diagnostics of a deconvolution: how many Fourier modes fell below the
/// floor and were zeroed.
#[derive(Debug, Clone, Copy)]
pub struct DeconvolveDiag {
    pub floored_modes: usize,
    pub total_modes: usize,
}

/// Invert [`mollify`] by Fourier division with a relative spectral floor.
pub fn deconvolve<R: Real + FftNum>(
    f_conv: &GridFunction<R>,
    moll: &MollifierSpec<R>,
) -> Result<(GridFunction<R>, DeconvolveDiag)> {
    let grid = f_conv.grid();
    let n = grid.len();
    let h = grid.spacing();

    // Circularly placed mollifier samples match the discrete convolution.
    let mut psi_hat: Vec<num_complex::Complex<R>> = (0..n)
        .map(|k| {
            let offset = if k <= n / 2 {
                r::<R>(k as f64)
            } else {
                r::<R>(k as f64) - r::<R>(n as f64)
            };
            num_complex::Complex::new(moll.eval(offset * h) * h, R::zero())
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut psi_hat);

    let peak = psi_hat
        .iter()
        .fold(R::zero(), |m, c| m.max(c.norm_sqr().sqrt()));
    let floor = moll.fourier_floor * peak;

    let mut buf: Vec<num_complex::Complex<R>> = f_conv
        .values()
        .iter()
        .map(|&v| num_complex::Complex::new(v, R::zero()))
        .collect();
    planner.plan_fft_forward(n).process(&mut buf);
    let mut floored = 0usize;
    for (c, p) in buf.iter_mut().zip(&psi_hat) {
        if p.norm_sqr().sqrt() > floor {
            *c = *c / *p;
        } else {
            *c = num_complex::Complex::new(R::zero(), R::zero());
            floored += 1;
        }
    }
    if floored == n {
        return Err(Error::AllFloor);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    let scale = R::one() / r::<R>(n as f64);
    let values: Vec<R> = buf.iter().map(|c| c.re * scale).collect();
    Ok((
        GridFunction::from_values(*grid, values)?,
        DeconvolveDiag {
            floored_modes: floored,
            total_modes: n,
        },
    ))
}

/// Tunables of the Kelvin reconstruction pipeline.
#[derive(Debug, Clone, Copy)]
pub struct KelvinReconConfig<R> {
    pub allow_supercritical: bool,
    pub plateau_width: R,
    pub penalty: PenaltyKind,
    pub tol: R,
    pub maxit: usize,
    pub restart: usize,
    /// Extra node gap between the mollified support and the first probe.
    pub probe_gap_cells: usize,
}

impl<R: Real> Default for KelvinReconConfig<R> {
    fn default() -> Self {
        Self {
            allow_supercritical: false,
            plateau_width: r(DEFAULT_PLATEAU_WIDTH),
            penalty: PenaltyKind::SeminormAsPrinted,
            tol: r(crate::tikhonov::DEFAULT_TOL),
            maxit: crate::tikhonov::DEFAULT_MAXIT,
            restart: crate::tikhonov::DEFAULT_RESTART,
            probe_gap_cells: 3,
        }
    }
}

/// Reconstruct `u` on the full grid from `(u, (-Delta)^s u)` on `(-1, 1)`
/// through the Kelvin route. When `truth` is supplied the report carries the
/// relative L2 error of the recovered residual `h` over the region outside
/// the data window (or of `u` itself when the true residual vanishes).
pub fn reconstruct_kelvin<R: Real + FftNum>(
    data: &LocalData<R>,
    full: &Grid1D<R>,
    order: &FracOrder<R>,
    moll: &MollifierSpec<R>,
    lambda: R,
    config: &KelvinReconConfig<R>,
    truth: Option<&GridFunction<R>>,
) -> Result<ReconReport<R>> {
    let alpha = order.alpha();
    let n_dim = r::<R>(order.n() as f64);
    let mut diags: Vec<StageDiag<R>> = Vec::new();
    if alpha >= n_dim {
        if !config.allow_supercritical {
            return Err(Error::InvalidParameter {
                name: "alpha",
                detail: format!(
                    "alpha = {} >= n = {}; pass allow_supercritical to proceed",
                    alpha.to_f64().unwrap_or(f64::NAN),
                    order.n()
                ),
            });
        }
        diags.push(StageDiag {
            stage: "hypothesis".into(),
            residual: R::zero(),
            iterations: 0,
            note: "n <= alpha: reconstruction theorem hypothesis violated".into(),
        });
    }

    // The data window must be the restriction of the full grid to (-1, 1).
    let (window, start) = full.restrict(r(-1.0), r(1.0))?;
    if !window.same_as(data.window()) {
        return Err(Error::GridMismatch {
            detail: "data window must be the full grid restricted to (-1, 1)".into(),
        });
    }

    // Stage 1: extension from the window data and its Laplacian.
    let g = build_extension_with_width(data.u_local(), full, config.plateau_width)?;
    let fd_full = assemble_fd_matrix(full, order)?;
    let lap_g = fd_full.apply(g.values())?;

    // Stage 2: (-Delta)^s h on the window.
    let lap_h_w_values: Vec<R> = (0..window.len())
        .map(|i| data.lap_local().values()[i] - lap_g[start + i])
        .collect();
    let lap_h_w = GridFunction::from_values(window, lap_h_w_values)?;

    // Stage 3/4: probes where the translated mollifier support only sees
    // known Kelvin data, and the mollified right-hand side there.
    let a_moll = moll.support_radius;
    let h_grid = full.spacing();
    let supp_limit = R::one() + a_moll;
    let probe_limit = supp_limit + r::<R>(config.probe_gap_cells as f64) * h_grid;
    let mut support_cols: Vec<usize> = Vec::new();
    let mut probe_rows: Vec<usize> = Vec::new();
    for (i, x) in full.nodes().enumerate() {
        if x.abs() <= supp_limit {
            support_cols.push(i);
        } else if x.abs() > probe_limit {
            probe_rows.push(i);
        }
    }
    if probe_rows.is_empty() {
        return Err(Error::MaskStarvation);
    }

    // w(t) = |t|^(-alpha－1) lap_h(1/t), the known Kelvin-side data.
    let window_inner = window.a().abs().min(window.b().abs());
    let rhs_known = |t: R| -> Result<R> {
        let inv = t.recip();
        let inv_clamped = inv.max(-window_inner).min(window_inner);
        Ok(t.abs().powf(-alpha - n_dim) * lap_h_w.interpolate(inv_clamped)?)
    };
    let quad_cells = ((r::<R>(2.0) * a_moll / h_grid).to_f64().unwrap_or(100.0) as usize).max(50);
    let mut b = Vec::with_capacity(probe_rows.len());
    for &p in &probe_rows {
        let xp = full.node(p);
        let mut err: Option<Error> = None;
        let val = simpson(xp - a_moll, xp + a_moll, quad_cells, |t| {
            match rhs_known(t) {
                Ok(v) => moll.eval(xp - t) * v,
                Err(e) => {
                    err = Some(e);
                    R::zero()
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        b.push(val);
    }

    // Stage 5: Tikhonov solve for the mollified transform on its support.
    let forward = fd_full.submatrix(&probe_rows, &support_cols);
    let penalty_full = crate::tikhonov::penalty_operator(full, order, config.penalty)?;
    let penalty = if config.penalty == PenaltyKind::Identity {
        DenseOperator::identity(support_cols.len())
    } else {
        let all_rows: Vec<usize> = (0..full.len()).collect();
        penalty_full.submatrix(&all_rows, &support_cols)
    };
    let problem = TikhonovProblem::new(forward, b, penalty, lambda)?;
    let solve = solve_tikhonov_with(&problem, config.tol, config.maxit, config.restart)?;
    diags.push(StageDiag {
        stage: "tikhonov".into(),
        residual: solve.residual_norm,
        iterations: solve.iterations,
        note: if solve.converged {
            String::new()
        } else {
            "gmres stagnated".into()
        },
    });

    // Stage 6: deconvolve to recover the Kelvin transform, then project it
    // back onto its support in the unit ball.
    let mut h_tilde = GridFunction::zeros(*full);
    for (k, &col) in support_cols.iter().enumerate() {
        h_tilde.values_mut()[col] = solve.solution[k];
    }
    let (mut v, dec) = deconvolve(&h_tilde, moll)?;
    diags.push(StageDiag {
        stage: "deconvolve".into(),
        residual: R::zero(),
        iterations: dec.floored_modes,
        note: format!("{} of {} modes floored", dec.floored_modes, dec.total_modes),
    });
    for (i, x) in full.nodes().enumerate() {
        if x.abs() > R::one() {
            v.values_mut()[i] = R::zero();
        }
    }

    // Stage 7: invert the Kelvin transform outside the window.
    let mut h_rec = GridFunction::zeros(*full);
    for (i, x) in full.nodes().enumerate() {
        if x.abs() > R::one() {
            let w = x.abs().powf(alpha - n_dim);
            h_rec.values_mut()[i] = w * v.interpolate(x.recip())?;
        }
    }

    // Stage 8: assemble u = g + h.
    let u_rec = g.add(&h_rec)?;

    let rel_l2_error = match truth {
        None => None,
        Some(u_true) => {
            let h_true = u_true.sub(&g)?;
            let h従 = h_grid;
            let mut num = R::zero();
            let mut den = R::zero();
            for (i, x) in full.nodes().enumerate() {
                if x.abs() > R::one() {
                    let w = if i == 0 || i == full.len() - 1 {
                        r::<R>(0.5) * h従
                    } else {
                        h従
                    };
                    let d = h_rec.values()[i] - h_true.values()[i];
                    num += w * d * d;
                    den += w * h_true.values()[i] * h_true.values()[i];
                }
            }
            if den > r::<R>(1e-24) * u_true.l2_norm() * u_true.l2_norm() {
                Some((num / den).sqrt())
            } else {
                // Degenerate residual: report the error on u itself.
                Some(crate::grid::relative_l2_error(&u_rec, u_true)?)
            }
        }
    };

    Ok(ReconReport {
        reconstructed: u_rec,
        rel_l2_error,
        stage_diagnostics: diags,
    })
}

/// Penalty choice for the Green-route Fredholm inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenPenalty {
    Identity,
    /// Scaled second differences per exterior block, a smoothness proxy.
    SecondDifference,
}

/// Tunables of the Green reconstruction pipeline.
#[derive(Debug, Clone, Copy)]
pub struct GreenReconConfig<R> {
    pub penalty: GreenPenalty,
    pub tol: R,
    pub maxit: usize,
    pub restart: usize,
}

impl<R: Real> Default for GreenReconConfig<R> {
    fn default() -> Self {
        Self {
            penalty: GreenPenalty::Identity,
            tol: r(crate::tikhonov::DEFAULT_TOL),
            maxit: crate::tikhonov::DEFAULT_MAXIT,
            restart: crate::tikhonov::DEFAULT_RESTART,
        }
    }
}

/// Green-route outcome: the exterior solution plus the stitched full-line
/// reconstruction and diagnostics.
#[derive(Debug, Clone)]
pub struct GreenRecon<R> {
    pub exterior: ExteriorFunction<R>,
    pub report: ReconReport<R>,
}

fn second_difference_penalty<R: Real>(exterior: &ExteriorGrid<R>) -> DenseOperator<R> {
    let n = exterior.len();
    let m = exterior.left().len();
    let mut p = DenseOperator::zeros(n, n);
    let mut block = |lo: usize, hi: usize| {
        for i in lo + 1..hi {
            p.set(i, i - 1, -R::one());
            p.set(i, i, r::<R>(2.0));
            p.set(i, i + 1, -R::one());
        }
    };
    block(0, m.saturating_sub(1));
    block(m, n - 1);
    p
}

/// Reconstruct the exterior values of `u` from `(u, (-Delta)^s u)` on the
/// ball via the Fredholm equation of the first kind. `output` is the grid
/// of the stitched reconstruction; `truth` (exterior values) enables the
/// error report.
pub fn reconstruct_green<R: Real>(
    data: &LocalData<R>,
    exterior: &ExteriorGrid<R>,
    ball: &BallSpec<R>,
    lambda: R,
    output: &Grid1D<R>,
    config: &GreenReconConfig<R>,
    truth: Option<&ExteriorFunction<R>>,
) -> Result<GreenRecon<R>> {
    let rr = ball.radius();
    let window = data.window();
    let tol_edge = r::<R>(1e-9) * rr;
    if (window.a() + rr).abs() > tol_edge || (window.b() - rr).abs() > tol_edge {
        return Err(Error::GridMismatch {
            detail: "ball data must be sampled on a grid spanning [-r, r]".into(),
        });
    }

    // Interior probes: the strictly interior data nodes.
    let probe_grid = Grid1D::new(window.node(1), window.node(window.len() - 2), window.len() - 2)?;

    // Stage 1: the zero-exterior part from the measured source.
    let mut u_h = Vec::with_capacity(probe_grid.len());
    for x in probe_grid.nodes() {
        u_h.push(eval_uh(data.lap_local(), x, ball)?);
    }

    // Stage 2: data for the Fredholm equation.
    let rhs: Vec<R> = (0..probe_grid.len())
        .map(|i| data.u_local().values()[i + 1] - u_h[i])
        .collect();

    // Stage 3: forward operator and Tikhonov inversion.
    let m = assemble_fredholm(&probe_grid, exterior, ball)?;
    let penalty = match config.penalty {
        GreenPenalty::Identity => DenseOperator::identity(exterior.len()),
        GreenPenalty::SecondDifference => second_difference_penalty(exterior),
    };
    let problem = TikhonovProblem::new(m, rhs, penalty, lambda)?;
    let solve = solve_tikhonov_with(&problem, config.tol, config.maxit, config.restart)?;
    let mut diags = vec![StageDiag {
        stage: "tikhonov".into(),
        residual: solve.residual_norm,
        iterations: solve.iterations,
        note: if solve.converged {
            String::new()
        } else {
            "gmres stagnated above tolerance: severe ill-posedness".into()
        },
    }];

    let exterior_solution = ExteriorFunction::from_values(*exterior, solve.solution)?;

    // Stage 4: stitch data and exterior solution on the output grid.
    let m_nodes = exterior.left().len();
    let left_fn = GridFunction::from_values(
        *exterior.left(),
        exterior_solution.values()[..m_nodes].to_vec(),
    )?;
    let right_fn = GridFunction::from_values(
        *exterior.right(),
        exterior_solution.values()[m_nodes..].to_vec(),
    )?;
    let mut stitched = Vec::with_capacity(output.len());
    for x in output.nodes() {
        let v = if x.abs() <= rr {
            data.u_local().interpolate(x)?
        } else if x < -rr {
            left_fn.interpolate(x.max(exterior.left().a()))?
        } else {
            right_fn.interpolate(x.min(exterior.right().b()))?
        };
        stitched.push(v);
    }
    let reconstructed = GridFunction::from_values(*output, stitched)?;

    let rel_l2_error = match truth {
        None => None,
        Some(g_true) => Some(exterior_solution.relative_l2_error(g_true, ball.order().s())?),
    };

    Ok(GreenRecon {
        exterior: exterior_solution,
        report: ReconReport {
            reconstructed,
            rel_l2_error,
            stage_diagnostics: diags.drain(..).collect(),
        },
    })
}

/// Potential recovery outcome.
#[derive(Debug, Clone)]
pub struct PotentialRecovery<R> {
    pub q: MaskedGridFunction<R>,
    pub masked_count: usize,
}

/// Pointwise potential `q = -lap / u`, masked where `|u|` is at or below the
/// floor.
pub fn recover_potential<R: Real>(
    u: &GridFunction<R>,
    lap: &GridFunction<R>,
    floor: R,
) -> Result<PotentialRecovery<R>> {
    if !u.grid().same_as(lap.grid()) {
        return Err(Error::GridMismatch {
            detail: "potential recovery needs matching grids".into(),
        });
    }
    let n = u.grid().len();
    let mut values = vec![R::zero(); n];
    let mut known = vec![false; n];
    let mut masked = 0usize;
    for i in 0..n {
        if u.values()[i].abs() > floor {
            values[i] = -lap.values()[i] / u.values()[i];
            known[i] = true;
        } else {
            masked += 1;
        }
    }
    if masked == n {
        return Err(Error::AllMasked {
            floor: floor.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(PotentialRecovery {
        q: MaskedGridFunction::new(*u.grid(), values, known)?,
        masked_count: masked,
    })
}

/// Slice-wise Green-route reconstruction of a fractional heat evolution
/// measured on the ball over equally spaced times. The source of each slice
/// is `-(d/dt) u`, by second-order differences (one-sided at the ends).
#[allow(clippy::too_many_arguments)]
pub fn heat_reconstruct<R: Real>(
    u_meas: &[GridFunction<R>],
    dt: R,
    omega: &Grid1D<R>,
    ball: &BallSpec<R>,
    exterior: &ExteriorGrid<R>,
    lambda: R,
    config: &GreenReconConfig<R>,
    truth: Option<&dyn Fn(usize) -> ExteriorFunction<R>>,
) -> Result<Vec<GreenRecon<R>>> {
    if u_meas.len() < 3 {
        return Err(Error::InsufficientSlices { got: u_meas.len() });
    }
    if !(dt > R::zero()) {
        return Err(Error::InvalidParameter {
            name: "dt",
            detail: "time step must be positive".into(),
        });
    }
    let grid = *u_meas[0].grid();
    for u in u_meas {
        if !u.grid().same_as(&grid) {
            return Err(Error::GridMismatch {
                detail: "all time slices must share the ball grid".into(),
            });
        }
    }
    let k_max = u_meas.len() - 1;
    let two_dt = r::<R>(2.0) * dt;
    let mut out = Vec::with_capacity(u_meas.len());
    for k in 0..=k_max {
        let du_dt: Vec<R> = (0..grid.len())
            .map(|i| {
                let v = |kk: usize| u_meas[kk].values()[i];
                if k == 0 {
                    (-r::<R>(3.0) * v(0) + r::<R>(4.0) * v(1) - v(2)) / two_dt
                } else if k == k_max {
                    (r::<R>(3.0) * v(k_max) - r::<R>(4.0) * v(k_max - 1) + v(k_max - 2)) / two_dt
                } else {
                    (v(k + 1) - v(k - 1)) / two_dt
                }
            })
            .collect();
        let lap = GridFunction::from_values(grid, du_dt.iter().map(|&d| -d).collect())?;
        let data = LocalData::new(u_meas[k].clone(), lap)?;
        let truth_k = truth.map(|f| f(k));
        out.push(reconstruct_green(
            &data,
            exterior,
            ball,
            lambda,
            omega,
            config,
            truth_k.as_ref(),
        )?);
    }
    Ok(out)
}
