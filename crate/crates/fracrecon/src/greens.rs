//! Closed-form Poisson kernel and Green function of the ball, evaluators
//! for the s-harmonic lift `u_g` and the zero-exterior solution `u_h`, and
//! assembly of the discretized Fredholm forward operator.
//!
//! The exterior quadrature absorbs the `(|y| - r)^(-s)` edge singularity of
//! the Poisson kernel into exact cell moments, with the remaining smooth
//! factor modeled piecewise-linearly; the exterior truncation tail is
//! integrated separately on the mapped variable `t = R/y`.

use crate::error::{Error, Result};
use crate::fraclap::FracOrder;
use crate::grid::{Grid1D, GridFunction};
use crate::operator::DenseOperator;
use crate::quad::{corner_integral, simpson};
use crate::real::{pi, r, Real};
use crate::special::gamma;

/// Ball of radius `r` together with the fractional order.
#[derive(Debug, Clone, Copy)]
pub struct BallSpec<R> {
    radius: R,
    order: FracOrder<R>,
}

impl<R: Real> BallSpec<R> {
    pub fn new(radius: R, order: FracOrder<R>) -> Result<Self> {
        if !(radius > R::zero()) {
            return Err(Error::InvalidParameter {
                name: "radius",
                detail: "ball radius must be positive".into(),
            });
        }
        Ok(Self { radius, order })
    }

    #[inline]
    pub fn radius(&self) -> R {
        self.radius
    }

    #[inline]
    pub fn order(&self) -> &FracOrder<R> {
        &self.order
    }

    /// True on the `n = 2s` branch of the Green function (here `n = 1`,
    /// `s = 1/2`).
    pub fn is_log_branch(&self) -> bool {
        self.order.n() == 1 && (self.order.s() - r::<R>(0.5)).abs() < r::<R>(1e-14)
    }
}

/// Poisson-kernel constant `c_{n,s} = Gamma(n/2) sin(pi s) / pi^(n/2 + 1)`,
/// validated numerically through the kernel normalization.
pub fn poisson_constant<R: Real>(order: &FracOrder<R>) -> R {
    let n = r::<R>(order.n() as f64);
    let two = r::<R>(2.0);
    gamma(n / two) * (pi::<R>() * order.s()).sin() / pi::<R>().powf(n / two + R::one())
}

/// Green-function constant `kappa(n,s) = Gamma(n/2) / (4^s pi^(n/2) Gamma(s)^2)`.
pub fn green_constant<R: Real>(order: &FracOrder<R>) -> R {
    let n = r::<R>(order.n() as f64);
    let two = r::<R>(2.0);
    let gs = gamma(order.s());
    gamma(n / two) / (two.powf(two * order.s()) * pi::<R>().powf(n / two) * gs * gs)
}

/// Poisson kernel `P_r(y, x)` for interior `x` and exterior `y`.
pub fn poisson_kernel<R: Real>(x: R, y: R, ball: &BallSpec<R>) -> Result<R> {
    let rr = ball.radius;
    if x.abs() >= rr {
        return Err(Error::DomainViolation {
            x: x.to_f64().unwrap_or(f64::NAN),
            r: rr.to_f64().unwrap_or(f64::NAN),
            side: "interior",
        });
    }
    if y.abs() <= rr {
        return Err(Error::DomainViolation {
            x: y.to_f64().unwrap_or(f64::NAN),
            r: rr.to_f64().unwrap_or(f64::NAN),
            side: "exterior",
        });
    }
    let s = ball.order.s();
    let c = poisson_constant(&ball.order);
    let ratio = (rr * rr - x * x) / (y * y - rr * rr);
    Ok(c * ratio.powf(s) / (x - y).abs().powf(r::<R>(ball.order.n() as f64)))
}

/// Poisson kernel with the edge singularity factored out:
/// `P_r(y, x) = phi(y) * (|y| - r)^(-s)` with `phi` smooth up to `|y| = r`.
fn smooth_kernel_factor<R: Real>(x: R, y: R, ball: &BallSpec<R>) -> R {
    let rr = ball.radius;
    let s = ball.order.s();
    let c = poisson_constant(&ball.order);
    c * (rr * rr - x * x).powf(s) / ((y.abs() + rr).powf(s) * (x - y).abs())
}

/// Two-sided uniform grid on the truncated complement of the ball:
/// `[-r_out, -r]` and `[r, r_out]`, the ball boundary included as a node.
#[derive(Debug, Clone, Copy)]
pub struct ExteriorGrid<R> {
    left: Grid1D<R>,
    right: Grid1D<R>,
}

impl<R: Real> ExteriorGrid<R> {
    pub fn new(ball_radius: R, r_out: R, nodes_per_side: usize) -> Result<Self> {
        if !(r_out > ball_radius) {
            return Err(Error::InvalidParameter {
                name: "r_out",
                detail: "exterior truncation must exceed the ball radius".into(),
            });
        }
        Ok(Self {
            left: Grid1D::new(-r_out, -ball_radius, nodes_per_side)?,
            right: Grid1D::new(ball_radius, r_out, nodes_per_side)?,
        })
    }

    #[inline]
    pub fn left(&self) -> &Grid1D<R> {
        &self.left
    }

    #[inline]
    pub fn right(&self) -> &Grid1D<R> {
        &self.right
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.left.len() + self.right.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn r_out(&self) -> R {
        self.right.b()
    }

    /// Node `j`, left block first (ascending), then the right block.
    pub fn node(&self, j: usize) -> R {
        if j < self.left.len() {
            self.left.node(j)
        } else {
            self.right.node(j - self.left.len())
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = R> + '_ {
        (0..self.len()).map(move |j| self.node(j))
    }

    /// Per-node quadrature weights for integrals of
    /// `f(y) * (|y| - r)^(-s)` with `f` piecewise linear, via exact moments
    /// of the weight on each cell.
    pub fn singular_weights(&self, s: R) -> Vec<R> {
        let m = self.left.len();
        let mut w = vec![R::zero(); self.len()];
        // Right block: t = y - r ascending from 0.
        let h = self.right.spacing();
        for k in 0..self.right.len() - 1 {
            let t0 = r::<R>(k as f64) * h;
            let t1 = r::<R>((k + 1) as f64) * h;
            let m0 = (t1.powf(R::one() - s) - t0.powf(R::one() - s)) / (R::one() - s);
            let m1 = (t1.powf(r::<R>(2.0) - s) - t0.powf(r::<R>(2.0) - s)) / (r::<R>(2.0) - s);
            w[m + k] += (t1 * m0 - m1) / h;
            w[m + k + 1] += (m1 - t0 * m0) / h;
        }
        // Left block mirrors it: node j has t = |y_j| - r = (m-1-j) h.
        let h = self.left.spacing();
        for k in 0..m - 1 {
            let j0 = m - 1 - k; // t = k h
            let j1 = m - 2 - k; // t = (k+1) h
            let t0 = r::<R>(k as f64) * h;
            let t1 = r::<R>((k + 1) as f64) * h;
            let m0 = (t1.powf(R::one() - s) - t0.powf(R::one() - s)) / (R::one() - s);
            let m1 = (t1.powf(r::<R>(2.0) - s) - t0.powf(r::<R>(2.0) - s)) / (r::<R>(2.0) - s);
            w[j0] += (t1 * m0 - m1) / h;
            w[j1] += (m1 - t0 * m0) / h;
        }
        w
    }
}

/// Values attached to the nodes of an [`ExteriorGrid`].
#[derive(Debug, Clone)]
pub struct ExteriorFunction<R> {
    grid: ExteriorGrid<R>,
    values: Vec<R>,
}

impl<R: Real> ExteriorFunction<R> {
    pub fn from_values(grid: ExteriorGrid<R>, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                detail: "one value per exterior node".into(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn sample(f: impl Fn(R) -> R, grid: &ExteriorGrid<R>) -> Result<Self> {
        let values: Vec<R> = grid.nodes().map(&f).collect();
        for (j, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    x: grid.node(j).to_f64().unwrap_or(f64::NAN),
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { grid: *grid, values })
    }

    #[inline]
    pub fn grid(&self) -> &ExteriorGrid<R> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    /// Relative L2 distance to another exterior function on the same grid,
    /// with the singular quadrature weights.
    pub fn relative_l2_error(&self, reference: &ExteriorFunction<R>, s: R) -> Result<R> {
        if self.values.len() != reference.values.len() {
            return Err(Error::DimensionMismatch {
                detail: "exterior functions on different grids".into(),
            });
        }
        let w = self.grid.singular_weights(s);
        let mut num = R::zero();
        let mut den = R::zero();
        for ((&a, &b), &wj) in self.values.iter().zip(&reference.values).zip(&w) {
            let d = a - b;
            num += wj * d * d;
            den += wj * b * b;
        }
        if den <= R::zero() {
            return Err(Error::ZeroReference);
        }
        Ok((num / den).sqrt())
    }
}

/// Quadrature value of the s-harmonic lift plus a tail estimate obtained by
/// extending the outermost data values constantly beyond the truncation.
#[derive(Debug, Clone, Copy)]
pub struct UgValue<R> {
    pub quadrature: R,
    pub tail_estimate: R,
}

impl<R: Real> UgValue<R> {
    pub fn total(&self) -> R {
        self.quadrature + self.tail_estimate
    }
}

/// Sub-cells per exterior grid cell when integrating the kernel against
/// nodal data. The data is modeled linearly per cell; the kernel's smooth
/// factor is sampled on the sub-grid and the `(|y| - r)^(-s)` weight enters
/// through exact sub-cell moments.
const KERNEL_SUBCELLS: usize = 8;

/// Per-node coefficients `c_j` with `sum_j c_j g(y_j) ~ int P_r(y, x) g dy`
/// over the truncated exterior.
pub fn poisson_row<R: Real>(x: R, grid: &ExteriorGrid<R>, ball: &BallSpec<R>) -> Vec<R> {
    let s = ball.order.s();
    let rr = ball.radius;
    let mut coeff = vec![R::zero(); grid.len()];
    let q = KERNEL_SUBCELLS;
    let qr = r::<R>(q as f64);
    let mut side = |block: &Grid1D<R>, offset: usize| {
        let h = block.spacing();
        for k in 0..block.len() - 1 {
            let y0 = block.node(k);
            let y1 = block.node(k + 1);
            for m in 0..q {
                let a = y0 + (y1 - y0) * r::<R>(m as f64) / qr;
                let b = y0 + (y1 - y0) * r::<R>((m + 1) as f64) / qr;
                // Exact moments of (|y| - r)^(-s) over [a, b].
                let (ta, tb) = (a.abs() - rr, b.abs() - rr);
                let (t0, t1) = if ta <= tb { (ta, tb) } else { (tb, ta) };
                let m0 = (t1.powf(R::one() - s) - t0.powf(R::one() - s)) / (R::one() - s);
                let m1 =
                    (t1.powf(r::<R>(2.0) - s) - t0.powf(r::<R>(2.0) - s)) / (r::<R>(2.0) - s);
                // Weights for linear data between t0 and t1.
                let dt = t1 - t0;
                let (wa_t, wb_t) = if dt > R::zero() {
                    ((t1 * m0 - m1) / dt, (m1 - t0 * m0) / dt)
                } else {
                    (m0 / r::<R>(2.0), m0 / r::<R>(2.0))
                };
                // Map t-endpoints back to y-endpoints.
                let (wa, wb) = if ta <= tb { (wa_t, wb_t) } else { (wb_t, wa_t) };
                let fa = smooth_kernel_factor(x, a, ball);
                let fb = smooth_kernel_factor(x, b, ball);
                // Nodal hat weights of the linear data model on [y0, y1].
                let frac_a = (a - y0) / h;
                let frac_b = (b - y0) / h;
                let ca = wa * fa;
                let cb = wb * fb;
                coeff[offset + k] += ca * (R::one() - frac_a) + cb * (R::one() - frac_b);
                coeff[offset + k + 1] += ca * frac_a + cb * frac_b;
            }
        }
    };
    side(&grid.left, 0);
    side(&grid.right, grid.left.len());
    coeff
}

/// s-harmonic lift `u_g(x) = int P_r(y, x) g(y) dy` over the truncated
/// exterior.
pub fn eval_ug<R: Real>(g: &ExteriorFunction<R>, x: R, ball: &BallSpec<R>) -> Result<UgValue<R>> {
    if x.abs() >= ball.radius {
        return Err(Error::DomainViolation {
            x: x.to_f64().unwrap_or(f64::NAN),
            r: ball.radius.to_f64().unwrap_or(f64::NAN),
            side: "interior",
        });
    }
    let row = poisson_row(x, &g.grid, ball);
    let acc = row
        .iter()
        .zip(&g.values)
        .fold(R::zero(), |acc, (&c, &gj)| acc + c * gj);
    let g_left = g.values[0];
    let g_right = g.values[g.values.len() - 1];
    let tails = exterior_tail_split(x, ball, g.grid.r_out());
    Ok(UgValue {
        quadrature: acc,
        tail_estimate: g_left * tails.0 + g_right * tails.1,
    })
}

/// `int_{|y| > r_out} P_r(y, x) dy`, exactly in the truncation variable.
pub fn tail_integral<R: Real>(x: R, ball: &BallSpec<R>, r_out: R) -> R {
    let t = exterior_tail_split(x, ball, r_out);
    t.0 + t.1
}

/// Tail integrals over `(-inf, -r_out)` and `(r_out, inf)` separately, via
/// the substitution `y = r_out / t` which maps them onto `t in (0, 1]` with
/// an integrable `t^(2s-1)` corner.
fn exterior_tail_split<R: Real>(x: R, ball: &BallSpec<R>, r_out: R) -> (R, R) {
    let s = ball.order.s();
    let two_s = r::<R>(2.0) * s;
    let rr = ball.radius;
    let c = poisson_constant(&ball.order);
    let side = |sign: R| -> R {
        // psi(t) = P(sign*r_out/t, x) * (r_out/t^2) * t^(1-2s), smooth on (0,1].
        let psi = |t: R| -> R {
            let y = sign * r_out / t;
            let denom = (y * y - rr * rr).powf(s) * (x - y).abs();
            c * (rr * rr - x * x).powf(s) / denom * (r_out / (t * t)) * t.powf(R::one() - two_s)
        };
        corner_integral(two_s - R::one(), R::one(), psi, 600)
    };
    (side(-R::one()), side(R::one()))
}

/// Green function of the ball. Both interior points, `x != z`.
pub fn green_function<R: Real>(x: R, z: R, ball: &BallSpec<R>) -> Result<R> {
    let rr = ball.radius;
    for &p in &[x, z] {
        if p.abs() >= rr {
            return Err(Error::DomainViolation {
                x: p.to_f64().unwrap_or(f64::NAN),
                r: rr.to_f64().unwrap_or(f64::NAN),
                side: "interior",
            });
        }
    }
    if x == z {
        return Err(Error::CoincidentPoints {
            x: x.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(green_value(x, z, ball))
}

fn green_value<R: Real>(x: R, z: R, ball: &BallSpec<R>) -> R {
    let rr = ball.radius;
    if ball.is_log_branch() {
        let q = rr * rr - x * z + ((rr * rr - x * x) * (rr * rr - z * z)).sqrt();
        (q / (rr * (z - x).abs())).ln() / pi::<R>()
    } else {
        let s = ball.order.s();
        let n = r::<R>(ball.order.n() as f64);
        let dist = (z - x).abs();
        let r0 = (rr * rr - x * x) * (rr * rr - z * z) / (rr * rr * dist * dist);
        green_constant(&ball.order) * dist.powf(r::<R>(2.0) * s - n) * incomplete_ball_integral(r0, s, n)
    }
}

/// `int_0^{r0} t^(s-1) (1+t)^(-n/2) dt`: the head `[0, min(r0,1)]` uses the
/// substitution `t = tau^(1/s)` (constant integrand factor `1/s`), the rest
/// uses `t = e^v`.
fn incomplete_ball_integral<R: Real>(r0: R, s: R, n: R) -> R {
    let head_cap = r0.min(R::one());
    let head = simpson(R::zero(), head_cap.powf(s), 400, |tau| {
        (tau.powf(s.recip()) + R::one()).powf(-n / r::<R>(2.0))
    }) / s;
    if r0 <= R::one() {
        return head;
    }
    let log_r0 = r0.ln();
    let cells = 200 + (log_r0.to_f64().unwrap_or(0.0).abs() as usize) * 40;
    let tail = simpson(R::zero(), log_r0, cells, |v| {
        let t = v.exp();
        t.powf(s) * (R::one() + t).powf(-n / r::<R>(2.0))
    });
    head + tail
}

/// Limiting value `G(x, x)` of the coincident diagonal, finite for `s > 1/2`.
fn green_coincident_limit<R: Real>(x: R, ball: &BallSpec<R>) -> R {
    let s = ball.order.s();
    let rr = ball.radius;
    let rx = (rr * rr - x * x) * (rr * rr - x * x) / (rr * rr);
    green_constant(&ball.order) * rx.powf(s - r::<R>(0.5)) / (s - r::<R>(0.5))
}

/// Interior solution `u_h(x) = int_{B_r} h(y) G(x, y) dy` with the
/// singularity at `y = x` handled by splitting off the leading singular
/// term over the neighbouring cells.
pub fn eval_uh<R: Real>(hval: &GridFunction<R>, x: R, ball: &BallSpec<R>) -> Result<R> {
    let rr = ball.radius;
    if x.abs() >= rr {
        return Err(Error::DomainViolation {
            x: x.to_f64().unwrap_or(f64::NAN),
            r: rr.to_f64().unwrap_or(f64::NAN),
            side: "interior",
        });
    }
    let grid = hval.grid();
    let s = ball.order.s();
    let h = grid.spacing();
    let half = r::<R>(0.5);
    let hx = if grid.contains(x) {
        hval.interpolate(x)?
    } else {
        R::zero()
    };
    let (a_grid, b_grid) = (grid.a(), grid.b());

    // Subtract the leading singular model over the whole window so the
    // remainder stays bounded at y = x with no artificial kinks; the model's
    // integral is added back in closed form.
    enum Sing<R> {
        Power { coef: R, expo: R },
        Log { coef: R },
        None,
    }
    let sing = if s < half {
        let b = gamma(s) * gamma(half - s) / gamma(half);
        Sing::Power {
            coef: green_constant(&ball.order) * b,
            expo: r::<R>(2.0) * s - R::one(),
        }
    } else if ball.is_log_branch() {
        Sing::Log {
            coef: -(pi::<R>().recip()),
        }
    } else {
        Sing::None
    };

    let sing_eval = |y: R| -> R {
        match &sing {
            Sing::Power { coef, expo } => *coef * (y - x).abs().powf(*expo),
            Sing::Log { coef } => *coef * (y - x).abs().ln(),
            Sing::None => R::zero(),
        }
    };

    // Closed-form integral of the model over [a_grid, b_grid], times h(x).
    let analytic = match &sing {
        Sing::Power { coef, expo } => {
            let p1 = *expo + R::one(); // = 2s
            hx * *coef * ((x - a_grid).powf(p1) + (b_grid - x).powf(p1)) / p1
        }
        Sing::Log { coef } => {
            let part = |d: R| {
                if d > R::zero() {
                    d * (d.ln() - R::one())
                } else {
                    R::zero()
                }
            };
            hx * *coef * (part(x - a_grid) + part(b_grid - x))
        }
        Sing::None => R::zero(),
    };

    // Trapezoid of the remainder, which is bounded at y = x.
    let coincident_tol = r::<R>(1e-12) * h;
    let mut acc = R::zero();
    for (i, y) in grid.nodes().enumerate() {
        let w = if i == 0 || i == grid.len() - 1 { half * h } else { h };
        let rho = if (y - x).abs() <= coincident_tol {
            match &sing {
                Sing::Power { .. } => {
                    // h(x) (G - sing) -> -h(x) kappa R_x^(s-1/2) / (1/2 - s)
                    let rx = (rr * rr - x * x) * (rr * rr - x * x) / (rr * rr);
                    let lim = -green_constant(&ball.order) * rx.powf(s - half) / (half - s);
                    hx * lim
                }
                Sing::Log { .. } => {
                    let q = r::<R>(2.0) * (rr * rr - x * x);
                    hx * (q / rr).ln() / pi::<R>()
                }
                Sing::None => hval.values()[i] * green_coincident_limit(x, ball),
            }
        } else {
            hval.values()[i] * green_value(x, y, ball) - hx * sing_eval(y)
        };
        acc += w * rho;
    }
    Ok(analytic + acc)
}

/// Dense Fredholm forward matrix: `M[i][j] = w_j * P_r(y_j, x_i)` written
/// through the smooth factor so that boundary columns stay finite. Rows are
/// the interior probe nodes, columns the exterior nodes.
pub fn assemble_fredholm<R: Real>(
    interior: &Grid1D<R>,
    exterior: &ExteriorGrid<R>,
    ball: &BallSpec<R>,
) -> Result<DenseOperator<R>> {
    let rr = ball.radius;
    for x in interior.nodes() {
        if x.abs() >= rr {
            return Err(Error::GridOverlap {
                x: x.to_f64().unwrap_or(f64::NAN),
                r: rr.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    for y in exterior.nodes() {
        if y.abs() < rr {
            return Err(Error::GridOverlap {
                x: y.to_f64().unwrap_or(f64::NAN),
                r: rr.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let mut m = DenseOperator::zeros(interior.len(), exterior.len());
    for (i, x) in interior.nodes().enumerate() {
        let coeff = poisson_row(x, exterior, ball);
        m.row_mut(i).copy_from_slice(&coeff);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraclap::assemble_fd_matrix;
    use crate::grid::sample;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    fn ball(s: f64) -> BallSpec<f64> {
        BallSpec::new(1.0, FracOrder::new(1, s).unwrap()).unwrap()
    }

    #[test]
    fn poisson_kernel_examples() {
        // x=0, s=1/2, r=1, y=2: c = 1/pi, P = (1/pi) sqrt(1/3) / 2.
        let b = ball(0.5);
        let p = poisson_kernel(0.0, 2.0, &b).unwrap();
        let expected = (1.0 / 3.0_f64).sqrt() / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(p, expected, max_relative = 1e-13);
        assert_relative_eq!(p, 0.0918881, max_relative = 1e-5);

        // Parity P(y, x) = P(-y, -x).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let x = rng.gen_range(-0.99..0.99);
            let y = rng.gen_range(1.01..10.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let p1 = poisson_kernel(x, y, &b).unwrap();
            let p2 = poisson_kernel(-x, -y, &b).unwrap();
            assert_abs_diff_eq!(p1, p2, epsilon = 1e-15 * p1.abs().max(1.0));
        }

        assert!(matches!(
            poisson_kernel(1.0, 2.0, &b),
            Err(Error::DomainViolation { side: "interior", .. })
        ));
        assert!(matches!(
            poisson_kernel(0.0, 0.5, &b),
            Err(Error::DomainViolation { side: "exterior", .. })
        ));
    }

    #[test]
    fn kernel_normalization_with_tail() {
        // int_{|y|>r} P dy = 1; quadrature over (r, 100) plus mapped tail.
        for &s in &[0.3, 0.5, 0.7] {
            let b = ball(s);
            let ext = ExteriorGrid::new(1.0, 100.0, 3000).unwrap();
            let ones = ExteriorFunction::sample(|_| 1.0, &ext).unwrap();
            for &x in &[0.0, 0.5, -0.5] {
                let v = eval_ug(&ones, x, &b).unwrap();
                assert!(
                    (v.total() - 1.0).abs() <= 1e-3,
                    "s={s} x={x}: got {} (quad {}, tail {})",
                    v.total(),
                    v.quadrature,
                    v.tail_estimate
                );
            }
        }
    }

    #[test]
    fn constant_exterior_data_lifts_to_one() {
        let b = ball(0.5);
        let ext = ExteriorGrid::new(1.0, 100.0, 4000).unwrap();
        let ones = ExteriorFunction::sample(|_| 1.0, &ext).unwrap();
        for &x in &[0.0, 0.5, -0.5] {
            let v = eval_ug(&ones, x, &b).unwrap();
            assert_abs_diff_eq!(v.total(), 1.0, epsilon = 1e-3);
        }
        let zeros = ExteriorFunction::sample(|_| 0.0, &ext).unwrap();
        assert_eq!(eval_ug(&zeros, 0.3, &b).unwrap().total(), 0.0);
    }

    #[test]
    fn positive_bump_lifts_positively() {
        let b = ball(0.4);
        let ext = ExteriorGrid::new(1.0, 50.0, 2000).unwrap();
        let bump = ExteriorFunction::sample(
            |y: f64| (-(y.abs() - 5.0).powi(2)).exp(),
            &ext,
        )
        .unwrap();
        for &x in &[-0.8, -0.2, 0.0, 0.4, 0.9] {
            assert!(eval_ug(&bump, x, &b).unwrap().quadrature > 0.0);
        }
    }

    #[test]
    fn green_log_branch_value() {
        let b = ball(0.5);
        let g = green_function(0.0, 0.5, &b).unwrap();
        let expected = ((1.0 + 0.75_f64.sqrt()) / 0.5).ln() / std::f64::consts::PI;
        assert_relative_eq!(g, expected, max_relative = 1e-12);
        assert_relative_eq!(g, 0.4192007, max_relative = 1e-6);
    }

    #[test]
    fn green_symmetry_positivity_and_boundary_decay() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for &s in &[0.3, 0.5, 0.75] {
            let b = ball(s);
            for _ in 0..100 {
                let x: f64 = rng.gen_range(-0.95..0.95);
                let mut z: f64 = rng.gen_range(-0.95..0.95);
                if (x - z).abs() < 1e-3 {
                    z += 0.01;
                }
                let g1 = green_function(x, z, &b).unwrap();
                let g2 = green_function(z, x, &b).unwrap();
                assert_abs_diff_eq!(g1, g2, epsilon = 1e-10 * g1.abs().max(1.0));
                assert!(g1 > 0.0);
            }
            // Monotone vanishing toward the boundary.
            let z = 0.2;
            let mut prev = f64::INFINITY;
            for &x in &[0.5, 0.7, 0.9, 0.97, 0.999] {
                let g = green_function(x, z, &b).unwrap();
                assert!(g < prev);
                prev = g;
            }
            assert!(prev < 0.05);
        }
        assert!(matches!(
            green_function(0.3, 0.3, &ball(0.4)),
            Err(Error::CoincidentPoints { .. })
        ));
    }

    #[test]
    fn green_power_branch_matches_graded_quadrature() {
        // Independent oracle: graded midpoint rule on the t-integral.
        for &s in &[0.3, 0.75] {
            let b = ball(s);
            let (x, z) = (0.2, -0.4);
            let dist: f64 = (z - x) as f64;
            let dist = dist.abs();
            let r0 = (1.0 - x * x) * (1.0 - z * z) / (dist * dist);
            // Analytic head from the series of (1+t)^(-1/2), then graded
            // midpoint on the smooth remainder.
            let t_head: f64 = 1e-4;
            let mut acc = t_head.powf(s) / s - 0.5 * t_head.powf(s + 1.0) / (s + 1.0)
                + 0.375 * t_head.powf(s + 2.0) / (s + 2.0);
            let k = 400_000;
            let mut prev = t_head;
            for j in 1..=k {
                let f = (j as f64) / (k as f64);
                let t = t_head + (r0 - t_head) * f * f * f;
                let mid: f64 = 0.5 * (prev + t);
                acc += (t - prev) * mid.powf(s - 1.0) / (1.0 + mid).sqrt();
                prev = t;
            }
            let oracle = green_constant(b.order()) * dist.powf(2.0 * s - 1.0) * acc;
            let got = green_function(x, z, &b).unwrap();
            assert_relative_eq!(got, oracle, max_relative = 1e-6);
        }
    }

    #[test]
    fn uh_of_zero_is_zero() {
        let b = ball(0.5);
        let g = Grid1D::new(-1.0, 1.0, 101).unwrap();
        let h = GridFunction::zeros(g);
        assert_eq!(eval_uh(&h, 0.0, &b).unwrap(), 0.0);
    }

    #[test]
    fn uh_constant_source_matches_brute_force() {
        let b = ball(0.5);
        let g = Grid1D::new(-1.0, 1.0, 2001).unwrap();
        let ones = sample(|_| 1.0_f64, &g).unwrap();
        let got = eval_uh(&ones, 0.0, &b).unwrap();

        // Brute force: midpoint rule on 1e6 cells never hits y = 0.
        let k = 1_000_000usize;
        let mut oracle = 0.0;
        for j in 0..k {
            let y = -1.0 + 2.0 * (j as f64 + 0.5) / k as f64;
            oracle += 2.0 / k as f64 * green_value(0.0, y, &b);
        }
        assert_relative_eq!(got, oracle, max_relative = 1e-4);
    }

    #[test]
    fn uh_rejects_exterior_probes() {
        let b = ball(0.5);
        let g = Grid1D::new(-1.0, 1.0, 21).unwrap();
        let h = GridFunction::zeros(g);
        assert!(matches!(
            eval_uh(&h, 1.2, &b),
            Err(Error::DomainViolation { .. })
        ));
    }

    #[test]
    fn fd_laplacian_of_uh_recovers_the_source() {
        // Zero-exterior solution with smooth source, checked by applying the
        // FD operator back, away from a 5h boundary layer.
        let s = 0.5;
        let b = ball(s);
        let g = Grid1D::new(-1.0, 1.0, 401).unwrap();
        let source = sample(|y: f64| (1.0 - y * y) * (1.0 + 0.5 * y), &g).unwrap();
        let uh_values: Vec<f64> = g
            .nodes()
            .map(|x| {
                if x.abs() >= 1.0 {
                    0.0
                } else {
                    eval_uh(&source, x, &b).unwrap()
                }
            })
            .collect();
        let uh = GridFunction::from_values(g, uh_values).unwrap();
        let a = assemble_fd_matrix(&g, b.order()).unwrap();
        let back = a.apply(uh.values()).unwrap();
        let h5 = 5.0 * g.spacing();
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, x) in g.nodes().enumerate() {
            if x.abs() < 1.0 - h5 {
                let d: f64 = back[i] - source.values()[i];
                num += d * d;
                den += source.values()[i] * source.values()[i];
            }
        }
        let rel = (num / den).sqrt();
        assert!(rel <= 0.02, "round-trip error {rel}");
    }

    #[test]
    fn decomposition_identity_on_a_plane_wave() {
        // u = cos with (-Delta)^s u = cos (unit frequency): u_h + u_g = u.
        let s = 0.5;
        let b = ball(s);
        let interior = Grid1D::new(-1.0, 1.0, 801).unwrap();
        let lap = sample(|y: f64| y.cos(), &interior).unwrap();
        let ext = ExteriorGrid::new(1.0, 300.0, 12000).unwrap();
        let g = ExteriorFunction::sample(|y: f64| y.cos(), &ext).unwrap();
        for k in 0..20 {
            let x = -0.9 + 1.8 * (k as f64) / 19.0;
            let uh = eval_uh(&lap, x, &b).unwrap();
            let ug = eval_ug(&g, x, &b).unwrap();
            let got = uh + ug.quadrature;
            assert!(
                (got - x.cos()).abs() <= 0.01 * x.cos().abs().max(0.5),
                "x={x}: {got} vs {}",
                x.cos()
            );
        }
    }

    #[test]
    fn fredholm_rows_are_nonnegative_and_normalized() {
        let b = ball(0.5);
        let interior = Grid1D::new(-0.9, 0.9, 31).unwrap();
        let ext = ExteriorGrid::new(1.0, 100.0, 3000).unwrap();
        let m = assemble_fredholm(&interior, &ext, &b).unwrap();
        assert!(m.entries().iter().all(|&v| v >= 0.0));
        assert!(m.all_finite());
        let ones = vec![1.0; ext.len()];
        let sums = m.apply(&ones).unwrap();
        for (i, x) in interior.nodes().enumerate() {
            let tail = tail_integral(x, &b, 100.0);
            assert!(
                (sums[i] + tail - 1.0).abs() <= 1e-3,
                "row {i}: sum {} + tail {tail}",
                sums[i]
            );
        }
        let zeros = vec![0.0; ext.len()];
        assert!(m.apply(&zeros).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn fredholm_rejects_overlapping_grids() {
        let b = ball(0.5);
        let bad_interior = Grid1D::new(-1.5, 0.5, 11).unwrap();
        let ext = ExteriorGrid::new(1.0, 10.0, 50).unwrap();
        assert!(matches!(
            assemble_fredholm(&bad_interior, &ext, &b),
            Err(Error::GridOverlap { .. })
        ));
    }

    #[test]
    fn fredholm_singular_values_decay_fast() {
        // Severe ill-posedness signature: positive but rapidly decaying
        // spectrum (checked via SVD).
        let b = ball(0.5);

        // Small enough that the spectrum stays above the f64 floor: the
        // smallest singular value must be strictly positive.
        let interior = Grid1D::new(-0.9, 0.9, 21).unwrap();
        let ext = ExteriorGrid::new(1.0, 20.0, 6).unwrap();
        let m = assemble_fredholm(&interior, &ext, &b).unwrap();
        let dm = nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j));
        let svd = dm.svd(false, false);
        let sv_min = svd.singular_values.iter().copied().fold(f64::MAX, f64::min);
        assert!(sv_min > 0.0, "full column rank expected");

        // Log-linear decay over the first 20 indices of a larger system.
        let interior = Grid1D::new(-0.9, 0.9, 45).unwrap();
        let ext = ExteriorGrid::new(1.0, 20.0, 20).unwrap();
        let m = assemble_fredholm(&interior, &ext, &b).unwrap();
        let dm = nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m.get(i, j));
        let svd = dm.svd(false, false);
        let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
        sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for w in sv[..17].windows(2) {
            assert!(w[1] < w[0], "spectrum must decrease strictly: {w:?}");
        }
        assert!(sv[15] <= 1e-10 * sv[0], "decay too slow: {:.2e}", sv[15] / sv[0]);
        // Comparable decade drops across the two halves (log-linearity).
        let first_half = (sv[0] / sv[8]).log10();
        let second_half = (sv[8] / sv[16]).log10();
        assert!(first_half > 4.0 && second_half > 4.0);
        assert!((first_half - second_half).abs() < 8.0);
    }

    #[test]
    fn exterior_grid_weights_integrate_the_edge_singularity() {
        // int_1^2 (y-1)^(-s) dy = (1)^(1-s)/(1-s) exactly, f = 1.
        let ext = ExteriorGrid::new(1.0, 2.0, 2001).unwrap();
        for &s in &[0.25, 0.5, 0.8] {
            let w = ext.singular_weights(s);
            let m = ext.left().len();
            let right_sum: f64 = w[m..].iter().sum();
            assert_relative_eq!(right_sum, 1.0 / (1.0 - s), max_relative = 1e-6);
            let left_sum: f64 = w[..m].iter().sum();
            assert_relative_eq!(left_sum, 1.0 / (1.0 - s), max_relative = 1e-6);
        }
    }
}
