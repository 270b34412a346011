//! Finite-difference discretization of the 1D fractional Laplacian and the
//! associated normalization constant.
//!
//! The scheme follows the weighted-trapezoidal construction for the singular
//! integral: around each node the integrand is symmetrized into second
//! differences and integrated against the weight `xi^(1-2s)` with exact cell
//! moments; the remaining one-sided part of the truncation window uses exact
//! moments of `xi^(-1-2s)`; the exterior of the window, where the function is
//! extended by zero, contributes its tail integral in closed form. Rows are
//! exact for constant functions, and the two boundary rows are exact only for
//! functions vanishing at the window edges (the intended use: compactly
//! supported data).

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::operator::DenseOperator;
use crate::real::{pi, r, Real};
use crate::special::gamma;
use rayon::prelude::*;

/// Fractional order bundle `(n, s)` with `alpha = 2s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FracOrder<R> {
    n: u32,
    s: R,
}

impl<R: Real> FracOrder<R> {
    pub fn new(n: u32, s: R) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                detail: "space dimension must be positive".into(),
            });
        }
        if !(s > R::zero() && s < R::one()) {
            return Err(Error::InvalidParameter {
                name: "s",
                detail: format!("s must lie in (0,1), got {}", s.to_f64().unwrap_or(f64::NAN)),
            });
        }
        Ok(Self { n, s })
    }

    /// Convenience constructor from `alpha = 2s`.
    pub fn from_alpha(n: u32, alpha: R) -> Result<Self> {
        Self::new(n, alpha / r::<R>(2.0))
    }

    #[inline]
    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn s(&self) -> R {
        self.s
    }

    #[inline]
    pub fn alpha(&self) -> R {
        r::<R>(2.0) * self.s
    }
}

/// Normalization constant `C_{n,s} = s 4^s Gamma((2s+n)/2) / (pi^{n/2} Gamma(1-s))`.
pub fn normalization_constant<R: Real>(order: &FracOrder<R>) -> R {
    let s = order.s;
    let n = r::<R>(order.n as f64);
    let two = r::<R>(2.0);
    let num = s * two.powf(two * s) * gamma((two * s + n) / two);
    let den = pi::<R>().powf(n / two) * gamma(R::one() - s);
    num / den
}

/// Dense matrix of the fractional Laplacian on `g` with zero extension
/// outside the window.
pub fn assemble_fd_matrix<R: Real>(g: &Grid1D<R>, order: &FracOrder<R>) -> Result<DenseOperator<R>> {
    if order.n != 1 {
        return Err(Error::UnsupportedDimension { n: order.n });
    }
    let n = g.len();
    let h = g.spacing();
    let s = order.s;
    let two_s = r::<R>(2.0) * s;
    let c = normalization_constant(order);

    let weights = FdWeights::new(n, h, s);

    let mut op = DenseOperator::zeros(n, n);
    op.rows_par_fill(|i, row| fill_row(i, row, n, h, two_s, &weights));
    op.scale_in_place(c);
    op.with_grids(*g, *g)
}

/// Precomputed nodal offsets and cell weights shared by all rows.
struct FdWeights<R> {
    xi: Vec<R>,
    /// xi^(-2s) for tail terms (index 0 unused).
    pow_m2s: Vec<R>,
    /// Symmetric-part cell weights (hat functions against xi^(1-2s)).
    sym_a: Vec<R>,
    sym_b: Vec<R>,
    /// One-sided cell weights (hat functions against xi^(-1-2s)).
    one_a: Vec<R>,
    one_b: Vec<R>,
}

impl<R: Real> FdWeights<R> {
    fn new(n: usize, h: R, s: R) -> Self {
        let two = r::<R>(2.0);
        let two_s = two * s;
        let e2 = two - two_s; // 2 - 2s > 0
        let e3 = r::<R>(3.0) - two_s; // 3 - 2s > 0
        let half_order_log = (two_s - R::one()).abs() < r::<R>(1e-14);

        let xi: Vec<R> = (0..n).map(|j| r::<R>(j as f64) * h).collect();
        let pow_m2s: Vec<R> = xi
            .iter()
            .enumerate()
            .map(|(j, &x)| if j == 0 { R::zero() } else { x.powf(-two_s) })
            .collect();
        let pow_e2: Vec<R> = xi.iter().map(|&x| x.powf(e2)).collect();
        let pow_e3: Vec<R> = xi.iter().map(|&x| x.powf(e3)).collect();
        let pow_1m2s: Vec<R> = xi
            .iter()
            .enumerate()
            .map(|(j, &x)| {
                if j == 0 {
                    R::zero()
                } else {
                    x.powf(R::one() - two_s)
                }
            })
            .collect();

        let cells = n.saturating_sub(1);
        let mut sym_a = vec![R::zero(); cells];
        let mut sym_b = vec![R::zero(); cells];
        let mut one_a = vec![R::zero(); cells];
        let mut one_b = vec![R::zero(); cells];
        for k in 0..cells {
            let m0 = (pow_e2[k + 1] - pow_e2[k]) / e2;
            let m1 = (pow_e3[k + 1] - pow_e3[k]) / e3;
            sym_a[k] = (xi[k + 1] * m0 - m1) / h;
            sym_b[k] = (m1 - xi[k] * m0) / h;
            if k >= 1 {
                let m0 = (pow_m2s[k] - pow_m2s[k + 1]) / two_s;
                let m1 = if half_order_log {
                    (xi[k + 1] / xi[k]).ln()
                } else {
                    (pow_1m2s[k + 1] - pow_1m2s[k]) / (R::one() - two_s)
                };
                one_a[k] = (xi[k + 1] * m0 - m1) / h;
                one_b[k] = (m1 - xi[k] * m0) / h;
            }
        }
        Self {
            xi,
            pow_m2s,
            sym_a,
            sym_b,
            one_a,
            one_b,
        }
    }
}

fn fill_row<R: Real>(i: usize, row: &mut [R], n: usize, h: R, two_s: R, w: &FdWeights<R>) {
    let d_left = i;
    let d_right = n - 1 - i;
    let m = d_left.min(d_right);

    if m >= 1 {
        // Symmetric singular part over [0, m h]: second differences against
        // the weight xi^(1-2s). phi_0 uses the nearest second difference.
        let h2 = h * h;
        let c0 = w.sym_a[0] / h2;
        row[i] += c0 + c0;
        row[i - 1] -= c0;
        row[i + 1] -= c0;
        for j in 1..=m {
            let mut omega = R::zero();
            if j < m {
                omega += w.sym_a[j];
            }
            omega += w.sym_b[j - 1];
            let cj = omega / (w.xi[j] * w.xi[j]);
            row[i] += cj + cj;
            row[i - j] -= cj;
            row[i + j] -= cj;
        }
    } else {
        // Boundary row: one-sided first cell with a quadratically vanishing
        // model, exact for functions that vanish with their slope at the edge.
        let c = w.pow_m2s[1] / (r::<R>(2.0) - two_s);
        let inward: isize = if i == 0 { 1 } else { -1 };
        let j = (i as isize + inward) as usize;
        row[i] += c;
        row[j] -= c;
    }

    // One-sided remainder on the longer side(s): offsets m..d over cells with
    // exact moments of xi^(-1-2s). For boundary rows the first cell [0, h]
    // was handled above, so cells start at k = max(m, 1).
    let k0 = m.max(1);
    for (d, sign) in [(d_right, 1isize), (d_left, -1isize)] {
        if d <= k0 {
            continue;
        }
        for j in k0..=d {
            let mut omega = R::zero();
            if j > k0 {
                omega += w.one_b[j - 1];
            }
            if j < d {
                omega += w.one_a[j];
            }
            if omega != R::zero() {
                let col = (i as isize + sign * j as isize) as usize;
                row[i] += omega;
                row[col] -= omega;
            }
        }
    }

    // Exterior tail: exact integral of xi^(-1-2s) beyond the window. At a
    // boundary row the touching side starts at distance zero and its tail is
    // dropped (the row targets functions vanishing there).
    let mut tail = R::zero();
    if d_left >= 1 {
        tail += w.pow_m2s[d_left];
    }
    if d_right >= 1 {
        tail += w.pow_m2s[d_right];
    }
    row[i] += tail / two_s;
}

impl<R: Real> DenseOperator<R> {
    /// Fill all rows in parallel with a per-row closure.
    fn rows_par_fill(&mut self, f: impl Fn(usize, &mut [R]) + Sync) {
        let cols = self.cols();
        self.entries_mut()
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}
