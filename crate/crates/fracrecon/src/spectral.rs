//! Fourier-multiplier form of the fractional Laplacian and Riesz potential.
//!
//! [`apply_spectral`] works on the grid's own periodic box (`N` samples,
//! period `N h`, frequencies `2 pi k / (N h)`), which makes composition
//! identities exact in the discrete sense. [`apply_spectral_padded`]
//! zero-pads the samples into a much larger box first; for functions that
//! decay inside the window it approximates the real-line operator and serves
//! as the cross-check oracle for the finite-difference matrix.

use crate::error::{Error, Result};
use crate::fraclap::FracOrder;
use crate::grid::{Grid1D, GridFunction};
use crate::operator::DenseOperator;
use crate::real::{pi, r, Real};
use num_complex::Complex;
use rustfft::{FftNum, FftPlanner};

/// Result of a spectral application together with its diagnostics.
#[derive(Debug, Clone)]
pub struct SpectralOutput<R> {
    pub function: GridFunction<R>,
    /// Set when the boundary samples exceed 1e-6 of the peak, which signals
    /// wrap-around (aliasing) error in the periodic model.
    pub aliasing_warning: bool,
    /// Largest imaginary residue relative to the peak, discarded from the
    /// returned values.
    pub imag_residue: R,
}

/// Periodic spectral fractional Laplacian: multiply the DFT by |xi|^(2s).
pub fn apply_spectral<R: Real + FftNum>(
    u: &GridFunction<R>,
    order: &FracOrder<R>,
) -> Result<SpectralOutput<R>> {
    multiplier_apply(u, order.s() * r::<R>(2.0), 1)
}

/// Spectral fractional Laplacian on a zero-padded box `pad` times the grid
/// length (rounded up to a power of two). Approximates the real-line
/// operator for data decaying inside the window.
pub fn apply_spectral_padded<R: Real + FftNum>(
    u: &GridFunction<R>,
    order: &FracOrder<R>,
    pad: usize,
) -> Result<SpectralOutput<R>> {
    multiplier_apply(u, order.s() * r::<R>(2.0), pad.max(1))
}

/// Riesz potential: multiply the DFT by |xi|^(-2s) with the zero mode
/// projected out. Requires 2s < n.
pub fn riesz_potential<R: Real + FftNum>(
    u: &GridFunction<R>,
    order: &FracOrder<R>,
) -> Result<SpectralOutput<R>> {
    let two_s = order.s() * r::<R>(2.0);
    if two_s >= r::<R>(order.n() as f64) {
        return Err(Error::UnsupportedOrder {
            two_s: two_s.to_f64().unwrap_or(f64::NAN),
            n: order.n(),
        });
    }
    multiplier_apply(u, -two_s, 1)
}

/// Dense circulant matrix of the periodic multiplier |xi|^(s), the spectral
/// half-order penalty `(-Delta)^(s/2)`.
pub fn half_order_penalty_matrix<R: Real + FftNum>(
    grid: &Grid1D<R>,
    order: &FracOrder<R>,
) -> Result<DenseOperator<R>> {
    if order.n() != 1 {
        return Err(Error::UnsupportedDimension { n: order.n() });
    }
    let n = grid.len();
    let mut sym: Vec<Complex<R>> = (0..n)
        .map(|k| Complex::new(frequency(k, n, grid.spacing()).abs().powf(order.s()), R::zero()))
        .collect();
    sym[0] = Complex::new(R::zero(), R::zero());
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut sym);
    let scale = R::one() / r::<R>(n as f64);
    let kernel: Vec<R> = sym.iter().map(|c| c.re * scale).collect();
    let mut op = DenseOperator::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let d = (i + n - j) % n;
            op.set(i, j, kernel[d]);
        }
    }
    op.with_grids(*grid, *grid)
}

/// Signed DFT frequency `2 pi k~ / (M h)` for bin `k` of `M` samples.
fn frequency<R: Real>(k: usize, m: usize, h: R) -> R {
    let k_signed = if k <= m / 2 {
        k as f64
    } else {
        k as f64 - m as f64
    };
    r::<R>(2.0) * pi::<R>() * r::<R>(k_signed) / (r::<R>(m as f64) * h)
}

fn multiplier_apply<R: Real + FftNum>(
    u: &GridFunction<R>,
    exponent: R,
    pad: usize,
) -> Result<SpectralOutput<R>> {
    let n = u.grid().len();
    let h = u.grid().spacing();
    let m = if pad <= 1 {
        n
    } else {
        (n * pad).next_power_of_two()
    };

    let peak = u.max_abs();
    let boundary = u.values()[0].abs().max(u.values()[n - 1].abs());
    let aliasing_warning = peak > R::zero() && boundary > r::<R>(1e-6) * peak;

    let mut buf: Vec<Complex<R>> = vec![Complex::new(R::zero(), R::zero()); m];
    for (i, &v) in u.values().iter().enumerate() {
        buf[i] = Complex::new(v, R::zero());
    }

    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut buf);
    for (k, c) in buf.iter_mut().enumerate() {
        if k == 0 {
            // |0|^(2s) = 0 for the positive order; the negative order
            // projects the zero mode out.
            *c = Complex::new(R::zero(), R::zero());
        } else {
            let mult = frequency(k, m, h).abs().powf(exponent);
            *c = *c * mult;
        }
    }
    planner.plan_fft_inverse(m).process(&mut buf);

    let scale = R::one() / r::<R>(m as f64);
    let mut values = Vec::with_capacity(n);
    let mut max_re = R::zero();
    let mut max_im = R::zero();
    for c in buf.iter().take(n) {
        let re = c.re * scale;
        let im = c.im * scale;
        max_re = max_re.max(re.abs());
        max_im = max_im.max(im.abs());
        values.push(re);
    }
    let imag_residue = if max_re > R::zero() {
        max_im / max_re
    } else {
        max_im
    };
    Ok(SpectralOutput {
        function: GridFunction::from_values(*u.grid(), values)?,
        aliasing_warning,
        imag_residue,
    })
}
