//! Constructive extension of data known on (-1, 1) to the whole line.
//!
//! The extension reflects the data evenly about each endpoint and blends the
//! reflection with a smooth plateau window built from the step
//! `sigma(t) = f(t) / (f(t) + f(1-t))`, `f(t) = exp(-1/t)` for `t > 0`.
//! The result `g` agrees with the data inside (-1, 1), vanishes outside
//! `[-1-width, 1+width]`, and the residual `h = u - g` vanishes identically
//! on the data window.

use crate::error::{Error, Result};
use crate::grid::{sample, Grid1D, GridFunction};
use crate::real::{r, Real};

/// Data window of the extension construction.
pub const WINDOW_LEFT: f64 = -1.0;
pub const WINDOW_RIGHT: f64 = 1.0;

/// Default plateau half-width beyond the window.
pub const DEFAULT_PLATEAU_WIDTH: f64 = 0.5;

/// One-sided plateau window attached to a window endpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauSpec<R> {
    /// Window endpoint the plateau hangs off (`-1` or `1`).
    pub center: R,
    /// Support width beyond the endpoint.
    pub width: R,
    /// `+1` decays to the right of the endpoint, `-1` to the left.
    pub orientation: i8,
}

impl<R: Real> PlateauSpec<R> {
    pub fn new(center: R, width: R, orientation: i8) -> Result<Self> {
        if width <= R::zero() {
            return Err(Error::InvalidParameter {
                name: "width",
                detail: "plateau width must be positive".into(),
            });
        }
        if orientation != 1 && orientation != -1 {
            return Err(Error::InvalidParameter {
                name: "orientation",
                detail: "orientation must be +1 or -1".into(),
            });
        }
        Ok(Self {
            center,
            width,
            orientation,
        })
    }
}

/// `f(t) = exp(-1/t)` for `t > 0`, zero otherwise.
fn bump_seed<R: Real>(t: R) -> R {
    if t > R::zero() {
        (-t.recip()).exp()
    } else {
        R::zero()
    }
}

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, strictly increasing between,
/// with all derivatives vanishing at the glue points.
pub fn smooth_step<R: Real>(t: R) -> R {
    let a = bump_seed(t);
    let b = bump_seed(R::one() - t);
    if a == R::zero() && b == R::zero() {
        // Only reachable through rounding at the glue points.
        return if t <= R::zero() { R::zero() } else { R::one() };
    }
    a / (a + b)
}

/// Plateau window value: 1 on the inner side of the endpoint, smooth decay
/// across the support, 0 beyond it.
pub fn plateau<R: Real>(x: R, spec: &PlateauSpec<R>) -> R {
    let t = (x - spec.center) / spec.width * r::<R>(spec.orientation as f64);
    if t <= R::zero() {
        R::one()
    } else if t >= R::one() {
        R::zero()
    } else {
        smooth_step(R::one() - t)
    }
}

/// Extension of `u_inside` (sampled on a grid covering the data window) to
/// the `full` grid with the default plateau width.
pub fn build_extension<R: Real>(
    u_inside: &GridFunction<R>,
    full: &Grid1D<R>,
) -> Result<GridFunction<R>> {
    build_extension_with_width(u_inside, full, r::<R>(DEFAULT_PLATEAU_WIDTH))
}

/// Extension with an explicit plateau width.
pub fn build_extension_with_width<R: Real>(
    u_inside: &GridFunction<R>,
    full: &Grid1D<R>,
    width: R,
) -> Result<GridFunction<R>> {
    let wl = r::<R>(WINDOW_LEFT);
    let wr = r::<R>(WINDOW_RIGHT);
    let inner = u_inside.grid();
    if inner.a() > wl + inner.spacing() || inner.b() < wr - inner.spacing() {
        return Err(Error::GridMismatch {
            detail: format!(
                "data grid [{}, {}] does not cover the window (-1, 1)",
                inner.a().to_f64().unwrap_or(f64::NAN),
                inner.b().to_f64().unwrap_or(f64::NAN)
            ),
        });
    }
    if full.a() > wl || full.b() < wr {
        return Err(Error::GridMismatch {
            detail: "full grid must contain the data window (-1, 1)".into(),
        });
    }
    let psi_left = PlateauSpec::new(wl, width, -1)?;
    let psi_right = PlateauSpec::new(wr, width, 1)?;

    // Reflections about the endpoints need data on [1-width, 1] and
    // [-1, -1+width]; clamp the reflected point into the data grid to guard
    // against one-node rounding at the window edge.
    let eval = |x: R| -> Result<R> {
        let lo = inner.a();
        let hi = inner.b();
        let clamped = x.max(lo).min(hi);
        u_inside.interpolate(clamped)
    };

    let mut values = Vec::with_capacity(full.len());
    for x in full.nodes() {
        let v = if x >= wl && x <= wr {
            eval(x)?
        } else if x > wr {
            let w = plateau(x, &psi_right);
            if w == R::zero() {
                R::zero()
            } else {
                w * eval(wr + wr - x)?
            }
        } else {
            let w = plateau(x, &psi_left);
            if w == R::zero() {
                R::zero()
            } else {
                w * eval(wl + wl - x)?
            }
        };
        values.push(v);
    }
    GridFunction::from_values(*full, values)
}

/// Multiplicative extension `g = u * W` where `W` is 1 on the window and
/// decays smoothly to 0 across a plateau of the given width. Unlike
/// [`build_extension`] this needs `u` on the whole grid, so it only serves
/// settings where `u` is globally known (the identity tables); it produces a
/// kink-free residual `h = u (1 - W)`.
pub fn windowed_extension<R: Real>(u: &GridFunction<R>, width: R) -> Result<GridFunction<R>> {
    let wl = r::<R>(WINDOW_LEFT);
    let wr = r::<R>(WINDOW_RIGHT);
    let psi_left = PlateauSpec::new(wl, width, -1)?;
    let psi_right = PlateauSpec::new(wr, width, 1)?;
    let values = u
        .grid()
        .nodes()
        .zip(u.values())
        .map(|(x, &v)| v * plateau(x, &psi_left) * plateau(x, &psi_right))
        .collect();
    GridFunction::from_values(*u.grid(), values)
}

/// Residual `h = u - g`, asserting that it vanishes on the data window.
pub fn compute_h<R: Real>(u: &GridFunction<R>, g: &GridFunction<R>) -> Result<GridFunction<R>> {
    let h = u.sub(g)?;
    let wl = r::<R>(WINDOW_LEFT);
    let wr = r::<R>(WINDOW_RIGHT);
    let mut max_abs = R::zero();
    for (i, x) in h.grid().nodes().enumerate() {
        if x > wl && x < wr {
            max_abs = max_abs.max(h.values()[i].abs());
        }
    }
    if max_abs > r::<R>(1e-10) {
        return Err(Error::ResidualInside {
            max_abs: max_abs.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(h)
}
