//! Shared 1D quadrature helpers: composite Simpson and corner-regularized
//! integrals of `t^p f(t)` with the substitution `t = w^4`.

use crate::real::{r, Real};

/// Composite Simpson rule on `cells` cells (node count kept even internally).
pub(crate) fn simpson<R: Real>(a: R, b: R, cells: usize, mut f: impl FnMut(R) -> R) -> R {
    if b <= a {
        return R::zero();
    }
    let n = cells.max(1) * 2;
    let h = (b - a) / r::<R>(n as f64);
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let x = a + r::<R>(k as f64) * h;
        let w = if k % 2 == 1 { r::<R>(4.0) } else { r::<R>(2.0) };
        acc += w * f(x);
    }
    acc * h / r::<R>(3.0)
}

/// `int_0^b t^p f(t) dt` for `p > -1`: the substitution `t = w^k` with
/// `k = 4/(p+1)` maps the endpoint power onto exactly `k w^3 f(w^k)`, which
/// Simpson integrates at full order.
pub(crate) fn corner_integral<R: Real>(p: R, b: R, mut f: impl FnMut(R) -> R, cells: usize) -> R {
    if b <= R::zero() {
        return R::zero();
    }
    let k = r::<R>(4.0) / (p + R::one());
    let w_end = b.powf(k.recip());
    simpson(R::zero(), w_end, cells, |w| {
        if w == R::zero() {
            R::zero()
        } else {
            k * w * w * w * f(w.powf(k))
        }
    })
}
