//! Uniform 1D grids, sampled functions, interpolation, quadrature and the
//! error norms used by every other module.

use crate::error::{Error, Result};
use crate::real::{r, Real};

/// Uniform closed-interval grid with `n` nodes: `node(i) = a + i*h`,
/// `h = (b - a)/(n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D<R> {
    a: R,
    b: R,
    n: usize,
    h: R,
}

impl<R: Real> Grid1D<R> {
    pub fn new(a: R, b: R, n: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidBounds {
                a: a.to_f64().unwrap_or(f64::NAN),
                b: b.to_f64().unwrap_or(f64::NAN),
            });
        }
        if n < 2 {
            return Err(Error::InvalidCount { n });
        }
        let h = (b - a) / r::<R>((n - 1) as f64);
        Ok(Self { a, b, n, h })
    }

    #[inline]
    pub fn a(&self) -> R {
        self.a
    }

    #[inline]
    pub fn b(&self) -> R {
        self.b
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn spacing(&self) -> R {
        self.h
    }

    #[inline]
    pub fn node(&self, i: usize) -> R {
        debug_assert!(i < self.n);
        if i == self.n - 1 {
            // Pin the last node to the right endpoint exactly.
            self.b
        } else {
            self.a + r::<R>(i as f64) * self.h
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = R> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    #[inline]
    pub fn contains(&self, x: R) -> bool {
        x >= self.a && x <= self.b
    }

    /// Index of the cell `[node(i), node(i+1)]` containing `x`, clamped to
    /// the valid range `0..n-1`.
    pub fn cell_of(&self, x: R) -> usize {
        let raw = ((x - self.a) / self.h).floor();
        let i = raw.to_f64().unwrap_or(0.0).max(0.0) as usize;
        i.min(self.n - 2)
    }

    /// Sub-grid built from the nodes of `self` that fall inside `[lo, hi]`.
    /// Returns the sub-grid and the index of its first node in `self`.
    pub fn restrict(&self, lo: R, hi: R) -> Result<(Grid1D<R>, usize)> {
        let mut first = None;
        let mut last = None;
        for i in 0..self.n {
            let x = self.node(i);
            if x >= lo && x <= hi {
                if first.is_none() {
                    first = Some(i);
                }
                last = Some(i);
            }
        }
        match (first, last) {
            (Some(i0), Some(i1)) if i1 > i0 => {
                let g = Grid1D::new(self.node(i0), self.node(i1), i1 - i0 + 1)?;
                Ok((g, i0))
            }
            _ => Err(Error::GridMismatch {
                detail: format!(
                    "fewer than 2 nodes of the grid fall inside [{}, {}]",
                    lo.to_f64().unwrap_or(f64::NAN),
                    hi.to_f64().unwrap_or(f64::NAN)
                ),
            }),
        }
    }

    /// True when both grids share bounds, node count and spacing bit-for-bit
    /// up to a 1e-12 relative slack on the endpoints.
    pub fn same_as(&self, other: &Self) -> bool {
        let tol = r::<R>(1e-12) * (self.b - self.a).abs();
        self.n == other.n && (self.a - other.a).abs() <= tol && (self.b - other.b).abs() <= tol
    }
}

/// Real values sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<R> {
    grid: Grid1D<R>,
    values: Vec<R>,
}

/// Sample `f` at every node of `g`.
pub fn sample<R: Real>(f: impl Fn(R) -> R, g: &Grid1D<R>) -> Result<GridFunction<R>> {
    let mut values = Vec::with_capacity(g.len());
    for x in g.nodes() {
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                x: x.to_f64().unwrap_or(f64::NAN),
                value: v.to_f64().unwrap_or(f64::NAN),
            });
        }
        values.push(v);
    }
    Ok(GridFunction { grid: *g, values })
}

impl<R: Real> GridFunction<R> {
    pub fn from_values(grid: Grid1D<R>, values: Vec<R>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                detail: format!(
                    "expected {} values for the grid, got {}",
                    grid.len(),
                    values.len()
                ),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFiniteValue {
                    x: grid.node(i).to_f64().unwrap_or(f64::NAN),
                    value: v.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid1D<R>) -> Self {
        Self {
            grid,
            values: vec![R::zero(); grid.len()],
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D<R> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [R] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<R> {
        self.values
    }

    /// Cubic (4-point Lagrange) interpolation, exact at nodes and for
    /// polynomials up to degree 3.
    pub fn interpolate(&self, x: R) -> Result<R> {
        let g = &self.grid;
        if !g.contains(x) {
            return Err(Error::OutOfRange {
                x: x.to_f64().unwrap_or(f64::NAN),
                lo: g.a().to_f64().unwrap_or(f64::NAN),
                hi: g.b().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(lagrange4(g, &self.values, x))
    }

    /// Composite trapezoid rule over the whole grid.
    pub fn trapezoid_integral(&self) -> R {
        trapezoid(self.grid.spacing(), &self.values)
    }

    /// Discrete L2 norm with trapezoid weights.
    pub fn l2_norm(&self) -> R {
        let sq: Vec<R> = self.values.iter().map(|&v| v * v).collect();
        trapezoid(self.grid.spacing(), &sq).max(R::zero()).sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.values
            .iter()
            .fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    pub fn scale(&self, c: R) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|&v| c * v).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch {
                detail: "subtraction needs matching grids".into(),
            });
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| u - v)
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch {
                detail: "addition needs matching grids".into(),
            });
        }
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&u, &v)| u + v)
                .collect(),
        })
    }
}

fn trapezoid<R: Real>(h: R, values: &[R]) -> R {
    if values.len() < 2 {
        return R::zero();
    }
    let half = r::<R>(0.5);
    let interior: R = values[1..values.len() - 1].iter().copied().sum();
    h * (half * (values[0] + values[values.len() - 1]) + interior)
}

/// 4-point Lagrange interpolation on the stencil around the cell of `x`,
/// clamped near the boundary.
fn lagrange4<R: Real>(g: &Grid1D<R>, values: &[R], x: R) -> R {
    let n = g.len();
    if n < 4 {
        // Fall back to linear interpolation on tiny grids.
        let c = g.cell_of(x);
        let t = (x - g.node(c)) / g.spacing();
        return values[c] * (R::one() - t) + values[c + 1] * t;
    }
    let c = g.cell_of(x);
    let start = c.saturating_sub(1).min(n - 4);
    let mut acc = R::zero();
    for j in 0..4 {
        let xj = g.node(start + j);
        let mut lj = R::one();
        for k in 0..4 {
            if k != j {
                let xk = g.node(start + k);
                lj = lj * (x - xk) / (xj - xk);
            }
        }
        acc += values[start + j] * lj;
    }
    acc
}

/// Relative discrete L2 error `||u - v|| / ||v||` with trapezoid weights.
pub fn relative_l2_error<R: Real>(u: &GridFunction<R>, v: &GridFunction<R>) -> Result<R> {
    let diff = u.sub(v)?;
    let denom = v.l2_norm();
    if denom <= R::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(diff.l2_norm() / denom)
}

/// Grid function with an explicit known/unknown marker per node.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedGridFunction<R> {
    grid: Grid1D<R>,
    values: Vec<R>,
    known: Vec<bool>,
}

impl<R: Real> MaskedGridFunction<R> {
    pub fn new(grid: Grid1D<R>, values: Vec<R>, known: Vec<bool>) -> Result<Self> {
        if values.len() != grid.len() || known.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                detail: "masked function needs one value and one flag per node".into(),
            });
        }
        Ok(Self { grid, values, known })
    }

    pub fn all_known(f: GridFunction<R>) -> Self {
        let known = vec![true; f.grid().len()];
        Self {
            grid: *f.grid(),
            values: f.into_values(),
            known,
        }
    }

    #[inline]
    pub fn grid(&self) -> &Grid1D<R> {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    #[inline]
    pub fn known(&self) -> &[bool] {
        &self.known
    }

    #[inline]
    pub fn is_known(&self, i: usize) -> bool {
        self.known[i]
    }

    pub fn known_count(&self) -> usize {
        self.known.iter().filter(|&&k| k).count()
    }

    /// Replace unknown stretches by the cubic through the two nearest known
    /// nodes on each side; an unknown prefix/suffix is filled by the nearest
    /// known value. Returns a plain grid function.
    pub fn fill_unknown(&self) -> GridFunction<R> {
        let n = self.grid.len();
        let mut out = self.values.clone();
        let known_idx: Vec<usize> = (0..n).filter(|&i| self.known[i]).collect();
        if known_idx.is_empty() {
            return GridFunction {
                grid: self.grid,
                values: vec![R::zero(); n],
            };
        }
        for i in 0..n {
            if self.known[i] {
                continue;
            }
            let right_pos = known_idx.partition_point(|&k| k < i);
            if right_pos == 0 {
                out[i] = self.values[known_idx[0]];
            } else if right_pos == known_idx.len() {
                out[i] = self.values[*known_idx.last().unwrap()];
            } else {
                // Up to two known nodes on each side of the gap.
                let mut stencil: Vec<usize> = Vec::with_capacity(4);
                if right_pos >= 2 {
                    stencil.push(known_idx[right_pos - 2]);
                }
                stencil.push(known_idx[right_pos - 1]);
                stencil.push(known_idx[right_pos]);
                if right_pos + 1 < known_idx.len() {
                    stencil.push(known_idx[right_pos + 1]);
                }
                let x = self.grid.node(i);
                let mut acc = R::zero();
                for &j in &stencil {
                    let xj = self.grid.node(j);
                    let mut lj = R::one();
                    for &k in &stencil {
                        if k != j {
                            let xk = self.grid.node(k);
                            lj = lj * (x - xk) / (xj - xk);
                        }
                    }
                    acc += self.values[j] * lj;
                }
                out[i] = acc;
            }
        }
        GridFunction {
            grid: self.grid,
            values: out,
        }
    }

    /// Replace unknown stretches by the straight line between the nearest
    /// known node on each side (nearest value for an unknown prefix/suffix).
    pub fn fill_unknown_linear(&self) -> GridFunction<R> {
        let n = self.grid.len();
        let mut out = self.values.clone();
        let known_idx: Vec<usize> = (0..n).filter(|&i| self.known[i]).collect();
        if known_idx.is_empty() {
            return GridFunction {
                grid: self.grid,
                values: vec![R::zero(); n],
            };
        }
        for i in 0..n {
            if self.known[i] {
                continue;
            }
            let right_pos = known_idx.partition_point(|&k| k < i);
            if right_pos == 0 {
                out[i] = self.values[known_idx[0]];
            } else if right_pos == known_idx.len() {
                out[i] = self.values[*known_idx.last().unwrap()];
            } else {
                let l = known_idx[right_pos - 1];
                let r0 = known_idx[right_pos];
                let t = r::<R>((i - l) as f64) / r::<R>((r0 - l) as f64);
                out[i] = self.values[l] * (R::one() - t) + self.values[r0] * t;
            }
        }
        GridFunction {
            grid: self.grid,
            values: out,
        }
    }

    /// Relative L2 distance to `other` over the jointly known nodes, with
    /// trapezoid weights restricted to those nodes.
    pub fn masked_relative_l2(&self, other: &MaskedGridFunction<R>) -> Result<R> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch {
                detail: "masked comparison needs matching grids".into(),
            });
        }
        let h = self.grid.spacing();
        let mut num = R::zero();
        let mut den = R::zero();
        for i in 0..self.grid.len() {
            if self.known[i] && other.known[i] {
                let w = if i == 0 || i == self.grid.len() - 1 {
                    r::<R>(0.5) * h
                } else {
                    h
                };
                let d = self.values[i] - other.values[i];
                num += w * d * d;
                den += w * other.values[i] * other.values[i];
            }
        }
        if den <= R::zero() {
            return Err(Error::ZeroReference);
        }
        Ok((num / den).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    #[test]
    fn make_grid_examples() {
        let g = Grid1D::new(-5.0, 5.0, 11).unwrap();
        assert_abs_diff_eq!(g.spacing(), 1.0);
        assert_abs_diff_eq!(g.node(5), 0.0);

        let g = Grid1D::new(-1.0, 1.0, 2).unwrap();
        assert_abs_diff_eq!(g.node(0), -1.0);
        assert_abs_diff_eq!(g.node(1), 1.0);
        assert_abs_diff_eq!(g.spacing(), 2.0);

        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        assert_abs_diff_eq!(g.spacing(), 0.01, epsilon = 1e-15);
    }

    #[test]
    fn grid_rejects_bad_input() {
        assert!(matches!(
            Grid1D::new(1.0, 1.0, 5),
            Err(Error::InvalidBounds { .. })
        ));
        assert!(matches!(
            Grid1D::new(2.0, 1.0, 5),
            Err(Error::InvalidBounds { .. })
        ));
        assert!(matches!(
            Grid1D::new(0.0, 1.0, 1),
            Err(Error::InvalidCount { n: 1 })
        ));
    }

    #[test]
    fn last_node_is_right_endpoint() {
        let g = Grid1D::new(-1.0_f64, 1.0, 7).unwrap();
        assert!((g.node(6) - 1.0).abs() <= 1e-12 * 2.0);
    }

    #[test]
    fn sample_examples() {
        let g = Grid1D::new(-1.0, 1.0, 3).unwrap();
        let u = sample(|x: f64| x * x, &g).unwrap();
        assert_eq!(u.values(), &[1.0, 0.0, 1.0]);

        let g = Grid1D::new(-5.0, 5.0, 11).unwrap();
        let u = sample(|x: f64| if x == 0.0 { 1.0 } else { x.sin() / x }, &g).unwrap();
        assert_abs_diff_eq!(u.values()[5], 1.0);

        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        assert!(matches!(
            sample(|x: f64| 1.0 / x, &g),
            Err(Error::NonFiniteValue { .. })
        ));
    }

    #[test]
    fn interpolate_examples() {
        let g = Grid1D::new(-1.0, 1.0, 201).unwrap();
        let u = sample(|x: f64| x * x, &g).unwrap();
        assert_abs_diff_eq!(u.interpolate(0.005).unwrap(), 2.5e-5, epsilon = 1e-6);

        // Exact at nodes.
        let v = u.interpolate(g.node(17)).unwrap();
        assert_abs_diff_eq!(v, u.values()[17], epsilon = 1e-15);

        let g3 = Grid1D::new(-1.0, 1.0, 3).unwrap();
        let u3 = sample(|x: f64| x, &g3).unwrap();
        assert!(matches!(
            u3.interpolate(2.0),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn interpolate_reproduces_cubics() {
        let g = Grid1D::new(-2.0, 3.0, 41).unwrap();
        let p = |x: f64| 0.5 - 1.25 * x + 2.0 * x * x - 0.75 * x * x * x;
        let u = sample(p, &g).unwrap();
        for &x in &[-1.97, -0.33, 0.051, 1.717, 2.93] {
            assert_abs_diff_eq!(u.interpolate(x).unwrap(), p(x), epsilon = 1e-10);
        }
    }

    #[test]
    fn trapezoid_examples() {
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let one = sample(|_| 1.0_f64, &g).unwrap();
        assert_relative_eq!(one.trapezoid_integral(), 1.0, max_relative = 1e-14);

        let lin = sample(|x: f64| x, &g).unwrap();
        assert_relative_eq!(lin.trapezoid_integral(), 0.5, max_relative = 1e-13);

        // Oracle: int e^{-x^2} over (-5,5) = sqrt(pi) * erf(5).
        let g = Grid1D::new(-5.0, 5.0, 2001).unwrap();
        let gauss = sample(|x: f64| (-x * x).exp(), &g).unwrap();
        let oracle = std::f64::consts::PI.sqrt() * statrs::function::erf::erf(5.0);
        assert_abs_diff_eq!(gauss.trapezoid_integral(), oracle, epsilon = 1e-6);
    }

    #[test]
    fn relative_error_examples() {
        let g = Grid1D::new(0.0, 1.0, 101).unwrap();
        let v = sample(|_| 1.0_f64, &g).unwrap();
        let u = sample(|_| 1.1_f64, &g).unwrap();
        assert_abs_diff_eq!(relative_l2_error(&u, &v).unwrap(), 0.1, epsilon = 1e-12);

        assert_abs_diff_eq!(relative_l2_error(&v, &v).unwrap(), 0.0);

        let two_v = v.scale(2.0);
        assert_abs_diff_eq!(relative_l2_error(&two_v, &v).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(
            relative_l2_error(&v, &two_v).unwrap(),
            0.5,
            epsilon = 1e-13
        );

        let zero = GridFunction::zeros(g);
        assert!(matches!(
            relative_l2_error(&u, &zero),
            Err(Error::ZeroReference)
        ));
    }

    #[test]
    fn fill_unknown_bridges_gaps() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        let p = |x: f64| 1.0 + 2.0 * x - x * x * x;
        let mut known = vec![true; 11];
        for k in 4..=6 {
            known[k] = false;
        }
        let values: Vec<f64> = g.nodes().map(p).collect();
        let masked = MaskedGridFunction::new(g, values, known).unwrap();
        let filled = masked.fill_unknown();
        for k in 4..=6 {
            assert_abs_diff_eq!(filled.values()[k], p(g.node(k)), epsilon = 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trapezoid_exact_on_affine(c0 in -5.0..5.0f64, c1 in -5.0..5.0f64,
                                     a in -3.0..0.0f64, len in 0.5..4.0f64,
                                     n in 2usize..200) {
            let b = a + len;
            let g = Grid1D::new(a, b, n).unwrap();
            let u = sample(|x: f64| c0 + c1 * x, &g).unwrap();
            let exact = c0 * (b - a) + 0.5 * c1 * (b * b - a * a);
            let got = u.trapezoid_integral();
            prop_assert!((got - exact).abs() <= 1e-12 * (1.0 + exact.abs()));
        }

        #[test]
        fn interpolation_exact_at_nodes(n in 4usize..60, idx in 0usize..59) {
            let g = Grid1D::new(-1.0, 2.0, n).unwrap();
            let u = sample(|x: f64| (3.0*x).sin(), &g).unwrap();
            let i = idx % n;
            let v = u.interpolate(g.node(i)).unwrap();
            prop_assert!((v - u.values()[i]).abs() < 1e-12);
        }
    }
}
