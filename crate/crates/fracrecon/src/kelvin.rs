//! Sphere inversion, the strong Kelvin transform on grid functions, and the
//! numerical residual of the intertwining identity
//! `(-Delta)^s K_alpha[f] = |x|^(-2 alpha) K_alpha[(-Delta)^s f]`.
//!
//! Target nodes whose inversion would leave the source window (those with
//! `|x| < 1/B` for a source truncated at `(-B, B)`) are masked, never
//! silently filled; the identity check fills the masked hole by cubic
//! interpolation exactly because those values are not available, which is
//! one of the two error sources the residual tables measure (the other is
//! the truncation error of the source-side operator).

use crate::error::{Error, Result};
use crate::extension::{build_extension_with_width, compute_h, windowed_extension};
use crate::fraclap::{assemble_fd_matrix, FracOrder};
use crate::grid::{sample, Grid1D, GridFunction, MaskedGridFunction};
use crate::real::{r, Real};

/// Sphere inversion `x -> x / |x|^2` (in 1D: `1/x`), an involution of the
/// punctured line.
pub fn sphere_invert<R: Real>(x: R) -> Result<R> {
    if x == R::zero() {
        return Err(Error::OriginUndefined);
    }
    Ok(x.recip())
}

/// Geometry of one Kelvin transform application.
#[derive(Debug, Clone, Copy)]
pub struct KelvinMap<R> {
    pub order: FracOrder<R>,
    pub source_grid: Grid1D<R>,
    pub target_grid: Grid1D<R>,
    /// Nodes with `|x|` below this radius are declared unknown.
    pub exclusion_radius: R,
}

impl<R: Real> KelvinMap<R> {
    pub fn new(
        order: FracOrder<R>,
        source_grid: Grid1D<R>,
        target_grid: Grid1D<R>,
        exclusion_radius: R,
    ) -> Result<Self> {
        let b = source_grid.a().abs().max(source_grid.b().abs());
        let required = b.recip();
        if exclusion_radius < required {
            return Err(Error::ExclusionTooSmall {
                given: exclusion_radius.to_f64().unwrap_or(f64::NAN),
                required: required.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self {
            order,
            source_grid,
            target_grid,
            exclusion_radius,
        })
    }

    /// Map with the smallest admissible exclusion radius `1/B`.
    pub fn with_minimal_exclusion(
        order: FracOrder<R>,
        source_grid: Grid1D<R>,
        target_grid: Grid1D<R>,
    ) -> Result<Self> {
        let b = source_grid.a().abs().max(source_grid.b().abs());
        Self::new(order, source_grid, target_grid, b.recip())
    }
}

/// Strong Kelvin transform `K_alpha[f](x) = |x|^(alpha - n) f(x/|x|^2)` on
/// the target grid. Nodes inside the exclusion radius, and nodes whose
/// inversion lands on unknown source data, come back masked.
pub fn kelvin_transform<R: Real>(
    f: &MaskedGridFunction<R>,
    map: &KelvinMap<R>,
) -> Result<MaskedGridFunction<R>> {
    if !f.grid().same_as(&map.source_grid) {
        return Err(Error::GridMismatch {
            detail: "function grid differs from the map's source grid".into(),
        });
    }
    let n = r::<R>(map.order.n() as f64);
    let alpha = map.order.alpha();
    let source = f.fill_unknown();
    let tg = &map.target_grid;
    let mut values = Vec::with_capacity(tg.len());
    let mut known = Vec::with_capacity(tg.len());
    for x in tg.nodes() {
        if x.abs() < map.exclusion_radius {
            values.push(R::zero());
            known.push(false);
            continue;
        }
        let y = sphere_invert(x)?;
        if !map.source_grid.contains(y) {
            return Err(Error::InversionOutOfRange {
                x: x.to_f64().unwrap_or(f64::NAN),
                inverted: y.to_f64().unwrap_or(f64::NAN),
                lo: map.source_grid.a().to_f64().unwrap_or(f64::NAN),
                hi: map.source_grid.b().to_f64().unwrap_or(f64::NAN),
            });
        }
        // Mask nodes whose interpolation stencil touches unknown source data.
        let cell = map.source_grid.cell_of(y);
        let lo = cell.saturating_sub(1);
        let hi = (cell + 2).min(map.source_grid.len() - 1);
        let stencil_known = (lo..=hi).all(|j| f.is_known(j));
        if !stencil_known {
            values.push(R::zero());
            known.push(false);
            continue;
        }
        let weight = x.abs().powf(alpha - n);
        values.push(weight * source.interpolate(y)?);
        known.push(true);
    }
    MaskedGridFunction::new(*tg, values, known)
}

/// Residual of the Kelvin intertwining identity for one test profile.
#[derive(Debug, Clone, Copy)]
pub struct IdentityResidual<R> {
    /// Relative L2 difference over the unmasked target nodes.
    pub rel_l2: R,
    /// Absolute L-infinity difference over the unmasked target nodes.
    pub abs_linf: R,
}

/// How the extension residual `h = u - u_ext` is produced for the identity
/// check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionStyle {
    /// `u_ext = u * W` with a smooth plateau window: kink-free residual,
    /// usable because the identity check receives `u` on the whole line.
    Windowed,
    /// Reflect-and-blend extension from `u` restricted to (-1, 1), as the
    /// reconstruction pipeline must use. Its residual carries a derivative
    /// kink at the window endpoints, which dominates the comparison as
    /// `s -> 1`.
    Reflected,
}

/// Parameters of the identity check; the defaults match the table setup.
#[derive(Debug, Clone, Copy)]
pub struct IdentityCheckConfig<R> {
    pub plateau_width: R,
    pub extension: ExtensionStyle,
}

impl<R: Real> Default for IdentityCheckConfig<R> {
    fn default() -> Self {
        Self {
            plateau_width: r(crate::extension::DEFAULT_PLATEAU_WIDTH),
            extension: ExtensionStyle::Windowed,
        }
    }
}

/// Compare `(-Delta)^s K_alpha[h]`, computed with the finite-difference
/// operator on the target grid, against `|x|^(-2 alpha) K_alpha[(-Delta)^s h]`
/// computed through the source-side operator, where `h = u - g` is the
/// extension residual of the profile `u` (so `K_alpha[h]` is compactly
/// supported in the unit ball).
pub fn kelvin_identity_residual<R: Real>(
    u: impl Fn(R) -> R,
    order: &FracOrder<R>,
    source: &Grid1D<R>,
    target: &Grid1D<R>,
    config: &IdentityCheckConfig<R>,
) -> Result<IdentityResidual<R>> {
    let u_full = sample(&u, source)?;
    let g = match config.extension {
        ExtensionStyle::Windowed => windowed_extension(&u_full, config.plateau_width)?,
        ExtensionStyle::Reflected => {
            let (inner_grid, start) = source.restrict(r(-1.0), r(1.0))?;
            let u_inside = GridFunction::from_values(
                inner_grid,
                u_full.values()[start..start + inner_grid.len()].to_vec(),
            )?;
            build_extension_with_width(&u_inside, source, config.plateau_width)?
        }
    };
    let h = compute_h(&u_full, &g)?;

    // Left side: FD fractional Laplacian of K_alpha[h] on the target grid,
    // with the masked hole bridged by linear interpolation (the unknown hole
    // is the dominant error source the tables record).
    let map = KelvinMap::with_minimal_exclusion(*order, *source, *target)?;
    let kh = kelvin_transform(&MaskedGridFunction::all_known(h.clone()), &map)?;
    let kh_filled = kh.fill_unknown_linear();
    let a_target = assemble_fd_matrix(target, order)?;
    let lhs = a_target.apply(kh_filled.values())?;

    // Right side: source-side FD Laplacian pushed through the transform.
    let a_source = assemble_fd_matrix(source, order)?;
    let lap_h = GridFunction::from_values(*source, a_source.apply(h.values())?)?;

    let alpha = order.alpha();
    let n = r::<R>(order.n() as f64);
    let two = r::<R>(2.0);
    let mut num = R::zero();
    let mut den = R::zero();
    let mut abs_linf = R::zero();
    let hstep = target.spacing();
    for (i, x) in target.nodes().enumerate() {
        if !kh.is_known(i) {
            continue;
        }
        let y = sphere_invert(x)?;
        let rhs = x.abs().powf(-two * alpha) * x.abs().powf(alpha - n) * lap_h.interpolate(y)?;
        let w = if i == 0 || i == target.len() - 1 {
            r::<R>(0.5) * hstep
        } else {
            hstep
        };
        let d = lhs[i] - rhs;
        num += w * d * d;
        den += w * rhs * rhs;
        abs_linf = abs_linf.max(d.abs());
    }
    if den <= R::zero() {
        return Err(Error::ZeroReference);
    }
    Ok(IdentityResidual {
        rel_l2: (num / den).sqrt(),
        abs_linf,
    })
}

/// Default truncation half-width for the residual tables. The window (-2, 2)
/// keeps the data truncation and the inversion hole large enough to show the
/// discrepancies the tables record.
pub const TABLE_HALF_WIDTH: f64 = 2.0;

/// Default node count for the residual tables.
pub const TABLE_NODES: usize = 2000;

/// Identity residual swept over a list of alpha = 2s values, in parallel.
pub fn identity_table<R: Real>(
    u: impl Fn(R) -> R + Sync,
    alphas: &[R],
    source: &Grid1D<R>,
    target: &Grid1D<R>,
    config: &IdentityCheckConfig<R>,
) -> Result<Vec<(R, IdentityResidual<R>)>> {
    use rayon::prelude::*;
    alphas
        .par_iter()
        .map(|&alpha| {
            let order = FracOrder::from_alpha(1, alpha)?;
            let res = kelvin_identity_residual(&u, &order, source, target, config)?;
            Ok((alpha, res))
        })
        .collect()
}
