//! Slant distributions: pointwise angles and the condition batteries for
//! involutivity, totally geodesic leaves, and totally umbilic leaves.
//!
//! Distributions are coordinate-aligned: each one is the span of a subset of
//! the parameter directions. The slant angle of a distribution `D` comes
//! from the symmetric operator `-(P|_D)^2`: its eigenvalues are `cos^2
//! theta`, their spread measures how far the distribution is from pointwise
//! slant, and `theta` is reported from the eigenvalue mean.
//!
//! The leaf conditions are evaluated twice: once through the shape-operator
//! and normal-connection route and once directly from the tangential
//! induced connection. Their agreement is itself a gated check; the
//! condition statuses (does a distribution have totally geodesic or umbilic
//! leaves here?) are scenario facts and are reported as ungated rows.

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::immersion::{FrameState, SecondOrder, Stencil};
use crate::numerics::{gram_schmidt, sym_eigen, InnerProduct, Matrix, ToleranceProfile, Vector};
use crate::report::{CheckItem, Gate};
use std::collections::BTreeMap;

/// Angle below which `sin` or `cos` scalings of adapted frames degenerate.
pub const ANGLE_GATE: f64 = 1e-3;

/// A split of the parameter directions into two groups (0-based indices),
/// with optional declared closed forms for `cos^2 theta` on each side.
#[derive(Debug, Clone)]
pub struct DistributionSplit {
    pub i1: Vec<usize>,
    pub i2: Vec<usize>,
    pub cos2_theta1: Option<Expression>,
    pub cos2_theta2: Option<Expression>,
}

impl DistributionSplit {
    pub fn new(i1: Vec<usize>, i2: Vec<usize>, m: usize) -> Result<Self> {
        let mut seen = vec![false; m];
        for &i in i1.iter().chain(i2.iter()) {
            if i >= m {
                return Err(Error::Schema {
                    field: "split".into(),
                    message: format!("direction index {} out of range 1..={m}", i + 1),
                });
            }
            if seen[i] {
                return Err(Error::Schema {
                    field: "split".into(),
                    message: format!("direction u{} assigned twice", i + 1),
                });
            }
            seen[i] = true;
        }
        if i1.is_empty() || i2.is_empty() {
            return Err(Error::Schema {
                field: "split".into(),
                message: "both distributions must be nonempty".into(),
            });
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::Schema {
                field: "split".into(),
                message: "every parameter direction must belong to one distribution".into(),
            });
        }
        if i1.len() % 2 != 0 || i2.len() % 2 != 0 {
            return Err(Error::Schema {
                field: "split".into(),
                message: "each distribution must have even real dimension".into(),
            });
        }
        Ok(DistributionSplit {
            i1,
            i2,
            cos2_theta1: None,
            cos2_theta2: None,
        })
    }

    /// Half the real dimension of the first distribution.
    pub fn n1(&self) -> usize {
        self.i1.len() / 2
    }

    pub fn n2(&self) -> usize {
        self.i2.len() / 2
    }
}

/// Orthonormal basis of a coordinate-aligned distribution, kept both as
/// coordinate coefficients (for constant-coefficient field extension) and as
/// ambient vectors.
#[derive(Debug, Clone)]
pub struct DistFrame {
    pub indices: Vec<usize>,
    /// Coefficient vectors in the full coordinate frame (length m).
    pub coeffs: Vec<Vector>,
    /// Ambient vectors (length 2n).
    pub ambient: Vec<Vector>,
}

impl DistFrame {
    pub fn build(state: &FrameState, indices: &[usize]) -> Result<DistFrame> {
        let m = state.param_dim();
        let inputs: Vec<Vector> = indices
            .iter()
            .map(|&i| {
                let mut e = Vector::zeros(m);
                e[i] = 1.0;
                e
            })
            .collect();
        let coeffs = gram_schmidt(&inputs, &InnerProduct::Gram(state.gram.clone()))?;
        let ambient = coeffs.iter().map(|c| &state.jac * c).collect();
        Ok(DistFrame {
            indices: indices.to_vec(),
            coeffs,
            ambient,
        })
    }

    pub fn dim(&self) -> usize {
        self.ambient.len()
    }

    /// Projection of an ambient vector onto the distribution.
    pub fn project(&self, state: &FrameState, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for b in &self.ambient {
            out += state.g(v, b) * b;
        }
        out
    }
}

/// Pointwise slant data for one distribution.
#[derive(Debug, Clone, Copy)]
pub struct SlantRecord {
    /// Angle in radians, from the mean eigenvalue of `-(P|_D)^2`.
    pub theta: f64,
    /// Mean of the eigenvalues, i.e. the fitted `cos^2 theta`.
    pub cos2: f64,
    /// Max minus min eigenvalue: the pointwise-slant violation.
    pub eig_spread: f64,
    /// Residual of `P`-invariance of the distribution.
    pub invariance_residual: f64,
    /// Proper slant: angle strictly inside (0, pi/2) and spread below gate.
    pub proper: bool,
}

/// Slant angle of the distribution spanned by the given parameter
/// directions. Fails when the span is not invariant under the tangential
/// part of `J` (within `tol_first`).
pub fn slant_angle(
    state: &FrameState,
    space: &AmbientSpace,
    indices: &[usize],
    profile: &ToleranceProfile,
) -> Result<SlantRecord> {
    let frame = DistFrame::build(state, indices)?;
    slant_angle_with_frame(state, space, &frame, profile)
}

pub fn slant_angle_with_frame(
    state: &FrameState,
    space: &AmbientSpace,
    frame: &DistFrame,
    profile: &ToleranceProfile,
) -> Result<SlantRecord> {
    let d = frame.dim();
    let mut p_restricted = Matrix::zeros(d, d);
    let mut invariance_residual: f64 = 0.0;
    for (b, vb) in frame.ambient.iter().enumerate() {
        let pv = state.p_of(space, vb)?;
        let mut inside = Vector::zeros(pv.len());
        for (a, va) in frame.ambient.iter().enumerate() {
            let c = state.g(&pv, va);
            p_restricted[(a, b)] = c;
            inside += c * va;
        }
        invariance_residual = invariance_residual.max(state.g_norm(&(&pv - inside)));
    }
    if invariance_residual > profile.tol_first {
        return Err(Error::NotInvariant {
            residual: invariance_residual,
        });
    }
    // -(P|_D)^2 is symmetric positive semidefinite; its eigenvalues are the
    // squared cosines of the principal slant angles
    let m2 = -(&p_restricted * &p_restricted);
    let sym = Matrix::from_fn(d, d, |i, j| 0.5 * (m2[(i, j)] + m2[(j, i)]));
    let (vals, _) = sym_eigen(&sym)?;
    let clamped: Vec<f64> = vals.iter().map(|&l| l.clamp(0.0, 1.0)).collect();
    let mean = clamped.iter().sum::<f64>() / clamped.len() as f64;
    let spread = vals[vals.len() - 1] - vals[0];
    let theta = mean.sqrt().clamp(0.0, 1.0).acos();
    let proper =
        spread <= profile.tol_eig && theta.sin() >= ANGLE_GATE && theta.cos() >= ANGLE_GATE;
    Ok(SlantRecord {
        theta,
        cos2: mean,
        eig_spread: spread,
        invariance_residual,
        proper,
    })
}

/// Output of one distribution's condition battery. The `first` distribution
/// is the one whose leaves are being characterized; `other` is its
/// complement.
#[derive(Debug, Clone)]
pub struct DistConditions {
    /// Max residual of the involutivity identity (antisymmetrized condition
    /// values must cancel for coordinate-aligned splits).
    pub involutivity: f64,
    /// Agreement between the operator route and the direct geometric route
    /// for the shared condition value.
    pub master_agreement: f64,
    /// Max of the condition values; zero means totally geodesic leaves as
    /// far as the operator route is concerned.
    pub tg_condition: f64,
    /// Max |omega(Z)| over the *other* distribution (the second clause of
    /// the totally geodesic characterization).
    pub tg_omega_clause: f64,
    /// Residual of the least-squares umbilic fit of the condition values.
    pub umbilic_fit: f64,
    /// Fitted umbilic mean-curvature vector (ambient, in the other
    /// distribution).
    pub fitted_mean: Vector,
    /// Direct geometric totally-geodesic residual: max norm of the
    /// other-projection of `nabla_X Y`.
    pub geo_tg: f64,
    /// Residual of the direct umbilic fit of the leaf second fundamental
    /// form.
    pub geo_umbilic_fit: f64,
    /// Geometrically fitted umbilic mean-curvature vector.
    pub geo_mean: Vector,
    /// Distance between the two fitted mean-curvature vectors.
    pub mean_agreement: f64,
}

/// Condition battery for the distribution spanned by `first` against its
/// complement `other`, using the slant angle of `first`.
pub fn dist_conditions(
    stencil: &Stencil,
    second: &SecondOrder,
    first: &[usize],
    other: &[usize],
    theta_first: f64,
) -> Result<DistConditions> {
    let space = stencil.space;
    let center = &stencil.center;
    let m = center.param_dim();
    let sin2 = theta_first.sin().powi(2);
    let lee = &center.lee;

    let other_frame = DistFrame::build(center, other)?;

    // perp_{T_y}(F T_x) for x, y in the first distribution, shared across
    // the condition values
    let mut perp_f: BTreeMap<(usize, usize), Vector> = BTreeMap::new();
    for &x in first {
        for &y in first {
            let mut field = |st: &FrameState| st.f_of(space, &st.coord_tangent(x));
            let value = field(center)?;
            let flat = stencil.derive(y, &mut field)?;
            let ty = center.coord_tangent(y);
            let perp = center.normal(&(&flat + center.lee_correction(&ty, &value)));
            perp_f.insert((x, y), perp);
        }
    }

    let ei = |i: usize| Vector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });

    // condition value for the ordered triple (x, y, z):
    //   g(A_{F P T_x} T_z - A_{F T_x} P T_z, T_y) + g(perp_{T_y} F T_x, F T_z)
    let mut cond: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut master_agreement: f64 = 0.0;
    let mut tg_condition: f64 = 0.0;
    for &x in first {
        let tx = center.coord_tangent(x);
        let ptx = center.p_of(space, &tx)?;
        let fptx = center.f_of(space, &ptx)?;
        let ftx = center.f_of(space, &tx)?;
        for &y in first {
            let ty = center.coord_tangent(y);
            for &z in other {
                let tz = center.coord_tangent(z);
                let ptz = center.p_of(space, &tz)?;
                let ftz = center.f_of(space, &tz)?;
                let shape1 = second.shape_apply_coords(center, &fptx, &ei(z));
                let shape2 =
                    second.shape_apply_coords(center, &ftx, &center.coords_of_tangent(&ptz));
                let c = center.g(&(shape1 - shape2), &ty) + center.g(&perp_f[&(x, y)], &ftz);
                cond.insert((x, y, z), c);
                // direct route through the induced connection:
                // sin^2(theta) (g(nabla_Y X, Z) + (1/2) g(X,Y) omega(Z))
                let gxy = center.g(&tx, &ty);
                let gv = sin2
                    * (center.g(&second.nabla_coord[y][x], &tz) + 0.5 * gxy * lee.omega_of(&tz));
                master_agreement = master_agreement.max((c - gv).abs());
                tg_condition = tg_condition.max(c.abs());
            }
        }
    }

    // involutivity: antisymmetrized condition values must cancel
    let mut involutivity: f64 = 0.0;
    for &x in first {
        for &y in first {
            if y <= x {
                continue;
            }
            for &z in other {
                let d = cond[&(x, y, z)] - cond[&(y, x, z)];
                involutivity = involutivity.max(d.abs());
            }
        }
    }

    // second clause of the totally geodesic characterization
    let mut tg_omega_clause: f64 = 0.0;
    for &z in other {
        tg_omega_clause = tg_omega_clause.max(lee.omega_of(&center.coord_tangent(z)).abs());
    }

    // umbilic fit: cond(x,y,z) = sin^2(theta) ((1/2) omega(Z) + g(H*, Z)) g(X,Y)
    // solved per z in least squares over the (x, y) pairs
    let mut gamma = Vector::zeros(other.len());
    for (zi, &z) in other.iter().enumerate() {
        let tz = center.coord_tangent(z);
        let mut num = 0.0;
        let mut den = 0.0;
        for &x in first {
            let tx = center.coord_tangent(x);
            for &y in first {
                let gxy = center.g(&tx, &center.coord_tangent(y));
                num += cond[&(x, y, z)] * gxy;
                den += gxy * gxy;
            }
        }
        gamma[zi] = num / (sin2 * den) - 0.5 * lee.omega_of(&tz);
    }
    // solve g(H*, T_z) = gamma_z inside the other distribution
    let k = other.len();
    let mut gram_other = Matrix::zeros(k, k);
    for (a, &za) in other.iter().enumerate() {
        for (b, &zb) in other.iter().enumerate() {
            gram_other[(a, b)] = center.g(&center.coord_tangent(za), &center.coord_tangent(zb));
        }
    }
    let coeffs = gram_other
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient {
            index: 0,
            pivot: 0.0,
        })?
        * &gamma;
    let mut fitted_mean = Vector::zeros(center.x.len());
    for (a, &za) in other.iter().enumerate() {
        fitted_mean += coeffs[a] * center.coord_tangent(za);
    }
    let mut umbilic_fit: f64 = 0.0;
    for (zi, &z) in other.iter().enumerate() {
        let tz = center.coord_tangent(z);
        for &x in first {
            let tx = center.coord_tangent(x);
            for &y in first {
                let gxy = center.g(&tx, &center.coord_tangent(y));
                let model = sin2 * (0.5 * lee.omega_of(&tz) + gamma[zi]) * gxy;
                umbilic_fit = umbilic_fit.max((cond[&(x, y, z)] - model).abs());
            }
        }
    }

    // direct leaf geometry: the second fundamental form of the leaves of
    // `first` inside the submanifold is the other-projection of nabla_X Y
    let mut geo_tg: f64 = 0.0;
    let mut leaf_h: BTreeMap<(usize, usize), Vector> = BTreeMap::new();
    for &x in first {
        for &y in first {
            let h_leaf = other_frame.project(center, &second.nabla_coord[x][y]);
            geo_tg = geo_tg.max(center.g_norm(&h_leaf));
            leaf_h.insert((x, y), h_leaf);
        }
    }
    // least-squares umbilic fit of the leaf form: h_leaf(X,Y) = g(X,Y) H*
    let mut num = Vector::zeros(center.x.len());
    let mut den = 0.0;
    for &x in first {
        let tx = center.coord_tangent(x);
        for &y in first {
            let gxy = center.g(&tx, &center.coord_tangent(y));
            num += gxy * &leaf_h[&(x, y)];
            den += gxy * gxy;
        }
    }
    let geo_mean = num / den;
    let mut geo_umbilic_fit: f64 = 0.0;
    for &x in first {
        let tx = center.coord_tangent(x);
        for &y in first {
            let gxy = center.g(&tx, &center.coord_tangent(y));
            let resid = &leaf_h[&(x, y)] - gxy * &geo_mean;
            geo_umbilic_fit = geo_umbilic_fit.max(center.g_norm(&resid));
        }
    }
    let mean_agreement = center.g_norm(&(&fitted_mean - &geo_mean));

    Ok(DistConditions {
        involutivity,
        master_agreement,
        tg_condition,
        tg_omega_clause,
        umbilic_fit,
        fitted_mean,
        geo_tg,
        geo_umbilic_fit,
        geo_mean,
        mean_agreement,
    })
}

/// Condition battery for the first distribution of the split (leaves of the
/// base): involutivity identity, totally geodesic / umbilic conditions, and
/// the direct geometric ground truth.
pub fn check_d1_conditions(
    stencil: &Stencil,
    second: &SecondOrder,
    split: &DistributionSplit,
) -> Result<DistConditions> {
    let rec = slant_angle(&stencil.center, stencil.space, &split.i1, &stencil.profile)?;
    dist_conditions(stencil, second, &split.i1, &split.i2, rec.theta)
}

/// Mirror image of [`check_d1_conditions`] with the distribution roles
/// exchanged.
pub fn check_d2_conditions(
    stencil: &Stencil,
    second: &SecondOrder,
    split: &DistributionSplit,
) -> Result<DistConditions> {
    let rec = slant_angle(&stencil.center, stencil.space, &split.i2, &stencil.profile)?;
    dist_conditions(stencil, second, &split.i2, &split.i1, rec.theta)
}

/// Check items for one distribution battery, named with the given prefix
/// (`d1` or `d2`). Identities and route agreements gate the run; condition
/// statuses are informational.
pub fn condition_items(prefix: &str, c: &DistConditions) -> Vec<CheckItem> {
    let named = |suffix: &str| -> &'static str {
        match (prefix, suffix) {
            ("d1", "involutivity") => "d1_involutivity",
            ("d1", "master") => "d1_condition_route_agreement",
            ("d1", "tg") => "d1_totally_geodesic_condition",
            ("d1", "omega") => "d1_tg_omega_clause",
            ("d1", "umb") => "d1_umbilic_fit",
            ("d1", "geo_tg") => "d1_geo_totally_geodesic",
            ("d1", "geo_umb") => "d1_geo_umbilic_fit",
            ("d1", "mean") => "d1_umbilic_mean_agreement",
            ("d2", "involutivity") => "d2_involutivity",
            ("d2", "master") => "d2_condition_route_agreement",
            ("d2", "tg") => "d2_totally_geodesic_condition",
            ("d2", "omega") => "d2_tg_omega_clause",
            ("d2", "umb") => "d2_umbilic_fit",
            ("d2", "geo_tg") => "d2_geo_totally_geodesic",
            ("d2", "geo_umb") => "d2_geo_umbilic_fit",
            ("d2", "mean") => "d2_umbilic_mean_agreement",
            _ => unreachable!("unknown condition item"),
        }
    };
    vec![
        CheckItem::new(named("involutivity"), c.involutivity, Gate::Second),
        CheckItem::new(named("master"), c.master_agreement, Gate::Second),
        CheckItem::info(named("tg"), c.tg_condition),
        CheckItem::info(named("omega"), c.tg_omega_clause),
        CheckItem::info(named("umb"), c.umbilic_fit),
        CheckItem::info(named("geo_tg"), c.geo_tg),
        CheckItem::info(named("geo_umb"), c.geo_umbilic_fit),
        CheckItem::new(named("mean"), c.mean_agreement, Gate::Second),
    ]
}

/// Max norm of `h` across the two distributions; zero characterizes a mixed
/// totally geodesic submanifold.
pub fn mixed_tg_check(
    state: &FrameState,
    second: &SecondOrder,
    d1: &DistFrame,
    d2: &DistFrame,
) -> f64 {
    let mut res: f64 = 0.0;
    for a in &d1.coeffs {
        for b in &d2.coeffs {
            let h = second.h_of_coords(a, b, state.x.len());
            res = res.max(state.g_norm(&h));
        }
    }
    res
}
