//! Warped-product structure: identity battery, characterization conditions,
//! the adapted orthonormal frame, and the lower bound on the squared norm of
//! the second fundamental form.
//!
//! A warp declaration supplies the warping function `lambda` over the base
//! parameters (the first distribution). It is verified, never inferred: the
//! induced metric must be block-diagonal across the split, the fiber block
//! must separate as `lambda(base)^2 * s(fiber)`, and the logarithmic
//! gradient of `lambda` must match half the tangential Lee vector.

use crate::ambient::AmbientSpace;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::immersion::{FrameState, SecondOrder, Stencil};
use crate::numerics::{Matrix, ToleranceProfile, Vector};
use crate::report::{CheckItem, Gate};
use crate::slant::{
    dist_conditions, slant_angle_with_frame, DistFrame, DistributionSplit, SlantRecord,
};

/// A declared warping function over the base parameters.
#[derive(Debug, Clone)]
pub struct WarpDeclaration {
    lambda: Expression,
    base: Vec<usize>,
}

impl WarpDeclaration {
    /// Parse `lambda` over the full parameter list and require that it only
    /// references base (first-distribution) parameters.
    pub fn new(lambda_source: &str, m: usize, base: &[usize]) -> Result<Self> {
        let names: Vec<String> = (1..=m).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let lambda = Expression::parse(lambda_source, &refs)?;
        for idx in lambda.referenced() {
            if !base.contains(&idx) {
                return Err(Error::Schema {
                    field: "warp.lambda".into(),
                    message: format!(
                        "warping function references u{}, which is not a base parameter",
                        idx + 1
                    ),
                });
            }
        }
        Ok(WarpDeclaration {
            lambda,
            base: base.to_vec(),
        })
    }

    /// Replace `lambda` by `1 / lambda` (a negative-control override: for
    /// exponential warps this flips the sign of the exponent).
    pub fn inverted(&self) -> WarpDeclaration {
        let src = format!("1/({})", self.lambda);
        let vars: Vec<&str> = self.lambda.variables().iter().map(|s| s.as_str()).collect();
        WarpDeclaration {
            lambda: Expression::parse(&src, &vars).expect("inversion of a valid expression"),
            base: self.base.clone(),
        }
    }

    pub fn lambda_at(&self, u: &Vector) -> Result<f64> {
        let value = self.lambda.eval_slice(u.as_slice())?;
        if value <= 0.0 {
            return Err(Error::NonPositiveWarp { value });
        }
        Ok(value)
    }

    /// Gradient of `ln lambda` in parameter coordinates (zero on fiber
    /// directions), by exact differentiation.
    pub fn log_gradient(&self, u: &Vector) -> Result<Vector> {
        let lambda = self.lambda_at(u)?;
        let grad = self.lambda.gradient_slice(u.as_slice())?;
        Ok(Vector::from_vec(grad) / lambda)
    }

    /// Directional derivative `X(ln lambda)` for a tangent vector given in
    /// coordinate coefficients.
    pub fn log_derivative(&self, u: &Vector, coeffs: &Vector) -> Result<f64> {
        Ok(self.log_gradient(u)?.dot(coeffs))
    }
}

/// Verify the declared warp structure at a point: positivity, block-diagonal
/// induced metric, and separability of the fiber block (the ratio
/// `g_fiber / lambda^2` must not depend on the base coordinates).
pub fn validate_warp(
    stencil: &Stencil,
    split: &DistributionSplit,
    warp: &WarpDeclaration,
) -> Result<Vec<CheckItem>> {
    let center = &stencil.center;
    let u = &center.u;
    let lambda = warp.lambda_at(u)?;

    let mut block: f64 = 0.0;
    for &a in &split.i1 {
        for &z in &split.i2 {
            block = block.max(center.gram[(a, z)].abs());
        }
    }

    // separability: compare the normalized fiber block at the point with the
    // normalized fiber block at base-perturbed points
    let k = split.i2.len();
    let fiber_block = |st_u: &Vector| -> Result<Matrix> {
        let st = crate::immersion::frame(stencil.chart, stencil.space, st_u)?;
        let g = &st.frame.gram;
        let l2 = warp.lambda_at(st_u)?.powi(2);
        Ok(Matrix::from_fn(k, k, |a, b| {
            g[(split.i2[a], split.i2[b])] / l2
        }))
    };
    let s0 = Matrix::from_fn(k, k, |a, b| {
        center.gram[(split.i2[a], split.i2[b])] / (lambda * lambda)
    });
    let mut separability: f64 = f64::NAN;
    'outer: for delta in [0.05, -0.05, 0.025, -0.025, 0.0125, -0.0125] {
        let mut v = u.clone();
        for &a in &split.i1 {
            v[a] += delta * (1.0 + v[a].abs());
        }
        if !stencil.chart.admits(&v)? {
            continue;
        }
        match fiber_block(&v) {
            Ok(s1) => {
                separability = (&s1 - &s0).norm() / s0.norm().max(1e-300);
                break 'outer;
            }
            Err(e) if e.is_degeneracy() => continue,
            Err(e) => return Err(e),
        }
    }
    if separability.is_nan() {
        return Err(Error::StencilFailure {
            dir: 0,
            offset: 0.0,
            message: "no admissible base perturbation for the separability check".into(),
        });
    }

    Ok(vec![
        CheckItem::info("warp_lambda", lambda),
        CheckItem::new("warp_block_diagonal", block, Gate::First),
        CheckItem::new("warp_separability", separability, Gate::First),
    ])
}

/// The six identity residuals tying `h`, the Lee vector, and the warping
/// function together on a warped product, evaluated over orthonormal frames
/// of the two distributions.
pub fn check_warp_identities(
    stencil: &Stencil,
    second: &SecondOrder,
    split: &DistributionSplit,
    warp: &WarpDeclaration,
) -> Result<Vec<CheckItem>> {
    let space = stencil.space;
    let center = &stencil.center;
    let d1 = DistFrame::build(center, &split.i1)?;
    let d2 = DistFrame::build(center, &split.i2)?;
    let lee = &center.lee;
    let dim = center.x.len();

    let f_of = |v: &Vector| -> Result<Vector> { center.f_of(space, v) };
    let h_of = |a: &Vector, b: &Vector| second.h_of_coords(a, b, dim);

    let mut id_hxz_fy: f64 = 0.0;
    let mut id_hxz_fw: f64 = 0.0;
    let mut id_hxy_fz: f64 = 0.0;
    let mut id_hzw_fx: f64 = 0.0;
    let mut id_dlambda: f64 = 0.0;
    let mut id_b_fiber: f64 = 0.0;

    for (xi, x) in d1.coeffs.iter().enumerate() {
        let xa = &d1.ambient[xi];
        for (yi, y) in d1.coeffs.iter().enumerate() {
            let ya = &d1.ambient[yi];
            let gxy = center.g(&xa.clone(), ya);
            for z in 0..d2.coeffs.len() {
                let zc = &d2.coeffs[z];
                let za = &d2.ambient[z];
                // g(h(X,Z), FY) = g(h(Y,Z), FX)
                let lhs = center.g(&h_of(x, zc), &f_of(ya)?);
                let rhs = center.g(&h_of(y, zc), &f_of(xa)?);
                id_hxz_fy = id_hxz_fy.max((lhs - rhs).abs());
                // g(h(X,Y), FZ) = g(h(X,Z), FY) - (1/2) g(X,Y) g(B, FZ)
                let fz = f_of(za)?;
                let lhs = center.g(&h_of(x, y), &fz);
                let rhs = center.g(&h_of(x, zc), &f_of(ya)?) - 0.5 * gxy * center.g(&lee.b, &fz);
                id_hxy_fz = id_hxy_fz.max((lhs - rhs).abs());
            }
        }
    }
    for (xi, x) in d1.coeffs.iter().enumerate() {
        let xa = &d1.ambient[xi];
        let fx = f_of(xa)?;
        for (zi, z) in d2.coeffs.iter().enumerate() {
            let za = &d2.ambient[zi];
            for (wi, w) in d2.coeffs.iter().enumerate() {
                let wa = &d2.ambient[wi];
                let gzw = center.g(&za.clone(), wa);
                // g(h(X,Z), FW) = g(h(X,W), FZ)
                let lhs = center.g(&h_of(x, z), &f_of(wa)?);
                let rhs = center.g(&h_of(x, w), &f_of(za)?);
                id_hxz_fw = id_hxz_fw.max((lhs - rhs).abs());
                // g(h(Z,W), FX) = g(h(X,Z), FW) - (1/2) g(Z,W) g(B, FX)
                let lhs = center.g(&h_of(z, w), &fx);
                let rhs = center.g(&h_of(x, z), &f_of(wa)?) - 0.5 * gzw * center.g(&lee.b, &fx);
                id_hzw_fx = id_hzw_fx.max((lhs - rhs).abs());
            }
        }
    }
    // X(ln lambda) = (1/2) g(B, X) on the base, g(B, Z) = 0 on the fiber
    for (xi, x) in d1.coeffs.iter().enumerate() {
        let lhs = warp.log_derivative(&center.u, x)?;
        let rhs = 0.5 * center.g(&lee.b, &d1.ambient[xi]);
        id_dlambda = id_dlambda.max((lhs - rhs).abs());
    }
    for za in &d2.ambient {
        id_b_fiber = id_b_fiber.max(center.g(&lee.b, za).abs());
    }

    Ok(vec![
        CheckItem::new("warp_id_hxz_fy", id_hxz_fy, Gate::Second),
        CheckItem::new("warp_id_hxz_fw", id_hxz_fw, Gate::Second),
        CheckItem::new("warp_id_hxy_fz", id_hxy_fz, Gate::Second),
        CheckItem::new("warp_id_hzw_fx", id_hzw_fx, Gate::Second),
        CheckItem::new("warp_id_dlambda", id_dlambda, Gate::Second),
        CheckItem::new("warp_id_b_fiber", id_b_fiber, Gate::First),
    ])
}

/// The characterization battery for a warped product: the Lee form vanishes
/// on the fiber, the shape-operator conditions hold for both distributions,
/// the mixed induced connection is `(1/2) omega(X) Z`, and the logarithmic
/// gradient of the warp is half the tangential Lee vector.
pub fn check_characterization(
    stencil: &Stencil,
    second: &SecondOrder,
    split: &DistributionSplit,
    warp: &WarpDeclaration,
) -> Result<Vec<CheckItem>> {
    let center = &stencil.center;
    let space = stencil.space;
    let lee = &center.lee;
    let d1 = DistFrame::build(center, &split.i1)?;
    let d2 = DistFrame::build(center, &split.i2)?;
    let theta1 = slant_angle_with_frame(center, space, &d1, &stencil.profile)?;
    let theta2 = slant_angle_with_frame(center, space, &d2, &stencil.profile)?;

    // omega vanishes on the fiber distribution
    let mut omega_fiber: f64 = 0.0;
    for za in &d2.ambient {
        omega_fiber = omega_fiber.max(lee.omega_of(za).abs());
    }

    // base condition: the totally geodesic condition value for the base
    // distribution vanishes
    let c1 = dist_conditions(stencil, second, &split.i1, &split.i2, theta1.theta)?;
    let cond_base = c1.tg_condition;

    // fiber condition: condition value minus
    // sin^2(theta2) ((1/2) omega(X) - X(ln lambda)) g(Z, W)
    let sin2 = theta2.theta.sin().powi(2);
    let mut cond_fiber: f64 = 0.0;
    {
        let m = center.param_dim();
        let ei = |i: usize| Vector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });
        for &z in &split.i2 {
            let tz = center.coord_tangent(z);
            let ptz = center.p_of(space, &tz)?;
            let fptz = center.f_of(space, &ptz)?;
            let ftz = center.f_of(space, &tz)?;
            for &w in &split.i2 {
                let tw = center.coord_tangent(w);
                let gzw = center.g(&tz, &tw);
                // perp_{T_w} F T_z
                let mut field = |st: &FrameState| st.f_of(space, &st.coord_tangent(z));
                let value = field(center)?;
                let flat = stencil.derive(w, &mut field)?;
                let perp = center.normal(&(&flat + center.lee_correction(&tw, &value)));
                for &x in &split.i1 {
                    let tx = center.coord_tangent(x);
                    let ptx = center.p_of(space, &tx)?;
                    let fx_ln = warp.log_derivative(&center.u, &ei(x))?;
                    let shape1 = second.shape_apply_coords(center, &fptz, &ei(x));
                    let shape2 =
                        second.shape_apply_coords(center, &ftz, &center.coords_of_tangent(&ptx));
                    let cond = center.g(&(shape1 - shape2), &tw)
                        + center.g(&perp, &center.f_of(space, &tx)?);
                    let model = sin2 * (0.5 * lee.omega_of(&tx) - fx_ln) * gzw;
                    cond_fiber = cond_fiber.max((cond - model).abs());
                }
            }
        }
    }

    // mixed connection: nabla_X Z = nabla_Z X = (1/2) omega(X) Z on
    // coordinate fields, both stencil routes
    let mut nabla_xz: f64 = 0.0;
    let mut nabla_zx: f64 = 0.0;
    for &x in &split.i1 {
        let tx = center.coord_tangent(x);
        let half_omega = 0.5 * lee.omega_of(&tx);
        for &z in &split.i2 {
            let tz = center.coord_tangent(z);
            let expect = half_omega * &tz;
            nabla_xz = nabla_xz.max(center.g_norm(&(&second.nabla_coord[x][z] - &expect)));
            nabla_zx = nabla_zx.max(center.g_norm(&(&second.nabla_coord[z][x] - &expect)));
        }
    }

    // gradient identity: grad(ln lambda) = (1/2) B^T, in two frames
    let bt = center.lee_tangential();
    let grad_coords = &center.gram_inv * warp.log_gradient(&center.u)?;
    let grad_coord_route = &center.jac * &grad_coords;
    let mut grad_frame_route = Vector::zeros(center.x.len());
    let log_grad = warp.log_gradient(&center.u)?;
    for a in 0..center.param_dim() {
        let coeff = Vector::from(center.tan_coeffs.column(a));
        let directional = log_grad.dot(&coeff);
        grad_frame_route += directional * &center.tan_frame[a];
    }
    let corollary = center.g_norm(&(&grad_coord_route - 0.5 * &bt));
    let frame_agreement = center.g_norm(&(&grad_coord_route - &grad_frame_route));

    // umbilic mean of the fiber leaves must be -(1/2) B^T (fitted through
    // the fiber condition battery)
    let c2 = dist_conditions(stencil, second, &split.i2, &split.i1, theta2.theta)?;
    let mean_fit = center.g_norm(&(&c2.fitted_mean + 0.5 * &bt));

    Ok(vec![
        CheckItem::new("char_omega_fiber", omega_fiber, Gate::First),
        CheckItem::new("char_cond_base", cond_base, Gate::Second),
        CheckItem::new("char_cond_fiber", cond_fiber, Gate::Second),
        CheckItem::new("char_nabla_xz", nabla_xz, Gate::Second),
        CheckItem::new("char_nabla_zx", nabla_zx, Gate::Second),
        CheckItem::new("char_grad_corollary", corollary, Gate::First),
        CheckItem::new(
            "char_grad_frame_agreement",
            frame_agreement,
            Gate::Fixed(1e-9),
        ),
        CheckItem::new("char_mean_curvature_fit", mean_fit, Gate::Second),
    ])
}

/// The adapted orthonormal frame built from slant pairs: for each
/// distribution, unit vectors paired with their normalized `P`-images, the
/// normalized `F`-images of all of them, and a `J`-paired basis of the
/// invariant normal complement.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    pub labels: Vec<String>,
    pub vectors: Vec<Vector>,
    /// Max deviation of the frame Gram matrix from the identity.
    pub gram_residual: f64,
    /// Max residual of `J v = cos(theta) Pv_hat + sin(theta) Fv_hat` over
    /// the tangent pairs of both distributions.
    pub j_decomposition_d1: f64,
    pub j_decomposition_d2: f64,
}

/// Build the adapted frame. Errors when a slant angle is too close to `0` or
/// `pi/2` for the `csc`/`sec` scalings (gated at [`crate::slant::ANGLE_GATE`] unless
/// `angle_gate` overrides it).
pub fn adapted_frame(
    state: &FrameState,
    space: &AmbientSpace,
    split: &DistributionSplit,
    rec1: &SlantRecord,
    rec2: &SlantRecord,
    angle_gate: f64,
) -> Result<AdaptedFrame> {
    for rec in [rec1, rec2] {
        if rec.theta.sin() < angle_gate || rec.theta.cos() < angle_gate {
            return Err(Error::DegenerateAngle {
                theta: rec.theta,
                gate: angle_gate,
            });
        }
    }

    // P-adapted pairs for one distribution: pick a unit vector, pair it with
    // sec(theta) * P v, and continue in the orthogonal complement
    let pairs = |indices: &[usize], rec: &SlantRecord| -> Result<Vec<Vector>> {
        let frame = DistFrame::build(state, indices)?;
        let sec_theta = 1.0 / rec.theta.cos();
        let mut out: Vec<Vector> = Vec::with_capacity(frame.dim());
        for candidate in &frame.ambient {
            if out.len() == frame.dim() {
                break;
            }
            let mut w = candidate.clone();
            for b in &out {
                let c = state.g(&w, b);
                w -= c * b;
            }
            let norm = state.g_norm(&w);
            if norm < 1e-6 {
                continue;
            }
            let v = w / norm;
            let pv = state.p_of(space, &v)?;
            out.push(v);
            out.push(sec_theta * pv);
        }
        if out.len() != frame.dim() {
            return Err(Error::RankDeficient {
                index: out.len() + 1,
                pivot: 0.0,
            });
        }
        Ok(out)
    };

    let d1_pairs = pairs(&split.i1, rec1)?;
    let d2_pairs = pairs(&split.i2, rec2)?;
    let csc1 = 1.0 / rec1.theta.sin();
    let csc2 = 1.0 / rec2.theta.sin();
    let f1: Vec<Vector> = d1_pairs
        .iter()
        .map(|v| Ok(csc1 * state.f_of(space, v)?))
        .collect::<Result<_>>()?;
    let f2: Vec<Vector> = d2_pairs
        .iter()
        .map(|v| Ok(csc2 * state.f_of(space, v)?))
        .collect::<Result<_>>()?;

    // invariant complement: project the F-images out of the normal frame and
    // pair the leftovers with their J-images
    let mut mu: Vec<Vector> = Vec::new();
    let mu_dim = state.normal_dim() - f1.len() - f2.len();
    for nu in &state.nor_frame {
        if mu.len() == mu_dim {
            break;
        }
        let mut w = nu.clone();
        for _ in 0..2 {
            for b in f1.iter().chain(f2.iter()).chain(mu.iter()) {
                let c = state.g(&w, b);
                w -= c * b;
            }
        }
        let norm = state.g_norm(&w);
        if norm < 1e-6 {
            continue;
        }
        let xi = w / norm;
        let jxi = space.apply_j(&xi)?;
        mu.push(xi);
        if mu.len() < mu_dim {
            mu.push(jxi);
        }
    }
    if mu.len() != mu_dim {
        return Err(Error::RankDeficient {
            index: mu.len() + 1,
            pivot: 0.0,
        });
    }

    let mut labels = Vec::new();
    let mut vectors = Vec::new();
    for (i, v) in d1_pairs.iter().enumerate() {
        labels.push(if i % 2 == 0 {
            format!("X{}", i / 2 + 1)
        } else {
            format!("PX{}", i / 2 + 1)
        });
        vectors.push(v.clone());
    }
    for (i, v) in d2_pairs.iter().enumerate() {
        labels.push(if i % 2 == 0 {
            format!("Z{}", i / 2 + 1)
        } else {
            format!("PZ{}", i / 2 + 1)
        });
        vectors.push(v.clone());
    }
    for (i, v) in f1.iter().enumerate() {
        labels.push(format!("FD1_{}", i + 1));
        vectors.push(v.clone());
    }
    for (i, v) in f2.iter().enumerate() {
        labels.push(format!("FD2_{}", i + 1));
        vectors.push(v.clone());
    }
    for (i, v) in mu.iter().enumerate() {
        labels.push(format!("MU_{}", i + 1));
        vectors.push(v.clone());
    }

    let mut gram_residual: f64 = 0.0;
    for (i, a) in vectors.iter().enumerate() {
        for (j, b) in vectors.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((state.g(a, b) - expect).abs());
        }
    }

    // J v = cos(theta) (sec(theta) P v) + sin(theta) (csc(theta) F v) must
    // hold exactly on a pointwise slant distribution
    let j_residual = |pairs: &[Vector], fs: &[Vector], rec: &SlantRecord| -> Result<f64> {
        let mut res: f64 = 0.0;
        for (i, v) in pairs.iter().enumerate() {
            let jv = space.apply_j(v)?;
            let reconstructed = rec.theta.cos() * pair_partner(pairs, i) + rec.theta.sin() * &fs[i];
            res = res.max(state.g_norm(&(jv - reconstructed)));
        }
        Ok(res)
    };
    let j_decomposition_d1 = j_residual(&d1_pairs, &f1, rec1)?;
    let j_decomposition_d2 = j_residual(&d2_pairs, &f2, rec2)?;

    Ok(AdaptedFrame {
        labels,
        vectors,
        gram_residual,
        j_decomposition_d1,
        j_decomposition_d2,
    })
}

/// For an adapted pair list `[v, sec PV, ...]`, the image of `P` applied to
/// entry `i` expressed in the hatted frame: `P v = cos(theta) (sec P v)` and
/// `P (sec P v) = -cos(theta) v` (up to the slant identity).
fn pair_partner(pairs: &[Vector], i: usize) -> Vector {
    if i % 2 == 0 {
        pairs[i + 1].clone()
    } else {
        -&pairs[i - 1]
    }
}

/// Pointwise record of the inequality for the squared norm of `h` on a
/// bi-slant submanifold.
#[derive(Debug, Clone)]
pub struct ChenRecord {
    /// Full squared norm of the second fundamental form over the
    /// orthonormal tangent frame (ordered pairs).
    pub lhs: f64,
    /// The four-term lower bound.
    pub rhs: f64,
    /// `lhs - rhs`; nonnegative for warped products.
    pub slack: f64,
    /// `component_norms[block][subspace]` with blocks `D1xD1, D1xD2, D2xD2`
    /// (cross terms counted with both orders) and subspaces `FD1, FD2, mu`.
    pub component_norms: [[f64; 3]; 3],
    /// Sum of the `mu`-column of the block norms.
    pub mu_norm2: f64,
    /// Norm of the full mean-curvature vector.
    pub mean_curvature_norm: f64,
    /// Mixed block residual: max norm of `h` across the two distributions.
    pub mixed_tg: f64,
    /// Relative defect of `sum(component_norms) - lhs`.
    pub block_sum_residual: f64,
    pub theta1: f64,
    pub theta2: f64,
}

/// Evaluate the inequality pointwise from `h` and the Lee vector.
pub fn chen_inequality(
    stencil: &Stencil,
    second: &SecondOrder,
    split: &DistributionSplit,
    angle_gate: f64,
) -> Result<ChenRecord> {
    let center = &stencil.center;
    let space = stencil.space;
    let profile = &stencil.profile;
    let d1 = DistFrame::build(center, &split.i1)?;
    let d2 = DistFrame::build(center, &split.i2)?;
    let rec1 = slant_angle_with_frame(center, space, &d1, profile)?;
    let rec2 = slant_angle_with_frame(center, space, &d2, profile)?;
    for rec in [&rec1, &rec2] {
        if rec.theta.sin() < angle_gate || rec.theta.cos() < angle_gate {
            return Err(Error::DegenerateAngle {
                theta: rec.theta,
                gate: angle_gate,
            });
        }
    }
    let dim = center.x.len();

    // orthonormal bases of the F-images and of the invariant complement,
    // built sequentially so the three groups partition the normal space
    let mut fd1: Vec<Vector> = Vec::new();
    for v in &d1.ambient {
        let mut w = center.f_of(space, v)?;
        for b in &fd1 {
            let c = center.g(&w, b);
            w -= c * b;
        }
        let norm = center.g_norm(&w);
        if norm < 1e-10 {
            return Err(Error::RankDeficient {
                index: fd1.len() + 1,
                pivot: norm,
            });
        }
        fd1.push(w / norm);
    }
    let mut fd2: Vec<Vector> = Vec::new();
    for v in &d2.ambient {
        let mut w = center.f_of(space, v)?;
        for b in fd1.iter().chain(fd2.iter()) {
            let c = center.g(&w, b);
            w -= c * b;
        }
        let norm = center.g_norm(&w);
        if norm < 1e-10 {
            return Err(Error::RankDeficient {
                index: fd2.len() + 1,
                pivot: norm,
            });
        }
        fd2.push(w / norm);
    }
    let mut mu: Vec<Vector> = Vec::new();
    let mu_dim = center.normal_dim() - fd1.len() - fd2.len();
    for nu in &center.nor_frame {
        if mu.len() == mu_dim {
            break;
        }
        let mut w = nu.clone();
        for _ in 0..2 {
            for b in fd1.iter().chain(fd2.iter()).chain(mu.iter()) {
                let c = center.g(&w, b);
                w -= c * b;
            }
        }
        let norm = center.g_norm(&w);
        if norm > 1e-6 {
            mu.push(w / norm);
        }
    }
    if mu.len() != mu_dim {
        return Err(Error::RankDeficient {
            index: mu.len() + 1,
            pivot: 0.0,
        });
    }
    let subspaces: [&[Vector]; 3] = [&fd1, &fd2, &mu];

    // h over the union frame; the union is orthonormal because the induced
    // metric is block-diagonal for a bi-slant split
    let union: Vec<&Vector> = d1.coeffs.iter().chain(d2.coeffs.iter()).collect();
    let n_total = union.len();
    let mut h_table: Vec<Vec<Vector>> = Vec::with_capacity(n_total);
    for a in &union {
        let mut row = Vec::with_capacity(n_total);
        for b in &union {
            row.push(second.h_of_coords(a, b, dim));
        }
        h_table.push(row);
    }

    let block_of = |a: usize, b: usize| -> usize {
        let a1 = a < d1.coeffs.len();
        let b1 = b < d1.coeffs.len();
        match (a1, b1) {
            (true, true) => 0,
            (false, false) => 2,
            _ => 1,
        }
    };

    let mut lhs = 0.0;
    let mut component_norms = [[0.0f64; 3]; 3];
    for a in 0..n_total {
        for b in 0..n_total {
            let h = &h_table[a][b];
            lhs += center.g(h, h);
            let block = block_of(a, b);
            for (s, basis) in subspaces.iter().enumerate() {
                let mut part = 0.0;
                for e in basis.iter() {
                    let c = center.g(h, e);
                    part += c * c;
                }
                component_norms[block][s] += part;
            }
        }
    }
    let block_sum: f64 = component_norms.iter().flatten().sum();
    let block_sum_residual = (block_sum - lhs).abs() / lhs.max(1.0);

    // partial traces of h over each distribution
    let mut h_trace_1 = Vector::zeros(dim);
    for a in 0..d1.coeffs.len() {
        h_trace_1 += &h_table[a][a];
    }
    let mut h_trace_2 = Vector::zeros(dim);
    for a in d1.coeffs.len()..n_total {
        h_trace_2 += &h_table[a][a];
    }
    let mean = &h_trace_1 + &h_trace_2;

    let project_norm2 = |v: &Vector, basis: &[Vector]| -> f64 {
        basis.iter().map(|e| center.g(v, e).powi(2)).sum()
    };
    let project_onto = |v: &Vector, basis: &[Vector]| -> Vector {
        let mut out = Vector::zeros(dim);
        for e in basis {
            out += center.g(v, e) * e;
        }
        out
    };

    let b_fd1 = project_onto(&center.lee.b, &fd1);
    let b_fd2 = project_onto(&center.lee.b, &fd2);
    let n1 = split.n1() as f64;
    let n2 = split.n2() as f64;
    let sin1 = rec1.theta.sin();
    let sin2 = rec2.theta.sin();
    let rhs = 0.5 * n1 * sin2 * sin2 * project_norm2(&center.lee.b, &fd2)
        + 0.5 * n2 * sin1 * sin1 * project_norm2(&center.lee.b, &fd1)
        + sin2 * center.g(&project_onto(&h_trace_1, &fd2), &b_fd2)
        + sin1 * center.g(&project_onto(&h_trace_2, &fd1), &b_fd1);

    let mu_norm2 = component_norms[0][2] + component_norms[1][2] + component_norms[2][2];
    let mixed_tg = crate::slant::mixed_tg_check(center, second, &d1, &d2);

    Ok(ChenRecord {
        lhs,
        rhs,
        slack: lhs - rhs,
        component_norms,
        mu_norm2,
        mean_curvature_norm: center.g_norm(&mean),
        mixed_tg,
        block_sum_residual,
        theta1: rec1.theta,
        theta2: rec2.theta,
    })
}

/// Equality-case analysis of a [`ChenRecord`].
#[derive(Debug, Clone, PartialEq)]
pub enum EqualityDiagnosis {
    /// `slack` exceeds the gate: the equality-case assertions do not apply.
    Strict { slack: f64 },
    /// `|slack|` within the gate: the image of `h` must avoid the invariant
    /// complement, and minimality must coincide with the mixed block
    /// vanishing.
    Equality {
        mu_residual: f64,
        minimal: bool,
        mixed_totally_geodesic: bool,
        consistent: bool,
    },
}

pub fn equality_case(record: &ChenRecord, profile: &ToleranceProfile) -> EqualityDiagnosis {
    if record.slack.abs() > profile.tol_second {
        return EqualityDiagnosis::Strict {
            slack: record.slack,
        };
    }
    let mu_residual = record.mu_norm2.sqrt();
    let minimal = record.mean_curvature_norm <= profile.tol_second;
    let mixed = record.mixed_tg <= profile.tol_second;
    EqualityDiagnosis::Equality {
        mu_residual,
        minimal,
        mixed_totally_geodesic: mixed,
        consistent: mu_residual <= profile.tol_second && minimal == mixed,
    }
}

/// Report rows for a [`ChenRecord`] and its diagnosis.
pub fn chen_items(record: &ChenRecord, profile: &ToleranceProfile) -> Vec<CheckItem> {
    let mut items = vec![
        CheckItem::info("chen_lhs", record.lhs),
        CheckItem::info("chen_rhs", record.rhs),
        CheckItem::info("chen_slack", record.slack),
        // residual formulation: negative slack beyond the gate fails
        CheckItem::new(
            "chen_slack_nonnegative",
            (-record.slack).max(0.0),
            Gate::Second,
        ),
        CheckItem::new(
            "chen_block_sum",
            record.block_sum_residual,
            Gate::Fixed(1e-8),
        ),
        CheckItem::info("chen_mu_norm", record.mu_norm2.sqrt()),
        CheckItem::info("chen_mean_curvature", record.mean_curvature_norm),
        CheckItem::info("chen_mixed_tg", record.mixed_tg),
        CheckItem::info("chen_theta1", record.theta1),
        CheckItem::info("chen_theta2", record.theta2),
    ];
    match equality_case(record, profile) {
        EqualityDiagnosis::Strict { .. } => {
            items.push(CheckItem::info("chen_equality_applicable", 0.0));
        }
        EqualityDiagnosis::Equality {
            mu_residual,
            minimal,
            mixed_totally_geodesic,
            ..
        } => {
            items.push(CheckItem::info("chen_equality_applicable", 1.0));
            items.push(CheckItem::new(
                "chen_equality_mu_residual",
                mu_residual,
                Gate::Second,
            ));
            let biconditional = if minimal == mixed_totally_geodesic {
                0.0
            } else {
                1.0
            };
            items.push(CheckItem::new(
                "chen_equality_biconditional",
                biconditional,
                Gate::Fixed(0.5),
            ));
        }
    }
    items
}
