//! Pointwise extrinsic geometry of a parametric chart `u -> x(u)`.
//!
//! At each admitted parameter point the chart yields a frame state: the
//! Jacobian (coordinate tangent frame), orthonormal tangent and normal
//! frames under the ambient metric, and the blocks `P, F, t, f` of the
//! complex structure split along the submanifold. Charts are differentiated
//! exactly (dual numbers); everything needing a derivative *of a field along
//! the submanifold* goes through a shared centered stencil with Richardson
//! extrapolation, so the second fundamental form and all connection-level
//! checks live in the second-derivative error tier.

use crate::ambient::{AmbientSpace, LeeData};
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::numerics::{gram_schmidt, InnerProduct, Matrix, ToleranceProfile, Vector};
use crate::report::{CheckItem, Gate};

/// A parametric immersion `u in R^m -> x(u) in R^{2n}`, given componentwise
/// by expressions over `u1..um`. A point is admitted when every guard
/// expression is strictly positive.
#[derive(Debug, Clone)]
pub struct Chart {
    m: usize,
    components: Vec<Expression>,
    guards: Vec<Expression>,
}

impl Chart {
    pub fn new(
        m: usize,
        components: &[String],
        guards: &[String],
        ambient_dim: usize,
    ) -> Result<Self> {
        if components.len() != ambient_dim {
            return Err(Error::Schema {
                field: "chart.components".into(),
                message: format!(
                    "expected {ambient_dim} components for the ambient dimension, got {}",
                    components.len()
                ),
            });
        }
        let names: Vec<String> = (1..=m).map(|i| format!("u{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let components = components
            .iter()
            .map(|src| Expression::parse(src, &refs))
            .collect::<Result<Vec<_>, _>>()?;
        let guards = guards
            .iter()
            .map(|src| Expression::parse(src, &refs))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Chart {
            m,
            components,
            guards,
        })
    }

    pub fn param_dim(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    /// True when every guard expression is positive at `u`.
    pub fn admits(&self, u: &Vector) -> Result<bool> {
        for g in &self.guards {
            if g.eval_slice(u.as_slice())? <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn position(&self, u: &Vector) -> Result<Vector> {
        let vals: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.eval_slice(u.as_slice()))
            .collect::<Result<_, _>>()?;
        Ok(Vector::from_vec(vals))
    }

    /// Exact Jacobian, column `i` = `dx/du_i`.
    pub fn jacobian(&self, u: &Vector) -> Result<Matrix> {
        let dim = self.ambient_dim();
        let mut jac = Matrix::zeros(dim, self.m);
        for (row, comp) in self.components.iter().enumerate() {
            for col in 0..self.m {
                jac[(row, col)] = comp.partial_slice(u.as_slice(), col)?;
            }
        }
        Ok(jac)
    }
}

/// All first-order pointwise data at one parameter value.
#[derive(Debug, Clone)]
pub struct FrameState {
    pub u: Vector,
    pub x: Vector,
    pub sigma: f64,
    pub metric: InnerProduct,
    pub lee: LeeData,
    /// True (convention-independent) Lee data feeding the connection.
    lee_raw: LeeData,
    /// Jacobian columns are the coordinate tangent frame.
    pub jac: Matrix,
    /// Induced metric `g_ij = g(T_i, T_j)`.
    pub gram: Matrix,
    pub gram_inv: Matrix,
    /// Coefficients of the orthonormal tangent frame in the coordinate
    /// frame: column `a` holds `c` with `e_a = sum_i c_i T_i`.
    pub tan_coeffs: Matrix,
    /// Orthonormal tangent frame, ambient vectors.
    pub tan_frame: Vec<Vector>,
    /// Orthonormal normal frame, seeded from the canonical basis in order.
    pub nor_frame: Vec<Vector>,
    /// Tangential block of `J` in the orthonormal tangent frame (m x m).
    pub p_mat: Matrix,
    /// Tangent-to-normal block (q x m).
    pub f_mat: Matrix,
    /// Normal-to-tangent block (m x q).
    pub t_mat: Matrix,
    /// Normal-to-normal block (q x q).
    pub ff_mat: Matrix,
}

impl FrameState {
    pub fn build(chart: &Chart, space: &AmbientSpace, u: &Vector) -> Result<FrameState> {
        Self::build_inner(chart, space, u, true)
    }

    /// Stencil points skip the guard: guards carry strict-inequality margins
    /// smaller than the stencil step, and the expressions themselves stay
    /// evaluable there.
    fn build_unguarded(chart: &Chart, space: &AmbientSpace, u: &Vector) -> Result<FrameState> {
        Self::build_inner(chart, space, u, false)
    }

    fn build_inner(
        chart: &Chart,
        space: &AmbientSpace,
        u: &Vector,
        check_guard: bool,
    ) -> Result<FrameState> {
        if u.len() != chart.param_dim() {
            return Err(Error::DimensionMismatch {
                expected: chart.param_dim(),
                got: u.len(),
            });
        }
        if check_guard && !chart.admits(u)? {
            return Err(Error::GuardViolation);
        }
        let m = chart.param_dim();
        let dim = chart.ambient_dim();
        if dim != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                got: dim,
            });
        }
        let x = chart.position(u)?;
        let jac = chart.jacobian(u)?;
        let sigma = space.sigma_at(&x)?;
        let metric = space.metric(&x)?;
        let lee = space.lee_data(&x)?;
        let lee_raw = space.lee_data_unsigned(&x)?;

        let scale = sigma.exp();
        let gram = scale * (jac.transpose() * &jac);
        let gram_inv = gram.clone().try_inverse().ok_or(Error::RankDeficient {
            index: 0,
            pivot: 0.0,
        })?;

        // Orthonormal tangent frame via Gram-Schmidt in coefficient space:
        // inputs are the coordinate unit coefficients, the inner product is
        // the induced metric. This yields both the coefficients and the
        // ambient vectors consistently.
        let coeff_inputs: Vec<Vector> = (0..m)
            .map(|i| {
                let mut e = Vector::zeros(m);
                e[i] = 1.0;
                e
            })
            .collect();
        let coeffs = gram_schmidt(&coeff_inputs, &InnerProduct::Gram(gram.clone()))?;
        let mut tan_coeffs = Matrix::zeros(m, m);
        let mut tan_frame = Vec::with_capacity(m);
        for (a, c) in coeffs.iter().enumerate() {
            for i in 0..m {
                tan_coeffs[(i, a)] = c[i];
            }
            tan_frame.push(&jac * c);
        }

        // Normal frame: project the tangent space out of the canonical basis
        // vectors in order, keeping each residual that is large enough. The
        // seed order makes the frame deterministic.
        let q = dim - m;
        let mut nor_frame: Vec<Vector> = Vec::with_capacity(q);
        for k in 0..dim {
            if nor_frame.len() == q {
                break;
            }
            let mut w = Vector::zeros(dim);
            w[k] = 1.0;
            let seed_norm = metric.norm(&w);
            for _ in 0..2 {
                for t in &tan_frame {
                    let c = metric.apply(&w, t);
                    w -= c * t;
                }
                for nu in &nor_frame {
                    let c = metric.apply(&w, nu);
                    w -= c * nu;
                }
            }
            let norm = metric.norm(&w);
            if norm > 1e-8 * seed_norm {
                nor_frame.push(w / norm);
            }
        }
        if nor_frame.len() != q {
            return Err(Error::RankDeficient {
                index: nor_frame.len() + 1,
                pivot: 0.0,
            });
        }

        // Blocks of J in the combined orthonormal frame.
        let mut p_mat = Matrix::zeros(m, m);
        let mut f_mat = Matrix::zeros(q, m);
        for b in 0..m {
            let jv = space.apply_j(&tan_frame[b])?;
            for a in 0..m {
                p_mat[(a, b)] = metric.apply(&jv, &tan_frame[a]);
            }
            for al in 0..q {
                f_mat[(al, b)] = metric.apply(&jv, &nor_frame[al]);
            }
        }
        let mut t_mat = Matrix::zeros(m, q);
        let mut ff_mat = Matrix::zeros(q, q);
        for be in 0..q {
            let jnu = space.apply_j(&nor_frame[be])?;
            for a in 0..m {
                t_mat[(a, be)] = metric.apply(&jnu, &tan_frame[a]);
            }
            for al in 0..q {
                ff_mat[(al, be)] = metric.apply(&jnu, &nor_frame[al]);
            }
        }

        Ok(FrameState {
            u: u.clone(),
            x,
            sigma,
            metric,
            lee,
            lee_raw,
            jac,
            gram,
            gram_inv,
            tan_coeffs,
            tan_frame,
            nor_frame,
            p_mat,
            f_mat,
            t_mat,
            ff_mat,
        })
    }

    pub fn param_dim(&self) -> usize {
        self.u.len()
    }

    pub fn normal_dim(&self) -> usize {
        self.nor_frame.len()
    }

    pub fn g(&self, a: &Vector, b: &Vector) -> f64 {
        self.metric.apply(a, b)
    }

    pub fn g_norm(&self, a: &Vector) -> f64 {
        self.metric.norm(a)
    }

    /// Coordinate tangent vector `T_i`.
    pub fn coord_tangent(&self, i: usize) -> Vector {
        Vector::from(self.jac.column(i))
    }

    pub fn tangential(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for t in &self.tan_frame {
            out += self.metric.apply(v, t) * t;
        }
        out
    }

    pub fn normal(&self, v: &Vector) -> Vector {
        let mut out = Vector::zeros(v.len());
        for nu in &self.nor_frame {
            out += self.metric.apply(v, nu) * nu;
        }
        out
    }

    /// Tangential part of `J v` for a tangent `v`.
    pub fn p_of(&self, space: &AmbientSpace, v: &Vector) -> Result<Vector> {
        Ok(self.tangential(&space.apply_j(v)?))
    }

    /// Normal part of `J v` for a tangent `v`.
    pub fn f_of(&self, space: &AmbientSpace, v: &Vector) -> Result<Vector> {
        Ok(self.normal(&space.apply_j(v)?))
    }

    /// Tangential part of `J xi` for a normal `xi`.
    pub fn t_of(&self, space: &AmbientSpace, xi: &Vector) -> Result<Vector> {
        Ok(self.tangential(&space.apply_j(xi)?))
    }

    /// Normal part of `J xi` for a normal `xi`.
    pub fn ff_of(&self, space: &AmbientSpace, xi: &Vector) -> Result<Vector> {
        Ok(self.normal(&space.apply_j(xi)?))
    }

    /// Coordinate-frame coefficients of a tangent vector.
    pub fn coords_of_tangent(&self, v: &Vector) -> Vector {
        let m = self.param_dim();
        let mut rhs = Vector::zeros(m);
        for i in 0..m {
            rhs[i] = self.g(v, &self.coord_tangent(i));
        }
        &self.gram_inv * rhs
    }

    /// Tangential part of the Lee vector.
    pub fn lee_tangential(&self) -> Vector {
        self.tangential(&self.lee.b)
    }

    /// Normal part of the Lee vector.
    pub fn lee_normal(&self) -> Vector {
        self.normal(&self.lee.b)
    }

    /// Anti-Lee vector `A = -J B`, the metric dual of `omega ∘ J`.
    pub fn anti_lee(&self, space: &AmbientSpace) -> Result<Vector> {
        Ok(-space.apply_j(&self.lee.b)?)
    }

    /// Lee correction `(1/2){omega(u)v + omega(v)u - g(u,v)B}` separating the
    /// Levi-Civita connection from the flat one, from the metric's own Lee
    /// data (independent of any sign override).
    pub fn lee_correction(&self, u: &Vector, v: &Vector) -> Vector {
        0.5 * (self.lee_raw.omega_of(u) * v + self.lee_raw.omega_of(v) * u
            - self.g(u, v) * &self.lee_raw.b)
    }

    /// Max deviation of the combined orthonormal frame Gram matrix from the
    /// identity.
    pub fn frame_gram_residual(&self) -> f64 {
        let all: Vec<&Vector> = self.tan_frame.iter().chain(self.nor_frame.iter()).collect();
        let mut res: f64 = 0.0;
        for (i, a) in all.iter().enumerate() {
            for (j, b) in all.iter().enumerate() {
                let expect = if i == j { 1.0 } else { 0.0 };
                res = res.max((self.g(a, b) - expect).abs());
            }
        }
        res
    }

    /// Frobenius residuals of the four block identities satisfied by the
    /// `J` split: `P^2 + tF = -I`, `f^2 + Ft = -I`, `FP + fF = 0`,
    /// `tf + Pt = 0`.
    pub fn j_split_residuals(&self) -> [f64; 4] {
        let m = self.param_dim();
        let q = self.normal_dim();
        let r1 =
            (&self.p_mat * &self.p_mat + &self.t_mat * &self.f_mat + Matrix::identity(m, m)).norm();
        let r2 = (&self.ff_mat * &self.ff_mat + &self.f_mat * &self.t_mat + Matrix::identity(q, q))
            .norm();
        let r3 = (&self.f_mat * &self.p_mat + &self.ff_mat * &self.f_mat).norm();
        let r4 = (&self.t_mat * &self.ff_mat + &self.p_mat * &self.t_mat).norm();
        [r1, r2, r3, r4]
    }

    /// Max deviation of the tangential `J` block from skew-symmetry.
    pub fn p_skew_residual(&self) -> f64 {
        let m = self.param_dim();
        let mut res: f64 = 0.0;
        for a in 0..m {
            for b in 0..m {
                res = res.max((self.p_mat[(a, b)] + self.p_mat[(b, a)]).abs());
            }
        }
        res
    }
}

/// Frame states on a centered stencil around one point: along each parameter
/// direction the chart is evaluated at offsets `-h, -h/2, +h/2, +h`. One
/// stencil powers all field derivatives at the point, so every check shares
/// the same samples.
pub struct Stencil<'a> {
    pub chart: &'a Chart,
    pub space: &'a AmbientSpace,
    pub profile: ToleranceProfile,
    pub center: FrameState,
    pub h: f64,
    states: Vec<[FrameState; 4]>,
}

impl<'a> Stencil<'a> {
    pub fn new(
        chart: &'a Chart,
        space: &'a AmbientSpace,
        u: &Vector,
        profile: &ToleranceProfile,
    ) -> Result<Stencil<'a>> {
        let center = FrameState::build(chart, space, u)?;
        let h = profile.fd_step * (1.0 + u.norm());
        let mut states = Vec::with_capacity(chart.param_dim());
        for i in 0..chart.param_dim() {
            let offset = |t: f64| -> Result<FrameState> {
                let mut v = u.clone();
                v[i] += t;
                FrameState::build_unguarded(chart, space, &v).map_err(|e| Error::StencilFailure {
                    dir: i,
                    offset: t,
                    message: e.to_string(),
                })
            };
            states.push([offset(-h)?, offset(-h / 2.0)?, offset(h / 2.0)?, offset(h)?]);
        }
        Ok(Stencil {
            chart,
            space,
            profile: *profile,
            center,
            h,
            states,
        })
    }

    /// Richardson-extrapolated derivative of a frame-dependent field along
    /// parameter direction `dir`.
    pub fn derive<F>(&self, dir: usize, mut field: F) -> Result<Vector>
    where
        F: FnMut(&FrameState) -> Result<Vector>,
    {
        let s = &self.states[dir];
        let m1 = field(&s[0])?;
        let mh = field(&s[1])?;
        let ph = field(&s[2])?;
        let p1 = field(&s[3])?;
        let d_full = (p1 - m1) / (2.0 * self.h);
        let d_half = (ph - mh) / self.h;
        Ok((4.0 * d_half - d_full) / 3.0)
    }

    /// Visit every stencil state (used to validate field samplers).
    pub fn for_each_state<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(&FrameState) -> Result<()>,
    {
        f(&self.center)?;
        for dir in &self.states {
            for st in dir.iter() {
                f(st)?;
            }
        }
        Ok(())
    }
}

/// Second-order pointwise data: flat second partials of the chart, the
/// second fundamental form, and the induced tangential connection, all on
/// the coordinate frame, plus the orthonormal-frame form and its trace.
#[derive(Debug, Clone)]
pub struct SecondOrder {
    /// `sec[i][j]` = flat derivative along `u_i` of the coordinate tangent
    /// field `T_j`; the `(i, j)` and `(j, i)` entries come from independent
    /// stencils, so their agreement is a real consistency check.
    pub sec_flat: Vec<Vec<Vector>>,
    /// Ambient Levi-Civita derivative (flat + Lee correction).
    pub nabla_amb: Vec<Vec<Vector>>,
    /// Normal part: second fundamental form on coordinate pairs.
    pub h_coord: Vec<Vec<Vector>>,
    /// Tangential part: induced connection on coordinate pairs.
    pub nabla_coord: Vec<Vec<Vector>>,
    /// Second fundamental form on orthonormal tangent frame pairs.
    pub h_frame: Vec<Vec<Vector>>,
    /// Unnormalized trace of `h` over the orthonormal tangent frame.
    pub mean_curvature: Vector,
}

impl SecondOrder {
    pub fn build(stencil: &Stencil) -> Result<SecondOrder> {
        let m = stencil.chart.param_dim();
        let center = &stencil.center;
        let mut sec_flat = Vec::with_capacity(m);
        for i in 0..m {
            let mut row = Vec::with_capacity(m);
            for j in 0..m {
                row.push(stencil.derive(i, |st| Ok(st.coord_tangent(j)))?);
            }
            sec_flat.push(row);
        }
        let mut nabla_amb = Vec::with_capacity(m);
        let mut h_coord = Vec::with_capacity(m);
        let mut nabla_coord = Vec::with_capacity(m);
        for i in 0..m {
            let ti = center.coord_tangent(i);
            let mut row_n = Vec::with_capacity(m);
            let mut row_h = Vec::with_capacity(m);
            let mut row_t = Vec::with_capacity(m);
            for j in 0..m {
                let tj = center.coord_tangent(j);
                let full = &sec_flat[i][j] + center.lee_correction(&ti, &tj);
                row_h.push(center.normal(&full));
                row_t.push(center.tangential(&full));
                row_n.push(full);
            }
            nabla_amb.push(row_n);
            h_coord.push(row_h);
            nabla_coord.push(row_t);
        }

        let mut h_frame = Vec::with_capacity(m);
        for a in 0..m {
            let mut row = Vec::with_capacity(m);
            for b in 0..m {
                let mut acc = Vector::zeros(center.x.len());
                for i in 0..m {
                    for j in 0..m {
                        let c = center.tan_coeffs[(i, a)] * center.tan_coeffs[(j, b)];
                        if c != 0.0 {
                            acc += c * &h_coord[i][j];
                        }
                    }
                }
                row.push(acc);
            }
            h_frame.push(row);
        }
        let mut mean_curvature = Vector::zeros(center.x.len());
        for a in 0..m {
            mean_curvature += &h_frame[a][a];
        }

        Ok(SecondOrder {
            sec_flat,
            nabla_amb,
            h_coord,
            nabla_coord,
            h_frame,
            mean_curvature,
        })
    }

    /// `h` evaluated on two tangent vectors given in coordinate coefficients.
    pub fn h_of_coords(&self, a: &Vector, b: &Vector, dim: usize) -> Vector {
        let m = self.h_coord.len();
        let mut acc = Vector::zeros(dim);
        for i in 0..m {
            if a[i] == 0.0 {
                continue;
            }
            for j in 0..m {
                let c = a[i] * b[j];
                if c != 0.0 {
                    acc += c * &self.h_coord[i][j];
                }
            }
        }
        acc
    }

    /// Shape operator `A_xi` applied to the coordinate tangent `T_i`,
    /// defined through duality with `h`: `g(A_xi U, V) = g(h(U,V), xi)`.
    pub fn shape_apply(&self, state: &FrameState, xi: &Vector, i: usize) -> Vector {
        let m = self.h_coord.len();
        let mut rhs = Vector::zeros(m);
        for k in 0..m {
            rhs[k] = state.g(&self.h_coord[i][k], xi);
        }
        let coeffs = &state.gram_inv * rhs;
        &state.jac * coeffs
    }

    /// Shape operator applied to a tangent vector in coordinate coefficients.
    pub fn shape_apply_coords(&self, state: &FrameState, xi: &Vector, v: &Vector) -> Vector {
        let m = self.h_coord.len();
        let mut out = Vector::zeros(state.x.len());
        for i in 0..m {
            if v[i] != 0.0 {
                out += v[i] * self.shape_apply(state, xi, i);
            }
        }
        out
    }
}

/// First-order pointwise state; `second` is populated by
/// [`second_fundamental`].
#[derive(Debug, Clone)]
pub struct PointState {
    pub frame: FrameState,
    pub second: Option<SecondOrder>,
}

impl PointState {
    pub fn second(&self) -> &SecondOrder {
        self.second
            .as_ref()
            .expect("PointState built without second-order data")
    }
}

/// Frames, induced metric, and the `J`-split operators at `u`.
pub fn frame(chart: &Chart, space: &AmbientSpace, u: &Vector) -> Result<PointState> {
    Ok(PointState {
        frame: FrameState::build(chart, space, u)?,
        second: None,
    })
}

/// Everything in [`frame`] plus the second fundamental form, mean curvature,
/// and shape-operator data.
pub fn second_fundamental(
    chart: &Chart,
    space: &AmbientSpace,
    u: &Vector,
    profile: &ToleranceProfile,
) -> Result<PointState> {
    let stencil = Stencil::new(chart, space, u, profile)?;
    let second = SecondOrder::build(&stencil)?;
    Ok(PointState {
        frame: stencil.center,
        second: Some(second),
    })
}

/// Normal-bundle connection applied to a normal field sampler along the
/// coordinate direction `dir`. Returns the derivative and the Weingarten
/// cross-check residual: the tangential part of the ambient derivative must
/// match `-A_xi T_dir` computed from `h` by duality.
pub fn normal_connection<F>(
    stencil: &Stencil,
    second: &SecondOrder,
    xi_field: &mut F,
    dir: usize,
) -> Result<(Vector, f64)>
where
    F: FnMut(&FrameState) -> Result<Vector>,
{
    let center = &stencil.center;
    stencil.for_each_state(|st| {
        let xi = xi_field(st)?;
        let tang = st.g_norm(&st.tangential(&xi));
        if tang > 1e-6 * (1.0 + st.g_norm(&xi)) {
            return Err(Error::NotNormal { residual: tang });
        }
        Ok(())
    })?;
    let xi0 = xi_field(center)?;
    let flat = stencil.derive(dir, |st| xi_field(st))?;
    let ti = center.coord_tangent(dir);
    let amb = &flat + center.lee_correction(&ti, &xi0);
    let perp = center.normal(&amb);
    let tangential = center.tangential(&amb);
    let weingarten = second.shape_apply(center, &xi0, dir);
    let cross = center.g_norm(&(tangential + weingarten));
    Ok((perp, cross))
}

/// Residuals of the four relations tying the Riemannian and Weyl-side
/// submanifold objects together (induced connections, second fundamental
/// forms, shape operators, normal connections). Both sides share the same
/// stencil samples, so on a flat Kähler ambient (`sigma = 0`) every residual
/// cancels exactly.
pub fn check_weyl_relations(stencil: &Stencil, second: &SecondOrder) -> Result<Vec<CheckItem>> {
    let center = &stencil.center;
    let m = center.param_dim();
    let q = center.normal_dim();
    let lee = &center.lee;
    let bt = center.lee_tangential();
    let bn = center.lee_normal();

    let mut res_tangent: f64 = 0.0;
    let mut res_normal: f64 = 0.0;
    for i in 0..m {
        let ti = center.coord_tangent(i);
        for j in 0..m {
            let tj = center.coord_tangent(j);
            let flat = &second.sec_flat[i][j];
            let full = &second.nabla_amb[i][j];
            let gij = center.g(&ti, &tj);
            // induced connections: hat_nabla = nabla - (1/2){omega(U)V +
            // omega(V)U - g(U,V) B^T}
            let lhs_t = center.tangential(flat);
            let rhs_t = center.tangential(full)
                - 0.5 * (lee.omega_of(&ti) * &tj + lee.omega_of(&tj) * &ti - gij * &bt);
            res_tangent = res_tangent.max(center.g_norm(&(lhs_t - rhs_t)));
            // second fundamental forms: tilde_h = h + (1/2) g(U,V) B^N
            let lhs_n = center.normal(flat);
            let rhs_n = center.normal(full) + 0.5 * gij * &bn;
            res_normal = res_normal.max(center.g_norm(&(lhs_n - rhs_n)));
        }
    }

    let mut res_shape: f64 = 0.0;
    let mut res_perp: f64 = 0.0;
    for al in 0..q {
        let nu0 = center.nor_frame[al].clone();
        for i in 0..m {
            let ti = center.coord_tangent(i);
            let flat = stencil.derive(i, |st| Ok(st.nor_frame[al].clone()))?;
            let corr = center.lee_correction(&ti, &nu0);
            let full = &flat + &corr;
            // shape operators: tilde_A_xi U = A_xi U + (1/2) omega(xi) U
            let shape_weyl = -center.tangential(&flat);
            let shape_riem = -center.tangential(&full);
            let d_shape = shape_weyl - shape_riem - 0.5 * lee.omega_of(&nu0) * &ti;
            res_shape = res_shape.max(center.g_norm(&d_shape));
            // normal connections: tilde_perp = perp - (1/2) omega(U) xi
            let perp_weyl = center.normal(&flat);
            let perp_riem = center.normal(&full);
            let d_perp = perp_weyl - perp_riem + 0.5 * lee.omega_of(&ti) * &nu0;
            res_perp = res_perp.max(center.g_norm(&d_perp));
        }
    }

    Ok(vec![
        CheckItem::new("weyl_induced_connection", res_tangent, Gate::Second),
        CheckItem::new("weyl_second_fundamental", res_normal, Gate::Second),
        CheckItem::new("weyl_shape_operator", res_shape, Gate::Second),
        CheckItem::new("weyl_normal_connection", res_perp, Gate::Second),
    ])
}

/// Residuals of the four covariant-derivative identities for the operator
/// blocks `P, F, t, f`. Left sides are built by differentiating the
/// operator-image fields along the chart; right sides are assembled from the
/// shape operator, `h`, and the Lee / anti-Lee data at the point.
pub fn check_pftf_derivatives(stencil: &Stencil, second: &SecondOrder) -> Result<Vec<CheckItem>> {
    let space = stencil.space;
    let center = &stencil.center;
    let m = center.param_dim();
    let q = center.normal_dim();
    let lee = &center.lee;
    let bt = center.lee_tangential();
    let bn = center.lee_normal();
    // anti-Lee vector: metric dual of omega ∘ J
    let a_vec = center.anti_lee(space)?;
    let at = center.tangential(&a_vec);
    let an = center.normal(&a_vec);
    let theta_of = |v: &Vector| -> Result<f64> { Ok(lee.omega_of(&space.apply_j(v)?)) };
    let ei = |i: usize| Vector::from_fn(m, |k, _| if k == i { 1.0 } else { 0.0 });

    // induced tangential / normal derivatives of a field along direction i,
    // sharing the stencil samples
    let induced = |dir: usize,
                   field: &mut dyn FnMut(&FrameState) -> Result<Vector>|
     -> Result<(Vector, Vector)> {
        let v0 = field(&stencil.center)?;
        let flat = stencil.derive(dir, |st| field(st))?;
        let ti = stencil.center.coord_tangent(dir);
        let full = &flat + stencil.center.lee_correction(&ti, &v0);
        Ok((
            stencil.center.tangential(&full),
            stencil.center.normal(&full),
        ))
    };

    let mut res_p: f64 = 0.0;
    let mut res_f: f64 = 0.0;
    for i in 0..m {
        let ti = center.coord_tangent(i);
        let pti = center.p_of(space, &ti)?;
        let fti = center.f_of(space, &ti)?;
        for j in 0..m {
            let tj = center.coord_tangent(j);
            let gij = center.g(&ti, &tj);
            let gpij = center.g(&pti, &tj);
            let omega_j = lee.omega_of(&tj);
            let theta_j = theta_of(&tj)?;
            let ptj = center.p_of(space, &tj)?;
            let nabla_ij = &second.nabla_coord[i][j];
            let h_ij = &second.h_coord[i][j];

            // (nabla_U P)V = nabla_U (PV) - P(nabla_U V)
            let mut pfield = |st: &FrameState| st.p_of(space, &st.coord_tangent(j));
            let (nabla_pv, _) = induced(i, &mut pfield)?;
            let lhs_p = nabla_pv - center.p_of(space, nabla_ij)?;
            let rhs_p = second.shape_apply_coords(center, &center.f_of(space, &tj)?, &ei(i))
                + center.t_of(space, h_ij)?
                + 0.5 * (theta_j * &ti - omega_j * &pti + gpij * &bt - gij * &at);
            res_p = res_p.max(center.g_norm(&(lhs_p - rhs_p)));

            // (nabla_U F)V = perp_U (FV) - F(nabla_U V)
            let mut ffield = |st: &FrameState| st.f_of(space, &st.coord_tangent(j));
            let (_, perp_fv) = induced(i, &mut ffield)?;
            let lhs_f = perp_fv - center.f_of(space, nabla_ij)?;
            let h_i_pv =
                second.h_of_coords(&ei(i), &center.coords_of_tangent(&ptj), center.x.len());
            let rhs_f = center.ff_of(space, h_ij)? - h_i_pv
                + 0.5 * (gpij * &bn - gij * &an - omega_j * &fti);
            res_f = res_f.max(center.g_norm(&(lhs_f - rhs_f)));
        }
    }

    let mut res_t: f64 = 0.0;
    let mut res_ff: f64 = 0.0;
    for al in 0..q {
        let nu0 = center.nor_frame[al].clone();
        let omega_nu = lee.omega_of(&nu0);
        let theta_nu = theta_of(&nu0)?;
        let f_nu = center.ff_of(space, &nu0)?;
        let t_nu = center.t_of(space, &nu0)?;
        for i in 0..m {
            let ti = center.coord_tangent(i);
            let pti = center.p_of(space, &ti)?;
            let fti = center.f_of(space, &ti)?;
            let g_fu_nu = center.g(&fti, &nu0);
            // perp derivative of the frame field itself
            let nu_flat = stencil.derive(i, |st| Ok(st.nor_frame[al].clone()))?;
            let perp_nu = center.normal(&(&nu_flat + center.lee_correction(&ti, &nu0)));
            let shape_nu = second.shape_apply_coords(center, &nu0, &ei(i));

            // (nabla_U t)xi = nabla_U (t xi) - t(perp_U xi)
            let mut tfield = |st: &FrameState| st.t_of(space, &st.nor_frame[al]);
            let (nabla_tnu, _) = induced(i, &mut tfield)?;
            let lhs_t = nabla_tnu - center.t_of(space, &perp_nu)?;
            let rhs_t = second.shape_apply_coords(center, &f_nu, &ei(i))
                - center.p_of(space, &shape_nu)?
                + 0.5 * (g_fu_nu * &bt - omega_nu * &pti + theta_nu * &ti);
            res_t = res_t.max(center.g_norm(&(lhs_t - rhs_t)));

            // (nabla_U f)xi = perp_U (f xi) - f(perp_U xi)
            let mut fffield = |st: &FrameState| st.ff_of(space, &st.nor_frame[al]);
            let (_, perp_fnu) = induced(i, &mut fffield)?;
            let lhs_ff = perp_fnu - center.ff_of(space, &perp_nu)?;
            let h_i_tnu =
                second.h_of_coords(&ei(i), &center.coords_of_tangent(&t_nu), center.x.len());
            let rhs_ff =
                -h_i_tnu - center.f_of(space, &shape_nu)? + 0.5 * (g_fu_nu * &bn - omega_nu * &fti);
            res_ff = res_ff.max(center.g_norm(&(lhs_ff - rhs_ff)));
        }
    }

    Ok(vec![
        CheckItem::new("nabla_p_identity", res_p, Gate::Second),
        CheckItem::new("nabla_f_identity", res_f, Gate::Second),
        CheckItem::new("nabla_t_identity", res_t, Gate::Second),
        CheckItem::new("nabla_ff_identity", res_ff, Gate::Second),
    ])
}
