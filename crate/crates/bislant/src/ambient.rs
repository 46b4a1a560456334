//! The ambient conformal Kähler space.
//!
//! `R^{2n}` carries the canonical complex structure `J` (first half of the
//! coordinates maps onto the second half) and the metric `g = e^sigma g0`
//! where `g0` is Euclidean and `sigma` is a closed-form potential over the
//! coordinates `x1..x{2n}`. The flat connection of `g0` is exactly the Weyl
//! connection of the conformal structure, and the Levi-Civita connection of
//! `g` differs from it by the Lee-form correction
//! `(1/2){omega(U)V + omega(V)U - g(U,V)B}`.
//!
//! With the fundamental 2-form `Omega(U,V) = g(JU,V)`, the exterior-derivative
//! identity `dOmega = Omega ∧ omega` forces `omega = d sigma`; the anti-Lee
//! data dual to it is `Theta = omega ∘ J` and `A = -JB`. `check_structure`
//! verifies all of this pointwise and is wired so that flipping the Lee sign
//! is detectably wrong.

use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::numerics::{richardson_central, InnerProduct, ToleranceProfile, Vector};
use crate::report::{CheckItem, Gate};

/// Sign convention override for the Lee form, used as a negative control:
/// `Flipped` reports `omega = -d sigma` to every consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeeSign {
    #[default]
    Normal,
    Flipped,
}

/// Lee form and Lee vector field at one point.
#[derive(Debug, Clone)]
pub struct LeeData {
    /// Components of the 1-form `omega` in the coordinate cobasis.
    pub omega: Vector,
    /// The vector field metrically equivalent to `omega`: `g(B, U) = omega(U)`.
    pub b: Vector,
}

impl LeeData {
    pub fn omega_of(&self, u: &Vector) -> f64 {
        self.omega.dot(u)
    }
}

#[derive(Debug, Clone)]
pub struct AmbientSpace {
    n: usize,
    sigma: Expression,
    lee_sign: LeeSign,
}

impl AmbientSpace {
    /// Complex dimension `n`, conformal potential over `x1..x{2n}`.
    pub fn new(n: usize, sigma_source: &str) -> Result<Self> {
        let names: Vec<String> = (1..=2 * n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let sigma = Expression::parse(sigma_source, &refs)?;
        Ok(AmbientSpace {
            n,
            sigma,
            lee_sign: LeeSign::Normal,
        })
    }

    /// Flat Kähler space (`sigma = 0`).
    pub fn flat(n: usize) -> Self {
        AmbientSpace::new(n, "0").expect("constant potential always parses")
    }

    pub fn with_lee_sign(mut self, sign: LeeSign) -> Self {
        self.lee_sign = sign;
        self
    }

    pub fn complex_dim(&self) -> usize {
        self.n
    }

    /// Real dimension `2n`.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn sigma_at(&self, p: &Vector) -> Result<f64> {
        self.check_len(p)?;
        Ok(self.sigma.eval_slice(p.as_slice())?)
    }

    fn check_len(&self, v: &Vector) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// The canonical complex structure: `(x-block, y-block)` maps to
    /// `(-y-block, x-block)`, so `J^2 = -I` exactly.
    pub fn apply_j(&self, v: &Vector) -> Result<Vector> {
        self.check_len(v)?;
        let n = self.n;
        let mut out = Vector::zeros(2 * n);
        for i in 0..n {
            out[i] = -v[n + i];
            out[n + i] = v[i];
        }
        Ok(out)
    }

    /// The metric `g = e^{sigma(p)} * Euclidean` frozen at `p`.
    pub fn metric(&self, p: &Vector) -> Result<InnerProduct> {
        Ok(InnerProduct::Conformal {
            scale: self.sigma_at(p)?.exp(),
        })
    }

    /// Lee form `omega = d sigma` and Lee vector `B = e^{-sigma} grad0 sigma`
    /// at `p`, honoring the configured sign override.
    pub fn lee_data(&self, p: &Vector) -> Result<LeeData> {
        let data = self.lee_data_raw(p)?;
        Ok(match self.lee_sign {
            LeeSign::Normal => data,
            LeeSign::Flipped => LeeData {
                omega: -data.omega,
                b: -data.b,
            },
        })
    }

    /// True Lee data regardless of the sign override; the Levi-Civita
    /// connection is built from this (the connection is a property of the
    /// metric, not of the reporting convention).
    pub fn lee_data_unsigned(&self, p: &Vector) -> Result<LeeData> {
        self.lee_data_raw(p)
    }

    fn lee_data_raw(&self, p: &Vector) -> Result<LeeData> {
        self.check_len(p)?;
        let grad = self.sigma.gradient_slice(p.as_slice())?;
        let omega = Vector::from_vec(grad);
        let scale = (-self.sigma_at(p)?).exp();
        let b = scale * &omega;
        Ok(LeeData { omega, b })
    }

    /// The Lee correction `(1/2){omega(u) v + omega(v) u - g(u,v) B}` that
    /// separates the Levi-Civita connection of `g` from the flat connection.
    pub fn lee_correction(
        &self,
        lee: &LeeData,
        g: &InnerProduct,
        u: &Vector,
        v: &Vector,
    ) -> Vector {
        0.5 * (lee.omega_of(u) * v + lee.omega_of(v) * u - g.apply(u, v) * &lee.b)
    }

    /// Flat directional derivative of an ambient vector field (this is the
    /// Weyl connection of the conformal structure): the field is sampled on
    /// a centered stencil along `dir` and extrapolated.
    pub fn weyl_derivative<F>(
        &self,
        field: &mut F,
        at: &Vector,
        dir: &Vector,
        profile: &ToleranceProfile,
    ) -> Result<Vector>
    where
        F: FnMut(&Vector) -> Result<Vector>,
    {
        self.check_len(at)?;
        self.check_len(dir)?;
        let h = profile.fd_step * (1.0 + at.norm());
        richardson_central(
            |t| {
                let p = at + t * dir;
                field(&p).map_err(|e| Error::StencilFailure {
                    dir: 0,
                    offset: t,
                    message: e.to_string(),
                })
            },
            h,
        )
    }

    /// Levi-Civita derivative of `g`: flat derivative plus the Lee correction
    /// evaluated at the point.
    pub fn levi_civita<F>(
        &self,
        field: &mut F,
        at: &Vector,
        dir: &Vector,
        profile: &ToleranceProfile,
    ) -> Result<Vector>
    where
        F: FnMut(&Vector) -> Result<Vector>,
    {
        let value = field(at)?;
        let flat = self.weyl_derivative(field, at, dir, profile)?;
        let lee = self.lee_data_raw(at)?;
        let g = self.metric(at)?;
        Ok(flat + self.lee_correction(&lee, &g, dir, &value))
    }

    /// Pointwise structure-equation residuals:
    ///
    /// * `struct_domega`: `dOmega = Omega ∧ omega` over coordinate triples,
    ///   with `dOmega` obtained by finite differences of the coefficient
    ///   functions of `Omega`;
    /// * `struct_jcompat`: the `J`-compatibility identity for the
    ///   Levi-Civita connection, with `Theta = omega ∘ J` and `A = -JB`;
    /// * `struct_lee_closed`: symmetry of the covariant derivative of
    ///   `omega` (closedness).
    pub fn check_structure(
        &self,
        p: &Vector,
        profile: &ToleranceProfile,
    ) -> Result<Vec<CheckItem>> {
        self.check_len(p)?;
        let dim = self.dim();
        let lee = self.lee_data(p)?;
        let lee_raw = self.lee_data_raw(p)?;
        let g = self.metric(p)?;
        let scale = self.sigma_at(p)?.exp();
        let h = profile.fd_step * (1.0 + p.norm());

        let basis: Vec<Vector> = (0..dim)
            .map(|k| {
                let mut e = Vector::zeros(dim);
                e[k] = 1.0;
                e
            })
            .collect();
        let j_basis: Vec<Vector> = basis
            .iter()
            .map(|e| self.apply_j(e))
            .collect::<Result<_>>()?;

        // Omega(e_k, e_l) = e^sigma * <J e_k, e_l>; the flat part is constant.
        let omega0 = |k: usize, l: usize| j_basis[k][l];
        let omega2 = |k: usize, l: usize| scale * omega0(k, l);

        // d(e^sigma) along each coordinate, by finite differences of the
        // conformal factor (the coefficient functions of Omega).
        let mut dscale = Vec::with_capacity(dim);
        for k in 0..dim {
            let d = richardson_central(
                |t| {
                    let mut q = p.clone();
                    q[k] += t;
                    Ok(Vector::from_vec(vec![self.sigma_at(&q)?.exp()]))
                },
                h,
            )?;
            dscale.push(d[0]);
        }

        // (a) dOmega vs Omega ∧ omega over all coordinate triples.
        let mut res_domega: f64 = 0.0;
        for k in 0..dim {
            for l in (k + 1)..dim {
                for m in (l + 1)..dim {
                    let d_omega = dscale[k] * omega0(l, m) - dscale[l] * omega0(k, m)
                        + dscale[m] * omega0(k, l);
                    let wedge = omega2(k, l) * lee.omega[m]
                        + omega2(l, m) * lee.omega[k]
                        + omega2(m, k) * lee.omega[l];
                    res_domega = res_domega.max((d_omega - wedge).abs());
                }
            }
        }

        // (b) Levi-Civita compatibility with J on constant coordinate fields:
        // nabla_U(JV) - J nabla_U V must equal
        // (1/2){Theta(V) U - omega(V) JU - g(U,V) A + Omega(U,V) B}
        // with Theta = omega ∘ J and A = -JB.
        let a_vec = -self.apply_j(&lee.b)?;
        let mut res_jcompat: f64 = 0.0;
        for k in 0..dim {
            for l in 0..dim {
                let u = &basis[k];
                let v = &basis[l];
                let jv = &j_basis[l];
                let ju = &j_basis[k];
                // flat derivatives of constant fields vanish; only the Lee
                // corrections survive
                let lhs = self.lee_correction(&lee_raw, &g, u, jv);
                let j_of_corr = self.apply_j(&self.lee_correction(&lee_raw, &g, u, v))?;
                let theta_v = lee.omega_of(jv);
                let omega_uv = g.apply(ju, v);
                let rhs = 0.5
                    * (theta_v * u - lee.omega_of(v) * ju - g.apply(u, v) * &a_vec
                        + omega_uv * &lee.b);
                let diff = lhs - j_of_corr - rhs;
                res_jcompat = res_jcompat.max(g.norm(&diff));
            }
        }

        // (c) closedness: (nabla_U omega)V - (nabla_V omega)U on coordinate
        // pairs; the derivative of omega(V) is a finite difference, the
        // connection terms are the Lee corrections.
        let mut domega_coeff = vec![vec![0.0; dim]; dim];
        for k in 0..dim {
            let dk = richardson_central(
                |t| {
                    let mut q = p.clone();
                    q[k] += t;
                    Ok(self.lee_data(&q)?.omega)
                },
                h,
            )?;
            for l in 0..dim {
                domega_coeff[k][l] = dk[l];
            }
        }
        let mut res_closed: f64 = 0.0;
        for k in 0..dim {
            for l in (k + 1)..dim {
                let nabla_kl = self.lee_correction(&lee_raw, &g, &basis[k], &basis[l]);
                // torsion-free: nabla_k e_l = nabla_l e_k, so the connection
                // terms cancel in the antisymmetrized expression and the
                // residual reduces to the coefficient symmetry; both parts
                // are kept for transparency.
                let lhs = domega_coeff[k][l] - lee.omega_of(&nabla_kl);
                let rhs = domega_coeff[l][k] - lee.omega_of(&nabla_kl);
                res_closed = res_closed.max((lhs - rhs).abs());
            }
        }

        Ok(vec![
            CheckItem::new("struct_domega", res_domega, Gate::Second),
            CheckItem::new("struct_jcompat", res_jcompat, Gate::Second),
            CheckItem::new("struct_lee_closed", res_closed, Gate::Second),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    fn e(dim: usize, k: usize) -> Vector {
        let mut out = Vector::zeros(dim);
        out[k] = 1.0;
        out
    }

    #[test]
    fn j_maps_blocks() {
        let space = AmbientSpace::flat(4);
        assert_eq!(space.apply_j(&e(8, 0)).unwrap(), e(8, 4));
        assert_eq!(space.apply_j(&e(8, 4)).unwrap(), -e(8, 0));
    }

    #[test]
    fn j_squares_to_minus_identity() {
        let space = AmbientSpace::flat(3);
        let w = v(&[0.3, -1.2, 2.0, 0.7, -0.4, 1.1]);
        let jj = space.apply_j(&space.apply_j(&w).unwrap()).unwrap();
        assert!((jj + &w).norm() < 1e-15);
    }

    #[test]
    fn j_is_an_isometry() {
        let space = AmbientSpace::new(2, "-x1 + 0.3*x3").unwrap();
        let p = v(&[0.4, -0.2, 1.0, 0.5]);
        let g = space.metric(&p).unwrap();
        let u = v(&[0.1, 0.7, -0.3, 0.9]);
        let w = v(&[1.0, -0.5, 0.2, 0.4]);
        let ju = space.apply_j(&u).unwrap();
        let jw = space.apply_j(&w).unwrap();
        assert!((g.apply(&ju, &jw) - g.apply(&u, &w)).abs() < 1e-12);
    }

    #[test]
    fn metric_examples() {
        let flat = AmbientSpace::flat(2);
        let g = flat.metric(&v(&[0.0; 4])).unwrap();
        assert_eq!(g.apply(&e(4, 0), &e(4, 0)), 1.0);

        let space = AmbientSpace::new(2, "-x1").unwrap();
        let g = space.metric(&v(&[0.0; 4])).unwrap();
        assert_eq!(g.apply(&e(4, 0), &e(4, 0)), 1.0);
        let g = space.metric(&v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        // direct evaluation oracle: e^{-1}
        assert!((g.apply(&e(4, 0), &e(4, 0)) - 0.36787944117144233).abs() < 1e-15);
    }

    #[test]
    fn lee_data_examples() {
        let flat = AmbientSpace::flat(2);
        let lee = flat.lee_data(&v(&[0.3, 0.1, 0.0, -1.0])).unwrap();
        assert_eq!(lee.omega.norm(), 0.0);
        assert_eq!(lee.b.norm(), 0.0);

        let space = AmbientSpace::new(2, "-x1").unwrap();
        let lee = space.lee_data(&v(&[0.0; 4])).unwrap();
        assert!((lee.omega - (-e(4, 0))).norm() < 1e-15);
        assert!((&lee.b - (-e(4, 0))).norm() < 1e-15);

        let lee = space.lee_data(&v(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        let expected = -std::f64::consts::E;
        assert!((lee.b[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn lee_duality_g_b_equals_omega() {
        let space = AmbientSpace::new(2, "-(x1^2 + x2^2 + 1)").unwrap();
        let p = v(&[0.4, -0.6, 0.2, 0.9]);
        let lee = space.lee_data(&p).unwrap();
        let g = space.metric(&p).unwrap();
        for k in 0..4 {
            let u = e(4, k);
            assert!((g.apply(&lee.b, &u) - lee.omega_of(&u)).abs() < 1e-10);
        }
    }

    #[test]
    fn levi_civita_on_flat_space() {
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::flat(2);
        let p = v(&[0.2, 0.4, -0.1, 0.3]);

        let mut constant = |_: &Vector| Ok(v(&[1.0, 2.0, 3.0, 4.0]));
        let d = space
            .levi_civita(&mut constant, &p, &e(4, 1), &profile)
            .unwrap();
        assert!(d.norm() < 1e-12);

        let mut identity = |q: &Vector| Ok(q.clone());
        let d = space
            .levi_civita(&mut identity, &p, &e(4, 2), &profile)
            .unwrap();
        assert!((d - e(4, 2)).norm() < 1e-10);
    }

    #[test]
    fn levi_civita_conformal_correction() {
        // sigma = -x1, constant field e2, direction e2, at the origin:
        // the correction is -(1/2) g(e2,e2) B = +(1/2) e1
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(2, "-x1").unwrap();
        let mut field = |_: &Vector| Ok(e(4, 1));
        let d = space
            .levi_civita(&mut field, &v(&[0.0; 4]), &e(4, 1), &profile)
            .unwrap();
        assert!((d - 0.5 * e(4, 0)).norm() < 1e-12);
    }

    #[test]
    fn levi_civita_is_metric_compatible() {
        // U g(V,W) = g(nabla_U V, W) + g(V, nabla_U W) for polynomial fields
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(2, "-x1").unwrap();
        let p = v(&[0.3, 0.2, -0.4, 0.6]);
        let dir = v(&[1.0, 0.5, -0.2, 0.8]);

        let vf = |q: &Vector| -> Result<Vector> { Ok(v(&[q[0] * q[1], q[2], q[3] * q[3], 1.0])) };
        let wf = |q: &Vector| -> Result<Vector> { Ok(v(&[q[1], q[0] + q[2], 1.0, q[3]])) };

        let lhs_fn = |q: &Vector| -> Result<Vector> {
            let g = space.metric(q)?;
            Ok(Vector::from_vec(vec![g.apply(&vf(q)?, &wf(q)?)]))
        };
        let h = profile.fd_step * (1.0 + p.norm());
        let lhs = richardson_central(
            |t| {
                let q = &p + t * &dir;
                lhs_fn(&q)
            },
            h,
        )
        .unwrap()[0];

        let g = space.metric(&p).unwrap();
        let mut vf_m = |q: &Vector| vf(q);
        let mut wf_m = |q: &Vector| wf(q);
        let dv = space.levi_civita(&mut vf_m, &p, &dir, &profile).unwrap();
        let dw = space.levi_civita(&mut wf_m, &p, &dir, &profile).unwrap();
        let rhs = g.apply(&dv, &wf(&p).unwrap()) + g.apply(&vf(&p).unwrap(), &dw);
        assert!((lhs - rhs).abs() < 1e-4, "lhs={lhs} rhs={rhs}");
    }

    #[test]
    fn weyl_scaling_of_metric() {
        // (weyl derivative of g)(V,W; U) = omega(U) g(V,W) for constant V, W
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(2, "-x1").unwrap();
        let p = v(&[0.5, -0.3, 0.2, 0.1]);
        let dir = v(&[0.7, 0.2, -0.9, 0.4]);
        let vv = v(&[1.0, 2.0, 0.0, -1.0]);
        let ww = v(&[0.5, 0.0, 1.5, 1.0]);

        let h = profile.fd_step * (1.0 + p.norm());
        let lhs = richardson_central(
            |t| {
                let q = &p + t * &dir;
                let g = space.metric(&q)?;
                Ok(Vector::from_vec(vec![g.apply(&vv, &ww)]))
            },
            h,
        )
        .unwrap()[0];

        let g = space.metric(&p).unwrap();
        let lee = space.lee_data(&p).unwrap();
        let rhs = lee.omega_of(&dir) * g.apply(&vv, &ww);
        assert!((lhs - rhs).abs() < 1e-6, "lhs={lhs} rhs={rhs}");
    }

    #[test]
    fn weyl_connection_preserves_j() {
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(2, "-x1").unwrap();
        let p = v(&[0.1, 0.2, 0.3, 0.4]);
        let dir = v(&[0.5, -0.1, 0.7, 0.2]);
        let field =
            |q: &Vector| -> Result<Vector> { Ok(v(&[q[0] * q[3], q[1], q[2] * q[0], 1.0])) };

        let mut jfield = |q: &Vector| space.apply_j(&field(q)?);
        let lhs = space
            .weyl_derivative(&mut jfield, &p, &dir, &profile)
            .unwrap();
        let mut field_m = |q: &Vector| field(q);
        let rhs = space
            .apply_j(
                &space
                    .weyl_derivative(&mut field_m, &p, &dir, &profile)
                    .unwrap(),
            )
            .unwrap();
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn structure_residuals_vanish_on_kahler_space() {
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::flat(4);
        let items = space
            .check_structure(&v(&[0.3, -0.2, 0.5, 0.1, 0.0, 0.7, -0.4, 0.2]), &profile)
            .unwrap();
        for item in items {
            assert_eq!(item.residual, 0.0, "{} should vanish exactly", item.name);
        }
    }

    #[test]
    fn structure_residuals_small_on_conformal_space() {
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)").unwrap();
        let items = space
            .check_structure(&v(&[0.4, 0.2, 0.6, 0.3, 0.1, 0.5, 0.2, 0.1]), &profile)
            .unwrap();
        for item in items {
            assert!(
                item.residual <= profile.tol_second,
                "{}: {}",
                item.name,
                item.residual
            );
        }
    }

    #[test]
    fn flipped_lee_sign_breaks_domega() {
        let profile = ToleranceProfile::default();
        let space = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)")
            .unwrap()
            .with_lee_sign(LeeSign::Flipped);
        let items = space
            .check_structure(&v(&[0.4, 0.2, 0.6, 0.3, 0.1, 0.5, 0.2, 0.1]), &profile)
            .unwrap();
        let domega = items.iter().find(|i| i.name == "struct_domega").unwrap();
        assert!(domega.residual > 1e-2, "flip must be detected");
    }

    #[test]
    fn wrong_anti_lee_sign_breaks_jcompat() {
        // recompute residual (b) by hand with A = +JB instead of -JB; it must
        // blow up, pinning the sign convention
        let space = AmbientSpace::new(4, "-(x1^2 + x2^2 + 1)").unwrap();
        let p = v(&[0.4, 0.2, 0.6, 0.3, 0.1, 0.5, 0.2, 0.1]);
        let lee = space.lee_data(&p).unwrap();
        let g = space.metric(&p).unwrap();
        let dim = space.dim();
        let a_wrong = space.apply_j(&lee.b).unwrap();
        let mut res: f64 = 0.0;
        for k in 0..dim {
            for l in 0..dim {
                let mut u = Vector::zeros(dim);
                u[k] = 1.0;
                let mut w = Vector::zeros(dim);
                w[l] = 1.0;
                let ju = space.apply_j(&u).unwrap();
                let jw = space.apply_j(&w).unwrap();
                let lhs = space.lee_correction(&lee, &g, &u, &jw);
                let j_corr = space
                    .apply_j(&space.lee_correction(&lee, &g, &u, &w))
                    .unwrap();
                let rhs = 0.5
                    * (lee.omega_of(&jw) * &u
                        - lee.omega_of(&w) * &ju
                        - g.apply(&u, &w) * &a_wrong
                        + g.apply(&ju, &w) * &lee.b);
                res = res.max(g.norm(&(lhs - j_corr - rhs)));
            }
        }
        assert!(res > 1e-2, "wrong anti-Lee sign must break the identity");
    }
}
