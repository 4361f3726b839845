//! Maxwellian moment closures for Burgers and Euler equations.
//!
//! The upwind part of the scheme needs the sign-weighted moments
//! `<Psi, sign(v_i) v_j f^M>`, which evaluate to erf/exponential split
//! fluxes. This module provides those closed forms, the flux Jacobians,
//! the nodal decomposition matrices used by the implicit scheme
//! (`sign moment = D~ U`), and [`moment_oracle`], a velocity-space
//! quadrature that evaluates the defining integrals directly and serves
//! as the ground truth for every closed form.

use crate::{Error, Result};
use libm::erf;

const SQRT_PI: f64 = 1.772453850905516;

/// 1D gas state; `e` is specific total energy.
#[derive(Debug, Clone, Copy)]
pub struct GasState1D {
    pub rho: f64,
    pub u: f64,
    pub p: f64,
    pub e: f64,
    pub gamma: f64,
    pub r: f64,
}

impl GasState1D {
    pub fn new(rho: f64, u: f64, p: f64, gamma: f64, r: f64) -> Result<GasState1D> {
        let s = GasState1D {
            rho,
            u,
            p,
            e: p / (rho * (gamma - 1.0)) + 0.5 * u * u,
            gamma,
            r,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_conserved(rho: f64, mom: f64, energy: f64, gamma: f64, r: f64) -> Result<GasState1D> {
        if rho <= 0.0 {
            return Err(Error::InvalidState(format!("rho = {rho}")));
        }
        let u = mom / rho;
        let e = energy / rho;
        let p = (gamma - 1.0) * rho * (e - 0.5 * u * u);
        let s = GasState1D {
            rho,
            u,
            p,
            e,
            gamma,
            r,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.p > 0.0) {
            return Err(Error::InvalidState(format!(
                "rho = {}, p = {}",
                self.rho, self.p
            )));
        }
        let e_ref = self.p / (self.rho * (self.gamma - 1.0)) + 0.5 * self.u * self.u;
        if (self.e - e_ref).abs() > 1e-12 * e_ref.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "inconsistent total energy: {} vs {}",
                self.e, e_ref
            )));
        }
        Ok(())
    }

    /// beta = 1/(2RT) = rho/(2p).
    pub fn beta(&self) -> f64 {
        self.rho / (2.0 * self.p)
    }

    /// Average internal energy of non-translational degrees of freedom.
    pub fn internal_energy_avg(&self) -> f64 {
        let rt = self.p / self.rho;
        (3.0 - self.gamma) / (2.0 * (self.gamma - 1.0)) * rt
    }

    pub fn sound_speed(&self) -> f64 {
        (self.gamma * self.p / self.rho).sqrt()
    }

    pub fn conserved(&self) -> [f64; 3] {
        [self.rho, self.rho * self.u, self.rho * self.e]
    }
}

/// 2D gas state.
#[derive(Debug, Clone, Copy)]
pub struct GasState2D {
    pub rho: f64,
    pub u1: f64,
    pub u2: f64,
    pub p: f64,
    pub e: f64,
    pub gamma: f64,
    pub r: f64,
}

impl GasState2D {
    pub fn new(rho: f64, u1: f64, u2: f64, p: f64, gamma: f64, r: f64) -> Result<GasState2D> {
        let s = GasState2D {
            rho,
            u1,
            u2,
            p,
            e: p / (rho * (gamma - 1.0)) + 0.5 * (u1 * u1 + u2 * u2),
            gamma,
            r,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_conserved(
        rho: f64,
        m1: f64,
        m2: f64,
        energy: f64,
        gamma: f64,
        r: f64,
    ) -> Result<GasState2D> {
        if rho <= 0.0 {
            return Err(Error::InvalidState(format!("rho = {rho}")));
        }
        let u1 = m1 / rho;
        let u2 = m2 / rho;
        let e = energy / rho;
        let p = (gamma - 1.0) * rho * (e - 0.5 * (u1 * u1 + u2 * u2));
        let s = GasState2D {
            rho,
            u1,
            u2,
            p,
            e,
            gamma,
            r,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0) || !(self.p > 0.0) {
            return Err(Error::InvalidState(format!(
                "rho = {}, p = {}",
                self.rho, self.p
            )));
        }
        let e_ref =
            self.p / (self.rho * (self.gamma - 1.0)) + 0.5 * (self.u1 * self.u1 + self.u2 * self.u2);
        if (self.e - e_ref).abs() > 1e-12 * e_ref.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "inconsistent total energy: {} vs {}",
                self.e, e_ref
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.rho / (2.0 * self.p)
    }

    pub fn internal_energy_avg(&self) -> f64 {
        let rt = self.p / self.rho;
        (2.0 - self.gamma) / (self.gamma - 1.0) * rt
    }

    pub fn sound_speed(&self) -> f64 {
        (self.gamma * self.p / self.rho).sqrt()
    }

    pub fn conserved(&self) -> [f64; 4] {
        [
            self.rho,
            self.rho * self.u1,
            self.rho * self.u2,
            self.rho * self.e,
        ]
    }
}

/// Moment closure outputs at one state. 1D closures leave the y-direction
/// vectors empty.
#[derive(Debug, Clone, Default)]
pub struct MomentSet {
    /// `<Psi, f>` — conserved vector U.
    pub conserved: Vec<f64>,
    /// `<Psi, v1 f>` — flux G (1D) or G1.
    pub flux_x: Vec<f64>,
    /// `<Psi, v2 f>` — flux G2.
    pub flux_y: Vec<f64>,
    /// `<Psi, sign(v1) v1 f>`.
    pub sign_x: Vec<f64>,
    /// `<Psi, sign(v2) v2 f>`.
    pub sign_y: Vec<f64>,
    /// `<Psi, sign(v1) v2 f>`.
    pub sign_xy: Vec<f64>,
    /// `<Psi, sign(v2) v1 f>`.
    pub sign_yx: Vec<f64>,
}

/// Half-range weights A± = (1 ± erf(s))/2.
pub fn half_range_weights(s: f64) -> (f64, f64) {
    let e = erf(s);
    (0.5 * (1.0 + e), 0.5 * (1.0 - e))
}

/// 1D Burgers closure: flux written as g(u) = c u with c = u/2.
pub fn burgers1d_moments(u: f64, beta: f64) -> MomentSet {
    let c = 0.5 * u;
    let s = c * beta.sqrt();
    let sign = c * u * erf(s) + u / (SQRT_PI * beta.sqrt()) * (-s * s).exp();
    MomentSet {
        conserved: vec![u],
        flux_x: vec![c * u],
        sign_x: vec![sign],
        ..Default::default()
    }
}

/// 2D Burgers closure with wavespeeds c1, c2 (functions of u upstream).
pub fn burgers2d_moments(u: f64, c1: f64, c2: f64, beta: f64) -> MomentSet {
    let sb = beta.sqrt();
    let (s1, s2) = (c1 * sb, c2 * sb);
    let bhat1 = (-s1 * s1).exp() / (SQRT_PI * sb);
    let bhat2 = (-s2 * s2).exp() / (SQRT_PI * sb);
    MomentSet {
        conserved: vec![u],
        flux_x: vec![c1 * u],
        flux_y: vec![c2 * u],
        sign_x: vec![u * (c1 * erf(s1) + bhat1)],
        sign_y: vec![u * (c2 * erf(s2) + bhat2)],
        sign_xy: vec![u * c2 * erf(s1)],
        sign_yx: vec![u * c1 * erf(s2)],
    }
}

/// 1D Euler closure.
pub fn euler1d_moments(state: &GasState1D) -> Result<MomentSet> {
    state.validate()?;
    let (rho, u, p, e) = (state.rho, state.u, state.p, state.e);
    let beta = state.beta();
    let s = u * beta.sqrt();
    let er = erf(s);
    let bhat = (-s * s).exp() / (SQRT_PI * beta.sqrt());
    Ok(MomentSet {
        conserved: vec![rho, rho * u, rho * e],
        flux_x: vec![rho * u, p + rho * u * u, p * u + rho * u * e],
        sign_x: vec![
            rho * u * er + rho * bhat,
            (p + rho * u * u) * er + rho * u * bhat,
            (p + rho * e) * u * er + (0.5 * p + rho * e) * bhat,
        ],
        ..Default::default()
    })
}

/// 2D Euler closure. The energy rows of the cross moments follow the
/// defining integrals (validated against [`moment_oracle`]).
pub fn euler2d_moments(state: &GasState2D) -> Result<MomentSet> {
    state.validate()?;
    let (rho, u1, u2, p, e) = (state.rho, state.u1, state.u2, state.p, state.e);
    let gamma = state.gamma;
    let beta = state.beta();
    let sb = beta.sqrt();
    let (s1, s2) = (u1 * sb, u2 * sb);
    let (er1, er2) = (erf(s1), erf(s2));
    let bhat1 = (-s1 * s1).exp() / (SQRT_PI * sb);
    let bhat2 = (-s2 * s2).exp() / (SQRT_PI * sb);
    let q2 = u1 * u1 + u2 * u2;
    let rt = p / rho;
    // (gamma/(gamma-1)) p + rho q^2/2 = p + rho E
    let h_erf = gamma / (gamma - 1.0) * p + 0.5 * rho * q2;
    let h_exp = (gamma + 1.0) / (2.0 * (gamma - 1.0)) * p + 0.5 * rho * q2;
    Ok(MomentSet {
        conserved: vec![rho, rho * u1, rho * u2, rho * e],
        flux_x: vec![
            rho * u1,
            p + rho * u1 * u1,
            rho * u1 * u2,
            p * u1 + rho * u1 * e,
        ],
        flux_y: vec![
            rho * u2,
            rho * u1 * u2,
            p + rho * u2 * u2,
            p * u2 + rho * u2 * e,
        ],
        sign_x: vec![
            rho * u1 * er1 + rho * bhat1,
            (p + rho * u1 * u1) * er1 + rho * u1 * bhat1,
            rho * u1 * u2 * er1 + rho * u2 * bhat1,
            h_erf * u1 * er1 + h_exp * bhat1,
        ],
        sign_y: vec![
            rho * u2 * er2 + rho * bhat2,
            rho * u1 * u2 * er2 + rho * u1 * bhat2,
            (p + rho * u2 * u2) * er2 + rho * u2 * bhat2,
            h_erf * u2 * er2 + h_exp * bhat2,
        ],
        sign_xy: vec![
            rho * u2 * er1,
            rho * u2 * (u1 * er1 + bhat1),
            rho * er1 * (rt + u2 * u2),
            h_erf * u2 * er1 + 0.5 * rho * u1 * u2 * bhat1,
        ],
        sign_yx: vec![
            rho * u1 * er2,
            rho * er2 * (rt + u1 * u1),
            rho * u1 * (u2 * er2 + bhat2),
            h_erf * u1 * er2 + 0.5 * rho * u1 * u2 * bhat2,
        ],
    })
}

/// 1D Euler flux Jacobian A = dG/dU.
pub fn jacobian_1d(state: &GasState1D) -> Result<[[f64; 3]; 3]> {
    state.validate()?;
    let (u, e, g) = (state.u, state.e, state.gamma);
    Ok([
        [0.0, 1.0, 0.0],
        [0.5 * (g - 3.0) * u * u, (3.0 - g) * u, g - 1.0],
        [
            (g - 1.0) * u * u * u - g * u * e,
            g * e - 1.5 * (g - 1.0) * u * u,
            g * u,
        ],
    ])
}

/// 2D Euler flux Jacobians (A1, A2) with A1 U = G1, A2 U = G2.
pub fn jacobians_2d(state: &GasState2D) -> Result<([[f64; 4]; 4], [[f64; 4]; 4])> {
    state.validate()?;
    let (u1, u2, e, g) = (state.u1, state.u2, state.e, state.gamma);
    let q2 = u1 * u1 + u2 * u2;
    let a1 = [
        [0.0, 1.0, 0.0, 0.0],
        [
            -u1 * u1 + 0.5 * (g - 1.0) * q2,
            (3.0 - g) * u1,
            -(g - 1.0) * u2,
            g - 1.0,
        ],
        [-u1 * u2, u2, u1, 0.0],
        [
            -(g * e - (g - 1.0) * q2) * u1,
            g * e - 0.5 * (g - 1.0) * (2.0 * u1 * u1 + q2),
            -(g - 1.0) * u1 * u2,
            g * u1,
        ],
    ];
    let a2 = [
        [0.0, 0.0, 1.0, 0.0],
        [-u1 * u2, u2, u1, 0.0],
        [
            -u2 * u2 + 0.5 * (g - 1.0) * q2,
            -(g - 1.0) * u1,
            (3.0 - g) * u2,
            g - 1.0,
        ],
        [
            -(g * e - (g - 1.0) * q2) * u2,
            -(g - 1.0) * u1 * u2,
            g * e - 0.5 * (g - 1.0) * (2.0 * u2 * u2 + q2),
            g * u2,
        ],
    ];
    Ok((a1, a2))
}

/// Nodal matrix with `D~ U = <Psi, sign(v) v f^M>` for 1D Euler.
pub fn dtilde_1d(state: &GasState1D) -> Result<[[f64; 3]; 3]> {
    state.validate()?;
    let (rho, u, p) = (state.rho, state.u, state.p);
    let beta = state.beta();
    let s = u * beta.sqrt();
    let er = erf(s);
    let bhat = (-s * s).exp() / (SQRT_PI * beta.sqrt());
    let w = u * er + bhat;
    Ok([
        [w, 0.0, 0.0],
        [p * er / rho, w, 0.0],
        [0.5 * p * bhat / rho, p * er / rho, w],
    ])
}

/// Nodal decomposition matrices for 2D Euler:
/// `(D~x, D~y, D~xy, D~yx)` with `D~x U = Sx` etc.
#[allow(clippy::type_complexity)]
pub fn dtilde_2d(
    state: &GasState2D,
) -> Result<([[f64; 4]; 4], [[f64; 4]; 4], [[f64; 4]; 4], [[f64; 4]; 4])> {
    state.validate()?;
    let m = euler2d_moments(state)?;
    let (rho, u1, u2, p, e) = (state.rho, state.u1, state.u2, state.p, state.e);
    let rho_e = rho * e;
    if rho_e == 0.0 {
        return Err(Error::InvalidState("rho E = 0".into()));
    }
    let beta = state.beta();
    let sb = beta.sqrt();
    let (s1, s2) = (u1 * sb, u2 * sb);
    let (er1, er2) = (erf(s1), erf(s2));
    let bhat1 = (-s1 * s1).exp() / (SQRT_PI * sb);
    let bhat2 = (-s2 * s2).exp() / (SQRT_PI * sb);
    let w1 = u1 * er1 + bhat1;
    let w2 = u2 * er2 + bhat2;
    let rt = p / rho;

    let dx = [
        [w1, 0.0, 0.0, 0.0],
        [p * er1 / rho, w1, 0.0, 0.0],
        [0.0, 0.0, w1, 0.0],
        [0.0, 0.0, 0.0, m.sign_x[3] / rho_e],
    ];
    let dy = [
        [w2, 0.0, 0.0, 0.0],
        [0.0, w2, 0.0, 0.0],
        [p * er2 / rho, 0.0, w2, 0.0],
        [0.0, 0.0, 0.0, m.sign_y[3] / rho_e],
    ];
    let dxy = [
        [u2 * er1, 0.0, 0.0, 0.0],
        [0.0, 0.0, w1, 0.0],
        [er1 * (rt + u2 * u2), 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, m.sign_xy[3] / rho_e],
    ];
    let dyx = [
        [u1 * er2, 0.0, 0.0, 0.0],
        [er2 * (rt + u1 * u1), 0.0, 0.0, 0.0],
        [0.0, w2, 0.0, 0.0],
        [0.0, 0.0, 0.0, m.sign_yx[3] / rho_e],
    ];
    Ok((dx, dy, dxy, dyx))
}

pub fn mat_vec3(a: &[[f64; 3]; 3], x: &[f64; 3]) -> [f64; 3] {
    let mut y = [0.0; 3];
    for i in 0..3 {
        for j in 0..3 {
            y[i] += a[i][j] * x[j];
        }
    }
    y
}

pub fn mat_vec4(a: &[[f64; 4]; 4], x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            y[i] += a[i][j] * x[j];
        }
    }
    y
}

/// Which closure the oracle should integrate.
#[derive(Debug, Clone, Copy)]
pub enum Closure {
    Burgers1D { u: f64, c: f64, beta: f64 },
    Burgers2D { u: f64, c1: f64, c2: f64, beta: f64 },
    Euler1D(GasState1D),
    Euler2D(GasState2D),
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            // Legendre recurrence for P_n(z) and P'_n(z)
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                // one polishing step after convergence
                let (mut p0, mut p1) = (1.0, z);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
                x[i] = -z;
                x[n - 1 - i] = z;
                let wi = 2.0 / ((1.0 - z * z) * dp * dp);
                w[i] = wi;
                w[n - 1 - i] = wi;
                break;
            }
        }
    }
    (x, w)
}

/// Plain and sign-weighted velocity moments of the normalized Gaussian
/// sqrt(beta/pi) exp(-beta (v - c)^2):
/// `a[k] = ∫ v^k g dv`, `sa[k] = ∫ sign(v) v^k g dv`, k = 0..3.
///
/// Composite Gauss-Legendre panels split at v = 0 make the sign factor
/// exact; panel width ~ one thermal width keeps each panel's integrand
/// resolvable at the requested order.
fn gaussian_moments(c: f64, beta: f64, order: usize) -> ([f64; 4], [f64; 4]) {
    let sigma = 1.0 / beta.sqrt();
    let lo = c - 12.0 * sigma;
    let hi = c + 12.0 * sigma;
    let (gx, gw) = gauss_legendre(order);
    let mut a = [0.0; 4];
    let mut sa = [0.0; 4];
    let norm = (beta / std::f64::consts::PI).sqrt();
    let mut integrate_segment = |s0: f64, s1: f64| {
        if s1 <= s0 {
            return;
        }
        let n_panels = ((s1 - s0) / (2.0 * sigma)).ceil().max(1.0) as usize;
        let dv = (s1 - s0) / n_panels as f64;
        for p in 0..n_panels {
            let a0 = s0 + p as f64 * dv;
            for (xi, wi) in gx.iter().zip(&gw) {
                let v = a0 + 0.5 * dv * (xi + 1.0);
                let g = norm * (-beta * (v - c) * (v - c)).exp() * 0.5 * dv * wi;
                let mut vk = g;
                let sgn = if v >= 0.0 { 1.0 } else { -1.0 };
                for k in 0..4 {
                    a[k] += vk;
                    sa[k] += sgn * vk;
                    vk *= v;
                }
            }
        }
    };
    if hi <= 0.0 || lo >= 0.0 {
        integrate_segment(lo, hi);
    } else {
        integrate_segment(lo, 0.0);
        integrate_segment(0.0, hi);
    }
    (a, sa)
}

/// Evaluates the defining moment integrals numerically. The internal-energy
/// integral is taken analytically (∫ e^{-I/I0} dI = I0, ∫ I e^{-I/I0} dI = I0²);
/// the velocity integrals use [`gaussian_moments`]. Independent of the closed
/// forms above, which it exists to check.
pub fn moment_oracle(closure: Closure, order: usize) -> MomentSet {
    let order = order.max(16);
    match closure {
        Closure::Burgers1D { u, c, beta } => {
            let (a, sa) = gaussian_moments(c, beta, order);
            MomentSet {
                conserved: vec![u * a[0]],
                flux_x: vec![u * a[1]],
                sign_x: vec![u * sa[1]],
                ..Default::default()
            }
        }
        Closure::Burgers2D { u, c1, c2, beta } => {
            let (a1, sa1) = gaussian_moments(c1, beta, order);
            let (a2, sa2) = gaussian_moments(c2, beta, order);
            MomentSet {
                conserved: vec![u * a1[0] * a2[0]],
                flux_x: vec![u * a1[1] * a2[0]],
                flux_y: vec![u * a1[0] * a2[1]],
                sign_x: vec![u * sa1[1] * a2[0]],
                sign_y: vec![u * a1[0] * sa2[1]],
                sign_xy: vec![u * sa1[0] * a2[1]],
                sign_yx: vec![u * a1[1] * sa2[0]],
            }
        }
        Closure::Euler1D(st) => {
            let rho = st.rho;
            let i0 = st.internal_energy_avg();
            let (a, sa) = gaussian_moments(st.u, st.beta(), order);
            let psi = |m: &[f64; 4]| vec![rho * m[0], rho * m[1], rho * (i0 * m[0] + 0.5 * m[2])];
            let psi_v = |m: &[f64; 4]| vec![rho * m[1], rho * m[2], rho * (i0 * m[1] + 0.5 * m[3])];
            MomentSet {
                conserved: psi(&a),
                flux_x: psi_v(&a),
                sign_x: psi_v(&sa),
                ..Default::default()
            }
        }
        Closure::Euler2D(st) => {
            let rho = st.rho;
            let i0 = st.internal_energy_avg();
            let (a1, sa1) = gaussian_moments(st.u1, st.beta(), order);
            let (a2, sa2) = gaussian_moments(st.u2, st.beta(), order);
            // moments of Psi = [1, v1, v2, I + (v1^2+v2^2)/2] against
            // m1[k1] * m2[k2] one-dimensional factors
            let combine = |m1: &[f64; 4], m2: &[f64; 4], shift: usize| -> Vec<f64> {
                // `shift` raises the v1 power (for the extra v1 or sign(v1) v1 factor)
                vec![
                    rho * m1[shift] * m2[0],
                    rho * m1[shift + 1] * m2[0],
                    rho * m1[shift] * m2[1],
                    rho * (i0 * m1[shift] * m2[0]
                        + 0.5 * (m1[shift + 2] * m2[0] + m1[shift] * m2[2])),
                ]
            };
            // weight v2: swap roles
            let combine_y = |m1: &[f64; 4], m2: &[f64; 4], shift: usize| -> Vec<f64> {
                vec![
                    rho * m1[0] * m2[shift],
                    rho * m1[1] * m2[shift],
                    rho * m1[0] * m2[shift + 1],
                    rho * (i0 * m1[0] * m2[shift]
                        + 0.5 * (m1[2] * m2[shift] + m1[0] * m2[shift + 2])),
                ]
            };
            // cross terms need one factor from each direction; expand directly
            let cross = |w1: &[f64; 4], w2: &[f64; 4]| -> Vec<f64> {
                // weight sign(v_a) v_b: w1 carries sign/v1 powers, w2 carries v2 powers
                vec![
                    rho * w1[0] * w2[1],
                    rho * w1[1] * w2[1],
                    rho * w1[0] * w2[2],
                    rho * (i0 * w1[0] * w2[1] + 0.5 * (w1[2] * w2[1] + w1[0] * w2[3])),
                ]
            };
            let cross_yx = |w1: &[f64; 4], w2: &[f64; 4]| -> Vec<f64> {
                // weight sign(v2) v1
                vec![
                    rho * w1[1] * w2[0],
                    rho * w1[2] * w2[0],
                    rho * w1[1] * w2[1],
                    rho * (i0 * w1[1] * w2[0] + 0.5 * (w1[3] * w2[0] + w1[1] * w2[2])),
                ]
            };
            MomentSet {
                conserved: combine(&a1, &a2, 0),
                flux_x: combine(&a1, &a2, 1),
                flux_y: combine_y(&a1, &a2, 1),
                sign_x: combine(&sa1, &a2, 1),
                sign_y: combine_y(&a1, &sa2, 1),
                sign_xy: cross(&sa1, &a2),
                sign_yx: cross_yx(&a1, &sa2),
            }
        }
    }
}
