//! Interaction potentials w = ε₀·δ₀ + tail with superstability data
//! (ε, r), far-field envelope (s, κ), radial Fourier transforms and moments.
//!
//! Conventions: ŵ(k) = (2π)^{-d/2} ∫ w(x) e^{-ik·x} dx, evaluated radially
//! (1D cosine transform, 2D Hankel transform of order zero). The smeared
//! Dirac δ_r is the normalized indicator of the ball B_r; δ_0 is the Dirac.

use crate::numerics::{quad_trapezoid, CubicSpline};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PotentialError {
    #[error("unknown potential family `{0}`")]
    UnknownFamily(String),
    #[error("invalid potential: {0}")]
    Invalid(String),
    #[error("tabulated data is not even: w({x}) = {left} vs w({minus_x}) = {right}")]
    NotEven { x: f64, minus_x: f64, left: f64, right: f64 },
    #[error("integral of w must be strictly positive, got {0}")]
    NonPositiveIntegral(f64),
    #[error("quadrature did not converge (last increment {0:.3e})")]
    QuadratureNonConvergence(f64),
    #[error("second moment diverges: decay exponent s = {s} <= d + 2 = {limit}")]
    DivergentMoment { s: f64, limit: f64 },
}

/// Smooth part of the interaction, evaluated radially.
#[derive(Debug, Clone)]
pub enum Tail {
    /// c·1(|x| <= R0)
    Step { height: f64, radius: f64 },
    /// c/(1+|x|^6)
    VanDerWaals { amplitude: f64 },
    /// c·exp(-|x|^2/(2σ^2))
    Gaussian { amplitude: f64, width: f64 },
    /// min(A, |x|^{-12} - |x|^{-6})
    TruncatedLennardJones { cap: f64 },
    /// no smooth part (pure contact interaction)
    Zero,
    /// cubic interpolation of (|x|, w) samples, linear extrapolation clipped
    /// to the κ/|x|^s envelope beyond the last knot
    Tabulated { spline: CubicSpline, envelope: (f64, f64) },
}

impl Tail {
    pub fn eval(&self, radius: f64) -> f64 {
        let x = radius.abs();
        match self {
            Tail::Step { height, radius } => {
                if x <= *radius {
                    *height
                } else {
                    0.0
                }
            }
            Tail::VanDerWaals { amplitude } => amplitude / (1.0 + x.powi(6)),
            Tail::Gaussian { amplitude, width } => amplitude * (-x * x / (2.0 * width * width)).exp(),
            Tail::TruncatedLennardJones { cap } => {
                if x == 0.0 {
                    return *cap;
                }
                let inv6 = x.powi(-6);
                (inv6 * inv6 - inv6).min(*cap)
            }
            Tail::Zero => 0.0,
            Tail::Tabulated { spline, envelope } => {
                let (lo, hi) = spline.domain();
                if x <= hi {
                    spline.eval(x.max(lo))
                } else {
                    // linear continuation of the last segment, kept under the
                    // far-field envelope
                    let step = (hi - lo).max(1e-12) * 1e-3;
                    let slope = (spline.eval(hi) - spline.eval(hi - step)) / step;
                    let lin = spline.eval(hi) + slope * (x - hi);
                    let (kappa, s) = *envelope;
                    let cap = kappa / x.powf(s);
                    lin.clamp(-cap, cap)
                }
            }
        }
    }

    /// Radius past which the tail vanishes identically, when known.
    fn support_radius(&self) -> Option<f64> {
        match self {
            Tail::Step { radius, .. } => Some(*radius),
            Tail::Zero => Some(0.0),
            _ => None,
        }
    }

    /// Smallest length scale of the tail; quadrature grids must resolve it.
    fn feature_scale(&self) -> f64 {
        match self {
            Tail::Step { radius, .. } => *radius,
            Tail::VanDerWaals { .. } => 1.0,
            Tail::Gaussian { width, .. } => *width,
            Tail::TruncatedLennardJones { .. } => 0.5,
            Tail::Zero => 1.0,
            Tail::Tabulated { spline, .. } => {
                let (lo, hi) = spline.domain();
                ((hi - lo) / 64.0).max(1e-3)
            }
        }
    }
}

/// Named interaction families with their parameters.
#[derive(Debug, Clone)]
pub enum PotentialKind {
    Step { height: f64, radius: f64 },
    VanDerWaals { amplitude: f64 },
    Gaussian { amplitude: f64, width: f64 },
    TruncatedLennardJones { cap: f64 },
    PureContact { strength: f64 },
    Tabulated { samples: Vec<(f64, f64)> },
}

/// User overrides for the declared superstability and far-field constants.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub epsilon: Option<f64>,
    pub smear_radius: Option<f64>,
    pub decay_exponent: Option<f64>,
    pub decay_constant: Option<f64>,
}

/// First moments of the interaction; the contact term contributes ε₀ to the
/// first two and nothing to the second moment.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    /// ∫ w
    pub integral: f64,
    /// ∫ |w|
    pub abs_integral: f64,
    /// ∫ |x|² |w|, absent when s <= d + 2
    pub second: Option<f64>,
    /// quadrature + truncation error estimate on the integrals above
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    /// a sufficient condition held (w₂ >= 0 pointwise, or ŵ₂ >= 0 on the scan)
    StableSufficient(StabilityRoute),
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityRoute {
    PointwiseNonnegative,
    FourierNonnegative,
}

impl Stability {
    pub fn is_sufficient(&self) -> bool {
        matches!(self, Stability::StableSufficient(_))
    }
}

/// Radial samples of ŵ on the uniform grid k_i = i·k_max/(n-1).
#[derive(Debug, Clone)]
pub struct FourierProfile {
    pub convention_factor: f64,
    pub k_max: f64,
    pub samples: Vec<f64>,
}

impl FourierProfile {
    pub fn k_at(&self, i: usize) -> f64 {
        self.k_max * i as f64 / (self.samples.len() - 1) as f64
    }

    pub fn min_value(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Linear interpolation between scan samples.
    pub fn value(&self, k: f64) -> f64 {
        let n = self.samples.len();
        let t = (k / self.k_max).clamp(0.0, 1.0) * (n - 1) as f64;
        let i = (t as usize).min(n - 2);
        let frac = t - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }
}

#[derive(Debug, Clone)]
pub struct Potential {
    dim: usize,
    contact: f64,
    tail: Tail,
    epsilon: f64,
    smear_radius: f64,
    decay_exponent: f64,
    decay_constant: f64,
    moments: Moments,
    stability: std::sync::OnceLock<Stability>,
}

/// Volume of the d-ball of radius r (d ∈ {1, 2}).
pub fn ball_volume(dim: usize, r: f64) -> f64 {
    match dim {
        1 => 2.0 * r,
        2 => PI * r * r,
        _ => unreachable!("only d in {{1,2}} supported"),
    }
}

/// Surface factor in the radial volume element: S_1 = 2, S_2 = 2π.
fn sphere_factor(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unreachable!(),
    }
}

const QUAD_REL_TOL: f64 = 1e-8;

impl Potential {
    pub fn new(kind: PotentialKind, dim: usize) -> Result<Self, PotentialError> {
        Self::with_overrides(kind, dim, Overrides::default())
    }

    pub fn vdw(amplitude: f64, dim: usize) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::VanDerWaals { amplitude }, dim)
    }

    pub fn step(height: f64, radius: f64, dim: usize) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Step { height, radius }, dim)
    }

    pub fn gaussian(amplitude: f64, width: f64, dim: usize) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::Gaussian { amplitude, width }, dim)
    }

    pub fn pure_contact(strength: f64, dim: usize) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::PureContact { strength }, dim)
    }

    pub fn truncated_lj(cap: f64, dim: usize) -> Result<Self, PotentialError> {
        Self::new(PotentialKind::TruncatedLennardJones { cap }, dim)
    }

    pub fn with_overrides(
        kind: PotentialKind,
        dim: usize,
        ov: Overrides,
    ) -> Result<Self, PotentialError> {
        if dim != 1 && dim != 2 {
            return Err(PotentialError::Invalid(format!("dimension {dim} not in {{1,2}}")));
        }
        let (contact, tail, eps_def, r_def, s_def) = match kind {
            PotentialKind::Step { height, radius } => {
                if height <= 0.0 || radius <= 0.0 {
                    return Err(PotentialError::Invalid("step needs c > 0 and R0 > 0".into()));
                }
                let r = radius / 2.0;
                (0.0, Tail::Step { height, radius }, height * ball_volume(dim, r) / 2.0, r, 6.0)
            }
            PotentialKind::VanDerWaals { amplitude } => {
                if amplitude <= 0.0 {
                    return Err(PotentialError::Invalid("vdw needs c > 0".into()));
                }
                (0.0, Tail::VanDerWaals { amplitude }, amplitude / 4.0, 1.0, 6.0)
            }
            PotentialKind::Gaussian { amplitude, width } => {
                if amplitude <= 0.0 || width <= 0.0 {
                    return Err(PotentialError::Invalid("gaussian needs c > 0 and sigma > 0".into()));
                }
                let r = width / 2.0;
                (
                    0.0,
                    Tail::Gaussian { amplitude, width },
                    0.1 * amplitude * ball_volume(dim, r),
                    r,
                    6.0,
                )
            }
            PotentialKind::TruncatedLennardJones { cap } => {
                if cap < 4.0 {
                    return Err(PotentialError::Invalid(
                        "truncated Lennard-Jones needs a cap A >= 4".into(),
                    ));
                }
                let r = 0.5 * cap.powf(-1.0 / 12.0);
                (
                    0.0,
                    Tail::TruncatedLennardJones { cap },
                    0.25 * cap * ball_volume(dim, r),
                    r,
                    6.0,
                )
            }
            PotentialKind::PureContact { strength } => {
                if strength <= 0.0 {
                    return Err(PotentialError::Invalid("pure contact needs eps0 > 0".into()));
                }
                (strength, Tail::Zero, strength, 0.0, 6.0)
            }
            PotentialKind::Tabulated { samples } => {
                let spline = build_even_spline(&samples)?;
                let epsilon = ov
                    .epsilon
                    .ok_or_else(|| PotentialError::Invalid("tabulated potential requires an explicit epsilon".into()))?;
                let r = ov.smear_radius.ok_or_else(|| {
                    PotentialError::Invalid("tabulated potential requires an explicit smear radius".into())
                })?;
                let s = ov.decay_exponent.unwrap_or(dim as f64 + 3.0);
                let kappa_seed = ov.decay_constant.unwrap_or(1.0);
                let tail = Tail::Tabulated { spline, envelope: (kappa_seed, s) };
                let kappa = grow_decay_constant(&tail, s, kappa_seed.max(2.0 * r));
                let tail = match tail {
                    Tail::Tabulated { spline, .. } => Tail::Tabulated { spline, envelope: (kappa, s) },
                    _ => unreachable!(),
                };
                return Self::assemble(dim, 0.0, tail, epsilon, r, s, kappa);
            }
        };
        let epsilon = ov.epsilon.unwrap_or(eps_def);
        let smear_radius = ov.smear_radius.unwrap_or(r_def);
        let decay_exponent = ov.decay_exponent.unwrap_or(s_def);
        let kappa = match ov.decay_constant {
            Some(k) => k,
            None => grow_decay_constant(&tail, decay_exponent, (2.0 * smear_radius).max(1.0)),
        };
        Self::assemble(dim, contact, tail, epsilon, smear_radius, decay_exponent, kappa)
    }

    fn assemble(
        dim: usize,
        contact: f64,
        tail: Tail,
        epsilon: f64,
        smear_radius: f64,
        decay_exponent: f64,
        decay_constant: f64,
    ) -> Result<Self, PotentialError> {
        if contact < 0.0 {
            return Err(PotentialError::Invalid("contact coefficient must be >= 0".into()));
        }
        if epsilon <= 0.0 {
            return Err(PotentialError::Invalid("superstability epsilon must be > 0".into()));
        }
        if smear_radius < 0.0 {
            return Err(PotentialError::Invalid("smear radius must be >= 0".into()));
        }
        if decay_exponent <= dim as f64 {
            return Err(PotentialError::Invalid(format!(
                "decay exponent s = {decay_exponent} must exceed the dimension d = {dim}"
            )));
        }
        if decay_constant < 2.0 * smear_radius {
            return Err(PotentialError::Invalid("decay constant kappa must be >= 2r".into()));
        }
        // far-field envelope check on a sample of radii
        for i in 0..64 {
            let x = decay_constant * (1.0 + 0.25 * i as f64);
            let bound = decay_constant / x.powf(decay_exponent);
            if tail.eval(x) > bound * (1.0 + 1e-9) + 1e-300 {
                return Err(PotentialError::Invalid(format!(
                    "tail violates the far-field envelope at |x| = {x}: {} > {bound}",
                    tail.eval(x)
                )));
            }
        }
        let mut p = Potential {
            dim,
            contact,
            tail,
            epsilon,
            smear_radius,
            decay_exponent,
            decay_constant,
            moments: Moments { integral: 0.0, abs_integral: 0.0, second: None, error: 0.0 },
            stability: std::sync::OnceLock::new(),
        };
        p.moments = p.compute_moments()?;
        if p.moments.integral <= 0.0 {
            return Err(PotentialError::NonPositiveIntegral(p.moments.integral));
        }
        Ok(p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn contact_coefficient(&self) -> f64 {
        self.contact
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn smear_radius(&self) -> f64 {
        self.smear_radius
    }
    pub fn decay_exponent(&self) -> f64 {
        self.decay_exponent
    }
    pub fn decay_constant(&self) -> f64 {
        self.decay_constant
    }
    pub fn tail_at(&self, radius: f64) -> f64 {
        self.tail.eval(radius)
    }
    pub fn moments(&self) -> Moments {
        self.moments
    }
    /// ∫ w (cached at construction).
    pub fn int_w(&self) -> f64 {
        self.moments.integral
    }
    /// ∫ |x|²|w|, or a divergent-moment error when s <= d + 2.
    pub fn second_moment(&self) -> Result<f64, PotentialError> {
        self.moments.second.ok_or(PotentialError::DivergentMoment {
            s: self.decay_exponent,
            limit: self.dim as f64 + 2.0,
        })
    }

    pub fn convention_factor(&self) -> f64 {
        (2.0 * PI).powf(-(self.dim as f64) / 2.0)
    }

    /// Truncation radius so the neglected far field stays below `tol` when the
    /// integrand carries an extra |x|^extra weight. Walks outward, bounding the
    /// remainder by the locally sampled amplitude continued with the declared
    /// decay exponent s.
    fn truncation_radius(&self, extra: f64, tol: f64) -> f64 {
        if let Some(sup) = self.tail.support_radius() {
            return sup.max(1e-6);
        }
        let d = self.dim as f64;
        let p = self.decay_exponent - d - extra;
        if p <= 0.0 {
            return 1e5;
        }
        let sd = sphere_factor(self.dim);
        let mut x = 4.0 * self.tail.feature_scale().max(0.25);
        for _ in 0..60 {
            let mut amp = 0.0f64;
            for i in 0..=32 {
                amp = amp.max(self.tail.eval(x * (1.0 + i as f64 / 32.0)).abs());
            }
            // |tail(y)| <= amp·(x/y)^s for y >= x gives remainder S_d·amp·x^{d+extra}/p
            if sd * amp * x.powf(d + extra) / p <= tol {
                return x.min(1e5);
            }
            x *= 1.6;
            if x > 1e5 {
                break;
            }
        }
        1e5
    }

    fn compute_moments(&self) -> Result<Moments, PotentialError> {
        let d = self.dim;
        let sd = sphere_factor(d);
        let scale = 1.0
            + self.contact
            + self.tail.eval(0.0).abs() * self.tail.feature_scale().max(1.0).powi(d as i32 + 2);
        let tol = 1e-12 * scale;
        let r_end = self.truncation_radius(0.0, tol);
        let n0 = |r: f64| (1024.0 + 4.0 * r / self.tail.feature_scale()).ceil() as usize;
        let q0 = quad_trapezoid(
            |x| self.tail.eval(x) * x.powi(d as i32 - 1),
            0.0,
            r_end,
            n0(r_end),
            QUAD_REL_TOL,
            tol,
        );
        let qa = quad_trapezoid(
            |x| self.tail.eval(x).abs() * x.powi(d as i32 - 1),
            0.0,
            r_end,
            n0(r_end),
            QUAD_REL_TOL,
            tol,
        );
        let second = if self.decay_exponent > d as f64 + 2.0 {
            let r2 = self.truncation_radius(2.0, tol);
            let q2 = quad_trapezoid(
                |x| self.tail.eval(x).abs() * x.powi(d as i32 + 1),
                0.0,
                r2,
                n0(r2),
                QUAD_REL_TOL,
                tol,
            );
            Some(sd * q2.value)
        } else {
            None
        };
        Ok(Moments {
            integral: self.contact + sd * q0.value,
            abs_integral: self.contact + sd * qa.value,
            second,
            error: sd * (q0.error + qa.error) + tol,
        })
    }

    /// Radial Fourier transform ŵ(k), contact term included.
    pub fn fourier(&self, k: f64) -> Result<f64, PotentialError> {
        let k = k.abs();
        let d = self.dim;
        let tol = 1e-13 * (1.0 + self.moments.abs_integral);
        let r_end = self.truncation_radius(0.0, 1e-10 * (1.0 + self.moments.abs_integral));
        // resolve both the oscillation period 2π/k and the tail feature scale
        let n0 = (512.0 + 8.0 * k * r_end / (2.0 * PI) + 4.0 * r_end / self.tail.feature_scale())
            .ceil() as usize;
        let q = match d {
            1 => quad_trapezoid(|x| self.tail.eval(x) * (k * x).cos(), 0.0, r_end, n0, QUAD_REL_TOL, tol),
            2 => quad_trapezoid(
                |x| self.tail.eval(x) * libm::j0(k * x) * x,
                0.0,
                r_end,
                n0,
                QUAD_REL_TOL,
                tol,
            ),
            _ => unreachable!(),
        };
        if !q.converged {
            return Err(PotentialError::QuadratureNonConvergence(q.error));
        }
        Ok(self.convention_factor() * (self.contact + sphere_factor(d) * q.value))
    }

    /// Samples ŵ on `[0, k_max]` with `n` points.
    pub fn fourier_profile(&self, k_max: f64, n: usize) -> Result<FourierProfile, PotentialError> {
        assert!(n >= 2 && k_max > 0.0);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let k = k_max * i as f64 / (n - 1) as f64;
            samples.push(self.fourier(k)?);
        }
        Ok(FourierProfile { convention_factor: self.convention_factor(), k_max, samples })
    }

    /// Fourier transform of ε·δ_r∗δ_r at k (equals (2π)^{d/2}·ŵ_{δr}(k)²
    /// scaled by ε; reduces to ε·(2π)^{-d/2} at r = 0).
    pub fn smear_pair_fourier(&self, k: f64) -> f64 {
        self.epsilon * self.convention_factor() * smear_shape(self.dim, k * self.smear_radius).powi(2)
    }

    /// Pointwise value of (δ_r∗δ_r)(x); zero for |x| > 2r.
    pub fn smear_pair_value(&self, x: f64) -> f64 {
        let r = self.smear_radius;
        if r == 0.0 {
            return 0.0; // Dirac-squared handled separately by callers
        }
        let t = x.abs();
        if t >= 2.0 * r {
            return 0.0;
        }
        match self.dim {
            1 => (2.0 * r - t) / (4.0 * r * r),
            2 => {
                let lens = 2.0 * r * r * (t / (2.0 * r)).acos() - 0.5 * t * (4.0 * r * r - t * t).sqrt();
                lens / (PI * r * r).powi(2)
            }
            _ => unreachable!(),
        }
    }

    /// True when the full potential is pointwise nonnegative on a sample grid.
    pub fn is_pointwise_nonnegative(&self) -> bool {
        if self.contact < 0.0 {
            return false;
        }
        let r_end = self.truncation_radius(0.0, 1e-12).min(1e4);
        let n = 4096;
        (0..=n).all(|i| self.tail.eval(r_end * i as f64 / n as f64) >= -1e-12)
    }

    /// Sufficient superstability check for w₂ = w − ε·δ_r∗δ_r: either w₂ >= 0
    /// pointwise on a sample grid, or ŵ₂ >= −tol on the default k-scan.
    /// The verdict is cached; the potential is immutable.
    pub fn stability_check(&self) -> Stability {
        *self.stability.get_or_init(|| self.stability_check_uncached())
    }

    fn stability_check_uncached(&self) -> Stability {
        // pointwise route
        let r = self.smear_radius;
        let contact_ok = if r == 0.0 { self.epsilon <= self.contact + 1e-12 } else { true };
        if contact_ok {
            let r_end = self.truncation_radius(0.0, 1e-12).min(1e4).max(2.0 * r + 1.0);
            let n = 8192;
            let tol = 1e-12 * (1.0 + self.tail.eval(0.0).abs());
            let pointwise = (0..=n).all(|i| {
                let x = r_end * i as f64 / n as f64;
                let smear = if r == 0.0 { 0.0 } else { self.epsilon * self.smear_pair_value(x) };
                self.tail.eval(x) - smear >= -tol
            });
            if pointwise {
                return Stability::StableSufficient(StabilityRoute::PointwiseNonnegative);
            }
        }
        // Fourier route on the default criticality scan grid
        let (k_max, n) = default_scan(self);
        let what0 = self.convention_factor() * self.int_w();
        let tol = 1e-10 * what0.abs().max(1e-12);
        let mut ok = true;
        for i in 0..n {
            let k = k_max * i as f64 / (n - 1) as f64;
            let w2 = match self.fourier(k) {
                Ok(v) => v - self.smear_pair_fourier(k),
                Err(_) => {
                    ok = false;
                    break;
                }
            };
            if w2 < -tol {
                ok = false;
                break;
            }
        }
        if ok {
            Stability::StableSufficient(StabilityRoute::FourierNonnegative)
        } else {
            Stability::Indeterminate
        }
    }
}

/// Default radial scan: 4096 points up to 20·(∫|x|²|w|/∫|w|)^{-1/2}, clamped
/// to a sane window; the instability wavenumber scales with the inverse
/// interaction range.
pub fn default_scan(p: &Potential) -> (f64, usize) {
    let m = p.moments();
    let k_max = match m.second {
        Some(m2) if m2 > 0.0 => {
            let range = (m2 / m.abs_integral).sqrt();
            (20.0 / range).clamp(10.0, 200.0)
        }
        _ => 60.0,
    };
    (k_max, 4096)
}

/// Shape factor of the smeared Dirac transform: (2π)^{d/2}·ŵ_{δr}(k) as a
/// function of t = k·r (equals 1 at t = 0 and for r = 0).
fn smear_shape(dim: usize, t: f64) -> f64 {
    if t.abs() < 1e-14 {
        return 1.0;
    }
    match dim {
        1 => t.sin() / t,
        2 => 2.0 * libm::j1(t) / t,
        _ => unreachable!(),
    }
}

fn build_even_spline(samples: &[(f64, f64)]) -> Result<CubicSpline, PotentialError> {
    if samples.len() < 4 {
        return Err(PotentialError::Invalid("tabulated potential needs at least 4 samples".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    // evenness: every negative abscissa must match a positive one
    let tol_x = 1e-9;
    for &(x, wx) in sorted.iter().filter(|(x, _)| *x < -tol_x) {
        let target = -x;
        let found = sorted
            .iter()
            .find(|(xx, _)| (xx - target).abs() <= tol_x * (1.0 + target))
            .map(|&(_, v)| v);
        match found {
            Some(v) if (v - wx).abs() <= 1e-8 * (1.0 + v.abs().max(wx.abs())) => {}
            Some(v) => {
                return Err(PotentialError::NotEven { x: target, minus_x: x, left: v, right: wx })
            }
            None => {
                return Err(PotentialError::NotEven { x: target, minus_x: x, left: f64::NAN, right: wx })
            }
        }
    }
    let mut fold: Vec<(f64, f64)> = sorted.iter().filter(|(x, _)| *x >= -tol_x).map(|&(x, v)| (x.max(0.0), v)).collect();
    fold.dedup_by(|a, b| (a.0 - b.0).abs() < tol_x);
    if fold.len() < 2 {
        return Err(PotentialError::Invalid("tabulated potential needs samples for x >= 0".into()));
    }
    if fold.iter().any(|(_, v)| !v.is_finite()) {
        return Err(PotentialError::Invalid("tabulated samples must be finite".into()));
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = fold.into_iter().unzip();
    Ok(CubicSpline::new(xs, ys))
}

/// Smallest κ (by 1.5x growth) so that tail(x) <= κ/|x|^s holds on a sample
/// of radii in [κ, 16κ].
fn grow_decay_constant(tail: &Tail, s: f64, start: f64) -> f64 {
    let mut kappa = start.max(1e-3);
    'outer: for _ in 0..80 {
        for i in 0..=96 {
            let x = kappa * (1.0 + 15.0 * i as f64 / 96.0);
            if tail.eval(x) > kappa / x.powf(s) {
                kappa *= 1.5;
                continue 'outer;
            }
        }
        return kappa;
    }
    kappa
}
