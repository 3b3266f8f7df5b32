//! Coefficient validation, the amplitude/space/time reduction to the
//! normalized problem with far-field modulus one, and the explicit
//! constants of the a priori sup-norm bound.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamsError {
    #[error("coefficient {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("discriminant alpha3^2 - 4 alpha1 alpha5 = {0} is negative")]
    DiscriminantNegative(f64),
    #[error("discriminant vanishes: F has a double root, two distinct roots required")]
    DegenerateRoots,
    #[error("reduced inner root A/r0^2 = {ratio} lies outside (0, 1); it needs r1^2/r0^2 > 1/3")]
    AOutOfRange { ratio: f64 },
    #[error("wave speed must be nonnegative, got {0}")]
    NegativeSpeed(f64),
    #[error("coefficients are not in the r0^2 = 1, alpha5 = 1 gauge (r0^2 = {r0sq}, alpha5 = {alpha5})")]
    NotNormalized { r0sq: f64, alpha5: f64 },
    #[error("parameter {name} = {value} outside {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
}

/// Raw coefficients of `i Psi_t - Lap Psi = (-a1 + a3 |Psi|^2 - a5 |Psi|^4) Psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicQuinticParams {
    pub alpha1: f64,
    pub alpha3: f64,
    pub alpha5: f64,
}

impl CubicQuinticParams {
    pub fn new(alpha1: f64, alpha3: f64, alpha5: f64) -> Self {
        Self { alpha1, alpha3, alpha5 }
    }

    /// `F(s) = -alpha1 + alpha3 s - alpha5 s^2`.
    pub fn nonlinearity(&self, s: f64) -> f64 {
        -self.alpha1 + self.alpha3 * s - self.alpha5 * s * s
    }
}

/// The two positive roots of `F`, `r0sq > r1sq > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootPair {
    pub r0sq: f64,
    pub r1sq: f64,
}

/// Normalized description used by every downstream module.
///
/// `a` is the inner root of the potential after rescaling the far-field
/// modulus to one, i.e. the ratio `A / r0^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    pub a: f64,
    /// Amplitude scale of the substitution `Psi = gamma Phi(..)`.
    pub gamma: f64,
    /// Sound speed `2 sqrt(1 - a)`.
    pub sound_speed: f64,
    pub c: f64,
    pub roots: RootPair,
}

impl ReducedParams {
    pub fn is_subsonic(&self) -> bool {
        self.c > 0.0 && self.c < self.sound_speed
    }
}

/// Candidate radii from the quartic inequality and their maximum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinfConstants {
    pub r1: f64,
    pub r2: f64,
    /// The c-independent bound `C_A`.
    pub r3: f64,
    pub rbar: f64,
}

pub fn validate_and_roots(p: &CubicQuinticParams) -> Result<RootPair, ParamsError> {
    for (name, value) in [("alpha1", p.alpha1), ("alpha3", p.alpha3), ("alpha5", p.alpha5)] {
        // also rejects NaN
        if !(value > 0.0) || !value.is_finite() {
            return Err(ParamsError::NonPositive { name, value });
        }
    }
    let disc = p.alpha3 * p.alpha3 - 4.0 * p.alpha1 * p.alpha5;
    if disc < 0.0 {
        return Err(ParamsError::DiscriminantNegative(disc));
    }
    if disc == 0.0 {
        return Err(ParamsError::DegenerateRoots);
    }
    let sq = disc.sqrt();
    // larger root directly, smaller one via Vieta to avoid cancellation
    let r0sq = (p.alpha3 + sq) / (2.0 * p.alpha5);
    let r1sq = p.alpha1 / (p.alpha5 * r0sq);
    Ok(RootPair { r0sq, r1sq })
}

/// Ratio `A / r0^2` from the closed form in the raw coefficients.
fn inner_root_ratio(p: &CubicQuinticParams) -> f64 {
    // -2 + 3 (1 - sqrt(1 - x)) / x with x = 4 a1 a5 / a3^2, free of cancellation
    let sq = (p.alpha3 * p.alpha3 - 4.0 * p.alpha1 * p.alpha5).sqrt();
    -2.0 + 3.0 * p.alpha3 / (p.alpha3 + sq)
}

pub fn reduce(p: &CubicQuinticParams, c: f64) -> Result<ReducedParams, ParamsError> {
    let roots = validate_and_roots(p)?;
    if !(c >= 0.0) || !c.is_finite() {
        return Err(ParamsError::NegativeSpeed(c));
    }
    let ratio = inner_root_ratio(p);
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(ParamsError::AOutOfRange { ratio });
    }
    let a_raw = ratio * roots.r0sq;
    let gamma = (3.0 * p.alpha3 / (2.0 * p.alpha5 * (a_raw + 2.0 * roots.r0sq))).sqrt();
    Ok(ReducedParams {
        a: ratio,
        gamma,
        sound_speed: sound_speed(ratio),
        c,
        roots,
    })
}

/// Coefficient `gamma = 1 - r1^2` of the alternative normalization with
/// `r0^2 = 1`, `alpha5 = 1`.
pub fn kopv_reduce(p: &CubicQuinticParams) -> Result<f64, ParamsError> {
    let roots = validate_and_roots(p)?;
    const GAUGE_TOL: f64 = 1e-12;
    if (roots.r0sq - 1.0).abs() > GAUGE_TOL || (p.alpha5 - 1.0).abs() > GAUGE_TOL {
        return Err(ParamsError::NotNormalized {
            r0sq: roots.r0sq,
            alpha5: p.alpha5,
        });
    }
    let gamma = 1.0 - roots.r1sq;
    if gamma <= 0.0 {
        return Err(ParamsError::DegenerateRoots);
    }
    Ok(gamma)
}

pub fn sound_speed(a: f64) -> f64 {
    2.0 * (1.0 - a).sqrt()
}

/// `C_A = sqrt(A + 2) sqrt(3 + 2 sqrt 3) / 3`.
pub fn c_a(a: f64) -> f64 {
    (a + 2.0).sqrt() * (3.0 + 2.0 * 3f64.sqrt()).sqrt() / 3.0
}

fn check_a(a: f64) -> Result<(), ParamsError> {
    if a > 0.0 && a < 1.0 {
        Ok(())
    } else {
        Err(ParamsError::Domain {
            name: "A",
            value: a,
            range: "(0, 1)",
        })
    }
}

fn check_c(c: f64) -> Result<(), ParamsError> {
    if c >= 0.0 && c.is_finite() {
        Ok(())
    } else {
        Err(ParamsError::NegativeSpeed(c))
    }
}

pub fn linf_constants(a: f64, c: f64) -> Result<LinfConstants, ParamsError> {
    check_a(a)?;
    check_c(c)?;
    let radicand = 4.0 - 8.0 * a + 4.0 * a * a + 3.0 * c * c;
    assert!(radicand > 0.0, "radicand {radicand} must be positive for A in (0,1)");
    let sq = radicand.sqrt();
    let r1 = ((4.0 + 2.0 * a - sq) / 6.0).sqrt();
    let r2 = ((4.0 + 2.0 * a + sq) / 6.0).sqrt();
    let r3 = c_a(a);
    Ok(LinfConstants {
        r1,
        r2,
        r3,
        rbar: r1.max(r2).max(r3),
    })
}

/// `(s^2-1)(3s^2-2A-1) - c^2/4 - 3(s - rbar)^4`.
pub fn keylem_integrand(a: f64, c: f64, rbar: f64, s: f64) -> f64 {
    let s2 = s * s;
    let d = s - rbar;
    (s2 - 1.0) * (3.0 * s2 - 2.0 * a - 1.0) - 0.25 * c * c - 3.0 * d * d * d * d
}

/// Minimum of [`keylem_integrand`] over `n` uniform samples of `[rbar, s_max]`.
/// A collapsed interval (`s_max == rbar`) evaluates the single point `rbar`.
pub fn keylem_margin(a: f64, c: f64, s_max: f64, n: usize) -> Result<f64, ParamsError> {
    let k = linf_constants(a, c)?;
    let rbar = k.rbar;
    if s_max == rbar {
        return Ok(keylem_integrand(a, c, rbar, rbar));
    }
    if !(s_max > rbar) {
        return Err(ParamsError::Domain {
            name: "s_max",
            value: s_max,
            range: "(rbar, inf)",
        });
    }
    if n < 2 {
        return Err(ParamsError::Domain {
            name: "n",
            value: n as f64,
            range: "[2, inf)",
        });
    }
    let h = (s_max - rbar) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| keylem_integrand(a, c, rbar, rbar + i as f64 * h))
        .fold(f64::INFINITY, f64::min))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    LocalMin,
    LocalMax,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalPoint {
    pub u: f64,
    pub value: f64,
    pub kind: CriticalKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    pub u: Vec<f64>,
    pub w: Vec<f64>,
    pub critical: Vec<CriticalPoint>,
}

/// `W(u) = (u^2-1)^2 (u^2-A) / 2`.
pub fn potential(a: f64, u: f64) -> f64 {
    let u2 = u * u;
    0.5 * (u2 - 1.0) * (u2 - 1.0) * (u2 - a)
}

/// `W'(u) = u (u^2-1)(3u^2-2A-1)`.
pub fn potential_derivative(a: f64, u: f64) -> f64 {
    let u2 = u * u;
    u * (u2 - 1.0) * (3.0 * u2 - 2.0 * a - 1.0)
}

/// `W''(u) = 15u^4 - 6(A+2)u^2 + 2A + 1`.
pub fn potential_second_derivative(a: f64, u: f64) -> f64 {
    let u2 = u * u;
    15.0 * u2 * u2 - 6.0 * (a + 2.0) * u2 + 2.0 * a + 1.0
}

/// Samples `W` on `u_grid` and lists its five critical points in increasing order.
pub fn potential_profile(a: f64, u_grid: &[f64]) -> Result<PotentialProfile, ParamsError> {
    check_a(a)?;
    let m = ((2.0 * a + 1.0) / 3.0).sqrt();
    let critical = [-1.0, -m, 0.0, m, 1.0]
        .into_iter()
        .map(|u| {
            let kind = if potential_second_derivative(a, u) > 0.0 {
                CriticalKind::LocalMin
            } else {
                CriticalKind::LocalMax
            };
            CriticalPoint {
                u,
                value: potential(a, u),
                kind,
            }
        })
        .collect();
    Ok(PotentialProfile {
        u: u_grid.to_vec(),
        w: u_grid.iter().map(|&u| potential(a, u)).collect(),
        critical,
    })
}
