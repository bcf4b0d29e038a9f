//! Closed-form source solutions of the linear and nonlinear heat equations,
//! their functionals, and the sharp constants they produce.
//!
//! Two forms of the unit-mass Barenblatt profile are kept side by side:
//!
//! * [`Convention::Standard`]: `B_p(x) = (C_p - |x|^2)_+^{1/(p-1)}` for `p > 1`
//!   and `(C_p + |x|^2)^{1/(p-1)}` for `p < 1`;
//! * [`Convention::SelfSimilar`]: `(C - kappa |x|^2)_+^{1/(p-1)}` with
//!   `kappa = (p-1)/(2 mu p)`, the time-one slice of the source-type solution
//!   of `u_t = Δ(u^p)`.
//!
//! They differ by a mass-preserving dilation, so every dilation-invariant
//! quantity agrees between them.

use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

const MODULE: &str = "analytic_profiles";

/// `mu` below this is treated as zero (the `p = 1 - 2/n` boundary).
const MU_FLOOR: f64 = 1e-12;

/// Scaling exponents attached to a diffusion exponent `p` in dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coefficients {
    pub p: f64,
    pub n: u32,
    /// `mu = 2 + n (p - 1)`.
    pub mu: f64,
    /// `nu = mu / n`, the exponent of the entropy power.
    pub nu: f64,
}

impl Coefficients {
    pub fn new(p: f64, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(domain(MODULE, "dimension n must be at least 1"));
        }
        if !(p.is_finite() && p > 0.0) {
            return Err(domain(MODULE, format!("exponent p = {p} must be finite and positive")));
        }
        let nf = f64::from(n);
        let mu = 2.0 + nf * (p - 1.0);
        if mu <= MU_FLOOR {
            return Err(domain(
                MODULE,
                format!(
                    "p = {p} must exceed 1 - 2/n = {} (mu = 2 + n(p-1) is not positive)",
                    1.0 - 2.0 / nf
                ),
            ));
        }
        Ok(Self { p, n, mu, nu: mu / nf })
    }

    pub fn dim(&self) -> f64 {
        f64::from(self.n)
    }

    /// `q = p/(p-1)`, the factor in `e_p'(u) = q u^{p-1}`.
    pub fn pressure_factor(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

pub fn coefficients(p: f64, n: u32) -> Result<Coefficients> {
    Coefficients::new(p, n)
}

/// Surface measure of the unit sphere `S^{n-1}`, `2 pi^{n/2} / Gamma(n/2)`.
pub fn sphere_area(n: u32) -> f64 {
    let half = 0.5 * f64::from(n);
    2.0 * (half * PI.ln() - ln_gamma(half)).exp()
}

fn require_not_one(p: f64) -> Result<()> {
    if p == 1.0 {
        return Err(domain(
            MODULE,
            "p = 1 has no Barenblatt profile; use the Gaussian heat kernel",
        ));
    }
    Ok(())
}

/// Second-moment and Fisher computations need `p > n/(n+2)`.
fn require_finite_moment(p: f64, n: u32) -> Result<()> {
    let nf = f64::from(n);
    if p <= nf / (nf + 2.0) {
        return Err(domain(
            MODULE,
            format!(
                "p = {p} must exceed n/(n+2) = {} for the Barenblatt second moment to be finite",
                nf / (nf + 2.0)
            ),
        ));
    }
    Ok(())
}

/// Fundamental solution of `u_t = Δu` issued from the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelSpec {
    pub n: u32,
    pub t: f64,
}

impl HeatKernelSpec {
    pub fn new(n: u32, t: f64) -> Result<Self> {
        if n == 0 {
            return Err(domain(MODULE, "dimension n must be at least 1"));
        }
        if !(t.is_finite() && t > 0.0) {
            return Err(domain(MODULE, format!("heat kernel time t = {t} must be positive")));
        }
        Ok(Self { n, t })
    }

    /// `(4 pi t)^{-n/2} exp(-r^2 / 4t)` at radius `r = |x|`.
    pub fn density(&self, r: f64) -> f64 {
        let n = f64::from(self.n);
        (4.0 * PI * self.t).powf(-0.5 * n) * (-r * r / (4.0 * self.t)).exp()
    }

    pub fn variance(&self) -> f64 {
        2.0 * f64::from(self.n) * self.t
    }
}

pub fn gaussian_density(x: &[f64], spec: &HeatKernelSpec) -> f64 {
    let r2: f64 = x.iter().map(|xi| xi * xi).sum();
    spec.density(r2.sqrt())
}

/// Shannon entropy and entropy power of the heat kernel: `(n/2) log(4 pi e t)`
/// and `4 pi e t`.
pub fn shannon_heat_entropy_power(spec: &HeatKernelSpec) -> (f64, f64) {
    let n = f64::from(spec.n);
    let power = 4.0 * PI * E * spec.t;
    (0.5 * n * power.ln(), power)
}

/// `A_p`, the mass of `(1 - |x|^2)_+^{1/(p-1)}` (p > 1) or
/// `(1 + |x|^2)^{1/(p-1)}` (p < 1).
///
/// For `p > 1` this is `pi^{n/2} Gamma(a+1) / Gamma(n/2 + a + 1)` with
/// `a = 1/(p-1)`, obtained from the Beta integral.
pub fn barenblatt_a(p: f64, n: u32) -> Result<f64> {
    require_not_one(p)?;
    let c = Coefficients::new(p, n)?;
    let half = 0.5 * c.dim();
    let log_pi = half * PI.ln();
    if p > 1.0 {
        let a = 1.0 / (p - 1.0);
        Ok((log_pi + ln_gamma(a + 1.0) - ln_gamma(half + a + 1.0)).exp())
    } else {
        let b = 1.0 / (1.0 - p);
        let arg = b - half;
        if arg <= 0.0 {
            return Err(domain(
                MODULE,
                format!("(1+|x|^2)^(1/(p-1)) is not integrable for p = {p}, n = {n}"),
            ));
        }
        Ok((log_pi + ln_gamma(arg) - ln_gamma(b)).exp())
    }
}

/// `C_p = A_p^{-2(p-1)/(n(p-1)+2)}`, which gives the standard profile unit mass.
pub fn barenblatt_c(p: f64, n: u32) -> Result<f64> {
    let a = barenblatt_a(p, n)?;
    let c = Coefficients::new(p, n)?;
    Ok(a.powf(-2.0 * (p - 1.0) / c.mu))
}

/// Which algebraic form of the unit-mass Barenblatt profile a spec describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Convention {
    /// `(C_p ∓ |x|^2)^{1/(p-1)}`.
    Standard,
    /// `(C - kappa |x|^2)_+^{1/(p-1)}`, the source solution at `t = 1`.
    SelfSimilar,
}

impl std::str::FromStr for Convention {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Self::Standard),
            "self-similar" => Ok(Self::SelfSimilar),
            other => Err(domain(MODULE, format!("unknown Barenblatt convention {other:?}"))),
        }
    }
}

/// A unit-mass Barenblatt profile `(constant - quad |x|^2)_+^{1/(p-1)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarenblattSpec {
    pub coeffs: Coefficients,
    pub kappa: f64,
    pub a_p: f64,
    pub c_p: f64,
    pub convention: Convention,
    /// Additive constant of the stored form (`C_p` or `C`).
    pub constant: f64,
    /// Coefficient of `|x|^2` in the stored form; negative when `p < 1`.
    pub quad: f64,
    /// The stored profile is `R_a B_p` for this `a`.
    pub dilation: f64,
}

impl BarenblattSpec {
    pub fn new(p: f64, n: u32, convention: Convention) -> Result<Self> {
        require_not_one(p)?;
        let coeffs = Coefficients::new(p, n)?;
        let a_p = barenblatt_a(p, n)?;
        let c_p = a_p.powf(-2.0 * (p - 1.0) / coeffs.mu);
        let kappa = (p - 1.0) / (2.0 * coeffs.mu * p);
        let sign = if p > 1.0 { 1.0 } else { -1.0 };
        let (constant, quad, dilation) = match convention {
            Convention::Standard => (c_p, sign, 1.0),
            Convention::SelfSimilar => {
                let dilation = kappa.abs().powf(-1.0 / coeffs.mu);
                (dilation.powf(-coeffs.dim() * (p - 1.0)) * c_p, kappa, dilation)
            }
        };
        Ok(Self {
            coeffs,
            kappa,
            a_p,
            c_p,
            convention,
            constant,
            quad,
            dilation,
        })
    }

    pub fn p(&self) -> f64 {
        self.coeffs.p
    }

    pub fn n(&self) -> u32 {
        self.coeffs.n
    }

    /// Profile value at radius `r`.
    pub fn profile(&self, r: f64) -> f64 {
        let base = self.constant - self.quad * r * r;
        if base <= 0.0 {
            return 0.0;
        }
        base.powf(1.0 / (self.coeffs.p - 1.0))
    }

    /// `t^{-n/mu} profile(r t^{-1/mu})`. With [`Convention::SelfSimilar`]
    /// this is the source-type solution of `u_t = Δ(u^p)`.
    pub fn self_similar(&self, r: f64, t: f64) -> Result<f64> {
        if !(t.is_finite() && t > 0.0) {
            return Err(domain(MODULE, format!("time t = {t} must be positive")));
        }
        let mu = self.coeffs.mu;
        let scale = t.powf(-1.0 / mu);
        Ok(t.powf(-self.coeffs.dim() / mu) * self.profile(r * scale))
    }

    /// Radius of the support for `p > 1`; `None` for the positive `p < 1` profiles.
    pub fn support_radius(&self) -> Option<f64> {
        (self.coeffs.p > 1.0).then(|| (self.constant / self.quad).sqrt())
    }

    /// `∫|x|^2 B`.
    pub fn second_moment(&self) -> Result<f64> {
        let (p, n) = (self.coeffs.p, self.coeffs.dim());
        require_finite_moment(p, self.coeffs.n)?;
        let standard = n * (p - 1.0).abs() / ((n + 2.0) * p - n) * self.c_p;
        Ok(standard * self.dilation * self.dilation)
    }

    /// `∫B^p`.
    pub fn p_integral(&self) -> Result<f64> {
        let (p, n) = (self.coeffs.p, self.coeffs.dim());
        require_finite_moment(p, self.coeffs.n)?;
        let standard = 2.0 * p / ((n + 2.0) * p - n) * self.c_p;
        Ok(standard * self.dilation.powf(n * (1.0 - p)))
    }

    /// Rényi entropy `H_p(B)`.
    pub fn entropy(&self) -> Result<f64> {
        Ok(self.p_integral()?.ln() / (1.0 - self.coeffs.p))
    }

    /// p-th Fisher information `I_p(B)`: `2np/|p-1|` for the standard form.
    pub fn fisher(&self) -> Result<f64> {
        let (p, n) = (self.coeffs.p, self.coeffs.dim());
        require_finite_moment(p, self.coeffs.n)?;
        Ok(2.0 * n * p / (p - 1.0).abs() * self.dilation.powf(-self.coeffs.mu))
    }

    pub fn entropy_power(&self) -> Result<f64> {
        Ok((self.coeffs.nu * self.entropy()?).exp())
    }

    /// `N_p(B) I_p(B)`, assembled from the moment formulas rather than the
    /// closed form of [`gamma_const`].
    pub fn upsilon(&self) -> Result<f64> {
        Ok(self.entropy_power()? * self.fisher()?)
    }
}

/// The sharp constant `gamma_{n,p} = N_p(B_p) I_p(B_p)` in closed form.
pub fn gamma_const(p: f64, n: u32) -> Result<f64> {
    require_not_one(p)?;
    let c = Coefficients::new(p, n)?;
    require_finite_moment(p, n)?;
    let nf = c.dim();
    let half = 0.5 * nf;
    let log_ratio = if p > 1.0 {
        let a1 = p / (p - 1.0);
        ln_gamma(a1) - ln_gamma(half + a1)
    } else {
        let b = 1.0 / (1.0 - p);
        if b - half <= 0.0 {
            return Err(domain(MODULE, format!("Gamma argument nonpositive for p = {p}, n = {n}")));
        }
        ln_gamma(b - half) - ln_gamma(b)
    };
    let moment_ratio = ((nf + 2.0) * p - nf) / (2.0 * p);
    let exponent = (2.0 + nf * (p - 1.0)) / (nf * (p - 1.0));
    Ok(nf * PI * 2.0 * p / (p - 1.0).abs()
        * (2.0 / nf * log_ratio).exp()
        * moment_ratio.powf(exponent))
}

/// `gamma_{n,(n-1)/n} = n pi 4 (n-1)^2/(n-2) (Gamma(n/2)/Gamma(n))^{2/n}`.
pub fn sobolev_gamma(n: u32) -> Result<f64> {
    if n <= 2 {
        return Err(domain(MODULE, format!("dimension n = {n} must exceed 2")));
    }
    let nf = f64::from(n);
    Ok(nf * PI * 4.0 * (nf - 1.0).powi(2) / (nf - 2.0)
        * (2.0 / nf * (ln_gamma(0.5 * nf) - ln_gamma(nf))).exp())
}

/// Sharp Sobolev constant `S_n = n(n-2) pi (Gamma(n/2)/Gamma(n))^{2/n}`.
pub fn sobolev_constant(n: u32) -> Result<f64> {
    if n <= 2 {
        return Err(domain(MODULE, format!("dimension n = {n} must exceed 2")));
    }
    let nf = f64::from(n);
    Ok(nf * (nf - 2.0) * PI * (2.0 / nf * (ln_gamma(0.5 * nf) - ln_gamma(nf))).exp())
}

/// The critical Sobolev exponent `2* = 2n/(n-2)`.
pub fn critical_exponent(n: u32) -> Result<f64> {
    if n <= 2 {
        return Err(domain(MODULE, format!("dimension n = {n} must exceed 2")));
    }
    let nf = f64::from(n);
    Ok(2.0 * nf / (nf - 2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use statrs::function::gamma::gamma;

    #[test]
    fn coefficient_examples() {
        let c = coefficients(1.0, 3).unwrap();
        assert_eq!(c.mu, 2.0);
        assert_relative_eq!(c.nu, 2.0 / 3.0);
        let c = coefficients(2.0, 1).unwrap();
        assert_eq!((c.mu, c.nu), (3.0, 3.0));
        assert!(coefficients(1.0 / 3.0, 3).is_err());
        assert!(coefficients(0.2, 3).is_err());
        assert!(coefficients(1.5, 0).is_err());
    }

    #[test]
    fn gamma_evaluator_reference_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-12);
        let mut factorial = 1.0;
        for k in 1..=15u32 {
            assert_relative_eq!(gamma(f64::from(k)), factorial, max_relative = 1e-12);
            factorial *= f64::from(k);
        }
        assert_relative_eq!(ln_gamma(0.5).exp(), PI.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn sphere_areas() {
        assert_relative_eq!(sphere_area(1), 2.0, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn heat_kernel_values() {
        let spec = HeatKernelSpec::new(1, 1.0 / (4.0 * PI)).unwrap();
        assert_relative_eq!(spec.density(0.0), 1.0, max_relative = 1e-15);
        assert_eq!(spec.density(1e3), 0.0);
        assert!(HeatKernelSpec::new(1, 0.0).is_err());
        assert!(HeatKernelSpec::new(2, -1.0).is_err());
        let (_, n) = shannon_heat_entropy_power(&HeatKernelSpec::new(1, 1.0).unwrap());
        assert_relative_eq!(n, 4.0 * PI * E, max_relative = 1e-15);
        let (h, _) = shannon_heat_entropy_power(&HeatKernelSpec::new(2, 1.0 / (4.0 * PI * E)).unwrap());
        assert!(h.abs() < 1e-15);
        assert_relative_eq!(gaussian_density(&[0.3, -0.4], &HeatKernelSpec::new(2, 0.5).unwrap()),
            (-0.125f64).exp() / (2.0 * PI), max_relative = 1e-15);
    }

    #[test]
    fn a_p_closed_forms() {
        // (1 - x^2)_+ over [-1, 1].
        assert_relative_eq!(barenblatt_a(2.0, 1).unwrap(), 4.0 / 3.0, max_relative = 1e-13);
        // (1 + x^2)^{-2} over the line.
        assert_relative_eq!(barenblatt_a(0.5, 1).unwrap(), PI / 2.0, max_relative = 1e-13);
        assert_relative_eq!(
            barenblatt_a(2.0, 3).unwrap(),
            PI.powf(1.5) * gamma(2.0) / gamma(3.5),
            max_relative = 1e-13
        );
        assert!(barenblatt_a(1.0, 2).is_err());
        assert!(barenblatt_a(0.3, 3).is_err());
    }

    #[test]
    fn c_p_examples() {
        assert_relative_eq!(
            barenblatt_c(2.0, 1).unwrap(),
            (4.0f64 / 3.0).powf(-2.0 / 3.0),
            max_relative = 1e-13
        );
    }

    #[test]
    fn profile_center_and_edge() {
        let spec = BarenblattSpec::new(2.0, 2, Convention::Standard).unwrap();
        assert_eq!(spec.profile(spec.c_p.sqrt()), 0.0);
        assert_eq!(spec.profile(10.0), 0.0);
        assert_relative_eq!(spec.profile(0.0), spec.c_p.powf(1.0), max_relative = 1e-15);
        let spec = BarenblattSpec::new(1.5, 3, Convention::Standard).unwrap();
        assert_relative_eq!(spec.profile(0.0), spec.c_p.powf(2.0), max_relative = 1e-14);
        let spec = BarenblattSpec::new(0.8, 1, Convention::SelfSimilar).unwrap();
        for r in [0.0, 0.7, 3.0] {
            assert_eq!(spec.self_similar(r, 1.0).unwrap(), spec.profile(r));
        }
        assert!(spec.self_similar(0.0, 0.0).is_err());
    }

    #[test]
    fn moment_formulas() {
        let spec = BarenblattSpec::new(2.0, 1, Convention::Standard).unwrap();
        // n(p-1)/((n+2)p - n) = 1/5 and 2p/((n+2)p - n) = 4/5 at p = 2, n = 1.
        assert_relative_eq!(spec.second_moment().unwrap(), spec.c_p / 5.0, max_relative = 1e-14);
        assert_relative_eq!(spec.p_integral().unwrap(), 0.8 * spec.c_p, max_relative = 1e-14);
        let spec = BarenblattSpec::new(0.9, 1, Convention::Standard).unwrap();
        assert_relative_eq!(
            spec.second_moment().unwrap(),
            0.1 / 1.7 * spec.c_p,
            max_relative = 1e-12
        );
        assert!(BarenblattSpec::new(0.5, 2, Convention::Standard).unwrap().second_moment().is_err());
    }

    #[test]
    fn consistency_triangle() {
        for &(p, n) in &[(2.0, 1), (1.5, 2), (3.0, 3), (0.9, 1), (0.8, 2), (0.75, 3)] {
            let spec = BarenblattSpec::new(p, n, Convention::Standard).unwrap();
            let m2 = spec.second_moment().unwrap();
            let lhs = if p > 1.0 { spec.c_p - m2 } else { spec.c_p + m2 };
            assert_relative_eq!(lhs, spec.p_integral().unwrap(), max_relative = 1e-10);
        }
    }

    #[test]
    fn fisher_examples() {
        let spec = BarenblattSpec::new(2.0, 1, Convention::Standard).unwrap();
        assert_relative_eq!(spec.fisher().unwrap(), 4.0, max_relative = 1e-15);
        let spec = BarenblattSpec::new(0.9, 1, Convention::Standard).unwrap();
        assert_relative_eq!(spec.fisher().unwrap(), 18.0, max_relative = 1e-12);
    }

    #[test]
    fn gamma_closed_form_matches_assembly() {
        for &(p, n) in &[(2.0, 1), (1.5, 2), (0.9, 1), (2.0 / 3.0 + 0.05, 3), (4.0, 5), (0.8, 4)] {
            let closed = gamma_const(p, n).unwrap();
            for conv in [Convention::Standard, Convention::SelfSimilar] {
                let assembled = BarenblattSpec::new(p, n, conv).unwrap().upsilon().unwrap();
                assert_relative_eq!(closed, assembled, max_relative = 1e-12);
            }
        }
        assert!(gamma_const(0.45, 2).is_err());
        assert!(gamma_const(1.0, 2).is_err());
    }

    #[test]
    fn gamma_positive_over_range() {
        for n in 1..=8u32 {
            let lo = f64::from(n) / f64::from(n + 2);
            for k in 1..40 {
                let p = lo + 0.1 * f64::from(k) * (1.0 - lo) / 4.0 + 0.013;
                if (p - 1.0).abs() < 1e-9 {
                    continue;
                }
                let g = gamma_const(p, n).unwrap();
                assert!(g.is_finite() && g > 0.0, "gamma({p}, {n}) = {g}");
            }
        }
    }

    #[test]
    fn sobolev_relations() {
        for n in 3..=10u32 {
            let nf = f64::from(n);
            let via_gamma = ((nf - 2.0) / (2.0 * nf - 2.0)).powi(2) * gamma_const((nf - 1.0) / nf, n).unwrap();
            let s = sobolev_constant(n).unwrap();
            assert!((via_gamma - s).abs() <= 1e-12 * s, "n = {n}");
            assert_relative_eq!(
                sobolev_gamma(n).unwrap(),
                gamma_const((nf - 1.0) / nf, n).unwrap(),
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            sobolev_constant(3).unwrap(),
            3.0 * PI * (gamma(1.5) / gamma(3.0)).powf(2.0 / 3.0),
            max_relative = 1e-14
        );
        assert!(sobolev_constant(2).is_err());
    }

    #[test]
    fn dilation_between_conventions() {
        for &(p, n) in &[(2.0, 1), (0.9, 1), (1.5, 3)] {
            let std_ = BarenblattSpec::new(p, n, Convention::Standard).unwrap();
            let ss = BarenblattSpec::new(p, n, Convention::SelfSimilar).unwrap();
            let a = ss.dilation;
            for r in [0.0, 0.3, 1.1] {
                let expected = a.powf(-f64::from(n)) * std_.profile(r / a);
                assert_relative_eq!(ss.profile(r), expected, max_relative = 1e-12, epsilon = 1e-300);
            }
        }
    }
}
