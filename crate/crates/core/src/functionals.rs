//! Quadrature of the entropy-type functionals on sampled densities, and the
//! dilations that act on them.
//!
//! Notation: `Z = ∫u^p`, `E_p = Z/(p-1)`, `H_p = log(Z)/(1-p)`,
//! `N_p = exp(nu H_p)`, `F_p = ∫|∇u^p|^2/u`, `I_p = F_p/Z`,
//! `D_p = 2∫u^p (|D^2 g|^2 + (p-1)(Δg)^2)` with `g = q u^{p-1}`, `q = p/(p-1)`,
//! and `Υ_p = N_p I_p`. At `p = 1` the Shannon quantities are used instead.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::grid::{DensityField, Geometry, Grid};
use crate::profiles::{critical_exponent, gamma_const, sobolev_constant, Coefficients};

const MODULE: &str = "functionals";

/// Nodes below `SUPPORT_REL_EPS * max(u)` are outside the support: they add
/// nothing to integrands that involve logarithms or derivatives of pressures.
pub const SUPPORT_REL_EPS: f64 = 1e-12;

fn check_renyi_index(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 0.0) {
        return Err(domain(MODULE, format!("Rényi index p = {p} must be positive")));
    }
    if p == 1.0 {
        return Err(domain(
            MODULE,
            "p = 1 is the Shannon case; use shannon_entropy / shannon_fisher",
        ));
    }
    Ok(())
}

/// Support threshold. For `p < 1` the pressure `u^{p-1}` is a negative power
/// and the fat tails of the profiles carry mass far below any relative
/// cut-off, so only zero or subnormal samples are dropped.
fn support_threshold(f: &DensityField, p: f64) -> f64 {
    if p < 1.0 {
        f64::MIN_POSITIVE
    } else {
        SUPPORT_REL_EPS * f.max()
    }
}

/// `e_p'(u)` up to the constant factor: `u^{p-1}` (or `ln u` at `p = 1`);
/// NaN where it is undefined.
fn potential(u: &[f64], p: f64, threshold: f64) -> Vec<f64> {
    u.iter()
        .map(|&u| {
            if p == 1.0 {
                if u > threshold { u.ln() } else { f64::NAN }
            } else if p > 1.0 || u > threshold {
                u.powf(p - 1.0)
            } else {
                f64::NAN
            }
        })
        .collect()
}

fn power(u: f64, p: f64) -> f64 {
    if p == 2.0 { u * u } else { u.powf(p) }
}

/// `∫u^p`.
pub fn power_integral(f: &DensityField, p: f64) -> f64 {
    let w = f.grid().weights();
    f.values().iter().zip(&w).map(|(&u, w)| w * power(u, p)).sum()
}

pub fn mass(f: &DensityField) -> f64 {
    f.mass()
}

/// `H_p = log(∫f^p)/(1-p)`.
pub fn renyi_entropy(f: &DensityField, p: f64) -> Result<f64> {
    check_renyi_index(p)?;
    let z = power_integral(f, p);
    if !(z > 0.0 && z.is_finite()) {
        return Err(domain(MODULE, format!("∫f^p = {z} must be positive")));
    }
    Ok(z.ln() / (1.0 - p))
}

/// `E_p = ∫f^p/(p-1)`.
pub fn e_p_integral(f: &DensityField, p: f64) -> Result<f64> {
    check_renyi_index(p)?;
    let z = power_integral(f, p);
    if !(z > 0.0) {
        return Err(domain(MODULE, "(p-1) E_p must be positive"));
    }
    Ok(z / (p - 1.0))
}

/// Shannon entropy `-∫f log f`.
pub fn shannon_entropy(f: &DensityField) -> f64 {
    let threshold = SUPPORT_REL_EPS * f.max();
    let w = f.grid().weights();
    -f.values()
        .iter()
        .zip(&w)
        .filter(|(&u, _)| u > threshold)
        .map(|(&u, w)| w * u * u.ln())
        .sum::<f64>()
}

/// Shannon Fisher information `∫|∇f|^2/f`, evaluated as `∫f |∇ log f|^2`.
pub fn shannon_fisher(f: &DensityField) -> Result<f64> {
    gradient_energy(f, 1.0).map(|(sum, _)| sum)
}

/// `∫ u |∇ potential|^2` over the support, and the number of contributing nodes.
fn gradient_energy(f: &DensityField, p: f64) -> Result<(f64, usize)> {
    let threshold = if p == 1.0 {
        SUPPORT_REL_EPS * f.max()
    } else {
        support_threshold(f, p)
    };
    let u = f.values();
    let grid = f.grid();
    let pot = potential(u, p, threshold);
    let grad = grid.derivative(&pot);
    let w = grid.weights();
    let mut sum = 0.0;
    let mut count = 0;
    for i in 0..u.len() {
        if u[i] > threshold && grad[i].is_finite() {
            sum += w[i] * u[i] * grad[i] * grad[i];
            count += 1;
        }
    }
    if count == 0 {
        return Err(domain(MODULE, "density has empty support"));
    }
    Ok((sum, count))
}

/// `∫x u / ∫u` on the line; zero for radial densities.
pub fn centre_of_mass(f: &DensityField) -> f64 {
    if f.grid().is_radial() {
        return 0.0;
    }
    let grid = f.grid();
    let w = grid.weights();
    let moment: f64 = f.values().iter().enumerate().map(|(i, u)| w[i] * grid.coordinate(i) * u).sum();
    moment / f.mass()
}

/// `(F_p, I_p)` with `F_p = q^2 ∫|∇u^{p-1}|^2 u` and `I_p = F_p/∫u^p`.
pub fn fisher_p(f: &DensityField, p: f64) -> Result<(f64, f64)> {
    check_renyi_index(p)?;
    let q = p / (p - 1.0);
    let (energy, _) = gradient_energy(f, p)?;
    let fp = q * q * energy;
    Ok((fp, fp / power_integral(f, p)))
}

/// Pieces of the second dissipation `D_p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissipation {
    /// `D_p = 2∫u^p (|D^2 g|^2 + (p-1)(Δg)^2)`.
    pub d_p: f64,
    /// `∫u^p |D^2 g|^2`.
    pub hessian_sq: f64,
    /// `∫u^p (Δg)^2`.
    pub laplacian_sq: f64,
    /// `-∫u^p Δg`, equal to `F_p` after integration by parts.
    pub fisher_by_parts: f64,
}

/// Second dissipation along `u_t = Δ(u^p)` with `g = e_p'(u)`. In radial
/// coordinates `|D^2 g|^2 = g''^2 + (n-1)(g'/r)^2` and `Δg = g'' + (n-1) g'/r`.
pub fn dissipation(f: &DensityField, p: f64) -> Result<Dissipation> {
    if !(p.is_finite() && p > 0.0) {
        return Err(domain(MODULE, format!("exponent p = {p} must be positive")));
    }
    let grid = f.grid();
    let u = f.values();
    let threshold = if p == 1.0 {
        SUPPORT_REL_EPS * f.max()
    } else {
        support_threshold(f, p)
    };
    let factor = if p == 1.0 { 1.0 } else { p / (p - 1.0) };
    let g: Vec<f64> = potential(u, p, threshold).into_iter().map(|v| factor * v).collect();
    let d1 = grid.derivative(&g);
    let d2 = grid.second_derivative(&g);
    let w = grid.weights();
    let (radial, extra) = match grid.geometry {
        Geometry::Cartesian1d => (false, 0.0),
        Geometry::Radial { dim } => (true, f64::from(dim) - 1.0),
    };

    let (mut hess, mut lap, mut lap_mean, mut count) = (0.0, 0.0, 0.0, 0usize);
    for i in 0..u.len() {
        if !grid.stencil(i).all(|j| u[j] > threshold) {
            continue;
        }
        let (h2, l) = if radial {
            let s = d1[i] / grid.coordinate(i);
            (d2[i] * d2[i] + extra * s * s, d2[i] + extra * s)
        } else {
            (d2[i] * d2[i], d2[i])
        };
        if !(h2.is_finite() && l.is_finite()) {
            continue;
        }
        let weight = w[i] * power(u[i], p);
        hess += weight * h2;
        lap += weight * l * l;
        lap_mean += weight * l;
        count += 1;
    }
    if count == 0 {
        return Err(domain(MODULE, "density has empty support"));
    }
    Ok(Dissipation {
        d_p: 2.0 * (hess + (p - 1.0) * lap),
        hessian_sq: hess,
        laplacian_sq: lap,
        fisher_by_parts: -lap_mean,
    })
}

pub fn d_p(f: &DensityField, p: f64) -> Result<f64> {
    dissipation(f, p).map(|d| d.d_p)
}

/// `N_p = exp(nu H_p)`; at `p = 1` the Shannon power `exp(2H/n)`.
pub fn entropy_power(f: &DensityField, p: f64) -> Result<f64> {
    let c = Coefficients::new(p, f.dim())?;
    let h = if p == 1.0 { shannon_entropy(f) } else { renyi_entropy(f, p)? };
    Ok((c.nu * h).exp())
}

/// `Υ_p = N_p I_p`.
pub fn upsilon(f: &DensityField, p: f64) -> Result<f64> {
    let n = entropy_power(f, p)?;
    let i = if p == 1.0 { shannon_fisher(f)? } else { fisher_p(f, p)?.1 };
    Ok(n * i)
}

/// Mass-preserving dilation `(R_a f)(x) = a^{-n} f(x/a)`: the node values are
/// kept and the grid spacing is multiplied by `a`.
pub fn rescale(f: &DensityField, a: f64) -> Result<DensityField> {
    if !(a.is_finite() && a > 0.0) {
        return Err(domain(MODULE, format!("dilation factor a = {a} must be positive")));
    }
    let factor = a.powi(-(f.dim() as i32));
    let values = f.values().iter().map(|v| v * factor).collect();
    DensityField::new(f.grid().dilated(a), values)
}

/// `U(·,t) = t^{n/mu} u(x t^{1/mu}, t)`, the rescaling that maps the source
/// solution at time `t` back to its time-one profile.
pub fn self_similar_rescale(f: &DensityField, t: f64, p: f64) -> Result<DensityField> {
    if !(t.is_finite() && t > 0.0) {
        return Err(domain(MODULE, format!("time t = {t} must be positive")));
    }
    let c = Coefficients::new(p, f.dim())?;
    rescale(f, t.powf(-1.0 / c.mu))
}

/// All functionals of one density at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSnapshot {
    pub t: f64,
    pub mass: f64,
    pub e_p: f64,
    pub h_p: f64,
    pub n_p: f64,
    pub f_p: f64,
    pub i_p: f64,
    pub d_p: Option<f64>,
    pub upsilon: f64,
}

impl FunctionalSnapshot {
    /// At `p = 1`: `E = ∫u log u`, Shannon `H`, `N = exp(2H/n)`,
    /// `F = I = ∫|∇u|^2/u`.
    pub fn compute(f: &DensityField, p: f64, t: f64, with_dissipation: bool) -> Result<Self> {
        let c = Coefficients::new(p, f.dim())?;
        let mass = f.mass();
        let (e_p, h_p, f_p, i_p) = if p == 1.0 {
            let h = shannon_entropy(f);
            let fisher = shannon_fisher(f)?;
            (-h, h, fisher, fisher)
        } else {
            let z = power_integral(f, p);
            let (fp, _) = fisher_p(f, p)?;
            (z / (p - 1.0), z.ln() / (1.0 - p), fp, fp / z)
        };
        let n_p = (c.nu * h_p).exp();
        let d_p = if with_dissipation { Some(d_p(f, p)?) } else { None };
        Ok(Self {
            t,
            mass,
            e_p,
            h_p,
            n_p,
            f_p,
            i_p,
            d_p,
            upsilon: n_p * i_p,
        })
    }
}

/// Both sides of `∫|∇f^p|^2/f ≥ gamma_{n,p} (∫f^p)^{(2+2n(p-1))/(n(p-1))}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GnComparison {
    pub lhs: f64,
    pub rhs: f64,
    pub upsilon: f64,
    pub gamma: f64,
}

impl GnComparison {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs
    }

    pub fn upsilon_form_holds(&self) -> bool {
        self.upsilon >= self.gamma
    }
}

pub fn gn_lhs_rhs(f: &DensityField, p: f64) -> Result<GnComparison> {
    let n = f.dim();
    let gamma = gamma_const(p, n)?;
    let nf = f64::from(n);
    let (fp, ip) = fisher_p(f, p)?;
    let z = power_integral(f, p);
    let exponent = (2.0 + 2.0 * nf * (p - 1.0)) / (nf * (p - 1.0));
    let rhs = if exponent == 0.0 { gamma } else { gamma * z.powf(exponent) };
    let upsilon = entropy_power(f, p)? * ip;
    Ok(GnComparison { lhs: fp, rhs, upsilon, gamma })
}

/// The Sobolev inequality for a radial `g` with `g^{2*}` integrable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevPair {
    /// `∫|∇g|^2`.
    pub dirichlet: f64,
    /// `S_n (∫g^{2*})^{2/2*}`.
    pub sobolev_rhs: f64,
    /// `∫|∇f^{(n-1)/n}|^2/f` for `f = g^{2*}`.
    pub fisher_of_power: f64,
    /// `((2n-2)/(n-2))^2`.
    pub substitution_factor: f64,
}

impl SobolevPair {
    pub fn deficit(&self) -> f64 {
        self.dirichlet - self.sobolev_rhs
    }

    /// Relative mismatch of `fisher_of_power = factor * dirichlet`.
    pub fn substitution_residual(&self) -> f64 {
        let rhs = self.substitution_factor * self.dirichlet;
        (self.fisher_of_power - rhs).abs() / rhs.abs()
    }
}

pub fn sobolev_pair(g: &DensityField) -> Result<SobolevPair> {
    let n = g.dim();
    let s_n = sobolev_constant(n)?;
    let crit = critical_exponent(n)?;
    let grid: &Grid = g.grid();
    let w = grid.weights();
    let dg = grid.derivative(g.values());
    let dirichlet: f64 = dg.iter().zip(&w).map(|(d, w)| w * d * d).sum();
    let f = DensityField::new(*grid, g.values().iter().map(|v| v.powf(crit)).collect())?;
    let nf = f64::from(n);
    let (fisher_of_power, _) = fisher_p(&f, (nf - 1.0) / nf)?;
    Ok(SobolevPair {
        dirichlet,
        sobolev_rhs: s_n * f.mass().powf(2.0 / crit),
        fisher_of_power,
        substitution_factor: ((2.0 * nf - 2.0) / (nf - 2.0)).powi(2),
    })
}
