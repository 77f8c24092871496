//! Constitutive relations: power-law pressure, pressure potential, relative
//! entropy integrand and the Newtonian viscous stress.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Power-law barotropic pressure `p(ρ) = a ρ^γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureLaw<T> {
    pub a: T,
    pub gamma: T,
}

/// Shear and bulk viscosity coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viscosity<T> {
    pub mu: T,
    pub eta: T,
}

pub type Tensor3<T> = [[T; 3]; 3];

impl<T: Real> PressureLaw<T> {
    pub fn new(a: T, gamma: T) -> Result<Self> {
        if !(a > T::zero()) {
            return Err(Error::config(format!("pressure coefficient a must be positive, got {a}")));
        }
        if !(gamma > T::one()) {
            return Err(Error::config(format!("adiabatic exponent gamma must exceed 1, got {gamma}")));
        }
        Ok(PressureLaw { a, gamma })
    }

    /// `p(ρ)` without the sign check, for hot loops on admissible states.
    #[inline]
    pub fn p(&self, rho: T) -> T {
        self.a * rho.powf(self.gamma)
    }

    #[inline]
    pub fn dp(&self, rho: T) -> T {
        self.a * self.gamma * rho.powf(self.gamma - T::one())
    }

    #[inline]
    pub fn sound_speed(&self, rho: T) -> T {
        self.dp(rho).sqrt()
    }

    /// `H(ρ) = a ρ^γ / (γ - 1)`, gauge `H(0) = 0`.
    #[inline]
    pub fn h(&self, rho: T) -> T {
        self.a * rho.powf(self.gamma) / (self.gamma - T::one())
    }

    /// `H'(ρ) = a γ ρ^{γ-1} / (γ - 1)`.
    #[inline]
    pub fn dh(&self, rho: T) -> T {
        self.a * self.gamma * rho.powf(self.gamma - T::one()) / (self.gamma - T::one())
    }

    /// Bregman divergence of `H` at `r`, unchecked.
    ///
    /// Written as `a r^γ/(γ−1) · [(1+x)^γ − 1 − γx]` with `x = (ρ−r)/r`; the
    /// bracket is summed as a binomial series for small `|x|`, where the
    /// direct form cancels.
    pub fn relent(&self, rho: T, r: T) -> T {
        let one = T::one();
        let g = self.gamma;
        let x = (rho - r) / r;
        let bracket = if x.abs() < T::lit(0.25) {
            let mut c = g * (g - one) / T::lit(2.0);
            let mut xk = x * x;
            let mut sum = T::zero();
            let mut k = T::lit(2.0);
            for _ in 0..200 {
                let term = c * xk;
                sum = sum + term;
                if term.abs() <= T::epsilon() * sum.abs() {
                    break;
                }
                c = c * (g - k) / (k + one);
                xk = xk * x;
                k = k + one;
            }
            sum
        } else {
            (one + x).powf(g) - one - g * x
        };
        self.a * r.powf(g) / (g - one) * bracket
    }
}

impl<T: Real> Default for PressureLaw<T> {
    fn default() -> Self {
        PressureLaw { a: T::one(), gamma: T::lit(2.0) }
    }
}

impl<T: Real> Viscosity<T> {
    pub fn new(mu: T, eta: T) -> Result<Self> {
        if !(mu > T::zero()) {
            return Err(Error::config(format!("shear viscosity mu must be positive, got {mu}")));
        }
        if !(eta >= T::zero()) {
            return Err(Error::config(format!("bulk viscosity eta must be nonnegative, got {eta}")));
        }
        Ok(Viscosity { mu, eta })
    }

    /// Effective viscosity of the one-dimensional limit, `4μ/3 + η`.
    #[inline]
    pub fn nu(&self) -> T {
        T::lit(4.0) / T::lit(3.0) * self.mu + self.eta
    }

    /// Coefficient of `∇ div` in `div S(∇u) = μΔu + (μ/3 + η)∇ div u`.
    #[inline]
    pub fn lame_second(&self) -> T {
        self.mu / T::lit(3.0) + self.eta
    }
}

impl<T: Real> Default for Viscosity<T> {
    fn default() -> Self {
        Viscosity { mu: T::lit(0.1), eta: T::zero() }
    }
}

fn check_density<T: Real>(rho: T) -> Result<()> {
    if rho < T::zero() || !rho.is_finite() {
        return Err(Error::domain(format!("density must be nonnegative and finite, got {rho}")));
    }
    Ok(())
}

pub fn pressure<T: Real>(rho: T, law: &PressureLaw<T>) -> Result<T> {
    check_density(rho)?;
    Ok(law.p(rho))
}

pub fn pressure_prime<T: Real>(rho: T, law: &PressureLaw<T>) -> Result<T> {
    check_density(rho)?;
    // finite at zero for every gamma > 1; only p'' degenerates there
    Ok(law.dp(rho))
}

pub fn potential_h<T: Real>(rho: T, law: &PressureLaw<T>) -> Result<T> {
    check_density(rho)?;
    Ok(law.h(rho))
}

pub fn potential_h_prime<T: Real>(rho: T, law: &PressureLaw<T>) -> Result<T> {
    check_density(rho)?;
    Ok(law.dh(rho))
}

/// `H(ρ) - H'(r)(ρ - r) - H(r)`, nonnegative by convexity.
pub fn relent_integrand<T: Real>(rho: T, r: T, law: &PressureLaw<T>) -> Result<T> {
    check_density(rho)?;
    if !(r > T::zero()) {
        return Err(Error::domain(format!("reference density must be positive, got {r}")));
    }
    Ok(law.relent(rho, r))
}

/// Newtonian stress `μ(∇u + ∇uᵗ - ⅔ div u I) + η div u I`.
///
/// `grad_u[a][b] = ∂_b u_a`.
#[inline]
pub fn stress<T: Real>(grad_u: &Tensor3<T>, visc: &Viscosity<T>) -> Tensor3<T> {
    let div = grad_u[0][0] + grad_u[1][1] + grad_u[2][2];
    let iso = (self::two_thirds::<T>() * -visc.mu + visc.eta) * div;
    let mut s = [[T::zero(); 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            s[a][b] = visc.mu * (grad_u[a][b] + grad_u[b][a]);
        }
        s[a][a] = s[a][a] + iso;
    }
    s
}

/// `S(∇u):∇u`.
#[inline]
pub fn stress_contraction<T: Real>(grad_u: &Tensor3<T>, visc: &Viscosity<T>) -> T {
    let s = stress(grad_u, visc);
    let mut acc = T::zero();
    for a in 0..3 {
        for b in 0..3 {
            acc = acc + s[a][b] * grad_u[a][b];
        }
    }
    acc
}

#[inline]
fn two_thirds<T: Real>() -> T {
    T::lit(2.0) / T::lit(3.0)
}
