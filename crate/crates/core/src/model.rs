//! Collapse-model parameters, particle configurations and the two Gaussian kernels.
//!
//! Units throughout: lengths in cm, masses in daltons, rates in s^-1, and the
//! coupling `gamma` in cm^3 s^-1. The reference mass `m_N` is one nucleon,
//! taken as exactly 1 Da. Engines rescale positions by `r_C` internally; the
//! kernels here are the physical (cm^-3) ones.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CslError, Result};
use crate::geom::{self, Vec3};
use crate::Real;

/// Reference nucleon mass in daltons.
pub const NUCLEON_MASS_DA: f64 = 1.0;

/// `8 pi^{3/2}`, the factor linking `gamma` and `lambda`.
pub fn eight_pi_three_halves<T: Real>() -> T {
    T::of(8.0) * T::PI().powf(T::of(1.5))
}

fn check_r_c<T: Real>(r_c: T) -> Result<()> {
    if r_c > T::zero() && r_c.is_finite() {
        Ok(())
    } else {
        Err(invalid("r_C", r_c.to_f64_lossy(), "must be positive and finite"))
    }
}

/// Collapse rate `lambda = gamma / (8 pi^{3/2} r_C^3)`.
pub fn lambda_from_gamma<T: Real>(gamma: T, r_c: T) -> Result<T> {
    check_r_c(r_c)?;
    Ok(gamma / (eight_pi_three_halves::<T>() * r_c.powi(3)))
}

/// Inverse of [`lambda_from_gamma`].
pub fn gamma_from_lambda<T: Real>(lambda: T, r_c: T) -> Result<T> {
    check_r_c(r_c)?;
    Ok(lambda * eight_pi_three_halves::<T>() * r_c.powi(3))
}

/// The model parameter pair `(gamma, r_C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollapseParams<T> {
    gamma: T,
    r_c: T,
}

impl<T: Real> CollapseParams<T> {
    pub fn new(gamma: T, r_c: T) -> Result<Self> {
        check_r_c(r_c)?;
        if !(gamma >= T::zero() && gamma.is_finite()) {
            return Err(invalid(
                "gamma",
                gamma.to_f64_lossy(),
                "must be non-negative and finite",
            ));
        }
        Ok(Self { gamma, r_c })
    }

    pub fn from_lambda(lambda: T, r_c: T) -> Result<Self> {
        Self::new(gamma_from_lambda(lambda, r_c)?, r_c)
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn r_c(&self) -> T {
        self.r_c
    }

    pub fn lambda(&self) -> T {
        self.gamma / (eight_pi_three_halves::<T>() * self.r_c.powi(3))
    }

    pub fn m_n(&self) -> T {
        T::of(NUCLEON_MASS_DA)
    }

    /// `gamma / r_C^3 = 8 pi^{3/2} lambda`: the coupling once lengths are
    /// measured in units of `r_C`.
    pub fn kappa(&self) -> T {
        self.gamma / self.r_c.powi(3)
    }

    /// Same `r_C`, coupling rescaled so that `lambda` becomes `lambda * factor`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        Self::new(self.gamma * factor, self.r_c)
    }
}

/// Smearing function `g(x) = (2 pi r_C^2)^{-3/2} exp(-x^2 / (2 r_C^2))`, in cm^-3.
pub fn smearing_g<T: Real>(x: &Vec3<T>, r_c: T) -> Result<T> {
    check_r_c(r_c)?;
    let two = T::of(2.0);
    let s2 = r_c * r_c;
    Ok((two * T::PI() * s2).powf(-T::of(1.5)) * (-geom::norm2(x) / (two * s2)).exp())
}

/// Pair kernel `G(x) = (4 pi r_C^2)^{-3/2} exp(-x^2 / (4 r_C^2))`, the
/// self-convolution of [`smearing_g`].
pub fn pair_kernel<T: Real>(x: &Vec3<T>, r_c: T) -> Result<T> {
    check_r_c(r_c)?;
    let four = T::of(4.0);
    let s2 = r_c * r_c;
    Ok((four * T::PI() * s2).powf(-T::of(1.5)) * (-geom::norm2(x) / (four * s2)).exp())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Species<T> {
    pub name: String,
    /// Mass in daltons.
    pub mass: T,
}

impl<T: Real> Species<T> {
    pub fn new(name: impl Into<String>, mass: T) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(invalid("mass", mass.to_f64_lossy(), "must be positive"));
        }
        Ok(Self {
            name: name.into(),
            mass,
        })
    }

    pub fn nucleon() -> Self {
        Self {
            name: "nucleon".into(),
            mass: T::of(NUCLEON_MASS_DA),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle<T> {
    /// Index into the owning configuration's species table.
    pub species: usize,
    /// Position in cm.
    pub position: Vec3<T>,
}

/// An ordered list of point particles with an interned species table.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Configuration<T> {
    species: Vec<Species<T>>,
    particles: Vec<Particle<T>>,
}

impl<T: Real> Configuration<T> {
    pub fn new() -> Self {
        Self {
            species: Vec::new(),
            particles: Vec::new(),
        }
    }

    /// Appends a particle. Species are interned by name; re-using a name with a
    /// different mass is rejected.
    pub fn push(&mut self, species: &Species<T>, position: Vec3<T>) -> Result<()> {
        if !geom::is_finite(&position) {
            return Err(invalid(
                "position",
                f64::NAN,
                "coordinates must be finite",
            ));
        }
        let idx = match self.species.iter().position(|s| s.name == species.name) {
            Some(i) if self.species[i].mass == species.mass => i,
            Some(_) => {
                return Err(invalid(
                    "mass",
                    species.mass.to_f64_lossy(),
                    "species name already registered with another mass",
                ))
            }
            None => {
                self.species.push(species.clone());
                self.species.len() - 1
            }
        };
        self.particles.push(Particle {
            species: idx,
            position,
        });
        Ok(())
    }

    pub fn with(mut self, species: &Species<T>, position: Vec3<T>) -> Result<Self> {
        self.push(species, position)?;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn species(&self) -> &[Species<T>] {
        &self.species
    }

    pub fn particles(&self) -> &[Particle<T>] {
        &self.particles
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Species<T>, &Vec3<T>)> + '_ {
        self.particles
            .iter()
            .map(move |p| (&self.species[p.species], &p.position))
    }

    pub fn positions(&self) -> impl Iterator<Item = &Vec3<T>> + '_ {
        self.particles.iter().map(|p| &p.position)
    }

    pub fn masses(&self) -> Vec<T> {
        self.iter().map(|(s, _)| s.mass).collect()
    }

    /// Sorted species masses; two components describe the same particles iff
    /// these agree.
    pub fn mass_multiset(&self) -> Vec<T> {
        let mut m = self.masses();
        m.sort_by(|a, b| a.partial_cmp(b).expect("finite masses"));
        m
    }

    pub fn total_mass(&self) -> T {
        self.iter().map(|(s, _)| s.mass).sum()
    }

    /// Returns a copy with every position transformed by `f`.
    pub fn map_positions(&self, mut f: impl FnMut(&Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            species: self.species.clone(),
            particles: self
                .particles
                .iter()
                .map(|p| Particle {
                    species: p.species,
                    position: f(&p.position),
                })
                .collect(),
        }
    }

    pub fn translated(&self, by: &Vec3<T>) -> Self {
        self.map_positions(|p| geom::add(p, by))
    }

    /// Reorders particles: output particle `i` is input particle `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            species: self.species.clone(),
            particles: order.iter().map(|&i| self.particles[i]).collect(),
        }
    }
}

/// Two-branch superposition `amp_a |A> + amp_b |B>`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Superposition<T> {
    pub comp_a: Configuration<T>,
    pub comp_b: Configuration<T>,
    pub amp_a: Complex<T>,
    pub amp_b: Complex<T>,
}

impl<T: Real> Superposition<T> {
    pub fn new(
        comp_a: Configuration<T>,
        comp_b: Configuration<T>,
        amp_a: Complex<T>,
        amp_b: Complex<T>,
    ) -> Result<Self> {
        let norm = amp_a.norm_sqr() + amp_b.norm_sqr();
        if !((norm - T::one()).abs() <= T::norm_tolerance()) {
            return Err(CslError::NotNormalized {
                norm: norm.to_f64_lossy(),
            });
        }
        Ok(Self {
            comp_a,
            comp_b,
            amp_a,
            amp_b,
        })
    }

    /// Equal real amplitudes `1/sqrt(2)`.
    pub fn balanced(comp_a: Configuration<T>, comp_b: Configuration<T>) -> Self {
        let h = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        Self {
            comp_a,
            comp_b,
            amp_a: h,
            amp_b: h,
        }
    }

    /// Real amplitudes with `|amp_a|^2 = weight_a`.
    pub fn with_weight(
        comp_a: Configuration<T>,
        comp_b: Configuration<T>,
        weight_a: T,
    ) -> Result<Self> {
        if !(weight_a >= T::zero() && weight_a <= T::one()) {
            return Err(invalid(
                "weight_a",
                weight_a.to_f64_lossy(),
                "must lie in [0, 1]",
            ));
        }
        Ok(Self {
            comp_a,
            comp_b,
            amp_a: Complex::new(weight_a.sqrt(), T::zero()),
            amp_b: Complex::new((T::one() - weight_a).sqrt(), T::zero()),
        })
    }

    pub fn swapped(&self) -> Self {
        Self {
            comp_a: self.comp_b.clone(),
            comp_b: self.comp_a.clone(),
            amp_a: self.amp_b,
            amp_b: self.amp_a,
        }
    }

    /// Both branches must contain the same multiset of species masses.
    pub fn check_species(&self) -> Result<()> {
        let a = self.comp_a.mass_multiset();
        let b = self.comp_b.mass_multiset();
        if a == b {
            Ok(())
        } else {
            Err(CslError::SpeciesMismatch {
                a: a.iter().map(|m| m.to_f64_lossy()).collect(),
                b: b.iter().map(|m| m.to_f64_lossy()).collect(),
            })
        }
    }

    pub fn total_mass(&self) -> T {
        self.comp_a.total_mass()
    }

    /// Applies the same position map to both branches.
    pub fn map_positions(&self, mut f: impl FnMut(&Vec3<T>) -> Vec3<T>) -> Self {
        Self {
            comp_a: self.comp_a.map_positions(&mut f),
            comp_b: self.comp_b.map_positions(&mut f),
            amp_a: self.amp_a,
            amp_b: self.amp_b,
        }
    }
}
