//! Solutes in a background fluid: effective (displaced-volume) masses and the
//! schematic lattice scenarios contrasting solute-only and all-particle
//! accounting.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, CslError, Result};
use crate::geom::Vec3;
use crate::model::{Configuration, Species, Superposition};
use crate::Real;

/// Density of water, kg m^-3.
pub const WATER_DENSITY: f64 = 997.0;
/// Estimated density of rod cytosol, kg m^-3.
pub const CYTOSOL_DENSITY: f64 = 1100.0;
/// Density of metallic sodium, kg m^-3.
pub const SODIUM_METAL_DENSITY: f64 = 968.0;
/// Radius of a neutral sodium atom, pm.
pub const SODIUM_ATOM_RADIUS_PM: f64 = 227.0;
/// Effective radius of aqueous Na+ used in the density ratio, pm. The quoted
/// radius is 218 pm; 219 pm is the value the published ratio uses.
pub const SODIUM_SOLVATED_RADIUS_PM: f64 = 219.0;
pub const SODIUM_SOLVATED_RADIUS_QUOTED_PM: f64 = 218.0;
/// Typical protein density range, kg m^-3.
pub const PROTEIN_DENSITY_RANGE: (f64, f64) = (1200.0, 1400.0);

/// Effective-mass factor for proteins (alpha-subunits) in cytoplasm.
pub const PROTEIN_FACTOR: f64 = 0.3;
/// Effective-mass factor for aqueous sodium ions.
pub const SODIUM_FACTOR: f64 = 0.08;
/// Factor applied to GMP; its term is negligible either way.
pub const GMP_FACTOR: f64 = 0.3;

/// `m' / m = 1 - rho_f / rho_p` for a particle displacing its own volume of fluid.
///
/// Negative values (particle lighter than the fluid it displaces) are allowed:
/// rates depend on the square of the factor.
pub fn effective_mass_factor<T: Real>(particle_density: T, fluid_density: T) -> Result<T> {
    if !(particle_density > T::zero() && particle_density.is_finite()) {
        return Err(invalid(
            "particle_density",
            particle_density.to_f64_lossy(),
            "must be positive",
        ));
    }
    if !(fluid_density >= T::zero() && fluid_density.is_finite()) {
        return Err(invalid(
            "fluid_density",
            fluid_density.to_f64_lossy(),
            "must be non-negative",
        ));
    }
    Ok(T::one() - fluid_density / particle_density)
}

/// Crude effective density of a solvated ion: the metal density rescaled by
/// the cube of the atomic-to-solvated radius ratio.
pub fn sodium_effective_density<T: Real>(r_solvated: T, r_atom: T, metal_density: T) -> Result<T> {
    for (name, v) in [("r_solvated", r_solvated), ("r_atom", r_atom)] {
        if !(v > T::zero() && v.is_finite()) {
            return Err(invalid(name, v.to_f64_lossy(), "radius must be positive"));
        }
    }
    if !(metal_density > T::zero()) {
        return Err(invalid(
            "metal_density",
            metal_density.to_f64_lossy(),
            "must be positive",
        ));
    }
    Ok((r_atom / r_solvated).powi(3) * metal_density)
}

/// Displaced-volume model `m'_i = m_i - rho V`, written as a density ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMassModel<T> {
    /// kg m^-3
    pub particle_density: T,
    /// kg m^-3
    pub fluid_density: T,
}

impl<T: Real> EffectiveMassModel<T> {
    pub fn factor(&self) -> Result<T> {
        effective_mass_factor(self.particle_density, self.fluid_density)
    }

    pub fn effective_mass(&self, mass: T) -> Result<T> {
        Ok(self.factor()? * mass)
    }
}

/// Cubic lattice inside a box, all lengths in units of `r_C`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumBox<T> {
    /// Correlation length in cm; converts lattice units to positions.
    pub r_c: T,
    pub side: T,
    pub spacing: T,
    /// Maximum per-axis offset from the lattice site. Only the displacement
    /// scenario uses it; each branch draws its own offsets.
    pub jitter: T,
    /// Background ("blue") particles.
    pub fluid: Species<T>,
    /// Solute or tagged ("red") particles.
    pub solute: Species<T>,
    /// Number of fluid particles; `None` fills every remaining site.
    pub n_fluid: Option<usize>,
    pub seed: u64,
}

impl<T: Real> MediumBox<T> {
    /// Box of `side` r_C with the default spacing of `r_C / 5` and no jitter.
    pub fn new(r_c: T, side: T, fluid: Species<T>, solute: Species<T>, seed: u64) -> Self {
        Self {
            r_c,
            side,
            spacing: T::of(0.2),
            jitter: T::zero(),
            fluid,
            solute,
            n_fluid: None,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("r_c", self.r_c), ("side", self.side), ("spacing", self.spacing)] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(invalid(name, v.to_f64_lossy(), "must be positive"));
            }
        }
        if !(self.jitter >= T::zero()) {
            return Err(invalid("jitter", self.jitter.to_f64_lossy(), "must be non-negative"));
        }
        Ok(())
    }

    pub fn sites_per_axis(&self) -> usize {
        (self.side / self.spacing).floor().to_usize().unwrap_or(0)
    }

    /// Lattice sites in units of `r_C`, ordered by x, then y, then z, so the
    /// leading sites form the left face.
    pub fn sites(&self) -> Vec<Vec3<T>> {
        let n = self.sites_per_axis();
        let c = |i: usize| (T::of(i as f64) + T::of(0.5)) * self.spacing;
        let mut out = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    out.push([c(i), c(j), c(k)]);
                }
            }
        }
        out
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }

    fn to_cm(&self, x: &Vec3<T>) -> Vec3<T> {
        [x[0] * self.r_c, x[1] * self.r_c, x[2] * self.r_c]
    }

    fn jittered<R: Rng>(&self, x: &Vec3<T>, rng: &mut R) -> Vec3<T> {
        if self.jitter == T::zero() {
            return *x;
        }
        let mut off = || T::of(rng.random_range(-1.0..=1.0)) * self.jitter;
        [x[0] + off(), x[1] + off(), x[2] + off()]
    }

    /// Occupied sites (ascending site order) for `required` particles.
    fn occupied<R: Rng>(&self, sites: usize, required: usize, rng: &mut R) -> Result<Vec<usize>> {
        if sites < required {
            return Err(CslError::BoxTooSmall { sites, required });
        }
        if required == sites {
            return Ok((0..sites).collect());
        }
        let mut chosen = index::sample(rng, sites, required).into_vec();
        chosen.sort_unstable();
        Ok(chosen)
    }

    fn required(&self, n_solutes: usize, sites: usize) -> usize {
        match self.n_fluid {
            Some(f) => n_solutes + f,
            None => sites.max(n_solutes),
        }
    }
}

/// Species swap on a fixed set of sites: branch A has the solutes on the
/// left-most occupied sites, branch B has them scattered. Both branches occupy
/// identical positions, so with equal solute and fluid masses their smeared
/// densities coincide.
pub fn generate_swap_scenario<T: Real>(medium: &MediumBox<T>, n_solutes: usize) -> Result<Superposition<T>> {
    medium.validate()?;
    let sites = medium.sites();
    let mut rng = medium.rng(0);
    let occupied = medium.occupied(sites.len(), medium.required(n_solutes, sites.len()), &mut rng)?;
    let mut scattered = vec![false; occupied.len()];
    for i in index::sample(&mut rng, occupied.len(), n_solutes) {
        scattered[i] = true;
    }
    let mut a = Configuration::new();
    let mut b = Configuration::new();
    for (slot, &site) in occupied.iter().enumerate() {
        let x = medium.to_cm(&sites[site]);
        let in_a = if slot < n_solutes { &medium.solute } else { &medium.fluid };
        let in_b = if scattered[slot] { &medium.solute } else { &medium.fluid };
        a.push(in_a, x)?;
        b.push(in_b, x)?;
    }
    Ok(Superposition::balanced(a, b))
}

/// Tagged particles concentrated on the left in branch A and diffused in
/// branch B. Branch B re-draws every particle's site, so individual particles
/// move far while (at full occupancy) the set of occupied sites is unchanged
/// up to the jitter. Particle `i` is the same molecule in both branches:
/// tagged ones first, then the fluid.
pub fn generate_displacement_scenario<T: Real>(
    medium: &MediumBox<T>,
    n_tagged: usize,
) -> Result<Superposition<T>> {
    medium.validate()?;
    let sites = medium.sites();
    let required = medium.required(n_tagged, sites.len());

    let mut rng_a = medium.rng(0);
    let occ_a = medium.occupied(sites.len(), required, &mut rng_a)?;
    let mut a = Configuration::new();
    for (slot, &site) in occ_a.iter().enumerate() {
        let s = if slot < n_tagged { &medium.solute } else { &medium.fluid };
        a.push(s, medium.to_cm(&medium.jittered(&sites[site], &mut rng_a)))?;
    }
    if n_tagged == 0 {
        return Ok(Superposition::balanced(a.clone(), a));
    }

    let mut rng_b = medium.rng(1);
    let occ_b = medium.occupied(sites.len(), required, &mut rng_b)?;
    // Random assignment of particles to the re-drawn sites.
    let assignment = index::sample(&mut rng_b, occ_b.len(), occ_b.len()).into_vec();
    let mut b = Configuration::new();
    for (particle, &slot) in assignment.iter().enumerate() {
        let s = if particle < n_tagged { &medium.solute } else { &medium.fluid };
        b.push(s, medium.to_cm(&medium.jittered(&sites[occ_b[slot]], &mut rng_b)))?;
    }
    Ok(Superposition::balanced(a, b))
}

/// Keeps only particles of the named species in both branches.
pub fn restrict_to_species<T: Real>(sup: &Superposition<T>, name: &str) -> Result<Superposition<T>> {
    let keep = |c: &Configuration<T>| -> Result<Configuration<T>> {
        let mut out = Configuration::new();
        for (s, x) in c.iter().filter(|(s, _)| s.name == name) {
            out.push(s, *x)?;
        }
        Ok(out)
    };
    Ok(Superposition {
        comp_a: keep(&sup.comp_a)?,
        comp_b: keep(&sup.comp_b)?,
        amp_a: sup.amp_a,
        amp_b: sup.amp_b,
    })
}

/// Largest distance from a branch-B particle to the nearest branch-A particle,
/// and vice versa, in units of `r_C`.
pub fn nearest_neighbor_mismatch<T: Real>(sup: &Superposition<T>, r_c: T) -> T {
    let inv = T::one() / r_c;
    let worst = |from: &Configuration<T>, to: &Configuration<T>| {
        from.positions()
            .map(|x| {
                to.positions()
                    .map(|y| crate::geom::dist(x, y) * inv)
                    .fold(T::infinity(), T::min)
            })
            .fold(T::zero(), T::max)
    };
    worst(&sup.comp_a, &sup.comp_b).max(worst(&sup.comp_b, &sup.comp_a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CollapseParams;
    use crate::rate::gamma_exact;
    use approx::assert_relative_eq;

    #[test]
    fn effective_mass_factors() {
        assert_eq!(effective_mass_factor(1078.0, 0.0).unwrap(), 1.0);
        assert_eq!(effective_mass_factor(997.0, 997.0).unwrap(), 0.0);
        assert_relative_eq!(effective_mass_factor(1078.0, 997.0).unwrap(), 0.0751, epsilon = 1e-4);
        assert_relative_eq!(effective_mass_factor(1400.0, 997.0).unwrap(), 0.288, epsilon = 1e-3);
        assert!(effective_mass_factor(800.0, 997.0).unwrap() < 0.0);
        assert!(effective_mass_factor(0.0, 997.0).is_err());
        assert!(effective_mass_factor(1000.0, -1.0).is_err());
        let m = EffectiveMassModel {
            particle_density: 1078.0,
            fluid_density: 997.0,
        };
        assert_relative_eq!(m.effective_mass(23.0).unwrap(), 23.0 * (1.0 - 997.0 / 1078.0));
    }

    #[test]
    fn sodium_density_estimates() {
        assert_eq!(sodium_effective_density(227.0, 227.0, 968.0).unwrap(), 968.0);
        let d = sodium_effective_density(SODIUM_SOLVATED_RADIUS_PM, SODIUM_ATOM_RADIUS_PM, SODIUM_METAL_DENSITY).unwrap();
        assert!((d - 1078.0).abs() < 1.0, "{d}");
        let d = sodium_effective_density(SODIUM_SOLVATED_RADIUS_QUOTED_PM, SODIUM_ATOM_RADIUS_PM, SODIUM_METAL_DENSITY).unwrap();
        assert!((d - 1092.0).abs() < 1.0, "{d}");
        assert!(sodium_effective_density(0.0, 227.0, 968.0).is_err());
    }

    fn small_box(side: f64, spacing: f64) -> MediumBox<f64> {
        MediumBox {
            spacing,
            ..MediumBox::new(
                1.0,
                side,
                Species::new("water", 18.0).unwrap(),
                Species::new("Na", 18.0).unwrap(),
                7,
            )
        }
    }

    #[test]
    fn swap_positions_identical() {
        let m = small_box(2.0, 0.2);
        let s = generate_swap_scenario(&m, 50).unwrap();
        let pa: Vec<_> = s.comp_a.positions().collect();
        let pb: Vec<_> = s.comp_b.positions().collect();
        assert_eq!(pa, pb);
        assert_eq!(s.comp_a.len(), 1000);
        let count = |c: &Configuration<f64>| c.iter().filter(|(sp, _)| sp.name == "Na").count();
        assert_eq!(count(&s.comp_a), 50);
        assert_eq!(count(&s.comp_b), 50);
        s.check_species().unwrap();
    }

    #[test]
    fn swap_zero_solutes_is_trivial() {
        let m = small_box(1.0, 0.25);
        let s = generate_swap_scenario(&m, 0).unwrap();
        assert_eq!(s.comp_a, s.comp_b);
        let p = CollapseParams::from_lambda(1.0, 1.0).unwrap();
        assert_eq!(gamma_exact(&s, &p).unwrap().rate, 0.0);
    }

    #[test]
    fn box_too_small() {
        let mut m = small_box(1.0, 0.5);
        assert!(matches!(generate_swap_scenario(&m, 9), Err(CslError::BoxTooSmall { sites: 8, .. })));
        m.n_fluid = Some(6);
        assert!(matches!(
            generate_displacement_scenario(&m, 3),
            Err(CslError::BoxTooSmall { sites: 8, required: 9 })
        ));
    }

    #[test]
    fn generation_is_deterministic() {
        let mut m = small_box(2.0, 0.25);
        m.jitter = 0.02;
        assert_eq!(generate_displacement_scenario(&m, 20).unwrap(), generate_displacement_scenario(&m, 20).unwrap());
        assert_eq!(generate_swap_scenario(&m, 20).unwrap(), generate_swap_scenario(&m, 20).unwrap());
        let mut other = m.clone();
        other.seed += 1;
        assert_ne!(generate_displacement_scenario(&m, 20).unwrap(), generate_displacement_scenario(&other, 20).unwrap());
    }

    #[test]
    fn displacement_no_tags_is_identical() {
        let mut m = small_box(1.0, 0.25);
        m.jitter = 0.02;
        let s = generate_displacement_scenario(&m, 0).unwrap();
        assert_eq!(s.comp_a, s.comp_b);
    }

    #[test]
    fn displacement_mismatch_bounded_by_jitter() {
        let mut m = small_box(2.0, 0.2);
        m.jitter = 0.02;
        let s = generate_displacement_scenario(&m, 30).unwrap();
        let mm = nearest_neighbor_mismatch(&s, 1.0);
        assert!(mm <= 2.0 * 0.02 * 3f64.sqrt() + 1e-12, "{mm}");
        let tagged = restrict_to_species(&s, "Na").unwrap();
        assert_eq!(tagged.comp_a.len(), 30);
        assert_eq!(tagged.comp_b.len(), 30);
    }
}
