//! Lattice specifications and Hamiltonian construction.
//!
//! Everything is expressed in scaled units: couplings and the index ramp in
//! inverse length, the propagation coordinate in length. Under the
//! waveguide/oscillator correspondence the same numbers read as the drive
//! strength g (= C1), the oscillator frequency omega (= alpha) and time
//! (= z), so no separate fields are kept for the two pictures.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Hopping structure of the lattice.
#[derive(Debug, Clone, PartialEq)]
pub enum HoppingMode {
    /// Square-root ladder: site m couples to m+1 with strength C1*sqrt(m+1).
    GlauberFock,
    /// Arbitrary symmetric time-independent hopping matrix kappa.
    Custom(Array2<f64>),
}

/// Lattice geometry and Hamiltonian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    /// Truncation size N of the semi-infinite array. Sites are zero-indexed
    /// m in [0, N-1], matching the Fock labels of the oscillator picture.
    pub num_sites: usize,
    /// First coupling C1, >= 0. Doubles as the oscillator drive g.
    pub coupling_c1: f64,
    /// Propagation-constant slope alpha, >= 0. Doubles as omega.
    pub ramp_alpha: f64,
    pub hopping: HoppingMode,
}

impl LatticeSpec {
    pub fn glauber_fock(num_sites: usize, coupling_c1: f64, ramp_alpha: f64) -> Self {
        Self {
            num_sites,
            coupling_c1,
            ramp_alpha,
            hopping: HoppingMode::GlauberFock,
        }
    }

    pub fn custom(ramp_alpha: f64, kappa: Array2<f64>) -> Self {
        Self {
            num_sites: kappa.nrows(),
            coupling_c1: 0.0,
            ramp_alpha,
            hopping: HoppingMode::Custom(kappa),
        }
    }

    /// The same parameter as `coupling_c1`, read in the oscillator picture.
    pub fn drive_g(&self) -> f64 {
        self.coupling_c1
    }

    /// The same parameter as `ramp_alpha`, read in the oscillator picture.
    pub fn base_frequency(&self) -> f64 {
        self.ramp_alpha
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sites < 2 {
            return Err(Error::InvalidSpec(format!(
                "num_sites must be at least 2, got {}",
                self.num_sites
            )));
        }
        if !self.coupling_c1.is_finite() || self.coupling_c1 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "coupling_c1 must be finite and nonnegative, got {}",
                self.coupling_c1
            )));
        }
        // A negative ramp flips the revival direction and is outside the
        // model; zero is allowed (no revivals, pure delocalization).
        if !self.ramp_alpha.is_finite() || self.ramp_alpha < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "ramp_alpha must be finite and nonnegative, got {}",
                self.ramp_alpha
            )));
        }
        if let HoppingMode::Custom(kappa) = &self.hopping {
            let (r, c) = kappa.dim();
            if r != self.num_sites || c != self.num_sites {
                return Err(Error::InvalidSpec(format!(
                    "custom hopping must be {n}x{n}, got {r}x{c}",
                    n = self.num_sites
                )));
            }
            for ((i, j), &v) in kappa.indexed_iter() {
                if !v.is_finite() {
                    return Err(Error::InvalidSpec(format!(
                        "custom hopping entry ({i},{j}) is not finite"
                    )));
                }
                if kappa[[j, i]] != v {
                    return Err(Error::InvalidSpec(format!(
                        "custom hopping is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Builds the real symmetric lattice Hamiltonian: H[n][n] = n*alpha plus the
/// hopping terms of the spec's mode. Real symmetric is exactly Hermitian,
/// which the integrators rely on.
pub fn build_hamiltonian(spec: &LatticeSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let n = spec.num_sites;
    let mut h = Array2::zeros((n, n));
    for i in 0..n {
        h[[i, i]] = i as f64 * spec.ramp_alpha;
    }
    match &spec.hopping {
        HoppingMode::GlauberFock => {
            for m in 0..n - 1 {
                let c = spec.coupling_c1 * ((m + 1) as f64).sqrt();
                h[[m, m + 1]] = c;
                h[[m + 1, m]] = c;
            }
        }
        HoppingMode::Custom(kappa) => {
            for ((i, j), &v) in kappa.indexed_iter() {
                if i != j {
                    h[[i, j]] += v;
                }
            }
        }
    }
    Ok(h)
}

/// Fabrication geometry: how waveguide separations encode the square-root
/// coupling ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometrySpec {
    /// Separation between waveguides 0 and 1, in micrometers.
    pub d1: f64,
    /// Evanescent coupling decay length, in micrometers.
    pub s: f64,
}

impl GeometrySpec {
    pub fn new(d1: f64, s: f64) -> Result<Self> {
        if !d1.is_finite() || d1 <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "geometry d1 must be finite and positive, got {d1}"
            )));
        }
        if !s.is_finite() || s <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "geometry s must be finite and positive, got {s}"
            )));
        }
        Ok(Self { d1, s })
    }
}

/// Separation d_m = d1 - (s/2) ln m between waveguides m-1 and m.
///
/// m is accepted as a real number >= 1 so callers can probe the continuous
/// profile; the physical table uses integer m.
pub fn spacing_profile(geom: &GeometrySpec, m: f64) -> Result<f64> {
    if !(m >= 1.0) {
        return Err(Error::InvalidSpec(format!(
            "spacing index m must be >= 1 (d_m separates waveguides m-1 and m), got {m}"
        )));
    }
    Ok(geom.d1 - 0.5 * geom.s * m.ln())
}

/// Evanescent coupling C(d) = c1 * exp(-(d - d1)/s) for a separation d.
/// Substituting d_m from `spacing_profile` recovers c1*sqrt(m).
pub fn coupling_from_spacing(geom: &GeometrySpec, c1: f64, d: f64) -> f64 {
    c1 * (-(d - geom.d1) / geom.s).exp()
}

/// Revival period of the ramped lattice, in both unit systems.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RevivalDistance {
    /// Z_rev = 2 pi k C1 / alpha, in scaled units (z * C1).
    pub scaled: f64,
    /// z_rev = 2 pi k / alpha, in the physical length unit of alpha.
    pub physical: f64,
}

/// Distance after which the walk refocuses onto its input site for the k-th
/// time. Requires a strictly positive ramp; without it the light simply
/// delocalizes.
pub fn revival_distance(c1: f64, alpha: f64, k: u32) -> Result<RevivalDistance> {
    if k == 0 {
        return Err(Error::InvalidSpec("revival index k must be at least 1".into()));
    }
    if !c1.is_finite() || c1 < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "coupling c1 must be finite and nonnegative, got {c1}"
        )));
    }
    if !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::NoBlochRevival);
    }
    let physical = 2.0 * std::f64::consts::PI * k as f64 / alpha;
    Ok(RevivalDistance {
        scaled: physical * c1,
        physical,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use std::f64::consts::PI;

    #[test]
    fn square_root_ladder_by_construction() {
        let spec = LatticeSpec::glauber_fock(3, 1.0, 0.0);
        let h = build_hamiltonian(&spec).unwrap();
        assert_eq!(h[[0, 1]], 1.0);
        assert!((h[[1, 2]] - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(h[[0, 0]], 0.0);
        assert_eq!(h[[1, 1]], 0.0);
        assert_eq!(h[[2, 2]], 0.0);
        assert_eq!(h[[0, 2]], 0.0);
    }

    #[test]
    fn ladder_ratio_is_exact() {
        let spec = LatticeSpec::glauber_fock(64, 0.37, 0.2);
        let h = build_hamiltonian(&spec).unwrap();
        for m in 0..63 {
            // built as c1 * sqrt(m + 1), so this holds bitwise
            assert_eq!(h[[m, m + 1]], 0.37 * ((m + 1) as f64).sqrt());
        }
    }

    #[test]
    fn fortieth_coupling_at_fabrication_scale() {
        // c1 = 0.88 inverse cm puts the 40th rung near 5.57 inverse cm.
        let spec = LatticeSpec::glauber_fock(41, 0.88, 0.0);
        let h = build_hamiltonian(&spec).unwrap();
        let c40 = h[[39, 40]];
        assert!((c40 - 0.88 * 40f64.sqrt()).abs() < 1e-12);
        assert!((c40 - 5.5656086818963485).abs() < 1e-12);
        assert!((c40 - 5.57).abs() < 0.005);
    }

    #[test]
    fn ramp_scales_linearly_with_site() {
        let spec = LatticeSpec::glauber_fock(6, 1.0, 0.44);
        let h = build_hamiltonian(&spec).unwrap();
        for i in 0..6 {
            assert!((h[[i, i]] - 0.44 * i as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn custom_hopping_passes_through() {
        let kappa = array![[0.0, 0.3, 0.1], [0.3, 0.0, 0.7], [0.1, 0.7, 0.0]];
        let spec = LatticeSpec::custom(0.5, kappa.clone());
        let h = build_hamiltonian(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(h[[i, j]], kappa[[i, j]]);
                }
            }
        }
        assert_eq!(h[[2, 2]], 1.0);
    }

    #[test]
    fn asymmetric_custom_hopping_is_rejected() {
        let kappa = array![[0.0, 0.3], [0.300000001, 0.0]];
        let spec = LatticeSpec::custom(0.0, kappa);
        assert!(build_hamiltonian(&spec).is_err());
    }

    #[test]
    fn built_matrix_is_exactly_symmetric() {
        let spec = LatticeSpec::glauber_fock(17, 0.88, 0.13);
        let h = build_hamiltonian(&spec).unwrap();
        for i in 0..17 {
            for j in 0..17 {
                assert_eq!(h[[i, j]], h[[j, i]]);
            }
        }
    }

    #[test]
    fn spec_validation_rejects_bad_parameters() {
        assert!(LatticeSpec::glauber_fock(1, 1.0, 0.0).validate().is_err());
        assert!(LatticeSpec::glauber_fock(4, -1.0, 0.0).validate().is_err());
        assert!(LatticeSpec::glauber_fock(4, 1.0, -0.1).validate().is_err());
        assert!(LatticeSpec::glauber_fock(4, f64::NAN, 0.0).validate().is_err());
        assert!(LatticeSpec::glauber_fock(4, 1.0, 0.0).validate().is_ok());
    }

    #[test]
    fn spacing_shrinks_logarithmically() {
        let geom = GeometrySpec::new(10.0, 2.0).unwrap();
        assert_eq!(spacing_profile(&geom, 1.0).unwrap(), 10.0);
        let e2 = std::f64::consts::E * std::f64::consts::E;
        assert!((spacing_profile(&geom, e2).unwrap() - 8.0).abs() < 1e-12);
        for m in 1..30 {
            let a = spacing_profile(&geom, m as f64).unwrap();
            let b = spacing_profile(&geom, (m + 1) as f64).unwrap();
            assert!(b < a);
        }
        assert!(spacing_profile(&geom, 0.0).is_err());
        assert!(spacing_profile(&geom, 0.5).is_err());
        assert!(spacing_profile(&geom, f64::NAN).is_err());
    }

    #[test]
    fn coupling_law_limits() {
        let geom = GeometrySpec::new(10.0, 2.0).unwrap();
        assert_eq!(coupling_from_spacing(&geom, 0.88, 10.0), 0.88);
        assert!(coupling_from_spacing(&geom, 0.88, 400.0) < 1e-80);
    }

    #[test]
    fn geometry_round_trip_recovers_the_ladder() {
        // Exponential coupling law applied to the log spacing profile must
        // reproduce c1*sqrt(m).
        let geom = GeometrySpec::new(12.5, 3.1).unwrap();
        let c1 = 0.88;
        for m in 1..=64u32 {
            let d = spacing_profile(&geom, m as f64).unwrap();
            let c = coupling_from_spacing(&geom, c1, d);
            let expected = c1 * (m as f64).sqrt();
            assert!(
                ((c - expected) / expected).abs() < 1e-12,
                "m={m}: {c} vs {expected}"
            );
        }
    }

    #[test]
    fn geometry_validation() {
        assert!(GeometrySpec::new(0.0, 1.0).is_err());
        assert!(GeometrySpec::new(1.0, 0.0).is_err());
        assert!(GeometrySpec::new(-1.0, 1.0).is_err());
        assert!(GeometrySpec::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn revival_periods() {
        let r = revival_distance(1.0, 0.5, 1).unwrap();
        assert!((r.scaled - 4.0 * PI).abs() < 1e-12);
        let r = revival_distance(0.88, 0.44, 1).unwrap();
        assert!((r.physical - 14.279966607226333).abs() < 1e-12);
        assert!((r.scaled - 4.0 * PI).abs() < 1e-12);
        let r1 = revival_distance(1.3, 0.7, 1).unwrap();
        let r2 = revival_distance(1.3, 0.7, 2).unwrap();
        assert!((r2.scaled - 2.0 * r1.scaled).abs() < 1e-12);
    }

    #[test]
    fn no_ramp_means_no_revival() {
        assert!(matches!(
            revival_distance(1.0, 0.0, 1),
            Err(Error::NoBlochRevival)
        ));
        assert!(revival_distance(1.0, -0.5, 1).is_err());
        assert!(revival_distance(1.0, 0.5, 0).is_err());
    }
}
