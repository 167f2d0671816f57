//! Array layout, user placement and field-region bookkeeping.
//!
//! The array is a modular uniform linear array on the y-axis, centred on the
//! origin. Module `n` and antenna `m` indices run over symmetric unit-step
//! grids `{-(N-1)/2, ..., (N-1)/2}`; for even counts these are half-integers,
//! which keeps the aperture `[(N-1)S + (M-1)]d` valid for every count.
//! Element `(n, m)` sits at `(0, (nS + m)d)`.

use rand::Rng;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s (exact SI value).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Geometry of a modular array.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    n_modules: usize,
    antennas_per_module: usize,
    separation_factor: f64,
    carrier_frequency: f64,
    element_spacing: f64,
    reference_gain: f64,
}

impl ArrayConfig {
    /// Array with half-wavelength element spacing and unit reference gain.
    pub fn new(
        n_modules: usize,
        antennas_per_module: usize,
        separation_factor: f64,
        carrier_frequency: f64,
    ) -> Result<Self> {
        if !(carrier_frequency > 0.0 && carrier_frequency.is_finite()) {
            return Err(Error::config(
                "array.carrier_frequency",
                format!("must be positive and finite, got {carrier_frequency}"),
            ));
        }
        let spacing = SPEED_OF_LIGHT / carrier_frequency / 2.0;
        Self::with_spacing(
            n_modules,
            antennas_per_module,
            separation_factor,
            carrier_frequency,
            spacing,
            1.0,
        )
    }

    pub fn with_spacing(
        n_modules: usize,
        antennas_per_module: usize,
        separation_factor: f64,
        carrier_frequency: f64,
        element_spacing: f64,
        reference_gain: f64,
    ) -> Result<Self> {
        let cfg = ArrayConfig {
            n_modules,
            antennas_per_module,
            separation_factor,
            carrier_frequency,
            element_spacing,
            reference_gain,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Same array with a different reference gain β₀ (linear).
    pub fn reference_gain_set(mut self, reference_gain: f64) -> Result<Self> {
        self.reference_gain = reference_gain;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.n_modules == 0 {
            return Err(Error::config("array.n_modules", "must be at least 1"));
        }
        if self.antennas_per_module == 0 {
            return Err(Error::config("array.antennas_per_module", "must be at least 1"));
        }
        let s = self.separation_factor;
        if !(s.is_finite() && s >= 1.0) {
            return Err(Error::config(
                "array.separation_factor",
                format!("must be finite and >= 1, got {s}"),
            ));
        }
        // With a single module the separation never enters the geometry.
        if self.n_modules > 1 && s < self.antennas_per_module as f64 {
            return Err(Error::config(
                "array.separation_factor",
                format!(
                    "modules overlap: S = {s} < M = {}",
                    self.antennas_per_module
                ),
            ));
        }
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return Err(Error::config("array.carrier_frequency", "must be positive and finite"));
        }
        if !(self.element_spacing > 0.0 && self.element_spacing.is_finite()) {
            return Err(Error::config("array.element_spacing", "must be positive and finite"));
        }
        if !(self.reference_gain > 0.0 && self.reference_gain.is_finite()) {
            return Err(Error::config("array.reference_gain", "must be positive and finite"));
        }
        Ok(())
    }

    pub fn n_modules(&self) -> usize {
        self.n_modules
    }

    pub fn antennas_per_module(&self) -> usize {
        self.antennas_per_module
    }

    /// Total number of elements `N·M`.
    pub fn n_elements(&self) -> usize {
        self.n_modules * self.antennas_per_module
    }

    pub fn separation_factor(&self) -> f64 {
        self.separation_factor
    }

    pub fn carrier_frequency(&self) -> f64 {
        self.carrier_frequency
    }

    pub fn element_spacing(&self) -> f64 {
        self.element_spacing
    }

    pub fn reference_gain(&self) -> f64 {
        self.reference_gain
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Centre-to-centre module pitch `S·d` in meters.
    pub fn module_pitch(&self) -> f64 {
        self.separation_factor * self.element_spacing
    }

    /// Module indices in ascending order.
    pub fn module_indices(&self) -> impl Iterator<Item = f64> + Clone {
        symmetric_grid(self.n_modules)
    }

    /// Antenna indices within a module, ascending.
    pub fn antenna_indices(&self) -> impl Iterator<Item = f64> + Clone {
        symmetric_grid(self.antennas_per_module)
    }

    /// Largest module index, `(N-1)/2`.
    pub fn max_module_index(&self) -> f64 {
        (self.n_modules as f64 - 1.0) / 2.0
    }

    pub(crate) fn check_module_index(&self, n: f64) -> Result<()> {
        check_index(n, self.n_modules, "module")
    }

    pub(crate) fn check_antenna_index(&self, m: f64) -> Result<()> {
        check_index(m, self.antennas_per_module, "antenna")
    }
}

fn symmetric_grid(count: usize) -> impl Iterator<Item = f64> + Clone {
    let half = (count as f64 - 1.0) / 2.0;
    (0..count).map(move |i| i as f64 - half)
}

fn check_index(idx: f64, count: usize, what: &str) -> Result<()> {
    let half = (count as f64 - 1.0) / 2.0;
    let pos = idx + half;
    let ok = idx.is_finite() && pos >= -1e-9 && pos <= 2.0 * half + 1e-9 && (pos - pos.round()).abs() < 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{what} index {idx} not in {{-{half}, ..., {half}}}"
        )))
    }
}

/// User location in polar coordinates about the array centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserPosition {
    /// Distance to the array centre, meters.
    pub r: f64,
    /// Angle from the positive x-axis, radians in `[-π/2, π/2]`.
    pub theta: f64,
}

impl UserPosition {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Domain(format!("user distance must be positive, got {r}")));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        if !(theta >= -half_pi - 1e-12 && theta <= half_pi + 1e-12) {
            return Err(Error::Domain(format!("user angle {theta} outside [-pi/2, pi/2]")));
        }
        Ok(UserPosition {
            r,
            theta: theta.clamp(-half_pi, half_pi),
        })
    }

    /// Position from Cartesian coordinates; `x` must be positive.
    pub fn from_cartesian(x: f64, y: f64) -> Result<Self> {
        if !(x > 0.0) {
            return Err(Error::Domain(format!("user must be in front of the array, x = {x}")));
        }
        Self::new(x.hypot(y), y.atan2(x))
    }

    pub fn x(&self) -> f64 {
        self.r * self.theta.cos()
    }

    pub fn y(&self) -> f64 {
        self.r * self.theta.sin()
    }
}

/// Position `(x, y)` of element `(n, m)`.
pub fn element_position(cfg: &ArrayConfig, n: f64, m: f64) -> Result<(f64, f64)> {
    cfg.check_module_index(n)?;
    cfg.check_antenna_index(m)?;
    Ok((0.0, element_offset(cfg, n, m)))
}

#[inline]
pub(crate) fn element_offset(cfg: &ArrayConfig, n: f64, m: f64) -> f64 {
    (n * cfg.separation_factor + m) * cfg.element_spacing
}

/// Distance from a point at y-offset `offset` on the array axis to the user.
#[inline]
pub(crate) fn axis_distance(user: &UserPosition, offset: f64) -> f64 {
    let r = user.r;
    (r * r - 2.0 * r * offset * user.theta.sin() + offset * offset).sqrt()
}

/// Distance `r_{n,m}` from element `(n, m)` to the user.
pub fn element_distance(cfg: &ArrayConfig, user: &UserPosition, n: f64, m: f64) -> Result<f64> {
    cfg.check_module_index(n)?;
    cfg.check_antenna_index(m)?;
    Ok(axis_distance(user, element_offset(cfg, n, m)))
}

/// Distance `r_n` from the centre of module `n` to the user.
pub fn module_distance(cfg: &ArrayConfig, user: &UserPosition, n: f64) -> Result<f64> {
    cfg.check_module_index(n)?;
    Ok(axis_distance(user, n * cfg.module_pitch()))
}

/// Angle `θ_n` of the user seen from the centre of module `n`.
pub fn module_angle(cfg: &ArrayConfig, user: &UserPosition, n: f64) -> Result<f64> {
    cfg.check_module_index(n)?;
    module_angle_unchecked(cfg, user, n)
}

pub(crate) fn module_angle_unchecked(cfg: &ArrayConfig, user: &UserPosition, n: f64) -> Result<f64> {
    let offset = n * cfg.module_pitch();
    let rn = axis_distance(user, offset);
    if rn <= 0.0 {
        return Err(Error::Numerical(format!("user coincides with module {n}")));
    }
    let s = (user.r * user.theta.sin() - offset) / rn;
    if s.abs() > 1.0 + 1e-12 {
        return Err(Error::Numerical(format!("arcsin argument {s} out of range")));
    }
    Ok(s.clamp(-1.0, 1.0).asin())
}

/// Module aperture, total aperture and Rayleigh distance, all in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Apertures {
    pub module: f64,
    pub total: f64,
    pub rayleigh: f64,
}

pub fn apertures(cfg: &ArrayConfig) -> Apertures {
    let d = cfg.element_spacing;
    let n = cfg.n_modules as f64;
    let m = cfg.antennas_per_module as f64;
    let module = (m - 1.0) * d;
    let total = ((n - 1.0) * cfg.separation_factor + (m - 1.0)) * d;
    Apertures {
        module,
        total,
        rayleigh: 2.0 * total * total / cfg.wavelength(),
    }
}

/// Propagation regime of a user at a given distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldRegion {
    /// Inside the near field of an individual module.
    ModuleNearField,
    /// Far field of each module, near field of the whole array.
    ModularRegime,
    /// Beyond the Rayleigh distance of the whole array.
    ArrayFarField,
}

pub fn region_classify(cfg: &ArrayConfig, r: f64) -> FieldRegion {
    let ap = apertures(cfg);
    let lr = cfg.wavelength() * r;
    if lr >= 2.0 * ap.total * ap.total {
        FieldRegion::ArrayFarField
    } else if lr >= 2.0 * ap.module * ap.module {
        FieldRegion::ModularRegime
    } else {
        FieldRegion::ModuleNearField
    }
}

/// Area in which users are dropped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Region {
    /// Annular sector, distances in meters and angles in radians.
    Sector {
        r_min: f64,
        r_max: f64,
        theta_min: f64,
        theta_max: f64,
    },
    /// Axis-aligned rectangle in front of the array, meters.
    Rectangle {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
    },
}

/// How sector positions are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Uniform over the sector's area (radial density ∝ r).
    #[default]
    UniformArea,
    /// Uniform in `r` and `θ` independently.
    UniformPolar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub region: Region,
    pub num_users: usize,
    pub sampling: Sampling,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(Error::config("scenario.num_users", "must be at least 1"));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        match self.region {
            Region::Sector {
                r_min,
                r_max,
                theta_min,
                theta_max,
            } => {
                if !(r_min > 0.0 && r_min.is_finite() && r_max.is_finite()) {
                    return Err(Error::config("scenario.r_min", "must be positive and finite"));
                }
                if r_min > r_max {
                    return Err(Error::config("scenario.r_max", "empty region: r_min > r_max"));
                }
                if theta_min > theta_max {
                    return Err(Error::config(
                        "scenario.theta_max",
                        "empty region: theta_min > theta_max",
                    ));
                }
                if theta_min < -half_pi - 1e-12 || theta_max > half_pi + 1e-12 {
                    return Err(Error::config("scenario.theta_min", "angles must lie in [-90, 90] degrees"));
                }
            }
            Region::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                if !(x_min > 0.0 && x_max.is_finite()) {
                    return Err(Error::config(
                        "scenario.x_min",
                        "users must be in front of the array (x_min > 0)",
                    ));
                }
                if x_min > x_max {
                    return Err(Error::config("scenario.x_max", "empty region: x_min > x_max"));
                }
                if !(y_min <= y_max && y_min.is_finite() && y_max.is_finite()) {
                    return Err(Error::config("scenario.y_max", "empty region: y_min > y_max"));
                }
            }
        }
        Ok(())
    }
}

/// Drop `num_users` users in the scenario region.
pub fn sample_users<R: Rng + ?Sized>(scenario: &ScenarioConfig, rng: &mut R) -> Result<Vec<UserPosition>> {
    scenario.validate()?;
    let users = (0..scenario.num_users)
        .map(|_| match scenario.region {
            Region::Sector {
                r_min,
                r_max,
                theta_min,
                theta_max,
            } => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let r = match scenario.sampling {
                    Sampling::UniformArea => (u * (r_max * r_max - r_min * r_min) + r_min * r_min).sqrt(),
                    Sampling::UniformPolar => r_min + u * (r_max - r_min),
                };
                let theta = theta_min + v * (theta_max - theta_min);
                UserPosition { r, theta }
            }
            Region::Rectangle {
                x_min,
                x_max,
                y_min,
                y_max,
            } => {
                let u: f64 = rng.random();
                let v: f64 = rng.random();
                let x = x_min + u * (x_max - x_min);
                let y = y_min + v * (y_max - y_min);
                UserPosition {
                    r: x.hypot(y),
                    theta: y.atan2(x),
                }
            }
        })
        .collect();
    Ok(users)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn default_cfg() -> ArrayConfig {
        ArrayConfig::new(32, 4, 13.0, 15e9).unwrap()
    }

    fn euclid(user: &UserPosition, p: (f64, f64)) -> f64 {
        (user.x() - p.0).hypot(user.y() - p.1)
    }

    #[test]
    fn element_position_examples() {
        let cfg = default_cfg();
        let d = SPEED_OF_LIGHT / (2.0 * 15e9);
        assert!((d - 0.0099931).abs() < 1e-7);
        // odd-count centre
        let odd = ArrayConfig::new(3, 3, 3.0, 15e9).unwrap();
        assert_eq!(element_position(&odd, 0.0, 0.0).unwrap(), (0.0, 0.0));
        let (x, y) = element_position(&cfg, 15.5, 1.5).unwrap();
        assert_eq!(x, 0.0);
        assert!((y - (15.5 * 13.0 + 1.5) * d).abs() < 1e-12);
        let (_, ym) = element_position(&cfg, -15.5, -1.5).unwrap();
        assert_eq!(ym, -y);
    }

    #[test]
    fn out_of_range_indices_rejected() {
        let cfg = default_cfg();
        assert!(matches!(element_position(&cfg, 0.0, 0.0), Err(Error::Domain(_))));
        assert!(element_position(&cfg, 16.5, 0.5).is_err());
        assert!(element_position(&cfg, 15.5, 2.5).is_err());
        assert!(element_position(&cfg, 15.25, 0.5).is_err());
        let user = UserPosition::new(10.0, 0.0).unwrap();
        assert!(element_distance(&cfg, &user, 0.0, 0.5).is_err());
    }

    #[test]
    fn element_distance_examples() {
        let odd = ArrayConfig::new(3, 3, 3.0, 15e9).unwrap();
        let u = UserPosition::new(7.5, 0.3).unwrap();
        assert!((element_distance(&odd, &u, 0.0, 0.0).unwrap() - 7.5).abs() < 1e-12);

        let broadside = UserPosition::new(12.0, 0.0).unwrap();
        let off = (1.0 * 3.0 + 1.0) * odd.element_spacing();
        let want = (144.0 + off * off).sqrt();
        assert!((element_distance(&odd, &broadside, 1.0, 1.0).unwrap() - want).abs() < 1e-12);

        let cfg = default_cfg();
        let u = UserPosition::new(20.0, 30f64.to_radians()).unwrap();
        let p = element_position(&cfg, 10.5, 0.5).unwrap();
        let got = element_distance(&cfg, &u, 10.5, 0.5).unwrap();
        assert!((got - euclid(&u, p)).abs() / got < 1e-12);
    }

    #[test]
    fn module_distance_and_angle_examples() {
        let cfg = default_cfg();
        let u = UserPosition::new(25.0, (-45f64).to_radians()).unwrap();
        let centre = (0.0, -15.5 * cfg.module_pitch());
        let got = module_distance(&cfg, &u, -15.5).unwrap();
        assert!((got - euclid(&u, centre)).abs() / got < 1e-12);

        let odd = ArrayConfig::new(5, 3, 4.0, 15e9).unwrap();
        let v = UserPosition::new(9.0, 0.2).unwrap();
        assert!((module_distance(&odd, &v, 0.0).unwrap() - 9.0).abs() < 1e-12);
        assert!((module_angle(&odd, &v, 0.0).unwrap() - 0.2).abs() < 1e-12);
        assert_eq!(
            module_distance(&odd, &v, 2.0).unwrap(),
            element_distance(&odd, &v, 2.0, 0.0).unwrap()
        );

        // broadside user seen from an outer module: compare with atan2
        let b = UserPosition::new(15.0, 0.0).unwrap();
        let tn = module_angle(&cfg, &b, 15.5).unwrap();
        let off = 15.5 * cfg.module_pitch();
        let rn = module_distance(&cfg, &b, 15.5).unwrap();
        assert!((tn - (-off / rn).asin()).abs() < 1e-12);
        assert!((tn - (-off).atan2(15.0)).abs() < 1e-12);
    }

    #[test]
    fn module_angle_far_field_limit() {
        let cfg = default_cfg();
        let theta = 0.4;
        let far = UserPosition::new(1e9, theta).unwrap();
        assert!((module_angle(&cfg, &far, -15.5).unwrap() - theta).abs() < 1e-8);
    }

    #[test]
    fn apertures_examples() {
        let ap = apertures(&default_cfg());
        assert!((ap.total - 4.0572).abs() < 5e-4);
        assert!((ap.rayleigh - 1647.2).abs() < 0.5, "{}", ap.rayleigh);
        let single = ArrayConfig::new(1, 8, 1.0, 15e9).unwrap();
        let ap1 = apertures(&single);
        assert_eq!(ap1.total, ap1.module);
    }

    #[test]
    fn region_examples() {
        let cfg = default_cfg();
        let ap = apertures(&cfg);
        assert_eq!(region_classify(&cfg, ap.rayleigh), FieldRegion::ArrayFarField);
        assert_eq!(region_classify(&cfg, 30.0), FieldRegion::ModularRegime);
        assert_eq!(region_classify(&cfg, 0.01), FieldRegion::ModuleNearField);
        let sparse = ArrayConfig::new(128, 1, 3.19, 15e9).unwrap();
        assert_ne!(region_classify(&sparse, 1e-6), FieldRegion::ModuleNearField);
    }

    #[test]
    fn overlapping_modules_rejected() {
        assert!(matches!(
            ArrayConfig::new(4, 8, 4.0, 15e9),
            Err(Error::Config { .. })
        ));
        // single module: separation is irrelevant
        assert!(ArrayConfig::new(1, 128, 1.0, 15e9).is_ok());
        assert!(ArrayConfig::new(0, 4, 13.0, 15e9).is_err());
    }

    #[test]
    fn degenerate_sector_gives_identical_users() {
        let sc = ScenarioConfig {
            region: Region::Sector {
                r_min: 20.0,
                r_max: 20.0,
                theta_min: 0.0,
                theta_max: 0.0,
            },
            num_users: 3,
            sampling: Sampling::UniformArea,
            seed: 0,
        };
        let users = sample_users(&sc, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(users.len(), 3);
        for u in users {
            assert_eq!(u, UserPosition { r: 20.0, theta: 0.0 });
        }
    }

    #[test]
    fn inverted_region_is_config_error() {
        let sc = ScenarioConfig {
            region: Region::Sector {
                r_min: 30.0,
                r_max: 20.0,
                theta_min: 0.0,
                theta_max: 0.1,
            },
            num_users: 3,
            sampling: Sampling::UniformArea,
            seed: 0,
        };
        assert!(matches!(
            sample_users(&sc, &mut ChaCha8Rng::seed_from_u64(5)),
            Err(Error::Config { .. })
        ));
    }

    #[test]
    fn area_uniform_mean_radius() {
        let sc = ScenarioConfig {
            region: Region::Sector {
                r_min: 10.0,
                r_max: 60.0,
                theta_min: (-60f64).to_radians(),
                theta_max: 60f64.to_radians(),
            },
            num_users: 100_000,
            sampling: Sampling::UniformArea,
            seed: 0,
        };
        let users = sample_users(&sc, &mut ChaCha8Rng::seed_from_u64(11)).unwrap();
        let mean = users.iter().map(|u| u.r).sum::<f64>() / users.len() as f64;
        let want = 2.0 * (60f64.powi(3) - 10f64.powi(3)) / (3.0 * (60f64.powi(2) - 10f64.powi(2)));
        assert!((want - 40.952).abs() < 1e-3);
        assert!((mean - want).abs() < 0.2, "mean {mean} vs {want}");
    }

    #[test]
    fn rectangle_containment() {
        let sc = ScenarioConfig {
            region: Region::Rectangle {
                x_min: 10.0,
                x_max: 60.0,
                y_min: -60.0,
                y_max: 60.0,
            },
            num_users: 5000,
            sampling: Sampling::UniformArea,
            seed: 0,
        };
        let users = sample_users(&sc, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for u in users {
            assert!(u.x() >= 10.0 - 1e-9 && u.x() <= 60.0 + 1e-9);
            assert!(u.y().abs() <= 60.0 + 1e-9);
        }
    }
}
