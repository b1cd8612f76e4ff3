//! Precursor transport in a cylindrical cross-flow reactor.
//!
//! The reduced model is 1-D plug flow with a quasi-steady gas phase and
//! irreversible first-order Langmuir chemisorption on the walls. Along a
//! characteristic `tau = t - x/u` the system is
//!
//! ```text
//! dTheta/dtau = a c (1 - Theta)
//! u dc/dx     = -b c (1 - Theta)
//! ```
//!
//! which has the Bohart-Adams closed form
//! `Theta = (e^A - 1) / (e^A + e^B - 1)` with `A = a c0 tau`, `B = b x / u`.
//! [`profile_numeric`] integrates the same system with method-of-lines so the
//! closed form can be checked against an independent route.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;
/// Atomic mass unit, kg.
pub const AMU: f64 = 1.66053906660e-27;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("{name} must be strictly positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("sticking probability must lie in (0, 1], got {0}")]
    StickingProbability(f64),
    #[error("saturation threshold must lie in (0, 1), got {0}")]
    SaturationThreshold(f64),
    #[error("positions must be sorted ascending")]
    UnsortedPositions,
    #[error("position {position} m outside the reactor span [0, {length}] m")]
    PositionOutOfRange { position: f64, length: f64 },
    #[error("at least one sample position is required")]
    NoPositions,
    #[error("time must be non-negative and finite, got {0}")]
    NegativeTime(f64),
    #[error("numeric grid needs at least 2 cells, got {0}")]
    GridTooCoarse(usize),
    #[error("dt_factor must lie in (0, 0.1], got {0}")]
    TimeStepFactor(f64),
    #[error("numeric integration unstable: coverage {coverage} at x = {position} m, tau = {tau} s")]
    Unstable {
        coverage: f64,
        position: f64,
        tau: f64,
    },
    #[error("saturation time bisection did not converge after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, TransportError>;

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(TransportError::NonPositive { name, value })
    }
}

/// Cylindrical deposition zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReactorGeometry {
    /// Deposition zone length, m.
    pub length: f64,
    /// Tube radius, m.
    pub radius: f64,
    /// Carrier gas velocity, m/s.
    pub gas_velocity: f64,
}

impl Default for ReactorGeometry {
    fn default() -> Self {
        Self {
            length: 0.4,
            radius: 0.025,
            gas_velocity: 2.0,
        }
    }
}

impl ReactorGeometry {
    pub fn validate(&self) -> Result<()> {
        positive("length", self.length)?;
        positive("radius", self.radius)?;
        positive("gas_velocity", self.gas_velocity)
    }
}

/// One ALD process: precursor, temperature and surface chemistry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessConditions {
    /// Precursor partial pressure, Pa.
    pub partial_pressure: f64,
    /// Precursor molar mass, amu.
    pub molar_mass: f64,
    /// Process temperature, K.
    pub temperature: f64,
    /// Reaction probability per wall collision on a bare site.
    pub sticking_probability: f64,
    /// Saturated growth per cycle, nm/cycle.
    pub growth_per_cycle: f64,
    /// Reactive site density, sites/m^2.
    pub site_density: f64,
}

impl ProcessConditions {
    pub fn validate(&self) -> Result<()> {
        positive("partial_pressure", self.partial_pressure)?;
        positive("molar_mass", self.molar_mass)?;
        positive("temperature", self.temperature)?;
        positive("growth_per_cycle", self.growth_per_cycle)?;
        positive("site_density", self.site_density)?;
        let beta = self.sticking_probability;
        if beta > 0.0 && beta <= 1.0 {
            Ok(())
        } else {
            Err(TransportError::StickingProbability(beta))
        }
    }
}

/// Kinetic-theory rates that fully determine the transport solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    /// Mean thermal speed, m/s.
    pub thermal_velocity: f64,
    /// Inlet precursor number density, 1/m^3.
    pub inlet_density: f64,
    /// Per-site capture coefficient, m^3/s.
    pub adsorption_rate: f64,
    /// Wall-loss coefficient on a bare surface, 1/s.
    pub depletion_rate: f64,
    /// Carrier gas velocity, m/s.
    pub gas_velocity: f64,
    /// Deposition zone length, m. Bounds the admissible sample positions.
    pub length: f64,
}

impl DerivedRates {
    pub fn new(cond: &ProcessConditions, geom: &ReactorGeometry) -> Result<Self> {
        cond.validate()?;
        geom.validate()?;
        let mass = cond.molar_mass * AMU;
        let kt = BOLTZMANN * cond.temperature;
        let thermal_velocity = (8.0 * kt / (std::f64::consts::PI * mass)).sqrt();
        let beta = cond.sticking_probability;
        Ok(Self {
            thermal_velocity,
            inlet_density: cond.partial_pressure / kt,
            adsorption_rate: beta * thermal_velocity / (4.0 * cond.site_density),
            depletion_rate: beta * thermal_velocity / (2.0 * geom.radius),
            gas_velocity: geom.gas_velocity,
            length: geom.length,
        })
    }

    /// Bare-surface capture frequency `a c0`, 1/s.
    pub fn capture_frequency(&self) -> f64 {
        self.adsorption_rate * self.inlet_density
    }

    /// Transit time from the inlet to `x`.
    pub fn transit_time(&self, x: f64) -> f64 {
        x / self.gas_velocity
    }

    /// Dimensionless exposure `A = a c0 max(0, t - x/u)`.
    pub fn exposure(&self, x: f64, t: f64) -> f64 {
        self.capture_frequency() * (t - self.transit_time(x)).max(0.0)
    }

    /// Dimensionless depletion `B = b x / u`.
    pub fn depletion(&self, x: f64) -> f64 {
        self.depletion_rate * x / self.gas_velocity
    }
}

/// `derive_rates` under its operational name.
pub fn derive_rates(cond: &ProcessConditions, geom: &ReactorGeometry) -> Result<DerivedRates> {
    DerivedRates::new(cond, geom)
}

/// Coverage sampled along the reactor at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageProfile {
    pub positions: Vec<f64>,
    pub coverage: Vec<f64>,
    pub time: f64,
}

/// `ln(e^a - 1)` for `a >= 0`, finite for arbitrarily large `a`.
fn ln_expm1(a: f64) -> f64 {
    if a > 30.0 {
        a + (-(-a).exp()).ln_1p()
    } else {
        a.exp_m1().ln()
    }
}

/// `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        0.0
    } else {
        z.max(0.0) + (-z.abs()).exp().ln_1p()
    }
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Log of `q = (e^A - 1) e^{-B}`; coverage is `q / (1 + q)`.
fn log_odds(exposure: f64, depletion: f64) -> f64 {
    ln_expm1(exposure) - depletion
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(TransportError::NegativeTime(t))
    }
}

/// Closed-form coverage in terms of the dimensionless exposure and depletion.
pub fn coverage_from_groups(exposure: f64, depletion: f64) -> f64 {
    logistic(log_odds(exposure, depletion))
}

/// Closed-form gas density ratio `c/c0` in terms of the dimensionless groups.
pub fn density_from_groups(exposure: f64, depletion: f64) -> f64 {
    (exposure - depletion - softplus(log_odds(exposure, depletion))).exp()
}

/// Surface coverage at position `x` and time `t`.
pub fn coverage_analytic(rates: &DerivedRates, x: f64, t: f64) -> f64 {
    coverage_from_groups(rates.exposure(x, t), rates.depletion(x))
}

/// Gas-phase precursor density relative to the inlet.
pub fn density_analytic(rates: &DerivedRates, x: f64, t: f64) -> f64 {
    density_from_groups(rates.exposure(x, t), rates.depletion(x))
}

fn check_positions(rates: &DerivedRates, positions: &[f64]) -> Result<()> {
    if positions.is_empty() {
        return Err(TransportError::NoPositions);
    }
    for &x in positions {
        if !(0.0..=rates.length).contains(&x) {
            return Err(TransportError::PositionOutOfRange {
                position: x,
                length: rates.length,
            });
        }
    }
    if positions.windows(2).any(|w| w[1] < w[0]) {
        return Err(TransportError::UnsortedPositions);
    }
    Ok(())
}

pub fn profile_analytic(rates: &DerivedRates, positions: &[f64], t: f64) -> Result<CoverageProfile> {
    check_positions(rates, positions)?;
    check_time(t)?;
    Ok(CoverageProfile {
        positions: positions.to_vec(),
        coverage: positions
            .iter()
            .map(|&x| coverage_analytic(rates, x, t))
            .collect(),
        time: t,
    })
}

/// Exposure `A` at which coverage at depletion `B` reaches `theta_sat`.
pub fn saturation_exposure(depletion: f64, theta_sat: f64) -> f64 {
    // ln(1 + theta (e^B - 1)) without overflow for large B
    let numerator = if depletion > 1.0 {
        theta_sat.ln() + depletion + ((1.0 - theta_sat) / theta_sat * (-depletion).exp()).ln_1p()
    } else {
        (theta_sat * depletion.exp_m1()).ln_1p()
    };
    numerator - (-theta_sat).ln_1p()
}

fn check_threshold(theta_sat: f64) -> Result<()> {
    if theta_sat > 0.0 && theta_sat < 1.0 {
        Ok(())
    } else {
        Err(TransportError::SaturationThreshold(theta_sat))
    }
}

/// First time at which coverage at `x_max` (and hence everywhere upstream)
/// reaches `theta_sat`.
pub fn saturation_time(rates: &DerivedRates, x_max: f64, theta_sat: f64) -> Result<f64> {
    check_threshold(theta_sat)?;
    if !(x_max >= 0.0 && x_max.is_finite()) {
        return Err(TransportError::NonPositive {
            name: "x_max",
            value: x_max,
        });
    }
    let a_sat = saturation_exposure(rates.depletion(x_max), theta_sat);
    Ok(rates.transit_time(x_max) + a_sat / rates.capture_frequency())
}

/// Resolution of the method-of-lines integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericOptions {
    /// Number of spatial cells spanning `[0, x_max]`.
    pub grid: usize,
    /// Time step in units of `1 / (a c0)`.
    pub dt_factor: f64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self {
            grid: 400,
            dt_factor: 0.02,
        }
    }
}

impl NumericOptions {
    /// Default resolution, refined so that a front of depletion `B` spans at
    /// least 25 cells per unit of `B`.
    pub fn resolving(depletion: f64) -> Self {
        let base = Self::default();
        Self {
            grid: base.grid.max((25.0 * depletion).ceil() as usize),
            ..base
        }
    }

    fn validate(&self) -> Result<()> {
        if self.grid < 2 {
            return Err(TransportError::GridTooCoarse(self.grid));
        }
        if !(self.dt_factor > 0.0 && self.dt_factor <= 0.1) {
            return Err(TransportError::TimeStepFactor(self.dt_factor));
        }
        Ok(())
    }
}

/// Method-of-lines state in the characteristic frame.
struct LineIntegrator<'a> {
    rates: &'a DerivedRates,
    spacing: f64,
    coverage: Vec<f64>,
    tau: f64,
    // RK4 scratch
    stage: Vec<f64>,
    k: [Vec<f64>; 4],
}

impl<'a> LineIntegrator<'a> {
    fn new(rates: &'a DerivedRates, x_max: f64, cells: usize) -> Self {
        let nodes = cells + 1;
        Self {
            rates,
            spacing: x_max / cells as f64,
            coverage: vec![0.0; nodes],
            tau: 0.0,
            stage: vec![0.0; nodes],
            k: std::array::from_fn(|_| vec![0.0; nodes]),
        }
    }

    /// `dTheta/dtau` with the quasi-steady density from trapezoidal quadrature
    /// of the free-site fraction.
    fn rate(rates: &DerivedRates, spacing: f64, theta: &[f64], out: &mut [f64]) {
        let a = rates.adsorption_rate;
        let c0 = rates.inlet_density;
        let decay = rates.depletion_rate / rates.gas_velocity;
        let mut integral = 0.0;
        let mut prev_free = 1.0 - theta[0];
        out[0] = a * c0 * prev_free;
        for j in 1..theta.len() {
            let free = 1.0 - theta[j];
            integral += 0.5 * spacing * (prev_free + free);
            out[j] = a * c0 * (-decay * integral).exp() * free;
            prev_free = free;
        }
    }

    fn step(&mut self, dt: f64) {
        let (rates, h) = (self.rates, self.spacing);
        let [k1, k2, k3, k4] = &mut self.k;
        Self::rate(rates, h, &self.coverage, k1);
        for (s, (&y, &d)) in self.stage.iter_mut().zip(self.coverage.iter().zip(k1.iter())) {
            *s = y + 0.5 * dt * d;
        }
        Self::rate(rates, h, &self.stage, k2);
        for (s, (&y, &d)) in self.stage.iter_mut().zip(self.coverage.iter().zip(k2.iter())) {
            *s = y + 0.5 * dt * d;
        }
        Self::rate(rates, h, &self.stage, k3);
        for (s, (&y, &d)) in self.stage.iter_mut().zip(self.coverage.iter().zip(k3.iter())) {
            *s = y + dt * d;
        }
        Self::rate(rates, h, &self.stage, k4);
        for (j, y) in self.coverage.iter_mut().enumerate() {
            *y += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        self.tau += dt;
    }

    fn check(&self) -> Result<()> {
        const SLACK: f64 = 1e-6;
        for (j, &theta) in self.coverage.iter().enumerate() {
            if !(-SLACK..=1.0 + SLACK).contains(&theta) {
                return Err(TransportError::Unstable {
                    coverage: theta,
                    position: j as f64 * self.spacing,
                    tau: self.tau,
                });
            }
        }
        Ok(())
    }

    fn advance_to(&mut self, target: f64, dt: f64) -> Result<()> {
        while self.tau < target {
            let remaining = target - self.tau;
            // absorb a sliver of a step rather than taking a near-zero one
            if remaining <= dt * (1.0 + 1e-9) {
                self.step(remaining);
                self.tau = target;
            } else {
                self.step(dt);
            }
            self.check()?;
        }
        Ok(())
    }

    fn interpolate(&self, x: f64) -> f64 {
        if self.spacing == 0.0 {
            return self.coverage[0];
        }
        let last = self.coverage.len() - 1;
        let s = x / self.spacing;
        let j = (s.floor() as usize).min(last - 1);
        let w = s - j as f64;
        (1.0 - w) * self.coverage[j] + w * self.coverage[j + 1]
    }
}

/// Coverage profile from explicit RK4 integration of the transport system.
///
/// Each requested position is sampled at its own characteristic time
/// `tau = max(0, t - x/u)`, so positions are visited from the far end of the
/// reactor back to the inlet while integrating forward in `tau`.
pub fn profile_numeric(
    rates: &DerivedRates,
    positions: &[f64],
    t: f64,
    opts: NumericOptions,
) -> Result<CoverageProfile> {
    check_positions(rates, positions)?;
    check_time(t)?;
    opts.validate()?;
    let x_max = *positions.last().expect("checked non-empty");
    let dt = opts.dt_factor / rates.capture_frequency();
    let mut lines = LineIntegrator::new(rates, x_max, opts.grid);
    let mut coverage = vec![0.0; positions.len()];
    for (i, &x) in positions.iter().enumerate().rev() {
        let tau = (t - rates.transit_time(x)).max(0.0);
        lines.advance_to(tau, dt)?;
        coverage[i] = lines.interpolate(x);
    }
    Ok(CoverageProfile {
        positions: positions.to_vec(),
        coverage,
        time: t,
    })
}

/// Controls for [`saturation_time_numeric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaturationSearch {
    pub numeric: NumericOptions,
    /// Stop once the bracket is narrower than `rel_tol * t`.
    pub rel_tol: f64,
    pub max_iterations: usize,
}

impl Default for SaturationSearch {
    fn default() -> Self {
        Self {
            numeric: NumericOptions::default(),
            rel_tol: 1e-4,
            max_iterations: 200,
        }
    }
}

/// Saturation time found by bisection on [`profile_numeric`].
pub fn saturation_time_numeric(
    rates: &DerivedRates,
    x_max: f64,
    theta_sat: f64,
    search: SaturationSearch,
) -> Result<f64> {
    check_threshold(theta_sat)?;
    let position = [x_max];
    let coverage_at = |t: f64| -> Result<f64> {
        Ok(profile_numeric(rates, &position, t, search.numeric)?.coverage[0])
    };
    let transit = rates.transit_time(x_max);
    let mut lo = transit;
    let mut step = 1.0 / rates.capture_frequency();
    let mut hi = transit + step;
    let mut iterations = 0;
    while coverage_at(hi)? < theta_sat {
        lo = hi;
        step *= 2.0;
        hi = transit + step;
        iterations += 1;
        if iterations >= search.max_iterations {
            return Err(TransportError::NoConvergence(iterations));
        }
    }
    while hi - lo >= search.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if coverage_at(mid)? < theta_sat {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations >= search.max_iterations {
            return Err(TransportError::NoConvergence(iterations));
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    /// Rates with `a c0 = 1/s`, `u = 1 m/s` and `B = depletion * x`.
    fn unit_rates(depletion: f64) -> DerivedRates {
        DerivedRates {
            thermal_velocity: 1.0,
            inlet_density: 1.0,
            adsorption_rate: 1.0,
            depletion_rate: depletion,
            gas_velocity: 1.0,
            length: 10.0,
        }
    }

    fn typical() -> (ProcessConditions, ReactorGeometry) {
        (
            ProcessConditions {
                partial_pressure: 5.0,
                molar_mass: 100.0,
                temperature: 473.15,
                sticking_probability: 1e-3,
                growth_per_cycle: 0.1,
                site_density: 4e18,
            },
            ReactorGeometry::default(),
        )
    }

    #[test]
    fn thermal_velocity_matches_kinetic_theory() {
        let (mut cond, geom) = typical();
        cond.temperature = 473.15;
        cond.molar_mass = 100.0;
        let rates = derive_rates(&cond, &geom).unwrap();
        // sqrt(8 * 1.380649e-23 * 473.15 / (pi * 100 * 1.66053906660e-27))
        let expected = 316.4_f64;
        assert!((rates.thermal_velocity - expected).abs() / expected < 1e-3);
        assert!((rates.thermal_velocity / 3.165e2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn inlet_density_is_ideal_gas() {
        let (mut cond, geom) = typical();
        cond.partial_pressure = BOLTZMANN * cond.temperature;
        let rates = derive_rates(&cond, &geom).unwrap();
        assert!((rates.inlet_density - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rates_vanish_with_sticking_probability() {
        let (mut cond, geom) = typical();
        cond.sticking_probability = 1e-300;
        let rates = derive_rates(&cond, &geom).unwrap();
        assert!(rates.adsorption_rate < 1e-290);
        assert!(rates.depletion_rate < 1e-290);
    }

    #[test]
    fn rejects_bad_conditions() {
        let (mut cond, geom) = typical();
        cond.sticking_probability = 1.5;
        assert!(matches!(
            derive_rates(&cond, &geom),
            Err(TransportError::StickingProbability(_))
        ));
        let (mut cond, _) = typical();
        cond.temperature = 0.0;
        assert!(matches!(
            derive_rates(&cond, &geom),
            Err(TransportError::NonPositive { name: "temperature", .. })
        ));
        let (cond, mut geom) = typical();
        geom.radius = -1.0;
        assert!(derive_rates(&cond, &geom).is_err());
    }

    #[test]
    fn closed_form_special_values() {
        assert_eq!(coverage_from_groups(0.0, 3.0), 0.0);
        assert!((coverage_from_groups(LN_2, LN_2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((coverage_from_groups(LN_2, 0.0) - 0.5).abs() < 1e-15);
        assert!((density_from_groups(LN_2, LN_2) - 2.0 / 3.0).abs() < 1e-15);
        assert!((density_from_groups(0.0, 2.5) - (-2.5f64).exp()).abs() < 1e-15);
        for a in [0.0, 1e-8, 0.3, 5.0, 80.0] {
            assert!((density_from_groups(a, 0.0) - 1.0).abs() < 1e-14, "A = {a}");
        }
    }

    #[test]
    fn closed_form_survives_huge_exponents() {
        for (a, b) in [(800.0, 1.0), (1.0, 800.0), (900.0, 905.0), (2000.0, 0.0)] {
            let theta = coverage_from_groups(a, b);
            let c = density_from_groups(a, b);
            assert!(theta.is_finite() && (0.0..=1.0).contains(&theta));
            assert!(c.is_finite() && (0.0..=1.0).contains(&c));
        }
        // e^A/(e^A + e^B - 1) with A = 900, B = 905: ~ 1/(1 + e^5)
        assert!((density_from_groups(900.0, 905.0) - 1.0 / (1.0 + 5f64.exp())).abs() < 1e-12);
        assert!((coverage_from_groups(900.0, 905.0) - 1.0 / (1.0 + 5f64.exp())).abs() < 1e-12);
    }

    #[test]
    fn inlet_follows_langmuir_uptake() {
        let rates = unit_rates(3.0);
        for t in [0.1, 1.0, 4.0] {
            let expected = -(-t as f64).exp_m1();
            assert!((coverage_analytic(&rates, 0.0, t) - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_at_time_zero_is_bare() {
        let rates = unit_rates(2.0);
        let p = profile_analytic(&rates, &[0.0, 0.5, 1.0], 0.0).unwrap();
        assert!(p.coverage.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn profile_without_depletion_is_uniform() {
        let mut rates = unit_rates(0.0);
        rates.gas_velocity = 1e15;
        let t = 1.7;
        let p = profile_analytic(&rates, &[0.0, 1.0, 2.0, 9.0], t).unwrap();
        let expected = -(-t as f64).exp_m1();
        for c in p.coverage {
            assert!((c - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn single_inlet_position() {
        let rates = unit_rates(2.0);
        let p = profile_analytic(&rates, &[0.0], 0.8).unwrap();
        assert_eq!(p.coverage[0], coverage_analytic(&rates, 0.0, 0.8));
    }

    #[test]
    fn profile_rejects_bad_positions() {
        let rates = unit_rates(1.0);
        assert_eq!(
            profile_analytic(&rates, &[0.0, 2.0, 1.0], 1.0),
            Err(TransportError::UnsortedPositions)
        );
        assert!(matches!(
            profile_analytic(&rates, &[0.0, 11.0], 1.0),
            Err(TransportError::PositionOutOfRange { .. })
        ));
        assert!(matches!(
            profile_analytic(&rates, &[-0.1, 1.0], 1.0),
            Err(TransportError::PositionOutOfRange { .. })
        ));
        assert_eq!(profile_analytic(&rates, &[], 1.0), Err(TransportError::NoPositions));
    }

    #[test]
    fn saturation_time_closed_forms() {
        // B = 0: t_sat = x/u + ln(100)/(a c0)
        let rates = unit_rates(0.0);
        let t = saturation_time(&rates, 2.0, 0.99).unwrap();
        assert!((t - (2.0 + 100f64.ln())).abs() < 1e-12);
        assert!((100f64.ln() - 4.6052).abs() < 1e-4);
        // e^B = 2: A_sat = ln(199)
        assert!((saturation_exposure(LN_2, 0.99) - 199f64.ln()).abs() < 1e-12);
        assert!((199f64.ln() - 5.2933).abs() < 1e-4);
        // theta -> 0 collapses to the transit time
        let rates = unit_rates(1.5);
        let t = saturation_time(&rates, 2.0, 1e-12).unwrap();
        assert!((t - 2.0).abs() < 1e-9);
    }

    #[test]
    fn saturation_time_hits_threshold() {
        for b in [0.0, 0.1, 1.0, 5.0, 60.0, 750.0] {
            let rates = unit_rates(b);
            for theta in [0.5, 0.9, 0.99] {
                let t = saturation_time(&rates, 1.0, theta).unwrap();
                let c = coverage_analytic(&rates, 1.0, t);
                assert!((c - theta).abs() < 1e-9, "B = {b}, theta = {theta}, got {c}");
            }
        }
    }

    #[test]
    fn saturation_time_rejects_bad_threshold() {
        let rates = unit_rates(1.0);
        for theta in [0.0, 1.0, -0.2, 1.3] {
            assert_eq!(
                saturation_time(&rates, 1.0, theta),
                Err(TransportError::SaturationThreshold(theta))
            );
        }
    }

    #[test]
    fn numeric_zero_time_is_bare() {
        let rates = unit_rates(3.0);
        let p = profile_numeric(&rates, &[0.0, 0.5, 1.0], 0.0, NumericOptions::default()).unwrap();
        assert!(p.coverage.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn numeric_without_depletion_is_decoupled() {
        let mut rates = unit_rates(0.0);
        rates.gas_velocity = 1e15;
        let t = 2.3;
        let p = profile_numeric(&rates, &[0.0, 0.4, 1.0], t, NumericOptions::default()).unwrap();
        let expected = -(-t as f64).exp_m1();
        for c in p.coverage {
            assert!((c - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn numeric_tracks_closed_form() {
        let rates = unit_rates(4.0);
        let positions: Vec<f64> = (0..10).map(|i| i as f64 * 0.2).collect();
        for t in [0.5, 2.0, 5.0, 9.0] {
            let exact = profile_analytic(&rates, &positions, t).unwrap();
            let approx = profile_numeric(&rates, &positions, t, NumericOptions::default()).unwrap();
            for (e, a) in exact.coverage.iter().zip(&approx.coverage) {
                assert!((e - a).abs() < 1e-3, "t = {t}: {e} vs {a}");
            }
        }
    }

    #[test]
    fn numeric_rejects_bad_options() {
        let rates = unit_rates(1.0);
        let bad_grid = NumericOptions { grid: 1, dt_factor: 0.02 };
        assert_eq!(
            profile_numeric(&rates, &[0.0, 1.0], 1.0, bad_grid),
            Err(TransportError::GridTooCoarse(1))
        );
        let bad_dt = NumericOptions { grid: 10, dt_factor: 0.5 };
        assert_eq!(
            profile_numeric(&rates, &[0.0, 1.0], 1.0, bad_dt),
            Err(TransportError::TimeStepFactor(0.5))
        );
    }

    #[test]
    fn numeric_saturation_matches_closed_forms() {
        let rates = unit_rates(0.0);
        let t = saturation_time_numeric(&rates, 1.0, 0.99, SaturationSearch::default()).unwrap();
        let exact = 1.0 + 100f64.ln();
        assert!((t - exact).abs() / exact < 5e-3);
        let t = saturation_time_numeric(&rates, 1.0, 0.5, SaturationSearch::default()).unwrap();
        let exact = 1.0 + LN_2;
        assert!((t - exact).abs() / exact < 5e-3);
    }

    #[test]
    fn numeric_saturation_is_monotone_in_threshold() {
        let rates = unit_rates(2.0);
        let t90 = saturation_time_numeric(&rates, 1.0, 0.9, SaturationSearch::default()).unwrap();
        let t99 = saturation_time_numeric(&rates, 1.0, 0.99, SaturationSearch::default()).unwrap();
        assert!(t90 < t99);
    }

    #[test]
    fn bisection_budget_is_enforced() {
        let rates = unit_rates(2.0);
        let search = SaturationSearch {
            max_iterations: 3,
            ..SaturationSearch::default()
        };
        assert!(matches!(
            saturation_time_numeric(&rates, 1.0, 0.99, search),
            Err(TransportError::NoConvergence(_))
        ));
    }
}
