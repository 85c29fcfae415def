//! CODATA-2018 constants in SI units. Every numeric result in the crate is
//! evaluated against this one table.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Planck constant [J s].
pub const H_PLANCK: f64 = 6.626_070_15e-34;
/// Newtonian gravitational constant [m^3 kg^-1 s^-2].
pub const G_NEWTON: f64 = 6.674_30e-11;
/// Boltzmann constant [J/K].
pub const K_B: f64 = 1.380_649e-23;
/// Unified atomic mass unit [kg].
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Reference nucleon mass m0 used by the collapse models [kg].
pub const M0: f64 = AMU;
/// Speed of light [m/s].
pub const C_LIGHT: f64 = 299_792_458.0;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;

/// Smallest length scale accepted for r_C and R0 [m].
pub const LENGTH_FLOOR: f64 = 1e-15;

/// sqrt(pi)/2.
pub const SQRT_PI_2: f64 = 0.886_226_925_452_758_0;
