//! Array geometry, dipole mutual impedance, coupling matrix and receiver
//! noise covariance.
//!
//! The antenna elements are thin half-wavelength dipoles on a line; the
//! mutual impedance matrix Z follows the classical induced-EMF result,
//! the coupling matrix is T = (I + Z/R)⁻¹ and the colored receiver noise
//! covariance combines LNA current/voltage noise with the antenna thermal
//! noise. A degenerate no-coupling constructor (Z = R·I) is provided for
//! baseline comparisons.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::{cosint, sinint, EULER_GAMMA};

/// Boltzmann constant in J/K.
pub const BOLTZMANN: f64 = 1.380649e-23;

pub type CMat = DMatrix<Complex64>;

/// LNA and thermal-noise circuit constants.
#[derive(Debug, Clone)]
pub struct CircuitParams {
    /// LNA input impedance in ohms.
    pub r: f64,
    /// Noise resistance sqrt(sigma_u2 / sigma_i2) in ohms.
    pub r_n: f64,
    /// Complex correlation between LNA voltage and current noise.
    pub rho: Complex64,
    /// Environment temperature in kelvin.
    pub temperature: f64,
    /// Bandwidth in hertz.
    pub bandwidth: f64,
    /// LNA current-noise variance in A².
    pub sigma_i2: f64,
    /// LNA voltage-noise variance in V².
    pub sigma_u2: f64,
}

impl CircuitParams {
    /// Circuit constants with sigma_i2 = 2kTB/R and sigma_u2 = 2kTBR, so
    /// that R_N = R and the no-coupling noise power is 2kTBR.
    pub fn new(r: f64, temperature: f64, bandwidth: f64, rho: Complex64) -> Result<Self> {
        if r <= 0.0 || temperature <= 0.0 || bandwidth <= 0.0 {
            return Err(Error::InvalidParam(format!(
                "circuit parameters must be positive: R = {r}, T = {temperature}, B = {bandwidth}"
            )));
        }
        if rho.norm() > 1.0 {
            return Err(Error::InvalidParam(format!("|rho| = {} > 1", rho.norm())));
        }
        let two_ktb = 2.0 * BOLTZMANN * temperature * bandwidth;
        let sigma_i2 = two_ktb / r;
        let sigma_u2 = two_ktb * r;
        Ok(Self {
            r,
            r_n: (sigma_u2 / sigma_i2).sqrt(),
            rho,
            temperature,
            bandwidth,
            sigma_i2,
            sigma_u2,
        })
    }

    /// R = 50 Ω, T = 290 K, B = 20 MHz, rho = 0.
    pub fn paper_default() -> Self {
        Self::new(50.0, 290.0, 20e6, Complex64::new(0.0, 0.0)).expect("default params are valid")
    }

    /// No-coupling noise power per antenna:
    /// sigma_n² = ¼ [sigma_i²(R² + R_N² − 2 R_N R Re ρ) + 4kTBR].
    pub fn sigma_n2(&self) -> f64 {
        let ktb4 = 4.0 * BOLTZMANN * self.temperature * self.bandwidth;
        0.25 * (self.sigma_i2 * (self.r * self.r + self.r_n * self.r_n - 2.0 * self.r_n * self.r * self.rho.re)
            + ktb4 * self.r)
    }
}

/// Antenna positions on a line, in units of the carrier wavelength.
#[derive(Debug, Clone)]
pub struct ArrayGeometry {
    positions: Vec<f64>,
}

impl ArrayGeometry {
    /// Arbitrary linear geometry; positions must be strictly increasing.
    pub fn new(positions: Vec<f64>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidParam("geometry needs at least one antenna".into()));
        }
        if positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParam("positions must be strictly increasing".into()));
        }
        Ok(Self { positions })
    }

    /// Uniform linear array: positions {0, d, 2d, …, (M−1)d}.
    pub fn ula(m: usize, d: f64) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParam("ULA needs M >= 1".into()));
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::InvalidParam(format!("ULA spacing must be positive, got {d}")));
        }
        Self::new((0..m).map(|i| i as f64 * d).collect())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    /// |pos_i − pos_j| in wavelengths.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        (self.positions[i] - self.positions[j]).abs()
    }
}

/// Mutual impedance of two parallel thin half-wavelength dipoles separated
/// by `d` wavelengths (side-by-side arrangement).
fn dipole_mutual_z(d: f64) -> Result<Complex64> {
    let two_pi_d = 2.0 * std::f64::consts::PI * d;
    let xi = std::f64::consts::PI * (1.0 + 4.0 * d * d).sqrt();
    let pi = std::f64::consts::PI;
    let re = 30.0 * (2.0 * cosint(two_pi_d)? - cosint(xi + pi)? - cosint(xi - pi)?);
    let im = 30.0 * (-2.0 * sinint(two_pi_d)? + sinint(xi + pi)? + sinint(xi - pi)?);
    Ok(Complex64::new(re, im))
}

/// Self impedance of a thin half-wavelength dipole:
/// 30(γ + log 2π − Ci(2π) + j Si(2π)) ≈ 73.13 + j42.54 Ω.
pub fn dipole_self_z() -> Complex64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    Complex64::new(
        30.0 * (EULER_GAMMA + two_pi.ln() - cosint(two_pi).expect("2π is in domain")),
        30.0 * sinint(two_pi).expect("2π is in domain"),
    )
}

/// Mutual-impedance matrix for the geometry; symmetric, and Toeplitz for a
/// ULA since entries depend only on the pairwise distance.
pub fn mutual_impedance(geom: &ArrayGeometry) -> Result<CMat> {
    let m = geom.len();
    let zii = dipole_self_z();
    let mut z = CMat::zeros(m, m);
    for i in 0..m {
        z[(i, i)] = zii;
        for j in (i + 1)..m {
            let zij = dipole_mutual_z(geom.distance(i, j))?;
            z[(i, j)] = zij;
            z[(j, i)] = zij;
        }
    }
    Ok(z)
}

/// T = (I + Z/R)⁻¹.
pub fn coupling_matrix(z: &CMat, r: f64) -> Result<CMat> {
    let m = z.nrows();
    let mut a = z / Complex64::new(r, 0.0);
    for i in 0..m {
        a[(i, i)] += Complex64::new(1.0, 0.0);
    }
    let norm_a = one_norm(&a);
    let t = a
        .clone()
        .try_inverse()
        .ok_or(Error::Singular { cond: f64::INFINITY })?;
    let cond = norm_a * one_norm(&t);
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::Singular { cond });
    }
    Ok(t)
}

fn one_norm(a: &CMat) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Receiver noise covariance
/// R_n = T(σ_i²(ZZᴴ + R_N²I − 2R_N Re(ρ*Z)) + 4kTB Re(Z))Tᴴ,
/// Hermitian-symmetrized after assembly and checked for numerical PSD.
pub fn noise_covariance(z: &CMat, t: &CMat, cp: &CircuitParams) -> Result<CMat> {
    let m = z.nrows();
    if t.nrows() != m || t.ncols() != m {
        return Err(Error::InvalidParam(format!(
            "shape mismatch: Z is {m}x{m}, T is {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let mut inner = z * z.adjoint();
    let rn2 = Complex64::new(cp.r_n * cp.r_n, 0.0);
    for i in 0..m {
        inner[(i, i)] += rn2;
    }
    // −2 R_N Re(ρ* Z), with Re taken elementwise.
    let rho_conj = cp.rho.conj();
    for i in 0..m {
        for j in 0..m {
            let re_rho_z = (rho_conj * z[(i, j)]).re;
            inner[(i, j)] -= Complex64::new(2.0 * cp.r_n * re_rho_z, 0.0);
        }
    }
    inner *= Complex64::new(cp.sigma_i2, 0.0);
    let ktb4 = 4.0 * BOLTZMANN * cp.temperature * cp.bandwidth;
    for i in 0..m {
        for j in 0..m {
            inner[(i, j)] += Complex64::new(ktb4 * z[(i, j)].re, 0.0);
        }
    }
    let mut rn = t * inner * t.adjoint();
    // Remove rounding asymmetry before any downstream factorization.
    let rn_h = rn.adjoint();
    rn = (rn + rn_h) * Complex64::new(0.5, 0.0);
    check_psd(&rn)?;
    Ok(rn)
}

fn check_psd(rn: &CMat) -> Result<()> {
    let m = rn.nrows();
    let trace: f64 = (0..m).map(|i| rn[(i, i)].re).sum();
    let floor = -1e-9 * trace / m as f64;
    let min_eig = rn
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    if min_eig < floor {
        return Err(Error::NotPsd { min_eig, floor });
    }
    Ok(())
}

/// Coupling matrix, impedance matrix and receiver noise covariance for one
/// array configuration.
#[derive(Debug, Clone)]
pub struct CouplingModel {
    pub z: CMat,
    pub t: CMat,
    pub r_n: CMat,
}

impl CouplingModel {
    /// Full model from the dipole impedance matrix of `geom`.
    pub fn from_geometry(geom: &ArrayGeometry, cp: &CircuitParams) -> Result<Self> {
        let z = mutual_impedance(geom)?;
        let t = coupling_matrix(&z, cp.r)?;
        let r_n = noise_covariance(&z, &t, cp)?;
        Ok(Self { z, t, r_n })
    }

    /// Degenerate baseline with Z = R·I, built directly: T = ½I and
    /// R_n = σ_n² I.
    pub fn no_coupling(m: usize, cp: &CircuitParams) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParam("need M >= 1".into()));
        }
        let z = CMat::from_diagonal_element(m, m, Complex64::new(cp.r, 0.0));
        let t = CMat::from_diagonal_element(m, m, Complex64::new(0.5, 0.0));
        let r_n = CMat::from_diagonal_element(m, m, Complex64::new(cp.sigma_n2(), 0.0));
        Ok(Self { z, t, r_n })
    }

    pub fn antennas(&self) -> usize {
        self.t.nrows()
    }

    pub fn r_n_diag(&self) -> Vec<f64> {
        (0..self.antennas()).map(|i| self.r_n[(i, i)].re).collect()
    }
}
