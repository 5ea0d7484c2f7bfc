//! Sectorized physical channel model.
//!
//! Each user's channel is a sum of L plane-wave arrivals with DoAs drawn
//! uniformly from the sector [θ₀−δ, θ₀+δ], i.i.d. fast fading on each
//! path, and the coupling matrix applied on the way in:
//! g_k = sqrt(β_k/L) · T · A_k · h_k.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::array::{ArrayGeometry, CMat, CouplingModel};
use crate::error::{Error, Result};

pub type CVec = DVector<Complex64>;

/// User population, sector and power-control parameters.
#[derive(Debug, Clone)]
pub struct Scenario {
    /// Number of single-antenna users K.
    pub users: usize,
    /// Paths per user L.
    pub paths: usize,
    /// Sector center θ₀ in degrees.
    pub theta0_deg: f64,
    /// Sector half-width δ in degrees.
    pub delta_deg: f64,
    /// Large-scale gains β_k; power control makes them cancel.
    pub beta: Vec<f64>,
    /// Reference power p₀ in V² after power control.
    pub p0: f64,
    /// Reference SNR in dB that produced p₀.
    pub snr_db: f64,
}

impl Scenario {
    /// Scenario with β_k ≡ 1 and p₀ from the reference-SNR definition.
    pub fn new(
        users: usize,
        paths: usize,
        theta0_deg: f64,
        delta_deg: f64,
        snr_db: f64,
        sigma_n2: f64,
    ) -> Result<Self> {
        if users == 0 || paths == 0 {
            return Err(Error::InvalidParam(format!(
                "need K >= 1 and L >= 1, got K = {users}, L = {paths}"
            )));
        }
        if !(0.0..=90.0).contains(&delta_deg) {
            return Err(Error::InvalidParam(format!("delta = {delta_deg} not in [0, 90]")));
        }
        if theta0_deg.abs() + delta_deg > 90.0 {
            return Err(Error::InvalidParam(format!(
                "sector [{}, {}] leaves [-90, 90]",
                theta0_deg - delta_deg,
                theta0_deg + delta_deg
            )));
        }
        Ok(Self {
            users,
            paths,
            theta0_deg,
            delta_deg,
            beta: vec![1.0; users],
            p0: power_from_snr(snr_db, sigma_n2),
            snr_db,
        })
    }

    /// Override the large-scale gains (stress tests only; power control
    /// removes their effect).
    pub fn with_beta(mut self, beta: Vec<f64>) -> Result<Self> {
        if beta.len() != self.users || beta.iter().any(|&b| b <= 0.0) {
            return Err(Error::InvalidParam("beta must have K positive entries".into()));
        }
        self.beta = beta;
        Ok(self)
    }

    /// Per-user transmit powers p_k = p₀/β_k.
    pub fn user_powers(&self) -> Vec<f64> {
        self.beta.iter().map(|&b| self.p0 / b).collect()
    }
}

/// Reference power from the per-antenna per-user SNR definition
/// SNR = ¼ p₀ / σ_n², i.e. p₀ = 4 σ_n² 10^(SNR_dB/10).
pub fn power_from_snr(snr_db: f64, sigma_n2: f64) -> f64 {
    4.0 * sigma_n2 * 10f64.powf(snr_db / 10.0)
}

/// Steering vector a(θ) with a_m = exp(−j 2π d_1m sin θ); a_1 = 1.
pub fn steering(theta_deg: f64, geom: &ArrayGeometry) -> CVec {
    let s = theta_deg.to_radians().sin();
    let origin = geom.positions()[0];
    CVec::from_iterator(
        geom.len(),
        geom.positions().iter().map(|&p| {
            let phase = -2.0 * std::f64::consts::PI * (p - origin) * s;
            Complex64::new(phase.cos(), phase.sin())
        }),
    )
}

/// One drawn channel: DoAs, per-user steering matrices, fast fading and the
/// composite coupled channel G.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// θ_kℓ in degrees, K×L.
    pub doas: Vec<Vec<f64>>,
    /// Steering matrices A_k, each M×L.
    pub a: Vec<CMat>,
    /// Fast fading H, L×K.
    pub h: CMat,
    /// Composite channel G = [g_1 … g_K], M×K.
    pub g: CMat,
}

fn cscg_unit<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Draw one channel realization. DoAs are uniform in the sector, fading is
/// unit-variance CSCG, and the coupling matrix is folded into G.
pub fn draw_channel<R: Rng + ?Sized>(
    scen: &Scenario,
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    rng: &mut R,
) -> ChannelRealization {
    let m = geom.len();
    let (k_users, l_paths) = (scen.users, scen.paths);
    let lo = scen.theta0_deg - scen.delta_deg;
    let hi = scen.theta0_deg + scen.delta_deg;

    let mut doas = Vec::with_capacity(k_users);
    let mut a_mats = Vec::with_capacity(k_users);
    let mut h = CMat::zeros(l_paths, k_users);
    let mut g = CMat::zeros(m, k_users);

    for k in 0..k_users {
        let thetas: Vec<f64> = (0..l_paths)
            .map(|_| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
            .collect();
        let mut a_k = CMat::zeros(m, l_paths);
        for (l, &th) in thetas.iter().enumerate() {
            a_k.set_column(l, &steering(th, geom));
        }
        let h_k = CVec::from_iterator(l_paths, (0..l_paths).map(|_| cscg_unit(rng)));
        h.set_column(k, &h_k);

        // g_k = sqrt(beta_k / L) * T * A_k * h_k
        let scale = Complex64::new((scen.beta[k] / l_paths as f64).sqrt(), 0.0);
        let uncoupled = &a_k * &h_k;
        let g_k = (&cm.t * uncoupled) * scale;
        g.set_column(k, &g_k);

        doas.push(thetas);
        a_mats.push(a_k);
    }
    ChannelRealization { doas, a: a_mats, h, g }
}

/// Expected per-antenna receive power p_x[m] = E|x_m|², estimated by
/// averaging diag(G P Gᴴ) over `n_avg` channel draws and adding diag(R_n).
pub fn expected_antenna_power<R: Rng + ?Sized>(
    scen: &Scenario,
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    n_avg: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n_avg == 0 {
        return Err(Error::InvalidParam("n_avg must be >= 1".into()));
    }
    let m = geom.len();
    let powers = scen.user_powers();
    let mut acc = vec![0.0f64; m];
    for _ in 0..n_avg {
        let ch = draw_channel(scen, geom, cm, rng);
        for k in 0..scen.users {
            let col = ch.g.column(k);
            for i in 0..m {
                acc[i] += powers[k] * col[i].norm_sqr();
            }
        }
    }
    let rn_diag = cm.r_n_diag();
    Ok(acc
        .iter()
        .zip(rn_diag.iter())
        .map(|(&s, &n)| s / n_avg as f64 + n)
        .collect())
}
