//! Linear receivers, the ergodic spectral-efficiency lower bound and the
//! quantization-noise spatial density.
//!
//! The per-user rate is S_k = E[log₂(1 + SINR_k)] with every non-signal
//! term treated as worst-case Gaussian noise. The default mode replaces
//! the instantaneous |w_kᴴη|² by its conditional power given the channel
//! (same ergodic mean, much lower Monte Carlo variance); `empirical_se`
//! runs the actual quantizer over symbol draws as a cross-check.

use nalgebra::{Cholesky, DMatrix};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::array::{ArrayGeometry, CMat, CouplingModel};
use crate::channel::{draw_channel, steering, CVec, Scenario};
use crate::error::{Error, Result};
use crate::quantizer::{
    sigma_delta_quantize, standard_quantize, Architecture, QuantizerModel,
};
use crate::seed::trial_rng;

/// Condition-number limit for the ZF normal matrix GᴴR_η⁻¹G.
const ZF_COND_LIMIT: f64 = 1e12;
/// Resample attempts for a single rejected ZF trial.
const MAX_ATTEMPTS: u64 = 16;
/// Symbol draws per channel realization in empirical mode.
const EMPIRICAL_SYMBOLS: usize = 64;

/// Linear combining scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Receiver {
    Mrc,
    Zf,
}

impl Receiver {
    pub fn label(&self) -> &'static str {
        match self {
            Receiver::Mrc => "mrc",
            Receiver::Zf => "zf",
        }
    }
}

/// Total effective-noise covariance R_η = R_n + U⁻¹R_qU⁻ᴴ.
#[derive(Debug, Clone)]
pub struct EffectiveNoiseModel {
    pub r_eta: CMat,
}

impl EffectiveNoiseModel {
    pub fn new(cm: &CouplingModel, qm: &QuantizerModel) -> Self {
        Self { r_eta: qm.effective_noise_covariance(&cm.r_n) }
    }
}

/// Monte Carlo estimate of the per-user ergodic SE lower bound.
#[derive(Debug, Clone)]
pub struct SEResult {
    /// S_k in bits/s/Hz.
    pub per_user_se: Vec<f64>,
    /// Σ_k S_k.
    pub sum_se: f64,
    pub trials: usize,
    /// Standard error of each per-user mean.
    pub std_error: Vec<f64>,
    /// Standard error of the sum-SE mean.
    pub sum_std_error: f64,
    /// ZF trials that were rejected and resampled.
    pub rejected_trials: usize,
}

/// MRC combiner: deliberately unwhitened, W = G.
pub fn mrc_receiver(g: &CMat) -> CMat {
    g.clone()
}

/// Pre-whitened zero-forcing combiner W = R_η⁻¹G(GᴴR_η⁻¹G)⁻¹.
pub fn zf_receiver(g: &CMat, r_eta: &CMat) -> Result<CMat> {
    let chol = Cholesky::new(r_eta.clone()).ok_or(Error::Singular { cond: f64::INFINITY })?;
    // R_η⁻¹ G via the factorization, then the K×K normal matrix.
    let rinv_g = chol.solve(g);
    let mut normal = g.adjoint() * &rinv_g;
    // Remove rounding asymmetry before the eigencheck.
    let nh = normal.adjoint();
    normal = (normal + nh) * Complex64::new(0.5, 0.0);
    let eigs = normal.clone().symmetric_eigen().eigenvalues;
    let max_e = eigs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_e = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min_e > 0.0 { max_e / min_e } else { f64::INFINITY };
    if !(cond.is_finite() && cond <= ZF_COND_LIMIT) {
        return Err(Error::RankDeficient { cond, limit: ZF_COND_LIMIT });
    }
    let inv = normal
        .try_inverse()
        .ok_or(Error::RankDeficient { cond, limit: ZF_COND_LIMIT })?;
    Ok(rinv_g * inv)
}

/// Conditional SINR of each user given the channel:
/// SINR_k = p_k|w_kᴴg_k|² / (Σ_{i≠k} p_i|w_kᴴg_i|² + w_kᴴR_n w_k + w_kᴴU⁻¹R_qU⁻ᴴw_k).
pub fn sinr_per_realization(
    g: &CMat,
    powers: &[f64],
    w: &CMat,
    r_n: &CMat,
    qm: &QuantizerModel,
) -> Vec<f64> {
    let k_users = g.ncols();
    let wh_g = w.adjoint() * g; // (k, i) = w_kᴴ g_i
    let rn_w = r_n * w;
    (0..k_users)
        .map(|k| {
            let desired = powers[k] * wh_g[(k, k)].norm_sqr();
            let mut interf = 0.0;
            for i in 0..k_users {
                if i != k {
                    interf += powers[i] * wh_g[(k, i)].norm_sqr();
                }
            }
            let w_k = w.column(k);
            let noise = w_k.dotc(&rn_w.column(k)).re;
            let quant = qm.quantization_noise_power(&w_k.into_owned());
            let denom = interf + noise + quant;
            if denom > 0.0 {
                desired / denom
            } else {
                0.0
            }
        })
        .collect()
}

fn build_receiver(
    receiver: Receiver,
    g: &CMat,
    r_eta: &CMat,
) -> Result<CMat> {
    match receiver {
        Receiver::Mrc => Ok(mrc_receiver(g)),
        Receiver::Zf => zf_receiver(g, r_eta),
    }
}

/// Aggregate ordered per-trial per-user rates into an SEResult.
fn aggregate(rates: Vec<Vec<f64>>, rejected: usize) -> SEResult {
    let trials = rates.len();
    let k_users = rates[0].len();
    let n = trials as f64;
    let mut mean = vec![0.0; k_users];
    let mut sum_mean = 0.0;
    for r in &rates {
        for k in 0..k_users {
            mean[k] += r[k];
        }
        sum_mean += r.iter().sum::<f64>();
    }
    for m in mean.iter_mut() {
        *m /= n;
    }
    sum_mean /= n;
    let mut var = vec![0.0; k_users];
    let mut sum_var = 0.0;
    for r in &rates {
        let mut s = 0.0;
        for k in 0..k_users {
            let d = r[k] - mean[k];
            var[k] += d * d;
            s += r[k];
        }
        let ds = s - sum_mean;
        sum_var += ds * ds;
    }
    let denom = if trials > 1 { n * (n - 1.0) } else { n };
    let std_error = var.iter().map(|&v| (v / denom).sqrt()).collect();
    SEResult {
        per_user_se: mean.clone(),
        sum_se: mean.iter().sum(),
        trials,
        std_error,
        sum_std_error: (sum_var / denom).sqrt(),
        rejected_trials: rejected,
    }
}

fn check_rejection_cap(rejected: usize, trials: usize) -> Result<()> {
    let cap = (trials / 100).max(1);
    if rejected > cap {
        return Err(Error::RejectionCap { rejected, trials, cap });
    }
    Ok(())
}

/// Run one trial, resampling on ZF ill-conditioning; returns the per-user
/// rates and the number of rejected attempts.
fn run_trial<F>(seed: u64, trial: u64, mut body: F) -> Result<(Vec<f64>, usize)>
where
    F: FnMut(&mut rand_chacha::ChaCha12Rng) -> Result<Vec<f64>>,
{
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = trial_rng(seed, trial);
        rng.set_stream(attempt);
        match body(&mut rng) {
            Ok(rates) => return Ok((rates, attempt as usize)),
            Err(Error::RankDeficient { .. }) | Err(Error::Singular { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::RejectionCap {
        rejected: MAX_ATTEMPTS as usize,
        trials: 1,
        cap: MAX_ATTEMPTS as usize - 1,
    })
}

/// Analytic-R_q Monte Carlo SE: conditional noise and quantization powers
/// per channel realization, averaged over `trials` draws.
pub fn monte_carlo_se(
    scen: &Scenario,
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    qm: &QuantizerModel,
    receiver: Receiver,
    trials: usize,
    seed: u64,
) -> Result<SEResult> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be >= 1".into()));
    }
    let powers = scen.user_powers();
    let r_eta = EffectiveNoiseModel::new(cm, qm).r_eta;
    let outcomes: Vec<(Vec<f64>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            run_trial(seed, t, |rng| {
                let ch = draw_channel(scen, geom, cm, rng);
                let w = build_receiver(receiver, &ch.g, &r_eta)?;
                let sinr = sinr_per_realization(&ch.g, &powers, &w, &cm.r_n, qm);
                Ok(sinr.iter().map(|&s| (1.0 + s).log2()).collect())
            })
        })
        .collect::<Result<_>>()?;
    let rejected = outcomes.iter().map(|(_, r)| r).sum();
    check_rejection_cap(rejected, trials)?;
    Ok(aggregate(outcomes.into_iter().map(|(r, _)| r).collect(), rejected))
}

fn cscg_unit<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Lower-triangular factor L with LLᴴ = R_n, with a tiny diagonal jitter
/// retry if the covariance is numerically semidefinite.
fn noise_factor(r_n: &CMat) -> Result<CMat> {
    let m = r_n.nrows();
    let trace: f64 = (0..m).map(|i| r_n[(i, i)].re).sum();
    let mut jitter = 0.0;
    for _ in 0..4 {
        let mut a = r_n.clone();
        if jitter > 0.0 {
            for i in 0..m {
                a[(i, i)] += Complex64::new(jitter, 0.0);
            }
        }
        if let Some(ch) = Cholesky::new(a) {
            return Ok(ch.l());
        }
        jitter = if jitter == 0.0 { 1e-12 * trace / m as f64 } else { jitter * 100.0 };
    }
    Err(Error::Singular { cond: f64::INFINITY })
}

/// Quantize an antenna snapshot under the model's architecture; infinite
/// resolution passes the input through.
fn quantize_snapshot(x: &CVec, qm: &QuantizerModel) -> Result<CVec> {
    match qm.arch {
        Architecture::InfiniteResolution => Ok(x.clone()),
        Architecture::SigmaDeltaOneBit => Ok(sigma_delta_quantize(x, qm)?.0),
        Architecture::StandardOneBit => Ok(standard_quantize(x, qm)?.0),
    }
}

/// Empirical SE: per channel realization, transmit `EMPIRICAL_SYMBOLS`
/// symbol vectors through the actual quantizer and estimate the
/// noise-plus-quantization term of the SINR denominator from the sample
/// average of |w_kᴴ(y − GP^½s)|².
pub fn empirical_se(
    scen: &Scenario,
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    qm: &QuantizerModel,
    receiver: Receiver,
    trials: usize,
    seed: u64,
) -> Result<SEResult> {
    if trials == 0 {
        return Err(Error::InvalidParam("trials must be >= 1".into()));
    }
    let powers = scen.user_powers();
    let k_users = scen.users;
    let r_eta = EffectiveNoiseModel::new(cm, qm).r_eta;
    let l_noise = noise_factor(&cm.r_n)?;
    let outcomes: Vec<(Vec<f64>, usize)> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            run_trial(seed, t, |rng| {
                let ch = draw_channel(scen, geom, cm, rng);
                let w = build_receiver(receiver, &ch.g, &r_eta)?;
                // G P^½ and the deterministic parts of the SINR.
                let mut gp = ch.g.clone();
                for k in 0..k_users {
                    let s = Complex64::new(powers[k].sqrt(), 0.0);
                    let mut col = gp.column_mut(k);
                    col *= s;
                }
                let wh_gp = w.adjoint() * &gp;
                let m = geom.len();
                let mut eta_power = vec![0.0f64; k_users];
                for _ in 0..EMPIRICAL_SYMBOLS {
                    let s = CVec::from_fn(k_users, |_, _| cscg_unit(rng));
                    let n_white = CVec::from_fn(m, |_, _| cscg_unit(rng));
                    let x = &gp * &s + &l_noise * n_white;
                    let y = quantize_snapshot(&x, qm)?;
                    let eta = &y - &gp * &s;
                    let e = w.adjoint() * eta;
                    for k in 0..k_users {
                        eta_power[k] += e[k].norm_sqr();
                    }
                }
                for p in eta_power.iter_mut() {
                    *p /= EMPIRICAL_SYMBOLS as f64;
                }
                let rates = (0..k_users)
                    .map(|k| {
                        let desired = wh_gp[(k, k)].norm_sqr();
                        let mut interf = 0.0;
                        for i in 0..k_users {
                            if i != k {
                                interf += wh_gp[(k, i)].norm_sqr();
                            }
                        }
                        let denom = interf + eta_power[k];
                        let sinr = if denom > 0.0 { desired / denom } else { 0.0 };
                        (1.0 + sinr).log2()
                    })
                    .collect();
                Ok(rates)
            })
        })
        .collect::<Result<_>>()?;
    let rejected = outcomes.iter().map(|(_, r)| r).sum();
    check_rejection_cap(rejected, trials)?;
    Ok(aggregate(outcomes.into_iter().map(|(r, _)| r).collect(), rejected))
}

/// Analytic quantization-noise power density
/// ρ_q(θ) = a(θ)ᴴTᴴU⁻¹R_qU⁻ᴴT a(θ) / ‖T a(θ)‖².
pub fn noise_density(
    theta_grid: &[f64],
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    qm: &QuantizerModel,
) -> Result<Vec<(f64, f64)>> {
    if qm.arch == Architecture::InfiniteResolution {
        return Err(Error::InvalidParam(
            "noise density needs a one-bit architecture".into(),
        ));
    }
    Ok(theta_grid
        .iter()
        .map(|&th| {
            let b = &cm.t * steering(th, geom);
            let gain = b.norm_squared();
            (th, qm.quantization_noise_power(&b) / gain)
        })
        .collect())
}

/// Empirical density: average |a(θ)ᴴTᴴU⁻¹q|² / ‖Ta(θ)‖² over quantizer
/// runs at the scenario's operating statistics, one fresh channel, symbol
/// and noise draw per run.
pub fn noise_density_empirical(
    theta_grid: &[f64],
    scen: &Scenario,
    geom: &ArrayGeometry,
    cm: &CouplingModel,
    qm: &QuantizerModel,
    runs: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if qm.arch == Architecture::InfiniteResolution {
        return Err(Error::InvalidParam(
            "noise density needs a one-bit architecture".into(),
        ));
    }
    if runs == 0 {
        return Err(Error::InvalidParam("runs must be >= 1".into()));
    }
    let m = geom.len();
    let n_theta = theta_grid.len();
    let powers = scen.user_powers();
    let l_noise = noise_factor(&cm.r_n)?;
    // Projection matrix B with columns T a(θ).
    let mut b = CMat::zeros(m, n_theta);
    for (j, &th) in theta_grid.iter().enumerate() {
        b.set_column(j, &(&cm.t * steering(th, geom)));
    }
    let bh = b.adjoint();
    let gains: Vec<f64> = (0..n_theta).map(|j| b.column(j).norm_squared()).collect();

    // Fixed-size blocks summed in order, so the result is independent of
    // worker scheduling.
    const BLOCK: usize = 32;
    let n_blocks = runs.div_ceil(BLOCK);
    let partials: Vec<Result<Vec<f64>>> = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut acc = vec![0.0f64; n_theta];
            let lo = blk * BLOCK;
            let hi = (lo + BLOCK).min(runs);
            for run in lo..hi {
                let mut rng = trial_rng(seed, run as u64);
                let ch = draw_channel(scen, geom, cm, &mut rng);
                let s = CVec::from_fn(scen.users, |k, _| {
                    cscg_unit(&mut rng) * Complex64::new(powers[k].sqrt(), 0.0)
                });
                let n_white = CVec::from_fn(m, |_, _| cscg_unit(&mut rng));
                let x = &ch.g * &s + &l_noise * n_white;
                let shaped = match qm.arch {
                    Architecture::SigmaDeltaOneBit => {
                        let (_, q) = sigma_delta_quantize(&x, qm)?;
                        qm.apply_u_inverse(&q)
                    }
                    Architecture::StandardOneBit => standard_quantize(&x, qm)?.1,
                    Architecture::InfiniteResolution => unreachable!(),
                };
                let proj = &bh * shaped;
                for j in 0..n_theta {
                    acc[j] += proj[j].norm_sqr();
                }
            }
            Ok(acc)
        })
        .collect();
    let mut total = vec![0.0f64; n_theta];
    for p in partials {
        let p = p?;
        for j in 0..n_theta {
            total[j] += p[j];
        }
    }
    Ok(theta_grid
        .iter()
        .enumerate()
        .map(|(j, &th)| (th, total[j] / (runs as f64 * gains[j])))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::CircuitParams;
    use crate::quantizer::{steering_phase, DEFAULT_ZETA};
    use approx::assert_abs_diff_eq;

    fn flat_quantizer(arch: Architecture, phi: f64, m: usize) -> QuantizerModel {
        QuantizerModel::design(arch, phi, DEFAULT_ZETA, &vec![1.0; m]).unwrap()
    }

    fn paper_setup(m: usize, d: f64, snr_db: f64) -> (Scenario, ArrayGeometry, CouplingModel) {
        let cp = CircuitParams::paper_default();
        let scen = Scenario::new(4, 5, -10.0, 20.0, snr_db, cp.sigma_n2()).unwrap();
        let geom = ArrayGeometry::ula(m, d).unwrap();
        let cm = CouplingModel::no_coupling(m, &cp).unwrap();
        (scen, geom, cm)
    }

    #[test]
    fn mrc_is_identity_on_g() {
        let g = CMat::from_fn(6, 2, |i, j| Complex64::new(i as f64, j as f64));
        assert_eq!(mrc_receiver(&g), g);
    }

    #[test]
    fn zf_inverts_channel() {
        let (scen, geom, cm) = paper_setup(16, 0.5, 0.0);
        let mut rng = trial_rng(1, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let w = zf_receiver(&ch.g, &cm.r_n).unwrap();
        let prod = w.adjoint() * &ch.g;
        for i in 0..scen.users {
            for j in 0..scen.users {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(prod[(i, j)].re, want, epsilon = 1e-10);
                assert_abs_diff_eq!(prod[(i, j)].im, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn zf_white_noise_is_pseudo_inverse() {
        let (scen, geom, cm) = paper_setup(12, 0.5, 0.0);
        let mut rng = trial_rng(2, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let sigma2 = 0.37;
        let r = CMat::from_diagonal_element(12, 12, Complex64::new(sigma2, 0.0));
        let w = zf_receiver(&ch.g, &r).unwrap();
        let pinv = &ch.g * (ch.g.adjoint() * &ch.g).try_inverse().unwrap();
        for i in 0..12 {
            for j in 0..scen.users {
                assert!((w[(i, j)] - pinv[(i, j)]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn zf_square_invertible_case() {
        let cp = CircuitParams::paper_default();
        let scen = Scenario::new(3, 5, 0.0, 30.0, 0.0, cp.sigma_n2()).unwrap();
        let geom = ArrayGeometry::ula(3, 0.5).unwrap();
        let cm = CouplingModel::no_coupling(3, &cp).unwrap();
        let mut rng = trial_rng(3, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let w = zf_receiver(&ch.g, &cm.r_n).unwrap();
        let ginv_h = ch.g.clone().try_inverse().unwrap().adjoint();
        for i in 0..3 {
            for j in 0..3 {
                assert!((w[(i, j)] - ginv_h[(i, j)]).norm() < 1e-8 * ginv_h[(i, j)].norm().max(1.0));
            }
        }
    }

    #[test]
    fn zf_rejects_rank_deficient_channel() {
        let m = 8;
        let col = CVec::from_fn(m, |i, _| Complex64::new(1.0 + i as f64, 0.5));
        let mut g = CMat::zeros(m, 2);
        g.set_column(0, &col);
        g.set_column(1, &col); // duplicate user → singular normal matrix
        let r = CMat::from_diagonal_element(m, m, Complex64::new(1.0, 0.0));
        assert!(matches!(zf_receiver(&g, &r), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn sinr_zero_power_gives_zero() {
        let (mut scen, geom, cm) = paper_setup(8, 0.5, 0.0);
        scen.p0 = 0.0;
        let mut rng = trial_rng(4, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 8);
        let sinr = sinr_per_realization(&ch.g, &scen.user_powers(), &mrc_receiver(&ch.g), &cm.r_n, &qm);
        for s in sinr {
            assert_eq!(s, 0.0);
        }
    }

    #[test]
    fn sinr_single_user_mrc_matched_filter_bound() {
        // K = 1, infinite resolution, no coupling: SINR = p‖g‖²/σ_n².
        let cp = CircuitParams::paper_default();
        let scen = Scenario::new(1, 5, -10.0, 20.0, 0.0, cp.sigma_n2()).unwrap();
        let geom = ArrayGeometry::ula(16, 0.5).unwrap();
        let cm = CouplingModel::no_coupling(16, &cp).unwrap();
        let mut rng = trial_rng(5, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 16);
        let sinr = sinr_per_realization(&ch.g, &scen.user_powers(), &mrc_receiver(&ch.g), &cm.r_n, &qm);
        let want = scen.p0 * ch.g.column(0).norm_squared() / cp.sigma_n2();
        assert_abs_diff_eq!(sinr[0], want, epsilon = 1e-9 * want);
    }

    #[test]
    fn sinr_zf_whitened_identity() {
        // ZF, infinite resolution: SINR_k = p_k/[(GᴴR_n⁻¹G)⁻¹]_kk.
        let (scen, geom, cm) = paper_setup(16, 0.5, 0.0);
        let mut rng = trial_rng(6, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 16);
        let w = zf_receiver(&ch.g, &cm.r_n).unwrap();
        let sinr = sinr_per_realization(&ch.g, &scen.user_powers(), &w, &cm.r_n, &qm);
        let rinv_g = Cholesky::new(cm.r_n.clone()).unwrap().solve(&ch.g);
        let inv = (ch.g.adjoint() * rinv_g).try_inverse().unwrap();
        for k in 0..scen.users {
            let want = scen.user_powers()[k] / inv[(k, k)].re;
            assert_abs_diff_eq!(sinr[k], want, epsilon = 1e-8 * want);
        }
    }

    #[test]
    fn monte_carlo_matches_single_realization_for_one_trial() {
        let (scen, geom, cm) = paper_setup(16, 0.5, 0.0);
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 16);
        let res = monte_carlo_se(&scen, &geom, &cm, &qm, Receiver::Mrc, 1, 42).unwrap();
        let mut rng = trial_rng(42, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let sinr = sinr_per_realization(&ch.g, &scen.user_powers(), &mrc_receiver(&ch.g), &cm.r_n, &qm);
        for k in 0..scen.users {
            assert_abs_diff_eq!(res.per_user_se[k], (1.0 + sinr[k]).log2(), epsilon = 1e-12);
        }
        assert_eq!(res.trials, 1);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let (scen, geom, cm) = paper_setup(12, 0.5, 10.0)        ;
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 12);
        let a = monte_carlo_se(&scen, &geom, &cm, &qm, Receiver::Zf, 50, 9).unwrap();
        let b = monte_carlo_se(&scen, &geom, &cm, &qm, Receiver::Zf, 50, 9).unwrap();
        assert_eq!(a.per_user_se, b.per_user_se);
        assert_eq!(a.std_error, b.std_error);
    }

    fn designed_quantizer(
        arch: Architecture,
        scen: &Scenario,
        geom: &ArrayGeometry,
        cm: &CouplingModel,
        d: f64,
    ) -> QuantizerModel {
        let phi = steering_phase(scen.theta0_deg, d);
        let mut rng = trial_rng(1234, 0);
        let p_x = crate::channel::expected_antenna_power(scen, geom, cm, 300, &mut rng).unwrap();
        QuantizerModel::design(arch, phi, DEFAULT_ZETA, &p_x).unwrap()
    }

    #[test]
    fn architecture_ordering_on_matched_seeds() {
        // Infinite resolution ≥ both one-bit variants, paired draws.
        let (scen, geom, cm) = paper_setup(32, 0.5, 10.0);
        let seed = 77;
        let trials = 100;
        let inf = flat_quantizer(Architecture::InfiniteResolution, 0.0, 32);
        let sd = designed_quantizer(Architecture::SigmaDeltaOneBit, &scen, &geom, &cm, 0.5);
        let std1 = designed_quantizer(Architecture::StandardOneBit, &scen, &geom, &cm, 0.5);
        for rx in [Receiver::Mrc, Receiver::Zf] {
            let s_inf = monte_carlo_se(&scen, &geom, &cm, &inf, rx, trials, seed).unwrap();
            let s_sd = monte_carlo_se(&scen, &geom, &cm, &sd, rx, trials, seed).unwrap();
            let s_std = monte_carlo_se(&scen, &geom, &cm, &std1, rx, trials, seed).unwrap();
            assert!(s_inf.sum_se >= s_sd.sum_se, "{rx:?}: inf {} < sd {}", s_inf.sum_se, s_sd.sum_se);
            assert!(s_inf.sum_se >= s_std.sum_se, "{rx:?}: inf {} < std {}", s_inf.sum_se, s_std.sum_se);
        }
    }

    #[test]
    fn zf_interference_is_nulled_in_sinr() {
        let (scen, geom, cm) = paper_setup(16, 0.5, 10.0);
        let mut rng = trial_rng(8, 0);
        let ch = draw_channel(&scen, &geom, &cm, &mut rng);
        let qm = designed_quantizer(Architecture::SigmaDeltaOneBit, &scen, &geom, &cm, 0.5);
        let r_eta = EffectiveNoiseModel::new(&cm, &qm).r_eta;
        let w = zf_receiver(&ch.g, &r_eta).unwrap();
        let wh_g = w.adjoint() * &ch.g;
        let p_max = scen.user_powers().iter().cloned().fold(0.0, f64::max);
        for k in 0..scen.users {
            let mut interf = 0.0;
            for i in 0..scen.users {
                if i != k {
                    interf += scen.user_powers()[i] * wh_g[(k, i)].norm_sqr();
                }
            }
            assert!(interf <= 1e-18 * p_max, "user {k}: interference {interf}");
        }
    }

    #[test]
    fn empirical_matches_analytic_without_quantizer() {
        let (scen, geom, cm) = paper_setup(16, 0.5, 0.0);
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 16);
        let a = monte_carlo_se(&scen, &geom, &cm, &qm, Receiver::Mrc, 300, 21).unwrap();
        let e = empirical_se(&scen, &geom, &cm, &qm, Receiver::Mrc, 300, 21).unwrap();
        let rel = (a.sum_se - e.sum_se).abs() / a.sum_se;
        assert!(rel < 0.05, "analytic {} vs empirical {}", a.sum_se, e.sum_se);
    }

    #[test]
    fn empirical_is_deterministic() {
        let (scen, geom, cm) = paper_setup(8, 0.5, 0.0);
        let qm = designed_quantizer(Architecture::SigmaDeltaOneBit, &scen, &geom, &cm, 0.5);
        let a = empirical_se(&scen, &geom, &cm, &qm, Receiver::Mrc, 20, 5).unwrap();
        let b = empirical_se(&scen, &geom, &cm, &qm, Receiver::Mrc, 20, 5).unwrap();
        assert_eq!(a.per_user_se, b.per_user_se);
    }

    #[test]
    fn density_rejects_infinite_resolution() {
        let geom = ArrayGeometry::ula(8, 0.5).unwrap();
        let cp = CircuitParams::paper_default();
        let cm = CouplingModel::no_coupling(8, &cp).unwrap();
        let qm = flat_quantizer(Architecture::InfiniteResolution, 0.0, 8);
        assert!(noise_density(&[0.0], &geom, &cm, &qm).is_err());
    }

    #[test]
    fn density_notch_floor_no_coupling() {
        // φ-matched, no coupling: ρ_q(θ₀) = [R_q]_MM/M.
        let m = 100;
        let theta0 = -10.0;
        let d = 0.5;
        let geom = ArrayGeometry::ula(m, d).unwrap();
        let cp = CircuitParams::paper_default();
        let cm = CouplingModel::no_coupling(m, &cp).unwrap();
        let qm = flat_quantizer(Architecture::SigmaDeltaOneBit, steering_phase(theta0, d), m);
        let rho = noise_density(&[theta0], &geom, &cm, &qm).unwrap()[0].1;
        let want = qm.r_q_diag[m - 1] / m as f64;
        assert_abs_diff_eq!(rho, want, epsilon = 1e-10 * want);
    }

    #[test]
    fn density_flat_for_standard_one_bit() {
        let m = 32;
        let geom = ArrayGeometry::ula(m, 0.5).unwrap();
        let cp = CircuitParams::paper_default();
        let cm = CouplingModel::no_coupling(m, &cp).unwrap();
        let qm = flat_quantizer(Architecture::StandardOneBit, 0.3, m);
        let grid: Vec<f64> = (-90..=90).map(|t| t as f64).collect();
        let rho = noise_density(&grid, &geom, &cm, &qm).unwrap();
        let first = rho[0].1;
        for (_, v) in rho {
            assert_abs_diff_eq!(v, first, epsilon = 1e-12 * first);
        }
    }

    #[test]
    fn density_nonnegative_and_suppressed_in_sector() {
        let m = 64;
        let d = 0.5;
        let theta0 = -10.0;
        let geom = ArrayGeometry::ula(m, d).unwrap();
        let cp = CircuitParams::paper_default();
        let cm = CouplingModel::no_coupling(m, &cp).unwrap();
        let qm = flat_quantizer(Architecture::SigmaDeltaOneBit, steering_phase(theta0, d), m);
        let grid: Vec<f64> = (-90..=90).map(|t| t as f64).collect();
        let rho = noise_density(&grid, &geom, &cm, &qm).unwrap();
        let mut in_sector = Vec::new();
        let mut out_sector = Vec::new();
        for (th, v) in rho {
            assert!(v >= 0.0);
            if (th - theta0).abs() <= 20.0 {
                in_sector.push(v);
            } else {
                out_sector.push(v);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(mean(&in_sector) < mean(&out_sector));
    }

    #[test]
    fn empirical_density_shares_the_notch() {
        // The empirical curve must also dip inside the sector and stay
        // close to the analytic curve in total power.
        let m = 32;
        let d = 0.5;
        let cp = CircuitParams::paper_default();
        let scen = Scenario::new(4, 5, -10.0, 20.0, 0.0, cp.sigma_n2()).unwrap();
        let geom = ArrayGeometry::ula(m, d).unwrap();
        let cm = CouplingModel::no_coupling(m, &cp).unwrap();
        let qm = designed_quantizer(Architecture::SigmaDeltaOneBit, &scen, &geom, &cm, d);
        let grid: Vec<f64> = (-90..=90).map(|t| t as f64).collect();
        let emp = noise_density_empirical(&grid, &scen, &geom, &cm, &qm, 2000, 3, ).unwrap();
        let mut in_sector = Vec::new();
        let mut out_sector = Vec::new();
        for (th, v) in emp {
            assert!(v >= 0.0);
            if (th + 10.0).abs() <= 20.0 {
                in_sector.push(v);
            } else {
                out_sector.push(v);
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&in_sector) < 0.5 * mean(&out_sector),
            "in {} out {}",
            mean(&in_sector),
            mean(&out_sector)
        );
    }
}
