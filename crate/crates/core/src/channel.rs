//! Ray-traced MIMO-OFDM channel and pilot observations.
//!
//! A BS with a `P`-element half-wavelength ULA receives from a single-antenna
//! UE over one LoS path and any number of single-bounce scatterer paths.
//! Path delays and Dopplers of NLoS paths are two-hop aggregates.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{complex_normal, uniform};
use crate::{ComplexMatrix, Error, Result, C64, SPEED_OF_LIGHT};

/// OFDM/array parameters shared by every stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub carrier_freq_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub num_subcarriers: usize,
    pub num_antennas: usize,
    pub antenna_spacing_m: f64,
    pub symbols_per_packet: usize,
    pub symbol_duration_s: f64,
    pub noise_variance_w: f64,
    /// Transmit power used when no SNR target is given (noiseless links).
    pub transmit_power_w: f64,
    /// Pilot codebook length `U`.
    pub codebook_length: usize,
}

impl SystemConfig {
    /// 28 GHz, 480 kHz spacing, 256 subcarriers (122.88 MHz), 8 antennas.
    pub fn full_scale() -> Self {
        let carrier_freq_hz = 28e9;
        let subcarrier_spacing_hz = 480e3;
        Self {
            carrier_freq_hz,
            subcarrier_spacing_hz,
            num_subcarriers: 256,
            num_antennas: 8,
            antenna_spacing_m: SPEED_OF_LIGHT / carrier_freq_hz / 2.0,
            symbols_per_packet: 14,
            symbol_duration_s: 1.0 / subcarrier_spacing_hz,
            noise_variance_w: 4.9177e-12,
            transmit_power_w: 1.0,
            codebook_length: 1,
        }
    }

    /// Same as [`SystemConfig::full_scale`] with 64 subcarriers.
    pub fn desk() -> Self {
        Self {
            num_subcarriers: 64,
            ..Self::full_scale()
        }
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_freq_hz
    }

    /// `T_s^p = P_s · T_s`.
    pub fn packet_interval(&self) -> f64 {
        self.symbols_per_packet as f64 * self.symbol_duration_s
    }

    /// FFT range grid spacing `c / (N_c Δf)`.
    pub fn range_resolution(&self) -> f64 {
        SPEED_OF_LIGHT / (self.num_subcarriers as f64 * self.subcarrier_spacing_hz)
    }

    /// Delay-domain aliasing limit `c / Δf`.
    pub fn unambiguous_range(&self) -> f64 {
        SPEED_OF_LIGHT / self.subcarrier_spacing_hz
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_freq_hz", self.carrier_freq_hz),
            ("subcarrier_spacing_hz", self.subcarrier_spacing_hz),
            ("antenna_spacing_m", self.antenna_spacing_m),
            ("symbol_duration_s", self.symbol_duration_s),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(alloc::format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.noise_variance_w.is_finite() && self.noise_variance_w >= 0.0) {
            return Err(Error::invalid("noise_variance_w must be non-negative"));
        }
        if !(self.transmit_power_w.is_finite() && self.transmit_power_w > 0.0) {
            return Err(Error::invalid("transmit_power_w must be positive"));
        }
        if self.num_antennas < 2 || self.num_subcarriers < 1 || self.symbols_per_packet < 1 {
            return Err(Error::invalid("need at least 2 antennas, 1 subcarrier and 1 symbol per packet"));
        }
        if self.codebook_length < 1 {
            return Err(Error::invalid("codebook_length must be at least 1"));
        }
        Ok(())
    }
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self::desk()
    }
}

/// ULA response `a(θ)`, element `p = exp(j·2π/λ·p·d_a·sin θ)`.
pub fn steering_vector(aoa_deg: f64, p: usize, d_a: f64, lambda: f64) -> Vec<C64> {
    let step = 2.0 * PI / lambda * d_a * libm::sin(aoa_deg.to_radians());
    (0..p).map(|k| C64::from_polar(1.0, step * k as f64)).collect()
}

/// One propagation path as seen by the BS.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathParams {
    pub aoa_deg: f64,
    /// Aggregate delay (two-hop for NLoS paths).
    pub delay_s: f64,
    /// Aggregate Doppler shift.
    pub doppler_hz: f64,
    /// Complex attenuation `b_C,l`, including the reflection factor for NLoS.
    pub attenuation: C64,
}

impl PathParams {
    /// One-way equivalent range `c·τ`.
    pub fn range_m(&self) -> f64 {
        SPEED_OF_LIGHT * self.delay_s
    }
}

/// Ground-truth path set; path 0 is the LoS path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelScene {
    paths: Vec<PathParams>,
}

impl ChannelScene {
    pub fn new(paths: Vec<PathParams>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidScene("a scene needs at least the LoS path".into()));
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.delay_s >= 0.0) {
                return Err(Error::InvalidScene(alloc::format!("path {i} has negative delay")));
            }
            if !(p.aoa_deg.abs() < 90.0) {
                return Err(Error::InvalidScene(alloc::format!("path {i} AoA {} outside (-90, 90)", p.aoa_deg)));
            }
        }
        Ok(Self { paths })
    }

    pub fn paths(&self) -> &[PathParams] {
        &self.paths
    }

    pub fn num_paths(&self) -> usize {
        self.paths.len()
    }

    /// `Σ_l |b_C,l|²`.
    pub fn total_gain(&self) -> f64 {
        self.paths.iter().map(|p| p.attenuation.norm_sqr()).sum()
    }
}

/// Direct UE-BS path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LosGeometry {
    pub aoa_deg: f64,
    pub range_m: f64,
    pub radial_velocity_mps: f64,
}

/// Single-bounce scatterer path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScattererGeometry {
    pub aoa_deg: f64,
    /// UE to scatterer distance `r_l,1`.
    pub ue_range_m: f64,
    /// Scatterer to BS distance `r_l,2`.
    pub bs_range_m: f64,
    pub ue_velocity_mps: f64,
    pub bs_velocity_mps: f64,
    /// Reflection factor `β_C,l`.
    pub reflection: C64,
}

/// Physical geometry from which a [`ChannelScene`] is derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub los: LosGeometry,
    pub scatterers: Vec<ScattererGeometry>,
}

/// UE range interval of dynamic scenes, metres.
pub const DYNAMIC_RANGE_M: (f64, f64) = (5.0, 150.0);
/// UE radial velocity interval of dynamic scenes, m/s.
pub const DYNAMIC_VELOCITY_MPS: (f64, f64) = (-10.0, 10.0);

impl SceneGeometry {
    /// The reference static layout: LoS at 30° / 91.26 m, one scatterer at
    /// 59.5° with 28.7 m + 71.6 m legs, everything at rest.
    pub fn reference_static(reflection: C64) -> Self {
        Self {
            los: LosGeometry {
                aoa_deg: 30.0,
                range_m: 91.26,
                radial_velocity_mps: 0.0,
            },
            scatterers: alloc::vec![ScattererGeometry {
                aoa_deg: 59.5,
                ue_range_m: 28.7,
                bs_range_m: 71.6,
                ue_velocity_mps: 0.0,
                bs_velocity_mps: 0.0,
                reflection,
            }],
        }
    }

    /// Same layout with the UE range and radial velocity redrawn uniformly.
    /// Scatterer geometry and reflection factors are kept.
    pub fn with_random_ue<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let mut g = self.clone();
        g.los.range_m = uniform(rng, DYNAMIC_RANGE_M.0, DYNAMIC_RANGE_M.1);
        g.los.radial_velocity_mps = uniform(rng, DYNAMIC_VELOCITY_MPS.0, DYNAMIC_VELOCITY_MPS.1);
        g
    }

    /// Derives delays, Dopplers and free-space attenuations.
    pub fn to_scene(&self, cfg: &SystemConfig) -> Result<ChannelScene> {
        let lambda = cfg.wavelength();
        let four_pi = 4.0 * PI;
        let mut paths = Vec::with_capacity(1 + self.scatterers.len());
        if !(self.los.range_m > 0.0) {
            return Err(Error::InvalidScene("LoS range must be positive".into()));
        }
        paths.push(PathParams {
            aoa_deg: self.los.aoa_deg,
            delay_s: self.los.range_m / SPEED_OF_LIGHT,
            doppler_hz: self.los.radial_velocity_mps / lambda,
            attenuation: C64::new(lambda / (four_pi * self.los.range_m), 0.0),
        });
        for s in &self.scatterers {
            if !(s.ue_range_m > 0.0 && s.bs_range_m > 0.0) {
                return Err(Error::InvalidScene("scatterer legs must be positive".into()));
            }
            let magnitude = libm::sqrt(
                lambda * lambda / (four_pi * four_pi * four_pi * s.ue_range_m * s.ue_range_m * s.bs_range_m * s.bs_range_m),
            );
            paths.push(PathParams {
                aoa_deg: s.aoa_deg,
                delay_s: (s.ue_range_m + s.bs_range_m) / SPEED_OF_LIGHT,
                doppler_hz: (s.ue_velocity_mps + s.bs_velocity_mps) / lambda,
                attenuation: s.reflection * magnitude,
            });
        }
        ChannelScene::new(paths)
    }
}

/// Draws `β ~ CN(0, 1)` and builds the reference static scene.
pub fn make_static_scene<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<ChannelScene> {
    SceneGeometry::reference_static(complex_normal(rng, 1.0)).to_scene(cfg)
}

/// One packet of a dynamic scene: `base` with a freshly drawn UE range/velocity.
pub fn make_dynamic_scene<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    base: &SceneGeometry,
    rng: &mut R,
) -> Result<ChannelScene> {
    base.with_random_ue(rng).to_scene(cfg)
}

/// True `P × N_c` CSI of packet `packet_index`.
pub fn true_csi(scene: &ChannelScene, cfg: &SystemConfig, packet_index: u64) -> ComplexMatrix {
    let p = cfg.num_antennas;
    let nc = cfg.num_subcarriers;
    let lambda = cfg.wavelength();
    let t_packet = cfg.packet_interval();
    let mut h = ComplexMatrix::zeros(p, nc);
    for path in scene.paths() {
        let doppler_phase = 2.0 * PI * packet_index as f64 * t_packet * path.doppler_hz;
        let alpha = path.attenuation * C64::from_polar(1.0, doppler_phase);
        let a = steering_vector(path.aoa_deg, p, cfg.antenna_spacing_m, lambda);
        let delay: Vec<C64> = (0..nc)
            .map(|n| C64::from_polar(1.0, -2.0 * PI * n as f64 * cfg.subcarrier_spacing_hz * path.delay_s))
            .collect();
        for (row, ap) in a.iter().enumerate() {
            let g = alpha * ap;
            for (entry, d) in h.row_mut(row).iter_mut().zip(&delay) {
                *entry += g * d;
            }
        }
    }
    h
}

/// Transmit power that yields per-antenna SNR `γ_c` (dB): `P_t = γ_c σ_n² / Σ|b|²`.
pub fn snr_to_power(gamma_db: f64, scene: &ChannelScene, cfg: &SystemConfig) -> Result<f64> {
    let gain = scene.total_gain();
    if !(gain > 0.0) {
        return Err(Error::InvalidScene("total path gain is zero".into()));
    }
    Ok(libm::pow(10.0, gamma_db / 10.0) * cfg.noise_variance_w / gain)
}

/// Orthogonal pilot codebook: the rows of a `U × U` DFT matrix, so
/// `s_a^H s_b = U·δ_ab`.
#[derive(Clone, Debug, PartialEq)]
pub struct Codebook {
    codewords: Vec<Vec<C64>>,
}

impl Codebook {
    pub fn dft(length: usize) -> Self {
        assert!(length >= 1, "codebook length must be at least 1");
        let codewords = (0..length)
            .map(|u| {
                (0..length)
                    .map(|k| C64::from_polar(1.0, -2.0 * PI * ((u * k) % length) as f64 / length as f64))
                    .collect()
            })
            .collect();
        Self { codewords }
    }

    pub fn length(&self) -> usize {
        self.codewords.len()
    }

    pub fn codeword(&self, u: usize) -> &[C64] {
        &self.codewords[u]
    }
}

/// Pilot observation of one subcarrier: `Y = √P_t·h·s^H + Z`, `Z ~ CN(0, σ_n²)`.
pub fn receive_observation<R: Rng + ?Sized>(
    h: &[C64],
    codeword: &[C64],
    p_t: f64,
    noise_variance: f64,
    rng: &mut R,
) -> ComplexMatrix {
    let amp = libm::sqrt(p_t);
    ComplexMatrix::from_fn(h.len(), codeword.len(), |p, u| {
        let clean = h[p] * codeword[u].conj() * amp;
        if noise_variance > 0.0 {
            clean + complex_normal(rng, noise_variance)
        } else {
            clean
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::herm_eig;
    use crate::rng::stream;
    use alloc::vec;

    fn one_path(aoa: f64, delay: f64, b: C64) -> ChannelScene {
        ChannelScene::new(vec![PathParams {
            aoa_deg: aoa,
            delay_s: delay,
            doppler_hz: 0.0,
            attenuation: b,
        }])
        .unwrap()
    }

    /// Scalar-loop evaluation of the per-entry channel sum, independent of `true_csi`.
    fn csi_oracle(scene: &ChannelScene, cfg: &SystemConfig, m: u64, p: usize, n: usize) -> C64 {
        let lambda = SPEED_OF_LIGHT / cfg.carrier_freq_hz;
        let mut acc = C64::new(0.0, 0.0);
        for path in scene.paths() {
            let alpha = path.attenuation
                * (C64::new(0.0, 2.0 * PI * m as f64 * cfg.symbols_per_packet as f64 * cfg.symbol_duration_s * path.doppler_hz)).exp();
            let delay = (C64::new(0.0, -2.0 * PI * n as f64 * cfg.subcarrier_spacing_hz * path.delay_s)).exp();
            let spatial = (C64::new(
                0.0,
                2.0 * PI / lambda * p as f64 * cfg.antenna_spacing_m * libm::sin(path.aoa_deg * PI / 180.0),
            ))
            .exp();
            acc += alpha * delay * spatial;
        }
        acc
    }

    #[test]
    fn steering_examples() {
        assert!(steering_vector(0.0, 8, 0.5, 1.0).iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        // Half-wavelength spacing at 30°: phase step π·sin 30° = π/2.
        let a = steering_vector(30.0, 8, 0.5, 1.0);
        for (k, z) in a.iter().enumerate() {
            let want = C64::from_polar(1.0, PI / 2.0 * k as f64);
            assert!((z - want).norm() < 1e-12);
        }
        let b = steering_vector(-30.0, 8, 0.5, 1.0);
        for (x, y) in a.iter().zip(&b) {
            assert!((x.conj() - y).norm() < 1e-15);
        }
    }

    #[test]
    fn single_los_path_at_broadside_is_all_ones() {
        let cfg = SystemConfig::desk();
        let h = true_csi(&one_path(0.0, 0.0, C64::new(1.0, 0.0)), &cfg, 0);
        assert!(h.as_slice().iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
    }

    #[test]
    fn static_scene_reference_values() {
        let cfg = SystemConfig::full_scale();
        let scene = SceneGeometry::reference_static(C64::new(1.0, 0.0)).to_scene(&cfg).unwrap();
        assert_eq!(scene.num_paths(), 2);
        assert!((scene.paths()[0].delay_s - 91.26 / SPEED_OF_LIGHT).abs() < 1e-20);
        assert!((scene.paths()[1].delay_s - (28.7 + 71.6) / SPEED_OF_LIGHT).abs() < 1e-20);
        let lambda = cfg.wavelength();
        assert!((scene.paths()[0].attenuation.re - lambda / (4.0 * PI * 91.26)).abs() < 1e-18);
        // Static: no time variation.
        assert_eq!(true_csi(&scene, &cfg, 0), true_csi(&scene, &cfg, 5));
    }

    #[test]
    fn csi_matches_scalar_oracle() {
        let cfg = SystemConfig::desk();
        let mut rng = stream(3, &[]);
        let base = SceneGeometry::reference_static(C64::new(0.3, -0.8));
        for m in [0u64, 1, 7] {
            let scene = make_dynamic_scene(&cfg, &base, &mut rng).unwrap();
            let h = true_csi(&scene, &cfg, m);
            let scale = scene.paths()[0].attenuation.norm();
            for p in 0..cfg.num_antennas {
                for n in 0..cfg.num_subcarriers {
                    let want = csi_oracle(&scene, &cfg, m, p, n);
                    assert!((h[(p, n)] - want).norm() <= 1e-12 * scale, "({p},{n}) packet {m}");
                }
            }
        }
    }

    #[test]
    fn reference_scene_has_rank_two() {
        let cfg = SystemConfig::full_scale();
        let scene = SceneGeometry::reference_static(C64::new(1.0, 0.0)).to_scene(&cfg).unwrap();
        let h = true_csi(&scene, &cfg, 0);
        let r = h.gram_rows(cfg.num_subcarriers as f64);
        let e = herm_eig(&r).unwrap();
        let top = e.values[0];
        assert!(e.values[1] / top > 1e-8, "NLoS eigenvalue must be resolvable");
        assert!(e.values[2..].iter().all(|v| v.abs() / top < 1e-12));
    }

    #[test]
    fn energy_grows_linearly_in_subcarriers() {
        let mut cfg = SystemConfig::desk();
        let scene = one_path(20.0, 1e-7, C64::new(0.5, 0.5));
        for nc in [16usize, 64, 256] {
            cfg.num_subcarriers = nc;
            let h = true_csi(&scene, &cfg, 0);
            let want = (nc * cfg.num_antennas) as f64 * 0.5;
            assert!((h.frobenius_norm_sqr() - want).abs() < 1e-9 * want);
        }
    }

    #[test]
    fn dynamic_scene_is_reproducible_and_in_bounds() {
        let cfg = SystemConfig::desk();
        let base = SceneGeometry::reference_static(C64::new(1.0, 0.0));
        let a = make_dynamic_scene(&cfg, &base, &mut stream(11, &[1])).unwrap();
        let b = make_dynamic_scene(&cfg, &base, &mut stream(11, &[1])).unwrap();
        assert_eq!(a, b);
        let mut rng = stream(12, &[]);
        for _ in 0..1000 {
            let g = base.with_random_ue(&mut rng);
            assert!((5.0..150.0).contains(&g.los.range_m));
            assert!((-10.0..10.0).contains(&g.los.radial_velocity_mps));
            assert_eq!(g.scatterers, base.scatterers);
        }
    }

    #[test]
    fn snr_to_power_examples() {
        let cfg = SystemConfig {
            noise_variance_w: 0.25,
            ..SystemConfig::desk()
        };
        let scene = one_path(0.0, 0.0, C64::new(0.5, 0.0));
        assert!((snr_to_power(0.0, &scene, &cfg).unwrap() - 1.0).abs() < 1e-15);
        let p3 = snr_to_power(10.0 * libm::log10(2.0), &scene, &cfg).unwrap();
        assert!((p3 - 2.0).abs() < 1e-12);

        // Reference scene at 10 dB with β = 1.
        let cfg = SystemConfig::full_scale();
        let scene = SceneGeometry::reference_static(C64::new(1.0, 0.0)).to_scene(&cfg).unwrap();
        let lambda = SPEED_OF_LIGHT / 28e9;
        let g0 = (lambda / (4.0 * PI * 91.26)) * (lambda / (4.0 * PI * 91.26));
        let g1 = lambda * lambda / ((4.0 * PI) * (4.0 * PI) * (4.0 * PI) * 28.7 * 28.7 * 71.6 * 71.6);
        let want = 10.0 * 4.9177e-12 / (g0 + g1);
        let got = snr_to_power(10.0, &scene, &cfg).unwrap();
        assert!((got - want).abs() < 1e-12 * want);

        let dead = one_path(0.0, 0.0, C64::new(0.0, 0.0));
        assert!(matches!(snr_to_power(0.0, &dead, &cfg), Err(Error::InvalidScene(_))));
    }

    #[test]
    fn scene_validation() {
        assert!(ChannelScene::new(vec![]).is_err());
        let bad = PathParams {
            aoa_deg: 90.0,
            delay_s: 0.0,
            doppler_hz: 0.0,
            attenuation: C64::new(1.0, 0.0),
        };
        assert!(ChannelScene::new(vec![bad]).is_err());
    }

    #[test]
    fn codebook_is_orthogonal() {
        let cb = Codebook::dft(14);
        for a in 0..14 {
            for b in 0..14 {
                let ip: C64 = cb.codeword(a).iter().zip(cb.codeword(b)).map(|(x, y)| x.conj() * y).sum();
                let want = if a == b { 14.0 } else { 0.0 };
                assert!((ip - C64::new(want, 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn observation_noise_is_white_with_nominal_variance() {
        let h = vec![C64::new(0.0, 0.0); 8];
        let cb = Codebook::dft(1);
        let mut rng = stream(5, &[]);
        let draws = 10_000;
        let mut samples = Vec::with_capacity(draws * 8);
        for _ in 0..draws {
            let y = receive_observation(&h, cb.codeword(0), 1.0, 0.3, &mut rng);
            samples.extend_from_slice(y.as_slice());
        }
        let n = samples.len() as f64;
        let var: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((var - 0.3).abs() < 0.05 * 0.3);
        // Off-lag autocorrelation decays like 1/sqrt(n).
        for lag in 1..4 {
            let c: C64 = samples.windows(lag + 1).map(|w| w[0].conj() * w[lag]).sum::<C64>() / n;
            assert!(c.norm() / var < 5.0 / libm::sqrt(n), "lag {lag}");
        }
    }

    #[test]
    fn observation_is_deterministic_per_seed() {
        let h = vec![C64::new(1.0, 2.0); 4];
        let cb = Codebook::dft(3);
        let a = receive_observation(&h, cb.codeword(1), 2.0, 1.0, &mut stream(9, &[4]));
        let b = receive_observation(&h, cb.codeword(1), 2.0, 1.0, &mut stream(9, &[4]));
        assert_eq!(a, b);
    }
}
