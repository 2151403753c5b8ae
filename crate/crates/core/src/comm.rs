//! Gray-coded QAM over the beamformed channel and BER measurement.
//!
//! Bit labels (first bit is the most significant of the point index):
//!
//! | order | in-phase bits | quadrature bits | axis levels |
//! |-------|---------------|-----------------|-------------|
//! | 4     | `b0`: 0 → −1, 1 → +1 | `b1`: 0 → −1, 1 → +1 | scaled by `1/√2` |
//! | 16    | `b0 b1`: 00 → −3, 01 → −1, 11 → +1, 10 → +3 | `b2 b3`: same | scaled by `1/√10` |

use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{snr_to_power, true_csi, ChannelScene, Codebook, SystemConfig};
use crate::cnn::EnhancerModel;
use crate::estimate::{lmmse_estimate_matrix, ls_estimate_packet, normalize, DEFAULT_EPSILON};
use crate::rng::{complex_normal, purpose, stream};
use crate::sensing::{apply_beamformer, estimate_paths};
use crate::{ComplexMatrix, Error, Result, C64};

/// Channel estimates below this magnitude cannot be equalised.
pub const MIN_CHANNEL_MAGNITUDE: f64 = 1e-15;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QamConstellation {
    order: usize,
    bits_per_symbol: usize,
    points: Vec<C64>,
}

fn gray_level_2bit(b0: usize, b1: usize) -> f64 {
    match (b0, b1) {
        (0, 0) => -3.0,
        (0, 1) => -1.0,
        (1, 1) => 1.0,
        _ => 3.0,
    }
}

impl QamConstellation {
    /// 4- or 16-point square QAM with unit mean energy.
    pub fn new(order: usize) -> Result<Self> {
        let points: Vec<C64> = match order {
            4 => {
                let s = 1.0 / libm::sqrt(2.0);
                (0..4)
                    .map(|i| {
                        let level = |b: usize| if b == 1 { s } else { -s };
                        C64::new(level((i >> 1) & 1), level(i & 1))
                    })
                    .collect()
            }
            16 => {
                let s = 1.0 / libm::sqrt(10.0);
                (0..16)
                    .map(|i| {
                        let re = gray_level_2bit((i >> 3) & 1, (i >> 2) & 1);
                        let im = gray_level_2bit((i >> 1) & 1, i & 1);
                        C64::new(re * s, im * s)
                    })
                    .collect()
            }
            _ => return Err(Error::invalid(alloc::format!("unsupported QAM order {order}"))),
        };
        Ok(Self {
            order,
            bits_per_symbol: order.trailing_zeros() as usize,
            points,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> usize {
        self.bits_per_symbol
    }

    /// Point `i` carries the bits of `i`, most significant first.
    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Index of the nearest constellation point.
    pub fn nearest(&self, z: C64) -> usize {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, p) in self.points.iter().enumerate() {
            let d = (z - p).norm_sqr();
            if d < dist {
                dist = d;
                best = i;
            }
        }
        best
    }

    fn push_bits(&self, index: usize, out: &mut Vec<u8>) {
        for b in (0..self.bits_per_symbol).rev() {
            out.push(((index >> b) & 1) as u8);
        }
    }
}

/// Maps bits (0/1 values, most significant first) to symbols.
pub fn modulate(bits: &[u8], constellation: &QamConstellation) -> Result<Vec<C64>> {
    let k = constellation.bits_per_symbol;
    if bits.len() % k != 0 {
        return Err(Error::invalid(alloc::format!("{} bits is not a multiple of {k}", bits.len())));
    }
    bits.chunks_exact(k)
        .map(|chunk| {
            let mut idx = 0usize;
            for &b in chunk {
                if b > 1 {
                    return Err(Error::invalid("bits must be 0 or 1"));
                }
                idx = (idx << 1) | b as usize;
            }
            Ok(constellation.points[idx])
        })
        .collect()
}

/// ML detection `argmin_d |y/(√P_t·ĥ) − d|²` of one symbol per subcarrier.
pub fn demodulate_ml(y: &[C64], h_est: &[C64], p_t: f64, constellation: &QamConstellation) -> Result<Vec<u8>> {
    if y.len() != h_est.len() {
        return Err(Error::invalid("observation and channel lengths differ"));
    }
    let amp = libm::sqrt(p_t);
    let mut bits = Vec::with_capacity(y.len() * constellation.bits_per_symbol);
    for (n, (yn, hn)) in y.iter().zip(h_est).enumerate() {
        if hn.norm() < MIN_CHANNEL_MAGNITUDE {
            return Err(Error::UnusableSubcarrier(n));
        }
        constellation.push_bits(constellation.nearest(yn / (hn * amp)), &mut bits);
    }
    Ok(bits)
}

/// Where the receiver's CSI comes from.
#[derive(Clone, Copy, Debug)]
pub enum CsiSource<'a> {
    /// The true channel, with the true path count.
    Perfect,
    /// The pilot LS estimate.
    Ls,
    /// LMMSE on the normalised LS estimate with a normalised-domain `R_hh`.
    /// With no estimated noise the LS estimate passes through.
    Lmmse(&'a ComplexMatrix),
    /// The CNN enhancer on the normalised LS estimate.
    Enhanced(&'a EnhancerModel),
}

impl CsiSource<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            CsiSource::Perfect => "perfect",
            CsiSource::Ls => "ls",
            CsiSource::Lmmse(_) => "lmmse",
            CsiSource::Enhanced(_) => "enhanced",
        }
    }

    /// CSI estimate from the true channel and its LS estimate.
    pub fn estimate(&self, h_true: &ComplexMatrix, h_ls: &ComplexMatrix) -> Result<ComplexMatrix> {
        match self {
            CsiSource::Perfect => Ok(h_true.clone()),
            CsiSource::Ls => Ok(h_ls.clone()),
            CsiSource::Lmmse(r) => {
                let (hn, rep) = normalize(h_ls, DEFAULT_EPSILON)?;
                let noise = rep.noise_var_est / rep.signal_power_est;
                if noise <= 0.0 {
                    return Ok(h_ls.clone());
                }
                Ok(lmmse_estimate_matrix(&hn, r, noise)?.scale_real(libm::sqrt(rep.signal_power_est)))
            }
            CsiSource::Enhanced(model) => {
                let (hn, rep) = normalize(h_ls, DEFAULT_EPSILON)?;
                Ok(model.forward(&hn)?.scale_real(libm::sqrt(rep.signal_power_est)))
            }
        }
    }
}

/// Bit error tally.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BerCount {
    pub bit_errors: u64,
    pub bits: u64,
    /// Symbols dropped because the channel estimate was unusable.
    pub skipped_symbols: u64,
}

impl BerCount {
    pub fn add(&mut self, other: &BerCount) {
        self.bit_errors += other.bit_errors;
        self.bits += other.bits;
        self.skipped_symbols += other.skipped_symbols;
    }

    pub fn rate(&self) -> f64 {
        if self.bits == 0 {
            0.0
        } else {
            self.bit_errors as f64 / self.bits as f64
        }
    }
}

/// One packet: pilots, CSI estimation, combining with the strongest path's
/// zero-forcing beamformer, and `P_s` data symbols on every subcarrier.
///
/// Random draws are keyed by `(seed, purpose, packet_key)`; the packet's
/// Doppler phase uses `packet_key` as the packet index.
pub fn ber_packet(
    scene: &ChannelScene,
    cfg: &SystemConfig,
    source: &CsiSource<'_>,
    snr_db: f64,
    constellation: &QamConstellation,
    seed: u64,
    packet_key: u64,
) -> Result<BerCount> {
    cfg.validate()?;
    let sigma2 = cfg.noise_variance_w;
    let p_t = if sigma2 > 0.0 {
        snr_to_power(snr_db, scene, cfg)?
    } else {
        cfg.transmit_power_w
    };
    let h = true_csi(scene, cfg, packet_key);
    let h_ls = ls_estimate_packet(&h, &Codebook::dft(cfg.codebook_length), 0, p_t, sigma2, seed, packet_key)?;
    let h_est = source.estimate(&h, &h_ls)?;
    let l_hat = match source {
        CsiSource::Perfect => Some(scene.num_paths().min(cfg.num_antennas - 1)),
        _ => None,
    };
    let (_, w) = estimate_paths(&h_est, cfg, l_hat)?;

    let mut best: Option<(f64, Vec<C64>, Vec<C64>)> = None;
    for l in 0..w.cols() {
        let wl = w.col(l);
        let g = apply_beamformer(&h_est, &wl);
        let energy = crate::numerics::norm_sqr(&g);
        if best.as_ref().map_or(true, |b| energy > b.0) {
            best = Some((energy, wl, g));
        }
    }
    let (_, w0, h_eff) = best.ok_or_else(|| Error::Degenerate("no beamformer".into()))?;

    let k = constellation.bits_per_symbol();
    let mut bit_rng = stream(seed, &[purpose::DATA_BITS, packet_key]);
    let mut noise_rng = stream(seed, &[purpose::DATA_NOISE, packet_key]);
    let amp = libm::sqrt(p_t);
    let mut count = BerCount::default();
    let mut tx_bits = Vec::with_capacity(k);
    let mut rx_bits = Vec::with_capacity(k);
    for _ in 0..cfg.symbols_per_packet {
        for n in 0..cfg.num_subcarriers {
            let idx = bit_rng.random_range(0..constellation.order());
            let d = constellation.points()[idx];
            let mut r = C64::new(0.0, 0.0);
            for p in 0..cfg.num_antennas {
                let mut y = h[(p, n)] * d * amp;
                if sigma2 > 0.0 {
                    y += complex_normal(&mut noise_rng, sigma2);
                }
                r += w0[p].conj() * y;
            }
            if h_eff[n].norm() < MIN_CHANNEL_MAGNITUDE {
                count.skipped_symbols += 1;
                continue;
            }
            tx_bits.clear();
            rx_bits.clear();
            constellation.push_bits(idx, &mut tx_bits);
            constellation.push_bits(constellation.nearest(r / (h_eff[n] * amp)), &mut rx_bits);
            count.bits += k as u64;
            count.bit_errors += tx_bits.iter().zip(&rx_bits).filter(|(a, b)| a != b).count() as u64;
        }
    }
    Ok(count)
}

/// [`ber_packet`] over consecutive packets `0..scenes.len()`.
pub fn ber_run(
    scenes: &[ChannelScene],
    cfg: &SystemConfig,
    source: &CsiSource<'_>,
    snr_db: f64,
    constellation: &QamConstellation,
    seed: u64,
) -> Result<BerCount> {
    let mut total = BerCount::default();
    for (m, scene) in scenes.iter().enumerate() {
        total.add(&ber_packet(scene, cfg, source, snr_db, constellation, seed, m as u64)?);
    }
    Ok(total)
}

/// Gray-coded QAM over a unit scalar AWGN channel at `E_b/N_0 = ebn0_db`.
pub fn scalar_awgn_ber(constellation: &QamConstellation, ebn0_db: f64, num_symbols: usize, seed: u64) -> BerCount {
    let k = constellation.bits_per_symbol();
    let n0 = 1.0 / (k as f64 * libm::pow(10.0, ebn0_db / 10.0));
    let mut rng = stream(seed, &[purpose::DATA_NOISE]);
    let mut count = BerCount::default();
    for _ in 0..num_symbols {
        let idx = rng.random_range(0..constellation.order());
        let y = constellation.points()[idx] + complex_normal(&mut rng, n0);
        let got = constellation.nearest(y);
        count.bits += k as u64;
        count.bit_errors += (idx ^ got).count_ones() as u64;
    }
    count
}

/// Gaussian tail `Q(x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / libm::sqrt(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::SceneGeometry;
    use alloc::vec;

    #[test]
    fn constellations_are_normalised_gray_codes() {
        for order in [4usize, 16] {
            let c = QamConstellation::new(order).unwrap();
            let mean: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / order as f64;
            assert!((mean - 1.0).abs() < 1e-12);
            let dmin = c.points()
                .iter()
                .enumerate()
                .flat_map(|(i, a)| c.points()[i + 1..].iter().map(move |b| (a - b).norm()))
                .fold(f64::INFINITY, f64::min);
            for i in 0..order {
                for j in 0..order {
                    if i != j && ((c.points()[i] - c.points()[j]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((i ^ j).count_ones(), 1, "order {order}: {i} vs {j}");
                    }
                }
            }
        }
        assert!(QamConstellation::new(8).is_err());
    }

    #[test]
    fn sixteen_qam_table() {
        let c = QamConstellation::new(16).unwrap();
        let s = 1.0 / libm::sqrt(10.0);
        // 0b0010: I bits 00 → −3, Q bits 10 → +3.
        assert!((c.points()[0b0010] - C64::new(-3.0 * s, 3.0 * s)).norm() < 1e-15);
        assert!((c.points()[0b1101] - C64::new(s, -s)).norm() < 1e-15);
    }

    #[test]
    fn round_trip_noiseless() {
        let mut rng = stream(1, &[]);
        for order in [4usize, 16] {
            let c = QamConstellation::new(order).unwrap();
            for _ in 0..order * 1000 / 16 {
                let bits: Vec<u8> = (0..c.bits_per_symbol() * 16).map(|_| rng.random_range(0..2u8)).collect();
                let syms = modulate(&bits, &c).unwrap();
                let h: Vec<C64> = (0..syms.len()).map(|_| complex_normal(&mut rng, 1.0)).collect();
                let p_t = 3.7;
                let y: Vec<C64> = syms.iter().zip(&h).map(|(d, hn)| hn * d * libm::sqrt(p_t)).collect();
                assert_eq!(demodulate_ml(&y, &h, p_t, &c).unwrap(), bits);
            }
        }
    }

    #[test]
    fn unusable_subcarrier_is_reported() {
        let c = QamConstellation::new(4).unwrap();
        let y = vec![C64::new(1.0, 0.0); 3];
        let h = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        assert_eq!(demodulate_ml(&y, &h, 1.0, &c), Err(Error::UnusableSubcarrier(1)));
        assert!(modulate(&[1, 0, 1], &c).is_err());
    }

    #[test]
    fn perfect_csi_noiseless_link_is_error_free() {
        let cfg = SystemConfig {
            noise_variance_w: 0.0,
            ..SystemConfig::desk()
        };
        let scene = SceneGeometry::reference_static(C64::new(0.6, -0.8)).to_scene(&cfg).unwrap();
        for order in [4usize, 16] {
            let c = QamConstellation::new(order).unwrap();
            let n = ber_run(&[scene.clone(), scene.clone()], &cfg, &CsiSource::Perfect, 10.0, &c, 5).unwrap();
            assert_eq!(n.bit_errors, 0);
            assert_eq!(n.bits, (2 * cfg.symbols_per_packet * cfg.num_subcarriers * c.bits_per_symbol()) as u64);
        }
    }

    #[test]
    fn ber_is_reproducible_and_falls_with_snr() {
        let cfg = SystemConfig::desk();
        let base = SceneGeometry::reference_static(C64::new(1.0, 0.0));
        let scenes: Vec<ChannelScene> = (0..4)
            .map(|k| crate::channel::make_dynamic_scene(&cfg, &base, &mut stream(2, &[k])).unwrap())
            .collect();
        let c = QamConstellation::new(4).unwrap();
        let a = ber_run(&scenes, &cfg, &CsiSource::Ls, 0.0, &c, 3).unwrap();
        let b = ber_run(&scenes, &cfg, &CsiSource::Ls, 0.0, &c, 3).unwrap();
        assert_eq!(a, b);
        let hi = ber_run(&scenes, &cfg, &CsiSource::Ls, 10.0, &c, 3).unwrap();
        assert!(a.rate() > 0.0);
        assert!(hi.rate() < a.rate());
    }

    #[test]
    fn scalar_qpsk_matches_closed_form() {
        let c = QamConstellation::new(4).unwrap();
        let ebn0_db = 4.0;
        let n = scalar_awgn_ber(&c, ebn0_db, 200_000, 9);
        let p = q_function(libm::sqrt(2.0 * libm::pow(10.0, ebn0_db / 10.0)));
        let sd = libm::sqrt(p * (1.0 - p) / n.bits as f64);
        assert!((n.rate() - p).abs() < 3.0 * sd, "{} vs {p}", n.rate());
    }

    #[test]
    fn q_function_values() {
        assert!((q_function(0.0) - 0.5).abs() < 1e-15);
        assert!((q_function(1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
    }
}
