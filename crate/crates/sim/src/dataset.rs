//! Binary CSI dataset files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! offset  size            field
//! 0       8               magic "ISACCSI1"
//! 8       2               version (u16) = 1
//! 10      4               sample count S (u32)
//! 14      4               antennas P (u32)
//! 18      4               subcarriers N_c (u32)
//! 22      4               SNR tag count K (u32)
//! 26      4               path slots L_max (u32)
//! 30      8·K             SNR tags in dB (f64)
//! ...     S × record      samples
//! end-4   4               CRC-32 (IEEE) of every preceding byte (u32)
//! ```
//!
//! A record is `5 + 5·L_max + 4·P·N_c` f64 values:
//! `snr_db, rho, noise_var_est, num_paths, packet_index`, then `L_max` path
//! slots `(aoa_deg, delay_s, doppler_hz, attenuation_re, attenuation_im)`
//! with unused slots zero, then the input CSI and the target CSI, each
//! row-major (antenna-major) with real and imaginary parts interleaved.
//!
//! `input` is the normalised LS estimate `Ĥ/√ρ` and `target` is `H/√ρ` with
//! the same `ρ`, the signal power estimated from `Ĥ`.

use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use isac_core::channel::{ChannelScene, PathParams};
use isac_core::cnn::Sample;
use isac_core::{ComplexMatrix, C64};

pub const DATASET_MAGIC: &[u8; 8] = b"ISACCSI1";
pub const DATASET_VERSION: u16 = 1;
const HEADER_LEN: usize = 30;
const PATH_FIELDS: usize = 5;
const SCALAR_FIELDS: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSample {
    pub snr_db: f64,
    /// Signal power `ρ` estimated from the raw LS estimate.
    pub rho: f64,
    /// Noise variance estimated from the raw LS estimate.
    pub noise_var_est: f64,
    pub packet_index: u64,
    pub scene: ChannelScene,
    pub input: ComplexMatrix,
    pub target: ComplexMatrix,
}

impl DatasetSample {
    pub fn to_sample(&self) -> Sample {
        Sample {
            input: self.input.clone(),
            target: self.target.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub num_antennas: usize,
    pub num_subcarriers: usize,
    pub snr_tags_db: Vec<f64>,
    pub samples: Vec<DatasetSample>,
}

impl Dataset {
    pub fn new(num_antennas: usize, num_subcarriers: usize, snr_tags_db: Vec<f64>, samples: Vec<DatasetSample>) -> Result<Self> {
        let ds = Self {
            num_antennas,
            num_subcarriers,
            snr_tags_db,
            samples,
        };
        ds.check()?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        let dims = (self.num_antennas, self.num_subcarriers);
        for (i, s) in self.samples.iter().enumerate() {
            ensure!(
                s.input.shape() == dims && s.target.shape() == dims,
                "sample {i} is {:?}, dataset is {}×{}",
                s.input.shape(),
                dims.0,
                dims.1
            );
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn training_samples(&self) -> Vec<Sample> {
        self.samples.iter().map(DatasetSample::to_sample).collect()
    }

    /// Samples tagged with `snr_db`.
    pub fn at_snr(&self, snr_db: f64) -> impl Iterator<Item = &DatasetSample> {
        self.samples.iter().filter(move |s| s.snr_db == snr_db)
    }

    pub fn max_paths(&self) -> usize {
        self.samples.iter().map(|s| s.scene.num_paths()).max().unwrap_or(0)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.check()?;
        let l_max = self.max_paths();
        let cells = self.num_antennas * self.num_subcarriers;
        let record = SCALAR_FIELDS + PATH_FIELDS * l_max + 4 * cells;
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * (self.snr_tags_db.len() + record * self.len()) + 4);
        out.extend_from_slice(DATASET_MAGIC);
        out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        for n in [self.len(), self.num_antennas, self.num_subcarriers, self.snr_tags_db.len(), l_max] {
            out.extend_from_slice(&u32::try_from(n).context("count exceeds u32")?.to_le_bytes());
        }
        let mut put = |x: f64| out.extend_from_slice(&x.to_le_bytes());
        for &t in &self.snr_tags_db {
            put(t);
        }
        for s in &self.samples {
            put(s.snr_db);
            put(s.rho);
            put(s.noise_var_est);
            put(s.scene.num_paths() as f64);
            put(s.packet_index as f64);
            for l in 0..l_max {
                match s.scene.paths().get(l) {
                    Some(p) => {
                        for x in [p.aoa_deg, p.delay_s, p.doppler_hz, p.attenuation.re, p.attenuation.im] {
                            put(x);
                        }
                    }
                    None => (0..PATH_FIELDS).for_each(|_| put(0.0)),
                }
            }
            for m in [&s.input, &s.target] {
                for z in m.as_slice() {
                    put(z.re);
                    put(z.im);
                }
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        ensure!(bytes.len() >= HEADER_LEN + 4, "dataset truncated: {} bytes", bytes.len());
        ensure!(&bytes[..8] == DATASET_MAGIC, "not a dataset file (bad magic)");
        let version = u16::from_le_bytes([bytes[8], bytes[9]]);
        if version != DATASET_VERSION {
            bail!("unsupported dataset version {version}, expected {DATASET_VERSION}");
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        ensure!(crc32fast::hash(body) == stored, "dataset checksum mismatch");
        let u32_at = |o: usize| u32::from_le_bytes(body[o..o + 4].try_into().expect("4 bytes")) as usize;
        let (n, p, nc, k, l_max) = (u32_at(10), u32_at(14), u32_at(18), u32_at(22), u32_at(26));
        let record = SCALAR_FIELDS + PATH_FIELDS * l_max + 4 * p * nc;
        let expected = HEADER_LEN + 8 * (k + n * record);
        ensure!(
            body.len() == expected,
            "dataset payload is {} bytes, header ({n} samples of {p}×{nc}, {k} tags, {l_max} paths) implies {expected}",
            body.len()
        );
        let mut vals = body[HEADER_LEN..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")));
        let mut next = || vals.next().expect("length checked");
        let snr_tags_db = (0..k).map(|_| next()).collect();
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let snr_db = next();
            let rho = next();
            let noise_var_est = next();
            let num_paths = next();
            let packet_index = next();
            ensure!(
                num_paths >= 0.0 && num_paths <= l_max as f64 && num_paths.fract() == 0.0,
                "sample {i}: bad path count {num_paths}"
            );
            let mut paths = Vec::with_capacity(num_paths as usize);
            for l in 0..l_max {
                let f: Vec<f64> = (0..PATH_FIELDS).map(|_| next()).collect();
                if l < num_paths as usize {
                    paths.push(PathParams {
                        aoa_deg: f[0],
                        delay_s: f[1],
                        doppler_hz: f[2],
                        attenuation: C64::new(f[3], f[4]),
                    });
                }
            }
            let scene = ChannelScene::new(paths).with_context(|| format!("sample {i}"))?;
            let mut read_matrix = || {
                let data: Vec<C64> = (0..p * nc).map(|_| C64::new(next(), next())).collect();
                ComplexMatrix::from_vec(p, nc, data)
            };
            let input = read_matrix()?;
            let target = read_matrix()?;
            samples.push(DatasetSample {
                snr_db,
                rho,
                noise_var_est,
                packet_index: packet_index as u64,
                scene,
                input,
                target,
            });
        }
        Self::new(p, nc, snr_tags_db, samples)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_bytes(&bytes).with_context(|| format!("loading {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        let scene = |n: usize| {
            ChannelScene::new(
                (0..n)
                    .map(|l| PathParams {
                        aoa_deg: 10.0 * l as f64,
                        delay_s: 1e-7 * (l + 1) as f64,
                        doppler_hz: -3.0,
                        attenuation: C64::new(0.5, -0.25),
                    })
                    .collect(),
            )
            .unwrap()
        };
        let m = |k: f64| ComplexMatrix::from_fn(2, 3, |r, c| C64::new(r as f64 + k, c as f64 - k));
        let samples = vec![
            DatasetSample {
                snr_db: 5.0,
                rho: 2.0,
                noise_var_est: 0.1,
                packet_index: 7,
                scene: scene(2),
                input: m(1.0),
                target: m(2.0),
            },
            DatasetSample {
                snr_db: 10.0,
                rho: 3.0,
                noise_var_est: 0.0,
                packet_index: 0,
                scene: scene(1),
                input: m(3.0),
                target: m(4.0),
            },
        ];
        Dataset::new(2, 3, vec![5.0, 10.0], samples).unwrap()
    }

    #[test]
    fn round_trip_and_layout() {
        let ds = tiny();
        let bytes = ds.to_bytes().unwrap();
        assert_eq!(&bytes[..8], b"ISACCSI1");
        assert_eq!(bytes.len(), 30 + 8 * (2 + 2 * (5 + 10 + 24)) + 4);
        // First float of the second input matrix, real part of (0,0).
        let rec = 5 + 10 + 24;
        let off = 30 + 8 * (2 + rec + 5 + 10);
        assert_eq!(f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap()), 3.0);
        assert_eq!(Dataset::from_bytes(&bytes).unwrap(), ds);
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = tiny().to_bytes().unwrap();
        let mut bad = bytes.clone();
        bad[100] ^= 1;
        assert!(Dataset::from_bytes(&bad).unwrap_err().to_string().contains("checksum"));
        let mut bad = bytes.clone();
        bad[8] = 2;
        assert!(Dataset::from_bytes(&bad).unwrap_err().to_string().contains("version"));
        assert!(Dataset::from_bytes(&bytes[..bytes.len() - 9]).is_err());
        assert!(Dataset::from_bytes(b"ISACCNN1\x01\x00").is_err());
    }
}
