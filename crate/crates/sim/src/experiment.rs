//! Dataset generation and the evaluation, sensing and BER sweeps.

use anyhow::{Context, Result};
use isac_core::channel::{
    make_dynamic_scene, snr_to_power, true_csi, ChannelScene, Codebook, SceneGeometry, SystemConfig,
};
use isac_core::cnn::{nmse_db, train, EnhancerModel, TrainRecord};
use isac_core::comm::{ber_packet, BerCount, CsiSource, QamConstellation};
use isac_core::estimate::{analyze, lmmse_estimate_matrix, ls_estimate_packet, normalize, sample_autocorrelation, DEFAULT_EPSILON};
use isac_core::rng::{complex_normal, purpose, stream};
use isac_core::sensing::{apply_beamformer, biased_fft_range_estimate, estimate_paths, fft_range_estimate, BiasedFftConfig};
use isac_core::{ComplexMatrix, Error};
use rand::seq::SliceRandom;
use rand::RngCore;
use rayon::prelude::*;

use crate::checkpoint::check_dims;
use crate::config::{ExperimentConfig, SceneKind};
use crate::dataset::{Dataset, DatasetSample};
use crate::metrics::MetricRow;
use crate::parallel::ParallelGradient;

/// Scene stream namespaces under `purpose::SCENE`.
const SCENE_BASE: u64 = 0;
const SCENE_DATASET: u64 = 1;
const SCENE_BER: u64 = 2;
/// Sub-seed tag of the BER sweep, keeping its pilot noise apart from the dataset's.
const BER_SEED_TAG: u64 = 0x4245_5231;

/// The reference layout with `β ~ CN(0, 1)` drawn once per run.
pub fn base_geometry(cfg: &ExperimentConfig) -> SceneGeometry {
    let mut rng = stream(cfg.seed, &[purpose::SCENE, SCENE_BASE]);
    SceneGeometry::reference_static(complex_normal(&mut rng, 1.0))
}

fn scene_for(cfg: &ExperimentConfig, base: &SceneGeometry, namespace: u64, key: u64) -> Result<ChannelScene> {
    Ok(match cfg.scene.kind {
        SceneKind::Static => base.to_scene(&cfg.system)?,
        SceneKind::Dynamic => {
            make_dynamic_scene(&cfg.system, base, &mut stream(cfg.seed, &[purpose::SCENE, namespace, key]))?
        }
    })
}

/// One LS observation of `scene` at `snr_db`, normalised by its own `ρ`.
/// Without noise the configured transmit power is used.
pub fn make_sample(
    system: &SystemConfig,
    scene: ChannelScene,
    snr_db: f64,
    seed: u64,
    packet_index: u64,
) -> Result<DatasetSample> {
    let p_t = if system.noise_variance_w > 0.0 {
        snr_to_power(snr_db, &scene, system)?
    } else {
        system.transmit_power_w
    };
    let h = true_csi(&scene, system, packet_index);
    let codebook = Codebook::dft(system.codebook_length);
    let h_ls = ls_estimate_packet(&h, &codebook, 0, p_t, system.noise_variance_w, seed, packet_index)?;
    let (input, rep) = normalize(&h_ls, DEFAULT_EPSILON)?;
    let target = h.scale_real(1.0 / rep.signal_power_est.sqrt());
    Ok(DatasetSample {
        snr_db,
        rho: rep.signal_power_est,
        noise_var_est: rep.noise_var_est,
        packet_index,
        scene,
        input,
        target,
    })
}

/// All `samples_per_snr × |snr_list|` samples in generation order. Sample
/// `k` uses packet index `k` and scene key `k`.
pub fn generate_all(cfg: &ExperimentConfig) -> Result<Dataset> {
    let base = base_geometry(cfg);
    let m = cfg.data.samples_per_snr;
    let jobs: Vec<(u64, f64)> = cfg
        .data
        .snr_list_db
        .iter()
        .enumerate()
        .flat_map(|(i, &snr)| (0..m).map(move |j| ((i * m + j) as u64, snr)))
        .collect();
    let samples = jobs
        .par_iter()
        .map(|&(k, snr)| {
            let scene = scene_for(cfg, &base, SCENE_DATASET, k)?;
            make_sample(&cfg.system, scene, snr, cfg.seed, k).with_context(|| format!("sample {k}"))
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(
        cfg.system.num_antennas,
        cfg.system.num_subcarriers,
        cfg.data.snr_list_db.clone(),
        samples,
    )
}

/// Shuffles with the split stream and keeps the first `train_fraction` as
/// the training set.
pub fn split(cfg: &ExperimentConfig, all: Dataset) -> Result<(Dataset, Dataset)> {
    let n = all.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(cfg.seed, &[purpose::SPLIT]));
    let n_train = ((n as f64) * cfg.data.train_fraction).round() as usize;
    let mut slots: Vec<Option<DatasetSample>> = all.samples.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<DatasetSample> { idx.iter().map(|&i| slots[i].take().expect("permutation")).collect() };
    let train_samples = take(&order[..n_train]);
    let eval_samples = take(&order[n_train..]);
    let tags = cfg.data.snr_list_db.clone();
    Ok((
        Dataset::new(all.num_antennas, all.num_subcarriers, tags.clone(), train_samples)?,
        Dataset::new(all.num_antennas, all.num_subcarriers, tags, eval_samples)?,
    ))
}

/// Generates and splits the training and evaluation sets.
pub fn generate(cfg: &ExperimentConfig) -> Result<(Dataset, Dataset)> {
    split(cfg, generate_all(cfg)?)
}

/// Trains a freshly initialised model.
pub fn train_model(cfg: &ExperimentConfig, train_set: &Dataset, eval_set: &Dataset) -> Result<(EnhancerModel, Vec<TrainRecord>)> {
    let dims = (train_set.num_antennas, train_set.num_subcarriers);
    let init = EnhancerModel::init(cfg.model.hidden1, cfg.model.hidden2, dims, cfg.seed);
    let (model, records) = train(
        &init,
        &train_set.training_samples(),
        &eval_set.training_samples(),
        &cfg.train_config(),
        &ParallelGradient,
    )?;
    Ok((model, records))
}

/// Normalised-domain antenna correlation `R_hh` of the dataset's targets.
pub fn dataset_prior(ds: &Dataset) -> Result<ComplexMatrix> {
    Ok(sample_autocorrelation(ds.samples.iter().map(|s| &s.target))?)
}

fn lmmse_of(s: &DatasetSample, prior: &ComplexMatrix) -> Result<ComplexMatrix> {
    let noise = s.noise_var_est / s.rho;
    if noise <= 0.0 {
        return Ok(s.input.clone());
    }
    Ok(lmmse_estimate_matrix(&s.input, prior, noise)?)
}

fn distinct_snrs(ds: &Dataset) -> Vec<f64> {
    let mut v: Vec<f64> = Vec::new();
    for s in &ds.samples {
        if !v.contains(&s.snr_db) {
            v.push(s.snr_db);
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

/// Energy-weighted NMSE (dB) per SNR of the LS, LMMSE and enhanced CSI.
pub fn eval_rows(model: &EnhancerModel, ds: &Dataset) -> Result<Vec<MetricRow>> {
    check_dims(model, ds.num_antennas, ds.num_subcarriers)?;
    let prior = dataset_prior(ds)?;
    let mut rows = Vec::new();
    for snr in distinct_snrs(ds) {
        let samples: Vec<&DatasetSample> = ds.at_snr(snr).collect();
        let errs = samples
            .par_iter()
            .map(|s| {
                let e = |h: &ComplexMatrix| s.target.sub(h).frobenius_norm_sqr();
                Ok([e(&s.input), e(&lmmse_of(s, &prior)?), e(&model.forward(&s.input)?)])
            })
            .collect::<Result<Vec<[f64; 3]>>>()?;
        let energy: f64 = samples.iter().map(|s| s.target.frobenius_norm_sqr()).sum();
        for (i, name) in ["ls", "lmmse", "enhanced"].iter().enumerate() {
            let err: f64 = errs.iter().map(|e| e[i]).sum();
            rows.push(MetricRow::new(snr, "nmse_db", *name, nmse_db(err, energy), samples.len() as u64));
        }
    }
    Ok(rows)
}

/// LoS errors of one CSI estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct LosSensing {
    pub aoa_err_deg: f64,
    pub fft_err_m: f64,
    /// One entry per biased-FFT configuration.
    pub biased_err_m: Vec<f64>,
}

/// AoA and range errors of the LoS path: MUSIC, zero-forcing onto the
/// estimate nearest the true LoS angle, then plain and biased FFT ranging.
/// `None` when the estimate yields no usable spectrum.
pub fn sense_los(
    h: &ComplexMatrix,
    scene: &ChannelScene,
    system: &SystemConfig,
    bias: &[BiasedFftConfig],
    l_hat: Option<usize>,
) -> Result<Option<LosSensing>> {
    let (aoa, w) = match estimate_paths(h, system, l_hat) {
        Ok(x) => x,
        Err(Error::Degenerate(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let los = &scene.paths()[0];
    let i = aoa.nearest(los.aoa_deg);
    let g = apply_beamformer(h, &w.col(i));
    let r = los.range_m();
    Ok(Some(LosSensing {
        aoa_err_deg: aoa.angles_deg[i] - los.aoa_deg,
        fft_err_m: fft_range_estimate(&g, system.range_resolution()) - r,
        biased_err_m: bias.iter().map(|b| biased_fft_range_estimate(&g, b) - r).collect(),
    }))
}

/// CSI variants compared by the sensing sweep.
pub const SENSE_VARIANTS: [&str; 4] = ["perfect", "ls", "lmmse", "enhanced"];

/// Sensing errors of every variant for one sample.
pub fn sense_sample(
    s: &DatasetSample,
    model: &EnhancerModel,
    prior: &ComplexMatrix,
    system: &SystemConfig,
    bias: &[BiasedFftConfig],
) -> Result<[Option<LosSensing>; 4]> {
    let l_true = Some(s.scene.num_paths().min(system.num_antennas - 1));
    Ok([
        sense_los(&s.target, &s.scene, system, bias, l_true)?,
        sense_los(&s.input, &s.scene, system, bias, None)?,
        sense_los(&lmmse_of(s, prior)?, &s.scene, system, bias, None)?,
        sense_los(&model.forward(&s.input)?, &s.scene, system, bias, None)?,
    ])
}

/// LoS AoA MSE (deg²) and range MSE (m²) per SNR and CSI variant. Range
/// variants are `<csi>_fft` for the plain grid estimate and `<csi>_nr<N>`
/// for the biased estimate; `grid_bound` is `Δr²/12`.
pub fn sense_rows(cfg: &ExperimentConfig, model: &EnhancerModel, ds: &Dataset) -> Result<Vec<MetricRow>> {
    check_dims(model, ds.num_antennas, ds.num_subcarriers)?;
    let system = &cfg.system;
    let bias = cfg
        .sensing
        .bias_steps
        .iter()
        .map(|&n| BiasedFftConfig::for_system(n, system))
        .collect::<isac_core::Result<Vec<_>>>()?;
    let prior = dataset_prior(ds)?;
    let dr = system.range_resolution();
    let mut rows = Vec::new();
    for snr in distinct_snrs(ds) {
        let samples: Vec<&DatasetSample> = ds.at_snr(snr).collect();
        let results = samples
            .par_iter()
            .map(|s| sense_sample(s, model, &prior, system, &bias))
            .collect::<Result<Vec<_>>>()?;
        for (v, name) in SENSE_VARIANTS.iter().enumerate() {
            let ok: Vec<&LosSensing> = results.iter().filter_map(|r| r[v].as_ref()).collect();
            let n = ok.len() as u64;
            let mse = |f: &dyn Fn(&LosSensing) -> f64| {
                if ok.is_empty() {
                    f64::NAN
                } else {
                    ok.iter().map(|x| f(x).powi(2)).sum::<f64>() / ok.len() as f64
                }
            };
            rows.push(MetricRow::new(snr, "aoa_mse_deg2", *name, mse(&|x| x.aoa_err_deg), n));
            rows.push(MetricRow::new(snr, "range_mse_m2", format!("{name}_fft"), mse(&|x| x.fft_err_m), n));
            for (j, b) in bias.iter().enumerate() {
                let label = format!("{name}_nr{}", b.num_bias_steps);
                rows.push(MetricRow::new(snr, "range_mse_m2", label, mse(&|x| x.biased_err_m[j]), n));
            }
        }
        rows.push(MetricRow::new(snr, "range_mse_m2", "grid_bound", dr * dr / 12.0, samples.len() as u64));
    }
    Ok(rows)
}

/// Scenes of the BER sweep, one per packet, shared by every SNR and source.
pub fn ber_scenes(cfg: &ExperimentConfig) -> Result<Vec<ChannelScene>> {
    let base = base_geometry(cfg);
    (0..cfg.ber.packets_per_snr as u64)
        .map(|m| scene_for(cfg, &base, SCENE_BER, m))
        .collect()
}

/// Normalised-domain `R_hh` from the true CSI of `scenes` at their packet indices.
pub fn scene_prior(scenes: &[ChannelScene], system: &SystemConfig) -> Result<ComplexMatrix> {
    let normalized = scenes
        .iter()
        .enumerate()
        .map(|(m, s)| {
            let h = true_csi(s, system, m as u64);
            let rho = analyze(&h, DEFAULT_EPSILON)?.signal_power_est;
            Ok(h.scale_real(1.0 / rho.sqrt()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(sample_autocorrelation(&normalized)?)
}

/// Seed of the BER sweep's pilot and data streams.
pub fn ber_seed(cfg: &ExperimentConfig) -> u64 {
    stream(cfg.seed, &[BER_SEED_TAG]).next_u64()
}

/// BER of one CSI source over `scenes`, packets summed in order.
pub fn ber_point(
    cfg: &ExperimentConfig,
    scenes: &[ChannelScene],
    source: &CsiSource<'_>,
    snr_db: f64,
    constellation: &QamConstellation,
) -> Result<BerCount> {
    let seed = ber_seed(cfg);
    let parts = scenes
        .par_iter()
        .enumerate()
        .map(|(m, scene)| ber_packet(scene, &cfg.system, source, snr_db, constellation, seed, m as u64))
        .collect::<isac_core::Result<Vec<_>>>()?;
    let mut total = BerCount::default();
    parts.iter().for_each(|p| total.add(p));
    Ok(total)
}

/// BER per SNR, constellation and CSI source; variants are `<source>_qam<M>`
/// and `sample_count` is the number of bits.
pub fn ber_rows(cfg: &ExperimentConfig, model: &EnhancerModel) -> Result<Vec<MetricRow>> {
    check_dims(model, cfg.system.num_antennas, cfg.system.num_subcarriers)?;
    let scenes = ber_scenes(cfg)?;
    let prior = scene_prior(&scenes, &cfg.system)?;
    let sources = [
        CsiSource::Perfect,
        CsiSource::Ls,
        CsiSource::Lmmse(&prior),
        CsiSource::Enhanced(model),
    ];
    let mut rows = Vec::new();
    for &snr in &cfg.ber.snr_list_db {
        for &order in &cfg.ber.constellations {
            let c = QamConstellation::new(order)?;
            for src in &sources {
                let count = ber_point(cfg, &scenes, src, snr, &c)?;
                rows.push(MetricRow::new(snr, "ber", format!("{}_qam{order}", src.name()), count.rate(), count.bits));
            }
        }
    }
    Ok(rows)
}
