use rayon::prelude::*;

use super::config::{ArchConfig, ClassifyConfig, DenoiseConfig, ExperimentConfig, Mode, Task};
use super::mix::{gt_count, mix_datasets, MixConfig};
use super::pipeline::{impute_labels, scale_pixels, CrfDenoiser, NetworkClassifier};
use super::BootstrapError;
use crate::data::{
    add_gaussian_noise, load_cifar10_batch, load_pgm, sample_patches, split, synth_classification,
    synth_shapes, Dataset, DatasetRole, LabeledExample, Target,
};
use crate::metrics::{accuracy, flops_report, mean_ssim, MetricName, MetricRow, SsimConfig};
use crate::nn::{
    build_skip_autoencoder, build_target_classifier, count_flops, predict, train, ClassifierArch,
    LossKind, Network, SgdConfig,
};
use crate::rng::{derive_seed, Rng};
use crate::tensor::Tensor;

const PREDICT_BATCH: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<MetricRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        flops_report(&self.rows)
    }

    /// First row for `method` (and `ratio_x`, when given).
    pub fn find(&self, method: &str, ratio_x: Option<f64>) -> Option<&MetricRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && (ratio_x.is_none() || r.ratio_x == ratio_x))
    }
}

/// Runs whatever the config asks for.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<SweepResult, BootstrapError> {
    cfg.validate()?;
    match (cfg.task, cfg.mode) {
        (Task::Denoise, Mode::Experiment) => run_denoise_experiment(cfg),
        (Task::Classify, Mode::Experiment) => run_classify_experiment(cfg),
        (task, Mode::Sweep) => run_ratio_sweep(cfg, task),
    }
}

/// Clean and noisy `[H, W]` images for the denoising task.
#[derive(Debug, Clone)]
pub struct DenoiseData {
    pub train_clean: Vec<Tensor>,
    pub train_noisy: Vec<Tensor>,
    pub test_clean: Vec<Tensor>,
    pub test_noisy: Vec<Tensor>,
}

pub fn denoise_data(cfg: &DenoiseConfig, seed: u64) -> Result<DenoiseData, BootstrapError> {
    let total = cfg.train_images + cfg.test_images;
    let mut corpus_rng = Rng::child(seed, 1);
    let clean = if cfg.clean_pgms.is_empty() {
        synth_shapes(total, cfg.size, cfg.levels, &mut corpus_rng)?
    } else {
        let sources = cfg
            .clean_pgms
            .iter()
            .map(load_pgm)
            .collect::<Result<Vec<_>, _>>()?;
        sample_patches(&sources, cfg.size, total, &mut corpus_rng)?
    };
    let mut noise_rng = Rng::child(seed, 2);
    let noisy = clean
        .iter()
        .map(|c| add_gaussian_noise(c, cfg.noise_std(), &mut noise_rng))
        .collect::<Result<Vec<_>, _>>()?;
    let mut clean = clean;
    let mut noisy = noisy;
    let test_clean = clean.split_off(cfg.train_images);
    let test_noisy = noisy.split_off(cfg.train_images);
    Ok(DenoiseData {
        train_clean: clean,
        train_noisy: noisy,
        test_clean,
        test_noisy,
    })
}

fn with_channel(img: &Tensor) -> Tensor {
    let mut shape = vec![1];
    shape.extend_from_slice(img.shape());
    img.clone().reshape(&shape).expect("same element count")
}

/// Network-ready copy: pixels scaled to [0, 1], `[H, W]` images given a channel axis.
fn network_view(d: &Dataset) -> Dataset {
    d.map_examples(|ex| {
        let input = scale_pixels(&with_channel_if_2d(&ex.input));
        let label = ex.label.clone().map(|mut l| {
            if let Target::Image(t) = &l.target {
                l.target = Target::Image(scale_pixels(&with_channel_if_2d(t)));
            }
            l
        });
        LabeledExample { input, label }
    })
}

fn with_channel_if_2d(t: &Tensor) -> Tensor {
    if t.ndim() == 2 {
        with_channel(t)
    } else {
        t.clone()
    }
}

fn with_seed(sgd: &SgdConfig, seed: u64) -> SgdConfig {
    SgdConfig { seed, ..sgd.clone() }
}

/// Mean test SSIM of a denoising network and its per-image FLOPs.
fn score_denoiser(net: &Network, noisy: &[Tensor], clean: &[Tensor]) -> Result<(f64, u64), BootstrapError> {
    let inputs: Vec<Tensor> = noisy.iter().map(|t| scale_pixels(&with_channel(t))).collect();
    let refs: Vec<&Tensor> = inputs.iter().collect();
    let outputs = predict(net, &refs, PREDICT_BATCH)?;
    let restored: Vec<Tensor> = outputs
        .into_iter()
        .zip(clean)
        .map(|(o, c)| {
            o.map(|v| (v * 255.0).clamp(0.0, 255.0))
                .reshape(c.shape())
                .expect("same element count")
        })
        .collect();
    let score = mean_ssim(&restored, clean, &SsimConfig::default())?;
    Ok((score, count_flops(net, inputs[0].shape())?))
}

fn row(task: Task, method: impl Into<String>, ratio_x: Option<f64>, metric: MetricName, value: f64, flops: u64) -> MetricRow {
    MetricRow {
        task: match task {
            Task::Denoise => "denoise",
            Task::Classify => "classify",
        }
        .to_string(),
        method: method.into(),
        ratio_x,
        metric,
        value,
        flops,
    }
}

/// Pipeline outputs on the test inputs, their mean SSIM and mean ops per image.
fn score_crf(crf: &CrfDenoiser, data: &DenoiseData) -> Result<(f64, u64), BootstrapError> {
    let out = impute_labels(crf, &Dataset::unlabeled(data.test_noisy.clone()))?;
    let images: Vec<Tensor> = out
        .dataset
        .examples()
        .iter()
        .map(|e| e.target().and_then(Target::as_image).expect("image targets").clone())
        .collect();
    let score = mean_ssim(&images, &data.test_clean, &SsimConfig::default())?;
    Ok((score, out.ops / data.test_noisy.len() as u64))
}

/// Noisy input, the CRF pipeline, and one skip autoencoder per configured
/// depth trained only on pipeline outputs; all scored by mean test SSIM.
pub fn run_denoise_experiment(cfg: &ExperimentConfig) -> Result<SweepResult, BootstrapError> {
    let d = &cfg.denoise;
    let data = denoise_data(d, cfg.seed)?;
    let ssim_cfg = SsimConfig::default();
    let mut rows = vec![row(
        Task::Denoise,
        "noisy_input",
        None,
        MetricName::Ssim,
        mean_ssim(&data.test_noisy, &data.test_clean, &ssim_cfg)?,
        0,
    )];

    let crf = CrfDenoiser {
        params: d.crf.clone(),
        algorithm: d.algorithm,
    };
    let (pipe_score, pipe_ops) = score_crf(&crf, &data)?;
    rows.push(row(Task::Denoise, "pipeline", None, MetricName::Ssim, pipe_score, pipe_ops));

    let imputed = impute_labels(&crf, &Dataset::unlabeled(data.train_noisy.clone()))?.dataset;
    let train_set = network_view(&imputed);
    let trained = d
        .depths
        .par_iter()
        .map(|&depth| {
            let seed = derive_seed(cfg.seed, 100 + depth as u64);
            let mut net = build_skip_autoencoder(depth, d.channels, 1, &mut Rng::child(seed, 0))?;
            train(&mut net, &train_set, LossKind::Mse, &with_seed(&d.sgd, seed))?;
            let (score, flops) = score_denoiser(&net, &data.test_noisy, &data.test_clean)?;
            Ok(row(Task::Denoise, format!("nn-skip-{depth}"), None, MetricName::Ssim, score, flops))
        })
        .collect::<Result<Vec<_>, BootstrapError>>()?;
    rows.extend(trained);
    Ok(SweepResult { rows })
}

/// Ground-truth ratio sweep. Each ratio gets its own derived seed, so cells
/// can be evaluated in any order.
pub fn run_ratio_sweep(cfg: &ExperimentConfig, task: Task) -> Result<SweepResult, BootstrapError> {
    match task {
        Task::Denoise => denoise_sweep(cfg),
        Task::Classify => classify_sweep(cfg),
    }
}

fn denoise_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, BootstrapError> {
    let d = &cfg.denoise;
    let data = denoise_data(d, cfg.seed)?;
    let crf = CrfDenoiser {
        params: d.crf.clone(),
        algorithm: d.algorithm,
    };
    let (pipe_score, pipe_ops) = score_crf(&crf, &data)?;
    let imputed = impute_labels(&crf, &Dataset::unlabeled(data.train_noisy.clone()))?.dataset;
    let truth = Dataset::new(
        DatasetRole::GroundTruth,
        data.train_noisy
            .iter()
            .zip(&data.train_clean)
            .map(|(n, c)| LabeledExample::ground_truth(n.clone(), Target::Image(c.clone())))
            .collect(),
    )?;
    let total_n = d.train_images;
    let cells = d
        .ratios
        .par_iter()
        .enumerate()
        .map(|(i, &ratio_x)| {
            let seed = derive_seed(cfg.seed, 10_000 + i as u64);
            let mixed = mix_datasets(&truth, &imputed, &MixConfig { ratio_x, total_n, seed })?;
            let k = gt_count(ratio_x, total_n);
            let gt_only = mixed.select(&(0..k).collect::<Vec<_>>()).with_role(DatasetRole::GroundTruth)?;
            let init = build_skip_autoencoder(d.sweep_depth, d.channels, 1, &mut Rng::child(seed, 0))?;
            let sgd = with_seed(&d.sweep_sgd, seed);
            let mut out = Vec::with_capacity(2);
            for (method, set) in [("gt_only", gt_only), ("bootstrapped", mixed)] {
                let mut net = init.clone();
                if !set.is_empty() {
                    train(&mut net, &network_view(&set), LossKind::Mse, &sgd)?;
                }
                let (score, flops) = score_denoiser(&net, &data.test_noisy, &data.test_clean)?;
                out.push(row(Task::Denoise, method, Some(ratio_x), MetricName::Ssim, score, flops));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, BootstrapError>>()?;
    let mut rows = vec![row(Task::Denoise, "pipeline", None, MetricName::Ssim, pipe_score, pipe_ops)];
    rows.extend(cells.into_iter().flatten());
    Ok(SweepResult { rows })
}

/// Classification inputs as `[C, H, W]` pixel tensors with true labels.
#[derive(Debug, Clone)]
pub struct ClassificationData {
    pub train: Dataset,
    pub test: Dataset,
    pub input_shape: [usize; 3],
    pub num_classes: usize,
}

pub fn classification_data(cfg: &ClassifyConfig, seed: u64) -> Result<ClassificationData, BootstrapError> {
    let (train, test, num_classes) = if cfg.cifar_train.is_empty() {
        let train = synth_classification(cfg.train_count, cfg.num_classes, cfg.size, &mut Rng::child(seed, 1))?;
        let test = synth_classification(cfg.test_count, cfg.num_classes, cfg.size, &mut Rng::child(seed, 2))?;
        (train, test, cfg.num_classes)
    } else {
        let Some(test_path) = &cfg.cifar_test else {
            return Err(BootstrapError::Config("classify.cifar_test is required with cifar_train".into()));
        };
        let mut examples = Vec::new();
        for p in &cfg.cifar_train {
            examples.extend(load_cifar10_batch(p)?.into_examples());
        }
        let train = Dataset::new(DatasetRole::GroundTruth, examples)?;
        (train, load_cifar10_batch(test_path)?, 10)
    };
    let Some(first) = train.examples().first() else {
        return Err(BootstrapError::Config("classification training set is empty".into()));
    };
    let s = first.input.shape();
    let input_shape = [s[0], s[1], s[2]];
    Ok(ClassificationData {
        train,
        test: test.with_role(DatasetRole::Test)?,
        input_shape,
        num_classes,
    })
}

fn classifier(arch: &ArchConfig, data: &ClassificationData, seed: u64) -> Result<Network, BootstrapError> {
    let mut fc_sizes = arch.hidden.clone();
    fc_sizes.push(data.num_classes);
    let shape = ClassifierArch {
        input_shape: data.input_shape,
        num_classes: data.num_classes,
        conv_channels: arch.conv_channels,
        kernel: arch.kernel,
        fc_sizes,
    };
    Ok(build_target_classifier(&shape, &mut Rng::child(seed, 0))?)
}

fn fit_classifier(
    arch: &ArchConfig,
    data: &ClassificationData,
    set: &Dataset,
    sgd: &SgdConfig,
    seed: u64,
) -> Result<Network, BootstrapError> {
    let mut net = classifier(arch, data, seed)?;
    if !set.is_empty() {
        train(&mut net, &network_view(set), LossKind::SoftmaxCrossEntropy, &with_seed(sgd, seed))?;
    }
    Ok(net)
}

/// Accuracy of `net` on `set` and its per-image FLOPs.
fn score_classifier(net: &Network, set: &Dataset) -> Result<(f64, u64), BootstrapError> {
    let inputs: Vec<Tensor> = set.inputs().map(scale_pixels).collect();
    let refs: Vec<&Tensor> = inputs.iter().collect();
    let preds: Vec<usize> = predict(net, &refs, PREDICT_BATCH)?.iter().map(Tensor::argmax).collect();
    let labels = set
        .class_labels()
        .ok_or_else(|| BootstrapError::Config("scoring set lacks class labels".into()))?;
    Ok((accuracy(&preds, &labels)?, count_flops(net, inputs[0].shape())?))
}

struct Teacher {
    net: Network,
    psi: Dataset,
    train_accuracy: f64,
}

/// Splits the training data into Φ and Ψ and fits the pipeline classifier.
fn fit_teacher(cfg: &ExperimentConfig, data: &ClassificationData) -> Result<Teacher, BootstrapError> {
    let c = &cfg.classify;
    let (phi, psi) = split(&data.train, c.phi_fraction, &mut Rng::child(cfg.seed, 3));
    let phi = phi.with_role(DatasetRole::Phi)?;
    let psi = psi.with_role(DatasetRole::Psi)?;
    let fit_on = if c.teacher_on_all { &data.train } else { &phi };
    let seed = derive_seed(cfg.seed, 4);
    let net = fit_classifier(&c.teacher, data, fit_on, &c.sgd, seed)?;
    let (train_accuracy, _) = score_classifier(&net, fit_on)?;
    Ok(Teacher { net, psi, train_accuracy })
}

/// Φ/Ψ protocol: fit the pipeline on Φ, label Ψ with it, train students on
/// those labels alone, and score everything on the test set.
pub fn run_classify_experiment(cfg: &ExperimentConfig) -> Result<SweepResult, BootstrapError> {
    let c = &cfg.classify;
    let data = classification_data(c, cfg.seed)?;
    let teacher = fit_teacher(cfg, &data)?;
    let (test_acc, teacher_flops) = score_classifier(&teacher.net, &data.test)?;
    let mut rows = vec![
        row(Task::Classify, "pipeline", None, MetricName::Accuracy, test_acc, teacher_flops),
        row(Task::Classify, "pipeline_train", None, MetricName::Accuracy, teacher.train_accuracy, teacher_flops),
    ];
    let labeler = NetworkClassifier {
        name: "pipeline".into(),
        net: teacher.net,
    };
    let imputed = impute_labels(&labeler, &teacher.psi.strip_labels())?.dataset;
    let students = c
        .students
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let seed = derive_seed(cfg.seed, 100 + i as u64);
            let net = fit_classifier(&s.arch, &data, &imputed, &c.sgd, seed)?;
            let (acc, flops) = score_classifier(&net, &data.test)?;
            Ok(row(Task::Classify, s.name.clone(), None, MetricName::Accuracy, acc, flops))
        })
        .collect::<Result<Vec<_>, BootstrapError>>()?;
    rows.extend(students);
    Ok(SweepResult { rows })
}

fn classify_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, BootstrapError> {
    let c = &cfg.classify;
    let data = classification_data(c, cfg.seed)?;
    let teacher = fit_teacher(cfg, &data)?;
    let (test_acc, teacher_flops) = score_classifier(&teacher.net, &data.test)?;
    let labeler = NetworkClassifier {
        name: "pipeline".into(),
        net: teacher.net,
    };
    let imputed = impute_labels(&labeler, &teacher.psi.strip_labels())?.dataset;
    let truth = teacher.psi.with_role(DatasetRole::GroundTruth)?;
    let total_n = truth.len();
    let arch = &c.students[0].arch;
    let cells = c
        .ratios
        .par_iter()
        .enumerate()
        .map(|(i, &ratio_x)| {
            let seed = derive_seed(cfg.seed, 10_000 + i as u64);
            let mixed = mix_datasets(&truth, &imputed, &MixConfig { ratio_x, total_n, seed })?;
            let k = gt_count(ratio_x, total_n);
            let gt_only = mixed.select(&(0..k).collect::<Vec<_>>()).with_role(DatasetRole::GroundTruth)?;
            let mut out = Vec::with_capacity(2);
            for (method, set) in [("gt_only", gt_only), ("bootstrapped", mixed)] {
                let net = fit_classifier(arch, &data, &set, &c.sgd, seed)?;
                let (acc, flops) = score_classifier(&net, &data.test)?;
                out.push(row(Task::Classify, method, Some(ratio_x), MetricName::Accuracy, acc, flops));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, BootstrapError>>()?;
    let mut rows = vec![row(Task::Classify, "pipeline", None, MetricName::Accuracy, test_acc, teacher_flops)];
    rows.extend(cells.into_iter().flatten());
    Ok(SweepResult { rows })
}
