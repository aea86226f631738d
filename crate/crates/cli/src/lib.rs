//! Command implementations behind the `qgan` binary.

pub mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use qgan_core::bounds::{best_pure_generator, BoundReport, Generator};
use qgan_core::datapipe::{
    digits, downsample_half, filter_classes, load_csv, load_idx, pca_fit, pca_inverse,
    pca_transform, random_inverse_probe, read_container, write_container, write_pgm, ImageDataset,
    PcaModel, PgmFormat,
};
use qgan_core::embedding::{
    amplitude_decode, marginal_decode, EmbeddingKind, EmbeddingSpec, FeatureVector,
};
use qgan_core::models::{
    product_iqgan_image, ArchitectureDoc, IqganModel, ProductIqgan, QuganModel, SwapTestKind,
    Topology,
};
use qgan_core::qcore::{DensityMatrix, StateVector};
use qgan_core::toycompare::{run_comparison, ToyConfig, ToyReport};
use qgan_core::training::{train_iqgan, train_product, train_qugan, LossTrace};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "qgan",
    version,
    about = "Quantum GAN experiments on a statevector simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert IDX or CSV images into a QGDS dataset container.
    Ingest(IngestArgs),
    /// Train an IQGAN, QuGAN or product-mode generator.
    Train(TrainArgs),
    /// Fidelity and discrimination bounds for a class ensemble.
    Bounds(BoundsArgs),
    /// Classical versus quantum toy generator comparison.
    Toy(ToyArgs),
    /// Render a trained generator to PGM.
    Render(RenderArgs),
    /// Inverse-PCA image of a random normalized feature vector.
    Probe(ProbeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Iqgan,
    Qugan,
    Product,
}

impl std::str::FromStr for Arch {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        <Arch as ValueEnum>::from_str(s, true)
            .map_err(|_| anyhow!("expected iqgan, qugan or product, got `{s}`"))
    }
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[arg(long, requires = "idx_labels", conflicts_with = "csv")]
    pub idx_images: Option<PathBuf>,
    #[arg(long, requires = "idx_images")]
    pub idx_labels: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// 2×2 mean pooling before writing.
    #[arg(long)]
    pub downsample: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainArgs {
    /// key=value config file; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Extra key=value overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub arch: Option<Arch>,
    /// QGDS container, CSV file, or `digits` for the bundled corpus.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Comma-separated labels, or `all`.
    #[arg(long)]
    pub classes: Option<String>,
    /// Number of principal components; 0 trains on raw pixels.
    #[arg(long)]
    pub pca: Option<usize>,
    #[arg(long)]
    pub qubits: Option<usize>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub log_every: Option<usize>,
    /// none, uniform01 or gaussian:<sigma>
    #[arg(long)]
    pub noise: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BoundsArgs {
    #[arg(long, default_value = "digits")]
    pub dataset: String,
    #[arg(long, default_value = "3")]
    pub classes: String,
    #[arg(long, default_value_t = 4, conflicts_with = "raw")]
    pub pca: usize,
    /// Amplitude-embed raw pixels instead of PCA features.
    #[arg(long)]
    pub raw: bool,
    /// Trained params.json whose generator state is analysed.
    #[arg(long, conflicts_with_all = ["eigen", "sanity"])]
    pub generator: Option<PathBuf>,
    /// Analyse the top eigenvector of the data density matrix.
    #[arg(long)]
    pub eigen: bool,
    /// Compare the data density matrix with itself.
    #[arg(long, conflicts_with = "eigen")]
    pub sanity: bool,
    /// Where to render the top eigenvector.
    #[arg(long)]
    pub image: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ToyArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// QVC layers of both quantum generators.
    #[arg(long, default_value_t = 4)]
    pub depth: usize,
    #[arg(long, default_value_t = 6)]
    pub ancillas: usize,
    #[arg(long, default_value_t = 2000)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    /// Hidden layers of the classical net.
    #[arg(long, default_value_t = 1)]
    pub net_depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub params: PathBuf,
    /// Checked against the architecture recorded in the params file.
    #[arg(long)]
    pub arch: Option<Arch>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ProbeArgs {
    /// PCA model JSON, or a params.json that embeds one.
    #[arg(long)]
    pub pca_model: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything needed to rebuild and render a trained generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamsFile {
    pub arch: Arch,
    pub image_width: usize,
    pub image_height: usize,
    pub qubits: usize,
    pub depth: usize,
    pub topology: Topology,
    pub embedding: Option<EmbeddingSpec>,
    pub swap_test: SwapTestKind,
    pub trainable_encoder: bool,
    pub pca: Option<PcaModel>,
    /// Generator parameters (and encoder offsets for a trainable encoder).
    pub params: Vec<f64>,
    pub disc_params: Option<Vec<f64>>,
    pub architecture: ArchitectureDoc,
    pub config: BTreeMap<String, String>,
}

impl ParamsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    fn iqgan(&self) -> Result<IqganModel> {
        let spec = self
            .embedding
            .ok_or_else(|| anyhow!("params file has no embedding"))?;
        Ok(IqganModel::new(spec, self.depth, self.topology)?
            .with_trainable_encoder(self.trainable_encoder)?
            .with_swap_test(self.swap_test))
    }

    fn qugan(&self) -> Result<QuganModel> {
        let spec = self
            .embedding
            .ok_or_else(|| anyhow!("params file has no embedding"))?;
        Ok(QuganModel::new(spec, self.depth, self.topology)?.with_swap_test(self.swap_test))
    }

    /// Pure generator output on |0…0⟩; undefined for product mode.
    pub fn generator_state(&self) -> Result<StateVector> {
        self.generator_state_for(&self.params)
    }

    fn generator_state_for(&self, params: &[f64]) -> Result<StateVector> {
        match self.arch {
            Arch::Iqgan => Ok(self.iqgan()?.generator_state(params)?),
            Arch::Qugan => Ok(self.qugan()?.generator_state(params, None)?),
            Arch::Product => bail!("product-mode generators have no joint state to analyse"),
        }
    }

    /// Generated image for a parameter vector of this model.
    pub fn render(&self, params: &[f64]) -> Result<Vec<f64>> {
        if self.arch == Arch::Product {
            let model = ProductIqgan::new(self.image_width, self.image_height);
            return Ok(product_iqgan_image(&model, params)?.into_values());
        }
        let state = self.generator_state_for(params)?;
        let spec = self
            .embedding
            .ok_or_else(|| anyhow!("params file has no embedding"))?;
        decode_image(
            &state,
            &spec,
            self.pca.as_ref(),
            self.image_width * self.image_height,
        )
    }
}

/// Generator state → features → pixels.
pub fn decode_image(
    state: &StateVector,
    spec: &EmbeddingSpec,
    pca: Option<&PcaModel>,
    n_pixels: usize,
) -> Result<Vec<f64>> {
    let features = match spec.kind {
        EmbeddingKind::Angle => marginal_decode(state, spec.angle_scale)?.into_values(),
        EmbeddingKind::Amplitude => {
            let len = pca.map_or(n_pixels, PcaModel::k);
            let v = amplitude_decode(state, len, 1.0);
            let max = v.iter().fold(0.0f64, |a, &b| a.max(b));
            v.into_iter()
                .map(|x| if max > 0.0 { x / max } else { 0.0 })
                .collect()
        }
    };
    match pca {
        Some(m) => Ok(pca_inverse(m, &FeatureVector::clamped(features))?),
        None => Ok(features),
    }
}

fn load_dataset(spec: &str) -> Result<ImageDataset> {
    if spec == "digits" {
        return Ok(digits());
    }
    let path = Path::new(spec);
    let ds = if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
    {
        load_csv(path)
    } else {
        read_container(path)
    };
    ds.with_context(|| format!("loading dataset {spec}"))
}

fn select(ds: ImageDataset, classes: &[u8]) -> Result<ImageDataset> {
    if classes.len() == 256 {
        return Ok(ds);
    }
    Ok(filter_classes(&ds, classes)?)
}

fn parse_classes(s: &str) -> Result<Vec<u8>> {
    let mut c = RunConfig::default();
    c.set("classes", s)?;
    c.classes()
}

fn image_dims(d: usize) -> (usize, usize) {
    let side = (d as f64).sqrt().round() as usize;
    if side * side == d {
        (side, side)
    } else {
        (d, 1)
    }
}

fn qubits_for(len: usize) -> usize {
    (len.max(2).next_power_of_two().trailing_zeros() as usize).max(2)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_ingest(args: &IngestArgs) -> Result<ImageDataset> {
    let ds = match (&args.idx_images, &args.idx_labels, &args.csv) {
        (Some(i), Some(l), None) => {
            load_idx(i, l).with_context(|| format!("loading {} / {}", i.display(), l.display()))?
        }
        (None, None, Some(c)) => load_csv(c).with_context(|| format!("loading {}", c.display()))?,
        _ => bail!("give either --idx-images with --idx-labels, or --csv"),
    };
    let ds = if args.downsample {
        downsample_half(&ds)?
    } else {
        ds
    };
    write_container(&args.out, &ds).with_context(|| format!("writing {}", args.out.display()))?;
    println!(
        "wrote {} images of {}x{} to {}",
        ds.len(),
        ds.width(),
        ds.height(),
        args.out.display()
    );
    Ok(ds)
}

/// Merges defaults, the config file, flags and `--set` overrides, in that order.
pub fn train_run_config(args: &TrainArgs) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    if let Some(path) = &args.config {
        c.merge_file(path)?;
    }
    let flags: [(&str, Option<String>); 12] = [
        ("arch", args.arch.map(|a| format!("{a:?}").to_lowercase())),
        ("dataset", args.dataset.clone()),
        ("classes", args.classes.clone()),
        ("pca", args.pca.map(|v| v.to_string())),
        ("qubits", args.qubits.map(|v| v.to_string())),
        ("depth", args.depth.map(|v| v.to_string())),
        ("epochs", args.epochs.map(|v| v.to_string())),
        ("batch_size", args.batch_size.map(|v| v.to_string())),
        ("learning_rate", args.lr.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("log_every", args.log_every.map(|v| v.to_string())),
        ("noise", args.noise.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            c.set(k, &v)?;
        }
    }
    for pair in &args.set {
        c.set_pair(pair)?;
    }
    Ok(c)
}

/// What a training run produced.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSummary {
    pub out_dir: PathBuf,
    pub params: ParamsFile,
    pub trace: LossTrace,
    pub images: Vec<PathBuf>,
}

pub fn cmd_train(args: &TrainArgs) -> Result<TrainSummary> {
    let rc = train_run_config(args)?;
    train_with_config(&rc, &args.out)
}

pub fn train_with_config(rc: &RunConfig, out: &Path) -> Result<TrainSummary> {
    let arch: Arch = rc.get("arch")?;
    let cfg = rc.train_config()?;
    let mut ds = select(load_dataset(rc.raw("dataset"))?, &rc.classes()?)?;
    if rc.get::<bool>("downsample")? {
        ds = downsample_half(&ds)?;
    }
    let max_samples: usize = rc.get("max_samples")?;
    if max_samples > 0 {
        ds = ds.take(max_samples);
    }
    let pca_k: Option<usize> = match (rc.raw("pca"), arch) {
        ("auto" | "0", Arch::Product) => None,
        (k, Arch::Product) => {
            bail!("config conflict: pca={k} cannot be combined with arch=product")
        }
        ("auto", _) => Some(4),
        ("0", _) => None,
        _ => Some(rc.get("pca")?),
    };
    let depth: usize = rc.get("depth")?;
    let topology = rc.topology()?;
    let swap_test = rc.swap_test()?;
    let trainable_encoder: bool = rc.get("trainable_encoder")?;
    let requested_qubits: usize = rc.get("qubits")?;
    let (w, h) = (ds.width(), ds.height());

    let pca = pca_k.map(|k| pca_fit(&ds, k)).transpose()?;
    let features: Vec<FeatureVector> = match &pca {
        Some(m) => ds
            .images()
            .iter()
            .map(|im| pca_transform(m, im))
            .collect::<qgan_core::Result<_>>()?,
        None => (0..ds.len()).map(|i| ds.features(i)).collect(),
    };
    let feature_len = features[0].len();

    let embedding = if arch == Arch::Product {
        None
    } else {
        let kind = rc.embedding()?.unwrap_or(if pca.is_some() {
            EmbeddingKind::Angle
        } else {
            EmbeddingKind::Amplitude
        });
        let qubits = match kind {
            EmbeddingKind::Angle => feature_len,
            EmbeddingKind::Amplitude => qubits_for(feature_len),
        };
        if requested_qubits != 0 && requested_qubits != qubits {
            bail!(
                "config conflict: qubits={requested_qubits} but {feature_len} features under {kind:?} embedding need {qubits}"
            );
        }
        if qubits > 16 {
            bail!("config conflict: {qubits} qubits per register is beyond this simulator; use pca or amplitude embedding");
        }
        Some(match kind {
            EmbeddingKind::Angle => EmbeddingSpec::angle(qubits),
            EmbeddingKind::Amplitude => EmbeddingSpec::amplitude(qubits),
        })
    };

    let mut params_file = ParamsFile {
        arch,
        image_width: w,
        image_height: h,
        qubits: embedding.map_or(w * h, |e| e.n_qubits),
        depth,
        topology,
        embedding,
        swap_test,
        trainable_encoder,
        pca: pca.clone(),
        params: Vec::new(),
        disc_params: None,
        architecture: ProductIqgan::new(w, h).architecture(),
        config: rc.entries().clone(),
    };
    let (trace, snapshots) = match arch {
        Arch::Iqgan => {
            let model = IqganModel::new(embedding.expect("set above"), depth, topology)?
                .with_trainable_encoder(trainable_encoder)?
                .with_swap_test(swap_test);
            params_file.architecture = model.architecture();
            let o = train_iqgan(&model, &features, &cfg)?;
            params_file.params = o.params;
            (o.trace, o.snapshots)
        }
        Arch::Qugan => {
            let model = QuganModel::new(embedding.expect("set above"), depth, topology)?
                .with_swap_test(swap_test);
            params_file.architecture = model.architecture();
            let o = train_qugan(&model, &features, &cfg)?;
            params_file.params = o.gen_params;
            params_file.disc_params = Some(o.disc_params);
            (o.trace, o.snapshots)
        }
        Arch::Product => {
            let model = ProductIqgan::new(w, h);
            let o = train_product(&model, &features, &cfg)?;
            params_file.params = o.params;
            (o.trace, o.snapshots)
        }
    };

    ensure_dir(out)?;
    let images_dir = out.join("images");
    ensure_dir(&images_dir)?;
    write_file(
        &out.join("params.json"),
        serde_json::to_string_pretty(&params_file)?,
    )?;
    write_file(&out.join("loss.csv"), trace.to_csv())?;
    if let Some(m) = &pca {
        m.save_json(&out.join("pca.json"))?;
    }
    let mut images = Vec::new();
    for (batch, p) in &snapshots {
        let path = images_dir.join(format!("batch_{batch:06}.pgm"));
        write_pgm(&path, w, h, &params_file.render(p)?, PgmFormat::Binary)?;
        images.push(path);
    }
    let final_path = out.join("generated.pgm");
    write_pgm(
        &final_path,
        w,
        h,
        &params_file.render(&params_file.params)?,
        PgmFormat::Binary,
    )?;
    images.push(final_path);
    log::info!(
        "trained {arch:?}: {} trace rows, final loss_g {:?}",
        trace.len(),
        trace.last().map(|r| r.loss_g)
    );
    Ok(TrainSummary {
        out_dir: out.to_path_buf(),
        params: params_file,
        trace,
        images,
    })
}

pub fn cmd_bounds(args: &BoundsArgs) -> Result<BoundReport> {
    let stored = args
        .generator
        .as_ref()
        .map(|p| ParamsFile::load(p))
        .transpose()?;
    let ds = select(load_dataset(&args.dataset)?, &parse_classes(&args.classes)?)?;

    // Encoding: the generator's own preprocessing when one is given.
    let (spec, pca) = match &stored {
        Some(pf) => {
            let spec = pf
                .embedding
                .ok_or_else(|| anyhow!("bounds need an iqgan or qugan params file"))?;
            (spec, pf.pca.clone())
        }
        None if args.raw => (EmbeddingSpec::amplitude(qubits_for(ds.n_pixels())), None),
        None => (
            EmbeddingSpec::angle(args.pca),
            Some(pca_fit(&ds, args.pca)?),
        ),
    };
    let states: Vec<StateVector> = ds
        .images()
        .iter()
        .map(|im| {
            let f = match &pca {
                Some(m) => pca_transform(m, im)?,
                None => FeatureVector::clamped(im.clone()),
            };
            qgan_core::models::encode_sample(&spec, &f, None)
        })
        .collect::<qgan_core::Result<_>>()?;
    let rho = DensityMatrix::uniform_ensemble(&states)?;
    let (_, v_max) = best_pure_generator(&rho)?;

    let report = if args.sanity {
        BoundReport::compute(&rho, &states, Generator::Mixed(&rho))?
    } else if let Some(pf) = &stored {
        let gamma = pf.generator_state()?;
        BoundReport::compute(&rho, &states, Generator::Pure(&gamma))?
    } else {
        BoundReport::compute(&rho, &states, Generator::Pure(&v_max))?
    };
    if let Some(path) = &args.image {
        let img = decode_image(&v_max, &spec, pca.as_ref(), ds.n_pixels())?;
        write_pgm(path, ds.width(), ds.height(), &img, PgmFormat::Binary)?;
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    write_file(&args.out, report.to_json()?)?;
    print!("{}", report.table());
    Ok(report)
}

pub fn cmd_toy(args: &ToyArgs) -> Result<ToyReport> {
    let cfg = ToyConfig {
        epochs: args.epochs,
        learning_rate: args.lr,
        qvc_layers: args.depth,
        ancillas: args.ancillas,
        net_depth: args.net_depth,
        ..ToyConfig::default()
    };
    let report = run_comparison(args.seed, &cfg)?;
    report.write(&args.out)?;
    for m in [&report.classical, &report.pure, &report.ancilla] {
        println!(
            "{:<10} params {:>4}  mse {:.6}  mse_normalized {:.3e}  output_std {:.4}",
            m.name, m.n_params, m.mse, m.mse_normalized, m.output_std
        );
    }
    Ok(report)
}

pub fn cmd_render(args: &RenderArgs) -> Result<Vec<f64>> {
    let pf = ParamsFile::load(&args.params)?;
    if let Some(a) = args.arch {
        if a != pf.arch {
            bail!(
                "config conflict: --arch {a:?} but {} holds a {:?} model",
                args.params.display(),
                pf.arch
            );
        }
    }
    let img = pf.render(&pf.params)?;
    write_pgm(
        &args.out,
        pf.image_width,
        pf.image_height,
        &img,
        PgmFormat::Binary,
    )?;
    Ok(img)
}

pub fn cmd_probe(args: &ProbeArgs) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(&args.pca_model)
        .with_context(|| format!("reading {}", args.pca_model.display()))?;
    let (model, (w, h)) = match serde_json::from_str::<ParamsFile>(&text) {
        Ok(pf) => {
            let m = pf
                .pca
                .ok_or_else(|| anyhow!("{} has no PCA model", args.pca_model.display()))?;
            (m, (pf.image_width, pf.image_height))
        }
        Err(_) => {
            let m: PcaModel = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", args.pca_model.display()))?;
            let dims = image_dims(m.dim());
            (m, dims)
        }
    };
    let img = random_inverse_probe(&model, args.seed);
    write_pgm(&args.out, w, h, &img, PgmFormat::Binary)?;
    Ok(img)
}

/// Parses a full command line (program name first) and runs it.
pub fn run<I, T>(argv: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    match &cli.command {
        Command::Ingest(a) => cmd_ingest(a).map(drop),
        Command::Train(a) => {
            let s = cmd_train(a)?;
            println!(
                "wrote {} ({} loss rows, {} images)",
                s.out_dir.display(),
                s.trace.len(),
                s.images.len()
            );
            Ok(())
        }
        Command::Bounds(a) => cmd_bounds(a).map(drop),
        Command::Toy(a) => cmd_toy(a).map(drop),
        Command::Render(a) => cmd_render(a).map(drop),
        Command::Probe(a) => cmd_probe(a).map(drop),
    }
}
