//! Command-line interface.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand, ValueEnum};
use voxnet_core::dataset::{SampleSource, VolumeDataset};
use voxnet_core::ensemble::{ensemble_average, ensemble_vote, PredictionSet};
use voxnet_core::kernels::{op_count, ConvSpec, CountMode};
use voxnet_core::model::{build, layer_output_shape, shape_walk, ArchConfig, Layer, LayerKind, Model};
use voxnet_core::rng::derive_seed;
use voxnet_core::saliency::{class_mean_saliency, region_enrichment};
use voxnet_core::train::{
    evaluate, make_kfold, run_fold, split_dataset, train_observed, FoldPlan, FoldResult, SplitPlan, TrainConfig,
    SPLIT_RATIOS,
};
use voxnet_core::volume::VolumeRecord;
use voxnet_core::Diagnosis;

use crate::config::{load_arch, load_phantom_params, load_train_config, save_toml, ArchSource};
use crate::datagen::{format_extents, generate_phantoms, MANIFEST_NAME};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::manifest::{load_manifest, Manifest, Split};
use crate::model_io::{load_model, save_model};
use crate::report::{self, ResultRow, Table};
use crate::volume_io::{load_volume, save_volume};

#[derive(Debug, Parser)]
#[command(name = "voxnet", version, about = "Volumetric CNN classifiers for three-channel brain volumes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic phantom dataset and its manifest.
    Generate(GenerateArgs),
    /// Train one architecture and write the model and its history.
    Train(TrainArgs),
    /// Evaluate one or more models; three models also get ensemble rows.
    Eval(EvalArgs),
    /// Stratified k-fold cross-validation.
    Crossval(CrossvalArgs),
    /// Class-mean gradient saliency volumes.
    Saliency(SaliencyArgs),
    /// Shape walk, parameter count and operation counts of an architecture.
    Info(InfoArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Phantom parameters (TOML).
    #[arg(long)]
    pub params: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the parameter file.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Architecture file or builtin name such as `alexnet3d` or `alexnet3d-toy`.
    #[arg(long)]
    pub arch_config: String,
    /// Training parameters (TOML); defaults apply when omitted.
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    /// Overrides the seed in the training configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitChoice {
    Train,
    Validation,
    Test,
    /// Validation and test together.
    Heldout,
    All,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file; repeat for several models.
    #[arg(long = "model", required = true)]
    pub models: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value = "heldout")]
    pub split: SplitChoice,
    /// Split table written by `train`; otherwise manifest tags, otherwise
    /// the split is re-derived from `--seed`.
    #[arg(long)]
    pub split_file: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub arch_config: String,
    #[arg(long)]
    pub train_config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Folds trained concurrently. Results do not depend on this.
    #[arg(long, default_value_t = 1)]
    pub workers: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SaliencyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Class to map; repeat for several. Defaults to every class.
    #[arg(long = "class")]
    pub classes: Vec<Diagnosis>,
    /// Region mask volume; prints the enrichment of every map against it.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Use the per-class masks listed in the manifest metadata.
    #[arg(long, conflicts_with = "mask")]
    pub manifest_masks: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    #[arg(long, required_unless_present = "probe")]
    pub arch_config: Option<String>,
    /// Input shape as CxDxHxW.
    #[arg(long)]
    pub input_shape: Option<String>,
    /// Count operations of a single convolution on a CxDxHxW input instead.
    #[arg(long)]
    pub probe: Option<String>,
    #[arg(long, default_value_t = 3)]
    pub probe_kernel: usize,
    #[arg(long, default_value_t = 1)]
    pub probe_out: usize,
}

pub fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split(['x', 'X', ','])
        .map(|p| p.trim().parse::<usize>().map_err(|_| Error::Usage(format!("bad shape `{s}`"))))
        .collect()
}

fn shape4(s: &str) -> Result<[usize; 4]> {
    parse_shape(s)?
        .try_into()
        .map_err(|_| Error::Usage(format!("`{s}` is not a CxDxHxW shape")))
}

pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Generate(a) => cmd_generate(&a, out),
        Command::Train(a) => cmd_train(&a, out),
        Command::Eval(a) => cmd_eval(&a, out),
        Command::Crossval(a) => cmd_crossval(&a, out),
        Command::Saliency(a) => cmd_saliency(&a, out),
        Command::Info(a) => cmd_info(&a, out),
    }
}

fn say(out: &mut dyn Write, text: impl AsRef<str>) {
    // Progress output is best effort.
    let _ = writeln!(out, "{}", text.as_ref());
}

pub fn cmd_generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let mut params = load_phantom_params(&a.params)?;
    if let Some(seed) = a.seed {
        params.seed = seed;
    }
    let manifest = generate_phantoms(&params, &a.out)?;
    let counts = manifest.class_counts();
    say(out, format!("wrote {} volumes to {}", manifest.len(), a.out.join(MANIFEST_NAME).display()));
    say(out, format!("extents {}", format_extents(params.extents)));
    for d in Diagnosis::ALL {
        say(out, format!("{:>4} {}", d.name(), counts[d.id()]));
    }
    Ok(())
}

/// Manifest, dataset and the architecture adapted to its extents.
fn load_inputs(manifest_path: &Path, arch: &ArchSource) -> Result<(Manifest, VolumeDataset, ArchConfig)> {
    let manifest = load_manifest(manifest_path)?;
    if manifest.is_empty() {
        return Err(Error::format(manifest_path, "has no records"));
    }
    let data = manifest.load_dataset()?;
    let config = arch.for_extents(manifest.extents);
    check_shape(&config.input_shape, &data, manifest_path)?;
    Ok((manifest, data, config))
}

fn check_shape(model_input: &[usize; 4], data: &VolumeDataset, origin: &Path) -> Result<()> {
    match data.input_shape() {
        Some(s) if s != *model_input => Err(Error::format(
            origin,
            format!("volumes have shape {s:?} but the model expects {model_input:?}"),
        )),
        _ => Ok(()),
    }
}

fn split_from_tags(tags: &[Split]) -> SplitPlan {
    let pick = |want: Split| (0..tags.len()).filter(|&i| tags[i] == want).collect();
    SplitPlan {
        train: pick(Split::Train),
        validation: pick(Split::Validation),
        test: pick(Split::Test),
    }
}

fn split_table(manifest: &Manifest, plan: &SplitPlan) -> Result<String> {
    let mut tags = vec![""; manifest.len()];
    for (ids, name) in [(&plan.train, "train"), (&plan.validation, "validation"), (&plan.test, "test")] {
        for &i in ids {
            tags[i] = name;
        }
    }
    let mut t = Table::new(["subject", "split"]);
    for (r, tag) in manifest.records.iter().zip(tags) {
        t.row([r.subject.as_str(), tag]);
    }
    t.finish()
}

fn read_split_table(path: &Path, manifest: &Manifest) -> Result<SplitPlan> {
    let text = String::from_utf8(crate::fsutil::read(path)?).map_err(|_| Error::format(path, "not UTF-8"))?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut by_subject = HashMap::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        let (subject, split) = (row.get(0).unwrap_or(""), row.get(1).unwrap_or(""));
        let split: Split = split.parse().map_err(|e: String| Error::format(path, e))?;
        by_subject.insert(subject.to_string(), split);
    }
    let tags = manifest
        .records
        .iter()
        .map(|r| {
            by_subject
                .get(&r.subject)
                .copied()
                .ok_or_else(|| Error::format(path, format!("no split for `{}`", r.subject)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(split_from_tags(&tags))
}

pub fn cmd_train(a: &TrainArgs, out: &mut dyn Write) -> Result<()> {
    let arch = load_arch(&a.arch_config)?;
    let mut tc: TrainConfig = load_train_config(a.train_config.as_deref())?;
    if let Some(seed) = a.seed {
        tc.seed = seed;
    }
    let (manifest, data, config) = load_inputs(&a.manifest, &arch)?;
    let plan = match manifest.splits() {
        Some(tags) => split_from_tags(&tags),
        None => split_dataset(&(0..data.len()).collect::<Vec<_>>(), SPLIT_RATIOS, tc.seed)?,
    };
    say(
        out,
        format!(
            "{}: {} parameters; split {} / {} / {}",
            config.architecture,
            build(&config)?.count_parameters(),
            plan.train.len(),
            plan.validation.len(),
            plan.test.len()
        ),
    );
    let mut model = build(&config)?;
    model.initialize(derive_seed(tc.seed, "init"));
    let (model, history) = train_observed(model, &data, &plan, &tc, &mut |c| {
        say(
            out,
            format!(
                "iter {:>6} epoch {:>4} lr {:.3e} train {:.5} val {} acc {}",
                c.iteration,
                c.epoch,
                c.lr,
                c.train_loss,
                report::fmt_opt(c.val_loss),
                report::fmt_opt(c.val_accuracy)
            ),
        )
    })?;
    save_model(&a.out.join("model.vxn"), &model)?;
    write_atomic(&a.out.join("history.csv"), report::history_table(&history)?.as_bytes())?;
    write_atomic(&a.out.join("split.csv"), split_table(&manifest, &plan)?.as_bytes())?;
    save_toml(&a.out.join("train.toml"), &tc)?;
    say(out, format!("{} iterations; model written to {}", history.iterations, a.out.join("model.vxn").display()));
    Ok(())
}

fn eval_ids(choice: SplitChoice, plan: &SplitPlan, n: usize) -> Vec<usize> {
    let mut ids = match choice {
        SplitChoice::Train => plan.train.clone(),
        SplitChoice::Validation => plan.validation.clone(),
        SplitChoice::Test => plan.test.clone(),
        SplitChoice::Heldout => plan.held_out(),
        SplitChoice::All => (0..n).collect(),
    };
    ids.sort_unstable();
    ids
}

pub fn cmd_eval(a: &EvalArgs, out: &mut dyn Write) -> Result<()> {
    let manifest = load_manifest(&a.manifest)?;
    let data = manifest.load_dataset()?;
    let models = a.models.iter().map(|p| load_model(p)).collect::<Result<Vec<Model>>>()?;
    for (m, p) in models.iter().zip(&a.models) {
        check_shape(&m.config().input_shape, &data, p)?;
    }
    let ensemble = models.len() == 3;
    if ensemble && matches!(a.split, SplitChoice::Train | SplitChoice::All) {
        return Err(Error::Usage("ensembles are evaluated only on data not used for training".into()));
    }
    let plan = match (&a.split_file, manifest.splits()) {
        (Some(f), _) => read_split_table(f, &manifest)?,
        (None, Some(tags)) => split_from_tags(&tags),
        (None, None) => split_dataset(&(0..data.len()).collect::<Vec<_>>(), SPLIT_RATIOS, a.seed)?,
    };
    let ids = eval_ids(a.split, &plan, data.len());
    if ids.is_empty() {
        return Err(Error::Usage(format!("split {:?} is empty", a.split)));
    }
    let subjects: Vec<String> = ids.iter().map(|&i| manifest.records[i].subject.clone()).collect();

    let mut names = Vec::new();
    for (m, p) in models.iter().zip(&a.models) {
        let arch = m.config().architecture.to_string();
        let dup = models.iter().filter(|o| o.config().architecture == m.config().architecture).count() > 1;
        names.push(if dup {
            p.file_stem().map_or(arch.clone(), |s| s.to_string_lossy().into_owned())
        } else {
            arch
        });
    }
    let mut member_probs = Vec::new();
    let mut rows: Vec<ResultRow> = Vec::new();
    let mut labels = Vec::new();
    for (m, name) in models.iter().zip(&names) {
        let p = evaluate(m, &data, &ids)?;
        rows.push(report::result_row(name, &p.predicted(), &p.labels, Some(&p.probs))?);
        labels = p.labels.clone();
        member_probs.push((name.clone(), p.probs));
    }
    let mut ensemble_csv = None;
    if ensemble {
        let mut averaged = Vec::new();
        let mut voted = Vec::new();
        for i in 0..ids.len() {
            let member = |k: usize| {
                let p = &member_probs[k].1[i];
                (models[k].config().architecture, [p[0], p[1], p[2]])
            };
            let set = PredictionSet::new([member(0), member(1), member(2)])?;
            averaged.push(ensemble_average(&set));
            voted.push(ensemble_vote(&set));
        }
        let avg_probs: Vec<Vec<f64>> = averaged.iter().map(|o| o.probs.to_vec()).collect();
        let avg_pred: Vec<usize> = averaged.iter().map(|o| o.class).collect();
        let vote_pred: Vec<usize> = voted.iter().map(|o| o.class).collect();
        rows.push(report::result_row("ensemble-average", &avg_pred, &labels, Some(&avg_probs))?);
        rows.push(report::result_row("ensemble-vote", &vote_pred, &labels, None)?);
        ensemble_csv = Some(report::ensemble_table(&subjects, &labels, &member_probs, &averaged, &voted)?);
    }

    let confusion: String = rows
        .iter()
        .map(|r| report::render_confusion(&r.name, &r.confusion))
        .collect::<Vec<_>>()
        .join("\n");
    write_atomic(&a.out.join("summary.csv"), report::summary_table(&rows)?.as_bytes())?;
    write_atomic(&a.out.join("roc.csv"), report::roc_table(&rows)?.as_bytes())?;
    write_atomic(&a.out.join("misclass.csv"), report::misclass_table(&rows)?.as_bytes())?;
    write_atomic(&a.out.join("confusion.txt"), confusion.as_bytes())?;
    write_atomic(
        &a.out.join("predictions.csv"),
        report::predictions_table(&subjects, &labels, &member_probs)?.as_bytes(),
    )?;
    if let Some(csv) = ensemble_csv {
        write_atomic(&a.out.join("ensemble.csv"), csv.as_bytes())?;
    }
    say(out, confusion);
    for r in &rows {
        say(out, format!("{:<18} n {:>5} accuracy {}", r.name, r.n, report::fmt_opt(r.metrics.overall_accuracy)));
    }
    Ok(())
}

/// Runs every fold, `workers` at a time. Each fold is a pure function of its
/// seed, so the results do not depend on the worker count.
pub fn cross_validate(
    config: &ArchConfig,
    data: &VolumeDataset,
    plan: &FoldPlan,
    tc: &TrainConfig,
    workers: usize,
) -> Result<Vec<FoldResult>> {
    let make_model = |seed: u64| -> voxnet_core::Result<Model> {
        let mut m = build(config)?;
        m.initialize(derive_seed(seed, "init"));
        Ok(m)
    };
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FoldResult>>>> = Mutex::new((0..plan.k()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, plan.k()) {
            s.spawn(|| loop {
                let fold = next.fetch_add(1, Ordering::SeqCst);
                if fold >= plan.k() {
                    break;
                }
                let r = run_fold(fold, &make_model, data, plan, tc).map_err(Error::from);
                results.lock().unwrap()[fold] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every fold ran"))
        .collect()
}

pub fn cmd_crossval(a: &CrossvalArgs, out: &mut dyn Write) -> Result<()> {
    let arch = load_arch(&a.arch_config)?;
    let mut tc = load_train_config(a.train_config.as_deref())?;
    if let Some(seed) = a.seed {
        tc.seed = seed;
    }
    let (manifest, data, config) = load_inputs(&a.manifest, &arch)?;
    let plan = match manifest.folds() {
        Some(tags) => {
            let k = tags.iter().max().map_or(0, |m| m + 1);
            let mut folds = vec![Vec::new(); k];
            for (i, f) in tags.into_iter().enumerate() {
                folds[f].push(i);
            }
            if folds.iter().any(Vec::is_empty) || k < 2 {
                return Err(Error::format(&a.manifest, "fold tags must cover 0..k with k >= 2"));
            }
            FoldPlan { folds }
        }
        None => {
            let ids: Vec<usize> = (0..data.len()).collect();
            make_kfold(&ids, &data.labels(), a.folds, tc.seed)?
        }
    };
    say(out, format!("{}: {} folds over {} samples", config.architecture, plan.k(), data.len()));
    let folds = cross_validate(&config, &data, &plan, &tc, a.workers)?;
    for f in &folds {
        say(out, format!("fold {} accuracy {}", f.fold, report::fmt_opt(f.metrics.overall_accuracy)));
    }
    let mut preds = Table::new(["fold", "subject", "label", "p_AD", "p_MCI", "p_CN", "predicted"]);
    for f in &folds {
        for ((&id, &label), p) in f.predictions.ids.iter().zip(&f.predictions.labels).zip(&f.predictions.probs) {
            let name = |c: usize| Diagnosis::from_id(c).map_or("?", Diagnosis::name).to_string();
            let mut cells = vec![f.fold.to_string(), manifest.records[id].subject.clone(), name(label)];
            cells.extend(p.iter().map(|v| v.to_string()));
            cells.push(name(voxnet_core::tensor::argmax(p)));
            preds.row(cells);
        }
    }
    write_atomic(&a.out.join("folds.csv"), report::folds_table(&folds)?.as_bytes())?;
    write_atomic(&a.out.join("aggregate.csv"), report::aggregate_table(&folds)?.as_bytes())?;
    write_atomic(&a.out.join("predictions.csv"), preds.finish()?.as_bytes())?;
    Ok(())
}

fn mask_of(record: &VolumeRecord) -> Vec<bool> {
    record.channel(0).iter().map(|&v| v > 0.5).collect()
}

pub fn cmd_saliency(a: &SaliencyArgs, out: &mut dyn Write) -> Result<()> {
    let model = load_model(&a.model)?;
    let manifest = load_manifest(&a.manifest)?;
    let data = manifest.load_dataset()?;
    check_shape(&model.config().input_shape, &data, &a.model)?;
    let classes = if a.classes.is_empty() { Diagnosis::ALL.to_vec() } else { a.classes.clone() };
    let shared_mask = a.mask.as_deref().map(load_volume).transpose()?;
    // Validate everything before writing anything.
    let mut maps = Vec::new();
    for &class in &classes {
        if !(0..data.len()).any(|i| data.label(i) == class.id()) {
            return Err(Error::Usage(format!("no samples of class {class}")));
        }
        let map = class_mean_saliency(&model, &data, class.id())?;
        let mask = match (&shared_mask, a.manifest_masks) {
            (Some(m), _) => Some(m.clone()),
            (None, true) => {
                let rel = manifest.metadata.get(&format!("mask_{}", class.name())).ok_or_else(|| {
                    Error::format(&a.manifest, format!("no mask_{} entry in the metadata", class.name()))
                })?;
                Some(load_volume(&manifest.base_dir.join(rel))?)
            }
            (None, false) => None,
        };
        let enrichment = match &mask {
            Some(m) if m.extents != map.extents => {
                return Err(Error::Usage(format!("mask extents {:?} differ from {:?}", m.extents, map.extents)))
            }
            Some(m) => Some(region_enrichment(&map.data, &mask_of(m))?),
            None => None,
        };
        maps.push((class, map, enrichment));
    }
    for (class, map, enrichment) in maps {
        let record = VolumeRecord::new(
            format!("saliency-{}-{}", model.config().architecture, class.name().to_ascii_lowercase()),
            1,
            map.extents,
            map.data.iter().map(|&v| v as f32).collect(),
            Some(class),
        )?;
        let path = a.out.join(format!("saliency-{}.vvol", class.name().to_ascii_lowercase()));
        save_volume(&path, &record)?;
        match enrichment {
            Some(e) => say(out, format!("{} enrichment {e}", class.name())),
            None => say(out, format!("{} written to {}", class.name(), path.display())),
        }
    }
    Ok(())
}

/// Every convolution with the shape of its input, in graph order.
fn conv_inputs(layers: &[Layer], input: &[usize], acc: &mut Vec<(String, ConvSpec, Vec<usize>)>) -> Result<()> {
    let mut shape = input.to_vec();
    for layer in layers {
        match &layer.kind {
            LayerKind::Conv3d(spec) => acc.push((layer.name.clone(), *spec, shape.clone())),
            LayerKind::ConcatGroup { branches } => {
                for b in branches {
                    conv_inputs(b, &shape, acc)?;
                }
            }
            _ => {}
        }
        shape = layer_output_shape(layer, &shape)?;
    }
    Ok(())
}

pub fn cmd_info(a: &InfoArgs, out: &mut dyn Write) -> Result<()> {
    if let Some(probe) = &a.probe {
        let [c, d, h, w] = shape4(probe)?;
        let spec = ConvSpec::cube(c, a.probe_out, a.probe_kernel, 0);
        for mode in [CountMode::Nominal, CountMode::Standard] {
            let n = op_count(&spec, [d, h, w], mode)?;
            say(out, format!("{mode:?}: multiplications {} additions {}", n.multiplications, n.additions));
        }
        return Ok(());
    }
    let arch = load_arch(a.arch_config.as_deref().expect("required by the parser"))?;
    let mut config = arch.config().clone();
    if let Some(s) = &a.input_shape {
        config = config.with_input(shape4(s)?);
    }
    let model = build(&config)?;
    let census = model.census();
    say(out, format!("architecture {}", config.architecture));
    say(out, format!("input {:?}", config.input_shape));
    for step in shape_walk(model.layers(), &config.input_shape)? {
        let indent = "  ".repeat(step.depth + 1);
        say(out, format!("{indent}{:<24} {:<10} {:?}", step.name, step.kind, step.output));
    }
    say(out, format!("parameters {}", model.count_parameters()));
    say(
        out,
        format!(
            "learnable layers {} (conv {}, dense {}); heads {}; auxiliary heads {}",
            census.learnable(),
            census.conv,
            census.dense,
            census.heads,
            census.auxiliary_heads
        ),
    );
    say(out, "operation counts per convolution (nominal | standard):");
    let mut convs = Vec::new();
    conv_inputs(model.layers(), &config.input_shape, &mut convs)?;
    let mut total = [0u64; 4];
    for (name, spec, input) in convs {
        let spatial = [input[1], input[2], input[3]];
        let p = op_count(&spec, spatial, CountMode::Nominal)?;
        let s = op_count(&spec, spatial, CountMode::Standard)?;
        total[0] += p.multiplications;
        total[1] += p.additions;
        total[2] += s.multiplications;
        total[3] += s.additions;
        say(
            out,
            format!(
                "  {:<24} {:>16} {:>12} | {:>16} {:>16}",
                name, p.multiplications, p.additions, s.multiplications, s.additions
            ),
        );
    }
    say(out, format!("  {:<24} {:>16} {:>12} | {:>16} {:>16}", "total", total[0], total[1], total[2], total[3]));
    Ok(())
}
