//! Thin batch CLI over the faceq library. Every subcommand is a direct
//! call into `faceq::pipeline`; outputs are CSV tables, SVG plots and
//! versioned model files. Exit codes: 0 success, 2 validation, 3 I/O,
//! 4 numeric.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use faceq::config::{corpus_from_config, ConfigFile, ExperimentConfig};
use faceq::error::{Error, Result};
use faceq::features::FeatureKind;
use faceq::fiqa::TrainOptions;
use faceq::manifest::{read_manifest, write_manifest};
use faceq::pipeline;
use faceq::synthcorpus;

const USAGE: &str = "\
faceq - face image quality toolkit

usage: faceq <command> [flags]

commands:
  gen-corpus  --config <cfg> --out <dir>            generate a synthetic corpus
              (or --subjects N --images N --seed S for a clean corpus)
  measure     --manifest <csv> --out <csv>          edge density / sharpness / spectral energy
  train-fiqa  --manifest <csv> --out <model>        train the two-level quality model
  assess      --manifest <csv> --model <m> --out <csv>   quality scores + categories
  partition   --manifest <csv> --scores <csv> --out <dir>  split into low/middle/high
  features    --manifest <csv> --kind <k> --out <csv>      feature vectors (gabor/lbp/hog/gist/external)
  enhance     --manifest <csv> --config <cfg> --out <dir>  apply an enhancement plan
  match       --probes <csv> --gallery <csv> --out <csv>   ranked subjects per probe
  cmc         --probes <csv> --gallery <csv> --out <dir>   identification curve
  run         --manifest <csv> --config <cfg> --out <dir>  full experiment bundle

flags: --manifest --config --out --workers --seed --set {low,middle,high}
       --model --scores --measures --kind --probes --gallery
       --subjects --images --seed

--config accepts a file path or a preset name (a1..a4, b1..b4, c1..c4).
";

struct Args {
    flags: BTreeMap<String, String>,
}

impl Args {
    fn parse(argv: &[String]) -> Result<Args> {
        let mut flags = BTreeMap::new();
        let mut i = 0;
        while i < argv.len() {
            let arg = &argv[i];
            let key = arg
                .strip_prefix("--")
                .ok_or_else(|| Error::validation(format!("unexpected argument `{arg}`")))?;
            let value = argv
                .get(i + 1)
                .ok_or_else(|| Error::validation(format!("flag --{key} needs a value")))?;
            flags.insert(key.to_string(), value.clone());
            i += 2;
        }
        Ok(Args { flags })
    }

    fn path(&self, key: &str) -> Result<PathBuf> {
        self.flags
            .get(key)
            .map(PathBuf::from)
            .ok_or_else(|| Error::validation(format!("missing required flag --{key}")))
    }

    fn opt_path(&self, key: &str) -> Option<PathBuf> {
        self.flags.get(key).map(PathBuf::from)
    }

    fn str(&self, key: &str) -> Result<&str> {
        self.flags
            .get(key)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::validation(format!("missing required flag --{key}")))
    }

    fn num<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.flags.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| Error::validation(format!("bad value for --{key}: `{v}`"))),
        }
    }

    fn config(&self) -> Result<ExperimentConfig> {
        match self.flags.get("config") {
            Some(name) => ExperimentConfig::load(name),
            None => ExperimentConfig::from_file(&ConfigFile::parse("")?),
        }
    }

    fn workers(&self) -> Result<usize> {
        self.num("workers", 1usize)
    }
}

/// Trim a manifest to one quality band when --set is given.
fn filtered_manifest(args: &Args, manifest: &Path) -> Result<PathBuf> {
    let Some(set) = args.flags.get("set") else {
        return Ok(manifest.to_path_buf());
    };
    faceq::fiqa::QualityBand::parse(set)?;
    let records = read_manifest(manifest)?;
    let subset: Vec<_> =
        records.into_iter().filter(|r| r.split_hint.as_deref() == Some(set.as_str())).collect();
    if subset.is_empty() {
        return Err(Error::validation(format!("no records with split_hint `{set}`")));
    }
    let path = std::env::temp_dir().join(format!("faceq-set-{}-{set}.csv", std::process::id()));
    write_manifest(&path, &subset)?;
    Ok(path)
}

fn dispatch(command: &str, args: &Args) -> Result<()> {
    match command {
        "gen-corpus" => {
            let out = args.path("out")?;
            let spec = match args.flags.get("config") {
                Some(cfg) => corpus_from_config(&ConfigFile::load(Path::new(cfg))?)?,
                None => synthcorpus::CorpusSpec {
                    subjects: args.num("subjects", 10usize)?,
                    images_per_subject: args.num("images", 1usize)?,
                    seed: args.num("seed", 0u64)?,
                    variants: vec![synthcorpus::ImageVariant::clean("high")],
                },
            };
            let records = synthcorpus::generate(&spec, &out)?;
            println!(
                "generated {} images ({} subjects) under {}",
                records.len(),
                spec.subjects,
                out.display()
            );
            Ok(())
        }
        "measure" => {
            let manifest = filtered_manifest(args, &args.path("manifest")?)?;
            let table = pipeline::cmd_measure(&manifest, &args.path("out")?, args.workers()?)?;
            println!("measured {} records", table.len());
            Ok(())
        }
        "train-fiqa" => {
            let manifest = args.path("manifest")?;
            let config = args.config()?;
            let opts = TrainOptions { seed: args.num("seed", 7u64)?, ..Default::default() };
            let model = pipeline::cmd_train_fiqa(
                &manifest,
                &config,
                &opts,
                &args.path("out")?,
                args.workers()?,
            )?;
            println!(
                "trained quality model: {} level-1 rankers, level-2 dim {}",
                model.level1.len(),
                model.level2_weights.len()
            );
            Ok(())
        }
        "assess" => {
            let manifest = filtered_manifest(args, &args.path("manifest")?)?;
            let scores = pipeline::cmd_assess(
                &manifest,
                &args.path("model")?,
                &args.config()?,
                &args.path("out")?,
                args.workers()?,
            )?;
            println!("scored {} records", scores.len());
            Ok(())
        }
        "partition" => {
            let summary = pipeline::cmd_partition(
                &args.path("manifest")?,
                &args.path("scores")?,
                &args.path("out")?,
            )?;
            print!("{summary}");
            Ok(())
        }
        "features" => {
            let manifest = filtered_manifest(args, &args.path("manifest")?)?;
            let kind = FeatureKind::parse(args.str("kind")?)?;
            pipeline::cmd_features(
                &manifest,
                kind,
                &args.config()?,
                &args.path("out")?,
                args.workers()?,
            )
        }
        "enhance" => {
            let summary = pipeline::cmd_enhance(
                &args.path("manifest")?,
                &args.config()?,
                args.opt_path("measures").as_deref(),
                &args.path("out")?,
                args.workers()?,
            )?;
            print!("{summary}");
            Ok(())
        }
        "match" => pipeline::cmd_match(
            &args.path("probes")?,
            &args.path("gallery")?,
            &args.config()?,
            &args.path("out")?,
            args.workers()?,
        ),
        "cmc" => {
            let run = pipeline::cmd_cmc(
                &args.path("probes")?,
                &args.path("gallery")?,
                &args.config()?,
                &args.path("out")?,
                args.workers()?,
            )?;
            println!(
                "rank-1 {:.4} over {} probes ({} missing subject)",
                run.curve.rank1(),
                run.evaluated,
                run.missing_subject
            );
            Ok(())
        }
        "run" => {
            let outcome = pipeline::cmd_run_experiment(
                &args.path("manifest")?,
                &args.config()?,
                &args.path("out")?,
                args.workers()?,
            )?;
            for p in &outcome.probes {
                match (&p.after, p.rank1_delta) {
                    (Some(after), Some(delta)) => println!(
                        "probe {}: rank-1 {:.4} -> {:.4} (delta {:+.4})",
                        p.band.name(),
                        p.before.curve.rank1(),
                        after.curve.rank1(),
                        delta
                    ),
                    _ => println!(
                        "probe {}: rank-1 {:.4}",
                        p.band.name(),
                        p.before.curve.rank1()
                    ),
                }
            }
            println!("bundle written to {}", outcome.out_dir.display());
            Ok(())
        }
        other => Err(Error::validation(format!("unknown command `{other}`"))),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = argv.first() else {
        eprint!("{USAGE}");
        return ExitCode::from(2);
    };
    if command == "--help" || command == "-h" || command == "help" {
        print!("{USAGE}");
        return ExitCode::SUCCESS;
    }
    let args = match Args::parse(&argv[1..]) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("faceq: {e}");
            return ExitCode::from(2);
        }
    };
    match dispatch(command, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("faceq: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
