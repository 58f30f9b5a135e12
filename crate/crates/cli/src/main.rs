// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.


mod config;
mod error;
mod output;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use circfid::circuit::{parse_circuit, Circuit};
use circfid::baseline::estimate_fidelity;
use circfid::dataset::{build_dataset, read_jsonl, split, write_jsonl};
use circfid::nn::{loss, read_checkpoint, train, write_checkpoint, Model};
use circfid::pipeline::{encode_records, fit_record_vocab, Predictor};
use circfid::report::{evaluate, layout_report, rmse_ratio, write_eval_csv, write_layout_csv, Scorer};
use circfid::seed::derive;
use circfid::tokenizer::Vocab;
use circfid::transpile::{transpile, BasisSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use config::{read_json, RunConfig, CONFIG_ENV};
use error::CliError;
use output::{emit, read_input, sidecar, Outputs};

#[derive(Parser)]
#[command(name = "circfid", version, about = "Circuit fidelity datasets, training and prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON run config
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Built-in device: nairobi or montreal
    #[arg(long, global = true)]
    device: Option<String>,
    #[arg(long, global = true)]
    coupling_map: Option<PathBuf>,
    #[arg(long, global = true)]
    noise_model: Option<PathBuf>,
    #[arg(long, global = true)]
    error_map: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(self.config.as_deref())?;
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if self.device.is_some() {
            cfg.device = self.device.clone();
            cfg.coupling_map = None;
            cfg.noise_model = None;
        }
        if self.coupling_map.is_some() {
            cfg.coupling_map = self.coupling_map.clone();
        }
        if self.noise_model.is_some() {
            cfg.noise_model = self.noise_model.clone();
        }
        if self.error_map.is_some() {
            cfg.error_map = self.error_map.clone();
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate a labelled RB dataset as JSON lines
    GenDataset {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        records: Option<usize>,
        /// Also write dataset statistics as JSON
        #[arg(long)]
        stats: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a model on a dataset; writes the checkpoint plus
    /// `<stem>.vocab.json` and `<stem>.history.json` beside it
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the predicted fidelity of each circuit
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        circuits: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Rank every layout of a circuit on the device as CSV
    Layouts {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, value_enum, default_value_t = ScorerKind::Baseline)]
        scorer: ScorerKind,
        /// Required with `--scorer model`
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the error-map fidelity estimate of each circuit
    Baseline {
        #[arg(required = true)]
        circuits: Vec<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Simulate circuits and compare model and baseline predictions
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        circuits: Vec<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-trial fidelities as JSON, keyed by circuit name
        #[arg(long)]
        trials_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScorerKind {
    Baseline,
    Model,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("circfid: {e}");
            e.exit_code()
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::GenDataset { out, records, stats, common } => gen_dataset(&common.resolve()?, &out, records, stats.as_deref()),
        Command::Train { dataset, out, epochs, lr, common } => {
            let mut cfg = common.resolve()?;
            cfg.train.epochs = epochs.or(cfg.train.epochs);
            cfg.train.lr = lr.or(cfg.train.lr);
            train_cmd(&cfg, &dataset, &out)
        }
        Command::Predict { model, circuits, common } => predict(&common.resolve()?, &model, &circuits),
        Command::Layouts { circuit, scorer, model, out, common } => {
            layouts(&common.resolve()?, &circuit, scorer, model.as_deref(), out.as_deref())
        }
        Command::Baseline { circuits, common } => baseline(&common.resolve()?, &circuits),
        Command::Eval { model, circuits, trials, shots, out, trials_out, common } => {
            let mut cfg = common.resolve()?;
            cfg.eval.trials = trials.or(cfg.eval.trials);
            cfg.eval.shots = shots.or(cfg.eval.shots);
            eval(&cfg, &model, &circuits, out.as_deref(), trials_out.as_deref())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn gen_dataset(cfg: &RunConfig, out: &Path, records: Option<usize>, stats: Option<&Path>) -> Result<(), CliError> {
    let mut dcfg = cfg.dataset_config(cfg.device()?);
    if let Some(n) = records {
        dcfg.n_records = n;
    }
    dcfg.validate()?;
    let ds = build_dataset(&dcfg)?;
    let mut data = Vec::new();
    write_jsonl(&ds.records, &mut data)?;
    let mut files = Outputs::default();
    files.add(out, data);
    if let Some(p) = stats {
        files.add(p, to_json(&ds.stats));
    }
    files.commit()?;
    eprintln!(
        "generated {} circuits, kept {} at depth <= {}",
        ds.stats.generated, ds.stats.retained, dcfg.depth_cutoff
    );
    Ok(())
}

#[derive(Serialize)]
struct TrainSummary {
    n_train: usize,
    n_val: usize,
    n_test: usize,
    epochs_run: usize,
    best_epoch: usize,
    train_loss: Vec<f64>,
    val_loss: Vec<f64>,
    test_rmse: f64,
}

fn read_records(path: &Path) -> Result<Vec<circfid::dataset::DatasetRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    read_jsonl(std::io::BufReader::new(file)).map_err(|e| CliError::from(e).context(path.display()))
}

fn train_cmd(cfg: &RunConfig, dataset: &Path, out: &Path) -> Result<(), CliError> {
    let device = cfg.device()?;
    let records = read_records(dataset)?;
    if let Some(r) = records.iter().find(|r| r.device != device.name()) {
        return Err(CliError::Config(format!(
            "record {} was generated for `{}` but the configured device is `{}`",
            r.id,
            r.device,
            device.name()
        )));
    }
    let seed = cfg.seed();
    let ratios = cfg.dataset_config(device.clone()).split;
    let (tr, va, te) = split(&records, ratios, derive(seed, 1))?;
    let width = device.width();
    let vocab = fit_record_vocab(&tr, width)?;
    let mcfg = cfg.model_config(width, vocab.len());
    let mut tcfg = cfg.train_config();
    tcfg.seed = derive(seed, 3);
    let enc = |rs| encode_records(rs, &vocab, width, mcfg.t);
    let (trs, vas, tes) = (enc(&tr)?, enc(&va)?, enc(&te)?);
    let init = Model::<f32>::new(mcfg, derive(seed, 2))?;
    let (model, hist) = train(&init, &trs, &vas, &tcfg)?;
    let test_rmse = loss(&model, &tes)?.sqrt();
    if !test_rmse.is_finite() {
        return Err(CliError::Numerical(format!("test loss is {test_rmse}")));
    }

    let mut ckpt = Vec::new();
    write_checkpoint(&model, &vocab.hash(), &mut ckpt)?;
    let summary = TrainSummary {
        n_train: trs.len(),
        n_val: vas.len(),
        n_test: tes.len(),
        epochs_run: hist.train_loss.len(),
        best_epoch: hist.best_epoch,
        train_loss: hist.train_loss,
        val_loss: hist.val_loss,
        test_rmse,
    };
    let mut files = Outputs::default();
    files.add(out, ckpt);
    files.add(sidecar(out, "vocab.json"), to_json(&vocab));
    files.add(sidecar(out, "history.json"), to_json(&summary));
    files.commit()?;
    eprintln!(
        "trained {} epochs (best {}), validation RMSE {:.4}, test RMSE {test_rmse:.4}",
        summary.epochs_run,
        summary.best_epoch + 1,
        summary.val_loss[summary.best_epoch].sqrt()
    );
    Ok(())
}

fn load_predictor(model: &Path) -> Result<Predictor, CliError> {
    let bytes = std::fs::read(model).map_err(|e| CliError::Input(format!("{}: {e}", model.display())))?;
    let (m, header) = read_checkpoint(bytes.as_slice(), None).map_err(|e| CliError::from(e).context(model.display()))?;
    let vocab_path = sidecar(model, "vocab.json");
    let vocab: Vocab = read_json(&vocab_path)?;
    if vocab.hash() != header.vocab_hash {
        return Err(CliError::Input(format!(
            "{} does not match the vocabulary the checkpoint was trained with",
            vocab_path.display()
        )));
    }
    let width = m.config().lanes;
    Ok(Predictor {
        model: m,
        vocab,
        device_width: width,
    })
}

fn load_circuit(path: &Path) -> Result<Circuit, CliError> {
    parse_circuit(&read_input(path)?).map_err(|e| CliError::from(e).context(path.display()))
}

fn circuit_name(path: &Path) -> String {
    path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned())
}

fn predict(cfg: &RunConfig, model: &Path, circuits: &[PathBuf]) -> Result<(), CliError> {
    let p = load_predictor(model)?;
    let device = cfg.device()?;
    if device.width() != p.device_width {
        return Err(CliError::Config(format!(
            "model was trained for {} qubits, device `{}` has {}",
            p.device_width,
            device.name(),
            device.width()
        )));
    }
    let cs = circuits.iter().map(|c| load_circuit(c)).collect::<Result<Vec<_>, _>>()?;
    let preds = p.predict_many(&cs)?;
    let mut text = String::new();
    for (path, v) in circuits.iter().zip(preds) {
        text.push_str(&format!("{},{v:.6}\n", path.display()));
    }
    emit(None, text.into_bytes())
}

fn layouts(
    cfg: &RunConfig,
    circuit: &Path,
    scorer: ScorerKind,
    model: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let device = cfg.device()?;
    let c = load_circuit(circuit)?;
    let rows = match scorer {
        ScorerKind::Baseline => {
            let em = cfg.error_map(&device)?;
            layout_report(&c, &device.coupling, &Scorer::Baseline(&em))?
        }
        ScorerKind::Model => {
            let path = model.ok_or_else(|| CliError::Config("--scorer model needs --model".into()))?;
            let p = load_predictor(path)?;
            layout_report(&c, &device.coupling, &Scorer::Model(&p))?
        }
    };
    let mut csv = Vec::new();
    write_layout_csv(&rows, &mut csv)?;
    emit(out, csv)
}

fn baseline(cfg: &RunConfig, circuits: &[PathBuf]) -> Result<(), CliError> {
    let device = cfg.device()?;
    let em = cfg.error_map(&device)?;
    let mut text = String::new();
    for path in circuits {
        let c = transpile(&load_circuit(path)?, &BasisSet::ibm())?;
        let f = estimate_fidelity(&c, &em).map_err(|e| CliError::from(e).context(path.display()))?;
        text.push_str(&format!("{},{f:.6}\n", path.display()));
    }
    emit(None, text.into_bytes())
}

fn eval(
    cfg: &RunConfig,
    model: &Path,
    circuits: &[PathBuf],
    out: Option<&Path>,
    trials_out: Option<&Path>,
) -> Result<(), CliError> {
    let device = cfg.device()?;
    let em = cfg.error_map(&device)?;
    let p = load_predictor(model)?;
    let named = circuits
        .iter()
        .map(|path| Ok((circuit_name(path), load_circuit(path)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    let rows = evaluate(&named, &p, &em, &device.noise, cfg.trials(), cfg.shots(), cfg.seed())?;
    let ratio = rmse_ratio(&rows);
    if !ratio.is_finite() {
        return Err(CliError::Numerical(format!("RMSE ratio is {ratio}")));
    }
    let mut csv = Vec::new();
    write_eval_csv(&rows, &mut csv)?;
    if let Some(t) = trials_out {
        let per: BTreeMap<&str, &[f64]> = rows.iter().map(|r| (r.name.as_str(), r.trials.as_slice())).collect();
        let mut files = Outputs::default();
        files.add(t, to_json(&per));
        if let Some(o) = out {
            files.add(o, csv);
            files.commit()?;
        } else {
            files.commit()?;
            emit(None, csv)?;
        }
    } else {
        emit(out, csv)?;
    }
    eprintln!("baseline/model RMSE ratio: {ratio:.3}");
    Ok(())
}
