mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use args::{
    BenchCmd, Cli, Command, CrossCmd, DetectCmd, EvalCmd, PerturbCmd, SaliencyCmd, TrainCmd,
};
use pid_core::bench::{
    cross_features, gen_synthetic, ground_truth_pairs, roc_auc, run_experiment_with,
    ExperimentConfig, MAX_CROSS_ORDER,
};
use pid_core::pid::{perturb_uniform, read_ranked_json};
use pid_core::{
    detect, load_network, pairwise_strengths, saliency, save_network, stability_check, train_mlp,
    DatasetSpec, InteractionCandidate, PersistenceLedger,
};

const SEED_ENV: &str = "PID_SEED";

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Ok(raw) = std::env::var(SEED_ENV) {
        match raw.trim().parse::<u64>() {
            Ok(seed) => override_seed(&mut cli.command, seed),
            Err(_) => {
                eprintln!("error: {SEED_ENV}={raw:?} is not an unsigned integer");
                return ExitCode::from(2);
            }
        }
    }
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
        {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn override_seed(cmd: &mut Command, seed: u64) {
    match cmd {
        Command::Train(c) => c.seed = seed,
        Command::Perturb(c) => c.seed = seed,
        Command::Bench(c) => c.seed = seed,
        Command::Detect(_) | Command::Eval(_) | Command::Saliency(_) | Command::Cross(_) => {}
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Train(c) => train(c),
        Command::Detect(c) => detect_cmd(c),
        Command::Eval(c) => eval(c),
        Command::Perturb(c) => perturb(c),
        Command::Saliency(c) => saliency_cmd(c),
        Command::Cross(c) => cross(c),
        Command::Bench(c) => bench(c),
    }
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serialization is infallible");
    s.push('\n');
    s
}

fn train(c: TrainCmd) -> Result<()> {
    let data = match (&c.data, c.function) {
        (Some(path), _) => DatasetSpec::load_csv(path)?,
        (None, Some(fid)) => gen_synthetic(fid, c.samples as usize, c.seed)?,
        (None, None) => unreachable!("clap requires one data source"),
    };
    if let Some(path) = &c.data_out {
        write(path, data.to_csv())?;
    }
    let cfg = c.train.config(c.seed);
    let (net, log) = train_mlp(&data, &cfg)?;
    save_network(&net, &c.model_out)?;
    write(&c.log_out, log.to_csv())?;
    println!(
        "best epoch {} of {}: val mse {:.6e}, test mse {:.6e}",
        log.best_epoch,
        log.epochs.len(),
        log.best_val_mse,
        log.test_mse
    );
    Ok(())
}

fn pairwise_csv(matrix: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in matrix {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(out, "{}", cells.join(",")).unwrap();
    }
    out
}

fn detect_cmd(c: DetectCmd) -> Result<()> {
    let net = load_network(&c.model)?;
    let ledger = detect(&net, &c.detect.config())?;
    write(&c.out, ledger.to_ranked_json() + "\n")?;
    write(
        &c.pairwise_out,
        pairwise_csv(&pairwise_strengths(&ledger, net.input_dim())),
    )?;
    println!("{} candidates", ledger.len());
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    function: String,
    auc: f64,
    true_pairs: usize,
    candidates: usize,
    layer: usize,
    p: f64,
    eta: f64,
}

fn eval(c: EvalCmd) -> Result<()> {
    let net = load_network(&c.model)?;
    let truth = ground_truth_pairs(c.function)?;
    if net.input_dim() != truth.num_features {
        bail!(
            "model has {} inputs but F{} has {}",
            net.input_dim(),
            c.function,
            truth.num_features
        );
    }
    let cfg = c.detect.config();
    let ledger = detect(&net, &cfg)?;
    let auc = roc_auc(&pairwise_strengths(&ledger, net.input_dim()), &truth)?;
    let report = EvalReport {
        function: format!("F{}", c.function),
        auc,
        true_pairs: truth.pairs.len(),
        candidates: ledger.len(),
        layer: cfg.layer,
        p: cfg.p,
        eta: cfg.eta,
    };
    write(&c.out, json(&report))?;
    println!("F{} auc {auc:.4}", c.function);
    Ok(())
}

fn perturb(c: PerturbCmd) -> Result<()> {
    let net = load_network(&c.model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let perturbed = perturb_uniform(&net, c.delta, &mut rng)?;
    if let Some(path) = &c.model_out {
        save_network(&perturbed, path)?;
    }
    let report = stability_check(&net, &perturbed, &c.detect.config())?;
    write(&c.out, report.to_json() + "\n")?;
    println!(
        "delta {:.6e}, bound {:.6e}, max diff {:.6e}, violations {}",
        report.delta,
        report.bound,
        report.max_diff(),
        report.violations().count()
    );
    Ok(())
}

fn ledger_from_file(path: &Path, d: usize, c: &args::DetectArgs) -> Result<PersistenceLedger> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let ranked = read_ranked_json(&text)?;
    Ok(PersistenceLedger::from_entries(
        ranked.into_iter().map(|r| (r.features, r.strength)),
        d,
        &c.config(),
    )?)
}

fn saliency_cmd(c: SaliencyCmd) -> Result<()> {
    let (h, w) = (c.height as usize, c.width as usize);
    let ledger = match (&c.model, &c.ledger) {
        (Some(model), _) => detect(&load_network(model)?, &c.detect.config())?,
        (None, Some(path)) => ledger_from_file(path, h * w, &c.detect)?,
        (None, None) => unreachable!("clap requires one source"),
    };
    let map = saliency(&ledger, h, w)?;
    write(&c.csv_out, map.to_csv())?;
    write(&c.pgm_out, map.to_pgm())?;
    Ok(())
}

fn cross(c: CrossCmd) -> Result<()> {
    let data = DatasetSpec::load_csv(&c.data)?;
    let candidates: Vec<InteractionCandidate> = match (&c.candidates, &c.ledger) {
        (Some(list), _) => list
            .0
            .iter()
            .cloned()
            .map(InteractionCandidate::new)
            .collect(),
        (None, Some(path)) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            read_ranked_json(&text)?
                .into_iter()
                .map(|r| r.features)
                .filter(|f| (2..=MAX_CROSS_ORDER).contains(&f.len()))
                .take(c.top)
                .collect()
        }
        (None, None) => unreachable!("clap requires one source"),
    };
    let out = cross_features(&data, &candidates, c.bucket as usize)?;
    write(&c.out, out.to_csv())?;
    println!("crossed {} candidates", candidates.len());
    Ok(())
}

fn bench(c: BenchCmd) -> Result<()> {
    let cfg = ExperimentConfig {
        functions: c.functions.0.clone(),
        trials: c.trials as usize,
        samples: c.samples as usize,
        seed: c.seed,
        train: c.train.config(c.seed),
        detect: c.detect.config(),
    };
    let report = run_experiment_with(&cfg, |t| match (&t.auc, &t.error) {
        (Some(auc), _) => eprintln!(
            "F{} trial {}: auc {auc:.4}, test mse {:.3e} ({:.1}s)",
            t.function,
            t.trial,
            t.test_mse.unwrap_or(f64::NAN),
            t.seconds
        ),
        (None, err) => eprintln!(
            "F{} trial {}: failed: {}",
            t.function,
            t.trial,
            err.as_deref().unwrap_or("unknown")
        ),
    })?;
    write(&c.out_dir.join("report.json"), report.to_json() + "\n")?;
    write(&c.out_dir.join("report.csv"), report.to_csv())?;
    for s in &report.functions {
        match (s.mean_auc, s.std_auc) {
            (Some(m), Some(sd)) => println!("F{:<3} {m:.3} ± {sd:.3}", s.function),
            _ => println!("F{:<3} no completed trials", s.function),
        }
    }
    if let Some(avg) = report.average_auc {
        println!("avg  {avg:.3}");
    }
    Ok(())
}
