//! `relaysim` command-line front end.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use relaysim::association::{associate, LinkTable};
use relaysim::experiment::{base_scene, drop_seed};
use relaysim::{emit_cdfs, load_config, run_experiment_on, RelayCase, ScenarioConfig};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "relaysim",
    version,
    about = "mmWave repeater and relay system simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration file and print the resolved configuration.
    Validate(Common),
    /// Run every selected case and write CDF and summary CSVs.
    Run(Common),
    /// Re-run the experiment for each value of one numeric parameter.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Dotted path of the parameter, e.g. `relay.smart_g_max_db`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
    },
    /// Write the scene of the first drop (and, with --cases, association maps) as JSON.
    ExportScene(Common),
}

#[derive(Args)]
struct Common {
    /// JSON configuration; defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated case names; all cases when omitted.
    #[arg(long, value_delimiter = ',')]
    cases: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    drops: Option<usize>,
    #[arg(long)]
    slots: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for parallel drops; defaults to the number of CPUs.
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                load_config(path).with_context(|| format!("loading {}", path.display()))?
            }
            None => ScenarioConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(d) = self.drops {
            cfg.drops = d;
        }
        if let Some(s) = self.slots {
            cfg.slots = s;
        }
        if let Some(o) = &self.out {
            cfg.out_dir = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn cases(&self) -> Result<Vec<RelayCase>> {
        if self.cases.is_empty() {
            return Ok(RelayCase::ALL.to_vec());
        }
        let mut out = Vec::new();
        for name in &self.cases {
            let case: RelayCase = name.parse()?;
            if !out.contains(&case) {
                out.push(case);
            }
        }
        Ok(out)
    }

    fn threads(&self) -> usize {
        self.threads
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
            .max(1)
    }
}

fn run(cfg: &ScenarioConfig, cases: &[RelayCase], threads: usize, out: &Path) -> Result<()> {
    let start = Instant::now();
    let results = run_experiment_on(cfg, cases, threads)?;
    for (case, store) in &results {
        log::info!(
            "{case}: {:.1}% indirect UEs over {} drops",
            store.indirect_pct(),
            store.drops
        );
    }
    let files = emit_cdfs(results.iter().map(|(c, s)| (c.name(), s)), out)?;
    log::info!(
        "wrote {} files to {} in {:.1} s",
        files.len(),
        out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Sets the number at dotted `path` inside the serialized configuration.
/// Only existing numeric (or null) fields can be swept.
fn set_param(root: &mut Value, path: &str, value: f64) -> Result<()> {
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, key) in parts.iter().enumerate() {
        let Value::Object(map) = node else {
            bail!("`{}` is not an object", parts[..i].join("."));
        };
        if i + 1 == parts.len() {
            let v = match map.get(*key) {
                Some(Value::Number(n)) if n.is_u64() || n.is_i64() => {
                    if value.fract() != 0.0 {
                        bail!("parameter `{path}` is an integer, got {value}");
                    }
                    Value::from(value as i64)
                }
                Some(Value::Number(_)) | Some(Value::Null) => Value::from(value),
                Some(other) => bail!("parameter `{path}` is not numeric: {other}"),
                None => bail!("unknown parameter `{path}`"),
            };
            map.insert((*key).to_string(), v);
            return Ok(());
        }
        node = map
            .get_mut(*key)
            .with_context(|| format!("unknown parameter `{path}`"))?;
    }
    bail!("empty parameter path")
}

fn export_scene(cfg: &ScenarioConfig, cases: &[RelayCase], explicit_cases: bool) -> Result<()> {
    let seed = drop_seed(cfg.seed, 0);
    let scene = base_scene(cfg)?.with_ues(seed);
    fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join("scene.json");
    fs::write(&path, scene.to_json()?)?;
    log::info!("wrote {}", path.display());
    if explicit_cases {
        let links = LinkTable::build(&scene, &cfg.radio, seed)?;
        for case in cases {
            let assoc = associate(&scene, &links, &cfg.radio, &case.profile(&cfg.relay));
            let path = cfg.out_dir.join(format!("association_{case}.json"));
            fs::write(&path, assoc.to_json()?)?;
            log::info!(
                "wrote {} ({:.1}% indirect)",
                path.display(),
                100.0 * assoc.indirect_share()
            );
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    if let Err(e) = real_main(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn real_main(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate(common) => {
            let cfg = common.config()?;
            common.cases()?;
            println!("{}", cfg.to_json()?);
        }
        Command::Run(common) => {
            let cfg = common.config()?;
            run(&cfg, &common.cases()?, common.threads(), &cfg.out_dir)?;
        }
        Command::Sweep {
            common,
            param,
            values,
        } => {
            let base = common.config()?;
            let cases = common.cases()?;
            let base_json = serde_json::to_value(&base)?;
            for v in values {
                let mut json = base_json.clone();
                set_param(&mut json, &param, v)?;
                let cfg: ScenarioConfig = serde_json::from_value(json)
                    .with_context(|| format!("applying {param}={v}"))?;
                cfg.validate()
                    .with_context(|| format!("applying {param}={v}"))?;
                let out = base.out_dir.join(format!("{param}={v}"));
                log::info!("sweep {param}={v}");
                run(&cfg, &cases, common.threads(), &out)?;
            }
        }
        Command::ExportScene(common) => {
            let cfg = common.config()?;
            export_scene(&cfg, &common.cases()?, !common.cases.is_empty())?;
        }
    }
    Ok(())
}
