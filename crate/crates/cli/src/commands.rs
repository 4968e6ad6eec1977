use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use ankle_wfm::gait_data::{load_trial, write_trial};
use ankle_wfm::pipeline::{evaluate_split, reference_on_grid, simulate_trials, trace_csv, SearchMode};
use ankle_wfm::synthetic::generate_split;
use ankle_wfm::{Execution, FitProblem, GaitTrial, SubjectSplit};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

pub const FAILURE_MARKER: &str = "FAILED";
pub const MANIFEST: &str = "manifest.toml";

/// Everything needed to reproduce a run.
#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a RunConfig,
}

pub struct Run<'a> {
    pub command: &'a str,
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Run<'_> {
    /// Execute with failure marking: the marker exists for the whole run and
    /// is removed only once every output is written.
    pub fn execute(&self, body: impl FnOnce(&Self) -> Result<(), CliError>) -> Result<(), CliError> {
        fs::create_dir_all(&self.out).map_err(|e| CliError::io(&self.out, e))?;
        self.write(FAILURE_MARKER, "run did not complete\n")?;
        let result = self.write_manifest().and_then(|()| body(self));
        match &result {
            Ok(()) => {
                let marker = self.out.join(FAILURE_MARKER);
                fs::remove_file(&marker).map_err(|e| CliError::io(marker, e))?;
            }
            Err(e) => {
                let _ = self.write(FAILURE_MARKER, &format!("{e}\n"));
            }
        }
        result
    }

    fn seed(&self) -> u64 {
        match self.command {
            "gen-synthetic" => self.config.synthetic.seed,
            _ => self.config.pso.seed,
        }
    }

    fn write_manifest(&self) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "ankle-wfm",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.seed(),
            config: &self.config,
        };
        let text = toml::to_string(&manifest).map_err(|e| CliError::config(format!("cannot write manifest: {e}")))?;
        self.write(MANIFEST, &text)
    }

    fn write(&self, name: impl AsRef<Path>, contents: &str) -> Result<(), CliError> {
        let path = self.out.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(path, e))
    }

    fn write_traces(&self, trials: &[GaitTrial], traces: &[Vec<f64>]) -> Result<(), CliError> {
        let grid = self.config.simulation.output_grid;
        let phases = ankle_wfm::gait_data::uniform_phases(grid);
        for (t, tau) in trials.iter().zip(traces) {
            let reference = reference_on_grid(t, grid)?;
            let name = Path::new("traces").join(format!("{}.csv", file_stem(&t.subject_id)));
            self.write(name, &trace_csv(&phases, tau, &reference))?;
        }
        Ok(())
    }
}

/// Subject id made safe for use as a file name.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

fn load_trials(paths: &[PathBuf]) -> Result<Vec<GaitTrial>, CliError> {
    paths
        .iter()
        .map(|p| {
            let file = File::open(p).map_err(|e| CliError::io(p, e))?;
            load_trial(file, &BTreeMap::new()).map_err(|e| CliError::Model(e.in_trial(&p.display().to_string())))
        })
        .collect()
}

fn require(paths: &[PathBuf], what: &str) -> Result<(), CliError> {
    if paths.is_empty() {
        Err(CliError::config(format!("data.{what} lists no trial files")))
    } else {
        Ok(())
    }
}

pub fn simulate(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    let mut paths = cfg.data.train.clone();
    paths.extend(cfg.data.test.iter().cloned());
    if paths.is_empty() {
        return Err(CliError::config("data lists no trial files"));
    }
    let trials = load_trials(&paths)?;
    let traces = simulate_trials(
        &trials,
        &cfg.activation.curves()?,
        &cfg.setup(),
        &cfg.simulation,
        Execution::default(),
    )?;
    run.write_traces(&trials, &traces)?;
    println!("wrote {} traces to {}", trials.len(), run.out.join("traces").display());
    Ok(())
}

pub fn optimize(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    require(&cfg.data.train, "train")?;
    let trials = load_trials(&cfg.data.train)?;
    let templates = cfg.activation.templates()?;
    let mode = cfg.search.mode;
    let problem = FitProblem::new(&trials, &templates, &cfg.setup(), &cfg.simulation, mode)?;
    let result = problem.fit(&cfg.pso_config(), Execution::default())?;
    let x = &result.best_position;

    let mut names = vec!["anterior_amplitude", "posterior_amplitude"];
    if mode == SearchMode::Extended {
        names.extend(["force_scale", "stiffness_scale"]);
    }
    let mut best = String::from("parameter,value\n");
    for (name, v) in names.iter().zip(x) {
        let _ = writeln!(best, "{name},{v}");
    }
    let _ = writeln!(best, "objective,{}", result.best_value);
    let _ = writeln!(best, "iterations,{}", result.iterations_run);
    run.write("best.csv", &best)?;
    run.write("history.csv", &result.history_csv())?;

    // config that reproduces the fitted model, ready for `evaluate`
    let (curves, setup) = mode.realize(x, &templates, &cfg.setup())?;
    let mut fitted = cfg.clone();
    fitted.activation.anterior = x[0];
    fitted.activation.posterior = x[1];
    fitted.muscles = setup.muscles;
    fitted.search.mode = SearchMode::Activation;
    fitted.pso.bounds.clear();
    fitted.output_dir = Some(run.out.join("evaluate"));
    run.write("fitted_config.toml", &fitted.to_toml()?)?;

    let traces = simulate_trials(&trials, &curves, &setup, &cfg.simulation, Execution::default())?;
    run.write_traces(&trials, &traces)?;

    print!("{best}");
    Ok(())
}

pub fn evaluate(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    require(&cfg.data.train, "train")?;
    require(&cfg.data.test, "test")?;
    let split = SubjectSplit::new(load_trials(&cfg.data.train)?, load_trials(&cfg.data.test)?)?;
    let curves = cfg.activation.curves()?;
    let setup = cfg.setup();
    let report = evaluate_split(&split, &curves, &setup, &cfg.simulation, Execution::default())?;
    let text = report.render_text();
    run.write("report.txt", &text)?;
    run.write("report.csv", &report.to_csv())?;

    let trials: Vec<GaitTrial> = split.train.iter().chain(&split.test).cloned().collect();
    let traces = simulate_trials(&trials, &curves, &setup, &cfg.simulation, Execution::default())?;
    run.write_traces(&trials, &traces)?;
    print!("{text}");
    Ok(())
}

pub fn gen_synthetic(run: &Run) -> Result<(), CliError> {
    let cfg = &run.config;
    let s = &cfg.synthetic;
    let cohort = s.cohort.clone().unwrap_or_default();
    let curves = cfg.activation.templates()?.with_amplitudes(s.anterior, s.posterior)?;
    let split = generate_split(&cohort, &curves, &cfg.setup(), &cfg.simulation, s.noise_sd, s.seed)?;

    let mut generated = cfg.clone();
    generated.data.train.clear();
    generated.data.test.clear();
    for (trials, list) in [
        (&split.train, &mut generated.data.train),
        (&split.test, &mut generated.data.test),
    ] {
        for t in trials {
            let path = run.out.join("data").join(format!("{}.csv", file_stem(&t.subject_id)));
            let mut buf = Vec::new();
            write_trial(t, &mut buf).map_err(|e| CliError::io(&path, e))?;
            run.write(
                path.strip_prefix(&run.out).unwrap_or(&path),
                &String::from_utf8_lossy(&buf),
            )?;
            list.push(path);
        }
    }
    generated.output_dir = Some(run.out.join("fit"));
    run.write("synthetic_config.toml", &generated.to_toml()?)?;
    println!(
        "wrote {} train and {} test trials; fit them with: ankle-wfm optimize --config {}",
        split.train.len(),
        split.test.len(),
        run.out.join("synthetic_config.toml").display()
    );
    Ok(())
}
