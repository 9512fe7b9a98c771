//! `fehc`: run the guaranteed local error-bound experiments from a JSON
//! configuration or a named preset.

mod plot;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fehc_core::constants::compute_constants;
use fehc_core::estimator::EstimatorReport;
use fehc_core::experiment::{self, parallel_map, ExperimentConfig, Sweep};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] fehc_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "fehc", version, about = "Guaranteed local error bounds for P1 finite element solutions")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment configuration; keys override the preset when both are given
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named configuration: table1, table2, table3, table4, table5, table7
    #[arg(long)]
    preset: Option<String>,
    /// Output directory (default: the config's `output`, else the current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run a single base resolution instead of `n_list`
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Write the mesh of every row in the text mesh format
    Mesh(Common),
    /// Compute C0, kappa_h and C(h) for every row
    Kappa(Common),
    /// Run the estimators and write the CSV report and plots
    Estimate(Common),
    /// Local estimate as a function of the band width
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Row index (default: the row with n = 64, else the first)
        #[arg(long)]
        row: Option<usize>,
    },
    /// Run the estimators and print fitted convergence orders
    Converge(Common),
}

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match (&c.preset, &c.config) {
        (None, None) => return Err(CliError::Config("give --config <path> or --preset <name>".into())),
        (Some(p), None) => ExperimentConfig::preset(p)?,
        (preset, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            let file: serde_json::Value = serde_json::from_str(&text)?;
            let value = match preset {
                None => file,
                Some(p) => {
                    let mut base = serde_json::to_value(ExperimentConfig::preset(p)?)?;
                    let (Some(b), Some(f)) = (base.as_object_mut(), file.as_object()) else {
                        return Err(CliError::Config("configuration must be a JSON object".into()));
                    };
                    for (k, v) in f {
                        b.insert(k.clone(), v.clone());
                    }
                    base
                }
            };
            serde_json::from_value(value)?
        }
    };
    if let Some(n) = c.n {
        let i = cfg.n_list.iter().position(|&m| m == n).unwrap_or(0);
        cfg.refine_levels = cfg.refine_levels.map(|l| vec![l.get(i).copied().unwrap_or(0)]);
        cfg.n_list = vec![n];
        cfg.mesh_files = None;
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

fn threads() -> Result<usize> {
    match std::env::var("FEHC_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("FEHC_THREADS must be a positive integer, got '{v}'"))),
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn out_dir(c: &Common, cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = c.out.clone().or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    Ok(dir)
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub const CSV_HEADER: [&str; 10] = ["h", "kappa_h", "C_h", "E_L", "E1", "E2", "EhatL", "EhatG", "beta", "beta_hat"];

fn csv_row(r: &EstimatorReport) -> [String; 10] {
    [
        num(r.h),
        num(r.kappa_h),
        num(r.c_h),
        opt(r.e_l),
        num(r.e1),
        num(r.e2),
        num(r.e_hat_l),
        num(r.e_hat_g),
        opt(r.beta),
        num(r.beta_hat),
    ]
}

fn report_csv(reports: &[&EstimatorReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(csv_row(r))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run_mesh(c: &Common) -> Result<bool> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg)?;
    for i in 0..cfg.rows() {
        let (mesh, h) = cfg.build_mesh(i)?;
        let path = dir.join(format!("{}_n{}.mesh", cfg.name, cfg.n_list.get(i).copied().unwrap_or(i)));
        mesh.write_text(&path)?;
        println!(
            "{}  vertices={} triangles={} edges={} h={h}",
            path.display(),
            mesh.num_vertices(),
            mesh.num_triangles(),
            mesh.num_edges()
        );
    }
    Ok(true)
}

fn run_kappa(c: &Common) -> Result<bool> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg)?;
    let rows = parallel_map(cfg.rows(), threads()?, |i| -> fehc_core::Result<_> {
        let (mesh, h) = cfg.build_mesh(i)?;
        compute_constants(&mesh, h, cfg.ch_mode, cfg.kappa_method)
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["h", "kappa_h", "C0", "C_h", "method"])?;
    let mut ok = true;
    println!("{:>10} {:>12} {:>10} {:>12}  method", "h", "kappa_h", "C0", "C_h");
    for r in rows {
        match r {
            Ok(k) => {
                println!("{:>10.6} {:>12.6} {:>10.6} {:>12.6}  {:?}", k.h_used, k.kappa_h, k.c0, k.c_h, k.method);
                let method = serde_json::to_value(k.method)?.as_str().unwrap_or_default().to_string();
                w.write_record([num(k.h_used), num(k.kappa_h), num(k.c0), num(k.c_h), method])?;
            }
            Err(e) => {
                eprintln!("row failed: {e}");
                ok = false;
            }
        }
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(&dir.join(format!("{}_constants.csv", cfg.name)), &text)?;
    Ok(ok)
}

fn print_rows(result: &experiment::ExperimentResult) {
    println!(
        "{:>9} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>8} {:>6} {:>6}  bounds",
        "h", "kappa_h", "C_h", "E_L", "E1", "E2", "EhatL", "EhatG", "beta", "b_hat"
    );
    for (i, r) in result.rows.iter().enumerate() {
        match r {
            Ok(r) => {
                let p = &r.report;
                let f = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
                println!(
                    "{:>9.5} {:>8.4} {:>8.4} {:>8} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>6.0}  {}",
                    p.h,
                    p.kappa_h,
                    p.c_h,
                    f(p.e_l),
                    p.e1,
                    p.e2,
                    p.e_hat_l,
                    p.e_hat_g,
                    p.beta.map_or("-".to_string(), |b| format!("{b:.0}")),
                    p.beta_hat,
                    if r.bounds_hold { "ok" } else { "VIOLATED" }
                );
            }
            Err(e) => eprintln!("row {i} failed: {e}"),
        }
    }
}

fn write_report(dir: &Path, cfg: &ExperimentConfig, result: &experiment::ExperimentResult) -> Result<()> {
    let rows = result.ok_rows();
    let reports: Vec<&EstimatorReport> = rows.iter().map(|r| &r.report).collect();
    write(&dir.join(format!("{}.csv", cfg.name)), &report_csv(&reports)?)?;
    write(
        &dir.join(format!("{}_rows.json", cfg.name)),
        &serde_json::to_string_pretty(&rows)?,
    )?;
    let h: Vec<f64> = reports.iter().map(|r| r.h).collect();
    for (k, col) in CSV_HEADER.iter().enumerate().skip(1) {
        let ys: Vec<f64> = reports
            .iter()
            .map(|r| csv_row(r)[k].parse().unwrap_or(f64::NAN))
            .collect();
        let svg = plot::loglog_svg(&format!("{} {col}", cfg.name), "h", &h, &ys);
        write(&dir.join(format!("{}_{col}.svg", cfg.name)), &svg)?;
    }
    Ok(())
}

fn run_estimate(c: &Common) -> Result<bool> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg)?;
    let result = experiment::run(&cfg, threads()?)?;
    print_rows(&result);
    write_report(&dir, &cfg, &result)?;
    Ok(result.certified())
}

fn run_converge(c: &Common) -> Result<bool> {
    let cfg = load_config(c)?;
    let dir = out_dir(c, &cfg)?;
    let result = experiment::run(&cfg, threads()?)?;
    print_rows(&result);
    write_report(&dir, &cfg, &result)?;
    let orders = result.orders()?;
    let n = result.ok_rows().len();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut head = vec!["column".to_string(), "slope".to_string()];
    head.extend((1..n).map(|i| format!("order_{}", i + 1)));
    w.write_record(&head)?;
    println!("\n{:>15} {:>8}  consecutive", "column", "slope");
    for o in &orders {
        let cons: Vec<String> = o.consecutive.iter().map(|v| opt(*v)).collect();
        let mut rec = vec![o.column.clone(), opt(o.slope)];
        rec.extend(cons.iter().cloned());
        rec.resize(head.len(), String::new());
        w.write_record(&rec)?;
        match (o.slope, &o.note) {
            (Some(s), _) => println!(
                "{:>15} {:>8.3}  {}",
                o.column,
                s,
                o.consecutive
                    .iter()
                    .map(|v| v.map_or("-".into(), |v| format!("{v:.3}")))
                    .collect::<Vec<_>>()
                    .join(" ")
            ),
            (None, note) => println!("{:>15} {:>8}  {}", o.column, "-", note.as_deref().unwrap_or("")),
        }
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(&dir.join(format!("{}_orders.csv", cfg.name)), &text)?;
    Ok(result.certified())
}

fn run_sweep(c: &Common, row: Option<usize>) -> Result<bool> {
    let mut cfg = load_config(c)?;
    let dir = out_dir(c, &cfg)?;
    cfg.epsilon_sweep.get_or_insert(Sweep {
        start: 0.05,
        stop: 0.30,
        step: 0.025,
    });
    let row = row.unwrap_or_else(|| cfg.n_list.iter().position(|&n| n == 64).unwrap_or(0));
    let pts = experiment::run_sweep(&cfg, row)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epsilon", "E_hat_L"])?;
    println!("{:>8} {:>12}", "epsilon", "E_hat_L");
    for (e, v) in &pts {
        println!("{e:>8.4} {v:>12.6}");
        w.write_record([num(*e), num(*v)])?;
    }
    let inner: Vec<f64> = pts
        .iter()
        .filter(|(e, _)| (0.125 - 1e-9..=0.275 + 1e-9).contains(e))
        .map(|p| p.1)
        .collect();
    if !inner.is_empty() {
        let lo = inner.iter().cloned().fold(f64::MAX, f64::min);
        let hi = inner.iter().cloned().fold(f64::MIN, f64::max);
        println!("relative variation on [0.125, 0.275]: {:.2}%", 100.0 * (hi - lo) / lo);
    }
    let text = String::from_utf8(w.into_inner().map_err(|e| CliError::Config(e.to_string()))?)
        .map_err(|e| CliError::Config(e.to_string()))?;
    write(&dir.join(format!("{}_sweep.csv", cfg.name)), &text)?;
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    write(
        &dir.join(format!("{}_sweep.svg", cfg.name)),
        &plot::loglog_svg(&format!("{} E_hat_L vs band width", cfg.name), "epsilon", &xs, &ys),
    )?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Command::Mesh(c) => run_mesh(c),
        Command::Kappa(c) => run_kappa(c),
        Command::Estimate(c) => run_estimate(c),
        Command::Sweep { common, row } => run_sweep(common, *row),
        Command::Converge(c) => run_converge(c),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: some rows failed or a guaranteed bound was violated");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
