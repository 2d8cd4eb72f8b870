use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rare_mace::agents::{build_ring_kernel, kernel_psd, min_kernel_size};
use rare_mace::analysis::MetricsReport;
use rare_mace::io::{
    config_to_toml, image_from_csv, image_to_csv, image_to_pgm, load_config, matrix_to_csv, measurements_to_csv,
    read_measurements, to_pgm16, write_measurements, RunManifest, SolverSummary,
};
use rare_mace::pipeline::{reconstruct as run_method, simulate as run_simulation, Method};
use rare_mace::{characteristic_wavelength, Error, Result};

use crate::{EvaluateArgs, ReconstructArgs, RenderKernelArgs, SimulateArgs};

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write(dir: &Path, name: &str, bytes: impl AsRef<[u8]>, outputs: &mut Vec<String>) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, bytes)?;
    outputs.push(name.to_string());
    Ok(path)
}

fn display(p: &Path) -> String {
    p.display().to_string()
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    let start = Instant::now();
    let cfg = load_config(&args.config)?;
    let seed = args.seed.unwrap_or(cfg.simulation.seed);
    let refine = args.refine.unwrap_or(cfg.simulation.refine);
    prepare_out(&args.out)?;
    let (y, phantom) = run_simulation(&cfg, seed, refine)?;

    let mut manifest = RunManifest::new("simulate");
    let data_path = args.out.join("measurements.bin");
    write_measurements(&data_path, &y)?;
    manifest.outputs.push("measurements.bin".into());
    if args.csv {
        write(&args.out, "measurements.csv", measurements_to_csv(&y), &mut manifest.outputs)?;
    }
    write(&args.out, "truth.csv", image_to_csv(&phantom.x_true), &mut manifest.outputs)?;
    write(&args.out, "truth.pgm", image_to_pgm(&phantom.x_true), &mut manifest.outputs)?;

    manifest.inputs.push(display(&args.config));
    manifest.config = Some(cfg);
    manifest.seed = Some(seed);
    manifest.refine = Some(refine);
    manifest.duration_s = start.elapsed().as_secs_f64();
    manifest.save(&args.out.join("manifest.json"))?;
    println!("wrote {}", display(&data_path));
    Ok(())
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<()> {
    let start = Instant::now();
    let method: Method = args.method.parse()?;
    let cfg = load_config(&args.config)?;
    let y = read_measurements(&args.data)?;
    if y.m != cfg.scan.m || y.k != cfg.scan.k() {
        return Err(Error::Data(format!(
            "measurements are {}x{}, config expects {}x{}",
            y.m,
            y.k,
            cfg.scan.m,
            cfg.scan.k()
        )));
    }
    prepare_out(&args.out)?;
    let run = run_method(&cfg, &y, method)?;

    let mut manifest = RunManifest::new("reconstruct");
    let name = method.name();
    write(&args.out, &format!("{name}.pgm"), image_to_pgm(&run.image), &mut manifest.outputs)?;
    let csv = write(&args.out, &format!("{name}.csv"), image_to_csv(&run.image), &mut manifest.outputs)?;
    if let Some(report) = &run.report {
        write(&args.out, &format!("{name}_solve.csv"), report.to_csv(), &mut manifest.outputs)?;
        let n_agents = if method == Method::RareMace { 3 } else { 2 };
        manifest.solver = Some(SolverSummary::new(&cfg.mace, n_agents, report)?);
    }
    if let Some((_, report)) = &run.warm_start {
        write(&args.out, "umbir_warm_start_solve.csv", report.to_csv(), &mut manifest.outputs)?;
        manifest.warm_start = Some(SolverSummary::new(&cfg.mace, 2, report)?);
    }

    let phantom = cfg.phantom()?;
    let metrics = MetricsReport::evaluate(name, &run.image, &phantom, cfg.evaluation_columns(), cfg.gamma())?;
    manifest.metrics.insert("rmse".into(), metrics.rmse);
    manifest.metrics.insert("wall_depth_error_px".into(), metrics.wall_depth_error_px);
    manifest.metrics.insert("ringing_energy_ratio".into(), metrics.ringing_energy_ratio);
    manifest.metrics.insert("wall_peak".into(), metrics.wall_peak);

    manifest.inputs = vec![display(&args.config), display(&args.data)];
    manifest.config = Some(cfg);
    manifest.method = Some(name.to_string());
    manifest.duration_s = start.elapsed().as_secs_f64();
    manifest.save(&args.out.join("manifest.json"))?;
    println!("wrote {}", display(&csv));
    Ok(())
}

pub fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = load_config(&args.config)?;
    let grid = cfg.scan.grid;
    let gamma = characteristic_wavelength(
        args.cm.unwrap_or(cfg.scan.imaging_speed()),
        args.fc.unwrap_or(cfg.scan.pulse.center_freq()),
        grid.pitch(),
    )?;
    let mut phantom = cfg.phantom()?;
    phantom.x_true = image_from_csv(&fs::read_to_string(&args.truth)?, grid)?;
    let mut reports = Vec::with_capacity(args.images.len());
    for path in &args.images {
        let img = image_from_csv(&fs::read_to_string(path)?, grid)?;
        let label = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| display(path));
        reports.push(MetricsReport::evaluate(&label, &img, &phantom, cfg.evaluation_columns(), gamma)?);
    }
    if let Some(csv) = &args.csv {
        fs::write(csv, MetricsReport::to_csv(&reports))?;
    }
    print!("{}", MetricsReport::to_table(&reports));
    Ok(())
}

pub fn render_kernel(args: &RenderKernelArgs) -> Result<()> {
    let gamma = characteristic_wavelength(args.cm, args.fc, args.pitch)?;
    let size = args.size.unwrap_or_else(|| min_kernel_size(gamma));
    let kernel = build_ring_kernel(gamma, args.eta, size)?;
    prepare_out(&args.out)?;
    let mut outputs = Vec::new();
    write(&args.out, "kernel.pgm", to_pgm16(kernel.values(), size, size)?, &mut outputs)?;
    write(&args.out, "kernel.csv", matrix_to_csv(kernel.values(), size), &mut outputs)?;
    let psd = kernel_psd(&kernel, 8, 1.0)?;
    write(&args.out, "psd.csv", matrix_to_csv(psd.values(), psd.size()), &mut outputs)?;
    println!("gamma {gamma:.4} px, ring spacing {:.4} px, kernel {size}x{size}", kernel.ring_period());
    Ok(())
}

pub fn default_config() -> Result<()> {
    print!("{}", config_to_toml(&rare_mace::pipeline::ExperimentConfig::desk())?);
    Ok(())
}
