//! Run the three methods on both desk-scale phantoms and print the metrics.

use std::time::Instant;

use rare_mace::analysis::MetricsReport;
use rare_mace::pipeline::{reconstruct, simulate, ExperimentConfig, Method};

fn main() -> rare_mace::Result<()> {
    let mut cfg = ExperimentConfig::desk();
    let cols = cfg.evaluation_columns();
    println!("gamma {:.3} px, scored columns {cols:?}", cfg.gamma());
    for notch in [false, true] {
        cfg.phantom.notch = notch;
        let (y, phantom) = simulate(&cfg, cfg.simulation.seed, cfg.simulation.refine)?;
        let mut reports = Vec::new();
        for method in Method::ALL {
            let t = Instant::now();
            let r = reconstruct(&cfg, &y, method)?;
            println!("notch {notch}: {method} in {:.1} s", t.elapsed().as_secs_f64());
            reports.push(MetricsReport::evaluate(method.name(), &r.image, &phantom, cols.clone(), cfg.gamma())?);
        }
        print!("{}", MetricsReport::to_table(&reports));
    }
    Ok(())
}
