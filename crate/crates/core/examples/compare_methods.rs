//! All four methods under the clean holdout protocol on one dataset: the
//! comparison table, per-method ROC CSV files and an SVG plot.

use ddd_core::dataset::{generate_dataset, DatasetProfile, SynthProfile};
use ddd_core::pipeline::{compare, preset, roc_svg, write_roc_csv, Method, Protocol};

fn main() -> ddd_core::Result<()> {
    let data = generate_dataset(
        &DatasetProfile {
            profile: SynthProfile::noisy(900.0),
            subjects: 2,
            sessions_per_subject: 1,
        },
        1,
    )?;
    let configs: Vec<_> = Method::ALL.iter().map(|&m| preset(m, Protocol::C2)).collect();
    let report = compare(&configs, &data)?;
    print!("{}", report.table());

    let dir = std::env::temp_dir().join("ddd_compare");
    std::fs::create_dir_all(&dir).map_err(|e| ddd_core::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    let mut series = Vec::new();
    for r in &report.reports {
        let file = std::fs::File::create(dir.join(format!("{}.csv", r.name))).map_err(|e| ddd_core::Error::Io {
            path: dir.clone(),
            source: e,
        })?;
        write_roc_csv(file, &r.metrics.roc)?;
        series.push((r.name.clone(), r.metrics.roc.clone()));
    }
    std::fs::write(dir.join("roc.svg"), roc_svg(&series)).map_err(|e| ddd_core::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    println!("ROC curves written to {}", dir.display());
    Ok(())
}
