//! Seeded random search over the SVM grid, scored by validation AUC.

use ddd_core::dataset::{generate_dataset, DatasetProfile, SynthProfile};
use ddd_core::models::{default_space, tune, ModelKind};
use ddd_core::pipeline::{inner_split, prepare_examples, preset, Method, Protocol};

fn main() -> ddd_core::Result<()> {
    let data = generate_dataset(
        &DatasetProfile {
            profile: SynthProfile::noisy(600.0),
            subjects: 2,
            sessions_per_subject: 1,
        },
        6,
    )?;
    let examples = prepare_examples(&preset(Method::Svmw, Protocol::C2), &data)?.examples;
    let (train, validation) = inner_split(&examples, 0.25, 0);
    let space = default_space(ModelKind::Svm, examples.dim(), 0);
    let r = tune(&space, &train, &validation, 6, 42)?;
    for t in &r.trials {
        println!("candidate {:>2}: AUC {:.4}", t.config_index, t.auc);
    }
    println!("best {:?} with AUC {:.4}", r.best, r.score);
    Ok(())
}
