//! ANOVA F top-k, Welch t-test filtering and wrapper search (forward
//! selection and binary particle swarm) on the same examples.

use ddd_core::dataset::{generate_dataset, DatasetProfile, SynthProfile};
use ddd_core::models::{ModelConfig, SvmConfig};
use ddd_core::pipeline::{inner_split, prepare_examples, preset, Method, Protocol};
use ddd_core::selection::{anova_f_topk, t_test_filter, wrapper_select, WrapperConfig, WrapperStrategy};

fn main() -> ddd_core::Result<()> {
    let data = generate_dataset(
        &DatasetProfile {
            profile: SynthProfile::noisy(600.0),
            subjects: 2,
            sessions_per_subject: 1,
        },
        4,
    )?;
    let examples = prepare_examples(&preset(Method::Svma, Protocol::C2), &data)?.examples;
    println!("{} examples, {} features", examples.len(), examples.dim());

    let anova = anova_f_topk(&examples, 5)?;
    println!("ANOVA top 5: {:?}", anova.selected);
    let t = t_test_filter(&examples, 0.01)?;
    println!("t-test at 0.01 keeps {} features", t.selected.len());

    let (train, validation) = inner_split(&examples, 0.3, 0);
    let svm = ModelConfig::Svm(SvmConfig::default());
    for strategy in [WrapperStrategy::Sfs, WrapperStrategy::Pso] {
        let config = WrapperConfig {
            strategy,
            budget: 120,
            ..WrapperConfig::default()
        };
        let r = wrapper_select(&train, &validation, &svm, &config)?;
        println!(
            "{strategy:?}: {} evaluations -> {:?}",
            r.evaluations.unwrap_or(0),
            r.selected
        );
    }
    Ok(())
}
