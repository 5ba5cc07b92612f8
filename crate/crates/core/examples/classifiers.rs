//! Random forest, RBF SVM and logistic regression on the same split, with
//! ROC AUC and a saved model round trip.

use ddd_core::dataset::{generate_dataset, DatasetProfile, SynthProfile};
use ddd_core::models::{evaluate, fit, Classifier, LogitConfig, ModelConfig, RfConfig, SvmConfig};
use ddd_core::pipeline::{inner_split, prepare_examples, preset, Method, Protocol};

fn main() -> ddd_core::Result<()> {
    let data = generate_dataset(
        &DatasetProfile {
            profile: SynthProfile::noisy(600.0),
            subjects: 2,
            sessions_per_subject: 1,
        },
        8,
    )?;
    let examples = prepare_examples(&preset(Method::LstmLite, Protocol::C2), &data)?.examples;
    let (train, test) = inner_split(&examples, 0.25, 1);
    let configs = [
        ModelConfig::Rf(RfConfig {
            n_trees: 100,
            ..RfConfig::default()
        }),
        ModelConfig::Svm(SvmConfig::default()),
        ModelConfig::Logit(LogitConfig::default()),
    ];
    for config in &configs {
        let model = fit(config, &train)?;
        let m = evaluate(&model, &test, None)?;
        println!(
            "{:<6} AUC {:.3}  accuracy {:.1}%  precision {:.1}%  recall {:.1}%",
            format!("{:?}", config.kind()),
            m.auc,
            m.accuracy,
            m.precision,
            m.recall
        );
    }
    let model = fit(&configs[2], &train)?;
    let path = std::env::temp_dir().join("ddd_logit.json");
    model.save(&path)?;
    let back = Classifier::load(&path)?;
    assert_eq!(back.score_set(&test)?, model.score_set(&test)?);
    println!("model saved to {} and reloaded", path.display());
    Ok(())
}
