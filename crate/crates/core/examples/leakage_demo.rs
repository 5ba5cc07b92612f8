//! Reported accuracy of the wrapper-selected SVM when it is scored on its own
//! training data (C1) versus a held-out test fold (C2), on a noisy dataset.

use std::time::Instant;

use ddd_core::dataset::{generate_dataset, DatasetProfile, SynthProfile};
use ddd_core::pipeline::{preset, run_experiment, Method, Protocol};

fn main() -> ddd_core::Result<()> {
    for seed in 0..3 {
        let data = generate_dataset(
            &DatasetProfile {
                profile: SynthProfile::noisy(600.0),
                subjects: 2,
                sessions_per_subject: 1,
            },
            seed,
        )?;
        let mut c1 = preset(Method::Svma, Protocol::C1);
        c1.leakage_ack = true;
        c1.seed = seed;
        let mut c2 = preset(Method::Svma, Protocol::C2);
        c2.seed = seed;
        let t = Instant::now();
        let r1 = run_experiment(&c1, &data)?;
        let r2 = run_experiment(&c2, &data)?;
        println!(
            "seed {seed}: C1 (train) {:.2}%  C2 (test) {:.2}%  gap {:+.2}  test reads before evaluation {}  [{:.1?}]",
            r1.metrics.accuracy,
            r2.metrics.accuracy,
            r1.metrics.accuracy - r2.metrics.accuracy,
            r2.test_reads_before_evaluation,
            t.elapsed()
        );
    }
    Ok(())
}
