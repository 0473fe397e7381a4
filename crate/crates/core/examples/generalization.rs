//! Generalization and memorization errors of an empirical model and a kernel
//! model trained on draws from a teacher mixture, for growing training sets.

use pfdist::dist::random::random_gmm;
use pfdist::gen_eval::{generalization_error, m_distance, memorization_error, EvaluationScenario, ModelBuilder};
use pfdist::{CoupledNoiseSet, Descriptor, DistributionSpec, EmpiricalSpec, SolverConfig, StreamKey};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pfdist::Result<()> {
    let teacher: DistributionSpec = random_gmm(5, 3, 1.5, &mut ChaCha8Rng::seed_from_u64(2))?.into();
    let pool = teacher.sample(512, &StreamKey::new(8))?;
    let noise = CoupledNoiseSet::new(1, 128, 80.0, 3)?;
    let solver = SolverConfig::heun_steps(64)?;

    println!("{:>5} {:>10} {:>8} {:>8} {:>8}", "N", "model", "E_gen", "E_mem", "M-dist");
    for n in [8, 32, 128, 512] {
        let train = EmpiricalSpec::new(pool[..n].to_vec())?;
        for builder in [ModelBuilder::Empirical, ModelBuilder::Kernel { bandwidth: 0.3 }] {
            let s = EvaluationScenario::new(
                teacher.clone(),
                builder.build(&train)?,
                train.clone(),
                noise.clone(),
                solver.clone(),
                Descriptor::Identity,
            )?;
            let name = match builder {
                ModelBuilder::Empirical => "empirical",
                ModelBuilder::Kernel { .. } => "kernel",
            };
            println!(
                "{n:>5} {name:>10} {:>8.4} {:>8.4} {:>8.4}",
                generalization_error(&s)?.value,
                memorization_error(&s)?.value,
                m_distance(&s)?
            );
        }
    }
    Ok(())
}
