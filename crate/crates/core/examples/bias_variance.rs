//! Splits the expected squared generalization error of a kernel model over
//! several independent training sets into bias and variance.

use pfdist::dist::random::random_gmm;
use pfdist::gen_eval::{bias_variance, ModelBuilder};
use pfdist::{CoupledNoiseSet, Descriptor, DistributionSpec, EmpiricalSpec, SolverConfig, StreamKey};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pfdist::Result<()> {
    let data: DistributionSpec = random_gmm(3, 2, 1.5, &mut ChaCha8Rng::seed_from_u64(4))?.into();
    let noise = CoupledNoiseSet::new(0, 128, 80.0, 2)?;
    let solver = SolverConfig::heun_steps(48)?;

    for bandwidth in [0.05, 0.3, 1.0] {
        let builder = ModelBuilder::Kernel { bandwidth };
        for j in [2, 8] {
            let sets = (0..j)
                .map(|k| EmpiricalSpec::new(data.sample(32, &StreamKey::new(100 + k as u64))?))
                .collect::<pfdist::Result<Vec<_>>>()?;
            let r = bias_variance(&sets, |s| builder.build(s), &data, &noise, &solver, &Descriptor::Identity)?;
            println!(
                "h={bandwidth:<4} J={j}  E_gen^2={:.4}  bias^2={:.4}  var={:.4}  residual={:.1e}",
                r.e_gen_sq_mean, r.e_bias_sq, r.e_var, r.residual
            );
        }
    }
    Ok(())
}
