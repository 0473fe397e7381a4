//! Estimates the PFD between two Gaussian mixtures and between two Gaussians,
//! where the latter is checked against the closed forms.

use nalgebra::DMatrix;
use pfdist::dist::random::random_gmm;
use pfdist::pfd::{finite_horizon_gaussian_pfd, EstimateOptions};
use pfdist::{
    closed_form_gaussian_pfd, estimate_pfd, CoupledNoiseSet, Descriptor, DistributionSpec,
    GaussianSpec, LipschitzProfile, SolverConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pfdist::Result<()> {
    let p = GaussianSpec::new(vec![3.0, 4.0], DMatrix::identity(2, 2))?;
    let q = GaussianSpec::new(vec![0.0, 0.0], DMatrix::from_diagonal_element(2, 2, 2.0))?;
    let cfg = SolverConfig::heun_steps(64)?;
    let noise = CoupledNoiseSet::new(7, 1024, 80.0, 2)?;
    let est = estimate_pfd(&p.clone().into(), &q.clone().into(), &noise, &cfg, &Descriptor::Identity)?;
    println!("gaussians: estimate {:.4}", est.value);
    println!("           closed form (T -> inf) {:.4}", closed_form_gaussian_pfd(&p, &q)?);
    println!("           closed form (T = 80)   {:.4}", finite_horizon_gaussian_pfd(&p, &q, 80.0)?);

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a: DistributionSpec = random_gmm(4, 3, 1.5, &mut rng)?.into();
    let b: DistributionSpec = random_gmm(4, 3, 1.5, &mut rng)?.into();
    let noise = CoupledNoiseSet::new(11, 512, 80.0, 3)?;
    let opts = EstimateOptions {
        profile: Some(LipschitzProfile::new(1.0, 0.5, 0.05, 2.0)?),
        eta: 0.05,
    };
    let est = pfdist::pfd::estimate_pfd_with(&a, &b, &noise, &cfg, &Descriptor::Identity, &opts)?;
    println!(
        "mixtures:  estimate {:.4} from M={} (solver {}), Hoeffding halfwidth {:.3}",
        est.value,
        est.samples,
        est.solver,
        est.concentration_halfwidth.unwrap_or(f64::NAN)
    );

    // the image of a projection never moves further apart than the flows themselves
    let proj = Descriptor::linear(DMatrix::from_row_slice(1, 3, &[1.0, 0.0, 0.0]))?;
    let sub = estimate_pfd(&a, &b, &noise, &cfg, &proj)?;
    println!("           first coordinate only {:.4}", sub.value);
    Ok(())
}
