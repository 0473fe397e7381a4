//! Gaussian W2 and KL in closed form next to their sample-based estimates.

use pfdist::baselines::{fit_gaussian, gaussian_kl, gaussian_w2, sample_w2, W2SampleConfig};
use pfdist::dist::random::random_gaussian;
use pfdist::{closed_form_gaussian_pfd, DistributionSpec, StreamKey};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> pfdist::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p = random_gaussian(4, 1.0, &mut rng)?;
    let q = random_gaussian(4, 1.0, &mut rng)?;
    println!("closed form  W2 {:.4}  KL {:.4}  PFD {:.4}", gaussian_w2(&p, &q)?, gaussian_kl(&p, &q)?, closed_form_gaussian_pfd(&p, &q)?);

    let (sp, sq): (DistributionSpec, DistributionSpec) = (p.into(), q.into());
    let root = StreamKey::new(1);
    for m in [64, 256, 1024] {
        let xs = sp.sample(m, &root.with_sub(0))?;
        let ys = sq.sample(m, &root.with_sub(1))?;
        let exact = sample_w2(&xs, &ys, &W2SampleConfig::exact())?;
        let entropic = sample_w2(&xs, &ys, &W2SampleConfig::entropic(0.5, 5000)?)?;
        let kl = gaussian_kl(&fit_gaussian(&xs)?, &fit_gaussian(&ys)?)?;
        println!(
            "M={m:<5} W2 exact {:.4}  entropic {:.4}{}  plug-in KL {kl:.4}",
            exact.value,
            entropic.value,
            if entropic.converged { "" } else { " (not converged)" }
        );
    }
    Ok(())
}
