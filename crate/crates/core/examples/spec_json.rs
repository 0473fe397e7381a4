//! Distribution specs round-trip through JSON, the format the CLI reads.

use nalgebra::DMatrix;
use pfdist::{DistributionSpec, EmpiricalSpec, GaussianMixtureSpec, GaussianSpec};

fn main() -> pfdist::Result<()> {
    let g = GaussianSpec::new(vec![0.0, 1.0], DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 2.0]))?;
    let mix = GaussianMixtureSpec::new(vec![
        (0.25, GaussianSpec::isotropic(vec![-2.0, 0.0], 0.5)?),
        (0.75, g.clone()),
    ])?;
    let emp = EmpiricalSpec::new(vec![vec![0.0, 0.0], vec![1.0, 2.0]])?;

    for spec in [DistributionSpec::from(g), mix.into(), emp.into()] {
        let text = spec.to_json()?;
        let back = DistributionSpec::from_json(&text)?;
        assert_eq!(back, spec);
        println!("{text}\n");
    }
    Ok(())
}
