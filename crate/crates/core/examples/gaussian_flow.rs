//! Integrates the probability-flow ODE of a Gaussian and compares the
//! endpoint with the closed-form flow map.

use nalgebra::DMatrix;
use pfdist::{analytic_gaussian_flow, integrate_flow, GaussianSpec, SolverConfig, SolverMethod, TimeGrid};

fn main() -> pfdist::Result<()> {
    let cov = DMatrix::from_row_slice(2, 2, &[2.0, 0.6, 0.6, 0.5]);
    let p = GaussianSpec::new(vec![1.0, -1.0], cov)?;
    let x_t = vec![60.0, -25.0];
    let exact = analytic_gaussian_flow(&p, &x_t, 80.0, 0.002)?;
    println!("analytic endpoint  {exact:?}");

    for steps in [18, 64, 256] {
        for method in [SolverMethod::Euler, SolverMethod::Heun] {
            let cfg = SolverConfig::new(method, TimeGrid::edm(80.0, 0.002, steps, 7.0)?);
            let out = integrate_flow(&p, &x_t, &cfg)?;
            let err: f64 = out.x0.iter().zip(&exact).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            println!(
                "{method:<5} n={steps:<4} evals={:<4} error={err:.3e}",
                out.score_evaluations
            );
        }
    }
    Ok(())
}
