//! Seeded randomized consistency checks over the core pipeline.

use povm_core::aspect::{bivariate_marginals, joint_probabilities};
use povm_core::fine::{joint_exists_with_tol, marginal_residual};
use povm_core::measure::{povm_from_instrument, InstrumentModel};
use povm_core::{random, Execution, PvmMeasure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{json, CliError, CliResult, Output, SelfcheckArgs, EXIT_OK, EXIT_SOFTWARE};

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    samples: usize,
    failures: usize,
    worst: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    seed: u64,
    pass: bool,
    checks: Vec<Check>,
}

/// One independent stream per sample so results do not depend on scheduling.
fn sample_rng(seed: u64, check: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ check.rotate_left(32));
    rng.set_stream(sample as u64);
    rng
}

fn tally(name: &'static str, results: Vec<CliResult<(bool, f64)>>) -> CliResult<Check> {
    let mut check = Check {
        name,
        samples: results.len(),
        failures: 0,
        worst: 0.0,
    };
    for r in results {
        let (ok, measure) = r?;
        check.failures += usize::from(!ok);
        check.worst = check.worst.max(measure);
    }
    Ok(check)
}

pub(crate) fn run(args: &SelfcheckArgs, seed: u64, tol: f64) -> CliResult<Output> {
    if args.samples == 0 {
        return Err(CliError::Invalid("--samples must be at least 1".into()));
    }
    let exec = Execution::default();
    let indices: Vec<usize> = (0..args.samples).collect();

    let instrument = exec.map(&indices, |&i| -> CliResult<(bool, f64)> {
        let mut rng = sample_rng(seed, 1, i);
        let pointer = PvmMeasure::computational(2);
        let model = InstrumentModel::with_tol(
            2,
            random::state(2, &mut rng),
            random::unitary(4, &mut rng),
            pointer,
            tol,
        )?;
        let povm = povm_from_instrument(&model)?;
        let rho = random::state(2, &mut rng);
        let direct = povm.born_probabilities_with_tol(&rho, tol)?;
        let full = model.full_space_probabilities(&rho)?;
        let diff = direct
            .values()
            .iter()
            .zip(&full)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        Ok((diff < 1e-10, diff))
    });

    let soundness = exec.map(&indices, |&i| -> CliResult<(bool, f64)> {
        let mut rng = sample_rng(seed, 2, i);
        let joint = joint_probabilities(&random::aspect_config(&mut rng))?;
        let m = bivariate_marginals(&joint)?;
        let witness = marginal_residual(&joint, &m)?;
        let excess = m.chsh()?.max_abs() - 2.0;
        let feasible = joint_exists_with_tol(&m, tol)?.is_feasible();
        Ok((feasible && excess <= tol && witness <= tol, witness))
    });

    let equivalence = exec.map(&indices, |&i| -> CliResult<(bool, f64)> {
        let mut rng = sample_rng(seed, 3, i);
        let m = random::no_signaling_set(&mut rng);
        let d = joint_exists_with_tol(&m, tol)?;
        let chsh = m.chsh()?.max_abs();
        Ok((d.boundary || d.is_feasible() == (chsh <= 2.0 + tol), 0.0))
    });

    let reconstruction = exec.map(&indices, |&i| -> CliResult<(bool, f64)> {
        let mut rng = sample_rng(seed, 4, i);
        let model = InstrumentModel::with_tol(
            2,
            random::mixed_state(3, &mut rng),
            random::unitary(6, &mut rng),
            PvmMeasure::computational(3),
            tol,
        )?;
        let povm = povm_from_instrument(&model)?;
        if !povm.is_complete_with_tol(tol) {
            return Ok((true, 0.0));
        }
        let rho = random::state(2, &mut rng);
        let back = povm.reconstruct_state_with_tol(&povm.born_probabilities_with_tol(&rho, tol)?, tol)?;
        let distance = back.trace_distance(&rho)?;
        Ok((distance < 1e-8, distance))
    });

    let checks = vec![
        tally("instrument_vs_full_space", instrument)?,
        tally("fixed_arrangement_joint", soundness)?,
        tally("lp_vs_chsh", equivalence)?,
        tally("reconstruction", reconstruction)?,
    ];
    let pass = checks.iter().all(|c| c.failures == 0);
    Ok(Output {
        body: json(&Report { seed, pass, checks })?,
        code: if pass { EXIT_OK } else { EXIT_SOFTWARE },
    })
}
