use aqc_core::pseudodiff::decompose::{concentration_ensemble, decompose_equiintegrable, DecompositionOptions};
use aqc_core::relaxation::loglog_slope;
use aqc_core::torus::TorusGrid;

use super::{operator, spatial_cutoff, usage, Command};
use crate::config::RunConfig;
use crate::report::{num, Artifacts};
use crate::{CliError, Verdict};

pub struct Decompose;

impl Command for Decompose {
    fn name(&self) -> &'static str {
        "decompose"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let eta = spatial_cutoff(&config.text("decompose", "cutoff"))?;
        let dims = op.dims();
        let grid = TorusGrid::new(dims.space, config.int("decompose", "grid"))?;
        let q = config.float("decompose", "q");
        let indices = config.sizes("decompose", "members");
        if indices.len() < 2 {
            return Err(usage("decompose needs at least two members".into()));
        }
        let x0 = vec![0.0; dims.space];
        let members = concentration_ensemble(op.as_ref(), &x0, &grid, q, &indices)?;
        let mut options = DecompositionOptions::new(q, vec![0.0; dims.field]);
        let factor = config.float("decompose", "tail_factor");
        if !options.level_factors.contains(&factor) {
            options.level_factors.push(factor);
        }
        let (_, report) = decompose_equiintegrable(op.clone(), eta.clone(), &members, &options)?;
        let level = report.level_index(factor).expect("factor is among the levels");

        let rows: Vec<Vec<String>> = (0..members.len())
            .map(|i| {
                vec![
                    num(report.indices[i]),
                    num(report.truncation_levels[i]),
                    num(report.tails_in[i][level]),
                    num(report.tails_out[i][level]),
                    num(report.differences[i][0]),
                    num(report.residual_in[i]),
                    num(report.residual_truncation[i]),
                    num(report.residual_out[i]),
                    num(report.mean_errors[i]),
                ]
            })
            .collect();
        out.csv(
            "decompose.csv",
            &[
                "n",
                "truncation_level",
                "tail_in",
                "tail_out",
                "difference",
                "residual_in",
                "residual_truncation",
                "residual_out",
                "mean_error",
            ],
            &rows,
        )?;

        let mut failures = Vec::new();
        let (tin, tout) = (report.sup_tail_in(level), report.sup_tail_out(level));
        let reduction = config.float("decompose", "min_tail_reduction");
        if tin > 0.0 && tout * reduction > tin {
            failures.push(format!("tail at {factor}·median shrinks from {} to {}, less than {reduction}×", num(tin), num(tout)));
        }
        let diffs: Vec<f64> = report.differences.iter().map(|d| d[0]).collect();
        let slope = loglog_slope(&report.indices, &diffs);
        if !(slope < 0.0) {
            failures.push(format!("‖ṽ_n - v_n‖ slope {} is not negative", num(slope)));
        }
        for (i, e) in report.mean_errors.iter().enumerate() {
            if *e > 1e-12 {
                failures.push(format!("n = {}: mean error {}", report.indices[i], num(*e)));
            }
        }
        for i in 0..members.len() {
            if report.residual_out[i] > 2.0 * report.residual_truncation[i] {
                failures.push(format!(
                    "n = {}: residual {} exceeds twice the truncation residual {}",
                    report.indices[i],
                    num(report.residual_out[i]),
                    num(report.residual_truncation[i])
                ));
            }
        }
        let text = format!(
            "operator: {}\ncutoff: {}\ngrid: {}\nq = {q}, s = {}\nmedian ‖v_n‖_q: {}\ntail at {factor}·median: {} in, {} out\ndifference slope: {}\nfailures: {}\n",
            op.label(),
            eta.label(),
            grid.size(),
            num(options.residual_exponent),
            num(report.median_norm),
            num(tin),
            num(tout),
            num(slope),
            failures.len()
        );
        out.text("decompose.txt", &text)?;
        Ok(Verdict::from_failures(failures))
    }
}
