use aqc_core::symbols::{cell_samples, sphere_samples, verify_constant_rank};

use super::{operator, Command};
use crate::config::RunConfig;
use crate::report::{num, nums, Artifacts};
use crate::{CliError, Verdict};

pub struct CheckRank;

impl Command for CheckRank {
    fn name(&self) -> &'static str {
        "check-rank"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let dims = op.dims();
        let xs = cell_samples(
            dims.space,
            config.int("check-rank", "x_per_axis"),
            config.int("check-rank", "x_random"),
            config.seed,
        );
        let lambdas = sphere_samples(
            dims.space,
            config.int("check-rank", "directions"),
            config.int("check-rank", "random_directions"),
            config.seed.wrapping_add(1),
        );
        let cert = verify_constant_rank(op.as_ref(), &xs, &lambdas, config.float("check-rank", "gap"))?;
        let mut text = format!(
            "operator: {}\ndimensions: N = {}, d = {}, l = {}\nsamples: {} points x {} directions\nrank: {}\nminimum gap: {}\ngap threshold: {}\n",
            op.label(),
            dims.space,
            dims.field,
            dims.equations,
            xs.len(),
            lambdas.len(),
            cert.rank,
            num(cert.min_gap),
            num(cert.gap_threshold)
        );
        let witness = match &cert.failure_witness {
            Some((x, l, r)) => {
                let (cx, cl) = cert.consensus_witness.clone().unwrap_or_default();
                text.push_str(&format!(
                    "witness: rank {r} at x = ({}), λ = ({}); rank {} at x = ({}), λ = ({})\n",
                    nums(x).join(", "),
                    nums(l).join(", "),
                    cert.rank,
                    nums(&cx).join(", "),
                    nums(&cl).join(", ")
                ));
                vec![nums(x).join(" "), nums(l).join(" "), r.to_string()]
            }
            None => vec![String::new(), String::new(), String::new()],
        };
        text.push_str(&format!("certificate: {}\n", if cert.passed { "pass" } else { "fail" }));
        out.text("check-rank.txt", &text)?;
        let mut row = vec![
            op.label(),
            cert.rank.to_string(),
            num(cert.min_gap),
            num(cert.gap_threshold),
            cert.sample_count.to_string(),
            cert.passed.to_string(),
        ];
        row.extend(witness);
        out.csv(
            "check-rank.csv",
            &["operator", "rank", "min_gap", "gap_threshold", "samples", "passed", "witness_x", "witness_lambda", "witness_rank"],
            &[row],
        )?;
        let mut failures = Vec::new();
        if let Some((x, l, r)) = &cert.failure_witness {
            failures.push(format!(
                "rank {r} at x = ({}), λ = ({}) differs from consensus rank {}",
                nums(x).join(", "),
                nums(l).join(", "),
                cert.rank
            ));
        } else if !cert.passed {
            failures.push(format!("spectral gap {} below threshold {}", num(cert.min_gap), num(cert.gap_threshold)));
        }
        Ok(Verdict::from_failures(failures))
    }
}
