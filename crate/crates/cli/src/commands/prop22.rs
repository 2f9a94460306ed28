use aqc_core::pseudodiff::prop22::{verify_prop22, Prop22Options};

use super::{operator, spatial_cutoff, Command};
use crate::config::RunConfig;
use crate::report::{num, Artifacts};
use crate::{CliError, Verdict};

pub struct VerifyProp22;

impl Command for VerifyProp22 {
    fn name(&self) -> &'static str {
        "verify-prop22"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let options = Prop22Options {
            exponents: config.floats("prop22", "exponents"),
            ensemble_size: config.int("prop22", "ensemble_size"),
            ladder: config.sizes("prop22", "ladder"),
            seed: config.seed,
            ..Default::default()
        };
        let limit = config.float("prop22", "growth_limit");
        let (mut rows, mut growth_rows, mut failures) = (Vec::new(), Vec::new(), Vec::new());
        let mut text = format!("operator: {}\n", op.label());
        for label in config.labels("prop22", "cutoffs") {
            let eta = spatial_cutoff(&label)?;
            let table = verify_prop22(op.clone(), eta.clone(), &options)?;
            for r in &table.rows {
                rows.push(vec![
                    table.cutoff.clone(),
                    r.grid_size.to_string(),
                    num(r.q),
                    r.inequality.to_string(),
                    r.ensemble.name().to_string(),
                    num(r.max_ratio),
                ]);
            }
            if !table.all_finite() {
                failures.push(format!("cutoff {}: non-finite ratio", table.cutoff));
            }
            let (lo, hi) = (options.ladder.iter().min().copied().unwrap_or(0), options.ladder.iter().max().copied().unwrap_or(0));
            text.push_str(&format!("cutoff {}:\n", table.cutoff));
            for &q in &options.exponents {
                for i in 1..=4 {
                    let growth = table.growth(q, i);
                    growth_rows.push(vec![
                        table.cutoff.clone(),
                        num(q),
                        i.to_string(),
                        num(table.constant(lo, q, i)),
                        num(table.constant(hi, q, i)),
                        num(growth),
                    ]);
                    text.push_str(&format!(
                        "  q = {q}, inequality {i}: G = {lo}: {:.4e}, G = {hi}: {:.4e}, growth {:.3}\n",
                        table.constant(lo, q, i),
                        table.constant(hi, q, i),
                        growth
                    ));
                    if !(growth < limit) {
                        failures.push(format!("cutoff {}, q = {q}, inequality {i}: growth {} not below {}", table.cutoff, num(growth), num(limit)));
                    }
                }
            }
            if op.is_constant() && eta.label() == "one" && options.exponents.contains(&2.0) {
                for &g in &options.ladder {
                    let c = table.constant(g, 2.0, 1);
                    if c > 1.0 + 1e-10 {
                        failures.push(format!("constant coefficients, η ≡ 1, q = 2, G = {g}: first ratio {} exceeds 1", num(c)));
                    }
                }
            }
        }
        out.csv("prop22.csv", &["cutoff", "grid", "q", "inequality", "ensemble", "max_ratio"], &rows)?;
        out.csv(
            "prop22_growth.csv",
            &["cutoff", "q", "inequality", "constant_coarse", "constant_fine", "growth"],
            &growth_rows,
        )?;
        out.text("verify-prop22.txt", &text)?;
        Ok(Verdict::from_failures(failures))
    }
}
