//! Subcommands as strategies registered by name.

mod check_rank;
mod decompose;
mod envelope;
mod oracle;
mod prop22;
mod relax;

use std::sync::Arc;

use aqc_core::densities::{self, EnergyDensity};
use aqc_core::pseudodiff::cutoff::{self, SpatialCutoff};
use aqc_core::registry::Registry;
use aqc_core::symbols::{self, CoefficientField};

use crate::config::RunConfig;
use crate::report::Artifacts;
use crate::{CliError, Verdict};

pub trait Command: Send + Sync {
    fn name(&self) -> &'static str;
    /// Writes the command's artifacts and returns its verdict.
    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError>;
}

pub fn registry() -> Registry<dyn Command> {
    let mut r: Registry<dyn Command> = Registry::new("command");
    r.register("check-rank", "constant rank certificate or witness", |_| Ok(Box::new(check_rank::CheckRank)));
    r.register("envelope", "cell-problem envelope at points or on a slice", |_| Ok(Box::new(envelope::Envelope)));
    r.register("relax", "envelope integral against recovery energies", |_| Ok(Box::new(relax::Relax)));
    r.register("verify-prop22", "empirical constants of the P_η bounds", |_| Ok(Box::new(prop22::VerifyProp22)));
    r.register("decompose", "truncate-and-project decomposition", |_| Ok(Box::new(decompose::Decompose)));
    r.register("oracle-compare", "envelope against biconjugate and upper bounds", |_| Ok(Box::new(oracle::OracleCompare)));
    r
}

pub fn execute(config: &RunConfig) -> Result<Verdict, CliError> {
    let command = registry().build(&config.command)?;
    let mut out = Artifacts::new(&config.output_dir(), config)?;
    command.run(config, &mut out)
}

fn operator(config: &RunConfig) -> Result<Arc<dyn CoefficientField>, CliError> {
    Ok(Arc::from(symbols::catalog::registry().build(&config.text("operator", "label"))?))
}

fn density(config: &RunConfig) -> Result<Arc<dyn EnergyDensity>, CliError> {
    Ok(Arc::from(densities::registry().build(&config.text("density", "label"))?))
}

fn spatial_cutoff(label: &str) -> Result<Arc<dyn SpatialCutoff>, CliError> {
    Ok(Arc::from(cutoff::registry().build(label)?))
}

fn usage(message: String) -> CliError {
    CliError::Core(aqc_core::Error::Usage(message))
}

/// Tensor grid of the axes, axis 0 fastest.
fn tensor_points(axes: &[aqc_core::envelope::Axis]) -> Vec<Vec<f64>> {
    if axes.is_empty() {
        return Vec::new();
    }
    let total: usize = axes.iter().map(|a| a.points).product();
    (0..total)
        .map(|flat| {
            let mut rem = flat;
            axes.iter()
                .map(|a| {
                    let i = rem % a.points;
                    rem /= a.points;
                    a.value(i)
                })
                .collect()
        })
        .collect()
}
