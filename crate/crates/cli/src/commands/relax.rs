use std::fs::File;
use std::io::BufReader;

use aqc_core::registry::Label;
use aqc_core::relaxation::{plane_wave, relax, residual_ladder, CubeCutoff, GapTolerance, RecoveryOptions, RelaxationQuery};
use aqc_core::symbols::FrozenSymbol;
use aqc_core::torus::{PeriodicField, TorusGrid};

use super::{density, operator, usage, Command};
use crate::config::RunConfig;
use crate::report::{num, nums, Artifacts};
use crate::{CliError, Verdict};

pub struct Relax;

/// `zero`, `const(c1, …)` or `file(path)` (`.csv`, otherwise the binary format).
fn field_source(spec: &str, grid: &TorusGrid, components: usize) -> Result<PeriodicField, CliError> {
    let spec = spec.trim();
    if spec == "zero" {
        return Ok(PeriodicField::zeros(grid, components));
    }
    if let Some(path) = spec.strip_prefix("file(").and_then(|s| s.strip_suffix(')')) {
        let path = path.trim();
        let file = BufReader::new(File::open(path)?);
        let field = if path.ends_with(".csv") {
            PeriodicField::read_csv(file)?
        } else {
            PeriodicField::read_binary(file)?
        };
        if field.grid() != grid || field.components() != components {
            return Err(usage(format!(
                "{path}: field has {} components on {:?}, expected {components} on {grid:?}",
                field.components(),
                field.grid()
            )));
        }
        return Ok(field);
    }
    let label = Label::parse(spec)?;
    if label.name == "const" && label.params.len() == components {
        return Ok(PeriodicField::constant(grid, &label.params));
    }
    Err(usage(format!(
        "field source `{spec}` must be zero, const(c1..c{components}) or file(path)"
    )))
}

impl Command for Relax {
    fn name(&self) -> &'static str {
        "relax"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let f = density(config)?;
        let dims = op.dims();
        let grid = TorusGrid::new(dims.space, config.int("relax", "grid"))?;
        let u_components = config.floats("envelope", "u0").len().max(1);
        let u = field_source(&config.text("relax", "u"), &grid, u_components)?;
        let v = field_source(&config.text("relax", "v"), &grid, dims.field)?;
        let recovery = RecoveryOptions {
            r_ladder: config.floats("relax", "r"),
            m_ladder: config.sizes("relax", "m"),
            cutoff: config.relax_cutoff(),
            residual_exponent: config.opt_float("relax", "residual_exponent"),
        };
        let tol = GapTolerance {
            lower: config.float("relax", "tol_lower"),
            upper_relative: config.float("relax", "tol_relative"),
            upper_absolute: config.float("relax", "tol_absolute"),
        };
        let query = RelaxationQuery::new(f.clone(), op.clone(), u, v, config.solver(), recovery)?;
        let report = relax(&query, tol)?;

        let mut rows = Vec::new();
        for p in &report.rhs.points {
            let mut row = nums(&p.x);
            row.push(num(p.weight));
            row.extend(nums(&p.u));
            row.extend(nums(&p.v));
            row.extend([
                num(p.result.value),
                num(p.result.unrelaxed),
                num(p.result.laminate.value),
                p.result.converged.to_string(),
            ]);
            rows.push(row);
        }
        let mut columns: Vec<String> = (1..=dims.space).map(|i| format!("x_{i}")).collect();
        columns.push("weight".into());
        columns.extend((1..=u_components).map(|i| format!("u_{i}")));
        columns.extend((1..=dims.field).map(|i| format!("v_{i}")));
        columns.extend(["envelope", "density", "laminate", "converged"].map(String::from));
        let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
        out.csv("relax_rhs.csv", &columns, &rows)?;

        let lhs_rows: Vec<Vec<String>> = report
            .lhs
            .entries
            .iter()
            .map(|e| vec![num(e.r), e.m.to_string(), num(e.energy), num(e.residual), num(e.shell_measure)])
            .collect();
        out.csv("relax_lhs.csv", &["r", "m", "energy", "residual", "shell_measure"], &lhs_rows)?;

        let g = &report.gap;
        let mut failures = Vec::new();
        if !g.lower_bound_holds {
            failures.push(format!("sequence energy {} below envelope integral {} - {}", num(g.min_energy), num(g.rhs), num(tol.lower)));
        }
        if !g.pass && g.lower_bound_holds {
            failures.push(format!("gap {} outside [-{}, max({}, {}·rhs)]", num(g.gap), num(tol.lower), num(tol.upper_absolute), num(tol.upper_relative)));
        }
        let mut text = format!(
            "operator: {}\ndensity: {}\ngrid: {}\nquadrature points: {}\nenvelope integral: {}\nliminf estimate: {}\ngap: {}\nminimum sequence energy: {}\nbracket: {}\n",
            op.label(),
            f.label(),
            grid.size(),
            report.rhs.points.len(),
            num(g.rhs),
            num(g.liminf),
            num(g.gap),
            num(g.min_energy),
            if g.pass { "pass" } else { "fail" }
        );

        let rs = config.floats("relax", "residual_r");
        if !rs.is_empty() {
            let x0 = config.floats("envelope", "x0");
            let frozen = FrozenSymbol::new(op.as_ref(), &x0)?;
            let cell = TorusGrid::new(dims.space, 32)?;
            let w = plane_wave(&frozen, &cell, &config.ints("relax", "residual_direction"))?;
            let fine = TorusGrid::new(dims.space, config.int("relax", "residual_grid"))?;
            let ladder = residual_ladder(
                op.as_ref(),
                &x0,
                &w,
                query.residual_exponent(),
                &rs,
                config.int("relax", "residual_m"),
                CubeCutoff::Plateau {
                    mu: config.float("relax", "residual_mu"),
                },
                &fine,
            )?;
            let rows: Vec<Vec<String>> = ladder.r.iter().zip(&ladder.residual).map(|(r, v)| vec![num(*r), num(*v)]).collect();
            out.csv("relax_residual.csv", &["r", "residual"], &rows)?;
            let slack = config.float("relax", "residual_slack");
            text.push_str(&format!(
                "residual slope: {} (estimate exponent {}, slack {})\n",
                num(ladder.slope),
                num(ladder.expected_slope),
                num(slack)
            ));
            if ladder.slope < ladder.expected_slope - slack {
                failures.push(format!("residual slope {} below {} - {}", num(ladder.slope), num(ladder.expected_slope), num(slack)));
            }
        }
        out.text("relax.txt", &text)?;
        Ok(Verdict::from_failures(failures))
    }
}
