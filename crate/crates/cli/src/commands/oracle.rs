use aqc_core::envelope::{convex_biconjugate, sample_density_slice, Axis, EnvelopeQuery};

use super::{density, operator, tensor_points, usage, Command};
use crate::cache::EnvelopeCache;
use crate::config::RunConfig;
use crate::report::{num, nums, Artifacts};
use crate::{CliError, Verdict};

pub struct OracleCompare;

impl Command for OracleCompare {
    fn name(&self) -> &'static str {
        "oracle-compare"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let f = density(config)?;
        let d = op.dims().field;
        let x0 = config.floats("envelope", "x0");
        let u0 = config.floats("envelope", "u0");
        let axes = config.axes("oracle", "points");
        if axes.len() != d {
            return Err(usage(format!("[oracle] points needs {d} axes, got {}", axes.len())));
        }
        let range = config.float("oracle", "range");
        let resolution = config.int("oracle", "resolution");
        let box_axes = vec![Axis::new(-range, range, resolution); d];
        let bi = convex_biconjugate(&sample_density_slice(f.as_ref(), &x0, &u0, box_axes))?;
        let lower_tol = config.float("oracle", "lower_tolerance");
        let upper_tol = config.float("oracle", "upper_tolerance");
        let match_tol = config.opt_float("oracle", "match_tolerance");
        let solver = config.solver();
        let mut cache = EnvelopeCache::open(config.cache_path().as_deref())?;
        let (mut rows, mut failures) = (Vec::new(), Vec::new());
        for xi in tensor_points(&axes) {
            let lower = bi
                .at(&xi)
                .ok_or_else(|| usage(format!("ξ = ({}) is not a node of the biconjugate grid", nums(&xi).join(", "))))?;
            let query = EnvelopeQuery::new(f.clone(), op.as_ref(), &x0, &u0, &xi, solver.clone())?;
            let s = cache.get_or_solve(&op.label(), &query)?;
            let upper = s.unrelaxed.min(s.laminate);
            let at = nums(&xi).join(", ");
            if lower > s.value + lower_tol {
                failures.push(format!("ξ = ({at}): biconjugate {} above value {}", num(lower), num(s.value)));
            }
            if s.value > upper + upper_tol {
                failures.push(format!("ξ = ({at}): value {} above upper bound {}", num(s.value), num(upper)));
            }
            if let Some(t) = match_tol {
                if (s.value - lower).abs() > t {
                    failures.push(format!("ξ = ({at}): |value - biconjugate| = {} exceeds {}", num((s.value - lower).abs()), num(t)));
                }
            }
            let mut row = nums(&xi);
            row.extend([
                num(s.value),
                num(lower),
                num(s.unrelaxed),
                num(s.laminate),
                num(s.value - lower),
                s.converged.to_string(),
            ]);
            rows.push(row);
        }
        cache.save()?;
        eprintln!("envelope cache: {} hits, {} solves", cache.hits, cache.misses);
        let mut columns: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).collect();
        columns.extend(["value", "biconjugate", "density", "laminate", "value_minus_biconjugate", "converged"].map(String::from));
        let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
        out.csv("oracle-compare.csv", &columns, &rows)?;
        let text = format!(
            "operator: {}\ndensity: {}\npoints: {}\nbiconjugate box: [-{range}, {range}]^{d}, {resolution} points per axis\nfailures: {}\n{}",
            op.label(),
            f.label(),
            rows.len(),
            failures.len(),
            failures.iter().map(|f| format!("  {f}\n")).collect::<String>()
        );
        out.text("oracle-compare.txt", &text)?;
        Ok(Verdict::from_failures(failures))
    }
}
