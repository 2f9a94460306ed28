use aqc_core::envelope::EnvelopeQuery;

use super::{density, operator, tensor_points, Command};
use crate::cache::EnvelopeCache;
use crate::config::RunConfig;
use crate::report::{num, nums, Artifacts};
use crate::{CliError, Verdict};

pub struct Envelope;

/// `[envelope] points`, then the `slice` grid; the origin if both are empty.
pub(super) fn envelope_points(config: &RunConfig, d: usize) -> Vec<Vec<f64>> {
    let mut points = config.points("envelope", "points");
    points.extend(tensor_points(&config.axes("envelope", "slice")));
    if points.is_empty() {
        points.push(vec![0.0; d]);
    }
    points
}

impl Command for Envelope {
    fn name(&self) -> &'static str {
        "envelope"
    }

    fn run(&self, config: &RunConfig, out: &mut Artifacts) -> Result<Verdict, CliError> {
        let op = operator(config)?;
        let f = density(config)?;
        let d = op.dims().field;
        let x0 = config.floats("envelope", "x0");
        let u0 = config.floats("envelope", "u0");
        let solver = config.solver();
        let mut cache = EnvelopeCache::open(config.cache_path().as_deref())?;
        let mut rows = Vec::new();
        let mut failures = Vec::new();
        for xi in envelope_points(config, d) {
            let query = EnvelopeQuery::new(f.clone(), op.as_ref(), &x0, &u0, &xi, solver.clone())?;
            let s = cache.get_or_solve(&op.label(), &query)?;
            let upper = s.unrelaxed.min(s.laminate);
            if s.value > upper + 1e-8 {
                failures.push(format!("ξ = ({}): value {} above upper bound {}", nums(&xi).join(", "), num(s.value), num(upper)));
            }
            let mut row = nums(&xi);
            row.extend([num(s.value), num(s.unrelaxed), num(s.laminate), s.converged.to_string()]);
            rows.push(row);
        }
        cache.save()?;
        eprintln!("envelope cache: {} hits, {} solves", cache.hits, cache.misses);
        let mut columns: Vec<String> = (1..=d).map(|i| format!("xi_{i}")).collect();
        columns.extend(["value", "density", "laminate", "converged"].map(String::from));
        let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
        out.csv("envelope.csv", &columns, &rows)?;
        let text = format!(
            "operator: {}\ndensity: {}\nx0: ({})\npoints: {}\nupper-bound violations: {}\n",
            op.label(),
            f.label(),
            nums(&x0).join(", "),
            rows.len(),
            failures.len()
        );
        out.text("envelope.txt", &text)?;
        Ok(Verdict::from_failures(failures))
    }
}
