//! Result rows of the experiment runners and their CSV serialization.

use std::fmt::Write as _;
use std::path::Path;

use crate::config::TestName;
use crate::error::Result;
use crate::io::write_text;

/// One run of one method on one instance at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub test: TestName,
    /// Position of the parameter point in the test grid; the sort key.
    pub point_index: usize,
    /// Parameter point as `key=value` pairs joined by `;`.
    pub point: String,
    pub method: String,
    pub instance: usize,
    pub instance_seed: u64,
    pub init: usize,
    pub init_seed: u64,
    pub alpha: Option<f64>,
    /// Support recovery in percent.
    pub recovery: Option<f64>,
    pub rel_error: Option<f64>,
    /// Mean spectral angle in radians (completion only).
    pub sam: Option<f64>,
    pub iterations: usize,
    pub wall_time: f64,
}

pub const RESULTS_HEADER: &str =
    "test,point,method,instance,instance_seed,init,init_seed,alpha,recovery,rel_error,sam,iterations";
pub const TIMINGS_HEADER: &str = "test,point,method,instance,init,iterations,wall_time";

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ResultTable {
    /// Rows sorted by (point, method, instance, init), so the output does
    /// not depend on execution order.
    pub fn new(mut rows: Vec<ResultRow>) -> Self {
        rows.sort_by(|a, b| {
            (a.point_index, &a.method, a.instance, a.init).cmp(&(b.point_index, &b.method, b.instance, b.init))
        });
        Self { rows }
    }

    /// Deterministic CSV without timing columns.
    pub fn results_csv(&self) -> String {
        let mut s = String::from(RESULTS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.test,
                r.point,
                r.method,
                r.instance,
                r.instance_seed,
                r.init,
                r.init_seed,
                opt(r.alpha),
                opt(r.recovery),
                opt(r.rel_error),
                opt(r.sam),
                r.iterations
            );
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from(TIMINGS_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{},{},{}", r.test, r.point, r.method, r.instance, r.init, r.iterations, r.wall_time);
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(crate::error::io_err(dir))?;
        write_text(&dir.join("results.csv"), &self.results_csv())?;
        write_text(&dir.join("timings.csv"), &self.timings_csv())
    }

    /// Rows of one method at one parameter point.
    pub fn select<'a>(&'a self, method: &'a str, point: &'a str) -> impl Iterator<Item = &'a ResultRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method && r.point == point)
    }

    /// Mean of a metric over the rows of one method at one point, `None`
    /// when no row carries the metric.
    pub fn mean(&self, method: &str, point: &str, metric: impl Fn(&ResultRow) -> Option<f64>) -> Option<f64> {
        let vals: Vec<f64> = self.select(method, point).filter_map(metric).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    }

    /// Distinct points in grid order.
    pub fn points(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for r in &self.rows {
            if out.last() != Some(&r.point) && !out.contains(&r.point) {
                out.push(r.point.clone());
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(point_index: usize, method: &str, instance: usize, rec: f64) -> ResultRow {
        ResultRow {
            test: TestName::NoiseSweep,
            point_index,
            point: format!("snr_db={point_index}"),
            method: method.into(),
            instance,
            instance_seed: 7,
            init: 0,
            init_seed: 0,
            alpha: None,
            recovery: Some(rec),
            rel_error: Some(0.5),
            sam: None,
            iterations: 3,
            wall_time: 0.25,
        }
    }

    #[test]
    fn sorted_and_serialized() {
        let t = ResultTable::new(vec![row(1, "iht", 0, 10.0), row(0, "iht", 1, 20.0), row(0, "homp", 0, 30.0), row(0, "iht", 0, 40.0)]);
        let order: Vec<(usize, &str, usize)> = t.rows.iter().map(|r| (r.point_index, r.method.as_str(), r.instance)).collect();
        assert_eq!(order, vec![(0, "homp", 0), (0, "iht", 0), (0, "iht", 1), (1, "iht", 0)]);
        let csv = t.results_csv();
        assert!(csv.starts_with(RESULTS_HEADER));
        assert!(csv.contains("noise_sweep,snr_db=0,homp,0,7,0,0,,30,0.5,,3\n"));
        assert!(!csv.contains("0.25"));
        assert!(t.timings_csv().contains("0.25"));
        assert_eq!(t.mean("iht", "snr_db=0", |r| r.recovery), Some(30.0));
        assert_eq!(t.points(), vec!["snr_db=0", "snr_db=1"]);
    }
}
