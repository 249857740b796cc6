//! Trajectory CSV: `t,<state columns>,H?,sum_diag?`, every value printed
//! with 17 significant digits. A run that stopped early ends with a
//! `# incomplete: <reason>` line; readers skip `#` lines.

use std::io::{self, Write};
use std::path::Path;

use conserva_core::dynamics::{Drift, Trajectory, OBS_H, OBS_SIMPLEX_SUM};
use conserva_core::Chart;

pub fn state_prefix(chart: Chart) -> &'static str {
    match chart {
        Chart::X => "x",
        Chart::Y => "y",
        Chart::U => "u",
    }
}

pub fn fmt_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column names in output order.
pub fn header(traj: &Trajectory) -> Vec<String> {
    let k = traj.states.first().map_or(0, |s| s.len());
    let prefix = state_prefix(traj.chart);
    let mut cols = vec!["t".to_string()];
    cols.extend((1..=k).map(|i| format!("{prefix}{i}")));
    for name in [OBS_H, OBS_SIMPLEX_SUM] {
        if traj.observable(name).is_some() {
            cols.push(name.to_string());
        }
    }
    cols
}

pub fn write_trajectory<W: Write>(mut w: W, traj: &Trajectory) -> io::Result<()> {
    writeln!(w, "{}", header(traj).join(","))?;
    let extra: Vec<&[f64]> = [OBS_H, OBS_SIMPLEX_SUM]
        .iter()
        .filter_map(|n| traj.observable(n).map(|o| o.values.as_slice()))
        .collect();
    for (k, (t, s)) in traj.times.iter().zip(&traj.states).enumerate() {
        let mut line = fmt_value(*t);
        for v in s.iter().chain(extra.iter().map(|col| &col[k])) {
            line.push(',');
            line.push_str(&fmt_value(*v));
        }
        writeln!(w, "{line}")?;
    }
    if !traj.status.is_completed() {
        writeln!(w, "# incomplete: {}", traj.status)?;
    }
    Ok(())
}

/// Writes `h.csv` with `(t, H)` and `phase_i_j.csv` files for coordinate
/// pairs (all pairs up to four coordinates, consecutive pairs beyond).
pub fn write_plot_data(dir: &Path, traj: &Trajectory) -> io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(h) = traj.observable(OBS_H) {
        let mut out = String::from("t,H\n");
        for (t, v) in traj.times.iter().zip(&h.values) {
            out.push_str(&format!("{},{}\n", fmt_value(*t), fmt_value(*v)));
        }
        std::fs::write(dir.join("h.csv"), out)?;
        written.push("h.csv".to_string());
    }
    let k = traj.states.first().map_or(0, |s| s.len());
    let prefix = state_prefix(traj.chart);
    let pairs: Vec<(usize, usize)> = if k <= 4 {
        (0..k)
            .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
            .collect()
    } else {
        (0..k - 1).map(|i| (i, i + 1)).collect()
    };
    for (i, j) in pairs {
        let name = format!("phase_{}_{}.csv", i + 1, j + 1);
        let mut out = format!("{prefix}{},{prefix}{}\n", i + 1, j + 1);
        for s in &traj.states {
            out.push_str(&format!("{},{}\n", fmt_value(s[i]), fmt_value(s[j])));
        }
        std::fs::write(dir.join(&name), out)?;
        written.push(name);
    }
    Ok(written)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Text of a trailing `# incomplete:` marker, if present.
    pub incomplete: Option<String>,
}

impl CsvTable {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn drift(&self, name: &str) -> Option<Drift> {
        self.column(name).map(|c| Drift::of(&c))
    }
}

pub fn read_trajectory(text: &str) -> Result<CsvTable, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut incomplete = None;
    let header: Vec<String> = loop {
        match lines.next() {
            Some(l) if l.starts_with('#') => continue,
            Some(l) => break l.split(',').map(str::to_string).collect(),
            None => return Err("empty CSV".into()),
        }
    };
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(reason) = rest.trim().strip_prefix("incomplete:") {
                incomplete = Some(reason.trim().to_string());
            }
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| format!("row {}: {e}", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!(
                "row {}: {} values for {} columns",
                k + 1,
                row.len(),
                header.len()
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable {
        header,
        rows,
        incomplete,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            assert_eq!(fmt_value(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_value(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn reader_skips_comments_and_flags_incomplete() {
        let t = read_trajectory("# note\nt,y1\n0,1\n1,2\n# incomplete: diverged\n").unwrap();
        assert_eq!(t.header, vec!["t", "y1"]);
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.incomplete.as_deref(), Some("diverged"));
        assert!(read_trajectory("t,y1\n0\n").is_err());
    }
}
