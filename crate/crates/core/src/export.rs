//! CSV writers. Floats use 17 significant digits and a '.' separator.

use std::fmt::Write;

use crate::expectation::SweepPoint;
use crate::simulator::{Ensemble, Trajectory};

/// Scientific notation with 17 significant digits; locale independent.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn row(out: &mut String, cells: impl IntoIterator<Item = String>) {
    let cells: Vec<String> = cells.into_iter().collect();
    out.push_str(&cells.join(","));
    out.push('\n');
}

/// `k,x_1,...,x_n` at every recorded step.
pub fn trajectory_states_csv(t: &Trajectory) -> String {
    let mut out = String::new();
    row(
        &mut out,
        std::iter::once("k".to_string()).chain((1..=t.n).map(|i| format!("x_{i}"))),
    );
    for (k, x) in t.ks.iter().zip(&t.snapshots) {
        row(
            &mut out,
            std::iter::once(k.to_string()).chain(x.iter().map(|v| fmt_f64(*v))),
        );
    }
    out
}

/// `k,m,M,spread` at every recorded step.
pub fn trajectory_series_csv(t: &Trajectory) -> String {
    let mut out = String::from("k,m,M,spread\n");
    for (idx, k) in t.ks.iter().enumerate() {
        let _ = writeln!(
            out,
            "{k},{},{},{}",
            fmt_f64(t.min[idx]),
            fmt_f64(t.max[idx]),
            fmt_f64(t.spread[idx])
        );
    }
    out
}

/// One row per step with means and standard errors of every series.
pub fn ensemble_csv(e: &Ensemble) -> String {
    let mut out = String::new();
    let mut header = vec!["k".to_string()];
    header.extend((1..=e.n).map(|i| format!("mean_y_{i}")));
    header.extend((1..=e.n).map(|i| format!("se_y_{i}")));
    header.extend(
        ["mean_y_sq", "se_y_sq", "mean_spread", "se_spread"]
            .iter()
            .map(|s| s.to_string()),
    );
    row(&mut out, header);
    for k in 0..e.mean_y.len() {
        let mut cells = vec![k.to_string()];
        cells.extend(e.mean_y[k].iter().map(|v| fmt_f64(*v)));
        cells.extend(e.se_y[k].iter().map(|v| fmt_f64(*v)));
        cells.extend(
            [
                e.mean_y_sq[k],
                e.se_y_sq[k],
                e.mean_spread[k],
                e.se_spread[k],
            ]
            .iter()
            .map(|v| fmt_f64(*v)),
        );
        row(&mut out, cells);
    }
    out
}

/// `p,fraction_converging,samples,seed`, preceded by `#` metadata lines.
pub fn sweep_csv(points: &[SweepPoint], metadata: &[(&str, String)]) -> String {
    let mut out = String::new();
    for (key, value) in metadata {
        let _ = writeln!(out, "# {key}={value}");
    }
    out.push_str("p,fraction_converging,samples,seed\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(p.p),
            fmt_f64(p.fraction_converging),
            p.samples,
            p.seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        let v = 1.0 / 3.0;
        assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
    }

    #[test]
    fn sweep_header_and_metadata() {
        let pts = [SweepPoint {
            p: 0.5,
            fraction_converging: 1.0,
            samples: 3,
            seed: 9,
        }];
        let csv = sweep_csv(&pts, &[("p_star", "0.5".into())]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# p_star=0.5");
        assert_eq!(lines[1], "p,fraction_converging,samples,seed");
        assert!(lines[2].ends_with(",3,9"));
    }
}
