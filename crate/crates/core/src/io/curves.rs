use std::fmt::Write as _;
use std::path::Path;

use super::write_bytes;
use crate::error::Result;

/// `step,loss` CSV with one row per step. Losses use the shortest
/// representation that round-trips.
pub fn curve_csv(losses: &[f64]) -> String {
    let mut out = String::from("step,loss\n");
    for (i, l) in losses.iter().enumerate() {
        writeln!(out, "{i},{l}").expect("write to String");
    }
    out
}

pub fn write_curve(losses: &[f64], path: impl AsRef<Path>) -> Result<()> {
    write_bytes(path.as_ref(), curve_csv(losses).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips() {
        let losses = [52.25, 0.1 + 0.2];
        let csv = curve_csv(&losses);
        assert!(csv.starts_with("step,loss\n0,52.25\n"));
        let parsed: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert_eq!(parsed, losses);
    }
}
