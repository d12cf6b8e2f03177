//! Result serialization: CSV and JSON bodies with round-trip float
//! formatting, each embedding the manifest hash of the generating config.
//!
//! CSV dialect: comma separator, '.' decimal, header row, LF endings, floats
//! with 17 significant digits. The first line is a `# manifest=<hash>`
//! comment tying the file to its config.

use serde::{Deserialize, Serialize};

use crate::instrument::AngleSweepCurve;
use crate::protocols::PolarizationTrace;
use crate::Result;

/// 17-significant-digit scientific rendering; round-trips any finite f64.
pub fn fmt_f64_17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Seed-averaged per-cycle statistics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CycleStat {
    pub cycle: usize,
    pub time_ms: f64,
    pub bulk_mean: f64,
    pub frozen_core_mean: f64,
}

/// JSON body of a simulate run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulateResult {
    pub manifest_hash: String,
    pub protocol: String,
    pub n_seeds: usize,
    pub n_cycles: usize,
    pub cycle_time_ms: f64,
    pub final_bulk_mean: f64,
    pub final_bulk_stderr: f64,
    pub final_frozen_core_mean: f64,
    pub per_seed_final_bulk: Vec<f64>,
    pub per_cycle: Vec<CycleStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_spin_final: Option<Vec<Vec<f64>>>,
    pub warnings: Vec<String>,
}

/// JSON body of an angle sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveResult {
    pub manifest_hash: String,
    pub curve: AngleSweepCurve,
}

/// Run metadata written next to the result bodies. Wall time lives here and
/// only here, so the bodies stay byte-identical across reruns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest<C: Serialize> {
    pub tool_version: String,
    pub manifest_hash: String,
    pub master_seed: u64,
    pub wall_time_ms: f64,
    pub config: C,
}

/// Average traces from several seeds into per-cycle statistics.
///
/// All traces must share the cycle count (they come from one config).
pub fn aggregate_traces(traces: &[PolarizationTrace]) -> Vec<CycleStat> {
    let Some(first) = traces.first() else {
        return Vec::new();
    };
    let n = traces.len() as f64;
    first
        .per_cycle
        .iter()
        .enumerate()
        .map(|(i, record)| CycleStat {
            cycle: record.cycle,
            time_ms: record.time_ms,
            bulk_mean: traces.iter().map(|t| t.per_cycle[i].bulk).sum::<f64>() / n,
            frozen_core_mean: traces.iter().map(|t| t.per_cycle[i].frozen_core).sum::<f64>() / n,
        })
        .collect()
}

/// Trace CSV: cycle, time_ms, bulk_polarization, frozen_core_polarization.
pub fn render_trace_csv(stats: &[CycleStat], manifest_hash: &str) -> String {
    let mut out = format!("# manifest={manifest_hash}\n");
    out.push_str("cycle,time_ms,bulk_polarization,frozen_core_polarization\n");
    for s in stats {
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.cycle,
            fmt_f64_17(s.time_ms),
            fmt_f64_17(s.bulk_mean),
            fmt_f64_17(s.frozen_core_mean)
        ));
    }
    out
}

/// Curve CSV: theta_deg, enhancement_mean, enhancement_stderr, n_samples.
pub fn render_curve_csv(curve: &AngleSweepCurve, manifest_hash: &str) -> String {
    let mut out = format!("# manifest={manifest_hash}\n");
    out.push_str("theta_deg,enhancement_mean,enhancement_stderr,n_samples\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64_17(p.theta_deg),
            fmt_f64_17(p.enhancement),
            fmt_f64_17(p.stderr),
            p.n_samples
        ));
    }
    out
}

/// Deterministic pretty JSON with a trailing newline.
pub fn render_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| crate::Error::InvalidInput(format!("serialization failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocols::CycleRecord;

    #[test]
    fn float_formatting_round_trips() {
        for x in [0.0, 1.0, -0.3337217919, 4.87e-5, 1.0 / 3.0, 2800.0, f64::MIN_POSITIVE] {
            let s = fmt_f64_17(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    fn trace(vals: &[f64]) -> PolarizationTrace {
        PolarizationTrace {
            per_cycle: vals
                .iter()
                .enumerate()
                .map(|(i, &v)| CycleRecord {
                    cycle: i + 1,
                    time_ms: (i + 1) as f64 * 10.0,
                    bulk: v,
                    frozen_core: v / 2.0,
                    per_spin: vec![v],
                })
                .collect(),
            cycle_time_ms: 10.0,
        }
    }

    #[test]
    fn aggregation_averages_across_seeds() {
        let stats = aggregate_traces(&[trace(&[0.1, 0.2]), trace(&[0.3, 0.4])]);
        assert_eq!(stats.len(), 2);
        assert!((stats[0].bulk_mean - 0.2).abs() < 1e-15);
        assert!((stats[1].bulk_mean - 0.3).abs() < 1e-15);
        assert!((stats[1].frozen_core_mean - 0.15).abs() < 1e-15);
    }

    #[test]
    fn csv_layout() {
        let stats = aggregate_traces(&[trace(&[0.5])]);
        let csv = render_trace_csv(&stats, "deadbeef");
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# manifest=deadbeef");
        assert_eq!(lines[1], "cycle,time_ms,bulk_polarization,frozen_core_polarization");
        assert!(lines[2].starts_with("1,1.0000000000000000e1,5.0000000000000000e-1,"));
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }
}
