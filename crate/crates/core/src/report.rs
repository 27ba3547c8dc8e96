//! Plain-text tables and CSV for every report the toolkit prints.

use std::fmt::Write;

use crate::cv::AblationRow;
use crate::metrics::AggregateReport;
use crate::pose::{FieldRegion, FolderCount};
use crate::weak::{BowlerRow, PhaseRow, Prediction, ProportionTable};

/// Per-folder clip counts with a total row.
pub fn dataset_table(counts: &[FolderCount]) -> String {
    let mut s = format!("{:<16} {:>6} {:>6} {:>6}\n", "Folder", "High", "Low", "Total");
    let (mut h, mut l) = (0, 0);
    for c in counts {
        writeln!(s, "{:<16} {:>6} {:>6} {:>6}", c.folder, c.high, c.low, c.high + c.low).unwrap();
        h += c.high;
        l += c.low;
    }
    writeln!(s, "{:<16} {:>6} {:>6} {:>6}", "Total", h, l, h + l).unwrap();
    s
}

pub fn dataset_csv(counts: &[FolderCount]) -> String {
    let mut s = String::from("folder,high,low,total\n");
    for c in counts {
        writeln!(s, "{},{},{},{}", c.folder, c.high, c.low, c.high + c.low).unwrap();
    }
    s
}

/// One row per classifier: mean ± std [CI] for each metric.
pub fn aggregate_table(rows: &[(String, AggregateReport)]) -> String {
    let mut s = AggregateReport::table_header();
    s.push('\n');
    for (name, report) in rows {
        s.push_str(&report.table_row(name));
        s.push('\n');
    }
    s
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let mut s = format!("{:>6} | {:>8} | {:>8} | {:>8}\n", "Length", "Accuracy", "AUC-ROC", "F1");
    for r in rows {
        writeln!(
            s,
            "{:>6} | {:>8.2} | {:>8.2} | {:>8.2}",
            r.length, r.report.accuracy.mean, r.report.auc_roc.mean, r.report.f1.mean
        )
        .unwrap();
    }
    s
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("length,accuracy,auc_roc,f1,n_runs\n");
    for r in rows {
        writeln!(
            s,
            "{},{:.6},{:.6},{:.6},{}",
            r.length, r.report.accuracy.mean, r.report.auc_roc.mean, r.report.f1.mean, r.report.runs
        )
        .unwrap();
    }
    s
}

/// Reference vs model High/Low ratios per region, labeled with the
/// reference shot count.
pub fn proportion_table_text(truth: &ProportionTable, model: &ProportionTable) -> String {
    let mut s = format!(
        "{:<18} | {:>9} {:>9} | {:>9} {:>9}\n",
        "Region", "True High", "True Low", "Pred High", "Pred Low"
    );
    for region in FieldRegion::ALL {
        let (Some(t), Some(m)) = (truth.row(region), model.row(region)) else {
            continue;
        };
        let name = format!("{} ({})", region.name(), t.total);
        writeln!(
            s,
            "{:<18} | {:>9.2} {:>9.2} | {:>9.2} {:>9.2}",
            name, t.high_ratio, t.low_ratio, m.high_ratio, m.low_ratio
        )
        .unwrap();
    }
    s
}

pub fn proportion_csv(truth: &ProportionTable, model: &ProportionTable) -> String {
    let mut s = String::from("region,total,true_high,true_low,model_high,model_low\n");
    for region in FieldRegion::ALL {
        if let (Some(t), Some(m)) = (truth.row(region), model.row(region)) {
            writeln!(
                s,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                region.name(),
                t.total,
                t.high_ratio,
                t.low_ratio,
                m.high_ratio,
                m.low_ratio
            )
            .unwrap();
        }
    }
    s
}

/// One compared predictor against the reference labels.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationRow {
    pub name: String,
    /// Percent agreement with reference labels.
    pub accuracy: f64,
    pub distribution_deviation: Option<f64>,
    pub proportion_deviation: Option<f64>,
}

fn opt(v: Option<f64>, width: usize) -> String {
    v.map(|x| format!("{x:>width$.2}")).unwrap_or_else(|| format!("{:>width$}", "-"))
}

pub fn deviation_table(rows: &[DeviationRow]) -> String {
    let mut s = format!(
        "{:<14} | {:>8} | {:>14} | {:>14}\n",
        "Method", "Acc. (%)", "Dist. dev.", "Prop. dev."
    );
    for r in rows {
        writeln!(
            s,
            "{:<14} | {:>8.1} | {} | {}",
            r.name,
            r.accuracy,
            opt(r.distribution_deviation, 14),
            opt(r.proportion_deviation, 14)
        )
        .unwrap();
    }
    s
}

pub fn deviation_csv(rows: &[DeviationRow]) -> String {
    let mut s = String::from("method,accuracy,distribution_deviation,proportion_deviation\n");
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for r in rows {
        writeln!(
            s,
            "{},{:.6},{},{}",
            r.name,
            r.accuracy,
            f(r.distribution_deviation),
            f(r.proportion_deviation)
        )
        .unwrap();
    }
    s
}

pub fn phase_table(rows: &[PhaseRow]) -> String {
    let mut s = format!("{:<10} {:>6} {:>6}\n", "Overs", "Low", "High");
    for r in rows {
        writeln!(s, "{:<10} {:>6} {:>6}", r.label(), r.low, r.high).unwrap();
    }
    s
}

pub fn phase_csv(rows: &[PhaseRow]) -> String {
    let mut s = String::from("overs,low,high\n");
    for r in rows {
        writeln!(s, "{},{},{}", r.label(), r.low, r.high).unwrap();
    }
    s
}

pub fn bowler_table(rows: &[BowlerRow]) -> String {
    let mut s = format!("{:<20} {:>5} {:>5} {:>5} {:>5}\n", "Bowler", "Runs", "High", "Low", "Balls");
    for r in rows {
        writeln!(s, "{:<20} {:>5} {:>5} {:>5} {:>5}", r.bowler, r.runs, r.high, r.low, r.balls).unwrap();
    }
    s
}

pub fn bowler_csv(rows: &[BowlerRow]) -> String {
    let mut s = String::from("bowler,runs,high,low,balls\n");
    for r in rows {
        writeln!(s, "{},{},{},{},{}", r.bowler, r.runs, r.high, r.low, r.balls).unwrap();
    }
    s
}

/// Sidecar listing predictions that found no ball record.
pub fn unmatched_csv(unmatched: &[Prediction]) -> String {
    crate::weak::predictions_to_csv(unmatched)
}
