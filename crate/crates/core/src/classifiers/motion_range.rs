use crate::preprocess::FeatureSeries;

/// Per-feature `max − min` over time.
pub fn motion_range_features(series: &FeatureSeries) -> Vec<f64> {
    let nf = series.features();
    let mut lo = series.row(0).to_vec();
    let mut hi = lo.clone();
    for t in 1..series.steps() {
        for (f, &v) in series.row(t).iter().enumerate() {
            if v < lo[f] {
                lo[f] = v;
            }
            if v > hi[f] {
                hi[f] = v;
            }
        }
    }
    (0..nf).map(|f| hi[f] - lo[f]).collect()
}
