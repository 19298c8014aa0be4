//! Report artifacts: calibration table CSVs, OD matrix CSVs, trip
//! observation JSON, and the per-trip comparison plot as SVG.
//!
//! Everything here renders to strings with fixed formatting so repeated
//! runs are byte-identical.

use crate::calibration::{CalibrationRecord, FilterComparison, RouteSummary};
use crate::estimator::{OdMatrix, TripObservation};

fn fmt_metric(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_metric).unwrap_or_default()
}

/// `trip_id,route_id,case,min_rssi,include_random,mae,median_ae,std_ae,rmse,r2`
pub fn records_csv(records: &[CalibrationRecord]) -> String {
    let mut out =
        String::from("trip_id,route_id,case,min_rssi,include_random,mae,median_ae,std_ae,rmse,r2\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.trip_id,
            r.route_id,
            r.case.as_str(),
            r.params.min_rssi,
            r.params.include_random,
            fmt_metric(r.metrics.mae),
            fmt_metric(r.metrics.median_ae),
            fmt_metric(r.metrics.std_ae),
            fmt_metric(r.metrics.rmse),
            fmt_opt(r.metrics.r2),
        ));
    }
    out
}

/// Share of the modal best minimum RSSI per route: `route,min_rssi,share`.
pub fn modal_csv(rows: &[(String, i8, f64)]) -> String {
    let mut out = String::from("route,min_rssi,share\n");
    for (route, rssi, share) in rows {
        out.push_str(&format!("{route},{rssi},{share:.2}\n"));
    }
    out
}

/// RMSE-minimizing arm and rank-test p-value: `route,case,wilcox_pval`.
pub fn ranktest_csv(comparisons: &[FilterComparison]) -> String {
    let mut out = String::from("route,case,wilcox_pval\n");
    for c in comparisons {
        out.push_str(&format!(
            "{},{},{:.6e}\n",
            c.route_id, c.winner_label, c.test.p_value
        ));
    }
    out
}

/// R2 confidence intervals per route and case:
/// `route,case,lower_ci,upper_ci,count,mean,std`.
pub fn summary_r2_csv(summaries: &[RouteSummary]) -> String {
    let mut out = String::from("route,case,lower_ci,upper_ci,count,mean,std\n");
    for s in summaries {
        let label = s.case.label(s.params.include_random);
        match &s.r2 {
            Some(r2) => out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.route_id,
                label,
                fmt_metric(r2.ci_lower),
                fmt_metric(r2.ci_upper),
                r2.count,
                fmt_metric(r2.mean),
                fmt_metric(r2.std),
            )),
            None => out.push_str(&format!("{},{},,,0,,\n", s.route_id, label)),
        }
    }
    out
}

/// Mean results per route and case: `route,case,mae,rmse,r2`.
pub fn summary_means_csv(summaries: &[RouteSummary]) -> String {
    let mut out = String::from("route,case,mae,rmse,r2\n");
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            s.route_id,
            s.case.label(s.params.include_random),
            fmt_metric(s.mae.mean),
            fmt_metric(s.rmse.mean),
            fmt_opt(s.r2.as_ref().map(|r| r.mean)),
        ));
    }
    out
}

/// Square OD matrix CSV: first row and column are stop ids.
pub fn od_csv(matrix: &OdMatrix) -> String {
    let mut out = String::from("stop");
    for stop in &matrix.stop_ids {
        out.push(',');
        out.push_str(stop);
    }
    out.push('\n');
    for (r, row) in matrix.counts.iter().enumerate() {
        out.push_str(&matrix.stop_ids[r]);
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn observation_json(observation: &TripObservation) -> String {
    let mut text =
        serde_json::to_string_pretty(observation).expect("observation serializes");
    text.push('\n');
    text
}

pub fn observation_from_json(text: &str) -> Result<TripObservation, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

/// Per-trip comparison plot: ticket validations b_t and Wi-Fi entries i_t
/// as two polylines over the stop sequence.
pub fn trip_plot_svg(observation: &TripObservation) -> String {
    const WIDTH: f64 = 860.0;
    const HEIGHT: f64 = 420.0;
    const MARGIN_LEFT: f64 = 56.0;
    const MARGIN_RIGHT: f64 = 24.0;
    const MARGIN_TOP: f64 = 40.0;
    const MARGIN_BOTTOM: f64 = 84.0;

    let n = observation.stops.len().max(1);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let max_count = observation
        .b
        .iter()
        .chain(observation.i.iter())
        .copied()
        .max()
        .unwrap_or(0)
        .max(1);

    let x_at = |idx: usize| {
        if n == 1 {
            MARGIN_LEFT + plot_w / 2.0
        } else {
            MARGIN_LEFT + plot_w * idx as f64 / (n - 1) as f64
        }
    };
    let y_at = |count: u32| MARGIN_TOP + plot_h * (1.0 - count as f64 / max_count as f64);
    let polyline = |values: &[u32]| {
        values
            .iter()
            .enumerate()
            .map(|(idx, &v)| format!("{:.1},{:.1}", x_at(idx), y_at(v)))
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str(&format!(
        "  <title>Entries per stop, trip {}</title>\n",
        observation.trip_id
    ));
    svg.push_str("  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\">Trip {} \
         (route {}): ticket validations vs Wi-Fi entries</text>\n",
        MARGIN_LEFT, observation.trip_id, observation.route_id
    ));

    // Axes
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{t:.1}\" x2=\"{l:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        t = MARGIN_TOP,
        b = MARGIN_TOP + plot_h
    ));
    svg.push_str(&format!(
        "  <line x1=\"{l:.1}\" y1=\"{b:.1}\" x2=\"{r:.1}\" y2=\"{b:.1}\" stroke=\"black\"/>\n",
        l = MARGIN_LEFT,
        r = MARGIN_LEFT + plot_w,
        b = MARGIN_TOP + plot_h
    ));

    // Y ticks
    let step = (max_count as f64 / 5.0).ceil().max(1.0) as u32;
    let mut tick = 0u32;
    while tick <= max_count {
        let y = y_at(tick);
        svg.push_str(&format!(
            "  <line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#cccccc\"/>\n",
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        ));
        svg.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\">{tick}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
        tick += step;
    }

    // X labels: stop ids
    for (idx, stop) in observation.stops.iter().enumerate() {
        let x = x_at(idx);
        svg.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"11\" \
             text-anchor=\"end\" transform=\"rotate(-45 {x:.1} {:.1})\">{stop}</text>\n",
            MARGIN_TOP + plot_h + 16.0,
            MARGIN_TOP + plot_h + 16.0
        ));
    }

    // Series: b in blue, i in orange.
    svg.push_str(&format!(
        "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"{}\"/>\n",
        polyline(&observation.b)
    ));
    svg.push_str(&format!(
        "  <polyline fill=\"none\" stroke=\"#ff9900\" stroke-width=\"2\" points=\"{}\"/>\n",
        polyline(&observation.i)
    ));

    // Legend
    let legend_y = MARGIN_TOP - 12.0;
    svg.push_str(&format!(
        "  <line x1=\"{x:.1}\" y1=\"{legend_y:.1}\" x2=\"{x2:.1}\" y2=\"{legend_y:.1}\" \
         stroke=\"#1f77b4\" stroke-width=\"2\"/>\n  <text x=\"{tx:.1}\" y=\"{ty:.1}\" \
         font-family=\"sans-serif\" font-size=\"12\">tickets b</text>\n",
        x = WIDTH - 300.0,
        x2 = WIDTH - 270.0,
        tx = WIDTH - 264.0,
        ty = legend_y + 4.0
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x:.1}\" y1=\"{legend_y:.1}\" x2=\"{x2:.1}\" y2=\"{legend_y:.1}\" \
         stroke=\"#ff9900\" stroke-width=\"2\"/>\n  <text x=\"{tx:.1}\" y=\"{ty:.1}\" \
         font-family=\"sans-serif\" font-size=\"12\">wifi entries i</text>\n",
        x = WIDTH - 170.0,
        x2 = WIDTH - 140.0,
        tx = WIDTH - 134.0,
        ty = legend_y + 4.0
    ));

    svg.push_str("</svg>\n");
    svg
}
