//! Scaling-curve emission: average and per-task score trajectories over
//! increasing training-data fractions, as CSV plus a rendered SVG chart.

use super::records::TaskName;
use super::report::ScoreReport;
use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCurve {
    pub csv: String,
    pub svg: String,
}

const SVG_WIDTH: f64 = 720.0;
const SVG_HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

const SERIES_COLORS: [&str; 9] = [
    "#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
    "#7f7f7f",
];

fn validate_points(points: &[(f64, ScoreReport)]) -> Result<(), EvalError> {
    if points.is_empty() {
        return Err(EvalError::InputError("no scaling points".into()));
    }
    for (fraction, _) in points {
        if !(*fraction > 0.0 && *fraction <= 1.0) {
            return Err(EvalError::InputError(format!(
                "fraction {fraction} outside (0, 1]"
            )));
        }
    }
    for pair in points.windows(2) {
        if pair[1].0 == pair[0].0 {
            return Err(EvalError::InputError(format!(
                "duplicate fraction {}",
                pair[0].0
            )));
        }
        if pair[1].0 < pair[0].0 {
            return Err(EvalError::InputError(
                "fractions must be strictly increasing".into(),
            ));
        }
    }
    Ok(())
}

fn x_position(fraction: f64) -> f64 {
    MARGIN + fraction * (SVG_WIDTH - 2.0 * MARGIN)
}

fn y_position(score: f64) -> f64 {
    // score axis fixed to 0..100
    SVG_HEIGHT - MARGIN - (score / 100.0) * (SVG_HEIGHT - 2.0 * MARGIN)
}

fn render_series(svg: &mut String, name: &str, color: &str, points: &[(f64, f64)]) {
    if points.len() == 1 {
        let (x, y) = (x_position(points[0].0), y_position(points[0].1));
        svg.push_str(&format!(
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"><title>{name}</title></circle>\n"
        ));
        return;
    }
    let path: Vec<String> = points
        .iter()
        .map(|(f, s)| format!("{:.2},{:.2}", x_position(*f), y_position(*s)))
        .collect();
    svg.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"><title>{name}</title></polyline>\n",
        path.join(" ")
    ));
}

/// Emit average and per-task curves. Fractions must be strictly increasing
/// in (0, 1]; a single point renders as a degenerate one-point series.
pub fn emit_scaling_curve(points: &[(f64, ScoreReport)]) -> Result<ScalingCurve, EvalError> {
    validate_points(points)?;

    let mut csv = String::from("fraction,average");
    for task in TaskName::ALL {
        csv.push(',');
        csv.push_str(task.as_str());
    }
    csv.push('\n');
    for (fraction, report) in points {
        csv.push_str(&fraction.to_string());
        csv.push(',');
        csv.push_str(&report.average.to_string());
        for task in TaskName::ALL {
            csv.push(',');
            match report.score_for(task) {
                Some(score) => csv.push_str(&score.to_string()),
                None => csv.push_str("absent"),
            }
        }
        csv.push('\n');
    }

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_WIDTH}\" height=\"{SVG_HEIGHT}\" viewBox=\"0 0 {SVG_WIDTH} {SVG_HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // axes
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"#333\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"#333\"/>\n",
        m = MARGIN,
        b = SVG_HEIGHT - MARGIN,
        r = SVG_WIDTH - MARGIN,
        t = MARGIN,
    ));
    for tick in [0.0, 25.0, 50.0, 75.0, 100.0] {
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" text-anchor=\"end\">{tick}</text>\n",
            MARGIN - 6.0,
            y_position(tick) + 3.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">training data fraction</text>\n",
        SVG_WIDTH / 2.0,
        SVG_HEIGHT - 12.0
    ));

    let average_series: Vec<(f64, f64)> = points.iter().map(|(f, r)| (*f, r.average)).collect();
    render_series(&mut svg, "average", SERIES_COLORS[0], &average_series);
    for (i, task) in TaskName::ALL.iter().enumerate() {
        let series: Vec<(f64, f64)> = points
            .iter()
            .filter_map(|(f, r)| r.score_for(*task).map(|s| (*f, s)))
            .collect();
        if !series.is_empty() {
            render_series(&mut svg, task.as_str(), SERIES_COLORS[i + 1], &series);
        }
    }
    // legend
    let mut legend_y = MARGIN + 4.0;
    for (i, name) in std::iter::once("average")
        .chain(TaskName::ALL.iter().map(|t| t.as_str()))
        .enumerate()
    {
        svg.push_str(&format!(
            "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"10\" height=\"3\" fill=\"{}\"/><text x=\"{:.2}\" y=\"{:.2}\" font-size=\"9\">{}</text>\n",
            SVG_WIDTH - MARGIN + 4.0,
            legend_y,
            SERIES_COLORS[i],
            SVG_WIDTH - MARGIN + 18.0,
            legend_y + 4.0,
            name
        ));
        legend_y += 12.0;
    }
    svg.push_str("</svg>\n");

    Ok(ScalingCurve { csv, svg })
}
