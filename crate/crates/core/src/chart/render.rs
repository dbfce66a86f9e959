use serde::Serialize;

use super::table::{days_to_date, DATE_FORMAT};
use super::view::{Link, Provenance, ViewState};
use super::{Axis, ChartSpec, Encodings, Mark, Scale, ScaleType};

#[derive(Serialize)]
struct RenderedScale {
    axis: Axis,
    field: String,
    #[serde(rename = "type")]
    kind: ScaleType,
    domain: [f64; 2],
    base_domain: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    domain_label: Option<[String; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    categories: Option<Vec<String>>,
}

#[derive(Serialize)]
struct RenderedMark {
    id: usize,
    x: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    y: Option<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    color: Option<serde_json::Value>,
    in_view: bool,
    selected: bool,
}

#[derive(Serialize)]
struct RenderedSelection<'a> {
    ids: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<&'a Provenance>,
}

#[derive(Serialize)]
struct RenderedChart<'a> {
    chart_id: &'a str,
    mark: Mark,
    encodings: &'a Encodings,
    scales: Vec<RenderedScale>,
    marks: Vec<RenderedMark>,
    selection: RenderedSelection<'a>,
    links: Vec<&'a Link>,
}

/// Self-contained drawable record of a chart's current state. Field order is
/// fixed so encodings are byte-stable.
pub fn render_spec(spec: &ChartSpec, view: &ViewState) -> serde_json::Value {
    let scales = spec
        .scales
        .iter()
        .map(|(axis, scale)| {
            let w = view.windows[axis];
            let base = scale.base();
            let label = |x: f64| days_to_date(x).map(|d| d.format(DATE_FORMAT).to_string()).unwrap_or_default();
            RenderedScale {
                axis: *axis,
                field: spec.encoding(*axis).expect("scaled axes are encoded").field.clone(),
                kind: scale.kind(),
                domain: [w.lo, w.hi],
                base_domain: [base.lo, base.hi],
                domain_label: (scale.kind() == ScaleType::Temporal).then(|| [label(w.lo), label(w.hi)]),
                categories: match scale {
                    Scale::Band { categories } => Some(categories.clone()),
                    Scale::Continuous { .. } => None,
                },
            }
        })
        .collect();

    let cell = |field: &str, r: usize| {
        let c = spec.data.column_index(field).expect("validated encoding");
        spec.data.get(r, c).expect("row in range").to_json()
    };
    let marks = spec
        .data
        .ids()
        .map(|r| {
            let in_view = spec.scales.iter().all(|(axis, _)| {
                let w = view.windows[axis];
                spec.position(*axis, r).map_or(false, |x| x >= w.lo && x <= w.hi)
            });
            RenderedMark {
                id: r,
                x: cell(&spec.encodings.x.field, r),
                y: spec.encodings.y.as_ref().map(|e| cell(&e.field, r)),
                color: spec.encodings.color.as_ref().map(|e| cell(&e.field, r)),
                in_view,
                selected: view.selection.contains(&r),
            }
        })
        .collect();

    let rendered = RenderedChart {
        chart_id: &spec.chart_id,
        mark: spec.mark,
        encodings: &spec.encodings,
        scales,
        marks,
        selection: RenderedSelection {
            ids: view.selection.iter().copied().collect(),
            provenance: view.provenance.as_ref(),
        },
        links: view.links.iter().collect(),
    };
    serde_json::to_value(rendered).expect("rendered chart serializes")
}
