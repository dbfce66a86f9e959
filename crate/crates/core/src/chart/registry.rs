use std::collections::{BTreeMap, BTreeSet};

use super::view::{apply, pick, pick_at_fraction, Link, Provenance, ViewState};
use super::{ChartError, ChartSpec, Command, DatumSelector};

#[derive(Debug, Clone, PartialEq)]
pub struct ChartEntry {
    pub spec: ChartSpec,
    pub view: ViewState,
}

/// Charts of one session, keyed by the sheet they are printed on.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChartRegistry {
    charts: BTreeMap<String, ChartEntry>,
}

impl ChartRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: &str) -> Option<&ChartEntry> {
        self.charts.get(id)
    }

    pub fn contains(&self, id: &str) -> bool {
        self.charts.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.charts.keys().map(String::as_str)
    }

    /// Adds or replaces a chart and registers its links in both directions,
    /// including links other charts already declared toward it.
    pub fn load(&mut self, spec: ChartSpec) -> Result<(), ChartError> {
        let id = spec.chart_id.clone();
        let mut pairs: BTreeSet<(String, String, String)> = BTreeSet::new();
        for l in &spec.links {
            if l.peer == id {
                return Err(ChartError::InvalidSpec(format!("chart {id} links to itself")));
            }
            pairs.insert((id.clone(), l.peer.clone(), l.field.clone()));
        }
        for (other, e) in &self.charts {
            if *other == id {
                continue;
            }
            for l in e.spec.links.iter().filter(|l| l.peer == id) {
                pairs.insert((other.clone(), id.clone(), l.field.clone()));
            }
        }
        for (a, b, field) in &pairs {
            let peer = if *a == id { b } else { a };
            if let Some(p) = self.charts.get(peer).map(|e| &e.spec) {
                if p.data.column(field).is_none() {
                    return Err(ChartError::InvalidSpec(format!("link field {field} missing from chart {peer}")));
                }
            }
            if spec.data.column(field).is_none() {
                return Err(ChartError::InvalidSpec(format!("link field {field} missing from chart {id}")));
            }
        }

        for e in self.charts.values_mut() {
            e.view.links.retain(|l| l.peer != id);
        }
        let mut view = ViewState::initial(&spec);
        self.charts.insert(id.clone(), ChartEntry { spec, view: view.clone() });
        for (a, b, field) in pairs {
            let peer = if a == id { b } else { a };
            if let Some(e) = self.charts.get_mut(&peer) {
                e.view.links.insert(Link { peer: id.clone(), field: field.clone() });
                view.links.insert(Link { peer, field });
            }
        }
        self.charts.get_mut(&id).expect("just inserted").view = view;
        Ok(())
    }

    pub fn linked(&self, a: &str, b: &str) -> bool {
        self.charts.get(a).map_or(false, |e| e.view.link_to(b).is_some())
    }

    /// Applies `cmd` to `chart_id`; returns the ids of every chart whose view
    /// changed, in id order.
    pub fn apply(&mut self, chart_id: &str, cmd: &Command) -> Result<Vec<String>, ChartError> {
        cmd.validate()?;
        if let Command::LinkSelect { source, target, datum } = cmd {
            return self.link_select(source, target, datum);
        }
        let entry = self.charts.get(chart_id).ok_or_else(|| ChartError::UnknownChart(chart_id.to_string()))?;
        let next = apply(&entry.spec, &entry.view, cmd)?;
        let mut changed = BTreeSet::new();
        let selection_replaced = matches!(cmd, Command::SelectInterval { .. } | Command::Reset);
        if next != entry.view {
            changed.insert(chart_id.to_string());
        }
        self.charts.get_mut(chart_id).expect("present").view = next;
        if selection_replaced {
            // A cleared or replaced source selection clears what it drove.
            let peers: Vec<String> = self
                .charts
                .iter()
                .filter(|(_, e)| matches!(&e.view.provenance, Some(Provenance::Link { peer, .. }) if peer == chart_id))
                .map(|(id, _)| id.clone())
                .collect();
            for p in peers {
                let v = &mut self.charts.get_mut(&p).expect("present").view;
                v.selection.clear();
                v.provenance = None;
                changed.insert(p);
            }
        }
        Ok(changed.into_iter().collect())
    }

    fn link_select(&mut self, source: &str, target: &str, datum: &DatumSelector) -> Result<Vec<String>, ChartError> {
        let src = self.charts.get(source).ok_or_else(|| ChartError::UnknownChart(source.to_string()))?;
        if !self.charts.contains_key(target) {
            return Err(ChartError::UnknownChart(target.to_string()));
        }
        let link = src
            .view
            .link_to(target)
            .cloned()
            .ok_or_else(|| ChartError::UnlinkedPair(source.to_string(), target.to_string()))?;
        let row = match datum {
            DatumSelector::AtFraction { axis, fraction } => pick_at_fraction(&src.spec, &src.view, *axis, *fraction)?,
            DatumSelector::NearestUv { uv } => pick(&src.spec, &src.view, *uv),
            DatumSelector::Row { id } => Some(*id).filter(|r| *r < src.spec.data.len()),
        };
        let Some(row) = row else {
            return Err(ChartError::InvalidParameter(format!("no datum on chart {source} for {datum:?}")));
        };
        let col = src.spec.data.column_index(&link.field).expect("validated at load");
        let key = src.spec.data.get(row, col).expect("row in range").to_string();

        let mut changed = Vec::new();
        for (id, peer) in [(source, target), (target, source)] {
            let e = self.charts.get_mut(id).expect("present");
            let c = e.spec.data.column_index(&link.field).expect("validated at load");
            let selection: BTreeSet<usize> = e
                .spec
                .data
                .ids()
                .filter(|&r| e.spec.data.get(r, c).map_or(false, |v| v.to_string() == key))
                .collect();
            let provenance = Some(Provenance::Link {
                peer: peer.to_string(),
                field: link.field.clone(),
                key: key.clone(),
            });
            if e.view.selection != selection || e.view.provenance != provenance {
                e.view.selection = selection;
                e.view.provenance = provenance;
                changed.push(id.to_string());
            }
        }
        changed.sort();
        Ok(changed)
    }

    /// Applies a window command to `origin` instead of the current view and
    /// installs only the resulting windows. Selection and links are kept.
    pub fn apply_windows_from(&mut self, chart_id: &str, origin: &ViewState, cmd: &Command) -> Result<Vec<String>, ChartError> {
        if !matches!(cmd, Command::Zoom { .. } | Command::ZoomBy { .. } | Command::Pan { .. }) {
            return Err(ChartError::InvalidParameter(format!("{} is not a window command", cmd.name())));
        }
        let entry = self.charts.get_mut(chart_id).ok_or_else(|| ChartError::UnknownChart(chart_id.to_string()))?;
        let next = apply(&entry.spec, origin, cmd)?;
        if next.windows == entry.view.windows {
            return Ok(Vec::new());
        }
        entry.view.windows = next.windows;
        Ok(vec![chart_id.to_string()])
    }

    pub fn reset(&mut self, chart_id: &str) -> Result<Vec<String>, ChartError> {
        self.apply(chart_id, &Command::Reset)
    }
}
