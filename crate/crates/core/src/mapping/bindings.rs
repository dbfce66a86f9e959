//! Runtime action→command bindings with per-binding gains.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{resolve_action, validate_binding, Cell, CommandName};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BindingError {
    #[error("{action} cannot drive {command}: its DoI cell {cell} is not feasible for {command}")]
    IncompatibleDoI {
        action: String,
        command: CommandName,
        cell: Cell,
    },
    #[error("{action} cannot drive {command}: paper count of cell {cell} does not match")]
    PaperCountMismatch {
        action: String,
        command: CommandName,
        cell: Cell,
    },
    #[error("unsupported command {0}")]
    UnsupportedCommand(String),
    #[error("unknown action {0}")]
    UnknownAction(String),
    #[error("binding config: {0}")]
    Config(String),
}

impl BindingError {
    pub fn code(&self) -> &'static str {
        match self {
            BindingError::IncompatibleDoI { .. } => "IncompatibleDoI",
            BindingError::PaperCountMismatch { .. } => "PaperCountMismatch",
            BindingError::UnsupportedCommand(_) => "UnsupportedCommand",
            BindingError::UnknownAction(_) => "UnknownAction",
            BindingError::Config(_) => "InvalidConfig",
        }
    }

    pub fn cell(&self) -> Option<Cell> {
        match self {
            BindingError::IncompatibleDoI { cell, .. } | BindingError::PaperCountMismatch { cell, .. } => Some(*cell),
            _ => None,
        }
    }
}

/// Continuous-control gains. Each binding carries its own copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Gains {
    /// Pan speed in visible spans per second, per degree of tilt past the deadzone.
    pub tilt_pan_rate: f64,
    pub tilt_deadzone_deg: f64,
    /// Zoom factor for every `translate_zoom_step_m` moved toward the camera.
    pub translate_zoom_factor: f64,
    pub translate_zoom_step_m: f64,
    /// Visible spans panned per unit of sheet drag.
    pub drag_pan_span: f64,
    /// Visible spans panned per flip.
    pub flip_pan_span: f64,
}

impl Default for Gains {
    fn default() -> Self {
        Self {
            tilt_pan_rate: 0.02,
            tilt_deadzone_deg: 15.0,
            translate_zoom_factor: 2.0,
            translate_zoom_step_m: 0.10,
            drag_pan_span: 1.0,
            flip_pan_span: 1.0,
        }
    }
}

impl Gains {
    fn validate(&self) -> Result<(), BindingError> {
        let all = [
            ("tilt_pan_rate", self.tilt_pan_rate),
            ("tilt_deadzone_deg", self.tilt_deadzone_deg),
            ("translate_zoom_factor", self.translate_zoom_factor),
            ("translate_zoom_step_m", self.translate_zoom_step_m),
            ("drag_pan_span", self.drag_pan_span),
            ("flip_pan_span", self.flip_pan_span),
        ];
        for (k, v) in all {
            if !(v.is_finite() && v > 0.0) {
                return Err(BindingError::Config(format!("gain {k} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    /// Bindable action name, see [`super::resolve_action`].
    pub action: String,
    pub gains: Gains,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BindMode {
    /// The action becomes the command's only binding.
    #[default]
    Replace,
    /// The action joins the command's existing bindings.
    Add,
}

/// Per-command bound actions. Every entry passes [`validate_binding`].
#[derive(Debug, Clone, PartialEq)]
pub struct BindingTable {
    bindings: BTreeMap<CommandName, Vec<Binding>>,
}

impl Default for BindingTable {
    fn default() -> Self {
        let mut t = Self::empty();
        let defaults: [(CommandName, &[&str]); 5] = [
            (CommandName::SelectInterval, &["cover"]),
            (CommandName::Zoom, &["pinch", "translate", "fold"]),
            (CommandName::Pan, &["point_drag", "tilt", "flip"]),
            (CommandName::LinkSelect, &["collate", "collocate_point"]),
            (CommandName::Reset, &[]),
        ];
        for (c, actions) in defaults {
            for a in actions {
                t.insert(c, Binding { action: a.to_string(), gains: Gains::default() })
                    .expect("default bindings are feasible");
            }
        }
        t
    }
}

impl BindingTable {
    pub fn empty() -> Self {
        Self {
            bindings: CommandName::ALL
                .into_iter()
                .filter(|c| c.has_chart_semantics())
                .map(|c| (c, Vec::new()))
                .collect(),
        }
    }

    fn insert(&mut self, command: CommandName, binding: Binding) -> Result<(), BindingError> {
        check(command, &binding.action)?;
        binding.gains.validate()?;
        let list = self.bindings.entry(command).or_default();
        match list.iter_mut().find(|b| b.action == binding.action) {
            Some(existing) => *existing = binding,
            None => list.push(binding),
        }
        Ok(())
    }

    pub fn bindings(&self, command: CommandName) -> &[Binding] {
        self.bindings.get(&command).map_or(&[], Vec::as_slice)
    }

    pub fn iter(&self) -> impl Iterator<Item = (CommandName, &Binding)> {
        self.bindings.iter().flat_map(|(c, bs)| bs.iter().map(move |b| (*c, b)))
    }

    /// Commands `action` is bound to.
    pub fn commands_for(&self, action: &str) -> Vec<CommandName> {
        self.iter().filter(|(_, b)| b.action == action).map(|(c, _)| c).collect()
    }

    /// Returns the new table and the actions that lost their binding to
    /// `command`. On error the table is unchanged.
    pub fn rebind(
        &self,
        command: &str,
        action: &str,
        mode: BindMode,
        gains: Option<Gains>,
    ) -> Result<(BindingTable, Vec<String>), BindingError> {
        let command: CommandName = command.parse()?;
        check(command, action)?;
        let gains = match gains {
            Some(g) => g,
            None => self
                .bindings(command)
                .iter()
                .find(|b| b.action == action)
                .map(|b| b.gains.clone())
                .unwrap_or_default(),
        };
        let mut next = self.clone();
        let mut removed = Vec::new();
        if mode == BindMode::Replace {
            let list = next.bindings.entry(command).or_default();
            removed = list.iter().filter(|b| b.action != action).map(|b| b.action.clone()).collect();
            list.retain(|b| b.action == action);
        }
        next.insert(command, Binding { action: action.to_string(), gains })?;
        Ok((next, removed))
    }

    /// Parses `{command: [action | {action, ...gains}]}`. Listed commands
    /// replace the defaults; unlisted ones keep them.
    pub fn from_json(v: &serde_json::Value) -> Result<Self, BindingError> {
        let obj = v
            .as_object()
            .ok_or_else(|| BindingError::Config("bindings must be an object".into()))?;
        let mut t = Self::default();
        for (cmd, list) in obj {
            let command: CommandName = cmd.parse()?;
            let list = list
                .as_array()
                .ok_or_else(|| BindingError::Config(format!("{cmd}: expected a list")))?;
            t.bindings.insert(command, Vec::new());
            for entry in list {
                let binding = match entry {
                    serde_json::Value::String(a) => Binding { action: a.clone(), gains: Gains::default() },
                    serde_json::Value::Object(o) => {
                        let mut o = o.clone();
                        let action = match o.remove("action") {
                            Some(serde_json::Value::String(a)) => a,
                            _ => return Err(BindingError::Config(format!("{cmd}: entry needs an action name"))),
                        };
                        let gains: Gains = serde_json::from_value(serde_json::Value::Object(o))
                            .map_err(|e| BindingError::Config(format!("{cmd}/{action}: {e}")))?;
                        Binding { action, gains }
                    }
                    _ => return Err(BindingError::Config(format!("{cmd}: bad entry {entry}"))),
                };
                if t.bindings(command).iter().any(|b| b.action == binding.action) {
                    return Err(BindingError::Config(format!("{cmd}: {} listed twice", binding.action)));
                }
                t.insert(command, binding)?;
            }
        }
        Ok(t)
    }

    pub fn parse(text: &str) -> Result<Self, BindingError> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| BindingError::Config(e.to_string()))?;
        Self::from_json(&v)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, BindingError> {
        let text = std::fs::read_to_string(path).map_err(|e| BindingError::Config(e.to_string()))?;
        Self::parse(&text)
    }

    /// Config form; gains are written only where they differ from the defaults.
    pub fn to_json(&self) -> serde_json::Value {
        let defaults = serde_json::to_value(Gains::default()).expect("gains serialize");
        let mut out = serde_json::Map::new();
        for (c, list) in &self.bindings {
            let entries = list
                .iter()
                .map(|b| {
                    let g = serde_json::to_value(&b.gains).expect("gains serialize");
                    let mut o = serde_json::Map::new();
                    o.insert("action".into(), serde_json::Value::String(b.action.clone()));
                    for (k, v) in g.as_object().expect("struct") {
                        if defaults.get(k) != Some(v) {
                            o.insert(k.clone(), v.clone());
                        }
                    }
                    if o.len() == 1 {
                        serde_json::Value::String(b.action.clone())
                    } else {
                        serde_json::Value::Object(o)
                    }
                })
                .collect();
            out.insert(c.name().into(), serde_json::Value::Array(entries));
        }
        serde_json::Value::Object(out)
    }
}

fn check(command: CommandName, action: &str) -> Result<(), BindingError> {
    if resolve_action(action).is_none() {
        return Err(BindingError::UnknownAction(action.to_string()));
    }
    validate_binding(action, command.name())?;
    if !command.has_chart_semantics() {
        return Err(BindingError::UnsupportedCommand(command.name().to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replace_reports_removed_actions() {
        let t = BindingTable::default();
        let (t2, removed) = t.rebind("pan", "tilt", BindMode::Replace, None).unwrap();
        assert_eq!(removed, vec!["point_drag".to_string(), "flip".to_string()]);
        assert_eq!(t2.bindings(CommandName::Pan).len(), 1);
        assert_eq!(t2.commands_for("tilt"), vec![CommandName::Pan]);
    }

    #[test]
    fn rejected_rebind_leaves_table() {
        let t = BindingTable::default();
        let err = t.rebind("select_interval", "shake", BindMode::Add, None).unwrap_err();
        assert_eq!(err.code(), "IncompatibleDoI");
        assert_eq!(err.cell().unwrap().to_string(), "(boolean, one)");
        assert_eq!(t, BindingTable::default());
    }

    #[test]
    fn rebind_is_idempotent() {
        let t = BindingTable::default();
        let (a, _) = t.rebind("zoom", "fold", BindMode::Add, None).unwrap();
        let (b, removed) = a.rebind("zoom", "fold", BindMode::Add, None).unwrap();
        assert_eq!(a, b);
        assert!(removed.is_empty());
        let (c, _) = t.rebind("zoom", "fold", BindMode::Replace, None).unwrap();
        let (d, removed) = c.rebind("zoom", "fold", BindMode::Replace, None).unwrap();
        assert_eq!(c, d);
        assert!(removed.is_empty());
    }

    #[test]
    fn feasible_but_unimplemented_command_rejected() {
        let t = BindingTable::default();
        let err = t.rebind("sort", "tilt", BindMode::Add, None).unwrap_err();
        assert_eq!(err, BindingError::UnsupportedCommand("sort".into()));
    }

    #[test]
    fn config_round_trip_with_gains() {
        let text = r#"{"pan": ["point_drag", {"action": "tilt", "tilt_pan_rate": 0.05}]}"#;
        let t = BindingTable::parse(text).unwrap();
        assert_eq!(t.bindings(CommandName::Pan)[1].gains.tilt_pan_rate, 0.05);
        assert_eq!(t.bindings(CommandName::Zoom).len(), 3);
        let again = BindingTable::from_json(&t.to_json()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn config_rejects_infeasible_and_unknown_gain() {
        assert!(BindingTable::parse(r#"{"select_interval": ["shake"]}"#).is_err());
        assert!(BindingTable::parse(r#"{"pan": [{"action": "tilt", "speed": 2}]}"#).is_err());
    }
}
