//! The action/command design space as data: DoI classes, paper counts, the
//! populated feasibility cells, and binding validation.

mod bindings;
mod translate;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::recognizer::Action;

pub use bindings::{BindMode, Binding, BindingError, BindingTable, Gains};
pub use translate::{translate_event, Basis, ChartContext, Diagnostic, TargetedCommand, Translation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoiClass {
    Boolean,
    PositionArea,
    DirectionValue,
    FreeExpression,
}

impl DoiClass {
    pub const ALL: [DoiClass; 4] = [
        DoiClass::Boolean,
        DoiClass::PositionArea,
        DoiClass::DirectionValue,
        DoiClass::FreeExpression,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DoiClass::Boolean => "boolean",
            DoiClass::PositionArea => "position_area",
            DoiClass::DirectionValue => "direction_value",
            DoiClass::FreeExpression => "free_expression",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PaperCount {
    One,
    Many,
}

impl PaperCount {
    pub fn name(self) -> &'static str {
        match self {
            PaperCount::One => "one",
            PaperCount::Many => "many",
        }
    }
}

/// One cell of the feasibility table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub doi: DoiClass,
    pub paper_count: PaperCount,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.doi.name(), self.paper_count.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActionDescriptor {
    pub name: &'static str,
    pub doi: DoiClass,
    pub paper_count: PaperCount,
    /// Detector backing this action, if any.
    pub detector: Option<Action>,
}

impl ActionDescriptor {
    pub fn cell(&self) -> Cell {
        Cell {
            doi: self.doi,
            paper_count: self.paper_count,
        }
    }
}

const fn act(name: &'static str, doi: DoiClass, paper_count: PaperCount, detector: Option<Action>) -> ActionDescriptor {
    ActionDescriptor {
        name,
        doi,
        paper_count,
        detector,
    }
}

use DoiClass::{Boolean as B, DirectionValue as DV, FreeExpression as FE, PositionArea as PA};
use PaperCount::{Many, One};

/// The eighteen paper actions.
pub const ACTIONS: [ActionDescriptor; 18] = [
    act("shake", B, One, None),
    act("hold", B, One, None),
    act("pin", B, One, None),
    act("staple", B, Many, None),
    act("cover", PA, One, Some(Action::Cover)),
    act("point", PA, One, Some(Action::Point)),
    act("rub", PA, One, None),
    act("collate", PA, Many, Some(Action::Collate)),
    act("collocate", PA, Many, Some(Action::Collocate)),
    act("flip", DV, One, Some(Action::Flip)),
    act("tilt", DV, One, Some(Action::Tilt)),
    act("rotate", DV, One, None),
    act("fold", DV, One, Some(Action::Fold)),
    act("translate", DV, One, Some(Action::Translate)),
    act("split", DV, One, None),
    act("point_drag", DV, One, Some(Action::PointDrag)),
    act("toolbox", FE, One, None),
    act("sketch", FE, One, None),
];

pub fn action_descriptor(name: &str) -> Option<&'static ActionDescriptor> {
    ACTIONS.iter().find(|a| a.name == name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandName {
    SelectInterval,
    Zoom,
    Pan,
    LinkSelect,
    Reset,
    Filter,
    Derive,
    Change,
    Sort,
    Organize,
}

impl CommandName {
    pub const ALL: [CommandName; 10] = [
        CommandName::SelectInterval,
        CommandName::Zoom,
        CommandName::Pan,
        CommandName::LinkSelect,
        CommandName::Reset,
        CommandName::Filter,
        CommandName::Derive,
        CommandName::Change,
        CommandName::Sort,
        CommandName::Organize,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CommandName::SelectInterval => "select_interval",
            CommandName::Zoom => "zoom",
            CommandName::Pan => "pan",
            CommandName::LinkSelect => "link_select",
            CommandName::Reset => "reset",
            CommandName::Filter => "filter",
            CommandName::Derive => "derive",
            CommandName::Change => "change",
            CommandName::Sort => "sort",
            CommandName::Organize => "organize",
        }
    }

    /// Whether the chart model implements this command.
    pub fn has_chart_semantics(self) -> bool {
        matches!(
            self,
            CommandName::SelectInterval | CommandName::Zoom | CommandName::Pan | CommandName::LinkSelect | CommandName::Reset
        )
    }

    pub fn descriptor(self) -> CommandDescriptor {
        let cells: Vec<Cell> = FEASIBLE
            .iter()
            .filter(|(c, _)| *c == self)
            .map(|(_, cell)| *cell)
            .collect();
        let mut accepted_doi: Vec<DoiClass> = cells.iter().map(|c| c.doi).collect();
        accepted_doi.sort();
        accepted_doi.dedup();
        let paper_count = if cells.iter().all(|c| c.paper_count == Many) { Many } else { One };
        CommandDescriptor {
            name: self,
            accepted_doi,
            paper_count,
            cells,
        }
    }
}

impl fmt::Display for CommandName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CommandName {
    type Err = BindingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        CommandName::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| BindingError::UnsupportedCommand(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandDescriptor {
    pub name: CommandName,
    pub accepted_doi: Vec<DoiClass>,
    /// `Many` when every populated cell involves several sheets.
    pub paper_count: PaperCount,
    pub cells: Vec<Cell>,
}

const fn cell(doi: DoiClass, paper_count: PaperCount) -> Cell {
    Cell { doi, paper_count }
}

/// Populated (command, DoI, paper count) cells of the design space.
pub const FEASIBLE: [(CommandName, Cell); 18] = [
    (CommandName::Filter, cell(B, One)),
    (CommandName::Filter, cell(PA, One)),
    (CommandName::Filter, cell(DV, One)),
    (CommandName::Filter, cell(FE, One)),
    (CommandName::SelectInterval, cell(PA, One)),
    (CommandName::SelectInterval, cell(DV, One)),
    (CommandName::Zoom, cell(DV, One)),
    (CommandName::Zoom, cell(PA, Many)),
    (CommandName::Pan, cell(DV, One)),
    (CommandName::Pan, cell(PA, Many)),
    (CommandName::LinkSelect, cell(PA, Many)),
    (CommandName::Reset, cell(B, One)),
    (CommandName::Derive, cell(B, Many)),
    (CommandName::Derive, cell(FE, One)),
    (CommandName::Change, cell(B, One)),
    (CommandName::Change, cell(FE, One)),
    (CommandName::Sort, cell(DV, One)),
    (CommandName::Organize, cell(PA, Many)),
];

pub fn cell_populated(command: CommandName, c: Cell) -> bool {
    FEASIBLE.iter().any(|(cmd, x)| *cmd == command && *x == c)
}

/// A bindable action name: one of the eighteen actions, `pinch` (a two-finger
/// point&drag), or `collocate_point` (point while sheets are collocated).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BindAction {
    pub name: &'static str,
    pub descriptor: &'static ActionDescriptor,
    pub detector: Option<Action>,
    /// Supplies a multi-sheet context to a single-sheet action.
    pub multi_sheet: bool,
}

pub const BIND_ALIASES: [&str; 2] = ["pinch", "collocate_point"];

pub fn resolve_action(name: &str) -> Option<BindAction> {
    match name {
        "pinch" => Some(BindAction {
            name: "pinch",
            descriptor: action_descriptor("point_drag")?,
            detector: Some(Action::Pinch),
            multi_sheet: false,
        }),
        "collocate_point" => Some(BindAction {
            name: "collocate_point",
            descriptor: action_descriptor("point")?,
            detector: Some(Action::Point),
            multi_sheet: true,
        }),
        _ => {
            let d = ACTIONS.iter().find(|a| a.name == name)?;
            Some(BindAction {
                name: d.name,
                descriptor: d,
                detector: d.detector,
                multi_sheet: false,
            })
        }
    }
}

/// Feasibility check for binding `action` to `command`.
pub fn validate_binding(action: &str, command: &str) -> Result<(), BindingError> {
    let command: CommandName = command.parse()?;
    let bind = resolve_action(action).ok_or_else(|| BindingError::UnknownAction(action.to_string()))?;
    let own = bind.descriptor.cell();
    if cell_populated(command, own) {
        return Ok(());
    }
    let many = Cell {
        doi: own.doi,
        paper_count: Many,
    };
    if bind.multi_sheet && cell_populated(command, many) {
        return Ok(());
    }
    let desc = command.descriptor();
    let cell = if bind.multi_sheet { many } else { own };
    if !desc.accepted_doi.contains(&own.doi) {
        return Err(BindingError::IncompatibleDoI {
            action: action.to_string(),
            command,
            cell,
        });
    }
    Err(BindingError::PaperCountMismatch {
        action: action.to_string(),
        command,
        cell,
    })
}

/// The eleven implemented interactions.
pub const TABLE1: [(&str, CommandName); 11] = [
    ("point_drag", CommandName::SelectInterval),
    ("cover", CommandName::SelectInterval),
    ("fold", CommandName::SelectInterval),
    ("pinch", CommandName::Zoom),
    ("translate", CommandName::Zoom),
    ("fold", CommandName::Zoom),
    ("point_drag", CommandName::Pan),
    ("tilt", CommandName::Pan),
    ("flip", CommandName::Pan),
    ("collate", CommandName::LinkSelect),
    ("collocate_point", CommandName::LinkSelect),
];
