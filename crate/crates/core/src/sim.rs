//! Deterministic scene synthesis: canonical gesture scripts, pose jitter,
//! and randomized multi-gesture sessions.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Unit, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::geometry::{Pose, SheetGeometry, Uv};
use crate::recognizer::{Action, PalmOrientation};
use crate::scene::{Crease, CreaseAxis, FlapSide, HandFrame, HandId, Joint, Panel, SceneFrame};

pub const FRAME_HZ: u64 = 60;
/// Fingertip height above the sheet while touching.
pub const TOUCH_HEIGHT: f64 = 0.003;
/// Height of a hand waiting above the desk.
pub const HOVER_HEIGHT: f64 = 0.12;

pub fn frame_time_ms(i: u64) -> u64 {
    (i * 1000 + FRAME_HZ / 2) / FRAME_HZ
}

/// Camera half a meter above the A4 sheet's center, looking straight down.
pub fn default_camera() -> Pose {
    Pose::from_translation(0.105, 0.1485, 0.6)
}

/// Linear blend, `t` clamped to [0,1].
pub fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t.clamp(0.0, 1.0)
}

/// Progress of frame `i` through the span `[start, start+len]`.
pub fn ramp(i: usize, start: usize, len: usize) -> f64 {
    if i <= start {
        0.0
    } else if len == 0 || i >= start + len {
        1.0
    } else {
        (i - start) as f64 / len as f64
    }
}

/// A sheet in the scene: base pose plus an optional folded flap.
#[derive(Debug, Clone, PartialEq)]
pub struct SimSheet {
    pub id: String,
    pub pose: Pose,
    pub geom: SheetGeometry,
    /// Crease and current dihedral (radians, π = flat).
    pub fold: Option<(Crease, f64)>,
}

impl SimSheet {
    pub fn a4(id: &str, pose: Pose) -> Self {
        Self {
            id: id.to_string(),
            pose,
            geom: SheetGeometry::A4,
            fold: None,
        }
    }

    /// World point above sheet coordinate `uv` at `height` along the normal.
    pub fn point(&self, uv: Uv, height: f64) -> Vector3<f64> {
        let mut local = self.geom.local_point(uv);
        local.z = height;
        self.pose.transform_point(&local)
    }

    pub fn panels(&self) -> Vec<Panel> {
        let mut out = vec![Panel::base(self.id.clone(), self.pose, self.geom)];
        if let Some((crease, dihedral)) = self.fold {
            out.push(Panel::flap(self.id.clone(), flap_pose(&self.pose, &self.geom, &crease, dihedral), self.geom, crease));
        }
        out
    }
}

/// Flap panel pose: the whole-sheet frame turned about the crease line so the
/// flap rises off the face side.
pub fn flap_pose(base: &Pose, geom: &SheetGeometry, crease: &Crease, dihedral: f64) -> Pose {
    let turn = PI - dihedral;
    let (pivot, axis, sign) = match (crease.axis, crease.side) {
        (CreaseAxis::U, side) => (
            Vector3::new(crease.at * geom.width, 0.0, 0.0),
            Vector3::y(),
            if side == FlapSide::High { -1.0 } else { 1.0 },
        ),
        (CreaseAxis::V, side) => (
            Vector3::new(0.0, crease.at * geom.height, 0.0),
            Vector3::x(),
            if side == FlapSide::High { 1.0 } else { -1.0 },
        ),
    };
    let world_pivot = base.transform_point(&pivot);
    let world_axis = base.orientation * axis;
    base.rotated_about(&world_pivot, &world_axis, sign * turn)
}

fn hand(id: HandId, joints: [(Joint, Vector3<f64>); 6], palm_normal: Vector3<f64>) -> HandFrame {
    HandFrame {
        hand: id,
        joints: joints.into_iter().collect::<BTreeMap<_, _>>(),
        palm_normal: palm_normal.normalize(),
    }
}

/// Index finger at `tip`; the other digits curled above it.
pub fn pointing_hand(id: HandId, tip: Vector3<f64>, normal: Vector3<f64>) -> HandFrame {
    let up = normal.normalize();
    let side = if id == HandId::Right { -1.0 } else { 1.0 };
    let off = |dx: f64, dy: f64, dz: f64| tip + Vector3::new(side * dx, dy, 0.0) + up * dz;
    hand(
        id,
        [
            (Joint::ThumbTip, off(0.035, -0.03, 0.035)),
            (Joint::IndexTip, tip),
            (Joint::MiddleTip, off(-0.02, -0.04, 0.04)),
            (Joint::RingTip, off(-0.035, -0.045, 0.04)),
            (Joint::LittleTip, off(-0.05, -0.05, 0.04)),
            (Joint::PalmCenter, off(-0.02, -0.08, 0.06)),
        ],
        -up,
    )
}

/// Thumb and index at the given points, other digits curled up.
pub fn pinching_hand(id: HandId, thumb: Vector3<f64>, index: Vector3<f64>, normal: Vector3<f64>) -> HandFrame {
    let up = normal.normalize();
    let mid = (thumb + index) / 2.0;
    hand(
        id,
        [
            (Joint::ThumbTip, thumb),
            (Joint::IndexTip, index),
            (Joint::MiddleTip, mid + Vector3::new(0.0, -0.04, 0.0) + up * 0.045),
            (Joint::RingTip, mid + Vector3::new(0.01, -0.05, 0.0) + up * 0.045),
            (Joint::LittleTip, mid + Vector3::new(0.02, -0.055, 0.0) + up * 0.045),
            (Joint::PalmCenter, mid + Vector3::new(0.0, -0.08, 0.0) + up * 0.06),
        ],
        -up,
    )
}

/// Flat hand lying on `sheet`, fingers toward +v. The five fingertip
/// `u` positions are given thumb first; `lift` raises the whole hand.
pub fn flat_hand(id: HandId, sheet: &SimSheet, tips_u: [f64; 5], palm_uv: Uv, palm: PalmOrientation, lift: f64) -> HandFrame {
    let tip_v = (palm_uv.v + 0.3).min(0.98);
    let tip = |u: f64| sheet.point(Uv::new(u, tip_v), TOUCH_HEIGHT + lift);
    let normal = sheet.pose.normal();
    let palm_normal = match palm {
        PalmOrientation::PalmDown => -normal,
        PalmOrientation::PalmUp => normal,
    };
    hand(
        id,
        [
            (Joint::ThumbTip, tip(tips_u[0])),
            (Joint::IndexTip, tip(tips_u[1])),
            (Joint::MiddleTip, tip(tips_u[2])),
            (Joint::RingTip, tip(tips_u[3])),
            (Joint::LittleTip, tip(tips_u[4])),
            (Joint::PalmCenter, sheet.point(palm_uv, 0.015 + lift)),
        ],
        palm_normal,
    )
}

/// Relaxed hand well above the desk.
pub fn hovering_hand(id: HandId, over: Vector3<f64>) -> HandFrame {
    pointing_hand(id, over + Vector3::new(0.0, 0.0, HOVER_HEIGHT), Vector3::z())
}

/// A frame-by-frame scene description.
#[derive(Debug, Clone, Default)]
pub struct Snapshot {
    pub sheets: Vec<SimSheet>,
    pub hands: Vec<HandFrame>,
}

pub fn build_frames(n: usize, camera: Pose, mut f: impl FnMut(usize) -> Snapshot) -> Vec<SceneFrame> {
    (0..n)
        .map(|i| {
            let snap = f(i);
            SceneFrame {
                seq: i as u64,
                time_ms: frame_time_ms(i as u64),
                camera,
                panels: snap.sheets.iter().flat_map(SimSheet::panels).collect(),
                hands: snap.hands,
            }
        })
        .collect()
}

/// A named frame sequence with the one action it should produce.
#[derive(Debug, Clone)]
pub struct Script {
    pub name: String,
    pub intended: Option<Action>,
    pub frames: Vec<SceneFrame>,
}

fn sheet_a() -> SimSheet {
    SimSheet::a4("A", Pose::identity())
}

/// Touch at uv(0.40, 0.50), hold, lift.
pub fn point_script() -> Script {
    let a = sheet_a();
    let target = Uv::new(0.40, 0.50);
    let frames = build_frames(300, default_camera(), |i| {
        let height = match i {
            0..=59 => lerp(0.08, TOUCH_HEIGHT, ramp(i, 20, 40)),
            60..=75 => TOUCH_HEIGHT,
            _ => lerp(TOUCH_HEIGHT, 0.08, ramp(i, 75, 20)),
        };
        let tip = a.point(target, height);
        Snapshot {
            sheets: vec![a.clone()],
            hands: vec![pointing_hand(HandId::Right, tip, Vector3::z())],
        }
    });
    Script { name: "point".into(), intended: Some(Action::Point), frames }
}

/// Touch at (0.20, 0.50), drag to (0.60, 0.50), lift.
pub fn drag_script() -> Script {
    let a = sheet_a();
    let frames = build_frames(300, default_camera(), |i| {
        let height = match i {
            0..=59 => lerp(0.08, TOUCH_HEIGHT, ramp(i, 20, 40)),
            60..=130 => TOUCH_HEIGHT,
            _ => lerp(TOUCH_HEIGHT, 0.08, ramp(i, 130, 20)),
        };
        let u = lerp(0.20, 0.60, ramp(i, 70, 50));
        Snapshot {
            sheets: vec![a.clone()],
            hands: vec![pointing_hand(HandId::Right, a.point(Uv::new(u, 0.50), height), Vector3::z())],
        }
    });
    Script { name: "point_drag".into(), intended: Some(Action::PointDrag), frames }
}

/// Thumb and index land 0.02 m apart, spread to 0.06 m, lift together.
pub fn pinch_script() -> Script {
    let a = sheet_a();
    let center = a.point(Uv::new(0.5, 0.5), 0.0);
    let frames = build_frames(300, default_camera(), |i| {
        let height = match i {
            0..=59 => lerp(0.08, TOUCH_HEIGHT, ramp(i, 20, 40)),
            60..=140 => TOUCH_HEIGHT,
            _ => lerp(TOUCH_HEIGHT, 0.08, ramp(i, 140, 20)),
        };
        let sep = lerp(0.02, 0.06, ramp(i, 70, 40));
        let half = Vector3::new(sep / 2.0, 0.0, 0.0);
        let lift = Vector3::new(0.0, 0.0, height);
        Snapshot {
            sheets: vec![a.clone()],
            hands: vec![pinching_hand(HandId::Right, center - half + lift, center + half + lift, Vector3::z())],
        }
    });
    Script { name: "pinch".into(), intended: Some(Action::Pinch), frames }
}

/// Flat hand over the right 40% of the sheet. The little finger hangs past
/// the right edge.
pub fn cover_script(palm: PalmOrientation) -> Script {
    let a = sheet_a();
    let frames = build_frames(300, default_camera(), |i| {
        let lift = match i {
            0..=59 => lerp(0.10, 0.0, ramp(i, 20, 40)),
            60..=200 => 0.0,
            _ => lerp(0.0, 0.10, ramp(i, 200, 20)),
        };
        Snapshot {
            sheets: vec![a.clone()],
            hands: vec![flat_hand(
                HandId::Right,
                &a,
                [0.60, 0.72, 0.82, 0.92, 1.02],
                Uv::new(0.85, 0.45),
                palm,
                lift,
            )],
        }
    });
    let name = match palm {
        PalmOrientation::PalmDown => "cover",
        PalmOrientation::PalmUp => "cover_palm_up",
    };
    Script { name: name.into(), intended: Some(Action::Cover), frames }
}

/// Flap past `crease` folded from flat to `target_deg`, held, unfolded.
pub fn fold_script_with(crease: Crease, target_deg: f64) -> Script {
    let frames = build_frames(300, default_camera(), |i| {
        let t = if i < 150 { ramp(i, 30, 60) } else { 1.0 - ramp(i, 180, 60) };
        let dihedral = lerp(PI, target_deg.to_radians(), t);
        let mut a = sheet_a();
        a.fold = Some((crease, dihedral));
        Snapshot { sheets: vec![a], hands: vec![] }
    });
    Script { name: "fold".into(), intended: Some(Action::Fold), frames }
}

/// Right flap past crease_u = 0.75 folded to 60°.
pub fn fold_script() -> Script {
    fold_script_with(Crease { axis: CreaseAxis::U, at: 0.75, side: FlapSide::High }, 60.0)
}

/// Sheet rolled about its vertical center line by `angle_deg(i)`.
pub fn rolled_sheet(angle_deg: f64) -> SimSheet {
    let a = sheet_a();
    let center = a.point(Uv::new(0.5, 0.5), 0.0);
    SimSheet::a4("A", a.pose.rotated_about(&center, &Vector3::y(), angle_deg.to_radians()))
}

/// Right edge dips to 30° and comes back.
pub fn tilt_script() -> Script {
    let frames = build_frames(300, default_camera(), |i| {
        let t = if i < 150 { ramp(i, 20, 60) } else { 1.0 - ramp(i, 180, 60) };
        Snapshot { sheets: vec![rolled_sheet(lerp(0.0, 30.0, t))], hands: vec![] }
    });
    Script { name: "tilt".into(), intended: Some(Action::Tilt), frames }
}

/// Roll of 0.5° per frame up to 30°, held, then back down at the same rate.
pub fn tilt_ramp_script() -> Script {
    let frames = build_frames(240, default_camera(), |i| {
        let deg = match i {
            0..=60 => 0.5 * i as f64,
            61..=120 => 30.0,
            _ => (30.0 - 0.5 * (i - 120) as f64).max(0.0),
        };
        Snapshot { sheets: vec![rolled_sheet(deg)], hands: vec![] }
    });
    Script { name: "tilt_ramp".into(), intended: Some(Action::Tilt), frames }
}

/// Sheet turned over about its left edge in 0.8 s.
pub fn flip_script() -> Script {
    flip_script_with(180.0, 48)
}

/// Turn about the left edge (right side lifting) to `deg` over `frames`, then back if short of a flip.
pub fn flip_script_with(deg: f64, frames_len: usize) -> Script {
    let a = sheet_a();
    let frames = build_frames(300, default_camera(), |i| {
        let t = if deg >= 150.0 {
            ramp(i, 60, frames_len)
        } else if i < 150 {
            ramp(i, 60, frames_len)
        } else {
            1.0 - ramp(i, 150, frames_len)
        };
        let angle = -lerp(0.0, deg, t).to_radians();
        let pose = a.pose.rotated_about(&Vector3::zeros(), &Vector3::y(), angle);
        Snapshot { sheets: vec![SimSheet::a4("A", pose)], hands: vec![] }
    });
    Script { name: "flip".into(), intended: Some(Action::Flip), frames }
}

/// Sheet raised 0.10 m toward the camera over one second, then held.
pub fn translate_script() -> Script {
    let frames = build_frames(300, default_camera(), |i| {
        let z = lerp(0.0, 0.10, ramp(i, 60, 60));
        Snapshot { sheets: vec![SimSheet::a4("A", Pose::from_translation(0.0, 0.0, z))], hands: vec![] }
    });
    Script { name: "translate".into(), intended: Some(Action::Translate), frames }
}

/// Sheet B, centered over A's uv(0.30, 0.50), lowered from 0.045 m to a
/// 0.01 m gap, held, raised again.
pub fn collate_script() -> Script {
    let a = sheet_a();
    let g = SheetGeometry::A4;
    let center = a.point(Uv::new(0.30, 0.50), 0.0);
    let frames = build_frames(300, default_camera(), |i| {
        let t = if i < 150 { ramp(i, 30, 60) } else { 1.0 - ramp(i, 220, 40) };
        let gap = lerp(0.045, 0.01, t);
        let b = Pose::from_translation(center.x - g.width / 2.0, center.y - g.height / 2.0, gap);
        Snapshot {
            sheets: vec![a.clone(), SimSheet::a4("B", b)],
            hands: vec![],
        }
    });
    Script { name: "collate".into(), intended: Some(Action::Collate), frames }
}

/// Sheet B slid in from 0.15 m to 0.02 m right of A, held, slid away.
pub fn collocate_script() -> Script {
    let a = sheet_a();
    let g = SheetGeometry::A4;
    let frames = build_frames(300, default_camera(), |i| {
        let t = if i < 150 { ramp(i, 30, 60) } else { 1.0 - ramp(i, 220, 40) };
        let gap = lerp(0.15, 0.02, t);
        Snapshot {
            sheets: vec![a.clone(), SimSheet::a4("B", Pose::from_translation(g.width + gap, 0.0, 0.0))],
            hands: vec![],
        }
    });
    Script { name: "collocate".into(), intended: Some(Action::Collocate), frames }
}

/// Collocation as above, with a right-hand tap on A at `target` while B sits
/// alongside.
pub fn collocate_point_script(target: Uv) -> Script {
    let a = sheet_a();
    let g = SheetGeometry::A4;
    let frames = build_frames(300, default_camera(), |i| {
        let t = if i < 150 { ramp(i, 30, 60) } else { 1.0 - ramp(i, 240, 40) };
        let gap = lerp(0.15, 0.02, t);
        let height = match i {
            0..=149 => lerp(0.08, TOUCH_HEIGHT, ramp(i, 110, 40)),
            150..=170 => TOUCH_HEIGHT,
            _ => lerp(TOUCH_HEIGHT, 0.08, ramp(i, 170, 20)),
        };
        Snapshot {
            sheets: vec![a.clone(), SimSheet::a4("B", Pose::from_translation(g.width + gap, 0.0, 0.0))],
            hands: vec![pointing_hand(HandId::Right, a.point(target, height), Vector3::z())],
        }
    });
    Script { name: "collocate_point".into(), intended: Some(Action::Collocate), frames }
}

/// The ten canonical scripts, one per detected action, in priority order.
pub fn canonical_scripts() -> Vec<Script> {
    Action::ALL
        .into_iter()
        .map(|a| match a {
            Action::Fold => fold_script(),
            Action::Cover => cover_script(PalmOrientation::PalmDown),
            Action::Collate => collate_script(),
            Action::Collocate => collocate_script(),
            Action::Pinch => pinch_script(),
            Action::PointDrag => drag_script(),
            Action::Point => point_script(),
            Action::Flip => flip_script(),
            Action::Tilt => tilt_script(),
            Action::Translate => translate_script(),
        })
        .collect()
}

/// Per-frame Gaussian jitter on every pose and joint.
#[derive(Debug, Clone)]
pub struct Jitter {
    rng: ChaCha8Rng,
    pos: Normal<f64>,
    rot: Normal<f64>,
}

impl Jitter {
    pub fn new(seed: u64, sigma_pos: f64, sigma_rot_deg: f64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            pos: Normal::new(0.0, sigma_pos).expect("finite sigma"),
            rot: Normal::new(0.0, sigma_rot_deg.to_radians()).expect("finite sigma"),
        }
    }

    fn vec(&mut self, d: &Normal<f64>) -> Vector3<f64> {
        Vector3::new(d.sample(&mut self.rng), d.sample(&mut self.rng), d.sample(&mut self.rng))
    }

    pub fn pose(&mut self, p: &Pose) -> Pose {
        let (pos, rot) = (self.pos, self.rot);
        let dp = self.vec(&pos);
        let dr = UnitQuaternion::from_scaled_axis(self.vec(&rot));
        Pose::new(p.position + dp, dr * p.orientation)
    }

    pub fn apply(&mut self, frame: &mut SceneFrame) {
        let pos = self.pos;
        // One rigid perturbation per sheet keeps base and flap consistent.
        let mut per_sheet: BTreeMap<String, (Vector3<f64>, UnitQuaternion<f64>, Vector3<f64>)> = BTreeMap::new();
        for p in &mut frame.panels {
            let (dp, dr, pivot) = *per_sheet.entry(p.sheet_id.clone()).or_insert_with(|| {
                let rot = self.rot;
                (self.vec(&pos), UnitQuaternion::from_scaled_axis(self.vec(&rot)), p.pose.position)
            });
            let rotated = dr * (p.pose.position - pivot) + pivot;
            p.pose = Pose::new(rotated + dp, dr * p.pose.orientation);
        }
        for h in &mut frame.hands {
            for j in h.joints.values_mut() {
                *j += self.vec(&pos);
            }
        }
    }
}

/// Static desk: sheet A, sheet B well clear of it, both hands hovering, with
/// jitter of 2 mm and 1° per frame.
pub fn noise_script(seed: u64, seconds: u64) -> Script {
    let a = sheet_a();
    let b = SimSheet::a4("B", Pose::from_translation(0.35, 0.0, 0.0));
    let left = a.point(Uv::new(0.2, 0.2), 0.0);
    let right = b.point(Uv::new(0.8, 0.2), 0.0);
    let mut frames = build_frames((seconds * FRAME_HZ) as usize, default_camera(), |_| Snapshot {
        sheets: vec![a.clone(), b.clone()],
        hands: vec![hovering_hand(HandId::Left, left), hovering_hand(HandId::Right, right)],
    });
    let mut jitter = Jitter::new(seed, 0.002, 1.0);
    for f in &mut frames {
        jitter.apply(f);
    }
    Script { name: "noise".into(), intended: None, frames }
}

/// Concatenates scripts into one session, renumbering seq and time.
pub fn concat(scripts: &[Script]) -> Vec<SceneFrame> {
    let mut out = Vec::new();
    for s in scripts {
        for f in &s.frames {
            let i = out.len() as u64;
            out.push(SceneFrame {
                seq: i,
                time_ms: frame_time_ms(i),
                ..f.clone()
            });
        }
    }
    out
}

/// A seeded session of several canonical gestures back to back, optionally
/// jittered, for phase-discipline checks.
pub fn random_session(seed: u64, gestures: usize, jitter: bool) -> Vec<SceneFrame> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = canonical_scripts();
    let picks: Vec<Script> = (0..gestures).map(|_| pool[rng.gen_range(0..pool.len())].clone()).collect();
    let mut frames = concat(&picks);
    if jitter {
        let mut j = Jitter::new(seed ^ 0x9e37_79b9, 0.001, 0.5);
        for f in &mut frames {
            j.apply(f);
        }
    }
    frames
}

/// 2-sheet, 2-hand scene with every detector busy, for latency runs.
pub fn load_script(frames_len: usize) -> Vec<SceneFrame> {
    let g = SheetGeometry::A4;
    build_frames(frames_len, default_camera(), |i| {
        let phase = i as f64 / FRAME_HZ as f64;
        let a = rolled_sheet(20.0 * (phase * 0.7).sin());
        let mut b = SimSheet::a4("B", Pose::from_translation(g.width + 0.02, 0.0, 0.02 * (phase * 0.5).sin()));
        b.fold = Some((Crease { axis: CreaseAxis::V, at: 0.5, side: FlapSide::High }, lerp(PI, 1.2, (phase * 0.3).sin().abs())));
        let u = 0.5 + 0.3 * (phase * 1.3).sin();
        let left = pointing_hand(HandId::Left, a.point(Uv::new(u, 0.4), TOUCH_HEIGHT), a.pose.normal());
        let sep = 0.03 + 0.015 * (phase * 2.0).sin();
        let c = b.point(Uv::new(0.3, 0.3), TOUCH_HEIGHT);
        let right = pinching_hand(
            HandId::Right,
            c - Vector3::new(sep / 2.0, 0.0, 0.0),
            c + Vector3::new(sep / 2.0, 0.0, 0.0),
            Vector3::z(),
        );
        Snapshot { sheets: vec![a, b], hands: vec![left, right] }
    })
}

/// Rotation about an arbitrary unit axis, for tests building their own poses.
pub fn axis_angle(axis: Vector3<f64>, deg: f64) -> UnitQuaternion<f64> {
    UnitQuaternion::from_axis_angle(&Unit::new_normalize(axis), deg.to_radians())
}
