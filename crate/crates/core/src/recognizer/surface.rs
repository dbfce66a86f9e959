use nalgebra::Vector3;

use crate::geometry::{project_to_plane, project_to_sheet, Pose, SheetGeometry, Uv};
use crate::scene::{Panel, SheetPanels};

/// Contact surface of one sheet, honoring a folded flap.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Surface<'a> {
    pub base: &'a Panel,
    pub flap: Option<&'a Panel>,
}

impl<'a> From<SheetPanels<'a>> for Surface<'a> {
    fn from(s: SheetPanels<'a>) -> Self {
        Self {
            base: s.base,
            flap: s.flap,
        }
    }
}

impl<'a> Surface<'a> {
    pub fn id(&self) -> &'a str {
        &self.base.sheet_id
    }

    pub fn pose(&self) -> &'a Pose {
        &self.base.pose
    }

    pub fn geom(&self) -> &'a SheetGeometry {
        &self.base.geom
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.base.pose.normal()
    }

    pub fn center(&self) -> Vector3<f64> {
        self.base.pose.transform_point(&self.base.geom.local_center())
    }

    /// Sheet coordinate and signed distance of a contact within `max_dist`.
    pub fn contact(&self, p: &Vector3<f64>, max_dist: f64) -> Option<(Uv, f64)> {
        let crease = self.flap.and_then(|f| f.crease.map(|c| (f, c)));
        if let Some(hit) = project_to_sheet(p, &self.base.pose, &self.base.geom, max_dist) {
            match crease {
                Some((_, c)) if c.on_flap(hit.0) => {}
                _ => return Some(hit),
            }
        }
        let (flap, crease) = crease?;
        project_to_sheet(p, &flap.pose, &flap.geom, max_dist).filter(|(uv, _)| crease.on_flap(*uv))
    }

    /// Unbounded projection onto the base plane.
    pub fn plane(&self, p: &Vector3<f64>) -> (Uv, f64) {
        project_to_plane(p, &self.base.pose, &self.base.geom)
    }
}
