//! Logical grid geometry of one activity, including cloud-spawned cells.

use crate::key::Direction;

use super::{Activity, CloudDirection};

/// A grid cell holding a view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub row: u32,
    pub col: u32,
    pub index: u32,
    /// Ordinal of the cloud spawn that creates this cell; `None` for
    /// declared views.
    pub spawn: Option<u32>,
}

/// Read-only view of an activity's layout. Spawned rows (or columns) are
/// virtual: they exist here whether or not a session has materialized them.
#[derive(Debug, Clone, Copy)]
pub struct Grid<'a> {
    activity: &'a Activity,
    base_max: u32,
}

impl<'a> Grid<'a> {
    pub fn new(activity: &'a Activity) -> Self {
        let base_max = activity.views.iter().map(|v| v.index).max().unwrap_or(0);
        Grid { activity, base_max }
    }

    fn rows(&self) -> u32 {
        self.activity.layout.rows
    }

    fn cols(&self) -> u32 {
        self.activity.layout.cols
    }

    /// The last declared index; spawned views are numbered after it.
    pub fn base_max(&self) -> u32 {
        self.base_max
    }

    fn spawn_allowed(&self, ordinal: u32) -> bool {
        self.activity
            .cloud
            .and_then(|c| c.max_spawns)
            .is_none_or(|max| ordinal < max)
    }

    pub fn position(&self, index: u32) -> Option<Cell> {
        if let Some(i) = self.activity.views.iter().position(|v| v.index == index) {
            let i = i as u32;
            return Some(Cell { row: i / self.cols(), col: i % self.cols(), index, spawn: None });
        }
        let cloud = self.activity.cloud?;
        if index <= self.base_max {
            return None;
        }
        let offset_all = index - self.base_max - 1;
        let ordinal = offset_all / cloud.row_width;
        let offset = offset_all % cloud.row_width;
        if !self.spawn_allowed(ordinal) {
            return None;
        }
        let (row, col) = match cloud.direction {
            CloudDirection::Down => (self.rows() + ordinal, offset),
            CloudDirection::Right => (offset, self.cols() + ordinal),
        };
        Some(Cell { row, col, index, spawn: Some(ordinal) })
    }

    pub fn at(&self, row: u32, col: u32) -> Option<Cell> {
        if row < self.rows() && col < self.cols() {
            let index = self.activity.views[(row * self.cols() + col) as usize].index;
            return Some(Cell { row, col, index, spawn: None });
        }
        let cloud = self.activity.cloud?;
        let (ordinal, offset) = match cloud.direction {
            CloudDirection::Down if row >= self.rows() => (row - self.rows(), col),
            CloudDirection::Right if col >= self.cols() => (col - self.cols(), row),
            _ => return None,
        };
        if offset >= cloud.row_width || !self.spawn_allowed(ordinal) {
            return None;
        }
        let index = self.base_max + ordinal * cloud.row_width + offset + 1;
        Some(Cell { row, col, index, spawn: Some(ordinal) })
    }

    /// One step from `from`; no wrap-around.
    pub fn step(&self, from: Cell, dir: Direction) -> Option<Cell> {
        let (dr, dc) = dir.delta();
        let row = u32::try_from(i64::from(from.row) + dr).ok()?;
        let col = u32::try_from(i64::from(from.col) + dc).ok()?;
        self.at(row, col)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::appspec::{pilot_app, ActivityId, CloudSpawnRule, LayoutPattern, PatternKind, ViewId};
    use std::collections::BTreeMap;

    #[test]
    fn pilot_spawned_rows_are_numbered_row_major() {
        let pilot = pilot_app();
        let grid = pilot.root_activity().grid();
        let v13 = grid.position(13).unwrap();
        assert_eq!((v13.row, v13.col, v13.spawn), (3, 0, Some(0)));
        let v18 = grid.position(18).unwrap();
        assert_eq!((v18.row, v18.col, v18.spawn), (4, 1, Some(1)));
        assert_eq!(grid.at(3, 3).unwrap().index, 16);
        assert_eq!(grid.step(grid.position(16).unwrap(), Direction::Up).unwrap().index, 12);
    }

    #[test]
    fn right_cloud_appends_columns() {
        let id = ActivityId::new("r").unwrap();
        let activity = Activity {
            id: id.clone(),
            layout: LayoutPattern::new(PatternKind::A, 1, 3).unwrap(),
            views: (1..=3).map(|i| ViewId::new(&id, i)).collect(),
            initial_focus: None,
            ok_targets: BTreeMap::new(),
            cloud: Some(CloudSpawnRule { direction: CloudDirection::Right, row_width: 1, max_spawns: Some(2) }),
        };
        let grid = activity.grid();
        let v3 = grid.position(3).unwrap();
        let v4 = grid.step(v3, Direction::Right).unwrap();
        assert_eq!((v4.index, v4.spawn), (4, Some(0)));
        let v5 = grid.step(v4, Direction::Right).unwrap();
        assert_eq!(v5.index, 5);
        assert!(grid.step(v5, Direction::Right).is_none());
        assert!(grid.position(6).is_none());
        assert!(grid.step(v4, Direction::Down).is_none());
    }
}
