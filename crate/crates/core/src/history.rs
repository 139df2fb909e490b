//! Voxel-patch undo/redo.
//!
//! A patch stores `(index, before, after)` for each voxel an edit changed,
//! so memory is proportional to the edit and inversion is exact.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::segment::{Label, LabelMap};

pub const DEFAULT_UNDO_LIMIT: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Patch {
    changes: Vec<(u32, Label, Label)>,
}

impl Patch {
    /// Collapses a raw journal to one net entry per voxel, dropping voxels
    /// that ended where they started.
    pub(crate) fn from_journal(mut journal: Vec<(u32, Label, Label)>) -> Self {
        // stable sort keeps the chronological order within each voxel
        journal.sort_by_key(|c| c.0);
        let mut changes: Vec<(u32, Label, Label)> = Vec::with_capacity(journal.len());
        for (idx, old, new) in journal {
            match changes.last_mut() {
                Some(last) if last.0 == idx => last.2 = new,
                _ => changes.push((idx, old, new)),
            }
        }
        changes.retain(|c| c.1 != c.2);
        Patch { changes }
    }

    pub fn len(&self) -> usize {
        self.changes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.changes.is_empty()
    }

    pub fn apply(&self, map: &mut LabelMap) -> usize {
        let data = map.data_mut_unjournaled();
        for &(i, _, new) in &self.changes {
            data[i as usize] = new;
        }
        self.changes.len()
    }

    pub fn revert(&self, map: &mut LabelMap) -> usize {
        let data = map.data_mut_unjournaled();
        for &(i, old, _) in &self.changes {
            data[i as usize] = old;
        }
        self.changes.len()
    }
}

/// Bounded undo stack plus redo stack for one label map.
#[derive(Debug, Clone)]
pub struct UndoHistory {
    undo: VecDeque<Patch>,
    redo: Vec<Patch>,
    limit: usize,
}

impl Default for UndoHistory {
    fn default() -> Self {
        Self::new(DEFAULT_UNDO_LIMIT)
    }
}

impl UndoHistory {
    pub fn new(limit: usize) -> Self {
        UndoHistory {
            undo: VecDeque::new(),
            redo: Vec::new(),
            limit: limit.max(1),
        }
    }

    /// Records an applied edit. Clears redo; evicts the oldest patch past the limit.
    pub fn push(&mut self, patch: Patch) {
        self.redo.clear();
        if patch.is_empty() {
            return;
        }
        self.undo.push_back(patch);
        while self.undo.len() > self.limit {
            self.undo.pop_front();
        }
    }

    pub fn undo(&mut self, map: &mut LabelMap) -> Result<usize> {
        let patch = self.undo.pop_back().ok_or(Error::EmptyHistory("undo"))?;
        let n = patch.revert(map);
        self.redo.push(patch);
        Ok(n)
    }

    pub fn redo(&mut self, map: &mut LabelMap) -> Result<usize> {
        let patch = self.redo.pop().ok_or(Error::EmptyHistory("redo"))?;
        let n = patch.apply(map);
        self.undo.push_back(patch);
        Ok(n)
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn redo_depth(&self) -> usize {
        self.redo.len()
    }

    pub fn limit(&self) -> usize {
        self.limit
    }

    pub fn clear(&mut self) {
        self.undo.clear();
        self.redo.clear();
    }
}
