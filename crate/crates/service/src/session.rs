use std::collections::VecDeque;
use std::sync::Arc;

use panolayout_core::imageops::EquirectImage;
use panolayout_core::layout::manipulate;
use panolayout_core::{Manipulation, SceneLayout};

use crate::error::ServiceError;

/// Oldest undo states are dropped beyond this depth.
pub const UNDO_DEPTH: usize = 64;

/// Immutable view of a session at one revision.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub revision: u64,
    pub layout: Arc<SceneLayout>,
    pub background: Arc<EquirectImage>,
    pub projection_seed: u64,
}

#[derive(Debug)]
pub struct SceneSession {
    id: String,
    background: Arc<EquirectImage>,
    layout: Arc<SceneLayout>,
    revision: u64,
    undo: VecDeque<Arc<SceneLayout>>,
    projection_seed: u64,
}

impl SceneSession {
    pub fn new(
        id: String,
        background: EquirectImage,
        layout: SceneLayout,
        projection_seed: u64,
    ) -> Result<Self, ServiceError> {
        if (background.width(), background.height()) != (layout.width(), layout.height()) {
            return Err(ServiceError::BadRequest(format!(
                "layout renders {}x{} but the background is {}x{}",
                layout.width(),
                layout.height(),
                background.width(),
                background.height()
            )));
        }
        Ok(Self {
            id,
            background: Arc::new(background),
            layout: Arc::new(layout),
            revision: 0,
            undo: VecDeque::new(),
            projection_seed,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn layout(&self) -> &SceneLayout {
        &self.layout
    }

    pub fn undo_depth(&self) -> usize {
        self.undo.len()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            revision: self.revision,
            layout: Arc::clone(&self.layout),
            background: Arc::clone(&self.background),
            projection_seed: self.projection_seed,
        }
    }

    /// Applies `op`, pushing the previous layout on the undo stack.
    pub fn mutate(&mut self, op: &Manipulation) -> Result<u64, ServiceError> {
        let next = manipulate(&self.layout, op)?;
        let prev = std::mem::replace(&mut self.layout, Arc::new(next));
        if self.undo.len() == UNDO_DEPTH {
            self.undo.pop_front();
        }
        self.undo.push_back(prev);
        self.revision += 1;
        Ok(self.revision)
    }

    /// Restores the previous layout. Undo is itself a mutation, so the
    /// revision still moves forward.
    pub fn undo(&mut self) -> Result<u64, ServiceError> {
        let prev = self
            .undo
            .pop_back()
            .ok_or_else(|| ServiceError::Conflict("nothing to undo".into()))?;
        self.layout = prev;
        self.revision += 1;
        Ok(self.revision)
    }
}
