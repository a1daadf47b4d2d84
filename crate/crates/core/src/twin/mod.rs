//! Kinematic digital twin of an assembly cell. Every service is reachable
//! as a process-language ability through [`Twin`].

pub mod abilities;
pub mod bus;
pub mod fcm;
pub mod kinematics;
pub mod planner;
pub mod snapshot;
pub mod state;

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::cell_match::CellDescription;
use crate::design::DesignDoc;
use crate::pl::AbilityRegistry;
use crate::tooling::ToolingDb;

pub use bus::{Bus, BusDoc};
pub use fcm::{Fcm, FcmEnvelope, FcmError};
pub use planner::Trajectory;
pub use snapshot::{snapshot_scene, CellSnapshot, SceneDoc};
pub use state::{init_cell, CellState, TwinError, World};

/// Owns the cell state and serializes every mutation.
#[derive(Debug)]
pub struct Twin {
    pub world: World,
    pub state: CellState,
    pub bus: Arc<Bus>,
    pub fcm: Arc<Fcm>,
    /// Whether robots are collision-checked against each other's links.
    pub robot_robot_checks: bool,
    rng: ChaCha8Rng,
    registry: AbilityRegistry,
}

impl Twin {
    pub fn new(cell: CellDescription, db: ToolingDb, design: Option<DesignDoc>, seed: u64) -> Result<Self, TwinError> {
        let state = init_cell(&cell, &db)?;
        Ok(Twin {
            world: World::new(cell, db, design),
            state,
            bus: Arc::new(Bus::new()),
            fcm: Arc::new(Fcm::new()),
            robot_robot_checks: true,
            rng: ChaCha8Rng::seed_from_u64(seed),
            registry: abilities::registry(),
        })
    }

    pub fn snapshot(&self) -> CellSnapshot {
        snapshot::take_snapshot(&self.state, &self.world)
    }

    pub fn scene(&self) -> SceneDoc {
        snapshot_scene(&self.state, &self.world)
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}
