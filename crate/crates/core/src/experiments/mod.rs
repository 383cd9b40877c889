//! Reproduction harness: range of motion, forces, opposition, object grasps
//! and the calibration that fills in the unpublished parameters.

mod calibrate;
mod forces;
mod kapandji;
mod report;
mod rom;
mod suite;

pub use calibrate::*;
pub use forces::*;
pub use kapandji::{
    kapandji_targets, kapandji_test, kapandji_test_with, thumb_distance, KapandjiReport, KapandjiTarget,
    KAPANDJI_TARGET_SCORE,
};
pub use report::*;
pub use rom::*;
pub use suite::*;
