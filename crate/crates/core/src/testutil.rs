//! Shared fixtures for unit tests.

use std::sync::OnceLock;

use crate::conjugation::{calibrate, Calibration, CalibrationOptions, ChainOptions, ConjugationChain};
use crate::maps::section5_map;
use crate::orbits::{Ladder, DEFAULT_Z_IN};
use crate::rotation::golden_rotation;

pub fn chain() -> &'static ConjugationChain {
    static CHAIN: OnceLock<ConjugationChain> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let (_, spec) = section5_map(&golden_rotation());
        ConjugationChain::from_spec(spec, ChainOptions::default()).unwrap()
    })
}

pub fn calibration() -> &'static Calibration {
    static CAL: OnceLock<Calibration> = OnceLock::new();
    CAL.get_or_init(|| calibrate(chain(), &CalibrationOptions::default()).unwrap())
}

pub fn ladder() -> Ladder {
    Ladder::from_calibration(calibration(), DEFAULT_Z_IN)
}
