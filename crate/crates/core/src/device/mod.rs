//! Physical substrate: memristor crossbar for the MAC and stochastic MTJ p-bits.

mod memristor;
mod smtj;

pub use memristor::{
    spin_drive_voltages, ArrayGeometry, ConductanceMap, CrossbarArray, DriftModel, MemristorCell,
    Polarity, ProgramVerifyConfig, ProgrammingReport, ReadNoise, HW_MAX_COLS, HW_MAX_ROWS,
};
pub use smtj::{
    fit_sigmoid, MtjDrive, MtjReadout, MtjState, SigmoidFit, SmtjDevice, SmtjVariability,
    SweepPoint, TelegraphSegment,
};
