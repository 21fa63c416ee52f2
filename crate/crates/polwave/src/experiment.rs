//! Experiment drivers (in progress).
