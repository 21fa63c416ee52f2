//! Wave analysis (in progress).
