//! Elapsed-time source for run traces.
//!
//! The engines only need "seconds since the run started"; injecting it keeps
//! the core free of platform timing APIs.

pub trait Clock {
    fn elapsed_secs(&self) -> f64;
}

/// Always reports zero; the default when timing is not needed.
#[derive(Clone, Copy, Debug, Default)]
pub struct NullClock;

impl Clock for NullClock {
    fn elapsed_secs(&self) -> f64 {
        0.0
    }
}

/// Wall-clock time since construction.
#[cfg(feature = "std")]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl WallClock {
    pub fn start() -> Self {
        WallClock(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Default for WallClock {
    fn default() -> Self {
        Self::start()
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn elapsed_secs(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}
