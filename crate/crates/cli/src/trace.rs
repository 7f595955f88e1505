//! Per-iteration trace written as JSON lines.
//!
//! MWU iterations arrive in batches of identical steps; one line is written per
//! batch with its `repeats` count rather than one per iteration.

use std::cell::RefCell;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::rc::Rc;

use incflow::refine::Observer;
use serde::Serialize;

#[derive(Clone)]
pub struct TraceSink(Rc<RefCell<Box<dyn Write>>>);

impl fmt::Debug for TraceSink {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TraceSink")
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Mwu {
        phase: u64,
        iteration: u64,
        repeats: u64,
        phi: f64,
        psi: f64,
        ratio: f64,
    },
    Step {
        phase: u64,
        step: u64,
        energy: f64,
        eta: f64,
    },
}

impl TraceSink {
    pub fn create(path: &Path) -> io::Result<Self> {
        Ok(Self::from_writer(Box::new(BufWriter::new(File::create(path)?))))
    }

    pub fn from_writer(w: Box<dyn Write>) -> Self {
        Self(Rc::new(RefCell::new(w)))
    }

    /// An observer tagging its lines with `phase` (always 0 outside maxflow).
    pub fn observer(&self, phase: u64) -> TraceObserver {
        TraceObserver {
            sink: self.clone(),
            phase,
        }
    }

    pub fn flush(&self) {
        let _ = self.0.borrow_mut().flush();
    }

    fn write(&self, line: &Line) {
        let mut w = self.0.borrow_mut();
        // trace output is best effort; a full disk should not abort the solve
        let _ = serde_json::to_writer(&mut *w, line);
        let _ = w.write_all(b"\n");
    }
}

#[derive(Debug)]
pub struct TraceObserver {
    sink: TraceSink,
    phase: u64,
}

impl Observer for TraceObserver {
    fn mwu_step(&mut self, iteration: u64, repeats: u64, phi: f64, psi: f64, ratio: f64) {
        self.sink.write(&Line::Mwu {
            phase: self.phase,
            iteration,
            repeats,
            phi,
            psi,
            ratio,
        });
    }

    fn refinement_step(&mut self, step: u64, energy: f64, eta: f64) {
        self.sink.write(&Line::Step {
            phase: self.phase,
            step,
            energy,
            eta,
        });
    }
}
