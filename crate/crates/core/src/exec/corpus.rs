//! Example programs with golden traces from direct reference
//! implementations.

use super::machine::{ExecError, MachineProgram};
use crate::ast::Ident;
use crate::frontend::{load_source, FrontendError};
use crate::normalize::{normalize_program, NormalProgram, NormalizeError, NormalizeOptions};
use crate::relsem::Value;

/// A corpus source file and the definition it is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Source {
    pub name: &'static str,
    pub file: &'static str,
    pub def: &'static str,
    pub text: &'static str,
}

pub const SAH: Source =
    Source { name: "sah", file: "sah1.sc", def: "sah", text: include_str!("../../corpus/sah1.sc") };
pub const SAH_SECOND: Source =
    Source { name: "sah2", file: "sah2.sc", def: "sah", text: include_str!("../../corpus/sah2.sc") };
pub const SAH_THIRD: Source =
    Source { name: "sah3", file: "sah3.sc", def: "sah", text: include_str!("../../corpus/sah3.sc") };
pub const ARMA: Source =
    Source { name: "arma", file: "arma.sc", def: "arma", text: include_str!("../../corpus/arma.sc") };
pub const ADSR: Source =
    Source { name: "adsr", file: "adsr.sc", def: "adsr", text: include_str!("../../corpus/adsr.sc") };
pub const DELAY: Source =
    Source { name: "delay", file: "delay.sc", def: "delay", text: include_str!("../../corpus/delay.sc") };
pub const ACCUM: Source =
    Source { name: "accum", file: "accum.sc", def: "accum", text: include_str!("../../corpus/accum.sc") };
pub const COUNT3: Source =
    Source { name: "count3", file: "count3.sc", def: "count3", text: include_str!("../../corpus/count3.sc") };

/// Every corpus file.
pub const SOURCES: [Source; 8] = [SAH, SAH_SECOND, SAH_THIRD, ARMA, ADSR, DELAY, ACCUM, COUNT3];

/// Coefficients of the corpus ARMA filter.
pub const ARMA_PHI: [f64; 4] = [0.4, 0.3, 0.2, -0.1];
pub const ARMA_THETA: [f64; 3] = [0.3, 0.2, -0.1];

/// Constant rates of the corpus ADSR envelope: attack, decay, sustain
/// level, release.
pub const ADSR_RATES: (f64, f64, f64, f64) = (0.5, 0.25, 0.5, 0.25);

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{file}: {source}")]
    Frontend { file: &'static str, source: FrontendError },
    #[error("{file}: {source}")]
    Normalize { file: &'static str, source: NormalizeError },
    #[error("{file}: {source}")]
    Exec { file: &'static str, source: ExecError },
}

impl Source {
    pub fn compile(&self) -> Result<NormalProgram, CorpusError> {
        let db = load_source(self.text).map_err(|source| CorpusError::Frontend { file: self.file, source })?;
        normalize_program(&db, NormalizeOptions::default()).map_err(|source| CorpusError::Normalize { file: self.file, source })
    }

    pub fn machine(&self) -> Result<MachineProgram, CorpusError> {
        let prog = self.compile()?;
        MachineProgram::new(&prog, &Ident::new(self.def)).map_err(|source| CorpusError::Exec { file: self.file, source })
    }
}

/// A program, an input stream and the outputs it must produce.
#[derive(Clone, Debug)]
pub struct Golden {
    pub source: Source,
    pub machine: MachineProgram,
    pub inputs: Vec<Vec<Value>>,
    pub expected: Vec<Vec<Value>>,
    /// Absolute tolerance per numeric output; zero means exact.
    pub tolerance: f64,
}

impl Golden {
    /// Whether `outputs` match the expected outputs within tolerance.
    pub fn matches(&self, outputs: &[Vec<Value>]) -> bool {
        outputs.len() == self.expected.len()
            && outputs.iter().zip(&self.expected).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| match (x.as_num(), y.as_num()) {
                        (Some(p), Some(q)) if self.tolerance > 0.0 => (p - q).abs() <= self.tolerance,
                        _ => x == y,
                    })
            })
    }
}

fn atom(b: bool, yes: &str, no: &str) -> Value {
    Value::atom(if b { yes } else { no })
}

/// Sample-and-hold outputs: `y = x` on `S`, the previous output on `H`.
pub fn sah_reference(s0: f64, inputs: &[(f64, bool)]) -> Vec<f64> {
    let mut s = s0;
    inputs
        .iter()
        .map(|&(x, sample)| {
            if sample {
                s = x;
            }
            s
        })
        .collect()
}

/// Direct recurrence `y(t) = Σ φₙ y(t-n) + x(t) + Σ θₙ x(t-n)` from zero
/// history.
pub fn arma_reference(phi: &[f64], theta: &[f64], xs: &[f64]) -> Vec<f64> {
    let mut ys: Vec<f64> = Vec::with_capacity(xs.len());
    for t in 0..xs.len() {
        let ar: f64 = (1..=phi.len()).filter(|n| *n <= t).map(|n| phi[n - 1] * ys[t - n]).sum();
        let ma: f64 = (1..=theta.len()).filter(|n| *n <= t).map(|n| theta[n - 1] * xs[t - n]).sum();
        ys.push(ar + xs[t] + ma);
    }
    ys
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Phase {
    Attack,
    Decay,
    Sustain,
    Release,
}

/// Envelope levels of the discrete ADSR loop with constant rates, starting
/// in release at level zero.
pub fn adsr_reference(rates: (f64, f64, f64, f64), gates: &[bool]) -> Vec<f64> {
    let (a, d, s, r) = rates;
    let mut state = Phase::Release;
    let mut out = 0.0_f64;
    let mut levels = Vec::with_capacity(gates.len());
    for &gate in gates {
        let next_out = match state {
            Phase::Attack => f64::min(1.0, out + a),
            Phase::Decay => f64::max(s, out - d),
            Phase::Sustain => out,
            Phase::Release => f64::max(0.0, out - r),
        };
        state = match state {
            Phase::Release if gate => Phase::Attack,
            Phase::Attack if gate && next_out >= 1.0 => Phase::Decay,
            Phase::Decay if gate && next_out <= s => Phase::Sustain,
            _ if !gate => Phase::Release,
            st => st,
        };
        out = next_out;
        levels.push(out);
    }
    levels
}

/// The 100-step gate pattern used for the ADSR golden trace.
pub fn adsr_gates() -> Vec<bool> {
    let runs = [(true, 12), (false, 5), (true, 3), (false, 2), (true, 20), (false, 8), (true, 1), (false, 1)];
    runs.iter().flat_map(|&(g, n)| std::iter::repeat_n(g, n)).cycle().take(100).collect()
}

fn nums(xs: &[f64]) -> Vec<Vec<Value>> {
    xs.iter().map(|&x| vec![Value::num(x)]).collect()
}

/// The corpus programs with their golden traces.
pub fn build_corpus() -> Result<Vec<Golden>, CorpusError> {
    let mut out = Vec::new();

    let sah_in = [(1.0, true), (2.0, false), (3.0, false), (4.0, true), (5.0, false), (0.0, true)];
    out.push(Golden {
        source: SAH,
        machine: SAH.machine()?,
        inputs: sah_in.iter().map(|&(x, b)| vec![Value::num(x), atom(b, "S", "H")]).collect(),
        expected: nums(&sah_reference(0.0, &sah_in)),
        tolerance: 0.0,
    });

    let impulse: Vec<f64> = (0..250).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    out.push(Golden {
        source: ARMA,
        machine: ARMA.machine()?,
        inputs: nums(&impulse),
        expected: nums(&arma_reference(&ARMA_PHI, &ARMA_THETA, &impulse)),
        tolerance: 1e-12,
    });

    let gates = adsr_gates();
    out.push(Golden {
        source: ADSR,
        machine: ADSR.machine()?,
        inputs: gates.iter().map(|&g| vec![atom(g, "True", "False")]).collect(),
        expected: nums(&adsr_reference(ADSR_RATES, &gates)),
        tolerance: 0.0,
    });

    let ramp: Vec<f64> = (0..10).map(f64::from).collect();
    let delayed: Vec<f64> = std::iter::once(0.0).chain(ramp.iter().copied()).take(ramp.len()).collect();
    out.push(Golden { source: DELAY, machine: DELAY.machine()?, inputs: nums(&ramp), expected: nums(&delayed), tolerance: 0.0 });

    let sums: Vec<f64> = ramp.iter().scan(0.0, |acc, x| {
        *acc += x;
        Some(*acc)
    })
    .collect();
    out.push(Golden { source: ACCUM, machine: ACCUM.machine()?, inputs: nums(&ramp), expected: nums(&sums), tolerance: 0.0 });

    let counts: Vec<f64> = sums.iter().map(|s| s % 3.0).collect();
    out.push(Golden { source: COUNT3, machine: COUNT3.machine()?, inputs: nums(&ramp), expected: nums(&counts), tolerance: 0.0 });

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_source_loads() {
        for s in SOURCES {
            let db = load_source(s.text).unwrap_or_else(|e| panic!("{}: {e}", s.file));
            // Third form spells out undefined assignments, which draws a warning.
            assert_eq!(db.warnings().is_empty(), s != SAH_THIRD, "{}: {:?}", s.file, db.warnings());
        }
    }

    #[test]
    fn golden_traces() {
        for g in build_corpus().unwrap() {
            let t = g.machine.run(&g.inputs).unwrap();
            assert!(g.matches(&t.outputs()), "{}", g.source.name);
            for n in [2, 3, 7] {
                assert_eq!(g.machine.run_unrolled(n, &g.inputs).unwrap(), t, "{} unrolled by {n}", g.source.name);
            }
        }
    }

    #[test]
    fn reference_sanity() {
        assert_eq!(sah_reference(0.0, &[(1.0, true), (2.0, false), (3.0, false), (4.0, true)]), [1.0, 1.0, 1.0, 4.0]);
        let env = adsr_reference(ADSR_RATES, &[true, true, true, true, false, false, false, false]);
        assert_eq!(env, [0.0, 0.5, 1.0, 0.75, 0.5, 0.25, 0.0, 0.0]);
    }
}
