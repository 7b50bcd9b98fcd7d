//! Monte Carlo experiments: symbol error rate sweeps, variance traces and
//! operation counts.
//!
//! Frame `f` of a run always uses the information and noise streams
//! `(seed, f)`, whichever worker simulates it. Frames are simulated in
//! parallel batches but accumulated strictly in frame order, so the stopping
//! point and every counter are the same for any number of workers.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;

use crate::channel::{awgn_transmit, snr_to_sigma, RngStream, StreamPurpose};
use crate::code::SparseParityCheck;
use crate::convergence::{csv_error, trace_convergence, ConvergenceTrace};
use crate::decoder::{Decoder, DecoderConfig, Diagnostics, OpCounters, SelectionWindow, Variant};
use crate::error::{Error, Result};
use crate::shaping::Shaper;

pub const SER_HEADER: [&str; 8] = [
    "snr_db",
    "frames",
    "symbols",
    "errors",
    "ser",
    "mean_iters",
    "wall_s",
    "variant",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    /// Alphabet size per coordinate.
    pub m: u32,
    pub iterations: usize,
    pub variant: Variant,
    pub snr_db: Vec<f64>,
    pub max_frames: u64,
    pub target_errors: u64,
    pub seed: u64,
    /// Overrides the default selection windows for the matrix degree.
    pub windows: Option<SelectionWindow>,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
    /// Record wall-clock time per SNR point.
    pub timing: bool,
}

impl ExperimentConfig {
    pub fn new(m: u32, iterations: usize, variant: Variant, snr_db: Vec<f64>) -> Self {
        ExperimentConfig {
            m,
            iterations,
            variant,
            snr_db,
            max_frames: 1000,
            target_errors: 100,
            seed: 1,
            windows: None,
            threads: None,
            timing: false,
        }
    }

    pub fn validate(&self, h: &SparseParityCheck) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if h.n() <= h.d() || h.d() < crate::code::MIN_DEGREE {
            return bad(format!("need n > d >= 3, got n = {}, d = {}", h.n(), h.d()));
        }
        if self.m < 2 {
            return bad(format!("alphabet size {} must be at least 2", self.m));
        }
        if self.iterations == 0 {
            return bad("iterations must be at least 1".into());
        }
        if self.snr_db.is_empty() {
            return bad("no SNR points".into());
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return bad(format!("SNR {s} is not finite"));
        }
        if self.target_errors == 0 {
            return bad("target errors must be at least 1".into());
        }
        if self.max_frames == 0 {
            return bad("max frames must be at least 1".into());
        }
        if self.threads == Some(0) {
            return bad("thread count must be at least 1".into());
        }
        if let Some(w) = self.windows {
            w.validate(h.d())?;
        }
        Ok(())
    }

    pub fn decoder_config(&self, d: usize) -> DecoderConfig {
        DecoderConfig {
            iterations: self.iterations,
            variant: self.variant,
            windows: self
                .windows
                .unwrap_or_else(|| SelectionWindow::default_for(d)),
            alphabet: self.m,
        }
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(t) = self.threads {
            b = b.num_threads(t);
        }
        b.build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
    }
}

/// Parses `start:step:stop` (inclusive) or a comma-separated list.
pub fn parse_snr_points(text: &str) -> Result<Vec<f64>> {
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::Config(format!("invalid SNR value `{s}`")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, step, stop] => {
            let (start, step, stop) = (num(start)?, num(step)?, num(stop)?);
            if step <= 0.0 || stop < start {
                return Err(Error::Config(format!(
                    "SNR range `{text}` needs step > 0 and stop >= start"
                )));
            }
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            if count > 10_000 {
                return Err(Error::Config(format!("SNR range `{text}` is too long")));
            }
            // round away the accumulated binary error of start + i*step
            Ok((0..count)
                .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
                .collect())
        }
        [_] => {
            let points = text
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(num)
                .collect::<Result<Vec<_>>>()?;
            if points.is_empty() {
                return Err(Error::Config("no SNR points".into()));
            }
            Ok(points)
        }
        _ => Err(Error::Config(format!("cannot parse SNR points `{text}`"))),
    }
}

/// Uniform information integers `0..M` for one frame.
pub fn frame_information(n: usize, m: u32, seed: u64, frame: u64) -> Vec<i64> {
    let mut rng = RngStream::new(seed, frame, StreamPurpose::Information).rng();
    (0..n).map(|_| rng.random_range(0..m as i64)).collect()
}

/// One Monte Carlo frame at noise level `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutcome {
    pub errors: u64,
    pub iterations: u64,
    pub diagnostics: Diagnostics,
}

/// Shape, transmit, decode and compare one frame.
pub fn run_frame(
    h: &SparseParityCheck,
    shaper: &Shaper,
    decoder: &Decoder<'_>,
    sigma: f64,
    seed: u64,
    frame: u64,
) -> Result<FrameOutcome> {
    let m = decoder.config().alphabet;
    let u = frame_information(h.n(), m, seed, frame);
    let shaped = shaper.shape(h, &u, m)?;
    let y = awgn_transmit(
        &shaped.x,
        sigma,
        &RngStream::new(seed, frame, StreamPurpose::Noise),
    );
    let result = decoder.decode(&y, sigma * sigma)?;
    let errors = u.iter().zip(&result.u_hat).filter(|(a, b)| a != b).count() as u64;
    Ok(FrameOutcome {
        errors,
        iterations: result.iterations_run as u64,
        diagnostics: result.diagnostics,
    })
}

/// One row of the SER CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SerRecord {
    pub snr_db: f64,
    pub frames: u64,
    pub symbols: u64,
    pub errors: u64,
    pub ser: f64,
    pub mean_iters: f64,
    /// Only recorded when timing is requested; it is the one column that
    /// differs between otherwise identical runs.
    pub wall_s: Option<f64>,
    pub variant: Variant,
}

impl SerRecord {
    fn fields(&self) -> [String; 8] {
        [
            self.snr_db.to_string(),
            self.frames.to_string(),
            self.symbols.to_string(),
            self.errors.to_string(),
            self.ser.to_string(),
            self.mean_iters.to_string(),
            self.wall_s.map(|w| format!("{w:.3}")).unwrap_or_default(),
            self.variant.to_string(),
        ]
    }
}

pub fn write_ser_csv<W: Write>(records: &[SerRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SER_HEADER).map_err(csv_error)?;
    for r in records {
        w.write_record(r.fields()).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn batch_size(pool: &rayon::ThreadPool) -> u64 {
    (4 * pool.current_num_threads()).max(8) as u64
}

/// Simulates one SNR point until `target_errors` symbol errors or
/// `max_frames` frames, whichever comes first.
fn ser_point(
    h: &SparseParityCheck,
    shaper: &Shaper,
    decoder: &Decoder<'_>,
    config: &ExperimentConfig,
    pool: &rayon::ThreadPool,
    snr_db: f64,
) -> Result<SerRecord> {
    let start = Instant::now();
    let sigma = snr_to_sigma(snr_db, config.m);
    let (mut frames, mut errors, mut iters) = (0u64, 0u64, 0u64);
    let batch = batch_size(pool);
    'outer: while frames < config.max_frames {
        let end = (frames + batch).min(config.max_frames);
        let outcomes: Vec<Result<(u64, u64)>> = pool.install(|| {
            (frames..end)
                .into_par_iter()
                .map(|f| {
                    run_frame(h, shaper, decoder, sigma, config.seed, f)
                        .map(|o| (o.errors, o.iterations))
                })
                .collect()
        });
        for outcome in outcomes {
            let (e, it) = outcome?;
            frames += 1;
            errors += e;
            iters += it;
            if errors >= config.target_errors {
                break 'outer;
            }
        }
    }
    let symbols = frames * h.n() as u64;
    Ok(SerRecord {
        snr_db,
        frames,
        symbols,
        errors,
        ser: errors as f64 / symbols as f64,
        mean_iters: iters as f64 / frames as f64,
        wall_s: config.timing.then(|| start.elapsed().as_secs_f64()),
        variant: config.variant,
    })
}

/// Symbol error rate at every configured SNR point.
pub fn run_ser_sweep(h: &SparseParityCheck, config: &ExperimentConfig) -> Result<Vec<SerRecord>> {
    run_ser_sweep_with(h, config, |_| {})
}

/// [`run_ser_sweep`] calling `progress` after each SNR point.
pub fn run_ser_sweep_with(
    h: &SparseParityCheck,
    config: &ExperimentConfig,
    mut progress: impl FnMut(&SerRecord),
) -> Result<Vec<SerRecord>> {
    config.validate(h)?;
    let shaper = Shaper::new(h)?;
    let decoder = Decoder::new(h, config.decoder_config(h.d()))?;
    let pool = config.pool()?;
    let mut records = Vec::with_capacity(config.snr_db.len());
    for &snr in &config.snr_db {
        let record = ser_point(h, &shaper, &decoder, config, &pool, snr)?;
        progress(&record);
        records.push(record);
    }
    Ok(records)
}

/// Variance trace averaged over `frames` frames at the first SNR point.
pub fn run_convergence_experiment(
    h: &SparseParityCheck,
    config: &ExperimentConfig,
    frames: u64,
) -> Result<ConvergenceTrace> {
    config.validate(h)?;
    if frames == 0 {
        return Err(Error::Config("frames must be at least 1".into()));
    }
    let shaper = Shaper::new(h)?;
    let decoder = Decoder::new(h, config.decoder_config(h.d()))?;
    let pool = config.pool()?;
    let sigma = snr_to_sigma(config.snr_db[0], config.m);
    let diagnostics: Vec<Diagnostics> = pool.install(|| {
        (0..frames)
            .into_par_iter()
            .map(|f| run_frame(h, &shaper, &decoder, sigma, config.seed, f).map(|o| o.diagnostics))
            .collect::<Result<_>>()
    })?;
    trace_convergence(&diagnostics, sigma * sigma)
}

/// Variable-node work per node and iteration, for one column degree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexityRow {
    pub variant: Variant,
    pub degree: usize,
    /// Variable nodes of this degree.
    pub nodes: u64,
    pub products_per_node: f64,
    pub components_per_edge: f64,
    pub fallbacks_per_node: f64,
}

/// Counts pairwise products and mixture components for both variants on a
/// single frame at `snr_db`.
pub fn run_complexity_report(
    h: &SparseParityCheck,
    iterations: usize,
    m: u32,
    snr_db: f64,
    seed: u64,
) -> Result<Vec<ComplexityRow>> {
    let shaper = Shaper::new(h)?;
    let sigma = snr_to_sigma(snr_db, m);
    let mut rows = Vec::new();
    for variant in [Variant::Proposed, Variant::Reference] {
        let decoder = Decoder::new(h, DecoderConfig::new(h.d(), iterations, variant, m))?;
        let outcome = run_frame(h, &shaper, &decoder, sigma, seed, 0)?;
        rows.extend(complexity_rows(
            variant,
            &outcome.diagnostics.ops,
            iterations,
        ));
    }
    Ok(rows)
}

fn complexity_rows<'a>(
    variant: Variant,
    ops: &'a BTreeMap<usize, OpCounters>,
    iterations: usize,
) -> impl Iterator<Item = ComplexityRow> + 'a {
    ops.iter().map(move |(&degree, c)| {
        let updates = c.node_updates.max(1) as f64;
        ComplexityRow {
            variant,
            degree,
            nodes: c.node_updates / iterations as u64,
            products_per_node: c.product_updates as f64 / updates,
            components_per_edge: c.components as f64 / (updates * degree as f64),
            fallbacks_per_node: c.fallback_updates as f64 / updates,
        }
    })
}

pub fn write_complexity_csv<W: Write>(rows: &[ComplexityRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variant",
        "degree",
        "nodes",
        "products_per_node",
        "components_per_edge",
        "fallbacks_per_node",
    ])
    .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.variant.to_string(),
            r.degree.to_string(),
            r.nodes.to_string(),
            r.products_per_node.to_string(),
            r.components_per_edge.to_string(),
            r.fallbacks_per_node.to_string(),
        ])
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_range() {
        assert_eq!(
            parse_snr_points("18:0.5:20").unwrap(),
            vec![18.0, 18.5, 19.0, 19.5, 20.0]
        );
        assert_eq!(
            parse_snr_points("0:0.1:0.3").unwrap(),
            vec![0.0, 0.1, 0.2, 0.3]
        );
        assert_eq!(parse_snr_points("21.9").unwrap(), vec![21.9]);
        assert_eq!(parse_snr_points("1,2.5, 3").unwrap(), vec![1.0, 2.5, 3.0]);
        for bad in ["", "a", "1:0:2", "3:1:2", "1:2", "1:2:3:4", "1,,x"] {
            assert!(parse_snr_points(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn information_in_alphabet() {
        let u = frame_information(1000, 8, 3, 7);
        assert!(u.iter().all(|&v| (0..8).contains(&v)));
        assert_eq!(u, frame_information(1000, 8, 3, 7));
        assert_ne!(u, frame_information(1000, 8, 3, 8));
    }

    #[test]
    fn ser_csv_layout() {
        let r = SerRecord {
            snr_db: 20.5,
            frames: 3,
            symbols: 300,
            errors: 3,
            ser: 0.01,
            mean_iters: 10.0,
            wall_s: None,
            variant: Variant::Proposed,
        };
        let mut buf = Vec::new();
        write_ser_csv(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "snr_db,frames,symbols,errors,ser,mean_iters,wall_s,variant\n20.5,3,300,3,0.01,10,,proposed\n"
        );
    }
}
