//! Gaussian-approximation message passing on the Tanner graph of `H`.
//!
//! Variable-to-check messages are single Gaussians, check-to-variable
//! messages are periodic Gaussians. Each iteration is one flooding pass:
//! every check node updates from the previous variable messages, then every
//! variable node updates from the fresh check messages.

mod check;
mod variable;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use crate::code::{LabelClass, SparseParityCheck};
use crate::error::{Error, Result};
use crate::gaussian::{Gaussian, PeriodicGaussian};
use crate::shaping::recover_integers;

pub use check::check_node;
pub use variable::{
    proposed_edge_components, proposed_mother, reference_decision, select_left_right,
    variable_node_proposed, variable_node_proposed_into, variable_node_reference,
    variable_node_reference_into, MotherMessage, ReferenceScratch, Selected,
};

/// Which variable-node update to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Two replicas per check message, all `2^(d-1)` cross products.
    Reference,
    /// Left/right products with window selection and a shared mother message.
    Proposed,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Reference => "reference",
            Variant::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Variant::Reference),
            "proposed" => Ok(Variant::Proposed),
            other => Err(Error::Config(format!(
                "unknown decoder `{other}` (expected proposed or reference)"
            ))),
        }
    }
}

/// Half-widths of the selection windows around `y_k`, by edge-label class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionWindow {
    pub unit: f64,
    pub light: f64,
}

impl SelectionWindow {
    /// 1.0 and 1.7 for `d = 7`; otherwise `min(1, 0.9·√d/2)` and `0.6·√d`.
    pub fn default_for(d: usize) -> Self {
        if d == 7 {
            return SelectionWindow {
                unit: 1.0,
                light: 1.7,
            };
        }
        let s = (d as f64).sqrt();
        SelectionWindow {
            unit: (0.9 * s / 2.0).min(1.0),
            light: 0.6 * s,
        }
    }

    /// Both widths must lie strictly between 0.5 and `√d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        variable::ensure_eps(&[self.unit, self.light], d)
    }

    pub fn for_label(&self, h: f64) -> f64 {
        match LabelClass::of(h) {
            LabelClass::Unit => self.unit,
            LabelClass::Light => self.light,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub iterations: usize,
    pub variant: Variant,
    pub windows: SelectionWindow,
    /// Per-coordinate alphabet size `M` used when recovering integers.
    pub alphabet: u32,
}

impl DecoderConfig {
    pub fn new(d: usize, iterations: usize, variant: Variant, alphabet: u32) -> Self {
        DecoderConfig {
            iterations,
            variant,
            windows: SelectionWindow::default_for(d),
            alphabet,
        }
    }
}

/// Work counters for variable-node updates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// Variable-node updates performed.
    pub node_updates: u64,
    /// Pairwise Gaussian products (one per factor absorbed).
    pub product_updates: u64,
    /// Mixture components produced by the reference expansion.
    pub components: u64,
    /// Factors re-absorbed when a division had to be redone from scratch.
    pub fallback_updates: u64,
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, o: Self) {
        self.node_updates += o.node_updates;
        self.product_updates += o.product_updates;
        self.components += o.components;
        self.fallback_updates += o.fallback_updates;
    }
}

/// Mean message variances of one iteration, split by `|h|` class.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IterationStats {
    /// Variable messages on `|h| = 1` edges.
    pub v_unit: f64,
    /// Variable messages on `|h| = 1/√d` edges.
    pub v_light: f64,
    /// Check messages on `|h| = 1` edges.
    pub c_unit: f64,
    /// Check messages on `|h| = 1/√d` edges.
    pub c_light: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub iterations: Vec<IterationStats>,
    /// Variable-node counters keyed by column degree.
    pub ops: BTreeMap<usize, OpCounters>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub x_hat: Vec<f64>,
    pub u_hat: Vec<i64>,
    pub iterations_run: usize,
    pub diagnostics: Diagnostics,
}

/// Both directions of every edge message, edges numbered row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMessageSet {
    pub variable: Vec<Gaussian>,
    pub check: Vec<PeriodicGaussian>,
    pub iteration: usize,
}

#[derive(Debug, Clone)]
struct Graph {
    n: usize,
    /// `(column, label)` per edge.
    edges: Vec<(usize, f64)>,
    row_start: Vec<usize>,
    col_edges: Vec<Vec<usize>>,
    unit: Vec<bool>,
}

impl Graph {
    fn new(h: &SparseParityCheck) -> Self {
        let n = h.n();
        let mut edges = Vec::with_capacity(h.nnz());
        let mut row_start = Vec::with_capacity(n + 1);
        let mut col_edges = vec![Vec::new(); n];
        for row in h.rows() {
            row_start.push(edges.len());
            for &(c, v) in row {
                col_edges[c].push(edges.len());
                edges.push((c, v));
            }
        }
        row_start.push(edges.len());
        let unit = edges
            .iter()
            .map(|&(_, v)| LabelClass::of(v) == LabelClass::Unit)
            .collect();
        Graph {
            n,
            edges,
            row_start,
            col_edges,
            unit,
        }
    }

    fn row_edges(&self, r: usize) -> std::ops::Range<usize> {
        self.row_start[r]..self.row_start[r + 1]
    }
}

/// A decoder bound to one parity-check matrix; reusable across frames.
#[derive(Debug, Clone)]
pub struct Decoder<'h> {
    h: &'h SparseParityCheck,
    graph: Graph,
    config: DecoderConfig,
    eps: Vec<f64>,
}

struct Scratch {
    row_in: Vec<(Gaussian, f64)>,
    row_out: Vec<PeriodicGaussian>,
    col_in: Vec<PeriodicGaussian>,
    col_eps: Vec<f64>,
    col_out: Vec<Gaussian>,
    reference: ReferenceScratch,
}

impl<'h> Decoder<'h> {
    pub fn new(h: &'h SparseParityCheck, config: DecoderConfig) -> Result<Self> {
        if config.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if config.alphabet < 2 {
            return Err(Error::Config("alphabet size must be at least 2".into()));
        }
        if config.variant == Variant::Proposed {
            config.windows.validate(h.d())?;
        }
        let graph = Graph::new(h);
        let eps = graph
            .edges
            .iter()
            .map(|&(_, v)| config.windows.for_label(v))
            .collect();
        Ok(Decoder {
            h,
            graph,
            config,
            eps,
        })
    }

    pub fn config(&self) -> &DecoderConfig {
        &self.config
    }

    /// Every variable node sends `N(y_k, σ²)` on each of its edges.
    pub fn init_messages(&self, y: &[f64], sigma2: f64) -> EdgeMessageSet {
        let variable = self
            .graph
            .edges
            .iter()
            .map(|&(c, _)| Gaussian::new(y[c], sigma2))
            .collect();
        EdgeMessageSet {
            variable,
            check: vec![PeriodicGaussian::new(0.0, 1.0, 1.0); self.graph.edges.len()],
            iteration: 0,
        }
    }

    fn scratch(&self) -> Scratch {
        let d = self.h.d().max(1);
        Scratch {
            row_in: Vec::with_capacity(d),
            row_out: Vec::with_capacity(d),
            col_in: Vec::with_capacity(d),
            col_eps: Vec::with_capacity(d),
            col_out: Vec::with_capacity(d),
            reference: ReferenceScratch::default(),
        }
    }

    fn check_pass(&self, msgs: &mut EdgeMessageSet, s: &mut Scratch) {
        for r in 0..self.graph.row_start.len() - 1 {
            let range = self.graph.row_edges(r);
            s.row_in.clear();
            s.row_in.extend(
                range
                    .clone()
                    .map(|e| (msgs.variable[e], self.graph.edges[e].1)),
            );
            s.row_out.clear();
            s.row_out
                .resize(range.len(), PeriodicGaussian::new(0.0, 1.0, 1.0));
            check::check_row(&s.row_in, &mut s.row_out);
            msgs.check[range].copy_from_slice(&s.row_out);
        }
    }

    fn variable_pass(
        &self,
        y: &[f64],
        sigma2: f64,
        msgs: &mut EdgeMessageSet,
        s: &mut Scratch,
        ops: &mut BTreeMap<usize, OpCounters>,
    ) {
        for (c, edges) in self.graph.col_edges.iter().enumerate() {
            let d = edges.len();
            if d == 0 {
                continue;
            }
            s.col_in.clear();
            s.col_in.extend(edges.iter().map(|&e| msgs.check[e]));
            s.col_out.clear();
            s.col_out.resize(d, Gaussian::new(0.0, 1.0));
            let counters = ops.entry(d).or_default();
            match self.config.variant {
                Variant::Proposed => {
                    s.col_eps.clear();
                    s.col_eps.extend(edges.iter().map(|&e| self.eps[e]));
                    variable::variable_node_proposed_into(
                        y[c],
                        sigma2,
                        &s.col_in,
                        &s.col_eps,
                        &mut s.col_out,
                        counters,
                    );
                }
                Variant::Reference => variable::variable_node_reference_into(
                    y[c],
                    sigma2,
                    &s.col_in,
                    &mut s.col_out,
                    &mut s.reference,
                    counters,
                ),
            }
            for (&e, &g) in edges.iter().zip(&s.col_out) {
                msgs.variable[e] = g;
            }
        }
        msgs.iteration += 1;
    }

    fn stats(&self, msgs: &EdgeMessageSet) -> IterationStats {
        let mut sum = [0.0; 4];
        let mut count = [0usize; 2];
        for (e, &unit) in self.graph.unit.iter().enumerate() {
            let k = usize::from(!unit);
            sum[k] += msgs.variable[e].variance;
            sum[2 + k] += msgs.check[e].variance;
            count[k] += 1;
        }
        let mean = |s: f64, c: usize| if c == 0 { 0.0 } else { s / c as f64 };
        IterationStats {
            v_unit: mean(sum[0], count[0]),
            v_light: mean(sum[1], count[1]),
            c_unit: mean(sum[2], count[0]),
            c_light: mean(sum[3], count[1]),
        }
    }

    fn final_decision(&self, y: &[f64], sigma2: f64, msgs: &EdgeMessageSet) -> Vec<f64> {
        let mut incoming = Vec::new();
        let mut eps = Vec::new();
        (0..self.graph.n)
            .map(|c| {
                let edges = &self.graph.col_edges[c];
                incoming.clear();
                incoming.extend(edges.iter().map(|&e| msgs.check[e]));
                match self.config.variant {
                    Variant::Proposed => {
                        eps.clear();
                        eps.extend(edges.iter().map(|&e| self.eps[e]));
                        proposed_mother(y[c], sigma2, &incoming, &eps).decision(y[c])
                    }
                    Variant::Reference => reference_decision(y[c], sigma2, &incoming),
                }
            })
            .collect()
    }

    /// Runs the configured number of iterations on the observation `y`.
    pub fn decode(&self, y: &[f64], sigma2: f64) -> Result<DecodeResult> {
        if y.len() != self.graph.n {
            return Err(Error::LengthMismatch {
                expected: self.graph.n,
                actual: y.len(),
            });
        }
        if !(sigma2 > 0.0) {
            return Err(Error::Config(format!(
                "noise variance {sigma2} must be positive"
            )));
        }
        let mut msgs = self.init_messages(y, sigma2);
        let mut s = self.scratch();
        let mut diagnostics = Diagnostics::default();
        for _ in 0..self.config.iterations {
            self.check_pass(&mut msgs, &mut s);
            self.variable_pass(y, sigma2, &mut msgs, &mut s, &mut diagnostics.ops);
            diagnostics.iterations.push(self.stats(&msgs));
        }
        self.check_pass(&mut msgs, &mut s);
        let x_hat = self.final_decision(y, sigma2, &msgs);
        let u_hat = recover_integers(&x_hat, self.h, self.config.alphabet);
        Ok(DecodeResult {
            x_hat,
            u_hat,
            iterations_run: msgs.iteration,
            diagnostics,
        })
    }
}

/// One-shot decode of `y` under `config`.
pub fn decode(
    h: &SparseParityCheck,
    y: &[f64],
    sigma2: f64,
    config: &DecoderConfig,
) -> Result<DecodeResult> {
    Decoder::new(h, *config)?.decode(y, sigma2)
}
