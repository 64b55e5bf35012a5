//! Gain-plane parameter sweeps with per-cell regime classification.
//!
//! A sweep instantiates the base channel at every grid cell (row-major, x
//! fastest), classifies it, and emits `x,y,regime,detail,sum_rate_bits` rows.
//! Cells are evaluated concurrently when the `parallel` feature is on, but
//! the output order is fixed, so identical flags produce byte-identical CSV.

use std::io;

use thiserror::Error;

use crate::capacity::{classify, ClassificationResult, Regime};
use crate::channel::{Channel, ChannelKind, ManyToOneChannel, OneToManyChannel};
use crate::hk::Topology;
use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("step must be positive, got {0}")]
    BadStep(f64),
    #[error("axis range must satisfy lo <= hi, got [{0}, {1}]")]
    BadRange(f64, f64),
    #[error("parameter {0} does not exist for this channel")]
    BadParam(String),
    #[error("swept channel is invalid: {0}")]
    BadChannel(String),
}

/// A sweepable channel parameter, named the way axes are spelled on the
/// command line (`h2`, `p1`, ...). Gain indices follow the topology: h2..hK
/// for many-to-one, h1..h(K-1) for one-to-many.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Gain(usize),
    Power(usize),
}

impl SweepParam {
    pub fn parse(name: &str) -> Option<Self> {
        let name = name.trim();
        if name.len() < 2 {
            return None;
        }
        let (kind, idx) = name.split_at(1);
        let idx: usize = idx.parse().ok()?;
        match kind {
            "h" | "H" => Some(SweepParam::Gain(idx)),
            "p" | "P" => Some(SweepParam::Power(idx)),
            _ => None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            SweepParam::Gain(i) => format!("h{i}"),
            SweepParam::Power(i) => format!("p{i}"),
        }
    }
}

/// Mutable view of a channel's raw parameters while building grid cells.
#[derive(Debug, Clone)]
struct RawParams {
    kind: ChannelKind,
    powers: Vec<f64>,
    gains: Vec<f64>,
}

impl RawParams {
    fn of(ch: &Channel) -> Self {
        match ch {
            Channel::ManyToOne(c) => Self {
                kind: ChannelKind::ManyToOne,
                powers: c.powers().to_vec(),
                gains: c.gains().to_vec(),
            },
            Channel::OneToMany(c) => Self {
                kind: ChannelKind::OneToMany,
                powers: c.powers().to_vec(),
                gains: c.gains().to_vec(),
            },
        }
    }

    fn gain_slot(&self, i: usize) -> Option<usize> {
        match self.kind {
            ChannelKind::ManyToOne if (2..=self.powers.len()).contains(&i) => Some(i - 2),
            ChannelKind::OneToMany if (1..self.powers.len()).contains(&i) => Some(i - 1),
            _ => None,
        }
    }

    fn set(&mut self, param: SweepParam, value: f64) -> Result<(), SweepError> {
        match param {
            SweepParam::Gain(i) => {
                let slot = self
                    .gain_slot(i)
                    .ok_or_else(|| SweepError::BadParam(param.name()))?;
                self.gains[slot] = value;
            }
            SweepParam::Power(i) => {
                if i < 1 || i > self.powers.len() {
                    return Err(SweepError::BadParam(param.name()));
                }
                self.powers[i - 1] = value;
            }
        }
        Ok(())
    }

    fn build(&self) -> Result<Channel, SweepError> {
        let err = |e: Vec<crate::channel::ChannelError>| {
            SweepError::BadChannel(e.first().map(ToString::to_string).unwrap_or_default())
        };
        Ok(match self.kind {
            ChannelKind::ManyToOne => Channel::ManyToOne(
                ManyToOneChannel::new(self.powers.clone(), self.gains.clone()).map_err(err)?,
            ),
            ChannelKind::OneToMany => Channel::OneToMany(
                OneToManyChannel::new(self.powers.clone(), self.gains.clone()).map_err(err)?,
            ),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: SweepParam,
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Axis {
    pub fn new(param: SweepParam, lo: f64, hi: f64, step: f64) -> Result<Self, SweepError> {
        if !(step > 0.0) {
            return Err(SweepError::BadStep(step));
        }
        if !(lo <= hi) {
            return Err(SweepError::BadRange(lo, hi));
        }
        Ok(Self { param, lo, hi, step })
    }

    /// Cell count `ceil((hi - lo)/step + 1)`; the division is snapped to the
    /// nearest integer when it is within 1e-9 of one, so grids whose step
    /// divides the range exactly are not off by one.
    pub fn count(&self) -> usize {
        let d = (self.hi - self.lo) / self.step;
        let snapped = if (d - d.round()).abs() < 1e-9 * (1.0 + d.abs()) { d.round() } else { d };
        (snapped + 1.0).ceil() as usize
    }

    pub fn value(&self, i: usize) -> f64 {
        self.lo + i as f64 * self.step
    }
}

/// Rectangular gain-parameter grid: an x axis, an optional y axis, and the
/// base channel every fixed parameter is taken from.
#[derive(Debug, Clone)]
pub struct SweepGrid {
    pub base: Channel,
    pub x: Axis,
    pub y: Option<Axis>,
}

/// One classified grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub x: f64,
    pub y: Option<f64>,
    pub regime: String,
    pub detail: String,
    pub sum_rate_bits: f64,
}

/// Classifies every cell of the grid. Row order is row-major with x fastest.
pub fn run_sweep(grid: &SweepGrid) -> Result<Vec<SweepCell>, SweepError> {
    let cells = cell_params(grid)?;
    Ok(par::map_collect(cells, evaluate_cell))
}

/// Sequential twin of [`run_sweep`]; always available, identical output.
pub fn run_sweep_sequential(grid: &SweepGrid) -> Result<Vec<SweepCell>, SweepError> {
    let cells = cell_params(grid)?;
    Ok(par::map_collect_seq(cells, evaluate_cell))
}

fn cell_params(grid: &SweepGrid) -> Result<Vec<(f64, Option<f64>, Channel)>, SweepError> {
    let base = RawParams::of(&grid.base);
    // Fail fast on axes that don't exist for this topology.
    base.clone().set(grid.x.param, grid.x.lo)?;
    if let Some(y) = &grid.y {
        base.clone().set(y.param, y.lo)?;
    }

    let nx = grid.x.count();
    let ny = grid.y.as_ref().map_or(1, Axis::count);
    let mut cells = Vec::with_capacity(nx * ny);
    for yi in 0..ny {
        for xi in 0..nx {
            let mut raw = base.clone();
            let x = grid.x.value(xi);
            raw.set(grid.x.param, x)?;
            let y = match &grid.y {
                Some(ya) => {
                    let y = ya.value(yi);
                    raw.set(ya.param, y)?;
                    Some(y)
                }
                None => None,
            };
            cells.push((x, y, raw.build()?));
        }
    }
    Ok(cells)
}

fn evaluate_cell((x, y, channel): &(f64, Option<f64>, Channel)) -> SweepCell {
    let result = classify(channel);
    let topology = match channel {
        Channel::ManyToOne(_) => Topology::ManyToOne,
        Channel::OneToMany(_) => Topology::OneToMany,
    };
    let (regime, detail, bits) = summarize(&result, topology, channel.users());
    SweepCell { x: *x, y: *y, regime, detail, sum_rate_bits: bits }
}

/// Short regime tag plus a decode-set detail field. Index lists use `;` so
/// the CSV stays quote-free.
fn summarize(
    result: &ClassificationResult,
    topology: Topology,
    users: usize,
) -> (String, String, f64) {
    fn idx(list: &[usize]) -> String {
        list.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
    }
    match result.matches.first() {
        Some(m) => {
            let (tag, detail) = match &m.regime {
                Regime::MiK0 { decode_set } => {
                    (format!("MI{}_0", decode_set.len() + 1), format!("B={{{}}}", idx(decode_set)))
                }
                Regime::MiK1 { decode_set, k } => (
                    format!("MI{}_1:k={}", decode_set.len() + 1, k),
                    format!("B={{{}}}", idx(decode_set)),
                ),
                Regime::OiK { decode_set } => {
                    (format!("OI_{}", decode_set.len()), format!("I={{{}}}", idx(decode_set)))
                }
                Regime::OiKm11 { l } => (format!("OI_{}_1:l={}", users - 1, l), "J={}".to_string()),
                Regime::Unknown => unreachable!("matches holds passing regimes only"),
            };
            (tag, detail, m.sum_capacity_bits)
        }
        None => {
            let set = idx(result.best_decode_set.indices());
            let detail = match topology {
                Topology::ManyToOne => format!("best:B={{{set}}}"),
                Topology::OneToMany => format!("best:I={{{set}}}"),
            };
            ("UNK".to_string(), detail, result.best_achievable_bits)
        }
    }
}

/// CSV with the fixed schema `x,y,regime,detail,sum_rate_bits`; 1-D sweeps
/// leave the y column empty.
pub fn write_csv<W: io::Write>(cells: &[SweepCell], w: &mut W) -> io::Result<()> {
    writeln!(w, "x,y,regime,detail,sum_rate_bits")?;
    for c in cells {
        let y = c.y.map(|v| v.to_string()).unwrap_or_default();
        writeln!(w, "{},{},{},{},{:.9}", c.x, y, c.regime, c.detail, c.sum_rate_bits)?;
    }
    Ok(())
}

/// Convenience: sweep and render to a CSV byte buffer.
pub fn sweep_csv(grid: &SweepGrid) -> Result<Vec<u8>, SweepError> {
    let cells = run_sweep(grid)?;
    let mut out = Vec::new();
    write_csv(&cells, &mut out).expect("writing to memory cannot fail");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{ManyToOneChannel, OneToManyChannel};

    fn o2m_grid(step: f64) -> SweepGrid {
        let base = Channel::OneToMany(
            OneToManyChannel::new(vec![1.0, 1.0, 1.0], vec![0.0, 0.0]).unwrap(),
        );
        SweepGrid {
            base,
            x: Axis::new(SweepParam::Gain(1), 0.0, 4.0, step).unwrap(),
            y: Some(Axis::new(SweepParam::Gain(2), 0.0, 4.0, step).unwrap()),
        }
    }

    fn cell_at(cells: &[SweepCell], x: f64, y: f64) -> &SweepCell {
        cells
            .iter()
            .find(|c| (c.x - x).abs() < 1e-9 && (c.y.unwrap() - y).abs() < 1e-9)
            .expect("cell on grid")
    }

    #[test]
    fn axis_counts() {
        let a = Axis::new(SweepParam::Gain(1), 0.0, 4.0, 0.25).unwrap();
        assert_eq!(a.count(), 17);
        let a = Axis::new(SweepParam::Gain(1), 0.0, 4.0, 0.01).unwrap();
        assert_eq!(a.count(), 401);
        let a = Axis::new(SweepParam::Gain(1), 0.0, 4.0, 0.001).unwrap();
        assert_eq!(a.count(), 4001);
        // Non-dividing step keeps the literal ceil.
        let a = Axis::new(SweepParam::Gain(1), 0.0, 1.0, 0.3).unwrap();
        assert_eq!(a.count(), 5);
        // Degenerate single-cell axis.
        let a = Axis::new(SweepParam::Gain(1), 1.2, 1.2, 1.0).unwrap();
        assert_eq!(a.count(), 1);

        assert_eq!(
            Axis::new(SweepParam::Gain(1), 0.0, 1.0, 0.0),
            Err(SweepError::BadStep(0.0))
        );
        assert_eq!(
            Axis::new(SweepParam::Gain(1), 2.0, 1.0, 0.1),
            Err(SweepError::BadRange(2.0, 1.0))
        );
    }

    #[test]
    fn one_to_many_map_known_cells() {
        let cells = run_sweep(&o2m_grid(0.25)).unwrap();
        assert_eq!(cells.len(), 17 * 17);
        assert_eq!(cell_at(&cells, 3.0, 3.0).regime, "OI_2");
        assert_eq!(cell_at(&cells, 0.25, 0.25).regime, "OI_0");
        assert_eq!(cell_at(&cells, 3.0, 0.5).regime, "OI_1");
        assert_eq!(cell_at(&cells, 3.0, 1.25).regime, "OI_2_1:l=2");
    }

    #[test]
    fn pivot_cell_between_the_bands() {
        // Single-cell grid at (h1, h2) = (1.2, 1.3): everyone decodes, pivot
        // receiver 1.
        let base = Channel::OneToMany(
            OneToManyChannel::new(vec![1.0, 1.0, 1.0], vec![0.0, 0.0]).unwrap(),
        );
        let grid = SweepGrid {
            base,
            x: Axis::new(SweepParam::Gain(1), 1.2, 1.2, 1.0).unwrap(),
            y: Some(Axis::new(SweepParam::Gain(2), 1.3, 1.3, 1.0).unwrap()),
        };
        let cells = run_sweep(&grid).unwrap();
        assert_eq!(cells.len(), 1);
        assert_eq!(cells[0].regime, "OI_2_1:l=1");
    }

    #[test]
    fn many_to_one_map_known_cells() {
        let base = Channel::ManyToOne(
            ManyToOneChannel::new(vec![2.0, 2.0, 2.0], vec![0.0, 0.0]).unwrap(),
        );
        let grid = SweepGrid {
            base,
            x: Axis::new(SweepParam::Gain(2), 0.0, 4.0, 0.5).unwrap(),
            y: Some(Axis::new(SweepParam::Gain(3), 0.0, 4.0, 0.5).unwrap()),
        };
        let cells = run_sweep(&grid).unwrap();
        assert_eq!(cell_at(&cells, 0.5, 0.5).regime, "MI1_0");
        assert_eq!(cell_at(&cells, 3.0, 3.0).regime, "MI3_0");
        assert_eq!(cell_at(&cells, 4.0, 0.5).regime, "MI2_0");
        let unk = cell_at(&cells, 1.5, 1.5);
        assert_eq!(unk.regime, "UNK");
        assert!(unk.detail.starts_with("best:B="));
        assert!(unk.sum_rate_bits > 0.0);
    }

    #[test]
    fn rows_are_row_major_x_fastest() {
        let cells = run_sweep(&o2m_grid(1.0)).unwrap();
        assert_eq!(cells.len(), 25);
        assert_eq!((cells[0].x, cells[0].y.unwrap()), (0.0, 0.0));
        assert_eq!((cells[1].x, cells[1].y.unwrap()), (1.0, 0.0));
        assert_eq!((cells[5].x, cells[5].y.unwrap()), (0.0, 1.0));
    }

    #[test]
    fn parallel_and_sequential_agree_and_csv_is_stable() {
        let grid = o2m_grid(0.5);
        let par = run_sweep(&grid).unwrap();
        let seq = run_sweep_sequential(&grid).unwrap();
        assert_eq!(par, seq);

        let a = sweep_csv(&grid).unwrap();
        let b = sweep_csv(&grid).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("x,y,regime,detail,sum_rate_bits\n"));
        assert!(text.lines().count() == 1 + 9 * 9);
        // No cell detail smuggles a comma into the CSV.
        assert!(text.lines().all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn one_dimensional_sweep_leaves_y_empty() {
        let base = Channel::OneToMany(
            OneToManyChannel::new(vec![1.0, 1.0, 1.0], vec![0.5, 0.0]).unwrap(),
        );
        let grid = SweepGrid {
            base,
            x: Axis::new(SweepParam::Gain(2), 0.0, 1.0, 0.5).unwrap(),
            y: None,
        };
        let cells = run_sweep(&grid).unwrap();
        assert_eq!(cells.len(), 3);
        assert!(cells.iter().all(|c| c.y.is_none()));
        let mut out = Vec::new();
        write_csv(&cells, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(1).unwrap().starts_with("0,,"));
    }

    #[test]
    fn bad_axis_parameter_is_rejected() {
        let base = Channel::ManyToOne(
            ManyToOneChannel::new(vec![2.0, 2.0], vec![0.0]).unwrap(),
        );
        // h1 does not exist for many-to-one (receiver 1 is the victim).
        let grid = SweepGrid {
            base,
            x: Axis::new(SweepParam::Gain(1), 0.0, 1.0, 0.5).unwrap(),
            y: None,
        };
        assert_eq!(run_sweep(&grid), Err(SweepError::BadParam("h1".into())));
    }

    #[test]
    fn power_axes_are_accepted() {
        let base = Channel::ManyToOne(
            ManyToOneChannel::new(vec![2.0, 2.0], vec![0.5]).unwrap(),
        );
        let grid = SweepGrid {
            base,
            x: Axis::new(SweepParam::Power(1), 0.0, 2.0, 1.0).unwrap(),
            y: None,
        };
        let cells = run_sweep(&grid).unwrap();
        assert_eq!(cells.len(), 3);
    }

    #[test]
    fn param_names_parse() {
        assert_eq!(SweepParam::parse("h2"), Some(SweepParam::Gain(2)));
        assert_eq!(SweepParam::parse("P1"), Some(SweepParam::Power(1)));
        assert_eq!(SweepParam::parse("x1"), None);
        assert_eq!(SweepParam::parse("h"), None);
    }
}
