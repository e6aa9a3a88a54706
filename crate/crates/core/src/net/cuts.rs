//! Two thresholds on the scalar network output that split it into the
//! three species.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::species::Species;

/// Grid is `(GRID_FIRST + i) / 100` for `i` in `0..GRID_LEN`, i.e. 0.50 to 3.50.
const GRID_FIRST: usize = 50;
const GRID_LEN: usize = 301;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutSet {
    pub t_low: f64,
    pub t_high: f64,
}

impl Default for CutSet {
    fn default() -> Self {
        Self {
            t_low: 1.5,
            t_high: 2.5,
        }
    }
}

impl CutSet {
    pub fn new(t_low: f64, t_high: f64) -> Result<Self> {
        if !(t_low < t_high) {
            return Err(Error::Domain(format!("cuts ({t_low}, {t_high}) must satisfy t_low < t_high")));
        }
        Ok(Self { t_low, t_high })
    }

    /// `< t_low` is a pion, `[t_low, t_high)` a kaon, `>= t_high` a proton.
    pub fn classify(&self, output: f64) -> Species {
        if output < self.t_low {
            Species::Pion
        } else if output < self.t_high {
            Species::Kaon
        } else {
            Species::Proton
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutSearch {
    pub cuts: CutSet,
    pub objective: f64,
    /// Set when every output is identical and the objective is flat.
    pub degenerate: bool,
}

fn grid_value(i: usize) -> f64 {
    (GRID_FIRST + i) as f64 / 100.0
}

/// Mean over species of efficiency x purity for assignment counts
/// `table[true][assigned]`; an undefined purity counts as zero.
pub fn cut_objective(table: &[[usize; 3]; 3]) -> f64 {
    let mut total = 0.0;
    for s in 0..3 {
        let truth: usize = table[s].iter().sum();
        let assigned: usize = (0..3).map(|t| table[t][s]).sum();
        if truth > 0 && assigned > 0 {
            let hit = table[s][s] as f64;
            total += (hit / truth as f64) * (hit / assigned as f64);
        }
    }
    total / 3.0
}

/// Objective of an explicit cut pair.
pub fn evaluate_cuts(outputs: &[f64], labels: &[Species], cuts: &CutSet) -> f64 {
    let mut table = [[0usize; 3]; 3];
    for (&o, s) in outputs.iter().zip(labels) {
        table[s.index()][cuts.classify(o).index()] += 1;
    }
    cut_objective(&table)
}

/// Grid search over `t_low < t_high` on the 0.01 grid in [0.5, 3.5],
/// maximizing [`cut_objective`]. Ties go to the pair closest to (1.5, 2.5).
pub fn optimize_cuts(outputs: &[f64], labels: &[Species]) -> Result<CutSearch> {
    if outputs.len() != labels.len() {
        return Err(Error::Dimension("outputs and labels differ in length".into()));
    }
    for s in Species::ALL {
        if !labels.contains(&s) {
            return Err(Error::MissingSpecies(s.name().into()));
        }
    }
    if outputs.iter().all(|o| *o == outputs[0]) {
        let cuts = CutSet::default();
        return Ok(CutSearch {
            objective: evaluate_cuts(outputs, labels, &cuts),
            cuts,
            degenerate: true,
        });
    }
    // below[g][s]: rows of species s with output < grid_value(g)
    let mut below = vec![[0usize; 3]; GRID_LEN];
    for (&o, s) in outputs.iter().zip(labels) {
        // first grid index whose value exceeds o
        let first = (0..GRID_LEN).find(|&g| o < grid_value(g)).unwrap_or(GRID_LEN);
        for row in below.iter_mut().skip(first) {
            row[s.index()] += 1;
        }
    }
    let totals: [usize; 3] = Species::ALL.map(|s| labels.iter().filter(|l| **l == s).count());
    let mut best: Option<(f64, f64, CutSet)> = None;
    for lo in 0..GRID_LEN {
        for hi in lo + 1..GRID_LEN {
            let mut table = [[0usize; 3]; 3];
            for s in 0..3 {
                let (bl, bh) = (below[lo][s], below[hi][s]);
                table[s] = [bl, bh - bl, totals[s] - bh];
            }
            let obj = cut_objective(&table);
            let cuts = CutSet {
                t_low: grid_value(lo),
                t_high: grid_value(hi),
            };
            let dist = (cuts.t_low - 1.5).powi(2) + (cuts.t_high - 2.5).powi(2);
            let better = match &best {
                None => true,
                Some((b_obj, b_dist, _)) => {
                    obj > b_obj + TIE_TOL || ((obj - b_obj).abs() <= TIE_TOL && dist < *b_dist)
                }
            };
            if better {
                best = Some((obj, dist, cuts));
            }
        }
    }
    let (objective, _, cuts) = best.expect("grid is non-empty");
    Ok(CutSearch {
        cuts,
        objective,
        degenerate: false,
    })
}
