use super::{FieldState, SolverError};
use crate::mesh::YeeGrid;
use crate::scene::Boundary;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Closed box of node planes on which tangential fields are transformed.
#[derive(Debug, Clone, PartialEq)]
pub struct HuygensSpec {
    /// Lowest node plane per axis.
    pub lo: [usize; 3],
    /// Highest node plane per axis.
    pub hi: [usize; 3],
    /// Omit the `z = lo` face; the far-field side then images the sources
    /// in the PEC ground instead.
    pub ground_image: bool,
    pub freqs: Vec<f64>,
    /// Accumulate every `stride` steps.
    pub stride: usize,
}

impl HuygensSpec {
    /// Box `margin` cells outside the structure, kept clear of the CPML.
    /// On a grid with a PEC bottom face the box sits on the ground.
    pub fn around_structure(grid: &YeeGrid, freqs: Vec<f64>, margin: usize) -> Result<Self, SolverError> {
        let (bmin, bmax) = grid
            .structure_bbox
            .ok_or_else(|| SolverError::Config("scene has no structure to enclose".into()))?;
        let dims = grid.dims();
        let mut lo = [0; 3];
        let mut hi = [0; 3];
        for a in 0..3 {
            let first = grid.pml_cells[2 * a] + 1;
            let last = dims[a] - 2 - grid.pml_cells[2 * a + 1];
            lo[a] = grid.nearest_line(a, bmin[a]).saturating_sub(margin).max(first);
            hi[a] = (grid.nearest_line(a, bmax[a]) + margin).min(last);
        }
        let ground_image = grid.boundaries[4] == Boundary::Pec;
        if ground_image {
            lo[2] = 0;
        }
        let spec = Self {
            lo,
            hi,
            ground_image,
            freqs,
            stride: 1,
        };
        spec.check(grid)?;
        Ok(spec)
    }

    fn check(&self, grid: &YeeGrid) -> Result<(), SolverError> {
        let dims = grid.dims();
        for a in 0..3 {
            let first = if a == 2 && self.ground_image { 0 } else { grid.pml_cells[2 * a] + 1 };
            let last = dims[a] - 2 - grid.pml_cells[2 * a + 1];
            if self.lo[a] < first || self.hi[a] > last || self.lo[a] >= self.hi[a] {
                return Err(SolverError::Config(format!(
                    "Huygens box axis {a} [{}, {}] must lie within [{first}, {last}]",
                    self.lo[a], self.hi[a]
                )));
            }
        }
        if self.freqs.is_empty() || self.stride == 0 {
            return Err(SolverError::Config("Huygens box needs frequencies and a positive stride".into()));
        }
        Ok(())
    }
}

/// Tangential-field phasors on one face cell.
#[derive(Debug, Clone, PartialEq)]
pub struct HuygensSample {
    pub pos: [f64; 3],
    /// Outward unit normal.
    pub normal: [f64; 3],
    pub area: f64,
    /// Per frequency, `E` and `H` phasors (normal component zero).
    pub e: Vec<[Complex64; 3]>,
    pub h: Vec<[Complex64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HuygensRecord {
    pub freqs: Vec<f64>,
    pub ground_image: bool,
    pub samples: Vec<HuygensSample>,
}

/// Weighted node taps for one component of one sample.
type Taps = Vec<(usize, f64)>;

pub(crate) struct HuygensAccumulator {
    spec: HuygensSpec,
    dt: f64,
    steps: usize,
    samples: Vec<HuygensSample>,
    /// Per sample: `(component, taps)` for the two E and two H components.
    taps: Vec<[(usize, Taps); 4]>,
}

impl HuygensAccumulator {
    pub fn new(grid: &YeeGrid, spec: HuygensSpec, dt: f64) -> Result<Self, SolverError> {
        spec.check(grid)?;
        let l = &grid.lines;
        let mut samples = Vec::new();
        let mut taps = Vec::new();
        let nf = spec.freqs.len();
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            for (side, p) in [(-1.0, spec.lo[a]), (1.0, spec.hi[a])] {
                if a == 2 && side < 0.0 && spec.ground_image {
                    continue;
                }
                // Weights of the H planes p-1 and p when interpolating to p.
                let (d0, d1) = (l[a][p] - l[a][p - 1], l[a][p + 1] - l[a][p]);
                let (w_lo, w_hi) = (d1 / (d0 + d1), d0 / (d0 + d1));
                for ib in spec.lo[b]..spec.hi[b] {
                    for ic in spec.lo[c]..spec.hi[c] {
                        let node = |pa: usize, pb: usize, pc: usize| {
                            let mut ijk = [0; 3];
                            ijk[a] = pa;
                            ijk[b] = pb;
                            ijk[c] = pc;
                            grid.idx(ijk[0], ijk[1], ijk[2])
                        };
                        let mut pos = [0.0; 3];
                        pos[a] = l[a][p];
                        pos[b] = 0.5 * (l[b][ib] + l[b][ib + 1]);
                        pos[c] = 0.5 * (l[c][ic] + l[c][ic + 1]);
                        let mut normal = [0.0; 3];
                        normal[a] = side;
                        let area = (l[b][ib + 1] - l[b][ib]) * (l[c][ic + 1] - l[c][ic]);
                        let eb = vec![(node(p, ib, ic), 0.5), (node(p, ib, ic + 1), 0.5)];
                        let ec = vec![(node(p, ib, ic), 0.5), (node(p, ib + 1, ic), 0.5)];
                        let hb = vec![
                            (node(p - 1, ib, ic), 0.5 * w_lo),
                            (node(p - 1, ib + 1, ic), 0.5 * w_lo),
                            (node(p, ib, ic), 0.5 * w_hi),
                            (node(p, ib + 1, ic), 0.5 * w_hi),
                        ];
                        let hc = vec![
                            (node(p - 1, ib, ic), 0.5 * w_lo),
                            (node(p - 1, ib, ic + 1), 0.5 * w_lo),
                            (node(p, ib, ic), 0.5 * w_hi),
                            (node(p, ib, ic + 1), 0.5 * w_hi),
                        ];
                        samples.push(HuygensSample {
                            pos,
                            normal,
                            area,
                            e: vec![[Complex64::default(); 3]; nf],
                            h: vec![[Complex64::default(); 3]; nf],
                        });
                        taps.push([(b, eb), (c, ec), (b, hb), (c, hc)]);
                    }
                }
            }
        }
        Ok(Self {
            spec,
            dt,
            steps: 0,
            samples,
            taps,
        })
    }

    /// Called after each full step; E is at `(n + 1) dt`, H at `(n + 1/2) dt`.
    pub fn accumulate(&mut self, state: &FieldState) {
        self.steps += 1;
        if self.steps % self.spec.stride != 0 {
            return;
        }
        let n = self.steps as f64;
        let w = self.spec.stride as f64 * self.dt;
        let rot: Vec<(Complex64, Complex64)> = self
            .spec
            .freqs
            .iter()
            .map(|&f| {
                let om = 2.0 * PI * f;
                (
                    Complex64::from_polar(w, -om * n * self.dt),
                    Complex64::from_polar(w, -om * (n - 0.5) * self.dt),
                )
            })
            .collect();
        for (s, t) in self.samples.iter_mut().zip(&self.taps) {
            let val = |field: &[f64], taps: &Taps| taps.iter().map(|&(n, w)| field[n] * w).sum::<f64>();
            let eb = val(&state.e[t[0].0], &t[0].1);
            let ec = val(&state.e[t[1].0], &t[1].1);
            let hb = val(&state.h[t[2].0], &t[2].1);
            let hc = val(&state.h[t[3].0], &t[3].1);
            for (fi, (re, rh)) in rot.iter().enumerate() {
                s.e[fi][t[0].0] += re * eb;
                s.e[fi][t[1].0] += re * ec;
                s.h[fi][t[2].0] += rh * hb;
                s.h[fi][t[3].0] += rh * hc;
            }
        }
    }

    pub fn finish(self) -> HuygensRecord {
        HuygensRecord {
            freqs: self.spec.freqs,
            ground_image: self.spec.ground_image,
            samples: self.samples,
        }
    }
}
