use super::huygens::HuygensAccumulator;
use super::{Component, CpmlSpec, Drive, Excitation, PortRecord, Probe, Recordings, SolverError};
use crate::constants::{EPS0, ETA0, MU0};
use crate::mesh::{cfl_timestep, YeeGrid};
use crate::scene::Boundary;
use rayon::prelude::*;

/// The six field components, node-indexed like the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub e: [Vec<f64>; 3],
    pub h: [Vec<f64>; 3],
    pub step: usize,
}

impl FieldState {
    pub fn zeros(n: usize) -> Self {
        Self {
            e: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            h: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
            step: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().chain(self.h.iter()).all(|c| c.iter().all(|v| v.is_finite()))
    }

    pub fn component(&self, c: Component) -> &[f64] {
        match c {
            Component::Ex => &self.e[0],
            Component::Ey => &self.e[1],
            Component::Ez => &self.e[2],
            Component::Hx => &self.h[0],
            Component::Hy => &self.h[1],
            Component::Hz => &self.h[2],
        }
    }
}

/// Per-axis spacing and CPML profile.
#[derive(Debug, Clone)]
struct Axis {
    n: usize,
    periodic: bool,
    /// Primary spacing of cell `i` (between nodes `i` and `i + 1`).
    prim: Vec<f64>,
    /// Dual spacing at node `i`.
    dual: Vec<f64>,
    inv_prim: Vec<f64>,
    inv_dual: Vec<f64>,
    /// `1 / (kappa dual)` at E nodes.
    ied: Vec<f64>,
    /// `1 / (kappa prim)` at H half-nodes.
    ih: Vec<f64>,
    be: Vec<f64>,
    ce: Vec<f64>,
    bh: Vec<f64>,
    ch: Vec<f64>,
    /// Node ranges holding E-side CPML memory.
    e_slabs: Vec<(usize, usize)>,
    /// Cell ranges holding H-side CPML memory.
    h_slabs: Vec<(usize, usize)>,
}

impl Axis {
    fn new(lines: &[f64], periodic: bool, pml: [usize; 2], spec: &CpmlSpec, dt: f64) -> Self {
        let n = lines.len();
        let prim: Vec<f64> = lines.windows(2).map(|w| w[1] - w[0]).collect();
        let mut dual = vec![0.0; n];
        for i in 0..n {
            let left = if i > 0 {
                Some(prim[i - 1])
            } else if periodic {
                Some(prim[n - 2])
            } else {
                None
            };
            let right = if i + 1 < n {
                Some(prim[i])
            } else if periodic {
                Some(prim[0])
            } else {
                None
            };
            dual[i] = 0.5 * (left.unwrap_or(0.0) + right.unwrap_or(0.0));
        }
        let mut ke = vec![1.0; n];
        let mut kh = vec![1.0; n - 1];
        let (mut be, mut ce) = (vec![0.0; n], vec![0.0; n]);
        let (mut bh, mut ch) = (vec![0.0; n - 1], vec![0.0; n - 1]);
        let mut e_slabs = Vec::new();
        let mut h_slabs = Vec::new();

        let coeffs = |depth: f64, delta: f64| -> (f64, f64, f64) {
            let m = spec.order;
            let sigma_max = spec.sigma_scale * 0.8 * (m + 1.0) / (ETA0 * delta);
            let sigma = sigma_max * depth.powf(m);
            let kappa = 1.0 + (spec.kappa_max - 1.0) * depth.powf(m);
            let alpha = spec.alpha_max * (1.0 - depth);
            let b = (-(sigma / kappa + alpha) * dt / EPS0).exp();
            let denom = sigma * kappa + kappa * kappa * alpha;
            let c = if denom > 0.0 { sigma * (b - 1.0) / denom } else { 0.0 };
            (kappa, b, c)
        };

        if pml[0] > 0 {
            let p = pml[0];
            let (inner, width) = (lines[p], lines[p] - lines[0]);
            let delta = width / p as f64;
            for i in 0..=p {
                let (k, b, c) = coeffs((inner - lines[i]) / width, delta);
                (ke[i], be[i], ce[i]) = (k, b, c);
            }
            for i in 0..p {
                let x = 0.5 * (lines[i] + lines[i + 1]);
                let (k, b, c) = coeffs((inner - x) / width, delta);
                (kh[i], bh[i], ch[i]) = (k, b, c);
            }
            e_slabs.push((0, p + 1));
            h_slabs.push((0, p));
        }
        if pml[1] > 0 {
            let p = pml[1];
            let first = n - 1 - p;
            let (inner, width) = (lines[first], lines[n - 1] - lines[first]);
            let delta = width / p as f64;
            for i in first..n {
                let (k, b, c) = coeffs((lines[i] - inner) / width, delta);
                (ke[i], be[i], ce[i]) = (k, b, c);
            }
            for i in first..n - 1 {
                let x = 0.5 * (lines[i] + lines[i + 1]);
                let (k, b, c) = coeffs((x - inner) / width, delta);
                (kh[i], bh[i], ch[i]) = (k, b, c);
            }
            e_slabs.push((first, n));
            h_slabs.push((first, n - 1));
        }
        let ied = (0..n)
            .map(|i| if dual[i] > 0.0 { 1.0 / (ke[i] * dual[i]) } else { 0.0 })
            .collect();
        let ih = (0..n - 1).map(|i| 1.0 / (kh[i] * prim[i])).collect();
        Self {
            n,
            periodic,
            inv_prim: prim.iter().map(|d| 1.0 / d).collect(),
            inv_dual: dual.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 0.0 }).collect(),
            prim,
            dual,
            ied,
            ih,
            be,
            ce,
            bh,
            ch,
            e_slabs,
            h_slabs,
        }
    }

    /// Index of the previous node, wrapping on periodic axes.
    #[inline]
    fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.n - 2
        } else {
            i - 1
        }
    }

    /// Nodes whose tangential E is updated.
    fn e_range(&self) -> (usize, usize) {
        if self.periodic {
            (0, self.n - 1)
        } else {
            (1, self.n - 1)
        }
    }
}

#[derive(Debug, Clone)]
struct PortStamp {
    index: usize,
    impedance: f64,
    /// Node index of the gap Ez edge.
    n: usize,
    ijk: [usize; 3],
    /// Update coefficients `E1 = a E0 + b curl - c vs`.
    a: f64,
    b: f64,
    c: f64,
    dz: f64,
    driven: bool,
}

struct ProbeRec {
    probe: Probe,
    data: Vec<f64>,
}

/// Field state plus precomputed update coefficients for one grid.
pub struct Simulation<'g> {
    grid: &'g YeeGrid,
    dt: f64,
    axes: [Axis; 3],
    strides: [usize; 3],
    ca: Vec<f64>,
    cb: Vec<f64>,
    state: FieldState,
    /// CPML memory: `psi_e[a][d]` for E component `a`, derivative axis `d`.
    psi_e: [[Vec<f64>; 3]; 3],
    psi_h: [[Vec<f64>; 3]; 3],
    ports: Vec<PortStamp>,
    port_v: Vec<Vec<f64>>,
    port_i: Vec<Vec<f64>>,
    drive: Drive,
    excitation: Excitation,
    probes: Vec<ProbeRec>,
    huygens: Option<HuygensAccumulator>,
}

const CHECK_EVERY: usize = 64;

impl<'g> Simulation<'g> {
    pub fn new(grid: &'g YeeGrid, cpml: &CpmlSpec, courant: f64) -> Result<Self, SolverError> {
        cpml.check_grid(grid)?;
        let dt = cfl_timestep(grid, courant);
        let dims = grid.dims();
        let axes = [0, 1, 2].map(|a| {
            let periodic = grid.boundaries[2 * a] == Boundary::Periodic;
            if periodic != (grid.boundaries[2 * a + 1] == Boundary::Periodic) {
                return Err(SolverError::Config(format!("axis {a}: periodic faces must be paired")));
            }
            Ok(Axis::new(
                &grid.lines[a],
                periodic,
                [grid.pml_cells[2 * a], grid.pml_cells[2 * a + 1]],
                cpml,
                dt,
            ))
        });
        let [ax, ay, az] = axes;
        let axes = [ax?, ay?, az?];
        let strides = [1, dims[0], dims[0] * dims[1]];
        let mut ca = Vec::with_capacity(grid.materials.len());
        let mut cb = Vec::with_capacity(grid.materials.len());
        for m in &grid.materials {
            if m.pec {
                ca.push(0.0);
                cb.push(0.0);
            } else {
                let eps = EPS0 * m.eps_r;
                let loss = m.sigma * dt / (2.0 * eps);
                ca.push((1.0 - loss) / (1.0 + loss));
                cb.push(dt / eps / (1.0 + loss));
            }
        }
        let n = grid.node_count();
        let mut psi_e: [[Vec<f64>; 3]; 3] = Default::default();
        let mut psi_h: [[Vec<f64>; 3]; 3] = Default::default();
        for a in 0..3 {
            for d in 0..3 {
                if d != a && !axes[d].e_slabs.is_empty() {
                    psi_e[a][d] = vec![0.0; n];
                    psi_h[a][d] = vec![0.0; n];
                }
            }
        }

        let mut ports = Vec::new();
        for gp in &grid.ports {
            let [i, j] = gp.node;
            let k = gp.gap_edges[0];
            let node = grid.idx(i, j, k);
            let mat = grid.materials[grid.edge_material[2][node] as usize];
            if mat.pec {
                return Err(SolverError::PortOnPec { port: gp.index });
            }
            let dz = axes[2].prim[k];
            let area = axes[0].dual[i] * axes[1].dual[j];
            let eps = EPS0 * mat.eps_r;
            let beta = dt * dz / (2.0 * gp.impedance * area * eps);
            let loss = mat.sigma * dt / (2.0 * eps);
            let den = 1.0 + beta + loss;
            ports.push(PortStamp {
                index: gp.index,
                impedance: gp.impedance,
                n: node,
                ijk: [i, j, k],
                a: (1.0 - beta - loss) / den,
                b: dt / eps / den,
                c: dt / (eps * gp.impedance * area) / den,
                dz,
                driven: false,
            });
        }
        let np = ports.len();
        Ok(Self {
            grid,
            dt,
            axes,
            strides,
            ca,
            cb,
            state: FieldState::zeros(n),
            psi_e,
            psi_h,
            ports,
            port_v: vec![Vec::new(); np],
            port_i: vec![Vec::new(); np],
            drive: Drive::Free,
            excitation: Excitation::gaussian(1e-11).with_amplitude(0.0),
            probes: Vec::new(),
            huygens: None,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_index(&self) -> usize {
        self.state.step
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut FieldState {
        &mut self.state
    }

    pub fn set_drive(&mut self, drive: Drive, excitation: Excitation) -> Result<(), SolverError> {
        for p in &mut self.ports {
            p.driven = false;
        }
        match &drive {
            Drive::Port(idx) => {
                let p = self
                    .ports
                    .iter_mut()
                    .find(|p| p.index == *idx)
                    .ok_or_else(|| SolverError::Config(format!("no port {idx} on the grid")))?;
                p.driven = true;
            }
            Drive::SheetX { k } => {
                if *k == 0 || *k + 1 >= self.axes[2].n {
                    return Err(SolverError::Config(format!("sheet plane {k} is on the boundary")));
                }
            }
            Drive::Free => {}
        }
        self.drive = drive;
        self.excitation = excitation;
        Ok(())
    }

    pub fn attach_huygens(&mut self, spec: super::HuygensSpec) -> Result<(), SolverError> {
        self.huygens = Some(HuygensAccumulator::new(self.grid, spec, self.dt)?);
        Ok(())
    }

    pub fn add_probe(&mut self, probe: Probe) -> Result<(), SolverError> {
        let dims = self.grid.dims();
        let ok = match &probe {
            Probe::Point { node, .. } => node.iter().zip(dims).all(|(&i, n)| i < n),
            Probe::PlaneMean { comp, k } => *k < dims[2] && comp.axis() < 2,
        };
        if !ok {
            return Err(SolverError::Config(format!("probe out of range: {probe:?}")));
        }
        self.probes.push(ProbeRec { probe, data: Vec::new() });
        Ok(())
    }

    /// One full leapfrog step with observers.
    pub fn step(&mut self) -> Result<(), SolverError> {
        self.update_h();
        let t_half = (self.state.step as f64 + 0.5) * self.dt;
        let vs = self.excitation.value(t_half);
        self.update_e(vs);
        self.state.step += 1;
        self.observe();
        if self.state.step % CHECK_EVERY == 0 && !self.state.is_finite() {
            return Err(SolverError::Divergence { step: self.state.step });
        }
        Ok(())
    }

    /// Advance H by one half-step pair without sources or observers.
    pub fn update_h(&mut self) {
        let dims = self.grid.dims();
        let coef = self.dt / MU0;
        let [sx, sy, sz] = self.strides;
        let (ex, ey, ez) = (&self.state.e[0], &self.state.e[1], &self.state.e[2]);
        let [ax, ay, az] = &self.axes;
        let plane = sz;
        let [hx, hy, hz] = &mut self.state.h;

        // Hx on (x_i, y_j+1/2, z_k+1/2).
        hx[..plane * (dims[2] - 1)].par_chunks_mut(plane).enumerate().for_each(|(k, hp)| {
            let fz = az.ih[k];
            let len = dims[0];
            for j in 0..dims[1] - 1 {
                let fy = ay.ih[j];
                let base = j * sy;
                let n0 = base + k * sz;
                let h = &mut hp[base..base + len];
                let (ez0, ez1) = (&ez[n0..n0 + len], &ez[n0 + sy..n0 + sy + len]);
                let (ey0, ey1) = (&ey[n0..n0 + len], &ey[n0 + sz..n0 + sz + len]);
                for i in 0..len {
                    h[i] -= coef * ((ez1[i] - ez0[i]) * fy - (ey1[i] - ey0[i]) * fz);
                }
            }
        });
        // Hy on (x_i+1/2, y_j, z_k+1/2).
        hy[..plane * (dims[2] - 1)].par_chunks_mut(plane).enumerate().for_each(|(k, hp)| {
            let fz = az.ih[k];
            let len = dims[0] - 1;
            let fx = &ax.ih[..len];
            for j in 0..dims[1] {
                let base = j * sy;
                let n0 = base + k * sz;
                let h = &mut hp[base..base + len];
                let (ex0, ex1) = (&ex[n0..n0 + len], &ex[n0 + sz..n0 + sz + len]);
                let (ez0, ez1) = (&ez[n0..n0 + len], &ez[n0 + sx..n0 + sx + len]);
                for i in 0..len {
                    h[i] -= coef * ((ex1[i] - ex0[i]) * fz - (ez1[i] - ez0[i]) * fx[i]);
                }
            }
        });
        // Hz on (x_i+1/2, y_j+1/2, z_k).
        hz.par_chunks_mut(plane).enumerate().for_each(|(k, hp)| {
            let len = dims[0] - 1;
            let fx = &ax.ih[..len];
            for j in 0..dims[1] - 1 {
                let fy = ay.ih[j];
                let base = j * sy;
                let n0 = base + k * sz;
                let h = &mut hp[base..base + len];
                let (ey0, ey1) = (&ey[n0..n0 + len], &ey[n0 + sx..n0 + sx + len]);
                let (ex0, ex1) = (&ex[n0..n0 + len], &ex[n0 + sy..n0 + sy + len]);
                for i in 0..len {
                    h[i] -= coef * ((ey1[i] - ey0[i]) * fx[i] - (ex1[i] - ex0[i]) * fy);
                }
            }
        });
        self.cpml_h(coef);
    }

    fn cpml_h(&mut self, coef: f64) {
        let dims = self.grid.dims();
        let [_, sy, sz] = self.strides;
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            // dH_a/dt = -(dE_c/db - dE_b/dc) / mu
            for (d, e_comp, sign) in [(b, c, coef), (c, b, -coef)] {
                let ax = &self.axes[d];
                if ax.h_slabs.is_empty() {
                    continue;
                }
                let psi = &mut self.psi_h[a][d];
                let e = &self.state.e[e_comp];
                let h = &mut self.state.h[a];
                let step = self.strides[d];
                // H_a lives on cells along b and c, nodes along a.
                let mut hi = dims;
                hi[b] -= 1;
                hi[c] -= 1;
                for &(s0, s1) in &ax.h_slabs {
                    let mut l = [0usize; 3];
                    let mut u = hi;
                    l[d] = s0;
                    u[d] = s1;
                    for k in l[2]..u[2] {
                        for j in l[1]..u[1] {
                            let n0 = j * sy + k * sz;
                            let (r0, r1) = (n0 + l[0], n0 + u[0]);
                            let len = r1 - r0;
                            let p = &mut psi[r0..r1];
                            let hr = &mut h[r0..r1];
                            let (e0, e1) = (&e[r0..r1], &e[r0 + step..r1 + step]);
                            if d == 0 {
                                let (bb, cc) = (&ax.bh[l[0]..u[0]], &ax.ch[l[0]..u[0]]);
                                let inv = &ax.inv_prim[l[0]..u[0]];
                                for i in 0..len {
                                    p[i] = bb[i] * p[i] + cc[i] * (e1[i] - e0[i]) * inv[i];
                                    hr[i] -= sign * p[i];
                                }
                            } else {
                                let id = if d == 1 { j } else { k };
                                let (bb, cc) = (ax.bh[id], ax.ch[id] * ax.inv_prim[id]);
                                for i in 0..len {
                                    p[i] = bb * p[i] + cc * (e1[i] - e0[i]);
                                    hr[i] -= sign * p[i];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    /// Advance E, stamping ports and sheet sources with source value `vs`.
    pub fn update_e(&mut self, vs: f64) {
        let saved: Vec<f64> = self.ports.iter().map(|p| self.state.e[2][p.n]).collect();
        let dims = self.grid.dims();
        let [_, sy, sz] = self.strides;
        let plane = sz;
        let (hx, hy, hz) = (&self.state.h[0], &self.state.h[1], &self.state.h[2]);
        let [ax, ay, az] = &self.axes;
        let (ca, cb) = (&self.ca, &self.cb);
        let [mx, my, mz] = &self.grid.edge_material;
        let [ex, ey, ez] = &mut self.state.e;
        let (xi0, xi1) = ax.e_range();
        let (yj0, yj1) = ay.e_range();
        let (zk0, zk1) = az.e_range();

        // Ex on edges along x: tangential to y and z faces.
        ex.par_chunks_mut(plane).enumerate().for_each(|(k, ep)| {
            if k < zk0 || k >= zk1 {
                return;
            }
            let km = az.prev(k);
            let fz = az.ied[k];
            let len = dims[0] - 1;
            for j in yj0..yj1 {
                let jm = ay.prev(j);
                let fy = ay.ied[j];
                let base = j * sy;
                let (n0, nym, nzm) = (base + k * sz, jm * sy + k * sz, base + km * sz);
                let e = &mut ep[base..base + len];
                let m = &mx[n0..n0 + len];
                let (hz0, hzm) = (&hz[n0..n0 + len], &hz[nym..nym + len]);
                let (hy0, hym) = (&hy[n0..n0 + len], &hy[nzm..nzm + len]);
                for i in 0..len {
                    let c = m[i] as usize;
                    let curl = (hz0[i] - hzm[i]) * fy - (hy0[i] - hym[i]) * fz;
                    e[i] = ca[c] * e[i] + cb[c] * curl;
                }
            }
        });
        // Ey on edges along y.
        ey.par_chunks_mut(plane).enumerate().for_each(|(k, ep)| {
            if k < zk0 || k >= zk1 {
                return;
            }
            let km = az.prev(k);
            let fz = az.ied[k];
            for j in 0..dims[1] - 1 {
                let base = j * sy;
                let (n0, nzm) = (base + k * sz, base + km * sz);
                if xi0 == 0 {
                    let (n, im) = (n0, ax.prev(0));
                    let c = my[n] as usize;
                    let curl = (hx[n] - hx[nzm]) * fz - (hz[n] - hz[n0 + im]) * ax.ied[0];
                    ep[base] = ca[c] * ep[base] + cb[c] * curl;
                }
                let (s0, len) = (1, xi1 - 1);
                let e = &mut ep[base + s0..base + s0 + len];
                let m = &my[n0 + s0..n0 + s0 + len];
                let (hx0, hxm) = (&hx[n0 + s0..n0 + s0 + len], &hx[nzm + s0..nzm + s0 + len]);
                let (hz0, hzm) = (&hz[n0 + s0..n0 + s0 + len], &hz[n0 + s0 - 1..n0 + s0 - 1 + len]);
                let fx = &ax.ied[s0..s0 + len];
                for i in 0..len {
                    let c = m[i] as usize;
                    let curl = (hx0[i] - hxm[i]) * fz - (hz0[i] - hzm[i]) * fx[i];
                    e[i] = ca[c] * e[i] + cb[c] * curl;
                }
            }
        });
        // Ez on edges along z.
        ez[..plane * (dims[2] - 1)].par_chunks_mut(plane).enumerate().for_each(|(k, ep)| {
            for j in yj0..yj1 {
                let jm = ay.prev(j);
                let fy = ay.ied[j];
                let base = j * sy;
                let (n0, nym) = (base + k * sz, jm * sy + k * sz);
                if xi0 == 0 {
                    let (n, im) = (n0, ax.prev(0));
                    let c = mz[n] as usize;
                    let curl = (hy[n] - hy[n0 + im]) * ax.ied[0] - (hx[n] - hx[nym]) * fy;
                    ep[base] = ca[c] * ep[base] + cb[c] * curl;
                }
                let (s0, len) = (1, xi1 - 1);
                let e = &mut ep[base + s0..base + s0 + len];
                let m = &mz[n0 + s0..n0 + s0 + len];
                let (hy0, hym) = (&hy[n0 + s0..n0 + s0 + len], &hy[n0 + s0 - 1..n0 + s0 - 1 + len]);
                let (hx0, hxm) = (&hx[n0 + s0..n0 + s0 + len], &hx[nym + s0..nym + s0 + len]);
                let fx = &ax.ied[s0..s0 + len];
                for i in 0..len {
                    let c = m[i] as usize;
                    let curl = (hy0[i] - hym[i]) * fx[i] - (hx0[i] - hxm[i]) * fy;
                    e[i] = ca[c] * e[i] + cb[c] * curl;
                }
            }
        });
        self.cpml_e();
        self.stamp_ports(&saved, vs);
        if let Drive::SheetX { k } = self.drive {
            let dz = self.axes[2].dual[k];
            for j in yj0..yj1 {
                for i in 0..dims[0] - 1 {
                    let n = self.grid.idx(i, j, k);
                    let m = self.grid.edge_material[0][n] as usize;
                    self.state.e[0][n] -= self.cb[m] * vs / dz;
                }
            }
        }
        self.wrap_periodic();
    }

    fn cpml_e(&mut self) {
        let dims = self.grid.dims();
        let [_, sy, sz] = self.strides;
        let ranges: [(usize, usize); 3] = [0, 1, 2].map(|a| self.axes[a].e_range());
        for a in 0..3 {
            let (b, c) = ((a + 1) % 3, (a + 2) % 3);
            // dE_a/dt = (dH_c/db - dH_b/dc) / eps
            for (d, h_comp, sign) in [(b, c, 1.0), (c, b, -1.0)] {
                let ax = &self.axes[d];
                if ax.e_slabs.is_empty() {
                    continue;
                }
                let psi = &mut self.psi_e[a][d];
                let hf = &self.state.h[h_comp];
                let e = &mut self.state.e[a];
                let mat = &self.grid.edge_material[a];
                let cb = &self.cb;
                let step = self.strides[d];
                // E_a lives on cells along a, tangential nodes along b and c.
                let mut lo = [0usize; 3];
                let mut hi = dims;
                hi[a] -= 1;
                (lo[b], hi[b]) = ranges[b];
                (lo[c], hi[c]) = ranges[c];
                for &(s0, s1) in &ax.e_slabs {
                    let mut l = lo;
                    let mut u = hi;
                    l[d] = l[d].max(s0);
                    u[d] = u[d].min(s1);
                    for k in l[2]..u[2] {
                        for j in l[1]..u[1] {
                            let n0 = j * sy + k * sz;
                            let (r0, r1) = (n0 + l[0], n0 + u[0]);
                            let len = r1 - r0;
                            let p = &mut psi[r0..r1];
                            let er = &mut e[r0..r1];
                            let m = &mat[r0..r1];
                            let (h0, hm) = (&hf[r0..r1], &hf[r0 - step..r1 - step]);
                            if d == 0 {
                                let (bb, cc) = (&ax.be[l[0]..u[0]], &ax.ce[l[0]..u[0]]);
                                let inv = &ax.inv_dual[l[0]..u[0]];
                                for i in 0..len {
                                    p[i] = bb[i] * p[i] + cc[i] * (h0[i] - hm[i]) * inv[i];
                                    er[i] += cb[m[i] as usize] * sign * p[i];
                                }
                            } else {
                                let id = if d == 1 { j } else { k };
                                let (bb, cc) = (ax.be[id], ax.ce[id] * ax.inv_dual[id]);
                                for i in 0..len {
                                    p[i] = bb * p[i] + cc * (h0[i] - hm[i]);
                                    er[i] += cb[m[i] as usize] * sign * p[i];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn stamp_ports(&mut self, saved: &[f64], vs: f64) {
        let strides = self.strides;
        for (p, &e_old) in self.ports.iter().zip(saved) {
            let [i, j, _] = p.ijk;
            let n = p.n;
            let hx = &self.state.h[0];
            let hy = &self.state.h[1];
            let curl = (hy[n] - hy[n - strides[0]]) * self.axes[0].ied[i]
                - (hx[n] - hx[n - strides[1]]) * self.axes[1].ied[j];
            let src = if p.driven { vs } else { 0.0 };
            self.state.e[2][n] = p.a * e_old + p.b * curl - p.c * src;
        }
    }

    fn wrap_periodic(&mut self) {
        let [nx, ny, nz] = self.grid.dims();
        let s = self.strides;
        for a in 0..3 {
            if !self.axes[a].periodic {
                continue;
            }
            let n_a = [nx, ny, nz][a];
            for comp in 0..3 {
                if comp == a {
                    continue;
                }
                let e = &mut self.state.e[comp];
                let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                let nb = [nx, ny, nz][b];
                let nc = [nx, ny, nz][c];
                for ib in 0..nb {
                    for ic in 0..nc {
                        let off = ib * s[b] + ic * s[c];
                        e[off + (n_a - 1) * s[a]] = e[off];
                    }
                }
            }
        }
    }

    /// Port voltage `-Ez dz` and Ampere-loop current of port slot `p`.
    fn port_vi(&self, p: &PortStamp) -> (f64, f64) {
        let [i, j, _] = p.ijk;
        let n = p.n;
        let (hx, hy) = (&self.state.h[0], &self.state.h[1]);
        let v = -self.state.e[2][n] * p.dz;
        let cur = (hy[n] - hy[n - self.strides[0]]) * self.axes[1].dual[j]
            - (hx[n] - hx[n - self.strides[1]]) * self.axes[0].dual[i];
        (v, cur)
    }

    fn observe(&mut self) {
        for (slot, p) in self.ports.iter().enumerate() {
            let (v, i) = self.port_vi(p);
            self.port_v[slot].push(v);
            self.port_i[slot].push(i);
        }
        for rec in &mut self.probes {
            let value = match &rec.probe {
                Probe::Point { comp, node } => {
                    let n = node[0] + self.strides[1] * node[1] + self.strides[2] * node[2];
                    self.state.component(*comp)[n]
                }
                Probe::PlaneMean { comp, k } => plane_mean(self.grid, &self.axes, &self.state, *comp, *k),
            };
            rec.data.push(value);
        }
        if let Some(h) = &mut self.huygens {
            h.accumulate(&self.state);
        }
    }

    /// Sum over ports of `v^2/Z + Z i^2` at the last step.
    pub fn port_power(&self) -> f64 {
        self.ports
            .iter()
            .enumerate()
            .map(|(s, p)| {
                let v = *self.port_v[s].last().unwrap_or(&0.0);
                let i = *self.port_i[s].last().unwrap_or(&0.0);
                v * v / p.impedance + p.impedance * i * i
            })
            .sum()
    }

    /// Leapfrog-invariant electromagnetic energy (J) of the current state:
    /// `1/2 eps E^n.E^n + 1/2 mu H^(n-1/2).H^(n+1/2)`.
    pub fn energy(&self) -> f64 {
        let mut next = Simulation {
            grid: self.grid,
            dt: self.dt,
            axes: self.axes.clone(),
            strides: self.strides,
            ca: self.ca.clone(),
            cb: self.cb.clone(),
            state: self.state.clone(),
            psi_e: self.psi_e.clone(),
            psi_h: self.psi_h.clone(),
            ports: Vec::new(),
            port_v: Vec::new(),
            port_i: Vec::new(),
            drive: Drive::Free,
            excitation: self.excitation,
            probes: Vec::new(),
            huygens: None,
        };
        next.update_h();
        let dims = self.grid.dims();
        let mut we = 0.0;
        let mut wh = 0.0;
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let n = self.grid.idx(i, j, k);
                    let ijk = [i, j, k];
                    for a in 0..3 {
                        let (b, c) = ((a + 1) % 3, (a + 2) % 3);
                        if ijk[a] + 1 < dims[a] {
                            let mat = self.grid.materials[self.grid.edge_material[a][n] as usize];
                            let vol = self.axes[a].prim[ijk[a]] * self.axes[b].dual[ijk[b]] * self.axes[c].dual[ijk[c]];
                            we += 0.5 * EPS0 * mat.eps_r * self.state.e[a][n].powi(2) * vol;
                        }
                        if ijk[b] + 1 < dims[b] && ijk[c] + 1 < dims[c] {
                            let vol = self.axes[a].dual[ijk[a]] * self.axes[b].prim[ijk[b]] * self.axes[c].prim[ijk[c]];
                            wh += 0.5 * MU0 * self.state.h[a][n] * next.state.h[a][n] * vol;
                        }
                    }
                }
            }
        }
        we + wh
    }

    pub fn into_recordings(self, converged: bool) -> Recordings {
        let ports = self
            .ports
            .iter()
            .enumerate()
            .map(|(s, p)| PortRecord {
                index: p.index,
                impedance: p.impedance,
                v: self.port_v[s].clone(),
                i: self.port_i[s].clone(),
            })
            .collect();
        Recordings {
            dt: self.dt,
            steps: self.state.step,
            drive: self.drive,
            excitation: self.excitation,
            ports,
            probes: self.probes.into_iter().map(|p| p.data).collect(),
            huygens: self.huygens.map(|h| h.finish()),
            converged,
        }
    }
}

fn plane_mean(grid: &YeeGrid, axes: &[Axis; 3], state: &FieldState, comp: Component, k: usize) -> f64 {
    let a = comp.axis();
    let o = 1 - a;
    let field = state.component(comp);
    let [nx, ny, _] = grid.dims();
    let (na, no) = if a == 0 { (nx, ny) } else { (ny, nx) };
    let periodic = axes[o].periodic;
    let (mut sum, mut area) = (0.0, 0.0);
    for io in 0..no {
        // Periodic: the last node duplicates the first.
        if periodic && io == no - 1 {
            continue;
        }
        let wo = axes[o].dual[io];
        for ia in 0..na - 1 {
            let (i, j) = if a == 0 { (ia, io) } else { (io, ia) };
            let w = axes[a].prim[ia] * wo;
            sum += field[grid.idx(i, j, k)] * w;
            area += w;
        }
    }
    sum / area
}
