//! Quasi-steady-state phasor network of a single-end-fed catenary section.
//!
//! The inverter is a Norton source `E / j(X_T + X_f)` in parallel with the
//! shunt `1 / j(X_T + X_f)` at PoC16. The track carries a constant-admittance
//! train load and an optional fault shunt. Nodes along the track are ordered
//! by distance from PoC16; coincident nodes are merged.

use crate::error::{Error, Result};
use num_complex::Complex64;

/// Complex per-unit phasor (rectangular form).
pub type Phasor = Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const PIVOT_EPS: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeederModel {
    pub x_t: f64,
    pub x_f: f64,
    pub z_init: Complex64,
    /// Catenary impedance per km.
    pub z_per_km: Complex64,
    pub fault_pos_km: f64,
    pub load_pos_km: f64,
    pub y_load: Complex64,
    /// Zero when no fault is applied.
    pub y_fault: Complex64,
}

impl FeederModel {
    pub fn validate(&self) -> Result<()> {
        let x = self.x_t + self.x_f;
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::invalid("x_t + x_f", format!("must be positive, got {x}")));
        }
        for (name, v) in [("fault_pos_km", self.fault_pos_km), ("load_pos_km", self.load_pos_km)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be a non-negative distance, got {v}")));
            }
        }
        for (name, z) in [
            ("z_init", self.z_init),
            ("z_per_km", self.z_per_km),
            ("y_load", self.y_load),
            ("y_fault", self.y_fault),
        ] {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::invalid(name, "must be finite"));
            }
            if z.re < 0.0 {
                return Err(Error::invalid(name, "real part must be non-negative"));
            }
        }
        Ok(())
    }

    /// Total series reactance between the inverter and PoC16.
    pub fn x_total(&self) -> f64 {
        self.x_t + self.x_f
    }

    pub fn fault_active(&self) -> bool {
        self.y_fault != ZERO
    }

    /// Applies a line-to-ground fault of impedance `z_fault` at `pos_km`.
    pub fn set_fault(&self, z_fault: Complex64, pos_km: f64) -> Result<FeederModel> {
        if z_fault.norm() == 0.0 {
            return Err(Error::BoltedFault);
        }
        if !(z_fault.re.is_finite() && z_fault.im.is_finite()) || z_fault.re < 0.0 {
            return Err(Error::invalid("z_fault", format!("must be finite with non-negative resistance, got {z_fault}")));
        }
        let f = FeederModel {
            y_fault: z_fault.inv(),
            fault_pos_km: pos_km,
            ..*self
        };
        f.validate()?;
        Ok(f)
    }

    pub fn clear_fault(&self) -> FeederModel {
        FeederModel { y_fault: ZERO, ..*self }
    }
}

/// A series element between two nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    pub z: Complex64,
}

/// Nodal description of a feeder. Node 0 is PoC16.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalNetwork {
    n: usize,
    y: Vec<Complex64>,
    shunts: Vec<Complex64>,
    branches: Vec<Branch>,
    load_node: usize,
    fault_node: Option<usize>,
    y_norton: Complex64,
}

impl NodalNetwork {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.y[i * self.n + j]
    }

    /// Row-major admittance matrix.
    pub fn matrix(&self) -> &[Complex64] {
        &self.y
    }

    /// Sum of shunt admittances per node, including the Norton shunt at node 0.
    pub fn shunts(&self) -> &[Complex64] {
        &self.shunts
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn load_node(&self) -> usize {
        self.load_node
    }

    pub fn fault_node(&self) -> Option<usize> {
        self.fault_node
    }

    pub fn norton_admittance(&self) -> Complex64 {
        self.y_norton
    }

    /// Solves `Y·U = I` for all node voltages.
    pub fn solve_injections(&self, injections: &[Complex64]) -> Result<Vec<Complex64>> {
        assert_eq!(injections.len(), self.n);
        solve_dense(self.y.clone(), injections.to_vec(), self.n)
    }

    /// Node voltages with PoC16 held at `u_poc` and the inverter branch
    /// removed, plus the current drawn from PoC16 into the feeder.
    pub fn solve_with_poc_voltage(&self, u_poc: Phasor) -> Result<(Vec<Phasor>, Phasor)> {
        let n = self.n;
        let mut a = self.y.clone();
        let mut b = vec![ZERO; n];
        a[..n].fill(ZERO);
        a[0] = Complex64::new(1.0, 0.0);
        b[0] = u_poc;
        // Track rows see PoC16 through their coupling terms only.
        let v = solve_dense(a, b, n)?;
        let i_out = (self.y[0] - self.y_norton) * v[0]
            + self.y[1..n].iter().zip(&v[1..]).map(|(y, u)| y * u).sum::<Complex64>();
        Ok((v, i_out))
    }
}

/// Assembles the nodal admittance matrix of the feeder.
pub fn build_admittance(feeder: &FeederModel) -> Result<NodalNetwork> {
    feeder.validate()?;
    let y_norton = Complex64::new(0.0, feeder.x_total()).inv();

    // (position, is_load)
    let mut points: Vec<(f64, bool)> = vec![(feeder.load_pos_km, true)];
    if feeder.fault_active() {
        points.push((feeder.fault_pos_km, false));
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut shunts = vec![y_norton];
    let mut branches = Vec::new();
    let mut load_node = 0;
    let mut fault_node = None;
    let mut prev_pos: Option<f64> = None;
    let mut current = 0usize;
    for (pos, is_load) in points {
        let z = match prev_pos {
            None => feeder.z_init + feeder.z_per_km * pos,
            Some(p) => feeder.z_per_km * (pos - p),
        };
        if z != ZERO {
            shunts.push(ZERO);
            branches.push(Branch {
                from: current,
                to: shunts.len() - 1,
                z,
            });
            current = shunts.len() - 1;
        }
        prev_pos = Some(pos);
        if is_load {
            shunts[current] += feeder.y_load;
            load_node = current;
        } else {
            shunts[current] += feeder.y_fault;
            fault_node = Some(current);
        }
    }

    let n = shunts.len();
    let mut y = vec![ZERO; n * n];
    for (k, s) in shunts.iter().enumerate() {
        y[k * n + k] += s;
    }
    for br in &branches {
        let yb = br.z.inv();
        y[br.from * n + br.from] += yb;
        y[br.to * n + br.to] += yb;
        y[br.from * n + br.to] -= yb;
        y[br.to * n + br.from] -= yb;
    }
    if y.iter().all(|v| *v == ZERO) {
        return Err(Error::SingularNetwork("all admittances are zero".into()));
    }
    Ok(NodalNetwork {
        n,
        y,
        shunts,
        branches,
        load_node,
        fault_node,
        y_norton,
    })
}

/// Gaussian elimination with partial pivoting on a row-major `n×n` system.
pub(crate) fn solve_dense(mut a: Vec<Complex64>, mut b: Vec<Complex64>, n: usize) -> Result<Vec<Complex64>> {
    let scale = a.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(Error::SingularNetwork("zero matrix".into()));
    }
    for col in 0..n {
        let (piv, mag) = (col..n)
            .map(|r| (r, a[r * n + col].norm()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .expect("non-empty");
        if mag <= PIVOT_EPS * scale {
            return Err(Error::SingularNetwork(format!("zero pivot in column {col}")));
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == ZERO {
                continue;
            }
            for j in col..n {
                let t = a[col * n + j];
                a[r * n + j] -= f * t;
            }
            let t = b[col];
            b[r] -= f * t;
        }
    }
    let mut x = vec![ZERO; n];
    for r in (0..n).rev() {
        let mut s = b[r];
        for j in r + 1..n {
            s -= a[r * n + j] * x[j];
        }
        x[r] = s / a[r * n + r];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSolution {
    pub u_poc: Phasor,
    pub i_inv: Phasor,
    pub u_load: Phasor,
    pub p_g: f64,
    pub q_g: f64,
}

/// Prepared solver for one network topology.
///
/// The network is linear with a single source at PoC16, so every node
/// voltage is a fixed multiple of the Norton injection. The multipliers
/// (column 0 of the impedance matrix) are computed once per topology.
#[derive(Debug, Clone)]
pub struct NetworkSolver {
    feeder: FeederModel,
    network: NodalNetwork,
    z_column: Vec<Complex64>,
    jx: Complex64,
}

impl NetworkSolver {
    pub fn new(feeder: &FeederModel) -> Result<Self> {
        let network = build_admittance(feeder)?;
        let mut e0 = vec![ZERO; network.size()];
        e0[0] = Complex64::new(1.0, 0.0);
        let z_column = network.solve_injections(&e0)?;
        Ok(Self {
            feeder: *feeder,
            network,
            z_column,
            jx: Complex64::new(0.0, feeder.x_total()),
        })
    }

    pub fn feeder(&self) -> &FeederModel {
        &self.feeder
    }

    pub fn network(&self) -> &NodalNetwork {
        &self.network
    }

    pub fn solve(&self, e_inv: Phasor) -> NetworkSolution {
        let i_n = e_inv / self.jx;
        let u_poc = self.z_column[0] * i_n;
        let u_load = self.z_column[self.network.load_node] * i_n;
        let i_inv = (e_inv - u_poc) / self.jx;
        let s = u_poc * i_inv.conj();
        NetworkSolution {
            u_poc,
            i_inv,
            u_load,
            p_g: s.re,
            q_g: s.im,
        }
    }

    /// All node voltages for the inverter phasor `e_inv`.
    pub fn node_voltages(&self, e_inv: Phasor) -> Vec<Phasor> {
        let i_n = e_inv / self.jx;
        self.z_column.iter().map(|z| z * i_n).collect()
    }
}

/// One-shot network solve.
pub fn solve(feeder: &FeederModel, e_inv: Phasor) -> Result<NetworkSolution> {
    Ok(NetworkSolver::new(feeder)?.solve(e_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn feeder() -> FeederModel {
        FeederModel {
            x_t: 0.0957,
            x_f: 0.1231,
            z_init: Complex64::new(0.00694, 0.01076),
            z_per_km: Complex64::new(1.2305e-3, 1.1387e-3),
            fault_pos_km: 25.0,
            load_pos_km: 25.0,
            y_load: Complex64::new(0.24, 0.0),
            y_fault: ZERO,
        }
    }

    #[test]
    fn two_node_matrix() {
        let f = feeder();
        let net = build_admittance(&f).unwrap();
        assert_eq!(net.size(), 2);
        let yn = Complex64::new(0.0, f.x_total()).inv();
        let yl = (f.z_init + f.z_per_km * 25.0).inv();
        assert_abs_diff_eq!((net.get(0, 0) - (yn + yl)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((net.get(0, 1) + yl).norm(), 0.0, epsilon = 1e-12);
        assert_eq!(net.get(0, 1), net.get(1, 0));
        assert_abs_diff_eq!((net.get(1, 1) - (yl + f.y_load)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_length_feeder_collapses() {
        let f = FeederModel {
            z_init: ZERO,
            load_pos_km: 0.0,
            ..feeder()
        };
        let net = build_admittance(&f).unwrap();
        assert_eq!(net.size(), 1);
        let yn = Complex64::new(0.0, f.x_total()).inv();
        assert_eq!(net.get(0, 0), yn + f.y_load);
    }

    #[test]
    fn fault_adds_node() {
        let f = FeederModel {
            load_pos_km: 30.0,
            ..feeder()
        };
        let faulted = f.set_fault(Complex64::new(0.47, 0.15), 25.0).unwrap();
        let net = build_admittance(&faulted).unwrap();
        assert_eq!(net.size(), 3);
        assert_eq!(net.fault_node(), Some(1));
        assert_eq!(net.load_node(), 2);
        assert_eq!(faulted.clear_fault(), f);
        assert_eq!(build_admittance(&faulted.clear_fault()).unwrap(), build_admittance(&f).unwrap());
    }

    #[test]
    fn fault_beyond_load() {
        let f = FeederModel { load_pos_km: 10.0, ..feeder() };
        let faulted = f.set_fault(Complex64::new(0.0, 0.13), 15.0).unwrap();
        let net = build_admittance(&faulted).unwrap();
        assert_eq!(net.load_node(), 1);
        assert_eq!(net.fault_node(), Some(2));
    }

    #[test]
    fn bolted_fault_rejected() {
        assert_eq!(feeder().set_fault(ZERO, 10.0).unwrap_err(), Error::BoltedFault);
        assert!(feeder().set_fault(Complex64::new(-0.1, 0.1), 10.0).is_err());
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        let s = solve(&feeder(), ZERO).unwrap();
        assert_eq!(s.u_poc, ZERO);
        assert_eq!(s.i_inv, ZERO);
        assert_eq!(s.u_load, ZERO);
    }

    #[test]
    fn invalid_feeder() {
        let f = FeederModel { x_t: 0.0, x_f: 0.0, ..feeder() };
        assert!(build_admittance(&f).is_err());
        let f = FeederModel { load_pos_km: -1.0, ..feeder() };
        assert!(build_admittance(&f).is_err());
        let f = FeederModel { y_load: Complex64::new(-0.1, 0.0), ..feeder() };
        assert!(build_admittance(&f).is_err());
    }

    #[test]
    fn singular_matrix_detected() {
        let a = vec![Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(4.0, 0.0)];
        let r = solve_dense(a, vec![ZERO, ZERO], 2);
        assert!(matches!(r, Err(Error::SingularNetwork(_))));
    }

    #[test]
    fn poc_voltage_boundary_solve() {
        let f = FeederModel { load_pos_km: 30.0, ..feeder() };
        let net = build_admittance(&f).unwrap();
        let u = Complex64::from_polar(1.0, 0.1);
        let (v, i) = net.solve_with_poc_voltage(u).unwrap();
        // Radial two-node: the current is u / (z_series + 1/y_load).
        let z = f.z_init + f.z_per_km * 30.0 + f.y_load.inv();
        assert_abs_diff_eq!((i - u / z).norm(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!((v[1] - i / f.y_load).norm(), 0.0, epsilon = 1e-13);
    }
}
