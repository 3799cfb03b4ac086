//! Truncated Fock-space Hamiltonian of coupled Duffing modes, its
//! diagonalization and the labeling of eigenstates by bare product states.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::circuit::DeviceParams;
use crate::error::{ContestedLabel, Error, Result};

/// Per-mode truncation and optional total-excitation cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Levels kept per mode.
    pub levels: usize,
    /// Keep only states with at most this many total excitations.
    pub cutoff: Option<usize>,
    /// Largest basis dimension accepted.
    pub max_dim: usize,
}

impl TruncationPolicy {
    pub fn new(levels: usize) -> Self {
        Self {
            levels,
            cutoff: None,
            max_dim: 20_000,
        }
    }

    pub fn with_cutoff(levels: usize, cutoff: usize) -> Self {
        Self {
            cutoff: Some(cutoff),
            ..Self::new(levels)
        }
    }

    /// Default for a single qubit pair with its coupler.
    pub fn dimer() -> Self {
        Self::new(6)
    }

    /// Default for multi-qubit chains.
    pub fn chain() -> Self {
        Self::with_cutoff(4, 6)
    }
}

/// Enumeration of the retained bare product states.
#[derive(Debug, Clone)]
pub struct FockBasis {
    levels: usize,
    n_modes: usize,
    states: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
}

impl FockBasis {
    /// Product states in lexicographic order, mode 0 most significant.
    pub fn new(n_modes: usize, trunc: &TruncationPolicy) -> Result<Self> {
        if trunc.levels < 2 || trunc.levels > 255 {
            return Err(Error::Config(format!("levels per mode must be in 2..=255, got {}", trunc.levels)));
        }
        let full = (trunc.levels as f64).powi(n_modes as i32);
        if trunc.cutoff.is_none() && full > trunc.max_dim as f64 {
            return Err(Error::Resource {
                dim: full.min(usize::MAX as f64) as usize,
                budget: trunc.max_dim,
            });
        }
        let mut states = Vec::new();
        let mut current = vec![0u8; n_modes];
        let max_total = trunc.cutoff.unwrap_or(usize::MAX);
        enumerate(&mut current, 0, 0, trunc.levels, max_total, &mut states, trunc.max_dim)?;
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(Self {
            levels: trunc.levels,
            n_modes,
            states,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn state(&self, i: usize) -> &[u8] {
        &self.states[i]
    }

    pub fn index_of(&self, label: &[u8]) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn total_excitations(&self, i: usize) -> usize {
        self.states[i].iter().map(|&n| n as usize).sum()
    }
}

fn enumerate(
    current: &mut Vec<u8>,
    mode: usize,
    total: usize,
    levels: usize,
    max_total: usize,
    out: &mut Vec<Vec<u8>>,
    max_dim: usize,
) -> Result<()> {
    if mode == current.len() {
        if out.len() >= max_dim {
            return Err(Error::Resource {
                dim: out.len() + 1,
                budget: max_dim,
            });
        }
        out.push(current.clone());
        return Ok(());
    }
    for n in 0..levels {
        if total + n > max_total {
            break;
        }
        current[mode] = n as u8;
        enumerate(current, mode + 1, total + n, levels, max_total, out, max_dim)?;
    }
    current[mode] = 0;
    Ok(())
}

/// Real symmetric matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from triplets; duplicate positions are summed.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[k])] += self.values[k];
            }
        }
        m
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        (self.row_ptr[r]..self.row_ptr[r + 1])
            .filter(|&k| self.col_idx[k] == c)
            .map(|k| self.values[k])
            .sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Gershgorin bound on the spectral norm.
    pub fn norm_bound(&self) -> f64 {
        (0..self.dim)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.values[k].abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
    }

    /// Largest `|A_rc − A_cr|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                let c = self.col_idx[k];
                worst = worst.max((self.values[k] - self.get(c, r)).abs());
            }
        }
        worst / scale
    }
}

type Triplets = Vec<(usize, usize, f64)>;

/// Precomputed operator pieces of the Hamiltonian on a fixed basis, so that
/// matrices for new parameter values can be assembled cheaply.
#[derive(Debug, Clone)]
pub struct FockOperators {
    basis: FockBasis,
    /// `n_i` per mode, diagonal.
    number: Vec<Vec<f64>>,
    /// `n_i(n_i − 1)/2` per mode, diagonal.
    kerr: Vec<Vec<f64>>,
    /// `b†b†b + b†bb` per mode.
    cubic: Vec<Triplets>,
    /// `(b_a − b_a†)(b_b − b_b†)` per mode pair.
    exchange: HashMap<(usize, usize), Triplets>,
    /// `b_a† b_b + b_a b_b†` per mode pair.
    exchange_rwa: HashMap<(usize, usize), Triplets>,
}

impl FockOperators {
    pub fn new(n_modes: usize, trunc: &TruncationPolicy) -> Result<Self> {
        let basis = FockBasis::new(n_modes, trunc)?;
        let dim = basis.dim();
        let mut number = vec![vec![0.0; dim]; n_modes];
        let mut kerr = vec![vec![0.0; dim]; n_modes];
        let mut cubic = vec![Vec::new(); n_modes];
        for i in 0..dim {
            let s = basis.state(i).to_vec();
            for m in 0..n_modes {
                let n = s[m] as f64;
                number[m][i] = n;
                kerr[m][i] = 0.5 * n * (n - 1.0);
                // b†b†b |n⟩ = n √(n+1) |n+1⟩
                if s[m] >= 1 {
                    let mut t = s.clone();
                    t[m] += 1;
                    if let Some(j) = basis.index_of(&t) {
                        let v = n * (n + 1.0).sqrt();
                        cubic[m].push((j, i, v));
                        cubic[m].push((i, j, v));
                    }
                }
            }
        }
        let mut ops = Self {
            basis,
            number,
            kerr,
            cubic,
            exchange: HashMap::new(),
            exchange_rwa: HashMap::new(),
        };
        for a in 0..n_modes {
            for b in (a + 1)..n_modes {
                ops.ensure_pair(a, b);
            }
        }
        Ok(ops)
    }

    fn ensure_pair(&mut self, a: usize, b: usize) {
        if self.exchange.contains_key(&(a, b)) {
            return;
        }
        let mut full = Vec::new();
        let mut rwa = Vec::new();
        for i in 0..self.basis.dim() {
            let s = self.basis.state(i);
            for da in [-1i32, 1] {
                for db in [-1i32, 1] {
                    let na = s[a] as i32 + da;
                    let nb = s[b] as i32 + db;
                    if na < 0 || nb < 0 {
                        continue;
                    }
                    let mut t = s.to_vec();
                    t[a] = na as u8;
                    t[b] = nb as u8;
                    let Some(j) = self.basis.index_of(&t) else {
                        continue;
                    };
                    // b contributes √n, −b† contributes −√(n+1)
                    let amp = |n: u8, d: i32| {
                        if d < 0 {
                            (n as f64).sqrt()
                        } else {
                            -((n as f64) + 1.0).sqrt()
                        }
                    };
                    let v = amp(s[a], da) * amp(s[b], db);
                    full.push((j, i, v));
                    if da != db {
                        rwa.push((j, i, -v));
                    }
                }
            }
        }
        self.exchange.insert((a, b), full);
        self.exchange_rwa.insert((a, b), rwa);
    }

    pub fn basis(&self) -> &FockBasis {
        &self.basis
    }

    fn check(&self, params: &DeviceParams) -> Result<()> {
        if params.n_modes() != self.basis.n_modes() {
            return Err(Error::InvalidSpec(format!(
                "{} modes in parameters, basis built for {}",
                params.n_modes(),
                self.basis.n_modes()
            )));
        }
        let finite = params
            .modes
            .iter()
            .all(|m| m.omega.is_finite() && m.anharmonicity.is_finite() && m.cubic.is_finite())
            && params.couplings.iter().all(|c| c.g.is_finite());
        if !finite {
            return Err(Error::InvalidSpec("non-finite device parameter".into()));
        }
        Ok(())
    }

    fn triplets(&self, params: &DeviceParams, rwa: bool) -> Result<Triplets> {
        self.check(params)?;
        let dim = self.basis.dim();
        let mut out = Vec::new();
        for i in 0..dim {
            let mut d = 0.0;
            for (m, mode) in params.modes.iter().enumerate() {
                d += mode.omega * self.number[m][i] + mode.anharmonicity * self.kerr[m][i];
            }
            out.push((i, i, d));
        }
        if !rwa {
            for (m, mode) in params.modes.iter().enumerate() {
                if mode.cubic != 0.0 {
                    out.extend(self.cubic[m].iter().map(|&(r, c, v)| (r, c, mode.cubic * v)));
                }
            }
        }
        for c in &params.couplings {
            if c.g == 0.0 {
                continue;
            }
            let key = (c.a.min(c.b), c.a.max(c.b));
            let (table, sign) = if rwa {
                (&self.exchange_rwa, 1.0)
            } else {
                (&self.exchange, -1.0)
            };
            let ops = table
                .get(&key)
                .ok_or_else(|| Error::InvalidSpec(format!("coupling between unknown modes {key:?}")))?;
            out.extend(ops.iter().map(|&(r, col, v)| (r, col, sign * c.g * v)));
        }
        Ok(out)
    }

    /// Sparse Hamiltonian for `params`; `rwa` selects the number-conserving
    /// form without the cubic term.
    pub fn hamiltonian(&self, params: &DeviceParams, rwa: bool) -> Result<FockHamiltonian> {
        let dim = self.basis.dim();
        let matrix = SparseMatrix::from_triplets(dim, self.triplets(params, rwa)?);
        Ok(FockHamiltonian {
            basis: self.basis.clone(),
            matrix,
        })
    }

    /// Dense Hamiltonian for `params`, skipping the sparse intermediate.
    pub fn dense(&self, params: &DeviceParams, rwa: bool) -> Result<DMatrix<f64>> {
        let dim = self.basis.dim();
        let mut m = DMatrix::zeros(dim, dim);
        for (r, c, v) in self.triplets(params, rwa)? {
            m[(r, c)] += v;
        }
        Ok(m)
    }
}

/// Hamiltonian matrix (rad/ns) on a truncated product basis.
#[derive(Debug, Clone)]
pub struct FockHamiltonian {
    pub basis: FockBasis,
    pub matrix: SparseMatrix,
}

impl FockHamiltonian {
    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }
}

/// Hamiltonian of `params` on the truncation `trunc`, counter-rotating terms kept.
pub fn build_hamiltonian(params: &DeviceParams, trunc: &TruncationPolicy) -> Result<FockHamiltonian> {
    FockOperators::new(params.n_modes(), trunc)?.hamiltonian(params, false)
}

/// Number-conserving variant with `g (b_a† b_b + h.c.)` exchange and no cubic term.
pub fn build_hamiltonian_rwa(params: &DeviceParams, trunc: &TruncationPolicy) -> Result<FockHamiltonian> {
    FockOperators::new(params.n_modes(), trunc)?.hamiltonian(params, true)
}

/// Eigenpairs in ascending order; eigenvectors are the columns of `vectors`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub basis: FockBasis,
}

/// Full dense eigendecomposition of a symmetric matrix, sorted ascending.
pub fn dense_eigen(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(eig.eigenvectors.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// All eigenpairs by dense diagonalization.
pub fn diagonalize(h: &FockHamiltonian) -> Spectrum {
    let (values, vectors) = dense_eigen(h.to_dense());
    Spectrum {
        values,
        vectors,
        basis: h.basis.clone(),
    }
}

/// Lowest `count` eigenpairs, dense below `dense_limit` and Lanczos above.
pub fn diagonalize_lowest(h: &FockHamiltonian, count: usize, dense_limit: usize) -> Result<Spectrum> {
    if h.dim() <= dense_limit || count >= h.dim() {
        let mut s = diagonalize(h);
        let k = count.min(h.dim());
        s.values.truncate(k);
        s.vectors = s.vectors.columns(0, k).into_owned();
        return Ok(s);
    }
    let (values, vectors) = lanczos_lowest(&h.matrix, count)?;
    Ok(Spectrum {
        values,
        vectors,
        basis: h.basis.clone(),
    })
}

/// Lanczos with full reorthogonalization for the lowest `count` eigenpairs.
/// Converged pairs satisfy `‖Hv − Ev‖ < 1e−10·‖H‖`.
pub fn lanczos_lowest(h: &SparseMatrix, count: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.dim;
    let norm = h.norm_bound().max(f64::MIN_POSITIVE);
    let tol = 1e-10 * norm;
    let max_k = n.min((8 * count).max(count + 200)).min(n);
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(max_k + 1);
    let mut start = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64) * 0.7548776662 + 0.3).sin());
    start /= start.norm();
    q.push(start);
    let mut alpha = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut w = vec![0.0; n];
    let mut k = 0;
    loop {
        h.matvec(q[k].as_slice(), &mut w);
        let mut r = DVector::from_column_slice(&w);
        let a = q[k].dot(&r);
        alpha.push(a);
        // two passes of classical Gram-Schmidt against all previous vectors
        for _ in 0..2 {
            for v in &q {
                let c = v.dot(&r);
                r.axpy(-c, v, 1.0);
            }
        }
        let b = r.norm();
        k += 1;
        let finished = k >= max_k || b < 1e-14 * norm;
        if k >= count && (k % 10 == 0 || finished) {
            let t = tridiagonal(&alpha, &beta);
            let (vals, vecs) = dense_eigen(t);
            let converged = (0..count).all(|i| (b * vecs[(k - 1, i)]).abs() < 0.1 * tol);
            if converged || finished {
                let basis = DMatrix::from_columns(&q[..k]);
                let ritz = &basis * vecs.columns(0, count);
                let mut worst = 0.0f64;
                let mut y = vec![0.0; n];
                for i in 0..count {
                    h.matvec(ritz.column(i).as_slice(), &mut y);
                    let res = (DVector::from_column_slice(&y) - ritz.column(i) * vals[i]).norm();
                    worst = worst.max(res);
                }
                if worst < tol {
                    return Ok((vals[..count].to_vec(), ritz));
                }
                if finished {
                    return Err(Error::Convergence(format!(
                        "Lanczos after {k} steps: worst residual {worst:.3e} > {tol:.3e}"
                    )));
                }
            }
        }
        if finished {
            return Err(Error::Convergence(format!("Lanczos stopped after {k} steps")));
        }
        beta.push(b);
        q.push(r / b);
    }
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    t
}

/// Labeling thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelOptions {
    /// Minimum squared overlap for an assignment.
    pub threshold: f64,
    /// Two eigenstates whose claims on one label differ by less than this
    /// make the label ambiguous.
    pub tie_tolerance: f64,
}

impl Default for LabelOptions {
    fn default() -> Self {
        Self {
            threshold: 0.5,
            tie_tolerance: 1e-3,
        }
    }
}

/// Eigenstate assigned to a bare label, with its squared overlap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub label: Vec<u8>,
    pub eigen_index: usize,
    pub overlap: f64,
}

/// Spectrum together with the label assignment.
#[derive(Debug, Clone)]
pub struct LabeledSpectrum {
    pub spectrum: Spectrum,
    pub assignments: Vec<Assignment>,
}

impl LabeledSpectrum {
    pub fn assignment(&self, label: &[u8]) -> Option<&Assignment> {
        self.assignments.iter().find(|a| a.label == label)
    }

    pub fn energy(&self, label: &[u8]) -> Result<f64> {
        let a = self.require(label)?;
        Ok(self.spectrum.values[a.eigen_index])
    }

    /// Dressed eigenvector for a label.
    pub fn vector(&self, label: &[u8]) -> Result<DVector<f64>> {
        let a = self.require(label)?;
        Ok(self.spectrum.vectors.column(a.eigen_index).into_owned())
    }

    /// `|⟨dressed(label) | bare⟩|²`.
    pub fn overlap(&self, label: &[u8], bare: &[u8]) -> Result<f64> {
        let a = self.require(label)?;
        let row = self
            .spectrum
            .basis
            .index_of(bare)
            .ok_or_else(|| Error::InvalidSpec(format!("bare state {bare:?} not in basis")))?;
        Ok(self.spectrum.vectors[(row, a.eigen_index)].powi(2))
    }

    fn require(&self, label: &[u8]) -> Result<&Assignment> {
        self.assignment(label)
            .ok_or_else(|| Error::InvalidSpec(format!("label {label:?} was not requested")))
    }
}

/// Greedy assignment of requested bare labels to eigenstates by descending
/// squared overlap.
pub fn label_states(spectrum: Spectrum, labels: &[Vec<u8>], opts: &LabelOptions) -> Result<LabeledSpectrum> {
    let cols = spectrum.vectors.ncols();
    let mut rows = Vec::with_capacity(labels.len());
    for l in labels {
        let r = spectrum
            .basis
            .index_of(l)
            .ok_or_else(|| Error::InvalidSpec(format!("label {l:?} outside the truncated basis")))?;
        rows.push(r);
    }
    let mut claims: Vec<(usize, usize, f64)> = Vec::new();
    let mut contested = Vec::new();
    for (li, &r) in rows.iter().enumerate() {
        let mut w: Vec<(usize, f64)> = (0..cols).map(|k| (k, spectrum.vectors[(r, k)].powi(2))).collect();
        w.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        if w.len() >= 2 && w[0].1 - w[1].1 < opts.tie_tolerance {
            contested.push(ContestedLabel {
                label: labels[li].clone(),
                candidates: w.iter().take(2).copied().collect(),
            });
        }
        claims.extend(w.iter().take(4).map(|&(k, o)| (li, k, o)));
    }
    claims.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.1.cmp(&b.1)).then(a.0.cmp(&b.0)));
    let mut label_taken = vec![None::<(usize, f64)>; labels.len()];
    let mut eig_taken = vec![false; cols];
    for &(li, k, o) in &claims {
        if label_taken[li].is_some() || eig_taken[k] || o < opts.threshold {
            continue;
        }
        label_taken[li] = Some((k, o));
        eig_taken[k] = true;
    }
    for (li, taken) in label_taken.iter().enumerate() {
        if taken.is_none() && !contested.iter().any(|c: &ContestedLabel| c.label == labels[li]) {
            let candidates = claims
                .iter()
                .filter(|c| c.0 == li)
                .take(2)
                .map(|c| (c.1, c.2))
                .collect();
            contested.push(ContestedLabel {
                label: labels[li].clone(),
                candidates,
            });
        }
    }
    if !contested.is_empty() {
        return Err(Error::Labeling(contested));
    }
    let assignments = labels
        .iter()
        .zip(&label_taken)
        .map(|(l, t)| {
            let (k, o) = t.unwrap();
            Assignment {
                label: l.clone(),
                eigen_index: k,
                overlap: o,
            }
        })
        .collect();
    Ok(LabeledSpectrum { spectrum, assignments })
}

/// The four computational labels of a qubit–coupler–qubit dimer,
/// ordered `000, 001, 100, 101`.
pub fn dimer_computational_labels() -> Vec<Vec<u8>> {
    vec![vec![0, 0, 0], vec![0, 0, 1], vec![1, 0, 0], vec![1, 0, 1]]
}
