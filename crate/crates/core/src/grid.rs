//! Uniform tensor grids on axis-aligned boxes, nodal fields with implicit
//! zero Dirichlet data, quadrature and the five/seven point negative Laplacian.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::linalg::CsrMatrix;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum GridError {
    #[error("dimension must be 2 or 3, got {0}")]
    Dimension(usize),
    #[error("expected {expected} values for {what}, got {got}")]
    Arity {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("extent along axis {axis} must be positive and finite, got {value}")]
    Extent { axis: usize, value: f64 },
    #[error("grid has no interior nodes (node count {count} on axis {axis}, need at least 3)")]
    NoInterior { axis: usize, count: usize },
    #[error("fields live on different grids")]
    Mismatch,
    #[error("field length {got} does not match interior node count {expected}")]
    Length { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("field file: {0}")]
    Format(String),
    #[error("field file: {0}")]
    Io(String),
}

/// Uniform grid on `[0, L_0] x ... x [0, L_{N-1}]`. Only interior nodes carry
/// unknowns; they are numbered row-major with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    extents: Vec<f64>,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    interior: Vec<usize>,
    strides: Vec<usize>,
}

impl Grid {
    pub fn new(dimension: usize, extents: &[f64], nodes: &[usize]) -> Result<Grid, GridError> {
        if dimension != 2 && dimension != 3 {
            return Err(GridError::Dimension(dimension));
        }
        if extents.len() != dimension {
            return Err(GridError::Arity {
                what: "extents",
                expected: dimension,
                got: extents.len(),
            });
        }
        if nodes.len() != dimension {
            return Err(GridError::Arity {
                what: "node counts",
                expected: dimension,
                got: nodes.len(),
            });
        }
        for (axis, &value) in extents.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                return Err(GridError::Extent { axis, value });
            }
        }
        for (axis, &count) in nodes.iter().enumerate() {
            if count < 3 {
                return Err(GridError::NoInterior { axis, count });
            }
        }
        let spacing: Vec<f64> = extents
            .iter()
            .zip(nodes)
            .map(|(&l, &n)| l / (n - 1) as f64)
            .collect();
        let interior: Vec<usize> = nodes.iter().map(|n| n - 2).collect();
        let mut strides = Vec::with_capacity(dimension);
        let mut acc = 1;
        for m in &interior {
            strides.push(acc);
            acc *= m;
        }
        Ok(Grid {
            extents: extents.to_vec(),
            nodes: nodes.to_vec(),
            spacing,
            interior,
            strides,
        })
    }

    /// Unit-extent grid with `n` nodes (boundary included) along every axis.
    pub fn unit(dimension: usize, n: usize) -> Result<Grid, GridError> {
        Grid::new(dimension, &vec![1.0; dimension], &vec![n; dimension])
    }

    pub fn dimension(&self) -> usize {
        self.extents.len()
    }
    pub fn extents(&self) -> &[f64] {
        &self.extents
    }
    pub fn node_counts(&self) -> &[usize] {
        &self.nodes
    }
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }
    /// Interior nodes per axis.
    pub fn interior_shape(&self) -> &[usize] {
        &self.interior
    }
    pub fn len(&self) -> usize {
        self.interior.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn volume(&self) -> f64 {
        self.extents.iter().product()
    }
    /// Midpoint quadrature weight attached to each interior node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }
    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    /// Multi-index (interior numbering, zero based) of a flat index.
    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for (axis, &m) in self.interior.iter().enumerate() {
            out[axis] = idx % m;
            idx /= m;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Physical coordinates of an interior node.
    pub fn coords(&self, idx: usize) -> [f64; 3] {
        let mi = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.dimension() {
            x[axis] = (mi[axis] + 1) as f64 * self.spacing[axis];
        }
        x
    }

    /// Neighbour along `axis` in direction `dir` (+1/-1); `None` when the
    /// neighbour is a boundary node.
    #[inline]
    pub fn neighbor(&self, idx: usize, axis: usize, forward: bool) -> Option<usize> {
        let m = self.interior[axis];
        let s = self.strides[axis];
        let i = (idx / s) % m;
        if forward {
            (i + 1 < m).then(|| idx + s)
        } else {
            (i > 0).then(|| idx - s)
        }
    }

    /// True when any stencil neighbour of the node lies on the boundary.
    pub fn touches_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dimension()).any(|a| mi[a] == 0 || mi[a] + 1 == self.interior[a])
    }

    /// `out = -Δ_h x` with homogeneous Dirichlet data.
    pub fn neg_laplacian_into(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len());
        let inv_h2: Vec<f64> = self.spacing.iter().map(|h| 1.0 / (h * h)).collect();
        for (idx, o) in out.iter_mut().enumerate() {
            let xi = x[idx];
            let mut acc = 0.0;
            for axis in 0..self.dimension() {
                let lo = self.neighbor(idx, axis, false).map_or(0.0, |j| x[j]);
                let hi = self.neighbor(idx, axis, true).map_or(0.0, |j| x[j]);
                acc += (2.0 * xi - lo - hi) * inv_h2[axis];
            }
            *o = acc;
        }
    }

    pub fn neg_laplacian(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.neg_laplacian_into(x, &mut out);
        out
    }

    /// Sparse matrix of `-Δ_h` on interior nodes.
    pub fn laplacian_matrix(&self) -> CsrMatrix {
        let inv_h2: Vec<f64> = self.spacing.iter().map(|h| 1.0 / (h * h)).collect();
        let diag: f64 = 2.0 * inv_h2.iter().sum::<f64>();
        let n = self.len();
        let mut rows = Vec::with_capacity(n);
        for idx in 0..n {
            let mut row = Vec::with_capacity(2 * self.dimension() + 1);
            for axis in (0..self.dimension()).rev() {
                if let Some(j) = self.neighbor(idx, axis, false) {
                    row.push((j, -inv_h2[axis]));
                }
            }
            row.push((idx, diag));
            for axis in 0..self.dimension() {
                if let Some(j) = self.neighbor(idx, axis, true) {
                    row.push((j, -inv_h2[axis]));
                }
            }
            rows.push(row);
        }
        CsrMatrix::from_rows(n, rows)
    }

    /// Quadrature inner product `∫ a b`.
    pub fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        self.cell_volume() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }

    /// `∫ ∇a·∇b` as a sum of products of edge difference quotients. Equal to
    /// the quadrature pairing `⟨-Δ_h a, b⟩` and exactly symmetric in `a, b`.
    pub fn dot_h10(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut acc = 0.0;
        for axis in 0..self.dimension() {
            let inv_h2 = 1.0 / (self.spacing[axis] * self.spacing[axis]);
            let mut sum = 0.0;
            for idx in 0..a.len() {
                let (an, bn) = match self.neighbor(idx, axis, true) {
                    Some(j) => (a[j], b[j]),
                    None => (0.0, 0.0),
                };
                sum += (a[idx] - an) * (b[idx] - bn);
                if self.neighbor(idx, axis, false).is_none() {
                    sum += a[idx] * b[idx];
                }
            }
            acc += sum * inv_h2;
        }
        self.cell_volume() * acc
    }

    pub fn norm_l2(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    pub fn norm_h10(&self, a: &[f64]) -> f64 {
        self.dot_h10(a, a).max(0.0).sqrt()
    }

    pub fn integrate(&self, a: &[f64]) -> f64 {
        self.cell_volume() * a.iter().sum::<f64>()
    }

    /// `∫ w · a^power`.
    pub fn weighted_integral(&self, weight: &[f64], a: &[f64], power: i32) -> f64 {
        self.cell_volume()
            * weight
                .iter()
                .zip(a)
                .map(|(w, x)| w * x.powi(power))
                .sum::<f64>()
    }

    /// Squared centered-difference gradient magnitude at every interior node,
    /// using the known zero boundary values.
    pub fn grad_sq(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        for (idx, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for axis in 0..self.dimension() {
                let d = self.centered_diff(u, idx, axis);
                acc += d * d;
            }
            *o = acc;
        }
        out
    }

    #[inline]
    pub fn centered_diff(&self, u: &[f64], idx: usize, axis: usize) -> f64 {
        let lo = self.neighbor(idx, axis, false).map_or(0.0, |j| u[j]);
        let hi = self.neighbor(idx, axis, true).map_or(0.0, |j| u[j]);
        (hi - lo) / (2.0 * self.spacing[axis])
    }

    /// Node-set sample of a function of position.
    pub fn sample(&self, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = self.dimension();
        (0..self.len())
            .map(|i| {
                let x = self.coords(i);
                f(&x[..d])
            })
            .collect()
    }
}

/// Nodal values on the interior of a grid; boundary values are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<ScalarField, GridError> {
        if values.len() != grid.len() {
            return Err(GridError::Length {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite(i));
        }
        Ok(ScalarField { grid, values })
    }

    pub fn zeros(grid: Arc<Grid>) -> ScalarField {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> ScalarField {
        let n = grid.len();
        ScalarField {
            grid,
            values: vec![value; n],
        }
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> f64) -> ScalarField {
        let values = grid.sample(f);
        ScalarField { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn len(&self) -> usize {
        self.values.len()
    }
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, other: &ScalarField) -> Result<(), GridError> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(GridError::Mismatch)
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn apply_neg_laplacian(&self) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self.grid.neg_laplacian(&self.values),
        }
    }

    pub fn inner_h10(&self, other: &ScalarField) -> Result<f64, GridError> {
        self.check(other)?;
        Ok(self.grid.dot_h10(&self.values, &other.values))
    }

    pub fn inner_l2(&self, other: &ScalarField) -> Result<f64, GridError> {
        self.check(other)?;
        Ok(self.grid.dot(&self.values, &other.values))
    }

    pub fn norm_l2(&self) -> f64 {
        self.grid.norm_l2(&self.values)
    }

    pub fn norm_h10(&self) -> f64 {
        self.grid.norm_h10(&self.values)
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn weighted_integral(&self, weight: &ScalarField, power: i32) -> Result<f64, GridError> {
        self.check(weight)?;
        Ok(self
            .grid
            .weighted_integral(&weight.values, &self.values, power))
    }

    pub fn positive_part(&self) -> ScalarField {
        self.map(|x| x.max(0.0))
    }

    pub fn negative_part(&self) -> ScalarField {
        self.map(|x| (-x).max(0.0))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Serialize in the text field format: header `N n1 n2 [n3]`, extents,
    /// then one value per line in interior order.
    pub fn to_text(&self) -> String {
        let g = &self.grid;
        let mut s = String::with_capacity(24 * (self.values.len() + 2));
        let _ = write!(s, "{}", g.dimension());
        for n in g.node_counts() {
            let _ = write!(s, " {n}");
        }
        s.push('\n');
        let ext: Vec<String> = g.extents().iter().map(|e| format!("{e:?}")).collect();
        s.push_str(&ext.join(" "));
        s.push('\n');
        for v in &self.values {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<ScalarField, GridError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| GridError::Format("missing header line".into()))?;
        let ints: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| GridError::Format(format!("bad header token `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let (&dim, counts) = ints
            .split_first()
            .ok_or_else(|| GridError::Format("empty header".into()))?;
        let ext_line = lines
            .next()
            .ok_or_else(|| GridError::Format("missing extents line".into()))?;
        let extents: Vec<f64> = ext_line
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| GridError::Format(format!("bad extent `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        let grid = Arc::new(Grid::new(dim, &extents, counts)?);
        let values: Vec<f64> = lines
            .map(|l| {
                l.trim()
                    .parse()
                    .map_err(|_| GridError::Format(format!("bad value `{}`", l.trim())))
            })
            .collect::<Result<_, _>>()?;
        ScalarField::new(grid, values)
    }

    pub fn write(&self, path: &Path) -> Result<(), GridError> {
        std::fs::write(path, self.to_text()).map_err(|e| GridError::Io(e.to_string()))
    }

    pub fn read(path: &Path) -> Result<ScalarField, GridError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GridError::Io(format!("{}: {e}", path.display())))?;
        ScalarField::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn build_examples() {
        let g = Grid::new(2, &[1.0, 1.0], &[5, 5]).unwrap();
        assert_eq!(g.len(), 9);
        assert_eq!(g.spacing(), &[0.25, 0.25]);
        let g3 = Grid::new(3, &[1.0; 3], &[3, 3, 3]).unwrap();
        assert_eq!(g3.len(), 1);
        assert_eq!(
            Grid::new(2, &[1.0, 1.0], &[2, 2]),
            Err(GridError::NoInterior { axis: 0, count: 2 })
        );
        assert_eq!(
            Grid::new(4, &[1.0; 4], &[5; 4]),
            Err(GridError::Dimension(4))
        );
        assert!(matches!(
            Grid::new(2, &[1.0, 0.0], &[5, 5]),
            Err(GridError::Extent { axis: 1, .. })
        ));
    }

    #[test]
    fn single_node_stencil() {
        let g = Arc::new(Grid::unit(2, 3).unwrap());
        let f = ScalarField::constant(g, 1.5);
        assert_eq!(f.apply_neg_laplacian().values(), &[16.0 * 1.5]);
        let zero = ScalarField::zeros(f.grid().clone());
        assert!(zero
            .apply_neg_laplacian()
            .values()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn sine_mode_is_near_eigenfunction() {
        for n in [17usize, 33, 65] {
            let g = Arc::new(Grid::unit(2, n).unwrap());
            let s = ScalarField::from_fn(g.clone(), |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let ls = s.apply_neg_laplacian();
            let h = g.spacing()[0];
            // exact discrete eigenvalue of the stencil for this mode
            let discrete = 2.0 * 4.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
            for (a, b) in ls.values().iter().zip(s.values()) {
                assert!((a - discrete * b).abs() < 1e-9 * discrete);
            }
            assert!(
                (discrete - 2.0 * PI * PI).abs() / (2.0 * PI * PI) < h * h * PI * PI / 12.0 * 1.01
            );
        }
    }

    #[test]
    fn rayleigh_quotient_converges_second_order() {
        let mut errs = Vec::new();
        for n in [17usize, 33, 65] {
            let g = Arc::new(Grid::unit(2, n).unwrap());
            let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
            let rq = s.inner_h10(&s).unwrap() / s.inner_l2(&s).unwrap();
            errs.push((rq - 2.0 * PI * PI).abs());
        }
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9);
        }
    }

    #[test]
    fn unit_l2_eigenfunction_h10_norm() {
        let g = Arc::new(Grid::unit(2, 129).unwrap());
        let s = ScalarField::from_fn(g, |x| (PI * x[0]).sin() * (PI * x[1]).sin());
        let s = s.map(|v| v / s.norm_l2());
        assert!((s.norm_l2() - 1.0).abs() < 1e-12);
        assert!((s.inner_h10(&s).unwrap() - 2.0 * PI * PI).abs() < 1e-3 * 2.0 * PI * PI);
        assert!((s.weighted_integral(&s, 1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integrate_one_tends_to_volume() {
        let mut prev = 0.0;
        for n in [9usize, 33, 129] {
            let g = Arc::new(Grid::unit(2, n).unwrap());
            let one = ScalarField::constant(g, 1.0);
            let v = one.integrate();
            assert!(v < 1.0 && v > prev);
            prev = v;
        }
        assert!((1.0 - prev) < 0.02);
        let g = Arc::new(Grid::unit(2, 9).unwrap());
        assert_eq!(ScalarField::zeros(g).norm_l2(), 0.0);
    }

    #[test]
    fn parts() {
        let g = Arc::new(Grid::new(2, &[1.0, 1.0], &[4, 3]).unwrap());
        let f = ScalarField::new(g.clone(), vec![-1.0, 3.0]).unwrap();
        assert_eq!(f.positive_part().values(), &[0.0, 3.0]);
        assert_eq!(f.negative_part().values(), &[1.0, 0.0]);
        assert!(ScalarField::constant(g.clone(), -1.0)
            .positive_part()
            .values()
            .iter()
            .all(|&x| x == 0.0));
        assert!(ScalarField::constant(g, 2.0)
            .negative_part()
            .values()
            .iter()
            .all(|&x| x == 0.0));
    }

    #[test]
    fn mismatch_and_invalid_values() {
        let a = ScalarField::zeros(Arc::new(Grid::unit(2, 5).unwrap()));
        let b = ScalarField::zeros(Arc::new(Grid::unit(2, 6).unwrap()));
        assert_eq!(a.inner_h10(&b), Err(GridError::Mismatch));
        let g = Arc::new(Grid::unit(2, 3).unwrap());
        assert_eq!(
            ScalarField::new(g.clone(), vec![f64::NAN]),
            Err(GridError::NonFinite(0))
        );
        assert!(matches!(
            ScalarField::new(g, vec![1.0, 2.0]),
            Err(GridError::Length { .. })
        ));
    }

    #[test]
    fn matrix_matches_stencil() {
        let g = Grid::new(3, &[1.0, 2.0, 0.5], &[5, 6, 4]).unwrap();
        let a = g.laplacian_matrix();
        let x: Vec<f64> = (0..g.len()).map(|i| ((i * 37) % 11) as f64 - 5.0).collect();
        let y1 = a.matvec(&x);
        let y2 = g.neg_laplacian(&x);
        for (p, q) in y1.iter().zip(&y2) {
            assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn field_text_roundtrip_exact() {
        let g = Arc::new(Grid::new(3, &[1.0, 0.3, 2.5], &[4, 5, 3]).unwrap());
        let f = ScalarField::from_fn(g, |x| (x[0] * 1e-3).exp() / 3.0 - x[1] * 1e17 + x[2]);
        let back = ScalarField::from_text(&f.to_text()).unwrap();
        assert_eq!(back, f);
        assert!(ScalarField::from_text("2 5 5\n1 1\n0.5\n").is_err());
        assert!(ScalarField::from_text("").is_err());
    }

    fn arb_field(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn integration_by_parts_and_linearity(a in arb_field(20), b in arb_field(20), s in -3.0f64..3.0, t in -3.0f64..3.0) {
            let g = Grid::new(2, &[1.0, 0.7], &[6, 7]).unwrap();
            let la = g.neg_laplacian(&a);
            let lhs = g.dot(&la, &b);
            let rhs = g.dot_h10(&a, &b);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
            prop_assert_eq!(g.dot_h10(&a, &b), g.dot_h10(&b, &a));
            let comb: Vec<f64> = a.iter().zip(&b).map(|(x, y)| s * x + t * y).collect();
            let lc = g.neg_laplacian(&comb);
            let lb = g.neg_laplacian(&b);
            for i in 0..20 {
                let expect = s * la[i] + t * lb[i];
                prop_assert!((lc[i] - expect).abs() <= 1e-10 * expect.abs().max(1.0));
            }
            prop_assert!(g.dot_h10(&a, &a) >= 0.0);
        }

        #[test]
        fn positive_negative_split(a in arb_field(20)) {
            let g = Arc::new(Grid::new(2, &[1.0, 0.7], &[6, 7]).unwrap());
            let f = ScalarField::new(g, a).unwrap();
            let p = f.positive_part();
            let m = f.negative_part();
            for i in 0..f.len() {
                prop_assert_eq!(f.values()[i], p.values()[i] - m.values()[i]);
                prop_assert!(p.values()[i] >= 0.0 && m.values()[i] >= 0.0);
            }
        }
    }
}
