use std::collections::VecDeque;

use super::{
    check_finite, newton_refine, CriticalKind, CriticalPoint, GeometryParams, SolveError, Stage,
    Workspace,
};

/// Largest 4-connected component of `{c > 0}`; ties go to the component
/// containing the lowest node index.
fn largest_positive_component(ws: &Workspace<'_>) -> Vec<bool> {
    let grid = ws.grid();
    let c = ws.spec.c();
    let n = grid.len();
    let mut label = vec![usize::MAX; n];
    let mut best: (usize, usize) = (0, usize::MAX);
    let mut next = 0;
    for seed in 0..n {
        if c[seed] <= 0.0 || label[seed] != usize::MAX {
            continue;
        }
        let mut size = 0;
        let mut queue = VecDeque::from([seed]);
        label[seed] = next;
        while let Some(i) = queue.pop_front() {
            size += 1;
            for axis in 0..grid.dimension() {
                for fwd in [false, true] {
                    if let Some(j) = grid.neighbor(i, axis, fwd) {
                        if c[j] > 0.0 && label[j] == usize::MAX {
                            label[j] = next;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        if best.1 == usize::MAX || size > best.0 {
            best = (size, next);
        }
        next += 1;
    }
    label.iter().map(|&l| l == best.1).collect()
}

/// Bump supported in the largest component of `{c > 0}`: graph distance to
/// the component's complement (including the domain boundary), unit `H¹₀` norm.
fn component_profile(ws: &Workspace<'_>) -> Vec<f64> {
    let grid = ws.grid();
    let inside = largest_positive_component(ws);
    let n = grid.len();
    let mut dist = vec![0usize; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        if !inside[i] {
            continue;
        }
        let edge = (0..grid.dimension()).any(|a| {
            [false, true]
                .iter()
                .any(|&fwd| grid.neighbor(i, a, fwd).map_or(true, |j| !inside[j]))
        });
        if edge {
            dist[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for axis in 0..grid.dimension() {
            for fwd in [false, true] {
                if let Some(j) = grid.neighbor(i, axis, fwd) {
                    if inside[j] && dist[j] == 0 {
                        dist[j] = dist[i] + 1;
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    let v: Vec<f64> = dist.iter().map(|&d| d as f64).collect();
    let s = 1.0 / ws.norm(&v);
    v.iter().map(|x| x * s).collect()
}

/// Endpoint `v₀ = t·bump` with `bump` supported in `Ω₊`, `t` doubled from
/// `R_λ` until `I(v₀) < 0` and `‖v₀‖ > R_λ`.
pub fn construct_v0(ws: &Workspace<'_>, geom: &GeometryParams) -> Result<Vec<f64>, SolveError> {
    let stage = Stage::ConstructV0;
    if !ws.spec.c_plus_nonzero() {
        return Err(SolveError::Gate {
            stage,
            condition: "c+ not identically zero".into(),
            value: ws.spec.c().iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)),
        });
    }
    let profile = component_profile(ws);
    let mut t = geom.radius;
    for _ in 0..200 {
        t *= 2.0;
        let v: Vec<f64> = profile.iter().map(|x| t * x).collect();
        let e = ws.energy(geom.lambda, &v);
        if !e.is_finite() {
            break;
        }
        if e < 0.0 && t > geom.radius {
            return Ok(v);
        }
    }
    Err(SolveError::geometry(
        stage,
        "no negative energy along the ray through the positive set (set too thin for the grid?)",
    ))
}

/// Mountain-pass point with the final path's energy profile.
#[derive(Debug, Clone, PartialEq)]
pub struct MountainPassResult {
    pub point: CriticalPoint,
    /// `(s, I(γ(s)))` along the final path, `s` the normalized `H¹₀` arclength.
    pub path_energy: Vec<(f64, f64)>,
    /// Maximum of `I` over the initial straight path.
    pub initial_max: f64,
    pub redistributions: usize,
    /// Times the path was cut short at an earlier admissible endpoint.
    pub cuts: usize,
}

fn arclength(ws: &Workspace<'_>, path: &[Vec<f64>]) -> Vec<f64> {
    let mut s = vec![0.0];
    for k in 1..path.len() {
        let d: Vec<f64> = path[k]
            .iter()
            .zip(&path[k - 1])
            .map(|(a, b)| a - b)
            .collect();
        s.push(s[k - 1] + ws.norm(&d));
    }
    s
}

/// Resample a polygonal path at `m` points of equal `H¹₀` arclength.
fn resample(ws: &Workspace<'_>, path: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let s = arclength(ws, path);
    let last = path.len() - 1;
    let total = s[last];
    let mut out = Vec::with_capacity(m);
    out.push(path[0].clone());
    let mut seg = 0;
    for k in 1..m - 1 {
        let target = total * k as f64 / (m - 1) as f64;
        while seg + 1 < last && s[seg + 1] < target {
            seg += 1;
        }
        let len = s[seg + 1] - s[seg];
        let t = if len > 0.0 {
            (target - s[seg]) / len
        } else {
            0.0
        };
        out.push(
            path[seg]
                .iter()
                .zip(&path[seg + 1])
                .map(|(a, b)| a + t * (b - a))
                .collect(),
        );
    }
    out.push(path[last].clone());
    out
}

fn redistribute(ws: &Workspace<'_>, path: &mut Vec<Vec<f64>>) {
    *path = resample(ws, path, path.len());
}

/// First interior node outside the ball with negative energy. Such a node is
/// itself an admissible endpoint, and cutting the path there keeps it in the
/// path class while only lowering its maximum.
fn cut_index(ws: &Workspace<'_>, path: &[Vec<f64>], energy: &[f64], radius: f64) -> Option<usize> {
    (1..path.len() - 1).find(|&j| energy[j] < 0.0 && ws.norm(&path[j]) > radius)
}

fn segment_too_long(ws: &Workspace<'_>, path: &[Vec<f64>], k: usize) -> bool {
    let s = arclength(ws, path);
    let mean = s[path.len() - 1] / (path.len() - 1) as f64;
    [k.saturating_sub(1), k]
        .iter()
        .any(|&j| j + 1 < path.len() && s[j + 1] - s[j] > 2.0 * mean)
}

/// Move `x` to the maximum of `t ↦ I(x + tτ)` for `|t| ≤ bound` by secant
/// steps on the directional derivative. Returns the distance moved.
fn maximize_along(
    ws: &Workspace<'_>,
    lambda: f64,
    x: &mut Vec<f64>,
    tan: &[f64],
    bound: f64,
) -> f64 {
    let w = ws.grid().cell_volume();
    let slope = |t: f64| {
        let y: Vec<f64> = x.iter().zip(tan).map(|(a, b)| a + t * b).collect();
        w * crate::linalg::dot(&ws.gradient(lambda, &y), tan)
    };
    let (mut t0, mut d0) = (0.0, slope(0.0));
    let mut t1 = 1e-3 * bound;
    let mut d1 = slope(t1);
    for _ in 0..30 {
        if d1 == d0 {
            break;
        }
        let t2 = (t1 - d1 * (t1 - t0) / (d1 - d0)).clamp(-bound, bound);
        (t0, d0) = (t1, d1);
        t1 = t2;
        d1 = slope(t1);
        if (t1 - t0).abs() <= 1e-12 * bound {
            break;
        }
    }
    // keep the move only if it raised the energy (we want the maximum)
    let y: Vec<f64> = x.iter().zip(tan).map(|(a, b)| a + t1 * b).collect();
    if t1.is_finite() && ws.energy(lambda, &y) >= ws.energy(lambda, x) {
        *x = y;
        t1.abs()
    } else {
        0.0
    }
}

/// Path method for the mountain-pass point between `0` and `v0`: repeated
/// Armijo descent of the path maximum, with arclength redistribution, then
/// Newton refinement of the maximizer.
///
/// Whenever an interior node beyond the sphere `‖v‖ = R_λ` reaches negative
/// energy, the path is cut there and resampled, which keeps the mountain
/// resolved when `‖v0‖` is many times the size of the saddle.
///
/// The descent direction at the maximum has its component along the local
/// path tangent removed, so the node is pushed down onto the ridge instead
/// of sliding along the path. Newton takes over once the orthogonal part of
/// the gradient falls below the descent tolerance.
pub fn mountain_pass(
    ws: &Workspace<'_>,
    geom: &GeometryParams,
    v0: &[f64],
) -> Result<MountainPassResult, SolveError> {
    let stage = Stage::MountainPass;
    let lambda = geom.lambda;
    let e0 = ws.energy(lambda, v0);
    if !(e0 < 0.0 && ws.norm(v0) > geom.radius && geom.sphere_min > 0.0) {
        return Err(SolveError::geometry(
            stage,
            format!(
                "endpoint violates the geometry: I(v0) = {e0:e}, |v0| = {:e}, R = {:e}, M = {:e}",
                ws.norm(v0),
                geom.radius,
                geom.sphere_min
            ),
        ));
    }
    let m = ws.opts.path_nodes.max(3);
    let w = ws.grid().cell_volume();
    let mut path: Vec<Vec<f64>> = (0..m)
        .map(|k| {
            let t = k as f64 / (m - 1) as f64;
            v0.iter().map(|x| t * x).collect()
        })
        .collect();
    let mut energy: Vec<f64> = path.iter().map(|v| ws.energy(lambda, v)).collect();
    let argmax = |e: &[f64]| {
        let mut k = 1;
        for j in 2..m - 1 {
            if e[j] > e[k] {
                k = j;
            }
        }
        k
    };
    let initial_max = energy[argmax(&energy)];
    if initial_max < geom.sphere_min {
        return Err(SolveError::geometry(
            stage,
            format!(
                "initial path maximum {initial_max:e} is below the sphere minimum {:e}",
                geom.sphere_min
            ),
        ));
    }

    let mut redistributions = 0;
    let mut since = 0;
    let mut iterations = 0;
    let mut cuts = 0;
    let mut refined = None;
    // L² gradient at the last Newton attempt
    let mut last_try = f64::INFINITY;
    let k_final = loop {
        if let Some(j) = cut_index(ws, &path, &energy, geom.radius) {
            path = resample(ws, &path[..=j], m);
            energy = path.iter().map(|v| ws.energy(lambda, v)).collect();
            cuts += 1;
            since = 0;
        }
        let k = argmax(&energy);
        if energy[k] < geom.sphere_min {
            return Err(SolveError::geometry(
                stage,
                format!(
                    "path maximum collapsed to {:e} below the sphere minimum {:e}; retry with a larger lambda",
                    energy[k], geom.sphere_min
                ),
            ));
        }
        let x = &path[k];
        let r = ws.gradient(lambda, x);
        let s = ws.riesz(&r);
        if ws.dual_norm(&r, &s) <= ws.opts.tol_descent {
            break k;
        }
        // hand off to Newton as soon as it lands on a positive level
        let g2 = ws.l2(&r);
        if g2 <= ws.opts.newton_gate && g2 <= 0.1 * last_try {
            last_try = g2;
            if let Ok(nt) = newton_refine(ws, lambda, x) {
                let lvl = ws.energy(lambda, &nt.v);
                if nt.residual <= ws.opts.tol_gradient && lvl > 0.0 && lvl >= geom.sphere_min {
                    refined = Some(nt);
                    break k;
                }
            }
        }
        // unit tangent from the neighbours
        let mut tan: Vec<f64> = path[k + 1]
            .iter()
            .zip(&path[k - 1])
            .map(|(a, b)| a - b)
            .collect();
        let tn = ws.norm(&tan);
        if tn > 0.0 {
            tan.iter_mut().for_each(|t| *t /= tn);
        }
        // ⟨s, τ⟩_{H¹₀} = ∫ r τ
        let along = w * crate::linalg::dot(&r, &tan);
        let d: Vec<f64> = s.iter().zip(&tan).map(|(a, b)| a - along * b).collect();
        let dn = ws.norm(&d);
        if iterations >= ws.opts.max_iter_mp {
            return Err(SolveError::not_converged(
                stage,
                format!("path maximum still has gradient {dn:e} after {iterations} steps"),
            ));
        }
        let spacing = arclength(ws, &path)[m - 1] / (m - 1) as f64;
        if dn <= ws.opts.tol_descent || dn < along.abs() {
            // near the ridge the tangential residual dominates: maximize along the path
            let moved = maximize_along(ws, lambda, &mut path[k], &tan, spacing);
            if moved > 0.0 {
                energy[k] = ws.energy(lambda, &path[k]);
                iterations += 1;
                continue;
            }
            if dn <= ws.opts.tol_descent {
                break k;
            }
        }
        let x = &path[k];
        // a step may not outrun the path spacing, or the path disconnects
        let scale = ws.norm(x).max(1.0);
        let mut alpha = (1.0 / (1.0 + ws.norm(&s) / scale)).min(0.5 * spacing / dn);
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a - alpha * b).collect();
            let ec = ws.energy(lambda, &cand);
            if ec <= energy[k] - ws.opts.armijo * alpha * dn * dn {
                check_finite(stage, &cand)?;
                path[k] = cand;
                energy[k] = ec;
                moved = true;
                break;
            }
            alpha *= ws.opts.backtrack;
        }
        if !moved {
            break k;
        }
        iterations += 1;
        since += 1;
        if since >= ws.opts.sweep_len || segment_too_long(ws, &path, k) {
            redistribute(ws, &mut path);
            energy = path.iter().map(|v| ws.energy(lambda, v)).collect();
            redistributions += 1;
            since = 0;
        }
    };

    let newton = match refined {
        Some(nt) => nt,
        None => newton_refine(ws, lambda, &path[k_final])?,
    };
    if !(newton.residual <= ws.opts.tol_gradient) {
        return Err(SolveError::not_converged(
            Stage::Newton,
            format!(
                "mountain-pass gradient norm {:e} above {:e}",
                newton.residual, ws.opts.tol_gradient
            ),
        ));
    }
    let level = ws.energy(lambda, &newton.v);
    if !(level > 0.0 && level >= geom.sphere_min) {
        return Err(SolveError::geometry(
            stage,
            format!(
                "refined level {level:e} is below the sphere minimum {:e}",
                geom.sphere_min
            ),
        ));
    }
    path[k_final] = newton.v.clone();
    let s = arclength(ws, &path);
    let total = s[m - 1];
    let path_energy = s
        .iter()
        .zip(&path)
        .map(|(si, v)| (si / total, ws.energy(lambda, v)))
        .collect();
    Ok(MountainPassResult {
        point: CriticalPoint {
            v: ws.field(newton.v),
            energy: level,
            gradient_norm: newton.residual,
            kind: CriticalKind::MountainPass,
            level: Some(level),
            descent_iterations: iterations,
            newton_iterations: newton.iterations,
        },
        path_energy,
        initial_max,
        redistributions,
        cuts,
    })
}
