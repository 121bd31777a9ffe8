//! Upper and lower bounds for the atomic predual norm.
//!
//! Upper bounds come from restricting `f` to the leaves of a dyadic
//! partition chosen by dynamic programming over the cube tree. Lower bounds
//! come from pairing `f` with witnesses of unit Morrey norm.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{
    pointwise_lq, sample, Coord, DyadicCube, FunctionExpr, GridFunction, GridFunctionSeq, GridSpec,
    LevelRange,
};
use crate::norms::{morrey_norm_dyadic, resolve_range, PredualParams};

/// Relative rounding allowance when checking `lower ≤ upper`.
pub const DUALITY_SLACK: f64 = 1e-12;

/// A restriction of the target to one cube, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    cube: DyadicCube,
    indices: Vec<usize>,
    values: Vec<Complex64>,
    lp_norm: f64,
    cost: f64,
}

impl Atom {
    pub fn cube(&self) -> &DyadicCube {
        &self.cube
    }

    /// Grid indices carrying the piece, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn piece_lp_norm(&self) -> f64 {
        self.lp_norm
    }

    /// `2^{J(n/p+ϱ)} ‖piece‖_{L_p}`.
    pub fn cost(&self) -> f64 {
        self.cost
    }

    /// The piece as a full grid function.
    pub fn piece(&self, spec: &GridSpec) -> GridFunction {
        let mut v = vec![Complex64::new(0.0, 0.0); spec.len()];
        for (&i, &x) in self.indices.iter().zip(&self.values) {
            v[i] = x;
        }
        GridFunction::from_parts(*spec, v)
    }

    /// `‖piece / cost‖_{L_p} · 2^{J(n/p+ϱ)}`, which is 1 for a nonzero piece.
    pub fn normalized_scale(&self, params: &PredualParams) -> f64 {
        if self.cost == 0.0 {
            return 0.0;
        }
        self.lp_norm / self.cost * self.cube.scale_weight(params.scale_exponent(self.cube.dim()))
    }
}

/// Export record for one atom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomRecord {
    #[serde(rename = "J")]
    pub level: i32,
    #[serde(rename = "M")]
    pub offset: Vec<i64>,
    pub cost: f64,
    pub piece_l_p_norm: f64,
}

/// A finite exact decomposition of `target` into atoms on disjoint leaves.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicDecomposition {
    params: PredualParams,
    target: GridFunction,
    root: Option<DyadicCube>,
    atoms: Vec<Atom>,
    total_cost: f64,
}

impl AtomicDecomposition {
    pub fn params(&self) -> &PredualParams {
        &self.params
    }

    pub fn target(&self) -> &GridFunction {
        &self.target
    }

    /// Root of the partition tree; `None` for the zero function.
    pub fn root(&self) -> Option<&DyadicCube> {
        self.root.as_ref()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn total_cost(&self) -> f64 {
        self.total_cost
    }

    /// Sum of the pieces.
    pub fn reconstruct(&self) -> GridFunction {
        let spec = self.target.spec();
        let mut v = vec![Complex64::new(0.0, 0.0); spec.len()];
        for atom in &self.atoms {
            for (&i, &x) in atom.indices.iter().zip(&atom.values) {
                v[i] += x;
            }
        }
        GridFunction::from_parts(*spec, v)
    }

    pub fn export(&self) -> Vec<AtomRecord> {
        self.atoms
            .iter()
            .map(|a| AtomRecord {
                level: a.cube.level(),
                offset: a.cube.offset().to_vec(),
                cost: a.cost,
                piece_l_p_norm: a.lp_norm,
            })
            .collect()
    }
}

/// Midpoint-rule `∫ Σ_j g_j f_j`, the shorter sequence padded with zeros.
pub fn pairing(g: &GridFunctionSeq, f: &GridFunctionSeq) -> Result<Complex64> {
    g.spec().ensure_same(f.spec())?;
    let len = g.len().max(f.len());
    let (g, f) = (g.padded(len), f.padded(len));
    let vol = g.spec().cell_volume();
    let mut total = Complex64::new(0.0, 0.0);
    for (gj, fj) in g.members().iter().zip(f.members()) {
        let s: Complex64 = gj.values().iter().zip(fj.values()).map(|(a, b)| a * b).sum();
        total += s;
    }
    Ok(total * vol)
}

fn scalar_pairing(g: &GridFunction, f: &GridFunction) -> Result<Complex64> {
    pairing(&GridFunctionSeq::singleton(g.clone()), &GridFunctionSeq::singleton(f.clone()))
}

/// The smallest cube at a level in `range` containing every node in `cells`.
/// At the finest level two cubes may qualify; the lower offset wins.
fn root_cube(spec: &GridSpec, cells: &[usize], range: LevelRange) -> Result<DyadicCube> {
    let dim = spec.dim();
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for &i in cells {
        let x = spec.node(i);
        for axis in 0..dim {
            lo[axis] = lo[axis].min(x[axis]);
            hi[axis] = hi[axis].max(x[axis]);
        }
    }
    for level in (range.min..=range.max).rev() {
        let scale = 2f64.powi(level);
        let mut offset = [0i64; 2];
        let mut ok = true;
        for axis in 0..dim {
            // need m - 1 <= lo·2^J and hi·2^J <= m + 1
            let m = (hi[axis] * scale - 1.0).ceil();
            if m - 1.0 > lo[axis] * scale {
                ok = false;
                break;
            }
            offset[axis] = m as i64;
        }
        if ok {
            return DyadicCube::new(level, &offset[..dim]);
        }
    }
    Err(LabError::SupportNotCovered(format!(
        "no cube with level in [{}, {}] contains the support",
        range.min, range.max
    )))
}

struct Solver<'a> {
    spec: &'a GridSpec,
    f: &'a GridFunction,
    masses: Vec<f64>,
    p: f64,
    exponent: f64,
    finest: i32,
}

struct Node {
    cost: f64,
    leaves: Vec<(DyadicCube, Vec<usize>, f64)>,
    /// Every cube visited, for witness construction.
    visited: Vec<(DyadicCube, Vec<usize>)>,
}

impl Solver<'_> {
    fn keep_cost(&self, cube: &DyadicCube, cells: &[usize]) -> (f64, f64) {
        let mass: f64 = cells.iter().map(|&i| self.masses[i]).sum();
        let norm = mass.powf(1.0 / self.p);
        (cube.scale_weight(self.exponent) * norm, norm)
    }

    /// Cells of `cube` split between its children, half-open along each axis.
    fn split(&self, cube: &DyadicCube, cells: &[usize]) -> Vec<(DyadicCube, Vec<usize>)> {
        let dim = self.spec.dim();
        let centre = cube.center();
        let children = cube.children();
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); children.len()];
        for &i in cells {
            let x = self.spec.node(i);
            let mut mask = 0usize;
            for axis in 0..dim {
                if x[axis] >= centre[axis] {
                    mask |= 1 << (dim - 1 - axis);
                }
            }
            parts[mask].push(i);
        }
        children.into_iter().zip(parts).filter(|(_, c)| !c.is_empty()).collect()
    }

    fn solve(&self, cube: DyadicCube, cells: Vec<usize>) -> Node {
        let (keep, norm) = self.keep_cost(&cube, &cells);
        if cube.level() >= self.finest {
            return Node {
                cost: keep,
                visited: vec![(cube, cells.clone())],
                leaves: vec![(cube, cells, norm)],
            };
        }
        let mut split_cost = 0.0;
        let mut leaves = Vec::new();
        let mut visited = vec![(cube, cells.clone())];
        for (child, part) in self.split(&cube, &cells) {
            let node = self.solve(child, part);
            split_cost += node.cost;
            leaves.extend(node.leaves);
            visited.extend(node.visited);
        }
        if keep <= split_cost {
            Node {
                cost: keep,
                leaves: vec![(cube, cells, norm)],
                visited,
            }
        } else {
            Node {
                cost: split_cost,
                leaves,
                visited,
            }
        }
    }
}

struct Solved {
    decomposition: AtomicDecomposition,
    visited: Vec<(DyadicCube, Vec<usize>)>,
    range: LevelRange,
}

fn solve(f: &GridFunction, params: &PredualParams, range: Option<LevelRange>) -> Result<Solved> {
    let spec = f.spec();
    let dim = spec.dim();
    params.check_dim(dim)?;
    let range = resolve_range(spec, range)?;
    let vol = spec.cell_volume();
    let masses: Vec<f64> = f.values().iter().map(|v| v.norm().powf(params.p()) * vol).collect();
    let cells: Vec<usize> = (0..spec.len()).filter(|&i| f.value(i) != Complex64::new(0.0, 0.0)).collect();
    if cells.is_empty() {
        return Ok(Solved {
            decomposition: AtomicDecomposition {
                params: *params,
                target: f.clone(),
                root: None,
                atoms: Vec::new(),
                total_cost: 0.0,
            },
            visited: Vec::new(),
            range,
        });
    }
    let root = root_cube(spec, &cells, range)?;
    let solver = Solver {
        spec,
        f,
        masses,
        p: params.p(),
        exponent: params.scale_exponent(dim),
        finest: range.max,
    };
    let node = solver.solve(root, cells);
    let atoms = node
        .leaves
        .into_iter()
        .map(|(cube, indices, norm)| {
            let values = indices.iter().map(|&i| solver.f.value(i)).collect();
            Atom {
                cost: cube.scale_weight(solver.exponent) * norm,
                cube,
                indices,
                values,
                lp_norm: norm,
            }
        })
        .collect();
    Ok(Solved {
        decomposition: AtomicDecomposition {
            params: *params,
            target: f.clone(),
            root: Some(root),
            atoms,
            total_cost: node.cost,
        },
        visited: node.visited,
        range,
    })
}

/// Minimum-cost decomposition of `f` into restrictions to the leaves of a
/// dyadic partition of the smallest cube containing its support. Levels are
/// searched within `range` (the grid default when `None`).
pub fn predual_upper_bound(
    f: &GridFunction,
    params: &PredualParams,
    range: Option<LevelRange>,
) -> Result<AtomicDecomposition> {
    Ok(solve(f, params, range)?.decomposition)
}

/// A pairing witness and the bound it certifies.
#[derive(Clone, Debug, PartialEq)]
pub struct DualityCertificate {
    pub witness: GridFunction,
    pub witness_label: String,
    pub witness_morrey_norm: f64,
    pub pairing_value: Complex64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    /// `lower ≤ upper` up to [`DUALITY_SLACK`].
    pub weak_duality_holds: bool,
}

impl DualityCertificate {
    pub fn gap(&self) -> f64 {
        self.upper_bound - self.lower_bound
    }

    pub fn export(&self) -> CertificateRecord {
        CertificateRecord {
            witness_expr: self.witness_label.clone(),
            pairing: [self.pairing_value.re, self.pairing_value.im],
            lower: self.lower_bound,
            upper: self.upper_bound,
            gap: self.gap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub witness_expr: String,
    pub pairing: [f64; 2],
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
}

/// Translates and dilates of bumps, indicators and the power profile of the
/// paired Morrey space, placed around the support of `f`.
pub fn default_dictionary(f: &GridFunction, params: &PredualParams) -> Result<Vec<FunctionExpr>> {
    let spec = f.spec();
    let dim = spec.dim();
    let support: Vec<usize> = (0..spec.len()).filter(|&i| f.value(i) != Complex64::new(0.0, 0.0)).collect();
    let (centre, half) = if support.is_empty() {
        (vec![0.0; dim], spec.half_width() / 2.0)
    } else {
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for &i in &support {
            let x = spec.node(i);
            for axis in 0..dim {
                lo[axis] = lo[axis].min(x[axis]);
                hi[axis] = hi[axis].max(x[axis]);
            }
        }
        let centre: Vec<f64> = (0..dim).map(|a| (lo[a] + hi[a]) / 2.0).collect();
        let half = (0..dim)
            .map(|a| (hi[a] - lo[a]) / 2.0)
            .fold(0.0, f64::max)
            .max(2.0 * spec.spacing());
        (centre, half)
    };
    let r_pair = params.paired_morrey(dim)?.r();
    let mut dict = Vec::new();
    for k in 0..4 {
        let radius = 1.25 * half * 0.5f64.powi(k);
        if radius < 2.0 * spec.spacing() {
            break;
        }
        let shifts: &[f64] = if k == 0 { &[0.0] } else { &[-0.5, 0.0, 0.5] };
        for &s in shifts {
            let c: Vec<f64> = centre.iter().map(|c| c + s * half).collect();
            dict.push(FunctionExpr::Bump {
                centre: Coord::Explicit(c.clone()),
                radius,
            });
            dict.push(FunctionExpr::Translate {
                by: Coord::Explicit(c),
                inner: Box::new(FunctionExpr::chi(-radius, radius)),
            });
        }
    }
    dict.push(FunctionExpr::Translate {
        by: Coord::Explicit(centre),
        inner: Box::new(FunctionExpr::pow(r_pair, spec.spacing())),
    });
    Ok(dict)
}

struct Candidate {
    label: String,
    witness: GridFunction,
    /// Built from `f` rather than supplied; skipped when its norm underflows.
    derived: bool,
}

/// `|f|^{p-2} f̄` restricted to `cells`; pairs with `f` to `‖f‖_{L_p}^p`.
fn sign_pattern(f: &GridFunction, p: f64, cells: Option<&[usize]>) -> GridFunction {
    let spec = f.spec();
    let mut v = vec![Complex64::new(0.0, 0.0); spec.len()];
    let mut put = |i: usize| {
        let z = f.value(i);
        let m = z.norm();
        if m > 0.0 {
            v[i] = z.conj() * m.powf(p - 2.0);
        }
    };
    match cells {
        Some(cells) => cells.iter().for_each(|&i| put(i)),
        None => (0..spec.len()).for_each(put),
    }
    GridFunction::from_parts(*spec, v)
}

/// On each leaf `Q`, `2^{J(n/p+ϱ)} |h_Q|^{p-2} h̄_Q / ‖h_Q‖_p^{p-1}`. Its
/// pairing with `f` equals the partition cost.
fn leaf_witness(d: &AtomicDecomposition, p: f64) -> GridFunction {
    let spec = d.target.spec();
    let exponent = d.params.scale_exponent(spec.dim());
    let mut v = vec![Complex64::new(0.0, 0.0); spec.len()];
    for atom in &d.atoms {
        if atom.lp_norm == 0.0 {
            continue;
        }
        let scale = atom.cube.scale_weight(exponent) / atom.lp_norm.powf(p - 1.0);
        for (&i, &z) in atom.indices.iter().zip(&atom.values) {
            let m = z.norm();
            if m > 0.0 {
                v[i] = z.conj() * m.powf(p - 2.0) * scale;
            }
        }
    }
    GridFunction::from_parts(*spec, v)
}

/// Best lower bound `|⟨g, f⟩| / ‖g‖_{L^{-n-ϱ}_{p'}}` over the dictionary and
/// the sign-pattern witnesses built from `f` and its optimal partition.
///
/// Witness norms use the same level range as the partition, so the bound
/// never exceeds the partition cost beyond rounding.
pub fn predual_lower_bound(
    f: &GridFunction,
    params: &PredualParams,
    range: Option<LevelRange>,
    dictionary: &[FunctionExpr],
) -> Result<DualityCertificate> {
    if dictionary.is_empty() {
        return Err(LabError::EmptyCandidates("witness dictionary is empty".into()));
    }
    let spec = f.spec();
    let dim = spec.dim();
    let paired = params.paired_morrey(dim)?;
    let solved = solve(f, params, range)?;
    let upper = solved.decomposition.total_cost;
    // the paired norm must see every cube the partition may use
    let morrey_range = match solved.decomposition.root {
        Some(root) if root.level() < solved.range.min => LevelRange::new(root.level(), solved.range.max)?,
        _ => solved.range,
    };

    let mut candidates: Vec<Candidate> = Vec::new();
    for expr in dictionary {
        candidates.push(Candidate {
            label: expr.to_string(),
            witness: sample(expr, spec)?,
            derived: false,
        });
    }
    let p = params.p();
    if !solved.decomposition.atoms.is_empty() {
        candidates.push(Candidate {
            label: "sign_pattern".into(),
            witness: sign_pattern(f, p, None),
            derived: true,
        });
        candidates.push(Candidate {
            label: "leaf_weighted_sign_pattern".into(),
            witness: leaf_witness(&solved.decomposition, p),
            derived: true,
        });
        // shallow tree cubes only; deep ones add cost and rarely win
        let root_level = solved.decomposition.root.map_or(0, |r| r.level());
        let depth = if dim == 1 { 4 } else { 2 };
        for (cube, cells) in solved.visited.iter().filter(|(c, _)| c.level() <= root_level + depth) {
            let witness = sign_pattern(f, p, Some(cells));
            if witness.is_zero() {
                continue;
            }
            candidates.push(Candidate {
                label: format!("sign_pattern_on_cube(J={}, M={:?})", cube.level(), cube.offset()),
                witness,
                derived: true,
            });
        }
    }

    let evaluated: Vec<Result<Option<(f64, f64, Complex64)>>> = candidates
        .par_iter()
        .map(|c| {
            let norm = morrey_norm_dyadic(&c.witness, &paired, Some(morrey_range))?.value;
            if norm == 0.0 {
                if c.derived {
                    return Ok(None);
                }
                return Err(LabError::ZeroNorm(format!("witness `{}`", c.label)));
            }
            let pv = scalar_pairing(&c.witness, f)?;
            Ok(Some((pv.norm() / norm, norm, pv)))
        })
        .collect();
    let mut best: Option<(usize, f64, f64, Complex64)> = None;
    for (idx, res) in evaluated.into_iter().enumerate() {
        let Some((lower, norm, pv)) = res? else {
            continue;
        };
        if best.is_none_or(|b| lower > b.1) {
            best = Some((idx, lower, norm, pv));
        }
    }
    let (idx, lower, norm, pv) = best.expect("dictionary is nonempty");
    let chosen = candidates.swap_remove(idx);
    Ok(DualityCertificate {
        witness: chosen.witness,
        witness_label: chosen.label,
        witness_morrey_norm: norm,
        pairing_value: pv,
        lower_bound: lower,
        upper_bound: upper,
        weak_duality_holds: lower <= upper * (1.0 + DUALITY_SLACK),
    })
}

/// Bracket for the vector-valued predual norm through the pointwise `ℓ_q`
/// norm of the sequence.
pub fn predual_norm_vector(
    seq: &GridFunctionSeq,
    params: &PredualParams,
    q: f64,
    range: Option<LevelRange>,
    dictionary: &[FunctionExpr],
) -> Result<(AtomicDecomposition, DualityCertificate)> {
    let combined = pointwise_lq(seq, q)?;
    let upper = predual_upper_bound(&combined, params, range)?;
    let lower = predual_lower_bound(&combined, params, range, dictionary)?;
    Ok((upper, lower))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> GridSpec {
        GridSpec::new(1, 4.0, 256).unwrap()
    }

    fn params() -> PredualParams {
        PredualParams::new(2.0, -0.75).unwrap()
    }

    #[test]
    fn zero_function() {
        let z = GridFunction::zeros(line());
        let d = predual_upper_bound(&z, &params(), None).unwrap();
        assert_eq!(d.total_cost(), 0.0);
        assert!(d.atoms().is_empty());
        let dict = default_dictionary(&z, &params()).unwrap();
        let c = predual_lower_bound(&z, &params(), None, &dict).unwrap();
        assert_eq!(c.lower_bound, 0.0);
    }

    #[test]
    fn uniform_on_unit_cube_keeps_root() {
        // χ_[-1,1] / √2 has unit L_2 norm and lives in Q_{0,0}
        let spec = line();
        let f = sample(&FunctionExpr::chi(-1.0, 1.0), &spec).unwrap().scale_real(0.5f64.sqrt());
        let d = predual_upper_bound(&f, &params(), None).unwrap();
        assert_eq!(d.root().unwrap(), &DyadicCube::new(0, &[0]).unwrap());
        assert_eq!(d.atoms().len(), 1);
        assert!((d.total_cost() - 1.0).abs() < 1e-12);
        // one split: two halves of norm 2^{-1/2} at level 1
        let split = 2.0 * 2f64.powf(-0.25) * 0.5f64.sqrt();
        assert!(split > 1.0);
    }

    #[test]
    fn reconstruction_is_exact() {
        let spec = line();
        let expr: FunctionExpr = "sum (gauss 0.7) (translate 1 (chi -0.5 0.5))".parse().unwrap();
        let f = sample(&expr, &spec).unwrap();
        let d = predual_upper_bound(&f, &params(), None).unwrap();
        assert_eq!(d.reconstruct().values(), f.values());
        let sum: f64 = d.atoms().iter().map(|a| a.cost()).sum();
        assert!((sum - d.total_cost()).abs() <= 1e-12 * d.total_cost());
        for a in d.atoms() {
            assert!((a.normalized_scale(&params()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn lower_bound_below_upper() {
        let spec = line();
        let f = sample(&"bump 0.3 0.8".parse().unwrap(), &spec).unwrap();
        let dict = default_dictionary(&f, &params()).unwrap();
        let c = predual_lower_bound(&f, &params(), None, &dict).unwrap();
        assert!(c.weak_duality_holds);
        assert!(c.lower_bound > 0.0);
        assert!(c.gap() >= -1e-12 * c.upper_bound);
    }

    #[test]
    fn shallow_range_is_rejected() {
        let spec = line();
        let f = sample(&FunctionExpr::chi(-3.0, 3.0), &spec).unwrap();
        let r = predual_upper_bound(&f, &params(), Some(LevelRange::new(1, 4).unwrap()));
        assert!(matches!(r, Err(LabError::SupportNotCovered(_))));
    }

    #[test]
    fn pairing_of_indicator() {
        let spec = line();
        let f = sample(&FunctionExpr::chi(0.0, 1.0), &spec).unwrap();
        let v = scalar_pairing(&f, &f).unwrap();
        assert!((v.re - 1.0).abs() < 1e-12 && v.im == 0.0);
    }

    #[test]
    fn export_shapes() {
        let spec = line();
        let f = sample(&FunctionExpr::bump(0.0, 1.0), &spec).unwrap();
        let d = predual_upper_bound(&f, &params(), None).unwrap();
        let json = serde_json::to_value(d.export()).unwrap();
        assert!(json[0].get("J").is_some() && json[0].get("piece_l_p_norm").is_some());
    }
}
