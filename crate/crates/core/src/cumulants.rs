//! Cumulants of linear statistics, by summing graph integrals and, for
//! univariate functions, by the composition formula with kernel traces.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss::compensated_sum;
use crate::graphs::{enumerate_connected, TSigmaGraph};
use crate::kernel::KernelSpec;
use crate::sphere::{product_quadrature, quadrature_about, uniform_sample, QuadratureRule, SpherePoint};
use crate::stats::{Kind, TestFunction, ZonalProfile};
use crate::zonal::{integrate_graph, qmc_integrate, Edge, Zonal};

/// Largest order accepted by [`univariate_cumulant`].
pub const MAX_UNIVARIATE_ORDER: usize = 5;
/// Largest `|T|` integrated by tensor quadrature for generic functions.
pub const TENSOR_MAX_SIZE: usize = 3;
/// Largest `|T|` integrated by quasi-Monte Carlo for generic functions.
pub const QMC_MAX_SIZE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermValue {
    pub value: f64,
    /// Set when part of the integral used quasi-random points.
    pub approximate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CumulantValue {
    pub value: f64,
    pub terms: usize,
    pub approximate_terms: usize,
}

/// A pairwise factor of a tuple: `coef * prod_e g_e(x_a . x_b)` over slot
/// pairs `(a, b)`.
#[derive(Clone, Debug)]
struct FactorTerm {
    coef: f64,
    edges: Vec<(usize, usize, Zonal)>,
}

enum Engine {
    /// `A_p = Q^T diag(f^p) Q` with `Q` an orthonormal basis of the kernel's
    /// range on an exact rule.
    Trace(Vec<DMatrix<f64>>),
    Zonal(Vec<FactorTerm>),
    Tensor(QuadratureRule),
}

/// Evaluates graph integrals for one test function and kernel.
pub struct GraphOracle {
    spec: KernelSpec,
    f: TestFunction,
    engine: Engine,
}

/// A rule on which products of `f`, `f^p` and two kernel factors integrate
/// exactly for cap indicators and for polynomials of degree up to `2n`.
pub fn exact_rule(f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<QuadratureRule> {
    let res = quad.resolution.max(spec.n + 2);
    match &f.kind {
        Kind::CapIndicator { center, delta } => quadrature_about(center, res, &[*delta]),
        _ if quad.resolution >= spec.n + 2 && quad.dim() == spec.d => Ok(quad.clone()),
        _ => product_quadrature(spec.d, res),
    }
}

/// Orthonormal basis (columns) of `span{ w^{1/2} K(z_i, x) }` on `rule`.
fn kernel_basis(spec: &KernelSpec, rule: &QuadratureRule) -> Result<DMatrix<f64>> {
    let kn = spec.k_n as usize;
    let anchors_n = 2 * kn + 4;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b65726e);
    let anchors: Vec<SpherePoint> = (0..anchors_n).map(|_| uniform_sample(&mut rng, spec.d)).collect::<Result<_>>()?;
    let n = rule.len();
    let m = DMatrix::from_fn(n, anchors_n, |i, a| rule.weights[i].sqrt() * spec.eval(&rule.nodes[i], &anchors[a]));
    let svd = m.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Degeneracy("singular vectors unavailable".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = |j: usize| svd.singular_values[order[j]];
    if sv(kn - 1) < 1e-9 * sv(0) || (order.len() > kn && sv(kn) > 1e-8 * sv(0)) {
        return Err(Error::Degeneracy(format!(
            "quadrature with {} nodes does not resolve the {kn}-dimensional kernel range",
            n
        )));
    }
    Ok(DMatrix::from_fn(n, kn, |i, c| u[(i, order[c])]))
}

fn pair_terms(g: Zonal) -> Vec<FactorTerm> {
    vec![FactorTerm { coef: 1.0, edges: vec![(0, 1, g)] }]
}

fn zonal_factor(f: &TestFunction) -> Option<Vec<FactorTerm>> {
    let d = f.d;
    match &f.kind {
        Kind::Constant(c) => Some(vec![FactorTerm { coef: c - f.shift, edges: vec![] }]),
        Kind::PairIndicator { delta } => {
            Some(pair_terms(Zonal::numeric(ZonalProfile::indicator(d, *delta).shifted(f.shift))))
        }
        Kind::PairwiseZonal(p) => Some(pair_terms(Zonal::numeric(p.shifted(f.shift)))),
        Kind::TriangleIndicator { delta } => {
            let e = Zonal::numeric(ZonalProfile::indicator(d, *delta));
            let mut t = vec![FactorTerm { coef: 1.0, edges: vec![(0, 1, e.clone()), (0, 2, e.clone()), (1, 2, e)] }];
            if f.shift != 0.0 {
                t.push(FactorTerm { coef: -f.shift, edges: vec![] });
            }
            Some(t)
        }
        _ => None,
    }
}

impl GraphOracle {
    pub fn new(f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<Self> {
        if f.d != spec.d {
            return Err(Error::DimensionMismatch { expected: spec.d, got: f.d });
        }
        let engine = if f.k == 1 {
            let rule = exact_rule(f, spec, quad)?;
            let q = kernel_basis(spec, &rule)?;
            let vals: Vec<f64> = rule.nodes.iter().map(|z| f.eval(&[z])).collect();
            let a = (1..=MAX_UNIVARIATE_ORDER as i32)
                .map(|p| {
                    let mut dq = q.clone();
                    for (i, mut row) in dq.row_iter_mut().enumerate() {
                        row *= vals[i].powi(p);
                    }
                    q.transpose() * dq
                })
                .collect();
            Engine::Trace(a)
        } else if let Some(terms) = zonal_factor(f) {
            Engine::Zonal(terms)
        } else {
            Engine::Tensor(quad.clone())
        };
        Ok(Self { spec: *spec, f: f.clone(), engine })
    }

    /// `int f(T) sgn(sigma) prod_q K(x_q, x_{sigma(q)}) dx` for one graph.
    pub fn term(&self, g: &TSigmaGraph) -> Result<TermValue> {
        if g.t.k() != self.f.k {
            return Err(Error::Structure(format!("graph arity {} differs from f arity {}", g.t.k(), self.f.k)));
        }
        let sign = g.stats.sign as f64;
        match &self.engine {
            Engine::Trace(a) => {
                let occ = g.t.occurrences();
                if occ.iter().any(|o| o.len() > a.len()) {
                    return Err(Error::SizeGuard(format!("label multiplicity above {}", a.len())));
                }
                let mut value = sign;
                for cycle in g.sigma.cycles() {
                    let mut prod = a[occ[cycle[0]].len() - 1].clone();
                    for &q in &cycle[1..] {
                        prod *= &a[occ[q].len() - 1];
                    }
                    value *= prod.trace();
                }
                Ok(TermValue { value, approximate: false })
            }
            Engine::Zonal(terms) => Ok(self.zonal_term(g, terms, sign)),
            Engine::Tensor(quad) => self.tensor_term(g, quad, sign),
        }
    }

    fn zonal_term(&self, g: &TSigmaGraph, terms: &[FactorTerm], sign: f64) -> TermValue {
        let m = g.t.m();
        let size = g.t.size();
        let kernel = Zonal::kernel(&self.spec);
        let kedges: Vec<Edge> = (0..size).map(|q| Edge { u: q, v: g.sigma.apply(q), f: kernel.clone() }).collect();
        let mut total = 0.0;
        let mut approximate = false;
        let mut choice = vec![0usize; m];
        loop {
            let coef: f64 = choice.iter().map(|&c| terms[c].coef).product();
            if coef != 0.0 {
                let mut edges = kedges.clone();
                for (i, &c) in choice.iter().enumerate() {
                    let tuple = g.t.tuple(i);
                    for (a, b, z) in &terms[c].edges {
                        edges.push(Edge { u: tuple[*a] as usize, v: tuple[*b] as usize, f: z.clone() });
                    }
                }
                let r = integrate_graph(self.spec.d, size, edges);
                total += coef * r.value;
                approximate |= r.approximate;
            }
            let mut i = 0;
            while i < m {
                choice[i] += 1;
                if choice[i] < terms.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == m {
                break;
            }
        }
        TermValue { value: sign * total, approximate }
    }

    fn tensor_term(&self, g: &TSigmaGraph, quad: &QuadratureRule, sign: f64) -> Result<TermValue> {
        let size = g.t.size();
        let spec = &self.spec;
        let integrand = |pts: &[&SpherePoint]| -> f64 {
            let mut v = 1.0;
            for t in g.t.tuples() {
                let xs: Vec<&SpherePoint> = t.iter().map(|&q| pts[q as usize]).collect();
                v *= self.f.eval(&xs);
                if v == 0.0 {
                    return 0.0;
                }
            }
            for q in 0..size {
                v *= spec.eval(pts[q], pts[g.sigma.apply(q)]);
            }
            v
        };
        if size <= TENSOR_MAX_SIZE {
            let n = quad.len();
            let mut idx = vec![0usize; size];
            let mut acc = Vec::with_capacity(n.pow(size as u32));
            loop {
                let pts: Vec<&SpherePoint> = idx.iter().map(|&i| &quad.nodes[i]).collect();
                let w: f64 = idx.iter().map(|&i| quad.weights[i]).product();
                acc.push(w * integrand(&pts));
                let mut j = 0;
                while j < size {
                    idx[j] += 1;
                    if idx[j] < n {
                        break;
                    }
                    idx[j] = 0;
                    j += 1;
                }
                if j == size {
                    break;
                }
            }
            Ok(TermValue { value: sign * compensated_sum(acc), approximate: false })
        } else if size <= QMC_MAX_SIZE {
            let v = qmc_integrate(spec.d, size, false, |pts| {
                let refs: Vec<&SpherePoint> = pts.iter().collect();
                integrand(&refs)
            });
            Ok(TermValue { value: sign * v, approximate: true })
        } else {
            Err(Error::SizeGuard(format!("|T| = {size} exceeds {QMC_MAX_SIZE} for a generic test function")))
        }
    }

    /// `Q_m(L_n f)` as the sum of all connected graph integrals.
    pub fn cumulant(&self, m: usize) -> Result<CumulantValue> {
        let graphs = enumerate_connected(m, self.f.k)?;
        let terms: Vec<TermValue> = graphs.par_iter().map(|g| self.term(g)).collect::<Result<_>>()?;
        Ok(CumulantValue {
            value: compensated_sum(terms.iter().map(|t| t.value)),
            terms: terms.len(),
            approximate_terms: terms.iter().filter(|t| t.approximate).count(),
        })
    }
}

pub fn evaluate_term(g: &TSigmaGraph, f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    Ok(GraphOracle::new(f, spec, quad)?.term(g)?.value)
}

pub fn cumulant_via_graphs(f: &TestFunction, m: usize, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    Ok(GraphOracle::new(f, spec, quad)?.cumulant(m)?.value)
}

/// Calls `visit` with every composition of `m` into positive parts.
fn for_each_composition(m: usize, mut visit: impl FnMut(&[usize])) {
    for mask in 0..(1u32 << (m - 1)) {
        let mut parts = Vec::new();
        let mut run = 1;
        for b in 0..m - 1 {
            if mask & (1 << b) != 0 {
                parts.push(run);
                run = 1;
            } else {
                run += 1;
            }
        }
        parts.push(run);
        visit(&parts);
    }
}

/// `Q_m(L_n f)` for univariate `f` from
/// `sum_{n_1+..+n_l=m} (-1)^{l-1}/l * m!/(n_1!..n_l!) tr(f^{n_1} K .. f^{n_l} K)`,
/// with the traces taken as dense products of the weighted kernel matrix.
pub fn univariate_cumulant(f: &TestFunction, m: usize, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    if f.k != 1 {
        return Err(Error::Structure(format!("univariate cumulant needs k = 1, got k = {}", f.k)));
    }
    if m == 0 || m > MAX_UNIVARIATE_ORDER {
        return Err(Error::SizeGuard(format!("order m = {m} outside 1..={MAX_UNIVARIATE_ORDER}")));
    }
    let rule = exact_rule(f, spec, quad)?;
    let n = rule.len();
    let sw: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let b = DMatrix::from_fn(n, n, |i, j| sw[i] * sw[j] * spec.eval(&rule.nodes[i], &rule.nodes[j]));
    let vals: Vec<f64> = rule.nodes.iter().map(|z| f.eval(&[z])).collect();
    let db = |p: usize| {
        let mut x = b.clone();
        for (i, mut row) in x.row_iter_mut().enumerate() {
            row *= vals[i].powi(p as i32);
        }
        x
    };
    let blocks: Vec<DMatrix<f64>> = (1..=m).map(db).collect();
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    let mut terms = Vec::new();
    for_each_composition(m, |parts| {
        let l = parts.len();
        let tr = if l == 1 {
            blocks[parts[0] - 1].trace()
        } else {
            let mut prod = blocks[parts[0] - 1].clone();
            for &p in &parts[1..l - 1] {
                prod *= &blocks[p - 1];
            }
            prod.component_mul(&blocks[parts[l - 1] - 1].transpose()).sum()
        };
        let sign = if l % 2 == 1 { 1.0 } else { -1.0 };
        let multinom = fact(m) / parts.iter().map(|&p| fact(p)).product::<f64>();
        terms.push(sign / l as f64 * multinom * tr);
    });
    Ok(compensated_sum(terms))
}

/// `(1/2) int int (f(x) - f(y))^2 K_n(x, y)^2 dx dy` on the exact rule.
pub fn variance_direct(f: &TestFunction, spec: &KernelSpec, quad: &QuadratureRule) -> Result<f64> {
    if f.k != 1 {
        return Err(Error::Structure(format!("direct variance needs k = 1, got k = {}", f.k)));
    }
    let rule = exact_rule(f, spec, quad)?;
    let vals: Vec<f64> = rule.nodes.iter().map(|z| f.eval(&[z])).collect();
    let rows: Vec<f64> = (0..rule.len())
        .into_par_iter()
        .map(|i| {
            compensated_sum((0..rule.len()).map(|j| {
                let k = spec.eval(&rule.nodes[i], &rule.nodes[j]);
                rule.weights[j] * (vals[i] - vals[j]).powi(2) * k * k
            })) * rule.weights[i]
        })
        .collect();
    Ok(0.5 * compensated_sum(rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{classify, Permutation, TAssignment};
    use crate::sphere::{cap_area, surface_area};

    fn cap(d: usize, delta: f64) -> TestFunction {
        let c = SpherePoint::normalize(vec![0.3, -0.2, 0.9]).unwrap();
        assert_eq!(c.dim(), d);
        TestFunction::cap_indicator(c, delta).unwrap()
    }

    #[test]
    fn compositions_count() {
        for m in 1..=5 {
            let mut c = 0;
            for_each_composition(m, |p| {
                assert_eq!(p.iter().sum::<usize>(), m);
                c += 1;
            });
            assert_eq!(c, 1 << (m - 1));
        }
    }

    #[test]
    fn first_cumulant_is_mean() {
        let spec = KernelSpec::new(2, 4).unwrap();
        let quad = product_quadrature(2, 8).unwrap();
        let f = cap(2, 0.7);
        let want = spec.intensity() * cap_area(2, 0.7);
        let got = univariate_cumulant(&f, 1, &spec, &quad).unwrap();
        assert!((got / want - 1.0).abs() < 1e-12);
        let g = cumulant_via_graphs(&f, 1, &spec, &quad).unwrap();
        assert!((g / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_terms_of_the_variance() {
        let spec = KernelSpec::new(2, 4).unwrap();
        let quad = product_quadrature(2, 8).unwrap();
        let f = cap(2, 0.7);
        let t = TAssignment::from_labels(&[vec![0], vec![0]]).unwrap();
        let g = classify(&t, &Permutation::identity(1)).unwrap();
        let v = evaluate_term(&g, &f, &spec, &quad).unwrap();
        assert!((v / (spec.intensity() * cap_area(2, 0.7)) - 1.0).abs() < 1e-12);
        let t = TAssignment::from_labels(&[vec![0], vec![1]]).unwrap();
        let g = classify(&t, &Permutation(vec![1, 0])).unwrap();
        let v = evaluate_term(&g, &f, &spec, &quad).unwrap();
        assert!(v < 0.0);
    }

    #[test]
    fn variance_routes_agree() {
        let spec = KernelSpec::new(2, 4).unwrap();
        let quad = product_quadrature(2, 8).unwrap();
        let f = cap(2, 0.9);
        let a = variance_direct(&f, &spec, &quad).unwrap();
        let b = univariate_cumulant(&f, 2, &spec, &quad).unwrap();
        let c = cumulant_via_graphs(&f, 2, &spec, &quad).unwrap();
        assert!((a / b - 1.0).abs() < 1e-10, "{a} {b}");
        assert!((c / b - 1.0).abs() < 1e-10, "{c} {b}");
    }

    #[test]
    fn constant_pair_function_has_no_variance() {
        let spec = KernelSpec::new(2, 3).unwrap();
        let quad = product_quadrature(2, 6).unwrap();
        let f = TestFunction::constant(2, 2, 1.0).unwrap();
        let o = GraphOracle::new(&f, &spec, &quad).unwrap();
        let q1 = o.cumulant(1).unwrap().value;
        let kn = spec.k_n as f64;
        assert!((q1 - kn * (kn - 1.0)).abs() < 1e-9 * kn * kn);
        let q2 = o.cumulant(2).unwrap();
        assert_eq!(q2.approximate_terms, 0);
        assert!(q2.value.abs() < 1e-6 * kn * kn);
    }

    #[test]
    fn generic_tensor_matches_zonal() {
        let spec = KernelSpec::new(2, 2).unwrap();
        let quad = product_quadrature(2, 8).unwrap();
        let prof = ZonalProfile::new(2, std::sync::Arc::new(|t: f64| t.cos().powi(2)), vec![]);
        let z = TestFunction::pairwise_zonal(prof, 1.0).unwrap();
        let g = TestFunction::generic(2, 2, std::sync::Arc::new(|xs: &[&SpherePoint]| xs[0].dot(xs[1]).powi(2)), 1.0, true)
            .unwrap();
        let t = TAssignment::from_labels(&[vec![0, 1], vec![1, 2]]).unwrap();
        let gr = classify(&t, &Permutation(vec![2, 1, 0])).unwrap();
        let a = evaluate_term(&gr, &z, &spec, &quad).unwrap();
        let b = evaluate_term(&gr, &g, &spec, &quad).unwrap();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0), "{a} {b}");
        let _ = surface_area(2);
    }
}
