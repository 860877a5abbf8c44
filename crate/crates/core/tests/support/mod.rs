//! Test-only oracles. Nothing here calls into the library's scoring code.
#![allow(dead_code)]

/// 5-point Gauss-Legendre nodes and weights on [-1, 1].
const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Composite Gauss-Legendre quadrature of `f` over [0, 1].
pub fn integrate01(f: impl Fn(f64) -> f64, panels: usize) -> f64 {
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = (p as f64 + 0.5) * h;
        for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
            total += w * f(mid + 0.5 * h * x);
        }
    }
    total * 0.5 * h
}

/// Mean and variance of Beta(alpha, beta) by integrating the unnormalized
/// density, scaled by its value at the mode. Needs `alpha, beta >= 1`.
pub fn beta_moments(alpha: f64, beta: f64) -> (f64, f64) {
    let mode = if alpha + beta > 2.0 { (alpha - 1.0) / (alpha + beta - 2.0) } else { 0.5 };
    let log_density = |x: f64| (alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln();
    let peak = log_density(mode.clamp(1e-300, 1.0 - 1e-16));
    let peak = if peak.is_finite() { peak } else { 0.0 };
    let density = |x: f64| (log_density(x) - peak).exp();
    let panels = 400;
    let z = integrate01(density, panels);
    let mean = integrate01(|x| x * density(x), panels) / z;
    let var = integrate01(|x| (x - mean) * (x - mean) * density(x), panels) / z;
    (mean, var)
}

/// Casino uncertainty by quadrature: top half of the arms by sampled mean
/// (ties to the lower index), pooled into Beta(1 + sum A, 1 + sum B).
pub fn uncertainty_oracle(arms: &[(u64, u64)]) -> f64 {
    if arms.is_empty() {
        return f64::INFINITY;
    }
    let mut idx: Vec<usize> = (0..arms.len()).collect();
    idx.sort_by(|&x, &y| {
        let (ax, nx) = (arms[x].0 as u128, (arms[x].0 + arms[x].1) as u128);
        let (ay, ny) = (arms[y].0 as u128, (arms[y].0 + arms[y].1) as u128);
        (ay * nx).cmp(&(ax * ny)).then(x.cmp(&y))
    });
    let top = arms.len().div_ceil(2);
    let a: u64 = idx[..top].iter().map(|&j| arms[j].0).sum();
    let b: u64 = idx[..top].iter().map(|&j| arms[j].1).sum();
    beta_moments(1.0 + a as f64, 1.0 + b as f64).1
}

/// Exact rational `num / den` with small non-negative integers.
#[derive(Debug, Clone, Copy)]
pub struct Ratio {
    pub num: u128,
    pub den: u128,
}

impl Ratio {
    pub fn cmp(&self, other: &Ratio) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

fn beta_variance_exact(a: u128, b: u128) -> Ratio {
    let s = a + b;
    Ratio {
        num: a * b,
        den: s * s * (s + 1),
    }
}

/// Brute-force action choice read straight off the rules:
///
/// * casino: the least information about `p*`; rank arms by sampled mean,
///   take the top half (rounded up), pool their 1s and 0s into a Beta with a
///   (1, 1) start and use its variance; a casino without arms counts as
///   maximally uncertain; ties go to the lower casino index.
/// * arm: sample a new arm if `K <= M^beta` with `beta = 1 - best sampled
///   mean`, decided exactly as `K^q <= M^p` for `beta = p / q`; otherwise UCB1
///   with bonus `sqrt(2 ln M / n)`, ties to the lower arm index.
///
/// Returns `(casino, None)` for a new arm or `(casino, Some(arm))`.
pub fn brute_force_cas_inf(world: &[Vec<(u64, u64)>]) -> (usize, Option<usize>) {
    // casino selection
    let mut best: Option<(usize, Option<Ratio>)> = None; // None ratio = infinite
    for (i, arms) in world.iter().enumerate() {
        let u = if arms.is_empty() {
            None
        } else {
            let mut idx: Vec<usize> = (0..arms.len()).collect();
            idx.sort_by(|&x, &y| {
                let (ax, nx) = (arms[x].0 as u128, (arms[x].0 + arms[x].1) as u128);
                let (ay, ny) = (arms[y].0 as u128, (arms[y].0 + arms[y].1) as u128);
                (ay * nx).cmp(&(ax * ny)).then(x.cmp(&y))
            });
            let top = arms.len().div_ceil(2);
            let (mut a, mut b) = (1u128, 1u128);
            for &j in &idx[..top] {
                a += arms[j].0 as u128;
                b += arms[j].1 as u128;
            }
            Some(beta_variance_exact(a, b))
        };
        let better = match (&best, &u) {
            (None, _) => true,
            (Some((_, None)), _) => false,
            (Some((_, Some(_))), None) => true,
            (Some((_, Some(cur))), Some(new)) => new.cmp(cur) == std::cmp::Ordering::Greater,
        };
        if better {
            best = Some((i, u));
        }
    }
    let casino = best.expect("at least one casino").0;
    let arms = &world[casino];

    // arm selection
    let k = arms.len() as u128;
    if k == 0 {
        return (casino, None);
    }
    let m: u128 = arms.iter().map(|&(a, b)| (a + b) as u128).sum();
    // best sampled mean A/n; beta = B/n of that arm
    let mut best_arm = 0;
    for j in 1..arms.len() {
        let (aj, nj) = (arms[j].0 as u128, (arms[j].0 + arms[j].1) as u128);
        let (ab, nb) = (arms[best_arm].0 as u128, (arms[best_arm].0 + arms[best_arm].1) as u128);
        if aj * nb > ab * nj {
            best_arm = j;
        }
    }
    let p = arms[best_arm].1 as u32;
    let q = (arms[best_arm].0 + arms[best_arm].1) as u32;
    if k.pow(q) <= m.pow(p) {
        return (casino, None);
    }
    let mut pick = 0;
    let mut pick_score = f64::NEG_INFINITY;
    for (j, &(a, b)) in arms.iter().enumerate() {
        let n = (a + b) as f64;
        let score = a as f64 / n + (2.0 * (m as f64).ln() / n).sqrt();
        if score > pick_score {
            pick = j;
            pick_score = score;
        }
    }
    (casino, Some(pick))
}

/// All arm lists with up to `max_arms` arms and counts in `0..=max_count`,
/// each arm having at least one observation.
pub fn enumerate_casinos(max_arms: usize, max_count: u64) -> Vec<Vec<(u64, u64)>> {
    let arm_values: Vec<(u64, u64)> = (0..=max_count)
        .flat_map(|a| (0..=max_count).map(move |b| (a, b)))
        .filter(|&(a, b)| a + b >= 1)
        .collect();
    let mut out = vec![vec![]];
    let mut frontier = vec![vec![]];
    for _ in 0..max_arms {
        let mut next = Vec::new();
        for c in &frontier {
            for &v in &arm_values {
                let mut c2: Vec<(u64, u64)> = c.clone();
                c2.push(v);
                next.push(c2);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

/// Critical value of the chi-square distribution with 9 degrees of freedom at
/// upper-tail probability 0.001.
pub const CHI2_9DF_P001: f64 = 27.877_164_871_256_568;

pub fn chi_square_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

pub mod cheat;
