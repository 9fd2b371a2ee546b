//! Independent oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pdnprint::pdn::{
    sample_genuine, simulate_magnitude_trials, NoiseSpec, PdnModel, PdnStage, RlcBranch, VariationSpec,
};
use pdnprint::rf::{FrequencyGrid, ReferenceImpedance};
use pdnprint::{build_golden, GoldenSignature, SampleRecord};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// A random branch with R > 0 and a random subset of L and C.
pub fn random_branch(rng: &mut ChaCha8Rng) -> RlcBranch {
    let r = log_uniform(rng, 1e-3, 10.0);
    let l = if rng.random_bool(0.7) {
        log_uniform(rng, 1e-11, 1e-6)
    } else {
        0.0
    };
    let c = rng.random_bool(0.6).then(|| log_uniform(rng, 1e-11, 1e-3));
    RlcBranch { r, l, c }
}

/// A random ladder with 1 to 6 stages.
pub fn random_model(rng: &mut ChaCha8Rng) -> PdnModel {
    let n = rng.random_range(1..=6);
    let stages = (0..n)
        .map(|i| {
            let last = i == n - 1;
            let (mut series, mut shunt) = (None, None);
            match rng.random_range(0..3) {
                0 => series = Some(random_branch(rng)),
                1 => shunt = Some(random_branch(rng)),
                _ => {
                    series = Some(random_branch(rng));
                    shunt = Some(random_branch(rng));
                }
            }
            if last && shunt.is_none() {
                shunt = Some(random_branch(rng));
            }
            PdnStage {
                name: format!("s{i}"),
                series,
                shunt,
            }
        })
        .collect();
    let powered = rng.random_bool(0.5);
    PdnModel::new(stages, random_branch(rng), ReferenceImpedance::default(), powered).unwrap()
}

/// Double-double real: an unevaluated sum `hi + lo`, about 32 digits.
#[derive(Debug, Clone, Copy)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    const PI: Dd = Dd {
        hi: std::f64::consts::PI,
        lo: 1.2246467991473532e-16,
    };

    fn from(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let r = quick_two_sum(s, e + t);
        quick_two_sum(r.hi, r.lo + f)
    }

    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    fn sub(self, b: Dd) -> Dd {
        self.add(b.neg())
    }

    fn mul(self, b: Dd) -> Dd {
        let p = self.hi * b.hi;
        let e = self.hi.mul_add(b.hi, -p);
        quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi))
    }

    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self.sub(b.mul(Dd::from(q1)));
        let q2 = r.hi / b.hi;
        let r = r.sub(b.mul(Dd::from(q2)));
        let q3 = r.hi / b.hi;
        quick_two_sum(q1, q2).add(Dd::from(q3))
    }
}

#[derive(Debug, Clone, Copy)]
struct Cdd {
    re: Dd,
    im: Dd,
}

impl Cdd {
    const ZERO: Cdd = Cdd {
        re: Dd::ZERO,
        im: Dd::ZERO,
    };

    fn add(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re.add(b.re),
            im: self.im.add(b.im),
        }
    }

    fn sub(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re.sub(b.re),
            im: self.im.sub(b.im),
        }
    }

    fn mul(self, b: Cdd) -> Cdd {
        Cdd {
            re: self.re.mul(b.re).sub(self.im.mul(b.im)),
            im: self.re.mul(b.im).add(self.im.mul(b.re)),
        }
    }

    fn div(self, b: Cdd) -> Cdd {
        let den = b.re.mul(b.re).add(b.im.mul(b.im));
        let num = self.mul(Cdd {
            re: b.re,
            im: b.im.neg(),
        });
        Cdd {
            re: num.re.div(den),
            im: num.im.div(den),
        }
    }

    fn magnitude(self) -> f64 {
        self.re.hi.hypot(self.im.hi)
    }
}

// Node 0 is ground, node 1 the probe.
struct Netlist {
    omega: Dd,
    n_nodes: usize,
    elements: Vec<(usize, usize, Cdd)>,
}

impl Netlist {
    fn node(&mut self) -> usize {
        self.n_nodes += 1;
        self.n_nodes - 1
    }

    fn branch(&mut self, a: usize, b: usize, br: &RlcBranch) {
        let mut z = Cdd {
            re: Dd::from(br.r),
            im: self.omega.mul(Dd::from(br.l)),
        };
        if let Some(c) = br.c {
            z.im = z.im.sub(Dd::from(1.0).div(self.omega.mul(Dd::from(c))));
        }
        let one = Cdd {
            re: Dd::from(1.0),
            im: Dd::ZERO,
        };
        self.elements.push((a, b, one.div(z)));
    }
}

/// Nodal analysis in double-double precision: each branch is stamped as
/// one admittance between its two nodes, the node admittance matrix is
/// solved by Gaussian elimination with partial pivoting for a 1 A injection
/// at the probe node, and the probe voltage is the input impedance.
#[allow(clippy::needless_range_loop)]
pub fn nodal_impedance(model: &PdnModel, f: f64) -> Complex64 {
    let mut net = Netlist {
        omega: Dd::from(2.0).mul(Dd::PI).mul(Dd::from(f)),
        n_nodes: 2,
        elements: Vec::new(),
    };
    let mut cur = 1;
    for stage in model.stages() {
        if let Some(se) = &stage.series {
            let next = net.node();
            net.branch(cur, next, se);
            cur = next;
        }
        if let Some(sh) = &stage.shunt {
            net.branch(cur, 0, sh);
        }
    }
    if model.powered() {
        net.branch(cur, 0, model.die_on_branch());
    }
    let Netlist { n_nodes, elements, .. } = net;

    let n = n_nodes - 1;
    let mut a = vec![vec![Cdd::ZERO; n + 1]; n];
    for (p, q, y) in elements {
        for (i, j, negate) in [(p, p, false), (q, q, false), (p, q, true), (q, p, true)] {
            if i > 0 && j > 0 {
                let cell = &mut a[i - 1][j - 1];
                *cell = if negate { cell.sub(y) } else { cell.add(y) };
            }
        }
    }
    a[0][n] = Cdd {
        re: Dd::from(1.0),
        im: Dd::ZERO,
    };
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].magnitude().total_cmp(&a[y][col].magnitude()))
            .unwrap();
        a.swap(col, piv);
        for row in col + 1..n {
            if a[row][col].magnitude() == 0.0 {
                continue;
            }
            let factor = a[row][col].div(a[col][col]);
            for k in col..=n {
                let v = a[col][k];
                a[row][k] = a[row][k].sub(factor.mul(v));
            }
        }
    }
    let mut x = vec![Cdd::ZERO; n];
    for row in (0..n).rev() {
        let mut s = a[row][n];
        for k in row + 1..n {
            s = s.sub(a[row][k].mul(x[k]));
        }
        x[row] = s.div(a[row][row]);
    }
    Complex64::new(x[0].re.hi + x[0].re.lo, x[0].im.hi + x[0].im.lo)
}

/// Sum in ascending order, left to right.
fn ascending_sum(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut s = 0.0;
    for x in v {
        s += x;
    }
    s
}

/// Naive two-pass statistics: per-sample trial means, then mean and n − 1
/// standard deviation across samples, each sum taken in ascending order.
pub fn oracle_stats(corpus: &[Vec<Vec<f64>>]) -> (Vec<f64>, Vec<f64>) {
    let points = corpus[0][0].len();
    let mut mean = Vec::new();
    let mut sd = Vec::new();
    for k in 0..points {
        let per_sample: Vec<f64> = corpus
            .iter()
            .map(|trials| ascending_sum(trials.iter().map(|t| t[k]).collect()) / trials.len() as f64)
            .collect();
        let n = per_sample.len() as f64;
        let m = ascending_sum(per_sample.clone()) / n;
        let ss = ascending_sum(per_sample.iter().map(|x| (x - m) * (x - m)).collect());
        mean.push(m);
        sd.push((ss / (n - 1.0)).sqrt());
    }
    (mean, sd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleBand {
    pub first: usize,
    pub last: usize,
    pub count: usize,
}

/// Exhaustive search over all index pairs (a, b) of marked points: keep a
/// pair when no unmarked gap inside it exceeds `gap`, it cannot be extended
/// on either side, and it holds at least `min_points` marked points.
pub fn oracle_bands(marks: &[bool], gap: usize, min_points: usize) -> Vec<OracleBand> {
    let n = marks.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a..n {
            if !marks[a] || !marks[b] {
                continue;
            }
            let mut ok = true;
            let mut run = 0;
            for &m in &marks[a..=b] {
                if m {
                    run = 0;
                } else {
                    run += 1;
                    if run > gap {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            let extends_left = (a.saturating_sub(gap + 1)..a).any(|i| marks[i]);
            let extends_right = (b + 1..(b + gap + 2).min(n)).any(|i| marks[i]);
            if extends_left || extends_right {
                continue;
            }
            let count = marks[a..=b].iter().filter(|m| **m).count();
            if count >= min_points {
                out.push(OracleBand {
                    first: a,
                    last: b,
                    count,
                });
            }
        }
    }
    out
}

/// Frequencies used across the simulation experiments.
pub fn default_grid() -> FrequencyGrid {
    FrequencyGrid::linear(1e6, 1e9, 5000).unwrap()
}

pub const SPREAD: f64 = 0.02;
pub const NOISE_DB: f64 = 0.05;
pub const TRIALS: usize = 10;

/// A process-varied sample of the reference model measured `TRIALS` times.
pub fn genuine_record(base: &PdnModel, grid: &FrequencyGrid, seed: u64) -> SampleRecord {
    let model = sample_genuine(base, VariationSpec::new(SPREAD, seed).unwrap()).unwrap();
    model_record(&model, grid, seed, &format!("genuine-{seed}"))
}

/// `TRIALS` noisy sweeps of `model` as one record. Noise streams are keyed
/// by `seed` so distinct seeds give independent noise.
pub fn model_record(model: &PdnModel, grid: &FrequencyGrid, seed: u64, id: &str) -> SampleRecord {
    let noise = NoiseSpec::new(NOISE_DB, seed ^ 0xA5A5_0000_0000_0000).unwrap();
    SampleRecord::new(id, simulate_magnitude_trials(model, grid, noise, TRIALS)).unwrap()
}

/// Golden signature from 12 genuine samples with seeds 1..=12.
pub fn reference_golden(base: &PdnModel, grid: &FrequencyGrid) -> GoldenSignature {
    let records: Vec<_> = (1..=12).map(|s| genuine_record(base, grid, s)).collect();
    let mut meta = BTreeMap::new();
    meta.insert("device".into(), "cw308-like synthetic".into());
    build_golden(&records, meta).unwrap()
}
