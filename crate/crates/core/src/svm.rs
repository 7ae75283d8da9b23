//! One-vs-rest linear SVMs trained by dual coordinate descent.
//!
//! Each binary problem minimizes `½‖w‖² + C Σ max(0, 1 − yᵢ w·xᵢ)` where every
//! `xᵢ` carries an extra constant feature of value 1 standing in for the
//! bias (so the bias is regularized too). The solver walks the dual
//! coordinates in one fixed order, drawn by a seeded shuffle, and stops when
//! the relative duality gap drops below the tolerance or the epoch cap is hit.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::SplitRng;
use crate::vectorize::SparseVector;

const MODEL_HEADER: &str = "# dtgrams linear model v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub c: f64,
    pub seed: u64,
    /// Relative duality gap `(P − D) / P` at which a class counts as solved.
    pub tolerance: f64,
    pub max_epochs: usize,
    /// Train the per-class problems on the rayon pool.
    pub parallel: bool,
}

impl TrainOptions {
    pub fn new(c: f64, seed: u64) -> Self {
        TrainOptions {
            c,
            seed,
            tolerance: 1e-3,
            max_epochs: 1000,
            parallel: true,
        }
    }
}

/// Outcome of one binary subproblem.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryFit {
    /// Weights with the bias appended as the last component.
    pub weights: Vec<f64>,
    pub epochs: usize,
    pub primal: f64,
    pub dual: f64,
    pub relative_gap: f64,
    pub converged: bool,
    /// Dual objective `½‖w‖² − Σα` after each epoch (non-increasing).
    pub dual_history: Vec<f64>,
}

fn dot(x: &SparseVector, w: &[f64]) -> f64 {
    // Bias is the last weight.
    x.dot_dense(w) + w[w.len() - 1]
}

/// Solves one binary problem with labels `ys ∈ {−1, +1}`.
pub fn train_binary(xs: &[SparseVector], ys: &[f64], dim: usize, c: f64, order: &[usize], tolerance: f64, max_epochs: usize) -> BinaryFit {
    let n = xs.len();
    let mut w = vec![0.0; dim + 1];
    let mut alpha = vec![0.0; n];
    let qii: Vec<f64> = xs.iter().map(|x| x.norm().powi(2) + 1.0).collect();
    let mut history = Vec::new();
    let mut epochs = 0;
    let (mut primal, mut dual, mut rel_gap) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY);
    let mut converged = false;

    while epochs < max_epochs {
        epochs += 1;
        for &i in order {
            let x = &xs[i];
            let y = ys[i];
            let g = y * dot(x, &w) - 1.0;
            let a = alpha[i];
            let pg = if a <= 0.0 {
                g.min(0.0)
            } else if a >= c {
                g.max(0.0)
            } else {
                g
            };
            if pg.abs() > 1e-12 {
                let new_a = (a - g / qii[i]).clamp(0.0, c);
                let d = (new_a - a) * y;
                alpha[i] = new_a;
                for &(j, v) in &x.entries {
                    w[j] += d * v;
                }
                w[dim] += d;
            }
        }

        let w_sq: f64 = w.iter().map(|v| v * v).sum();
        let hinge: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| (1.0 - y * dot(x, &w)).max(0.0))
            .sum();
        let alpha_sum: f64 = alpha.iter().sum();
        primal = 0.5 * w_sq + c * hinge;
        dual = alpha_sum - 0.5 * w_sq;
        history.push(0.5 * w_sq - alpha_sum);
        rel_gap = (primal - dual) / primal.abs().max(1e-12);
        if rel_gap <= tolerance {
            converged = true;
            break;
        }
    }

    BinaryFit {
        weights: w,
        epochs,
        primal,
        dual,
        relative_gap: rel_gap,
        converged,
        dual_history: history,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Sorted class labels.
    pub classes: Vec<String>,
    pub dim: usize,
    /// One dense weight vector of length `dim` per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub c: f64,
    pub seed: u64,
    /// Final relative duality gap per class; not persisted.
    pub gaps: Vec<f64>,
}

pub fn train<S: AsRef<str> + Sync>(xs: &[SparseVector], labels: &[S], opts: &TrainOptions) -> Result<LinearModel> {
    if xs.len() != labels.len() {
        return Err(Error::Training(format!(
            "{} vectors but {} labels",
            xs.len(),
            labels.len()
        )));
    }
    if !(opts.c > 0.0 && opts.c.is_finite()) {
        return Err(Error::Training(format!("C must be positive, got {}", opts.c)));
    }
    let dim = xs.first().map_or(0, |x| x.dim);
    if let Some(x) = xs.iter().find(|x| x.dim != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: x.dim,
        });
    }
    let mut classes: Vec<String> = labels.iter().map(|l| l.as_ref().to_string()).collect();
    classes.sort();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 classes, got {}",
            classes.len()
        )));
    }
    if xs.iter().all(SparseVector::is_zero) {
        return Err(Error::Training("all training vectors are zero".into()));
    }

    let mut order: Vec<usize> = (0..xs.len()).collect();
    SplitRng::new(opts.seed).shuffle(&mut order);

    let solve = |class: &String| {
        let ys: Vec<f64> = labels
            .iter()
            .map(|l| if l.as_ref() == class { 1.0 } else { -1.0 })
            .collect();
        train_binary(xs, &ys, dim, opts.c, &order, opts.tolerance, opts.max_epochs)
    };
    let fits: Vec<BinaryFit> = if opts.parallel {
        classes.par_iter().map(solve).collect()
    } else {
        classes.iter().map(solve).collect()
    };

    for (class, fit) in classes.iter().zip(&fits) {
        if !fit.converged {
            log::warn!(
                "class {class}: stopped after {} epochs with relative gap {:.3e}",
                fit.epochs,
                fit.relative_gap
            );
        }
    }
    let gaps = fits.iter().map(|f| f.relative_gap).collect();
    let (weights, bias) = fits
        .into_iter()
        .map(|mut f| {
            let b = f.weights.pop().unwrap();
            (f.weights, b)
        })
        .unzip();
    Ok(LinearModel {
        classes,
        dim,
        weights,
        bias,
        c: opts.c,
        seed: opts.seed,
        gaps,
    })
}

impl LinearModel {
    pub fn decision_values(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                found: x.dim,
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| x.dot_dense(w) + b)
            .collect())
    }

    /// Highest-scoring class; ties go to the lexicographically smallest label.
    pub fn predict_one(&self, x: &SparseVector) -> Result<&str> {
        let scores = self.decision_values(x)?;
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = i;
            }
        }
        Ok(&self.classes[best])
    }

    pub fn predict(&self, xs: &[SparseVector]) -> Result<Vec<String>> {
        xs.iter()
            .map(|x| self.predict_one(x).map(str::to_string))
            .collect()
    }

    /// Text form: header lines `classes`, `dim`, `c`, `seed`, then one
    /// `weights<TAB>class<TAB>bias<TAB>i:w ...` line per class listing the
    /// nonzero weights.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{MODEL_HEADER}\nclasses\t{}\ndim\t{}\nc\t{}\nseed\t{}\n",
            self.classes.join("\t"),
            self.dim,
            self.c,
            self.seed
        );
        for ((class, w), b) in self.classes.iter().zip(&self.weights).zip(&self.bias) {
            let nz: Vec<String> = w
                .iter()
                .enumerate()
                .filter(|(_, v)| **v != 0.0)
                .map(|(i, v)| format!("{i}:{v}"))
                .collect();
            out.push_str(&format!("weights\t{class}\t{b}\t{}\n", nz.join(" ")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let err = |line: usize, m: &str| Error::ModelFormat {
            line,
            message: m.to_string(),
        };
        let lines: Vec<&str> = text.lines().collect();
        if lines.first() != Some(&MODEL_HEADER) {
            return Err(err(1, "missing model header"));
        }
        let field = |idx: usize, key: &str| -> Result<&str> {
            lines
                .get(idx)
                .and_then(|l| l.strip_prefix(key))
                .and_then(|l| l.strip_prefix('\t'))
                .ok_or_else(|| err(idx + 1, &format!("expected `{key}` line")))
        };
        let classes: Vec<String> = field(1, "classes")?.split('\t').map(String::from).collect();
        let dim: usize = field(2, "dim")?.parse().map_err(|_| err(3, "bad dim"))?;
        let c: f64 = field(3, "c")?.parse().map_err(|_| err(4, "bad C"))?;
        let seed: u64 = field(4, "seed")?.parse().map_err(|_| err(5, "bad seed"))?;
        let mut weights = Vec::new();
        let mut bias = Vec::new();
        for (k, class) in classes.iter().enumerate() {
            let ln = 5 + k;
            let line = lines.get(ln).ok_or_else(|| err(ln + 1, "missing weights line"))?;
            let parts: Vec<&str> = line.splitn(4, '\t').collect();
            if parts.len() != 4 || parts[0] != "weights" || parts[1] != class {
                return Err(err(ln + 1, &format!("expected weights for class `{class}`")));
            }
            bias.push(parts[2].parse().map_err(|_| err(ln + 1, "bad bias"))?);
            let mut w = vec![0.0; dim];
            for pair in parts[3].split_whitespace() {
                let (i, v) = pair.split_once(':').ok_or_else(|| err(ln + 1, "bad weight"))?;
                let i: usize = i.parse().map_err(|_| err(ln + 1, "bad index"))?;
                if i >= dim {
                    return Err(err(ln + 1, "weight index out of range"));
                }
                w[i] = v.parse().map_err(|_| err(ln + 1, "bad weight value"))?;
            }
            weights.push(w);
        }
        let gaps = vec![f64::NAN; classes.len()];
        Ok(LinearModel {
            classes,
            dim,
            weights,
            bias,
            c,
            seed,
            gaps,
        })
    }
}
