//! Numerical property suites shared by the `properties` and `acceptance`
//! test targets. Each suite returns `Err` with a description of the first
//! counterexample.

#![allow(dead_code)]

use std::path::Path;

use ctxbandit::bandit::{ArmLearnerArray, BanditConfig};
use ctxbandit::datagen::{self, GeneratorConfig, SeededRng};
use ctxbandit::eval::{compare_protocol, Algorithm, ProtocolConfig};
use ctxbandit::learners::{
    DecisionTree, LinearModel, LossMode, Node, OlsModel, SgdParams, TreeParams, TreeTask,
};
use ctxbandit::schema::{ArmRegistry, InteractionRecord, RawValue};

pub type Outcome = Result<(), String>;

pub fn unit(rng: &mut SeededRng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

fn uniform(rng: &mut SeededRng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

// ---------------------------------------------------------------- SGD gradient

/// Reference per-example loss, written independently of the library:
/// logistic `softplus(z) - y·z` or squared `(z - y)²/2`, plus `α/2·‖w‖²`.
fn oracle_loss(mode: LossMode, w: &[f64], b: f64, alpha: f64, x: &[f64], y: f64) -> f64 {
    let z: f64 = w.iter().zip(x).map(|(a, c)| a * c).sum::<f64>() + b;
    let data = match mode {
        LossMode::Logistic => {
            let softplus = if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
            softplus - y * z
        }
        LossMode::Squared => 0.5 * (z - y) * (z - y),
    };
    data + 0.5 * alpha * w.iter().map(|v| v * v).sum::<f64>()
}

fn model_with(mode: LossMode, w: &[f64], b: f64, alpha: f64) -> LinearModel {
    let weights: Vec<String> = w.iter().map(|v| format!("{v:?}")).collect();
    let text = format!(
        "mode {mode}\nlearning_rate 0.01\nl2_strength {alpha:?}\nbias {b:?}\nweights {}\n",
        weights.join(" ")
    );
    LinearModel::from_text(&text, Path::new("oracle"), 1).expect("valid model text")
}

fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < 1e-6 {
        // Both essentially zero: compare absolutely.
        (a - b).abs()
    } else {
        (a - b).abs() / scale
    }
}

/// Analytic gradients against central finite differences of the oracle loss.
pub fn sgd_gradient_matches_finite_differences(cases: usize) -> Outcome {
    let mut rng = SeededRng::new(0x5eed_0001);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for case in 0..cases {
        let mode = if case % 2 == 0 {
            LossMode::Logistic
        } else {
            LossMode::Squared
        };
        let n = 1 + rng.below(6) as usize;
        let w: Vec<f64> = (0..n).map(|_| uniform(&mut rng, -2.0, 2.0)).collect();
        let x: Vec<f64> = (0..n).map(|_| unit(&mut rng)).collect();
        let b = uniform(&mut rng, -1.0, 1.0);
        let alpha = if rng.bernoulli(0.5) {
            0.0
        } else {
            uniform(&mut rng, 0.0, 0.1)
        };
        let y = match mode {
            LossMode::Logistic => f64::from(u8::from(rng.bernoulli(0.5))),
            LossMode::Squared => unit(&mut rng),
        };
        let (dw, db) = model_with(mode, &w, b, alpha)
            .gradient(&x, y)
            .map_err(|e| e.to_string())?;

        for i in 0..=n {
            let numeric = if i < n {
                let (mut up, mut down) = (w.clone(), w.clone());
                up[i] += h;
                down[i] -= h;
                (oracle_loss(mode, &up, b, alpha, &x, y)
                    - oracle_loss(mode, &down, b, alpha, &x, y))
                    / (2.0 * h)
            } else {
                (oracle_loss(mode, &w, b + h, alpha, &x, y)
                    - oracle_loss(mode, &w, b - h, alpha, &x, y))
                    / (2.0 * h)
            };
            let analytic = if i < n { dw[i] } else { db };
            let e = rel_err(analytic, numeric);
            worst = worst.max(e);
            if e >= 1e-5 {
                return Err(format!(
                    "case {case} ({mode}) component {i}: analytic {analytic} vs numeric {numeric} (rel err {e:e})"
                ));
            }
        }
    }
    eprintln!("  gradient check: {cases} cases, worst relative error {worst:.2e}");
    Ok(())
}

// ------------------------------------------------------------------------ OLS

pub fn ols_recovers_noiseless_linear_data(cases: usize) -> Outcome {
    let mut rng = SeededRng::new(0x5eed_0002);
    for case in 0..cases {
        let d = 1 + rng.below(5) as usize;
        let n = 3 * d + 10 + rng.below(30) as usize;
        let beta: Vec<f64> = (0..d).map(|_| uniform(&mut rng, -3.0, 3.0)).collect();
        let intercept = uniform(&mut rng, -2.0, 2.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| unit(&mut rng)).collect())
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>() + intercept)
            .collect();
        let model = OlsModel::fit(&rows, &y).map_err(|e| e.to_string())?;
        for (j, (got, want)) in model.coefficients().iter().zip(&beta).enumerate() {
            if (got - want).abs() >= 1e-6 {
                return Err(format!(
                    "case {case}: coefficient {j} is {got}, expected {want}"
                ));
            }
        }
        if (model.intercept() - intercept).abs() >= 1e-6 {
            return Err(format!(
                "case {case}: intercept {} expected {intercept}",
                model.intercept()
            ));
        }
    }
    Ok(())
}

// ----------------------------------------------------------------------- tree

/// A training instance of at most 12 points on a coarse grid, so that ties
/// between features, thresholds and classes are common.
pub struct TreeInstance {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub task: TreeTask,
    pub params: TreeParams,
}

pub fn tree_corpus(size: usize) -> Vec<TreeInstance> {
    let mut rng = SeededRng::new(0x5eed_0003);
    (0..size)
        .map(|i| {
            let n = 1 + rng.below(12) as usize;
            let d = 1 + rng.below(3) as usize;
            let levels = 2 + rng.below(4);
            let rows = (0..n)
                .map(|_| (0..d).map(|_| rng.below(levels) as f64 / 4.0).collect())
                .collect();
            let task = if i % 2 == 0 {
                TreeTask::Classification
            } else {
                TreeTask::Regression
            };
            let targets = (0..n)
                .map(|_| match task {
                    TreeTask::Classification => rng.below(3) as f64,
                    TreeTask::Regression => 1.0 + rng.below(5) as f64,
                })
                .collect();
            let max_depth = [1, 1, 2, 3, 10][rng.below(5) as usize];
            let min_samples_split = 2 + rng.below(3) as usize;
            TreeInstance {
                rows,
                targets,
                task,
                params: TreeParams {
                    max_depth,
                    min_samples_split,
                },
            }
        })
        .collect()
}

/// Exact split score as a fraction `num/den`; larger is better. For Gini this
/// is `Σ_k l_k²/n_l + Σ_k r_k²/n_r` (cost = n − score); for squared error it
/// is `S_l²/n_l + S_r²/n_r` (cost = Σy² − score). Targets are integers, so
/// the arithmetic is exact.
fn split_score(task: TreeTask, left: &[i64], right: &[i64]) -> (i128, i128) {
    let part = |ys: &[i64]| -> i128 {
        match task {
            TreeTask::Classification => {
                let mut counts = [0i128; 8];
                for &y in ys {
                    counts[y as usize] += 1;
                }
                counts.iter().map(|c| c * c).sum()
            }
            TreeTask::Regression => {
                let s: i128 = ys.iter().map(|&y| i128::from(y)).sum();
                s * s
            }
        }
    };
    let (nl, nr) = (left.len() as i128, right.len() as i128);
    (part(left) * nr + part(right) * nl, nl * nr)
}

fn oracle_leaf(task: TreeTask, ys: &[i64]) -> f64 {
    match task {
        TreeTask::Classification => {
            let mut counts = [0usize; 8];
            for &y in ys {
                counts[y as usize] += 1;
            }
            // First maximum: ties go to the smaller class value.
            let best = (0..8)
                .max_by_key(|&k| (counts[k], std::cmp::Reverse(k)))
                .unwrap();
            best as f64
        }
        TreeTask::Regression => ys.iter().sum::<i64>() as f64 / ys.len() as f64,
    }
}

/// Best split of `idx` by exhaustive search over every feature and every
/// midpoint threshold, ties to the lowest feature then lowest threshold.
fn brute_force_split(inst: &TreeInstance, idx: &[usize]) -> Option<(usize, f64)> {
    let d = inst.rows[0].len();
    let mut best: Option<((i128, i128), usize, f64)> = None;
    for f in 0..d {
        let mut vals: Vec<f64> = idx.iter().map(|&i| inst.rows[i][f]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let t = (pair[0] + pair[1]) / 2.0;
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| inst.rows[i][f] <= t);
            let ly: Vec<i64> = l.iter().map(|&i| inst.targets[i] as i64).collect();
            let ry: Vec<i64> = r.iter().map(|&i| inst.targets[i] as i64).collect();
            let s = split_score(inst.task, &ly, &ry);
            let better = match &best {
                None => true,
                Some(((bn, bd), _, _)) => s.0 * bd > bn * s.1,
            };
            if better {
                best = Some((s, f, t));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn check_node(inst: &TreeInstance, node: &Node, idx: &[usize], depth: usize) -> Outcome {
    let ys: Vec<i64> = idx.iter().map(|&i| inst.targets[i] as i64).collect();
    let pure = ys.iter().all(|&y| y == ys[0]);
    let must_stop =
        depth >= inst.params.max_depth || idx.len() < inst.params.min_samples_split.max(2) || pure;
    let split = if must_stop {
        None
    } else {
        brute_force_split(inst, idx)
    };
    match (node, split) {
        (Node::Leaf { value }, None) => {
            let want = oracle_leaf(inst.task, &ys);
            if (value - want).abs() > 1e-12 {
                return Err(format!(
                    "leaf at depth {depth} holds {value}, expected {want}"
                ));
            }
            Ok(())
        }
        (Node::Leaf { .. }, Some((f, t))) => Err(format!(
            "leaf at depth {depth}, expected split on feature {f} at {t}"
        )),
        (
            Node::Split {
                feature, threshold, ..
            },
            None,
        ) => Err(format!(
            "split on feature {feature} at {threshold} at depth {depth}, expected a leaf"
        )),
        (
            Node::Split {
                feature,
                threshold,
                left,
                right,
            },
            Some((f, t)),
        ) => {
            if *feature != f || (threshold - t).abs() > 1e-12 {
                return Err(format!(
                    "depth {depth}: split ({feature}, {threshold}), brute force gives ({f}, {t})"
                ));
            }
            let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| inst.rows[i][f] <= t);
            check_node(inst, left, &l, depth + 1)?;
            check_node(inst, right, &r, depth + 1)
        }
    }
}

/// Every node of every tree in the corpus carries the exhaustively optimal
/// split for the rows that reach it (so depth-1 trees are exactly the best
/// stump), and every leaf holds the majority class or the mean.
pub fn tree_matches_brute_force(size: usize) -> Outcome {
    for (k, inst) in tree_corpus(size).iter().enumerate() {
        let tree = DecisionTree::fit(&inst.rows, &inst.targets, inst.task, inst.params)
            .map_err(|e| format!("instance {k}: {e}"))?;
        let idx: Vec<usize> = (0..inst.rows.len()).collect();
        check_node(inst, tree.root(), &idx, 0).map_err(|e| {
            format!(
                "instance {k} ({:?}, {:?}, rows {:?}, targets {:?}): {e}",
                inst.task, inst.params, inst.rows, inst.targets
            )
        })?;
    }
    Ok(())
}

// --------------------------------------------------------------------- bandit

pub fn random_stream(seed: u64, len: usize, n_arms: usize, rating: bool) -> Vec<InteractionRecord> {
    let mut rng = SeededRng::new(seed);
    let mut arms = ArmRegistry::new();
    (0..len)
        .map(|i| {
            let arm = arms
                .intern(&format!("arm{}", rng.below(n_arms as u64)))
                .unwrap();
            let reward = if rating {
                1.0 + rng.below(5) as f64
            } else {
                f64::from(u8::from(rng.bernoulli(0.3)))
            };
            InteractionRecord {
                position: i as u64 + 1,
                raw_context: vec![
                    RawValue::Number(rng.below(101) as f64),
                    datagen::GENDERS[rng.below(2) as usize].into(),
                ],
                arm,
                reward,
            }
        })
        .collect()
}

fn bandit_for(n_arms: usize, rating: bool, eta: f64) -> ArmLearnerArray {
    let config = if rating {
        BanditConfig::rating(n_arms)
    } else {
        BanditConfig::click(n_arms)
    };
    let config = config.with_params(SgdParams {
        learning_rate: eta,
        l2_strength: 1e-3,
    });
    ArmLearnerArray::new(datagen::article_schema(), config).unwrap()
}

/// On randomized streams: the prediction emitted for each record equals the
/// pre-update estimate for that (context, arm), and the step changes no other
/// arm's learner.
pub fn bandit_stream_invariants(streams: usize) -> Outcome {
    for s in 0..streams {
        let rating = s % 2 == 1;
        let n_arms = 2 + s % 5;
        let stream = random_stream(0x5eed_1000 + s as u64, 300, n_arms, rating);
        let mut array = bandit_for(n_arms, rating, 0.05 + 0.05 * (s % 3) as f64);
        for rec in &stream {
            let before = array.clone();
            let expected = before
                .known_arms()
                .iter()
                .find(|a| a.label() == rec.arm.label())
                .map(|a| before.expected_reward(&rec.raw_context, a).unwrap());
            let outcome = array.step(rec).map_err(|e| e.to_string())?;
            match (outcome.prediction, expected) {
                (None, None) => {}
                (Some(p), Some(e)) if p.to_bits() == e.to_bits() => {}
                (p, e) => {
                    return Err(format!(
                        "stream {s} record {}: emitted {p:?}, pre-update estimate {e:?}",
                        rec.position
                    ))
                }
            }
            for arm in before.known_arms() {
                if arm.label() != rec.arm.label()
                    && before.learner(arm.label()) != array.learner(arm.label())
                {
                    return Err(format!(
                        "stream {s} record {}: update of `{}` changed `{}`",
                        rec.position,
                        rec.arm.label(),
                        arm.label()
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- determinism

/// Seeded generation, the full comparison and the bandit snapshot are
/// bitwise reproducible.
pub fn seeded_runs_are_deterministic() -> Outcome {
    let config = GeneratorConfig::default();
    let a = datagen::to_csv(&datagen::generate(&config).unwrap()).unwrap();
    let b = datagen::to_csv(&datagen::generate(&config).unwrap()).unwrap();
    if a != b {
        return Err("same seed produced different CSV bytes".into());
    }
    let other = GeneratorConfig {
        seed: config.seed + 1,
        ..GeneratorConfig::default()
    };
    if datagen::to_csv(&datagen::generate(&other).unwrap()).unwrap() == a {
        return Err("different seeds produced identical data".into());
    }

    let ds = datagen::article_dataset(datagen::parse_csv(&a, Path::new("gen")).unwrap());
    let cfg = ProtocolConfig::default();
    let run = || compare_protocol(&ds, &Algorithm::ALL, &cfg).unwrap();
    let (x, y) = (run(), run());
    for (rx, ry) in x.results.iter().zip(&y.results) {
        let bits = |r: &ctxbandit::eval::AlgorithmResult| -> Vec<u64> {
            r.log
                .entries()
                .iter()
                .map(|e| e.predicted.to_bits())
                .collect()
        };
        if bits(rx) != bits(ry) {
            return Err(format!("{} predictions differ between runs", rx.algorithm));
        }
    }

    let snapshot = || {
        let mut array = bandit_for(4, false, 0.1);
        for r in &ds.records {
            array.step(r).unwrap();
        }
        array.to_snapshot().unwrap()
    };
    if snapshot() != snapshot() {
        return Err("bandit snapshots differ between runs".into());
    }
    Ok(())
}

/// Runs every suite with the sizes used by the acceptance gate.
pub fn all_suites() -> Vec<(&'static str, Outcome)> {
    vec![
        (
            "sgd gradient vs finite differences (1000 cases)",
            sgd_gradient_matches_finite_differences(1000),
        ),
        (
            "ols noiseless recovery (arity <= 5)",
            ols_recovers_noiseless_linear_data(200),
        ),
        (
            "tree vs brute-force splits (<= 12 points)",
            tree_matches_brute_force(3000),
        ),
        (
            "bandit predict-before-update and arm isolation",
            bandit_stream_invariants(20),
        ),
        (
            "seeded runs bitwise deterministic",
            seeded_runs_are_deterministic(),
        ),
    ]
}
