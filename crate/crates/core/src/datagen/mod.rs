//! Seeded generator for the drifting article-recommendation dataset and the
//! `gender,age,recommendation,reward` CSV dialect it is stored in.
//!
//! Each row draws a gender, an age and one of four article categories
//! uniformly; the click is a Bernoulli draw whose probability comes from the
//! regime active at that row, looked up by `(gender, age bucket, category)`.

mod rng;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub use rng::SeededRng;

use crate::error::{Error, Result};
use crate::eval::{Dataset, Task};
use crate::schema::{ArmRegistry, ContextSchema, FeatureSpec, InteractionRecord, RawValue};

pub const CATEGORIES: [&str; 4] = ["news", "movies", "sports", "health"];
pub const GENDERS: [&str; 2] = ["m", "f"];
pub const BUCKETS: [&str; 3] = ["<30", "30-60", ">60"];
pub const CSV_HEADER: &str = "gender,age,recommendation,reward";
pub const DEFAULT_ROWS: usize = 5000;
pub const DEFAULT_DRIFT_ROW: usize = 2500;
pub const DEFAULT_SEED: u64 = 7;

/// The context schema of this dataset: `age` in `[0, 100]`, `gender` in `{f, m}`.
pub fn article_schema() -> ContextSchema {
    ContextSchema::new(vec![
        FeatureSpec::numeric("age", 0.0, 100.0).expect("static bounds"),
        FeatureSpec::categorical("gender", ["f", "m"]).expect("static categories"),
    ])
    .expect("static schema")
}

pub fn age_bucket(age: u32) -> usize {
    match age {
        0..=29 => 0,
        30..=60 => 1,
        _ => 2,
    }
}

type ProbTable = [[[f64; 4]; 3]; 2];

/// Click probabilities in effect from `start_row` onward.
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeSpec {
    pub start_row: usize,
    /// Indexed `[gender][age bucket][category]` in the orders of
    /// [`GENDERS`], [`BUCKETS`] and [`CATEGORIES`].
    pub click_prob: ProbTable,
}

impl RegimeSpec {
    pub fn uniform(start_row: usize, p: f64) -> Self {
        Self {
            start_row,
            click_prob: [[[p; 4]; 3]; 2],
        }
    }

    pub fn prob(&self, gender: usize, bucket: usize, category: usize) -> f64 {
        self.click_prob[gender][bucket][category]
    }

    /// Sets every cell matching the optional selectors.
    pub fn set(
        &mut self,
        gender: Option<usize>,
        bucket: Option<usize>,
        category: Option<usize>,
        p: f64,
    ) {
        for g in 0..2 {
            for b in 0..3 {
                for c in 0..4 {
                    if gender.is_none_or(|x| x == g)
                        && bucket.is_none_or(|x| x == b)
                        && category.is_none_or(|x| x == c)
                    {
                        self.click_prob[g][b][c] = p;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub regimes: Vec<RegimeSpec>,
    pub n_rows: usize,
    pub seed: u64,
    pub age_min: u32,
    pub age_max: u32,
}

impl Default for GeneratorConfig {
    /// Two regimes. Before row 2500 men click news, women click movies,
    /// readers up to 60 click sports (0.9 against 0.1 elsewhere) and health
    /// draws 0.2 in every cell. From row 2500 health jumps to 0.9 everywhere.
    fn default() -> Self {
        let (news, movies, sports, health) = (Some(0), Some(1), Some(2), Some(3));
        let (m, f) = (Some(0), Some(1));
        let mut before = RegimeSpec::uniform(0, 0.1);
        before.set(m, None, news, 0.9);
        before.set(f, None, movies, 0.9);
        before.set(None, Some(0), sports, 0.9);
        before.set(None, Some(1), sports, 0.9);
        before.set(None, None, health, 0.2);
        let mut after = before.clone();
        after.start_row = DEFAULT_DRIFT_ROW;
        after.set(None, None, health, 0.9);
        Self {
            regimes: vec![before, after],
            n_rows: DEFAULT_ROWS,
            seed: DEFAULT_SEED,
            age_min: 13,
            age_max: 90,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_rows < 1 {
            return Err(Error::Config("row count must be at least 1".into()));
        }
        if self.age_min > self.age_max {
            return Err(Error::Config(format!(
                "age range [{}, {}] is empty",
                self.age_min, self.age_max
            )));
        }
        let Some(first) = self.regimes.first() else {
            return Err(Error::Config("at least one regime is required".into()));
        };
        if first.start_row != 0 {
            return Err(Error::Config("the first regime must start at row 0".into()));
        }
        for w in self.regimes.windows(2) {
            if w[1].start_row <= w[0].start_row {
                return Err(Error::Config(
                    "regime start rows must be strictly increasing".into(),
                ));
            }
        }
        for r in &self.regimes {
            if r.click_prob
                .iter()
                .flatten()
                .flatten()
                .any(|p| !(0.0..=1.0).contains(p))
            {
                return Err(Error::Config(format!(
                    "regime at row {} has a probability outside [0, 1]",
                    r.start_row
                )));
            }
        }
        Ok(())
    }

    fn regime_at(&self, row: usize) -> &RegimeSpec {
        let i = self.regimes.partition_point(|r| r.start_row <= row);
        &self.regimes[i - 1]
    }

    /// Parses the plain-text config:
    ///
    /// ```text
    /// rows 5000
    /// seed 7
    /// age_range 13 90
    /// regime 0
    /// set * * * 0.1        # gender bucket category probability; `*` matches all
    /// set m <30 sports 0.9
    /// regime 2500          # starts as a copy of the previous regime
    /// set * * health 0.9
    /// ```
    ///
    /// Every cell of the first regime must be assigned. A file without any
    /// `regime` line keeps the default regime table.
    pub fn from_text(text: &str, source: &Path) -> Result<Self> {
        let mut cfg = GeneratorConfig {
            regimes: Vec::new(),
            ..GeneratorConfig::default()
        };
        let mut assigned = [[[false; 4]; 3]; 2];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let bad = |d: &str| Error::parse(source, i + 1, d);
            let parts: Vec<&str> = line.split_whitespace().collect();
            match parts.as_slice() {
                ["rows", n] => cfg.n_rows = n.parse().map_err(|_| bad("bad row count"))?,
                ["seed", s] => cfg.seed = s.parse().map_err(|_| bad("bad seed"))?,
                ["age_range", lo, hi] => {
                    cfg.age_min = lo.parse().map_err(|_| bad("bad age bound"))?;
                    cfg.age_max = hi.parse().map_err(|_| bad("bad age bound"))?;
                }
                ["regime", start] => {
                    let start_row = start.parse().map_err(|_| bad("bad regime start"))?;
                    let next = match cfg.regimes.last() {
                        Some(prev) => RegimeSpec {
                            start_row,
                            ..prev.clone()
                        },
                        None => RegimeSpec::uniform(start_row, f64::NAN),
                    };
                    cfg.regimes.push(next);
                }
                ["set", g, b, c, p] => {
                    let first = cfg.regimes.len() == 1;
                    let regime = cfg
                        .regimes
                        .last_mut()
                        .ok_or_else(|| bad("`set` before any `regime`"))?;
                    let g = selector(g, &GENDERS).ok_or_else(|| bad("unknown gender"))?;
                    let b = selector(b, &BUCKETS).ok_or_else(|| bad("unknown age bucket"))?;
                    let c = selector(c, &CATEGORIES).ok_or_else(|| bad("unknown category"))?;
                    let p: f64 = p.parse().map_err(|_| bad("bad probability"))?;
                    regime.set(g, b, c, p);
                    if first {
                        let mut mark = RegimeSpec::uniform(0, 0.0);
                        mark.set(g, b, c, 1.0);
                        for (a, m) in assigned
                            .iter_mut()
                            .flatten()
                            .flatten()
                            .zip(mark.click_prob.iter().flatten().flatten())
                        {
                            *a |= *m == 1.0;
                        }
                    }
                }
                _ => return Err(bad(&format!("unrecognized line `{line}`"))),
            }
        }
        if cfg.regimes.is_empty() {
            cfg.regimes = GeneratorConfig::default().regimes;
        } else if assigned.iter().flatten().flatten().any(|a| !a) {
            return Err(Error::Config(
                "the first regime leaves some (gender, bucket, category) cells unset".into(),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Inverse of [`Self::from_text`], one `set` line per cell.
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "rows {}\nseed {}\nage_range {} {}\n",
            self.n_rows, self.seed, self.age_min, self.age_max
        );
        for r in &self.regimes {
            let _ = writeln!(out, "regime {}", r.start_row);
            for (g, gname) in GENDERS.iter().enumerate() {
                for (b, bname) in BUCKETS.iter().enumerate() {
                    for (c, cname) in CATEGORIES.iter().enumerate() {
                        let _ = writeln!(out, "set {gname} {bname} {cname} {:?}", r.prob(g, b, c));
                    }
                }
            }
        }
        out
    }
}

fn selector(token: &str, names: &[&str]) -> Option<Option<usize>> {
    if token == "*" {
        return Some(None);
    }
    names.iter().position(|n| *n == token).map(Some)
}

/// Generates `config.n_rows` records; a pure function of the config.
pub fn generate(config: &GeneratorConfig) -> Result<Vec<InteractionRecord>> {
    config.validate()?;
    let mut rng = SeededRng::new(config.seed);
    let mut arms = ArmRegistry::new();
    let span = u64::from(config.age_max - config.age_min) + 1;
    (0..config.n_rows)
        .map(|row| {
            let gender = rng.below(2) as usize;
            let age = config.age_min + rng.below(span) as u32;
            let category = rng.below(4) as usize;
            let p = config
                .regime_at(row)
                .prob(gender, age_bucket(age), category);
            let reward = if rng.bernoulli(p) { 1.0 } else { 0.0 };
            Ok(InteractionRecord {
                position: row as u64 + 1,
                raw_context: vec![RawValue::Number(f64::from(age)), GENDERS[gender].into()],
                arm: arms.intern(CATEGORIES[category])?,
                reward,
            })
        })
        .collect()
}

/// Renders records in the CSV dialect. Records must carry `(age, gender)`.
pub fn to_csv(records: &[InteractionRecord]) -> Result<String> {
    let mut out = String::with_capacity(16 * (records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in records {
        let (age, gender) = match r.raw_context.as_slice() {
            [RawValue::Number(a), RawValue::Category(g)] => (*a, g.as_str()),
            _ => {
                return Err(Error::Arity(format!(
                    "record {} does not carry an (age, gender) context",
                    r.position
                )))
            }
        };
        if age.fract() != 0.0 || age < 0.0 {
            return Err(Error::SchemaViolation {
                feature: "age".into(),
                detail: format!("{age} is not a whole number of years"),
            });
        }
        let _ = writeln!(out, "{gender},{age},{},{}", r.arm.label(), r.reward);
    }
    Ok(out)
}

/// Wraps article records as a click dataset over the four categories.
pub fn article_dataset(records: Vec<InteractionRecord>) -> Dataset {
    Dataset {
        schema: article_schema(),
        records,
        task: Task::Click,
        arm_space: CATEGORIES.len(),
    }
}

pub fn write_csv(records: &[InteractionRecord], path: &Path) -> Result<()> {
    let text = to_csv(records)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<InteractionRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, path)
}

/// Parses the CSV dialect. Header names are matched case-insensitively and
/// extra columns are ignored, so externally produced files with the same four
/// columns are accepted.
pub fn parse_csv(text: &str, source: &Path) -> Result<Vec<InteractionRecord>> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(Error::parse(source, 1, "missing header"));
    };
    let names: Vec<String> = header
        .trim_end_matches('\r')
        .split(',')
        .map(|h| h.trim().to_ascii_lowercase())
        .collect();
    let col = |name: &str| {
        names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::parse(source, 1, format!("header lacks `{name}` column")))
    };
    let (gi, ai, ri, wi) = (
        col("gender")?,
        col("age")?,
        col("recommendation")?,
        col("reward")?,
    );

    let mut arms = ArmRegistry::new();
    let mut out = Vec::new();
    for (i, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != names.len() {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected {} fields, found {}", names.len(), fields.len()),
            ));
        }
        let gender = fields[gi];
        if !GENDERS.contains(&gender) {
            return Err(Error::parse(
                source,
                lineno,
                format!("unknown gender `{gender}`"),
            ));
        }
        let age: u32 = fields[ai]
            .parse()
            .map_err(|_| Error::parse(source, lineno, format!("bad age `{}`", fields[ai])))?;
        let category = fields[ri];
        if !CATEGORIES.contains(&category) {
            return Err(Error::SchemaViolation {
                feature: "recommendation".into(),
                detail: format!("unknown category `{category}` on line {lineno}"),
            });
        }
        let reward = match fields[wi] {
            "0" => 0.0,
            "1" => 1.0,
            other => {
                return Err(Error::parse(
                    source,
                    lineno,
                    format!("reward `{other}` is not 0/1"),
                ))
            }
        };
        out.push(InteractionRecord {
            position: out.len() as u64 + 1,
            raw_context: vec![RawValue::Number(f64::from(age)), gender.into()],
            arm: arms.intern(category)?,
            reward,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg_with(p: f64) -> GeneratorConfig {
        GeneratorConfig {
            regimes: vec![RegimeSpec::uniform(0, p)],
            n_rows: 400,
            ..GeneratorConfig::default()
        }
    }

    #[test]
    fn degenerate_probabilities() {
        assert!(generate(&cfg_with(1.0))
            .unwrap()
            .iter()
            .all(|r| r.reward == 1.0));
        assert!(generate(&cfg_with(0.0))
            .unwrap()
            .iter()
            .all(|r| r.reward == 0.0));
    }

    #[test]
    fn first_row_layout() {
        let mut reg = ArmRegistry::new();
        let rec = InteractionRecord {
            position: 1,
            raw_context: vec![29.0.into(), "m".into()],
            arm: reg.intern("health").unwrap(),
            reward: 0.0,
        };
        assert_eq!(
            to_csv(&[rec]).unwrap(),
            "gender,age,recommendation,reward\nm,29,health,0\n"
        );
        assert_eq!(to_csv(&[]).unwrap(), "gender,age,recommendation,reward\n");
    }

    #[test]
    fn csv_errors() {
        let p = Path::new("d.csv");
        let err = parse_csv("gender,age,recommendation,reward\nm,29,health\n", p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_csv("gender,age,recommendation,reward\nm,x,health,0\n", p).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_csv("gender,age,recommendation,reward\nm,3,games,0\n", p).unwrap_err();
        assert!(matches!(err, Error::SchemaViolation { .. }));
        assert!(parse_csv("", p).is_err());
        assert!(parse_csv("a,b\n", p).is_err());
    }

    #[test]
    fn external_header_variants_accepted() {
        let text = "Gender,Age,Recommendation,Reward\r\nf,24,news,0\r\nm,28,movies,1\r\n";
        let recs = parse_csv(text, Path::new("x.csv")).unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].arm.label(), "movies");
        assert_eq!(recs[1].arm.index(), 1);
    }

    #[test]
    fn config_validation() {
        let c = GeneratorConfig {
            n_rows: 0,
            ..GeneratorConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = GeneratorConfig::default();
        c.regimes[1].start_row = 0;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.regimes[0].click_prob[0][0][0] = 1.5;
        assert!(c.validate().is_err());
        let mut c = GeneratorConfig::default();
        c.regimes[0].start_row = 3;
        c.regimes[1].start_row = 9;
        assert!(c.validate().is_err());
    }

    #[test]
    fn config_text_round_trip() {
        let c = GeneratorConfig::default();
        let back = GeneratorConfig::from_text(&c.to_text(), Path::new("g.txt")).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn config_text_wildcards_and_inheritance() {
        let text = "rows 10\nseed 3\nregime 0\nset * * * 0.25\nset m <30 sports 1\nregime 5\nset * * health 0.75\n";
        let c = GeneratorConfig::from_text(text, Path::new("g.txt")).unwrap();
        assert_eq!(c.regimes.len(), 2);
        assert_eq!(c.regimes[0].prob(0, 0, 2), 1.0);
        assert_eq!(c.regimes[1].prob(0, 0, 2), 1.0);
        assert_eq!(c.regimes[1].prob(1, 2, 3), 0.75);
        assert_eq!(c.regimes[0].prob(1, 2, 3), 0.25);
    }

    #[test]
    fn config_text_requires_full_first_regime() {
        let text = "regime 0\nset m * * 0.5\n";
        assert!(GeneratorConfig::from_text(text, Path::new("g")).is_err());
        let err =
            GeneratorConfig::from_text("regime 0\nset q * * 0.5\n", Path::new("g")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn buckets() {
        assert_eq!(age_bucket(29), 0);
        assert_eq!(age_bucket(30), 1);
        assert_eq!(age_bucket(60), 1);
        assert_eq!(age_bucket(61), 2);
    }
}
