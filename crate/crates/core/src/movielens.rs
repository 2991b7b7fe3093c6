//! MovieLens-100K ingestion: parse `u.user`, `u.item` and `u.data`, join them
//! into one time-ordered table, and explode every rating into one bandit
//! record per genre of the rated movie, with the genre as the arm.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use log::warn;

use crate::error::{Error, Result};
use crate::eval::{Dataset, Task};
use crate::schema::{ArmRegistry, ContextSchema, FeatureSpec, InteractionRecord, RawValue};

/// The dataset's genre columns, in file order.
pub const GENRES: [&str; 19] = [
    "unknown",
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

pub const USERS_FILE: &str = "u.user";
pub const ITEMS_FILE: &str = "u.item";
pub const RATINGS_FILE: &str = "u.data";
pub const AGE_BOUNDS: (f64, f64) = (0.0, 100.0);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub user_id: u32,
    pub age: u32,
    pub sex: String,
    pub occupation: String,
    pub zip_code: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovieRecord {
    pub movie_id: u32,
    pub title: String,
    pub genre_flags: [bool; 19],
}

impl MovieRecord {
    pub fn genres(&self) -> impl Iterator<Item = &'static str> + '_ {
        GENRES
            .iter()
            .zip(self.genre_flags)
            .filter(|(_, f)| *f)
            .map(|(g, _)| *g)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingEvent {
    pub user_id: u32,
    pub movie_id: u32,
    pub rating: u8,
    pub unix_timestamp: i64,
}

fn read_lossy(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(String::from_utf8_lossy(&bytes).into_owned())
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.is_empty())
}

fn field<T: FromStr>(raw: &str, what: &str, path: &Path, line: usize) -> Result<T> {
    raw.trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("{what} `{raw}` is not a valid integer")))
}

pub fn parse_users(path: &Path) -> Result<Vec<UserRecord>> {
    parse_users_str(&read_lossy(path)?, path)
}

/// `id|age|gender|occupation|zip`, one user per line.
pub fn parse_users_str(text: &str, path: &Path) -> Result<Vec<UserRecord>> {
    lines(text)
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('|').collect();
            if f.len() != 5 {
                return Err(Error::parse(
                    path,
                    n,
                    format!("expected 5 fields, found {}", f.len()),
                ));
            }
            let age: u32 = field(f[1], "age", path, n)?;
            if age == 0 {
                return Err(Error::parse(path, n, "age must be positive"));
            }
            if f[2] != "F" && f[2] != "M" {
                return Err(Error::parse(
                    path,
                    n,
                    format!("sex `{}` is not F or M", f[2]),
                ));
            }
            Ok(UserRecord {
                user_id: field(f[0], "user id", path, n)?,
                age,
                sex: f[2].to_owned(),
                occupation: f[3].to_owned(),
                zip_code: f[4].to_owned(),
            })
        })
        .collect()
}

pub fn parse_items(path: &Path) -> Result<Vec<MovieRecord>> {
    parse_items_str(&read_lossy(path)?, path)
}

/// 24 pipe-separated fields; the last 19 are the genre flags.
pub fn parse_items_str(text: &str, path: &Path) -> Result<Vec<MovieRecord>> {
    lines(text)
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('|').collect();
            if f.len() != 24 {
                return Err(Error::parse(
                    path,
                    n,
                    format!("expected 24 fields, found {}", f.len()),
                ));
            }
            let mut genre_flags = [false; 19];
            for (slot, raw) in genre_flags.iter_mut().zip(&f[5..]) {
                *slot = match *raw {
                    "0" => false,
                    "1" => true,
                    other => {
                        return Err(Error::parse(
                            path,
                            n,
                            format!("genre flag `{other}` is not 0/1"),
                        ))
                    }
                };
            }
            Ok(MovieRecord {
                movie_id: field(f[0], "movie id", path, n)?,
                title: f[1].to_owned(),
                genre_flags,
            })
        })
        .collect()
}

pub fn parse_ratings(path: &Path) -> Result<Vec<RatingEvent>> {
    parse_ratings_str(&read_lossy(path)?, path)
}

/// `user<TAB>item<TAB>rating<TAB>timestamp`.
pub fn parse_ratings_str(text: &str, path: &Path) -> Result<Vec<RatingEvent>> {
    lines(text)
        .map(|(n, line)| {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                return Err(Error::parse(
                    path,
                    n,
                    format!("expected 4 fields, found {}", f.len()),
                ));
            }
            let rating: u8 = field(f[2], "rating", path, n)?;
            if !(1..=5).contains(&rating) {
                return Err(Error::parse(
                    path,
                    n,
                    format!("rating {rating} outside 1..=5"),
                ));
            }
            Ok(RatingEvent {
                user_id: field(f[0], "user id", path, n)?,
                movie_id: field(f[1], "movie id", path, n)?,
                rating,
                unix_timestamp: field(f[3], "timestamp", path, n)?,
            })
        })
        .collect()
}

/// One rating joined with its user and movie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinedRow {
    pub movie_id: u32,
    pub title: String,
    pub user_id: u32,
    pub rating: u8,
    pub unix_timestamp: i64,
    pub age: u32,
    pub sex: String,
    pub occupation: String,
    pub zip_code: String,
    /// Index of `sex` in [`JoinedTable::sex_levels`].
    pub sex_code: usize,
    pub occupation_code: usize,
    pub zip_code_index: usize,
    pub genre_flags: [bool; 19],
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JoinedTable {
    pub rows: Vec<JoinedRow>,
    /// Ratings dropped because their user or movie was missing.
    pub dropped: usize,
    pub sex_levels: Vec<String>,
    pub occupation_levels: Vec<String>,
    pub zip_levels: Vec<String>,
}

fn levels<'a>(values: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut v: Vec<String> = values.map(str::to_owned).collect();
    v.sort();
    v.dedup();
    v
}

fn code(levels: &[String], v: &str) -> usize {
    levels
        .binary_search_by(|l| l.as_str().cmp(v))
        .expect("level present")
}

/// Inner join of ratings × users × movies, sorted by timestamp then
/// `(user_id, movie_id)`. Sex, occupation and zip code get categorical codes
/// over their sorted distinct values in the joined rows.
pub fn join_and_engineer(
    users: &[UserRecord],
    movies: &[MovieRecord],
    ratings: &[RatingEvent],
) -> Result<JoinedTable> {
    let mut by_user = HashMap::with_capacity(users.len());
    for u in users {
        if by_user.insert(u.user_id, u).is_some() {
            return Err(Error::SchemaViolation {
                feature: "user_id".into(),
                detail: format!("user {} appears twice", u.user_id),
            });
        }
    }
    let mut by_movie = HashMap::with_capacity(movies.len());
    for m in movies {
        if by_movie.insert(m.movie_id, m).is_some() {
            return Err(Error::SchemaViolation {
                feature: "movie_id".into(),
                detail: format!("movie {} appears twice", m.movie_id),
            });
        }
    }

    let mut dropped = 0;
    let mut pairs = Vec::with_capacity(ratings.len());
    for r in ratings {
        match (by_user.get(&r.user_id), by_movie.get(&r.movie_id)) {
            (Some(u), Some(m)) => pairs.push((r, *u, *m)),
            _ => dropped += 1,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} ratings that reference unknown users or movies");
    }

    let sex_levels = levels(pairs.iter().map(|(_, u, _)| u.sex.as_str()));
    let occupation_levels = levels(pairs.iter().map(|(_, u, _)| u.occupation.as_str()));
    let zip_levels = levels(pairs.iter().map(|(_, u, _)| u.zip_code.as_str()));

    let mut rows: Vec<JoinedRow> = pairs
        .into_iter()
        .map(|(r, u, m)| JoinedRow {
            movie_id: m.movie_id,
            title: m.title.clone(),
            user_id: u.user_id,
            rating: r.rating,
            unix_timestamp: r.unix_timestamp,
            age: u.age,
            sex: u.sex.clone(),
            occupation: u.occupation.clone(),
            zip_code: u.zip_code.clone(),
            sex_code: code(&sex_levels, &u.sex),
            occupation_code: code(&occupation_levels, &u.occupation),
            zip_code_index: code(&zip_levels, &u.zip_code),
            genre_flags: m.genre_flags,
        })
        .collect();
    // Full key, so that duplicate (user, movie) ratings also sort deterministically.
    rows.sort_by(|a, b| {
        (a.unix_timestamp, a.user_id, a.movie_id, a.rating).cmp(&(
            b.unix_timestamp,
            b.user_id,
            b.movie_id,
            b.rating,
        ))
    });
    Ok(JoinedTable {
        rows,
        dropped,
        sex_levels,
        occupation_levels,
        zip_levels,
    })
}

/// Paths of the three input files inside an ML-100K directory.
pub fn dataset_paths(dir: &Path) -> [PathBuf; 3] {
    [
        dir.join(USERS_FILE),
        dir.join(ITEMS_FILE),
        dir.join(RATINGS_FILE),
    ]
}

/// Parses and joins the three files.
pub fn load(users: &Path, items: &Path, ratings: &Path) -> Result<JoinedTable> {
    join_and_engineer(
        &parse_users(users)?,
        &parse_items(items)?,
        &parse_ratings(ratings)?,
    )
}

/// User attributes that may form the context vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ContextField {
    Age,
    Sex,
    Zip,
    Occupation,
}

impl ContextField {
    pub const DEFAULT: [ContextField; 3] =
        [ContextField::Age, ContextField::Sex, ContextField::Zip];

    pub fn name(&self) -> &'static str {
        match self {
            ContextField::Age => "age",
            ContextField::Sex => "sex",
            ContextField::Zip => "zip",
            ContextField::Occupation => "occupation",
        }
    }
}

impl FromStr for ContextField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "age" => Ok(ContextField::Age),
            "sex" => Ok(ContextField::Sex),
            "zip" | "zip_code" => Ok(ContextField::Zip),
            "occupation" => Ok(ContextField::Occupation),
            other => Err(Error::Config(format!("unknown context field `{other}`"))),
        }
    }
}

/// Schema over the chosen fields, with category lists taken from the table.
pub fn context_schema(table: &JoinedTable, fields: &[ContextField]) -> Result<ContextSchema> {
    let specs = fields
        .iter()
        .map(|f| match f {
            ContextField::Age => FeatureSpec::numeric("age", AGE_BOUNDS.0, AGE_BOUNDS.1),
            ContextField::Sex => FeatureSpec::categorical("sex", table.sex_levels.clone()),
            ContextField::Zip => FeatureSpec::categorical("zip", table.zip_levels.clone()),
            ContextField::Occupation => {
                FeatureSpec::categorical("occupation", table.occupation_levels.clone())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ContextSchema::new(specs)
}

fn raw_context(row: &JoinedRow, fields: &[ContextField]) -> Vec<RawValue> {
    fields
        .iter()
        .map(|f| match f {
            ContextField::Age => RawValue::Number(f64::from(row.age)),
            ContextField::Sex => row.sex.clone().into(),
            ContextField::Zip => row.zip_code.clone().into(),
            ContextField::Occupation => row.occupation.clone().into(),
        })
        .collect()
}

/// One record per set genre flag, in genre-column order; a movie with no
/// flags is emitted once under `unknown`. Positions are renumbered `1..`.
pub fn explode_by_genre(
    table: &JoinedTable,
    fields: &[ContextField],
) -> Result<Vec<InteractionRecord>> {
    let mut arms = ArmRegistry::new();
    let mut out = Vec::with_capacity(table.rows.len() * 2);
    for row in &table.rows {
        let context = raw_context(row, fields);
        let mut emit = |genre: &str| -> Result<()> {
            out.push(InteractionRecord {
                position: out.len() as u64 + 1,
                raw_context: context.clone(),
                arm: arms.intern(genre)?,
                reward: f64::from(row.rating),
            });
            Ok(())
        };
        let mut any = false;
        for (genre, _) in GENRES.iter().zip(row.genre_flags).filter(|(_, f)| *f) {
            emit(genre)?;
            any = true;
        }
        if !any {
            emit(GENRES[0])?;
        }
    }
    Ok(out)
}

/// The exploded stream as a rating dataset over the 19-genre action space.
pub fn build_dataset(table: &JoinedTable, fields: &[ContextField]) -> Result<Dataset> {
    Ok(Dataset {
        schema: context_schema(table, fields)?,
        records: explode_by_genre(table, fields)?,
        task: Task::Rating,
        arm_space: GENRES.len(),
    })
}

/// Inspection dump of the exploded stream: `age,sex,zip,genre,rating`.
pub fn exploded_csv(table: &JoinedTable) -> String {
    let mut out = String::from("age,sex,zip,genre,rating\n");
    for row in &table.rows {
        let mut any = false;
        for (genre, _) in GENRES.iter().zip(row.genre_flags).filter(|(_, f)| *f) {
            let _ = writeln!(
                out,
                "{},{},{},{genre},{}",
                row.age, row.sex, row.zip_code, row.rating
            );
            any = true;
        }
        if !any {
            let _ = writeln!(
                out,
                "{},{},{},unknown,{}",
                row.age, row.sex, row.zip_code, row.rating
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("fixture")
    }

    fn item_line(id: u32, flags: &[usize]) -> String {
        let mut f = vec!["0"; 19];
        for &i in flags {
            f[i] = "1";
        }
        format!(
            "{id}|Movie {id} (1995)|01-Jan-1995||http://x|{}",
            f.join("|")
        )
    }

    #[test]
    fn user_line() {
        let users = parse_users_str("1|24|M|technician|85711\n", p()).unwrap();
        assert_eq!(
            users,
            vec![UserRecord {
                user_id: 1,
                age: 24,
                sex: "M".into(),
                occupation: "technician".into(),
                zip_code: "85711".into(),
            }]
        );
        assert!(parse_users_str("", p()).unwrap().is_empty());
        let err = parse_users_str("1|24|M\n", p()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        assert!(parse_users_str("x|24|M|a|b\n", p()).is_err());
        assert!(parse_users_str("1|0|M|a|b\n", p()).is_err());
    }

    #[test]
    fn item_flags_follow_genre_order() {
        let text = "1|Toy Story (1995)|01-Jan-1995||http://us.imdb.com/M/title-exact?Toy%20Story%20(1995)|0|0|0|1|1|1|0|0|0|0|0|0|0|0|0|0|0|0|0\n";
        let items = parse_items_str(text, p()).unwrap();
        let genres: Vec<&str> = items[0].genres().collect();
        assert_eq!(genres, vec!["Animation", "Children's", "Comedy"]);

        let unknown = parse_items_str(&item_line(267, &[0]), p()).unwrap();
        assert_eq!(unknown[0].genres().collect::<Vec<_>>(), vec!["unknown"]);

        let short = "1|T|d||u|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0|0\n";
        assert!(matches!(
            parse_items_str(short, p()),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn non_utf8_titles_are_replaced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.item");
        let mut bytes = b"1|Caf\xe9 (1995)|||".to_vec();
        bytes.extend_from_slice(b"|0|0|0|0|0|0|0|0|1|0|0|0|0|0|0|0|0|0|0\n");
        fs::write(&path, bytes).unwrap();
        let items = parse_items(&path).unwrap();
        assert!(items[0].title.contains('\u{fffd}'));
    }

    #[test]
    fn rating_line() {
        let r = parse_ratings_str("259\t255\t4\t874724710\n", p()).unwrap();
        assert_eq!(
            r,
            vec![RatingEvent {
                user_id: 259,
                movie_id: 255,
                rating: 4,
                unix_timestamp: 874724710
            }]
        );
        assert!(matches!(
            parse_ratings_str("1\t2\t6\t100\n", p()),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_ratings_str("", p()).unwrap().is_empty());
    }

    fn fixture() -> (Vec<UserRecord>, Vec<MovieRecord>, Vec<RatingEvent>) {
        let users = parse_users_str("1|24|M|technician|85711\n2|53|F|other|T8H1N\n", p()).unwrap();
        let items = parse_items_str(
            &[
                item_line(10, &[1, 2]),
                item_line(11, &[5]),
                item_line(12, &[]),
            ]
            .join("\n"),
            p(),
        )
        .unwrap();
        let ratings = parse_ratings_str(
            "2\t10\t4\t300\n1\t11\t3\t100\n1\t10\t5\t300\n2\t12\t2\t200\n",
            p(),
        )
        .unwrap();
        (users, items, ratings)
    }

    #[test]
    fn minimal_join() {
        let users = parse_users_str("1|24|M|technician|85711\n", p()).unwrap();
        let items = parse_items_str(&item_line(5, &[8]), p()).unwrap();
        let ratings = parse_ratings_str("1\t5\t3\t10\n", p()).unwrap();
        let t = join_and_engineer(&users, &items, &ratings).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.dropped, 0);
    }

    #[test]
    fn dangling_rating_is_dropped() {
        let (users, items, mut ratings) = fixture();
        ratings.push(RatingEvent {
            user_id: 1,
            movie_id: 999,
            rating: 3,
            unix_timestamp: 5,
        });
        let t = join_and_engineer(&users, &items, &ratings).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert_eq!(t.dropped, 1);
    }

    #[test]
    fn join_orders_and_encodes() {
        let (users, items, ratings) = fixture();
        let t = join_and_engineer(&users, &items, &ratings).unwrap();
        let keys: Vec<(i64, u32, u32)> = t
            .rows
            .iter()
            .map(|r| (r.unix_timestamp, r.user_id, r.movie_id))
            .collect();
        assert_eq!(
            keys,
            vec![(100, 1, 11), (200, 2, 12), (300, 1, 10), (300, 2, 10)]
        );
        assert_eq!(t.sex_levels, vec!["F", "M"]);
        assert_eq!(t.rows[0].sex_code, 1);
        // Non-numeric zip codes stay categorical; "85711" < "T8H1N".
        assert_eq!(t.zip_levels, vec!["85711", "T8H1N"]);
        assert_eq!(t.rows[1].zip_code_index, 1);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let (mut users, items, ratings) = fixture();
        users.push(users[0].clone());
        assert!(join_and_engineer(&users, &items, &ratings).is_err());
    }

    #[test]
    fn explosion_shares_rating_across_genres() {
        let (users, items, ratings) = fixture();
        let t = join_and_engineer(&users, &items, &ratings).unwrap();
        let recs = explode_by_genre(&t, &ContextField::DEFAULT).unwrap();
        let arms: Vec<(&str, f64)> = recs.iter().map(|r| (r.arm.label(), r.reward)).collect();
        assert_eq!(
            arms,
            vec![
                ("Comedy", 3.0),
                ("unknown", 2.0),
                ("Action", 5.0),
                ("Adventure", 5.0),
                ("Action", 4.0),
                ("Adventure", 4.0),
            ]
        );
        assert_eq!(
            recs.iter().map(|r| r.position).collect::<Vec<_>>(),
            vec![1, 2, 3, 4, 5, 6]
        );
        assert_eq!(
            recs[0].raw_context,
            vec![24.0.into(), "M".into(), "85711".into()]
        );
        assert_eq!(recs[2].arm.index(), 2);

        let ds = build_dataset(&t, &ContextField::DEFAULT).unwrap();
        assert_eq!(ds.arm_space, 19);
        let v = ds.schema.normalize(&recs[1].raw_context).unwrap();
        assert_eq!(v.values(), &[0.53, 0.0, 1.0]);
    }

    #[test]
    fn exploded_csv_columns() {
        let (users, items, ratings) = fixture();
        let t = join_and_engineer(&users, &items, &ratings).unwrap();
        let csv = exploded_csv(&t);
        assert!(csv
            .starts_with("age,sex,zip,genre,rating\n24,M,85711,Comedy,3\n53,F,T8H1N,unknown,2\n"));
        assert_eq!(csv.lines().count(), 7);
    }

    #[test]
    fn context_field_names() {
        assert_eq!("zip".parse::<ContextField>().unwrap(), ContextField::Zip);
        assert!("height".parse::<ContextField>().is_err());
    }
}
