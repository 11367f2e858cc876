//! Joint multi-direction training data: proxy target-language tokens,
//! undersampling and the fixed direction recipes.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{atomic_write, read_lines};
use crate::seed;

/// `[2xx]` with a lowercase two-letter language code.
pub fn is_proxy_token(s: &str) -> bool {
    let b = s.as_bytes();
    b.len() == 5 && b[0] == b'[' && b[1] == b'2' && b[4] == b']' && b[2..4].iter().all(u8::is_ascii_lowercase)
}

pub fn proxy_for(lang: &str) -> String {
    format!("[2{lang}]")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Direction {
    pub name: String,
    pub source: PathBuf,
    pub target: PathBuf,
    pub proxy: String,
    /// Lines kept after undersampling; `None` keeps everything.
    pub sample: Option<usize>,
}

impl Direction {
    pub fn new(
        name: impl Into<String>,
        source: impl Into<PathBuf>,
        target: impl Into<PathBuf>,
        proxy: impl Into<String>,
        sample: Option<usize>,
    ) -> Result<Self> {
        let proxy = proxy.into();
        if !is_proxy_token(&proxy) {
            return Err(Error::InvalidArgument(format!(
                "proxy token {proxy:?} is not of the form [2xx]"
            )));
        }
        Ok(Direction {
            name: name.into(),
            source: source.into(),
            target: target.into(),
            proxy,
            sample,
        })
    }

    /// Seed coordinate shared by both directions of one bitext, so a
    /// bidirectional pair undersamples the same sentences.
    fn sample_key(&self) -> u64 {
        let (a, b) = (self.source.to_string_lossy(), self.target.to_string_lossy());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        fnv1a(lo.as_bytes().iter().chain(&[0]).chain(hi.as_bytes()))
    }
}

fn fnv1a<'a>(bytes: impl Iterator<Item = &'a u8>) -> u64 {
    bytes.fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// `k` items drawn uniformly without replacement, in their original order.
pub fn undersample<T: Clone>(corpus: &[T], k: usize, seed: u64) -> Result<Vec<T>> {
    let n = corpus.len();
    if k > n {
        return Err(Error::SampleTooLarge { k, n });
    }
    let mut rng = seed::rng(seed, &[]);
    let mut picked = index::sample(&mut rng, n, k).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| corpus[i].clone()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionSummary {
    pub name: String,
    pub proxy: String,
    pub lines_in: usize,
    pub lines_out: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assembled {
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub directions: Vec<DirectionSummary>,
}

impl Assembled {
    pub fn write(&self, src_path: &Path, tgt_path: &Path) -> Result<()> {
        write_lines(src_path, &self.source)?;
        write_lines(tgt_path, &self.target)
    }
}

/// Atomically write one line per item.
pub fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    atomic_write(path, |w| {
        for l in lines {
            writeln!(w, "{l}")?;
        }
        Ok(())
    })
}

/// Concatenate directions in order, each optionally undersampled and with
/// its proxy token prefixed to every source line. `shuffle` applies one
/// seeded permutation to the joint corpus.
pub fn assemble_joint(directions: &[Direction], seed: u64, shuffle: bool) -> Result<Assembled> {
    let mut out = Assembled::default();
    for d in directions {
        if !is_proxy_token(&d.proxy) {
            return Err(Error::InvalidArgument(format!(
                "direction {}: proxy token {:?} is not of the form [2xx]",
                d.name, d.proxy
            )));
        }
        let src = read_lines(&d.source)?;
        let tgt = read_lines(&d.target)?;
        if src.len() != tgt.len() {
            return Err(Error::MisalignedDirection {
                name: d.name.clone(),
                src_lines: src.len(),
                tgt_lines: tgt.len(),
            });
        }
        let pairs: Vec<(String, String)> = src.into_iter().zip(tgt).collect();
        let lines_in = pairs.len();
        let kept = match d.sample {
            Some(k) => undersample(&pairs, k, seed::derive(seed, &[d.sample_key()])).map_err(|e| match e {
                Error::SampleTooLarge { k, n } => Error::InvalidArgument(format!(
                    "direction {}: sample size {k} exceeds its {n} lines",
                    d.name
                )),
                other => other,
            })?,
            None => pairs,
        };
        out.directions.push(DirectionSummary {
            name: d.name.clone(),
            proxy: d.proxy.clone(),
            lines_in,
            lines_out: kept.len(),
        });
        for (s, t) in kept {
            out.source.push(format!("{} {s}", d.proxy));
            out.target.push(t);
        }
    }
    if shuffle {
        let mut order: Vec<usize> = (0..out.source.len()).collect();
        order.shuffle(&mut seed::rng(seed, &[u64::MAX]));
        out.source = order.iter().map(|&i| out.source[i].clone()).collect();
        out.target = order.iter().map(|&i| out.target[i].clone()).collect();
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    /// Hi_c⇄En, Hi_cr⇄En, Hi_crn→En, Bn⇄En, Bn_r⇄En.
    Zcmt,
    /// Hi_cr⇄En, Hi_crn→En.
    RcmtRoman,
    /// Hi_c⇄En, Hi_cr⇄En, Hi_crn→En.
    RcmtRomanDevan,
}

impl fmt::Display for RecipeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecipeKind::Zcmt => "zcmt",
            RecipeKind::RcmtRoman => "rcmt_roman",
            RecipeKind::RcmtRomanDevan => "rcmt_roman_devan",
        })
    }
}

/// Number of lines to keep, or `"all"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SampleSize {
    Lines(usize),
    All(AllLines),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AllLines {
    All,
}

impl SampleSize {
    pub fn lines(self) -> Option<usize> {
        match self {
            SampleSize::Lines(k) => Some(k),
            SampleSize::All(_) => None,
        }
    }
}

/// One bitext: `src` is the non-English side, `tgt` the English side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub src: PathBuf,
    pub tgt: PathBuf,
    pub sample: SampleSize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeConfig {
    pub recipe: RecipeKind,
    #[serde(default)]
    pub shuffle: bool,
    /// Keyed by hi_c, hi_cr, hi_crn, bn, bn_r.
    pub corpus: BTreeMap<String, CorpusEntry>,
}

impl RecipeConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cfg: RecipeConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(origin, line, e.message())
        })?;
        // relative paths are relative to the recipe file
        if let Some(base) = origin.parent() {
            for c in cfg.corpus.values_mut() {
                c.src = base.join(&c.src);
                c.tgt = base.join(&c.tgt);
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

/// (corpus key, language code, bidirectional) in emission order.
fn recipe_plan(kind: RecipeKind) -> &'static [(&'static str, &'static str, bool)] {
    match kind {
        RecipeKind::Zcmt => &[
            ("hi_c", "hi", true),
            ("hi_cr", "hi", true),
            ("hi_crn", "hi", false),
            ("bn", "bn", true),
            ("bn_r", "bn", true),
        ],
        RecipeKind::RcmtRoman => &[("hi_cr", "hi", true), ("hi_crn", "hi", false)],
        RecipeKind::RcmtRomanDevan => &[("hi_c", "hi", true), ("hi_cr", "hi", true), ("hi_crn", "hi", false)],
    }
}

/// Expand a recipe into its direction list. Bidirectional corpora give an
/// X→en and an en→X direction; the noisy corpus is X→en only.
pub fn recipe_directions(cfg: &RecipeConfig) -> Result<Vec<Direction>> {
    let mut out = Vec::new();
    for &(key, lang, both) in recipe_plan(cfg.recipe) {
        let c = cfg.corpus.get(key).ok_or_else(|| Error::MissingCorpus {
            recipe: cfg.recipe.to_string(),
            corpus: key.to_owned(),
        })?;
        let sample = c.sample.lines();
        out.push(Direction::new(format!("{key}->en"), &c.src, &c.tgt, proxy_for("en"), sample)?);
        if both {
            out.push(Direction::new(format!("en->{key}"), &c.tgt, &c.src, proxy_for(lang), sample)?);
        }
    }
    Ok(out)
}

/// ZCMT directions; every one of the five corpora must be configured.
pub fn recipe_zero_shot(cfg: &RecipeConfig) -> Result<Vec<Direction>> {
    recipe_directions(&RecipeConfig {
        recipe: RecipeKind::Zcmt,
        ..cfg.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, lines: &[String]) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, lines.iter().map(|l| format!("{l}\n")).collect::<String>()).unwrap();
        p
    }

    fn numbered(prefix: &str, n: usize) -> Vec<String> {
        (0..n).map(|i| format!("{prefix} {i}")).collect()
    }

    #[test]
    fn proxy_tokens() {
        assert!(is_proxy_token("[2en]"));
        assert!(!is_proxy_token("[2EN]"));
        assert!(!is_proxy_token("<2en>"));
        assert!(!is_proxy_token("[2eng]"));
        assert!(Direction::new("x", "a", "b", "[2T]", None).is_err());
    }

    #[test]
    fn undersample_edges() {
        let c: Vec<usize> = (0..10).collect();
        assert_eq!(undersample(&c, 10, 1).unwrap(), c);
        assert!(undersample(&c, 0, 1).unwrap().is_empty());
        assert!(matches!(undersample(&c, 11, 1), Err(Error::SampleTooLarge { k: 11, n: 10 })));
        let s = undersample(&c, 5, 3).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, undersample(&c, 5, 3).unwrap());
    }

    #[test]
    fn undersample_is_uniform() {
        let c: Vec<usize> = (0..10).collect();
        let trials = 10_000;
        let mut hits = [0usize; 10];
        for t in 0..trials {
            for i in undersample(&c, 5, t).unwrap() {
                hits[i] += 1;
            }
        }
        for h in hits {
            let f = h as f64 / trials as f64;
            assert!((0.47..=0.53).contains(&f), "inclusion {f}");
        }
    }

    #[test]
    fn proxy_prefix_and_concatenation() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "cm.txt", &["Yeh security certificate trusted nahi hai .".to_owned()]);
        let tgt = write(dir.path(), "en.txt", &["This security certificate is not trusted .".to_owned()]);
        let dirs = vec![
            Direction::new("hi_cr->en", &src, &tgt, "[2en]", None).unwrap(),
            Direction::new("en->hi_cr", &tgt, &src, "[2hi]", None).unwrap(),
        ];
        let out = assemble_joint(&dirs, 0, false).unwrap();
        assert_eq!(out.source[0], "[2en] Yeh security certificate trusted nahi hai .");
        assert_eq!(out.source[1], "[2hi] This security certificate is not trusted .");
        assert_eq!(out.target.len(), 2);
        let a = dir.path().join("train.src");
        let b = dir.path().join("train.tgt");
        out.write(&a, &b).unwrap();
        assert_eq!(read_lines(&a).unwrap(), out.source);
    }

    #[test]
    fn sampling_is_deterministic_and_shared_by_both_directions() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s.txt", &numbered("s", 1000));
        let tgt = write(dir.path(), "t.txt", &numbered("t", 1000));
        let dirs = vec![
            Direction::new("x->en", &src, &tgt, "[2en]", Some(100)).unwrap(),
            Direction::new("en->x", &tgt, &src, "[2xx]", Some(100)).unwrap(),
        ];
        let a = assemble_joint(&dirs, 11, false).unwrap();
        assert_eq!(a, assemble_joint(&dirs, 11, false).unwrap());
        assert_eq!(a.source.len(), 200);
        for i in 0..100 {
            let fwd = a.source[i].trim_start_matches("[2en] s ");
            let back = a.target[100 + i].trim_start_matches("s ");
            assert_eq!(fwd, back);
        }
        let shuffled = assemble_joint(&dirs, 11, true).unwrap();
        assert_ne!(shuffled.source, a.source);
        let mut x = shuffled.source.clone();
        let mut y = a.source.clone();
        x.sort();
        y.sort();
        assert_eq!(x, y);
    }

    #[test]
    fn misaligned_and_oversampled_directions_named() {
        let dir = tempfile::tempdir().unwrap();
        let src = write(dir.path(), "s.txt", &numbered("s", 3));
        let tgt = write(dir.path(), "t.txt", &numbered("t", 2));
        let d = Direction::new("bn->en", &src, &tgt, "[2en]", None).unwrap();
        let err = assemble_joint(&[d], 0, false).unwrap_err();
        assert!(err.to_string().contains("bn->en"), "{err}");
        let d = Direction::new("bn->en", &src, &src, "[2en]", Some(4)).unwrap();
        assert!(assemble_joint(&[d], 0, false).unwrap_err().to_string().contains("bn->en"));
    }

    fn recipe(kind: &str, corpora: &[&str]) -> RecipeConfig {
        let mut text = format!("recipe = \"{kind}\"\n");
        for c in corpora {
            text.push_str(&format!("[corpus.{c}]\nsrc = \"{c}.txt\"\ntgt = \"{c}.en\"\nsample = \"all\"\n"));
        }
        RecipeConfig::parse(&text, Path::new("/data/recipe.toml")).unwrap()
    }

    #[test]
    fn recipe_direction_counts() {
        let all = ["hi_c", "hi_cr", "hi_crn", "bn", "bn_r"];
        let z = recipe_directions(&recipe("zcmt", &all)).unwrap();
        assert_eq!(z.len(), 9);
        assert!(z.iter().all(|d| ["[2en]", "[2hi]", "[2bn]"].contains(&d.proxy.as_str())));
        assert_eq!(z.iter().filter(|d| d.proxy == "[2en]").count(), 5);
        assert_eq!(z[0].source, Path::new("/data/hi_c.txt"));
        let r = recipe_directions(&recipe("rcmt_roman", &all)).unwrap();
        assert_eq!(
            r.iter().map(|d| d.name.as_str()).collect::<Vec<_>>(),
            ["hi_cr->en", "en->hi_cr", "hi_crn->en"]
        );
        assert_eq!(recipe_directions(&recipe("rcmt_roman_devan", &all)).unwrap().len(), 5);
        let err = recipe_zero_shot(&recipe("zcmt", &["hi_c", "hi_cr", "hi_crn"])).unwrap_err();
        assert!(matches!(err, Error::MissingCorpus { ref corpus, .. } if corpus == "bn"));
    }

    #[test]
    fn recipe_parse_errors() {
        let p = Path::new("r.toml");
        assert!(RecipeConfig::parse("recipe = \"zcmt\"\n[corpus.bn]\nsrc = \"a\"\ntgt = \"b\"\n", p).is_err());
        let cfg = RecipeConfig::parse("recipe = \"zcmt\"\n[corpus.bn]\nsrc = \"a\"\ntgt = \"b\"\nsample = 5\n", p).unwrap();
        assert_eq!(cfg.corpus["bn"].sample.lines(), Some(5));
        assert!(matches!(RecipeConfig::parse("recipe = \"nope\"\ncorpus = {}\n", p), Err(Error::Parse { .. })));
    }
}
