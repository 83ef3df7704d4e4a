//! Ancestral sampling and corpora.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pfsa::{Pfsa, Symbol};
use crate::rng::SplitMix64;

/// Sampling aborts when a string grows past this length.
pub const MAX_SAMPLE_LENGTH: usize = 10_000;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusMetadata {
    pub source: String,
    pub seed: Option<u64>,
    /// Fingerprint of the generating automaton, if any.
    pub fingerprint: Option<String>,
    pub split: Option<String>,
    pub alphabet_size: usize,
    /// Perturbations applied, oldest first.
    #[serde(default)]
    pub perturbations: Vec<String>,
}

/// An ordered list of symbol strings, in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub strings: Vec<Vec<Symbol>>,
    pub metadata: CorpusMetadata,
}

impl Corpus {
    /// A corpus without provenance; the alphabet size is one more than the
    /// largest symbol seen.
    pub fn from_strings(strings: Vec<Vec<Symbol>>) -> Self {
        let alphabet_size = strings
            .iter()
            .flatten()
            .max()
            .map_or(0, |&s| s as usize + 1);
        Self {
            strings,
            metadata: CorpusMetadata {
                source: "inline".into(),
                alphabet_size,
                ..Default::default()
            },
        }
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }

    pub fn num_symbols(&self) -> usize {
        self.strings.iter().map(Vec::len).sum()
    }

    /// Concatenation of several corpora (e.g. the three splits).
    pub fn concat<'a>(parts: impl IntoIterator<Item = &'a Corpus>) -> Corpus {
        let mut out: Option<Corpus> = None;
        for part in parts {
            match out.as_mut() {
                None => out = Some(part.clone()),
                Some(c) => {
                    c.strings.extend(part.strings.iter().cloned());
                    c.metadata.alphabet_size = c.metadata.alphabet_size.max(part.metadata.alphabet_size);
                }
            }
        }
        let mut out = out.unwrap_or_else(|| Corpus::from_strings(Vec::new()));
        out.metadata.split = None;
        out
    }

    /// One string per line, symbols as space-separated decimal integers; an
    /// empty line is the empty string.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.strings {
            for (i, sym) in s.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                write!(out, "{sym}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_text(text: &str) -> Result<Corpus> {
        let strings = text
            .lines()
            .enumerate()
            .map(|(i, line)| {
                line.split_whitespace()
                    .map(|tok| {
                        tok.parse::<Symbol>().map_err(|e| Error::Parse {
                            line: i + 1,
                            message: format!("{tok:?}: {e}"),
                        })
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Corpus::from_strings(strings))
    }

    /// Path of the JSON metadata sidecar for a corpus file.
    pub fn metadata_path(path: &Path) -> PathBuf {
        let mut name = path.as_os_str().to_owned();
        name.push(".meta.json");
        PathBuf::from(name)
    }

    /// Writes the text file and its metadata sidecar.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        let meta = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(Self::metadata_path(path), meta + "\n")?;
        Ok(())
    }

    /// Reads a text corpus, picking up the sidecar metadata when present.
    pub fn load(path: &Path) -> Result<Corpus> {
        let mut corpus = Self::parse_text(&std::fs::read_to_string(path)?)?;
        let meta_path = Self::metadata_path(path);
        if meta_path.exists() {
            let meta: CorpusMetadata = serde_json::from_str(&std::fs::read_to_string(meta_path)?)?;
            let seen = corpus.metadata.alphabet_size;
            corpus.metadata = meta;
            corpus.metadata.alphabet_size = corpus.metadata.alphabet_size.max(seen);
        } else {
            corpus.metadata.source = path.display().to_string();
        }
        Ok(corpus)
    }
}

/// Per-state cumulative tables for ancestral sampling.
#[derive(Debug, Clone)]
pub struct Sampler {
    initial: Vec<(f64, usize)>,
    // per state: cumulative weight, then Some((symbol, target)) or None for halting
    outcomes: Vec<Vec<(f64, Option<(Symbol, usize)>)>>,
}

fn pick<T: Copy>(table: &[(f64, T)], u: f64) -> T {
    let total = table.last().map_or(0.0, |e| e.0);
    let x = u * total;
    table
        .iter()
        .find(|(cum, _)| x < *cum)
        .or(table.last())
        .map(|e| e.1)
        .expect("nonempty sampling table")
}

impl Sampler {
    pub fn new(pfsa: &Pfsa) -> Self {
        let mut acc = 0.0;
        let mut initial = Vec::new();
        for (q, &w) in pfsa.initial().iter().enumerate() {
            if w > 0.0 {
                acc += w;
                initial.push((acc, q));
            }
        }
        let outcomes = (0..pfsa.num_states())
            .map(|q| {
                let mut acc = 0.0;
                let mut table = Vec::new();
                let halt = pfsa.final_weights()[q];
                if halt > 0.0 {
                    acc += halt;
                    table.push((acc, None));
                }
                for t in pfsa.arcs_from(q) {
                    if t.weight > 0.0 {
                        acc += t.weight;
                        table.push((acc, Some((t.symbol, t.target))));
                    }
                }
                table
            })
            .collect();
        Self { initial, outcomes }
    }

    /// Draws a start state from `λ`, then repeatedly halts with probability
    /// `ρ(q)` or follows an arc in proportion to its weight.
    pub fn sample(&self, rng: &mut SplitMix64) -> Result<Vec<Symbol>> {
        let mut state = pick(&self.initial, rng.next_f64());
        let mut out = Vec::new();
        loop {
            let table = &self.outcomes[state];
            if table.is_empty() {
                // a state with no mass at all; treat as halting
                return Ok(out);
            }
            match pick(table, rng.next_f64()) {
                None => return Ok(out),
                Some((symbol, target)) => {
                    if out.len() == MAX_SAMPLE_LENGTH {
                        return Err(Error::SampleLengthCapExceeded {
                            cap: MAX_SAMPLE_LENGTH,
                        });
                    }
                    out.push(symbol);
                    state = target;
                }
            }
        }
    }
}

pub fn sample_string(pfsa: &Pfsa, rng: &mut SplitMix64) -> Result<Vec<Symbol>> {
    Sampler::new(pfsa).sample(rng)
}

/// `n` i.i.d. strings. String `i` is drawn from its own stream keyed by
/// `(seed, i)`, so the output does not depend on scheduling.
pub fn sample_corpus(pfsa: &Pfsa, n: usize, seed: u64) -> Result<Corpus> {
    let sampler = Sampler::new(pfsa);
    let strings = (0..n)
        .into_par_iter()
        .map(|i| sampler.sample(&mut SplitMix64::keyed(seed, &[i as u64])))
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus {
        strings,
        metadata: CorpusMetadata {
            source: "pfsa".into(),
            seed: Some(seed),
            fingerprint: Some(pfsa.fingerprint()),
            split: None,
            alphabet_size: pfsa.alphabet_size(),
            perturbations: Vec::new(),
        },
    })
}

/// Contiguous slices of the corpus, in order. Three splits are labelled
/// train/valid/test.
pub fn split_corpus(corpus: &Corpus, sizes: &[usize]) -> Result<Vec<Corpus>> {
    let requested: usize = sizes.iter().sum();
    if requested > corpus.len() {
        return Err(Error::SizesExceedCorpus {
            requested,
            available: corpus.len(),
        });
    }
    let labels = ["train", "valid", "test"];
    let mut start = 0;
    Ok(sizes
        .iter()
        .enumerate()
        .map(|(i, &size)| {
            let part = Corpus {
                strings: corpus.strings[start..start + size].to_vec(),
                metadata: CorpusMetadata {
                    split: Some(if sizes.len() == 3 {
                        labels[i].to_string()
                    } else {
                        format!("part{i}")
                    }),
                    ..corpus.metadata.clone()
                },
            };
            start += size;
            part
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrices::TransitionMatrices;
    use crate::pfsa::tests::t1;
    use std::collections::HashMap;

    #[test]
    fn epsilon_only_automaton() {
        let p = Pfsa::new(2, 1, vec![1.0], vec![1.0], vec![]).unwrap();
        let c = sample_corpus(&p, 100, 1).unwrap();
        assert!(c.strings.iter().all(Vec::is_empty));
    }

    #[test]
    fn t1_empirical_frequencies() {
        let p = t1();
        let c = sample_corpus(&p, 200_000, 42).unwrap();
        let empty = c.strings.iter().filter(|s| s.is_empty()).count() as f64 / 2e5;
        assert!((empty - 0.2).abs() < 0.005, "{empty}");
        let mean = c.num_symbols() as f64 / 2e5;
        assert!((mean / 3.0625 - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn top_strings_within_four_standard_errors() {
        let p = t1();
        let m = TransitionMatrices::new(&p).unwrap();
        let n = 200_000;
        let c = sample_corpus(&p, n, 9).unwrap();
        let mut freq: HashMap<&[Symbol], usize> = HashMap::new();
        for s in &c.strings {
            *freq.entry(s.as_slice()).or_default() += 1;
        }
        let mut top: Vec<_> = freq.into_iter().collect();
        top.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        for (s, count) in top.into_iter().take(5) {
            let prob = m.string_prob(s).unwrap();
            let se = (prob * (1.0 - prob) / n as f64).sqrt();
            let f = count as f64 / n as f64;
            assert!((f - prob).abs() <= 4.0 * se, "{s:?}: {f} vs {prob}");
        }
    }

    #[test]
    fn sampling_is_deterministic_and_thread_independent() {
        let p = t1();
        let a = sample_corpus(&p, 5000, 3).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| sample_corpus(&p, 5000, 3).unwrap());
        assert_eq!(a, b);
        assert_ne!(a.strings, sample_corpus(&p, 5000, 4).unwrap().strings);
    }

    #[test]
    fn splits_partition_the_corpus() {
        let c = sample_corpus(&t1(), 30_000, 1).unwrap();
        let parts = split_corpus(&c, &[20_000, 5_000, 5_000]).unwrap();
        assert_eq!(parts.iter().map(Corpus::len).collect::<Vec<_>>(), [20_000, 5_000, 5_000]);
        assert_eq!(parts[2].metadata.split.as_deref(), Some("test"));
        let joined: Vec<_> = parts.iter().flat_map(|p| p.strings.clone()).collect();
        assert_eq!(joined, c.strings);
        assert!(matches!(
            split_corpus(&c, &[20_000, 20_000]),
            Err(Error::SizesExceedCorpus { .. })
        ));
    }

    #[test]
    fn length_cap_is_an_error() {
        // halts with probability 1e-9 per step
        let p = Pfsa::new(
            1,
            1,
            vec![1.0],
            vec![1e-9],
            vec![crate::pfsa::tests::arc(0, 0, 1.0 - 1e-9, 0)],
        )
        .unwrap();
        assert!(matches!(
            sample_string(&p, &mut SplitMix64::new(0)),
            Err(Error::SampleLengthCapExceeded { .. })
        ));
    }

    #[test]
    fn text_round_trip_with_empty_strings() {
        let c = Corpus::from_strings(vec![vec![], vec![3, 1], vec![], vec![0]]);
        let text = c.to_text();
        assert_eq!(text, "\n3 1\n\n0\n");
        assert_eq!(Corpus::parse_text(&text).unwrap().strings, c.strings);
        assert!(matches!(
            Corpus::parse_text("1 x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn save_and_load_keep_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        let c = sample_corpus(&t1(), 50, 5).unwrap();
        c.save(&path).unwrap();
        let back = Corpus::load(&path).unwrap();
        assert_eq!(back, c);
    }
}
