//! Pharaoh alignments, translation-table dumps and substitution JSONL.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AlignmentLinks, Substitution, SubstitutionTable, TranslationTable, NULL_WORD};
use crate::error::{Error, Result};
use crate::io::read_lines;

pub fn write_pharaoh(w: &mut dyn Write, links: &[AlignmentLinks]) -> std::io::Result<()> {
    for l in links {
        let line = l.iter().map(|(i, j)| format!("{i}-{j}")).collect::<Vec<_>>().join(" ");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_pharaoh(path: &Path) -> Result<Vec<AlignmentLinks>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(n, line)| {
            line.split_whitespace()
                .map(|tok| {
                    let (i, j) = tok
                        .split_once('-')
                        .ok_or_else(|| Error::parse(path, n + 1, format!("bad link {tok:?}")))?;
                    let parse = |s: &str| {
                        s.parse::<usize>()
                            .map_err(|_| Error::parse(path, n + 1, format!("bad link {tok:?}")))
                    };
                    Ok((parse(i)?, parse(j)?))
                })
                .collect()
        })
        .collect()
}

/// TSV dump sorted by source word, then by descending probability (target
/// word breaks ties). The NULL row is written as `<null>`.
pub fn write_table(w: &mut dyn Write, table: &TranslationTable) -> std::io::Result<()> {
    let mut sources: Vec<u32> = (0..table.source.len() as u32).collect();
    sources.sort_by(|&a, &b| table.source.word(a).cmp(table.source.word(b)));
    for f in sources {
        let row = &table.rows[f as usize];
        let mut entries: Vec<(&str, f64)> = row
            .targets
            .iter()
            .zip(&row.probs)
            .map(|(&e, &p)| (table.target.word(e), p))
            .collect();
        entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let name = if f == 0 { NULL_WORD } else { table.source.word(f) };
        for (e, p) in entries {
            writeln!(w, "{name}\t{e}\t{p}")?;
        }
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct JsonEntry {
    src_idx: usize,
    src: String,
    tgt: String,
    pos: String,
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    id: usize,
    entries: Vec<JsonEntry>,
}

pub fn write_substitutions(w: &mut dyn Write, tables: &[SubstitutionTable]) -> Result<()> {
    for t in tables {
        let json = JsonTable {
            id: t.id,
            entries: t
                .entries
                .iter()
                .map(|(&src_idx, s)| JsonEntry {
                    src_idx,
                    src: s.src.clone(),
                    tgt: s.tgt.clone(),
                    pos: s.pos.clone(),
                })
                .collect(),
        };
        serde_json::to_writer(&mut *w, &json)?;
        writeln!(w).map_err(|e| Error::io("<substitutions>", e))?;
    }
    Ok(())
}

pub fn read_substitutions(path: &Path) -> Result<Vec<SubstitutionTable>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, line)| {
            let json: JsonTable =
                serde_json::from_str(line).map_err(|e| Error::parse(path, n + 1, e.to_string()))?;
            let mut table = SubstitutionTable::empty(json.id);
            for e in json.entries {
                let dup = table.entries.insert(
                    e.src_idx,
                    Substitution {
                        src: e.src,
                        tgt: e.tgt,
                        pos: e.pos,
                    },
                );
                if dup.is_some() {
                    return Err(Error::parse(path, n + 1, format!("duplicate src_idx {}", e.src_idx)));
                }
            }
            Ok(table)
        })
        .collect()
}
