use std::io::{BufRead, Write};

use super::IngestError;

/// Reads one external uid per line; line `i` (0-based) names node `i`.
/// Surrounding whitespace is trimmed and a final newline is optional.
pub fn parse_uidlist<R: BufRead>(reader: R) -> Result<Vec<String>, IngestError> {
    let mut uids = Vec::new();
    let mut pending_blank = None;
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let uid = line.trim();
        if uid.is_empty() {
            pending_blank.get_or_insert(index + 1);
            continue;
        }
        if let Some(blank) = pending_blank {
            return Err(IngestError::parse(blank, "blank line inside uid list"));
        }
        uids.push(uid.to_string());
    }
    if uids.is_empty() {
        return Err(IngestError::parse(1, "uid list is empty"));
    }
    Ok(uids)
}

pub fn write_uidlist<W: Write>(uids: &[String], mut out: W) -> std::io::Result<()> {
    for uid in uids {
        writeln!(out, "{uid}")?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_uids() {
        assert_eq!(parse_uidlist("1001\n1002\n".as_bytes()).unwrap(), vec!["1001", "1002"]);
        assert_eq!(parse_uidlist("1001\r\n1002".as_bytes()).unwrap(), vec!["1001", "1002"]);
    }

    #[test]
    fn empty_and_gapped_lists_fail() {
        assert!(parse_uidlist("".as_bytes()).is_err());
        assert!(parse_uidlist("\n\n".as_bytes()).is_err());
        assert!(matches!(parse_uidlist("1\n\n2\n".as_bytes()), Err(IngestError::Parse { line: 2, .. })));
        assert_eq!(parse_uidlist("1\n2\n\n".as_bytes()).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn round_trip(uids in prop::collection::vec("[0-9A-Za-z_]{1,12}", 1..50)) {
            let mut out = Vec::new();
            write_uidlist(&uids, &mut out).unwrap();
            prop_assert_eq!(parse_uidlist(out.as_slice()).unwrap(), uids);
        }
    }
}
