//! Delimiter-separated user profiles with a configurable column layout.

use std::collections::HashMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::IngestError;
use crate::graph::NodeId;
use crate::rank::FollowCounts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileField {
    Uid,
    Name,
    Gender,
    Verified,
    Region,
    Followers,
    Followees,
    Reciprocal,
    Tweets,
    Retweets,
    /// A column that is read and discarded.
    Ignore,
}

impl ProfileField {
    fn column_name(self) -> &'static str {
        match self {
            ProfileField::Uid => "uid",
            ProfileField::Name => "name",
            ProfileField::Gender => "gender",
            ProfileField::Verified => "verified",
            ProfileField::Region => "region",
            ProfileField::Followers => "followers",
            ProfileField::Followees => "followees",
            ProfileField::Reciprocal => "reciprocal",
            ProfileField::Tweets => "tweets",
            ProfileField::Retweets => "retweets",
            ProfileField::Ignore => "ignore",
        }
    }
}

/// Column order and delimiter of a profile file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProfileSchema {
    pub delimiter: char,
    pub has_header: bool,
    pub fields: Vec<ProfileField>,
}

impl Default for ProfileSchema {
    fn default() -> Self {
        use ProfileField::*;
        ProfileSchema {
            delimiter: ',',
            has_header: true,
            fields: vec![Uid, Name, Gender, Verified, Region, Followers, Followees, Reciprocal, Tweets, Retweets],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct UserProfile {
    pub node: NodeId,
    pub uid: String,
    pub name: Option<String>,
    pub gender: Option<String>,
    pub verified: Option<String>,
    pub region: Option<String>,
    pub followers: Option<u64>,
    pub followees: Option<u64>,
    pub reciprocal: Option<u64>,
    pub tweets: Option<u64>,
    pub retweets: Option<u64>,
}

impl UserProfile {
    pub fn follow_counts(&self) -> FollowCounts {
        FollowCounts { fans: self.followers, follows: self.followees }
    }

    fn set_text(&mut self, field: ProfileField, value: &str) {
        let value = (!value.is_empty()).then(|| value.to_string());
        match field {
            ProfileField::Uid => self.uid = value.unwrap_or_default(),
            ProfileField::Name => self.name = value,
            ProfileField::Gender => self.gender = value,
            ProfileField::Verified => self.verified = value,
            ProfileField::Region => self.region = value,
            _ => {}
        }
    }

    fn numeric_slot(&mut self, field: ProfileField) -> Option<&mut Option<u64>> {
        match field {
            ProfileField::Followers => Some(&mut self.followers),
            ProfileField::Followees => Some(&mut self.followees),
            ProfileField::Reciprocal => Some(&mut self.reciprocal),
            ProfileField::Tweets => Some(&mut self.tweets),
            ProfileField::Retweets => Some(&mut self.retweets),
            _ => None,
        }
    }

    fn field_text(&self, field: ProfileField) -> String {
        let text = |v: &Option<String>| v.clone().unwrap_or_default();
        let num = |v: Option<u64>| v.map(|n| n.to_string()).unwrap_or_default();
        match field {
            ProfileField::Uid => self.uid.clone(),
            ProfileField::Name => text(&self.name),
            ProfileField::Gender => text(&self.gender),
            ProfileField::Verified => text(&self.verified),
            ProfileField::Region => text(&self.region),
            ProfileField::Followers => num(self.followers),
            ProfileField::Followees => num(self.followees),
            ProfileField::Reciprocal => num(self.reciprocal),
            ProfileField::Tweets => num(self.tweets),
            ProfileField::Retweets => num(self.retweets),
            ProfileField::Ignore => String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ProfileStats {
    pub records: usize,
    /// Numeric fields that were blank or unparseable.
    pub missing_numeric: usize,
}

/// Reads profiles laid out per `schema`.
///
/// With `uids`, node ids come from each record's uid position in the list
/// (or record order when the schema has no uid column), and the record count
/// must equal the list length. Without it, record `i` is node `i`.
pub fn parse_profiles<R: Read>(
    reader: R,
    schema: &ProfileSchema,
    uids: Option<&[String]>,
) -> Result<(Vec<UserProfile>, ProfileStats), IngestError> {
    if !schema.delimiter.is_ascii() {
        return Err(IngestError::Validation(format!("profile delimiter {:?} is not ASCII", schema.delimiter)));
    }
    let mut csv = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .has_headers(schema.has_header)
        .flexible(true)
        .from_reader(reader);
    let uid_index: Option<HashMap<&str, NodeId>> =
        uids.map(|list| list.iter().enumerate().map(|(i, u)| (u.as_str(), i as NodeId)).collect());
    let has_uid_column = schema.fields.contains(&ProfileField::Uid);

    let mut stats = ProfileStats::default();
    let mut profiles = Vec::new();
    for (index, record) in csv.records().enumerate() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(index + 1, |p| p.line() as usize);
            IngestError::parse(line, e.to_string())
        })?;
        let line = record.position().map_or(index + 1, |p| p.line() as usize);
        let mut profile = UserProfile::default();
        for (column, &field) in schema.fields.iter().enumerate() {
            let raw = record.get(column).unwrap_or("").trim();
            if let Some(slot) = profile.numeric_slot(field) {
                *slot = raw.parse().ok();
                if slot.is_none() {
                    stats.missing_numeric += 1;
                }
            } else {
                profile.set_text(field, raw);
            }
        }
        profile.node = match (&uid_index, has_uid_column) {
            (Some(lookup), true) => *lookup.get(profile.uid.as_str()).ok_or_else(|| {
                IngestError::Validation(format!("line {line}: uid `{}` is not in the uid list", profile.uid))
            })?,
            _ => index as NodeId,
        };
        if !has_uid_column {
            profile.uid = match uids {
                Some(list) => list.get(index).cloned().unwrap_or_else(|| index.to_string()),
                None => index.to_string(),
            };
        }
        profiles.push(profile);
    }
    stats.records = profiles.len();
    if let Some(list) = uids {
        if list.len() != profiles.len() {
            return Err(IngestError::Validation(format!(
                "{} profile record(s) but {} uid(s) in the uid list",
                profiles.len(),
                list.len()
            )));
        }
    }
    profiles.sort_by_key(|p| p.node);
    if let Some(pair) = profiles.windows(2).find(|w| w[0].node == w[1].node) {
        return Err(IngestError::Validation(format!("uid `{}` has more than one profile", pair[1].uid)));
    }
    if stats.missing_numeric > 0 {
        log::warn!("{} numeric profile field(s) were blank or unparseable", stats.missing_numeric);
    }
    Ok((profiles, stats))
}

/// Writes profiles in `schema` layout, with a header row when the schema
/// expects one.
pub fn write_profiles<W: Write>(profiles: &[UserProfile], schema: &ProfileSchema, out: W) -> Result<(), IngestError> {
    let mut csv = csv::WriterBuilder::new().delimiter(schema.delimiter as u8).from_writer(out);
    let io = |e: csv::Error| IngestError::Io(e.into());
    if schema.has_header {
        csv.write_record(schema.fields.iter().map(|f| f.column_name())).map_err(io)?;
    }
    for profile in profiles {
        csv.write_record(schema.fields.iter().map(|&f| profile.field_text(f))).map_err(io)?;
    }
    csv.flush()?;
    Ok(())
}

/// Fan/followee counts indexed by node id; nodes without a profile get
/// empty counts.
pub fn follow_counts(profiles: &[UserProfile], node_count: usize) -> Vec<FollowCounts> {
    let mut counts = vec![FollowCounts::default(); node_count];
    for p in profiles {
        if let Some(slot) = counts.get_mut(p.node as usize) {
            *slot = p.follow_counts();
        }
    }
    counts
}
