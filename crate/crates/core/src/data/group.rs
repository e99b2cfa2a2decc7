use std::collections::BTreeMap;

use super::cap::cap_resize;
use super::census::ImageRecord;
use crate::error::{Error, Result};

/// Images that share one capped resolution and can be stacked into a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionGroup {
    pub width: u32,
    pub height: u32,
    pub max_size: u32,
    pub members: Vec<ImageRecord>,
}

impl ResolutionGroup {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Number of batches this group contributes per epoch.
    pub fn batch_count(&self, batch_size: usize) -> usize {
        self.members.len().div_ceil(batch_size)
    }
}

/// Partitions records by their capped `(width, height)`. Groups come back
/// ordered by descending member count, ties broken by resolution.
pub fn group_by_resolution(records: &[ImageRecord], max_size: u32) -> Result<Vec<ResolutionGroup>> {
    if records.is_empty() {
        return Err(Error::InvalidArgument("cannot group an empty record list".into()));
    }
    let mut buckets: BTreeMap<(u32, u32), Vec<ImageRecord>> = BTreeMap::new();
    for r in records {
        buckets
            .entry(cap_resize(r.width, r.height, max_size))
            .or_default()
            .push(r.clone());
    }
    let mut groups: Vec<ResolutionGroup> = buckets
        .into_iter()
        .map(|((width, height), members)| ResolutionGroup {
            width,
            height,
            max_size,
            members,
        })
        .collect();
    groups.sort_by(|a, b| {
        b.members
            .len()
            .cmp(&a.members.len())
            .then((a.width, a.height).cmp(&(b.width, b.height)))
    });
    Ok(groups)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(w: u32, h: u32) -> ImageRecord {
        ImageRecord {
            path: format!("{w}x{h}.png").into(),
            width: w,
            height: h,
        }
    }

    #[test]
    fn capped_sizes_share_a_group() {
        let groups = group_by_resolution(&[rec(256, 128), rec(128, 64)], 128).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!((groups[0].width, groups[0].height), (128, 64));
        assert_eq!(groups[0].len(), 2);
    }

    #[test]
    fn large_squares_collapse_to_one_group() {
        let recs: Vec<_> = [128, 200, 512, 1024].iter().map(|&s| rec(s, s)).collect();
        let groups = group_by_resolution(&recs, 128).unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!((groups[0].width, groups[0].height), (128, 128));
    }

    #[test]
    fn partition_and_ordering() {
        let mut recs = Vec::new();
        for (i, &(w, h)) in [(10, 10), (20, 10), (10, 20), (30, 30), (40, 10), (12, 12), (90, 45)]
            .iter()
            .enumerate()
        {
            for _ in 0..=i {
                recs.push(rec(w, h));
            }
        }
        let groups = group_by_resolution(&recs, 128).unwrap();
        assert_eq!(groups.len(), 7);
        assert_eq!(groups.iter().map(|g| g.len()).sum::<usize>(), recs.len());
        assert!(groups.windows(2).all(|w| w[0].len() >= w[1].len()));
        assert!(group_by_resolution(&[], 128).is_err());
    }
}
