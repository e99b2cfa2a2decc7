use super::group::ResolutionGroup;
use super::io::load_group_image;
use crate::error::{Error, Result};
use crate::tensor::{Scalar, Tensor};

pub const DEFAULT_BATCH_SIZE: usize = 16;

/// One epoch's batch order: groups are visited round-robin, each visit
/// taking that group's next batch, so consecutive batches differ in size
/// until only one group has batches left.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchPlan {
    batch_size: usize,
    order: Vec<(usize, usize)>,
    cursor: usize,
}

impl BatchPlan {
    pub fn new(groups: &[ResolutionGroup], batch_size: usize) -> Result<Self> {
        if batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be at least 1".into()));
        }
        if groups.is_empty() {
            return Err(Error::InvalidArgument("batch plan needs at least one group".into()));
        }
        let counts: Vec<usize> = groups.iter().map(|g| g.batch_count(batch_size)).collect();
        let rounds = counts.iter().copied().max().unwrap_or(0);
        let mut order = Vec::with_capacity(counts.iter().sum());
        for round in 0..rounds {
            for (group, &n) in counts.iter().enumerate() {
                if round < n {
                    order.push((group, round));
                }
            }
        }
        Ok(BatchPlan {
            batch_size,
            order,
            cursor: 0,
        })
    }

    pub fn batch_size(&self) -> usize {
        self.batch_size
    }

    /// `(group id, batch index within group)` for the whole epoch.
    pub fn order(&self) -> &[(usize, usize)] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.order.len() - self.cursor
    }

    pub fn reset(&mut self) {
        self.cursor = 0;
    }

    /// Advances past the next entry without loading it.
    pub fn next_entry(&mut self) -> Option<(usize, usize)> {
        let entry = self.order.get(self.cursor).copied()?;
        self.cursor += 1;
        Some(entry)
    }
}

/// Stacked same-size images from one group, scaled to `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct Batch<T: Scalar = f32> {
    pub images: Tensor<T>,
    pub group: usize,
    pub index: usize,
}

impl<T: Scalar> Batch<T> {
    /// `(height, width)` of every image in the batch.
    pub fn size(&self) -> (usize, usize) {
        let s = self.images.shape();
        (s[2], s[3])
    }
}

/// Loads the next batch of the plan. `Ok(None)` marks the end of the epoch.
/// A group's last batch holds the remainder and may be smaller than the
/// batch size.
pub fn next_batch<T: Scalar>(plan: &mut BatchPlan, groups: &[ResolutionGroup]) -> Result<Option<Batch<T>>> {
    let Some((group_id, index)) = plan.next_entry() else {
        return Ok(None);
    };
    let group = groups.get(group_id).ok_or_else(|| {
        Error::InvalidArgument(format!("batch plan refers to missing group {group_id}"))
    })?;
    let start = index * plan.batch_size;
    let end = (start + plan.batch_size).min(group.members.len());
    let images = group.members[start..end]
        .iter()
        .map(|r| load_group_image(r, (group.width, group.height)))
        .collect::<Result<Vec<Tensor<T>>>>()?;
    Ok(Some(Batch {
        images: Tensor::stack(&images)?,
        group: group_id,
        index,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ImageRecord;

    fn group(n: usize, w: u32) -> ResolutionGroup {
        ResolutionGroup {
            width: w,
            height: w,
            max_size: 128,
            members: (0..n)
                .map(|i| ImageRecord {
                    path: format!("{i}.png").into(),
                    width: w,
                    height: w,
                })
                .collect(),
        }
    }

    #[test]
    fn two_groups_alternate() {
        let plan = BatchPlan::new(&[group(48, 32), group(40, 16)], 16).unwrap();
        let ids: Vec<_> = plan.order().iter().map(|e| e.0).collect();
        assert_eq!(ids, [0, 1, 0, 1, 0, 1]);
    }

    #[test]
    fn remainder_batch_and_tail() {
        let plan = BatchPlan::new(&[group(20, 32)], 16).unwrap();
        assert_eq!(plan.order(), &[(0, 0), (0, 1)]);
        let plan = BatchPlan::new(&[group(70, 32), group(5, 16)], 16).unwrap();
        let ids: Vec<_> = plan.order().iter().map(|e| e.0).collect();
        assert_eq!(ids, [0, 1, 0, 0, 0, 0]);
    }

    #[test]
    fn rejects_zero_batch() {
        assert!(BatchPlan::new(&[group(3, 8)], 0).is_err());
    }
}
