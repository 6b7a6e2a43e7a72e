use std::collections::VecDeque;

use crate::trajectory::Trajectory;

/// Something queued for training that carries generation version stamps.
pub trait Stamped {
    fn qa_id(&self) -> &str;
    /// Version of the earliest generation; `None` counts as fresh.
    fn earliest_version(&self) -> Option<u64>;
}

impl Stamped for Trajectory {
    fn qa_id(&self) -> &str {
        &self.qa_id
    }

    fn earliest_version(&self) -> Option<u64> {
        Trajectory::earliest_version(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Assembly<T> {
    Ready { groups: Vec<(String, Vec<T>)>, discarded: Vec<T> },
    NotReady { discarded: Vec<T> },
}

impl<T> Assembly<T> {
    pub fn discarded(&self) -> &[T] {
        match self {
            Assembly::Ready { discarded, .. } | Assembly::NotReady { discarded } => discarded,
        }
    }

    pub fn is_ready(&self) -> bool {
        matches!(self, Assembly::Ready { .. })
    }
}

pub(crate) fn version_gap<T: Stamped>(item: &T, current_version: u64) -> u64 {
    item.earliest_version().map_or(0, |v| current_version.saturating_sub(v))
}

/// Drops every queued item whose version gap exceeds `max_staleness`, then
/// takes the oldest `batch_size` survivors grouped by question in order of
/// first appearance. The queue must be in completion order.
pub fn assemble_batch<T: Stamped>(
    queue: &mut VecDeque<T>,
    batch_size: usize,
    current_version: u64,
    max_staleness: u64,
) -> Assembly<T> {
    let mut discarded = Vec::new();
    let mut kept = VecDeque::with_capacity(queue.len());
    for item in queue.drain(..) {
        if version_gap(&item, current_version) > max_staleness {
            discarded.push(item);
        } else {
            kept.push_back(item);
        }
    }
    *queue = kept;
    if batch_size == 0 || queue.len() < batch_size {
        return Assembly::NotReady { discarded };
    }
    let taken: Vec<T> = queue.drain(..batch_size).collect();
    Assembly::Ready { groups: group_by_qa(taken), discarded }
}

pub(crate) fn group_by_qa<T: Stamped>(items: Vec<T>) -> Vec<(String, Vec<T>)> {
    let mut groups: Vec<(String, Vec<T>)> = Vec::new();
    for item in items {
        match groups.iter_mut().find(|(id, _)| id == item.qa_id()) {
            Some((_, members)) => members.push(item),
            None => groups.push((item.qa_id().to_owned(), vec![item])),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    struct Item(&'static str, u64);

    impl Stamped for Item {
        fn qa_id(&self) -> &str {
            self.0
        }
        fn earliest_version(&self) -> Option<u64> {
            Some(self.1)
        }
    }

    #[test]
    fn insufficient_queue_is_not_ready() {
        let mut q: VecDeque<Item> = (0..63).map(|_| Item("a", 0)).collect();
        assert!(!assemble_batch(&mut q, 64, 0, 4).is_ready());
        assert_eq!(q.len(), 63);
    }

    #[test]
    fn full_queue_assembles_fifo() {
        let mut q: VecDeque<Item> = (0..64).map(|i| Item(if i % 2 == 0 { "a" } else { "b" }, 3)).collect();
        match assemble_batch(&mut q, 64, 3, 0) {
            Assembly::Ready { groups, discarded } => {
                assert!(discarded.is_empty());
                assert_eq!(groups.len(), 2);
                assert_eq!(groups[0].0, "a");
                assert_eq!(groups[0].1.len(), 32);
            }
            other => panic!("{other:?}"),
        }
        assert!(q.is_empty());
    }

    #[test]
    fn stale_items_are_discarded() {
        let mut q: VecDeque<Item> = vec![Item("a", 2), Item("b", 3)].into();
        let out = assemble_batch(&mut q, 1, 7, 4);
        assert_eq!(out.discarded(), &[Item("a", 2)]);
        assert!(out.is_ready());
    }
}
