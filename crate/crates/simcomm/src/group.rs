use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::thread;

use pqr::Matrix;

use crate::{Result, SimError};

/// Payload of one message: a matrix plus integer tags (not counted as bytes).
#[derive(Clone, Debug, PartialEq)]
pub struct Message {
    pub data: Matrix,
    pub tags: Vec<usize>,
}

impl Message {
    pub fn new(data: Matrix) -> Self {
        Self {
            data,
            tags: Vec::new(),
        }
    }

    pub fn bytes(&self) -> usize {
        8 * self.data.rows() * self.data.cols()
    }
}

struct Hop {
    msg: Message,
    hops: usize,
}

/// Counters collected by the harness over one [`RankGroup::run`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CommStats {
    /// Collective operations (global synchronization points).
    pub syncs: usize,
    /// Sum over collectives of the longest leaf-to-root path, in messages.
    pub message_rounds: usize,
    /// Point-to-point messages, both directions.
    pub messages: usize,
    pub bytes_up: usize,
    pub bytes_down: usize,
    /// Times a node combined a child's contribution into its own.
    pub reduction_ops: usize,
}

#[derive(Default)]
struct Counters {
    syncs: AtomicUsize,
    rounds: AtomicUsize,
    messages: AtomicUsize,
    bytes_up: AtomicUsize,
    bytes_down: AtomicUsize,
    reduction_ops: AtomicUsize,
}

impl Counters {
    fn snapshot(&self) -> CommStats {
        CommStats {
            syncs: self.syncs.load(Ordering::SeqCst),
            message_rounds: self.rounds.load(Ordering::SeqCst),
            messages: self.messages.load(Ordering::SeqCst),
            bytes_up: self.bytes_up.load(Ordering::SeqCst),
            bytes_down: self.bytes_down.load(Ordering::SeqCst),
            reduction_ops: self.reduction_ops.load(Ordering::SeqCst),
        }
    }
}

/// The collective operations a rank can take part in.
///
/// [`RankComm`] implements it over in-process channels; a binding to a real
/// message-passing library would implement the same two collectives.
pub trait Communicator {
    fn rank(&self) -> usize;
    fn size(&self) -> usize;

    /// Reduce towards rank 0, then broadcast the root's result.
    ///
    /// `combine` receives `[own, child contributions in ascending rank order]`
    /// at every rank and returns the message for the parent (the final result at the root).
    fn reduce_broadcast(
        &mut self,
        own: Message,
        combine: &mut dyn FnMut(Vec<Message>) -> Result<Message>,
    ) -> Result<Message>;

    /// Number of collectives this group has started so far.
    fn sync_count(&self) -> usize;

    /// Every rank receives the sum over all ranks.
    fn allreduce_sum(&mut self, local: &Matrix) -> Result<Matrix> {
        let mut add = |parts: Vec<Message>| -> Result<Message> {
            let mut it = parts.into_iter();
            let mut acc = it.next().expect("own contribution").data;
            for m in it {
                acc.add_assign(&m.data)?;
            }
            Ok(Message::new(acc))
        };
        Ok(self.reduce_broadcast(Message::new(local.clone()), &mut add)?.data)
    }
}

/// Binary reduction tree over `size` ranks: rank 0 is the root with the
/// single child 1, rank `i ≥ 1` has children `2i` and `2i+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RankGroup {
    size: usize,
}

impl RankGroup {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(SimError::RankCount {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn parent(&self, rank: usize) -> Option<usize> {
        match rank {
            0 => None,
            r => Some(r / 2),
        }
    }

    pub fn children(&self, rank: usize) -> Vec<usize> {
        let cand = if rank == 0 { vec![1] } else { vec![2 * rank, 2 * rank + 1] };
        cand.into_iter().filter(|&c| c < self.size && c != rank).collect()
    }

    /// Longest path from a rank to the root, `⌈log₂ P⌉`.
    pub fn depth(&self) -> usize {
        (0..self.size).map(|r| self.rank_depth(r)).max().unwrap_or(0)
    }

    fn rank_depth(&self, mut rank: usize) -> usize {
        let mut d = 0;
        while let Some(p) = self.parent(rank) {
            rank = p;
            d += 1;
        }
        d
    }

    /// Runs `f` once per rank, each on its own thread, and returns the
    /// per-rank results in rank order together with the message counters.
    pub fn run<R, F>(&self, f: F) -> Result<(Vec<R>, CommStats)>
    where
        R: Send,
        F: Fn(&mut RankComm) -> Result<R> + Sync,
    {
        let counters = Counters::default();
        let mut comms = self.wire(&counters);
        let results: Vec<Result<R>> = thread::scope(|scope| {
            let handles: Vec<_> = comms
                .drain(..)
                .map(|mut comm| {
                    let f = &f;
                    scope.spawn(move || f(&mut comm))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(SimError::RankPanicked)))
                .collect()
        });
        let mut out = Vec::with_capacity(self.size);
        let mut first_err: Option<SimError> = None;
        for r in results {
            match r {
                Ok(v) => out.push(v),
                Err(e) => {
                    let replace = match &first_err {
                        None => true,
                        Some(SimError::Disconnected) => !matches!(e, SimError::Disconnected),
                        Some(_) => false,
                    };
                    if replace {
                        first_err = Some(e);
                    }
                }
            }
        }
        match first_err {
            Some(e) => Err(e),
            None => Ok((out, counters.snapshot())),
        }
    }

    fn wire<'a>(&self, counters: &'a Counters) -> Vec<RankComm<'a>> {
        let mut up_tx: Vec<Option<Sender<Hop>>> = (0..self.size).map(|_| None).collect();
        let mut up_rx: Vec<Vec<Receiver<Hop>>> = (0..self.size).map(|_| Vec::new()).collect();
        let mut down_tx: Vec<Vec<Sender<Message>>> = (0..self.size).map(|_| Vec::new()).collect();
        let mut down_rx: Vec<Option<Receiver<Message>>> = (0..self.size).map(|_| None).collect();
        for rank in 0..self.size {
            for child in self.children(rank) {
                let (tx, rx) = channel();
                up_tx[child] = Some(tx);
                up_rx[rank].push(rx);
                let (tx, rx) = channel();
                down_tx[rank].push(tx);
                down_rx[child] = Some(rx);
            }
        }
        let mut comms = Vec::with_capacity(self.size);
        for (rank, (((ut, ur), dt), dr)) in up_tx
            .into_iter()
            .zip(up_rx)
            .zip(down_tx)
            .zip(down_rx)
            .enumerate()
        {
            comms.push(RankComm {
                rank,
                size: self.size,
                to_parent: ut,
                from_children: ur,
                to_children: dt,
                from_parent: dr,
                counters,
            });
        }
        comms
    }
}

/// One rank's endpoint of the group's channels.
pub struct RankComm<'a> {
    rank: usize,
    size: usize,
    to_parent: Option<Sender<Hop>>,
    from_children: Vec<Receiver<Hop>>,
    to_children: Vec<Sender<Message>>,
    from_parent: Option<Receiver<Message>>,
    counters: &'a Counters,
}

impl Communicator for RankComm<'_> {
    fn rank(&self) -> usize {
        self.rank
    }

    fn size(&self) -> usize {
        self.size
    }

    fn sync_count(&self) -> usize {
        self.counters.syncs.load(Ordering::SeqCst)
    }

    fn reduce_broadcast(
        &mut self,
        own: Message,
        combine: &mut dyn FnMut(Vec<Message>) -> Result<Message>,
    ) -> Result<Message> {
        if self.rank == 0 {
            self.counters.syncs.fetch_add(1, Ordering::SeqCst);
        }
        let mut parts = vec![own];
        let mut hops = 0;
        for rx in &self.from_children {
            let hop = rx.recv().map_err(|_| SimError::Disconnected)?;
            hops = hops.max(hop.hops);
            parts.push(hop.msg);
        }
        self.counters
            .reduction_ops
            .fetch_add(parts.len() - 1, Ordering::SeqCst);
        let combined = combine(parts)?;

        let result = match (&self.to_parent, &self.from_parent) {
            (Some(tx), Some(rx)) => {
                self.counters.messages.fetch_add(1, Ordering::SeqCst);
                self.counters
                    .bytes_up
                    .fetch_add(combined.bytes(), Ordering::SeqCst);
                tx.send(Hop {
                    msg: combined,
                    hops: hops + 1,
                })
                .map_err(|_| SimError::Disconnected)?;
                rx.recv().map_err(|_| SimError::Disconnected)?
            }
            _ => {
                self.counters.rounds.fetch_add(hops, Ordering::SeqCst);
                combined
            }
        };
        for tx in &self.to_children {
            self.counters.messages.fetch_add(1, Ordering::SeqCst);
            self.counters
                .bytes_down
                .fetch_add(result.bytes(), Ordering::SeqCst);
            tx.send(result.clone()).map_err(|_| SimError::Disconnected)?;
        }
        Ok(result)
    }
}
