//! Full replay and pivot-based fast sync of a fresh node from a source store.

use super::block::{BlockHeader, Verdict};
use super::store::{ChainError, ChainStore};
use crate::primitives::Signature;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyncMode {
    FullReplay,
    FastSync { pivot: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SyncReport {
    pub mode: SyncMode,
    pub headers_downloaded: u64,
    pub blocks_replayed: u64,
}

/// Replays every adopted block of `source` from genesis on a fresh store.
pub fn full_replay(source: &ChainStore) -> Result<(ChainStore, SyncReport), ChainError> {
    let mut node = source.genesis_only();
    let mut replayed = 0;
    for id in &source.main_chain()[1..] {
        let block = source
            .block(id)
            .ok_or_else(|| ChainError::Sync(format!("source has pruned body of {id:?}")))?;
        node.process(block.clone()).map_err(ChainError::Invalid)?;
        replayed += 1;
    }
    Ok((
        node,
        SyncReport {
            mode: SyncMode::FullReplay,
            headers_downloaded: replayed,
            blocks_replayed: replayed,
        },
    ))
}

/// Downloads all headers, pulls the state at `head − pivot_offset`, checks it
/// against that header's state root, then replays full blocks from the pivot
/// onward. Falls back to full replay when the source chain is too short.
pub fn fast_sync(source: &ChainStore, pivot_offset: u64) -> Result<(ChainStore, SyncReport), ChainError> {
    let head_height = source.head_height();
    if head_height <= pivot_offset {
        return full_replay(source);
    }
    let pivot = head_height - pivot_offset;
    let mut node = source.genesis_only();

    let main = source.main_chain();
    if main[0] != node.head() {
        return Err(ChainError::Sync("source genesis differs".into()));
    }
    let mut headers: Vec<(BlockHeader, Signature)> = Vec::with_capacity(pivot as usize);
    let mut expected_parent = main[0];
    for id in &main[1..=pivot as usize] {
        let header = *source.header(id).expect("main chain block is stored");
        let seal = *source.seal(id).expect("main chain block is stored");
        if header.predecessor != expected_parent || header.id() != *id {
            return Err(ChainError::Sync(format!("broken header link at height {}", header.height)));
        }
        expected_parent = *id;
        headers.push((header, seal));
    }

    let pivot_id = main[pivot as usize];
    let pivot_state = source
        .state_at(&pivot_id)
        .map_err(|v| ChainError::Sync(format!("source cannot serve pivot state: {}", v.label())))?;
    if pivot_state.state_root() != headers.last().expect("pivot > 0").0.state_root {
        return Err(ChainError::Sync("pivot state does not match header state root".into()));
    }

    // Each header's proof is checked against the growing chain so the
    // difficulty schedule is available.
    for (header, seal) in headers {
        if !node.proof_ok(&header, &seal) {
            return Err(ChainError::Invalid(Verdict::BadProof));
        }
        node.install_header(header, seal);
    }
    node.finish_snapshot(pivot_state);

    let mut replayed = 0;
    for id in &main[pivot as usize + 1..] {
        let block = source
            .block(id)
            .ok_or_else(|| ChainError::Sync(format!("source has pruned body of {id:?}")))?;
        node.process(block.clone()).map_err(ChainError::Invalid)?;
        replayed += 1;
    }
    Ok((
        node,
        SyncReport {
            mode: SyncMode::FastSync { pivot },
            headers_downloaded: head_height,
            blocks_replayed: replayed,
        },
    ))
}
