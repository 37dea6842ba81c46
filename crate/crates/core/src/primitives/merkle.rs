use super::digest::{digest, digest_parts, Digest};

/// Root of the binary Merkle tree over `leaves`.
///
/// Adjacent leaves are paired as `H(left || right)`; an odd node at the end of
/// a level is promoted unchanged. The empty tree has root `H("")` and a single
/// leaf `h` has root `H(h)`.
pub fn merkle_root(leaves: &[Digest]) -> Digest {
    match leaves {
        [] => digest(b""),
        [only] => digest(only.as_bytes()),
        _ => {
            let mut level: Vec<Digest> = leaves.to_vec();
            while level.len() > 1 {
                level = level
                    .chunks(2)
                    .map(|pair| match pair {
                        [l, r] => digest_parts(&[l.as_bytes(), r.as_bytes()]),
                        [odd] => *odd,
                        _ => unreachable!(),
                    })
                    .collect();
            }
            level[0]
        }
    }
}

/// An ordered leaf list together with its root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    leaves: Vec<Digest>,
    root: Digest,
}

impl MerkleTree {
    pub fn new(leaves: Vec<Digest>) -> Self {
        let root = merkle_root(&leaves);
        MerkleTree { leaves, root }
    }

    pub fn root(&self) -> Digest {
        self.root
    }

    pub fn leaves(&self) -> &[Digest] {
        &self.leaves
    }

    pub fn empty_root() -> Digest {
        digest(b"")
    }
}
