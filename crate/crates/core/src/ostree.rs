//! Order-statistics set backed by an arena treap.
//!
//! Every node carries its subtree size so that the 1-based position of a key
//! and the k-th smallest key are both found in logarithmic expected time.

const NIL: u32 = u32::MAX;

#[derive(Clone, Debug)]
struct Node<T> {
    key: T,
    prio: u64,
    left: u32,
    right: u32,
    size: u32,
}

#[derive(Clone, Debug)]
pub struct OrderStatSet<T> {
    nodes: Vec<Node<T>>,
    free: Vec<u32>,
    root: u32,
    rng: u64,
}

impl<T: Ord + Copy> Default for OrderStatSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Ord + Copy> OrderStatSet<T> {
    pub fn new() -> Self {
        OrderStatSet {
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            rng: 0x9E37_79B9_7F4A_7C15,
        }
    }

    pub fn len(&self) -> usize {
        self.size(self.root) as usize
    }

    fn size(&self, t: u32) -> u32 {
        if t == NIL {
            0
        } else {
            self.nodes[t as usize].size
        }
    }

    fn pull(&mut self, t: u32) {
        let (l, r) = {
            let n = &self.nodes[t as usize];
            (n.left, n.right)
        };
        self.nodes[t as usize].size = 1 + self.size(l) + self.size(r);
    }

    fn next_prio(&mut self) -> u64 {
        // xorshift64*
        let mut x = self.rng;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.rng = x;
        x.wrapping_mul(0x2545_F491_4F6C_DD1D)
    }

    fn alloc(&mut self, key: T) -> u32 {
        let prio = self.next_prio();
        let node = Node {
            key,
            prio,
            left: NIL,
            right: NIL,
            size: 1,
        };
        if let Some(i) = self.free.pop() {
            self.nodes[i as usize] = node;
            i
        } else {
            self.nodes.push(node);
            (self.nodes.len() - 1) as u32
        }
    }

    /// Splits `t` into (< key, >= key).
    fn split(&mut self, t: u32, key: &T) -> (u32, u32) {
        if t == NIL {
            return (NIL, NIL);
        }
        if self.nodes[t as usize].key < *key {
            let r = self.nodes[t as usize].right;
            let (a, b) = self.split(r, key);
            self.nodes[t as usize].right = a;
            self.pull(t);
            (t, b)
        } else {
            let l = self.nodes[t as usize].left;
            let (a, b) = self.split(l, key);
            self.nodes[t as usize].left = b;
            self.pull(t);
            (a, t)
        }
    }

    fn merge(&mut self, a: u32, b: u32) -> u32 {
        if a == NIL {
            return b;
        }
        if b == NIL {
            return a;
        }
        if self.nodes[a as usize].prio > self.nodes[b as usize].prio {
            let ar = self.nodes[a as usize].right;
            let m = self.merge(ar, b);
            self.nodes[a as usize].right = m;
            self.pull(a);
            a
        } else {
            let bl = self.nodes[b as usize].left;
            let m = self.merge(a, bl);
            self.nodes[b as usize].left = m;
            self.pull(b);
            b
        }
    }

    fn find(&self, key: &T) -> u32 {
        let mut t = self.root;
        while t != NIL {
            let n = &self.nodes[t as usize];
            match key.cmp(&n.key) {
                std::cmp::Ordering::Less => t = n.left,
                std::cmp::Ordering::Greater => t = n.right,
                std::cmp::Ordering::Equal => return t,
            }
        }
        NIL
    }

    pub fn contains(&self, key: &T) -> bool {
        self.find(key) != NIL
    }

    /// Returns false if the key was already present.
    pub fn insert(&mut self, key: T) -> bool {
        if self.contains(&key) {
            return false;
        }
        let node = self.alloc(key);
        let root = self.root;
        let (a, b) = self.split(root, &key);
        let left = self.merge(a, node);
        self.root = self.merge(left, b);
        true
    }

    pub fn remove(&mut self, key: &T) -> bool {
        let t = self.find(key);
        if t == NIL {
            return false;
        }
        let root = self.root;
        let (a, rest) = self.split(root, key);
        // `rest` starts with `key`; peel the minimum off.
        let (mid, b) = self.split_first(rest);
        debug_assert_eq!(mid, t);
        self.free.push(mid);
        self.root = self.merge(a, b);
        true
    }

    fn split_first(&mut self, t: u32) -> (u32, u32) {
        let l = self.nodes[t as usize].left;
        if l == NIL {
            let r = self.nodes[t as usize].right;
            self.nodes[t as usize].right = NIL;
            self.nodes[t as usize].size = 1;
            return (t, r);
        }
        let (first, rest) = self.split_first(l);
        self.nodes[t as usize].left = rest;
        self.pull(t);
        (first, t)
    }

    /// 1-based position of `key`, if present.
    pub fn rank(&self, key: &T) -> Option<usize> {
        let mut t = self.root;
        let mut before = 0usize;
        while t != NIL {
            let n = &self.nodes[t as usize];
            match key.cmp(&n.key) {
                std::cmp::Ordering::Less => t = n.left,
                std::cmp::Ordering::Greater => {
                    before += self.size(n.left) as usize + 1;
                    t = n.right;
                }
                std::cmp::Ordering::Equal => {
                    return Some(before + self.size(n.left) as usize + 1);
                }
            }
        }
        None
    }

    /// The element at 1-based position `k`.
    pub fn kth(&self, k: usize) -> Option<T> {
        if k == 0 || k > self.len() {
            return None;
        }
        let mut k = k as u32;
        let mut t = self.root;
        loop {
            let n = &self.nodes[t as usize];
            let ls = self.size(n.left);
            if k <= ls {
                t = n.left;
            } else if k == ls + 1 {
                return Some(n.key);
            } else {
                k -= ls + 1;
                t = n.right;
            }
        }
    }

    /// The first `k` elements in order (fewer if the set is smaller).
    pub fn prefix(&self, k: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(k.min(self.len()));
        self.collect_prefix(self.root, k, &mut out);
        out
    }

    fn collect_prefix(&self, t: u32, k: usize, out: &mut Vec<T>) {
        if t == NIL || out.len() >= k {
            return;
        }
        let n = &self.nodes[t as usize];
        self.collect_prefix(n.left, k, out);
        if out.len() < k {
            out.push(n.key);
            self.collect_prefix(n.right, k, out);
        }
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.prefix(usize::MAX)
    }
}
