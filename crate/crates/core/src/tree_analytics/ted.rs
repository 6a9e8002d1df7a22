//! Zhang–Shasha ordered tree edit distance with unit costs.

use super::LabeledTree;

struct Postorder {
    labels: Vec<u8>,
    /// Postorder index of the leftmost leaf under each node.
    lml: Vec<usize>,
    keyroots: Vec<usize>,
}

fn postorder(t: &LabeledTree) -> Postorder {
    let n = t.len();
    let mut labels = Vec::with_capacity(n);
    let mut lml = Vec::with_capacity(n);
    let mut index = vec![0usize; n];
    // (node, next child position)
    let mut stack = vec![(LabeledTree::ROOT, 0usize)];
    while let Some(top) = stack.last_mut() {
        let (node, next) = *top;
        let kids = t.children(node);
        if next < kids.len() {
            top.1 += 1;
            stack.push((kids[next], 0));
            continue;
        }
        stack.pop();
        let post = labels.len();
        index[node] = post;
        labels.push(t.label(node) as u8);
        lml.push(match kids.first() {
            Some(&first) => lml[index[first]],
            None => post,
        });
    }
    let mut keyroots = Vec::new();
    for i in 0..n {
        if (i + 1..n).all(|j| lml[j] != lml[i]) {
            keyroots.push(i);
        }
    }
    Postorder {
        labels,
        lml,
        keyroots,
    }
}

/// Minimum number of unit-cost node insertions, deletions and relabelings
/// turning `a` into `b`.
pub fn tree_edit_distance(a: &LabeledTree, b: &LabeledTree) -> usize {
    let pa = postorder(a);
    let pb = postorder(b);
    let (n, m) = (pa.labels.len(), pb.labels.len());
    let mut td = vec![0usize; n * m];
    let mut fd = vec![0usize; (n + 1) * (m + 1)];
    let w = m + 1;
    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let (li, lj) = (pa.lml[i], pb.lml[j]);
            let (ri, rj) = (i - li + 1, j - lj + 1);
            fd[0] = 0;
            for x in 1..=ri {
                fd[x * w] = fd[(x - 1) * w] + 1;
            }
            for y in 1..=rj {
                fd[y] = fd[y - 1] + 1;
            }
            for x in 1..=ri {
                let di = li + x - 1;
                for y in 1..=rj {
                    let dj = lj + y - 1;
                    let del = fd[(x - 1) * w + y] + 1;
                    let ins = fd[x * w + y - 1] + 1;
                    let v = if pa.lml[di] == li && pb.lml[dj] == lj {
                        let relabel = usize::from(pa.labels[di] != pb.labels[dj]);
                        let v = del.min(ins).min(fd[(x - 1) * w + y - 1] + relabel);
                        td[di * m + dj] = v;
                        v
                    } else {
                        let px = pa.lml[di] - li;
                        let py = pb.lml[dj] - lj;
                        del.min(ins).min(fd[px * w + py] + td[di * m + dj])
                    };
                    fd[x * w + y] = v;
                }
            }
        }
    }
    td[(n - 1) * m + (m - 1)]
}
