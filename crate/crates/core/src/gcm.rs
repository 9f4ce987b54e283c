//! Symmetrizable generalized Cartan matrices: validation, minimal
//! symmetrizer, exact type classification.

use num::integer::{gcd, lcm};
use num::rational::Ratio;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GcmError {
    NotSquare { rows: usize, cols: usize },
    Empty,
    LabelCount { labels: usize, size: usize },
    DuplicateLabel { label: i64 },
    BadDiagonal { index: i64, value: i64 },
    PositiveOffDiagonal { row: i64, col: i64, value: i64 },
    BrokenZeroSymmetry { row: i64, col: i64 },
    NotSymmetrizable,
}

impl fmt::Display for GcmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcmError::NotSquare { rows, cols } => {
                write!(f, "matrix has {rows} rows but {cols} columns in row 0")
            }
            GcmError::Empty => write!(f, "empty matrix"),
            GcmError::LabelCount { labels, size } => {
                write!(f, "{labels} labels for a {size}x{size} matrix")
            }
            GcmError::DuplicateLabel { label } => write!(f, "duplicate index label {label}"),
            GcmError::BadDiagonal { index, value } => {
                write!(f, "diagonal entry at index {index} is {value}, expected 2")
            }
            GcmError::PositiveOffDiagonal { row, col, value } => {
                write!(f, "off-diagonal entry ({row}, {col}) is {value} > 0")
            }
            GcmError::BrokenZeroSymmetry { row, col } => {
                write!(f, "entry ({row}, {col}) is zero but ({col}, {row}) is not")
            }
            GcmError::NotSymmetrizable => write!(f, "matrix admits no positive symmetrizer"),
        }
    }
}

impl std::error::Error for GcmError {}

/// A validated symmetrizable GCM with its minimal positive integer
/// symmetrizer: `r_i a_ij = r_j a_ji`, per-component gcd 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GCMatrix {
    labels: Vec<i64>,
    entries: Vec<Vec<i64>>,
    symmetrizer: Vec<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum TypeTag {
    Finite,
    Affine,
    Indefinite,
}

impl fmt::Display for TypeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TypeTag::Finite => write!(f, "Finite"),
            TypeTag::Affine => write!(f, "Affine"),
            TypeTag::Indefinite => write!(f, "Indefinite"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GCMType {
    pub tag: TypeTag,
    pub label: Option<String>,
}

pub fn validate_gcm(entries: Vec<Vec<i64>>) -> Result<GCMatrix, GcmError> {
    let labels = (0..entries.len() as i64).collect();
    validate_gcm_labeled(labels, entries)
}

pub fn validate_gcm_labeled(
    labels: Vec<i64>,
    entries: Vec<Vec<i64>>,
) -> Result<GCMatrix, GcmError> {
    let n = entries.len();
    if n == 0 {
        return Err(GcmError::Empty);
    }
    for row in &entries {
        if row.len() != n {
            return Err(GcmError::NotSquare {
                rows: n,
                cols: row.len(),
            });
        }
    }
    if labels.len() != n {
        return Err(GcmError::LabelCount {
            labels: labels.len(),
            size: n,
        });
    }
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(GcmError::DuplicateLabel { label: *l });
        }
    }
    for i in 0..n {
        if entries[i][i] != 2 {
            return Err(GcmError::BadDiagonal {
                index: labels[i],
                value: entries[i][i],
            });
        }
        for j in 0..n {
            if i == j {
                continue;
            }
            if entries[i][j] > 0 {
                return Err(GcmError::PositiveOffDiagonal {
                    row: labels[i],
                    col: labels[j],
                    value: entries[i][j],
                });
            }
            if entries[i][j] == 0 && entries[j][i] != 0 {
                return Err(GcmError::BrokenZeroSymmetry {
                    row: labels[i],
                    col: labels[j],
                });
            }
        }
    }
    let symmetrizer = minimal_symmetrizer(&entries)?;
    Ok(GCMatrix {
        labels,
        entries,
        symmetrizer,
    })
}

/// Solve `r_i a_ij = r_j a_ji` over positive rationals along a spanning tree
/// of each component, check the remaining edges, and clear denominators to
/// the coprime positive integer choice.
fn minimal_symmetrizer(a: &[Vec<i64>]) -> Result<Vec<i64>, GcmError> {
    let n = a.len();
    let mut r: Vec<Option<Ratio<i64>>> = vec![None; n];
    for start in 0..n {
        if r[start].is_some() {
            continue;
        }
        let mut comp = vec![start];
        r[start] = Some(Ratio::from_integer(1));
        let mut queue = vec![start];
        while let Some(i) = queue.pop() {
            for j in 0..n {
                if i == j || a[i][j] == 0 {
                    continue;
                }
                let forced = r[i].unwrap() * Ratio::new(a[i][j], a[j][i]);
                match r[j] {
                    None => {
                        r[j] = Some(forced);
                        comp.push(j);
                        queue.push(j);
                    }
                    Some(have) => {
                        if have != forced {
                            return Err(GcmError::NotSymmetrizable);
                        }
                    }
                }
            }
        }
        let scale = comp
            .iter()
            .map(|&i| *r[i].unwrap().denom())
            .fold(1, lcm);
        let ints: Vec<i64> = comp
            .iter()
            .map(|&i| (r[i].unwrap() * Ratio::from_integer(scale)).to_integer())
            .collect();
        let g = ints.iter().copied().fold(0, gcd);
        for (&i, &v) in comp.iter().zip(&ints) {
            r[i] = Some(Ratio::from_integer(v / g));
        }
    }
    Ok(r.into_iter().map(|x| x.unwrap().to_integer()).collect())
}

impl GCMatrix {
    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn entries(&self) -> &[Vec<i64>] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.entries[i][j]
    }

    pub fn symmetrizer(&self) -> &[i64] {
        &self.symmetrizer
    }

    /// `B = diag(r) A`, symmetric by construction.
    pub fn symmetrized(&self) -> Vec<Vec<i64>> {
        self.entries
            .iter()
            .zip(&self.symmetrizer)
            .map(|(row, &r)| row.iter().map(|&x| r * x).collect())
            .collect()
    }

    /// Connected components of the Dynkin diagram, each sorted.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = Vec::new();
            let mut queue = vec![start];
            seen[start] = true;
            while let Some(i) = queue.pop() {
                comp.push(i);
                for j in 0..n {
                    if !seen[j] && i != j && self.entries[i][j] != 0 {
                        seen[j] = true;
                        queue.push(j);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn is_indecomposable(&self) -> bool {
        self.components().len() == 1
    }

    /// Principal submatrix on the given (position) indices.
    pub fn principal(&self, idx: &[usize]) -> GCMatrix {
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        let entries = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.entries[i][j]).collect())
            .collect();
        validate_gcm_labeled(labels, entries).expect("submatrix of a valid GCM")
    }

    /// Simultaneous row/column permutation: position `i` of the result is
    /// position `perm[i]` of the original.
    pub fn permuted(&self, perm: &[usize]) -> GCMatrix {
        assert_eq!(perm.len(), self.size());
        let labels = perm.iter().map(|&i| self.labels[i]).collect();
        let entries = perm
            .iter()
            .map(|&i| perm.iter().map(|&j| self.entries[i][j]).collect())
            .collect();
        let symmetrizer = perm.iter().map(|&i| self.symmetrizer[i]).collect();
        GCMatrix {
            labels,
            entries,
            symmetrizer,
        }
    }

    /// Exact leading principal minors of the symmetrized matrix.
    pub fn leading_minors(&self) -> Vec<i128> {
        let b = self.symmetrized();
        (1..=self.size())
            .map(|k| {
                let sub: Vec<Vec<i128>> = b[..k]
                    .iter()
                    .map(|row| row[..k].iter().map(|&x| x as i128).collect())
                    .collect();
                bareiss_det(sub)
            })
            .collect()
    }
}

impl fmt::Display for GCMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.entries {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}

/// Fraction-free determinant (Bareiss), exact over integers.
fn bareiss_det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            let Some(p) = (k + 1..n).find(|&r| m[r][k] != 0) else {
                return 0;
            };
            m.swap(k, p);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
            m[i][k] = 0;
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

fn indecomposable_tag(m: &GCMatrix) -> TypeTag {
    let minors = m.leading_minors();
    let n = minors.len();
    if minors.iter().all(|&d| d > 0) {
        TypeTag::Finite
    } else if minors[..n - 1].iter().all(|&d| d > 0) && minors[n - 1] == 0 {
        TypeTag::Affine
    } else {
        TypeTag::Indefinite
    }
}

/// Type classification with catalogue label when one matches. Decomposable
/// input gets the positive-(semi)definiteness trichotomy of the whole form
/// and a `" (+) "`-joined per-component label.
pub fn classify_type(m: &GCMatrix) -> GCMType {
    let comps = m.components();
    let mut tags = Vec::new();
    let mut labels = Vec::new();
    for comp in &comps {
        let sub = if comps.len() == 1 {
            m.clone()
        } else {
            m.principal(comp)
        };
        let tag = indecomposable_tag(&sub);
        let label = match tag {
            TypeTag::Indefinite => None,
            _ => crate::catalogue::label_of(&sub),
        };
        tags.push(tag);
        labels.push(label);
    }
    let tag = if tags.iter().all(|&t| t == TypeTag::Finite) {
        TypeTag::Finite
    } else if tags.iter().all(|&t| t != TypeTag::Indefinite) {
        TypeTag::Affine
    } else {
        TypeTag::Indefinite
    };
    let label = if labels.iter().all(|l| l.is_some()) {
        Some(
            labels
                .into_iter()
                .map(|l| l.unwrap())
                .collect::<Vec<_>>()
                .join(" (+) "),
        )
    } else {
        None
    };
    GCMType { tag, label }
}
