//! Lagrange bases on the reference triangle.
//!
//! Local ordering: vertices 0, 1, 2, then for P2 the midpoints of edges
//! (0,1), (1,2), (2,0). Reference coordinates are (λ1, λ2).

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ElementKind {
    P1Scalar,
    P2Scalar,
    P1Vector2,
    P2Vector2,
}

impl ElementKind {
    pub fn degree(self) -> usize {
        match self {
            ElementKind::P1Scalar | ElementKind::P1Vector2 => 1,
            ElementKind::P2Scalar | ElementKind::P2Vector2 => 2,
        }
    }

    pub fn components(self) -> usize {
        match self {
            ElementKind::P1Scalar | ElementKind::P2Scalar => 1,
            ElementKind::P1Vector2 | ElementKind::P2Vector2 => 2,
        }
    }

    /// Scalar basis functions per triangle.
    pub fn scalar_local(self) -> usize {
        if self.degree() == 1 {
            3
        } else {
            6
        }
    }

    pub fn scalar(self) -> ElementKind {
        if self.degree() == 1 {
            ElementKind::P1Scalar
        } else {
            ElementKind::P2Scalar
        }
    }

    pub fn vector(self) -> ElementKind {
        if self.degree() == 1 {
            ElementKind::P1Vector2
        } else {
            ElementKind::P2Vector2
        }
    }
}

/// Values and reference gradients of the scalar basis underlying `kind`.
///
/// Vector kinds reuse the scalar basis once per component, so the table is
/// the same as for the scalar kind of equal degree.
pub fn shape_functions(kind: ElementKind, bary: [f64; 3]) -> (Vec<f64>, Vec<[f64; 2]>) {
    let [l0, l1, l2] = bary;
    // d/dλ1 and d/dλ2 with λ0 = 1 - λ1 - λ2.
    let chain = |d0: f64, d1: f64, d2: f64| [d1 - d0, d2 - d0];
    match kind.degree() {
        1 => (
            vec![l0, l1, l2],
            vec![chain(1.0, 0.0, 0.0), chain(0.0, 1.0, 0.0), chain(0.0, 0.0, 1.0)],
        ),
        _ => (
            vec![
                l0 * (2.0 * l0 - 1.0),
                l1 * (2.0 * l1 - 1.0),
                l2 * (2.0 * l2 - 1.0),
                4.0 * l0 * l1,
                4.0 * l1 * l2,
                4.0 * l2 * l0,
            ],
            vec![
                chain(4.0 * l0 - 1.0, 0.0, 0.0),
                chain(0.0, 4.0 * l1 - 1.0, 0.0),
                chain(0.0, 0.0, 4.0 * l2 - 1.0),
                chain(4.0 * l1, 4.0 * l0, 0.0),
                chain(0.0, 4.0 * l2, 4.0 * l1),
                chain(4.0 * l2, 0.0, 4.0 * l0),
            ],
        ),
    }
}

/// Basis values and reference gradients tabulated at the points of a rule.
#[derive(Debug, Clone)]
pub struct BasisTable {
    pub n: usize,
    pub values: Vec<Vec<f64>>,
    pub ref_grads: Vec<Vec<[f64; 2]>>,
}

impl BasisTable {
    pub fn new(kind: ElementKind, points: &[[f64; 3]]) -> Self {
        let (values, ref_grads) = points.iter().map(|&p| shape_functions(kind, p)).unzip();
        BasisTable {
            n: kind.scalar_local(),
            values,
            ref_grads,
        }
    }
}
