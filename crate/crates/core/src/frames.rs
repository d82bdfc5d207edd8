//! Measurement frames and their properties.
//!
//! A frame is an ordered set of unit vectors spanning C^d; measuring a
//! state against it yields the intensities `|<xi_k|x>|^2`. This module
//! provides the two built-in qubit frames (the SIC-POVM tetrahedron and
//! the six MUB vectors), a text file format for custom frames, and the
//! check that decides whether intensities determine the state uniquely.

use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;
use crate::state::{Ket, StateError};

/// Singular values below this fraction of the largest one count as zero
/// when the kernel of the intensity map is measured.
pub const KERNEL_SV_THRESHOLD: f64 = 1e-10;

const SPAN_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame needs at least {dim} elements to span C^{dim}, got {len}")]
    TooFewElements { dim: usize, len: usize },
    #[error("frame elements span only a rank-{rank} subspace of C^{dim}")]
    DoesNotSpan { rank: usize, dim: usize },
    #[error("element {index} has dimension {got}, expected {expected}")]
    MixedDimensions {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("dimension mismatch: frame lives in C^{frame}, vector in C^{vector}")]
    DimensionMismatch { frame: usize, vector: usize },
    #[error(transparent)]
    State(#[from] StateError),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Ordered list of unit vectors spanning C^d, with a short id label.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    id: String,
    elements: Vec<Ket>,
}

impl Frame {
    pub fn new(id: impl Into<String>, elements: Vec<Ket>) -> Result<Self, FrameError> {
        let id = id.into();
        let dim = elements.first().map_or(0, Ket::dim);
        for (index, e) in elements.iter().enumerate() {
            if e.dim() != dim {
                return Err(FrameError::MixedDimensions {
                    index,
                    got: e.dim(),
                    expected: dim,
                });
            }
        }
        if elements.len() < dim || dim == 0 {
            return Err(FrameError::TooFewElements {
                dim: dim.max(2),
                len: elements.len(),
            });
        }
        // span check: the d x M amplitude matrix must have rank d
        let rows: Vec<Vec<Complex64>> = (0..dim)
            .map(|i| elements.iter().map(|e| e.amplitudes()[i]).collect())
            .collect();
        let rank = linalg::complex_rank(rows, SPAN_RANK_TOL);
        if rank < dim {
            return Err(FrameError::DoesNotSpan { rank, dim });
        }
        Ok(Self { id, elements })
    }

    /// The four SIC-POVM vectors: |0> and three vectors at equal overlap
    /// `|<xi_i|xi_j>|^2 = 1/3` spaced by phase 2 pi/3.
    pub fn sic() -> Self {
        let a = 1.0 / 3.0_f64.sqrt();
        let b = (2.0 / 3.0_f64).sqrt();
        let kets = vec![
            ket2(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            ket2(Complex64::new(a, 0.0), Complex64::new(b, 0.0)),
            ket2(Complex64::new(a, 0.0), Complex64::from_polar(b, 2.0 * PI / 3.0)),
            ket2(Complex64::new(a, 0.0), Complex64::from_polar(b, 4.0 * PI / 3.0)),
        ];
        Self::new("sic", kets).expect("built-in frame is valid")
    }

    /// The six vectors of the three mutually unbiased qubit bases:
    /// Z, X and Y eigenstates in that order.
    pub fn mub() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let kets = vec![
            ket2(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            ket2(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            ket2(Complex64::new(h, 0.0), Complex64::new(h, 0.0)),
            ket2(Complex64::new(h, 0.0), Complex64::new(-h, 0.0)),
            ket2(Complex64::new(h, 0.0), Complex64::new(0.0, h)),
            ket2(Complex64::new(h, 0.0), Complex64::new(0.0, -h)),
        ];
        Self::new("mub", kets).expect("built-in frame is valid")
    }

    /// Built-in frame by id.
    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "sic" => Some(Self::sic()),
            "mub" => Some(Self::mub()),
            _ => None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn dim(&self) -> usize {
        self.elements[0].dim()
    }

    /// Number of elements M.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Ket] {
        &self.elements
    }

    pub fn element(&self, k: usize) -> &Ket {
        &self.elements[k]
    }
}

fn ket2(a: Complex64, b: Complex64) -> Ket {
    Ket::new(vec![a, b]).expect("built-in frame vectors are normalized")
}

/// Intensities `|<xi_k|x>|^2` of a state against every frame element.
pub fn intensity_map(frame: &Frame, x: &Ket) -> Result<Vec<f64>, FrameError> {
    if frame.dim() != x.dim() {
        return Err(FrameError::DimensionMismatch {
            frame: frame.dim(),
            vector: x.dim(),
        });
    }
    Ok(frame
        .elements
        .iter()
        .map(|xi| xi.inner(x).expect("dimensions already checked").norm_sqr())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Injective,
    NotInjective,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Injective => "injective",
            Verdict::NotInjective => "not-injective",
            Verdict::Undetermined => "undetermined",
        })
    }
}

/// Outcome of [`check_injectivity`], with the singular values of the
/// intensity map on Hermitian matrices as diagnostics.
#[derive(Debug, Clone)]
pub struct InjectivityReport {
    pub frame_id: String,
    pub kernel_dimension: usize,
    pub verdict: Verdict,
    pub singular_values: Vec<f64>,
}

/// Decide whether the intensity map of a frame determines states uniquely.
///
/// Builds the real-linear map A: Herm(d) -> R^M, Q -> (<xi_k|Q|xi_k>)_k over
/// a fixed basis of Hermitian matrices — diagonal units first, then the
/// real symmetric pairs in row-major order, then the imaginary
/// antisymmetric pairs — and counts singular values below
/// [`KERNEL_SV_THRESHOLD`] relative to the largest.
///
/// For d = 2 every nonzero Hermitian matrix has rank <= 2, so a trivial
/// kernel is equivalent to injectivity and a nontrivial one refutes it.
/// For d > 2 a trivial kernel is sufficient; otherwise the question would
/// require deciding whether the kernel contains a Hermitian matrix of rank
/// at most 2, which is out of scope, so the verdict is `Undetermined`.
pub fn check_injectivity(frame: &Frame) -> InjectivityReport {
    let d = frame.dim();
    let m = frame.len();
    let n = d * d;
    let mut a = vec![0.0; m * n];
    for (k, xi) in frame.elements.iter().enumerate() {
        let amps = xi.amplitudes();
        let row = &mut a[k * n..(k + 1) * n];
        for i in 0..d {
            row[i] = amps[i].norm_sqr();
        }
        let mut col = d;
        for i in 0..d {
            for j in (i + 1)..d {
                let z = amps[i].conj() * amps[j];
                row[col] = 2.0 * z.re; // symmetric pair E_ij + E_ji
                row[col + d * (d - 1) / 2] = 2.0 * z.im; // -i E_ij + i E_ji
                col += 1;
            }
        }
    }
    let singular_values = linalg::singular_values(&a, m, n);
    let smax = singular_values[0];
    let kernel_dimension = if smax == 0.0 {
        n
    } else {
        singular_values
            .iter()
            .filter(|&&s| s < KERNEL_SV_THRESHOLD * smax)
            .count()
    };
    let verdict = match (kernel_dimension, d) {
        (0, _) => Verdict::Injective,
        (_, 2) => Verdict::NotInjective,
        _ => Verdict::Undetermined,
    };
    InjectivityReport {
        frame_id: frame.id.clone(),
        kernel_dimension,
        verdict,
        singular_values,
    }
}

/// Write a frame as UTF-8 text: a `# id:` comment, a `dim <d>` line, then
/// one line per ket holding 2d whitespace-separated floats
/// (re im re im ...) in shortest round-trip decimal form.
pub fn save_frame(frame: &Frame, path: impl AsRef<Path>) -> Result<(), FrameError> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(&format!("# id: {}\n", frame.id));
    out.push_str(&format!("dim {}\n", frame.dim()));
    for ket in &frame.elements {
        let fields: Vec<String> = ket
            .amplitudes()
            .iter()
            .flat_map(|z| [z.re.to_string(), z.im.to_string()])
            .collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    fs::write(path, out).map_err(|source| FrameError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Parse a frame file written by [`save_frame`] (or by hand in the same
/// format). The id falls back to the file stem when no `# id:` comment is
/// present. Parse and validation failures carry the offending line number.
pub fn load_frame(path: impl AsRef<Path>) -> Result<Frame, FrameError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| FrameError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "frame".to_string());
    parse_frame(&text, &path.display().to_string(), &name)
}

fn parse_frame(text: &str, path: &str, fallback_id: &str) -> Result<Frame, FrameError> {
    let err = |line: usize, message: String| FrameError::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut id: Option<String> = None;
    let mut dim: Option<usize> = None;
    let mut kets: Vec<Ket> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(label) = comment.trim().strip_prefix("id:") {
                if id.is_none() {
                    id = Some(label.trim().to_string());
                }
            }
            continue;
        }
        match dim {
            None => {
                let rest = line
                    .strip_prefix("dim")
                    .ok_or_else(|| err(lineno, format!("expected `dim <d>`, found `{line}`")))?;
                let d: usize = rest
                    .trim()
                    .parse()
                    .map_err(|_| err(lineno, format!("bad dimension `{}`", rest.trim())))?;
                if d < 2 {
                    return Err(err(lineno, format!("dimension must be >= 2, got {d}")));
                }
                dim = Some(d);
            }
            Some(d) => {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 2 * d {
                    return Err(err(
                        lineno,
                        format!("expected {} floats for a C^{d} vector, found {}", 2 * d, fields.len()),
                    ));
                }
                let mut amps = Vec::with_capacity(d);
                for pair in fields.chunks(2) {
                    let re: f64 = pair[0]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad float `{}`", pair[0])))?;
                    let im: f64 = pair[1]
                        .parse()
                        .map_err(|_| err(lineno, format!("bad float `{}`", pair[1])))?;
                    amps.push(Complex64::new(re, im));
                }
                let ket = Ket::new(amps)
                    .map_err(|e| err(lineno, format!("invalid frame vector: {e}")))?;
                kets.push(ket);
            }
        }
    }
    let dim = dim.ok_or_else(|| err(text.lines().count().max(1), "missing `dim <d>` line".into()))?;
    if kets.is_empty() {
        return Err(err(
            text.lines().count().max(1),
            format!("no frame vectors follow the dim {dim} line"),
        ));
    }
    Frame::new(id.unwrap_or_else(|| fallback_id.to_string()), kets)
}
