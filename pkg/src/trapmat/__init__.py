"""trapmat: trapdoored pseudorandom matrices with fast application.

Three families — LPN-style (A.B + E, recursed), McEliece-style (P.G.S over
a quasi-cyclic code, stacked), and Kac rotation chains over the reals —
plus worst-case-to-average-case reductions for matrix multiplication,
inversion, linear solving and determinants, a Freivalds verifier, and a
benchmark/statistics CLI (`tdm`).
"""

from .errors import (
    BadDim,
    BadSchedule,
    BadShape,
    FormatError,
    ReductionFailed,
    ShapeError,
    Singular,
    SingularDiag,
    TooLarge,
    TrapmatError,
    ZeroInverse,
)
from .field import FieldContext, is_prime
from .matrices import (
    DenseMatrix,
    DiagonalMatrix,
    FVector,
    PermutationMatrix,
    SparseMatrix,
    dense_matmul,
    dense_matvec,
    sample_bernoulli_sparse,
    sample_nonzero_diagonal,
    sample_permutation,
    sample_uniform,
    sample_uniform_vector,
    sparse_matvec,
)
from .circulant import circulant_matvec, ntt_available
from .freivalds import freivalds_verify
from .reference import ref_det, ref_inverse, ref_matmul, ref_rank, ref_solve
from .rng import Rng
from .opcount import OpCount, count_ops
from .lpn import (
    LpnSchedule,
    LpnTrapdoor,
    lpn_apply,
    lpn_apply_left,
    lpn_apply_matrix,
    lpn_materialize,
    lpn_sample,
    lpn_sample_base,
)
from .mceliece import McElieceTrapdoor, QcGenerator, mce_apply, mce_materialize, mce_sample
from .kac import (
    Rotation,
    RotationChain,
    default_steps,
    kac_apply,
    kac_apply_inverse,
    kac_materialize,
    kac_sample,
)
from .haar import (
    HaarInvariantSampler,
    RealTrapdoor,
    all_ones_diag,
    fixed_diag,
    gaussian_spectrum_sampler,
    goe_spectrum_sampler,
    haar_invariant_sample,
    real_apply,
    real_apply_inverse,
)

__version__ = "0.1.0"
