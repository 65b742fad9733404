"""Plaintext association-test kernels operating on pooled integer counts.

These four tests (linkage disequilibrium, Hardy-Weinberg equilibrium,
Cochran-Armitage trend, Fisher exact on a 2x3 table) are what the enclave
runs on decrypted totals, and they double as the oracle that the encrypted
pipeline is checked against.  All inputs are exact integer counts; floats
enter only at frequency conversion.

Degenerate inputs (monomorphic loci, empty rows, zero variance) raise
typed errors rather than producing NaN or infinity.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from scipy.special import gammaincc

_MIN_P = 5e-324  # smallest positive double; survival function never returns 0


class TestKind(enum.Enum):
    LD = "ld"
    HWE = "hwe"
    CATT = "catt"
    FET = "fet"

    @classmethod
    def parse(cls, name: str) -> "TestKind":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError("unknown test kind: %r" % name) from None


# Count categories each test aggregates: 4 haplotypes for LD, 3 genotypes
# for HWE, 6 genotype-by-phenotype cells for CATT and FET.
CATEGORY_COUNTS = {TestKind.LD: 4, TestKind.HWE: 3, TestKind.CATT: 6, TestKind.FET: 6}

DEFAULT_CATT_WEIGHTS = (0.0, 1.0, 2.0)


class KernelError(ValueError):
    """A statistical kernel received input it is undefined on."""


class MonomorphicLocusError(KernelError):
    """A marginal allele frequency is 0 or 1, so the statistic divides by zero."""


class DegenerateTableError(KernelError):
    """Empty counts, empty row, or zero variance."""


@dataclass(frozen=True)
class HaplotypeCounts:
    """Counts of the four haplotypes over two bi-allelic loci.

    Ordering: ab, Ab, aB, AB where a/A are the alleles at the first locus
    and b/B at the second (alphabetical within each locus).
    """

    n_ab: int
    n_Ab: int
    n_aB: int
    n_AB: int

    def __post_init__(self):
        for v in (self.n_ab, self.n_Ab, self.n_aB, self.n_AB):
            if v < 0:
                raise ValueError("haplotype counts must be non-negative")

    @property
    def total(self) -> int:
        return self.n_ab + self.n_Ab + self.n_aB + self.n_AB


@dataclass(frozen=True)
class GenotypeCounts:
    """Counts of the three genotypes at one bi-allelic locus (AA, Aa, aa)."""

    n_AA: int
    n_Aa: int
    n_aa: int

    def __post_init__(self):
        for v in (self.n_AA, self.n_Aa, self.n_aa):
            if v < 0:
                raise ValueError("genotype counts must be non-negative")

    @property
    def total(self) -> int:
        return self.n_AA + self.n_Aa + self.n_aa


@dataclass(frozen=True)
class ContingencyTable2x3:
    """Case and control rows over the three genotype columns."""

    case_counts: tuple[int, int, int]
    control_counts: tuple[int, int, int]

    def __post_init__(self):
        if len(self.case_counts) != 3 or len(self.control_counts) != 3:
            raise ValueError("rows must have exactly 3 cells")
        for v in (*self.case_counts, *self.control_counts):
            if v < 0:
                raise ValueError("cell counts must be non-negative")

    @property
    def row_case(self) -> int:
        return sum(self.case_counts)

    @property
    def row_control(self) -> int:
        return sum(self.control_counts)

    @property
    def grand_total(self) -> int:
        return self.row_case + self.row_control

    @property
    def column_totals(self) -> tuple[int, int, int]:
        return tuple(c + r for c, r in zip(self.case_counts, self.control_counts))


@dataclass(frozen=True)
class LdResult:
    d: float
    d_prime: float
    r_squared: float


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float


def chi_square_sf(x: float, df: int) -> float:
    """Chi-square survival function (regularized upper incomplete gamma)."""
    if x < 0:
        raise ValueError("chi-square statistic must be non-negative")
    if df < 1:
        raise ValueError("degrees of freedom must be a positive integer")
    p = float(gammaincc(df / 2.0, x / 2.0))
    return max(p, _MIN_P)


def ld(h: HaplotypeCounts) -> LdResult:
    """Linkage disequilibrium D, D', and r^2 from phased haplotype counts.

    D = p(ab) - p(a)p(b).  D' normalizes by the extreme D the marginals
    allow, with the sign-dependent bound; r^2 is D^2 over the product of
    all four marginal frequencies.
    """
    total = h.total
    if total == 0:
        raise DegenerateTableError("haplotype counts sum to zero")
    p_ab = h.n_ab / total
    p_a = (h.n_ab + h.n_aB) / total   # first-locus allele a
    p_b = (h.n_ab + h.n_Ab) / total   # second-locus allele b
    if p_a in (0.0, 1.0) or p_b in (0.0, 1.0):
        raise MonomorphicLocusError("a marginal allele frequency is 0 or 1")
    d = p_ab - p_a * p_b
    if d > 0:
        d_max = min(p_a * (1 - p_b), (1 - p_a) * p_b)
        d_prime = d / d_max
    elif d < 0:
        d_max = min(p_a * p_b, (1 - p_a) * (1 - p_b))
        d_prime = d / d_max
    else:
        d_prime = 0.0
    r_squared = d * d / (p_a * (1 - p_a) * p_b * (1 - p_b))
    return LdResult(d=d, d_prime=d_prime, r_squared=r_squared)


def hwe(g: GenotypeCounts) -> ChiSquareResult:
    """Pearson goodness-of-fit test against Hardy-Weinberg proportions.

    Expected counts are (n*p^2, 2n*p*q, n*q^2) with p the frequency of the
    first allele; the statistic is referred to chi-square with 1 df.
    """
    n = g.total
    if n == 0:
        raise DegenerateTableError("genotype counts sum to zero")
    p = g.n_AA / n + 0.5 * g.n_Aa / n
    q = 1.0 - p
    if p <= 0.0 or p >= 1.0:
        raise MonomorphicLocusError("allele frequency is 0 or 1; expected counts vanish")
    exp_AA = n * p * p
    exp_Aa = 2 * n * p * q
    exp_aa = n * q * q
    stat = ((g.n_AA - exp_AA) ** 2 / exp_AA
            + (g.n_Aa - exp_Aa) ** 2 / exp_Aa
            + (g.n_aa - exp_aa) ** 2 / exp_aa)
    return ChiSquareResult(statistic=stat, p_value=chi_square_sf(stat, 1))


def catt(t: ContingencyTable2x3,
         weights: Sequence[float] = DEFAULT_CATT_WEIGHTS) -> ChiSquareResult:
    """Cochran-Armitage test for trend with per-genotype weights.

    T = sum_i w_i * (c_i * R - r_i * C) over case row c, control row r with
    row totals C and R.  Var(T) = (C*R/N) * (sum_i w_i^2 n_i (N - n_i)
    - 2 * sum_{i<j} w_i w_j n_i n_j) with column totals n_i.  The statistic
    T^2 / Var(T) is referred to chi-square with 1 df and is invariant under
    affine re-weighting w -> a*w + b (a > 0).
    """
    if len(weights) != 3:
        raise ValueError("need exactly 3 weights")
    C = t.row_case
    R = t.row_control
    N = t.grand_total
    if N == 0:
        raise DegenerateTableError("empty table")
    if C == 0 or R == 0:
        raise DegenerateTableError("need at least one case and one control")
    cols = t.column_totals
    w = [float(x) for x in weights]
    T = sum(w[i] * (t.case_counts[i] * R - t.control_counts[i] * C) for i in range(3))
    var = sum(w[i] ** 2 * cols[i] * (N - cols[i]) for i in range(3))
    var -= 2 * sum(w[i] * w[j] * cols[i] * cols[j]
                   for i in range(3) for j in range(i + 1, 3))
    var *= C * R / N
    if var <= 0:
        raise DegenerateTableError("zero trend variance; column structure is degenerate")
    stat = T * T / var
    return ChiSquareResult(statistic=stat, p_value=chi_square_sf(stat, 1))


def _fet_tables(C: int, R: int, cols: tuple[int, int, int]):
    """Yield all case rows (c1, c2, c3) consistent with the fixed margins."""
    n1, n2, n3 = cols
    for c1 in range(max(0, C - n2 - n3), min(n1, C) + 1):
        rest = C - c1
        for c2 in range(max(0, rest - n3), min(n2, rest) + 1):
            yield c1, c2, rest - c1 - c2


def fet(t: ContingencyTable2x3) -> float:
    """Exact test on the 2x3 table (Freeman-Halton extension).

    Enumerates every table sharing the observed margins, scores each by its
    hypergeometric probability, and returns the total probability of tables
    no more probable than the observed one.  Arithmetic is exact, so ties
    are matched exactly.  Enumeration is O(n1 * n2) tables; fine for the
    count magnitudes this pipeline sees.
    """
    C = t.row_case
    R = t.row_control
    N = t.grand_total
    if N == 0:
        raise DegenerateTableError("empty table")
    if C == 0 or R == 0:
        raise DegenerateTableError("need at least one case and one control")
    cols = t.column_totals
    # P(table) = prod_j C(n_j, c_j) / C(N, C); compare numerators only.
    observed = math.prod(math.comb(cols[i], t.case_counts[i]) for i in range(3))
    tail = 0
    for c1, c2, c3 in _fet_tables(C, R, cols):
        weight = (math.comb(cols[0], c1) * math.comb(cols[1], c2)
                  * math.comb(cols[2], c3))
        if weight <= observed:
            tail += weight
    return float(Fraction(tail, math.comb(N, C)))


def run_test(kind: TestKind, counts: Sequence[int]) -> list[tuple[str, float]]:
    """Dispatch pooled counts in canonical layout order to the right kernel.

    LD: [ab, Ab, aB, AB].  HWE: [AA, Aa, aa].  CATT and FET: the case row
    then the control row, each in genotype order.  Returns the named result
    fields in a fixed order.
    """
    counts = [int(c) for c in counts]
    expected = CATEGORY_COUNTS[kind]
    if len(counts) != expected:
        raise ValueError("%s takes %d counts, got %d" % (kind.value, expected, len(counts)))
    if kind is TestKind.LD:
        res = ld(HaplotypeCounts(*counts))
        return [("d", res.d), ("d_prime", res.d_prime), ("r_squared", res.r_squared)]
    if kind is TestKind.HWE:
        res = hwe(GenotypeCounts(*counts))
        return [("statistic", res.statistic), ("p_value", res.p_value)]
    table = ContingencyTable2x3(tuple(counts[:3]), tuple(counts[3:]))
    if kind is TestKind.CATT:
        res = catt(table)
        return [("statistic", res.statistic), ("p_value", res.p_value)]
    return [("p_value", fet(table))]
