"""Statistical randomness checks for key files and intercepted ciphertexts.

Implements the frequency (monobit) and runs tests with P-value reporting,
the three classical binary-sequence postulates (balance, geometric
run-length decay, delta-like autocorrelation), and the pass-proportion
bookkeeping used when a corpus is split into many sequences.

Bits are always expanded from bytes MSB-first.  The complementary error
function is evaluated via ``math.erfc`` (the platform C library), which is
correctly rounded to well below the 1e-10 relative error the P-value
contract needs; its contract is pinned by tests.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import LagOutOfRange, TooShort

# Smallest sequence the NIST-style tests accept by default.  Unit tests may
# lower this to force the closed-form formulas on tiny hand-checked inputs.
MIN_TEST_BITS = 100

DEFAULT_ALPHA = 0.01


class BitSequence:
    """An ordered 0/1 sequence backed by a numpy uint8 array."""

    __slots__ = ("bits",)

    def __init__(self, bits) -> None:
        arr = np.ascontiguousarray(bits, dtype=np.uint8)
        if arr.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if arr.size < 1:
            raise ValueError("a bit sequence has at least one bit")
        if arr.max() > 1:
            raise ValueError("bits must be 0 or 1")
        self.bits = arr

    @classmethod
    def from_bytes(cls, data: bytes) -> "BitSequence":
        """Expand bytes to bits, most significant bit first."""
        if len(data) < 1:
            raise ValueError("need at least one byte")
        return cls(np.unpackbits(np.frombuffer(data, dtype=np.uint8)))

    @property
    def n(self) -> int:
        return self.bits.size

    @property
    def ones(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __len__(self) -> int:
        return self.bits.size


@dataclass(frozen=True)
class TestResult:
    """One statistical test's verdict; passes iff p_value >= alpha."""

    __test__ = False  # not a pytest case despite the name

    test_name: str
    n: int
    statistic: float
    p_value: float
    alpha: float = DEFAULT_ALPHA
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.p_value >= self.alpha


def _require_length(seq: BitSequence, min_bits: int) -> None:
    if seq.n < min_bits:
        raise TooShort(f"test needs at least {min_bits} bits, got {seq.n}")


def monobit_frequency(seq: BitSequence, alpha: float = DEFAULT_ALPHA,
                      min_bits: int = MIN_TEST_BITS) -> TestResult:
    """Frequency test: are ones and zeros balanced?

    statistic s = |#ones - #zeros| / sqrt(n),  P = erfc(s / sqrt(2)).
    """
    _require_length(seq, min_bits)
    n = seq.n
    s = abs(2 * seq.ones - n) / math.sqrt(n)
    p = math.erfc(s / math.sqrt(2))
    return TestResult("frequency", n, s, p, alpha)


def count_runs(seq: BitSequence) -> int:
    """Number of maximal same-bit blocks, counted in one pass."""
    return int(np.count_nonzero(np.diff(seq.bits))) + 1


def nist_runs(seq: BitSequence, alpha: float = DEFAULT_ALPHA,
              min_bits: int = MIN_TEST_BITS) -> TestResult:
    """Runs test: is the number of runs consistent with independence?

    With pi the ones-proportion and V the run count,
    P = erfc(|V - 2*n*pi*(1-pi)| / (2*sqrt(2n)*pi*(1-pi))).
    Requires |pi - 1/2| < 2/sqrt(n); otherwise the test is not applicable
    and reported as a failure with p = 0.
    """
    _require_length(seq, min_bits)
    n = seq.n
    pi = seq.ones / n
    v = count_runs(seq)
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return TestResult("runs", n, float(v), 0.0, alpha,
                          note="not applicable: ones-proportion too far from 1/2")
    p = math.erfc(abs(v - 2.0 * n * pi * (1.0 - pi))
                  / (2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)))
    return TestResult("runs", n, float(v), p, alpha)


@dataclass(frozen=True)
class BalanceResult:
    """Ones-proportion and its absolute deviation from one half."""

    n: int
    ones: int
    proportion: float
    deviation: float


def golomb_balance(seq: BitSequence) -> BalanceResult:
    ones = seq.ones
    p = ones / seq.n
    return BalanceResult(seq.n, ones, p, abs(p - 0.5))


def run_length_histogram(seq: BitSequence) -> dict:
    """Histogram {run length: count} over all maximal runs."""
    bits = seq.bits
    change = np.flatnonzero(np.diff(bits)) + 1
    edges = np.concatenate(([0], change, [bits.size]))
    lengths = np.diff(edges)
    counts = np.bincount(lengths)
    return {int(length): int(c) for length, c in enumerate(counts) if c}


@dataclass(frozen=True)
class RunLengthResult:
    """Run-length histogram plus the geometric-decay verdict.

    For each checked length l, the fraction of runs of that length must
    lie within 2**-l +- 3*sqrt(2**-l * (1 - 2**-l) / R), R = total runs.
    Lengths 1 .. floor(log2(R)) - 2 are checked.
    """

    histogram: dict
    total_runs: int
    max_checked: int
    geometric_ok: bool
    worst_excess: float  # largest |fraction - expected| / tolerance seen


def golomb_run_lengths(seq: BitSequence, min_bits: int = MIN_TEST_BITS) -> RunLengthResult:
    _require_length(seq, min_bits)
    histogram = run_length_histogram(seq)
    total = sum(histogram.values())
    max_checked = max(int(math.log2(total)) - 2, 0)
    ok = True
    worst = 0.0
    for length in range(1, max_checked + 1):
        expected = 2.0 ** -length
        tol = 3.0 * math.sqrt(expected * (1.0 - expected) / total)
        fraction = histogram.get(length, 0) / total
        excess = abs(fraction - expected) / tol
        worst = max(worst, excess)
        if excess > 1.0:
            ok = False
    return RunLengthResult(histogram, total, max_checked, ok, worst)


@dataclass
class AutocorrSeries:
    """Normalized autocorrelation over lags -T..T.

    C(0) is exactly 1 and C(-t) == C(t) by construction; values use the
    lag-corrected denominator n - |t|.
    """

    n: int
    lags: np.ndarray
    values: np.ndarray

    @property
    def max_lag(self) -> int:
        return int(self.lags[-1])

    def c(self, tau: int) -> float:
        t = abs(int(tau))
        if t > self.max_lag:
            raise LagOutOfRange(f"lag {tau} outside computed range +-{self.max_lag}")
        return float(self.values[self.max_lag + t])

    def fraction_within_bound(self, k: float = 4.0) -> float:
        """Fraction of positive lags with |C(t)| <= k / sqrt(n - t)."""
        taus = np.arange(1, self.max_lag + 1)
        bound = k / np.sqrt(self.n - taus)
        positive = self.values[self.max_lag + 1:]
        return float(np.count_nonzero(np.abs(positive) <= bound) / taus.size)


def autocorrelation(seq: BitSequence, max_lag: int) -> AutocorrSeries:
    """C(t) = (1/(n-|t|)) * sum_i x_i x_{i+|t|} with x = 2b - 1."""
    n = seq.n
    if not 0 < max_lag < n:
        raise LagOutOfRange(f"max_lag must be in (0, {n}), got {max_lag}")
    x = seq.bits.astype(np.float64) * 2.0 - 1.0
    positive = np.empty(max_lag + 1)
    positive[0] = 1.0
    for tau in range(1, max_lag + 1):
        # Products are +-1, so the float64 dot is exact.
        positive[tau] = np.dot(x[:-tau], x[tau:]) / (n - tau)
    lags = np.arange(-max_lag, max_lag + 1)
    values = np.concatenate((positive[:0:-1], positive))
    return AutocorrSeries(n, lags, values)


@dataclass(frozen=True)
class ProportionResult:
    """Pass proportion across sequences against its acceptance interval.

    The interval is (1 - alpha) +- 3*sqrt(alpha*(1 - alpha)/m); the upper
    end may exceed 1, meaning a clean sweep is acceptable.
    """

    m: int
    passed: int
    proportion: float
    alpha: float
    lower: float
    upper: float

    @property
    def ok(self) -> bool:
        return self.proportion >= self.lower


def pass_proportion(results, alpha: float | None = None) -> ProportionResult:
    results = list(results)
    if not results:
        raise ValueError("need at least one result")
    if alpha is None:
        alphas = {r.alpha for r in results}
        if len(alphas) != 1:
            raise ValueError(f"mixed alphas {sorted(alphas)}; pass alpha explicitly")
        alpha = alphas.pop()
    m = len(results)
    passed = sum(1 for r in results if r.passed)
    margin = 3.0 * math.sqrt(alpha * (1.0 - alpha) / m)
    return ProportionResult(m, passed, passed / m, alpha,
                            (1.0 - alpha) - margin, (1.0 - alpha) + margin)


def results_csv(results) -> str:
    """CSV report: test, n, statistic, p_value, alpha, pass."""
    lines = ["test,n,statistic,p_value,alpha,pass"]
    for r in results:
        lines.append(
            f"{r.test_name},{r.n},{r.statistic:.10g},{r.p_value:.10g},"
            f"{r.alpha:g},{str(r.passed).lower()}"
        )
    return "\n".join(lines) + "\n"


def results_json(results) -> str:
    """Structured key/value report for the same results."""
    payload = [
        {
            "test": r.test_name,
            "n": r.n,
            "statistic": r.statistic,
            "p_value": r.p_value,
            "alpha": r.alpha,
            "pass": r.passed,
            "note": r.note,
        }
        for r in results
    ]
    return json.dumps(payload, indent=2) + "\n"


def autocorr_csv(series: AutocorrSeries) -> str:
    """CSV of the full symmetric series: tau, c."""
    lines = ["tau,c"]
    for tau, c in zip(series.lags, series.values):
        lines.append(f"{int(tau)},{c:.10g}")
    return "\n".join(lines) + "\n"
