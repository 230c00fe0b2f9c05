"""Slicing sequences, derived constants, lower-bound envelopes, and
lifespan-bound formulas, in overflow-safe log-domain arithmetic.

The blow-up machinery iterates two integral inequalities along the
characteristic line t - z = R and produces a j-indexed family of lower
bounds for the wave-component functional V(R+z, z):

  subcritical (theta > 0):   V >= C_j (R+z)^{-alpha_j} (z - L_j R)^{beta_j},
  critical (theta = 0):      V >= K_j (ln(z / (Lambda_j R)))^{gamma_j}.

C_j and K_j grow doubly exponentially, so everything is carried as
ln C_j / (pq)^j (a convergent scaled sequence); (pq)^j is never
materialized inside the recursions and all scaled evaluations stay finite
for j <= 500.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DomainError, ValidationError
from .simulate import ModelParams

__all__ = [
    "CriticalityIndex",
    "theta",
    "FrameConstants",
    "default_frame_constants",
    "SubcriticalSequences",
    "CriticalSequences",
    "subcritical_sequences",
    "critical_sequences",
    "lower_bound_envelope",
    "log_lower_bound_envelope",
    "LifespanBound",
    "lifespan_bound",
    "ClosedFormReport",
    "verify_closed_forms",
    "sequence_table",
]

_CRITICAL_TOL = 1e-14


@dataclass(frozen=True)
class CriticalityIndex:
    """theta = 1/(pq-1) - (n-1)/2 and its sign classification."""

    value: float

    @property
    def classification(self) -> str:
        if abs(self.value) <= _CRITICAL_TOL:
            return "critical"
        return "subcritical" if self.value > 0 else "supercritical"

    @property
    def in_scope(self) -> bool:
        """Whether the blow-up machinery applies (theta >= 0)."""
        return self.value > 0 or abs(self.value) <= _CRITICAL_TOL


def theta(n: int, p: float, q: float) -> CriticalityIndex:
    """Criticality index of the exponent pair (p, q) in dimension n."""
    if n < 1 or int(n) != n:
        raise ValidationError(f"n must be a positive integer, got {n}")
    if not (p > 1 and q > 1 and math.isfinite(p) and math.isfinite(q)):
        raise ValidationError(f"exponents must satisfy p, q > 1, got p={p}, q={q}")
    return CriticalityIndex(1.0 / (p * q - 1.0) - (n - 1) / 2.0)


@dataclass(frozen=True)
class FrameConstants:
    """Multiplicative constants of the two iteration-frame inequalities."""

    C: float
    K: float

    def __post_init__(self) -> None:
        if not (self.C > 0 and self.K > 0):
            raise ValidationError("frame constants must be positive")


def default_frame_constants(params: ModelParams) -> FrameConstants:
    """Pinned n=1 constants C = (1/2)(2R)^{1-p}, K = (1/2)(2R)^{1-q}.

    They follow from specializing the frame derivation to one dimension:
    a 1/2 from the Duhamel kernel, the kernel lower bound I0 >= 1,
    Jensen's inequality over the window [y-R, y+R] of length 2R, and the
    fundamental theorem of calculus with V(y-R, y) = 0.  For n >= 2 the
    constants absorb transverse Hoelder factors and must be supplied by
    the caller.
    """
    if params.n != 1:
        raise ValidationError(
            "closed-form frame constants are available only for n=1; "
            "supply FrameConstants explicitly for higher dimensions"
        )
    two_r = 2.0 * params.R
    return FrameConstants(C=0.5 * two_r ** (1.0 - params.p), K=0.5 * two_r ** (1.0 - params.q))


def _require_damping_regime(params: ModelParams) -> None:
    if params.b * params.b < 4.0 * params.m2:
        raise ValidationError(
            f"the iteration machinery requires b^2 >= 4 m2, got b={params.b}, m2={params.m2}"
        )


class SubcriticalSequences:
    """All sequences of the subcritical slicing argument for one parameter set.

    ell(j): slicing factors; L(j) their running product with limit L_inf;
    alpha(j), beta(j): envelope exponents; logC(j): log of the envelope
    coefficient, also available pre-divided by (pq)^j via logC_scaled(j).
    Derived constants: N (certified lower bound of ell_j^{-beta_{j-1} pq}),
    D, E, E1, the threshold index j0, and the smallness threshold eps0.
    """

    J_BIG = 200  # sampling depth for the certified bound N

    def __init__(self, params: ModelParams, frame: FrameConstants, m_value: float) -> None:
        _require_damping_regime(params)
        idx = theta(params.n, params.p, params.q)
        if not idx.in_scope:
            raise ValidationError(f"theta = {idx.value} < 0: outside the blow-up range")
        if m_value <= 0:
            raise ValidationError(f"M must be positive (nontrivial v1 data), got {m_value}")
        self.params = params
        self.frame = frame
        self.m_value = float(m_value)
        self.theta = idx
        self.pq = params.p * params.q
        self._ln_pq = math.log(self.pq)
        # prefix caches: ln L_j and the scaled coefficients c_j = ln C_j / (pq)^j
        self._logL: list[float] = [math.log(self.ell(0))]
        self._c: list[float] = [math.log(self.m_value) + math.log(params.eps)]

    # -- slicing factors ------------------------------------------------

    def ell(self, j: int) -> float:
        if j < 0:
            raise DomainError("j must be nonnegative")
        if j == 0:
            return max(2.0 / (self.params.b * self.params.R), 1.0)
        return 1.0 + math.exp(-j * self._ln_pq)

    def log_L(self, j: int) -> float:
        while len(self._logL) <= j:
            k = len(self._logL)
            self._logL.append(self._logL[-1] + math.log1p(math.exp(-k * self._ln_pq)))
        return self._logL[j]

    def L(self, j: int) -> float:
        return math.exp(self.log_L(j))

    @property
    def L_inf(self) -> float:
        # ln L = ln ell_0 + sum_{k>=1} log1p((pq)^{-k}); the tail is geometric
        total = math.log(self.ell(0))
        k = 1
        while True:
            term = math.log1p(math.exp(-k * self._ln_pq))
            total += term
            if term < 1e-18:
                return math.exp(total)
            k += 1

    # -- envelope exponents ----------------------------------------------

    def alpha(self, j: int) -> float:
        return 0.5 * (self.params.n - 1) * math.expm1(j * self._ln_pq)

    def beta(self, j: int) -> float:
        return math.expm1(j * self._ln_pq) / (self.pq - 1.0)

    def log_beta(self, j: int) -> float:
        """ln beta_j, finite for all j >= 1 even when beta_j overflows."""
        if j < 1:
            raise DomainError("beta_j > 0 requires j >= 1")
        return j * self._ln_pq + math.log1p(-math.exp(-j * self._ln_pq)) - math.log(self.pq - 1.0)

    # -- envelope coefficients in log domain ------------------------------

    def logC_scaled(self, j: int) -> float:
        """c_j = ln C_j / (pq)^j; converges as j grows and never overflows."""
        while len(self._c) <= j:
            k = len(self._c)  # computing c_k from c_{k-1}
            lnphi = (
                math.log(self.frame.K)
                + self.params.q * math.log(self.frame.C)
                + self.params.q * math.log(2.0 * self.pq - 1.0)
                - self.params.q * math.log(self.params.b)
            )
            # ln(beta_{k-1} pq + 1) = ln beta_k exactly, by the recursion
            log_bk = self.log_beta(k)
            scale = math.exp(-k * self._ln_pq)  # (pq)^{-k}, underflows to 0 harmlessly
            # beta_{k-1} pq ln(ell_k) / (pq)^k, assembled from stable pieces
            slicing = (
                (1.0 - math.exp(-(k - 1) * self._ln_pq))
                / (self.pq - 1.0)
                * math.log1p(math.exp(-k * self._ln_pq))
            )
            self._c.append(
                self._c[k - 1]
                + (lnphi - 2.0 * self.params.q * k * self._ln_pq - log_bk) * scale
                - slicing
            )
        return self._c[j]

    def logC(self, j: int) -> float:
        """ln C_j; may overflow to +/-inf for very large j (use logC_scaled)."""
        return self.logC_scaled(j) * math.exp(j * self._ln_pq)

    # -- derived constants -------------------------------------------------

    @property
    def N(self) -> float:
        """Certified lower bound of inf_j ell_j^{-beta_{j-1} pq}.

        The sampled values decrease monotonically to e^{-1/(pq-1)}, so
        0.99 x the minimum of (samples, limit) bounds every term strictly
        from below.
        """
        worst = math.exp(-1.0 / (self.pq - 1.0))
        for j in range(1, self.J_BIG + 1):
            expo = self.beta(j - 1) * self.pq * math.log1p(math.exp(-j * self._ln_pq))
            worst = min(worst, math.exp(-expo))
        return 0.99 * worst

    @property
    def log_D(self) -> float:
        qq = self.params.q
        return (
            math.log(self.frame.K)
            + qq * math.log(self.frame.C)
            + math.log(self.N)
            + qq * math.log(2.0 * self.pq - 1.0)
            + math.log(self.pq - 1.0)
            - qq * math.log(self.params.b)
        )

    @property
    def D(self) -> float:
        return math.exp(self.log_D)

    @property
    def j0(self) -> int:
        bound = self.log_D / ((2.0 * self.params.q + 1.0) * self._ln_pq) - self.pq / (self.pq - 1.0)
        return max(0, math.ceil(bound))

    @property
    def log_E(self) -> float:
        return (
            math.log(self.m_value)
            - (2.0 * self.params.q + 1.0) * self.pq / (self.pq - 1.0) ** 2 * self._ln_pq
            + self.log_D / (self.pq - 1.0)
        )

    @property
    def E(self) -> float:
        return math.exp(self.log_E)

    @property
    def log_E1(self) -> float:
        return self.log_E - math.log(2.0) / (self.pq - 1.0)

    @property
    def E1(self) -> float:
        return math.exp(self.log_E1)

    @property
    def eps0(self) -> float:
        """Smallness threshold: the lifespan bound is guaranteed below it."""
        th = self.theta.value
        return math.exp(-self.log_E1 - th * math.log(2.0 * (self.L_inf + 1.0) * self.params.R))


class CriticalSequences:
    """Sequences of the critical slicing argument (theta = 0)."""

    def __init__(self, params: ModelParams, frame: FrameConstants, m_value: float) -> None:
        _require_damping_regime(params)
        idx = theta(params.n, params.p, params.q)
        if idx.classification != "critical":
            raise ValidationError(
                f"critical sequences require theta = 0, got theta = {idx.value}"
            )
        if m_value <= 0:
            raise ValidationError(f"M must be positive (nontrivial v1 data), got {m_value}")
        self.params = params
        self.frame = frame
        self.m_value = float(m_value)
        self.theta = idx
        self.pq = params.p * params.q
        self._ln_pq = math.log(self.pq)
        self._k: list[float] = [math.log(self.m_value) + math.log(params.eps)]

    def Lambda(self, j: int) -> float:
        if j < 0:
            raise DomainError("j must be nonnegative")
        return 1.0 + 4.0 / (self.params.b * self.params.R) * (2.0 - 2.0 ** (-j))

    @property
    def Lambda_inf(self) -> float:
        return 1.0 + 8.0 / (self.params.b * self.params.R)

    def gamma(self, j: int) -> float:
        return math.expm1(j * self._ln_pq) / (self.pq - 1.0)

    def log_gamma(self, j: int) -> float:
        if j < 1:
            raise DomainError("gamma_j > 0 requires j >= 1")
        return j * self._ln_pq + math.log1p(-math.exp(-j * self._ln_pq)) - math.log(self.pq - 1.0)

    def logK_scaled(self, j: int) -> float:
        """k_j = ln K_j / (pq)^j."""
        while len(self._k) <= j:
            k = len(self._k)
            lnpsi = (
                math.log(self.frame.K)
                - self.params.q * math.log(self.params.b)
                + self.params.q * math.log(self.frame.C)
            )
            # ln(gamma_{k-1} pq + 1) = ln gamma_k by the recursion
            log_gk = self.log_gamma(k)
            scale = math.exp(-k * self._ln_pq)
            self._k.append(
                self._k[k - 1]
                + (lnpsi - 2.0 * self.params.q * (k - 1) * math.log(2.0) - log_gk) * scale
            )
        return self._k[j]

    def logK(self, j: int) -> float:
        return self.logK_scaled(j) * math.exp(j * self._ln_pq)

    @property
    def log_Dtilde(self) -> float:
        qq = self.params.q
        return (
            2.0 * qq * math.log(2.0)
            + math.log(self.frame.K)
            - qq * math.log(self.params.b)
            + qq * math.log(self.frame.C)
            + math.log(self.pq - 1.0)
        )

    @property
    def Dtilde(self) -> float:
        return math.exp(self.log_Dtilde)

    @property
    def j1(self) -> int:
        denom = 2.0 * self.params.q * math.log(2.0) + self._ln_pq
        bound = self.log_Dtilde / denom - self.pq / (self.pq - 1.0)
        return max(0, math.ceil(bound))

    @property
    def log_Etilde(self) -> float:
        base = 2.0 * self.params.q * math.log(2.0) + self._ln_pq
        return (
            math.log(self.m_value)
            - self.pq / (self.pq - 1.0) ** 2 * base
            + self.log_Dtilde / (self.pq - 1.0)
        )

    @property
    def Etilde(self) -> float:
        return math.exp(self.log_Etilde)

    @property
    def Etilde1(self) -> float:
        """Derived reporting constant for the form T <= exp(E1~ eps^{1-pq}).

        Equals Etilde^{-(pq-1)} + max(0, ln(2 Lambda R)); valid for
        eps <= min(1, eps0).  Flagged derived: only the fully constructive
        bound (2 Lambda R) exp((Etilde eps)^{-(pq-1)}) is proven.
        """
        extra = max(0.0, math.log(2.0 * self.Lambda_inf * self.params.R))
        return math.exp(-(self.pq - 1.0) * self.log_Etilde) + extra

    @property
    def eps0(self) -> float:
        """The critical smallness condition holds for every positive eps
        (its right-hand side is negative), so no finite threshold exists."""
        return math.inf


def subcritical_sequences(
    params: ModelParams, frame: FrameConstants, m_value: float
) -> SubcriticalSequences:
    return SubcriticalSequences(params, frame, m_value)


def critical_sequences(
    params: ModelParams, frame: FrameConstants, m_value: float
) -> CriticalSequences:
    return CriticalSequences(params, frame, m_value)


def log_lower_bound_envelope(z: float, j: int, seqs) -> float:
    """ln of the j-th lower-bound envelope at z; -inf at the slice boundary."""
    R = seqs.params.R
    if isinstance(seqs, SubcriticalSequences):
        zmin = seqs.L(j) * R
        if z < zmin:
            raise DomainError(f"z = {z} is below the slice boundary L_{j} R = {zmin}")
        log_val = seqs.logC(j)
        aj = seqs.alpha(j)
        bj = seqs.beta(j)
        if aj != 0.0:
            log_val -= aj * math.log(R + z)
        if bj != 0.0:
            gap = z - zmin
            log_val += bj * math.log(gap) if gap > 0 else -math.inf
        return log_val
    if isinstance(seqs, CriticalSequences):
        zmin = seqs.Lambda(j) * R
        if z < zmin:
            raise DomainError(f"z = {z} is below the slice boundary Lambda_{j} R = {zmin}")
        log_val = seqs.logK(j)
        gj = seqs.gamma(j)
        if gj != 0.0:
            inner = math.log(z / (seqs.Lambda(j) * R))
            log_val += gj * math.log(inner) if inner > 0 else -math.inf
        return log_val
    raise TypeError(f"unsupported sequence object {type(seqs)!r}")


def lower_bound_envelope(z: float, j: int, seqs) -> float:
    """The j-th lower bound for V(R+z, z); 0 at the slice boundary for j >= 1,
    M eps for j = 0."""
    log_val = log_lower_bound_envelope(z, j, seqs)
    if log_val == -math.inf:
        return 0.0
    with_overflow = math.inf if log_val > 709.0 else math.exp(log_val)
    return with_overflow


@dataclass(frozen=True)
class LifespanBound:
    """Constructive upper bound on the lifespan at a given data size."""

    bound: float
    constant: float  # the eps-independent constant of the scaling statement
    eps0: float
    kind: str  # "subcritical" | "critical"
    warning: bool  # eps exceeded eps0: theorem hypotheses not met

    def __iter__(self):  # convenience unpacking (bound, warning)
        yield self.bound
        yield self.warning


def lifespan_bound(eps: float, params: ModelParams, seqs) -> LifespanBound:
    """Upper bound on the blow-up time for data size eps.

    Subcritical: (E1 eps)^{-1/theta}; critical: (2 Lambda R)
    exp((Etilde eps)^{-(pq-1)}).  Strictly decreasing in eps.  When eps
    exceeds the computed smallness threshold eps0 the bound is still
    returned but flagged.
    """
    if eps <= 0:
        raise ValidationError(f"eps must be positive, got {eps}")
    if isinstance(seqs, SubcriticalSequences):
        th = seqs.theta.value
        if th <= _CRITICAL_TOL:
            raise ValidationError("theta = 0: use CriticalSequences for the lifespan bound")
        log_bound = -(seqs.log_E1 + math.log(eps)) / th
        bound = math.inf if log_bound > 709.0 else math.exp(log_bound)
        return LifespanBound(
            bound=bound,
            constant=math.exp(-seqs.log_E1 / th),
            eps0=seqs.eps0,
            kind="subcritical",
            warning=eps > seqs.eps0,
        )
    if isinstance(seqs, CriticalSequences):
        expo = math.exp(-(seqs.pq - 1.0) * (seqs.log_Etilde + math.log(eps)))
        pref = 2.0 * seqs.Lambda_inf * seqs.params.R
        bound = math.inf if expo > 709.0 else pref * math.exp(expo)
        return LifespanBound(
            bound=bound,
            constant=seqs.Etilde1,
            eps0=seqs.eps0,
            kind="critical",
            warning=eps > seqs.eps0,
        )
    raise TypeError(f"unsupported sequence object {type(seqs)!r}")


@dataclass(frozen=True)
class ClosedFormReport:
    ok: bool
    failures: tuple[str, ...]
    checked_j: int

    def __bool__(self) -> bool:
        return self.ok


def _exact_pq(params: ModelParams) -> Fraction:
    # Every float is an exact dyadic rational, so the identities can be
    # checked with zero rounding error whatever p and q are.
    return Fraction(*float(params.p).as_integer_ratio()) * Fraction(
        *float(params.q).as_integer_ratio()
    )


def verify_closed_forms(seqs, j_max: int, exact_j_max: int = 40) -> ClosedFormReport:
    """Check recursions against closed forms and the log lower bounds.

    (i) alpha/beta (subcritical) or gamma (critical) from their recursions
        match the closed forms: exactly in rational arithmetic up to
        exact_j_max, and to 1e-12 relative in floats up to j_max;
    (ii) both summation identities hold by direct rational summation;
    (iii) the scaled coefficients dominate the divergence threshold:
        ln C_j >= (pq)^j ln(E eps) for j in [j0, j_max], and the analogous
        bound with Etilde past j1 in the critical case.
    """
    failures: list[str] = []
    params = seqs.params
    pq_f = params.p * params.q
    pq = _exact_pq(params)

    # (ii) summation identities, exact arithmetic
    for j in range(1, min(exact_j_max, j_max) + 1):
        lhs1 = sum(pq**k for k in range(j))
        rhs1 = (pq**j - 1) / (pq - 1)
        if lhs1 != rhs1:
            failures.append(f"geometric-sum identity failed at j={j}")
        lhs2 = sum((j - k) * pq**k for k in range(j))
        rhs2 = ((pq ** (j + 1) - pq) / (pq - 1) - j) / (pq - 1)
        if lhs2 != rhs2:
            failures.append(f"weighted-sum identity failed at j={j}")

    if isinstance(seqs, SubcriticalSequences):
        # (i) exact recursion vs closed form
        a_rec, b_rec = Fraction(0), Fraction(0)
        half_nm1 = Fraction(params.n - 1, 2)
        for j in range(1, min(exact_j_max, j_max) + 1):
            a_rec = half_nm1 * (pq - 1) + pq * a_rec
            b_rec = 1 + pq * b_rec
            if a_rec != half_nm1 * (pq**j - 1):
                failures.append(f"alpha recursion != closed form at j={j}")
            if b_rec != (pq**j - 1) / (pq - 1):
                failures.append(f"beta recursion != closed form at j={j}")
        # (i) float recursion vs closed form, log-domain comparison
        bf = 0.0
        af = 0.0
        for j in range(1, j_max + 1):
            af = 0.5 * (params.n - 1) * (pq_f - 1.0) + pq_f * af
            bf = 1.0 + pq_f * bf
            cb = seqs.beta(j)
            if abs(math.log(bf) - math.log(cb)) > 1e-12:
                failures.append(f"beta float recursion drifted at j={j}: {bf} vs {cb}")
            ca = seqs.alpha(j)
            if params.n > 1 and abs(math.log(af) - math.log(ca)) > 1e-12:
                failures.append(f"alpha float recursion drifted at j={j}: {af} vs {ca}")
            if params.n == 1 and (af != 0.0 or ca != 0.0):
                failures.append(f"alpha should vanish identically for n=1, got {af}, {ca}")
        # (iii) divergence threshold: c_j >= ln(E eps) for j >= j0
        floor = seqs.log_E + math.log(params.eps)
        for j in range(seqs.j0, j_max + 1):
            if seqs.logC_scaled(j) < floor:
                failures.append(
                    f"ln C_j fell below (pq)^j ln(E eps) at j={j}: "
                    f"{seqs.logC_scaled(j)} < {floor}"
                )
    elif isinstance(seqs, CriticalSequences):
        g_rec = Fraction(0)
        for j in range(1, min(exact_j_max, j_max) + 1):
            g_rec = 1 + pq * g_rec
            if g_rec != (pq**j - 1) / (pq - 1):
                failures.append(f"gamma recursion != closed form at j={j}")
        gf = 0.0
        for j in range(1, j_max + 1):
            gf = 1.0 + pq_f * gf
            cg = seqs.gamma(j)
            if abs(math.log(gf) - math.log(cg)) > 1e-12:
                failures.append(f"gamma float recursion drifted at j={j}: {gf} vs {cg}")
        floor = seqs.log_Etilde + math.log(params.eps)
        for j in range(seqs.j1, j_max + 1):
            if seqs.logK_scaled(j) < floor:
                failures.append(
                    f"ln K_j fell below (pq)^j ln(Etilde eps) at j={j}: "
                    f"{seqs.logK_scaled(j)} < {floor}"
                )
    else:
        raise TypeError(f"unsupported sequence object {type(seqs)!r}")

    return ClosedFormReport(ok=not failures, failures=tuple(failures), checked_j=j_max)


def sequence_table(seqs, j_max: int) -> list[dict]:
    """Rows for CSV export of the sequence values up to j_max."""
    rows = []
    if isinstance(seqs, SubcriticalSequences):
        for j in range(j_max + 1):
            rows.append(
                {
                    "j": j,
                    "ell_j": seqs.ell(j),
                    "L_j": seqs.L(j),
                    "alpha_j": seqs.alpha(j),
                    "beta_j": seqs.beta(j),
                    "logC_j": seqs.logC(j),
                }
            )
    elif isinstance(seqs, CriticalSequences):
        for j in range(j_max + 1):
            rows.append(
                {
                    "j": j,
                    "Lambda_j": seqs.Lambda(j),
                    "gamma_j": seqs.gamma(j),
                    "logK_j": seqs.logK(j),
                }
            )
    else:
        raise TypeError(f"unsupported sequence object {type(seqs)!r}")
    return rows
