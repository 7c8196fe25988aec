"""Half-the-cake optimality conditions.

The core test asks for reduced cross ranks whose row and column sums equal
every user's antenna count.  That is a transportation-polytope feasibility
question (supply M_i at each transmitter, demand M_j at each receiver, arc
capacities D[j][i]), decided here by max-flow with augmenting paths;
integral capacities make the optimum integral, so a saturating flow *is* a
certificate.  On top of that sit the explicit 3-user inequality form, the
symmetric-necessity classification, the boundary cases that certify
optimality without any certificate, and the allocation rules that recover
the earlier full-rank / uniform-rank results.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations
from typing import Dict, List, Optional, Tuple

from .channel_model import NetworkSpec, validate_spec
from .errors import (
    CertificateInfeasible,
    ConditionFails,
    DominantUser,
    NotSquareCase,
    NotSymmetric,
    WrongK,
)
from .exact_linalg import MERSENNE61, StructuredMatrix, det_nonzero_with_var_zeroed, generic_rank

OPTIMAL_CERTIFIED = "OPTIMAL_CERTIFIED"
MORE_THAN_HALF_POSSIBLE = "MORE_THAN_HALF_POSSIBLE"
UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class ReducedRankCertificate:
    """K x K matrix of reduced cross ranks (diagonal unused, kept as None)."""

    reduced_ranks: Tuple[Tuple[Optional[int], ...], ...]

    @property
    def K(self) -> int:
        return len(self.reduced_ranks)

    def entry(self, j: int, i: int) -> int:
        return int(self.reduced_ranks[j][i])

    def tx_sums(self) -> Tuple[int, ...]:
        K = self.K
        return tuple(
            sum(self.entry(j, i) for j in range(K) if j != i) for i in range(K)
        )

    def rx_sums(self) -> Tuple[int, ...]:
        K = self.K
        return tuple(
            sum(self.entry(j, i) for i in range(K) if i != j) for j in range(K)
        )

    def to_json(self) -> list:
        return [[None if v is None else int(v) for v in row] for row in self.reduced_ranks]

    @classmethod
    def from_rows(cls, rows) -> "ReducedRankCertificate":
        return cls(tuple(tuple(None if a == b else int(rows[a][b]) for b in range(len(rows)))
                         for a in range(len(rows))))


def validate_certificate(spec: NetworkSpec, cert: ReducedRankCertificate
                         ) -> ReducedRankCertificate:
    """Enforce entrywise caps and both sum families; raises when violated."""
    if cert.K != spec.K:
        raise CertificateInfeasible("certificate size disagrees with the spec")
    for j in range(spec.K):
        for i in range(spec.K):
            if i == j:
                continue
            v = cert.entry(j, i)
            if v < 0 or v > spec.D[j][i]:
                raise CertificateInfeasible(
                    f"entry ({j + 1},{i + 1}) = {v} outside [0, D] = [0, {spec.D[j][i]}]"
                )
    if cert.tx_sums() != spec.M or cert.rx_sums() != spec.M:
        raise CertificateInfeasible(
            f"sums {cert.rx_sums()} / {cert.tx_sums()} do not all equal M = {spec.M}"
        )
    return cert


# ---------------------------------------------------------------------------
# transportation feasibility by max-flow
# ---------------------------------------------------------------------------


def _max_flow_transportation(spec: NetworkSpec):
    """Edmonds-Karp on source -> tx_i -> rx_j -> sink.

    Returns (value, per-arc cross flow, tx/rx nodes reachable in the final
    residual graph).  The reachable sets describe a minimum cut when the
    flow does not saturate.
    """
    K = spec.K
    S, T = 2 * K, 2 * K + 1
    cap: List[Dict[int, int]] = [dict() for _ in range(2 * K + 2)]
    for i in range(K):
        cap[S][i] = spec.M[i]
        cap[K + i][T] = spec.M[i]
        for j in range(K):
            if j != i and spec.D[j][i] > 0:
                cap[i][K + j] = spec.D[j][i]
    flow: Dict[Tuple[int, int], int] = {}

    def residual(u, v):
        return cap[u].get(v, 0) - flow.get((u, v), 0) + flow.get((v, u), 0)

    adjacency = [set(cap[u]) for u in range(2 * K + 2)]
    for u in range(2 * K + 2):
        for v in cap[u]:
            adjacency[v].add(u)

    value = 0
    while True:
        parent = {S: None}
        queue = deque([S])
        while queue and T not in parent:
            u = queue.popleft()
            for v in adjacency[u]:
                if v not in parent and residual(u, v) > 0:
                    parent[v] = u
                    queue.append(v)
        if T not in parent:
            reach_tx = [i for i in range(K) if i in parent]
            reach_rx = [j for j in range(K) if K + j in parent]
            return value, flow, (reach_tx, reach_rx)
        # bottleneck along the path, then push
        path = []
        v = T
        while parent[v] is not None:
            path.append((parent[v], v))
            v = parent[v]
        push = min(residual(u, v) for u, v in path)
        for u, v in path:
            back = min(flow.get((v, u), 0), push)
            if back:
                flow[(v, u)] -= back
            if push - back:
                flow[(u, v)] = flow.get((u, v), 0) + push - back
        value += push


def reduced_rank_feasible(spec: NetworkSpec) -> Optional[ReducedRankCertificate]:
    """Reduced ranks with exact row/column sums, or None when none exist."""
    validate_spec(spec)
    if not spec.is_square:
        raise NotSquareCase("reduced-rank sums are defined for the square case")
    value, flow, _ = _max_flow_transportation(spec)
    if value != spec.M_sigma:
        return None
    K = spec.K
    rows = [[0] * K for _ in range(K)]
    for (u, v), f in flow.items():
        if u < K and K <= v < 2 * K:
            rows[v - K][u] = f
    cert = ReducedRankCertificate.from_rows(rows)
    return validate_certificate(spec, cert)


def feasibility_evidence(spec: NetworkSpec) -> dict:
    """Max-flow value plus a certificate (feasible) or a min cut (infeasible)."""
    validate_spec(spec)
    if not spec.is_square:
        raise NotSquareCase("reduced-rank sums are defined for the square case")
    value, _, (reach_tx, reach_rx) = _max_flow_transportation(spec)
    out = {"feasible": value == spec.M_sigma, "max_flow": value, "required": spec.M_sigma}
    if not out["feasible"]:
        out["cut"] = {
            "tx_source_side": [i + 1 for i in reach_tx],
            "rx_source_side": [j + 1 for j in reach_rx],
        }
    cert = reduced_rank_feasible(spec) if out["feasible"] else None
    out["certificate"] = cert.to_json() if cert else None
    return out


# ---------------------------------------------------------------------------
# explicit 3-user conditions
# ---------------------------------------------------------------------------


def _require_3user_square(spec: NetworkSpec):
    if spec.K != 3:
        raise WrongK("this condition is stated for 3 users")
    if not spec.is_square:
        raise NotSquareCase("this condition is stated for the square case")


def check_condition_eq5(spec: NetworkSpec) -> bool:
    """3-user min-expression form of the exact-sum condition."""
    _require_3user_square(spec)
    M, d = spec.M, spec.cross_rank
    first = min(M[0] + d(2, 1), M[1] + d(0, 2), M[2] + d(1, 0))
    second = min(M[2] + d(0, 1), M[0] + d(1, 2), M[1] + d(2, 0))
    return first + second >= sum(M)


#: 0-based (lhs pairs, rhs antenna expression) for the nine expanded inequalities
_CD_TABLE = {
    "cd1": (((0, 1), (0, 2)), (1, 0, 0)),
    "cd2": (((1, 0), (1, 2)), (0, 1, 0)),
    "cd3": (((2, 0), (2, 1)), (0, 0, 1)),
    "cd4": (((1, 0), (2, 0)), (1, 0, 0)),
    "cd5": (((0, 1), (2, 1)), (0, 1, 0)),
    "cd6": (((0, 2), (1, 2)), (0, 0, 1)),
    "cd7": (((0, 1), (1, 0)), (1, 1, -1)),
    "cd8": (((1, 2), (2, 1)), (-1, 1, 1)),
    "cd9": (((0, 2), (2, 0)), (1, -1, 1)),
}

#: violated inequality -> user relabeling (perm[new] = old) for the scheme builders
CD_SCHEME_PERMUTATION = {
    "cd1": (0, 1, 2), "cd2": (1, 2, 0), "cd3": (2, 0, 1),
    "cd4": (0, 1, 2), "cd5": (1, 2, 0), "cd6": (2, 0, 1),
    "cd7": (0, 1, 2), "cd8": (1, 2, 0), "cd9": (0, 2, 1),
}

CD_SCHEME_FAMILY = {name: ("aligned-pair" if name in ("cd7", "cd8", "cd9") else "zero-forcing")
                    for name in _CD_TABLE}


def evaluate_cd_inequalities(spec: NetworkSpec) -> Dict[str, Tuple[int, int, bool]]:
    """Each inequality as (lhs, rhs, holds)."""
    _require_3user_square(spec)
    out = {}
    for name, (pairs, coeffs) in _CD_TABLE.items():
        lhs = sum(spec.cross_rank(j, i) for j, i in pairs)
        rhs = sum(c * m for c, m in zip(coeffs, spec.M))
        out[name] = (lhs, rhs, lhs >= rhs)
    return out


@dataclass(frozen=True)
class SymmetricClassification:
    status: str  # HALF_CAKE_OPTIMAL or EXCEEDS_HALF_CAKE
    violated: Optional[str] = None
    scheme_family: Optional[str] = None


def classify_symmetric_3user(spec: NetworkSpec) -> SymmetricClassification:
    """Necessary-and-sufficient classification under symmetric cross ranks."""
    _require_3user_square(spec)
    if not spec.is_symmetric():
        raise NotSymmetric("classification requires D[j][i] == D[i][j]")
    evaluated = evaluate_cd_inequalities(spec)
    for name in sorted(evaluated):
        if not evaluated[name][2]:
            return SymmetricClassification(
                "EXCEEDS_HALF_CAKE", violated=name, scheme_family=CD_SCHEME_FAMILY[name]
            )
    return SymmetricClassification("HALF_CAKE_OPTIMAL")


def assign_reduced_ranks_3user(spec: NetworkSpec) -> ReducedRankCertificate:
    """Closed-form certificate for 3-user specs satisfying the min-expression condition.

    The formulas assume the second min is attained at the first user's
    argument; other cases reduce to it by a cyclic relabeling.
    """
    _require_3user_square(spec)
    if not check_condition_eq5(spec):
        raise ConditionFails("the 3-user sum condition does not hold")
    d = spec.cross_rank
    args = [spec.M[k] + d((k + 1) % 3, (k + 2) % 3) for k in range(3)]
    shift = min(range(3), key=lambda k: (args[k], k))
    perm = tuple((n + shift) % 3 for n in range(3))  # perm[new] = old
    ps = spec.permute(perm)
    M, c = ps.M, ps.cross_rank(1, 2)
    reduced = [[None, M[0] + c - M[2], M[2] - c],
               [M[1] - c, None, c],
               [M[0] + c - M[1], M[1] + M[2] - M[0] - c, None]]
    rows = [[0] * 3 for _ in range(3)]
    for a in range(3):
        for b in range(3):
            if a != b:
                rows[perm[a]][perm[b]] = reduced[a][b]
    return validate_certificate(spec, ReducedRankCertificate.from_rows(rows))


# ---------------------------------------------------------------------------
# allocations recovering earlier results
# ---------------------------------------------------------------------------


def greedy_chip_allocation(spec: NetworkSpec) -> ReducedRankCertificate:
    """Sequential chip-into-bin allocation for full-rank cross channels.

    Users are processed in descending antenna order; each transmitter drops
    its chips into the following receivers' bins (cyclically, skipping its
    own).  Works whenever no user has more antennas than all others
    combined.
    """
    validate_spec(spec)
    if not spec.is_square:
        raise NotSquareCase("chip allocation is defined for the square case")
    for j in range(spec.K):
        for i in range(spec.K):
            if i != j and spec.D[j][i] != min(spec.M[i], spec.M[j]):
                raise ConditionFails("chip allocation expects full-rank cross channels")
    K = spec.K
    order = sorted(range(K), key=lambda k: (-spec.M[k], k))
    if spec.M[order[0]] > sum(spec.M) - spec.M[order[0]]:
        raise DominantUser(
            f"user {order[0] + 1} has more antennas than all others combined"
        )
    space = {k: spec.M[k] for k in range(K)}
    rows = [[0] * K for _ in range(K)]
    for pos, tx in enumerate(order):
        chips = spec.M[tx]
        for step in range(1, K):
            rx = order[(pos + step) % K]
            drop = min(chips, space[rx])
            rows[rx][tx] += drop
            space[rx] -= drop
            chips -= drop
            if chips == 0:
                break
        if chips:
            raise CertificateInfeasible("chip allocation left undropped chips")
    return validate_certificate(spec, ReducedRankCertificate.from_rows(rows))


def symmetric_allocation(K: int, M: int, D: int) -> ReducedRankCertificate:
    """Near-uniform allocation for K users with M antennas and cross rank D each."""
    if K < 2 or M < 1 or D < 0:
        raise ConditionFails("need K >= 2, M >= 1, D >= 0")
    if (K - 1) * D < M:
        raise ConditionFails(f"(K-1)*D = {(K - 1) * D} < M = {M}")
    q, delta = divmod(M, K - 1)
    rows = [[0] * K for _ in range(K)]
    for i in range(K):
        for step in range(1, K):
            j = (i + step) % K
            rows[j][i] = q + 1 if step <= delta else q
    spec = NetworkSpec.square([M] * K, {(j, i): D for j in range(K) for i in range(K) if i != j})
    return validate_certificate(spec, ReducedRankCertificate.from_rows(rows))


# ---------------------------------------------------------------------------
# certificate extraction by determinant tests
# ---------------------------------------------------------------------------


def necessity_reduction(spec: NetworkSpec, seed: int = 0, trials: int = 8,
                        p: int = MERSENNE61) -> Optional[ReducedRankCertificate]:
    """Extract a certificate by greedily zeroing rank-1 coefficients.

    Visits the coefficients in lexicographic (j, i, m) order and pins each
    to zero whenever the stripped matrix's determinant polynomial stays
    nonzero without it.  Surviving counts per block form the reduced
    ranks.  Different visiting orders can produce different (all valid)
    certificates.  Returns None when the stripped matrix is not
    generically full rank.
    """
    validate_spec(spec)
    if not spec.is_square:
        raise NotSquareCase("reduction is defined for the square case")
    if generic_rank(spec, "stripped", trials=trials, seed=seed, p=p) != spec.M_sigma:
        return None
    struct = StructuredMatrix.from_spec(spec, seed=seed, p=p)
    for idx, var in enumerate(struct.variables()):
        if det_nonzero_with_var_zeroed(struct, var, trials=trials, seed=(seed, 0xA1, idx)):
            struct.zeroed.add(var)
    K = spec.K
    rows = [[0] * K for _ in range(K)]
    for j in range(K):
        for i in range(K):
            if i != j:
                rows[j][i] = spec.D[j][i] - sum(
                    1 for (a, b, m) in struct.zeroed if (a, b) == (j, i)
                )
    return validate_certificate(spec, ReducedRankCertificate.from_rows(rows))


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


def lemma1_equivalence_run(count: int = 200, seed: int = 0, trials: int = 8,
                           K_max: int = 4, M_max: int = 5) -> dict:
    """Flow feasibility vs. generic full rank of the stripped matrix, over random specs.

    The two must agree on every instance; any disagreement is returned with
    its seed for inspection.
    """
    from .channel_model import random_square_spec

    disagreements = []
    feasible_count = 0
    for t in range(count):
        spec = random_square_spec((seed, t), K_max=K_max, M_max=M_max)
        flow_ok = reduced_rank_feasible(spec) is not None
        rank_ok = generic_rank(spec, "stripped", trials=trials, seed=(seed, t)) == spec.M_sigma
        feasible_count += flow_ok
        if flow_ok != rank_ok:
            disagreements.append({"seed": t, "spec": spec.to_json(),
                                  "flow": flow_ok, "full_rank": rank_ok})
    return {
        "count": count,
        "feasible": feasible_count,
        "agreement_rate": 1.0 - len(disagreements) / count,
        "disagreements": disagreements,
    }


@dataclass(frozen=True)
class HalfCakeVerdict:
    """Outcome of the optimality conditions for one network."""

    status: str
    half_cake: Fraction
    certificate: Optional[ReducedRankCertificate] = None
    witnesses: Tuple[str, ...] = ()
    bound: Optional[Fraction] = None

    def __post_init__(self):
        if self.status == OPTIMAL_CERTIFIED and self.certificate is None and not any(
            w.startswith("Theorem5") or w.startswith("Theorem6") for w in self.witnesses
        ):
            raise ValueError("optimality needs a certificate or a boundary-case witness")

    def to_json(self) -> dict:
        out = {
            "status": self.status,
            "half_cake": {"num": self.half_cake.numerator, "den": self.half_cake.denominator},
            "certificate": self.certificate.to_json() if self.certificate else None,
            "witnesses": list(self.witnesses),
        }
        if self.bound is not None:
            out["bound"] = {"num": self.bound.numerator, "den": self.bound.denominator}
        return out


def boundary_case_verdict(spec: NetworkSpec) -> HalfCakeVerdict:
    """Optimality at the two boundary antenna configurations.

    All user relabelings of both stated orientations are tried.  The first
    family needs one user's antennas to equal the other two's combined and
    that user's inbound or outbound cross ranks full; the matching
    cooperation bound M_sigma - max(inbound, outbound sums) then equals
    half the cake.  The second family needs two equal users and a full
    chain of ranks through the third.
    """
    if spec.K != 3:
        raise WrongK("boundary cases are stated for 3 users")
    if not spec.is_square:
        raise NotSquareCase("boundary cases are stated for the square case")
    M, D = spec.M, spec.D
    half = spec.half_cake
    for a, b, c in permutations(range(3)):
        if M[a] == M[b] + M[c] and (
            (D[a][b] == M[b] and D[a][c] == M[c])
            or (D[b][a] == M[b] and D[c][a] == M[c])
        ):
            coop = sum(M) - max(D[b][a] + D[c][a], D[a][b] + D[a][c])
            return HalfCakeVerdict(
                OPTIMAL_CERTIFIED, half,
                witnesses=(f"Theorem5[{a + 1},{b + 1},{c + 1}]",),
                bound=Fraction(coop),
            )
    for a, b, c in permutations(range(3)):
        if M[a] == M[b] and (
            (D[b][a] == M[a] and D[c][a] == M[c] and D[b][c] == M[c])
            or (D[a][b] == M[a] and D[a][c] == M[c] and D[c][b] == M[c])
        ):
            return HalfCakeVerdict(
                OPTIMAL_CERTIFIED, half,
                witnesses=(f"Theorem6[{a + 1},{b + 1},{c + 1}]",),
                bound=half,
            )
    return HalfCakeVerdict(UNDECIDED, half)


def _exceeding_scheme_notes(spec: NetworkSpec) -> List[str]:
    """Scheme families applicable even without symmetric ranks."""
    notes = []
    M, D = spec.M, spec.D
    if any(D[a][b] + D[b][a] < M[a] + M[b] - M[c] for a, b, c in permutations(range(3))):
        notes.append("aligned-pair-scheme-available")
    if any(D[b][a] + D[c][a] < M[a] and D[a][b] + D[a][c] < M[a]
           for a, b, c in permutations(range(3))):
        notes.append("zero-forcing-scheme-available")
    return notes


def half_cake_verdict(spec: NetworkSpec, seed: int = 0, trials: int = 8) -> HalfCakeVerdict:
    """Dispatch the optimality conditions, strongest evidence first."""
    validate_spec(spec)
    if not spec.is_square:
        raise NotSquareCase("half-the-cake verdicts are defined for the square case")
    half = spec.half_cake
    cert = reduced_rank_feasible(spec)
    if cert is not None:
        return HalfCakeVerdict(OPTIMAL_CERTIFIED, half, certificate=cert,
                               witnesses=("Lemma1-flow",), bound=half)
    if spec.K == 3:
        boundary = boundary_case_verdict(spec)
        if boundary.status == OPTIMAL_CERTIFIED:
            return boundary
        if spec.is_symmetric():
            cls = classify_symmetric_3user(spec)
            if cls.status == "EXCEEDS_HALF_CAKE":
                return HalfCakeVerdict(
                    MORE_THAN_HALF_POSSIBLE, half,
                    witnesses=(f"Theorem4-{cls.violated}", cls.scheme_family),
                )
        return HalfCakeVerdict(UNDECIDED, half,
                               witnesses=tuple(_exceeding_scheme_notes(spec)))
    return HalfCakeVerdict(UNDECIDED, half)
