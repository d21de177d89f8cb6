"""Monte Carlo counting experiments and their exact analytic counterparts.

A trial sends one photon (QM) or one hidden-variable system (NCHV) into a
measurement context:

* context ``"A"``: the interferometer, outcomes are detectors D1..D8;
* context ``"B"``: the joint Z1Z2/X1X2 measurement, outcomes are the four
  (z1z2, x1x2) pairs.

The detection layer is shared: a real hit survives with the outcome's
efficiency, every outcome channel fires a dark count independently, and a
trial in which several channels fire is resolved uniformly at random among
them.  Averages are formed from the clicks an experimenter would see (real
and dark alike), conditioned on a click when fair sampling is on.

Random numbers come in fixed blocks of trials; block ``b`` of context ``c``
draws from a Philox stream keyed by ``(seed, c, b)``, so results do not
depend on how many worker threads process the blocks.
"""

from __future__ import annotations

import csv
import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._sampling import categorical
from .errors import ConfigError, InsufficientDataError
from .hilbert import PhotonState, polarization
from .nchv import ASSIGNMENTS, AssignmentDistribution, assignment_to_context_b, assignment_to_detector
from .observables import CONTEXT_B_OUTCOMES, context, context_b_measure, product_values
from .optics import ARMS, DETECTORS, build_fig1_network, propagate, transfer_matrix

THEORIES = ("QM", "NCHV")
CONTEXTS = ("A", "B")
BLOCK_SIZE = 1 << 16

ZZ_VALUES = np.array([o[0] for o in CONTEXT_B_OUTCOMES], dtype=float)
XX_VALUES = np.array([o[1] for o in CONTEXT_B_OUTCOMES], dtype=float)

CSV_COLUMNS = (
    ["theory", "context", "param", "value", "trials", "seed"]
    + [f"n_{d}" for d in DETECTORS]
    + ["avg_z1z2", "se_z1z2", "avg_x1x2", "se_x1x2", "avg_prod", "se_prod", "lhs", "lhs_se", "violation_sigma"]
    + ["lhs_analytic"]
)


@dataclass(frozen=True)
class ImperfectionModel:
    """Parametric non-idealities.  The defaults describe the ideal setup.

    ``prep_angle_error`` and ``arm_phases`` are in radians; ``arm_phases``
    follow :data:`photonctx.optics.ARMS`.  ``visibility`` is the weight of
    the coherent prepared state against its arm-dephased mixture.
    """

    efficiency: tuple[float, ...] = (1.0,) * 8
    dark_count_prob: float = 0.0
    prep_angle_error: float = 0.0
    arm_phases: tuple[float, ...] = (0.0,) * 4
    bs_transmittance: tuple[float, float] = (0.5, 0.5)
    visibility: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "efficiency", tuple(float(x) for x in self.efficiency))
        object.__setattr__(self, "arm_phases", tuple(float(x) for x in self.arm_phases))
        object.__setattr__(self, "bs_transmittance", tuple(float(x) for x in self.bs_transmittance))
        problems = self.problems()
        if problems:
            raise ConfigError(problems)

    def problems(self) -> list[str]:
        out = []
        if len(self.efficiency) != 8:
            out.append("efficiency needs 8 values (D1..D8)")
        for d, e in zip(DETECTORS, self.efficiency):
            if not 0.0 <= e <= 1.0:
                out.append(f"efficiency.{d} = {e} outside [0, 1]")
        if not 0.0 <= self.dark_count_prob < 1.0:
            out.append(f"dark_count_prob = {self.dark_count_prob} outside [0, 1)")
        if not math.isfinite(self.prep_angle_error):
            out.append("prep_angle_error must be finite")
        if len(self.arm_phases) != 4:
            out.append(f"arm_phases needs 4 values ({', '.join(ARMS)})")
        elif not all(math.isfinite(p) for p in self.arm_phases):
            out.append("arm_phases must be finite")
        if len(self.bs_transmittance) != 2:
            out.append("bs_transmittance needs 2 values (S1, S2)")
        for name, t in zip(("S1", "S2"), self.bs_transmittance):
            if not 0.0 <= t <= 1.0:
                out.append(f"bs_transmittance.{name} = {t} outside [0, 1]")
        if not 0.0 <= self.visibility <= 1.0:
            out.append(f"visibility = {self.visibility} outside [0, 1]")
        return out

    _SCALARS = ("dark_count_prob", "prep_angle_error", "visibility")
    _VECTORS = {"efficiency": DETECTORS, "arm_phases": ARMS, "bs_transmittance": ("S1", "S2")}

    @classmethod
    def resolve_param(cls, path: str) -> tuple[str, str]:
        """Split ``"efficiency.D3"`` into ``("efficiency", "D3")``; raises on unknown paths."""
        head, _, idx = path.removeprefix("imperfection.").partition(".")
        if head in cls._SCALARS and not idx:
            return head, ""
        if head in cls._VECTORS and (not idx or idx in cls._VECTORS[head]):
            return head, idx
        raise ConfigError(f"unknown imperfection parameter {path!r}")

    def with_param(self, path: str, value: float) -> "ImperfectionModel":
        """Copy with one field changed; ``path`` like ``"visibility"`` or ``"efficiency.D3"``.

        A vector field given without an index (``"efficiency"``) is set uniformly.
        """
        head, idx = self.resolve_param(path)
        value = float(value)
        if head in self._SCALARS:
            return dataclasses.replace(self, **{head: value})
        labels = self._VECTORS[head]
        if not idx:
            return dataclasses.replace(self, **{head: (value,) * len(labels)})
        vals = list(getattr(self, head))
        vals[labels.index(idx)] = value
        return dataclasses.replace(self, **{head: tuple(vals)})

    def network(self):
        return build_fig1_network(self.arm_phases, self.bs_transmittance)

    def outcome_efficiency(self, ctx: str) -> np.ndarray:
        eff = np.array(self.efficiency)
        # the auxiliary device's losses are not modeled separately
        return eff if ctx == "A" else np.full(4, eff.mean())


@dataclass(frozen=True)
class CountsTable:
    """Tallies of one run in one context.

    ``contextA_counts``/``contextB_counts`` hold clicks caused by the photon;
    ``dark_by_outcome`` holds dark clicks per outcome channel of the run's
    context.  ``sum(contextA_counts) + sum(contextB_counts) + dark_count +
    no_detection_count == trials``.
    """

    theory: str
    context: str
    contextA_counts: tuple[int, ...]
    contextB_counts: tuple[int, ...]
    no_detection_count: int
    dark_count: int
    trials: int
    dark_by_outcome: tuple[int, ...]
    seed: int = 0

    @property
    def real_counts(self) -> np.ndarray:
        return np.array(self.contextA_counts if self.context == "A" else self.contextB_counts, dtype=np.int64)

    @property
    def clicks(self) -> np.ndarray:
        """Observed clicks per outcome channel, real and dark together."""
        return self.real_counts + np.array(self.dark_by_outcome, dtype=np.int64)

    @property
    def detected(self) -> int:
        return int(self.clicks.sum())


def _block_rng(seed: int, ctx: str, block: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(CONTEXTS.index(ctx), block))
    return np.random.Generator(np.random.Philox(ss))


def _sample_block(rng, kind_p, outcome_of, eff, q, size):
    """One block of trials.  Returns (real counts, dark counts, no-detection count)."""
    n = len(eff)
    kinds = categorical(kind_p, rng.random(size))
    u_out = rng.random(size)
    outcomes = outcome_of(kinds, u_out)
    survive = rng.random(size) < eff[outcomes]
    fired = rng.random((size, n)) < q
    u_tie = rng.random(size)

    rows = np.flatnonzero(survive)
    fired[rows, outcomes[rows]] = True
    n_fired = fired.sum(axis=1)
    hit = n_fired > 0
    pick = np.floor(u_tie * n_fired).astype(np.int64)
    chosen = np.argmax(np.cumsum(fired, axis=1) > pick[:, None], axis=1)
    real = hit & survive & (chosen == outcomes)
    dark = hit & ~real
    return (
        np.bincount(chosen[real], minlength=n),
        np.bincount(chosen[dark], minlength=n),
        int(size - hit.sum()),
    )


def _source_mixture(imp: ImperfectionModel):
    """Prepared source polarizations and their weights.

    The coherent 45-degree state (tilted by the preparation error) has weight
    ``visibility``; the dephased remainder is H or V with the same
    populations.
    """
    theta = math.pi / 4 + imp.prep_angle_error
    c2, s2 = math.cos(theta) ** 2, math.sin(theta) ** 2
    v = imp.visibility
    pols = [polarization(theta), polarization(0.0), polarization(math.pi / 2)]
    weights = np.array([v, (1 - v) * c2, (1 - v) * s2])
    return pols, weights


def _arm_state(net, pol) -> PhotonState:
    t, r = net.nodes["PS0"].split(pol)
    return PhotonState(np.concatenate([t, r]))


def _trial_model(theory: str, ctx: str, imp: ImperfectionModel, dist: AssignmentDistribution | None):
    """(kind probabilities, outcome sampler) for one run."""
    if theory == "QM":
        pols, kind_p = _source_mixture(imp)
        net = imp.network()
        if ctx == "A":
            table = np.array([propagate(net, pol).probabilities for pol in pols])
        else:
            table = np.array([list(context_b_measure(_arm_state(net, pol)).values()) for pol in pols])

        def outcome_of(kinds, u):
            out = np.zeros(kinds.shape, dtype=np.int64)
            for k in range(len(pols)):
                sel = kinds == k
                if sel.any():
                    out[sel] = categorical(table[k], u[sel])
            return out

        return kind_p, outcome_of

    dist = dist or AssignmentDistribution.constrained()
    if ctx == "A":
        lookup = np.array([DETECTORS.index(assignment_to_detector(a)) for a in ASSIGNMENTS])
    else:
        lookup = np.array([CONTEXT_B_OUTCOMES.index(assignment_to_context_b(a)) for a in ASSIGNMENTS])
    return dist.weights, lambda kinds, u: lookup[kinds]


def _check_run_args(theory, ctx, trials, seed):
    problems = []
    if theory not in THEORIES:
        problems.append(f"theory must be one of {THEORIES}, got {theory!r}")
    if ctx not in CONTEXTS:
        problems.append(f"context must be one of {CONTEXTS}, got {ctx!r}")
    if not isinstance(trials, (int, np.integer)) or trials < 1:
        problems.append(f"trials must be a positive integer, got {trials!r}")
    if not isinstance(seed, (int, np.integer)) or seed < 0:
        problems.append(f"seed must be a nonnegative integer, got {seed!r}")
    if problems:
        raise ConfigError(problems)


def run_experiment(
    theory: str,
    ctx: str,
    imp: ImperfectionModel,
    trials: int,
    seed: int,
    dist: AssignmentDistribution | None = None,
    workers: int = 1,
) -> CountsTable:
    """Simulate ``trials`` single-system runs and tally the outcomes."""
    _check_run_args(theory, ctx, trials, seed)
    kind_p, outcome_of = _trial_model(theory, ctx, imp, dist)
    eff = imp.outcome_efficiency(ctx)
    q = imp.dark_count_prob
    sizes = [min(BLOCK_SIZE, trials - start) for start in range(0, trials, BLOCK_SIZE)]

    def one(b):
        return _sample_block(_block_rng(seed, ctx, b), kind_p, outcome_of, eff, q, sizes[b])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one, range(len(sizes))))
    else:
        parts = [one(b) for b in range(len(sizes))]

    n = len(eff)
    real = np.zeros(n, dtype=np.int64)
    dark = np.zeros(n, dtype=np.int64)
    none = 0
    for r, d, z in parts:
        real += r
        dark += d
        none += z
    real_t = tuple(int(x) for x in real)
    return CountsTable(
        theory=theory,
        context=ctx,
        contextA_counts=real_t if ctx == "A" else (0,) * 8,
        contextB_counts=real_t if ctx == "B" else (0,) * 4,
        no_detection_count=none,
        dark_count=int(dark.sum()),
        trials=trials,
        dark_by_outcome=tuple(int(x) for x in dark),
        seed=seed,
    )


@dataclass(frozen=True)
class InequalityReport:
    avg_z1z2: float
    se_z1z2: float
    avg_x1x2: float
    se_x1x2: float
    avg_product: float
    se_product: float
    lhs: float
    lhs_se: float
    violation_sigma: float
    n_detected_A: int = 0
    n_detected_B: int = 0


def _mean_se(values: np.ndarray, weights: np.ndarray, n: int) -> tuple[float, float]:
    mean = float(np.dot(values, weights) / n)
    var = float(np.dot((values - mean) ** 2, weights) / n)
    return mean, math.sqrt(max(var, 0.0) / n)


def _sigma(lhs: float, se: float, bound: float = 2.0) -> float:
    if se > 0:
        return (lhs - bound) / se
    if lhs == bound:
        return 0.0
    return math.copysign(math.inf, lhs - bound)


def estimate_averages(counts_A: CountsTable, counts_B: CountsTable, fair_sampling: bool = True) -> InequalityReport:
    """Ensemble averages and the inequality's left-hand side from raw counts.

    With ``fair_sampling`` the averages run over detected trials only;
    without it, undetected trials enter with value 0.
    """
    if counts_A.context != "A" or counts_B.context != "B":
        raise ValueError("expected one context-A and one context-B table")
    clicks_a = counts_A.clicks.astype(float)
    clicks_b = counts_B.clicks.astype(float)
    for name, t in (("A", counts_A), ("B", counts_B)):
        if t.detected == 0:
            raise InsufficientDataError(f"no detected counts in context {name} ({t.trials} trials)")

    if fair_sampling:
        n_a, n_b = counts_A.detected, counts_B.detected
        vals_a, w_a = product_values(), clicks_a
        extra_b = np.empty(0)
        w_b = clicks_b
    else:
        n_a, n_b = counts_A.trials, counts_B.trials
        vals_a = np.append(product_values(), 0.0)
        w_a = np.append(clicks_a, counts_A.trials - counts_A.detected)
        extra_b = np.zeros(1)
        w_b = np.append(clicks_b, counts_B.trials - counts_B.detected)

    prod, se_prod = _mean_se(vals_a, w_a, n_a)
    zz, se_zz = _mean_se(np.append(ZZ_VALUES, extra_b), w_b, n_b)
    xx, se_xx = _mean_se(np.append(XX_VALUES, extra_b), w_b, n_b)
    # Z1Z2 and X1X2 come from the same clicks, so take the spread of their sum directly.
    _, se_sum = _mean_se(np.append(ZZ_VALUES + XX_VALUES, extra_b), w_b, n_b)
    lhs = abs(1.0 + zz + xx - prod)
    lhs_se = math.sqrt(se_sum**2 + se_prod**2)
    return InequalityReport(
        zz, se_zz, xx, se_xx, prod, se_prod, lhs, lhs_se, _sigma(lhs, lhs_se), counts_A.detected, counts_B.detected
    )


def detection_layer(p_real, eff, q: float):
    """Exact click probabilities for the detection model, by enumerating dark-count patterns.

    Returns ``(real, dark, none)``: per-channel probabilities of a photon click
    and of a dark click, and the probability of no click at all.
    """
    p_real = np.asarray(p_real, dtype=float)
    eff = np.asarray(eff, dtype=float)
    n = len(p_real)
    real = np.zeros(n)
    dark = np.zeros(n)
    none = 0.0
    for mask in range(1 << n):
        fired = np.array([(mask >> j) & 1 for j in range(n)], dtype=bool)
        k_dark = int(fired.sum())
        w = q**k_dark * (1 - q) ** (n - k_dark)
        if w == 0.0:
            continue
        for k in range(n):
            if p_real[k] == 0.0:
                continue
            # photon survives: it competes with the dark clicks
            others = fired.copy()
            others[k] = False
            share = p_real[k] * eff[k] * w / (int(others.sum()) + 1)
            real[k] += share
            dark[others] += share
            # photon lost: only dark clicks remain
            lost = p_real[k] * (1 - eff[k]) * w
            if k_dark:
                dark[fired] += lost / k_dark
            else:
                none += lost
    return real, dark, none


@dataclass(frozen=True)
class AnalyticPrediction:
    avg_z1z2: float
    avg_x1x2: float
    avg_product: float
    lhs: float
    clicks_A: np.ndarray = field(repr=False)
    clicks_B: np.ndarray = field(repr=False)


def prepared_density(imp: ImperfectionModel) -> np.ndarray:
    """Density operator on the arms right after the first polarizing splitter."""
    theta = math.pi / 4 + imp.prep_angle_error
    psi = np.array([math.cos(theta), 0.0, 0.0, math.sin(theta)], dtype=complex)
    pure = np.outer(psi, psi.conj())
    proj_u = np.diag([1.0, 1.0, 0.0, 0.0])
    proj_d = np.diag([0.0, 0.0, 1.0, 1.0])
    dephased = proj_u @ pure @ proj_u + proj_d @ pure @ proj_d
    return imp.visibility * pure + (1 - imp.visibility) * dephased


def analytic_prediction(
    theory: str,
    imp: ImperfectionModel,
    dist: AssignmentDistribution | None = None,
    fair_sampling: bool = True,
) -> AnalyticPrediction:
    """Exact expected averages for ``theory`` under ``imp``.

    QM uses the density operator and the network's transfer matrix; NCHV
    averages the deterministic outcomes over the assignment distribution.
    Both are passed through :func:`detection_layer`.
    """
    if theory == "QM":
        rho = prepared_density(imp)
        T = transfer_matrix(imp.network())
        p_a = np.einsum("kpi,ij,kpj->k", T, rho, T.conj()).real
        p_b = context("B").probabilities_rho(rho)
    elif theory == "NCHV":
        dist = dist or AssignmentDistribution.constrained()
        p_a = np.zeros(8)
        p_b = np.zeros(4)
        for a, w in zip(ASSIGNMENTS, dist.weights):
            p_a[DETECTORS.index(assignment_to_detector(a))] += w
            p_b[CONTEXT_B_OUTCOMES.index(assignment_to_context_b(a))] += w
    else:
        raise ConfigError(f"theory must be one of {THEORIES}, got {theory!r}")

    ra, da, _ = detection_layer(p_a, imp.outcome_efficiency("A"), imp.dark_count_prob)
    rb, db, _ = detection_layer(p_b, imp.outcome_efficiency("B"), imp.dark_count_prob)
    clicks_a, clicks_b = ra + da, rb + db
    norm_a = clicks_a.sum() if fair_sampling else 1.0
    norm_b = clicks_b.sum() if fair_sampling else 1.0
    prod = float(np.dot(clicks_a, product_values()) / norm_a)
    zz = float(np.dot(clicks_b, ZZ_VALUES) / norm_b)
    xx = float(np.dot(clicks_b, XX_VALUES) / norm_b)
    return AnalyticPrediction(zz, xx, prod, abs(1 + zz + xx - prod), clicks_a, clicks_b)


@dataclass(frozen=True)
class ExperimentResult:
    """Both contexts of one parameter point, with the derived report."""

    theory: str
    param: str
    value: float | None
    trials: int
    seed: int
    counts_A: CountsTable
    counts_B: CountsTable
    report: InequalityReport
    analytic: AnalyticPrediction


def run_inequality_test(
    theory: str,
    imp: ImperfectionModel,
    trials: int,
    seed: int,
    dist: AssignmentDistribution | None = None,
    fair_sampling: bool = True,
    workers: int = 1,
    param: str = "",
    value: float | None = None,
) -> ExperimentResult:
    """Run both contexts with the same seed and evaluate the inequality."""
    a = run_experiment(theory, "A", imp, trials, seed, dist, workers)
    b = run_experiment(theory, "B", imp, trials, seed, dist, workers)
    rep = estimate_averages(a, b, fair_sampling)
    exact = analytic_prediction(theory, imp, dist, fair_sampling)
    return ExperimentResult(theory, param, value, trials, seed, a, b, rep, exact)


def sweep(
    theory: str,
    imp_base: ImperfectionModel,
    parameter_name: str,
    values,
    trials: int,
    seed: int,
    dist: AssignmentDistribution | None = None,
    fair_sampling: bool = True,
    workers: int = 1,
) -> list[ExperimentResult]:
    """One :class:`ExperimentResult` per value, in the order given.

    Every point reuses ``seed``, so neighbouring points share random numbers.
    """
    ImperfectionModel.resolve_param(parameter_name)
    points = [imp_base.with_param(parameter_name, v) for v in values]
    return [
        run_inequality_test(theory, imp, trials, seed, dist, fair_sampling, workers, parameter_name, float(v))
        for imp, v in zip(points, values)
    ]


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def csv_row(res: ExperimentResult) -> list[str]:
    r = res.report
    return (
        [res.theory, "AB", res.param, "" if res.value is None else _fmt(res.value), str(res.trials), str(res.seed)]
        + [str(int(c)) for c in res.counts_A.clicks]
        + [_fmt(v) for v in (r.avg_z1z2, r.se_z1z2, r.avg_x1x2, r.se_x1x2, r.avg_product, r.se_product)]
        + [_fmt(r.lhs), _fmt(r.lhs_se), _fmt(r.violation_sigma), _fmt(res.analytic.lhs)]
    )


def write_csv(results, fh) -> None:
    w = csv.writer(fh, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for res in results:
        w.writerow(csv_row(res))
