"""Multi-objective genetic counterfactual search over synthetic variants.

Individuals are full instances that always agree with the origin on every
fixed feature. Three objectives are minimized jointly: Gower proximity to
the origin, number of changed features, and distance of the predicted
target probability from the requested band (0 inside it). Selection is
non-dominated sorting with crowding distance over a (mu + mu) pool; the
final population is band-filtered, validated, deduplicated, reduced to
its Pareto front, and ranked by the composite score.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .cf_core import (
    EPSILON,
    CfQuery,
    Counterfactual,
    Predictor,
    build_counterfactual,
    effective_fixed,
    predict_one,
    validate,
)
from .gower import gower_to_many
from .schema import FeatureSchema, Row


@dataclass(frozen=True)
class MocConfig:
    population: int = 40
    generations: int = 60
    mutation_rate: float = 0.1
    crossover_rate: float = 0.9
    init_mutation_rate: float = 0.2
    sigma_fraction: float = 0.1  # numeric mutation step as a fraction of range
    seed: int | None = None  # falls back to the query seed

    def __post_init__(self):
        if self.population < 4 or self.population % 2 != 0:
            raise ValueError("population must be an even number >= 4")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        for name in ("mutation_rate", "crossover_rate", "init_mutation_rate"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1]")


@dataclass(frozen=True)
class MocIndividual:
    genome: Row
    objectives: tuple[float, float, float]  # (proximity, sparsity, prob_gap)
    p_target: float = float("nan")


def _dominates_matrix(obj: np.ndarray) -> np.ndarray:
    """dom[i, j] is True when i dominates j (<= everywhere, < somewhere)."""
    le = (obj[:, None, :] <= obj[None, :, :]).all(-1)
    lt = (obj[:, None, :] < obj[None, :, :]).any(-1)
    return le & lt


def fast_non_dominated_sort(obj: np.ndarray) -> list[np.ndarray]:
    dom = _dominates_matrix(obj)
    counts = dom.sum(0).astype(np.int64)
    remaining = np.ones(len(obj), dtype=bool)
    fronts = []
    while remaining.any():
        front = np.nonzero(remaining & (counts == 0))[0]
        fronts.append(front)
        remaining[front] = False
        counts -= dom[front].sum(0)
    return fronts


def crowding_distance(obj: np.ndarray, front: np.ndarray) -> np.ndarray:
    d = np.zeros(front.size)
    if front.size <= 2:
        d[:] = np.inf
        return d
    for m in range(obj.shape[1]):
        vals = obj[front, m]
        order = np.argsort(vals, kind="stable")
        d[order[0]] = d[order[-1]] = np.inf
        span = vals[order[-1]] - vals[order[0]]
        if span > 0:
            d[order[1:-1]] += (vals[order[2:]] - vals[order[:-2]]) / span
    return d


def pareto_front(individuals: Sequence[MocIndividual]) -> list[MocIndividual]:
    """The non-dominated subset; duplicates of equal objectives are all retained."""
    if not individuals:
        return []
    obj = np.asarray([ind.objectives for ind in individuals], dtype=np.float64)
    dom = _dominates_matrix(obj)
    keep = ~dom.any(axis=0)
    return [ind for i, ind in enumerate(individuals) if keep[i]]


def _changed_matrix(rows: Sequence[Row], x0: Row, schema: FeatureSchema, eps: float = EPSILON) -> np.ndarray:
    n = len(rows)
    out = np.zeros((n, len(schema)), dtype=bool)
    for j, spec in enumerate(schema):
        if spec.kind == "numeric":
            col = np.asarray([r[j] for r in rows], dtype=np.float64)
            out[:, j] = np.abs(col - float(x0[j])) > eps
        else:
            col = np.empty(n, dtype=object)
            col[:] = [r[j] for r in rows]
            out[:, j] = col != x0[j]
    return out


def _prob_gap(p: np.ndarray, p_min: float, p_max: float) -> np.ndarray:
    return np.maximum(0.0, np.maximum(p_min - p, p - p_max))


class _Evaluator:
    def __init__(self, query: CfQuery, f: Predictor, schema: FeatureSchema):
        self.query = query
        self.f = f
        self.schema = schema

    def __call__(self, genomes: list[Row]) -> list[MocIndividual]:
        p = np.asarray(self.f.predict_proba(genomes))[:, self.query.target_class]
        prox = gower_to_many(self.query.x0, genomes, self.schema)
        spars = _changed_matrix(genomes, self.query.x0, self.schema).sum(axis=1)
        gap = _prob_gap(p, self.query.p_min, self.query.p_max)
        return [
            MocIndividual(
                genome=g,
                objectives=(float(prox[i]), float(spars[i]), float(gap[i])),
                p_target=float(p[i]),
            )
            for i, g in enumerate(genomes)
        ]


def _mutate(genome: Row, actionable, schema, rate, sigma_fraction, rng) -> Row:
    out = list(genome)
    for j in actionable:
        if rng.random() >= rate:
            continue
        spec = schema[j]
        if spec.kind == "binary":
            a, b = spec.domain
            out[j] = b if out[j] == a else a
        elif spec.kind == "categorical":
            out[j] = spec.domain[int(rng.integers(0, len(spec.domain)))]
        else:
            lo, hi = float(spec.domain[0]), float(spec.domain[1])
            sigma = sigma_fraction * (hi - lo)
            if sigma > 0:
                out[j] = float(np.clip(float(out[j]) + rng.normal(0.0, sigma), lo, hi))
    return tuple(out)


def _crossover(a: Row, b: Row, actionable, rate, rng) -> tuple[Row, Row]:
    if rng.random() >= rate:
        return a, b
    ca, cb = list(a), list(b)
    for j in actionable:
        if rng.random() < 0.5:
            ca[j], cb[j] = cb[j], ca[j]
    return tuple(ca), tuple(cb)


def _rank_and_crowding(obj: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ranks = np.empty(len(obj), dtype=np.int64)
    crowd = np.empty(len(obj))
    for r, front in enumerate(fast_non_dominated_sort(obj)):
        ranks[front] = r
        crowd[front] = crowding_distance(obj, front)
    return ranks, crowd


def _select_survivors(obj: np.ndarray, mu: int) -> list[int]:
    chosen: list[int] = []
    for front in fast_non_dominated_sort(obj):
        if len(chosen) + front.size <= mu:
            chosen.extend(front.tolist())
        else:
            crowd = crowding_distance(obj, front)
            order = sorted(range(front.size), key=lambda i: (-crowd[i], front[i]))
            chosen.extend(front[i] for i in order[: mu - len(chosen)])
            break
    return chosen


def moc_search(
    query: CfQuery,
    f: Predictor,
    schema: FeatureSchema,
    config: MocConfig = MocConfig(),
    on_generation: Callable[[int, float, int], None] | None = None,
) -> list[Counterfactual]:
    """Evolve variants of x0 and return the top-k valid Pareto-front members.

    Deterministic for a given (query, config, seed). `on_generation` is
    called after each generation with (generation, best prob_gap,
    first-front size) for diagnostic traces. Returns [] when no individual
    ends inside the probability band.
    """
    fixed = effective_fixed(query, schema)
    actionable = [j for j in range(len(schema)) if j not in fixed]
    if not actionable:
        raise ValueError("no actionable features")
    rng = np.random.default_rng(query.seed if config.seed is None else config.seed)
    evaluate = _Evaluator(query, f, schema)
    mu = config.population

    genomes = [tuple(query.x0)]
    genomes += [
        _mutate(query.x0, actionable, schema, config.init_mutation_rate, config.sigma_fraction, rng)
        for _ in range(mu - 1)
    ]
    pop = evaluate(genomes)

    for gen in range(config.generations):
        obj = np.asarray([ind.objectives for ind in pop])
        ranks, crowd = _rank_and_crowding(obj)

        def better(i: int, j: int) -> int:
            if ranks[i] != ranks[j]:
                return i if ranks[i] < ranks[j] else j
            if crowd[i] != crowd[j]:
                return i if crowd[i] > crowd[j] else j
            return min(i, j)

        parents = [
            better(int(rng.integers(0, mu)), int(rng.integers(0, mu)))
            for _ in range(mu)
        ]
        children: list[Row] = []
        for t in range(0, mu, 2):
            a, b = _crossover(
                pop[parents[t]].genome, pop[parents[t + 1]].genome, actionable, config.crossover_rate, rng
            )
            children.append(_mutate(a, actionable, schema, config.mutation_rate, config.sigma_fraction, rng))
            children.append(_mutate(b, actionable, schema, config.mutation_rate, config.sigma_fraction, rng))

        combined = pop + evaluate(children)
        all_obj = np.asarray([ind.objectives for ind in combined])
        pop = [combined[i] for i in _select_survivors(all_obj, mu)]

        if on_generation is not None:
            gaps = [ind.objectives[2] for ind in pop]
            front0 = fast_non_dominated_sort(np.asarray([ind.objectives for ind in pop]))[0]
            on_generation(gen, min(gaps), int(front0.size))

    in_band = [
        ind for ind in pop if query.p_min <= ind.p_target <= query.p_max
    ]
    valid = [ind for ind in in_band if not validate(ind.genome, query, f, schema)]
    seen: set[Row] = set()
    unique = []
    for ind in valid:
        if ind.genome not in seen:
            seen.add(ind.genome)
            unique.append(ind)
    front = pareto_front(unique)

    p0 = float(predict_one(f, query.x0)[query.target_class])
    cfs = [
        build_counterfactual(ind.genome, ind.p_target, p0, query, schema, stage="moc")
        for ind in front
    ]
    cfs.sort(key=Counterfactual.rank_key)
    return cfs[: query.k]
