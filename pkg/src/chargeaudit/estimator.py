"""Reference-station identification, comparison chains, error propagation
and the accept/reject discrimination rule.

The pipeline: pool per-(EV, station) density estimates, find clusters of
stations whose pairwise relative errors are below the reference
threshold (their mean density anchors the absolute scale), then walk
EV-shared edges outward from each reference station, propagating the
error and its linearized uncertainty hop by hop.
"""
from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, truncnorm

from . import soc_quant
from .errors import DataInconsistencyError, DomainError
from .ingestion import segment_order
from .model import (ChargingOrder, ChargingSegment, ComparisonChain,
                    DensityEstimate, ModelConfig, ReferenceCluster,
                    StationVerdict, relative_meter_error)
from .preprocess import filter_segments, screen_unstable_evs

_SIGMA_FLOOR = 1e-15


@dataclass(frozen=True)
class PooledDensity:
    """Pooled energy density of one EV at one station (comparable
    segments averaged; std shrinks with the pool size)."""

    ev_id: str
    fcs_id: str
    value: float
    sigma: float
    n_segments: int
    mean_current_a: float
    mean_temp_c: float


@dataclass(frozen=True)
class TruncatedNormalErrorModel:
    """Population model of station meter errors: zero-mean normal,
    truncated to the band cluster members are assumed to occupy."""

    sigma: float
    half_width: float

    def variance(self) -> float:
        if self.half_width <= 0.0:
            return 0.0
        if math.isinf(self.half_width):
            return self.sigma ** 2
        b = self.half_width / self.sigma
        return float(truncnorm.var(-b, b, loc=0.0, scale=self.sigma))


@dataclass(frozen=True)
class VerdictCore:
    """One (station error, uncertainty) observation before combination.

    ``components`` is the linearized error budget: one signed term per
    underlying noise source, either a pooled density measurement
    (key ``p:<ev>:<fcs>``) or a cluster member's unknown true error
    (key ``g:<fcs>``). Estimates that reuse a measurement — chains from
    different roots sharing a hop, overlapping reference cliques — carry
    the same key, so a combination adds those terms linearly instead of
    averaging the same noise down as if it were independent evidence.
    ``sigma`` always equals the quadrature sum of the components.
    """

    fcs_id: str
    gamma: float
    sigma: float
    provenance: str
    components: tuple[tuple[str, float], ...] = ()

    def component_var(self) -> float:
        return sum(c * c for _, c in self.components)


def pool_estimates(estimates: list[DensityEstimate]) -> PooledDensity:
    """Average comparable density estimates of one (EV, station) pair."""
    if not estimates:
        raise DomainError("cannot pool an empty estimate list")
    segs = [e.segment for e in estimates]
    ev_ids = {s.ev_id for s in segs}
    fcs_ids = {s.fcs_id for s in segs}
    if len(ev_ids) != 1 or len(fcs_ids) != 1:
        raise DomainError("pooled estimates must share one (EV, FCS) pair")
    n = len(estimates)
    value = sum(e.expected_e_d for e in estimates) / n
    sigma = math.sqrt(sum(e.sigma_total ** 2 for e in estimates)) / n
    return PooledDensity(
        ev_id=ev_ids.pop(), fcs_id=fcs_ids.pop(), value=value, sigma=sigma,
        n_segments=n,
        mean_current_a=sum(s.mean_current_a for s in segs) / n,
        mean_temp_c=sum(s.mean_temp_c for s in segs) / n,
    )


def _comparable(cur_a, temp_a, cur_b, temp_b, cfg: ModelConfig) -> bool:
    return (abs(cur_a - cur_b) <= cfg.d_current_threshold_a
            and abs(temp_a - temp_b) <= cfg.d_temperature_threshold_c)


def build_pooled(pool: list[ChargingSegment],
                 estimates: dict[str, DensityEstimate],
                 cfg: ModelConfig) -> dict[tuple[str, str], PooledDensity]:
    """Pool per (EV, station). Segments are grouped greedily (time order)
    into sets that are pairwise comparable in mean current and
    temperature; the largest group represents the pair."""
    by_pair: dict[tuple[str, str], list[ChargingSegment]] = defaultdict(list)
    for seg in pool:
        if seg.key in estimates:
            by_pair[(seg.ev_id, seg.fcs_id)].append(seg)

    pooled: dict[tuple[str, str], PooledDensity] = {}
    for pair, segs in by_pair.items():
        segs = sorted(segs, key=lambda s: (s.start_ts, s.key))
        groups: list[list[ChargingSegment]] = []
        for seg in segs:
            for grp in groups:
                if all(_comparable(seg.mean_current_a, seg.mean_temp_c,
                                   g.mean_current_a, g.mean_temp_c, cfg)
                       for g in grp):
                    grp.append(seg)
                    break
            else:
                groups.append([seg])
        best = max(groups, key=len)  # ties: earliest group (max is stable)
        pooled[pair] = pool_estimates([estimates[s.key] for s in best])
    return pooled


def reference_bias_sigma(model: TruncatedNormalErrorModel, n: int,
                         e_d_true_est: float) -> float:
    """Std of the anchor bias: the mean of n member errors does not
    average exactly to zero; scaled into density units."""
    if n < 1:
        raise DomainError("cluster size must be >= 1")
    return math.sqrt(model.variance() / n) * e_d_true_est


def find_reference_clusters(
        pooled: dict[tuple[str, str], PooledDensity],
        cfg: ModelConfig) -> list[ReferenceCluster]:
    """Identify, per EV, every maximal set of stations that are mutually
    comparable and whose pairwise relative errors stay below the
    reference threshold. Candidates are visited in station-id order,
    making runs reproducible."""
    by_ev: dict[str, list[PooledDensity]] = defaultdict(list)
    for (ev_id, _), pd in pooled.items():
        by_ev[ev_id].append(pd)

    # The pairwise-agreement precondition constrains only the spread of
    # the member errors, not their common level: the mean of n normal
    # errors stays N(0, sigma^2/n) under the conditioning. Synthetic
    # fleets confirm the anchor scatter matches sigma/sqrt(n), so the
    # bias term uses the untruncated population model. (A model
    # truncated to half the pairwise threshold understates the anchor
    # uncertainty roughly tenfold.)
    model = TruncatedNormalErrorModel(
        sigma=cfg.fcs_error_sigma, half_width=math.inf)

    clusters: list[ReferenceCluster] = []
    for ev_id in sorted(by_ev):
        cands = sorted(by_ev[ev_id], key=lambda p: p.fcs_id)
        if len(cands) < cfg.min_rcs_fcs_count:
            continue
        adj = {}
        for a, b in itertools.combinations(cands, 2):
            ok = (_comparable(a.mean_current_a, a.mean_temp_c,
                              b.mean_current_a, b.mean_temp_c, cfg)
                  and abs(relative_meter_error(b.value, a.value))
                  <= cfg.rcs_rel_error_threshold_l
                  and abs(relative_meter_error(a.value, b.value))
                  <= cfg.rcs_rel_error_threshold_l)
            adj[(a.fcs_id, b.fcs_id)] = ok
        for clique in _maximal_cliques(cands, adj, cfg.min_rcs_fcs_count):
            members = {p.fcs_id: p for p in clique}
            n = len(members)
            e_d1 = sum(p.value for p in clique) / n
            sigma_e_d1 = math.sqrt(sum(p.sigma ** 2 for p in clique)) / n
            clusters.append(ReferenceCluster(
                ev_id=ev_id,
                fcs_ids=tuple(sorted(members)),
                per_fcs_density={f: (p.value, p.sigma)
                                 for f, p in members.items()},
                e_d_true_est=e_d1,
                sigma_e_d_true=sigma_e_d1,
                sigma_bias=reference_bias_sigma(model, n, e_d1),
            ))
    return clusters


def _maximal_cliques(cands: list[PooledDensity], adj: dict,
                     min_size: int) -> list[list[PooledDensity]]:
    """All maximal cliques of at least ``min_size`` stations, largest
    first, in deterministic (station-id) order."""
    def linked(a, b):
        key = (a.fcs_id, b.fcs_id) if (a.fcs_id, b.fcs_id) in adj \
            else (b.fcs_id, a.fcs_id)
        return adj[key]

    found: list[list[PooledDensity]] = []
    found_ids: list[set[str]] = []
    for size in range(len(cands), min_size - 1, -1):
        for combo in itertools.combinations(cands, size):
            ids = {p.fcs_id for p in combo}
            if any(ids <= bigger for bigger in found_ids):
                continue
            if all(linked(a, b) for a, b in itertools.combinations(combo, 2)):
                found.append(list(combo))
                found_ids.append(ids)
    return found


def reference_station_error(cluster: ReferenceCluster,
                            fcs_id: str) -> tuple[float, float]:
    """Error and linearized uncertainty of one cluster member against the
    cluster anchor. The member's own density appears in the anchor mean,
    so the covariance term is subtracted."""
    if fcs_id not in cluster.per_fcs_density:
        raise DomainError(f"{fcs_id} is not a member of the cluster")
    e_da, sigma_a = cluster.per_fcs_density[fcs_id]
    e_d1 = cluster.e_d_true_est
    if e_d1 <= 0:
        raise DataInconsistencyError("non-positive anchor density")
    n = len(cluster.per_fcs_density)
    gamma = e_da / e_d1 - 1.0
    cov = sigma_a ** 2 / n
    var = (sigma_a ** 2 / e_d1 ** 2
           + e_da ** 2 * (cluster.sigma_e_d_true ** 2 + cluster.sigma_bias ** 2)
           / e_d1 ** 4
           - 2.0 * e_da * cov / e_d1 ** 3)
    return gamma, math.sqrt(max(var, 0.0))


def hop_error(e_d_next: float, sigma_next: float, e_d_prev: float,
              sigma_prev: float, gamma_prev: float,
              sigma_gamma_prev: float) -> tuple[float, float]:
    """One comparison-chain hop: error of the next station from the
    previous station's error and the linking EV's densities at both."""
    if e_d_prev <= 0:
        raise DataInconsistencyError("non-positive pooled density on hop")
    gamma = (e_d_next - e_d_prev) / e_d_prev + (e_d_next / e_d_prev) * gamma_prev
    g1 = (1.0 + gamma_prev) / e_d_prev
    g2 = (1.0 + gamma_prev) * e_d_next / e_d_prev ** 2
    g3 = e_d_next / e_d_prev
    var = (g1 * sigma_next) ** 2 + (g2 * sigma_prev) ** 2 \
        + (g3 * sigma_gamma_prev) ** 2
    return gamma, math.sqrt(var)


def build_chains(pooled: dict[tuple[str, str], PooledDensity],
                 clusters: list[ReferenceCluster],
                 cfg: ModelConfig) -> tuple[list[ComparisonChain],
                                            dict[str, list]]:
    """Breadth-first expansion over the EV-shared-segment graph from each
    reference station.

    Returns the chains plus, per root, the tree edges in traversal order
    as (parent, child, PooledDensity@parent, PooledDensity@child) so the
    caller can propagate verdicts along them.
    """
    rcs_ids = {f for c in clusters for f in c.fcs_ids}

    # Edge catalogue: for every EV, every comparable station pair it
    # links. Keep the lowest-variance EV per pair.
    by_ev: dict[str, list[PooledDensity]] = defaultdict(list)
    for (ev_id, _), pd in pooled.items():
        by_ev[ev_id].append(pd)
    edges: dict[tuple[str, str], tuple] = {}
    for ev_id in sorted(by_ev):
        for a, b in itertools.combinations(
                sorted(by_ev[ev_id], key=lambda p: p.fcs_id), 2):
            if not _comparable(a.mean_current_a, a.mean_temp_c,
                               b.mean_current_a, b.mean_temp_c, cfg):
                continue
            key = (a.fcs_id, b.fcs_id)
            cost = (a.sigma ** 2 + b.sigma ** 2, ev_id)
            if key not in edges or cost < edges[key][0]:
                edges[key] = (cost, ev_id, a, b)

    neighbors: dict[str, dict[str, tuple]] = defaultdict(dict)
    for (fa, fb), (_, ev_id, a, b) in edges.items():
        neighbors[fa][fb] = (ev_id, a, b)
        neighbors[fb][fa] = (ev_id, b, a)

    chains: list[ComparisonChain] = []
    tree_edges: dict[str, list] = {}
    for root in sorted(rcs_ids):
        if root not in neighbors:
            continue
        depth = {root: 1}
        parent: dict[str, str | None] = {root: None}
        hop_of: dict[str, tuple] = {}
        order: list = []
        arrivals: list = []
        children: dict[str, list[str]] = defaultdict(list)
        hit_rcs: set[str] = set()
        queue = [root]
        while queue:
            node = queue.pop(0)
            if depth[node] >= cfg.max_chain_len_fcs:
                continue
            for nxt in sorted(neighbors[node]):
                if nxt in depth:
                    continue
                if nxt in rcs_ids:
                    # The chain terminates here, but the hop into the
                    # other reference station is still evidence about it.
                    hit_rcs.add(node)
                    arrivals.append((node, nxt) + neighbors[node][nxt])
                    continue
                ev_id, p_here, p_next = neighbors[node][nxt]
                depth[nxt] = depth[node] + 1
                parent[nxt] = node
                hop_of[nxt] = (node, nxt, ev_id, p_here, p_next)
                children[node].append(nxt)
                order.append(hop_of[nxt])
                queue.append(nxt)
        # Arrival hops go last: their sources already carry propagated
        # errors, and reference stations are never expanded from.
        tree_edges[root] = order + arrivals

        leaves = [n for n in depth
                  if not children[n] and (n != root or not order)]
        for leaf in sorted(leaves):
            if leaf == root and not neighbors[root]:
                continue
            hops = []
            node = leaf
            while parent[node] is not None:
                frm, to, ev_id, _, _ = hop_of[node]
                hops.append((frm, to, ev_id))
                node = parent[node]
            hops.reverse()
            if leaf in hit_rcs:
                reason = "HitAnotherRcs"
            elif depth[leaf] >= cfg.max_chain_len_fcs:
                reason = "MaxLength"
            else:
                reason = "Exhausted"
            if hops or reason == "HitAnotherRcs":
                chains.append(ComparisonChain(
                    root_rcs_id=root, hops=tuple(hops),
                    terminal_reason=reason))
    return chains, tree_edges


def propagate_chain(tree_edges: list, root: VerdictCore
                    ) -> list[VerdictCore]:
    """Propagate error and uncertainty along the hop list of one root's
    traversal tree (edges in breadth-first order, parents first)."""
    root_comp = dict(root.components)
    states: dict[str, tuple[float, dict[str, float]]] = {}
    paths: dict[str, str] = {}
    cores: list[VerdictCore] = []
    for frm, to, ev_id, p_here, p_next in tree_edges:
        g_prev, comp_prev = states.get(frm, (root.gamma, root_comp))
        if p_here.value <= 0:
            continue  # downstream stations stay unestimated
        s_prev = math.sqrt(sum(c * c for c in comp_prev.values()))
        gamma, sigma = hop_error(p_next.value, p_next.sigma,
                                 p_here.value, p_here.sigma,
                                 g_prev, s_prev)
        # The hop adds two measurement terms and rescales everything
        # carried forward; a pooled density reappearing along the path
        # (one EV linking three stations) accumulates in place.
        g1 = (1.0 + g_prev) / p_here.value
        g2 = (1.0 + g_prev) * p_next.value / p_here.value ** 2
        g3 = p_next.value / p_here.value
        comp = {key: g3 * c for key, c in comp_prev.items()}
        key_next = f"p:{ev_id}:{p_next.fcs_id}"
        key_here = f"p:{ev_id}:{p_here.fcs_id}"
        comp[key_next] = comp.get(key_next, 0.0) + g1 * p_next.sigma
        comp[key_here] = comp.get(key_here, 0.0) - g2 * p_here.sigma
        states[to] = (gamma, comp)
        path = paths.get(frm, frm) + "->" + to
        paths[to] = path
        cores.append(VerdictCore(
            fcs_id=to, gamma=gamma,
            sigma=math.sqrt(sum(c * c for c in comp.values())),
            provenance=f"chain:{path}",
            components=tuple(sorted(comp.items()))))
    return cores


def acceptance_probability(gamma: float, sigma_gamma: float,
                           gamma_t: float) -> tuple[float, str]:
    """Fraction of the +-1 sigma error interval inside the acceptable
    band, and the resulting classification."""
    if sigma_gamma < 0:
        raise DomainError("sigma must be >= 0")
    lo, hi = gamma - sigma_gamma, gamma + sigma_gamma
    if lo < -gamma_t and hi > gamma_t:
        overlap = 2.0 * gamma_t
        p = overlap / (2.0 * sigma_gamma)
        return p, "Unreliable"
    if sigma_gamma == 0.0:
        p = 1.0 if abs(gamma) <= gamma_t else 0.0
    else:
        overlap = max(0.0, min(hi, gamma_t) - max(lo, -gamma_t))
        p = overlap / (2.0 * sigma_gamma)
    return p, ("Acceptable" if p > 0.5 else "Unacceptable")


def _weighted_median(values: list[float], weights: list[float]) -> float:
    order = np.argsort(values)
    v = np.asarray(values)[order]
    w = np.asarray(weights)[order]
    cum = np.cumsum(w)
    return float(v[np.searchsorted(cum, 0.5 * cum[-1])])


def combine_cores(cores: list[VerdictCore]) -> VerdictCore:
    """Inverse-variance combination of several estimates of one station.

    The weights treat the cores as independent; the combined uncertainty
    does not — the weighted average is applied to each core's error
    components, so noise sources feeding several cores (a shared hop, an
    overlapping reference clique) are carried through at full strength
    instead of being divided away.
    """
    if not cores:
        raise DomainError("nothing to combine")
    if len(cores) == 1:
        return cores[0]

    if len(cores) >= 3:
        # A reference cluster formed by stations sharing a similar large
        # error seeds chains with a common offset; evidence routed from
        # such an anchor disagrees with the bulk and is trimmed. The
        # pivot is the inverse-variance weighted median, which a
        # minority of poisoned cores cannot drag.
        med = _weighted_median(
            [c.gamma for c in cores],
            [1.0 / max(c.sigma ** 2, _SIGMA_FLOOR ** 2) for c in cores])
        kept = [c for c in cores if abs(c.gamma - med) <= 3.0 * c.sigma]
        if kept:
            cores = kept

    weights = [1.0 / max(c.sigma ** 2, _SIGMA_FLOOR ** 2) for c in cores]
    total = sum(weights)
    gamma = sum(w * c.gamma for w, c in zip(weights, cores)) / total
    comp: dict[str, float] = defaultdict(float)
    for idx, (w, c) in enumerate(zip(weights, cores)):
        # A core without a stated budget is its own independent source.
        components = c.components or ((f"\x00{idx}", c.sigma),)
        for key, value in components:
            comp[key] += w * value / total
    sigma = math.sqrt(sum(v * v for v in comp.values()))
    provenance = "|".join(c.provenance for c in cores)
    if any(c.provenance == "RCS-direct" for c in cores):
        provenance = "RCS-direct"
    return VerdictCore(fcs_id=cores[0].fcs_id, gamma=gamma, sigma=sigma,
                       provenance=provenance,
                       components=tuple(sorted(comp.items())))


def unconditioned_band_probability(n: int, gamma0: float,
                                   sigma: float) -> float:
    """P(all n independent normal errors fall inside [-gamma0, gamma0])."""
    p1 = 2.0 * norm.cdf(gamma0 / sigma) - 1.0
    return p1 ** n


def cluster_probability(n: int, gamma0: float, l: float, sigma: float,
                        fleets: int = 1_000_000,
                        seed: int = 20240301) -> float:
    """P(all n station errors lie in [-gamma0, gamma0] | every pairwise
    difference is within l), errors i.i.d. normal.

    The fleet mean is independent of the deviations from the mean, and
    the pairwise precondition constrains only the deviations; so the
    deviations are sampled (importance-sampled at a narrower scale so the
    precondition is hit often) and the mean is integrated analytically.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    if n == 1 or math.isinf(l):
        return unconditioned_band_probability(n, gamma0, sigma)
    sigma_m = sigma / math.sqrt(n)
    if l <= 0.0:
        return 2.0 * norm.cdf(gamma0 / sigma_m) - 1.0

    scale = min(sigma, l / 3.0)
    rng = np.random.default_rng(seed)
    num = 0.0
    den = 0.0
    batch = 200_000
    drawn = 0
    while drawn < fleets:
        m = min(batch, fleets - drawn)
        drawn += m
        z = rng.standard_normal((m, n))
        d = scale * (z - z.mean(axis=1, keepdims=True))
        span_ok = (d.max(axis=1) - d.min(axis=1)) <= l
        if not span_ok.any():
            continue
        d = d[span_ok]
        w = np.exp(-0.5 * (d * d).sum(axis=1)
                   * (1.0 / sigma ** 2 - 1.0 / scale ** 2))
        g = norm.cdf((gamma0 - d.max(axis=1)) / sigma_m) \
            - norm.cdf((-gamma0 - d.min(axis=1)) / sigma_m)
        num += float((w * np.clip(g, 0.0, None)).sum())
        den += float(w.sum())
    if den == 0.0:
        raise DataInconsistencyError("no fleet satisfied the precondition")
    return num / den


@dataclass
class EstimationResult:
    verdicts: list[StationVerdict]
    clusters: list[ReferenceCluster]
    chains: list[ComparisonChain]
    exclusion_log: list[tuple[str, str]]
    unestimated_fcs: list[str]
    warnings: list[str] = field(default_factory=list)


def run_pipeline(orders: list[ChargingOrder],
                 cfg: ModelConfig) -> EstimationResult:
    """Full estimation over parsed orders: segmentation, filtering,
    stability screening, density estimation, reference clusters, chains,
    verdict combination and classification."""
    all_fcs = sorted({o.fcs_id for o in orders})

    segments: list[ChargingSegment] = []
    for order in orders:
        segments.extend(segment_order(order, cfg.current_pp_threshold_a))

    filtered, log = filter_segments(segments, cfg)

    estimates: dict[str, DensityEstimate] = {}
    for seg in filtered:
        try:
            estimates[seg.key] = soc_quant.estimate_segment(seg, cfg)
        except (DataInconsistencyError, DomainError) as exc:
            log.append((seg.key, f"quarantined: {exc}"))
    filtered = [s for s in filtered if s.key in estimates]

    pool, stab_log = screen_unstable_evs(
        filtered, cfg,
        expected={k: e.expected_e_d / cfg.eta_fixed
                  for k, e in estimates.items()})
    log.extend(stab_log)

    pooled = build_pooled(pool, estimates, cfg)
    clusters = find_reference_clusters(pooled, cfg)

    warnings: list[str] = []
    if not clusters:
        warnings.append("no reference clusters found; insufficient data")

    # Overlapping cliques of one EV reuse the same pooled densities, so
    # a station keeps only its best core per EV: largest clique, then
    # smallest uncertainty.
    best_direct: dict[tuple[str, str], tuple[tuple, VerdictCore]] = {}
    for cluster in clusters:
        n = len(cluster.fcs_ids)
        e_d1 = cluster.e_d_true_est
        for fcs_id in cluster.fcs_ids:
            gamma, sigma = reference_station_error(cluster, fcs_id)
            rank = (-n, sigma)
            key = (fcs_id, cluster.ev_id)
            # Error budget of the member-vs-anchor ratio: one term per
            # member pooled density (the member's own enters both the
            # numerator and the anchor mean) and one per member's true
            # error, whose mean the anchor cannot remove. Components of
            # overlapping cliques share keys and stay correlated.
            e_da = cluster.per_fcs_density[fcs_id][0]
            comp: dict[str, float] = {}
            for m, (_, sig_m) in cluster.per_fcs_density.items():
                coeff = -e_da / (n * e_d1 ** 2)
                if m == fcs_id:
                    coeff += 1.0 / e_d1
                comp[f"p:{cluster.ev_id}:{m}"] = coeff * sig_m
                comp[f"g:{m}"] = -(1.0 + gamma) * cfg.fcs_error_sigma / n
            if key not in best_direct or rank < best_direct[key][0]:
                best_direct[key] = (rank, VerdictCore(
                    fcs_id=fcs_id, gamma=gamma,
                    sigma=math.sqrt(sum(c * c for c in comp.values())),
                    provenance="RCS-direct",
                    components=tuple(sorted(comp.items()))))

    cores_by_fcs: dict[str, list[VerdictCore]] = defaultdict(list)
    for (fcs_id, _), (_, core) in sorted(best_direct.items()):
        cores_by_fcs[fcs_id].append(core)

    root_cores = {fcs: combine_cores(cores)
                  for fcs, cores in cores_by_fcs.items()}

    chains, tree_edges = build_chains(pooled, clusters, cfg)
    for root in sorted(tree_edges):
        seed = root_cores.get(root)
        if seed is None:
            continue
        for core in propagate_chain(tree_edges[root], seed):
            cores_by_fcs[core.fcs_id].append(core)

    verdicts: list[StationVerdict] = []
    for fcs_id in sorted(cores_by_fcs):
        core = combine_cores(cores_by_fcs[fcs_id])
        p, classification = acceptance_probability(
            core.gamma, core.sigma, cfg.acceptable_gamma_t)
        verdicts.append(StationVerdict(
            fcs_id=fcs_id, gamma=core.gamma, sigma_gamma=core.sigma,
            interval=(core.gamma - core.sigma, core.gamma + core.sigma),
            p_acceptable=p, classification=classification,
            provenance=core.provenance))

    estimated = {v.fcs_id for v in verdicts}
    unestimated = [f for f in all_fcs if f not in estimated]
    return EstimationResult(verdicts=verdicts, clusters=clusters,
                            chains=chains, exclusion_log=log,
                            unestimated_fcs=unestimated, warnings=warnings)
