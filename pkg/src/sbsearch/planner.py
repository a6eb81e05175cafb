"""Confidence analysis for the guaranteed-superblock count.

From training queries we estimate the distribution of superblock bound ratios
(each superblock's bound divided by the query's best superblock bound), bin
it, and measure how often a superblock in a given bin holds a true top-k
document. Order-statistic CDFs over that distribution then give, for a count
``gamma``, the probability that the gamma-th ranked superblock contains no
top-k document. The estimate treats the per-bin relevance rate as independent
of superblock position, which is conservative for clustered layouts; report
output flags this.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import betainc

from .retrieval import accumulate_bounds, safe_config, search

logger = logging.getLogger(__name__)

POSITION_INDEPENDENCE_NOTE = (
    "note: per-bin relevance rates are treated as position-independent; "
    "the confidence estimate is conservative for clustered layouts"
)


@dataclass(frozen=True)
class RatioSample:
    """One (query, superblock) observation from a training pass."""

    query_id: str
    superblock: int
    ratio: float
    relevant: bool


@dataclass(frozen=True)
class TightnessSample:
    """Best real document score in a superblock divided by the superblock bound."""

    superblock: int
    tightness: float


def order_stat_cdf(n: int, i: int, x_cum: float) -> float:
    """P(i-th largest of n iid samples <= x) given the underlying P(X <= x).

    Evaluated through the regularized incomplete beta function, so it is
    stable for n up to 10^6 (no raw binomial coefficients).
    """
    if not 1 <= i <= n:
        raise ValueError(f"rank i must be in [1, n], got i={i}, n={n}")
    if not 0.0 <= x_cum <= 1.0:
        raise ValueError(f"x_cum must be in [0, 1], got {x_cum}")
    # sum_{j=n-i+1}^{n} C(n,j) p^j (1-p)^{n-j} = I_p(n-i+1, i)
    return float(betainc(n - i + 1, i, x_cum))


def collect_samples(index, training_queries, k: int) -> list[RatioSample]:
    """Bound ratios plus top-k membership labels, one sample per (query, superblock).

    Labels come from a rank-safe run at depth k. Queries whose bounds are all
    zero are skipped with a warning.
    """
    n_super = index.layout.num_superblocks
    b, c = index.layout.b, index.layout.c
    cfg = safe_config(k)
    samples: list[RatioSample] = []
    for qid, query in training_queries:
        if len(query) == 0:
            logger.warning("query %s is empty; skipped", qid)
            continue
        bounds = accumulate_bounds(query, index.sb_max_store, saturate=False)
        top = int(bounds.max())
        if top == 0:
            logger.warning("query %s has all-zero superblock bounds; skipped", qid)
            continue
        relevant = np.zeros(n_super, dtype=bool)
        for ext_id, _score in search(query, index, cfg):
            slot = index.ext_to_slot[ext_id]
            relevant[slot // b // c] = True
        ratios = bounds / top
        for x in range(n_super):
            samples.append(RatioSample(qid, x, float(ratios[x]), bool(relevant[x])))
    return samples


@dataclass(eq=False)
class BinModel:
    """Equal-width bins over [0, 1] with an empirical ratio CDF and per-bin relevance rates.

    ``p_rel`` holds the relevance rates used for confidence computation: the
    raw per-bin fractions projected onto a non-decreasing sequence (weighted
    isotonic regression). Relevance is structurally non-decreasing in the
    bound ratio; the projection removes small-sample noise in sparse bins that
    would otherwise break the monotone decay of the relevance probability in
    gamma. ``raw_p_rel`` keeps the unsmoothed fractions. Empty bins stay at 0;
    they carry no order-statistic mass because the empirical CDF is flat
    across them.
    """

    boundaries: np.ndarray  # len num_bins + 1
    p_rel: np.ndarray  # isotonic P(relevant | bin), 0 for empty bins
    raw_p_rel: np.ndarray
    counts: np.ndarray
    sorted_ratios: np.ndarray
    num_superblocks: int

    @property
    def num_bins(self) -> int:
        return self.p_rel.size

    def cdf_leq(self, x: float) -> float:
        return float(np.searchsorted(self.sorted_ratios, x, side="right")) / self.sorted_ratios.size

    def cdf_lt(self, x: float) -> float:
        """Left limit of the empirical CDF (strict inequality)."""
        return float(np.searchsorted(self.sorted_ratios, x, side="left")) / self.sorted_ratios.size


def fit_bin_model(samples: list[RatioSample], num_superblocks: int, num_bins: int = 100) -> BinModel:
    if not samples:
        raise ValueError("no samples to fit")
    ratios = np.array([s.ratio for s in samples])
    relevant = np.array([s.relevant for s in samples])
    boundaries = np.linspace(0.0, 1.0, num_bins + 1)
    # half-open bins [l, r), last bin closed at 1
    idx = np.minimum((ratios * num_bins).astype(np.int64), num_bins - 1)
    counts = np.bincount(idx, minlength=num_bins)
    rel_counts = np.bincount(idx, weights=relevant.astype(np.float64), minlength=num_bins)
    with np.errstate(invalid="ignore"):
        raw = np.where(counts > 0, rel_counts / np.maximum(counts, 1), 0.0)
    p_rel = raw.copy()
    occupied = counts > 0
    if occupied.sum() > 1:
        from sklearn.isotonic import IsotonicRegression

        centers = (boundaries[:-1] + boundaries[1:]) / 2
        iso = IsotonicRegression(y_min=0.0, y_max=1.0, increasing=True)
        p_rel[occupied] = iso.fit_transform(
            centers[occupied], raw[occupied], sample_weight=counts[occupied]
        )
    return BinModel(
        boundaries=boundaries,
        p_rel=p_rel,
        raw_p_rel=raw,
        counts=counts,
        sorted_ratios=np.sort(ratios),
        num_superblocks=num_superblocks,
    )


def gamma_bin_mass(n: int, gamma: int, model: BinModel) -> np.ndarray:
    """Probability that the gamma-th ranked ratio lands in each bin.

    Interior right edges use the strict (left-limit) CDF so a ratio sitting
    exactly on a boundary is counted in the bin it opens; the masses then
    partition and sum to one exactly. The closed last bin uses P(X_(g) <= 1).
    """
    edges_lt = np.array([order_stat_cdf(n, gamma, model.cdf_lt(x)) for x in model.boundaries])
    upper = edges_lt[1:].copy()
    upper[-1] = order_stat_cdf(n, gamma, model.cdf_leq(1.0))
    return upper - edges_lt[:-1]


def confidence(gamma: int, model: BinModel) -> float:
    """Probability that the gamma-th ranked superblock holds no top-k document."""
    gamma = min(max(gamma, 1), model.num_superblocks)
    mass = gamma_bin_mass(model.num_superblocks, gamma, model)
    p_rel_at_gamma = float(np.dot(model.p_rel, mass))
    return float(np.clip(1.0 - p_rel_at_gamma, 0.0, 1.0))


def confidence_table(model: BinModel, gammas) -> list[tuple[int, float]]:
    return [(int(g), confidence(int(g), model)) for g in gammas]


def collect_tightness(index, queries) -> list[TightnessSample]:
    """Exact best-score / bound ratio per superblock, from a full scoring pass."""
    from .sparse import query_lookup

    layout = index.layout
    samples: list[TightnessSample] = []
    for _qid, query in queries:
        if len(query) == 0:
            continue
        bounds = accumulate_bounds(query, index.sb_max_store, saturate=False)
        lookup = query_lookup(query)
        for x in range(layout.num_superblocks):
            if bounds[x] == 0:
                continue
            b0, b1 = layout.superblock_blocks(x)
            best = 0
            for blk in range(b0, b1):
                scores = index.doc_index.score_block(blk, query, lookup=lookup)
                _, end = layout.block_slots(blk)
                nreal = end - blk * layout.b
                if nreal > 0:
                    best = max(best, int(scores[:nreal].max()))
            samples.append(TightnessSample(x, best / int(bounds[x])))
    return samples


@dataclass(eq=False)
class TightnessReport:
    counts: np.ndarray
    edges: np.ndarray
    mean: float
    percentiles: dict[int, float]
    num_samples: int


def tightness_report(index, queries, num_bins: int = 50) -> TightnessReport:
    samples = collect_tightness(index, queries)
    values = np.array([s.tightness for s in samples]) if samples else np.zeros(0)
    counts, edges = np.histogram(values, bins=num_bins, range=(0.0, 1.0))
    mean = float(values.mean()) if values.size else 0.0
    pct = {p: float(np.percentile(values, p)) if values.size else 0.0 for p in (10, 25, 50, 75, 90)}
    return TightnessReport(counts=counts, edges=edges, mean=mean,
                           percentiles=pct, num_samples=values.size)


def write_confidence_tsv(path, table: list[tuple[int, float]]) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {POSITION_INDEPENDENCE_NOTE}\n")
        fh.write("gamma\tconfidence_no_topk\n")
        for gamma, p in table:
            fh.write(f"{gamma}\t{p:.6f}\n")


def write_histogram_tsv(path, report: TightnessReport) -> None:
    with open(path, "w") as fh:
        fh.write("bin_left\tbin_right\tcount\n")
        for i, count in enumerate(report.counts):
            fh.write(f"{report.edges[i]:.4f}\t{report.edges[i + 1]:.4f}\t{int(count)}\n")
