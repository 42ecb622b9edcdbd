"""Self-consistency voting over sampled candidates.

Candidates are grouped into clusters by a key function (normalized text
for free-form hops, extracted polarity for the final hop), clusters are
ranked, and the best-scored member of the winning cluster is selected.
A consistency flag records whether the winner reached the configured
minimum cluster size.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .backend import Candidate
from .errors import AllUnparseableError, EmptyInputError
from .extraction import extract_polarity, normalize_text

# Cluster key for candidates that carry no usable content: empty after
# normalization, or no polarity label found. Always ranks last.
UNPARSEABLE_KEY = "⊥"


@dataclass
class VotingConfig:
    """Sampling width and the agreement threshold.

    ``min_cluster`` defaults to ceil(k/2), a strict majority of an odd k.
    """

    k: int = 5
    min_cluster: int | None = None

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.min_cluster is None:
            self.min_cluster = (self.k + 1) // 2
        if not 1 <= self.min_cluster <= self.k:
            raise ValueError(
                f"min_cluster must be between 1 and k={self.k}, got {self.min_cluster}"
            )


@dataclass
class CandidateCluster:
    key: str
    members: list[Candidate] = field(default_factory=list)
    member_indices: list[int] = field(default_factory=list)

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def mass(self) -> float:
        return sum(c.score for c in self.members)

    @property
    def first_seen(self) -> int:
        return self.member_indices[0]


def text_key(text: str) -> str:
    """Cluster key for free-form answers: normalized text, or the
    unparseable sentinel when nothing survives normalization."""
    normalized = normalize_text(text)
    return normalized if normalized else UNPARSEABLE_KEY


def polarity_key(text: str) -> str:
    """Cluster key for final-hop answers: the extracted polarity label,
    or the unparseable sentinel when no label is present."""
    result = extract_polarity(text)
    if result.parseable:
        assert result.polarity is not None
        return result.polarity.value
    return UNPARSEABLE_KEY


def cluster_candidates(candidates, key_of) -> list[CandidateCluster]:
    """Group candidates by key and rank the groups.

    Order: larger clusters first, then greater score mass, then earlier
    first appearance. The unparseable sentinel cluster always sorts last
    regardless of size or mass.
    """
    candidates = list(candidates)
    if not candidates:
        raise EmptyInputError("cannot cluster an empty candidate list")
    by_key: dict[str, CandidateCluster] = {}
    for index, candidate in enumerate(candidates):
        key = key_of(candidate.text)
        cluster = by_key.get(key)
        if cluster is None:
            cluster = by_key[key] = CandidateCluster(key=key)
        cluster.members.append(candidate)
        cluster.member_indices.append(index)
    return sorted(
        by_key.values(),
        key=lambda c: (c.key == UNPARSEABLE_KEY, -c.size, -c.mass, c.first_seen),
    )


def best_member(cluster: CandidateCluster) -> Candidate:
    """Highest-scored member; score ties go to the earliest sample."""
    order = sorted(
        range(cluster.size),
        key=lambda i: (-cluster.members[i].score, cluster.member_indices[i]),
    )
    return cluster.members[order[0]]


def select_answer(
    clusters: list[CandidateCluster], config: VotingConfig
) -> tuple[Candidate, bool]:
    """Pick the winning candidate from ranked clusters.

    Returns the best member of the top cluster and a flag telling whether
    that cluster met ``min_cluster``. Raises when every candidate was
    unparseable; the sentinel cluster sorts last, so it can only win when
    it is the only cluster.
    """
    if not clusters:
        raise EmptyInputError("cannot select from an empty cluster list")
    top = clusters[0]
    if top.key == UNPARSEABLE_KEY:
        raise AllUnparseableError("every sampled candidate was unparseable")
    assert config.min_cluster is not None
    return best_member(top), top.size >= config.min_cluster


def vote(candidates, key_of, config: VotingConfig) -> tuple[Candidate, bool]:
    """Cluster, rank, and select in one call."""
    return select_answer(cluster_candidates(candidates, key_of), config)
