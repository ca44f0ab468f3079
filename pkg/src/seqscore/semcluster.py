"""Semantic clustering of answer texts.

Clustering is greedy and single-pass: each answer is compared against the
first member (the representative) of every existing cluster in creation
order and joins the first one where equivalence holds, otherwise it opens
a new cluster. Cluster ids are dense 0..K-1 in first-appearance order.

Equivalence comes in three flavors: exact string equality, equality after
normalization (see :mod:`seqscore.textnorm`), or bidirectional entailment
decided by an external oracle over HTTP.

Oracle wire protocol: POST a JSON object ``{"premise": ..., "hypothesis":
...}`` (plus ``"context"`` when the caller supplies question context) to
the endpoint; the reply must be ``{"entails": true|false}``. Transport
failures, non-2xx statuses, and malformed replies raise distinct errors;
there is no silent fallback.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional, Protocol, Sequence

import requests

from .textnorm import normalize_answer

__all__ = [
    "ClusterStrategy",
    "EntailmentVerdict",
    "EntailmentOracle",
    "HttpEntailmentOracle",
    "CachedOracle",
    "OracleError",
    "EntailmentTransportError",
    "EntailmentStatusError",
    "EntailmentProtocolError",
    "cluster",
    "entails",
]

ENDPOINT_ENV_VAR = "SEQSCORE_NLI_ENDPOINT"
DEFAULT_TIMEOUT = 30.0


class OracleError(Exception):
    """Base class for entailment-oracle failures."""


class EntailmentTransportError(OracleError):
    """Oracle unreachable or timed out."""


class EntailmentStatusError(OracleError):
    """Oracle answered with a non-2xx status."""


class EntailmentProtocolError(OracleError):
    """Oracle reply did not match the expected JSON schema."""


@dataclass(frozen=True)
class EntailmentVerdict:
    premise: str
    hypothesis: str
    entails: bool


class EntailmentOracle(Protocol):
    def entails(self, premise: str, hypothesis: str, context: Optional[str] = None) -> bool: ...


@dataclass
class HttpEntailmentOracle:
    """Entailment client speaking the JSON protocol described above."""

    endpoint: str
    timeout: float = DEFAULT_TIMEOUT

    def entails(self, premise: str, hypothesis: str, context: Optional[str] = None) -> bool:
        payload: dict = {"premise": premise, "hypothesis": hypothesis}
        if context is not None:
            payload["context"] = context
        try:
            resp = requests.post(self.endpoint, json=payload, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise EntailmentTransportError(f"oracle at {self.endpoint} unreachable: {exc}") from exc
        if not 200 <= resp.status_code < 300:
            raise EntailmentStatusError(
                f"oracle at {self.endpoint} replied with status {resp.status_code}"
            )
        try:
            body = resp.json()
        except ValueError as exc:
            raise EntailmentProtocolError(f"oracle reply is not JSON: {exc}") from exc
        if not isinstance(body, dict) or not isinstance(body.get("entails"), bool):
            raise EntailmentProtocolError(
                f"oracle reply missing boolean 'entails' field: {body!r}"
            )
        return body["entails"]


@dataclass
class CachedOracle:
    """Memoizes verdicts keyed on the ordered (premise, hypothesis, context)."""

    inner: EntailmentOracle
    _cache: dict[tuple[str, str, Optional[str]], bool] = field(default_factory=dict, repr=False)

    def entails(self, premise: str, hypothesis: str, context: Optional[str] = None) -> bool:
        key = (premise, hypothesis, context)
        if key not in self._cache:
            self._cache[key] = self.inner.entails(premise, hypothesis, context)
        return self._cache[key]


@dataclass(frozen=True)
class ClusterStrategy:
    """How answer equivalence is decided.

    ``kind`` is one of ``exact``, ``normalized``, ``entailment``. For
    entailment, either pass a ready ``oracle`` (tests use mocks) or an
    ``endpoint`` URL; the endpoint falls back to the SEQSCORE_NLI_ENDPOINT
    environment variable.
    """

    kind: str
    endpoint: Optional[str] = None
    timeout: float = DEFAULT_TIMEOUT
    cache: bool = True
    oracle: Optional[EntailmentOracle] = None

    def __post_init__(self) -> None:
        if self.kind not in ("exact", "normalized", "entailment"):
            raise ValueError(f"unknown cluster strategy {self.kind!r}")

    def build_oracle(self) -> EntailmentOracle:
        if self.kind != "entailment":
            raise ValueError(f"strategy {self.kind!r} does not use an oracle")
        oracle = self.oracle
        if oracle is None:
            endpoint = self.endpoint or os.environ.get(ENDPOINT_ENV_VAR)
            if not endpoint:
                raise ValueError(
                    "entailment clustering needs an oracle endpoint "
                    f"(--endpoint or ${ENDPOINT_ENV_VAR})"
                )
            oracle = HttpEntailmentOracle(endpoint=endpoint, timeout=self.timeout)
        return CachedOracle(oracle) if self.cache else oracle


def entails(
    premise: str,
    hypothesis: str,
    endpoint: str,
    timeout: float = DEFAULT_TIMEOUT,
    context: Optional[str] = None,
) -> EntailmentVerdict:
    """One-off oracle query; see the module docstring for the protocol."""
    verdict = HttpEntailmentOracle(endpoint=endpoint, timeout=timeout).entails(
        premise, hypothesis, context
    )
    return EntailmentVerdict(premise=premise, hypothesis=hypothesis, entails=verdict)


def cluster(
    answers: Sequence[str],
    strategy: ClusterStrategy,
    context: Optional[str] = None,
) -> list[int]:
    """Assign dense cluster ids to ``answers`` under ``strategy``.

    ``context`` (typically the question) is forwarded to the entailment
    oracle; the lexical strategies ignore it.
    """
    if len(answers) == 0:
        raise ValueError("answers must be non-empty")

    if strategy.kind == "exact":
        equivalent = lambda a, b: a == b
    elif strategy.kind == "normalized":
        equivalent = lambda a, b: normalize_answer(a) == normalize_answer(b)
    else:
        oracle = strategy.build_oracle()
        equivalent = lambda a, b: (
            oracle.entails(a, b, context) and oracle.entails(b, a, context)
        )

    representatives: list[str] = []
    ids: list[int] = []
    for answer in answers:
        assigned = None
        for cid, rep in enumerate(representatives):
            if equivalent(answer, rep):
                assigned = cid
                break
        if assigned is None:
            assigned = len(representatives)
            representatives.append(answer)
        ids.append(assigned)
    return ids
