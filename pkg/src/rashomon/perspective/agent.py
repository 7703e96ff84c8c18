from __future__ import annotations

import abc
import threading
from typing import Sequence

from ..buffer import Observation
from ..kgstore import PerspectiveGraph
from .models import (
    Attack,
    BackendError,
    EncodingResult,
    InvocationCounter,
    PerspectiveConfig,
    Proposal,
    QueryContext,
    RelevanceDecision,
)


class Backend(abc.ABC):
    """What a perspective consults for judgement calls.

    Backends read the perspective's graph but never write it; the agent
    applies encodings itself.
    """

    @abc.abstractmethod
    def assess_relevance(self, config: PerspectiveConfig, observation: Observation) -> RelevanceDecision: ...

    @abc.abstractmethod
    def encode(
        self, config: PerspectiveConfig, observation: Observation, graph: PerspectiveGraph
    ) -> EncodingResult: ...

    @abc.abstractmethod
    def propose(
        self, config: PerspectiveConfig, ctx: QueryContext, graph: PerspectiveGraph
    ) -> Proposal | None: ...

    @abc.abstractmethod
    def critique(
        self,
        config: PerspectiveConfig,
        ctx: QueryContext,
        own: Proposal | None,
        others: Sequence[Proposal],
        graph: PerspectiveGraph,
    ) -> list[Attack]: ...


class Perspective:
    """A goal-perspective agent: one config, one backend, one private graph.

    Calls on the same agent are serialized; different agents run
    independently.
    """

    def __init__(
        self,
        config: PerspectiveConfig,
        prefixes: dict[str, str] | None = None,
        counter: InvocationCounter | None = None,
    ):
        self.config = config
        self.backend: Backend = config.backend
        self.graph = PerspectiveGraph(config.id, dict(prefixes or {}), config.seed_tbox.copy())
        self.counter = counter or InvocationCounter()
        self._lock = threading.Lock()

    @property
    def id(self) -> str:
        return self.config.id

    def __repr__(self) -> str:
        return f"Perspective({self.id!r})"

    def assess_relevance(self, observation: Observation) -> RelevanceDecision:
        with self._lock:
            self.counter.add("relevance")
            return self.backend.assess_relevance(self.config, observation)

    def encode(self, observation: Observation) -> tuple[EncodingResult, str]:
        """Run the backend encoder and commit the result to this graph."""
        with self._lock:
            self.counter.add("encode")
            result = self.backend.encode(self.config, observation, self.graph)
            if not result.triples:
                raise BackendError(f"{self.id}: empty encoding for {observation.id}")
            encoding_id = self.graph.insert_encoding(observation.id, result.triples, result.tbox_delta)
            return result, encoding_id

    def propose(self, ctx: QueryContext) -> Proposal | None:
        with self._lock:
            if not self.graph.encodings:
                return None
            self.counter.add("propose")
            proposal = self.backend.propose(self.config, ctx, self.graph)
            if proposal is None:
                return None
            if proposal.perspective_id != self.id:
                raise BackendError(f"{self.id}: proposal claims to come from {proposal.perspective_id!r}")
            missing = [e for e in proposal.supporting_encodings if e not in self.graph.encodings]
            if not proposal.supporting_encodings or missing:
                raise BackendError(f"{self.id}: proposal cites unresolvable encodings {missing}")
            return proposal

    def critique(self, ctx: QueryContext, own: Proposal | None, others: Sequence[Proposal]) -> list[Attack]:
        with self._lock:
            others = [p for p in others if p.perspective_id != self.id]
            if not others:
                return []
            self.counter.add("critique")
            return list(self.backend.critique(self.config, ctx, own, others, self.graph))
