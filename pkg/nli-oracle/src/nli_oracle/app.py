"""Entailment oracle HTTP server.

Wire protocol (shared with the seqscore clustering client):

* ``POST /`` with ``{"premise": ..., "hypothesis": ..., "context": ...}``
  (context optional) answers ``{"entails": true|false}``;
* ``GET /health`` answers ``{"status": "ok"}``;
* malformed request bodies get a 4xx reply.

The verdict is the entailment-class probability of an NLI classifier
thresholded at config.threshold. Inference runs in eval mode with no
sampling, so replies are deterministic given the model weights.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Protocol

from fastapi import FastAPI
from pydantic import BaseModel

DEFAULT_MODEL = "microsoft/deberta-base-mnli"


class ModelLoadError(RuntimeError):
    """The configured NLI model could not be loaded."""


@dataclass(frozen=True)
class OracleConfig:
    model: str = DEFAULT_MODEL
    device: str = "cpu"
    port: int = 8841
    host: str = "127.0.0.1"
    threshold: float = 0.5

    def __post_init__(self) -> None:
        if not 0.0 < self.threshold < 1.0:
            raise ValueError(f"threshold must be in (0, 1), got {self.threshold}")


class NliClassifier(Protocol):
    def entail_prob(self, premise: str, hypothesis: str,
                    context: Optional[str] = None) -> float: ...


class TransformersNliClassifier:
    """Three-class NLI head; exposes the entailment-class probability.

    When question context is supplied it is prepended to both sides, since
    entailment between short answers is context-dependent.
    """

    def __init__(self, model_name: str = DEFAULT_MODEL, device: str = "cpu") -> None:
        try:
            import torch
            from transformers import AutoModelForSequenceClassification, AutoTokenizer
        except ImportError as exc:
            raise ModelLoadError(f"transformers/torch unavailable: {exc}") from exc
        try:
            self._tokenizer = AutoTokenizer.from_pretrained(model_name)
            self._model = AutoModelForSequenceClassification.from_pretrained(model_name)
        except Exception as exc:
            raise ModelLoadError(f"cannot load NLI model {model_name!r}: {exc}") from exc
        self._torch = torch
        self._model.to(device).eval()
        self._device = device
        self._entail_id = self._find_entailment_label()

    def _find_entailment_label(self) -> int:
        for idx, label in self._model.config.id2label.items():
            if "entail" in str(label).lower():
                return int(idx)
        raise ModelLoadError(
            f"no entailment label in id2label: {self._model.config.id2label}"
        )

    def entail_prob(self, premise: str, hypothesis: str,
                    context: Optional[str] = None) -> float:
        if context:
            premise = f"{context} {premise}"
            hypothesis = f"{context} {hypothesis}"
        enc = self._tokenizer(premise, hypothesis, return_tensors="pt",
                              truncation=True).to(self._device)
        with self._torch.no_grad():
            logits = self._model(**enc).logits[0]
        probs = self._torch.softmax(logits, dim=-1)
        return float(probs[self._entail_id])


class EntailmentRequest(BaseModel):
    premise: str
    hypothesis: str
    context: Optional[str] = None


def create_app(config: OracleConfig, classifier: Optional[NliClassifier] = None) -> FastAPI:
    """Build the app; pass a classifier to skip loading the real model."""
    if classifier is None:
        classifier = TransformersNliClassifier(config.model, config.device)

    app = FastAPI(title="nli-oracle")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.post("/")
    def entails(request: EntailmentRequest) -> dict:
        prob = classifier.entail_prob(request.premise, request.hypothesis, request.context)
        return {"entails": prob >= config.threshold}

    return app


def serve(config: OracleConfig, classifier: Optional[NliClassifier] = None) -> None:
    """Load the model (unless injected) and serve until interrupted."""
    import uvicorn

    app = create_app(config, classifier)
    uvicorn.run(app, host=config.host, port=config.port)
