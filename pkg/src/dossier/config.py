"""Run configuration: one JSON file with environment-variable interpolation
for secrets, validated at load, plus the factory that wires the configured
model gateway, transports, and clients into a ready runtime."""

from __future__ import annotations

import copy
import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

from .biodata.cassette import CassetteStore, LiveTransport, RecordingTransport, ReplayTransport
from .biodata.clients import BioClient
from .core import Clock, DossierError, FixedClock
from .modelgw import (
    HttpChatClient,
    HttpEmbeddingClient,
    HttpRerankClient,
    MockChatClient,
    MockEmbeddingClient,
    MockRerankClient,
)
from .retrieval import CollectionStore


class ConfigError(DossierError):
    pass


def resource_path(*parts: str) -> Path:
    return Path(__file__).parent / "resources" / Path(*parts)


DEFAULTS: dict = {
    "offline": True,
    "fixtures_dir": "",  # empty -> packaged fixtures
    "out_dir": "out",
    "plan": "",  # empty -> packaged default plan
    "clock_pin": "2025-06-01T00:00:00+00:00",
    "chat": {
        "mode": "mock",
        "endpoint": "",
        "model": "mistral-7b-instruct",
        "temperature": 0.1,
        "max_tokens": 1024,
        "timeout_ms": 60000,
        "api_key_env": "CHAT_API_KEY",
    },
    "embed": {
        "mode": "mock",
        "endpoint": "",
        "model": "bge-base-en",
        "dim": 256,
        "timeout_ms": 30000,
        "api_key_env": "EMBED_API_KEY",
    },
    "rerank": {
        "mode": "mock",
        "endpoint": "",
        "model": "mxbai-rerank-large",
        "timeout_ms": 30000,
        "api_key_env": "RERANK_API_KEY",
        "required": True,
    },
    "judge": {
        "mode": "mock",
        "endpoint": "",
        "model": "gpt-4",
        "timeout_ms": 60000,
        "api_key_env": "JUDGE_API_KEY",
        "prompt_version": "v1",
    },
    "retrieval": {
        "k_dense": 20,
        "k_sparse": 20,
        "top_n": 5,
        "rerank_top_m": 20,
        "chunk_buffer": 1,
        "chunk_percentile": 95.0,
    },
    "corpus": {"max_docs": 50, "max_fulltext": 2},
    # fixture ortholog accessions; live runs may override with real ones
    "similarity_species": [
        ["monkeys", "P90001"],
        ["mice", "P90002"],
        ["rabbits", "P90003"],
        ["dogs", "P90004"],
        ["Guinea pigs", "P90005"],
    ],
    "genesets": ["GO_Biological_Process_2023", "KEGG_2021_Human"],
    "disease_keyword": "",
    "summary_threshold": 400,
    "swot_budget": 6,
    "tools": {"allow_scripts": False},
}

_ENV_PATTERN = re.compile(r"\$\{([A-Z0-9_]+)\}")


def _interpolate(value):
    if isinstance(value, str):
        def sub(m):
            name = m.group(1)
            if name not in os.environ:
                raise ConfigError(f"environment variable {name} is not set")
            return os.environ[name]

        return _ENV_PATTERN.sub(sub, value)
    if isinstance(value, dict):
        return {k: _interpolate(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v) for v in value]
    return value


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def get(self, *path, default=None):
        node = self.values
        for part in path:
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    @property
    def offline(self) -> bool:
        return bool(self.values["offline"])

    @property
    def fixtures_dir(self) -> Path:
        configured = os.environ.get("DOSSIER_FIXTURES_DIR") or self.values["fixtures_dir"]
        return Path(configured) if configured else resource_path("fixtures", "cassettes")

    @property
    def plan_path(self) -> Path:
        return Path(self.values["plan"]) if self.values["plan"] else resource_path("plan", "default_plan.json")

    @property
    def out_dir(self) -> Path:
        return Path(self.values["out_dir"])

    @property
    def clock(self) -> Clock:
        pin = self.values.get("clock_pin")
        return FixedClock(pin) if pin else Clock()

    def validate(self) -> None:
        if self.offline and not self.fixtures_dir.exists():
            raise ConfigError(f"offline mode requires the fixtures dir: {self.fixtures_dir}")
        if not self.plan_path.exists():
            raise ConfigError(f"dossier plan not found: {self.plan_path}")
        for name in self.values.get("genesets", []):
            path = resource_path("genesets", f"{name}.gmt")
            if not path.exists():
                raise ConfigError(f"gene set library not found: {path}")
        for mode_key in ("chat", "embed", "rerank", "judge"):
            mode = self.get(mode_key, "mode")
            if mode not in ("mock", "http"):
                raise ConfigError(f"{mode_key}.mode must be mock or http, not {mode!r}")
            if mode == "http" and not self.get(mode_key, "endpoint"):
                raise ConfigError(f"{mode_key}.mode=http requires {mode_key}.endpoint")
        pin = self.values.get("clock_pin")
        if pin:
            try:
                FixedClock(pin)
            except ValueError as exc:
                raise ConfigError(f"clock_pin is not an ISO timestamp: {exc}") from exc


def load_config(path: str | Path | None = None) -> RunConfig:
    override = {}
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
        try:
            override = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(override, dict):
            raise ConfigError("config root must be a JSON object")
    cfg = RunConfig(values=_interpolate(_merge(DEFAULTS, override)))
    cfg.validate()
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.values, indent=2, sort_keys=True) + "\n"


@dataclass
class Runtime:
    config: RunConfig
    chat: object
    embedder: object
    reranker: object
    clients: BioClient
    store: CollectionStore
    clock: Clock
    plan: dict


def build_runtime(cfg: RunConfig, record_to: Path | None = None) -> Runtime:
    from .agent.recipes import load_plan

    clock = cfg.clock
    replay = ReplayTransport(CassetteStore(cfg.fixtures_dir))
    if cfg.offline:
        transport = replay
    else:
        transport = LiveTransport()
        if record_to is not None:
            transport = RecordingTransport(transport, CassetteStore(record_to))
    clients = BioClient(transport, replay_transport=replay, clock=clock)

    if cfg.get("chat", "mode") == "mock":
        chat = MockChatClient()
    else:
        chat = HttpChatClient(
            endpoint=cfg.get("chat", "endpoint"),
            model=cfg.get("chat", "model"),
            timeout_ms=int(cfg.get("chat", "timeout_ms")),
            api_key_env=cfg.get("chat", "api_key_env"),
        )
    if cfg.get("embed", "mode") == "mock":
        embedder = MockEmbeddingClient(dim=int(cfg.get("embed", "dim", default=256)))
    else:
        embedder = HttpEmbeddingClient(
            endpoint=cfg.get("embed", "endpoint"),
            model=cfg.get("embed", "model"),
            dim=int(cfg.get("embed", "dim")),
            timeout_ms=int(cfg.get("embed", "timeout_ms")),
            api_key_env=cfg.get("embed", "api_key_env"),
        )
    if cfg.get("rerank", "mode") == "mock":
        reranker = MockRerankClient()
    else:
        reranker = HttpRerankClient(
            endpoint=cfg.get("rerank", "endpoint"),
            model=cfg.get("rerank", "model"),
            timeout_ms=int(cfg.get("rerank", "timeout_ms")),
            api_key_env=cfg.get("rerank", "api_key_env"),
        )

    return Runtime(
        config=cfg,
        chat=chat,
        embedder=embedder,
        reranker=reranker,
        clients=clients,
        store=CollectionStore(),
        clock=clock,
        plan=load_plan(cfg.plan_path),
    )


def build_judge(cfg: RunConfig):
    if cfg.get("judge", "mode") == "mock":
        return MockChatClient()
    return HttpChatClient(
        endpoint=cfg.get("judge", "endpoint"),
        model=cfg.get("judge", "model"),
        timeout_ms=int(cfg.get("judge", "timeout_ms")),
        api_key_env=cfg.get("judge", "api_key_env"),
    )


def make_context_factory(runtime: Runtime, gene: str, disease: str):
    """Builds the RecipeContext factory generate_dossier expects."""
    from .agent.recipes import RecipeContext
    from .agent.tools import TracingChat, build_default_registry

    registry = build_default_registry(
        allow_scripts=bool(runtime.config.get("tools", "allow_scripts", default=False))
    )

    def factory(trace):
        return RecipeContext(
            gene=gene.upper(),
            disease=disease,
            config=runtime.config.values,
            clients=runtime.clients,
            chat=TracingChat(runtime.chat, trace),
            embedder=runtime.embedder,
            reranker=runtime.reranker,
            store=runtime.store,
            registry=registry,
            trace=trace,
            clock=runtime.clock,
            geneset_dir=resource_path("genesets"),
        )

    return factory
