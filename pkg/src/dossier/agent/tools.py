"""Typed tool registry and the per-job trace.

Every external effect a recipe or the loop performs goes through
``ToolRegistry.dispatch``, which validates arguments, logs one ToolCall into
the trace, and attaches the source references the handler returns.  That
single choke point is what makes the provenance audit possible: a dossier
reference with no matching trace step cannot exist.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..core import DossierError, SourceRef
from ..modelgw import ChatRequest

PARAM_TYPES = ("string", "int", "float", "bool", "string_list")


class ToolError(DossierError):
    pass


@dataclass(frozen=True)
class ToolParam:
    name: str
    type: str
    required: bool = True

    def __post_init__(self):
        if self.type not in PARAM_TYPES:
            raise ToolError(f"unknown parameter type {self.type!r}")


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    params: tuple[ToolParam, ...]
    handler: object  # callable(ctx, args) -> ToolResult
    source: str | None = None  # registry source this tool touches, if one


@dataclass(frozen=True)
class ToolResult:
    record: object
    refs: tuple[SourceRef, ...] = ()
    observation: str = ""


@dataclass
class ToolCall:
    tool: str
    args: dict
    observation: str = ""
    refs: tuple[SourceRef, ...] = ()
    error: str | None = None

    def to_json(self) -> dict:
        return {
            "tool": self.tool,
            "args": self.args,
            "observation": self.observation,
            "refs": [
                {"source_name": r.source_name, "locator": r.locator, "detail": r.detail}
                for r in self.refs
            ],
            "error": self.error,
        }


@dataclass
class AgentTrace:
    job_id: str
    steps: list[ToolCall] = field(default_factory=list)
    llm_calls: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    warnings: list[str] = field(default_factory=list)

    def warn(self, message: str):
        self.warnings.append(message)

    def all_refs(self) -> set[tuple[str, str]]:
        return {(r.source_name, r.locator) for step in self.steps for r in step.refs}

    def to_json(self) -> str:
        doc = {
            "job_id": self.job_id,
            "llm_calls": self.llm_calls,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "steps": [s.to_json() for s in self.steps],
            "warnings": self.warnings,
        }
        return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


class TracingChat:
    """Chat client wrapper that accounts calls and token usage in the trace."""

    def __init__(self, inner, trace: AgentTrace):
        self.inner = inner
        self.trace = trace

    def chat(self, req: ChatRequest):
        response = self.inner.chat(req)
        self.trace.llm_calls += 1
        self.trace.prompt_tokens += response.prompt_tokens
        self.trace.completion_tokens += response.completion_tokens
        return response


class ToolRegistry:
    def __init__(self):
        self._specs: dict[str, ToolSpec] = {}

    def register(self, spec: ToolSpec) -> None:
        if spec.name in self._specs:
            raise ToolError(f"tool {spec.name!r} already registered")
        self._specs[spec.name] = spec

    def get(self, name: str) -> ToolSpec:
        spec = self._specs.get(name)
        if spec is None:
            raise ToolError(f"unknown tool {name!r}")
        return spec

    def names(self) -> list[str]:
        return sorted(self._specs)

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def manifest(self) -> str:
        """Prompt-facing tool list, regenerated from the current registry."""
        lines = []
        for name in self.names():
            spec = self._specs[name]
            sig = ", ".join(
                f"{p.name}: {p.type}" + ("" if p.required else "?") for p in spec.params
            )
            lines.append(f"- {name}({sig}): {spec.description}")
        return "\n".join(lines)

    def validate_args(self, spec: ToolSpec, args: dict) -> dict:
        out = {}
        known = {p.name for p in spec.params}
        for key in args:
            if key not in known:
                raise ToolError(f"{spec.name}: unexpected argument {key!r}")
        for p in spec.params:
            if p.name not in args:
                if p.required:
                    raise ToolError(f"{spec.name}: missing argument {p.name!r}")
                continue
            out[p.name] = _coerce(spec.name, p, args[p.name])
        return out

    def dispatch(self, name: str, args: dict, ctx, trace: AgentTrace) -> ToolResult:
        """Validate, run, and log exactly one ToolCall (also on failure)."""
        spec = self.get(name)
        clean = self.validate_args(spec, args)
        call = ToolCall(tool=name, args=clean)
        trace.steps.append(call)
        try:
            result = spec.handler(ctx, clean)
        except DossierError as exc:
            call.error = str(exc)
            if spec.source:
                # even a failed attempt is auditable provenance
                call.refs = (
                    SourceRef(spec.source, f"unavailable:{name}", detail=str(exc)[:120],
                              retrieved_at=ctx.now()),
                )
            raise
        call.observation = result.observation
        call.refs = tuple(result.refs)
        return result


def _coerce(tool: str, param: ToolParam, value):
    try:
        if param.type == "string":
            if not isinstance(value, str):
                raise TypeError
            return value
        if param.type == "int":
            if isinstance(value, bool):
                raise TypeError
            return int(value)
        if param.type == "float":
            if isinstance(value, bool):
                raise TypeError
            return float(value)
        if param.type == "bool":
            if not isinstance(value, bool):
                raise TypeError
            return value
        if param.type == "string_list":
            if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
                raise TypeError
            return list(value)
    except (TypeError, ValueError):
        raise ToolError(
            f"{tool}: argument {param.name!r} must be {param.type}, got {value!r}"
        ) from None
    raise ToolError(f"unknown parameter type {param.type!r}")


def build_default_registry(allow_scripts: bool = False) -> ToolRegistry:
    # populated lazily to avoid a circular import at module load
    from .handlers import register_default_tools

    registry = ToolRegistry()
    register_default_tools(registry, allow_scripts=allow_scripts)
    return registry
