"""The bounded tool-calling loop.

The model sees the goal, the tool manifest, and the transcript of previous
actions and observations; it must reply with one strict JSON object, either
{"tool": ..., "args": {...}} or {"final": ...}.  Prose around the JSON is
ignored.  Malformed output gets one corrective observation; two in a row
abort the recipe.  Budget exhaustion flags the trace, never returning an
unflagged partial answer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..core import DossierError
from ..modelgw import ChatRequest
from .tools import AgentTrace, ToolError, ToolRegistry


class LoopError(DossierError):
    pass


@dataclass(frozen=True)
class FinalAnswer:
    text: str


@dataclass(frozen=True)
class ParsedToolCall:
    tool: str
    args: dict


@dataclass
class LoopResult:
    final: FinalAnswer | None
    flagged: bool
    reason: str = ""


def parse_model_action(text: str):
    """Extract the first parseable JSON object and classify it."""
    decoder = json.JSONDecoder()
    idx = text.find("{")
    obj = None
    while idx != -1:
        try:
            obj, _ = decoder.raw_decode(text, idx)
            break
        except json.JSONDecodeError:
            idx = text.find("{", idx + 1)
    if not isinstance(obj, dict):
        raise LoopError("no JSON object found in model output")
    if "final" in obj:
        final = obj["final"]
        if not isinstance(final, str):
            final = json.dumps(final)
        return FinalAnswer(final)
    if "tool" in obj:
        args = obj.get("args", {})
        if not isinstance(obj["tool"], str) or not isinstance(args, dict):
            raise LoopError("tool action must carry a string tool name and an args object")
        return ParsedToolCall(obj["tool"], args)
    raise LoopError('model output carries neither "tool" nor "final"')


def run_loop(
    goal: str,
    registry: ToolRegistry,
    ctx,
    chat,
    trace: AgentTrace,
    budget: int = 6,
    temperature: float = 0.1,
    max_tokens: int = 1024,
) -> LoopResult:
    if budget < 1:
        raise LoopError("budget must be >= 1")
    transcript: list[str] = []
    parse_failures = 0
    for _ in range(budget):
        prompt = goal if not transcript else goal + "\n\n" + "\n".join(transcript)
        response = chat.chat(
            ChatRequest(messages=(("user", prompt),), temperature=temperature, max_tokens=max_tokens)
        )
        try:
            action = parse_model_action(response.text)
            if isinstance(action, ParsedToolCall) and action.tool not in registry:
                raise LoopError(f"unknown tool {action.tool!r}")
        except LoopError as exc:
            parse_failures += 1
            if parse_failures >= 2:
                trace.warn(f"loop aborted: {exc}")
                return LoopResult(final=None, flagged=True, reason=str(exc))
            transcript.append(f"OBSERVATION: invalid action ({exc}); reply with one JSON object.")
            continue
        parse_failures = 0

        if isinstance(action, FinalAnswer):
            return LoopResult(final=action, flagged=False)

        transcript.append(f"ACTION: {json.dumps({'tool': action.tool, 'args': action.args})}")
        try:
            result = registry.dispatch(action.tool, action.args, ctx, trace)
            observation = result.observation or "(no output)"
        except (ToolError, DossierError) as exc:
            observation = f"tool error: {exc}"
        transcript.append(f"OBSERVATION: {observation}")

    trace.warn(f"loop budget of {budget} steps exhausted")
    return LoopResult(final=None, flagged=True, reason="budget exhausted")
