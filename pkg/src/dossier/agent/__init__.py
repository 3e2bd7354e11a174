"""Orchestration: typed tools, the bounded tool-calling loop, and the
section recipes that compose everything into a dossier."""

from .loop import FinalAnswer, LoopResult, parse_model_action, run_loop
from .recipes import RecipeContext, generate_dossier, run_recipe
from .tools import (
    AgentTrace,
    ToolCall,
    ToolError,
    ToolRegistry,
    ToolResult,
    ToolSpec,
    TracingChat,
    build_default_registry,
)

__all__ = [
    "FinalAnswer",
    "LoopResult",
    "parse_model_action",
    "run_loop",
    "RecipeContext",
    "generate_dossier",
    "run_recipe",
    "AgentTrace",
    "ToolCall",
    "ToolError",
    "ToolRegistry",
    "ToolResult",
    "ToolSpec",
    "TracingChat",
    "build_default_registry",
]
