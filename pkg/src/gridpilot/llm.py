"""Provider-agnostic chat/tool-calling bridge with call, token, and cost
budgeting.

Two providers ship: a scripted one that replays fixture-defined turns (the
CI default: fully deterministic, no network) and an HTTP adapter speaking
the de-facto chat-completions wire format. Tests and shipped missions use
the scripted provider only.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import TYPE_CHECKING, Mapping, Protocol, Sequence

import httpx

from .errors import (
    BudgetExceeded,
    MalformedToolCall,
    ProviderUnavailable,
    UnknownModel,
)
from .streams import ToolSchema

if TYPE_CHECKING:
    from .mission import MissionSpec

FIXTURE_SCHEMA = "gridpilot.fixture/v1"

DEFAULT_CALL_LIMIT = 10
DEFAULT_COMPLETION_MARKER = "MISSION COMPLETE"

# Placeholder $/1k-token prices; editable configuration, not ground truth.
DEFAULT_PRICE_TABLE: dict[str, tuple[float, float]] = {
    "scripted-v1": (0.01, 0.03),
}

API_KEY_ENV_VAR = "GRIDPILOT_API_KEY"


@dataclass(frozen=True)
class ModelConfig:
    model_name: str = "scripted-v1"
    max_tokens: int = 1024
    temperature: float = 0.0
    system_prompt: str = ""

    def __post_init__(self) -> None:
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0, 2]")


@dataclass(frozen=True)
class ToolCall:
    id: str
    name: str
    arguments: dict

    def to_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "arguments": self.arguments}

    @classmethod
    def from_dict(cls, data: dict) -> "ToolCall":
        return cls(id=data["id"], name=data["name"], arguments=data["arguments"])


@dataclass(frozen=True)
class ChatTurn:
    role: str  # system | user | assistant | tool
    content: str = ""
    tool_calls: tuple[ToolCall, ...] = ()
    tool_call_id: str | None = None

    def __post_init__(self) -> None:
        if self.role == "tool" and not self.tool_call_id:
            raise ValueError("tool turns require tool_call_id")
        if self.tool_calls and self.role != "assistant":
            raise ValueError("only assistant turns may carry tool calls")

    def to_dict(self) -> dict:
        data: dict = {"role": self.role, "content": self.content}
        if self.tool_calls:
            data["tool_calls"] = [c.to_dict() for c in self.tool_calls]
        if self.tool_call_id is not None:
            data["tool_call_id"] = self.tool_call_id
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ChatTurn":
        return cls(
            role=data["role"],
            content=data.get("content", ""),
            tool_calls=tuple(ToolCall.from_dict(c) for c in data.get("tool_calls", ())),
            tool_call_id=data.get("tool_call_id"),
        )


def dump_transcript(history: Sequence[ChatTurn]) -> str:
    """Canonical byte-stable serialization of a conversation."""
    return json.dumps([t.to_dict() for t in history], sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class ApiBudget:
    call_limit: int
    calls_used: int = 0
    prompt_tokens: int = 0
    completion_tokens: int = 0
    price_table: Mapping[str, tuple[float, float]] = field(
        default_factory=lambda: dict(DEFAULT_PRICE_TABLE)
    )
    accrued_cost: float = 0.0

    def __post_init__(self) -> None:
        if self.call_limit < 1:
            raise ValueError("call_limit must be >= 1")
        if self.calls_used > self.call_limit:
            raise ValueError("calls_used may never exceed call_limit")

    @property
    def exhausted(self) -> bool:
        return self.calls_used >= self.call_limit

    def to_dict(self) -> dict:
        return {
            "call_limit": self.call_limit,
            "calls_used": self.calls_used,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "accrued_cost": self.accrued_cost,
        }


def charge(
    budget: ApiBudget, model_name: str, prompt_tokens: int, completion_tokens: int
) -> ApiBudget:
    """Accrue token counts and cost for one provider response."""
    if model_name not in budget.price_table:
        raise UnknownModel(f"model {model_name!r} missing from the price table")
    in_price, out_price = budget.price_table[model_name]
    return replace(
        budget,
        prompt_tokens=budget.prompt_tokens + prompt_tokens,
        completion_tokens=budget.completion_tokens + completion_tokens,
        accrued_cost=budget.accrued_cost
        + prompt_tokens / 1000.0 * in_price
        + completion_tokens / 1000.0 * out_price,
    )


@dataclass(frozen=True)
class Usage:
    prompt_tokens: int
    completion_tokens: int


class Provider(Protocol):
    def respond(
        self,
        history: Sequence[ChatTurn],
        tools: Sequence[ToolSchema],
        config: ModelConfig,
    ) -> tuple[ChatTurn, Usage]: ...


def _estimate_tokens(text: str) -> int:
    return max(1, math.ceil(len(text) / 4))


class ScriptedProvider:
    """Deterministic provider replaying an ordered fixture of canned turns.

    Each step may carry a match predicate checked against the serialized
    conversation; a mismatch means the fixture no longer fits the mission and
    is reported rather than silently skipped.
    """

    def __init__(self, steps: Sequence[dict], delay_s: float = 0.0) -> None:
        self._steps = list(steps)
        self._cursor = 0
        self._next_id = 0
        self._delay_s = delay_s

    @classmethod
    def from_file(cls, path: str | Path, delay_s: float = 0.0) -> "ScriptedProvider":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except OSError as exc:
            raise ProviderUnavailable(f"cannot read fixture {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ProviderUnavailable(f"fixture {path} is not valid JSON: {exc}") from exc
        if data.get("schema") != FIXTURE_SCHEMA:
            raise ProviderUnavailable(f"unsupported fixture schema {data.get('schema')!r}")
        return cls(data["steps"], delay_s=delay_s)

    def respond(
        self,
        history: Sequence[ChatTurn],
        tools: Sequence[ToolSchema],
        config: ModelConfig,
    ) -> tuple[ChatTurn, Usage]:
        if self._delay_s > 0:
            import time

            time.sleep(self._delay_s)
        if self._cursor >= len(self._steps):
            raise ProviderUnavailable("scripted fixture exhausted")
        step = self._steps[self._cursor]
        self._cursor += 1
        serialized = dump_transcript(history)
        match = step.get("match")
        if match and match.get("contains") and match["contains"] not in serialized:
            raise ProviderUnavailable(
                f"fixture step {self._cursor} expected the conversation to contain "
                f"{match['contains']!r}"
            )
        response = step.get("response", {})
        calls = []
        for raw in response.get("tool_calls", ()):
            calls.append(
                ToolCall(
                    id=f"call_{self._next_id}",
                    name=raw["name"],
                    arguments=raw.get("arguments", {}),
                )
            )
            self._next_id += 1
        turn = ChatTurn(
            role="assistant",
            content=response.get("content", ""),
            tool_calls=tuple(calls),
        )
        usage = Usage(
            prompt_tokens=_estimate_tokens(serialized),
            completion_tokens=_estimate_tokens(dump_transcript([turn])),
        )
        return turn, usage


class HttpProvider:
    """Adapter for any endpoint speaking the common chat-completions JSON.

    Request: POST {base_url}/chat/completions with model, messages, tools,
    temperature, max_tokens (and seed when configured); bearer-token auth
    from the GRIDPILOT_API_KEY environment variable.
    """

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = 60.0,
        seed: int | None = None,
    ) -> None:
        self._base_url = base_url.rstrip("/")
        self._api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV_VAR, "")
        self._timeout = timeout
        self._seed = seed

    def respond(
        self,
        history: Sequence[ChatTurn],
        tools: Sequence[ToolSchema],
        config: ModelConfig,
    ) -> tuple[ChatTurn, Usage]:
        messages = []
        for turn in history:
            msg: dict = {"role": turn.role, "content": turn.content}
            if turn.tool_calls:
                msg["tool_calls"] = [
                    {
                        "id": c.id,
                        "type": "function",
                        "function": {"name": c.name, "arguments": json.dumps(c.arguments)},
                    }
                    for c in turn.tool_calls
                ]
            if turn.tool_call_id:
                msg["tool_call_id"] = turn.tool_call_id
            messages.append(msg)
        payload: dict = {
            "model": config.model_name,
            "messages": messages,
            "tools": [t.to_tool_json() for t in tools],
            "temperature": config.temperature,
            "max_tokens": config.max_tokens,
        }
        if self._seed is not None:
            payload["seed"] = self._seed
        try:
            resp = httpx.post(
                f"{self._base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
            resp.raise_for_status()
            data = resp.json()
        except httpx.HTTPError as exc:
            raise ProviderUnavailable(f"provider request failed: {exc}") from exc
        try:
            message = data["choices"][0]["message"]
            calls = []
            for raw in message.get("tool_calls") or ():
                raw_args = raw["function"].get("arguments", "{}")
                try:
                    arguments = json.loads(raw_args) if isinstance(raw_args, str) else raw_args
                except json.JSONDecodeError:
                    # Let schema validation reject it with a precise error.
                    arguments = {"__unparseable__": raw_args}
                calls.append(
                    ToolCall(id=raw.get("id", f"call_{len(calls)}"),
                             name=raw["function"]["name"], arguments=arguments)
                )
            turn = ChatTurn(
                role="assistant",
                content=message.get("content") or "",
                tool_calls=tuple(calls),
            )
            usage_raw = data.get("usage", {})
            usage = Usage(
                prompt_tokens=int(usage_raw.get("prompt_tokens", 0)),
                completion_tokens=int(usage_raw.get("completion_tokens", 0)),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderUnavailable(f"provider response malformed: {exc}") from exc
        return turn, usage


def complete(
    provider: Provider,
    history: Sequence[ChatTurn],
    tools: Sequence[ToolSchema],
    config: ModelConfig,
    budget: ApiBudget,
) -> tuple[ChatTurn, ApiBudget]:
    """One model invocation under budget: returns the assistant turn and the
    budget with exactly one call plus its tokens and cost accrued.

    A response whose tool calls fail schema validation raises
    MalformedToolCall carrying the charged budget on the exception, since the
    invocation itself still happened and must be paid for.
    """
    if budget.exhausted:
        raise BudgetExceeded(
            f"call budget exhausted ({budget.calls_used}/{budget.call_limit})"
        )
    if not history or history[0].role != "system":
        raise ValueError("history must start with the system prompt")
    turn, usage = provider.respond(history, tools, config)
    budget = replace(budget, calls_used=budget.calls_used + 1)
    budget = charge(budget, config.model_name, usage.prompt_tokens, usage.completion_tokens)
    by_name = {t.name: t for t in tools}
    for call in turn.tool_calls:
        try:
            if call.name not in by_name:
                raise MalformedToolCall(f"unknown tool {call.name!r}")
            by_name[call.name].validate_args(call.arguments)
        except Exception as exc:
            err = MalformedToolCall(str(exc))
            err.budget = budget  # keep the accounting honest on the error path
            err.tool_call = call
            raise err from None
    return turn, budget


# --- prompt construction -----------------------------------------------------

def build_system_prompt(
    mission: "MissionSpec", constraints: Sequence[str], world=None
) -> str:
    """Deterministic system prompt: role statement, world summary, tool
    inventory, mission endpoints, then each constraint verbatim."""
    from .streams import STREAM_SCHEMAS

    if world is None:
        world = mission.load_world()
    ext = world.extent
    lines = [
        "You are the control authority for a simulated UAV. You act only by",
        "calling the provided control functions; plan each maneuver from the",
        "tool results you receive.",
        "",
        (
            f"World: x [{ext.x_min:g}, {ext.x_max:g}] m, "
            f"y [{ext.y_min:g}, {ext.y_max:g}] m, ceiling {ext.z_ceiling:g} m, "
            f"grid resolution {world.resolution:g} m, "
            f"{len(world.obstacles)} obstacle(s)."
        ),
        "",
        "Available functions:",
    ]
    lines.extend(f"- {s.name}: {s.description}" for s in STREAM_SCHEMAS)
    start, goal = tuple(mission.start), tuple(mission.goal)
    lines += [
        "",
        (
            f"Mission {mission.id}: start ({start[0]:g}, {start[1]:g}, {start[2]:g}) "
            f"-> goal ({goal[0]:g}, {goal[1]:g}, {goal[2]:g}), "
            f"goal tolerance {mission.goal_tolerance:g} m."
        ),
    ]
    if constraints:
        lines.append("")
        lines.append("Constraints:")
        lines.extend(f"- {c}" for c in constraints)
    lines += [
        "",
        (
            f"When the goal is reached, reply {DEFAULT_COMPLETION_MARKER} "
            "with no further function calls."
        ),
    ]
    return "\n".join(lines)


def kickoff_prompt(mission: "MissionSpec") -> str:
    """The canonical first operator instruction for a mission."""
    return (
        f"Fly mission {mission.id} from start to goal, avoiding every obstacle. "
        "Begin by starting the mission."
    )
