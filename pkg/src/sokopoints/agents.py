"""Agents the evaluation harness can query. Every agent maps prompt text to
completion text; none of them sees environment state directly."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from pathlib import Path
from typing import Callable, Iterable, Optional, Protocol, Union

import requests

from .points import TRAINING_MAPPING, GPInstance, format_gp_answer, solve_exhaustive
from .prompts import parse_gp_prompt, parse_sokoban_prompt, prompt_to_messages
from .sokoban import ACTIONS, solve_bfs
from .variants import CANONICAL_TOKENS, TEMPLATE_ORDER

log = logging.getLogger(__name__)

DEFAULT_API_KEY_ENV = "SOKOPOINTS_API_KEY"


class AgentError(RuntimeError):
    """The agent could not produce a completion (transport, missing replay entry)."""


class Agent(Protocol):
    def respond(self, prompt: str) -> str: ...


def is_sokoban_prompt(prompt: str) -> bool:
    return "You are a Sokoban solver." in prompt


def _wrap(answer: str, thought: str = "") -> str:
    return f"<think> {thought} </think> <answer> {answer} </answer>"


def _fallback_formula(values) -> str:
    return "+".join(str(v) for v in values)


class OracleAgent:
    """Reads the prompt and answers with the exact solvers, in the prompt's
    own vocabulary. An upper bound on every honest split."""

    def respond(self, prompt: str) -> str:
        if is_sokoban_prompt(prompt):
            state, tokens = parse_sokoban_prompt(prompt)
            plan = solve_bfs(state)
            action = plan[0] if plan else ACTIONS[0]
            return _wrap(tokens[TEMPLATE_ORDER.index(action)], "shortest plan")
        inst = parse_gp_prompt(prompt)
        return _wrap(_gp_answer(inst), "search")


def _gp_answer(inst: GPInstance) -> str:
    formula = solve_exhaustive(inst.values, inst.target)
    if formula is None:
        formula = _fallback_formula(inst.values)
    return format_gp_answer(inst, f"{formula}={inst.target}")


class FrozenAgent:
    """Solves the board or hand but always speaks the training semantics:
    canonical action words and J=Q=K=10, whatever the prompt declares.

    ``error_rate`` makes it deterministically wrong on a fraction of
    observations (keyed on a hash of the board or hand, never the
    instructions), so its in-distribution success can sit below 1."""

    def __init__(self, error_rate: float = 0.0, salt: str = ""):
        self.error_rate = error_rate
        self.salt = salt

    def _roll(self, key: str) -> int:
        return int.from_bytes(hashlib.sha256((self.salt + key).encode()).digest()[:8], "big")

    def respond(self, prompt: str) -> str:
        if is_sokoban_prompt(prompt):
            state, _ = parse_sokoban_prompt(prompt)
            h = self._roll(str(sorted(state.boxes)) + str(state.player) + str(sorted(state.grid.walls)))
            if (h % 10_000) < self.error_rate * 10_000:
                action = ACTIONS[(h >> 20) % 4]
            else:
                plan = solve_bfs(state)
                action = plan[0] if plan else ACTIONS[0]
            return _wrap(CANONICAL_TOKENS[TEMPLATE_ORDER.index(action)])
        declared = parse_gp_prompt(prompt)
        inst = GPInstance(declared.cards, TRAINING_MAPPING, declared.target)
        h = self._roll(str(inst.labels))
        if (h % 10_000) < self.error_rate * 10_000:
            return _wrap(format_gp_answer(inst, _fallback_formula(inst.values)))
        return _wrap(_gp_answer(inst))


class ScriptedAgent:
    """A fixed completion, or any ``prompt -> completion`` callable."""

    def __init__(self, policy: Union[str, Callable[[str], str]]):
        self.policy = policy

    def respond(self, prompt: str) -> str:
        return self.policy(prompt) if callable(self.policy) else self.policy


class ReplayAgent:
    """Answers from a recorded transcript, looked up by exact prompt text.

    Accepts transcript rows of either shape: ``{"prompt", "response"}`` or
    an episode record with a ``turns`` list. The first response recorded for
    a prompt wins."""

    def __init__(self, table: dict[str, str]):
        self.table = table

    @classmethod
    def from_rows(cls, rows: Iterable[dict]) -> "ReplayAgent":
        table: dict[str, str] = {}
        for row in rows:
            for turn in row.get("turns", [row]):
                table.setdefault(turn["prompt"], turn["response"])
        return cls(table)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ReplayAgent":
        with open(path, encoding="utf-8") as f:
            return cls.from_rows(json.loads(line) for line in f if line.strip())

    def respond(self, prompt: str) -> str:
        try:
            return self.table[prompt]
        except KeyError:
            raise AgentError("prompt not present in the replay transcript") from None


class RemoteAgent:
    """OpenAI-style chat-completions endpoint.

    Sends ``{"model", "messages", "temperature", "max_tokens"}`` and reads
    ``choices[0].message.content``. Failed requests are retried with
    exponential backoff; the bearer token comes from ``api_key_env``."""

    def __init__(
        self,
        url: str,
        model: str = "default",
        temperature: float = 0.0,
        max_tokens: int = 1024,
        api_key_env: str = DEFAULT_API_KEY_ENV,
        retries: int = 3,
        backoff: float = 0.5,
        timeout: float = 120.0,
    ):
        self.url = url
        self.model = model
        self.temperature = temperature
        self.max_tokens = max_tokens
        self.api_key_env = api_key_env
        self.retries = retries
        self.backoff = backoff
        self.timeout = timeout
        self._session = requests.Session()

    def respond(self, prompt: str) -> str:
        payload = {
            "model": self.model,
            "messages": prompt_to_messages(prompt),
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.api_key_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last: Optional[Exception] = None
        for attempt in range(self.retries + 1):
            if attempt:
                time.sleep(self.backoff * 2 ** (attempt - 1))
            try:
                r = self._session.post(self.url, json=payload, headers=headers, timeout=self.timeout)
                r.raise_for_status()
                return r.json()["choices"][0]["message"]["content"]
            except (requests.RequestException, ValueError, KeyError, IndexError, TypeError) as e:
                log.warning("chat request failed (attempt %d): %s", attempt + 1, e)
                last = e
        raise AgentError(f"endpoint failed after {self.retries + 1} attempts: {last}")


def make_agent(kind: str, **options) -> Agent:
    if kind == "oracle":
        return OracleAgent()
    if kind == "frozen":
        return FrozenAgent(float(options.get("error_rate", 0.0)), str(options.get("salt", "")))
    if kind == "replay":
        return ReplayAgent.from_file(options["transcript"])
    if kind == "scripted":
        return ScriptedAgent(options["response"])
    if kind == "remote":
        keys = ("model", "temperature", "max_tokens", "api_key_env", "retries", "backoff", "timeout")
        return RemoteAgent(options["endpoint"], **{k: options[k] for k in keys if options.get(k) is not None})
    raise ValueError(f"unknown agent kind {kind!r}")
