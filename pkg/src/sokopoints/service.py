"""JSON-over-HTTP environment service for external trainers, and a client
that runs evaluation episodes through it.

    POST /reset {"task", "variant", "seed"}      -> {"episode_id", "prompt"}
    POST /step  {"episode_id", "response_text"}  -> {"prompt"?, "reward", "done", "success", "info"}
    GET  /health                                 -> {"status": "ok", "episodes": n}

Errors: 400 malformed body, 404 unknown episode or path, 409 step after done.
"""
from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from http import HTTPStatus
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

import requests

from .agents import Agent
from .harness import EpisodeRecord, EvalConfig, EvalReport, Turn, build_report, episode_seed, sokoban_episode_state
from .points import SPLITS, generate_instance, score_gp_answer
from .prompts import render_gp_prompt, render_sokoban_prompt
from .responses import parse_response
from .rl_math import action_match_reward
from .sokoban import RewardSchedule, skip_turn, solve_bfs, step
from .variants import SOKOBAN_VARIANTS, check_validity, decode_action

log = logging.getLogger(__name__)


@dataclass
class ServiceConfig:
    idle_timeout: float = 600.0
    sokoban_reward: str = "env"  # "env" (reward schedule) or "action_match"
    schedule: RewardSchedule = field(default_factory=RewardSchedule)

    def __post_init__(self):
        if self.sokoban_reward not in ("env", "action_match"):
            raise ValueError("sokoban_reward must be 'env' or 'action_match'")


class ApiError(Exception):
    def __init__(self, status: HTTPStatus, message: str):
        super().__init__(message)
        self.status = status


@dataclass
class _Episode:
    task: str
    variant: str
    env: Any  # SokobanState or GPInstance
    done: bool = False
    last_used: float = field(default_factory=time.monotonic)
    lock: threading.Lock = field(default_factory=threading.Lock)


class EnvironmentService:
    """Transport-independent core; the HTTP handler is a thin shell on it."""

    def __init__(self, config: ServiceConfig = ServiceConfig()):
        self.config = config
        self._episodes: dict[str, _Episode] = {}
        self._lock = threading.Lock()

    def _expire(self) -> None:
        cutoff = time.monotonic() - self.config.idle_timeout
        with self._lock:
            for eid in [k for k, e in self._episodes.items() if e.last_used < cutoff]:
                del self._episodes[eid]

    def __len__(self) -> int:
        return len(self._episodes)

    def reset(self, body: dict) -> dict:
        self._expire()
        task, variant, seed = body.get("task"), body.get("variant"), body.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ApiError(HTTPStatus.BAD_REQUEST, "seed must be an integer")
        if task == "sokoban":
            variant = variant or "SimpleSokoban"
            if variant not in SOKOBAN_VARIANTS:
                raise ApiError(HTTPStatus.BAD_REQUEST, f"unknown Sokoban variant {variant!r}")
            env = sokoban_episode_state(SOKOBAN_VARIANTS[variant], seed)
            prompt = render_sokoban_prompt(env, SOKOBAN_VARIANTS[variant])
        elif task == "gp":
            variant = variant or "training"
            if variant not in SPLITS:
                raise ApiError(HTTPStatus.BAD_REQUEST, f"unknown General Points split {variant!r}")
            env = generate_instance(SPLITS[variant], seed)
            prompt = render_gp_prompt(env)
        else:
            raise ApiError(HTTPStatus.BAD_REQUEST, "task must be 'sokoban' or 'gp'")
        eid = uuid.uuid4().hex
        with self._lock:
            self._episodes[eid] = _Episode(task, variant, env)
        return {"episode_id": eid, "prompt": prompt}

    def step(self, body: dict) -> dict:
        self._expire()
        eid, text = body.get("episode_id"), body.get("response_text")
        if not isinstance(eid, str) or not isinstance(text, str):
            raise ApiError(HTTPStatus.BAD_REQUEST, "episode_id and response_text must be strings")
        with self._lock:
            ep = self._episodes.get(eid)
        if ep is None:
            raise ApiError(HTTPStatus.NOT_FOUND, f"unknown episode {eid}")
        with ep.lock:
            if ep.done:
                raise ApiError(HTTPStatus.CONFLICT, "episode already finished")
            ep.last_used = time.monotonic()
            if ep.task == "gp":
                return self._step_gp(ep, text)
            return self._step_sokoban(ep, text)

    def _step_gp(self, ep: _Episode, text: str) -> dict:
        score = score_gp_answer(text, ep.env)
        ep.done = True
        info = {"points": score.points, "verdict": score.verdict.value, "valid": check_validity(text, ep.env)}
        return {"reward": score.points, "done": True, "success": score.success, "info": info}

    def _step_sokoban(self, ep: _Episode, text: str) -> dict:
        variant = SOKOBAN_VARIANTS[ep.variant]
        state = ep.env
        parsed = parse_response(text)
        action = decode_action(parsed.answer_text, variant) if parsed.format_ok else None
        outcome = step(state, action, self.config.schedule) if action is not None else skip_turn(state, self.config.schedule)
        if self.config.sokoban_reward == "action_match":
            plan = solve_bfs(state)
            reward = action_match_reward(action, plan[0], parsed.format_ok) if plan else (0.1 if parsed.format_ok else 0.0)
        else:
            reward = outcome.reward
        ep.env = outcome.next_state
        ep.done = outcome.terminated
        out = {
            "reward": reward,
            "done": outcome.terminated,
            "success": outcome.success,
            "info": {
                "action": action.value if action else None,
                "valid": check_validity(parsed, variant),
                "moved": outcome.moved,
                "steps_taken": outcome.next_state.steps_taken,
            },
        }
        if not outcome.terminated:
            out["prompt"] = render_sokoban_prompt(outcome.next_state, variant)
        return out


def _handler_for(service: EnvironmentService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        disable_nagle_algorithm = True

        def log_message(self, fmt, *args):
            log.debug("%s " + fmt, self.address_string(), *args)

        def _send(self, status: HTTPStatus, payload: dict) -> None:
            blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(blob)))
            self.end_headers()
            self.wfile.write(blob)

        def do_GET(self):
            if self.path == "/health":
                self._send(HTTPStatus.OK, {"status": "ok", "episodes": len(service)})
            else:
                self._send(HTTPStatus.NOT_FOUND, {"error": f"no route {self.path}"})

        def do_POST(self):
            routes = {"/reset": service.reset, "/step": service.step}
            try:
                length = int(self.headers.get("Content-Length") or 0)
                raw = self.rfile.read(length)
                if self.path not in routes:
                    raise ApiError(HTTPStatus.NOT_FOUND, f"no route {self.path}")
                try:
                    body = json.loads(raw or b"null")
                except ValueError:
                    raise ApiError(HTTPStatus.BAD_REQUEST, "body is not valid JSON") from None
                if not isinstance(body, dict):
                    raise ApiError(HTTPStatus.BAD_REQUEST, "body must be a JSON object")
                self._send(HTTPStatus.OK, routes[self.path](body))
            except ApiError as e:
                self._send(e.status, {"error": str(e)})

    return Handler


def make_server(host: str = "127.0.0.1", port: int = 8000, config: ServiceConfig = ServiceConfig()) -> ThreadingHTTPServer:
    """A bound, not yet serving, server; ``port=0`` picks a free port."""
    server = ThreadingHTTPServer((host, port), _handler_for(EnvironmentService(config)))
    server.daemon_threads = True
    return server


def serve(host: str = "127.0.0.1", port: int = 8000, config: ServiceConfig = ServiceConfig()) -> None:
    server = make_server(host, port, config)
    log.info("serving on http://%s:%d", *server.server_address[:2])
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


# --- client ----------------------------------------------------------------

def _post(session: requests.Session, url: str, body: dict) -> dict:
    r = session.post(url, json=body, timeout=60)
    r.raise_for_status()
    return r.json()


def run_remote_episode(base_url: str, task: str, variant: str, seed: int, agent: Agent) -> EpisodeRecord:
    """One episode driven through the service, recorded like a local one."""
    rec = EpisodeRecord(task, variant, seed)
    with requests.Session() as s:
        try:
            reset = _post(s, base_url + "/reset", {"task": task, "variant": variant, "seed": seed})
        except requests.RequestException as e:
            rec.error = f"{type(e).__name__}: {e}"
            return rec
        eid, prompt = reset["episode_id"], reset["prompt"]
        while prompt is not None:
            try:
                response = agent.respond(prompt)
                out = _post(s, base_url + "/step", {"episode_id": eid, "response_text": response})
            except Exception as e:
                rec.error = f"{type(e).__name__}: {e}"
                break
            info = out["info"]
            rec.turns.append(Turn(prompt, response, info["valid"], float(out["reward"]), action=info.get("action"), points=info.get("points")))
            rec.success = out["success"]
            rec.steps_used = info.get("steps_taken", 1)
            prompt = None if out["done"] else out["prompt"]
    if rec.turns:
        rec.validity_fraction = sum(t.valid for t in rec.turns) / len(rec.turns)
    return rec


def evaluate_remote(base_url: str, config: EvalConfig, agent: Agent) -> EvalReport:
    """Same batch and report as :func:`harness.evaluate`, through HTTP."""
    base_url = base_url.rstrip("/")
    splits = config.resolved_splits()
    jobs = [(split, i) for split in splits for i in range(config.episodes_per_split)]

    def work(job):
        split, i = job
        return run_remote_episode(base_url, config.task, split, episode_seed(config.seed, i), agent)

    with ThreadPoolExecutor(max_workers=max(1, config.concurrency)) as pool:
        episodes = list(pool.map(work, jobs))
    return build_report(config, splits, episodes)
