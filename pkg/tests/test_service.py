import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
import requests
from hypothesis import given, settings, strategies as st

from sokopoints.agents import AgentError, FrozenAgent, OracleAgent, RemoteAgent
from sokopoints.harness import EvalConfig, evaluate
from sokopoints.points import format_gp_answer, solve_exhaustive
from sokopoints.prompts import parse_gp_prompt
from sokopoints.service import ApiError, EnvironmentService, ServiceConfig, evaluate_remote


def post(url, path, body):
    return requests.post(url + path, json=body, timeout=10)


def wrap(a):
    return f"<think> t </think> <answer> {a} </answer>"


def test_health(service_url):
    r = requests.get(service_url + "/health", timeout=5)
    assert r.status_code == 200 and r.json()["status"] == "ok"


def test_gp_correct_step(service_url):
    reset = post(service_url, "/reset", {"task": "gp", "variant": "training", "seed": 1}).json()
    inst = parse_gp_prompt(reset["prompt"])
    answer = wrap(format_gp_answer(inst, solve_exhaustive(inst.values)))
    out = post(service_url, "/step", {"episode_id": reset["episode_id"], "response_text": answer}).json()
    assert out["done"] is True and out["success"] is True and out["reward"] == 5
    assert "prompt" not in out


def test_gp_unparsable_step(service_url):
    reset = post(service_url, "/reset", {"task": "gp", "seed": 2}).json()
    out = post(service_url, "/step", {"episode_id": reset["episode_id"], "response_text": "???"}).json()
    assert out["reward"] == -3 and out["done"] is True
    again = post(service_url, "/step", {"episode_id": reset["episode_id"], "response_text": "???"})
    assert again.status_code == 409


def test_sokoban_oracle_over_the_wire(service_url):
    reset = post(service_url, "/reset", {"task": "sokoban", "variant": "TwoBoxesSokoban", "seed": 3}).json()
    agent, prompt, steps = OracleAgent(), reset["prompt"], 0
    while True:
        out = post(service_url, "/step", {"episode_id": reset["episode_id"], "response_text": agent.respond(prompt)}).json()
        steps += 1
        if out["done"]:
            break
        prompt = out["prompt"]
    assert out["success"] and steps <= 30


@pytest.mark.parametrize("path,body,status", [
    ("/step", {"episode_id": "nope", "response_text": "x"}, 404),
    ("/nowhere", {}, 404),
    ("/reset", {"task": "chess"}, 400),
    ("/reset", {"task": "sokoban", "variant": "Nope"}, 400),
    ("/reset", {"task": "gp", "seed": "one"}, 400),
    ("/step", {"episode_id": 3}, 400),
])
def test_error_statuses(service_url, path, body, status):
    assert post(service_url, path, body).status_code == status


def test_malformed_json_body(service_url):
    r = requests.post(service_url + "/reset", data=b"{not json", timeout=5)
    assert r.status_code == 400
    r = requests.post(service_url + "/reset", data=b"[1]", timeout=5)
    assert r.status_code == 400


def test_idle_episodes_expire():
    svc = EnvironmentService(ServiceConfig(idle_timeout=0.05))
    eid = svc.reset({"task": "gp", "seed": 1})["episode_id"]
    time.sleep(0.1)
    with pytest.raises(ApiError) as e:
        svc.step({"episode_id": eid, "response_text": "x"})
    assert e.value.status == 404


def test_action_match_reward_mode():
    svc = EnvironmentService(ServiceConfig(sokoban_reward="action_match"))
    reset = svc.reset({"task": "sokoban", "seed": 4})
    out = svc.step({"episode_id": reset["episode_id"], "response_text": OracleAgent().respond(reset["prompt"])})
    assert out["reward"] == 1.0
    reset = svc.reset({"task": "sokoban", "seed": 4})
    out = svc.step({"episode_id": reset["episode_id"], "response_text": "no tags"})
    assert out["reward"] == 0.0
    with pytest.raises(ValueError):
        ServiceConfig(sokoban_reward="other")


def _trace(svc, seed, responses):
    eid = svc.reset({"task": "sokoban", "variant": "SimpleSokobanNumerical", "seed": seed})["episode_id"]
    out = []
    for text in responses:
        r = svc.step({"episode_id": eid, "response_text": text})
        out.append((r["reward"], r["done"], r["success"]))
        if r["done"]:
            break
    return out


tokens = st.lists(st.sampled_from([wrap(t) for t in ("1", "2", "3", "4", "Up")] + ["junk"]), min_size=1, max_size=12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000), tokens, st.integers(0, 1000), tokens)
def test_interleaved_episodes_do_not_interfere(seed_a, resp_a, seed_b, resp_b):
    alone_a = _trace(EnvironmentService(), seed_a, resp_a)
    alone_b = _trace(EnvironmentService(), seed_b, resp_b)
    svc = EnvironmentService()
    ea = svc.reset({"task": "sokoban", "variant": "SimpleSokobanNumerical", "seed": seed_a})["episode_id"]
    eb = svc.reset({"task": "sokoban", "variant": "SimpleSokobanNumerical", "seed": seed_b})["episode_id"]
    got = {ea: [], eb: []}
    queues = {ea: list(resp_a), eb: list(resp_b)}
    while any(queues.values()):
        for eid in (ea, eb):
            if queues[eid]:
                r = svc.step({"episode_id": eid, "response_text": queues[eid].pop(0)})
                got[eid].append((r["reward"], r["done"], r["success"]))
                if r["done"]:
                    queues[eid] = []
    assert got[ea] == alone_a and got[eb] == alone_b


def test_parallel_clients(service_url):
    def run(seed):
        reset = post(service_url, "/reset", {"task": "gp", "seed": seed}).json()
        inst = parse_gp_prompt(reset["prompt"])
        text = wrap(format_gp_answer(inst, solve_exhaustive(inst.values)))
        return post(service_url, "/step", {"episode_id": reset["episode_id"], "response_text": text}).json()["reward"]

    with ThreadPoolExecutor(8) as pool:
        assert list(pool.map(run, range(24))) == [5] * 24


def test_remote_report_equals_local(service_url):
    for task in ("sokoban", "gp"):
        cfg = EvalConfig(task=task, episodes_per_split=3, seed=6, concurrency=4)
        local = evaluate(cfg, FrozenAgent(0.3))
        remote = evaluate_remote(service_url, cfg, FrozenAgent(0.3))
        assert remote.to_json() == local.to_json()
        assert [e.to_json() for e in remote.episodes] == [e.to_json() for e in local.episodes]


# --- remote chat agent against a stub endpoint ---------------------------------

class _Stub(BaseHTTPRequestHandler):
    fail_first = 0
    seen = []

    def log_message(self, *a):
        pass

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        _Stub.seen.append((body, self.headers.get("Authorization")))
        if _Stub.fail_first > 0:
            _Stub.fail_first -= 1
            self.send_response(503)
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        blob = json.dumps({"choices": [{"message": {"content": "<think> x </think> <answer> Up </answer>"}}]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(blob)))
        self.end_headers()
        self.wfile.write(blob)


@pytest.fixture
def stub_url():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Stub)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    _Stub.seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()
    server.server_close()


def test_remote_agent_retries_and_authenticates(stub_url, monkeypatch):
    monkeypatch.setenv("SOKOPOINTS_API_KEY", "secret")
    _Stub.fail_first = 2
    agent = RemoteAgent(stub_url, model="m", retries=3, backoff=0.01)
    assert agent.respond("<|im_start|>user\nhello<|im_end|>") == "<think> x </think> <answer> Up </answer>"
    body, auth = _Stub.seen[-1]
    assert auth == "Bearer secret"
    assert body["messages"] == [{"role": "user", "content": "hello"}]
    assert body["model"] == "m" and body["temperature"] == 0.0
    assert len(_Stub.seen) == 3


def test_remote_agent_gives_up(stub_url):
    _Stub.fail_first = 10
    with pytest.raises(AgentError):
        RemoteAgent(stub_url, retries=1, backoff=0.01).respond("hi")
    _Stub.fail_first = 0
