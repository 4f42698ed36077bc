import json
import threading
import warnings
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from cegisplan.generate import GenConfig, gen_problem, reference_solve
from cegisplan.oracle import (
    GOAL_GAP_SENTENCE,
    NO_PLAN_SENTENCE,
    RICH_PREFIX_SENTENCE,
    WEAK_INVALID_SENTENCE,
    AuthError,
    ContextOverflowRisk,
    EndpointConfig,
    FeedbackMode,
    FewShotExample,
    HttpOracle,
    InvalidFewShotExample,
    MalformedApiResponse,
    NoisyOracle,
    PerfectOracle,
    PromptConfig,
    RateLimited,
    ScriptedOracle,
    TranscriptExhausted,
    build_feedback_prompt,
    build_initial_prompt,
    build_no_plan_prompt,
    estimate_tokens,
    load_endpoint_config,
    prompt_asset,
    prompt_asset_names,
    rejected_plans,
    response_from_text,
)
from cegisplan.plan import NoPlanBlock, print_plan
from cegisplan.semantics import ContractViolation, counterexample, verify

# ---------------------------------------------------------------- prompts


def test_default_prompt_embeds_worked_example(newprob, corpus):
    q = build_initial_prompt(newprob)
    text = q.text
    assert "Given the block world problem OLDPROB1:" in text
    assert print_plan(corpus.plans["oldprob1"]) in text
    assert "20. stack b2 b1" in text
    assert "Now, given a new block world problem NEWPROB:" in text
    assert "(on b6 b4)" in text
    assert q.metadata["trial"] == 1 and q.objects == newprob.objects


def test_zero_shot_prompt(newprob):
    q = build_initial_prompt(newprob, PromptConfig(few_shot_examples=()))
    assert "OLDPROB" not in q.text and "NEWPROB" in q.text


def test_prompt_grows_with_examples(newprob, corpus):
    good = FewShotExample(newprob, corpus.plans["newprob_corrected"])
    sizes = [estimate_tokens(build_initial_prompt(newprob, PromptConfig(few_shot_examples=(good,) * k)).text) for k in range(3)]
    assert sizes[0] < sizes[1] < sizes[2]
    assert "OLDPROB2" in build_initial_prompt(newprob, PromptConfig(few_shot_examples=(good, good))).text


def test_invalid_example_warns_or_raises(oldprob1, corpus):
    bad = FewShotExample(oldprob1, corpus.plans["oldprob1"][::-1])
    with pytest.warns(InvalidFewShotExample):
        PromptConfig(few_shot_examples=(bad,))
    with pytest.raises(ValueError, match="does not verify"):
        PromptConfig(few_shot_examples=(bad,), strict_examples=True)


def test_overflow_hint(newprob):
    with pytest.warns(ContextOverflowRisk):
        build_initial_prompt(newprob, PromptConfig(max_prompt_tokens_hint=10))


def _first_turn(newprob, corpus, mode):
    cfg = PromptConfig(few_shot_examples=(), feedback_mode=mode)
    q = build_initial_prompt(newprob, cfg)
    resp = response_from_text(corpus.transcripts["newprob"][0], newprob.objects)
    cex = counterexample(verify(newprob, resp.parsed))
    return q, resp, cex, cfg


def test_rich_feedback_quotes_prefix(newprob, corpus):
    q, resp, cex, cfg = _first_turn(newprob, corpus, FeedbackMode.RICH_PREFIX)
    q2 = build_feedback_prompt(q, resp, cex, cfg)
    last = q2.messages[-1].content
    assert last.startswith(RICH_PREFIX_SENTENCE)
    assert print_plan(corpus.plans["newprob_prefix"]) in last
    assert q2.messages[-2].role == "assistant" and q2.messages[-2].content == resp.raw_text
    assert q2.metadata["trial"] == 2
    assert len(q2.messages) == len(q.messages) + 2


def test_weak_feedback_quotes_whole_plan(newprob, corpus):
    q, resp, cex, cfg = _first_turn(newprob, corpus, FeedbackMode.WEAK_INVALID)
    last = build_feedback_prompt(q, resp, cex, cfg).messages[-1].content
    assert last.startswith(WEAK_INVALID_SENTENCE)
    assert "12. stack b6 b4" in last


def test_goal_gap_feedback(newprob, corpus):
    cfg = PromptConfig(few_shot_examples=())
    q = build_initial_prompt(newprob, cfg)
    resp = response_from_text(print_plan(corpus.plans["newprob_corrected"][:10]))
    cex = counterexample(verify(newprob, resp.parsed))
    last = build_feedback_prompt(q, resp, cex, cfg).messages[-1].content
    assert last.startswith(GOAL_GAP_SENTENCE) and "(on b1 b2)" in last


def test_feedback_needs_a_plan(newprob, corpus):
    q, _, cex, cfg = _first_turn(newprob, corpus, FeedbackMode.RICH_PREFIX)
    empty = response_from_text("I cannot do that")
    with pytest.raises(ContractViolation):
        build_feedback_prompt(q, empty, cex, cfg)
    assert build_no_plan_prompt(q, empty, cfg).messages[-1].content.startswith(NO_PLAN_SENTENCE)


def test_prompts_are_deterministic(newprob):
    assert build_initial_prompt(newprob) == build_initial_prompt(newprob)


def test_feedback_accumulates(newprob, corpus):
    q, resp, cex, cfg = _first_turn(newprob, corpus, FeedbackMode.RICH_PREFIX)
    for _ in range(3):
        q = build_feedback_prompt(q, resp, cex, cfg)
    assert sum(m.content.startswith(RICH_PREFIX_SENTENCE) for m in q.messages) == 3
    assert len(rejected_plans(q)[0]) == 3


def test_assets():
    assert prompt_asset_names() == ["pick_up", "put_down", "stack", "translate_instruction", "unstack"]
    assert "class State" in prompt_asset("translate_instruction")


# ---------------------------------------------------------------- http


class _Stub:
    """Tiny chat-completions server answering from a queue of (status, body)."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []
        stub = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                n = int(self.headers["Content-Length"])
                stub.requests.append((dict(self.headers), json.loads(self.rfile.read(n))))
                status, body = stub.replies.pop(0) if len(stub.replies) > 1 else stub.replies[0]
                data = body if isinstance(body, bytes) else json.dumps(body).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_port}/v1/chat/completions"
        threading.Thread(target=self.server.serve_forever, daemon=True).start()

    def close(self):
        self.server.shutdown()
        self.server.server_close()


@pytest.fixture
def stub():
    made = []

    def make(*replies):
        s = _Stub(replies)
        made.append(s)
        return s

    yield make
    for s in made:
        s.close()


def _completion(text):
    return {"choices": [{"message": {"role": "assistant", "content": text}}]}


def _oracle(s, sleeps=None, **kw):
    cfg = EndpointConfig(url=s.url, api_key="k", backoff=0.5, **kw)
    return HttpOracle(cfg, sleep=(sleeps.append if sleeps is not None else lambda _: None))


def test_http_valid_plan(stub, newprob, corpus):
    s = stub((200, _completion(corpus.transcripts["newprob"][1])))
    q = build_initial_prompt(newprob)
    r = _oracle(s).query(q)
    assert r.parsed == corpus.plans["newprob_corrected"]
    headers, body = s.requests[0]
    assert headers["Authorization"] == "Bearer k"
    assert body["temperature"] == 0.0 and body["model"] == "gpt-4"
    assert body["messages"] == q.wire_messages()


def test_http_auth_error(stub, newprob):
    s = stub((401, {"error": "bad key"}))
    with pytest.raises(AuthError):
        _oracle(s).query(build_initial_prompt(newprob))
    assert len(s.requests) == 1


def test_http_reply_without_plan(stub, newprob):
    s = stub((200, _completion("Here is my reasoning, but no plan.")))
    r = _oracle(s).query(build_initial_prompt(newprob))
    assert r.parsed is None and isinstance(r.parse_error, NoPlanBlock)


def test_http_rate_limit_backoff(stub, newprob):
    s = stub((429, {}))
    sleeps = []
    with pytest.raises(RateLimited):
        _oracle(s, sleeps, max_retries=3).query(build_initial_prompt(newprob))
    assert len(s.requests) == 4
    assert sleeps == [0.5, 1.0, 2.0]


def test_http_retry_then_success(stub, newprob, corpus):
    s = stub((503, {}), (429, {}), (200, _completion(print_plan(corpus.plans["newprob_corrected"]))))
    assert _oracle(s).query(build_initial_prompt(newprob)).parsed == corpus.plans["newprob_corrected"]
    assert len(s.requests) == 3


@pytest.mark.parametrize("body", [b"not json", {"choices": []}, {"choices": [{"message": {}}]}])
def test_http_malformed(stub, newprob, body):
    s = stub((200, body))
    with pytest.raises(MalformedApiResponse):
        _oracle(s).query(build_initial_prompt(newprob))


def test_endpoint_config_file(tmp_path, monkeypatch):
    p = tmp_path / "oracle.ini"
    p.write_text("[oracle]\nurl = http://x/v1\nmodel = m\ntemperature = 0.5\nmax_retries = 1\n")
    cfg = load_endpoint_config(p, model="override")
    assert (cfg.url, cfg.model, cfg.temperature, cfg.max_retries) == ("http://x/v1", "override", 0.5, 1)
    monkeypatch.setenv("API_KEY", "env-key")
    assert cfg.resolved_key() == "env-key"
    p.write_text("[oracle]\nbogus = 1\n")
    with pytest.raises(ValueError):
        load_endpoint_config(p)


# ---------------------------------------------------------------- mocks


def test_scripted_oracle(newprob, corpus):
    o = ScriptedOracle(corpus.transcripts["newprob"])
    q = build_initial_prompt(newprob)
    assert o.query(q).parsed == corpus.plans["newprob_incorrect"]
    assert o.query(q).parsed == corpus.plans["newprob_corrected"]
    with pytest.raises(TranscriptExhausted):
        o.query(q)


def test_perfect_oracle(newprob):
    r = PerfectOracle(newprob).query(build_initial_prompt(newprob))
    assert verify(newprob, r.parsed).is_valid


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6), st.integers(0, 1000))
def test_noiseless_is_perfect(n, seed):
    p = gen_problem(GenConfig(n, seed), 0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        q = build_initial_prompt(p, PromptConfig(few_shot_examples=()))
    assert NoisyOracle(p, 0.0, seed).query(q).parsed == reference_solve(p)


def test_noisy_is_seeded(newprob):
    q = build_initial_prompt(newprob)
    a = [NoisyOracle(newprob, 0.3, "s:1").query(q).parsed for _ in range(2)]
    b = NoisyOracle(newprob, 0.3, "s:2").query(q).parsed
    assert a[0] == a[1]
    assert a[0] != b


def test_noisy_respects_rejected_prefixes(newprob, corpus):
    cfg = PromptConfig(few_shot_examples=())
    q = build_initial_prompt(newprob, cfg)
    o = NoisyOracle(newprob, 0.5, 3)
    first = o.query(q)
    v = verify(newprob, first.parsed)
    if v.is_valid:
        pytest.skip("seed produced a valid first draw")
    q2 = build_feedback_prompt(q, first, counterexample(v), cfg)
    for _ in range(20):
        assert not o.query(q2).parsed.startswith(v.prefix)


def test_noisy_rejects_bad_probability(newprob):
    with pytest.raises(ValueError):
        NoisyOracle(newprob, 1.5)
