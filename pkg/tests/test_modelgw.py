import json

import pytest
import requests

from dossier.modelgw import (
    ChatRequest,
    HttpChatClient,
    MockChatClient,
    MockEmbeddingClient,
    MockRerankClient,
    ModelGatewayError,
    ScriptedChatClient,
    _token_index,
    _with_retry,
    cosine,
    prompt_hash,
)


def user_req(text):
    return ChatRequest(messages=(("user", text),))


class TestChatRequest:
    def test_requires_user_message(self):
        with pytest.raises(ModelGatewayError):
            ChatRequest(messages=(("system", "hi"),))

    def test_rejects_unknown_role(self):
        with pytest.raises(ModelGatewayError):
            ChatRequest(messages=(("bot", "hi"),))

    def test_rejects_negative_temperature(self):
        with pytest.raises(ModelGatewayError):
            ChatRequest(messages=(("user", "hi"),), temperature=-1)


class TestMockChat:
    def test_canned_by_prompt_hash(self):
        prompt = "whatever text"
        client = MockChatClient(canned={prompt_hash(prompt): "canned!"})
        assert client.chat(user_req(prompt)).text == "canned!"

    def test_deterministic_on_repeat(self):
        client = MockChatClient()
        req = user_req("TASK: answer\nQUESTION: What is KRAS?\n[PMID:11] KRAS drives tumors.")
        assert client.chat(req).text == client.chat(req).text

    def test_answer_task_cites_context(self):
        client = MockChatClient()
        req = user_req(
            "TASK: answer\nQUESTION: Role of KRAS?\n"
            "[PMID:11] KRAS drives tumors.\n[PMID:22] KRAS signals."
        )
        text = client.chat(req).text
        assert "[PMID:11]" in text and "[PMID:22]" in text

    def test_records_token_usage(self):
        client = MockChatClient()
        resp = client.chat(user_req("TASK: summarize\nSOURCE TEXT:\nOne. Two. Three."))
        assert resp.prompt_tokens > 0 and resp.completion_tokens > 0


class TestScriptedChat:
    def test_plays_in_order_then_fails(self):
        client = ScriptedChatClient(["a", "b"])
        assert client.chat(user_req("1")).text == "a"
        assert client.chat(user_req("2")).text == "b"
        with pytest.raises(ModelGatewayError):
            client.chat(user_req("3"))


class TestMockEmbedder:
    def test_same_text_same_vector(self):
        emb = MockEmbeddingClient()
        v1, v2 = emb.embed(["kras tumor"]), emb.embed(["kras tumor"])
        assert v1[0] == v2[0]

    def test_identical_texts_cosine_one(self):
        emb = MockEmbeddingClient()
        vs = emb.embed(["a", "a"])
        assert cosine(vs[0].values, vs[1].values) == pytest.approx(1.0)

    def test_engineered_orthogonality(self):
        # by the documented hash rule these single tokens land on different axes
        assert _token_index("kras") != _token_index("insulin")
        emb = MockEmbeddingClient()
        vs = emb.embed(["kras", "insulin"])
        assert cosine(vs[0].values, vs[1].values) == pytest.approx(0.0)

    def test_batch_split_invariance(self):
        emb = MockEmbeddingClient()
        texts = ["one two", "three", "four five six"]
        whole = emb.embed(texts)
        parts = emb.embed(texts[:1]) + emb.embed(texts[1:])
        assert whole == parts

    def test_rejects_empty_batch_and_empty_text(self):
        emb = MockEmbeddingClient()
        with pytest.raises(ModelGatewayError):
            emb.embed([])
        with pytest.raises(ModelGatewayError):
            emb.embed([""])

    def test_unit_norm(self):
        emb = MockEmbeddingClient()
        v = emb.embed(["kras tumor growth"])[0]
        assert sum(x * x for x in v.values) == pytest.approx(1.0)


class TestMockReranker:
    def test_token_overlap_order(self):
        rr = MockRerankClient()
        scores = rr.rerank("kras tumor", ["kras tumor growth", "insulin"])
        assert [s.passage_index for s in scores] == [0, 1]
        assert scores[0].score == 2.0 and scores[1].score == 0.0

    def test_single_passage(self):
        rr = MockRerankClient()
        scores = rr.rerank("anything", ["only passage"])
        assert [s.passage_index for s in scores] == [0]

    def test_ties_keep_input_order(self):
        rr = MockRerankClient()
        scores = rr.rerank("zebra", ["first text", "second text"])
        assert [s.passage_index for s in scores] == [0, 1]


class TestCosine:
    def test_identity(self):
        assert cosine((1.0, 2.0), (1.0, 2.0)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert cosine((1.0, 0.0), (0.0, 1.0)) == 0.0

    def test_hand_value(self):
        assert cosine((1.0, 1.0), (1.0, 0.0)) == pytest.approx(0.7071067811865475, abs=1e-6)

    def test_zero_vector_rejected(self):
        with pytest.raises(ModelGatewayError):
            cosine((0.0, 0.0), (1.0, 0.0))

    def test_dimension_mismatch(self):
        with pytest.raises(ModelGatewayError):
            cosine((1.0,), (1.0, 2.0))


class TestRetry:
    def test_retries_transport_errors_then_succeeds(self):
        calls = []
        delays = []

        def flaky():
            calls.append(1)
            if len(calls) < 3:
                raise requests.ConnectionError("boom")
            return "ok"

        assert _with_retry(flaky, sleep=delays.append) == "ok"
        assert len(calls) == 3
        assert delays == [0.25, 0.5]

    def test_gives_up_after_three(self):
        def always():
            raise requests.ConnectionError("boom")

        with pytest.raises(ModelGatewayError):
            _with_retry(always, sleep=lambda _: None)

    def test_4xx_not_retried(self):
        calls = []

        def bad_request():
            calls.append(1)
            resp = requests.Response()
            resp.status_code = 400
            raise requests.HTTPError(response=resp)

        with pytest.raises(ModelGatewayError):
            _with_retry(bad_request, sleep=lambda _: None)
        assert len(calls) == 1


class FakeSession:
    """Stands in for requests.Session; returns queued responses."""

    def __init__(self, payloads):
        self.payloads = list(payloads)
        self.posts = []

    def post(self, url, json=None, headers=None, timeout=None):
        self.posts.append({"url": url, "json": json})
        resp = requests.Response()
        resp.status_code = 200
        payload = self.payloads.pop(0)
        resp._content = bytes(json_dumps(payload), "utf-8")
        return resp


def json_dumps(obj):
    return json.dumps(obj)


class TestHttpChatClient:
    def test_parses_choices_and_usage(self):
        session = FakeSession(
            [{"choices": [{"message": {"content": "OK"}}],
              "usage": {"prompt_tokens": 5, "completion_tokens": 1}}]
        )
        client = HttpChatClient("http://x/v1/chat/completions", "m", session=session)
        resp = client.chat(user_req("Reply with OK"))
        assert resp.text == "OK"
        assert resp.prompt_tokens == 5
        assert session.posts[0]["json"]["model"] == "m"

    def test_empty_completion_is_error(self):
        session = FakeSession([{"choices": [{"message": {"content": ""}}]}])
        client = HttpChatClient("http://x", "m", session=session)
        with pytest.raises(ModelGatewayError):
            client.chat(user_req("hi"))
