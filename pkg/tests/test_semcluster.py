import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from seqscore.semcluster import (
    CachedOracle,
    ClusterStrategy,
    EntailmentProtocolError,
    EntailmentStatusError,
    EntailmentTransportError,
    HttpEntailmentOracle,
    cluster,
    entails,
)
from seqscore.textnorm import normalize_answer


@dataclass
class MockOracle:
    """Equality-based oracle counting calls; symmetric and reflexive."""

    verdict: str = "equal"  # "equal" | "always" | "never"
    calls: list = field(default_factory=list)

    def entails(self, premise, hypothesis, context=None):
        self.calls.append((premise, hypothesis, context))
        if self.verdict == "always":
            return True
        if self.verdict == "never":
            return False
        return premise == hypothesis


class TestNormalization:
    def test_rules(self):
        assert normalize_answer("The Eiffel Tower") == "eiffel tower"
        assert normalize_answer("eiffel tower!") == "eiffel tower"
        assert normalize_answer("  An  apple. ") == "apple"
        assert normalize_answer("a an the") == ""


class TestLexicalClustering:
    def test_exact_duplicates(self):
        assert cluster(["Paris", "Paris"], ClusterStrategy("exact")) == [0, 0]

    def test_exact_is_case_sensitive(self):
        assert cluster(["Paris", "paris"], ClusterStrategy("exact")) == [0, 1]

    def test_normalized_merges_variants(self):
        answers = ["The Eiffel Tower", "eiffel tower!"]
        assert cluster(answers, ClusterStrategy("normalized")) == [0, 0]

    def test_normalized_three_answers(self):
        answers = ["Paris", "London", "paris"]
        assert cluster(answers, ClusterStrategy("normalized")) == [0, 1, 0]

    def test_ids_dense_first_appearance(self):
        answers = ["c", "a", "c", "b", "a", "d"]
        assert cluster(answers, ClusterStrategy("exact")) == [0, 1, 0, 2, 1, 3]

    def test_exact_refines_normalized(self):
        answers = ["The cat", "cat", "dog", "the CAT!", "Dog", "bird"]
        exact = cluster(answers, ClusterStrategy("exact"))
        norm = cluster(answers, ClusterStrategy("normalized"))
        # every exact cluster maps into exactly one normalized cluster
        mapping = {}
        for e, n in zip(exact, norm):
            assert mapping.setdefault(e, n) == n

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            cluster([], ClusterStrategy("exact"))

    def test_unknown_strategy(self):
        with pytest.raises(ValueError):
            ClusterStrategy("embedding")


class TestMockOracleClustering:
    def test_never_entails_gives_singletons(self):
        strategy = ClusterStrategy("entailment", oracle=MockOracle("never"))
        assert cluster(["a", "b", "a"], strategy) == [0, 1, 2]

    def test_always_entails_gives_one_cluster(self):
        strategy = ClusterStrategy("entailment", oracle=MockOracle("always"))
        assert cluster(["a", "b", "c"], strategy) == [0, 0, 0]

    def test_equality_oracle_matches_exact(self):
        answers = ["x", "y", "x", "z"]
        strategy = ClusterStrategy("entailment", oracle=MockOracle("equal"))
        assert cluster(answers, strategy) == cluster(answers, ClusterStrategy("exact"))

    def test_permutation_gives_same_partition(self):
        answers = ["x", "y", "x", "z", "y"]
        permuted = ["y", "x", "z", "y", "x"]

        def partition(ans, labels):
            groups = {}
            for s, c in zip(ans, labels):
                groups.setdefault(c, set()).add(s)
            return sorted(sorted(g) for g in groups.values())

        a = cluster(answers, ClusterStrategy("entailment", oracle=MockOracle("equal")))
        b = cluster(permuted, ClusterStrategy("entailment", oracle=MockOracle("equal")))
        assert partition(answers, a) == partition(permuted, b)
        assert len(set(a)) == len(set(b)) == 3

    def test_context_forwarded(self):
        oracle = MockOracle("always")
        cluster(["a", "b"], ClusterStrategy("entailment", oracle=oracle), context="Q?")
        assert all(call[2] == "Q?" for call in oracle.calls)

    def test_cache_skips_repeat_calls(self):
        oracle = MockOracle("equal")
        cached = CachedOracle(oracle)
        assert cached.entails("a", "a") is True
        n = len(oracle.calls)
        assert cached.entails("a", "a") is True  # served from cache
        assert len(oracle.calls) == n
        cached.entails("a", "b")
        assert len(oracle.calls) == n + 1


class _OracleHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        self.server.requests.append(body)
        mode = self.server.mode
        if mode == "bad-status":
            self.send_response(500)
            self.end_headers()
            return
        if mode == "not-json":
            payload = b"not json"
        elif mode == "bad-schema":
            payload = json.dumps({"entailment": "yes"}).encode()
        else:
            payload = json.dumps({"entails": body["premise"] == body["hypothesis"]}).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture
def oracle_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _OracleHandler)
    server.mode = "equal"
    server.requests = []
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server, f"http://127.0.0.1:{server.server_address[1]}/"
    server.shutdown()


class TestHttpOracle:
    def test_entails_round_trip(self, oracle_server):
        server, url = oracle_server
        verdict = entails("same", "same", endpoint=url)
        assert verdict.entails is True
        assert entails("a", "b", endpoint=url).entails is False
        assert server.requests[0] == {"premise": "same", "hypothesis": "same"}

    def test_context_in_payload(self, oracle_server):
        server, url = oracle_server
        entails("a", "b", endpoint=url, context="What is x?")
        assert server.requests[-1]["context"] == "What is x?"

    def test_non_2xx_raises_status_error(self, oracle_server):
        server, url = oracle_server
        server.mode = "bad-status"
        with pytest.raises(EntailmentStatusError, match="500"):
            entails("a", "b", endpoint=url)

    def test_non_json_reply_raises_protocol_error(self, oracle_server):
        server, url = oracle_server
        server.mode = "not-json"
        with pytest.raises(EntailmentProtocolError):
            entails("a", "b", endpoint=url)

    def test_schema_mismatch_raises_protocol_error(self, oracle_server):
        server, url = oracle_server
        server.mode = "bad-schema"
        with pytest.raises(EntailmentProtocolError, match="entails"):
            entails("a", "b", endpoint=url)

    def test_unreachable_raises_transport_error(self):
        with pytest.raises(EntailmentTransportError):
            entails("a", "b", endpoint="http://127.0.0.1:9/", timeout=0.5)

    def test_cluster_over_http(self, oracle_server):
        _, url = oracle_server
        strategy = ClusterStrategy("entailment", endpoint=url)
        assert cluster(["p", "q", "p"], strategy) == [0, 1, 0]

    def test_endpoint_from_environment(self, oracle_server, monkeypatch):
        _, url = oracle_server
        monkeypatch.setenv("SEQSCORE_NLI_ENDPOINT", url)
        strategy = ClusterStrategy("entailment")
        assert cluster(["p", "p"], strategy) == [0, 0]

    def test_missing_endpoint_is_an_error(self, monkeypatch):
        monkeypatch.delenv("SEQSCORE_NLI_ENDPOINT", raising=False)
        with pytest.raises(ValueError, match="endpoint"):
            ClusterStrategy("entailment").build_oracle()

    def test_strategy_cache_avoids_duplicate_requests(self, oracle_server):
        server, url = oracle_server
        strategy = ClusterStrategy("entailment", endpoint=url)
        cluster(["p", "p", "p", "p"], strategy)
        with_cache = len(server.requests)
        server.requests.clear()
        cluster(["p", "p", "p", "p"], ClusterStrategy("entailment", endpoint=url, cache=False))
        assert with_cache < len(server.requests)
