import socket
import threading

import numpy as np
import pytest
from hypothesis import settings
from werkzeug.serving import make_server

from run import create_app
from src.modules.evaluation import FixtureSpec, gen_synthetic_corpus
from src.modules.kb import EmbeddingStore, build_kb
from src.modules.table import Table
from src.modules.victim import build_prototype_victim

settings.register_profile("repo", max_examples=50, deadline=None)
settings.load_profile("repo")


@pytest.fixture
def small_table() -> Table:
    return Table(
        table_id="players",
        headers=["player", "country"],
        cells=[
            ["rafael nadal", "spain"],
            ["roger federer", "switzerland"],
            ["novak djokovic", "serbia"],
        ],
        annotations={0: ["tennis.player", "people.person"], 1: ["location.country"]},
    )


@pytest.fixture
def toy_store() -> EmbeddingStore:
    tokens = ["rafael nadal", "roger federer", "novak djokovic", "andy murray",
              "spain", "switzerland", "serbia", "scotland", "player", "country", "athlete"]
    vectors = [
        [1.0, 0.1, 0.0], [1.0, -0.1, 0.0], [0.9, 0.0, 0.1], [-1.0, 0.0, 0.0],
        [0.0, 1.0, 0.1], [0.0, 1.0, -0.1], [0.1, 1.0, 0.0], [0.0, -1.0, 0.0],
        [1.0, 0.0, 1.0], [0.0, 1.0, 1.0], [1.0, 0.05, 1.0],
    ]
    return EmbeddingStore(tokens, np.array(vectors))


@pytest.fixture(scope="session")
def synthetic():
    return gen_synthetic_corpus(FixtureSpec())


@pytest.fixture(scope="session")
def reference_victim(synthetic):
    return build_prototype_victim(synthetic.train, synthetic.embeddings,
                                  header_weight=0.3, threshold=0.5)


@pytest.fixture(scope="session")
def fixture_kb(synthetic):
    kb_train = build_kb(synthetic.train, synthetic.embeddings)
    return build_kb(synthetic.test, synthetic.embeddings).with_reference(kb_train)


@pytest.fixture
def unused_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


@pytest.fixture(scope="session")
def victim_server(reference_victim):
    server = make_server("127.0.0.1", 0, create_app(reference_victim), threaded=True)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}"
    server.shutdown()
    thread.join()
