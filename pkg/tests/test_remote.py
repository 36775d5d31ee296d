import threading
from contextlib import contextmanager

import pytest
import requests
from flask import Flask, jsonify, request
from werkzeug.serving import make_server

from src.modules.table import TableError, to_record
from src.modules.victim import (
    RemoteVictim,
    UnknownClassError,
    VictimProtocolError,
    VictimTransportError,
)


@contextmanager
def serving(app):
    server = make_server("127.0.0.1", 0, app, threaded=True)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://127.0.0.1:{server.server_port}"
    finally:
        server.shutdown()
        thread.join()


def _stub_app(logits):
    app = Flask("stub")

    @app.route("/classes", methods=["POST"])
    def classes():
        return jsonify({"classes": ["a", "b"], "threshold": 0.5})

    @app.route("/predict", methods=["POST"])
    def predict():
        return jsonify({"classes": request.get_json()["classes"], "logits": logits})

    return app


def test_remote_logits_match_in_process(victim_server, synthetic, reference_victim):
    remote = RemoteVictim(victim_server)
    assert remote.classes == reference_victim.classes
    assert remote.threshold == reference_victim.threshold
    for table in list(synthetic.test)[:4]:
        for j in table.annotated_columns:
            requested = list(reversed(reference_victim.classes))[:7]
            assert remote.predict_logits(table, j, requested) == \
                reference_victim.predict_logits(table, j, requested)
            assert remote.predict_classes(table, j) == reference_victim.predict_classes(table, j)


def test_unknown_class_is_reported(victim_server, small_table):
    remote = RemoteVictim(victim_server)
    with pytest.raises(UnknownClassError) as excinfo:
        remote.predict_logits(small_table, 0, ["people.person", "no.such_class"])
    assert excinfo.value.classes == ["no.such_class"]


def test_column_out_of_range_fails_locally(victim_server, small_table):
    with pytest.raises(TableError):
        RemoteVictim(victim_server).predict_logits(small_table, 5, ["people.person"])


def test_server_rejects_malformed_requests(victim_server, small_table):
    response = requests.post(f"{victim_server}/predict", json={"column_index": 0}, timeout=5)
    assert response.status_code == 400
    assert "message" in response.json()

    record = to_record(small_table)
    record["rows"][0] = ["only one cell"]
    response = requests.post(f"{victim_server}/predict", timeout=5, json={
        "table": record, "column_index": 0, "classes": ["people.person"]})
    assert response.status_code == 400


@pytest.mark.parametrize("column_index", [1.7, 1.0, "1", True])
def test_server_rejects_non_integer_column_index(victim_server, small_table, column_index):
    response = requests.post(f"{victim_server}/predict", timeout=5, json={
        "table": to_record(small_table), "column_index": column_index,
        "classes": ["people.person"]})
    assert response.status_code == 400
    assert "column index" in response.json()["message"].lower()


def test_wrong_logit_count_is_a_protocol_error(small_table):
    with serving(_stub_app([0.1])) as url:
        remote = RemoteVictim(url)
        assert remote.classes == ("a", "b")
        with pytest.raises(VictimProtocolError) as excinfo:
            remote.predict_logits(small_table, 0, ["a", "b"])
    assert "1 logits for 2 classes" in excinfo.value.message


def test_non_numeric_logits_are_a_protocol_error(small_table):
    with serving(_stub_app(["high", "low"])) as url:
        with pytest.raises(VictimProtocolError):
            RemoteVictim(url).predict_logits(small_table, 0, ["a", "b"])


def test_unreachable_victim_names_endpoint(small_table, unused_port):
    endpoint = f"http://127.0.0.1:{unused_port}"
    with pytest.raises(VictimTransportError) as excinfo:
        RemoteVictim(endpoint, timeout=2).predict_logits(small_table, 0, ["a"])
    assert excinfo.value.endpoint == endpoint
    assert endpoint in excinfo.value.message
    assert not isinstance(excinfo.value, VictimProtocolError)
