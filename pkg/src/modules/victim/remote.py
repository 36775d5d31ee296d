import logging
import threading
from typing import Any, Dict, Optional, Sequence, Tuple

import requests

from config import BaseConfig
from src.modules.table import Table, column, to_record
from src.modules.victim.base import (
    LogitVector,
    UnknownClassError,
    Victim,
    VictimProtocolError,
    VictimTransportError,
)

logger = logging.getLogger(__name__)


class RemoteVictim(Victim):
    """
    Client for a victim served over the wire protocol:

        POST /predict  {"table": <record>, "column_index": j, "classes": [...]}
                    -> {"classes": [...], "logits": [...]}
        POST /classes  {} -> {"classes": [...], "threshold": tau}

    Requests are never retried; every failure surfaces as a transport error.
    """

    def __init__(self, endpoint: str, timeout: Optional[float] = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = BaseConfig.REQUEST_TIMEOUT if timeout is None else timeout
        self._classes: Optional[Tuple[str, ...]] = None
        self._threshold: Optional[float] = None
        self._lock = threading.Lock()

    def _post(self, route: str, payload: Dict[str, Any]) -> Dict[str, Any]:
        url = f"{self.endpoint}/{route}"
        try:
            response = requests.post(url, json=payload, timeout=self.timeout)
        except requests.exceptions.Timeout:
            raise VictimTransportError(
                f"Request to /{route} timed out after {self.timeout}s", self.endpoint)
        except requests.exceptions.RequestException as e:
            raise VictimTransportError(
                f"Request to /{route} failed: {e}", self.endpoint)

        try:
            body = response.json()
        except ValueError:
            body = None

        if response.status_code == 400 and isinstance(body, dict) \
                and body.get("error") == "unknown_class":
            raise UnknownClassError(body.get("unknown", []))
        try:
            response.raise_for_status()
        except requests.exceptions.HTTPError as e:
            message = body.get("message") if isinstance(body, dict) else None
            raise VictimTransportError(
                f"/{route} answered {response.status_code}: {message or e}", self.endpoint)

        if not isinstance(body, dict):
            raise VictimProtocolError(
                f"/{route} did not answer with a JSON object", self.endpoint)
        return body

    def _describe(self):
        with self._lock:
            if self._classes is not None:
                return
            body = self._post("classes", {})
            classes = body.get("classes")
            if not isinstance(classes, list) or not classes \
                    or not all(isinstance(c, str) for c in classes):
                raise VictimProtocolError(
                    "/classes did not return a non-empty list of class names", self.endpoint)
            threshold = body.get("threshold", BaseConfig.DEFAULT_THRESHOLD)
            if not _is_number(threshold):
                raise VictimProtocolError(
                    "/classes returned a non-numeric threshold", self.endpoint)
            self._threshold = float(threshold)
            self._classes = tuple(classes)
            logger.info("Remote victim %s serves %d classes.",
                        self.endpoint, len(self._classes))

    @property
    def classes(self) -> Tuple[str, ...]:
        self._describe()
        return self._classes

    @property
    def threshold(self) -> float:
        self._describe()
        return self._threshold

    def predict_logits(self, table: Table, j: int, classes: Sequence[str]) -> LogitVector:
        column(table, j)
        classes = list(classes)
        if not classes:
            raise UnknownClassError([], "At least one class must be requested.")

        body = self._post("predict", {
            "table": to_record(table),
            "column_index": j,
            "classes": classes,
        })
        echoed = body.get("classes")
        logits = body.get("logits")
        if echoed != classes:
            raise VictimProtocolError(
                "/predict did not echo the requested classes in order", self.endpoint)
        if not isinstance(logits, list) or len(logits) != len(classes):
            got = len(logits) if isinstance(logits, list) else type(logits).__name__
            raise VictimProtocolError(
                f"/predict returned {got} logits for {len(classes)} classes", self.endpoint)
        if not all(_is_number(x) for x in logits):
            raise VictimProtocolError(
                "/predict returned non-numeric logits", self.endpoint)
        try:
            return LogitVector(tuple(classes), tuple(float(x) for x in logits))
        except ValueError as e:
            raise VictimProtocolError(f"/predict returned unusable logits: {e}", self.endpoint)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def remote_predict(endpoint: str, table: Table, j: int, classes: Sequence[str],
                   timeout: Optional[float] = None) -> LogitVector:
    return RemoteVictim(endpoint, timeout).predict_logits(table, j, classes)
