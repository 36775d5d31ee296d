import os


class BaseConfig:
    # Victim server
    IP = os.getenv("TABLE_ATTACK_IP", "127.0.0.1")
    PORT = int(os.getenv("TABLE_ATTACK_PORT", "5000"))
    VICTIM_SPEC = os.getenv("TABLE_ATTACK_VICTIM", "")
    MAX_CONTENT_LENGTH = 16 * 1024 * 1024

    LOG_LEVEL = os.getenv("TABLE_ATTACK_LOG_LEVEL", "INFO")

    # Default worker count for per-column attacks inside a sweep cell.
    THREADS = int(os.getenv("TABLE_ATTACK_THREADS", "4"))
    # Seconds before a remote victim request is abandoned.
    REQUEST_TIMEOUT = float(os.getenv("TABLE_ATTACK_TIMEOUT", "30"))

    # Reference victim
    DEFAULT_THRESHOLD = 0.5
    DEFAULT_HEADER_WEIGHT = 0.3
    MISSING_EMBEDDING_POLICY = "skip"

    # Sweeps
    DEFAULT_P_VALUES = (20, 40, 60, 80, 100)
    DEFAULT_SEED = 0
    FLOAT_FORMAT = "%.4f"

    # Output file names
    RESULTS_FILE = "results.jsonl"
    SWEEP_FILE = "sweep.csv"
    TABLE_FILE = "table.csv"
    SELECTION_SERIES_FILE = "selection_series.csv"
    POOL_SERIES_FILE = "sampling_series.csv"
    PER_TYPE_FILE = "per_type.csv"
    HEADER_SWAPS_FILE = "header_swaps.csv"
    MANIFEST_FILE = "manifest.yaml"
    FIXTURE_METADATA_FILE = "fixture.yaml"

    # Response messages
    RESPONSE_PREDICT_FAILED = "Prediction failed"
    RESPONSE_UNKNOWN_CLASS = "Unknown class requested"
    RESPONSE_INVALID_TABLE = "Invalid table record"
