from enum import Enum
from threading import Lock
import json
from pathlib import Path
import dataclasses

import numpy as np

from .logger import setup_logger

logger = setup_logger()


class ExperimentState(Enum):
    INITIALIZED = "initialized"
    CONFIGURED  = "configured"
    RUNNING     = "running"
    REPORTING   = "reporting"
    COMPLETED   = "completed"
    ERROR       = "error"


def make_serializable(obj):
    """
    Recursively convert an object tree into JSON-safe primitives.
    Handles dicts, lists, dataclasses, Enums, numpy scalars/arrays and sets.
    """
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        if np.isnan(obj):
            return None
        if np.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return make_serializable(float(obj))
    if isinstance(obj, np.ndarray):
        return [make_serializable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: make_serializable(getattr(obj, f.name))
                for f in dataclasses.fields(obj)}
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): make_serializable(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return sorted(make_serializable(v) for v in obj)
    if isinstance(obj, (list, tuple)):
        return [make_serializable(i) for i in obj]
    if isinstance(obj, Path):
        return str(obj)
    return str(obj)


class StateManager:
    _instance = None
    _lock = Lock()
    current_state: ExperimentState
    progress: int
    data: dict
    errors: list

    def __new__(cls):
        with cls._lock:
            if cls._instance is None:
                cls._instance = super(StateManager, cls).__new__(cls)
                cls._instance._initialize()
        return cls._instance

    def __init__(self):
        if not hasattr(self, "current_state"):
            self._initialize()

    @classmethod
    def reset(cls):
        """Reset singleton instance for testing purposes."""
        with cls._lock:
            cls._instance = None

    def _initialize(self):
        self.current_state = ExperimentState.INITIALIZED
        self.progress = 0
        self.data = {}
        self.errors = []
        logger.info("StateManager initialized")

    def update_state(self, new_state: ExperimentState):
        self.current_state = new_state
        logger.info(f"State updated to {new_state.value}")

    def update_progress(self, value: int):
        self.progress = value
        logger.debug(f"Progress updated to {value}%")

    def add_data(self, key, value):
        self.data[key] = value
        logger.debug(f"Data added under key '{key}'")

    def add_error(self, error_message: str):
        self.errors.append(error_message)
        logger.error(f"Error recorded: {error_message}")
        self.update_state(ExperimentState.ERROR)

    def get_snapshot(self):
        return {
            "state":    self.current_state.value,
            "progress": self.progress,
            "data":     make_serializable(self.data),
            "errors":   list(self.errors),
        }

    def dump_to_file(self, path="logs/state_snapshot.json"):
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.get_snapshot(), f, indent=4, sort_keys=True)
        logger.info("State snapshot dumped to file")
