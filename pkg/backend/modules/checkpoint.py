import os
import json
import tempfile
from datetime import datetime
from typing import Any, Dict
import logging

from modules.errors import CheckpointIOError, CheckpointMismatchError

logger = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


class CheckpointStore:
    """Versioned JSON checkpoint for a sieve run, replaced atomically after every chunk"""

    def __init__(self, path: str):
        self.path = path

    def exists(self) -> bool:
        return os.path.exists(self.path)

    def save(self, config_hash: str, last_completed_chunk: int, tally: Dict[str, Any]) -> None:
        """Write the state through a temp file in the same directory, then rename it over the old one"""
        state = {
            'version': CHECKPOINT_VERSION,
            'config_hash': config_hash,
            'last_completed_chunk': last_completed_chunk,
            'tally': tally,
            'written_at': datetime.now().isoformat(),
        }
        directory = os.path.dirname(os.path.abspath(self.path))
        try:
            fd, temp_path = tempfile.mkstemp(prefix='.checkpoint-', suffix='.tmp', dir=directory)
            try:
                with os.fdopen(fd, 'w', encoding='utf-8') as f:
                    json.dump(state, f, sort_keys=True)
                    f.flush()
                    os.fsync(f.fileno())
                os.replace(temp_path, self.path)
            except BaseException:
                if os.path.exists(temp_path):
                    os.unlink(temp_path)
                raise
        except OSError as e:
            logger.error(f"Error writing checkpoint {self.path}: {e}")
            raise CheckpointIOError(f"cannot write checkpoint {self.path}: {e}") from e
        logger.debug(f"checkpoint {self.path}: chunk {last_completed_chunk} done")

    def load(self, config_hash: str) -> Dict[str, Any]:
        """
        Read the saved state

        Raises:
            CheckpointIOError: unreadable or malformed file
            CheckpointMismatchError: written by a different configuration or format version
        """
        try:
            with open(self.path, 'r', encoding='utf-8') as f:
                state = json.load(f)
        except (OSError, ValueError) as e:
            logger.error(f"Error reading checkpoint {self.path}: {e}")
            raise CheckpointIOError(f"cannot read checkpoint {self.path}: {e}") from e

        if not isinstance(state, dict) or 'tally' not in state:
            raise CheckpointIOError(f"checkpoint {self.path} is malformed")
        if state.get('version') != CHECKPOINT_VERSION:
            raise CheckpointMismatchError(
                f"checkpoint {self.path} has version {state.get('version')}, expected {CHECKPOINT_VERSION}")
        if state.get('config_hash') != config_hash:
            raise CheckpointMismatchError(
                f"checkpoint {self.path} was written for a different configuration")
        return state
