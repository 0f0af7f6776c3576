"""Reading input files and writing simulation and campaign artifacts."""

import hashlib
import logging
import os
from typing import Dict, Iterable, Optional, Tuple

from .exceptions import StorageError

logger = logging.getLogger(__name__)


class ArtifactInfo:
    """Metadata of a written artifact."""

    def __init__(self, path: str, size: int, checksum: Optional[str] = None):
        self.path = path
        self.size = size
        self.checksum = checksum or ""

    def to_dict(self) -> Dict:
        return {
            'path': self.path,
            'size': self.size,
            'checksum': self.checksum,
        }


class FileManager:
    """Reads model, trace and report files and writes artifacts under a base directory."""

    def __init__(self, base_dir: str = "."):
        """
        Initialize the file manager.

        Args:
            base_dir: Directory that relative output paths are resolved against
        """
        self.base_dir = base_dir

    def get_full_path(self, filename: str) -> str:
        """
        Resolve a path against the base directory.

        Args:
            filename: Relative or absolute path

        Returns:
            Full path
        """
        return os.path.join(self.base_dir, filename)

    def read_text(self, filepath: str) -> str:
        """
        Read a UTF-8 text file.

        Raises:
            StorageError: If the file cannot be read
        """
        try:
            with open(self.get_full_path(filepath), 'r', encoding='utf-8') as f:
                return f.read()
        except (OSError, UnicodeDecodeError) as e:
            raise StorageError(f"Failed to read file {filepath}: {e}")

    def ensure_dir(self, dirpath: str) -> None:
        full = self.get_full_path(dirpath)
        if dirpath and not os.path.isdir(full):
            try:
                os.makedirs(full, exist_ok=True)
            except OSError as e:
                raise StorageError(f"Failed to create directory {dirpath}: {e}")

    def write_text(self, filepath: str, content: str) -> ArtifactInfo:
        """
        Write a text artifact with '\\n' line endings, creating parent directories.

        Args:
            filepath: Destination path
            content: Text to write

        Returns:
            ArtifactInfo of the written file
        """
        self.ensure_dir(os.path.dirname(filepath))
        data = content.encode('utf-8')
        try:
            with open(self.get_full_path(filepath), 'wb') as f:
                f.write(data)
        except OSError as e:
            raise StorageError(f"Failed to write file {filepath}: {e}")
        logger.debug("wrote %s (%d bytes)", filepath, len(data))
        return ArtifactInfo(filepath, len(data), hashlib.sha256(data).hexdigest())

    def write_many(self, artifacts: Iterable[Tuple[str, str]]) -> Dict[str, ArtifactInfo]:
        """Write (path, content) pairs; returns their infos keyed by path."""
        return {path: self.write_text(path, content) for path, content in artifacts}
