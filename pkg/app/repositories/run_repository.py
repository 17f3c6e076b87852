import glob
import json
import os
import re
import time
from contextlib import contextmanager
from typing import Any, Dict, List, Optional

import numpy as np

from app.core.logging_config import get_logger, log_storage_operation
from app.models.grid import Grid2D
from app.models.wavefunction import Wavefunction
from app.schemas.analysis import ContourRaster
from app.schemas.config import RunConfig
from app.utils.config_parser import serialize_config
from app.utils.errors import ConfigurationError, StorageError

logger = get_logger(__name__)

LOCK_NAME = ".lock"
SNAPSHOT_PATTERN = re.compile(r"snap_(\d{8})\.csv$")
SNAPSHOT_HEADER = "Q1,Q2,re_psi,im_psi,density"
CSV_FORMAT = "%.17g"


def snapshot_name(step: int) -> str:
    return f"snap_{step:08d}.csv"


def snapshot_step(path: str) -> int:
    match = SNAPSHOT_PATTERN.search(os.path.basename(path))
    if not match:
        raise ConfigurationError(f"'{path}' is not a snapshot file (expected snap_<step:08d>.csv)")
    return int(match.group(1))


class RunRepository:
    """All file I/O of one run directory: snapshots, JSON summaries, rasters and the lock."""

    def __init__(self, directory: str):
        self.directory = directory

    def path(self, name: str) -> str:
        return os.path.join(self.directory, name)

    def _storage(self, operation: str, path: str, action, **kwargs):
        start_time = time.time()
        try:
            result = action()
        except OSError as e:
            raise StorageError(f"{operation} failed for {path}: {e}", details={"path": path},
                               original_exception=e)
        log_storage_operation(logger, operation, path, round((time.time() - start_time) * 1000, 2), **kwargs)
        return result

    @contextmanager
    def lock(self):
        """
        Exclusive use of the run directory for one command.

        Raises:
            StorageError: another writer holds the lock
        """
        lock_path = self.path(LOCK_NAME)

        def acquire():
            os.makedirs(self.directory, exist_ok=True)
            descriptor = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
            os.write(descriptor, str(os.getpid()).encode())
            os.close(descriptor)

        try:
            self._storage("lock", lock_path, acquire)
        except StorageError as e:
            if isinstance(e.original_exception, FileExistsError):
                raise StorageError(f"Run directory {self.directory} is locked by another writer",
                                   details={"lock": lock_path}, original_exception=e.original_exception)
            raise
        try:
            yield self
        finally:
            self._storage("unlock", lock_path, lambda: os.remove(lock_path))

    def write_json(self, name: str, data: Dict[str, Any]) -> str:
        """Sorted keys, two-space indent, LF line endings, so equal data gives equal bytes."""
        path = self.path(name)
        text = json.dumps(data, sort_keys=True, indent=2) + "\n"

        def write():
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)

        self._storage("write_json", path, write)
        return path

    def read_json(self, name: str) -> Dict[str, Any]:
        path = self.path(name)

        def read():
            with open(path, encoding="utf-8") as handle:
                return json.load(handle)

        return self._storage("read_json", path, read)

    def exists(self, name: str) -> bool:
        return os.path.exists(self.path(name))

    def write_config(self, config: RunConfig, name: str = "config.cfg") -> str:
        path = self.path(name)
        text = serialize_config(config)

        def write():
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)

        self._storage("write_config", path, write)
        return path

    def _write_csv(self, path: str, header: str, columns: np.ndarray) -> None:
        def write():
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                np.savetxt(handle, columns, delimiter=",", header=header, comments="", fmt=CSV_FORMAT)

        self._storage("write_csv", path, write, rows=len(columns))

    def write_snapshot(self, psi: Wavefunction) -> str:
        """One row per grid point: Q1, Q2, Re psi, Im psi, |psi|^2."""
        path = self.path(snapshot_name(psi.step))
        Q1, Q2 = psi.grid.mesh()
        amplitudes = psi.amplitudes
        columns = np.column_stack([Q1.ravel(), Q2.ravel(), amplitudes.real.ravel(),
                                   amplitudes.imag.ravel(), psi.density().ravel()])
        self._write_csv(path, SNAPSHOT_HEADER, columns)
        return path

    def read_snapshot(self, path: str, grid: Grid2D, time_value: float) -> Wavefunction:
        """
        Raises:
            ConfigurationError: the snapshot was written on another grid
        """
        step = snapshot_step(path)
        data = self._storage("read_csv", path,
                             lambda: np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2))
        if data.shape != (grid.n1 * grid.n2, 5):
            raise ConfigurationError(f"Snapshot {path} does not match the configured grid",
                                     details={"rows": data.shape[0], "grid": grid.to_dict()})
        Q1, Q2 = grid.mesh()
        if not (np.allclose(data[:, 0], Q1.ravel(), rtol=0, atol=1e-9 * grid.dx1)
                and np.allclose(data[:, 1], Q2.ravel(), rtol=0, atol=1e-9 * grid.dx2)):
            raise ConfigurationError(f"Snapshot {path} was written on a different grid")
        amplitudes = (data[:, 2] + 1j * data[:, 3]).reshape(grid.shape)
        return Wavefunction(amplitudes, grid, time=time_value, step=step)

    def snapshots(self) -> List[str]:
        """Snapshot paths ordered by step."""
        paths = glob.glob(self.path("snap_*.csv"))
        return sorted((p for p in paths if SNAPSHOT_PATTERN.search(p)), key=snapshot_step)

    def latest_snapshot(self) -> Optional[str]:
        paths = self.snapshots()
        return paths[-1] if paths else None

    def write_raster(self, name: str, raster: ContourRaster) -> str:
        path = self.path(name)
        self._write_csv(path, ",".join(raster.header), raster.columns())
        return path
