"""
IDX (MNIST-format) dataset files.

Parses the IDX container (optionally gzip-compressed) and downloads missing
files over HTTP. Each distribution id maps to one (images, labels) file pair;
pixels are scaled to [0, 1] and flattened.
"""

import asyncio
import gzip
import logging
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import httpx
import numpy as np

from ..numerics.model import Dataset, DimensionError
from .base import DatasetSourceError

# Configure logging
logger = logging.getLogger(__name__)

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def parse_idx(raw: bytes) -> np.ndarray:
    """Decode an IDX payload into an array.

    Raises:
        DatasetSourceError: On a bad magic number or truncated payload
    """
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 4 or raw[0] != 0 or raw[1] != 0:
        raise DatasetSourceError("not an IDX file (bad magic)")
    dtype = _IDX_DTYPES.get(raw[2])
    if dtype is None:
        raise DatasetSourceError(f"unknown IDX element type 0x{raw[2]:02x}")
    ndim = raw[3]
    header = 4 + 4 * ndim
    if len(raw) < header:
        raise DatasetSourceError("truncated IDX header")
    shape = struct.unpack(f">{ndim}I", raw[4:header])
    count = int(np.prod(shape)) if shape else 1
    if len(raw) - header < count * dtype.itemsize:
        raise DatasetSourceError(f"truncated IDX payload for shape {shape}")
    data = np.frombuffer(raw, dtype=dtype, count=count, offset=header)
    return data.reshape(shape).astype(dtype.newbyteorder("="))


def load_idx_dataset(images_path: Path, labels_path: Path, num_classes: int) -> Dataset:
    """Read an image/label file pair into a Dataset with features in [0, 1]."""
    try:
        images = parse_idx(Path(images_path).read_bytes())
        labels = parse_idx(Path(labels_path).read_bytes())
    except OSError as e:
        raise DatasetSourceError(f"cannot read IDX files: {e}") from e
    if images.shape[0] != labels.shape[0]:
        raise DimensionError(f"{images.shape[0]} images but {labels.shape[0]} labels")
    features = images.reshape(images.shape[0], -1).astype(np.float64)
    if images.dtype == np.uint8:
        features /= 255.0
    return Dataset(features, labels.astype(np.int64), num_classes)


async def download_file(
    url: str,
    dest: Path,
    client: Optional[httpx.AsyncClient] = None,
    timeout: int = 60,
) -> Path:
    """
    Download url to dest unless it already exists.

    Args:
        url: File URL
        dest: Target path; parent directories are created
        client: Optional shared client
        timeout: Request timeout in seconds

    Returns:
        The destination path

    Raises:
        DatasetSourceError: If the request fails
    """
    dest = Path(dest)
    if dest.exists():
        return dest
    dest.parent.mkdir(parents=True, exist_ok=True)

    owns_client = client is None
    if owns_client:
        client = httpx.AsyncClient(timeout=httpx.Timeout(timeout), follow_redirects=True)
    try:
        logger.info(f"Downloading {url}")
        response = await client.get(url)
        response.raise_for_status()
        dest.write_bytes(response.content)
        return dest
    except httpx.TimeoutException:
        raise DatasetSourceError(f"Download timed out: {url}")
    except httpx.HTTPStatusError as e:
        raise DatasetSourceError(f"HTTP {e.response.status_code} for {url}")
    except httpx.HTTPError as e:
        raise DatasetSourceError(f"Download failed for {url}: {e}")
    finally:
        if owns_client:
            await client.aclose()


@dataclass
class IdxSource:
    """DatasetSource backed by IDX file pairs, one pair per distribution id."""

    images: Sequence[str]
    labels: Sequence[str]
    num_classes: int = 10
    data_dir: Path = Path("data")
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return self.pool(0).dim

    def _path(self, name: str) -> Path:
        path = Path(name)
        return path if path.is_absolute() else Path(self.data_dir) / path

    async def ensure_files(self, base_url: str) -> None:
        """Fetch any missing files from base_url concurrently."""
        names = [*self.images, *self.labels]
        async with httpx.AsyncClient(timeout=httpx.Timeout(60), follow_redirects=True) as client:
            await asyncio.gather(*[
                download_file(f"{base_url.rstrip('/')}/{name}", self._path(name), client)
                for name in names
            ])

    def pool(self, distribution: int) -> Dataset:
        if distribution >= len(self.images):
            raise DatasetSourceError(
                f"distribution {distribution} has no IDX files ({len(self.images)} configured)"
            )
        if distribution not in self._cache:
            self._cache[distribution] = load_idx_dataset(
                self._path(self.images[distribution]),
                self._path(self.labels[distribution]),
                self.num_classes,
            )
        return self._cache[distribution]

    def sample(self, distribution: int, n: int, rng: np.random.Generator) -> Dataset:
        pool = self.pool(distribution)
        if n > len(pool):
            raise DatasetSourceError(f"requested {n} rows, file holds {len(pool)}")
        return pool.subset(rng.choice(len(pool), size=n, replace=False))
