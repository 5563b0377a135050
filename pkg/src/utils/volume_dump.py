"""
Volume Dump - Writes and reads extrapolation volumes with their weights
Text header (keyword lines) followed by flat little-endian sample, status and weight data
"""
import logging
from pathlib import Path
from typing import List, Tuple

import numpy as np

from ..core.errors import DumpFormatError
from ..core.extrapolation_volume import ExtrapolationVolume, LayerSource, WeightVolume

logger = logging.getLogger(__name__)

DATA_MARKER = b'DATA\n'


def dump_volume(vol: ExtrapolationVolume, weights: WeightVolume, path: str) -> str:
    """
    Store a volume and its weights.

    The header holds DIMS, ORIGIN, NPREV, FACTORS and one `LAYER p t dx dy` line per
    layer (t = -1 for layers outside the sequence). After the DATA line follow the
    samples (<f8), the status (u1) and the weights (<f8), each in C order of [m, n, p].

    Args:
        vol: Extrapolation volume
        weights: Matching weight volume
        path: Output file path

    Returns:
        Path written
    """
    if weights.weights.shape != vol.samples.shape:
        raise DumpFormatError("weights do not match the volume")
    output_path = Path(path)
    output_path.parent.mkdir(parents=True, exist_ok=True)

    lines = [
        "# extrapolation volume",
        "DIMS {} {} {}".format(*vol.dims),
        "ORIGIN {} {}".format(*vol.origin),
        f"NPREV {vol.n_prev}",
        "FACTORS " + " ".join(repr(float(f)) for f in weights.layer_factors),
    ]
    for layer in vol.layers:
        frame = -1 if layer.frame is None else layer.frame
        lines.append(f"LAYER {layer.p} {frame} {layer.shift[0]} {layer.shift[1]}")

    with open(output_path, 'wb') as f:
        f.write(("\n".join(lines) + "\n").encode('ascii'))
        f.write(DATA_MARKER)
        f.write(vol.samples.astype('<f8').tobytes())
        f.write(vol.status.astype('u1').tobytes())
        f.write(weights.weights.astype('<f8').tobytes())

    logger.debug("Dumped volume %s to %s", vol.dims, output_path.name)
    return str(output_path)


def load_volume_dump(path: str) -> Tuple[ExtrapolationVolume, WeightVolume]:
    """
    Read a dump written by dump_volume.

    Raises:
        DumpFormatError: for a missing or inconsistent header or truncated data
    """
    raw = Path(path).read_bytes()
    split = raw.find(DATA_MARKER)
    if split < 0:
        raise DumpFormatError(f"{path}: no DATA section")

    dims = origin = None
    n_prev = None
    factors: Tuple[float, ...] = ()
    layers: List[LayerSource] = []

    for line in raw[:split].decode('ascii').splitlines():
        line = line.strip()
        if not line or line.startswith('#'):
            continue
        keyword, *values = line.split()
        try:
            if keyword == 'DIMS':
                dims = tuple(int(v) for v in values)
            elif keyword == 'ORIGIN':
                origin = (int(values[0]), int(values[1]))
            elif keyword == 'NPREV':
                n_prev = int(values[0])
            elif keyword == 'FACTORS':
                factors = tuple(float(v) for v in values)
            elif keyword == 'LAYER':
                p, frame, dx, dy = (int(v) for v in values)
                layers.append(LayerSource(p=p, frame=None if frame < 0 else frame, shift=(dx, dy)))
            else:
                raise DumpFormatError(f"{path}: unknown header line '{line}'")
        except (ValueError, IndexError):
            raise DumpFormatError(f"{path}: malformed header line '{line}'")

    if dims is None or len(dims) != 3 or origin is None or n_prev is None:
        raise DumpFormatError(f"{path}: incomplete header")
    if len(layers) != dims[2]:
        raise DumpFormatError(f"{path}: expected {dims[2]} LAYER lines, got {len(layers)}")

    count = int(np.prod(dims))
    data = raw[split + len(DATA_MARKER):]
    if len(data) != count * 17:
        raise DumpFormatError(f"{path}: expected {count * 17} data bytes, got {len(data)}")

    samples = np.frombuffer(data, dtype='<f8', count=count).reshape(dims).astype(np.float64)
    status = np.frombuffer(data, dtype='u1', count=count, offset=count * 8).reshape(dims).copy()
    weights = np.frombuffer(data, dtype='<f8', count=count, offset=count * 9).reshape(dims).astype(np.float64)

    vol = ExtrapolationVolume(samples=samples, status=status, origin=origin, layers=layers, n_prev=n_prev)
    return vol, WeightVolume(weights=weights, layer_factors=factors)
