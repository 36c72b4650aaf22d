"""The paired value networks and their checkpoint format.

Both networks share one trunk design: a 1x1 lift to 8n channels, then
four grouped convolutions alternating window shapes (5,1) and (1,5)
with circular wrap-around and n groups, then a fully connected stage
reading the whole activation map.  The global network ends in a scalar
(predicted log10 proof size below the position); the local network ends
in an a x a grid (one prediction per candidate cut).
"""

from __future__ import annotations

import io
import struct

import numpy as np
import torch
import torch.nn as nn

from ..core import Position, Shape
from .encoder import encode_batch, feature_count

_MAGIC = b"SGPV"
_VERSION = 1


def _wrap_rows(x: torch.Tensor, pad: int) -> torch.Tensor:
    idx = torch.arange(-pad, x.shape[2] + pad, device=x.device) % x.shape[2]
    return x.index_select(2, idx)


def _wrap_cols(x: torch.Tensor, pad: int) -> torch.Tensor:
    idx = torch.arange(-pad, x.shape[3] + pad, device=x.device) % x.shape[3]
    return x.index_select(3, idx)


class ValueNet(nn.Module):
    """One value network over encoded positions.

    out_cells = 1 gives the global scalar network, out_cells = a*a the
    local per-cut network.
    """

    def __init__(self, shape: Shape, width_n: int, out_cells: int):
        super().__init__()
        self.shape = shape
        self.width_n = width_n
        self.out_cells = out_cells
        f = feature_count(shape)
        ch = 8 * width_n
        self.lift = nn.Conv2d(f, ch, 1)
        # index-mod wrap happens in forward, so padding stays 0 and any
        # a >= 2 is legal
        self.conv_a = nn.Conv2d(ch, ch, (5, 1), groups=width_n)
        self.conv_b = nn.Conv2d(ch, ch, (1, 5), groups=width_n)
        self.conv_c = nn.Conv2d(ch, ch, (5, 1), groups=width_n)
        self.conv_d = nn.Conv2d(ch, ch, (1, 5), groups=width_n)
        self.fc = nn.Linear(ch * shape.a * shape.a, 4 * width_n)
        self.out = nn.Linear(4 * width_n, out_cells)
        self.act = nn.ReLU()

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = self.act(self.lift(x))
        x = self.act(self.conv_a(_wrap_rows(x, 2)))
        x = self.act(self.conv_b(_wrap_cols(x, 2)))
        x = self.act(self.conv_c(_wrap_rows(x, 2)))
        x = self.act(self.conv_d(_wrap_cols(x, 2)))
        x = self.act(self.fc(x.flatten(1)))
        x = self.out(x)
        if self.out_cells == 1:
            return x.squeeze(1)
        return x.view(-1, self.shape.a, self.shape.a)


class PolicyModel:
    """The paired predictors: global (scalar) and local (per cut)."""

    def __init__(self, shape: Shape, width_n: int = 4):
        self.shape = shape
        self.width_n = width_n
        self.global_net = ValueNet(shape, width_n, 1)
        self.local_net = ValueNet(shape, width_n, shape.a * shape.a)

    def nets(self) -> dict[str, ValueNet]:
        return {"global": self.global_net, "local": self.local_net}

    @torch.no_grad()
    def predict_global(self, positions: list[Position]) -> np.ndarray:
        x = torch.from_numpy(encode_batch(positions))
        self.global_net.eval()
        return self.global_net(x).numpy()

    @torch.no_grad()
    def predict_local(self, positions: list[Position]) -> np.ndarray:
        x = torch.from_numpy(encode_batch(positions))
        self.local_net.eval()
        return self.local_net(x).numpy()


def save_checkpoint(path: str, model: PolicyModel) -> None:
    """Binary checkpoint: magic, version, a, b, n, then per network a layer
    table of (name, shape) followed by raw little-endian float32 data."""
    buf = io.BytesIO()
    buf.write(_MAGIC)
    buf.write(struct.pack("<IIII", _VERSION, model.shape.a, model.shape.b,
                          model.width_n))
    for name, net in model.nets().items():
        sd = net.state_dict()
        buf.write(struct.pack("<H", len(name)))
        buf.write(name.encode())
        buf.write(struct.pack("<I", len(sd)))
        for pname, tensor in sd.items():
            data = tensor.detach().cpu().numpy().astype("<f4")
            enc = pname.encode()
            buf.write(struct.pack("<H", len(enc)))
            buf.write(enc)
            buf.write(struct.pack("<B", data.ndim))
            buf.write(struct.pack(f"<{data.ndim}I", *data.shape))
            buf.write(data.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path: str) -> PolicyModel:
    with open(path, "rb") as fh:
        raw = fh.read()
    buf = io.BytesIO(raw)
    if buf.read(4) != _MAGIC:
        raise ValueError("not a model checkpoint")
    version, a, b, n = struct.unpack("<IIII", buf.read(16))
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    model = PolicyModel(Shape(a, b), width_n=n)
    for _ in range(2):
        (nlen,) = struct.unpack("<H", buf.read(2))
        net_name = buf.read(nlen).decode()
        (count,) = struct.unpack("<I", buf.read(4))
        net = model.nets()[net_name]
        state = {}
        for _ in range(count):
            (plen,) = struct.unpack("<H", buf.read(2))
            pname = buf.read(plen).decode()
            (ndim,) = struct.unpack("<B", buf.read(1))
            shape = struct.unpack(f"<{ndim}I", buf.read(4 * ndim))
            numel = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(buf.read(4 * numel), dtype="<f4").reshape(shape)
            state[pname] = torch.from_numpy(data.copy())
        net.load_state_dict(state)
    return model
