#!/usr/bin/env python3
"""Convert a torchvision ResNet-family state dict into a patchae tensor file.

The output holds the backbone tensors under their torchvision names (fc.* and
num_batches_tracked are dropped). Point encoder.pretrained_weights at it.

    python3 export_torchvision_backbone.py --arch wide_resnet101_2 --out wrn101.pae
    python3 export_torchvision_backbone.py --state-dict local.pth --out wrn101.pae
"""

import argparse
import struct
import sys

import numpy as np

MAGIC = b"PAE-CKPT"
VERSION = 1


def write_tensor_file(path, tensors, config_hash=0, config_text=""):
    """tensors: iterable of (name, numpy array)."""
    text = config_text.encode("utf-8")
    tensors = list(tensors)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IQI", VERSION, config_hash, len(text)))
        f.write(text)
        f.write(struct.pack("<I", len(tensors)))
        for name, arr in tensors:
            arr = np.ascontiguousarray(np.asarray(arr, dtype="<f4"))
            raw = name.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<I", arr.ndim))
            f.write(struct.pack("<%dq" % arr.ndim, *arr.shape))
            f.write(arr.tobytes())


def read_tensor_file(path):
    """Returns (config_hash, config_text, [(name, numpy array), ...])."""
    with open(path, "rb") as f:
        data = f.read()
    if data[:8] != MAGIC:
        raise ValueError("bad magic number in %s" % path)
    version, config_hash, text_len = struct.unpack_from("<IQI", data, 8)
    if version != VERSION:
        raise ValueError("unsupported version %d" % version)
    off = 24
    text = data[off:off + text_len].decode("utf-8")
    off += text_len
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    tensors = []
    for _ in range(count):
        (k,) = struct.unpack_from("<I", data, off)
        off += 4
        name = data[off:off + k].decode("utf-8")
        off += k
        (rank,) = struct.unpack_from("<I", data, off)
        off += 4
        dims = struct.unpack_from("<%dq" % rank, data, off)
        off += 8 * rank
        n = int(np.prod(dims)) if rank else 1
        arr = np.frombuffer(data, dtype="<f4", count=n, offset=off).reshape(dims).copy()
        off += 4 * n
        tensors.append((name, arr))
    if off != len(data):
        raise ValueError("trailing bytes in %s" % path)
    return config_hash, text, tensors


def backbone_tensors(state_dict):
    for name, value in state_dict.items():
        if name.startswith("fc.") or name.endswith("num_batches_tracked"):
            continue
        yield name, value.detach().cpu().numpy()


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--arch", default="wide_resnet101_2",
                    help="torchvision constructor name (wide_resnet101_2, wide_resnet50_2, resnet50)")
    ap.add_argument("--state-dict", help="load this .pth instead of downloading the default weights")
    ap.add_argument("--out", required=True)
    args = ap.parse_args(argv)

    import torch
    import torchvision

    if args.state_dict:
        state = torch.load(args.state_dict, map_location="cpu")
        if "state_dict" in state:
            state = state["state_dict"]
    else:
        model = getattr(torchvision.models, args.arch)(weights="DEFAULT")
        state = model.state_dict()
    tensors = list(backbone_tensors(state))
    write_tensor_file(args.out, tensors)
    print("wrote %d tensors to %s" % (len(tensors), args.out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
