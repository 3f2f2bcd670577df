"""Command-line surface: compress, decompress, verify, bench, info, serve.

Exit codes: 0 success, 1 validation/corruption failure, 2 usage error.
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import codec, images
from .codec import CompressedStream, Scheme
from .errors import LoclcError
from .model import LocalModel, load_weights

SCHEME_NAMES = {"seq": "sequential", "par": "parallel", "shear": "sheared"}


def _threads(value):
    """Resolve a --threads value; 0 means auto, env LOCLC_THREADS is the
    fallback when the flag is absent."""
    if value is None:
        value = int(os.environ.get("LOCLC_THREADS", "0"))
    if value == 0:
        return max(1, os.cpu_count() or 1)
    return max(1, value)


def _load_model(path):
    return LocalModel.load(path)


def _read_image(args):
    return images.read_image(args.input, width=args.width, height=args.height,
                             channels=args.channels)


def cmd_compress(args):
    model = _load_model(args.model)
    image = _read_image(args)
    stream = codec.encode(image, model, threads=_threads(args.threads))
    with open(args.output, "wb") as f:
        f.write(stream.serialize())
    print(f"{args.input}: {image.size} subpixels -> {len(stream.payload)} payload "
          f"bytes ({stream.bpd:.4f} bpd)")
    return 0


def cmd_decompress(args):
    model = _load_model(args.model)
    with open(args.input, "rb") as f:
        stream = CompressedStream.parse(f.read())
    scheme = Scheme.parse(args.scheme)
    image = codec.decode(stream, model, scheme, threads=_threads(args.threads))
    images.write_image(args.output, image)
    print(f"{args.input}: decoded {image.shape[0]}x{image.shape[1]}x{image.shape[2]} "
          f"via {scheme.value}")
    return 0


def cmd_verify(args):
    model = _load_model(args.model)
    image = images.read_image(args.image)
    threads = _threads(args.threads)
    stream = codec.encode(image, model, threads=threads)
    rt = codec.encode(image, model, threads=1)
    if rt.serialize() != stream.serialize():
        print("encode bytes differ across worker counts", file=sys.stderr)
        return 1
    ok = 0
    for scheme in Scheme:
        decoded = codec.decode(stream, model, scheme, threads=threads)
        if np.array_equal(decoded, image):
            ok += 1
        else:
            print(f"{scheme.value}: pixel mismatch", file=sys.stderr)
    print(f"{ok}/3 schemes identical")
    return 0 if ok == 3 else 1


def _bench_rows(args):
    model = _load_model(args.model)
    threads = _threads(args.threads)
    schemes = [Scheme.parse(s) for s in args.schemes.split(",")]
    rows = []
    for path in args.image:
        image = images.read_image(path)
        base = None
        for scheme in schemes:
            rec = codec.measure(model, image, scheme, repeats=args.repeats,
                                threads=threads)
            rec["image"] = str(path)
            if scheme is Scheme.SEQUENTIAL:
                base = rec["wall_seconds"]
            rec["speedup"] = (base / rec["wall_seconds"]) if base else float("nan")
            rows.append(rec)
    return rows


_BENCH_COLUMNS = ["image", "scheme", "wall_seconds", "rounds", "bits", "bpd",
                  "speedup"]


def cmd_bench(args):
    rows = _bench_rows(args)
    if args.format == "json":
        print(json.dumps([{k: r[k] for k in _BENCH_COLUMNS} for r in rows],
                         indent=2))
    elif args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_BENCH_COLUMNS, extrasaction="ignore")
        w.writeheader()
        w.writerows(rows)
        print(buf.getvalue(), end="")
    else:
        fmt = "{:<24} {:<12} {:>12} {:>8} {:>10} {:>8} {:>8}"
        print(fmt.format("image", "scheme", "seconds", "rounds", "bits", "bpd",
                         "speedup"))
        for r in rows:
            print(fmt.format(os.path.basename(r["image"]), r["scheme"],
                             f"{r['wall_seconds']:.4f}", r["rounds"], r["bits"],
                             f"{r['bpd']:.3f}", f"{r['speedup']:.2f}x"))
    return 0


def cmd_info(args):
    with open(args.file, "rb") as f:
        data = f.read()
    if data[:4] == b"NLWT":
        config, weights = load_weights(data)
        model = LocalModel(config, weights)
        print(f"weight file: h={config.h} channels={config.channels} "
              f"hidden={config.hidden} resblocks={config.n_resblocks} "
              f"mixtures={config.n_mixtures} sheared={weights.sheared}")
        print(f"hash: {model.hash:016x}")
        return 0
    stream = CompressedStream.parse(data)
    print(f"magic: NLLC v{codec.STREAM_VERSION}")
    print(f"size: {stream.height}x{stream.width}x{stream.channels}")
    print(f"horizon: {stream.horizon}")
    print(f"model hash: {stream.model_hash:016x}")
    print(f"payload: {len(stream.payload)} bytes ({stream.bits} bits, "
          f"{stream.bpd:.4f} bpd)")
    return 0


def cmd_serve(args):
    import uvicorn

    from .service import create_app

    app = create_app({os.path.splitext(os.path.basename(p))[0]: _load_model(p)
                      for p in args.model})
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="loclc",
                                description="local lossless image codec")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress a PGM/PPM or raw image")
    c.add_argument("input")
    c.add_argument("output")
    c.add_argument("--model", required=True)
    c.add_argument("--threads", type=int, default=None)
    c.add_argument("--width", type=int, help="raw input width")
    c.add_argument("--height", type=int, help="raw input height")
    c.add_argument("--channels", type=int, default=1, help="raw input channels")
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="decompress a stream")
    d.add_argument("input")
    d.add_argument("output")
    d.add_argument("--model", required=True)
    d.add_argument("--scheme", default="shear",
                   choices=sorted(SCHEME_NAMES) + sorted(SCHEME_NAMES.values()))
    d.add_argument("--threads", type=int, default=None)
    d.set_defaults(func=cmd_decompress)

    v = sub.add_parser("verify", help="round-trip one image through all schemes")
    v.add_argument("--model", required=True)
    v.add_argument("--image", required=True)
    v.add_argument("--threads", type=int, default=None)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="timing/BPD comparison across schemes")
    b.add_argument("--model", required=True)
    b.add_argument("--image", nargs="+", required=True)
    b.add_argument("--schemes", default="seq,par,shear")
    b.add_argument("--repeats", type=int, default=3)
    b.add_argument("--format", default="table", choices=["table", "json", "csv"])
    b.add_argument("--threads", type=int, default=None)
    b.set_defaults(func=cmd_bench)

    i = sub.add_parser("info", help="print stream or weight-file header fields")
    i.add_argument("file")
    i.set_defaults(func=cmd_info)

    s = sub.add_parser("serve", help="run the HTTP compression service")
    s.add_argument("--model", nargs="+", required=True)
    s.add_argument("--host", default="127.0.0.1")
    s.add_argument("--port", type=int, default=8000)
    s.set_defaults(func=cmd_serve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LoclcError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
