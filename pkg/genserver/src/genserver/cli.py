"""genserver CLI: serve a model, build the tiny test model, fine-tune.

Environment defaults: GENSERVER_MODEL (tag or checkpoint path),
GENSERVER_DEVICE (cpu), GENSERVER_PORT (8041).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genserver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="serve /generate and /health")
    p.add_argument("--model", default=os.environ.get("GENSERVER_MODEL", "gpt2"),
                   help="hub tag or checkpoint directory")
    p.add_argument("--device", default=os.environ.get("GENSERVER_DEVICE", "cpu"))
    p.add_argument("--port", type=int, default=int(os.environ.get("GENSERVER_PORT", "8041")))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--queue-depth", type=int, default=8)
    p.add_argument("--request-timeout", type=float, default=600.0)

    p = sub.add_parser("make-tiny-model", help="write a tiny offline checkpoint for tests")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("finetune", help="adapt a base model to a document collection")
    p.add_argument("--corpus-dir", required=True,
                   help="directory of plain-text documents, one file per document")
    p.add_argument("--base-model", default=os.environ.get("GENSERVER_MODEL", "gpt2"))
    p.add_argument("--out", required=True)
    p.add_argument("--sample-budget", type=int, default=250000)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--learning-rate", type=float, default=5e-4)
    p.add_argument("--block-size", type=int, default=128)
    p.add_argument("--device", default=os.environ.get("GENSERVER_DEVICE", "cpu"))

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s %(message)s")
    args = build_parser().parse_args(argv)

    if args.command == "make-tiny-model":
        from .tiny import make_tiny_model

        out = make_tiny_model(args.out, seed=args.seed)
        print(f"tiny model written: {out}")
        return 0

    if args.command == "finetune":
        from .finetune import finetune

        result = finetune(
            corpus_dir=args.corpus_dir,
            base_model=args.base_model,
            out_dir=args.out,
            sample_budget=args.sample_budget,
            batch_size=args.batch_size,
            learning_rate=args.learning_rate,
            block_size=args.block_size,
            device=args.device,
        )
        print(
            f"checkpoint written: {result.checkpoint_dir} "
            f"({result.samples_processed} samples processed)"
        )
        return 0

    # serve
    import uvicorn

    from .app import create_app
    from .model import ModelRuntime

    runtime = ModelRuntime(
        args.model,
        device=args.device,
        queue_depth=args.queue_depth,
        request_timeout_s=args.request_timeout,
    )
    runtime.load_in_background()
    uvicorn.run(create_app(runtime), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
