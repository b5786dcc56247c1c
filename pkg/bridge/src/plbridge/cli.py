"""Bridge CLI: `embed` texts into a PLEMB file, `finetune` an encoder on a
pair CSV."""

from __future__ import annotations

import argparse
import sys

from .embed import embed_file
from .encoders import load_encoder
from .train import TrainSpec, finetune


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="partyline-bridge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="embed tweet JSONL or plain text lines")
    p.add_argument("--model", default="null-64")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("finetune", help="contrastive fine-tuning on a pair CSV")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="null-64")
    p.add_argument("--epochs", type=int, default=2)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--warmup", type=int, default=1000)
    p.add_argument("--lr", type=float, default=2e-5)
    p.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "embed":
            count = embed_file(args.in_path, load_encoder(args.model), args.out)
            print(f"embedded {count} texts to {args.out}")
        else:
            spec = TrainSpec(
                base_model=args.model,
                epochs=args.epochs,
                batch_size=args.batch,
                warmup_steps=args.warmup,
                learning_rate=args.lr,
                seed=args.seed,
            )
            log = finetune(args.pairs, args.out, spec)
            losses = ", ".join(f"{e['train_loss']:.5f}" for e in log["epochs"])
            print(f"saved model to {args.out} (epoch losses: {losses})")
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
