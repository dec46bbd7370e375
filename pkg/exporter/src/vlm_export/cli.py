"""CLI: capture attention tensors for one image/prompt pair.

    vlm-export export --image photo.png --prompt "what is the red sign?" \
        --model tiny-random --vision-layer 8 --llm-block 2 --out bundle/
"""

from __future__ import annotations

import argparse
import sys

from .capture import CaptureConfig, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vlm-export", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="capture tensors and write a bundle")
    p.add_argument("--image", required=True)
    p.add_argument("--prompt", required=True, help="user instruction text")
    p.add_argument("--model", default="tiny-random",
                   help="model id; 'tiny-random[:seed]' is built in")
    p.add_argument("--vision-layer", type=int, default=8,
                   help="0-based encoder block to capture CLS attention from")
    p.add_argument("--llm-block", type=int, default=2,
                   help="1-based decoder block for instruction attention")
    p.add_argument("--max-tiles", type=int, default=12)
    p.add_argument("--tile-px", type=int, default=64)
    p.add_argument("--include-system-prompt", action="store_true",
                   help="count system-prompt tokens into the instruction set")
    p.add_argument("--system-prompt", default=CaptureConfig.system_prompt)
    p.add_argument("--out", required=True, help="bundle output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    config = CaptureConfig(
        model_id=args.model,
        vision_layer=args.vision_layer,
        llm_block=args.llm_block,
        include_system_prompt=args.include_system_prompt,
        system_prompt=args.system_prompt,
        max_tiles=args.max_tiles,
        tile_px=args.tile_px,
    )
    try:
        out = export(args.image, args.prompt, config, args.out)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote bundle to {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
