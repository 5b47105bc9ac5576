from __future__ import annotations

import sys

from dotenv import load_dotenv

from corrconv.cli import main


if __name__ == "__main__":
    load_dotenv()
    try:
        sys.exit(main(sys.argv[1:]))
    except KeyboardInterrupt:
        print("\n[exit] interrupted by user (Ctrl+C).", file=sys.stderr)
        sys.exit(130)
